//! Ridders' extrapolated central differences for matrix-valued functions.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::Result;

const SHRINK: f64 = 1.4;
const TABLEAU: usize = 10;
const SAFE: f64 = 2.0;

fn max_abs(m: &DMatrix<Complex64>) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Derivative of `f` at `x` starting from step `h0`, with an error estimate.
pub fn ridders<F>(f: F, x: f64, h0: f64) -> Result<(DMatrix<Complex64>, f64)>
where
    F: Fn(f64) -> Result<DMatrix<Complex64>>,
{
    let central = |h: f64| -> Result<DMatrix<Complex64>> {
        Ok((f(x + h)? - f(x - h)?) / Complex64::new(2.0 * h, 0.0))
    };
    let mut h = h0;
    let mut table: Vec<Vec<DMatrix<Complex64>>> = vec![vec![central(h)?]];
    let mut best = table[0][0].clone();
    let mut err = f64::INFINITY;
    for i in 1..TABLEAU {
        h /= SHRINK;
        let mut row = vec![central(h)?];
        let mut fac = SHRINK * SHRINK;
        for j in 1..=i {
            let next = (&row[j - 1] * Complex64::new(fac, 0.0) - &table[i - 1][j - 1]) / Complex64::new(fac - 1.0, 0.0);
            fac *= SHRINK * SHRINK;
            let e = max_abs(&(&next - &row[j - 1])).max(max_abs(&(&next - &table[i - 1][j - 1])));
            if e <= err {
                err = e;
                best = next.clone();
            }
            row.push(next);
        }
        let drift = max_abs(&(&row[i] - &table[i - 1][i - 1]));
        table.push(row);
        if drift >= SAFE * err {
            break;
        }
    }
    Ok((best, err))
}

/// Scalar convenience wrapper around [`ridders`].
pub fn ridders_scalar<F>(f: F, x: f64, h0: f64) -> Result<(Complex64, f64)>
where
    F: Fn(f64) -> Result<Complex64>,
{
    let (d, e) = ridders(|t| Ok(DMatrix::from_element(1, 1, f(t)?)), x, h0)?;
    Ok((d[(0, 0)], e))
}
