//! Coupled-channel S-matrix from a sampled potential.
//!
//! The table must sit on a geometric grid. With `r = e^x` and
//! `psi = e^{x/2} u` the radial equation becomes `u'' = Q(x) u`,
//! `Q = e^{2x} (V - k^2) + 1/4`, which has bounded coefficients even for
//! `1/r^2` singularities at the origin. It is integrated with Johnson's
//! renormalized Numerov recurrence and matched to the free Jost solutions
//! `f_l(kr) ~ e^{ikr}` at the last two samples, so the phase of `S` carries no
//! `i^l` factors: `psi ~ conj(f_l) - f_l S`.

use nalgebra::{DMatrix, Matrix2};
use num_complex::Complex64;

use super::SMatrixValue;
use crate::error::{Error, Result};
use crate::transform::PotentialTable;

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Largest short-range remainder accepted at the matching radius.
pub const TAIL_TOLERANCE: f64 = 1e-6;

/// Free Jost solution `f_l(z) = e^{iz} sum_j (l+j)!/(j!(l-j)!) (i/2z)^j`.
pub fn free_jost(l: u32, z: f64) -> Complex64 {
    let mut sum = Complex64::new(0.0, 0.0);
    let mut coeff = 1.0;
    let x = I / (2.0 * z);
    let mut pow = Complex64::new(1.0, 0.0);
    for j in 0..=l {
        if j > 0 {
            // (l+j)! / (j! (l-j)!) from the previous term
            coeff *= ((l + j) * (l - j + 1)) as f64 / j as f64;
            pow *= x;
        }
        sum += pow * coeff;
    }
    sum * Complex64::from_polar(1.0, z)
}

fn geometric_step(grid: &[f64]) -> Result<f64> {
    if grid.len() < 3 {
        return Err(Error::Argument("table needs at least 3 samples".into()));
    }
    let h = (grid[1] / grid[0]).ln();
    for w in grid.windows(2) {
        let hi = (w[1] / w[0]).ln();
        if (hi - h).abs() > 1e-8 * h {
            return Err(Error::Argument("numerical S-matrix needs a log-spaced grid".into()));
        }
    }
    Ok(h)
}

/// Angular momenta read off the last sample, where each diagonal entry
/// should have reduced to its centrifugal barrier `l (l + 1) / r^2`.
pub fn asymptotic_angular_momenta(table: &PotentialTable) -> Result<Vec<u32>> {
    let last = table.len().checked_sub(1).ok_or_else(|| Error::Argument("empty table".into()))?;
    let r = table.grid[last];
    (0..table.channels)
        .map(|i| {
            let c = table.value(last, i, i) * r * r;
            let l = (0.5 * ((1.0 + 4.0 * c).max(0.0).sqrt() - 1.0)).round();
            if (c - l * (l + 1.0)).abs() > TAIL_TOLERANCE * r * r {
                return Err(Error::Matching(format!(
                    "channel {} has r^2 V = {c} at r = {r}, not a centrifugal barrier",
                    i + 1
                )));
            }
            Ok(l as u32)
        })
        .collect()
}

/// S-matrix of any channel count; `l` gives the centrifugal barrier that
/// remains in each channel at large `r`.
pub fn numerical_smatrix_matrix(table: &PotentialTable, k: f64, l: &[u32]) -> Result<DMatrix<Complex64>> {
    let n = table.channels;
    if l.len() != n {
        return Err(Error::Argument(format!("{} angular momenta for {n} channels", l.len())));
    }
    if !(k > 0.0) || !k.is_finite() {
        return Err(Error::Argument(format!("wavenumber must be positive, got {k}")));
    }
    let h = geometric_step(&table.grid)?;
    if let Some(idx) = table.poles.iter().position(|&p| p) {
        return Err(Error::Integration(format!("table has a flagged sample at r = {}", table.grid[idx])));
    }
    let last = table.len() - 1;
    let r_max = table.grid[last];
    let tail = (0..n)
        .flat_map(|i| (0..n).map(move |j| (i, j)))
        .map(|(i, j)| {
            let barrier = if i == j { (l[i] * (l[i] + 1)) as f64 / (r_max * r_max) } else { 0.0 };
            (table.value(last, i, j) - barrier).abs()
        })
        .fold(0.0, f64::max);
    if tail > TAIL_TOLERANCE {
        return Err(Error::Matching(format!("potential tail {tail:e} at r = {r_max} has not decayed")));
    }

    let eye = DMatrix::<f64>::identity(n, n);
    let q = |idx: usize| -> DMatrix<f64> {
        let r = table.grid[idx];
        (table.matrix(idx) - &eye * (k * k)) * (r * r) + &eye * 0.25
    };
    let w = |q: &DMatrix<f64>| -> DMatrix<f64> { &eye - q * (h * h / 12.0) };
    let invert = |m: DMatrix<f64>, r: f64| -> Result<DMatrix<f64>> {
        m.try_inverse().ok_or_else(|| Error::Integration(format!("singular Numerov step at r = {r}")))
    };

    // Near the origin Q is nearly constant; start on its growing exponentials.
    let q0 = q(0);
    let eig = q0.clone().symmetric_eigen();
    if eig.eigenvalues.iter().any(|&e| e <= 0.0) {
        return Err(Error::Integration(format!(
            "r_min = {} is outside the power-law region; lower it",
            table.grid[0]
        )));
    }
    let growth = DMatrix::from_diagonal(&eig.eigenvalues.map(|e| (e.sqrt() * h).exp()));
    let ratio = &eig.eigenvectors * growth * eig.eigenvectors.transpose();
    let mut w_prev = w(&q0);
    let mut w_cur = w(&q(1));
    let mut r_mat = &w_cur * ratio * invert(w_prev.clone(), table.grid[0])?;
    for idx in 1..last {
        let inv_w = invert(w_cur.clone(), table.grid[idx])?;
        let u = inv_w * 12.0 - &eye * 10.0;
        r_mat = u - invert(r_mat, table.grid[idx])?;
        if r_mat.iter().any(|v| !v.is_finite()) {
            return Err(Error::Integration(format!("recurrence overflow at r = {}", table.grid[idx])));
        }
        w_prev = w_cur;
        w_cur = w(&q(idx + 1));
    }
    let k_u = invert(w_cur, r_max)? * r_mat * w_prev;
    let k_psi = (k_u * (0.5 * h).exp()).map(|v| Complex64::new(v, 0.0));

    let (ra, rb) = (table.grid[last - 1], r_max);
    let hank = |r: f64, sign: f64| {
        DMatrix::from_fn(n, n, |i, j| {
            if i != j {
                return Complex64::new(0.0, 0.0);
            }
            let hp = free_jost(l[i], k * r);
            if sign > 0.0 {
                hp
            } else {
                hp.conj()
            }
        })
    };
    let lhs = hank(rb, 1.0) - &k_psi * hank(ra, 1.0);
    let rhs = hank(rb, -1.0) - &k_psi * hank(ra, -1.0);
    let lhs_inv = lhs.try_inverse().ok_or_else(|| Error::Matching("matching system is singular".into()))?;
    Ok(lhs_inv * rhs)
}

/// Two-channel S-matrix with eigenphases and mixing.
pub fn numerical_smatrix(table: &PotentialTable, k: f64, l: &[u32]) -> Result<SMatrixValue> {
    if table.channels != 2 {
        return Err(Error::Argument(format!("expected a 2x2 table, got {0}x{0}", table.channels)));
    }
    let s = numerical_smatrix_matrix(table, k, l)?;
    Ok(SMatrixValue::from_matrix(k, Matrix2::new(s[(0, 0)], s[(0, 1)], s[(1, 0)], s[(1, 1)])))
}
