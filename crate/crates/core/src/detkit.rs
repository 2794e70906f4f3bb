//! Dense determinant kernel and the bordered-minor identities used to
//! collapse chains of transformations into single determinants.
//!
//! Indices in this module are zero-based. A bordered ("embordering")
//! minor of `A` with respect to its leading `p x p` block takes that block,
//! appends row `row` and column `col` (both `>= p`), and puts `A[row, col]`
//! in the corner.

use nalgebra::DMatrix;
use num_bigint::BigInt;
use num_complex::Complex64;
use num_traits::{One, Zero};

use crate::error::{Error, Result};

/// Relative threshold below which a determinant is reported as ill-conditioned.
pub const ILL_CONDITIONED: f64 = 1e-12;

/// Square complex matrix with finite entries.
#[derive(Debug, Clone, PartialEq)]
pub struct SquareMatrix(DMatrix<Complex64>);

impl SquareMatrix {
    pub fn new(m: DMatrix<Complex64>) -> Result<Self> {
        if m.nrows() == 0 || m.nrows() != m.ncols() {
            return Err(Error::Argument(format!(
                "expected a non-empty square matrix, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::Argument("matrix has non-finite entries".into()));
        }
        Ok(Self(m))
    }

    pub fn from_real_rows(rows: &[&[f64]]) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::Argument("rows must all have length equal to the row count".into()));
        }
        Self::new(DMatrix::from_fn(n, n, |i, j| Complex64::new(rows[i][j], 0.0)))
    }

    pub fn identity(dim: usize) -> Self {
        Self(DMatrix::identity(dim, dim))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.0[(i, j)]
    }

    pub fn as_matrix(&self) -> &DMatrix<Complex64> {
        &self.0
    }

    pub fn into_inner(self) -> DMatrix<Complex64> {
        self.0
    }
}

/// Determinant in log-magnitude / phase form.
///
/// `ln_abs` is `-inf` for an exactly singular matrix; `phase` is then 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogDet {
    pub ln_abs: f64,
    pub phase: Complex64,
    /// `|det| < 1e-12 * prod(row 2-norms)`.
    pub ill_conditioned: bool,
}

impl LogDet {
    pub fn is_zero(&self) -> bool {
        self.ln_abs == f64::NEG_INFINITY
    }

    pub fn value(&self) -> Complex64 {
        if self.is_zero() {
            Complex64::zero()
        } else {
            self.phase * self.ln_abs.exp()
        }
    }

    /// `self / other`, formed without evaluating either determinant directly.
    pub fn ratio(&self, other: &LogDet) -> Complex64 {
        if self.is_zero() {
            return Complex64::zero();
        }
        if other.is_zero() {
            return Complex64::new(f64::INFINITY, 0.0);
        }
        self.phase / other.phase * (self.ln_abs - other.ln_abs).exp()
    }
}

/// Determinant of `m`. Exactly singular input returns 0.
pub fn determinant(m: &SquareMatrix) -> Complex64 {
    log_determinant(m.as_matrix()).value()
}

/// Pivoted LU with row and column equilibration, returning the determinant
/// in log form. Accepts any square `DMatrix`; non-finite entries propagate.
pub fn log_determinant(m: &DMatrix<Complex64>) -> LogDet {
    let n = m.nrows();
    assert_eq!(n, m.ncols(), "log_determinant needs a square matrix");
    if n == 0 {
        return LogDet { ln_abs: 0.0, phase: Complex64::one(), ill_conditioned: false };
    }
    let singular = LogDet { ln_abs: f64::NEG_INFINITY, phase: Complex64::one(), ill_conditioned: true };

    let mut a = m.clone();
    let mut ln_scale = 0.0;
    let mut ln_row_norms = 0.0;
    for i in 0..n {
        let row_max = (0..n).map(|j| a[(i, j)].norm()).fold(0.0, f64::max);
        if row_max == 0.0 {
            return singular;
        }
        let norm2 = (0..n).map(|j| (a[(i, j)] / row_max).norm_sqr()).sum::<f64>().sqrt() * row_max;
        ln_row_norms += norm2.ln();
        ln_scale += row_max.ln();
        for j in 0..n {
            a[(i, j)] /= row_max;
        }
    }
    for j in 0..n {
        let col_max = (0..n).map(|i| a[(i, j)].norm()).fold(0.0, f64::max);
        if col_max == 0.0 {
            return singular;
        }
        ln_scale += col_max.ln();
        for i in 0..n {
            a[(i, j)] /= col_max;
        }
    }

    let mut ln_abs = ln_scale;
    let mut phase = Complex64::one();
    for k in 0..n {
        let (piv, piv_abs) = (k..n)
            .map(|i| (i, a[(i, k)].norm()))
            .fold((k, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
        if piv_abs == 0.0 {
            return singular;
        }
        if piv != k {
            a.swap_rows(piv, k);
            phase = -phase;
        }
        let p = a[(k, k)];
        ln_abs += piv_abs.ln();
        phase *= p / piv_abs;
        for i in k + 1..n {
            let f = a[(i, k)] / p;
            if f == Complex64::zero() {
                continue;
            }
            for j in k + 1..n {
                let t = a[(k, j)];
                a[(i, j)] -= f * t;
            }
        }
    }
    let phase = phase / phase.norm();
    LogDet { ln_abs, phase, ill_conditioned: ln_abs < ILL_CONDITIONED.ln() + ln_row_norms }
}

fn check_border(dim: usize, p: usize, row: usize, col: usize) -> Result<()> {
    if p == 0 || p >= dim {
        return Err(Error::Argument(format!("block size p = {p} must satisfy 1 <= p < {dim}")));
    }
    if row < p || row >= dim || col < p || col >= dim {
        return Err(Error::Argument(format!(
            "border row {row} / column {col} must lie in [{p}, {dim})"
        )));
    }
    Ok(())
}

fn bordered<T: Clone>(get: impl Fn(usize, usize) -> T, p: usize, row: usize, col: usize) -> Vec<Vec<T>> {
    let ri = |i: usize| if i < p { i } else { row };
    let ci = |j: usize| if j < p { j } else { col };
    (0..=p).map(|i| (0..=p).map(|j| get(ri(i), ci(j))).collect()).collect()
}

fn to_dmatrix(rows: Vec<Vec<Complex64>>) -> DMatrix<Complex64> {
    let n = rows.len();
    DMatrix::from_fn(n, rows.first().map_or(0, Vec::len), |i, j| rows[i][j])
}

/// Determinant of the leading `p x p` block bordered by `row` and `col`.
pub fn embordering_minor(a: &SquareMatrix, p: usize, row: usize, col: usize) -> Result<Complex64> {
    check_border(a.dim(), p, row, col)?;
    let m = to_dmatrix(bordered(|i, j| a.get(i, j), p, row, col));
    Ok(log_determinant(&m).value())
}

/// Both sides of `|M| = |a|^(q-1) |A|`, where `M` collects all bordered
/// minors of the leading `p x p` block `a` and `q = dim - p`.
pub fn sylvester_check(a: &SquareMatrix, p: usize) -> Result<(Complex64, Complex64)> {
    let n = a.dim();
    if p == 0 || p >= n {
        return Err(Error::Argument(format!("block size p = {p} must satisfy 1 <= p < {n}")));
    }
    let q = n - p;
    let mut minors = DMatrix::zeros(q, q);
    for k in 0..q {
        for l in 0..q {
            minors[(k, l)] = embordering_minor(a, p, p + k, p + l)?;
        }
    }
    let lhs = log_determinant(&minors).value();
    let block = a.as_matrix().view((0, 0), (p, p)).into_owned();
    let rhs = log_determinant(&block).value().powu((q - 1) as u32) * determinant(a);
    Ok((lhs, rhs))
}

/// Both sides of the two-row bordered-minor identity
/// `|a| m_jk^ts = |a^ts| m_jk - |a^js| m_tk`.
///
/// `a_full` has `p + 2` rows and `p + n` columns; `a` is its leading
/// `p x p` block. `j, t` in `{0, 1}` pick one of the two trailing rows,
/// `s < p` is the block row being replaced and `p <= k < p + n` the
/// bordering column.
pub fn lemma1_check(
    a_full: &DMatrix<Complex64>,
    p: usize,
    j: usize,
    k: usize,
    t: usize,
    s: usize,
) -> Result<(Complex64, Complex64)> {
    let (rows, cols) = a_full.shape();
    if p == 0 || rows != p + 2 || cols <= p {
        return Err(Error::Argument(format!(
            "expected a (p+2) x (p+n) matrix with p >= 1, n >= 1; got {rows}x{cols} with p = {p}"
        )));
    }
    if j > 1 || t > 1 || s >= p || k < p || k >= cols {
        return Err(Error::Argument(format!(
            "indices out of range: j = {j}, t = {t}, s = {s}, k = {k}"
        )));
    }
    if a_full.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::Argument("matrix has non-finite entries".into()));
    }
    // rows of the block with row s swapped for trailing row `swap`
    let block = |swap: Option<usize>| -> DMatrix<Complex64> {
        DMatrix::from_fn(p, p, |i, c| {
            let r = if Some(i) == swap.map(|_| s) { p + swap.unwrap() } else { i };
            a_full[(r, c)]
        })
    };
    let minor = |border: usize, swap: Option<usize>| -> Complex64 {
        let m = DMatrix::from_fn(p + 1, p + 1, |i, c| {
            let r = if i == p {
                p + border
            } else if swap.is_some() && i == s {
                p + swap.unwrap()
            } else {
                i
            };
            let col = if c == p { k } else { c };
            a_full[(r, col)]
        });
        log_determinant(&m).value()
    };

    let det_a = log_determinant(&block(None));
    if det_a.is_zero() || det_a.ill_conditioned {
        return Err(Error::Precondition("leading block is singular".into()));
    }
    let lhs = det_a.value() * minor(j, Some(t));
    let rhs = log_determinant(&block(Some(t))).value() * minor(j, None)
        - log_determinant(&block(Some(j))).value() * minor(t, None);
    Ok((lhs, rhs))
}

/// Exact determinant of an integer matrix by fraction-free (Bareiss) elimination.
pub fn determinant_exact(m: &[Vec<BigInt>]) -> BigInt {
    let n = m.len();
    assert!(m.iter().all(|r| r.len() == n), "determinant_exact needs a square matrix");
    if n == 0 {
        return BigInt::one();
    }
    let mut a: Vec<Vec<BigInt>> = m.to_vec();
    let mut sign = BigInt::one();
    let mut prev = BigInt::one();
    for k in 0..n - 1 {
        if a[k][k].is_zero() {
            match (k + 1..n).find(|&i| !a[i][k].is_zero()) {
                Some(i) => {
                    a.swap(i, k);
                    sign = -sign;
                }
                None => return BigInt::zero(),
            }
        }
        for i in k + 1..n {
            for j in k + 1..n {
                let v = (&a[i][j] * &a[k][k] - &a[i][k] * &a[k][j]) / &prev;
                a[i][j] = v;
            }
        }
        prev = a[k][k].clone();
    }
    sign * &a[n - 1][n - 1]
}

/// Exact Sylvester identity sides for an integer matrix.
pub fn sylvester_check_exact(a: &[Vec<i64>], p: usize) -> Result<(BigInt, BigInt)> {
    let n = a.len();
    if a.iter().any(|r| r.len() != n) {
        return Err(Error::Argument("matrix must be square".into()));
    }
    if p == 0 || p >= n {
        return Err(Error::Argument(format!("block size p = {p} must satisfy 1 <= p < {n}")));
    }
    let big: Vec<Vec<BigInt>> = a.iter().map(|r| r.iter().map(|&v| BigInt::from(v)).collect()).collect();
    let q = n - p;
    let minors: Vec<Vec<BigInt>> = (0..q)
        .map(|k| {
            (0..q)
                .map(|l| determinant_exact(&bordered(|i, j| big[i][j].clone(), p, p + k, p + l)))
                .collect()
        })
        .collect();
    let lhs = determinant_exact(&minors);
    let block: Vec<Vec<BigInt>> = big[..p].iter().map(|r| r[..p].to_vec()).collect();
    let det_block = determinant_exact(&block);
    let rhs = num_traits::pow(det_block, q - 1) * determinant_exact(&big);
    Ok((lhs, rhs))
}

/// `|a - b| / max(|a|, |b|, floor)`.
pub fn relative_gap(a: Complex64, b: Complex64, floor: f64) -> f64 {
    (a - b).norm() / a.norm().max(b.norm()).max(floor)
}
