use nalgebra::{DMatrix, Matrix2};
use num_complex::Complex64;

use super::KvGParameters;
use crate::error::{Error, Result};

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// 2x2 S-matrix at a real wavenumber with its eigenphases and mixing angle.
///
/// `S = O diag(e^{2i delta_1}, e^{2i delta_2}) O^t` with
/// `O = [[cos eps, -sin eps], [sin eps, cos eps]]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SMatrixValue {
    pub k: f64,
    pub s: Matrix2<Complex64>,
    pub eigenphases: [f64; 2],
    pub mixing: f64,
}

impl SMatrixValue {
    /// Diagonalizes a symmetric unitary `s` by a real rotation.
    pub fn from_matrix(k: f64, s: Matrix2<Complex64>) -> Self {
        // Re S and Im S are commuting real symmetric matrices; a generic
        // combination of the two has the common eigenvectors.
        let m = s.map(|z| z.re + 0.6180339887 * z.im);
        let mixing = 0.5 * (2.0 * m[(0, 1)]).atan2(m[(0, 0)] - m[(1, 1)]);
        let (c, sn) = (mixing.cos(), mixing.sin());
        let o = Matrix2::new(c, -sn, sn, c).map(|v| Complex64::new(v, 0.0));
        let d = o.transpose() * s * o;
        let eigenphases = [0.5 * d[(0, 0)].arg(), 0.5 * d[(1, 1)].arg()];
        Self { k, s, eigenphases, mixing }
    }

    pub fn unitarity_defect(&self) -> f64 {
        (self.s * self.s.adjoint() - Matrix2::identity()).norm()
    }

    pub fn symmetry_defect(&self) -> f64 {
        (self.s - self.s.transpose()).norm()
    }

    /// `|det S - e^{2i(delta_1 + delta_2)}|`.
    pub fn determinant_defect(&self) -> f64 {
        let phase = Complex64::from_polar(1.0, 2.0 * (self.eigenphases[0] + self.eigenphases[1]));
        (self.s.determinant() - phase).norm()
    }

    /// Channels swapped.
    pub fn swapped(&self) -> Self {
        let s = Matrix2::new(self.s[(1, 1)], self.s[(1, 0)], self.s[(0, 1)], self.s[(0, 0)]);
        Self::from_matrix(self.k, s)
    }

    pub fn as_dmatrix(&self) -> DMatrix<Complex64> {
        DMatrix::from_iterator(2, 2, self.s.iter().copied())
    }
}

/// Closed-form S-matrix of the chain at complex `k`, channels ordered `(s, d)`.
pub fn closed_form_smatrix_at(p: &KvGParameters, k: Complex64) -> Matrix2<Complex64> {
    let c2 = Complex64::new(2.0 * p.chi * p.chi, 0.0);
    let k2 = k * k;
    let a = Matrix2::new(c2, k2, -k2, c2);
    let phase = (k + I * p.k1) * (k + I * p.k2) / ((k - I * p.k1) * (k - I * p.k2));
    let mid = Matrix2::new(phase, Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0));
    let denom = k2 * k2 + Complex64::new(4.0 * p.chi.powi(4), 0.0);
    a * mid * a.transpose() / denom
}

/// Closed-form S-matrix at real `k > 0`.
pub fn closed_form_smatrix(p: &KvGParameters, k: f64) -> Result<SMatrixValue> {
    p.validate()?;
    if !(k > 0.0) || !k.is_finite() {
        return Err(Error::Argument(format!("wavenumber must be positive, got {k}")));
    }
    Ok(SMatrixValue::from_matrix(k, closed_form_smatrix_at(p, Complex64::new(k, 0.0))))
}

/// Ratio of the d- to s-wave asymptotic normalization constants, `k2^2 / (2 chi^2)`.
pub fn eta_ratio(p: &KvGParameters) -> f64 {
    p.k2 * p.k2 / (2.0 * p.chi * p.chi)
}

/// Contour estimate of the residue matrix of `f` at `pole`: the trapezoid
/// rule on a circle of radius `radius`, exact for Laurent polynomials of
/// degree below `points`.
pub fn residue<F>(f: F, pole: Complex64, radius: f64, points: usize) -> Matrix2<Complex64>
where
    F: Fn(Complex64) -> Matrix2<Complex64>,
{
    let mut acc = Matrix2::zeros();
    for j in 0..points {
        let dz = Complex64::from_polar(radius, std::f64::consts::TAU * j as f64 / points as f64);
        acc += f(pole + dz) * dz;
    }
    acc / Complex64::new(points as f64, 0.0)
}

/// `res S_21 / res S_11` at the bound-state pole `k = i k2`, extracted
/// numerically from the closed form.
pub fn residue_ratio(p: &KvGParameters) -> Result<f64> {
    p.validate()?;
    let pole = Complex64::new(0.0, p.k2);
    let res = residue(|k| closed_form_smatrix_at(p, k), pole, 1e-3 * p.k2, 64);
    let ratio = res[(1, 0)] / res[(0, 0)];
    let tol = 1e-8 * ratio.norm().max(1e-300);
    if ratio.im.abs() > tol {
        return Err(Error::NotReal { r: p.k2, residue: ratio.im.abs(), tolerance: tol });
    }
    Ok(ratio.re)
}
