//! Truncated Taylor expansions of matrix-valued functions about a point.
//!
//! `coeffs[p]` holds `f^(p)(r) / p!`. Products, inverses and derivatives are
//! exact up to the retained order, which lets a chain of first-order
//! operators be applied step by step at a single radius without numerical
//! differentiation.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::chain::{Entry, TransformationMatrix};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct MatJet {
    coeffs: Vec<DMatrix<Complex64>>,
}

fn factorial(p: usize) -> f64 {
    (1..=p).map(|v| v as f64).product()
}

impl MatJet {
    pub fn from_derivatives(derivs: Vec<DMatrix<Complex64>>) -> Self {
        let coeffs = derivs.into_iter().enumerate().map(|(p, d)| d / Complex64::new(factorial(p), 0.0)).collect();
        Self { coeffs }
    }

    pub fn of_matrix(u: &TransformationMatrix, r: f64, order: usize) -> Result<Self> {
        let derivs = (0..=order).map(|p| u.derivative(r, p)).collect::<Result<Vec<_>>>()?;
        Ok(Self::from_derivatives(derivs))
    }

    /// Column jet of a vector function.
    pub fn of_vector(psi: &[Entry], r: f64, order: usize) -> Result<Self> {
        let derivs = (0..=order)
            .map(|p| {
                let mut col = DMatrix::zeros(psi.len(), 1);
                for (i, e) in psi.iter().enumerate() {
                    col[(i, 0)] = e.derivative(r, p)?;
                }
                Ok(col)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self::from_derivatives(derivs))
    }

    /// Highest retained order.
    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn shape(&self) -> (usize, usize) {
        self.coeffs[0].shape()
    }

    pub fn value(&self) -> &DMatrix<Complex64> {
        &self.coeffs[0]
    }

    /// `d^p f / dr^p` at the expansion point.
    pub fn derivative_at(&self, p: usize) -> DMatrix<Complex64> {
        &self.coeffs[p] * Complex64::new(factorial(p), 0.0)
    }

    pub fn truncated(&self, order: usize) -> Self {
        Self { coeffs: self.coeffs[..=order.min(self.order())].to_vec() }
    }

    pub fn derivative(&self) -> Result<Self> {
        if self.order() == 0 {
            return Err(Error::Capability { requested: 1, supported: 0 });
        }
        let coeffs = (0..self.order()).map(|p| &self.coeffs[p + 1] * Complex64::new((p + 1) as f64, 0.0)).collect();
        Ok(Self { coeffs })
    }

    /// Differentiates rows `i < m`, keeps the others; one order is lost.
    pub fn dm(&self, m: usize) -> Result<Self> {
        let d = self.derivative()?;
        let mut coeffs = d.coeffs;
        for (p, c) in coeffs.iter_mut().enumerate() {
            for i in m..c.nrows() {
                c.set_row(i, &self.coeffs[p].row(i));
            }
        }
        Ok(Self { coeffs })
    }

    pub fn mul(&self, other: &MatJet) -> Self {
        let order = self.order().min(other.order());
        let coeffs = (0..=order)
            .map(|p| {
                let mut acc = &self.coeffs[0] * &other.coeffs[p];
                for q in 1..=p {
                    acc += &self.coeffs[q] * &other.coeffs[p - q];
                }
                acc
            })
            .collect();
        Self { coeffs }
    }

    pub fn sub(&self, other: &MatJet) -> Self {
        let order = self.order().min(other.order());
        Self { coeffs: (0..=order).map(|p| &self.coeffs[p] - &other.coeffs[p]).collect() }
    }

    pub fn add(&self, other: &MatJet) -> Self {
        let order = self.order().min(other.order());
        Self { coeffs: (0..=order).map(|p| &self.coeffs[p] + &other.coeffs[p]).collect() }
    }

    /// Matrix inverse of a square jet; `None` if the value is singular.
    pub fn inverse(&self) -> Option<Self> {
        let a0inv = self.coeffs[0].clone().try_inverse()?;
        if a0inv.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return None;
        }
        let mut out: Vec<DMatrix<Complex64>> = vec![a0inv.clone()];
        for p in 1..=self.order() {
            let mut acc = &self.coeffs[1] * &out[p - 1];
            for q in 2..=p {
                acc += &self.coeffs[q] * &out[p - q];
            }
            out.push(-(&a0inv * acc));
        }
        Some(Self { coeffs: out })
    }

    pub fn transpose(&self) -> Self {
        Self { coeffs: self.coeffs.iter().map(|c| c.transpose()).collect() }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar_jet(derivs: &[f64]) -> MatJet {
        MatJet::from_derivatives(derivs.iter().map(|&d| DMatrix::from_element(1, 1, Complex64::new(d, 0.0))).collect())
    }

    #[test]
    fn product_rule() {
        // f = e^r, g = sin r at r = 0.3
        let r: f64 = 0.3;
        let f = scalar_jet(&[r.exp(); 4]);
        let g = scalar_jet(&[r.sin(), r.cos(), -r.sin(), -r.cos()]);
        let h = f.mul(&g);
        // (e^r sin r)'' = 2 e^r cos r
        let d2 = h.derivative_at(2)[(0, 0)].re;
        assert!((d2 - 2.0 * r.exp() * r.cos()).abs() < 1e-13);
    }

    #[test]
    fn inverse_of_exponential() {
        let r: f64 = 0.7;
        let f = scalar_jet(&[r.exp(); 5]);
        let inv = f.inverse().unwrap();
        for p in 0..5 {
            let expect = if p % 2 == 0 { (-r).exp() } else { -(-r).exp() };
            assert!((inv.derivative_at(p)[(0, 0)].re - expect).abs() < 1e-13);
        }
    }

    #[test]
    fn dm_keeps_lower_rows() {
        let derivs: Vec<DMatrix<Complex64>> = (0..3)
            .map(|p| DMatrix::from_fn(2, 2, |i, j| Complex64::new((10 * p + 2 * i + j) as f64, 0.0)))
            .collect();
        let jet = MatJet::from_derivatives(derivs.clone());
        let out = jet.dm(1).unwrap();
        assert_eq!(out.order(), 1);
        assert_eq!(out.value().row(0), derivs[1].row(0));
        assert_eq!(out.value().row(1), derivs[0].row(1));
        assert_eq!(out.derivative_at(1).row(1), derivs[1].row(1));
    }
}
