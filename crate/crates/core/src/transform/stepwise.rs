//! Link-by-link application of the chain with Taylor jets.
//!
//! Each link's operator `L_k = d - Y_k' Y_k^{-1}` (or `D_m - ...` for the
//! singular links) is applied to the remaining transformation matrices and to
//! the target vectors, all expanded at one radius. Nothing here touches the
//! big block determinants, so it serves as an oracle for them.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;

use super::{PotentialTable, RawSample};
use crate::chain::{ChainSpec, Entry, LinkKind, TransformationMatrix};
use crate::error::{Error, Result};
use crate::jet::MatJet;

/// Samples closer than this (fm) to a zero of some intermediate `|Y_k|`
/// are flagged: the high Taylor coefficients of `Y_k' Y_k^{-1}` grow like
/// inverse powers of that distance and cancel in `F_N`.
pub const MIN_INTERMEDIATE_DISTANCE: f64 = 0.05;

#[derive(Debug, Clone, Copy)]
pub struct StepwiseChain<'a> {
    chain: &'a ChainSpec,
}

pub fn stepwise_chain(chain: &ChainSpec) -> StepwiseChain<'_> {
    StepwiseChain { chain }
}

/// Everything the step-by-step evaluation produces at one radius.
#[derive(Debug, Clone)]
pub struct StepwisePoint {
    pub r: f64,
    /// `F_N` with at least one derivative.
    pub f: MatJet,
    /// Intermediate matrices `Y_k = L_{k-1} ... L_1 U_k`.
    pub intermediates: Vec<MatJet>,
    /// Newton estimate `1 / |tr(Y_k' Y_k^{-1})|` of the distance to the
    /// nearest zero of an intermediate `|Y_k|`, minimized over the links.
    pub intermediate_distance: f64,
    /// Transformed target vectors, as column jets.
    pub targets: Vec<MatJet>,
    /// `V0 - 2 F_N'`.
    pub potential: DMatrix<Complex64>,
}

impl StepwiseChain<'_> {
    /// Runs the chain at `r`, carrying `extra` more derivatives of the
    /// targets than strictly needed for the potential.
    pub fn at(&self, r: f64, targets: &[Vec<Entry>], extra: usize) -> Result<StepwisePoint> {
        if r <= 0.0 {
            return Err(Error::Domain(format!("radius must be positive, got {r}")));
        }
        let chain = self.chain;
        let n = chain.channels();
        let m = chain.subsystem();
        let order = chain.len() + 1 + extra.max(1);
        let mut pending =
            chain.links().iter().map(|u| MatJet::of_matrix(u, r, order)).collect::<Result<Vec<_>>>()?;
        let mut outs = targets.iter().map(|t| MatJet::of_vector(t, r, order)).collect::<Result<Vec<_>>>()?;
        let mut f = MatJet::from_derivatives(vec![DMatrix::zeros(n, n); order + 1]);
        let mut intermediates = Vec::with_capacity(chain.len());
        let mut intermediate_distance = f64::INFINITY;
        for k in 0..chain.len() {
            let y = pending[k].clone();
            let inv = y.inverse().ok_or_else(|| Error::Singular { r, what: format!("intermediate matrix Y_{}", k + 1) })?;
            let g = y.derivative()?.mul(&inv);
            intermediate_distance = intermediate_distance.min(1.0 / g.value().trace().norm());
            f = f.add(&g);
            let step = |x: &MatJet| -> Result<MatJet> {
                let lead = match chain.links()[k].kind() {
                    LinkKind::Singular { .. } => x.dm(m)?,
                    LinkKind::Regular => x.derivative()?,
                };
                Ok(lead.sub(&g.mul(x)))
            };
            for later in pending.iter_mut().skip(k + 1) {
                *later = step(later)?;
            }
            for t in outs.iter_mut() {
                *t = step(t)?;
            }
            intermediates.push(y);
        }
        let v0 = chain.background_matrix(r).map(|v| Complex64::new(v, 0.0));
        let potential = v0 - f.derivative_at(1) * Complex64::new(2.0, 0.0);
        Ok(StepwisePoint { r, f, intermediates, intermediate_distance, targets: outs, potential })
    }

    pub fn f(&self, r: f64) -> Result<DMatrix<Complex64>> {
        Ok(self.at(r, &[], 0)?.f.value().clone())
    }

    pub fn potential(&self, r: f64) -> Result<DMatrix<Complex64>> {
        Ok(self.at(r, &[], 0)?.potential)
    }

    /// Transformed vector and its first two derivatives.
    pub fn transform(&self, psi: &[Entry], r: f64) -> Result<[DVector<Complex64>; 3]> {
        let point = self.at(r, &[psi.to_vec()], 2)?;
        let t = &point.targets[0];
        Ok([0, 1, 2].map(|p| t.derivative_at(p).column(0).into_owned()))
    }

    /// Applies the chain to each column of `u`.
    pub fn transform_matrix(&self, u: &TransformationMatrix, r: f64) -> Result<DMatrix<Complex64>> {
        let cols: Vec<Vec<Entry>> = (0..u.dim()).map(|c| u.column(c)).collect();
        let point = self.at(r, &cols, 0)?;
        let mut out = DMatrix::zeros(u.dim(), u.dim());
        for (c, t) in point.targets.iter().enumerate() {
            out.set_column(c, &t.value().column(0));
        }
        Ok(out)
    }

    pub fn potential_table(&self, grid: &[f64], realness: Option<f64>) -> Result<PotentialTable> {
        let samples = grid
            .par_iter()
            .map(|&r| match self.at(r, &[], 0) {
                Ok(p) => Ok(RawSample {
                    r,
                    rough: p.intermediate_distance < MIN_INTERMEDIATE_DISTANCE,
                    f: p.f.value().clone(),
                    potential: p.potential,
                    det: None,
                    ill_conditioned: false,
                }),
                Err(Error::Singular { .. }) => {
                    let n = self.chain.channels();
                    let nan = DMatrix::from_element(n, n, Complex64::new(f64::NAN, f64::NAN));
                    Ok(RawSample { r, potential: nan.clone(), f: nan, det: None, ill_conditioned: false, rough: true })
                }
                Err(e) => Err(e),
            })
            .collect::<Result<Vec<_>>>()?;
        PotentialTable::from_samples(self.chain.channels(), samples, realness)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::{make_basis, BasisKind, ChannelPotential};

    #[test]
    fn one_link_cosh() {
        let k = 0.7;
        let b = make_basis(BasisKind::Cosh, Complex64::new(k, 0.0), ChannelPotential::Free).unwrap();
        let u = TransformationMatrix::singular(vec![vec![Entry::basis(b)]], 2, Complex64::new(-k * k, 0.0)).unwrap();
        let chain = ChainSpec::new(1, vec![u], vec![ChannelPotential::Free; 2]).unwrap();
        let s = stepwise_chain(&chain);
        let r = 1.3;
        let v = s.potential(r).unwrap();
        assert!((v[(0, 0)].re + 2.0 * k * k / (k * r).cosh().powi(2)).abs() < 1e-13);
        assert!(v[(1, 1)].norm() < 1e-15);
    }
}
