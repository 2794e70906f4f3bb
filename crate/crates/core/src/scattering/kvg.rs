//! Four-link chain producing the coupled ³S₁–³D₁ potential of Kohlhoff and
//! von Geramb.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::chain::{make_basis, BasisKind, ChainSpec, ChannelPotential, Entry, TransformationMatrix};
use crate::error::{Error, Result};
use crate::jet::MatJet;
use crate::transform::stepwise_chain;

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Wavenumbers in fm⁻¹.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KvGParameters {
    pub k1: f64,
    pub k2: f64,
    pub chi: f64,
}

impl Default for KvGParameters {
    fn default() -> Self {
        Self { k1: 0.944, k2: 0.232, chi: 1.22 }
    }
}

impl KvGParameters {
    pub fn new(k1: f64, k2: f64, chi: f64) -> Result<Self> {
        let p = Self { k1, k2, chi };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("k1", self.k1), ("k2", self.k2), ("chi", self.chi)] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::Argument(format!("{name} must be positive and finite, got {v}")));
            }
        }
        if (self.k1 - self.k2).abs() <= 1e-12 * self.k1.max(self.k2) {
            return Err(Error::Argument("k1 and k2 must differ".into()));
        }
        Ok(())
    }

    /// `kappa = chi (1 + i)`.
    pub fn kappa(&self) -> Complex64 {
        Complex64::new(self.chi, self.chi)
    }

    /// `N(k) = [(k1 - i k)(k2 - i k)]^-1`.
    pub fn norm_factor(&self, k: Complex64) -> Complex64 {
        1.0 / ((self.k1 - I * k) * (self.k2 - I * k))
    }
}

/// `(s, d)` background: `V0 = diag(0, 6/r^2)`.
pub fn kvg_background() -> Vec<ChannelPotential> {
    vec![ChannelPotential::Free, ChannelPotential::Centrifugal(2)]
}

fn third_link(p: &KvGParameters, with_factors: bool) -> Result<TransformationMatrix> {
    let kappa = p.kappa();
    let (np, nm) = if with_factors {
        (p.norm_factor(kappa), p.norm_factor(-kappa))
    } else {
        (Complex64::new(1.0, 0.0), Complex64::new(1.0, 0.0))
    };
    let s = ChannelPotential::Free;
    let d = ChannelPotential::Centrifugal(2);
    let rows = vec![
        vec![
            Entry::term(-nm, make_basis(BasisKind::RegularS, kappa, s.clone())?),
            Entry::term(I * np, make_basis(BasisKind::JostS, kappa, s)?),
        ],
        vec![
            Entry::term(-I, make_basis(BasisKind::RegularD, kappa, d.clone())?),
            Entry::basis(make_basis(BasisKind::JostD, kappa, d)?),
        ],
    ];
    TransformationMatrix::regular(rows, kappa * kappa)
}

fn assemble(p: &KvGParameters, with_factors: bool) -> Result<ChainSpec> {
    p.validate()?;
    let s = ChannelPotential::Free;
    let u1 = TransformationMatrix::singular(
        vec![vec![Entry::basis(make_basis(BasisKind::RegularS, Complex64::new(0.0, p.k1), s.clone())?)]],
        2,
        Complex64::new(-p.k1 * p.k1, 0.0),
    )?;
    let u2 = TransformationMatrix::singular(
        vec![vec![Entry::basis(make_basis(BasisKind::JostS, Complex64::new(0.0, -p.k2), s)?)]],
        2,
        Complex64::new(-p.k2 * p.k2, 0.0),
    )?;
    let u3 = third_link(p, with_factors)?;
    let u4 = u3.conjugate();
    ChainSpec::new(1, vec![u1, u2, u3, u4], kvg_background())
}

/// `U1 = diag(phi_s(i k1 r), 1)`, `U2 = diag(f_s(-i k2 r), 1)`, then the
/// regular pair `U3`, `U4 = conj(U3)` with `Lambda = kappa^2, conj(kappa)^2`.
pub fn build_kvg_chain(p: &KvGParameters) -> Result<ChainSpec> {
    assemble(p, true)
}

/// Same chain with the `N(±kappa)` factors dropped from `U3` and `U4`.
pub fn build_kvg_chain_unbalanced(p: &KvGParameters) -> Result<ChainSpec> {
    assemble(p, false)
}

/// `W[Y, Y] = Y^t Y' - (Y')^t Y`.
pub fn self_wronskian(y: &DMatrix<Complex64>, dy: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    y.transpose() * dy - dy.transpose() * y
}

/// Self-Wronskian of the intermediate matrix `Y_k` (one-based `k`), with the
/// scale `|Y_k| |Y_k'|` it should be compared against.
pub fn intermediate_self_wronskian(chain: &ChainSpec, k: usize, r: f64) -> Result<(DMatrix<Complex64>, f64)> {
    if k == 0 || k > chain.len() {
        return Err(Error::Argument(format!("link {k} outside a chain of {} links", chain.len())));
    }
    let point = stepwise_chain(chain).at(r, &[], 0)?;
    let y: &MatJet = &point.intermediates[k - 1];
    let (v, d) = (y.value().clone(), y.derivative_at(1));
    let scale = v.norm() * d.norm();
    Ok((self_wronskian(&v, &d), scale))
}
