//! Resulting action of a chain through single determinant ratios, plus an
//! independent step-by-step evaluation used as an oracle.

mod stepwise;

pub use stepwise::{stepwise_chain, StepwiseChain, StepwisePoint, MIN_INTERMEDIATE_DISTANCE};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::chain::{build_w, build_wij, build_wj, build_wj_differentiated, ChainSpec, Entry, TransformationMatrix};
use crate::detkit::{log_determinant, LogDet};
use crate::diff::ridders;
use crate::error::{Error, Result};

/// A value computed from determinant ratios, flagged when the denominator
/// `|W|` is ill-conditioned at the evaluation radius.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluated<T> {
    pub value: T,
    pub ill_conditioned: bool,
}

fn w_det(chain: &ChainSpec, r: f64) -> Result<LogDet> {
    Ok(log_determinant(&build_w(chain, r)?.matrix))
}

/// Components `phi_j = |W_j(psi)| / |W|` of the transformed vector.
pub fn transform_solution(chain: &ChainSpec, psi: &[Entry], r: f64) -> Result<Evaluated<DVector<Complex64>>> {
    let w = w_det(chain, r)?;
    let n = chain.channels();
    let mut phi = DVector::zeros(n);
    for j in 0..n {
        phi[j] = log_determinant(&build_wj(chain, psi, j, r)?.matrix).ratio(&w);
    }
    Ok(Evaluated { value: phi, ill_conditioned: w.ill_conditioned })
}

/// Applies the chain to every column of `u`.
pub fn transform_matrix(chain: &ChainSpec, u: &TransformationMatrix, r: f64) -> Result<Evaluated<DMatrix<Complex64>>> {
    let n = chain.channels();
    if u.dim() != n {
        return Err(Error::Argument(format!("matrix is {0}x{0}, chain has {n} channels", u.dim())));
    }
    let mut out = DMatrix::zeros(n, n);
    let mut ill = false;
    for c in 0..n {
        let col = transform_solution(chain, &u.column(c), r)?;
        ill |= col.ill_conditioned;
        out.set_column(c, &col.value);
    }
    Ok(Evaluated { value: out, ill_conditioned: ill })
}

/// `f_ij = |W_ij| / |W|`.
pub fn compute_f(chain: &ChainSpec, r: f64) -> Result<Evaluated<DMatrix<Complex64>>> {
    let w = w_det(chain, r)?;
    let n = chain.channels();
    let mut f = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            f[(i, j)] = log_determinant(&build_wij(chain, i, j, r)?.matrix).ratio(&w);
        }
    }
    Ok(Evaluated { value: f, ill_conditioned: w.ill_conditioned })
}

/// Analytic derivative of `phi_j`: `(Gamma_j - sum_l phi_l |W_jl|) / |W|`,
/// where `Gamma_j` is `|W_j|` with its bottom row differentiated.
pub fn ratio_derivative(chain: &ChainSpec, psi: &[Entry], j: usize, r: f64) -> Result<Evaluated<Complex64>> {
    let n = chain.channels();
    if j >= n {
        return Err(Error::Argument(format!("component {j} out of range for {n} channels")));
    }
    let w = w_det(chain, r)?;
    let phi = transform_solution(chain, psi, r)?.value;
    let gamma = log_determinant(&build_wj_differentiated(chain, psi, j, r)?.matrix).ratio(&w);
    let mut sum = Complex64::new(0.0, 0.0);
    for l in 0..n {
        sum += phi[l] * log_determinant(&build_wij(chain, j, l, r)?.matrix).ratio(&w);
    }
    Ok(Evaluated { value: gamma - sum, ill_conditioned: w.ill_conditioned })
}

/// All components of the derivative of the transformed vector.
pub fn transform_solution_derivative(chain: &ChainSpec, psi: &[Entry], r: f64) -> Result<Evaluated<DVector<Complex64>>> {
    let n = chain.channels();
    let mut out = DVector::zeros(n);
    let mut ill = false;
    for j in 0..n {
        let d = ratio_derivative(chain, psi, j, r)?;
        ill |= d.ill_conditioned;
        out[j] = d.value;
    }
    Ok(Evaluated { value: out, ill_conditioned: ill })
}

/// Grid spacing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Spacing {
    Linear,
    Log,
}

/// `count` radii from `r_min` to `r_max` inclusive.
pub fn make_grid(r_min: f64, r_max: f64, count: usize, spacing: Spacing) -> Result<Vec<f64>> {
    if !(r_min > 0.0) || !(r_max > r_min) || !r_max.is_finite() {
        return Err(Error::Argument(format!("grid needs 0 < r_min < r_max, got [{r_min}, {r_max}]")));
    }
    if count < 2 {
        return Err(Error::Argument(format!("grid needs at least 2 points, got {count}")));
    }
    let last = (count - 1) as f64;
    let mut grid: Vec<f64> = match spacing {
        Spacing::Linear => (0..count).map(|i| r_min + (r_max - r_min) * i as f64 / last).collect(),
        Spacing::Log => {
            let (a, b) = (r_min.ln(), r_max.ln());
            (0..count).map(|i| (a + (b - a) * i as f64 / last).exp()).collect()
        }
    };
    grid[count - 1] = r_max;
    grid[0] = r_min;
    Ok(grid)
}

/// Tuning for [`compute_potential`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PotentialOptions {
    /// Largest accepted `max |Im V| / max |V|` at a regular sample; `None`
    /// keeps the real part without checking.
    pub realness_tolerance: Option<f64>,
    /// Initial step for the extrapolated derivative of `F`.
    pub step: f64,
}

impl Default for PotentialOptions {
    fn default() -> Self {
        Self { realness_tolerance: Some(1e-8), step: 0.05 }
    }
}

/// One radius of a transformed potential.
#[derive(Debug, Clone, PartialEq)]
pub struct PotentialSample {
    pub r: f64,
    /// `V0 - 2 dF`, complex before the realness projection.
    pub potential: DMatrix<Complex64>,
    pub f: DMatrix<Complex64>,
    /// `|W| / prod(row norms)`, used to locate zeros of `|W|`.
    pub normalized_det: Complex64,
    pub ill_conditioned: bool,
    pub derivative_error: f64,
}

/// Potential at one radius; the derivative of `F` is taken numerically.
pub fn potential_at(chain: &ChainSpec, r: f64, step: f64) -> Result<PotentialSample> {
    let w = build_w(chain, r)?;
    let det = log_determinant(&w.matrix);
    let ln_rows: f64 = w.matrix.row_iter().map(|row| row.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt().ln()).sum();
    let normalized_det = if det.is_zero() { Complex64::new(0.0, 0.0) } else { det.phase * (det.ln_abs - ln_rows).exp() };
    let f = compute_f(chain, r)?;
    // 1/|F| estimates the distance to the nearest zero of |W|
    let f_scale = f.value.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let h0 = step.min(0.25 * r).min(0.2 / f_scale.max(1e-12));
    let (df, err) = ridders(|t| Ok(compute_f(chain, t)?.value), r, h0)?;
    let v0 = chain.background_matrix(r).map(|v| Complex64::new(v, 0.0));
    Ok(PotentialSample {
        r,
        potential: v0 - df * Complex64::new(2.0, 0.0),
        f: f.value,
        normalized_det,
        ill_conditioned: f.ill_conditioned,
        derivative_error: 2.0 * err,
    })
}

pub(crate) struct RawSample {
    pub r: f64,
    pub potential: DMatrix<Complex64>,
    pub f: DMatrix<Complex64>,
    pub det: Option<Complex64>,
    pub ill_conditioned: bool,
    pub rough: bool,
}

/// Sampled `n x n` potential together with `F` and per-sample diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PotentialTable {
    pub channels: usize,
    pub grid: Vec<f64>,
    /// Real part of the potential, row-major `n x n` per sample.
    pub values: Vec<Vec<f64>>,
    /// Largest `|Im V_ij|` per sample.
    pub imag_residue: Vec<f64>,
    /// `F` per sample as `(re, im)` pairs, row-major.
    pub f_values: Vec<Vec<(f64, f64)>>,
    /// Samples at or next to a zero of `|W|`, or where the derivative of
    /// `F` could not be resolved.
    pub poles: Vec<bool>,
    /// `|W|` below `1e-12` times the product of its row norms. Diagnostic
    /// only: badly scaled columns trip it far from any zero.
    pub ill_conditioned: Vec<bool>,
    /// Radii where `|W|` changes sign (or phase by more than 90 degrees)
    /// between neighbouring samples; the midpoint is reported.
    pub pole_radii: Vec<f64>,
}

impl PotentialTable {
    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    pub fn matrix(&self, idx: usize) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.channels, self.channels, &self.values[idx])
    }

    pub fn value(&self, idx: usize, i: usize, j: usize) -> f64 {
        self.values[idx][i * self.channels + j]
    }

    pub fn f_matrix(&self, idx: usize) -> DMatrix<Complex64> {
        let v: Vec<Complex64> = self.f_values[idx].iter().map(|&(re, im)| Complex64::new(re, im)).collect();
        DMatrix::from_row_slice(self.channels, self.channels, &v)
    }

    pub(crate) fn from_samples(channels: usize, samples: Vec<RawSample>, realness: Option<f64>) -> Result<Self> {
        let mut table = PotentialTable {
            channels,
            grid: Vec::with_capacity(samples.len()),
            values: Vec::with_capacity(samples.len()),
            imag_residue: Vec::with_capacity(samples.len()),
            f_values: Vec::with_capacity(samples.len()),
            poles: Vec::with_capacity(samples.len()),
            ill_conditioned: Vec::with_capacity(samples.len()),
            pole_radii: Vec::new(),
        };
        let mut prev: Option<(f64, Complex64)> = None;
        for RawSample { r, potential: v, f, det, ill_conditioned, rough } in samples {
            let finite = v.iter().all(|z| z.re.is_finite() && z.im.is_finite());
            let mut pole = rough || !finite;
            if let (Some(d), Some((pr, pd))) = (det, prev) {
                if (d * pd.conj()).re < 0.0 {
                    table.pole_radii.push(0.5 * (r + pr));
                    let last = table.poles.len() - 1;
                    if d.norm() < pd.norm() {
                        pole = true;
                    } else {
                        table.poles[last] = true;
                    }
                }
            }
            if let Some(d) = det {
                prev = Some((r, d));
            }
            let imag = v.iter().map(|z| z.im.abs()).fold(0.0, f64::max);
            let scale = v.iter().map(|z| z.norm()).fold(0.0, f64::max);
            if let Some(tol) = realness {
                if !pole && imag > tol * scale.max(1e-300) {
                    return Err(Error::NotReal { r, residue: imag / scale, tolerance: tol });
                }
            }
            table.grid.push(r);
            table.values.push(v.transpose().iter().map(|z| z.re).collect());
            table.imag_residue.push(imag);
            table.f_values.push(f.transpose().iter().map(|z| (z.re, z.im)).collect());
            table.poles.push(pole);
            table.ill_conditioned.push(ill_conditioned);
        }
        Ok(table)
    }
}

/// `V_N = V0 - 2 dF_N` over `grid`, sampled in parallel.
pub fn compute_potential(chain: &ChainSpec, grid: &[f64], options: PotentialOptions) -> Result<PotentialTable> {
    if grid.windows(2).any(|w| w[1] <= w[0]) || grid.first().is_some_and(|&r| r <= 0.0) {
        return Err(Error::Argument("grid must be positive and strictly increasing".into()));
    }
    let samples = grid
        .par_iter()
        .map(|&r| {
            let s = potential_at(chain, r, options.step)?;
            let scale = s.potential.iter().map(|z| z.norm()).fold(1.0, f64::max);
            let rough = s.derivative_error > 1e-6 * scale;
            Ok(RawSample {
                r,
                potential: s.potential,
                f: s.f,
                det: Some(s.normalized_det),
                ill_conditioned: s.ill_conditioned,
                rough,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    PotentialTable::from_samples(chain.channels(), samples, options.realness_tolerance)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::{make_basis, BasisKind, ChannelPotential};

    fn c(v: f64) -> Complex64 {
        Complex64::new(v, 0.0)
    }

    fn one_link(kind: BasisKind, k: f64) -> ChainSpec {
        let b = make_basis(kind, c(k), ChannelPotential::Free).unwrap();
        let u = TransformationMatrix::singular(vec![vec![Entry::basis(b)]], 2, c(-k * k)).unwrap();
        ChainSpec::new(1, vec![u], vec![ChannelPotential::Free, ChannelPotential::Free]).unwrap()
    }

    #[test]
    fn one_link_cosh_f() {
        let k = 0.8;
        let chain = one_link(BasisKind::Cosh, k);
        for &r in &[0.3, 1.0, 4.0] {
            let f = compute_f(&chain, r).unwrap().value;
            assert!((f[(0, 0)] - c(k * (k * r).tanh())).norm() < 1e-13);
            assert!(f[(1, 1)].norm() < 1e-14 && f[(0, 1)].norm() < 1e-14 && f[(1, 0)].norm() < 1e-14);
        }
    }

    #[test]
    fn one_link_exp_is_constant() {
        let chain = one_link(BasisKind::Exp, 1.3);
        let f = compute_f(&chain, 2.0).unwrap().value;
        assert!((f[(0, 0)] - c(1.3)).norm() < 1e-13);
        let s = potential_at(&chain, 2.0, 0.05).unwrap();
        assert!(s.potential.iter().all(|z| z.norm() < 1e-9));
    }

    #[test]
    fn one_link_cosh_potential() {
        let k = 0.8;
        let chain = one_link(BasisKind::Cosh, k);
        let grid: Vec<f64> = (1..40).map(|i| 0.2 * i as f64).collect();
        let table = compute_potential(&chain, &grid, PotentialOptions::default()).unwrap();
        for (idx, &r) in grid.iter().enumerate() {
            let expect = -2.0 * k * k / (k * r).cosh().powi(2);
            assert!((table.value(idx, 0, 0) - expect).abs() < 1e-9, "r = {r}");
            assert!(table.value(idx, 1, 1).abs() < 1e-12);
            assert!(!table.poles[idx]);
        }
    }

    #[test]
    fn one_link_solution() {
        let k1 = 0.9;
        let q = 1.7;
        let chain = one_link(BasisKind::Cosh, k1);
        let sin = make_basis(BasisKind::RegularS, c(q), ChannelPotential::Free).unwrap();
        // psi = (sin qr, 0) = (-i phi_s(qr), 0)
        let psi = vec![Entry::term(Complex64::new(0.0, -1.0), sin), Entry::zero()];
        for &r in &[0.4, 1.1, 3.0] {
            let phi = transform_solution(&chain, &psi, r).unwrap().value;
            let expect = q * (q * r).cos() - k1 * (k1 * r).tanh() * (q * r).sin();
            assert!((phi[0] - c(expect)).norm() < 1e-12);
            assert!(phi[1].norm() < 1e-14);
        }
    }

    #[test]
    fn kernel_and_untouched_subsystem() {
        let chain = one_link(BasisKind::Cosh, 0.6);
        let own = chain.links()[0].column(0);
        let phi = transform_solution(&chain, &own, 1.2).unwrap().value;
        assert!(phi[0].norm() < 1e-13);
        let unit = vec![Entry::zero(), Entry::one()];
        let phi = transform_solution(&chain, &unit, 1.2).unwrap().value;
        assert!(phi[0].norm() < 1e-14 && (phi[1] - c(1.0)).norm() < 1e-14);
        let d = ratio_derivative(&chain, &unit, 1, 1.2).unwrap().value;
        assert!(d.norm() < 1e-13);
    }

    #[test]
    fn grid_must_increase() {
        let chain = one_link(BasisKind::Cosh, 0.6);
        assert!(compute_potential(&chain, &[1.0, 0.5], PotentialOptions::default()).is_err());
        assert!(compute_potential(&chain, &[0.0, 0.5], PotentialOptions::default()).is_err());
    }
}
