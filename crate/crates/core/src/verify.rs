//! Measured checks behind the `verify` command. Each returns the largest
//! observed defect next to the tolerance it is held to.

use std::time::Instant;

use nalgebra::{DMatrix, Matrix2};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::chain::ChainSpec;
use crate::detkit::{lemma1_check, relative_gap, sylvester_check, sylvester_check_exact, SquareMatrix};
use crate::diff::ridders;
use crate::error::Result;
use crate::samples::{random_regular_chain, random_solution};
use crate::scattering::{
    build_kvg_chain, closed_form_smatrix, eta_ratio, intermediate_self_wronskian, numerical_smatrix, residue_ratio,
    KvGParameters,
};
use crate::transform::{
    compute_potential, make_grid, stepwise_chain, transform_solution, transform_solution_derivative, PotentialOptions,
    PotentialTable, Spacing,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub criterion: u32,
    pub name: String,
    pub measured: f64,
    pub tolerance: f64,
    pub passed: bool,
    pub seconds: f64,
}

impl CheckReport {
    fn new(criterion: u32, name: &str, measured: f64, tolerance: f64, started: Instant) -> Self {
        Self {
            criterion,
            name: name.to_string(),
            measured,
            tolerance,
            passed: measured < tolerance,
            seconds: started.elapsed().as_secs_f64(),
        }
    }
}

/// Knobs for the randomized parts of the suite.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VerifySettings {
    pub seed: u64,
    pub chains: usize,
    pub energies: usize,
    pub kvg: KvGParameters,
}

impl Default for VerifySettings {
    fn default() -> Self {
        Self { seed: 20240611, chains: 20, energies: 10, kvg: KvGParameters::default() }
    }
}

/// `(M, N)` shapes cycled through by the randomized chain checks.
pub const CHAIN_SHAPES: [(usize, usize); 7] = [(1, 1), (1, 2), (2, 2), (1, 3), (2, 3), (1, 4), (2, 4)];

/// Interval on which random chains are compared.
pub const CHAIN_INTERVAL: (f64, f64) = (0.5, 8.0);

/// Grid on which the KvG potential is displayed and checked for symmetry.
pub const KVG_DISPLAY_GRID: (f64, f64, usize) = (0.01, 20.0, 400);

/// Log grid feeding the coupled-channel solver.
pub const KVG_SCATTERING_GRID: (f64, f64, usize) = (1e-3, 20.0, 5000);

/// Wavenumbers (fm⁻¹) at which the solver is compared with the closed form.
pub const KVG_CHECK_WAVENUMBERS: [f64; 4] = [0.1, 0.5, 1.0, 2.0];

fn max_abs(m: &DMatrix<Complex64>) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

fn random_chains(settings: &VerifySettings) -> Result<Vec<ChainSpec>> {
    let mut rng = ChaCha8Rng::seed_from_u64(settings.seed);
    (0..settings.chains)
        .map(|i| {
            let (m, n) = CHAIN_SHAPES[i % CHAIN_SHAPES.len()];
            random_regular_chain(&mut rng, m, n, CHAIN_INTERVAL.0, CHAIN_INTERVAL.1)
        })
        .collect()
}

/// Largest relative gap between the determinant and stepwise routes for the
/// potential, the transformed solution and its derivative.
pub fn oracle_equivalence(settings: &VerifySettings) -> Result<Vec<CheckReport>> {
    let started = Instant::now();
    let chains = random_chains(settings)?;
    let mut rng = ChaCha8Rng::seed_from_u64(settings.seed ^ 0x5eed);
    let grid = make_grid(CHAIN_INTERVAL.0, CHAIN_INTERVAL.1, 40, Spacing::Linear)?;
    let (mut worst_v, mut worst_phi) = (0.0f64, 0.0f64);
    for chain in &chains {
        let det = compute_potential(chain, &grid, PotentialOptions::default())?;
        let steps = stepwise_chain(chain);
        let step = steps.potential_table(&grid, Some(1e-8))?;
        let scale = step.values.iter().flatten().fold(0.0f64, |a, v| a.max(v.abs()));
        let e = rng.gen_range(0.2..3.0);
        let psi = random_solution(&mut rng, e)?;
        for (idx, &r) in grid.iter().enumerate() {
            if det.poles[idx] || step.poles[idx] {
                continue;
            }
            for (a, b) in det.values[idx].iter().zip(&step.values[idx]) {
                worst_v = worst_v.max((a - b).abs() / scale);
            }
            let [phi, dphi, _] = steps.transform(&psi, r)?;
            let phi_det = transform_solution(chain, &psi, r)?.value;
            let dphi_det = transform_solution_derivative(chain, &psi, r)?.value;
            worst_phi = worst_phi.max((&phi_det - &phi).norm() / phi.norm());
            worst_phi = worst_phi.max((&dphi_det - &dphi).norm() / dphi.norm());
        }
    }
    Ok(vec![
        CheckReport::new(1, "oracle equivalence: potential", worst_v, 1e-6, started),
        CheckReport::new(1, "oracle equivalence: solutions", worst_phi, 1e-6, started),
    ])
}

/// Energies kept away from every spectral value of `chain`.
fn residual_energies<R: Rng>(rng: &mut R, chain: &ChainSpec, count: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let e = rng.gen_range(-2.5..4.0);
        if chain.links().iter().all(|l| (l.lambda().re - e).abs() > 0.05) {
            out.push(e);
        }
    }
    out
}

/// Pointwise `|-phi'' + V phi - E phi| / ((1 + |E|) |phi|)` with `phi`, `V`
/// from the determinant route and `phi''` by differentiating `phi'`.
pub fn residual_at(chain: &ChainSpec, psi: &[crate::chain::Entry], e: f64, r: f64, potential: &DMatrix<Complex64>) -> Result<f64> {
    let phi = transform_solution(chain, psi, r)?.value;
    let (d2, _) = ridders(
        |t| Ok(DMatrix::from_column_slice(psi.len(), 1, transform_solution_derivative(chain, psi, t)?.value.as_slice())),
        r,
        0.05f64.min(0.25 * r),
    )?;
    let res = -d2.column(0) + potential * &phi - &phi * Complex64::new(e, 0.0);
    Ok(res.norm() / ((1.0 + e.abs()) * phi.norm()))
}

pub fn schrodinger_residual(settings: &VerifySettings, sign: f64) -> Result<CheckReport> {
    let started = Instant::now();
    let chains = random_chains(settings)?;
    let mut rng = ChaCha8Rng::seed_from_u64(settings.seed ^ 0xe4e4);
    let grid = make_grid(CHAIN_INTERVAL.0, CHAIN_INTERVAL.1, 12, Spacing::Linear)?;
    let mut worst = 0.0f64;
    for chain in &chains {
        let table = compute_potential(chain, &grid, PotentialOptions::default())?;
        let energies = residual_energies(&mut rng, chain, settings.energies);
        for &e in &energies {
            let psi = random_solution(&mut rng, e)?;
            for (idx, &r) in grid.iter().enumerate() {
                if table.poles[idx] {
                    continue;
                }
                let v0 = chain.background_matrix(r).map(|v| Complex64::new(v, 0.0));
                let dv = table.matrix(idx).map(|v| Complex64::new(v, 0.0)) - &v0;
                let v = v0 + dv * Complex64::new(sign, 0.0);
                worst = worst.max(residual_at(chain, &psi, e, r, &v)?);
            }
        }
    }
    Ok(CheckReport::new(2, "Schrodinger residual", worst, 1e-6, started))
}

pub fn kvg_eta(p: &KvGParameters) -> Result<Vec<CheckReport>> {
    let started = Instant::now();
    let golden = 0.018081;
    let formula = eta_ratio(p);
    let numeric = residue_ratio(p)?;
    Ok(vec![
        CheckReport::new(3, "eta formula vs 0.018081", (formula - golden).abs(), 1e-6, started),
        CheckReport::new(3, "eta residue vs 0.018081", (numeric - golden).abs(), 1e-5, started),
    ])
}

pub fn smatrix_structure(settings: &VerifySettings) -> Result<Vec<CheckReport>> {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(settings.seed ^ 0x5a5a);
    let (mut unitary, mut symmetric, mut phases) = (0.0f64, 0.0f64, 0.0f64);
    for _ in 0..100 {
        let k = 5.0 * (1.0 - rng.gen::<f64>());
        let s = closed_form_smatrix(&settings.kvg, k)?;
        unitary = unitary.max(s.unitarity_defect());
        symmetric = symmetric.max(s.symmetry_defect());
        phases = phases.max(s.determinant_defect());
    }
    let low = closed_form_smatrix(&settings.kvg, 1e-4)?;
    let threshold = (low.s - Matrix2::identity()).iter().map(|z| z.norm()).fold(0.0, f64::max);
    Ok(vec![
        CheckReport::new(4, "S unitarity", unitary, 1e-10, started),
        CheckReport::new(4, "S symmetry", symmetric, 1e-10, started),
        CheckReport::new(4, "det S vs eigenphases", phases, 1e-10, started),
        CheckReport::new(4, "S(1e-4) - I", threshold, 1e-6, started),
    ])
}

pub fn kvg_scattering_table(p: &KvGParameters) -> Result<PotentialTable> {
    let chain = build_kvg_chain(p)?;
    let (a, b, n) = KVG_SCATTERING_GRID;
    let grid = make_grid(a, b, n, Spacing::Log)?;
    compute_potential(&chain, &grid, PotentialOptions { realness_tolerance: Some(1e-6), ..Default::default() })
}

pub fn kvg_display_table(p: &KvGParameters) -> Result<PotentialTable> {
    let chain = build_kvg_chain(p)?;
    let (a, b, n) = KVG_DISPLAY_GRID;
    let grid = make_grid(a, b, n, Spacing::Log)?;
    compute_potential(&chain, &grid, PotentialOptions { realness_tolerance: None, ..Default::default() })
}

/// Numerical S on the `(d, s)` table against the closed form with its
/// `(s, d)` channels swapped.
pub fn end_to_end(p: &KvGParameters) -> Result<CheckReport> {
    let started = Instant::now();
    let table = kvg_scattering_table(p)?;
    let mut worst = 0.0f64;
    for &k in &KVG_CHECK_WAVENUMBERS {
        let num = numerical_smatrix(&table, k, &[2, 0])?;
        let closed = closed_form_smatrix(p, k)?.swapped();
        worst = worst.max((num.s - closed.s).iter().map(|z| z.norm()).fold(0.0, f64::max));
    }
    Ok(CheckReport::new(5, "numerical vs closed-form S", worst, 1e-3, started))
}

pub fn kvg_symmetry(p: &KvGParameters) -> Result<Vec<CheckReport>> {
    let started = Instant::now();
    let table = kvg_display_table(p)?;
    let (mut asym, mut imag) = (0.0f64, 0.0f64);
    for idx in 0..table.len() {
        if table.poles[idx] {
            continue;
        }
        let v = table.matrix(idx);
        let norm = v.norm();
        asym = asym.max((v[(0, 1)] - v[(1, 0)]).abs() / norm);
        imag = imag.max(table.imag_residue[idx] / norm);
    }
    let chain = build_kvg_chain(p)?;
    let mut wronskian = 0.0f64;
    for &r in &[0.3, 1.0, 2.5, 5.0, 9.0] {
        for k in [3, 4] {
            let (w, scale) = intermediate_self_wronskian(&chain, k, r)?;
            wronskian = wronskian.max(max_abs(&w) / scale);
        }
    }
    Ok(vec![
        CheckReport::new(6, "V12 - V21", asym, 1e-8, started),
        CheckReport::new(6, "Im V", imag, 1e-8, started),
        CheckReport::new(6, "self-Wronskians of Y3, Y4", wronskian, 1e-8, started),
    ])
}

fn random_complex_matrix<R: Rng>(rng: &mut R, rows: usize, cols: usize) -> DMatrix<Complex64> {
    DMatrix::from_fn(rows, cols, |_, _| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
}

pub fn determinant_identities(settings: &VerifySettings) -> Result<Vec<CheckReport>> {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(settings.seed ^ 0xde7);
    let mut exact_failures = 0usize;
    for _ in 0..200 {
        let n = rng.gen_range(2..=7);
        let p = rng.gen_range(1..n);
        let a: Vec<Vec<i64>> = (0..n).map(|_| (0..n).map(|_| rng.gen_range(-9..=9)).collect()).collect();
        let (lhs, rhs) = sylvester_check_exact(&a, p)?;
        if lhs != rhs {
            exact_failures += 1;
        }
    }
    let mut float = 0.0f64;
    for _ in 0..200 {
        let n = rng.gen_range(2..=7);
        let p = rng.gen_range(1..n);
        let a = SquareMatrix::new(random_complex_matrix(&mut rng, n, n))?;
        let (lhs, rhs) = sylvester_check(&a, p)?;
        float = float.max(relative_gap(lhs, rhs, 1e-300));
    }
    let mut lemma = 0.0f64;
    let mut done = 0;
    while done < 100 {
        let p = rng.gen_range(1..=5);
        let n = rng.gen_range(1..=4);
        let a = random_complex_matrix(&mut rng, p + 2, p + n);
        // well-conditioned leading block
        let block = a.view((0, 0), (p, p)).into_owned();
        let sv = block.singular_values();
        if sv.min() < 0.05 * sv.max() {
            continue;
        }
        let (j, t) = (rng.gen_range(0..2), rng.gen_range(0..2));
        let (s, k) = (rng.gen_range(0..p), rng.gen_range(p..p + n));
        let (lhs, rhs) = lemma1_check(&a, p, j, k, t, s)?;
        let scale = a.norm().powi(2 * p as i32 + 1);
        lemma = lemma.max((lhs - rhs).norm() / lhs.norm().max(rhs.norm()).max(1e-6 * scale));
        done += 1;
    }
    Ok(vec![
        CheckReport::new(7, "Sylvester exact mismatches", exact_failures as f64, 0.5, started),
        CheckReport::new(7, "Sylvester float", float, 1e-9, started),
        CheckReport::new(7, "Lemma 1", lemma, 1e-9, started),
    ])
}

/// `max |V - diag(6/r^2, 0)|` on `[15, 20]` fm.
pub fn short_range_tail(p: &KvGParameters) -> Result<CheckReport> {
    let started = Instant::now();
    let chain = build_kvg_chain(p)?;
    let grid = make_grid(15.0, 20.0, 51, Spacing::Linear)?;
    let table = compute_potential(&chain, &grid, PotentialOptions::default())?;
    let worst = tail_defect(&table);
    Ok(CheckReport::new(8, "short-range tail on [15, 20] fm", worst, 1e-3, started))
}

/// Largest entry of `V - diag(6/r^2, 0)` over a `(d, s)` table.
pub fn tail_defect(table: &PotentialTable) -> f64 {
    let mut worst = 0.0f64;
    for (idx, &r) in table.grid.iter().enumerate() {
        let mut dv = table.matrix(idx);
        dv[(0, 0)] -= 6.0 / (r * r);
        worst = worst.max(dv.iter().fold(0.0, |a, v| a.max(v.abs())));
    }
    worst
}

/// Every check, in criterion order.
pub fn run_all(settings: &VerifySettings) -> Result<Vec<CheckReport>> {
    let mut out = oracle_equivalence(settings)?;
    out.push(schrodinger_residual(settings, 1.0)?);
    out.extend(kvg_eta(&settings.kvg)?);
    out.extend(smatrix_structure(settings)?);
    out.push(end_to_end(&settings.kvg)?);
    out.extend(kvg_symmetry(&settings.kvg)?);
    out.extend(determinant_identities(settings)?);
    out.push(short_range_tail(&settings.kvg)?);
    Ok(out)
}
