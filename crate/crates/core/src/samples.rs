//! Randomized test chains on free channels, shared by the `verify` command
//! and the test suites.

use num_complex::Complex64;
use rand::Rng;

use crate::chain::{build_w, make_basis, BasisKind, ChainSpec, ChannelPotential, Entry, TransformationMatrix};
use crate::detkit::log_determinant;
use crate::error::Result;

fn c(v: f64) -> Complex64 {
    Complex64::new(v, 0.0)
}

/// `a cosh(kr) + b sinh(kr)` or `a e^{kr} + b e^{-kr}`, picked at random.
fn hyperbolic_entry<R: Rng>(rng: &mut R, k: f64, dominant: bool) -> Result<Entry> {
    let a = if dominant { rng.gen_range(0.8..1.6) } else { rng.gen_range(-1.0..1.0) };
    let b = rng.gen_range(-0.6..0.6);
    let terms = if rng.gen_bool(0.5) {
        vec![
            (c(a), make_basis(BasisKind::Cosh, c(k), ChannelPotential::Free)?),
            (c(b), make_basis(BasisKind::Sinh, c(k), ChannelPotential::Free)?),
        ]
    } else {
        vec![
            (c(a), make_basis(BasisKind::Exp, c(k), ChannelPotential::Free)?),
            (c(b), make_basis(BasisKind::Exp, c(-k), ChannelPotential::Free)?),
        ]
    };
    Ok(Entry::Sum(terms))
}

/// Distinct wavenumbers in `[0.3, 1.6)`, at least `0.08` apart.
fn wavenumbers<R: Rng>(rng: &mut R, count: usize) -> Vec<f64> {
    let mut out: Vec<f64> = Vec::with_capacity(count);
    while out.len() < count {
        let k = rng.gen_range(0.3..1.6);
        if out.iter().all(|&q| (q - k).abs() > 0.08) {
            out.push(k);
        }
    }
    out
}

/// Two-channel chain with `singular` links acting on channel 1 followed by
/// regular links, `total` links in all, built from hyperbolic and
/// exponential solutions with distinct real spectral values.
pub fn random_hyperbolic_chain<R: Rng>(rng: &mut R, singular: usize, total: usize) -> Result<ChainSpec> {
    let ks = wavenumbers(rng, total);
    let mut links = Vec::with_capacity(total);
    for (idx, &k) in ks.iter().enumerate() {
        let lambda = c(-k * k);
        if idx < singular {
            links.push(TransformationMatrix::singular(vec![vec![hyperbolic_entry(rng, k, true)?]], 2, lambda)?);
        } else {
            let rows = (0..2)
                .map(|i| (0..2).map(|j| hyperbolic_entry(rng, k, i == j)).collect::<Result<Vec<_>>>())
                .collect::<Result<Vec<_>>>()?;
            links.push(TransformationMatrix::regular(rows, lambda)?);
        }
    }
    ChainSpec::new(1, links, vec![ChannelPotential::Free; 2])
}

/// Like [`random_hyperbolic_chain`] but retries until `|W|` keeps one sign
/// on a slightly widened `[r_lo, r_hi]`.
pub fn random_regular_chain<R: Rng>(rng: &mut R, singular: usize, total: usize, r_lo: f64, r_hi: f64) -> Result<ChainSpec> {
    loop {
        let chain = random_hyperbolic_chain(rng, singular, total)?;
        let margin = 0.1 * (r_hi - r_lo);
        if pole_free(&chain, (r_lo - margin).max(0.5 * r_lo), r_hi + margin)? {
            return Ok(chain);
        }
    }
}

fn pole_free(chain: &ChainSpec, r_lo: f64, r_hi: f64) -> Result<bool> {
    let mut first: Option<Complex64> = None;
    for i in 0..=60 {
        let r = r_lo + (r_hi - r_lo) * i as f64 / 60.0;
        let det = log_determinant(&build_w(chain, r)?.matrix);
        match first {
            None => first = Some(det.phase),
            Some(p) if (p * det.phase.conj()).re < 0.9 => return Ok(false),
            _ => {}
        }
    }
    Ok(true)
}

/// Free two-channel solution at energy `e`: plane waves for `e > 0`,
/// exponentials otherwise, with random complex amplitudes.
pub fn random_solution<R: Rng>(rng: &mut R, e: f64) -> Result<Vec<Entry>> {
    let (kind, q) = if e > 0.0 { (BasisKind::JostS, e.sqrt()) } else { (BasisKind::Exp, (-e).sqrt()) };
    let plus = make_basis(kind, c(q), ChannelPotential::Free)?;
    let minus = make_basis(kind, c(-q), ChannelPotential::Free)?;
    let mut amp = || Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
    Ok((0..2).map(|_| Entry::Sum(vec![(amp(), plus.clone()), (amp(), minus.clone())])).collect())
}
