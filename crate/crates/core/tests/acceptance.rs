//! Acceptance suite. Each test prints one `PASS`/`FAIL` line per criterion
//! with the measured value next to its tolerance; run with `--nocapture` to
//! see them.

use std::time::Instant;

use darboux::chain::ChainSpec;
use darboux::detkit::{lemma1_check, sylvester_check_exact};
use darboux::samples::{random_regular_chain, random_solution};
use darboux::scattering::{
    build_kvg_chain, closed_form_smatrix, eta_ratio, intermediate_self_wronskian, numerical_smatrix, residue_ratio,
    KvGParameters,
};
use darboux::transform::{
    compute_potential, make_grid, stepwise_chain, transform_solution, transform_solution_derivative, PotentialOptions,
    Spacing,
};
use nalgebra::{DMatrix, Matrix2};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SEED: u64 = 0xacce97;

fn report(criterion: u32, what: &str, measured: f64, tolerance: f64) -> bool {
    let ok = measured < tolerance;
    println!(
        "{} criterion {criterion}: {what}: measured {measured:.3e}, tolerance {tolerance:.1e}",
        if ok { "PASS" } else { "FAIL" }
    );
    ok
}

fn kvg() -> KvGParameters {
    KvGParameters::new(0.944, 0.232, 1.22).unwrap()
}

fn chains(count: usize) -> Vec<ChainSpec> {
    let shapes = [(1, 1), (1, 2), (2, 2), (1, 3), (2, 3), (1, 4), (2, 4)];
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    (0..count).map(|i| random_regular_chain(&mut rng, shapes[i % 7].0, shapes[i % 7].1, 0.5, 8.0).unwrap()).collect()
}

#[test]
fn criterion_1_oracle_equivalence() {
    let started = Instant::now();
    let grid = make_grid(0.5, 8.0, 40, Spacing::Linear).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 1);
    let (mut dv, mut dphi, mut compared) = (0.0f64, 0.0f64, 0usize);
    for chain in chains(21) {
        let det = compute_potential(&chain, &grid, PotentialOptions::default()).unwrap();
        let steps = stepwise_chain(&chain);
        let oracle = steps.potential_table(&grid, Some(1e-8)).unwrap();
        let scale = oracle.values.iter().flatten().fold(0.0f64, |a, v| a.max(v.abs()));
        let e = rng.gen_range(-2.0..3.0);
        let psi = random_solution(&mut rng, e).unwrap();
        for (idx, &r) in grid.iter().enumerate() {
            if det.poles[idx] || oracle.poles[idx] {
                continue;
            }
            compared += 1;
            let gap = (det.matrix(idx) - oracle.matrix(idx)).abs().max();
            dv = dv.max(gap / scale);
            let [phi, d_phi, _] = steps.transform(&psi, r).unwrap();
            let a = transform_solution(&chain, &psi, r).unwrap().value;
            let b = transform_solution_derivative(&chain, &psi, r).unwrap().value;
            dphi = dphi.max((a - &phi).norm() / phi.norm()).max((b - &d_phi).norm() / d_phi.norm());
        }
    }
    let seconds = started.elapsed().as_secs_f64();
    assert!(compared > 21 * 30, "too many flagged samples: {compared} compared");
    let ok = [
        report(1, "potential, determinant vs stepwise route", dv, 1e-6),
        report(1, "solutions and derivatives, determinant vs stepwise route", dphi, 1e-6),
        report(1, "runtime in seconds", seconds, 30.0),
    ];
    assert!(ok.iter().all(|&b| b));
}

#[test]
fn criterion_2_schrodinger_residual() {
    // phi'' from a Richardson-extrapolated five-point stencil on phi itself,
    // independent of the derivative formula used in the library
    let grid = make_grid(0.6, 7.9, 9, Spacing::Linear).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 2);
    let h = 4e-3;
    let mut worst = 0.0f64;
    let mut wrong_sign = 0.0f64;
    for chain in chains(20) {
        let table = compute_potential(&chain, &grid, PotentialOptions::default()).unwrap();
        let mut energies = Vec::new();
        while energies.len() < 10 {
            let e: f64 = rng.gen_range(-2.5..4.0);
            if chain.links().iter().all(|l| (l.lambda().re - e).abs() > 0.05) {
                energies.push(e);
            }
        }
        for e in energies {
            let psi = random_solution(&mut rng, e).unwrap();
            for (idx, &r) in grid.iter().enumerate() {
                if table.poles[idx] {
                    continue;
                }
                let phi = |t: f64| transform_solution(&chain, &psi, t).unwrap().value;
                let p0 = phi(r);
                let stencil = |h: f64| {
                    let w = |c: f64| Complex64::new(c / (12.0 * h * h), 0.0);
                    phi(r - 2.0 * h) * w(-1.0) + phi(r - h) * w(16.0) + &p0 * w(-30.0) + phi(r + h) * w(16.0)
                        + phi(r + 2.0 * h) * w(-1.0)
                };
                let d2 = (stencil(h) * Complex64::new(16.0, 0.0) - stencil(2.0 * h)) / Complex64::new(15.0, 0.0);
                let v = table.matrix(idx).map(|x| Complex64::new(x, 0.0));
                let norm = (1.0 + e.abs()) * p0.norm();
                let res = -&d2 + &v * &p0 - &p0 * Complex64::new(e, 0.0);
                worst = worst.max(res.norm() / norm);
                // flipping the sign of the transformation term
                let v0 = chain.background_matrix(r).map(|x| Complex64::new(x, 0.0));
                let flipped = &v0 * Complex64::new(2.0, 0.0) - &v;
                let res = -&d2 + flipped * &p0 - &p0 * Complex64::new(e, 0.0);
                wrong_sign = wrong_sign.max(res.norm() / norm);
            }
        }
    }
    let ok = report(2, "residual of V0 - 2F' over 20 chains x 10 energies", worst, 1e-6);
    println!("      residual with V0 + 2F' instead: {wrong_sign:.3e}");
    assert!(ok);
    assert!(wrong_sign > 1e-2);
}

#[test]
fn criterion_3_eta() {
    let p = kvg();
    // the paper quotes 0.018081
    let golden = 0.018081;
    let formula = eta_ratio(&p);
    let direct = 0.232f64 * 0.232 / (2.0 * 1.22 * 1.22);
    assert!((formula - direct).abs() < 1e-15);
    let residue = residue_ratio(&p).unwrap();
    let ok = [
        report(3, "eta from k2^2 / (2 chi^2)", (formula - golden).abs(), 1e-6),
        report(3, "eta from the residue ratio at k = i k2", (residue - golden).abs(), 1e-5),
    ];
    assert!(ok.iter().all(|&b| b));
}

/// Closed form written out again from the paper, `(s, d)` order.
fn reference_s(k: f64) -> Matrix2<Complex64> {
    let (k1, k2, chi) = (0.944, 0.232, 1.22f64);
    let i = Complex64::i();
    let ph = (k + i * k1) * (k + i * k2) / ((k - i * k1) * (k - i * k2));
    let (c, kk) = (2.0 * chi * chi, k * k);
    let d = kk * kk + 4.0 * chi.powi(4);
    Matrix2::new(
        (ph * c * c + kk * kk) / d,
        (-ph * c * kk + c * kk) / d,
        (-ph * c * kk + c * kk) / d,
        (ph * kk * kk + c * c) / d,
    )
}

#[test]
fn criterion_4_smatrix_structure() {
    let p = kvg();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 4);
    let (mut unitary, mut symmetric, mut agree) = (0.0f64, 0.0f64, 0.0f64);
    for _ in 0..100 {
        let k = 5.0 * (1.0 - rng.gen::<f64>());
        let s = closed_form_smatrix(&p, k).unwrap();
        unitary = unitary.max((s.s * s.s.adjoint() - Matrix2::identity()).norm());
        symmetric = symmetric.max((s.s - s.s.transpose()).norm());
        agree = agree.max((s.s - reference_s(k)).norm());
    }
    let ok = [
        report(4, "|S S^+ - I| over 100 k in (0, 5]", unitary, 1e-10),
        report(4, "|S - S^t| over 100 k in (0, 5]", symmetric, 1e-10),
        report(4, "library S vs reference closed form", agree, 1e-12),
    ];
    assert!(ok.iter().all(|&b| b));
}

#[test]
fn criterion_4_low_energy_limit() {
    // S11 - 1 = -2ik(1/k1 + 1/k2) + O(k^2) for the printed S-matrix, about
    // 1.07e-3 at k = 1e-4; the bound below is not reachable
    let k = 1e-4;
    let p = kvg();
    let s = closed_form_smatrix(&p, k).unwrap().s;
    let dev = (s - Matrix2::identity()).iter().map(|z| z.norm()).fold(0.0, f64::max);
    let passed = report(4, "max |S - I| at k = 1e-4", dev, 1e-6);
    // the FAIL above is reported, not hidden; the test pins its cause so a
    // change in the gap is noticed
    let leading = Complex64::new(0.0, -2.0 * k * (1.0 / p.k1 + 1.0 / p.k2));
    let gap = (s[(0, 0)] - 1.0 - leading).norm();
    println!("      S11 - 1 = {:.6e}, leading term {:.6e}, remainder {gap:.1e}", s[(0, 0)] - 1.0, leading);
    assert!(!passed, "the threshold bound is now met; revisit the recorded deviation");
    assert!(gap < 1e-2 * leading.norm(), "low-energy deviation no longer matches the leading term");
}

#[test]
fn criterion_5_end_to_end() {
    let started = Instant::now();
    let p = kvg();
    let chain = build_kvg_chain(&p).unwrap();
    let grid = make_grid(1e-3, 20.0, 5000, Spacing::Log).unwrap();
    let options = PotentialOptions { realness_tolerance: Some(1e-6), ..Default::default() };
    let table = compute_potential(&chain, &grid, options).unwrap();
    let mut worst = 0.0f64;
    for k in [0.1, 0.5, 1.0, 2.0] {
        // the table is (d, s)-ordered, the closed form (s, d)
        let num = numerical_smatrix(&table, k, &[2, 0]).unwrap().s;
        let closed = reference_s(k);
        let swapped = Matrix2::new(closed[(1, 1)], closed[(1, 0)], closed[(0, 1)], closed[(0, 0)]);
        let gap = (num - swapped).iter().map(|z| z.norm()).fold(0.0, f64::max);
        println!("      k = {k}: max entrywise gap {gap:.3e}");
        worst = worst.max(gap);
    }
    let seconds = started.elapsed().as_secs_f64();
    let ok = [
        report(5, "numerical vs closed-form S at k = 0.1, 0.5, 1, 2", worst, 1e-3),
        report(5, "runtime in seconds", seconds, 60.0),
    ];
    assert!(ok.iter().all(|&b| b));
}

#[test]
fn criterion_6_symmetry() {
    let p = kvg();
    let chain = build_kvg_chain(&p).unwrap();
    let grid = make_grid(0.01, 20.0, 400, Spacing::Log).unwrap();
    let options = PotentialOptions { realness_tolerance: None, ..Default::default() };
    let table = compute_potential(&chain, &grid, options).unwrap();
    let (mut asym, mut imag, mut used) = (0.0f64, 0.0f64, 0);
    for idx in 0..table.len() {
        if table.poles[idx] {
            continue;
        }
        used += 1;
        let v = table.matrix(idx);
        asym = asym.max((v[(0, 1)] - v[(1, 0)]).abs() / v.norm());
        imag = imag.max(table.imag_residue[idx] / v.norm());
    }
    assert!(used > 390);
    let mut wronskian = 0.0f64;
    for r in [0.2, 0.7, 1.5, 3.0, 6.0, 10.0] {
        for k in [3, 4] {
            let (w, scale) = intermediate_self_wronskian(&chain, k, r).unwrap();
            wronskian = wronskian.max(w.iter().map(|z| z.norm()).fold(0.0, f64::max) / scale);
        }
    }
    let ok = [
        report(6, "|V12 - V21| / |V|", asym, 1e-8),
        report(6, "|Im V| / |V|", imag, 1e-8),
        report(6, "self-Wronskians of Y3 and Y4, relative", wronskian, 1e-8),
    ];
    assert!(ok.iter().all(|&b| b));
}

fn bordered(a: &DMatrix<Complex64>, p: usize, i: usize, j: usize) -> Complex64 {
    let rows: Vec<usize> = (0..p).chain([i]).collect();
    let cols: Vec<usize> = (0..p).chain([j]).collect();
    a.select_rows(&rows).select_columns(&cols).determinant()
}

#[test]
fn criterion_7_determinant_identities() {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 7);
    let mut exact_misses = 0;
    for _ in 0..200 {
        let n = rng.gen_range(2..=7);
        let p = rng.gen_range(1..n);
        let a: Vec<Vec<i64>> = (0..n).map(|_| (0..n).map(|_| rng.gen_range(-9..=9)).collect()).collect();
        let (lhs, rhs) = sylvester_check_exact(&a, p).unwrap();
        exact_misses += usize::from(lhs != rhs);
    }
    // float side written directly against nalgebra's determinant
    let mut float = 0.0f64;
    for _ in 0..200 {
        let n = rng.gen_range(2..=7);
        let p = rng.gen_range(1..n);
        let a = DMatrix::from_fn(n, n, |_, _| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
        let q = n - p;
        let m = DMatrix::from_fn(q, q, |i, j| bordered(&a, p, p + i, p + j));
        let lhs = m.determinant();
        let rhs = a.view((0, 0), (p, p)).determinant().powi(q as i32 - 1) * a.determinant();
        float = float.max((lhs - rhs).norm() / lhs.norm().max(rhs.norm()));
    }
    let mut lemma = 0.0f64;
    let mut done = 0;
    while done < 100 {
        let p = rng.gen_range(1..=5);
        let n = rng.gen_range(1..=4);
        let a = DMatrix::from_fn(p + 2, p + n, |_, _| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
        let sv = a.view((0, 0), (p, p)).into_owned().singular_values();
        if sv.min() < 0.05 * sv.max() {
            continue;
        }
        let (j, t, s, k) = (rng.gen_range(0..2), rng.gen_range(0..2), rng.gen_range(0..p), rng.gen_range(p..p + n));
        let (lhs, rhs) = lemma1_check(&a, p, j, k, t, s).unwrap();
        let scale = a.norm().powi(2 * p as i32 + 1);
        lemma = lemma.max((lhs - rhs).norm() / lhs.norm().max(rhs.norm()).max(1e-6 * scale));
        done += 1;
    }
    let ok = [
        report(7, "Sylvester identity, exact integer mismatches out of 200", exact_misses as f64, 0.5),
        report(7, "Sylvester identity, 200 float matrices", float, 1e-9),
        report(7, "Lemma 1 identity, 100 instances", lemma, 1e-9),
    ];
    assert!(ok.iter().all(|&b| b));
}

#[test]
fn criterion_8_short_range_tail() {
    let chain = build_kvg_chain(&kvg()).unwrap();
    let grid = make_grid(15.0, 20.0, 101, Spacing::Linear).unwrap();
    let table = compute_potential(&chain, &grid, PotentialOptions::default()).unwrap();
    let mut worst = 0.0f64;
    for (idx, &r) in grid.iter().enumerate() {
        let dv = table.matrix(idx) - DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![6.0 / (r * r), 0.0]));
        worst = worst.max(dv.abs().max());
    }
    assert!(report(8, "max |V - diag(6/r^2, 0)| on [15, 20] fm", worst, 1e-3));
}
