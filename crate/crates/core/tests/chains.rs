use darboux::chain::{make_basis, BasisKind, ChainSpec, ChannelPotential, Entry, TransformationMatrix};
use darboux::samples::{random_hyperbolic_chain, random_regular_chain};
use darboux::scattering::{
    build_kvg_chain, build_kvg_chain_unbalanced, intermediate_self_wronskian, numerical_smatrix, KvGParameters,
};
use darboux::transform::{compute_potential, make_grid, potential_at, stepwise_chain, transform_matrix, PotentialOptions, PotentialTable, Spacing};
use darboux::verify::{run_all, VerifySettings};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn c(v: f64) -> Complex64 {
    Complex64::new(v, 0.0)
}

fn max_abs(m: &nalgebra::DMatrix<Complex64>) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

#[test]
fn every_link_is_annihilated_by_the_chain() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for (m, n) in [(1, 2), (2, 3), (1, 4)] {
        let chain = random_regular_chain(&mut rng, m, n, 0.5, 8.0).unwrap();
        for r in [0.7, 2.0, 5.5] {
            for u in chain.links() {
                let mut out = transform_matrix(&chain, u, r).unwrap().value;
                // channels outside the subsystem pass through a singular link
                if u.is_singular() {
                    out = out.columns(0, chain.subsystem()).into_owned();
                }
                let scale = max_abs(&u.value(r).unwrap()).max(1.0);
                assert!(max_abs(&out) < 1e-8 * scale, "({m}, {n}) at r = {r}: {}", max_abs(&out));
            }
        }
    }
}

#[test]
fn fully_singular_links_reduce_to_regular_ones() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let base = random_hyperbolic_chain(&mut rng, 0, 2).unwrap();
    let singular: Vec<TransformationMatrix> = base
        .links()
        .iter()
        .map(|u| {
            let rows = (0..2).map(|i| (0..2).map(|j| u.entry(i, j).clone()).collect()).collect();
            TransformationMatrix::singular(rows, 2, u.lambda()).unwrap()
        })
        .collect();
    let as_singular = ChainSpec::new(2, singular, vec![ChannelPotential::Free; 2]).unwrap();
    let regular: Vec<TransformationMatrix> = as_singular.links().iter().map(|u| u.as_regular()).collect();
    let as_regular = ChainSpec::new(1, regular, vec![ChannelPotential::Free; 2]).unwrap();
    for r in [0.6, 1.5, 4.0] {
        let a = stepwise_chain(&as_singular).potential(r).unwrap();
        let b = stepwise_chain(&as_regular).potential(r).unwrap();
        let d = potential_at(&as_singular, r, 0.05).unwrap().potential;
        let scale = max_abs(&b).max(1.0);
        assert!(max_abs(&(a - &b)) < 1e-10 * scale);
        assert!(max_abs(&(d - &b)) < 1e-7 * scale);
    }
}

#[test]
fn free_particle_is_not_scattered() {
    let grid = make_grid(1e-3, 20.0, 5000, Spacing::Log).unwrap();
    let n = grid.len();
    let table = PotentialTable {
        channels: 2,
        grid,
        values: vec![vec![0.0; 4]; n],
        imag_residue: vec![0.0; n],
        f_values: vec![vec![(0.0, 0.0); 4]; n],
        poles: vec![false; n],
        ill_conditioned: vec![false; n],
        pole_radii: vec![],
    };
    for k in [0.1, 0.7, 2.0] {
        let s = numerical_smatrix(&table, k, &[0, 0]).unwrap();
        let gap = max_abs(&(s.as_dmatrix() - nalgebra::DMatrix::identity(2, 2)));
        assert!(gap < 1e-5, "k = {k}: {gap}");
    }
}

#[test]
fn dropping_the_normalization_breaks_the_self_wronskian() {
    let p = KvGParameters::default();
    let balanced = build_kvg_chain(&p).unwrap();
    let unbalanced = build_kvg_chain_unbalanced(&p).unwrap();
    for r in [0.5, 2.0] {
        let (w, scale) = intermediate_self_wronskian(&balanced, 4, r).unwrap();
        assert!(max_abs(&w) < 1e-8 * scale);
        let (w, scale) = intermediate_self_wronskian(&unbalanced, 4, r).unwrap();
        assert!(max_abs(&w) > 1e-3 * scale, "r = {r}: {}", max_abs(&w) / scale);
    }
}

#[test]
fn kvg_potential_diverges_at_the_origin() {
    let chain = build_kvg_chain(&KvGParameters::default()).unwrap();
    let options = PotentialOptions { realness_tolerance: None, ..PotentialOptions::default() };
    let peak = |r_min: f64| {
        let grid = make_grid(r_min, 1.0, 60, Spacing::Log).unwrap();
        let t = compute_potential(&chain, &grid, options).unwrap();
        (0..t.len()).filter(|&i| !t.poles[i]).map(|i| t.value(i, 1, 1).abs()).fold(0.0, f64::max)
    };
    let peaks: Vec<f64> = [0.1, 0.03, 0.01].iter().map(|&r| peak(r)).collect();
    assert!(peaks[0] < peaks[1] && peaks[1] < peaks[2], "{peaks:?}");
    assert!(peaks[2] > 10.0 * peaks[0], "{peaks:?}");
}

#[test]
fn cosh_link_gives_the_known_well() {
    let k = 0.9;
    let basis = make_basis(BasisKind::Cosh, c(k), ChannelPotential::Free).unwrap();
    let lambda = basis.spectral_value();
    let u = TransformationMatrix::singular(vec![vec![Entry::basis(basis)]], 3, lambda).unwrap();
    let chain = ChainSpec::new(1, vec![u], vec![ChannelPotential::Free; 3]).unwrap();
    for r in [0.2, 1.0, 3.0] {
        let v = potential_at(&chain, r, 0.05).unwrap().potential;
        let exact = -2.0 * k * k / (k * r).cosh().powi(2);
        assert!((v[(0, 0)] - c(exact)).norm() < 1e-9);
        assert!(v.iter().enumerate().filter(|(i, _)| *i != 0).all(|(_, z)| z.norm() < 1e-12));
    }
}

#[test]
fn verify_reports_only_the_threshold_limit_as_failing() {
    let settings = VerifySettings { chains: 4, energies: 3, ..VerifySettings::default() };
    let reports = run_all(&settings).unwrap();
    let failing: Vec<&str> = reports.iter().filter(|r| !r.passed).map(|r| r.name.as_str()).collect();
    assert_eq!(failing, vec!["S(1e-4) - I"]);
    assert!(reports.len() >= 17);
}
