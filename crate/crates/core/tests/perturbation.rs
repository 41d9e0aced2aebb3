use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal, Uniform};
use virtlev_core::free_resolvent::SpectralParameter;
use virtlev_core::jost::critical_well_coupling;
use virtlev_core::lap_sweep::*;
use virtlev_core::perturbation::*;
use virtlev_core::potential::Potential1D;
use virtlev_core::report::Classification;
use virtlev_core::weighted_space::{Grid1D, Mesh};
use virtlev_core::{Complex64, Error};

type C = Complex64;

/// Plain bisection on `kappa - q tan q` over the first branch.
fn kappa_by_bisection(g: f64) -> f64 {
    let f = |k: f64| {
        let q = (g - k * k).sqrt();
        k - q * q.tan()
    };
    let (mut lo, mut hi) = (0.0, g.sqrt());
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

#[test]
fn square_well_matches_bisection_oracle() {
    for g in [0.001, 0.005, 0.01, 0.04, 0.1, 0.5, 1.0, 2.0] {
        let root = square_well_eigenvalue(g).unwrap();
        let kappa = kappa_by_bisection(g);
        assert!((root.kappa - kappa).abs() <= 1e-14 * kappa.max(1.0), "g = {g}");
        assert!((root.energy + kappa * kappa).abs() <= 1e-13 * kappa * kappa);
        assert!(!root.multiple_roots);
    }
    // g = 0.01: E = -9.868...e-5
    let e = square_well_eigenvalue(0.01).unwrap().energy;
    assert!((e / -1e-4 - 1.0).abs() < 0.02, "{e}");
}

#[test]
fn square_well_rejects_nonpositive_couplings() {
    for g in [0.0, -1.0, f64::NAN, f64::INFINITY] {
        assert!(matches!(square_well_eigenvalue(g), Err(Error::NoBoundState(_))));
    }
    assert!(square_well_eigenvalue(3.0).unwrap().multiple_roots);
    let deep = square_well_eigenvalue(12.0).unwrap();
    assert!(deep.multiple_roots);
    let q = (12.0 - deep.kappa * deep.kappa).sqrt();
    assert!((deep.kappa - q * q.tan()).abs() < 1e-10);
    // smallest kappa lives on the last branch
    assert!(q > std::f64::consts::PI);
}

#[test]
fn bifurcation_law() {
    let gs = [0.04, 0.02, 0.01, 0.005];
    let curve = BifurcationCurve::compute(&gs).unwrap();
    for (g, e) in gs.iter().zip(&curve.energies) {
        assert!(*e < 0.0);
        assert!((e / (-g * g) - 1.0).abs() <= 3.0 * g, "g = {g}");
        assert!((e + g * g).abs() <= curve.cubic_coefficient.abs() * 1.5 * g.powi(3));
    }
    assert!((curve.slope - 2.0).abs() <= 0.05, "{}", curve.slope);
    let csv = curve.to_csv().render();
    assert!(csv.lines().next().unwrap() == "g,E,E_predicted");
    assert_eq!(csv.lines().count(), 5);
}

#[test]
fn eigenvalue_decreases_with_coupling() {
    let gs: Vec<f64> = (1..=100).map(|k| k as f64 * 1e-3).collect();
    let es: Vec<f64> = gs.iter().map(|&g| square_well_eigenvalue(g).unwrap().energy).collect();
    assert!(es.windows(2).all(|w| w[1] < w[0]));
}

#[test]
fn eigenvalues_bifurcate_from_the_threshold() {
    let gs: Vec<f64> = (0..12).map(|j| 0.1 * 0.5f64.powi(j)).collect();
    let es: Vec<f64> = gs.iter().map(|&g| square_well_eigenvalue(g).unwrap().energy).collect();
    let norms: Vec<f64> = gs.iter().map(|&g| BifurcationCurve::weighted_coupling_norm(g, 1.0)).collect();
    assert!(es.windows(2).all(|w| w[1].abs() < w[0].abs()));
    assert!(norms.windows(2).all(|w| w[1] < w[0]));
    assert!(es.last().unwrap().abs() < 1e-8 && *norms.last().unwrap() < 1e-4);
}

#[test]
fn matching_system_is_nonsingular() {
    let m = hu_matching_matrix();
    let exact = DMatrix::from_row_slice(3, 3, &[0.0, 1.0, 1.0, 0.0, 1.0, -1.0, 2.0, 0.0, -2.0 / 3.0]);
    assert!((&m - &exact).abs().max() < 1e-9);
    assert!((m.determinant() + 4.0).abs() < 1e-8);
    assert!(normalized_determinant(&m).abs() > 0.1);
    let sv = m.svd(false, false).singular_values;
    assert!(sv.min() > 0.1);
}

#[test]
fn rank_one_perturbation_regularizes_the_threshold() {
    let report = rank_one_regularized_threshold().unwrap();
    assert!(report.classification.is_regular());
    assert!(report.alpha.unwrap() <= 0.1);
    let free = OperatorSpec::new(OperatorKind::Free1D, rank_one_grid().unwrap()).unwrap();
    let cfg = SweepConfig::toward(C::new(0.0, 0.0), std::f64::consts::PI, 2.0).unwrap();
    let report = classify(&free, &cfg, DEFAULT_TOL_ALPHA).unwrap();
    match report.classification {
        Classification::Virtual { rank: Some(1), states, log: false } => {
            let n = states[0].len();
            let dev = states[0][n / 4..3 * n / 4].iter().map(|u| (u - 1.0).norm()).fold(0.0, f64::max);
            assert!(dev <= 0.05, "{dev}");
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn critical_well_has_a_rank_one_virtual_level() {
    let mesh = rank_one_grid().unwrap();
    let g = Grid1D::new(4.0, 801).unwrap();
    let gstar = critical_well_coupling(2.0, 3.0, &g).unwrap();
    let op = OperatorSpec::new(OperatorKind::Schrodinger1D(Potential1D::square_well(gstar).unwrap()), mesh).unwrap();
    let cfg = SweepConfig::toward(C::new(0.0, 0.0), std::f64::consts::PI, 2.0).unwrap();
    let reg = regularization_search(&op, &cfg, DEFAULT_TOL_ALPHA, 3).unwrap().expect("regularization");
    assert_eq!(reg.rank, 1);
    assert_eq!(reg.states.len(), 1);
    assert!(reg.residual < 1e-3, "{}", reg.residual);
}

#[test]
fn regularization_needs_a_real_threshold() {
    let op = OperatorSpec::new(OperatorKind::Free1D, rank_one_grid().unwrap()).unwrap();
    let cfg = SweepConfig::toward(C::new(0.0, 1.0), std::f64::consts::PI, 2.0).unwrap();
    assert!(matches!(regularization_search(&op, &cfg, 0.1, 2), Err(Error::Unsupported(_))));
}

#[test]
fn sweep_detects_square_well_eigenvalues_and_regular_threshold() {
    let mesh = Mesh::Line(Grid1D::with_spacing(30.0, 0.01).unwrap());
    let gstar = std::f64::consts::PI.powi(2) / 4.0;
    for g in [0.3, 0.8, 1.5] {
        assert!(g < gstar);
        let op = OperatorSpec::new(OperatorKind::Schrodinger1D(Potential1D::square_well(g).unwrap()), mesh.clone()).unwrap();
        let exact = square_well_eigenvalue(g).unwrap().energy;
        let e = discrete_eigenvalue(&op, exact * 2.0, exact * 0.5).unwrap();
        assert!((e - exact).abs() < 1e-3 * exact.abs(), "g = {g}: {e} vs {exact}");
        assert!(matches!(
            resolvent_matrix(&op, &SpectralParameter::real(e).unwrap()),
            Err(Error::NearSpectrum { .. })
        ));
        let cfg = SweepConfig::toward(C::new(0.0, 0.0), std::f64::consts::PI, 2.0).unwrap();
        let report = classify_points(&sweep(&op, &cfg).unwrap(), DEFAULT_TOL_ALPHA).unwrap();
        assert!(report.classification.is_regular(), "g = {g}: alpha {:?}", report.alpha);
    }
}

#[test]
fn embedded_potential_examples() {
    let zero = C::new(0.0, 0.0);
    let (psi, v) = embedded_potential_3d(zero, 0.0);
    assert!((psi - 1.5).norm() < 1e-15);
    assert!((v + 2.0).norm() < 1e-14);
    let (_, v) = embedded_potential_3d(zero, 1.0 - 1e-12);
    assert!((v + 3.0).norm() < 1e-9);
    let (_, v) = embedded_potential_3d(zero, 1.0);
    assert!((v + 3.0).norm() < 1e-12);
    for zeta in [C::new(0.0, 0.0), C::new(1.0, 1.0), C::new(0.3, 2.0)] {
        let inside = embedded_potential_3d(zeta, 1.0).0;
        let outside = embedded_potential_3d(zeta, 1.0 + 1e-13).0;
        assert!((inside - outside).norm() < 1e-10);
        for r in [1.5, 2.0, 10.0] {
            assert_eq!(embedded_potential_3d(zeta, r).1, zero);
        }
        for k in 0..=300 {
            assert!(embedded_potential_3d(zeta, k as f64 * 0.01).0.norm() > 0.0);
        }
    }
}

#[test]
fn embedded_residual_is_small_and_shrinks_with_h() {
    for zeta in [C::new(1.0, 1.0), C::new(0.5, 0.5), C::new(1.25, 0.25)] {
        let fine = embedded_residual(zeta, 1e-3);
        let coarse = embedded_residual(zeta, 8e-3);
        assert!(fine <= EMBEDDED_RESIDUAL_TOL, "{zeta}: {fine}");
        assert!(coarse > fine, "{zeta}: {coarse} vs {fine}");
    }
}

#[test]
fn embedded_family_diverges_toward_the_threshold() {
    for zeta0 in [0.0, 1.0] {
        let fam = embedded_family_check(zeta0, 8).unwrap();
        assert_eq!(fam.samples.len(), 8);
        for s in &fam.samples {
            assert!(s.residual <= 1e-6);
            assert!(s.z.im > 0.0);
            assert!(s.zeta.im > 0.0);
        }
        let gaps: Vec<f64> = fam.samples.iter().map(|s| (s.z - zeta0 * zeta0).norm()).collect();
        assert!(gaps.windows(2).all(|w| w[1] < w[0]));
        assert!(fam.monotone_growth());
        let radii: Vec<f64> = fam.report.points.iter().map(|p| p.radius).collect();
        let span = radii.iter().cloned().fold(0.0, f64::max) / radii.iter().cloned().fold(f64::INFINITY, f64::min);
        assert!(span >= 1e3 * (1.0 - 1e-9));
        assert!(fam.report.classification.is_virtual(), "zeta0 = {zeta0}: {:?}", fam.report.alpha);
        let csv = fam.to_csv().render();
        assert_eq!(csv.lines().next().unwrap(), "j,zeta_re,zeta_im,residual");
    }
    assert!(embedded_family_check(-1.0, 3).is_err());
}

#[test]
fn nullity_examples() {
    let jordan = DMatrix::from_fn(3, 3, |i, j| if j == i + 1 { C::new(1.0, 0.0) } else { C::new(0.0, 0.0) });
    assert_eq!(matrix_nullity_by_perturbation(&jordan, 20, 7).unwrap(), 1);
    assert_eq!(matrix_nullity_by_perturbation(&DMatrix::identity(4, 4), 20, 7).unwrap(), 0);
    assert_eq!(matrix_nullity_by_perturbation(&DMatrix::zeros(2, 2), 20, 7).unwrap(), 2);
    assert_eq!(matrix_nullity_by_perturbation(&DMatrix::zeros(8, 8), 20, 7).unwrap(), 8);
    assert!(matrix_nullity_by_perturbation(&DMatrix::zeros(2, 3), 20, 7).is_err());
    assert!(matrix_nullity_by_perturbation(&jordan, 0, 7).is_err());
}

fn unitary(n: usize, rng: &mut ChaCha8Rng) -> DMatrix<C> {
    let g = DMatrix::from_fn(n, n, |_, _| {
        let re: f64 = StandardNormal.sample(&mut *rng);
        let im: f64 = StandardNormal.sample(&mut *rng);
        C::new(re, im)
    });
    g.qr().q()
}

fn planted(n: usize, nullity: usize, rng: &mut ChaCha8Rng) -> DMatrix<C> {
    let u = unitary(n, rng);
    let v = unitary(n, rng);
    let spread = Uniform::new(0.5, 2.0).unwrap();
    let s = DMatrix::from_fn(n, n, |i, j| {
        if i == j && i >= nullity {
            C::new(spread.sample(&mut *rng), 0.0)
        } else {
            C::new(0.0, 0.0)
        }
    });
    u * s * v.adjoint()
}

#[test]
fn nullity_agrees_with_svd_on_planted_matrices() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for case in 0..100 {
        let nullity = case % 4;
        let n = 3 + case % 6;
        let m = planted(n, nullity, &mut rng);
        assert_eq!(svd_nullity(&m), nullity);
        assert_eq!(matrix_nullity_by_perturbation(&m, 20, case as u64).unwrap(), nullity, "case {case}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]
    #[test]
    fn nullity_is_scale_invariant(seed in 0u64..1000, nullity in 0usize..4, scale in 1e-3f64..1e3) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = planted(5, nullity, &mut rng) * C::new(scale, 0.0);
        prop_assert_eq!(matrix_nullity_by_perturbation(&m, 20, seed).unwrap(), nullity);
    }
}
