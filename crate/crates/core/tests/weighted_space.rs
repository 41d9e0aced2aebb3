use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use virtlev_core::linalg::l2;
use virtlev_core::weighted_space::*;
use virtlev_core::{Complex64, Error};

type C = Complex64;
use proptest::prelude::*;

fn s(v: f64) -> WeightExponent {
    WeightExponent::new(v).unwrap()
}

fn free_1d_kernel(grid: &Grid1D, k: f64) -> KernelOperator {
    let p = grid.points().to_vec();
    KernelOperator::from_fn(Mesh::Line(grid.clone()), |i, j| {
        C::new((-(p[i] - p[j]).abs() * k).exp() / (2.0 * k), 0.0)
    })
    .unwrap()
}

#[test]
fn weight_values() {
    assert_eq!(weight(0.0, s(2.0)), 1.0);
    assert!((weight(1.0, s(2.0)) - 2.0).abs() < 1e-15);
    assert!((weight(3.0, s(-1.0)) - 10f64.powf(-0.5)).abs() < 1e-15);
}

#[test]
fn grid_is_symmetric_with_exact_center() {
    let g = Grid1D::new(3.0, 7).unwrap();
    assert_eq!(g.points()[g.center()], 0.0);
    assert_eq!(g.spacing(), 1.0);
    for (a, b) in g.points().iter().zip(g.points().iter().rev()) {
        assert_eq!(*a, -*b);
    }
    assert!(Grid1D::new(3.0, 8).is_err());
    assert!(Grid1D::new(-1.0, 9).is_err());
    let fine = Grid1D::with_spacing(50.0, 0.01).unwrap();
    assert!((fine.spacing() - 0.01).abs() < 1e-15);
    assert_eq!(fine.len(), 10_001);
    assert_eq!(g.refined().len(), 13);
}

#[test]
fn weighted_l2_norm_examples() {
    let g = Grid1D::new(1.0, 2001).unwrap();
    let zero = vec![C::new(0.0, 0.0); g.len()];
    assert_eq!(weighted_l2_norm(&zero, &Mesh::Line(g.clone()), s(0.0)).unwrap(), 0.0);
    // Uniform weights include both endpoints, an O(h) overshoot.
    let ones = vec![C::new(1.0, 0.0); g.len()];
    let n1 = weighted_l2_norm(&ones, &Mesh::Line(g.clone()), s(0.0)).unwrap();
    assert!((n1 - 2f64.sqrt()).abs() < 1e-3);

    let g = Grid1D::with_spacing(20.0, 0.001).unwrap();
    let f: Vec<C> = g.points().iter().map(|x| C::new((-x.abs()).exp(), 0.0)).collect();
    let n = weighted_l2_norm(&f, &Mesh::Line(g), s(0.0)).unwrap();
    // int e^{-2|x|} dx = 1; the kink at 0 costs O(h^2).
    assert!((n - 1.0).abs() < 1e-6, "{n}");

    let short = vec![C::new(1.0, 0.0); 3];
    assert!(matches!(
        weighted_l2_norm(&short, &Mesh::Line(Grid1D::new(1.0, 5).unwrap()), s(0.0)),
        Err(Error::Dimension { .. })
    ));
}

#[test]
fn identity_kernel_has_unit_norm() {
    let g = Grid1D::new(2.0, 41).unwrap();
    let h = g.spacing();
    let k = KernelOperator::from_fn(Mesh::Line(g), |i, j| {
        if i == j { C::new(1.0 / h, 0.0) } else { C::new(0.0, 0.0) }
    })
    .unwrap();
    let n = operator_norm_weighted(&k, s(0.0), s(0.0)).unwrap();
    assert!((n - 1.0).abs() < 1e-12);
}

#[test]
fn rank_one_kernel_norm_is_closed_form() {
    let g = Grid1D::new(2.0, 41).unwrap();
    let h = g.spacing();
    let u: Vec<C> = g.points().iter().map(|&x| C::new(1.0 + x, 0.5 * x)).collect();
    let v: Vec<C> = g.points().iter().map(|&x| C::new((x * 0.7).cos(), 0.0)).collect();
    let k = KernelOperator::from_fn(Mesh::Line(g), |i, j| u[i] * v[j].conj()).unwrap();
    let expected = l2(&u) * l2(&v) * h;
    let n = operator_norm_weighted(&k, s(0.0), s(0.0)).unwrap();
    assert!((n - expected).abs() < 1e-10 * expected);
}

#[test]
fn free_kernel_norm_is_stable_under_refinement() {
    let coarse = Grid1D::with_spacing(30.0, 0.1).unwrap();
    let a = operator_norm_weighted(&free_1d_kernel(&coarse, 1.0), s(1.0), s(1.0)).unwrap();
    let b = operator_norm_weighted(&free_1d_kernel(&coarse.refined(), 1.0), s(1.0), s(1.0)).unwrap();
    assert!(a.is_finite() && a > 0.0);
    assert!(((a - b) / b).abs() < 0.01, "{a} vs {b}");
}

#[test]
fn l1_to_linf_examples() {
    let g = Grid1D::new(3.0, 61).unwrap();
    let zero = KernelOperator::from_fn(Mesh::Line(g.clone()), |_, _| C::new(0.0, 0.0)).unwrap();
    assert_eq!(l1_to_linf_norm(&zero), 0.0);
    assert!((l1_to_linf_norm(&free_1d_kernel(&g, 1.0)) - 0.5).abs() < 1e-15);
    let eps: f64 = 1e-4;
    assert!((l1_to_linf_norm(&free_1d_kernel(&g, eps.sqrt())) - 1.0 / (2.0 * eps.sqrt())).abs() < 1e-10);
}

#[test]
fn non_finite_kernels_are_rejected() {
    let g = Grid1D::new(1.0, 3).unwrap();
    let bad = KernelOperator::from_fn(Mesh::Line(g), |i, j| {
        if i == j { C::new(f64::NAN, 0.0) } else { C::new(0.0, 0.0) }
    });
    assert!(matches!(bad, Err(Error::InvalidOperator(_))));
}

#[test]
fn adjoint_swaps_weight_exponents() {
    let g = Grid1D::new(4.0, 81).unwrap();
    let p = g.points().to_vec();
    let k = KernelOperator::from_fn(Mesh::Line(g), |i, j| {
        C::new((p[i] - 0.3 * p[j]).cos(), (p[i] * p[j]).sin() * 0.2) * (-(p[i] - p[j]).powi(2)).exp()
    })
    .unwrap();
    let a = operator_norm_weighted(&k, s(0.5), s(1.5)).unwrap();
    let b = operator_norm_weighted(&k.adjoint(), s(1.5), s(0.5)).unwrap();
    assert!((a - b).abs() < 1e-10 * a);
}

fn random_kernel(seed: u64, n: usize) -> KernelOperator {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let g = Grid1D::new(2.0, n).unwrap();
    KernelOperator::from_fn(Mesh::Line(g), |_, _| {
        let re: f64 = StandardNormal.sample(&mut rng);
        let im: f64 = StandardNormal.sample(&mut rng);
        C::new(re, im)
    })
    .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn weight_inverse_identity(x in -1e3f64..1e3, sv in -4.0f64..4.0) {
        let product = weight(x, s(sv)) * weight(x, s(-sv));
        prop_assert!((product - 1.0).abs() < 1e-12);
    }

    #[test]
    fn power_iteration_agrees_with_svd(seed in 0u64..1000, half in 2usize..20, sin in 0.0f64..2.0, sout in 0.0f64..2.0) {
        let k = random_kernel(seed, 2 * half + 1);
        let a = operator_norm_weighted(&k, s(sin), s(sout)).unwrap();
        let b = operator_norm_weighted_svd(&k, s(sin), s(sout)).unwrap();
        prop_assert!((a - b).abs() <= 1e-6 * b, "{} vs {}", a, b);
    }

    #[test]
    fn norm_is_monotone_under_domination(seed in 0u64..1000, t in 0.0f64..1.0) {
        // 0 <= t|K| <= |K| entrywise, nonnegative kernels.
        let k = random_kernel(seed, 15);
        let abs = KernelOperator::from_fn(k.mesh_in().clone(), |i, j| C::new(k.entries()[(i, j)].norm(), 0.0)).unwrap();
        let smaller = KernelOperator::from_fn(k.mesh_in().clone(), |i, j| abs.entries()[(i, j)] * t * (((i + j) % 3) as f64 / 2.0)).unwrap();
        let big = operator_norm_weighted(&abs, s(1.0), s(1.0)).unwrap();
        let small = operator_norm_weighted(&smaller, s(1.0), s(1.0)).unwrap();
        prop_assert!(small <= big * (1.0 + 1e-10));
    }

    #[test]
    fn linf_bounded_by_entry_bound(seed in 0u64..1000, bound in 0.1f64..10.0) {
        let k = random_kernel(seed, 11);
        let max = l1_to_linf_norm(&k);
        let clipped = KernelOperator::from_fn(k.mesh_in().clone(), |i, j| k.entries()[(i, j)] * (bound / max)).unwrap();
        prop_assert!(l1_to_linf_norm(&clipped) <= bound * (1.0 + 1e-12));
    }
}
