use std::f64::consts::PI;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use virtlev_core::discrete_ops::*;
use virtlev_core::{Complex64, Error};

type C = Complex64;

fn c(re: f64, im: f64) -> C {
    C::new(re, im)
}

fn sup_diff(a: &[C], b: &[C]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

#[test]
fn resolvent_examples() {
    let y = shift_resolvent_apply(&SeqVector::unit(1, 16).unwrap(), c(2.0, 0.0)).unwrap();
    assert_eq!(y.entries[0], c(-0.5, 0.0));
    assert!(y.entries[1..].iter().all(|v| *v == c(0.0, 0.0)));
    assert_eq!(y.flavor, SeqNorm::Linf);

    let n = 80;
    let x = SeqVector::new((1..=n).map(|j| c(0.5f64.powi(j as i32), 0.0)).collect(), SeqNorm::L1);
    let y = shift_resolvent_apply(&x, c(2.0, 0.0)).unwrap();
    for i in 1..=40 {
        let expected = -(2.0 / 3.0) * 0.5f64.powi(i as i32);
        assert!((y.entries[i - 1].re - expected).abs() < 1e-15, "i = {i}");
    }
    for z in [c(1.0, 0.0), c(0.0, 0.5), c(0.6, 0.8)] {
        assert!(matches!(shift_resolvent_apply(&x, z), Err(Error::OutsideResolventSet(_))));
        assert!(truncated_shift_resolvent(4, z).is_err());
    }
}

#[test]
fn resolvent_is_bounded_by_the_l1_norm() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..1000 {
        let n = rng.random_range(1..64);
        let x: Vec<C> = (0..n).map(|_| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect();
        let r = rng.random_range(1.0 + 1e-9..10.0);
        let z = C::from_polar(r, rng.random_range(0.0..2.0 * PI));
        let x = SeqVector::new(x, SeqNorm::L1);
        let y = shift_resolvent_apply(&x, z).unwrap();
        assert!(y.linf() <= x.l1() * (1.0 + 1e-12));
    }
}

#[test]
fn resolvent_identity_on_the_truncation() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..50 {
        let x: Vec<C> = (0..40).map(|_| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect();
        let z = C::from_polar(rng.random_range(1.01..5.0), rng.random_range(0.0..2.0 * PI));
        let y = shift_resolvent_apply(&SeqVector::new(x.clone(), SeqNorm::L1), z).unwrap().entries;
        for i in 0..39 {
            let lhs = y[i + 1] - z * y[i];
            assert!((lhs - x[i]).norm() < 1e-12 * (1.0 + x[i].norm()));
        }
        let m = truncated_shift_resolvent(40, z).unwrap();
        let dense = m * nalgebra::DVector::from_vec(x.clone());
        assert!(sup_diff(dense.as_slice(), &y) < 1e-12);
    }
}

#[test]
fn truncated_resolvent_norm_is_at_most_one() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..100 {
        let z = C::from_polar(rng.random_range(1.0 + 1e-12..=10.0), rng.random_range(0.0..2.0 * PI));
        let norm = l1_to_linf(&truncated_shift_resolvent(64, z).unwrap());
        assert!(norm <= 1.0 + 1e-12, "{z}: {norm}");
        assert!((norm - 1.0 / z.norm()).abs() < 1e-12);
    }
}

#[test]
fn boundary_value_examples() {
    let e1 = SeqVector::unit(1, 8).unwrap();
    let y = shift_boundary_value(&e1, c(1.0, 0.0)).unwrap();
    assert_eq!(y.entries[0], c(-1.0, 0.0));
    let i = c(0.0, 1.0);
    let y = shift_boundary_value(&e1, i).unwrap();
    assert!((y.entries[0] - (-i.conj())).norm() < 1e-15);
    assert!((y.entries[0] - i).norm() < 1e-15);
    assert!(shift_boundary_value(&e1, c(2.0, 0.0)).is_err());
    let dense = SeqVector::new(vec![c(1.0, 0.0); 8], SeqNorm::Linf);
    assert!(shift_boundary_value(&dense, c(1.0, 0.0)).is_err());
}

#[test]
fn boundary_value_is_the_limit_of_the_resolvent() {
    let phi = SeqVector::padded(&[c(1.0, 0.0), c(-0.5, 0.3), c(0.2, 0.2), c(0.0, -0.7)], 256).unwrap();
    for z0 in [c(1.0, 0.0), c(0.0, 1.0), C::from_polar(1.0, PI / 4.0), c(-1.0, 0.0)] {
        let limit = shift_boundary_value(&phi, z0).unwrap();
        let near = shift_resolvent_apply(&phi, z0 * (1.0 + 1e-6)).unwrap();
        assert!(sup_diff(&limit.entries, &near.entries) <= 1e-4);
    }
}

#[test]
fn boundary_value_is_linear() {
    let a = SeqVector::padded(&[c(1.0, 2.0), c(0.0, -1.0), c(3.0, 0.5)], 32).unwrap();
    let b = SeqVector::padded(&[c(-0.5, 0.0), c(0.25, 0.25)], 32).unwrap();
    let sum = SeqVector::new(a.entries.iter().zip(&b.entries).map(|(x, y)| x + y).collect(), SeqNorm::L1);
    let z0 = C::from_polar(1.0, 2.0);
    let ya = shift_boundary_value(&a, z0).unwrap();
    let yb = shift_boundary_value(&b, z0).unwrap();
    let ys = shift_boundary_value(&sum, z0).unwrap();
    let added: Vec<C> = ya.entries.iter().zip(&yb.entries).map(|(x, y)| x + y).collect();
    assert!(sup_diff(&ys.entries, &added) <= 1e-12);
}

#[test]
fn unit_phi_gives_an_exact_virtual_state() {
    let phi = SeqVector::unit(1, DEFAULT_LENGTH).unwrap();
    let level = build_shift_virtual_level(c(1.0, 0.0), &phi).unwrap();
    assert_eq!(level.psi.entries[0], c(-1.0, 0.0));
    assert!(level.psi.entries[1..].iter().all(|v| v.norm() == 0.0));
    assert!(level.residual <= 1e-12);
    assert_eq!(level.dimension, 1);
    assert_eq!(level.functional_index, 1);
}

#[test]
fn manufactured_virtual_states_have_small_residuals() {
    let phis = [
        SeqVector::padded(&[c(1.0, 0.0), c(0.5, -0.5), c(0.0, 0.25)], DEFAULT_LENGTH).unwrap(),
        SeqVector::padded(&[c(0.1, 0.0), c(0.0, 0.0), c(2.0, 1.0), c(-0.3, 0.0)], DEFAULT_LENGTH).unwrap(),
        SeqVector::new((0..DEFAULT_LENGTH).map(|j| c(0.5f64.powi(j as i32), 0.0)).collect(), SeqNorm::L1),
    ];
    for z0 in [c(1.0, 0.0), c(0.0, 1.0), C::from_polar(1.0, PI / 4.0)] {
        for phi in &phis {
            let level = build_shift_virtual_level(z0, phi).unwrap();
            assert!(level.residual <= 1e-10, "{z0}: {}", level.residual);
            assert_eq!(level.dimension, 1);
            let lambda_phi = phi.entries[level.functional_index - 1] * level.functional_scale;
            assert!((lambda_phi - 1.0).norm() < 1e-15);
        }
    }
}

#[test]
fn degenerate_inputs_are_rejected() {
    let zero = SeqVector::new(vec![c(0.0, 0.0); 16], SeqNorm::L1);
    assert!(matches!(build_shift_virtual_level_with(c(1.0, 0.0), &zero, 4), Err(Error::DegenerateFunctional)));
    let phi = SeqVector::unit(2, 16).unwrap();
    assert!(build_shift_virtual_level_with(c(1.0, 0.0), &phi, 16).is_err());
    assert!(build_shift_virtual_level_with(c(2.0, 0.0), &phi, 4).is_err());
    assert!(SeqVector::unit(0, 4).is_err());
    assert!(SeqVector::padded(&[c(1.0, 0.0); 5], 4).is_err());
}

#[test]
fn doubling_the_truncation_keeps_the_state() {
    let values = [c(1.0, 0.0), c(0.5, -0.5), c(0.0, 0.25)];
    let z0 = c(0.0, 1.0);
    let a = build_shift_virtual_level(z0, &SeqVector::padded(&values, 256).unwrap()).unwrap();
    let b = build_shift_virtual_level(z0, &SeqVector::padded(&values, 512).unwrap()).unwrap();
    let tail = a.psi.tail.max(b.psi.tail);
    assert!(sup_diff(&a.psi.entries, &b.psi.entries[..256]) <= tail + 1e-15);
    assert!((a.residual - b.residual).abs() <= tail + 1e-15);
}

#[test]
fn finite_rank_perturbations_do_not_regularize_the_zero_operator() {
    for (rank, seed) in [(1, 1), (2, 2), (3, 3), (5, 4)] {
        let (alpha, points) = exceptional_point_sweep(24, rank, seed).unwrap();
        assert!((alpha - 1.0).abs() < 0.05, "rank {rank}: {alpha}");
        assert_eq!(points.len(), 9);
    }
    assert!(exceptional_point_sweep(4, 4, 0).is_err());
}

proptest! {
    #[test]
    fn resolvent_bound_holds(re in -5.0f64..5.0, im in -5.0f64..5.0, xs in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 1..40)) {
        let z = c(re, im);
        prop_assume!(z.norm() > 1.0 + 1e-9);
        let x = SeqVector::new(xs.into_iter().map(|(a, b)| c(a, b)).collect(), SeqNorm::L1);
        let y = shift_resolvent_apply(&x, z).unwrap();
        prop_assert!(y.linf() <= x.l1() / z.norm() * (1.0 + 1e-12));
    }
}
