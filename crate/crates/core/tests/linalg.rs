use virtlev_core::linalg::*;
use virtlev_core::{Complex64, Error};

type C = Complex64;
use nalgebra::DMatrix;

fn dense(t: &Tridiagonal) -> DMatrix<C> {
    let n = t.len();
    DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            t.diag[i]
        } else if i == j + 1 {
            t.lower[j]
        } else if j == i + 1 {
            t.upper[i]
        } else {
            C::new(0.0, 0.0)
        }
    })
}

#[test]
fn pivoted_solve_matches_dense_lu() {
    // Indefinite, non-Hermitian; forces row interchanges.
    let n = 9;
    let lower: Vec<C> = (0..n - 1).map(|i| C::new(3.0 + i as f64, 0.5)).collect();
    let diag: Vec<C> = (0..n).map(|i| C::new(0.1 * i as f64 - 0.3, -0.2)).collect();
    let upper: Vec<C> = (0..n - 1).map(|i| C::new(-1.0, 0.1 * i as f64)).collect();
    let t = Tridiagonal::new(lower, diag, upper).unwrap();
    let b: Vec<C> = (0..n).map(|i| C::new(i as f64, 1.0 - i as f64)).collect();
    let x = t.factor().unwrap().solve(&b);
    let residual: Vec<C> = t.matvec(&x).iter().zip(&b).map(|(a, b)| a - b).collect();
    assert!(l2(&residual) < 1e-12 * l2(&b));
    let reference = dense(&t).lu().solve(&nalgebra::DVector::from_vec(b.clone())).unwrap();
    for i in 0..n {
        assert!((reference[i] - x[i]).norm() < 1e-10);
    }
}

#[test]
fn singular_matrix_is_reported() {
    let one = C::new(1.0, 0.0);
    let t = Tridiagonal::new(vec![one], vec![one, one], vec![one]).unwrap();
    assert!(matches!(t.factor(), Err(Error::NearSpectrum { .. })));
}

#[test]
fn lowest_eigenpair_of_discrete_laplacian() {
    let n = 200;
    let diag = vec![2.0; n];
    let off = vec![-1.0; n - 1];
    let (lambda, v) = lowest_symmetric_eigenpair(&diag, &off).unwrap();
    let exact = 2.0 - 2.0 * (std::f64::consts::PI / (n as f64 + 1.0)).cos();
    assert!((lambda - exact).abs() < 1e-12);
    let k = n / 3;
    let expected = (std::f64::consts::PI * (k + 1) as f64 / (n as f64 + 1.0)).sin()
        * (2.0 / (n as f64 + 1.0)).sqrt();
    assert!((v[k] - expected).abs() < 1e-9);
    assert!(v.iter().all(|&x| x > 0.0));
}

#[test]
fn sturm_count_matches_spectrum() {
    let diag = vec![1.0, 2.0, 3.0];
    let off = vec![0.0, 0.0];
    assert_eq!(sturm_count_below(&diag, &off, 2.5), 2);
    assert_eq!(sturm_count_below(&diag, &off, 0.5), 0);
}

#[test]
fn expm1_is_accurate_near_zero() {
    let w = C::new(1e-9, -2e-9);
    let value = expm1(w);
    assert!((value - w).norm() < 1e-17 + 1e-8 * w.norm());
    let w = C::new(0.5, 0.25);
    assert!((expm1(w) - (w.exp() - 1.0)).norm() < 1e-15);
}
