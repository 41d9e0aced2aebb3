//! Banded solvers used by the finite-difference resolvents and the
//! criticality eigenproblems.

use num_complex::Complex64;

use crate::error::{Error, Result};

type C = Complex64;

/// Complex tridiagonal matrix stored by diagonals.
#[derive(Debug, Clone, PartialEq)]
pub struct Tridiagonal {
    /// Sub-diagonal, `lower[i] = A[i+1][i]`.
    pub lower: Vec<C>,
    pub diag: Vec<C>,
    /// Super-diagonal, `upper[i] = A[i][i+1]`.
    pub upper: Vec<C>,
}

impl Tridiagonal {
    pub fn new(lower: Vec<C>, diag: Vec<C>, upper: Vec<C>) -> Result<Self> {
        let n = diag.len();
        if n == 0 {
            return Err(Error::InvalidInput("empty tridiagonal matrix".into()));
        }
        if lower.len() + 1 != n {
            return Err(Error::Dimension { expected: n - 1, got: lower.len() });
        }
        if upper.len() + 1 != n {
            return Err(Error::Dimension { expected: n - 1, got: upper.len() });
        }
        Ok(Self { lower, diag, upper })
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    pub fn matvec(&self, x: &[C]) -> Vec<C> {
        let n = self.len();
        let mut y = vec![C::new(0.0, 0.0); n];
        for i in 0..n {
            let mut acc = self.diag[i] * x[i];
            if i > 0 {
                acc += self.lower[i - 1] * x[i - 1];
            }
            if i + 1 < n {
                acc += self.upper[i] * x[i + 1];
            }
            y[i] = acc;
        }
        y
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        Self {
            lower: self.upper.iter().map(|v| v.conj()).collect(),
            diag: self.diag.iter().map(|v| v.conj()).collect(),
            upper: self.lower.iter().map(|v| v.conj()).collect(),
        }
    }

    /// Maximum absolute row sum.
    pub fn norm_inf(&self) -> f64 {
        let n = self.len();
        (0..n)
            .map(|i| {
                let mut s = self.diag[i].norm();
                if i > 0 {
                    s += self.lower[i - 1].norm();
                }
                if i + 1 < n {
                    s += self.upper[i].norm();
                }
                s
            })
            .fold(0.0, f64::max)
    }

    /// LU factorization with partial pivoting (LAPACK `gttrf` layout).
    pub fn factor(&self) -> Result<TridiagonalLu> {
        let n = self.len();
        let mut dl = self.lower.clone();
        let mut d = self.diag.clone();
        let mut du = self.upper.clone();
        let mut du2 = vec![C::new(0.0, 0.0); n.saturating_sub(2)];
        let mut swapped = vec![false; n.saturating_sub(1)];
        for i in 0..n.saturating_sub(1) {
            if d[i].norm() >= dl[i].norm() {
                if d[i].norm() == 0.0 {
                    return Err(Error::NearSpectrum { z: C::new(f64::NAN, f64::NAN), condition: f64::INFINITY });
                }
                let fact = dl[i] / d[i];
                dl[i] = fact;
                d[i + 1] -= fact * du[i];
            } else {
                let fact = d[i] / dl[i];
                d[i] = dl[i];
                dl[i] = fact;
                let temp = du[i];
                du[i] = d[i + 1];
                d[i + 1] = temp - fact * d[i + 1];
                if i + 2 < n {
                    du2[i] = du[i + 1];
                    du[i + 1] = -fact * du[i + 1];
                }
                swapped[i] = true;
            }
        }
        if d.iter().any(|v| v.norm() == 0.0 || !v.re.is_finite() || !v.im.is_finite()) {
            return Err(Error::NearSpectrum { z: C::new(f64::NAN, f64::NAN), condition: f64::INFINITY });
        }
        Ok(TridiagonalLu { dl, d, du, du2, swapped })
    }
}

/// Pivoted LU factors of a tridiagonal matrix.
#[derive(Debug, Clone)]
pub struct TridiagonalLu {
    dl: Vec<C>,
    d: Vec<C>,
    du: Vec<C>,
    du2: Vec<C>,
    swapped: Vec<bool>,
}

impl TridiagonalLu {
    pub fn len(&self) -> usize {
        self.d.len()
    }

    pub fn is_empty(&self) -> bool {
        self.d.is_empty()
    }

    /// Solves `A x = b` in place.
    pub fn solve_in_place(&self, b: &mut [C]) {
        let n = self.len();
        for i in 0..n.saturating_sub(1) {
            if self.swapped[i] {
                let temp = b[i];
                b[i] = b[i + 1];
                b[i + 1] = temp - self.dl[i] * b[i];
            } else {
                let t = self.dl[i] * b[i];
                b[i + 1] -= t;
            }
        }
        b[n - 1] /= self.d[n - 1];
        if n > 1 {
            b[n - 2] = (b[n - 2] - self.du[n - 2] * b[n - 1]) / self.d[n - 2];
        }
        for i in (0..n.saturating_sub(2)).rev() {
            b[i] = (b[i] - self.du[i] * b[i + 1] - self.du2[i] * b[i + 2]) / self.d[i];
        }
    }

    pub fn solve(&self, b: &[C]) -> Vec<C> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        x
    }

    /// Ratio of the largest to the smallest pivot modulus.
    pub fn pivot_ratio(&self) -> f64 {
        let (lo, hi) = self
            .d
            .iter()
            .map(|v| v.norm())
            .fold((f64::INFINITY, 0.0_f64), |(lo, hi), v| (lo.min(v), hi.max(v)));
        hi / lo
    }
}

/// Estimates `||A||_inf * ||A^{-1}||_2` for a factored tridiagonal matrix,
/// using a short power iteration on `A^{-H} A^{-1}`.
pub fn condition_estimate(matrix: &Tridiagonal, lu: &TridiagonalLu, lu_adjoint: &TridiagonalLu) -> f64 {
    let n = matrix.len();
    let mut v: Vec<C> = (0..n)
        .map(|i| C::new(1.0 + 0.37 * ((i * 7919) % 101) as f64 / 101.0, 0.0))
        .collect();
    normalize(&mut v);
    let mut sigma = 0.0;
    for _ in 0..12 {
        lu.solve_in_place(&mut v);
        lu_adjoint.solve_in_place(&mut v);
        let norm = l2(&v);
        if !norm.is_finite() || norm == 0.0 {
            return f64::INFINITY;
        }
        sigma = norm.sqrt();
        v.iter_mut().for_each(|x| *x /= norm);
    }
    matrix.norm_inf() * sigma
}

/// Lowest eigenpair of the real symmetric tridiagonal matrix with diagonal
/// `diag` and off-diagonal `off`, by Sturm-sequence bisection followed by
/// inverse iteration. The eigenvector has unit Euclidean norm and a
/// nonnegative sum.
pub fn lowest_symmetric_eigenpair(diag: &[f64], off: &[f64]) -> Result<(f64, Vec<f64>)> {
    let n = diag.len();
    if n == 0 || off.len() + 1 != n {
        return Err(Error::EigenSolver("inconsistent tridiagonal dimensions".into()));
    }
    if diag.iter().chain(off.iter()).any(|v| !v.is_finite()) {
        return Err(Error::EigenSolver("non-finite matrix entry".into()));
    }
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..n {
        let radius = if i > 0 { off[i - 1].abs() } else { 0.0 } + if i + 1 < n { off[i].abs() } else { 0.0 };
        lo = lo.min(diag[i] - radius);
        hi = hi.max(diag[i] + radius);
    }
    let scale = lo.abs().max(hi.abs()).max(1e-300);
    // Smallest eigenvalue: largest x with count_below(x) == 0.
    let (mut a, mut b) = (lo - 1e-12 * scale, hi + 1e-12 * scale);
    for _ in 0..200 {
        let mid = 0.5 * (a + b);
        if sturm_count_below(diag, off, mid) >= 1 {
            b = mid;
        } else {
            a = mid;
        }
        if b - a <= 4.0 * f64::EPSILON * scale {
            break;
        }
    }
    let lambda = 0.5 * (a + b);
    let vector = inverse_iteration(diag, off, lambda, scale)?;
    Ok((lambda, vector))
}

/// Number of eigenvalues strictly below `x`.
pub fn sturm_count_below(diag: &[f64], off: &[f64], x: f64) -> usize {
    let tiny = f64::MIN_POSITIVE.sqrt();
    let mut count = 0;
    let mut q = diag[0] - x;
    if q < 0.0 {
        count += 1;
    }
    for i in 1..diag.len() {
        if q.abs() < tiny {
            q = if q < 0.0 { -tiny } else { tiny };
        }
        q = diag[i] - x - off[i - 1] * off[i - 1] / q;
        if q < 0.0 {
            count += 1;
        }
    }
    count
}

fn inverse_iteration(diag: &[f64], off: &[f64], lambda: f64, scale: f64) -> Result<Vec<f64>> {
    let n = diag.len();
    let shift = lambda - 1e-12 * scale.max(1.0);
    let lower: Vec<C> = off.iter().map(|&v| C::new(v, 0.0)).collect();
    let d: Vec<C> = diag.iter().map(|&v| C::new(v - shift, 0.0)).collect();
    let matrix = Tridiagonal::new(lower.clone(), d, lower)?;
    let lu = matrix
        .factor()
        .map_err(|_| Error::EigenSolver("singular shifted matrix in inverse iteration".into()))?;
    let mut v = vec![C::new(1.0, 0.0); n];
    normalize(&mut v);
    for _ in 0..6 {
        lu.solve_in_place(&mut v);
        if v.iter().any(|x| !x.re.is_finite()) {
            return Err(Error::EigenSolver("inverse iteration overflow".into()));
        }
        normalize(&mut v);
    }
    let mut out: Vec<f64> = v.iter().map(|x| x.re).collect();
    if out.iter().sum::<f64>() < 0.0 {
        out.iter_mut().for_each(|x| *x = -*x);
    }
    Ok(out)
}

pub fn l2(v: &[C]) -> f64 {
    v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

pub fn normalize(v: &mut [C]) -> f64 {
    let norm = l2(v);
    if norm > 0.0 {
        v.iter_mut().for_each(|x| *x /= norm);
    }
    norm
}

/// `e^w - 1` without cancellation for small `|w|`.
pub fn expm1(w: C) -> C {
    if w.norm() < 0.1 {
        let mut term = w;
        let mut sum = w;
        for k in 2..30 {
            term *= w / k as f64;
            sum += term;
            if term.norm() < 1e-18 * sum.norm() {
                break;
            }
        }
        sum
    } else {
        w.exp() - 1.0
    }
}
