//! The left shift `L(x_1, x_2, ...) = (x_2, x_3, ...)` on sequences: its
//! resolvent outside the unit disk, boundary values on the unit circle and a
//! rank-one perturbation with a virtual level there.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::lap_sweep::{fit_exponent, sweep, OperatorSpec, SweepConfig, SweepPoint};

type C = Complex64;

/// Default truncation length.
pub const DEFAULT_LENGTH: usize = 512;
/// Entries near the truncation edge excluded from residuals.
pub const TAIL_BAND: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeqNorm {
    L1,
    L2,
    Linf,
}

/// First `n` entries of a sequence indexed from 1.
#[derive(Debug, Clone, PartialEq)]
pub struct SeqVector {
    pub entries: Vec<C>,
    pub flavor: SeqNorm,
    /// Bound on the norm of the discarded tail.
    pub tail: f64,
}

impl SeqVector {
    pub fn new(entries: Vec<C>, flavor: SeqNorm) -> Self {
        Self { entries, flavor, tail: 0.0 }
    }

    /// Finitely supported sequence padded with zeros to length `n`.
    pub fn padded(values: &[C], n: usize) -> Result<Self> {
        if values.len() > n {
            return Err(Error::InvalidInput(format!("{} entries do not fit length {n}", values.len())));
        }
        let mut entries = values.to_vec();
        entries.resize(n, C::new(0.0, 0.0));
        Ok(Self::new(entries, SeqNorm::L1))
    }

    /// Unit vector `e_j`, `j >= 1`.
    pub fn unit(j: usize, n: usize) -> Result<Self> {
        if j == 0 || j > n {
            return Err(Error::InvalidInput(format!("index {j} outside 1..={n}")));
        }
        let mut entries = vec![C::new(0.0, 0.0); n];
        entries[j - 1] = C::new(1.0, 0.0);
        Ok(Self::new(entries, SeqNorm::L1))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn l1(&self) -> f64 {
        self.entries.iter().map(|v| v.norm()).sum()
    }

    pub fn linf(&self) -> f64 {
        self.entries.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }
}

/// `y_i = -sum_{k>=0} z^{-(k+1)} x_{i+k}` by the backward recursion
/// `y_i = (y_{i+1} - x_i)/z`.
fn geometric_tail_sum(x: &[C], z: C) -> Vec<C> {
    let mut y = vec![C::new(0.0, 0.0); x.len()];
    let mut acc = C::new(0.0, 0.0);
    for i in (0..x.len()).rev() {
        acc = (acc - x[i]) / z;
        y[i] = acc;
    }
    y
}

/// `(L - z)^{-1} x` for `|z| > 1`.
pub fn shift_resolvent_apply(x: &SeqVector, z: C) -> Result<SeqVector> {
    if !(z.norm() > 1.0) {
        return Err(Error::OutsideResolventSet(z.norm()));
    }
    let mut y = SeqVector::new(geometric_tail_sum(&x.entries, z), SeqNorm::Linf);
    y.tail = x.tail / (z.norm() - 1.0);
    Ok(y)
}

/// Limit of `(L - z)^{-1} x` as `z -> z0`, `|z0| = 1`, for summable `x`.
pub fn shift_boundary_value(x: &SeqVector, z0: C) -> Result<SeqVector> {
    if (z0.norm() - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidInput(format!("|z0| = {} is not 1", z0.norm())));
    }
    if x.flavor != SeqNorm::L1 {
        return Err(Error::InvalidInput("boundary values need a summable sequence".into()));
    }
    if x.entries.iter().any(|v| !(v.re.is_finite() && v.im.is_finite())) {
        return Err(Error::InvalidInput("non-finite sequence entry".into()));
    }
    let mut y = SeqVector::new(geometric_tail_sum(&x.entries, z0), SeqNorm::Linf);
    y.tail = x.tail;
    Ok(y)
}

/// `(L - z)^{-1}` restricted to the first `n` coordinates: upper triangular
/// with entries `-z^{-(k+1)}` on the `k`-th superdiagonal.
pub fn truncated_shift_resolvent(n: usize, z: C) -> Result<DMatrix<C>> {
    if !(z.norm() > 1.0) {
        return Err(Error::OutsideResolventSet(z.norm()));
    }
    let inv = z.inv();
    let powers: Vec<C> = (0..n).scan(C::new(-1.0, 0.0), |p, _| {
        *p *= inv;
        Some(*p)
    })
    .collect();
    Ok(DMatrix::from_fn(n, n, |i, j| if j >= i { powers[j - i] } else { C::new(0.0, 0.0) }))
}

/// `l^1 -> l^inf` norm of a matrix: its largest entry.
pub fn l1_to_linf(m: &DMatrix<C>) -> f64 {
    m.iter().map(|v| v.norm()).fold(0.0, f64::max)
}

/// `A = L - K(L - z0)` with `K = phi <lambda, .>`, its virtual state and the
/// residual of `(A - z0) Psi` away from the truncation edge.
#[derive(Debug, Clone, PartialEq)]
pub struct ShiftVirtualLevel {
    pub z0: C,
    pub phi: SeqVector,
    /// `lambda = <e_j, .>/phi_j` with `j` (1-based) the largest entry of `phi`.
    pub functional_index: usize,
    pub functional_scale: C,
    pub psi: SeqVector,
    pub residual: f64,
    /// Dimension of the virtual-state space.
    pub dimension: usize,
}

impl ShiftVirtualLevel {
    fn lambda(&self, v: &[C]) -> C {
        v[self.functional_index - 1] * self.functional_scale
    }

    /// `A v` on the truncation (the last entry of `L v` is unknown and set to 0).
    pub fn apply(&self, v: &[C]) -> Vec<C> {
        let lv = shift_left(v);
        let d: Vec<C> = lv.iter().zip(v).map(|(a, b)| a - self.z0 * b).collect();
        let c = self.lambda(&d);
        lv.iter().zip(&self.phi.entries).map(|(a, p)| a - p * c).collect()
    }
}

fn shift_left(v: &[C]) -> Vec<C> {
    let mut out: Vec<C> = v.iter().skip(1).copied().collect();
    out.push(C::new(0.0, 0.0));
    out
}

pub fn build_shift_virtual_level(z0: C, phi: &SeqVector) -> Result<ShiftVirtualLevel> {
    build_shift_virtual_level_with(z0, phi, TAIL_BAND)
}

pub fn build_shift_virtual_level_with(z0: C, phi: &SeqVector, band: usize) -> Result<ShiftVirtualLevel> {
    let n = phi.len();
    if band >= n {
        return Err(Error::InvalidInput(format!("tail band {band} leaves no entries of {n}")));
    }
    let (index, peak) = phi
        .entries
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.norm().partial_cmp(&b.1.norm()).unwrap())
        .map(|(i, v)| (i + 1, *v))
        .ok_or(Error::DegenerateFunctional)?;
    if peak.norm() == 0.0 {
        return Err(Error::DegenerateFunctional);
    }
    let psi = shift_boundary_value(phi, z0)?;
    let mut level = ShiftVirtualLevel {
        z0,
        phi: phi.clone(),
        functional_index: index,
        functional_scale: peak.inv(),
        psi,
        residual: 0.0,
        dimension: 0,
    };
    let a_psi = level.apply(&level.psi.entries);
    level.residual = a_psi
        .iter()
        .zip(&level.psi.entries)
        .take(n - band)
        .map(|(a, p)| (a - z0 * p).norm())
        .fold(0.0, f64::max);
    // Virtual states are R(z0) phi c with c (1 - lambda(phi)) = 0.
    let defect = C::new(1.0, 0.0) - level.lambda(&phi.entries);
    level.dimension = usize::from(defect.norm() <= 1e-12);
    Ok(level)
}

/// Resolvent norms of a random rank-`rank` matrix `B` on `C^n` toward
/// `z0 = 0`. The zero operator has an exceptional point of infinite rank at
/// 0, so no finite-rank `B` removes the `1/|z|` growth.
pub fn exceptional_point_sweep(n: usize, rank: usize, seed: u64) -> Result<(f64, Vec<SweepPoint>)> {
    if rank >= n {
        return Err(Error::InvalidInput(format!("rank {rank} must be below the dimension {n}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut gaussian = |rows: usize, cols: usize| {
        DMatrix::from_fn(rows, cols, |_, _| {
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            C::new(re, im)
        })
    };
    let x = gaussian(n, rank);
    let y = gaussian(n, rank);
    let b = &x * y.adjoint() / C::new(n as f64, 0.0);
    let op = OperatorSpec::matrix(b)?;
    let cfg = SweepConfig::toward(C::new(0.0, 0.0), std::f64::consts::PI, 0.0)?;
    let points = sweep(&op, &cfg)?;
    let (alpha, _) = fit_exponent(&points)?;
    Ok((alpha, points))
}
