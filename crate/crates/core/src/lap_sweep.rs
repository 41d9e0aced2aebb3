//! Resolvent-norm sweeps `z = z0 + r e^{i theta}`, `r -> 0`, divergence
//! exponent fits and the regular/virtual classifier.
//!
//! Free operators use their closed-form kernels. Schrödinger operators use the
//! second-order finite-difference matrix `H - z` with the lattice-exact
//! transparent boundary condition: the ghost value beyond an edge node is
//! `mu u_edge`, where `mu` is the decaying root of `mu + 1/mu = 2 - h^2 z`.
//! This is the exact Dirichlet-to-Neumann map of the discrete exterior
//! problem, so truncating the grid only truncates the weights. Radial
//! problems carry `u(0) = 0`. Finite-rank perturbations enter through the
//! Woodbury formula, so every map costs `O(n)` per application.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::free_resolvent::{free_resolvent_map, sqrt_minus_z, SpectralParameter};
use crate::linalg::{l2, sturm_count_below, Tridiagonal, TridiagonalLu};
use crate::potential::Potential1D;
use crate::report::{Classification, ThresholdReport};
use crate::weighted_space::{
    l1_to_linf_norm, operator_norm_weighted, weighted_l2_norm, KernelOperator, LinearMap, Mesh, WeightExponent,
};

type C = Complex64;

/// Solves with condition estimates above this are reported as near-spectrum.
pub const CONDITION_LIMIT: f64 = 1e14;

/// Default divergence-exponent threshold between regular and virtual.
pub const DEFAULT_TOL_ALPHA: f64 = 0.1;

/// `x^power` on `[-a, a]` (or `[0, a]` on a radial mesh), with half weight at
/// the end nodes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Profile {
    pub power: u32,
    pub a: f64,
}

impl Profile {
    pub fn indicator(a: f64) -> Self {
        Self { power: 0, a }
    }

    pub fn sample(&self, points: &[f64]) -> Vec<C> {
        points
            .iter()
            .map(|&x| {
                let base = x.powi(self.power as i32);
                let w = if x.abs() < self.a {
                    1.0
                } else if x.abs() == self.a {
                    0.5
                } else {
                    0.0
                };
                C::new(base * w, 0.0)
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum OperatorKind {
    Free1D,
    Free2DRadial,
    Free3DRadial,
    Schrodinger1D(Potential1D),
    Schrodinger3DRadial(Potential1D),
    /// `-d^2/dx^2 + V + sum_k p_k <p_k, .>`.
    FiniteRankPerturbed1D {
        potential: Potential1D,
        profiles: Vec<Profile>,
    },
    /// An explicit matrix on `l^2` of its index set.
    Matrix(DMatrix<C>),
}

/// An operator together with its discretization.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorSpec {
    kind: OperatorKind,
    mesh: Mesh,
}

impl OperatorSpec {
    pub fn new(kind: OperatorKind, mesh: Mesh) -> Result<Self> {
        let ok = match (&kind, &mesh) {
            (OperatorKind::Free1D, Mesh::Line(_))
            | (OperatorKind::Schrodinger1D(_), Mesh::Line(_))
            | (OperatorKind::FiniteRankPerturbed1D { .. }, Mesh::Line(_))
            | (OperatorKind::Free2DRadial, Mesh::Radial(_))
            | (OperatorKind::Free3DRadial, Mesh::Radial(_))
            | (OperatorKind::Schrodinger3DRadial(_), Mesh::Radial(_)) => true,
            (OperatorKind::Matrix(m), Mesh::Lattice(p)) => m.is_square() && m.nrows() == p.len(),
            _ => false,
        };
        if !ok {
            return Err(Error::InvalidOperator(format!(
                "operator kind {} does not fit the given mesh",
                kind_name(&kind)
            )));
        }
        if let Some(v) = kind.potential() {
            if let Some((lo, hi)) = v.support() {
                let pts = mesh.points();
                let lo = if matches!(mesh, Mesh::Radial(_)) { lo.max(0.0) } else { lo };
                if lo < pts[0].min(0.0) || hi > pts[pts.len() - 1] {
                    return Err(Error::InvalidOperator(format!("potential support [{lo}, {hi}] exceeds the grid")));
                }
            }
        }
        Ok(Self { kind, mesh })
    }

    /// Matrix operator on the lattice `1..=n`.
    pub fn matrix(m: DMatrix<C>) -> Result<Self> {
        let n = m.nrows();
        Self::new(OperatorKind::Matrix(m), Mesh::lattice(n))
    }

    pub fn kind(&self) -> &OperatorKind {
        &self.kind
    }

    pub fn mesh(&self) -> &Mesh {
        &self.mesh
    }

    pub fn name(&self) -> &'static str {
        kind_name(&self.kind)
    }

    /// Same operator on a grid with half the spacing.
    pub fn refined(&self) -> Self {
        let mesh = match &self.mesh {
            Mesh::Line(g) => Mesh::Line(g.refined()),
            Mesh::Radial(g) => Mesh::Radial(g.refined()),
            Mesh::Lattice(p) => Mesh::Lattice(p.clone()),
        };
        Self { kind: self.kind.clone(), mesh }
    }

    /// Finite-difference counterpart of a free operator (the operator
    /// itself for the other kinds).
    pub fn finite_difference(&self) -> Self {
        let kind = match &self.kind {
            OperatorKind::Free1D => OperatorKind::Schrodinger1D(Potential1D::zero()),
            OperatorKind::Free3DRadial => OperatorKind::Schrodinger3DRadial(Potential1D::zero()),
            other => other.clone(),
        };
        Self { kind, mesh: self.mesh.clone() }
    }

    /// Adds `sum_k p_k <p_k, .>` to a one-dimensional operator.
    pub fn with_profiles(&self, extra: &[Profile]) -> Result<Self> {
        let (potential, mut profiles) = match &self.kind {
            OperatorKind::Free1D => (Potential1D::zero(), Vec::new()),
            OperatorKind::Schrodinger1D(v) => (v.clone(), Vec::new()),
            OperatorKind::FiniteRankPerturbed1D { potential, profiles } => (potential.clone(), profiles.clone()),
            _ => {
                return Err(Error::Unsupported(format!(
                    "finite-rank perturbations of {} operators",
                    self.name()
                )))
            }
        };
        profiles.extend_from_slice(extra);
        Self::new(OperatorKind::FiniteRankPerturbed1D { potential, profiles }, self.mesh.clone())
    }

    fn is_continuum(&self) -> bool {
        !matches!(self.kind, OperatorKind::Matrix(_))
    }

    /// Grid spacing must satisfy `h <= min(0.01, wavelength / 20)` at `|z|`.
    pub fn check_resolution(&self, max_abs_z: f64) -> Result<()> {
        if !self.is_continuum() {
            return Ok(());
        }
        let h = self.mesh.spacing();
        let wavelength = if max_abs_z > 0.0 { 2.0 * std::f64::consts::PI / max_abs_z.sqrt() } else { f64::INFINITY };
        let limit = (0.01_f64).min(wavelength / 20.0);
        if h > limit * (1.0 + 1e-9) {
            return Err(Error::Discretization(format!("grid spacing {h} exceeds {limit}")));
        }
        Ok(())
    }
}

impl OperatorKind {
    pub fn potential(&self) -> Option<&Potential1D> {
        match self {
            OperatorKind::Schrodinger1D(v) | OperatorKind::Schrodinger3DRadial(v) => Some(v),
            OperatorKind::FiniteRankPerturbed1D { potential, .. } => Some(potential),
            _ => None,
        }
    }
}

fn kind_name(kind: &OperatorKind) -> &'static str {
    match kind {
        OperatorKind::Free1D => "free1d",
        OperatorKind::Free2DRadial => "free2d",
        OperatorKind::Free3DRadial => "free3d",
        OperatorKind::Schrodinger1D(_) => "schrodinger1d",
        OperatorKind::Schrodinger3DRadial(_) => "schrodinger3d",
        OperatorKind::FiniteRankPerturbed1D { .. } => "perturbed1d",
        OperatorKind::Matrix(_) => "matrix",
    }
}

/// Decaying root of `mu + 1/mu = 2 - h^2 z`; on the unit circle the root
/// closest to `e^{-kh}` (outgoing for limits from the upper half-plane).
pub fn lattice_decay_root(z: C, h: f64, k: C) -> C {
    let b = C::new(2.0, 0.0) - z * (h * h);
    let disc = ((b - 2.0) * (b + 2.0)).sqrt();
    let m1 = (b - disc) * 0.5;
    let m2 = (b + disc) * 0.5;
    let (small, large) = if m1.norm() <= m2.norm() { (m1, m2) } else { (m2, m1) };
    if (small.norm() - 1.0).abs() > 1e-12 {
        return small;
    }
    let target = (-k * h).exp();
    if (small - target).norm() <= (large - target).norm() {
        small
    } else {
        large
    }
}

/// Tridiagonal `H - z` on a line or radial mesh.
pub fn finite_difference_matrix(mesh: &Mesh, potential: &Potential1D, p: &SpectralParameter) -> Result<Tridiagonal> {
    let z = p.z();
    let k = sqrt_minus_z(p)?.value();
    let h = mesh.spacing();
    let n = mesh.len();
    let inv_h2 = 1.0 / (h * h);
    let mu = lattice_decay_root(z, h, k);
    let mut diag: Vec<C> = mesh.points().iter().map(|&x| C::new(2.0 * inv_h2, 0.0) + potential.value(x) - z).collect();
    match mesh {
        Mesh::Line(_) => {
            diag[0] -= mu * inv_h2;
            diag[n - 1] -= mu * inv_h2;
        }
        Mesh::Radial(_) => diag[n - 1] -= mu * inv_h2,
        Mesh::Lattice(_) => return Err(Error::InvalidOperator("finite differences need a line or radial mesh".into())),
    }
    let off = vec![C::new(-inv_h2, 0.0); n - 1];
    Tridiagonal::new(off.clone(), diag, off)
}

/// `(A - z)^{-1}` for `A` tridiagonal plus a low-rank term `sum_k u_k w_k^H`.
#[derive(Debug, Clone)]
pub struct FdResolvent {
    mesh: Mesh,
    z: C,
    lu: TridiagonalLu,
    lu_adjoint: TridiagonalLu,
    u: Vec<Vec<C>>,
    w: Vec<Vec<C>>,
    p: Vec<Vec<C>>,
    q: Vec<Vec<C>>,
    capacitance: Option<(nalgebra::LU<C, nalgebra::Dyn, nalgebra::Dyn>, nalgebra::LU<C, nalgebra::Dyn, nalgebra::Dyn>)>,
    condition: f64,
}

fn dot(a: &[C], b: &[C]) -> C {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

impl FdResolvent {
    /// Factors `matrix + sum_k u_k w_k^H`. A singular tridiagonal part is
    /// shifted by a rank-one diagonal term that is added back through the
    /// low-rank correction.
    pub fn new(mesh: Mesh, z: C, matrix: Tridiagonal, mut u: Vec<Vec<C>>, mut w: Vec<Vec<C>>) -> Result<Self> {
        let near = |condition: f64| Error::NearSpectrum { z, condition };
        let base_norm = matrix.norm_inf();
        let mut base = matrix;
        let mut factored = base.factor().ok();
        if let Some(lu) = &factored {
            let adj = base.adjoint().factor().map_err(|_| near(f64::INFINITY))?;
            if crate::linalg::condition_estimate(&base, lu, &adj) > CONDITION_LIMIT && !u.is_empty() {
                factored = None;
            }
        }
        let lu = match factored {
            Some(lu) => lu,
            None if !u.is_empty() => {
                let c = base.len() / 2;
                let sigma = C::new(base_norm.max(1.0), 0.0);
                base.diag[c] += sigma;
                let mut e = vec![C::new(0.0, 0.0); base.len()];
                e[c] = C::new(1.0, 0.0);
                u.push(e.iter().map(|v| -v * sigma).collect());
                w.push(e);
                base.factor().map_err(|_| near(f64::INFINITY))?
            }
            None => return Err(near(f64::INFINITY)),
        };
        let lu_adjoint = base.adjoint().factor().map_err(|_| near(f64::INFINITY))?;
        let p: Vec<Vec<C>> = u.iter().map(|col| lu.solve(col)).collect();
        let q: Vec<Vec<C>> = w.iter().map(|col| lu_adjoint.solve(col)).collect();
        let capacitance = if u.is_empty() {
            None
        } else {
            let r = u.len();
            let s = DMatrix::from_fn(r, r, |i, j| if i == j { C::new(1.0, 0.0) } else { C::new(0.0, 0.0) } + dot(&w[i], &p[j]));
            let s_adj = s.adjoint();
            let lu_s = s.lu();
            if !lu_s.is_invertible() {
                return Err(near(f64::INFINITY));
            }
            Some((lu_s, s_adj.lu()))
        };
        let low_rank_norm: f64 = u
            .iter()
            .zip(&w)
            .map(|(a, b)| a.iter().map(|v| v.norm()).fold(0.0, f64::max) * b.iter().map(|v| v.norm()).sum::<f64>())
            .sum();
        let mut out = Self { mesh, z, lu, lu_adjoint, u, w, p, q, capacitance, condition: 0.0 };
        let condition = (base_norm + low_rank_norm) * out.inverse_norm_estimate();
        if !condition.is_finite() || condition > CONDITION_LIMIT {
            return Err(near(condition));
        }
        out.condition = condition;
        Ok(out)
    }

    fn inverse_norm_estimate(&self) -> f64 {
        let n = self.mesh.len();
        let mut v: Vec<C> = (0..n).map(|i| C::new(1.0 + 0.37 * ((i * 7919) % 101) as f64 / 101.0, 0.0)).collect();
        let norm = l2(&v);
        v.iter_mut().for_each(|x| *x /= norm);
        let mut sigma = 0.0;
        for _ in 0..12 {
            let mut y = self.solve_adjoint(&self.solve(&v));
            let norm = l2(&y);
            if !norm.is_finite() || norm == 0.0 {
                return f64::INFINITY;
            }
            sigma = norm.sqrt();
            y.iter_mut().for_each(|x| *x /= norm);
            v = y;
        }
        sigma
    }

    pub fn z(&self) -> C {
        self.z
    }

    pub fn condition(&self) -> f64 {
        self.condition
    }

    /// `x = (A - z)^{-1} f`.
    pub fn solve(&self, f: &[C]) -> Vec<C> {
        let mut x = self.lu.solve(f);
        if let Some((s, _)) = &self.capacitance {
            let c = nalgebra::DVector::from_iterator(self.w.len(), self.w.iter().map(|w| dot(w, &x)));
            let y = s.solve(&c).expect("invertible capacitance matrix");
            for (pk, yk) in self.p.iter().zip(y.iter()) {
                x.iter_mut().zip(pk).for_each(|(xi, pi)| *xi -= pi * yk);
            }
        }
        x
    }

    /// `x = (A - z)^{-H} g`.
    pub fn solve_adjoint(&self, g: &[C]) -> Vec<C> {
        let mut x = self.lu_adjoint.solve(g);
        if let Some((_, s_adj)) = &self.capacitance {
            let c = nalgebra::DVector::from_iterator(self.u.len(), self.u.iter().map(|u| dot(u, &x)));
            let y = s_adj.solve(&c).expect("invertible capacitance matrix");
            for (qk, yk) in self.q.iter().zip(y.iter()) {
                x.iter_mut().zip(qk).for_each(|(xi, qi)| *xi -= qi * yk);
            }
        }
        x
    }

    /// Dense kernel `(A - z)^{-1} / h`.
    pub fn to_dense(&self) -> Result<KernelOperator> {
        let n = self.mesh.len();
        let h = self.mesh.spacing();
        let columns: Vec<Vec<C>> = (0..n)
            .into_par_iter()
            .map(|j| {
                let mut e = vec![C::new(0.0, 0.0); n];
                e[j] = C::new(1.0 / h, 0.0);
                self.solve(&e)
            })
            .collect();
        let entries = DMatrix::from_fn(n, n, |i, j| columns[j][i]);
        KernelOperator::new(self.mesh.clone(), self.mesh.clone(), entries)
    }
}

impl LinearMap for FdResolvent {
    fn mesh_in(&self) -> &Mesh {
        &self.mesh
    }

    fn mesh_out(&self) -> &Mesh {
        &self.mesh
    }

    fn apply(&self, f: &[C]) -> Result<Vec<C>> {
        if f.len() != self.mesh.len() {
            return Err(Error::Dimension { expected: self.mesh.len(), got: f.len() });
        }
        Ok(self.solve(f))
    }

    fn apply_adjoint(&self, g: &[C]) -> Result<Vec<C>> {
        if g.len() != self.mesh.len() {
            return Err(Error::Dimension { expected: self.mesh.len(), got: g.len() });
        }
        Ok(self.solve_adjoint(g))
    }
}

/// Finite-difference resolvent of a Schrödinger-type operator (free kinds
/// are replaced by their finite-difference counterparts).
pub fn fd_resolvent(op: &OperatorSpec, p: &SpectralParameter) -> Result<FdResolvent> {
    let op = op.finite_difference();
    let (potential, profiles) = match op.kind() {
        OperatorKind::Schrodinger1D(v) | OperatorKind::Schrodinger3DRadial(v) => (v.clone(), Vec::new()),
        OperatorKind::FiniteRankPerturbed1D { potential, profiles } => (potential.clone(), profiles.clone()),
        _ => {
            return Err(Error::Unsupported(format!("finite differences for {} operators", op.name())));
        }
    };
    let matrix = finite_difference_matrix(op.mesh(), &potential, p)?;
    let h = op.mesh().spacing();
    let u: Vec<Vec<C>> = profiles.iter().map(|pr| pr.sample(op.mesh().points())).collect();
    let w: Vec<Vec<C>> = u.iter().map(|col| col.iter().map(|v| v * h).collect()).collect();
    FdResolvent::new(op.mesh().clone(), p.z(), matrix, u, w)
}

fn matrix_resolvent(m: &DMatrix<C>, mesh: &Mesh, z: C) -> Result<KernelOperator> {
    let n = m.nrows();
    let shifted = m - DMatrix::<C>::identity(n, n) * z;
    let sv = shifted.clone().svd(false, false).singular_values;
    let max = sv.iter().cloned().fold(0.0, f64::max);
    let min = sv.iter().cloned().fold(f64::INFINITY, f64::min);
    if !(min > 0.0) || max / min > CONDITION_LIMIT {
        return Err(Error::NearSpectrum { z, condition: max / min });
    }
    let inv = shifted.try_inverse().ok_or(Error::NearSpectrum { z, condition: f64::INFINITY })?;
    KernelOperator::new(mesh.clone(), mesh.clone(), inv)
}

/// Dense resolvent kernel of `op` at `p`.
pub fn resolvent_matrix(op: &OperatorSpec, p: &SpectralParameter) -> Result<KernelOperator> {
    match op.kind() {
        OperatorKind::Free1D => free_resolvent_map(1, op.mesh(), p)?.to_dense(),
        OperatorKind::Free2DRadial => free_resolvent_map(2, op.mesh(), p)?.to_dense(),
        OperatorKind::Free3DRadial => free_resolvent_map(3, op.mesh(), p)?.to_dense(),
        OperatorKind::Matrix(m) => matrix_resolvent(m, op.mesh(), p.z()),
        _ => fd_resolvent(op, p)?.to_dense(),
    }
}

/// Resolvent of `op` at `p` as a linear-cost map (dense for matrices).
pub fn resolvent_map(op: &OperatorSpec, p: &SpectralParameter) -> Result<Box<dyn LinearMap>> {
    Ok(match op.kind() {
        OperatorKind::Free1D => Box::new(free_resolvent_map(1, op.mesh(), p)?),
        OperatorKind::Free2DRadial => Box::new(free_resolvent_map(2, op.mesh(), p)?),
        OperatorKind::Free3DRadial => Box::new(free_resolvent_map(3, op.mesh(), p)?),
        OperatorKind::Matrix(m) => Box::new(matrix_resolvent(m, op.mesh(), p.z())?),
        _ => Box::new(fd_resolvent(op, p)?),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NormFlavor {
    WeightedL2,
    L1ToLinf,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub z0: C,
    pub angle: f64,
    pub radii: Vec<f64>,
    pub s_in: WeightExponent,
    pub s_out: WeightExponent,
    pub flavor: NormFlavor,
}

impl SweepConfig {
    pub const DEFAULT_R0: f64 = 1e-2;
    pub const DEFAULT_COUNT: usize = 9;

    /// Default ratio: nine radii spanning three decades.
    pub fn default_ratio() -> f64 {
        10f64.powf(-3.0 / 8.0)
    }

    /// Geometric radii `r0 rho^k`, `k = 0..count`.
    pub fn geometric_radii(r0: f64, rho: f64, count: usize) -> Vec<f64> {
        (0..count).map(|k| r0 * rho.powi(k as i32)).collect()
    }

    pub fn new(z0: C, angle: f64, radii: Vec<f64>, s_in: f64, s_out: f64, flavor: NormFlavor) -> Result<Self> {
        let cfg = Self { z0, angle, radii, s_in: WeightExponent::new(s_in)?, s_out: WeightExponent::new(s_out)?, flavor };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Default radii toward `z0` along `angle` with `s = s'`.
    pub fn toward(z0: C, angle: f64, s: f64) -> Result<Self> {
        let radii = Self::geometric_radii(Self::DEFAULT_R0, Self::default_ratio(), Self::DEFAULT_COUNT);
        Self::new(z0, angle, radii, s, s, NormFlavor::WeightedL2)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.z0.re.is_finite() && self.z0.im.is_finite()) || !self.angle.is_finite() {
            return Err(Error::InvalidInput("non-finite sweep threshold or angle".into()));
        }
        if !(0.0..2.0 * std::f64::consts::PI).contains(&self.angle) {
            return Err(Error::InvalidInput(format!("ray angle {} outside [0, 2 pi)", self.angle)));
        }
        if self.radii.len() < 5 {
            return Err(Error::InvalidInput(format!("need at least 5 radii, got {}", self.radii.len())));
        }
        if self.radii.iter().any(|r| !(*r > 0.0) || !r.is_finite()) {
            return Err(Error::InvalidInput("radii must be positive".into()));
        }
        let max = self.radii.iter().cloned().fold(0.0, f64::max);
        let min = self.radii.iter().cloned().fold(f64::INFINITY, f64::min);
        if max / min < 1e3 * (1.0 - 1e-9) {
            return Err(Error::InvalidInput(format!("radii span {:.3} decades, need 3", (max / min).log10())));
        }
        Ok(())
    }

    pub fn point(&self, radius: f64) -> C {
        self.z0 + C::from_polar(radius, self.angle)
    }
}

/// One sweep sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepPoint {
    pub radius: f64,
    pub z: C,
    pub norm: f64,
}

fn sweep_parameter(op: &OperatorSpec, z: C) -> Result<SpectralParameter> {
    if op.is_continuum() && z.im == 0.0 && z.re >= 0.0 {
        return Err(Error::InvalidInput(format!("sweep point z = {z} lies on [0, inf)")));
    }
    SpectralParameter::interior(z)
}

fn norm_at(op: &OperatorSpec, cfg: &SweepConfig, radius: f64) -> Result<SweepPoint> {
    let z = cfg.point(radius);
    let p = sweep_parameter(op, z)?;
    let norm = match cfg.flavor {
        NormFlavor::WeightedL2 => operator_norm_weighted(resolvent_map(op, &p)?.as_ref(), cfg.s_in, cfg.s_out)?,
        NormFlavor::L1ToLinf => l1_to_linf_norm(&resolvent_matrix(op, &p)?),
    };
    Ok(SweepPoint { radius, z, norm })
}

/// Resolvent norms along the ray, one per radius, in the order of
/// `cfg.radii`. Radii are evaluated in parallel.
pub fn sweep(op: &OperatorSpec, cfg: &SweepConfig) -> Result<Vec<SweepPoint>> {
    cfg.validate()?;
    let max_z = cfg.radii.iter().map(|&r| cfg.point(r).norm()).fold(0.0, f64::max);
    op.check_resolution(max_z)?;
    let results: Vec<Result<SweepPoint>> = cfg.radii.par_iter().map(|&r| norm_at(op, cfg, r)).collect();
    let mut partial = Vec::new();
    let mut failure = None;
    for r in results {
        match r {
            Ok(p) => partial.push(p),
            Err(e) if failure.is_none() => failure = Some(e),
            Err(_) => {}
        }
    }
    match failure {
        None => Ok(partial),
        Some(source) => Err(Error::SweepAborted { partial, source: Box::new(source) }),
    }
}

fn linear_fit(xs: &[f64], ys: &[f64]) -> Result<(f64, f64)> {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my) * (y - my)).sum();
    if !(sxx > 1e-24 * xs.iter().map(|x| x * x).sum::<f64>().max(1e-300)) {
        return Err(Error::Fit("degenerate abscissae".into()));
    }
    let slope = sxy / sxx;
    let r_squared = if syy <= 1e-30 * ys.iter().map(|y| y * y).sum::<f64>().max(1e-300) {
        1.0
    } else {
        let ss_res: f64 = xs.iter().zip(ys).map(|(x, y)| {
            let e = y - my - slope * (x - mx);
            e * e
        }).sum();
        (1.0 - ss_res / syy).max(0.0)
    };
    Ok((slope, r_squared))
}

fn check_points(points: &[SweepPoint]) -> Result<()> {
    if points.len() < 4 {
        return Err(Error::Fit(format!("need at least 4 points, got {}", points.len())));
    }
    if points.iter().any(|p| !(p.norm > 0.0) || !p.norm.is_finite() || !(p.radius > 0.0)) {
        return Err(Error::Fit("norms and radii must be positive and finite".into()));
    }
    Ok(())
}

/// Least-squares slope `alpha` of `log(norm)` against `-log(radius)`, and
/// the coefficient of determination.
pub fn fit_exponent(points: &[SweepPoint]) -> Result<(f64, f64)> {
    check_points(points)?;
    let xs: Vec<f64> = points.iter().map(|p| -p.radius.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.norm.ln()).collect();
    linear_fit(&xs, &ys)
}

/// Slope and `r^2` of `norm` against `log(1/radius)`.
pub fn fit_log_growth(points: &[SweepPoint]) -> Result<(f64, f64)> {
    check_points(points)?;
    let xs: Vec<f64> = points.iter().map(|p| -p.radius.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.norm).collect();
    linear_fit(&xs, &ys)
}

/// Ratio of the norm increment over the last decade of radii to that over
/// the first decade; about 1 for logarithmic growth, below 1 when the norms
/// converge.
fn decade_increment_ratio(points: &[SweepPoint]) -> Option<f64> {
    let mut sorted = points.to_vec();
    sorted.sort_by(|a, b| b.radius.partial_cmp(&a.radius).unwrap());
    let first = sorted.first()?;
    let last = sorted.last()?;
    let at = |target: f64| {
        sorted
            .iter()
            .min_by(|a, b| (a.radius.ln() - target.ln()).abs().partial_cmp(&(b.radius.ln() - target.ln()).abs()).unwrap())
            .copied()
    };
    let a = at(first.radius / 10.0)?;
    let b = at(last.radius * 10.0)?;
    let first_step = (a.norm - first.norm) / (first.radius / a.radius).log10();
    let last_step = (last.norm - b.norm) / (b.radius / last.radius).log10();
    if first_step <= 0.0 {
        return None;
    }
    Some(last_step / first_step)
}

/// Verdict from sweep data alone (no refinement).
pub fn classify_points(points: &[SweepPoint], tol_alpha: f64) -> Result<ThresholdReport> {
    let (alpha, r_squared) = fit_exponent(points)?;
    let (slope, r2_log) = fit_log_growth(points)?;
    let ratio = decade_increment_ratio(points).unwrap_or(0.0);
    let growth = {
        let mut sorted = points.to_vec();
        sorted.sort_by(|a, b| b.radius.partial_cmp(&a.radius).unwrap());
        sorted.last().unwrap().norm / sorted[0].norm - 1.0
    };
    let log = slope > 0.0 && r2_log >= 0.99 && ratio >= 0.75 && growth > 0.05;
    let classification = if log && (alpha <= tol_alpha || r2_log >= r_squared) {
        Classification::Virtual { rank: None, states: Vec::new(), log: true }
    } else if alpha <= tol_alpha {
        Classification::Regular
    } else if r_squared >= 0.95 {
        Classification::Virtual { rank: None, states: Vec::new(), log: false }
    } else {
        Classification::Inconclusive
    };
    let mut report = ThresholdReport::new(classification);
    report.diagnostics.insert("log_slope".into(), slope);
    report.diagnostics.insert("log_r_squared".into(), r2_log);
    report.diagnostics.insert("decade_increment_ratio".into(), ratio);
    report.alpha = Some(alpha);
    report.r_squared = Some(r_squared);
    report.points = points.to_vec();
    Ok(report)
}

/// Sweeps on the operator grid and on its refinement and classifies; the
/// two verdicts must agree, otherwise the result is Inconclusive.
/// Virtual verdicts of one-dimensional operators at real `z0 <= 0` get
/// their rank and states from the regularization search.
pub fn classify(op: &OperatorSpec, cfg: &SweepConfig, tol_alpha: f64) -> Result<ThresholdReport> {
    let coarse = classify_points(&sweep(op, cfg)?, tol_alpha)?;
    let fine = classify_points(&sweep(&op.refined(), cfg)?, tol_alpha)?;
    let mut report = coarse;
    if let Some(a) = fine.alpha {
        report.diagnostics.insert("alpha_refined".into(), a);
    }
    if report.classification.label() != fine.classification.label() {
        report.notes.push(format!(
            "verdict changed under refinement: {} vs {}",
            report.classification.label(),
            fine.classification.label()
        ));
        report.classification = Classification::Inconclusive;
        return Ok(report);
    }
    let searchable = matches!(
        op.kind(),
        OperatorKind::Free1D | OperatorKind::Schrodinger1D(_) | OperatorKind::FiniteRankPerturbed1D { .. }
    ) && cfg.z0.im == 0.0
        && cfg.z0.re <= 0.0;
    if let Classification::Virtual { log, .. } = report.classification {
        if searchable {
            match crate::perturbation::regularization_search(op, cfg, tol_alpha, 3)? {
                Some(reg) => {
                    report.diagnostics.insert("state_residual".into(), reg.residual);
                    report.notes.push(format!("regularized by {} profile(s)", reg.profiles.len()));
                    report.classification = Classification::Virtual { rank: Some(reg.rank), states: reg.states, log };
                }
                None => report.notes.push("no regularizing perturbation found up to rank 3".into()),
            }
        }
    }
    Ok(report)
}

/// Residual `|(H - z0) psi|_{L^2_{-s}} / |psi|_{L^2_{-s}}` of a candidate
/// state of a one-dimensional or radial finite-difference operator.
pub fn state_residual(op: &OperatorSpec, z0: C, psi: &[C], s: WeightExponent) -> Result<f64> {
    let p = SpectralParameter::new(z0, if z0.im == 0.0 && z0.re >= 0.0 {
        crate::free_resolvent::Approach::FromUpperHalfPlane
    } else {
        crate::free_resolvent::Approach::Interior
    })?;
    let op = op.finite_difference();
    let potential = op.kind().potential().cloned().unwrap_or_else(Potential1D::zero);
    let matrix = finite_difference_matrix(op.mesh(), &potential, &p)?;
    let mut r = matrix.matvec(psi);
    if let OperatorKind::FiniteRankPerturbed1D { profiles, .. } = op.kind() {
        let h = op.mesh().spacing();
        for pr in profiles {
            let col = pr.sample(op.mesh().points());
            let c = dot(&col, psi) * h;
            r.iter_mut().zip(&col).for_each(|(ri, ci)| *ri += ci * c);
        }
    }
    let num = weighted_l2_norm(&r, op.mesh(), -s)?;
    let den = weighted_l2_norm(psi, op.mesh(), -s)?;
    Ok(num / den)
}

/// Discrete eigenvalue of the finite-difference `H = -d^2/dx^2 + V` (real
/// `V`) in `[lo, hi]`, `hi < 0`, located by bisection on the inertia of
/// `H - z` (which loses one positive eigenvalue as `z` crosses it).
pub fn discrete_eigenvalue(op: &OperatorSpec, lo: f64, hi: f64) -> Result<f64> {
    if !(lo < hi && hi < 0.0) {
        return Err(Error::InvalidInput(format!("need lo < hi < 0, got [{lo}, {hi}]")));
    }
    let op = op.finite_difference();
    let potential = match op.kind() {
        OperatorKind::Schrodinger1D(v) | OperatorKind::Schrodinger3DRadial(v) if v.is_real() => v.clone(),
        _ => return Err(Error::Unsupported("discrete eigenvalues need a real Schrödinger operator".into())),
    };
    let count = |z: f64| -> Result<usize> {
        let m = finite_difference_matrix(op.mesh(), &potential, &SpectralParameter::real(z)?)?;
        let diag: Vec<f64> = m.diag.iter().map(|v| v.re).collect();
        let off: Vec<f64> = m.lower.iter().map(|v| v.re).collect();
        Ok(sturm_count_below(&diag, &off, 0.0))
    };
    let (mut a, mut b) = (lo, hi);
    let (ca, cb) = (count(a)?, count(b)?);
    if ca == cb {
        return Err(Error::NoBoundState(format!("no discrete eigenvalue in [{lo}, {hi}]")));
    }
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if b - a <= 4.0 * f64::EPSILON * m.abs() {
            break;
        }
        if count(m)? == ca {
            a = m;
        } else {
            b = m;
        }
    }
    Ok(0.5 * (a + b))
}
