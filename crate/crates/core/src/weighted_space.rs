//! Grids, weights `<x>^s = (1 + x^2)^{s/2}`, and operator norms of sampled
//! integral operators between weighted `L^2` spaces and from `L^1` to `L^inf`.
//!
//! An integral operator `f -> int K(x, y) f(y) dy` is represented on a grid by
//! its kernel samples `K(x_i, y_j)` together with the quadrature weight of the
//! input grid (uniform trapezoid weights, endpoint corrections dropped).

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::linalg::{l2, normalize};

type C = Complex64;

/// Largest dense dimension for which a failed power iteration falls back to a
/// full SVD.
pub const SVD_FALLBACK_MAX_DIM: usize = 2000;

const POWER_SEED: u64 = 0x5eed_0f_1e7e1;
const POWER_MAX_ITER: usize = 20_000;
const POWER_REL_TOL: f64 = 1e-13;

/// Uniform symmetric grid on `[-R, R]` with an odd number of points, so that
/// `x = 0` is the middle node exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid1D {
    half_width: f64,
    spacing: f64,
    points: Vec<f64>,
}

impl Grid1D {
    pub fn new(half_width: f64, n_points: usize) -> Result<Self> {
        if !(half_width > 0.0) || !half_width.is_finite() {
            return Err(Error::InvalidInput(format!("grid half-width must be positive, got {half_width}")));
        }
        if n_points < 3 || n_points % 2 == 0 {
            return Err(Error::InvalidInput(format!("grid size must be odd and >= 3, got {n_points}")));
        }
        let m = (n_points - 1) / 2;
        let spacing = half_width / m as f64;
        let points = (0..n_points).map(|i| (i as f64 - m as f64) * spacing).collect();
        Ok(Self { half_width, spacing, points })
    }

    /// Grid on `[-R, R]` whose spacing is the largest value `<= spacing` that
    /// divides `R` evenly.
    pub fn with_spacing(half_width: f64, spacing: f64) -> Result<Self> {
        if !(spacing > 0.0) || !spacing.is_finite() {
            return Err(Error::InvalidInput(format!("grid spacing must be positive, got {spacing}")));
        }
        let m = (half_width / spacing - 1e-9).ceil().max(1.0) as usize;
        Self::new(half_width, 2 * m + 1)
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    /// Index of the middle node, `x = 0`.
    pub fn center(&self) -> usize {
        (self.points.len() - 1) / 2
    }

    /// Same interval, half the spacing.
    pub fn refined(&self) -> Self {
        Self::new(self.half_width, 2 * self.points.len() - 1).expect("refinement of a valid grid")
    }
}

/// Uniform grid `r_i = i h`, `i = 1..=n`, on `(0, R]`.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialGrid {
    radius: f64,
    spacing: f64,
    points: Vec<f64>,
}

impl RadialGrid {
    pub fn new(radius: f64, n_points: usize) -> Result<Self> {
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(Error::InvalidInput(format!("radial extent must be positive, got {radius}")));
        }
        if n_points < 2 {
            return Err(Error::InvalidInput("radial grid needs at least 2 points".into()));
        }
        let spacing = radius / n_points as f64;
        let points = (1..=n_points).map(|i| i as f64 * spacing).collect();
        Ok(Self { radius, spacing, points })
    }

    pub fn with_spacing(radius: f64, spacing: f64) -> Result<Self> {
        if !(spacing > 0.0) || !spacing.is_finite() {
            return Err(Error::InvalidInput(format!("grid spacing must be positive, got {spacing}")));
        }
        Self::new(radius, (radius / spacing - 1e-9).ceil().max(2.0) as usize)
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn refined(&self) -> Self {
        Self::new(self.radius, 2 * self.points.len()).expect("refinement of a valid grid")
    }
}

/// Sample points and quadrature weight of a discretized space.
#[derive(Debug, Clone, PartialEq)]
pub enum Mesh {
    Line(Grid1D),
    Radial(RadialGrid),
    /// Sequence indices `1..=n` with counting measure.
    Lattice(Vec<f64>),
}

impl Mesh {
    pub fn lattice(n: usize) -> Self {
        Mesh::Lattice((1..=n).map(|i| i as f64).collect())
    }

    pub fn points(&self) -> &[f64] {
        match self {
            Mesh::Line(g) => g.points(),
            Mesh::Radial(g) => g.points(),
            Mesh::Lattice(p) => p,
        }
    }

    pub fn spacing(&self) -> f64 {
        match self {
            Mesh::Line(g) => g.spacing(),
            Mesh::Radial(g) => g.spacing(),
            Mesh::Lattice(_) => 1.0,
        }
    }

    pub fn len(&self) -> usize {
        self.points().len()
    }

    pub fn is_empty(&self) -> bool {
        self.points().is_empty()
    }
}

/// Weight exponent `s` of `L^2_s`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct WeightExponent(f64);

impl WeightExponent {
    pub fn new(s: f64) -> Result<Self> {
        if !s.is_finite() {
            return Err(Error::InvalidInput(format!("weight exponent must be finite, got {s}")));
        }
        Ok(Self(s))
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl std::ops::Neg for WeightExponent {
    type Output = Self;
    fn neg(self) -> Self {
        Self(-self.0)
    }
}

/// `<x>^s = (1 + x^2)^{s/2}`.
pub fn weight(x: f64, s: WeightExponent) -> f64 {
    (1.0 + x * x).powf(0.5 * s.0)
}

/// `(h sum_i <x_i>^{2s} |f_i|^2)^{1/2}`.
pub fn weighted_l2_norm(f: &[C], mesh: &Mesh, s: WeightExponent) -> Result<f64> {
    if f.len() != mesh.len() {
        return Err(Error::Dimension { expected: mesh.len(), got: f.len() });
    }
    let sum: f64 = f
        .iter()
        .zip(mesh.points())
        .map(|(v, &x)| {
            let w = weight(x, s);
            w * w * v.norm_sqr()
        })
        .sum();
    Ok((mesh.spacing() * sum).sqrt())
}

/// A discretized integral operator acting on grid samples.
///
/// `apply` returns `(K f)(x_i) = sum_j K(x_i, y_j) f(y_j) h_in`;
/// `apply_adjoint` is the `L^2` adjoint, `(K* g)(y_j) = sum_i conj K(x_i, y_j) g(x_i) h_out`.
pub trait LinearMap: Sync {
    fn mesh_in(&self) -> &Mesh;
    fn mesh_out(&self) -> &Mesh;
    fn apply(&self, f: &[C]) -> Result<Vec<C>>;
    fn apply_adjoint(&self, g: &[C]) -> Result<Vec<C>>;

    /// Dense kernel samples, when cheaply available.
    fn dense(&self) -> Option<&KernelOperator> {
        None
    }
}

/// Dense kernel samples `K(x_i, y_j)` on `mesh_out x mesh_in`.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelOperator {
    mesh_in: Mesh,
    mesh_out: Mesh,
    entries: DMatrix<C>,
}

impl KernelOperator {
    pub fn new(mesh_in: Mesh, mesh_out: Mesh, entries: DMatrix<C>) -> Result<Self> {
        if entries.nrows() != mesh_out.len() {
            return Err(Error::Dimension { expected: mesh_out.len(), got: entries.nrows() });
        }
        if entries.ncols() != mesh_in.len() {
            return Err(Error::Dimension { expected: mesh_in.len(), got: entries.ncols() });
        }
        if let Some(bad) = entries.iter().find(|v| !(v.re.is_finite() && v.im.is_finite())) {
            return Err(Error::InvalidOperator(format!("non-finite kernel entry {bad}")));
        }
        Ok(Self { mesh_in, mesh_out, entries })
    }

    /// Square operator on one mesh with kernel `kernel(x_i, x_j)`.
    pub fn from_fn(mesh: Mesh, mut kernel: impl FnMut(usize, usize) -> C) -> Result<Self> {
        let n = mesh.len();
        let entries = DMatrix::from_fn(n, n, |i, j| kernel(i, j));
        Self::new(mesh.clone(), mesh, entries)
    }

    pub fn entries(&self) -> &DMatrix<C> {
        &self.entries
    }

    pub fn quadrature_weight(&self) -> f64 {
        self.mesh_in.spacing()
    }

    /// Conjugate-transpose kernel, mapping `mesh_out` back to `mesh_in`.
    pub fn adjoint(&self) -> Self {
        Self {
            mesh_in: self.mesh_out.clone(),
            mesh_out: self.mesh_in.clone(),
            entries: self.entries.adjoint(),
        }
    }

    /// Weighted matrix `<x_i>^{-s_out} K_ij <y_j>^{-s_in} sqrt(h_in h_out)`,
    /// whose spectral norm is the `L^2_{s_in} -> L^2_{-s_out}` norm.
    pub fn weighted_matrix(&self, s_in: WeightExponent, s_out: WeightExponent) -> DMatrix<C> {
        let scale = (self.mesh_in.spacing() * self.mesh_out.spacing()).sqrt();
        let w_out: Vec<f64> = self.mesh_out.points().iter().map(|&x| weight(x, -s_out)).collect();
        let w_in: Vec<f64> = self.mesh_in.points().iter().map(|&y| weight(y, -s_in)).collect();
        DMatrix::from_fn(self.entries.nrows(), self.entries.ncols(), |i, j| {
            self.entries[(i, j)] * (w_out[i] * w_in[j] * scale)
        })
    }
}

impl LinearMap for KernelOperator {
    fn mesh_in(&self) -> &Mesh {
        &self.mesh_in
    }

    fn mesh_out(&self) -> &Mesh {
        &self.mesh_out
    }

    fn apply(&self, f: &[C]) -> Result<Vec<C>> {
        if f.len() != self.mesh_in.len() {
            return Err(Error::Dimension { expected: self.mesh_in.len(), got: f.len() });
        }
        let v = DVector::from_column_slice(f);
        let out = &self.entries * v * C::new(self.mesh_in.spacing(), 0.0);
        Ok(out.as_slice().to_vec())
    }

    fn apply_adjoint(&self, g: &[C]) -> Result<Vec<C>> {
        if g.len() != self.mesh_out.len() {
            return Err(Error::Dimension { expected: self.mesh_out.len(), got: g.len() });
        }
        let v = DVector::from_column_slice(g);
        let out = self.entries.ad_mul(&v) * C::new(self.mesh_out.spacing(), 0.0);
        Ok(out.as_slice().to_vec())
    }

    fn dense(&self) -> Option<&KernelOperator> {
        Some(self)
    }
}

/// Result of a power-iteration norm estimate.
#[derive(Debug, Clone, PartialEq)]
pub struct NormEstimate {
    pub norm: f64,
    pub iterations: usize,
    /// Right singular vector (weighted coordinates).
    pub right: Vec<C>,
    /// Left singular vector (weighted coordinates), unit length.
    pub left: Vec<C>,
    pub used_svd: bool,
}

/// Norm of `K` as a map `L^2_{s_in} -> L^2_{-s_out}` on the grid.
pub fn operator_norm_weighted(
    map: &dyn LinearMap,
    s_in: WeightExponent,
    s_out: WeightExponent,
) -> Result<f64> {
    Ok(operator_norm_weighted_detailed(map, s_in, s_out)?.norm)
}

/// Power iteration on `M* M` for the weighted matrix `M`, started from a
/// fixed-seed Gaussian vector. Falls back to a full SVD for dense operators of
/// dimension at most [`SVD_FALLBACK_MAX_DIM`] if the iteration stalls.
pub fn operator_norm_weighted_detailed(
    map: &dyn LinearMap,
    s_in: WeightExponent,
    s_out: WeightExponent,
) -> Result<NormEstimate> {
    let points_in = map.mesh_in().points();
    let points_out = map.mesh_out().points();
    let h_in = map.mesh_in().spacing();
    let h_out = map.mesh_out().spacing();
    let w_in: Vec<f64> = points_in.iter().map(|&y| weight(y, -s_in)).collect();
    let w_out: Vec<f64> = points_out.iter().map(|&x| weight(x, -s_out)).collect();
    let forward_scale = (h_out / h_in).sqrt();
    let backward_scale = (h_in / h_out).sqrt();

    let apply_m = |v: &[C]| -> Result<Vec<C>> {
        let f: Vec<C> = v.iter().zip(&w_in).map(|(x, w)| x * *w).collect();
        let mut out = map.apply(&f)?;
        for (o, w) in out.iter_mut().zip(&w_out) {
            *o *= *w * forward_scale;
        }
        check_finite(&out)?;
        Ok(out)
    };
    let apply_mh = |u: &[C]| -> Result<Vec<C>> {
        let g: Vec<C> = u.iter().zip(&w_out).map(|(x, w)| x * *w).collect();
        let mut out = map.apply_adjoint(&g)?;
        for (o, w) in out.iter_mut().zip(&w_in) {
            *o *= *w * backward_scale;
        }
        check_finite(&out)?;
        Ok(out)
    };

    let mut rng = ChaCha8Rng::seed_from_u64(POWER_SEED);
    let mut v: Vec<C> = (0..points_in.len())
        .map(|_| {
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            C::new(re, im)
        })
        .collect();
    normalize(&mut v);

    let mut sigma = 0.0_f64;
    let mut left = Vec::new();
    for iteration in 1..=POWER_MAX_ITER {
        let mut u = apply_m(&v)?;
        let next = l2(&u);
        if next == 0.0 {
            return Ok(NormEstimate { norm: 0.0, iterations: iteration, right: v, left: u, used_svd: false });
        }
        u.iter_mut().for_each(|x| *x /= next);
        let mut w = apply_mh(&u)?;
        if normalize(&mut w) == 0.0 {
            return Ok(NormEstimate { norm: next, iterations: iteration, right: v, left: u, used_svd: false });
        }
        let change = (next - sigma).abs();
        sigma = next;
        left = u;
        v = w;
        if iteration > 2 && change <= POWER_REL_TOL * sigma {
            return Ok(NormEstimate { norm: sigma, iterations: iteration, right: v, left, used_svd: false });
        }
    }

    match map.dense() {
        Some(kernel) if kernel.entries.nrows().max(kernel.entries.ncols()) <= SVD_FALLBACK_MAX_DIM => {
            let norm = operator_norm_weighted_svd(kernel, s_in, s_out)?;
            Ok(NormEstimate { norm, iterations: POWER_MAX_ITER, right: v, left, used_svd: true })
        }
        _ => Err(Error::NotConverged(format!(
            "power iteration for the weighted norm after {POWER_MAX_ITER} iterations (estimate {sigma:e})"
        ))),
    }
}

/// Same norm via a full singular value decomposition.
pub fn operator_norm_weighted_svd(
    kernel: &KernelOperator,
    s_in: WeightExponent,
    s_out: WeightExponent,
) -> Result<f64> {
    let m = kernel.weighted_matrix(s_in, s_out);
    let svd = m.svd(false, false);
    Ok(svd.singular_values.iter().cloned().fold(0.0, f64::max))
}

/// Exact `L^1 -> L^inf` norm of a kernel operator: `max_ij |K(x_i, y_j)|`.
pub fn l1_to_linf_norm(kernel: &KernelOperator) -> f64 {
    kernel.entries.iter().map(|v| v.norm()).fold(0.0, f64::max)
}

fn check_finite(v: &[C]) -> Result<()> {
    if v.iter().any(|x| !(x.re.is_finite() && x.im.is_finite())) {
        return Err(Error::InvalidOperator("operator produced non-finite values".into()));
    }
    Ok(())
}
