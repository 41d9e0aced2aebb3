//! Free resolvent kernels `(-Δ - z)^{-1}` in one, two and three dimensions.
//!
//! Branch convention: `k = sqrt(-z)` with `Re k > 0` off `[0, inf)`. On the
//! positive axis the boundary value depends on the side of approach: from the
//! upper half-plane `k = -i sqrt(z0)`, so kernels carry the outgoing factor
//! `e^{i sqrt(z0) r}`.
//!
//! Radial (s-wave) operators act on `u = r^{(d-1)/2} psi`, which is a unitary
//! change of variables from radial `L^2(R^d)` to `L^2(0, inf; dr)` that leaves
//! the weights `<r>^s` untouched. Their kernels are
//!
//! * `d = 3`: `(e^{-k|r-r'|} - e^{-k(r+r')}) / 2k` (and `min(r, r')` at `k = 0`),
//! * `d = 2`: `sqrt(r r') I0(k r<) K0(k r>)`,
//!
//! both bounded on the diagonal, so no diagonal regularization is needed.

use nalgebra::DMatrix;
use num_complex::Complex64;
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::linalg::expm1;
use crate::special::{bessel_i0_scaled_real, bessel_k0, bessel_k0_scaled_real};
use crate::weighted_space::{KernelOperator, LinearMap, Mesh};

type C = Complex64;

/// How a boundary point of the resolvent set is approached.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Approach {
    Interior,
    FromUpperHalfPlane,
    FromLowerHalfPlane,
    AlongNegativeAxis,
}

/// Spectral parameter `z` together with the side it is approached from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralParameter {
    z: C,
    approach: Approach,
}

impl SpectralParameter {
    pub fn new(z: C, approach: Approach) -> Result<Self> {
        if !(z.re.is_finite() && z.im.is_finite()) {
            return Err(Error::InvalidInput(format!("non-finite spectral parameter {z}")));
        }
        let consistent = match approach {
            Approach::Interior => true,
            Approach::FromUpperHalfPlane => z.im >= 0.0,
            Approach::FromLowerHalfPlane => z.im <= 0.0,
            Approach::AlongNegativeAxis => z.im == 0.0 && z.re <= 0.0,
        };
        if !consistent {
            return Err(Error::InvalidInput(format!("z = {z} is not reachable with approach {approach:?}")));
        }
        Ok(Self { z, approach })
    }

    /// A point off `[0, inf)`.
    pub fn interior(z: C) -> Result<Self> {
        Self::new(z, Approach::Interior)
    }

    /// Real `z`; negative values are interior points, `z >= 0` is taken as
    /// a limit from the upper half-plane.
    pub fn real(z: f64) -> Result<Self> {
        if z < 0.0 {
            Self::new(C::new(z, 0.0), Approach::Interior)
        } else {
            Self::new(C::new(z, 0.0), Approach::FromUpperHalfPlane)
        }
    }

    pub fn z(&self) -> C {
        self.z
    }

    pub fn approach(&self) -> Approach {
        self.approach
    }

    /// `z` on the closed positive half-axis.
    pub fn on_positive_axis(&self) -> bool {
        self.z.im == 0.0 && self.z.re >= 0.0
    }
}

/// The root `k = sqrt(-z)` selected by the branch convention.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BranchRoot(C);

impl BranchRoot {
    pub fn value(self) -> C {
        self.0
    }

    pub fn is_zero(self) -> bool {
        self.0.re == 0.0 && self.0.im == 0.0
    }
}

pub fn sqrt_minus_z(p: &SpectralParameter) -> Result<BranchRoot> {
    let z = p.z;
    if p.on_positive_axis() {
        let root = z.re.sqrt();
        return match p.approach {
            Approach::Interior => Err(Error::BranchAmbiguity(z)),
            _ if z.re == 0.0 => Ok(BranchRoot(C::new(0.0, 0.0))),
            Approach::FromUpperHalfPlane => Ok(BranchRoot(C::new(0.0, -root))),
            Approach::FromLowerHalfPlane => Ok(BranchRoot(C::new(0.0, root))),
            Approach::AlongNegativeAxis => unreachable!("rejected by SpectralParameter::new"),
        };
    }
    Ok(BranchRoot((-z).sqrt()))
}

/// `e^{-k|x-y|} / 2k`.
pub fn kernel_1d(x: f64, y: f64, p: &SpectralParameter) -> Result<C> {
    let k = sqrt_minus_z(p)?;
    if k.is_zero() {
        return Err(Error::ThresholdSingularity);
    }
    let k = k.value();
    Ok((-k * (x - y).abs()).exp() / (k * 2.0))
}

/// `e^{-kr} / 4 pi r`, with `r = |x - y|`.
pub fn kernel_3d(r: f64, p: &SpectralParameter) -> Result<C> {
    if !(r > 0.0) {
        return Err(Error::DiagonalSingularity);
    }
    let k = sqrt_minus_z(p)?.value();
    Ok((-k * r).exp() / (4.0 * PI * r))
}

/// `K0(k r) / 2 pi`, defined off `[0, inf)` only.
pub fn kernel_2d(r: f64, p: &SpectralParameter) -> Result<C> {
    if !(r > 0.0) {
        return Err(Error::DiagonalSingularity);
    }
    if p.on_positive_axis() {
        return Err(Error::Unsupported(format!(
            "two-dimensional boundary values on [0, inf) (z = {})",
            p.z
        )));
    }
    let k = sqrt_minus_z(p)?.value();
    Ok(bessel_k0(k * r)? / (2.0 * PI))
}

/// Linear-cost integral operator with kernel `a[min(i,j)] b[max(i,j)] q^{|i-j|}`
/// on a uniform mesh. All free kernels in this module have this form.
#[derive(Debug, Clone)]
pub struct SemiSeparable {
    mesh: Mesh,
    q: C,
    a: Vec<C>,
    b: Vec<C>,
}

impl SemiSeparable {
    pub fn new(mesh: Mesh, q: C, a: Vec<C>, b: Vec<C>) -> Result<Self> {
        let n = mesh.len();
        if a.len() != n {
            return Err(Error::Dimension { expected: n, got: a.len() });
        }
        if b.len() != n {
            return Err(Error::Dimension { expected: n, got: b.len() });
        }
        if q.norm() > 1.0 + 1e-12 {
            return Err(Error::InvalidOperator(format!("growing recursion factor |q| = {}", q.norm())));
        }
        let finite = |v: &C| v.re.is_finite() && v.im.is_finite();
        if !finite(&q) || !a.iter().all(finite) || !b.iter().all(finite) {
            return Err(Error::InvalidOperator("non-finite semi-separable generator".into()));
        }
        Ok(Self { mesh, q, a, b })
    }

    pub fn mesh(&self) -> &Mesh {
        &self.mesh
    }

    pub fn entry(&self, i: usize, j: usize) -> C {
        let (lo, hi) = if i <= j { (i, j) } else { (j, i) };
        self.a[lo] * self.b[hi] * self.q.powu((hi - lo) as u32)
    }

    pub fn to_dense(&self) -> Result<KernelOperator> {
        let n = self.mesh.len();
        let mut powers = Vec::with_capacity(n);
        let mut p = C::new(1.0, 0.0);
        for _ in 0..n {
            powers.push(p);
            p *= self.q;
        }
        let entries = DMatrix::from_fn(n, n, |i, j| {
            let (lo, hi) = if i <= j { (i, j) } else { (j, i) };
            self.a[lo] * self.b[hi] * powers[hi - lo]
        });
        KernelOperator::new(self.mesh.clone(), self.mesh.clone(), entries)
    }

    fn conj(&self) -> Self {
        Self {
            mesh: self.mesh.clone(),
            q: self.q.conj(),
            a: self.a.iter().map(|v| v.conj()).collect(),
            b: self.b.iter().map(|v| v.conj()).collect(),
        }
    }

    fn apply_raw(&self, f: &[C]) -> Vec<C> {
        let n = f.len();
        let h = self.mesh.spacing();
        let mut out = vec![C::new(0.0, 0.0); n];
        let mut acc = C::new(0.0, 0.0);
        for i in 0..n {
            acc = acc * self.q + self.a[i] * f[i];
            out[i] = self.b[i] * acc;
        }
        acc = C::new(0.0, 0.0);
        for i in (0..n.saturating_sub(1)).rev() {
            acc = (acc + self.b[i + 1] * f[i + 1]) * self.q;
            out[i] += self.a[i] * acc;
        }
        out.iter_mut().for_each(|v| *v *= h);
        out
    }
}

impl LinearMap for SemiSeparable {
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
        Ok(self.apply_raw(f))
    }

    fn apply_adjoint(&self, g: &[C]) -> Result<Vec<C>> {
        if g.len() != self.mesh.len() {
            return Err(Error::Dimension { expected: self.mesh.len(), got: g.len() });
        }
        // The kernel is symmetric, so its adjoint has conjugated generators.
        Ok(self.conj().apply_raw(g))
    }
}

/// Structured free resolvent of dimension `d` on `mesh`: `d = 1` on a
/// [`Mesh::Line`], `d = 2, 3` (s-wave) on a [`Mesh::Radial`].
pub fn free_resolvent_map(d: usize, mesh: &Mesh, p: &SpectralParameter) -> Result<SemiSeparable> {
    let h = mesh.spacing();
    match (d, mesh) {
        (1, Mesh::Line(_)) => {
            let k = sqrt_minus_z(p)?;
            if k.is_zero() {
                return Err(Error::ThresholdSingularity);
            }
            let k = k.value();
            let n = mesh.len();
            SemiSeparable::new(mesh.clone(), (-k * h).exp(), vec![C::new(1.0, 0.0) / (k * 2.0); n], vec![
                C::new(1.0, 0.0);
                n
            ])
        }
        (3, Mesh::Radial(_)) => {
            let k = sqrt_minus_z(p)?.value();
            let a = mesh
                .points()
                .iter()
                .map(|&r| {
                    if k.norm() == 0.0 {
                        C::new(r, 0.0)
                    } else {
                        -expm1(-k * (2.0 * r)) / (k * 2.0)
                    }
                })
                .collect();
            SemiSeparable::new(mesh.clone(), (-k * h).exp(), a, vec![C::new(1.0, 0.0); mesh.len()])
        }
        (2, Mesh::Radial(_)) => {
            let z = p.z();
            if z.im != 0.0 || z.re >= 0.0 {
                return Err(Error::Unsupported(format!(
                    "the radial two-dimensional operator is implemented for real z < 0 only (z = {z})"
                )));
            }
            let k = (-z.re).sqrt();
            let mut a = Vec::with_capacity(mesh.len());
            let mut b = Vec::with_capacity(mesh.len());
            for &r in mesh.points() {
                a.push(C::new(r.sqrt() * bessel_i0_scaled_real(k * r)?, 0.0));
                b.push(C::new(r.sqrt() * bessel_k0_scaled_real(k * r)?, 0.0));
            }
            SemiSeparable::new(mesh.clone(), C::new((-k * h).exp(), 0.0), a, b)
        }
        (1 | 2 | 3, _) => Err(Error::InvalidInput(format!(
            "dimension {d} needs a {} mesh",
            if d == 1 { "line" } else { "radial" }
        ))),
        _ => Err(Error::Unsupported(format!("free kernels in dimension {d}"))),
    }
}

/// Dense samples of the free resolvent kernel on `mesh`.
pub fn build_free_kernel_operator(d: usize, mesh: &Mesh, p: &SpectralParameter) -> Result<KernelOperator> {
    free_resolvent_map(d, mesh, p)?.to_dense()
}
