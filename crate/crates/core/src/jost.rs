//! Jost solutions of `-theta'' + V theta = z theta` for compactly supported
//! complex `V`, their Wronskian and the Green kernel built from them.
//!
//! Normalization: `theta_+(x) = e^{-kx}` for `x` right of the support and
//! `theta_-(x) = e^{kx}` left of it, `k = sqrt(-z)`. At `z = 0` both tend to 1.
//! Solutions are carried inward with classical RK4 on the grid. Jumps of `V`
//! should sit on grid nodes; each step samples `V` with the one-sided limit
//! from inside the step interval, which keeps fourth order.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::potential::{Potential1D, Side};
use crate::report::{Classification, ThresholdReport};
use crate::weighted_space::{Grid1D, KernelOperator, Mesh};

type C = Complex64;

/// Default relative Wronskian tolerance for threshold classification.
pub const DEFAULT_TOLERANCE: f64 = 1e-6;

/// Dense Green kernels are only attached to reports up to this grid size.
pub const GREEN_KERNEL_MAX_POINTS: usize = 2001;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JostSide {
    Plus,
    Minus,
}

/// One Jost solution and its derivative on a grid.
#[derive(Debug, Clone)]
pub struct JostSolution {
    pub values: Vec<C>,
    pub derivatives: Vec<C>,
}

#[derive(Debug, Clone)]
pub struct JostPair {
    pub grid: Grid1D,
    pub z: C,
    pub theta_plus: JostSolution,
    pub theta_minus: JostSolution,
    /// `W = theta_+ theta_-' - theta_+' theta_-` at `x = 0`, from
    /// fourth-order finite differences of the sampled solutions.
    pub wronskian: C,
    /// `max_x |W(x) - W(0)|` with `W(x)` from the propagated derivatives.
    pub max_deviation: f64,
}

fn branch_root(z: C) -> Result<C> {
    if !(z.re.is_finite() && z.im.is_finite()) {
        return Err(Error::InvalidInput(format!("non-finite z = {z}")));
    }
    if z.im == 0.0 && z.re > 0.0 {
        return Err(Error::Unsupported(format!(
            "Jost solutions inside the continuous spectrum (z = {z})"
        )));
    }
    Ok((-z).sqrt())
}

fn check_potential(v: &Potential1D, grid: &Grid1D) -> Result<()> {
    if let Some((lo, hi)) = v.support() {
        let r = grid.half_width();
        if !(lo > -r && hi < r) {
            return Err(Error::InvalidInput(format!(
                "potential support [{lo}, {hi}] must lie inside the grid (-{r}, {r})"
            )));
        }
    }
    for &x in grid.points() {
        let value = v.value(x);
        if !(value.re.is_finite() && value.im.is_finite()) {
            return Err(Error::InvalidInput(format!("non-finite potential value at x = {x}")));
        }
    }
    Ok(())
}

fn rk4_step(v: &Potential1D, z: C, x: f64, step: f64, y: (C, C), start: Side, end: Side) -> (C, C) {
    let f = |xv: f64, side: Side, (u, du): (C, C)| (du, (v.value_at(xv, side) - z) * u);
    let mid = x + 0.5 * step;
    let k1 = f(x, start, y);
    let k2 = f(mid, Side::Mean, (y.0 + k1.0 * (0.5 * step), y.1 + k1.1 * (0.5 * step)));
    let k3 = f(mid, Side::Mean, (y.0 + k2.0 * (0.5 * step), y.1 + k2.1 * (0.5 * step)));
    let k4 = f(x + step, end, (y.0 + k3.0 * step, y.1 + k3.1 * step));
    (
        y.0 + (k1.0 + k2.0 * 2.0 + k3.0 * 2.0 + k4.0) * (step / 6.0),
        y.1 + (k1.1 + k2.1 * 2.0 + k3.1 * 2.0 + k4.1) * (step / 6.0),
    )
}

/// Jost solution `theta_+` or `theta_-` sampled on `grid`.
pub fn jost_solve(v: &Potential1D, grid: &Grid1D, z: C, side: JostSide) -> Result<JostSolution> {
    let k = branch_root(z)?;
    check_potential(v, grid)?;
    let x = grid.points();
    let n = x.len();
    let h = grid.spacing();
    let mut values = vec![C::new(0.0, 0.0); n];
    let mut derivatives = vec![C::new(0.0, 0.0); n];
    let exact = |xi: f64| match side {
        JostSide::Plus => {
            let e = (-k * xi).exp();
            (e, -k * e)
        }
        JostSide::Minus => {
            let e = (k * xi).exp();
            (e, k * e)
        }
    };
    match side {
        JostSide::Plus => {
            let start = match v.support() {
                Some((_, hi)) => x.partition_point(|&t| t < hi).min(n - 1),
                None => 0,
            };
            for i in start..n {
                (values[i], derivatives[i]) = exact(x[i]);
            }
            for i in (1..=start).rev() {
                let y = rk4_step(v, z, x[i], -h, (values[i], derivatives[i]), Side::Left, Side::Right);
                (values[i - 1], derivatives[i - 1]) = y;
            }
        }
        JostSide::Minus => {
            let start = match v.support() {
                Some((lo, _)) => x.partition_point(|&t| t <= lo).saturating_sub(1),
                None => n - 1,
            };
            for i in 0..=start {
                (values[i], derivatives[i]) = exact(x[i]);
            }
            for i in start..n - 1 {
                let y = rk4_step(v, z, x[i], h, (values[i], derivatives[i]), Side::Right, Side::Left);
                (values[i + 1], derivatives[i + 1]) = y;
            }
        }
    }
    if values.iter().chain(&derivatives).any(|u| !(u.re.is_finite() && u.im.is_finite())) {
        return Err(Error::Discretization("Jost solution overflowed on the grid".into()));
    }
    Ok(JostSolution { values, derivatives })
}

fn five_point_derivative(f: &[C], i: usize, h: f64) -> C {
    (f[i - 2] - f[i - 1] * 8.0 + f[i + 1] * 8.0 - f[i + 2]) / (12.0 * h)
}

/// Both Jost solutions and their Wronskian.
pub fn jost_pair(v: &Potential1D, grid: &Grid1D, z: C) -> Result<JostPair> {
    if grid.len() < 5 {
        return Err(Error::InvalidInput("Jost pair needs at least 5 grid points".into()));
    }
    let plus = jost_solve(v, grid, z, JostSide::Plus)?;
    let minus = jost_solve(v, grid, z, JostSide::Minus)?;
    let c = grid.center();
    let h = grid.spacing();
    let w0 = plus.values[c] * five_point_derivative(&minus.values, c, h)
        - five_point_derivative(&plus.values, c, h) * minus.values[c];
    let max_deviation = (0..grid.len())
        .map(|i| {
            let wi = plus.values[i] * minus.derivatives[i] - plus.derivatives[i] * minus.values[i];
            (wi - w0).norm()
        })
        .fold(0.0, f64::max);
    Ok(JostPair { grid: grid.clone(), z, theta_plus: plus, theta_minus: minus, wronskian: w0, max_deviation })
}

/// `W[theta_+, theta_-]` at `x = 0`. Fails if the Wronskian is not constant
/// across the grid to `1e-4 max(1, |W|)`.
pub fn wronskian(pair: &JostPair) -> Result<C> {
    let limit = 1e-4 * pair.wronskian.norm().max(1.0);
    if pair.max_deviation > limit {
        return Err(Error::Discretization(format!(
            "Wronskian varies by {:e} across the grid (limit {limit:e})",
            pair.max_deviation
        )));
    }
    Ok(pair.wronskian)
}

/// `G(x, y) = theta_-(min) theta_+(max) / W`.
pub fn green_kernel(pair: &JostPair, tolerance: f64) -> Result<KernelOperator> {
    let w = wronskian(pair)?;
    if w.norm() <= tolerance {
        return Err(Error::VirtualLevel { wronskian: w.norm(), tolerance });
    }
    let n = pair.grid.len();
    let plus = &pair.theta_plus.values;
    let minus = &pair.theta_minus.values;
    let entries = DMatrix::from_fn(n, n, |i, j| {
        let (lo, hi) = if i <= j { (i, j) } else { (j, i) };
        minus[lo] * plus[hi] / w
    });
    KernelOperator::new(Mesh::Line(pair.grid.clone()), Mesh::Line(pair.grid.clone()), entries)
}

fn sup(v: &[C]) -> f64 {
    v.iter().map(|u| u.norm()).fold(0.0, f64::max)
}

/// Threshold classification at `z = 0` from the Wronskian.
///
/// With `scale = 1 + |theta_+|_inf |theta_-|_inf`: `|W| > 100 tol scale` is
/// Regular (with the Green kernel attached on small grids), `|W| <= tol scale`
/// is Virtual with the sup-normalized state `theta_+`, and the band between
/// is Inconclusive.
pub fn classify_threshold_1d(v: &Potential1D, grid: &Grid1D, tol: f64) -> Result<ThresholdReport> {
    if !(tol > 0.0) {
        return Err(Error::InvalidInput(format!("tolerance must be positive, got {tol}")));
    }
    let pair = jost_pair(v, grid, C::new(0.0, 0.0))?;
    let w = wronskian(&pair)?;
    let scale = 1.0 + sup(&pair.theta_plus.values) * sup(&pair.theta_minus.values);
    let threshold = tol * scale;
    let classification = if w.norm() > 100.0 * threshold {
        Classification::Regular
    } else if w.norm() > threshold {
        Classification::Inconclusive
    } else {
        let norm = sup(&pair.theta_plus.values);
        let state = pair.theta_plus.values.iter().map(|u| u / norm).collect();
        Classification::Virtual { rank: Some(1), states: vec![state], log: false }
    };
    let mut report = ThresholdReport::new(classification)
        .with_diagnostic("wronskian_re", w.re)
        .with_diagnostic("wronskian_im", w.im)
        .with_diagnostic("wronskian_abs", w.norm())
        .with_diagnostic("scale", scale)
        .with_diagnostic("wronskian_deviation", pair.max_deviation);
    if report.classification.is_regular() {
        if grid.len() <= GREEN_KERNEL_MAX_POINTS {
            report.green = Some(green_kernel(&pair, threshold)?);
        } else {
            report.notes.push(format!("Green kernel not attached: {} grid points", grid.len()));
        }
    }
    Ok(report)
}

/// Coupling `g` in `[lo, hi]` at which the well `-g 1_[-1,1]` has a
/// zero-energy resonance, by bisection on the sign of `Re W(g)`.
pub fn critical_well_coupling(lo: f64, hi: f64, grid: &Grid1D) -> Result<f64> {
    let w = |g: f64| -> Result<f64> {
        let pair = jost_pair(&Potential1D::square_well(g)?, grid, C::new(0.0, 0.0))?;
        Ok(wronskian(&pair)?.re)
    };
    let (mut a, mut b) = (lo, hi);
    let (mut wa, wb) = (w(a)?, w(b)?);
    if wa * wb > 0.0 {
        return Err(Error::InvalidInput(format!("Wronskian does not change sign on [{lo}, {hi}]")));
    }
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if b - a <= 1e-14 * m.abs().max(1.0) {
            break;
        }
        let wm = w(m)?;
        if wm == 0.0 {
            return Ok(m);
        }
        if wa * wm < 0.0 {
            b = m;
        } else {
            a = m;
            wa = wm;
        }
    }
    Ok(0.5 * (a + b))
}
