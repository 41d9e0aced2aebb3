//! Eigenvalues bifurcating from thresholds and finite-rank regularization.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::free_resolvent::SpectralParameter;
use crate::lap_sweep::{
    classify, classify_points, fd_resolvent, state_residual, sweep, OperatorKind, OperatorSpec, Profile, SweepConfig,
    DEFAULT_TOL_ALPHA,
};
use crate::output::CsvTable;
use crate::potential::Potential1D;
use crate::report::ThresholdReport;
use crate::weighted_space::{Grid1D, Mesh, RadialGrid};

type C = Complex64;

/// Even bound state of `-d^2/dx^2 - g 1_{[-1,1]}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SquareWellRoot {
    pub g: f64,
    pub kappa: f64,
    pub energy: f64,
    /// The well is deep enough for more than one even bound state; the
    /// shallowest one is returned.
    pub multiple_roots: bool,
}

/// Solves `kappa = q tan q`, `q = sqrt(g - kappa^2)`, for the smallest
/// `kappa` in `(0, sqrt(g))`; the energy is `-kappa^2`.
pub fn square_well_eigenvalue(g: f64) -> Result<SquareWellRoot> {
    if !(g > 0.0) || !g.is_finite() {
        return Err(Error::NoBoundState(format!("coupling {g} must be positive")));
    }
    let sg = g.sqrt();
    let pi = std::f64::consts::PI;
    // The shallowest state lives on the last branch q in (n pi, n pi + pi/2).
    let n = ((sg / pi).ceil() - 1.0).max(0.0);
    let q_lo = n * pi;
    let q_hi = (q_lo + 0.5 * pi).min(sg);
    if !(q_lo < q_hi) {
        return Err(Error::NoBoundState(format!("no root for g = {g}")));
    }
    let f = |kappa: f64| {
        let q = (g - kappa * kappa).max(0.0).sqrt();
        kappa - q * q.tan()
    };
    let df = |kappa: f64| {
        let q = (g - kappa * kappa).max(0.0).sqrt();
        let c = q.cos();
        1.0 + kappa / q * (q.tan() + q / (c * c))
    };
    // kappa decreases as q increases.
    let mut lo = (g - q_hi * q_hi).max(0.0).sqrt();
    let mut hi = (g - q_lo * q_lo).max(0.0).sqrt();
    let mut kappa = 0.5 * (lo + hi);
    for _ in 0..300 {
        let value = f(kappa);
        if value == 0.0 {
            break;
        }
        if value > 0.0 {
            hi = kappa;
        } else {
            lo = kappa;
        }
        let newton = kappa - value / df(kappa);
        let next = if newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
        let step = (next - kappa).abs();
        kappa = next;
        if step <= 1e-16 || hi - lo <= 1e-16 {
            break;
        }
    }
    if !(kappa > 0.0) {
        return Err(Error::NoBoundState(format!("no root for g = {g}")));
    }
    Ok(SquareWellRoot { g, kappa, energy: -kappa * kappa, multiple_roots: g >= 0.25 * pi * pi })
}

/// Square-well eigenvalues against couplings, with the `-g^2` prediction.
#[derive(Debug, Clone, PartialEq)]
pub struct BifurcationCurve {
    pub couplings: Vec<f64>,
    pub energies: Vec<f64>,
    pub predicted: Vec<f64>,
    /// Least-squares `C` in `E + g^2 = C g^3`.
    pub cubic_coefficient: f64,
    /// Slope of `log |E|` against `log g`.
    pub slope: f64,
}

impl BifurcationCurve {
    pub fn compute(couplings: &[f64]) -> Result<Self> {
        if couplings.len() < 2 {
            return Err(Error::InvalidInput("need at least two couplings".into()));
        }
        let energies: Vec<f64> = couplings
            .par_iter()
            .map(|&g| square_well_eigenvalue(g).map(|r| r.energy))
            .collect::<Result<_>>()?;
        let predicted: Vec<f64> = couplings.iter().map(|g| -g * g).collect();
        let num: f64 = couplings.iter().zip(&energies).map(|(g, e)| (e + g * g) * g.powi(3)).sum();
        let den: f64 = couplings.iter().map(|g| g.powi(6)).sum();
        let xs: Vec<f64> = couplings.iter().map(|g| g.ln()).collect();
        let ys: Vec<f64> = energies.iter().map(|e| e.abs().ln()).collect();
        let n = xs.len() as f64;
        let mx = xs.iter().sum::<f64>() / n;
        let my = ys.iter().sum::<f64>() / n;
        let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
        if sxx == 0.0 {
            return Err(Error::Fit("couplings must differ".into()));
        }
        let slope = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum::<f64>() / sxx;
        Ok(Self { couplings: couplings.to_vec(), energies, predicted, cubic_coefficient: num / den, slope })
    }

    /// Norm of `V = -g 1_{[-1,1]}` as a map `L^2_{-s} -> L^2_s`:
    /// `g sup_{|x|<=1} <x>^{2s} = g 2^s`.
    pub fn weighted_coupling_norm(g: f64, s: f64) -> f64 {
        g.abs() * 2f64.powf(s)
    }

    pub fn to_csv(&self) -> CsvTable {
        let mut t = CsvTable::new(&["g", "E", "E_predicted"]);
        for ((g, e), p) in self.couplings.iter().zip(&self.energies).zip(&self.predicted) {
            t.push_floats(&[*g, *e, *p]);
        }
        t
    }
}

/// Matching conditions for bounded solutions of `u'' = c 1_{[-1,1]}`,
/// `c = int_{-1}^{1} u`: inside `u = a + b x + c x^2/2`, outside constant.
/// Rows are `u'(1) = 0`, `u'(-1) = 0` and `int u - c = 0`, built from
/// numerical derivatives and quadrature of the basis `{1, x, x^2/2}`.
pub fn hu_matching_matrix() -> DMatrix<f64> {
    let basis: [fn(f64) -> f64; 3] = [|_| 1.0, |x| x, |x| 0.5 * x * x];
    let d = 1e-3;
    let derivative = |f: fn(f64) -> f64, x: f64| {
        (f(x - 2.0 * d) - 8.0 * f(x - d) + 8.0 * f(x + d) - f(x + 2.0 * d)) / (12.0 * d)
    };
    let n = 200;
    let step = 2.0 / n as f64;
    let simpson = |f: fn(f64) -> f64| {
        let mut acc = f(-1.0) + f(1.0);
        for i in 1..n {
            let x = -1.0 + i as f64 * step;
            acc += if i % 2 == 1 { 4.0 } else { 2.0 } * f(x);
        }
        acc * step / 3.0
    };
    DMatrix::from_fn(3, 3, |i, j| match i {
        0 => derivative(basis[j], 1.0),
        1 => derivative(basis[j], -1.0),
        _ => simpson(basis[j]) - if j == 2 { 1.0 } else { 0.0 },
    })
}

/// Determinant of the matching matrix after scaling each row to unit length.
pub fn normalized_determinant(m: &DMatrix<f64>) -> f64 {
    let mut scaled = m.clone();
    for mut row in scaled.row_iter_mut() {
        let norm = row.norm();
        if norm > 0.0 {
            row /= norm;
        }
    }
    scaled.determinant()
}

/// Grid used for the rank-one example and the one-dimensional sweeps.
pub fn rank_one_grid() -> Result<Mesh> {
    Ok(Mesh::Line(Grid1D::with_spacing(50.0, 0.01)?))
}

/// `-d^2/dx^2 + 1_{[-1,1]} <1_{[-1,1]}, .>` at `z0 = 0`: checks that the
/// matching problem has only the trivial solution and that the sweep is
/// regular; the two must agree.
pub fn rank_one_regularized_threshold() -> Result<ThresholdReport> {
    let matching = hu_matching_matrix();
    let det = matching.determinant();
    let normalized = normalized_determinant(&matching);
    let op = OperatorSpec::new(
        OperatorKind::FiniteRankPerturbed1D { potential: Potential1D::zero(), profiles: vec![Profile::indicator(1.0)] },
        rank_one_grid()?,
    )?;
    let cfg = SweepConfig::toward(C::new(0.0, 0.0), std::f64::consts::PI, 2.0)?;
    let mut report = classify(&op, &cfg, DEFAULT_TOL_ALPHA)?;
    report.diagnostics.insert("matching_determinant".into(), det);
    report.diagnostics.insert("matching_determinant_normalized".into(), normalized);
    let trivial = normalized.abs() > 0.1;
    if trivial != report.classification.is_regular() {
        return Err(Error::ClassificationConflict(format!(
            "matching determinant {normalized:.3e} but sweep verdict {}",
            report.classification.label()
        )));
    }
    Ok(report)
}

/// A finite-rank perturbation that restores the resolvent limit at `z0`,
/// with the virtual states it reveals.
#[derive(Debug, Clone, PartialEq)]
pub struct Regularization {
    pub rank: usize,
    pub profiles: Vec<Profile>,
    /// Sup-normalized virtual states on the operator grid.
    pub states: Vec<Vec<C>>,
    /// Largest weighted residual of `(H - z0) psi` over the states.
    pub residual: f64,
}

/// Tries `B = sum_k p_k <p_k, .>` with `p_k = x^{n_k}` on an interval
/// covering the potential, over all sets of `r` powers `n_k <= max_rank`, for
/// `r = 1..=max_rank`, and keeps the first one whose sweep is regular. The
/// virtual states are `R_B(z0) sum_k c_k p_k` for `c` in the kernel of
/// `I - (<p_j, R_B(z0) p_k>)`.
pub fn regularization_search(
    op: &OperatorSpec,
    cfg: &SweepConfig,
    tol_alpha: f64,
    max_rank: usize,
) -> Result<Option<Regularization>> {
    if cfg.z0.im != 0.0 || cfg.z0.re > 0.0 {
        return Err(Error::Unsupported("regularization search needs a real threshold z0 <= 0".into()));
    }
    let a = op
        .kind()
        .potential()
        .and_then(|v| v.support())
        .map(|(lo, hi)| lo.abs().max(hi.abs()))
        .unwrap_or(0.0)
        .max(1.0);
    let fd = op.finite_difference();
    for profiles in (1..=max_rank).flat_map(|rank| power_sets(max_rank as u32, rank)) {
        let profiles: Vec<Profile> = profiles.into_iter().map(|power| Profile { power, a }).collect();
        let rank = profiles.len();
        let candidate = fd.with_profiles(&profiles)?;
        let points = match sweep(&candidate, cfg) {
            Ok(p) => p,
            Err(Error::SweepAborted { .. }) => continue,
            Err(e) => return Err(e),
        };
        if !classify_points(&points, tol_alpha)?.classification.is_regular() {
            continue;
        }
        let states = virtual_states(&candidate, cfg.z0.re)?;
        let mut residual: f64 = 0.0;
        for psi in &states {
            residual = residual.max(state_residual(op, cfg.z0, psi, cfg.s_out)?);
        }
        return Ok(Some(Regularization { rank, profiles, states, residual }));
    }
    Ok(None)
}

/// Increasing `size`-element subsets of `0..=max`.
fn power_sets(max: u32, size: usize) -> Vec<Vec<u32>> {
    fn extend(start: u32, max: u32, size: usize, current: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if current.len() == size {
            out.push(current.clone());
            return;
        }
        for p in start..=max {
            current.push(p);
            extend(p + 1, max, size, current, out);
            current.pop();
        }
    }
    let mut out = Vec::new();
    extend(0, max, size, &mut Vec::new(), &mut out);
    out
}

/// Virtual states of `op - B` at `z0`, where `op` carries the regularizing
/// profiles `B`.
fn virtual_states(regularized: &OperatorSpec, z0: f64) -> Result<Vec<Vec<C>>> {
    let profiles = match regularized.kind() {
        OperatorKind::FiniteRankPerturbed1D { profiles, .. } => profiles.clone(),
        _ => return Err(Error::InvalidOperator("expected a finite-rank perturbed operator".into())),
    };
    let resolvent = fd_resolvent(regularized, &SpectralParameter::real(z0)?)?;
    let mesh = regularized.mesh();
    let h = mesh.spacing();
    let columns: Vec<Vec<C>> = profiles.iter().map(|p| p.sample(mesh.points())).collect();
    let images: Vec<Vec<C>> = columns.iter().map(|u| resolvent.solve(u)).collect();
    let r = columns.len();
    let gram = DMatrix::from_fn(r, r, |j, k| {
        let m: C = columns[j].iter().zip(&images[k]).map(|(w, v)| w.conj() * v).sum::<C>() * h;
        if j == k {
            C::new(1.0, 0.0) - m
        } else {
            -m
        }
    });
    let svd = gram.svd(false, true);
    let v_t = svd.v_t.ok_or_else(|| Error::EigenSolver("singular vectors unavailable".into()))?;
    let sv = &svd.singular_values;
    let smallest = (0..r).min_by(|&i, &j| sv[i].partial_cmp(&sv[j]).unwrap()).unwrap_or(0);
    let chosen: Vec<usize> = (0..r).filter(|&i| sv[i] <= 1e-3 || i == smallest).collect();
    let mut states = Vec::new();
    for i in chosen {
        let coeffs: Vec<C> = v_t.row(i).iter().map(|c| c.conj()).collect();
        let mut psi = vec![C::new(0.0, 0.0); mesh.len()];
        for (c, img) in coeffs.iter().zip(&images) {
            psi.iter_mut().zip(img).for_each(|(p, v)| *p += c * v);
        }
        let peak = psi.iter().copied().max_by(|a, b| a.norm().partial_cmp(&b.norm()).unwrap()).unwrap_or(C::new(1.0, 0.0));
        if peak.norm() == 0.0 {
            return Err(Error::DegenerateFunctional);
        }
        psi.iter_mut().for_each(|p| *p /= peak);
        states.push(psi);
    }
    Ok(states)
}

/// Eigenfunction and potential of the embedded-eigenvalue family at radius
/// `r`: `psi = e^{i zeta r}/r` for `r > 1` and
/// `(3 - r^2)/2 e^{i zeta (1 + r^2)/2}` inside, with `V = zeta^2 + Delta psi / psi`.
pub fn embedded_potential_3d(zeta: C, r: f64) -> (C, C) {
    let i = C::new(0.0, 1.0);
    if r > 1.0 {
        return ((i * zeta * r).exp() / r, C::new(0.0, 0.0));
    }
    let r2 = r * r;
    let psi = (3.0 - r2) / 2.0 * (i * zeta * (1.0 + r2) / 2.0).exp();
    let v = -zeta * zeta * (r2 - 1.0) + (i * zeta * (7.0 * r2) - i * zeta * 9.0 + 6.0) / (r2 - 3.0);
    (psi, v)
}

/// Sup-norm of `(-Delta + V - zeta^2) psi` on `(0, 3)` with a fourth-order
/// stencil on `u = r psi`, skipping a `2h` band around the interface.
pub fn embedded_residual(zeta: C, h: f64) -> f64 {
    let u = |r: f64| {
        if r < 0.0 {
            -(-r) * embedded_potential_3d(zeta, -r).0
        } else if r == 0.0 {
            C::new(0.0, 0.0)
        } else {
            r * embedded_potential_3d(zeta, r).0
        }
    };
    let n = (3.0 / h).round() as usize;
    (1..n)
        .into_par_iter()
        .filter_map(|k| {
            let r = k as f64 * h;
            if (r - 1.0).abs() <= 2.0 * h + 1e-12 {
                return None;
            }
            let d2 = (-u(r - 2.0 * h) + u(r - h) * 16.0 - u(r) * 30.0 + u(r + h) * 16.0 - u(r + 2.0 * h)) / (12.0 * h * h);
            let (psi, v) = embedded_potential_3d(zeta, r);
            let res = (-d2 + (v - zeta * zeta) * (r * psi)) / r;
            Some(res.norm())
        })
        .reduce(|| 0.0, f64::max)
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddedSample {
    pub j: usize,
    pub zeta: C,
    pub z: C,
    pub residual: f64,
}

/// Eigen-triples along `zeta_j = zeta0 + (1 + i)/j` and the resolvent sweep
/// toward `zeta0^2` at the limit potential.
#[derive(Debug, Clone)]
pub struct EmbeddedFamily {
    pub zeta0: f64,
    pub samples: Vec<EmbeddedSample>,
    pub report: ThresholdReport,
}

impl EmbeddedFamily {
    pub fn to_csv(&self) -> CsvTable {
        let mut t = CsvTable::new(&["j", "zeta_re", "zeta_im", "residual"]);
        for s in &self.samples {
            t.push_raw(vec![
                s.j.to_string(),
                crate::output::fmt15(s.zeta.re),
                crate::output::fmt15(s.zeta.im),
                crate::output::fmt15(s.residual),
            ]);
        }
        t
    }

    /// Norms never decrease as the sweep approaches the threshold.
    pub fn monotone_growth(&self) -> bool {
        let mut pts = self.report.points.clone();
        pts.sort_by(|a, b| b.radius.partial_cmp(&a.radius).unwrap());
        pts.windows(2).all(|w| w[1].norm >= w[0].norm)
    }
}

pub const EMBEDDED_RESIDUAL_SPACING: f64 = 1e-3;
pub const EMBEDDED_RESIDUAL_TOL: f64 = 1e-6;

/// Radial operator `-Delta + V(., zeta0)` used for the embedded sweep.
pub fn embedded_operator(zeta0: f64) -> Result<OperatorSpec> {
    let v = Potential1D::embedded(C::new(zeta0, 0.0))?;
    OperatorSpec::new(OperatorKind::Schrodinger3DRadial(v), Mesh::Radial(RadialGrid::with_spacing(8.0, 0.005)?))
}

pub fn embedded_family_check(zeta0: f64, n: usize) -> Result<EmbeddedFamily> {
    if !(zeta0 >= 0.0) || !zeta0.is_finite() {
        return Err(Error::InvalidInput(format!("zeta0 = {zeta0} must be nonnegative")));
    }
    let samples: Vec<EmbeddedSample> = (1..=n)
        .into_par_iter()
        .map(|j| {
            let zeta = C::new(zeta0, 0.0) + C::new(1.0, 1.0) / j as f64;
            let residual = embedded_residual(zeta, EMBEDDED_RESIDUAL_SPACING);
            EmbeddedSample { j, zeta, z: zeta * zeta, residual }
        })
        .collect();
    if let Some(bad) = samples.iter().find(|s| !(s.residual <= EMBEDDED_RESIDUAL_TOL)) {
        return Err(Error::Model(format!("eigen-residual {:.3e} at j = {}", bad.residual, bad.j)));
    }
    let op = embedded_operator(zeta0)?;
    let cfg = SweepConfig::toward(C::new(zeta0 * zeta0, 0.0), 0.5 * std::f64::consts::PI, 1.0)?;
    let points = sweep(&op, &cfg)?;
    let report = classify_points(&points, DEFAULT_TOL_ALPHA)?;
    Ok(EmbeddedFamily { zeta0, samples, report })
}

/// Perturbation scale relative to `sigma_max(M)`.
pub const NULLITY_PERTURBATION: f64 = 1e-3;
/// Determinant threshold for the normalized matrix.
pub const NULLITY_DET_THRESHOLD: f64 = 1e-15;

/// Number of singular values at most `1e-10 sigma_max`.
pub fn svd_nullity(m: &DMatrix<C>) -> usize {
    let sv = m.clone().svd(false, false).singular_values;
    let max = sv.iter().cloned().fold(0.0, f64::max);
    sv.iter().filter(|&&s| s <= 1e-10 * max).count()
}

/// Smallest rank `k` of a random perturbation `N` with `det(M + N) != 0`.
pub fn matrix_nullity_by_perturbation(m: &DMatrix<C>, trials: usize, seed: u64) -> Result<usize> {
    let n = m.nrows();
    if !m.is_square() || n == 0 {
        return Err(Error::InvalidInput("need a nonempty square matrix".into()));
    }
    if trials == 0 {
        return Err(Error::InvalidInput("need at least one trial".into()));
    }
    let sigma_max = m.clone().svd(false, false).singular_values.iter().cloned().fold(0.0, f64::max);
    let (normalized, scale) =
        if sigma_max > 0.0 { (m / C::new(sigma_max, 0.0), NULLITY_PERTURBATION) } else { (m.clone(), 1.0) };
    let expected = svd_nullity(m);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut gaussian = |rows: usize, cols: usize| {
        DMatrix::from_fn(rows, cols, |_, _| {
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            C::new(re, im)
        })
    };
    let mut found = None;
    'ranks: for k in 0..=n {
        let attempts = if k == 0 { 1 } else { trials };
        for _ in 0..attempts {
            let perturbed = if k == 0 {
                normalized.clone()
            } else {
                let x = gaussian(n, k);
                let y = gaussian(n, k);
                let nk = &x * y.adjoint();
                let f = nk.norm();
                &normalized + nk * C::new(scale / f, 0.0)
            };
            if perturbed.determinant().norm() > NULLITY_DET_THRESHOLD {
                found = Some(k);
                break 'ranks;
            }
        }
    }
    let found = found.unwrap_or(n + 1);
    if found != expected {
        return Err(Error::SamplingFailure { found, expected });
    }
    Ok(found)
}
