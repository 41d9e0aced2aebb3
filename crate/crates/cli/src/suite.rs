//! The acceptance battery behind `virtlev suite`.

use std::f64::consts::PI;
use std::time::{Duration, Instant};

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal, Uniform};
use virtlev_core::criticality::{null_state_iteration, Dichotomy, QuadraticForm};
use virtlev_core::discrete_ops::{build_shift_virtual_level, l1_to_linf, truncated_shift_resolvent, SeqVector};
use virtlev_core::free_resolvent::{free_resolvent_map, kernel_1d, kernel_2d, kernel_3d, SpectralParameter};
use virtlev_core::jost::{classify_threshold_1d, critical_well_coupling, jost_pair, wronskian, DEFAULT_TOLERANCE};
use virtlev_core::lap_sweep::{
    classify, finite_difference_matrix, fit_exponent, resolvent_matrix, sweep, OperatorKind, OperatorSpec, Profile,
    SweepConfig, DEFAULT_TOL_ALPHA,
};
use virtlev_core::perturbation::{
    embedded_family_check, matrix_nullity_by_perturbation, rank_one_grid, rank_one_regularized_threshold,
    svd_nullity, BifurcationCurve,
};
use virtlev_core::potential::Potential1D;
use virtlev_core::report::Classification;
use virtlev_core::weighted_space::{operator_norm_weighted_svd, Grid1D, LinearMap, Mesh, RadialGrid, WeightExponent};
use virtlev_core::Complex64;

type C = Complex64;

pub const CRITERIA: &[(u8, &str)] = &[
    (1, "1d threshold divergence"),
    (2, "3d threshold regularity"),
    (3, "square-well bifurcation law"),
    (4, "wronskian dichotomy"),
    (5, "rank-one regularization"),
    (6, "shift operator"),
    (7, "embedded eigenvalue family"),
    (8, "criticality dichotomy"),
    (9, "matrix nullity"),
    (10, "numerical hygiene"),
];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CriterionResult {
    pub id: u8,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl CriterionResult {
    pub fn line(&self) -> String {
        let status = if self.passed { "PASS" } else { "FAIL" };
        format!("{status} criterion {:>2} ({}): {}", self.id, self.name, self.detail)
    }
}

pub fn render(results: &[CriterionResult]) -> String {
    results.iter().map(|r| r.line() + "\n").collect()
}

pub fn run_suite(ids: &[u8]) -> Vec<CriterionResult> {
    ids.iter().map(|&id| criterion(id)).collect()
}

/// Runs one criterion; errors count as failures.
pub fn criterion(id: u8) -> CriterionResult {
    let name = CRITERIA.iter().find(|(k, _)| *k == id).map(|(_, n)| *n).unwrap_or("unknown");
    let start = Instant::now();
    let (limit, outcome) = match id {
        1 => (30, threshold_divergence_1d()),
        2 => (60, threshold_regularity_3d()),
        3 => (1, bifurcation_law()),
        4 => (60, wronskian_dichotomy()),
        5 => (120, rank_one_regularization()),
        6 => (60, shift_operator()),
        7 => (120, embedded_family()),
        8 => (300, criticality()),
        9 => (60, nullity()),
        10 => (120, hygiene()),
        _ => (0, Err(format!("no criterion {id}"))),
    };
    let elapsed = start.elapsed();
    let (passed, detail) = match outcome {
        Ok((_, detail)) if elapsed > Duration::from_secs(limit) => (false, format!("{detail}; over the {limit} s limit")),
        Ok((ok, detail)) => (ok, detail),
        Err(e) => (false, format!("error: {e}")),
    };
    CriterionResult { id, name, passed, detail }
}

type Check = Result<(bool, String), String>;

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn line_mesh(r: f64, h: f64) -> Result<Mesh, String> {
    Grid1D::with_spacing(r, h).map(Mesh::Line).map_err(err)
}

fn radial_mesh(r: f64, h: f64) -> Result<Mesh, String> {
    RadialGrid::with_spacing(r, h).map(Mesh::Radial).map_err(err)
}

fn threshold_divergence_1d() -> Check {
    let op = OperatorSpec::new(OperatorKind::Free1D, rank_one_grid().map_err(err)?).map_err(err)?;
    let cfg = SweepConfig::toward(C::new(0.0, 0.0), PI, 2.0).map_err(err)?;
    let points = sweep(&op, &cfg).map_err(err)?;
    let (alpha, r2) = fit_exponent(&points).map_err(err)?;
    let ok = (0.45..=0.55).contains(&alpha) && r2 >= 0.99;
    Ok((ok, format!("alpha={alpha:.4} r2={r2:.5}")))
}

fn threshold_regularity_3d() -> Check {
    let op = OperatorSpec::new(OperatorKind::Free3DRadial, radial_mesh(200.0, 0.01)?).map_err(err)?;
    let cfg = SweepConfig::toward(C::new(0.0, 0.0), PI, 1.1).map_err(err)?;
    let points = sweep(&op, &cfg).map_err(err)?;
    let (alpha, _) = fit_exponent(&points).map_err(err)?;
    let max = points.iter().map(|p| p.norm).fold(0.0, f64::max);
    let min = points.iter().map(|p| p.norm).fold(f64::INFINITY, f64::min);
    let variation = (max - min) / min;
    let ok = variation <= 0.05 && alpha <= 0.05;
    Ok((ok, format!("variation={variation:.4} alpha={alpha:.4}")))
}

fn bifurcation_law() -> Check {
    let curve = BifurcationCurve::compute(&[0.04, 0.02, 0.01, 0.005]).map_err(err)?;
    let worst = curve
        .couplings
        .iter()
        .zip(&curve.energies)
        .map(|(g, e)| (e / (-g * g) - 1.0).abs() / (3.0 * g))
        .fold(0.0, f64::max);
    let ok = worst <= 1.0 && (curve.slope - 2.0).abs() <= 0.05;
    Ok((ok, format!("slope={:.5} max |E/(-g^2)-1|/(3g)={worst:.4}", curve.slope)))
}

/// Potentials shared by the Wronskian and criticality checks.
fn dichotomy_potentials() -> Result<Vec<(&'static str, Potential1D)>, String> {
    let g = Grid1D::new(4.0, 801).map_err(err)?;
    let gstar = critical_well_coupling(2.0, 3.0, &g).map_err(err)?;
    let c = |re, im| C::new(re, im);
    Ok(vec![
        ("zero", Potential1D::zero()),
        ("box 1", Potential1D::indicator(c(1.0, 0.0), 1.0).map_err(err)?),
        ("well 0.5", Potential1D::square_well(0.5).map_err(err)?),
        ("well 1.5", Potential1D::square_well(1.5).map_err(err)?),
        ("critical well", Potential1D::square_well(gstar).map_err(err)?),
        ("bump 1", Potential1D::bump(c(1.0, 0.0), 1.0).map_err(err)?),
        ("bump -0.5", Potential1D::bump(c(-0.5, 0.0), 1.0).map_err(err)?),
        ("critical profile", Potential1D::critical(1.0).map_err(err)?),
        ("box 0.3+0.4i", Potential1D::indicator(c(0.3, 0.4), 1.0).map_err(err)?),
        ("bump 0.5-0.5i", Potential1D::bump(c(0.5, -0.5), 1.5).map_err(err)?),
        ("box 1 shifted 0.7", Potential1D::indicator(c(1.0, 0.0), 1.0).map_err(err)?.shifted(0.7)),
    ])
}

fn wronskian_dichotomy() -> Check {
    let g = Grid1D::new(4.0, 801).map_err(err)?;
    let w0 = wronskian(&jost_pair(&Potential1D::zero(), &g, C::new(0.0, 0.0)).map_err(err)?).map_err(err)?.norm();
    let unit = Potential1D::indicator(C::new(1.0, 0.0), 1.0).map_err(err)?;
    let w1 = wronskian(&jost_pair(&unit, &g, C::new(0.0, 0.0)).map_err(err)?).map_err(err)?;
    let rel = (w1 - 2.0_f64.sinh()).norm() / 2.0_f64.sinh();
    let cfg = SweepConfig::toward(C::new(0.0, 0.0), PI, 2.0).map_err(err)?;
    let mut disagree = Vec::new();
    let potentials = dichotomy_potentials()?;
    for (name, v) in &potentials {
        let jost = classify_threshold_1d(v, &g, DEFAULT_TOLERANCE).map_err(err)?.classification;
        let op = OperatorSpec::new(OperatorKind::Schrodinger1D(v.clone()), rank_one_grid().map_err(err)?).map_err(err)?;
        let lap = classify(&op, &cfg, DEFAULT_TOL_ALPHA).map_err(err)?.classification;
        if jost.label() != lap.label() || matches!(jost, Classification::Inconclusive) {
            disagree.push(format!("{name}: {} vs {}", jost.label(), lap.label()));
        }
    }
    let ok = w0 <= 1e-8 && rel <= 1e-6 && disagree.is_empty() && potentials.len() >= 10;
    let mut detail = format!("|W(0)|={w0:.3e} box rel={rel:.3e} agree {}/{}", potentials.len() - disagree.len(), potentials.len());
    if !disagree.is_empty() {
        detail += &format!(" [{}]", disagree.join("; "));
    }
    Ok((ok, detail))
}

fn rank_one_regularization() -> Check {
    let report = rank_one_regularized_threshold().map_err(err)?;
    let det = report.diagnostics.get("matching_determinant").copied().unwrap_or(0.0);
    let regular = report.classification.is_regular();
    let op = OperatorSpec::new(OperatorKind::Free1D, rank_one_grid().map_err(err)?).map_err(err)?;
    let cfg = SweepConfig::toward(C::new(0.0, 0.0), PI, 2.0).map_err(err)?;
    let free = classify(&op, &cfg, DEFAULT_TOL_ALPHA).map_err(err)?;
    let dev = match &free.classification {
        Classification::Virtual { states, .. } if !states.is_empty() => {
            let s = &states[0];
            let n = s.len();
            Some(s[n / 4..3 * n / 4].iter().map(|u| (u - 1.0).norm()).fold(0.0, f64::max))
        }
        _ => None,
    };
    let ok = det != 0.0 && regular && dev.is_some_and(|d| d <= 0.05);
    Ok((
        ok,
        format!(
            "det={det:.3} perturbed {} free {} dev={}",
            report.classification.label(),
            free.classification.label(),
            dev.map_or("n/a".to_string(), |d| format!("{d:.3e}"))
        ),
    ))
}

fn shift_operator() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let radius = Uniform::new_inclusive(1.0 + 1e-9, 10.0).map_err(err)?;
    let mut worst_norm = 0.0_f64;
    for _ in 0..100 {
        let z = C::from_polar(radius.sample(&mut rng), rng.random_range(0.0..2.0 * PI));
        let m = truncated_shift_resolvent(128, z).map_err(err)?;
        worst_norm = worst_norm.max(l1_to_linf(&m));
    }
    let phis: [&[C]; 3] = [
        &[C::new(1.0, 0.0)],
        &[C::new(1.0, 0.0), C::new(0.5, 0.0), C::new(0.25, 0.0)],
        &[C::new(0.3, 0.2), C::new(1.0, 0.0), C::new(0.0, -0.5)],
    ];
    let mut worst_res = 0.0_f64;
    for z0 in [C::new(1.0, 0.0), C::new(0.0, 1.0), C::from_polar(1.0, PI / 4.0)] {
        for phi in phis {
            let phi = SeqVector::padded(phi, 512).map_err(err)?;
            let level = build_shift_virtual_level(z0, &phi).map_err(err)?;
            worst_res = worst_res.max(level.residual);
        }
    }
    let ok = worst_norm <= 1.0 + 1e-12 && worst_res <= 1e-10;
    Ok((ok, format!("max norm={worst_norm:.12} max residual={worst_res:.3e}")))
}

fn embedded_family() -> Check {
    let mut ok = true;
    let mut parts = Vec::new();
    for zeta0 in [0.0, 1.0] {
        let fam = embedded_family_check(zeta0, 8).map_err(err)?;
        let res = fam.samples.iter().map(|s| s.residual).fold(0.0, f64::max);
        let max = fam.report.points.iter().map(|p| p.radius).fold(0.0, f64::max);
        let min = fam.report.points.iter().map(|p| p.radius).fold(f64::INFINITY, f64::min);
        let decades = (max / min).log10();
        let monotone = fam.monotone_growth();
        ok &= res <= 1e-6 && monotone && decades >= 3.0 - 1e-9;
        parts.push(format!("zeta0={zeta0}: residual={res:.3e} monotone={monotone} decades={decades:.2}"));
    }
    Ok((ok, parts.join("; ")))
}

fn criticality() -> Check {
    let dichotomy = |mesh: Mesh, v: &Potential1D| -> Result<Dichotomy, String> {
        let form = QuadraticForm::new(mesh, v).map_err(err)?;
        Ok(null_state_iteration(&form, 1.0, 64).map_err(err)?.verdict)
    };
    let zero = Potential1D::zero();
    let mut ok = true;
    let mut parts = Vec::new();

    for r in [400.0, 800.0] {
        let mesh = line_mesh(r, 0.05)?;
        let pts = mesh.points().to_vec();
        match dichotomy(mesh, &zero)? {
            Dichotomy::NullState { phi } => {
                let dev = phi.iter().zip(&pts).filter(|(_, x)| x.abs() <= 1.0).map(|(p, _)| (p - 1.0).abs()).fold(0.0, f64::max);
                ok &= dev <= 0.05;
                parts.push(format!("line R={r}: NullState dev={dev:.3e}"));
            }
            other => {
                ok = false;
                parts.push(format!("line R={r}: {}", other.label()));
            }
        }
    }
    let mut cs = Vec::new();
    for r in [400.0, 800.0] {
        match dichotomy(radial_mesh(r, 0.05)?, &zero)? {
            Dichotomy::WeightedGap { c, margin, .. } => {
                ok &= margin > 0.0;
                cs.push(c);
                parts.push(format!("radial R={r}: WeightedGap c={c:.4e}"));
            }
            other => {
                ok = false;
                parts.push(format!("radial R={r}: {}", other.label()));
            }
        }
    }
    if let [a, b] = cs[..] {
        ok &= (a - b).abs() <= 0.05 * a;
    }

    let g = Grid1D::new(4.0, 801).map_err(err)?;
    let probe: Vec<f64> = (-400..=400).map(|i| i as f64 * 0.01).collect();
    let mut agree = 0;
    let shared: Vec<_> = dichotomy_potentials()?
        .into_iter()
        .filter(|(_, v)| v.is_real() && v.sample(&probe).iter().all(|u| u.re >= 0.0))
        .collect();
    for (name, v) in &shared {
        let verdict = dichotomy(line_mesh(400.0, 0.05)?, v)?;
        let jost = classify_threshold_1d(v, &g, DEFAULT_TOLERANCE).map_err(err)?.classification;
        let consistent = match verdict {
            Dichotomy::NullState { .. } => jost.is_virtual(),
            Dichotomy::WeightedGap { .. } => jost.is_regular(),
            Dichotomy::Inconclusive => false,
        };
        if consistent {
            agree += 1;
        } else {
            ok = false;
            parts.push(format!("{name}: {} vs {}", verdict.label(), jost.label()));
        }
    }
    ok &= shared.len() >= 3;
    parts.push(format!("shared potentials agree {agree}/{}", shared.len()));
    Ok((ok, parts.join("; ")))
}

fn unitary(n: usize, rng: &mut ChaCha8Rng) -> DMatrix<C> {
    let g = DMatrix::from_fn(n, n, |_, _| {
        let re: f64 = StandardNormal.sample(&mut *rng);
        let im: f64 = StandardNormal.sample(&mut *rng);
        C::new(re, im)
    });
    g.qr().q()
}

/// `U S V^H` with `nullity` zero singular values and the rest in `[0.5, 2)`.
pub fn planted_matrix(n: usize, nullity: usize, rng: &mut ChaCha8Rng) -> DMatrix<C> {
    let u = unitary(n, rng);
    let v = unitary(n, rng);
    let s = DMatrix::from_fn(n, n, |i, j| {
        if i == j && i >= nullity {
            C::new(rng.random_range(0.5..2.0), 0.0)
        } else {
            C::new(0.0, 0.0)
        }
    });
    u * s * v.adjoint()
}

fn nullity() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut agree = 0;
    for case in 0..100u64 {
        let n = 3 + (case % 6) as usize;
        let planted = (case % 4) as usize;
        let m = planted_matrix(n, planted, &mut rng);
        let found = matrix_nullity_by_perturbation(&m, 20, case).map_err(err)?;
        if found == planted && svd_nullity(&m) == planted {
            agree += 1;
        }
    }
    let mut jordan = DMatrix::<C>::zeros(3, 3);
    jordan[(0, 1)] = C::new(1.0, 0.0);
    jordan[(1, 2)] = C::new(1.0, 0.0);
    let j = matrix_nullity_by_perturbation(&jordan, 20, 7).map_err(err)?;
    Ok((agree == 100 && j == 1, format!("planted agree {agree}/100, jordan nullity {j}")))
}

fn inverse_residuals(h: f64) -> Result<(f64, f64), String> {
    let mesh = line_mesh(20.0, h)?;
    let p = SpectralParameter::interior(C::new(-1.0, 0.0)).map_err(err)?;
    let map = free_resolvent_map(1, &mesh, &p).map_err(err)?;
    let pts = mesh.points();
    let f: Vec<C> = pts.iter().map(|x| C::new((-x * x).exp(), 0.0)).collect();
    let u = map.apply(&f).map_err(err)?;
    let left = (1..pts.len() - 1)
        .filter(|&i| pts[i].abs() <= 4.0)
        .map(|i| ((-(u[i - 1] - u[i] * 2.0 + u[i + 1]) / (h * h) + u[i]) - f[i]).norm())
        .fold(0.0, f64::max);
    let a = finite_difference_matrix(&mesh, &Potential1D::zero(), &p).map_err(err)?;
    let back = map.apply(&a.matvec(&f)).map_err(err)?;
    let right = back.iter().zip(&f).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
    Ok((left, right))
}

fn hygiene() -> Check {
    let mut ok = true;
    let mut parts = Vec::new();

    let (l1, r1) = inverse_residuals(0.02)?;
    let (l2, r2) = inverse_residuals(0.01)?;
    let (lr, rr) = (l1 / l2, r1 / r2);
    ok &= (3.5..4.5).contains(&lr) && (3.5..4.5).contains(&rr) && l2 < 1e-4 && r2 < 1e-4;
    parts.push(format!("inverse ratios {lr:.3}/{rr:.3}"));

    let mesh = line_mesh(5.0, 5.0 / 80.0)?;
    let v = Potential1D::bump(C::new(0.5, 0.7), 1.0).map_err(err)?;
    let ops = [
        OperatorSpec::new(OperatorKind::Free1D, mesh.clone()).map_err(err)?,
        OperatorSpec::new(OperatorKind::Schrodinger1D(v.clone()), mesh.clone()).map_err(err)?,
        OperatorSpec::new(OperatorKind::Schrodinger1D(v), mesh)
            .and_then(|o| o.with_profiles(&[Profile::indicator(1.0)]))
            .map_err(err)?,
    ];
    let (s, t) = (WeightExponent::new(1.5).map_err(err)?, WeightExponent::new(0.7).map_err(err)?);
    let mut worst_adj = 0.0_f64;
    for op in &ops {
        for z in [C::new(-0.5, 0.0), C::new(0.3, 0.4), C::new(-2.0, -1.0)] {
            let m = resolvent_matrix(op, &SpectralParameter::interior(z).map_err(err)?).map_err(err)?;
            let a = operator_norm_weighted_svd(&m, s, t).map_err(err)?;
            let b = operator_norm_weighted_svd(&m.adjoint(), t, s).map_err(err)?;
            worst_adj = worst_adj.max((a - b).abs() / a);
        }
    }
    ok &= worst_adj <= 1e-10;
    parts.push(format!("adjoint rel={worst_adj:.1e}"));

    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst_kernel = 0.0_f64;
    for _ in 0..500 {
        let x: f64 = rng.random_range(-10.0..10.0);
        let y: f64 = rng.random_range(-10.0..10.0);
        let r: f64 = rng.random_range(0.01..10.0);
        let mut z = C::new(rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0));
        if z.im.abs() < 1e-3 && z.re >= 0.0 {
            z.im = 0.5;
        }
        let p = SpectralParameter::interior(z).map_err(err)?;
        let q = SpectralParameter::interior(z.conj()).map_err(err)?;
        let rel = |a: C, b: C| (a - b).norm() / a.norm().max(1e-300);
        let sym = rel(kernel_1d(x, y, &p).map_err(err)?, kernel_1d(y, x, &p).map_err(err)?);
        let c1 = rel(kernel_1d(x, y, &q).map_err(err)?, kernel_1d(x, y, &p).map_err(err)?.conj());
        let c2 = rel(kernel_2d(r, &q).map_err(err)?, kernel_2d(r, &p).map_err(err)?.conj());
        let c3 = rel(kernel_3d(r, &q).map_err(err)?, kernel_3d(r, &p).map_err(err)?.conj());
        worst_kernel = worst_kernel.max(sym).max(c1).max(c2).max(c3);
    }
    ok &= worst_kernel <= 1e-12;
    parts.push(format!("kernel identities rel={worst_kernel:.1e}"));

    let once = render(&run_suite(&[3, 6, 9]));
    let twice = render(&run_suite(&[3, 6, 9]));
    let deterministic = once == twice;
    ok &= deterministic;
    parts.push(format!("deterministic={deterministic}"));
    Ok((ok, parts.join("; ")))
}
