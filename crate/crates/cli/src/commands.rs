//! Subcommand bodies. Each returns the table to write and a one-line verdict.

use std::path::Path;

use nalgebra::DMatrix;
use serde_json::{json, Value};
use virtlev_core::criticality::{null_state_iteration, Dichotomy, QuadraticForm};
use virtlev_core::discrete_ops::{build_shift_virtual_level_with, SeqVector};
use virtlev_core::free_resolvent::{kernel_1d, kernel_2d, kernel_3d, Approach, SpectralParameter};
use virtlev_core::jost::{classify_threshold_1d, jost_pair};
use virtlev_core::lap_sweep::{classify, NormFlavor, OperatorKind, OperatorSpec, Profile, SweepConfig};
use virtlev_core::output::{fmt15, CsvTable};
use virtlev_core::perturbation::{
    embedded_family_check, matrix_nullity_by_perturbation, square_well_eigenvalue, svd_nullity,
    BifurcationCurve,
};
use virtlev_core::potential::{parse_complex, parse_potential_spec, parse_real, Potential1D};
use virtlev_core::report::{Classification, ThresholdReport};
use virtlev_core::weighted_space::{Grid1D, Mesh, RadialGrid};
use virtlev_core::Complex64;

use crate::config::ExperimentConfig;
use crate::error::CliError;
use crate::suite;

type C = Complex64;

pub struct Outcome {
    /// Main output, written to `output`.
    pub table: String,
    pub verdict: String,
    pub report: Option<Value>,
    /// False when the command ran but its check failed (exit code 1).
    pub ok: bool,
}

impl Outcome {
    fn new(table: String, verdict: String) -> Self {
        Self { table, verdict, report: None, ok: true }
    }
}

pub fn execute(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    match cfg.command.as_str() {
        "kernel" => kernel(cfg),
        "jost" => jost(cfg),
        "sweep" => sweep(cfg),
        "bifurcate" => bifurcate(cfg),
        "shift" => shift(cfg),
        "embedded" => embedded(cfg),
        "critical" => critical(cfg),
        "nullity" => nullity(cfg),
        "suite" => run_suite(cfg),
        other => Err(CliError::Usage(format!("unknown subcommand `{other}`"))),
    }
}

fn table(cfg: &ExperimentConfig, header: &[&str]) -> CsvTable {
    CsvTable::new(header).with_preamble(cfg.preamble())
}

fn potential(cfg: &ExperimentConfig) -> Result<Potential1D, CliError> {
    Ok(parse_potential_spec(cfg.str("potential"))?.resolve(Path::new("."))?)
}

pub fn report_json(r: &ThresholdReport) -> Value {
    let (rank, log) = match &r.classification {
        Classification::Virtual { rank, log, .. } => (json!(rank), json!(log)),
        _ => (Value::Null, Value::Null),
    };
    json!({
        "classification": r.classification.label(),
        "rank": rank,
        "log": log,
        "alpha": r.alpha,
        "r_squared": r.r_squared,
        "diagnostics": r.diagnostics,
        "notes": r.notes,
        "points": r.points.iter().map(|p| json!({
            "radius": p.radius, "norm": p.norm, "z_re": p.z.re, "z_im": p.z.im,
        })).collect::<Vec<_>>(),
    })
}

pub fn verdict(r: &ThresholdReport) -> String {
    let mut parts = Vec::new();
    if let Classification::Virtual { log: true, .. } = r.classification {
        parts.push("log".to_string());
    }
    if let Some(a) = r.alpha {
        parts.push(format!("alpha≈{a:.3}"));
    }
    if let Some(r2) = r.r_squared {
        parts.push(format!("r2={r2:.4}"));
    }
    if let Classification::Virtual { rank: Some(k), .. } = r.classification {
        parts.push(format!("rank {k}"));
    }
    if let Some(w) = r.diagnostics.get("wronskian_abs") {
        parts.push(format!("|W|={w:.6e}"));
    }
    if parts.is_empty() {
        r.classification.label().to_string()
    } else {
        format!("{} ({})", r.classification.label(), parts.join(", "))
    }
}

fn kernel(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let dim = cfg.usize("dim")?;
    let z = cfg.complex("z")?;
    let approach = match cfg.str("approach") {
        "interior" => Approach::Interior,
        "upper" => Approach::FromUpperHalfPlane,
        "lower" => Approach::FromLowerHalfPlane,
        "negative" => Approach::AlongNegativeAxis,
        other => return Err(CliError::Config(format!("`approach`: unknown value `{other}`"))),
    };
    let p = SpectralParameter::new(z, approach)?;
    let (rmin, rmax, count) = (cfg.f64("rmin")?, cfg.f64("rmax")?, cfg.usize("count")?);
    if !(rmin > 0.0 && rmax >= rmin) || count == 0 {
        return Err(CliError::Config("need 0 < rmin <= rmax and count >= 1".into()));
    }
    let mut t = table(cfg, &["r", "kernel_re", "kernel_im"]);
    for i in 0..count {
        let r = if count == 1 { rmin } else { rmin + (rmax - rmin) * i as f64 / (count - 1) as f64 };
        let g = match dim {
            1 => kernel_1d(r, 0.0, &p)?,
            2 => kernel_2d(r, &p)?,
            3 => kernel_3d(r, &p)?,
            d => return Err(CliError::Config(format!("`dim`: {d} is not 1, 2 or 3"))),
        };
        t.push_floats(&[r, g.re, g.im]);
    }
    Ok(Outcome::new(t.render(), format!("kernel d={dim} at z={z}: {count} samples")))
}

fn jost(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let v = potential(cfg)?;
    let grid = Grid1D::new(cfg.f64("radius")?, cfg.usize("n")?)?;
    let pair = jost_pair(&v, &grid, C::new(0.0, 0.0))?;
    let report = classify_threshold_1d(&v, &grid, cfg.f64("tol")?)?;
    let mut t = table(cfg, &["x", "theta_plus_re", "theta_plus_im", "theta_minus_re", "theta_minus_im"]);
    for (i, &x) in grid.points().iter().enumerate() {
        let (p, m) = (pair.theta_plus.values[i], pair.theta_minus.values[i]);
        t.push_floats(&[x, p.re, p.im, m.re, m.im]);
    }
    let mut out = Outcome::new(t.render(), verdict(&report));
    out.report = Some(report_json(&report));
    Ok(out)
}

/// Operator and sweep configuration of the `sweep` command.
pub fn sweep_setup(cfg: &ExperimentConfig) -> Result<(OperatorSpec, SweepConfig, f64), CliError> {
    let v = potential(cfg)?;
    let (radius, h) = (cfg.f64("radius")?, cfg.f64("h")?);
    let line = || Grid1D::with_spacing(radius, h).map(Mesh::Line);
    let radial = || RadialGrid::with_spacing(radius, h).map(Mesh::Radial);
    let free = v == Potential1D::zero();
    let op = cfg.str("op");
    let (kind, mesh) = match op {
        "free1d" | "free2d" | "free3d" if !free => {
            return Err(CliError::Config(format!("`{op}` takes no potential; use schrodinger1d or schrodinger3d")))
        }
        "free1d" => (OperatorKind::Free1D, line()?),
        "free2d" => (OperatorKind::Free2DRadial, radial()?),
        "free3d" => (OperatorKind::Free3DRadial, radial()?),
        "schrodinger1d" => (OperatorKind::Schrodinger1D(v), line()?),
        "schrodinger3d" => (OperatorKind::Schrodinger3DRadial(v), radial()?),
        other => return Err(CliError::Config(format!("`op`: unknown operator `{other}`"))),
    };
    let mut spec = OperatorSpec::new(kind, mesh)?;
    let powers = cfg.list("profiles")?;
    if !powers.is_empty() {
        let a = cfg.f64("profile-a")?;
        let profiles = powers
            .iter()
            .map(|p| p.parse::<u32>().map(|power| Profile { power, a }))
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| CliError::Config(format!("`profiles`: {e}")))?;
        spec = spec.with_profiles(&profiles)?;
    }
    let flavor = match cfg.str("flavor") {
        "l2" => NormFlavor::WeightedL2,
        "l1linf" => NormFlavor::L1ToLinf,
        other => return Err(CliError::Config(format!("`flavor`: unknown value `{other}`"))),
    };
    let radii = SweepConfig::geometric_radii(cfg.f64("r0")?, cfg.f64("rho")?, cfg.usize("count")?);
    let sweep = SweepConfig::new(cfg.complex("z0")?, cfg.angle("ray")?, radii, cfg.f64("s")?, cfg.f64("sp")?, flavor)
        .map_err(|e| CliError::Config(e.to_string()))?;
    Ok((spec, sweep, cfg.f64("tol-alpha")?))
}

fn sweep(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let (op, sweep, tol) = sweep_setup(cfg)?;
    let report = classify(&op, &sweep, tol)?;
    let mut t = table(cfg, &["radius", "norm", "z_re", "z_im"]);
    for p in &report.points {
        t.push_floats(&[p.radius, p.norm, p.z.re, p.z.im]);
    }
    let mut out = Outcome::new(t.render(), verdict(&report));
    out.report = Some(report_json(&report));
    Ok(out)
}

fn bifurcate(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let gs = cfg
        .list("g")?
        .iter()
        .map(|g| parse_real(g))
        .collect::<virtlev_core::Result<Vec<f64>>>()
        .map_err(|e| CliError::Config(format!("`g`: {e}")))?;
    if let [g] = gs.as_slice() {
        let e = square_well_eigenvalue(*g)?.energy;
        let mut t = table(cfg, &["g", "E", "E_predicted"]);
        t.push_floats(&[*g, e, -g * g]);
        return Ok(Outcome::new(t.render(), format!("E = {} (-g^2 = {})", fmt15(e), fmt15(-g * g))));
    }
    let curve = BifurcationCurve::compute(&gs)?;
    let t = curve.to_csv().with_preamble(cfg.preamble());
    Ok(Outcome::new(
        t.render(),
        format!("slope {:.4}, E + g^2 = C g^3 with C = {:.4}", curve.slope, curve.cubic_coefficient),
    ))
}

fn shift(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let z0 = cfg.complex("z0")?;
    let values = cfg
        .list("phi")?
        .iter()
        .map(|v| parse_complex(v))
        .collect::<virtlev_core::Result<Vec<C>>>()
        .map_err(|e| CliError::Config(format!("`phi`: {e}")))?;
    let phi = SeqVector::padded(&values, cfg.usize("n")?).map_err(|e| CliError::Config(e.to_string()))?;
    let level = build_shift_virtual_level_with(z0, &phi, cfg.usize("band")?)?;
    let mut t = table(cfg, &["i", "psi_re", "psi_im"]);
    for (i, p) in level.psi.entries.iter().enumerate() {
        t.push_raw(vec![(i + 1).to_string(), fmt15(p.re), fmt15(p.im)]);
    }
    Ok(Outcome::new(
        t.render(),
        format!("virtual state at z0={z0}: residual {:.3e}, dimension {}", level.residual, level.dimension),
    ))
}

fn embedded(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let fam = embedded_family_check(cfg.f64("zeta0")?, cfg.usize("n")?)?;
    let max_res = fam.samples.iter().map(|s| s.residual).fold(0.0, f64::max);
    let growth = if fam.monotone_growth() { "monotone growth" } else { "non-monotone norms" };
    let mut out = Outcome::new(
        fam.to_csv().with_preamble(cfg.preamble()).render(),
        format!("{}; max residual {max_res:.3e}, {growth}", verdict(&fam.report)),
    );
    out.report = Some(report_json(&fam.report));
    Ok(out)
}

fn critical(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let v = potential(cfg)?;
    let (radius, h) = (cfg.f64("radius")?, cfg.f64("h")?);
    let mesh = match cfg.str("geometry") {
        "line" => Mesh::Line(Grid1D::with_spacing(radius, h)?),
        "radial" => Mesh::Radial(RadialGrid::with_spacing(radius, h)?),
        other => return Err(CliError::Config(format!("`geometry`: unknown value `{other}`"))),
    };
    let form = QuadraticForm::new(mesh, &v)?;
    let result = null_state_iteration(&form, cfg.f64("k")?, cfg.usize("j-max")?)?;
    let verdict = match &result.verdict {
        Dichotomy::NullState { phi } => {
            let min = phi.iter().cloned().fold(f64::INFINITY, f64::min);
            format!("NullState (min phi {min:.4})")
        }
        Dichotomy::WeightedGap { c, margin, .. } => format!("WeightedGap (c={c:.6}, margin={margin:.3e})"),
        Dichotomy::Inconclusive => "Inconclusive".to_string(),
    };
    Ok(Outcome::new(result.to_csv().with_preamble(cfg.preamble()).render(), verdict))
}

/// Rows separated by `;`, entries by `,`.
pub fn parse_matrix(text: &str) -> Result<DMatrix<C>, CliError> {
    let rows: Vec<Vec<C>> = text
        .split(';')
        .map(|row| row.split(',').map(parse_complex).collect::<virtlev_core::Result<Vec<C>>>())
        .collect::<virtlev_core::Result<_>>()
        .map_err(|e| CliError::Config(format!("`matrix`: {e}")))?;
    let n = rows.len();
    if rows.iter().any(|r| r.len() != n) {
        return Err(CliError::Config(format!("`matrix`: not square ({n} rows)")));
    }
    Ok(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
}

fn nullity(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let m = parse_matrix(cfg.str("matrix"))?;
    let found = matrix_nullity_by_perturbation(&m, cfg.usize("trials")?, cfg.u64("seed")?)?;
    let mut t = table(cfg, &["nullity", "svd_nullity"]);
    t.push_raw(vec![found.to_string(), svd_nullity(&m).to_string()]);
    Ok(Outcome::new(t.render(), format!("nullity {found}")))
}

fn run_suite(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let ids = cfg
        .list("only")?
        .iter()
        .map(|s| match s.parse::<u8>() {
            Ok(id) if suite::CRITERIA.iter().any(|(k, _)| *k == id) => Ok(id),
            _ => Err(CliError::Config(format!("`only`: no criterion `{s}`"))),
        })
        .collect::<Result<Vec<u8>, _>>()?;
    let ids = if ids.is_empty() { suite::CRITERIA.iter().map(|(k, _)| *k).collect() } else { ids };
    let results = suite::run_suite(&ids);
    let passed = results.iter().filter(|r| r.passed).count();
    let mut out = Outcome::new(
        suite::render(&results),
        format!("suite: {passed} of {} criteria passed", results.len()),
    );
    out.ok = passed == results.len();
    Ok(out)
}
