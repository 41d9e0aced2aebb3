//! Null state or weighted spectral gap for nonnegative forms
//! `a[u] = int |u'|^2 + V |u|^2` on a Dirichlet-truncated grid.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::lowest_symmetric_eigenpair;
use crate::output::CsvTable;
use crate::potential::Potential1D;
use crate::weighted_space::Mesh;

/// Lowest eigenvalues above `-NONNEGATIVE_TOL` count as nonnegative.
pub const NONNEGATIVE_TOL: f64 = 1e-10;
/// Eigenvalues of `H - W_j` below `-BINDING_TOL` count as bound states.
pub const BINDING_TOL: f64 = 1e-12;
/// Sup-distance between the last iterates accepted as convergence.
pub const CAUCHY_TOL: f64 = 0.05;

/// Discrete form on a line or radial mesh (`u = r psi` in the radial case),
/// with `u = 0` beyond the mesh.
#[derive(Debug, Clone)]
pub struct QuadraticForm {
    mesh: Mesh,
    potential: Vec<f64>,
}

impl QuadraticForm {
    pub fn new(mesh: Mesh, potential: &Potential1D) -> Result<Self> {
        if matches!(mesh, Mesh::Lattice(_)) {
            return Err(Error::InvalidInput("quadratic forms need a line or radial mesh".into()));
        }
        if !potential.is_real() {
            return Err(Error::InvalidInput("quadratic forms need a real potential".into()));
        }
        let values = potential.sample(mesh.points()).iter().map(|v| v.re).collect();
        let form = Self { mesh, potential: values };
        let lowest = form.lowest(&vec![0.0; form.mesh.len()])?.0;
        if lowest < -NONNEGATIVE_TOL {
            return Err(Error::InvalidInput(format!("form is not nonnegative (lowest eigenvalue {lowest:e})")));
        }
        Ok(form)
    }

    pub fn mesh(&self) -> &Mesh {
        &self.mesh
    }

    /// `a[u]` for a real grid function.
    pub fn evaluate(&self, u: &[f64]) -> f64 {
        let h = self.mesh.spacing();
        let mut acc = 0.0;
        let mut prev = 0.0;
        for (ui, vi) in u.iter().zip(&self.potential) {
            acc += (ui - prev).powi(2) / h + vi * ui * ui * h;
            prev = *ui;
        }
        acc + prev * prev / h
    }

    /// Lowest eigenpair of `H - w`.
    pub fn lowest(&self, w: &[f64]) -> Result<(f64, Vec<f64>)> {
        let h = self.mesh.spacing();
        let inv_h2 = 1.0 / (h * h);
        let diag: Vec<f64> = self.potential.iter().zip(w).map(|(v, wi)| 2.0 * inv_h2 + v - wi).collect();
        let off = vec![-inv_h2; diag.len() - 1];
        lowest_symmetric_eigenpair(&diag, &off)
    }

    fn sample(&self, f: impl Fn(f64) -> f64) -> Vec<f64> {
        self.mesh.points().iter().map(|&x| f(x)).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Dichotomy {
    /// Sup-normalized positive limit of the minimizers.
    NullState { phi: Vec<f64> },
    /// `w = c <x>^{-4}` with `H - w >= margin`.
    WeightedGap { c: f64, w: Vec<f64>, margin: f64 },
    Inconclusive,
}

impl Dichotomy {
    pub fn label(&self) -> &'static str {
        match self {
            Dichotomy::NullState { .. } => "NullState",
            Dichotomy::WeightedGap { .. } => "WeightedGap",
            Dichotomy::Inconclusive => "Inconclusive",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceEntry {
    pub j: usize,
    pub lambda: f64,
    /// `sup_{|x|<=K} |psi_j - psi_{j_max}|`.
    pub sup_dist_to_limit: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DichotomyResult {
    pub verdict: Dichotomy,
    pub trace: Vec<TraceEntry>,
}

impl DichotomyResult {
    pub fn to_csv(&self) -> CsvTable {
        let mut t = CsvTable::new(&["j", "lambda", "sup_dist_to_limit"]);
        for e in &self.trace {
            t.push_raw(vec![
                e.j.to_string(),
                crate::output::fmt15(e.lambda),
                crate::output::fmt15(e.sup_dist_to_limit),
            ]);
        }
        t
    }
}

fn sup_normalized(mut v: Vec<f64>) -> Vec<f64> {
    let peak = v.iter().cloned().fold(0.0_f64, |m, x| if x.abs() > m.abs() { x } else { m });
    if peak != 0.0 {
        v.iter_mut().for_each(|x| *x /= peak);
    }
    v
}

/// Minimizers of `a[u] - (1/j) int_{|x|<=K} |u|^2` for `j = 1..=j_max`.
/// If all of them are bound states and they converge on `|x| <= K`, the limit
/// is a null state; if some is not, the form has a weighted gap.
pub fn null_state_iteration(form: &QuadraticForm, k: f64, j_max: usize) -> Result<DichotomyResult> {
    if !(k > 0.0) || j_max < 2 {
        return Err(Error::InvalidInput("need K > 0 and j_max >= 2".into()));
    }
    let inside: Vec<bool> = form.mesh.points().iter().map(|x| x.abs() <= k).collect();
    let pairs: Vec<(f64, Vec<f64>)> = (1..=j_max)
        .into_par_iter()
        .map(|j| {
            let w: Vec<f64> = inside.iter().map(|&b| if b { 1.0 / j as f64 } else { 0.0 }).collect();
            form.lowest(&w).map(|(l, v)| (l, sup_normalized(v)))
        })
        .collect::<Result<_>>()?;
    let limit = &pairs[j_max - 1].1;
    let dist = |v: &[f64]| {
        v.iter().zip(limit).zip(&inside).filter(|(_, &b)| b).map(|((a, b), _)| (a - b).abs()).fold(0.0, f64::max)
    };
    let trace: Vec<TraceEntry> = pairs
        .iter()
        .enumerate()
        .map(|(i, (lambda, v))| TraceEntry { j: i + 1, lambda: *lambda, sup_dist_to_limit: dist(v) })
        .collect();
    let verdict = if pairs.iter().all(|(l, _)| *l < -BINDING_TOL) {
        let half = &pairs[j_max / 2 - 1].1;
        if dist(half) <= CAUCHY_TOL && limit.iter().all(|&x| x > 0.0) {
            Dichotomy::NullState { phi: limit.clone() }
        } else {
            Dichotomy::Inconclusive
        }
    } else {
        weighted_gap(form)?
    };
    Ok(DichotomyResult { verdict, trace })
}

/// Largest `c` (by bisection) with `H - c <x>^{-4} >= 0`; the returned
/// weight uses half of it.
pub fn weighted_gap(form: &QuadraticForm) -> Result<Dichotomy> {
    let profile = form.sample(|x| (1.0 + x * x).powi(-2));
    let lowest_with = |c: f64| -> Result<f64> {
        let w: Vec<f64> = profile.iter().map(|p| c * p).collect();
        Ok(form.lowest(&w)?.0)
    };
    let mut hi = 1.0;
    while lowest_with(hi)? >= -NONNEGATIVE_TOL {
        hi *= 2.0;
        if hi > 1e12 {
            return Err(Error::NotConverged("weighted gap bracket".into()));
        }
    }
    let mut lo = 0.0;
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if lowest_with(mid)? >= -NONNEGATIVE_TOL {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-6 * hi {
            break;
        }
    }
    let c = 0.5 * lo;
    if !(c > 0.0) {
        return Ok(Dichotomy::Inconclusive);
    }
    let w: Vec<f64> = profile.iter().map(|p| c * p).collect();
    let margin = form.lowest(&w)?.0;
    Ok(Dichotomy::WeightedGap { c, w, margin })
}

/// Whether `int w |u|^2 <= a[u]` on the grid: the lowest eigenvalue of
/// `H - w` and whether it is nonnegative.
pub fn hardy_gap_check(form: &QuadraticForm, w: &[f64]) -> Result<(bool, f64)> {
    if w.len() != form.mesh.len() {
        return Err(Error::Dimension { expected: form.mesh.len(), got: w.len() });
    }
    if w.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
        return Err(Error::InvalidInput("weights must be nonnegative and finite".into()));
    }
    let margin = form.lowest(w)?.0;
    Ok((margin >= -NONNEGATIVE_TOL, margin))
}
