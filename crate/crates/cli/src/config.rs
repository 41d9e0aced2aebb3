//! Experiment configuration: a flat `key = value` map per subcommand.
//!
//! Every key has a default listed in [`KEYS`]. Values come from the
//! defaults, then from an optional config file, then from flags.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use virtlev_core::potential::{parse_complex, parse_real};
use virtlev_core::Complex64;

use crate::error::CliError;

type C = Complex64;

pub const COMMANDS: &[(&str, &str)] = &[
    ("kernel", "Sample a free resolvent kernel"),
    ("jost", "Jost solutions and the threshold Wronskian of a 1D potential"),
    ("sweep", "Resolvent-norm sweep toward a threshold and its classification"),
    ("bifurcate", "Square-well eigenvalues against the -g^2 law"),
    ("shift", "Virtual state of a rank-one perturbation of the left shift"),
    ("embedded", "Embedded-eigenvalue family in 3D and the sweep at its limit"),
    ("critical", "Null state or weighted gap of a nonnegative form"),
    ("nullity", "Matrix nullity from random low-rank perturbations"),
    ("suite", "Run the acceptance criteria"),
];

/// `(command, key, default, help)`.
pub const KEYS: &[(&str, &str, &str, &str)] = &[
    ("kernel", "dim", "1", "dimension: 1, 2 or 3"),
    ("kernel", "z", "-1", "spectral parameter"),
    ("kernel", "approach", "interior", "interior, upper, lower or negative"),
    ("kernel", "rmin", "0.1", "smallest distance"),
    ("kernel", "rmax", "5", "largest distance"),
    ("kernel", "count", "50", "number of samples"),
    ("kernel", "output", "-", "CSV path, - for stdout"),
    ("jost", "potential", "box:amp=1,a=1", "potential spec"),
    ("jost", "radius", "4", "grid half-width"),
    ("jost", "n", "801", "grid points"),
    ("jost", "tol", "1e-6", "relative Wronskian tolerance"),
    ("jost", "output", "-", "CSV path, - for stdout"),
    ("jost", "report", "", "JSON report path"),
    ("sweep", "op", "free1d", "free1d, free2d, free3d, schrodinger1d or schrodinger3d"),
    ("sweep", "potential", "zero", "potential spec"),
    ("sweep", "profiles", "", "powers of rank-one profiles x^p on [-a, a], comma separated"),
    ("sweep", "profile-a", "1", "half-width a of the profiles"),
    ("sweep", "z0", "0", "threshold"),
    ("sweep", "ray", "pi", "ray angle in [0, 2 pi)"),
    ("sweep", "s", "1", "input weight exponent"),
    ("sweep", "sp", "1", "output weight exponent"),
    ("sweep", "r0", "1e-2", "largest radius"),
    ("sweep", "rho", "0.421696503428582", "radius ratio"),
    ("sweep", "count", "9", "number of radii"),
    ("sweep", "radius", "50", "grid half-width"),
    ("sweep", "h", "0.01", "grid spacing"),
    ("sweep", "flavor", "l2", "l2 (weighted) or l1linf"),
    ("sweep", "tol-alpha", "0.1", "exponent threshold"),
    ("sweep", "output", "-", "CSV path, - for stdout"),
    ("sweep", "report", "", "JSON report path"),
    ("bifurcate", "g", "0.04,0.02,0.01,0.005", "couplings, comma separated"),
    ("bifurcate", "output", "-", "CSV path, - for stdout"),
    ("shift", "z0", "1", "point on the unit circle, or polar:ANGLE"),
    ("shift", "phi", "1", "leading entries of phi, comma separated"),
    ("shift", "n", "512", "truncation length"),
    ("shift", "band", "64", "edge band excluded from the residual"),
    ("shift", "output", "-", "CSV path, - for stdout"),
    ("embedded", "zeta0", "0", "limit of zeta"),
    ("embedded", "n", "8", "family members"),
    ("embedded", "output", "-", "CSV path, - for stdout"),
    ("embedded", "report", "", "JSON report path"),
    ("critical", "geometry", "line", "line or radial"),
    ("critical", "potential", "zero", "potential spec"),
    ("critical", "radius", "400", "domain size"),
    ("critical", "h", "0.05", "grid spacing"),
    ("critical", "k", "1", "support radius of the test perturbations"),
    ("critical", "j-max", "64", "number of test perturbations"),
    ("critical", "output", "-", "CSV path, - for stdout"),
    ("nullity", "matrix", "0,1,0;0,0,1;0,0,0", "rows separated by ;, entries by ,"),
    ("nullity", "trials", "20", "samples per rank"),
    ("nullity", "seed", "7", "rng seed"),
    ("nullity", "output", "-", "CSV path, - for stdout"),
    ("suite", "only", "", "criteria to run, comma separated (all if empty)"),
    ("suite", "output", "-", "output path, - for stdout"),
];

pub fn keys_for(command: &str) -> impl Iterator<Item = &'static (&'static str, &'static str, &'static str, &'static str)> + '_ {
    KEYS.iter().filter(move |k| k.0 == command)
}

/// Parses `key = value` lines. Blank lines and lines starting with `#` are
/// skipped; keys may not repeat.
pub fn parse_config(text: &str) -> Result<Vec<(String, String)>, CliError> {
    let mut out: Vec<(String, String)> = Vec::new();
    for (no, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| CliError::Config(format!("line {}: expected `key = value`", no + 1)))?;
        let k = k.trim();
        if k.is_empty() || k.chars().any(char::is_whitespace) {
            return Err(CliError::Config(format!("line {}: bad key `{k}`", no + 1)));
        }
        if out.iter().any(|(seen, _)| seen == k) {
            return Err(CliError::Config(format!("line {}: duplicate key `{k}`", no + 1)));
        }
        out.push((k.to_string(), v.trim().to_string()));
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExperimentConfig {
    pub command: String,
    values: BTreeMap<String, String>,
}

impl ExperimentConfig {
    pub fn defaults(command: &str) -> Result<Self, CliError> {
        if !COMMANDS.iter().any(|(c, _)| *c == command) {
            return Err(CliError::Usage(format!("unknown subcommand `{command}`")));
        }
        let values = keys_for(command).map(|(_, k, d, _)| (k.to_string(), d.to_string())).collect();
        Ok(Self { command: command.to_string(), values })
    }

    /// Defaults overridden by the entries of a config file.
    pub fn from_text(command: &str, text: &str) -> Result<Self, CliError> {
        let mut cfg = Self::defaults(command)?;
        for (k, v) in parse_config(text)? {
            cfg.set(&k, &v)?;
        }
        Ok(cfg)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<(), CliError> {
        if value.contains('\n') {
            return Err(CliError::Config(format!("value of `{key}` spans lines")));
        }
        match self.values.get_mut(key) {
            Some(slot) => {
                *slot = value.trim().to_string();
                Ok(())
            }
            None => Err(CliError::Config(format!("unknown key `{key}` for `{}`", self.command))),
        }
    }

    /// Config file text that parses back to `self`.
    pub fn render(&self) -> String {
        self.values.iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }

    /// `# command = ...` followed by every resolved key, for CSV headers.
    pub fn preamble(&self) -> Vec<(String, String)> {
        std::iter::once(("command".to_string(), self.command.clone()))
            .chain(self.values.iter().map(|(k, v)| (k.clone(), v.clone())))
            .collect()
    }

    pub fn values(&self) -> &BTreeMap<String, String> {
        &self.values
    }

    pub fn str(&self, key: &str) -> &str {
        self.values.get(key).map(String::as_str).unwrap_or_else(|| panic!("no key `{key}` for {}", self.command))
    }

    fn wrap<T>(&self, key: &str, r: virtlev_core::Result<T>) -> Result<T, CliError> {
        r.map_err(|e| CliError::Config(format!("`{key}`: {e}")))
    }

    pub fn f64(&self, key: &str) -> Result<f64, CliError> {
        self.wrap(key, parse_real(self.str(key)))
    }

    pub fn complex(&self, key: &str) -> Result<C, CliError> {
        let text = self.str(key);
        if let Some(angle) = text.strip_prefix("polar:") {
            return Ok(C::from_polar(1.0, parse_angle(angle).map_err(|e| CliError::Config(format!("`{key}`: {e}")))?));
        }
        self.wrap(key, parse_complex(text))
    }

    pub fn usize(&self, key: &str) -> Result<usize, CliError> {
        self.str(key).trim().parse().map_err(|e| CliError::Config(format!("`{key}`: {e}")))
    }

    pub fn u64(&self, key: &str) -> Result<u64, CliError> {
        self.str(key).trim().parse().map_err(|e| CliError::Config(format!("`{key}`: {e}")))
    }

    pub fn angle(&self, key: &str) -> Result<f64, CliError> {
        parse_angle(self.str(key)).map_err(|e| CliError::Config(format!("`{key}`: {e}")))
    }

    /// Comma-separated list, empty entries rejected; an empty value is an
    /// empty list.
    pub fn list(&self, key: &str) -> Result<Vec<String>, CliError> {
        let text = self.str(key).trim();
        if text.is_empty() {
            return Ok(Vec::new());
        }
        text.split(',')
            .map(|t| {
                let t = t.trim();
                if t.is_empty() {
                    Err(CliError::Config(format!("`{key}`: empty list entry")))
                } else {
                    Ok(t.to_string())
                }
            })
            .collect()
    }
}

/// Angles as numbers or multiples of pi: `pi`, `3pi/2`, `0.5*pi`, `pi/4`.
pub fn parse_angle(text: &str) -> Result<f64, String> {
    let t = text.trim().replace(' ', "");
    let Some(idx) = t.find("pi") else {
        return t.parse::<f64>().map_err(|e| format!("`{text}`: {e}")).and_then(finite(text));
    };
    let coef = t[..idx].trim_end_matches('*');
    let rest = &t[idx + 2..];
    let coef = match coef {
        "" => 1.0,
        "-" => -1.0,
        c => c.parse::<f64>().map_err(|e| format!("`{text}`: {e}"))?,
    };
    let div = match rest.strip_prefix('/') {
        Some(d) => d.parse::<f64>().map_err(|e| format!("`{text}`: {e}"))?,
        None if rest.is_empty() => 1.0,
        None => return Err(format!("`{text}` is not an angle")),
    };
    finite(text)(coef * PI / div)
}

fn finite(text: &str) -> impl Fn(f64) -> Result<f64, String> + '_ {
    move |v| if v.is_finite() { Ok(v) } else { Err(format!("`{text}` is not finite")) }
}
