//! Compactly supported complex potentials and their text formats.
//!
//! Spec strings: `zero`, `well:g=0.01` (the well `-g` on `[-a, a]`, default
//! `a = 1`), `box:amp=1,a=1`, `bump:amp=1,a=1` (`amp (1 - x^2/a^2)^3`),
//! `critical:amp=1`, `embedded:zeta=1+0.5i` and `table:path.csv`. Every kind
//! except `table` accepts `shift=x0`. Amplitudes may be complex (`1-0.5i`).
//!
//! Table files have two or three columns `x, V_re[, V_im]`, strictly
//! increasing `x`, `#` comments and an optional header line. Values are
//! interpolated linearly and vanish outside the table range.

use std::fmt;
use std::path::Path;

use num_complex::Complex64;

use crate::error::{Error, Result};

type C = Complex64;

/// Which one-sided limit to take at a jump of the potential.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
    /// Average of the two one-sided limits.
    Mean,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    xs: Vec<f64>,
    values: Vec<C>,
}

impl Table {
    pub fn new(xs: Vec<f64>, values: Vec<C>) -> Result<Self> {
        if xs.len() != values.len() {
            return Err(Error::Dimension { expected: xs.len(), got: values.len() });
        }
        if xs.len() < 2 {
            return Err(Error::Parse("a potential table needs at least two rows".into()));
        }
        if xs.iter().any(|x| !x.is_finite()) || values.iter().any(|v| !(v.re.is_finite() && v.im.is_finite())) {
            return Err(Error::Parse("non-finite entry in potential table".into()));
        }
        if xs.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Parse("table abscissae must be strictly increasing".into()));
        }
        Ok(Self { xs, values })
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut xs = Vec::new();
        let mut values = Vec::new();
        let mut seen_data = false;
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            if !(2..=3).contains(&fields.len()) {
                return Err(Error::Parse(format!(
                    "line {}: expected 2 or 3 columns, found {}",
                    lineno + 1,
                    fields.len()
                )));
            }
            let parsed: std::result::Result<Vec<f64>, _> = fields.iter().map(|f| f.parse::<f64>()).collect();
            match parsed {
                Ok(v) => {
                    seen_data = true;
                    xs.push(v[0]);
                    values.push(C::new(v[1], v.get(2).copied().unwrap_or(0.0)));
                }
                Err(_) if !seen_data && xs.is_empty() => {
                    // Header line.
                    seen_data = true;
                }
                Err(e) => return Err(Error::Parse(format!("line {}: {e}", lineno + 1))),
            }
        }
        Self::new(xs, values)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn range(&self) -> (f64, f64) {
        (self.xs[0], self.xs[self.xs.len() - 1])
    }

    fn value(&self, x: f64, side: Side) -> C {
        let (lo, hi) = self.range();
        let zero = C::new(0.0, 0.0);
        let last = self.values.len() - 1;
        if x == lo {
            return match side {
                Side::Left => zero,
                Side::Right => self.values[0],
                Side::Mean => self.values[0] * 0.5,
            };
        }
        if x == hi {
            return match side {
                Side::Left => self.values[last],
                Side::Right => zero,
                Side::Mean => self.values[last] * 0.5,
            };
        }
        if x < lo || x > hi {
            return zero;
        }
        let idx = self.xs.partition_point(|&t| t <= x);
        let (x0, x1) = (self.xs[idx - 1], self.xs[idx]);
        let t = (x - x0) / (x1 - x0);
        self.values[idx - 1] * (1.0 - t) + self.values[idx] * t
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Shape {
    Zero,
    /// `amp` on `[-a, a]`.
    Box { amp: C, a: f64 },
    /// `amp (1 - x^2/a^2)^3` on `[-a, a]`.
    Bump { amp: C, a: f64 },
    /// `psi''/psi` for `psi = 1 + amp (1 - x^2)^4`: the zero-energy equation
    /// has the bounded solution `psi`.
    Critical { amp: f64 },
    Table(Table),
    /// Radial potential of the embedded-eigenvalue family (supported in the
    /// unit ball).
    Embedded { zeta: C },
}

/// A compactly supported potential on the line (or, for radial problems, on
/// the half-line `r > 0`).
#[derive(Debug, Clone, PartialEq)]
pub struct Potential1D {
    shape: Shape,
    shift: f64,
}

impl Potential1D {
    pub fn new(shape: Shape) -> Result<Self> {
        let bad_width = |a: f64| !(a > 0.0) || !a.is_finite();
        let bad_amp = |v: C| !(v.re.is_finite() && v.im.is_finite());
        match &shape {
            Shape::Box { amp, a } | Shape::Bump { amp, a } if bad_width(*a) || bad_amp(*amp) => {
                return Err(Error::InvalidInput(format!("invalid potential parameters amp = {amp}, a = {a}")));
            }
            Shape::Critical { amp } if !(*amp >= 0.0) || !amp.is_finite() => {
                return Err(Error::InvalidInput(format!("critical potential needs amp >= 0, got {amp}")));
            }
            Shape::Embedded { zeta } if bad_amp(*zeta) || zeta.im < 0.0 => {
                return Err(Error::InvalidInput(format!("embedded family needs Im zeta >= 0, got {zeta}")));
            }
            _ => {}
        }
        Ok(Self { shape, shift: 0.0 })
    }

    pub fn zero() -> Self {
        Self { shape: Shape::Zero, shift: 0.0 }
    }

    /// `-g` on `[-1, 1]`.
    pub fn square_well(g: f64) -> Result<Self> {
        Self::new(Shape::Box { amp: C::new(-g, 0.0), a: 1.0 })
    }

    pub fn indicator(amp: C, a: f64) -> Result<Self> {
        Self::new(Shape::Box { amp, a })
    }

    pub fn bump(amp: C, a: f64) -> Result<Self> {
        Self::new(Shape::Bump { amp, a })
    }

    pub fn critical(amp: f64) -> Result<Self> {
        Self::new(Shape::Critical { amp })
    }

    pub fn table(table: Table) -> Self {
        Self { shape: Shape::Table(table), shift: 0.0 }
    }

    pub fn embedded(zeta: C) -> Result<Self> {
        Self::new(Shape::Embedded { zeta })
    }

    /// `V(x - x0)`.
    pub fn shifted(mut self, x0: f64) -> Self {
        self.shift += x0;
        self
    }

    pub fn shape(&self) -> &Shape {
        &self.shape
    }

    pub fn shift(&self) -> f64 {
        self.shift
    }

    /// Closed interval outside of which `V = 0`; `None` for the zero potential.
    pub fn support(&self) -> Option<(f64, f64)> {
        let (lo, hi) = match &self.shape {
            Shape::Zero => return None,
            Shape::Box { a, .. } | Shape::Bump { a, .. } => (-a, *a),
            Shape::Critical { .. } => (-1.0, 1.0),
            Shape::Table(t) => t.range(),
            Shape::Embedded { .. } => (-1.0, 1.0),
        };
        Some((lo + self.shift, hi + self.shift))
    }

    /// Points where `V` may jump.
    pub fn jumps(&self) -> Vec<f64> {
        let base = match &self.shape {
            Shape::Box { a, .. } => vec![-a, *a],
            Shape::Table(t) => {
                let (lo, hi) = t.range();
                vec![lo, hi]
            }
            Shape::Embedded { .. } => vec![-1.0, 1.0],
            _ => Vec::new(),
        };
        base.into_iter().map(|x| x + self.shift).collect()
    }

    /// Whether `V` is real-valued.
    pub fn is_real(&self) -> bool {
        match &self.shape {
            Shape::Zero | Shape::Critical { .. } => true,
            Shape::Box { amp, .. } | Shape::Bump { amp, .. } => amp.im == 0.0,
            Shape::Table(t) => t.values.iter().all(|v| v.im == 0.0),
            Shape::Embedded { zeta } => zeta.norm() == 0.0,
        }
    }

    /// `V(x)`, using the mean of the one-sided limits at jumps.
    pub fn value(&self, x: f64) -> C {
        self.value_at(x, Side::Mean)
    }

    pub fn value_at(&self, x: f64, side: Side) -> C {
        let zero = C::new(0.0, 0.0);
        let y = x - self.shift;
        match &self.shape {
            Shape::Zero => zero,
            Shape::Box { amp, a } => {
                let inside = y.abs() < *a;
                if y.abs() == *a {
                    // Left limit is inside at +a, right limit is inside at -a.
                    let from_inside = (y > 0.0 && side == Side::Left) || (y < 0.0 && side == Side::Right);
                    match side {
                        Side::Mean => *amp * 0.5,
                        _ if from_inside => *amp,
                        _ => zero,
                    }
                } else if inside {
                    *amp
                } else {
                    zero
                }
            }
            Shape::Bump { amp, a } => {
                if y.abs() >= *a {
                    zero
                } else {
                    let t = 1.0 - (y / a) * (y / a);
                    *amp * (t * t * t)
                }
            }
            Shape::Critical { amp } => {
                if y.abs() >= 1.0 {
                    zero
                } else {
                    let t = 1.0 - y * y;
                    let num = amp * t * t * (56.0 * y * y - 8.0);
                    C::new(num / (1.0 + amp * t.powi(4)), 0.0)
                }
            }
            Shape::Table(t) => t.value(y, side),
            Shape::Embedded { zeta } => {
                let r = y.abs();
                let inner = || crate::perturbation::embedded_potential_3d(*zeta, r).1;
                if r < 1.0 {
                    inner()
                } else if r > 1.0 {
                    zero
                } else {
                    // The outer side of r = 1 is `Right` for y > 0.
                    let outward = if y >= 0.0 { Side::Right } else { Side::Left };
                    match side {
                        Side::Mean => inner() * 0.5,
                        s if s == outward => zero,
                        _ => inner(),
                    }
                }
            }
        }
    }

    /// Samples `V` on `points`, with means at jumps.
    pub fn sample(&self, points: &[f64]) -> Vec<C> {
        points.iter().map(|&x| self.value(x)).collect()
    }
}

impl fmt::Display for Potential1D {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let shift = if self.shift != 0.0 { format!(",shift={}", self.shift) } else { String::new() };
        match &self.shape {
            Shape::Zero if self.shift == 0.0 => write!(f, "zero"),
            Shape::Zero => write!(f, "zero:{}", &shift[1..]),
            Shape::Box { amp, a } if amp.im == 0.0 && amp.re <= 0.0 && *a == 1.0 => {
                write!(f, "well:g={}{shift}", -amp.re)
            }
            Shape::Box { amp, a } => write!(f, "box:amp={},a={a}{shift}", format_complex(*amp)),
            Shape::Bump { amp, a } => write!(f, "bump:amp={},a={a}{shift}", format_complex(*amp)),
            Shape::Critical { amp } => write!(f, "critical:amp={amp}{shift}"),
            Shape::Table(t) => write!(f, "table:<{} rows>{shift}", t.xs.len()),
            Shape::Embedded { zeta } => write!(f, "embedded:zeta={}{shift}", format_complex(*zeta)),
        }
    }
}

/// A parsed potential spec; tables are still file references.
#[derive(Debug, Clone, PartialEq)]
pub enum PotentialSpec {
    Inline(Potential1D),
    TablePath(String),
}

impl PotentialSpec {
    /// Loads table files relative to `base`.
    pub fn resolve(&self, base: &Path) -> Result<Potential1D> {
        match self {
            PotentialSpec::Inline(p) => Ok(p.clone()),
            PotentialSpec::TablePath(path) => {
                let p = Path::new(path);
                let full = if p.is_absolute() { p.to_path_buf() } else { base.join(p) };
                Ok(Potential1D::table(Table::load(&full)?))
            }
        }
    }
}

pub fn parse_potential_spec(text: &str) -> Result<PotentialSpec> {
    let text = text.trim();
    let (kind, rest) = match text.split_once(':') {
        Some((k, r)) => (k.trim(), r.trim()),
        None => (text, ""),
    };
    if kind == "table" {
        if rest.is_empty() {
            return Err(Error::Parse("table spec needs a path".into()));
        }
        return Ok(PotentialSpec::TablePath(rest.to_string()));
    }
    let mut params: Vec<(&str, &str)> = Vec::new();
    if !rest.is_empty() {
        for item in rest.split(',') {
            let (k, v) = item
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("expected key=value in potential spec, found `{item}`")))?;
            let k = k.trim();
            if params.iter().any(|(seen, _)| *seen == k) {
                return Err(Error::Parse(format!("duplicate key `{k}`")));
            }
            params.push((k, v.trim()));
        }
    }
    let allowed: &[&str] = match kind {
        "zero" => &["shift"],
        "well" => &["g", "a", "shift"],
        "box" | "bump" => &["amp", "a", "shift"],
        "critical" => &["amp", "shift"],
        "embedded" => &["zeta", "shift"],
        other => return Err(Error::Parse(format!("unknown potential kind `{other}`"))),
    };
    if let Some((k, _)) = params.iter().find(|(k, _)| !allowed.contains(k)) {
        return Err(Error::Parse(format!("unknown key `{k}` for potential kind `{kind}`")));
    }
    let get = |key: &str| params.iter().find(|(k, _)| *k == key).map(|(_, v)| *v);
    let real = |key: &str, default: Option<f64>| -> Result<f64> {
        match get(key) {
            Some(v) => parse_real(v),
            None => default.ok_or_else(|| Error::Parse(format!("missing `{key}` in `{kind}` spec"))),
        }
    };
    let complex = |key: &str, default: Option<C>| -> Result<C> {
        match get(key) {
            Some(v) => parse_complex(v),
            None => default.ok_or_else(|| Error::Parse(format!("missing `{key}` in `{kind}` spec"))),
        }
    };
    let wrap = |e: Error| match e {
        Error::InvalidInput(m) => Error::Parse(m),
        other => other,
    };
    let potential = match kind {
        "zero" => Potential1D::zero(),
        "well" => {
            let g = real("g", None)?;
            Potential1D::indicator(C::new(-g, 0.0), real("a", Some(1.0))?).map_err(wrap)?
        }
        "box" => Potential1D::indicator(complex("amp", None)?, real("a", Some(1.0))?).map_err(wrap)?,
        "bump" => Potential1D::bump(complex("amp", None)?, real("a", Some(1.0))?).map_err(wrap)?,
        "critical" => Potential1D::critical(real("amp", Some(1.0))?).map_err(wrap)?,
        "embedded" => Potential1D::embedded(complex("zeta", None)?).map_err(wrap)?,
        _ => unreachable!(),
    };
    Ok(PotentialSpec::Inline(potential.shifted(real("shift", Some(0.0))?)))
}

pub fn parse_real(text: &str) -> Result<f64> {
    let v: f64 = text.trim().parse().map_err(|e| Error::Parse(format!("`{text}`: {e}")))?;
    if !v.is_finite() {
        return Err(Error::Parse(format!("`{text}` is not finite")));
    }
    Ok(v)
}

/// Parses `a`, `bi`, `a+bi`, `a-bi`, `i`, `-i`.
pub fn parse_complex(text: &str) -> Result<C> {
    let s = text.trim();
    let err = || Error::Parse(format!("`{text}` is not a complex number"));
    let Some(body) = s.strip_suffix('i') else {
        return Ok(C::new(parse_real(s)?, 0.0));
    };
    let bytes = body.as_bytes();
    let split = (1..bytes.len())
        .rev()
        .find(|&i| (bytes[i] == b'+' || bytes[i] == b'-') && !matches!(bytes[i - 1], b'e' | b'E'));
    let imag = |t: &str| -> Result<f64> {
        match t {
            "" | "+" => Ok(1.0),
            "-" => Ok(-1.0),
            t => parse_real(t).map_err(|_| err()),
        }
    };
    match split {
        Some(i) => Ok(C::new(parse_real(&body[..i]).map_err(|_| err())?, imag(&body[i..])?)),
        None => Ok(C::new(0.0, imag(body)?)),
    }
}

pub fn format_complex(v: C) -> String {
    if v.im == 0.0 {
        format!("{}", v.re)
    } else if v.re == 0.0 {
        format!("{}i", v.im)
    } else if v.im < 0.0 {
        format!("{}{}i", v.re, v.im)
    } else {
        format!("{}+{}i", v.re, v.im)
    }
}
