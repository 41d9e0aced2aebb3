//! Threshold classification reports.

use std::collections::BTreeMap;

use num_complex::Complex64;

use crate::lap_sweep::SweepPoint;
use crate::weighted_space::KernelOperator;

/// Verdict at a threshold point.
#[derive(Debug, Clone, PartialEq)]
pub enum Classification {
    Regular,
    Virtual {
        /// Rank of the virtual level, when a regularizing perturbation was found.
        rank: Option<usize>,
        /// Virtual states, sup-normalized, sampled on the operator grid.
        states: Vec<Vec<Complex64>>,
        /// Divergence is logarithmic rather than a power law.
        log: bool,
    },
    Inconclusive,
}

impl Classification {
    pub fn is_regular(&self) -> bool {
        matches!(self, Classification::Regular)
    }

    pub fn is_virtual(&self) -> bool {
        matches!(self, Classification::Virtual { .. })
    }

    pub fn label(&self) -> &'static str {
        match self {
            Classification::Regular => "Regular",
            Classification::Virtual { .. } => "Virtual",
            Classification::Inconclusive => "Inconclusive",
        }
    }
}

#[derive(Debug, Clone)]
pub struct ThresholdReport {
    pub classification: Classification,
    /// Fitted divergence exponent, when a sweep was run.
    pub alpha: Option<f64>,
    pub r_squared: Option<f64>,
    pub points: Vec<SweepPoint>,
    pub diagnostics: BTreeMap<String, f64>,
    pub notes: Vec<String>,
    /// Green kernel at the threshold, for regular Wronskian classifications.
    pub green: Option<KernelOperator>,
}

impl ThresholdReport {
    pub fn new(classification: Classification) -> Self {
        Self {
            classification,
            alpha: None,
            r_squared: None,
            points: Vec::new(),
            diagnostics: BTreeMap::new(),
            notes: Vec::new(),
            green: None,
        }
    }

    pub fn with_diagnostic(mut self, key: &str, value: f64) -> Self {
        self.diagnostics.insert(key.to_string(), value);
        self
    }
}
