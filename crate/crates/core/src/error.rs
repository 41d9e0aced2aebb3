use num_complex::Complex64;
use thiserror::Error;

use crate::lap_sweep::SweepPoint;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("invalid operator: {0}")]
    InvalidOperator(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("branch ambiguity: z = {0} lies on [0, inf) and no approach direction was given")]
    BranchAmbiguity(Complex64),

    #[error("threshold singularity: the free kernel has no value at z = 0 in this dimension")]
    ThresholdSingularity,

    #[error("on-diagonal singularity: kernel evaluated at r = 0")]
    DiagonalSingularity,

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("discretization failure: {0}")]
    Discretization(String),

    #[error("virtual level: |W| = {wronskian:e} is below tolerance {tolerance:e}")]
    VirtualLevel { wronskian: f64, tolerance: f64 },

    #[error("near spectrum at z = {z}: condition estimate {condition:e}")]
    NearSpectrum { z: Complex64, condition: f64 },

    #[error("sweep aborted after {} of the radii: {source}", partial.len())]
    SweepAborted {
        partial: Vec<SweepPoint>,
        #[source]
        source: Box<Error>,
    },

    #[error("fit error: {0}")]
    Fit(String),

    #[error("no bound state: {0}")]
    NoBoundState(String),

    #[error("classification conflict: {0}")]
    ClassificationConflict(String),

    #[error("model error: {0}")]
    Model(String),

    #[error("outside resolvent set: |z| = {0} <= 1")]
    OutsideResolventSet(f64),

    #[error("degenerate functional: lambda(phi) = 0")]
    DegenerateFunctional,

    #[error("sampling failure: perturbation search found {found}, SVD nullity is {expected}")]
    SamplingFailure { found: usize, expected: usize },

    #[error("eigensolver failure: {0}")]
    EigenSolver(String),

    #[error("not converged: {0}")]
    NotConverged(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
