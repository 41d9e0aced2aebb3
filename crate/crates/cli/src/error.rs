use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Compute(#[from] virtlev_core::Error),

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Config(_) => 2,
            CliError::Compute(virtlev_core::Error::Parse(_)) => 2,
            CliError::Compute(_) | CliError::Io { .. } => 1,
        }
    }

    pub fn kind(&self) -> &'static str {
        use virtlev_core::Error as E;
        match self {
            CliError::Usage(_) => "usage",
            CliError::Config(_) => "config",
            CliError::Io { .. } => "io",
            CliError::Compute(e) => match e {
                E::Dimension { .. } => "dimension",
                E::InvalidOperator(_) => "invalid_operator",
                E::InvalidInput(_) => "invalid_input",
                E::BranchAmbiguity(_) => "branch_ambiguity",
                E::ThresholdSingularity => "threshold_singularity",
                E::DiagonalSingularity => "diagonal_singularity",
                E::Unsupported(_) => "unsupported",
                E::Discretization(_) => "discretization",
                E::VirtualLevel { .. } => "virtual_level",
                E::NearSpectrum { .. } => "near_spectrum",
                E::SweepAborted { .. } => "sweep_aborted",
                E::Fit(_) => "fit",
                E::NoBoundState(_) => "no_bound_state",
                E::ClassificationConflict(_) => "classification_conflict",
                E::Model(_) => "model",
                E::OutsideResolventSet(_) => "outside_resolvent_set",
                E::DegenerateFunctional => "degenerate_functional",
                E::SamplingFailure { .. } => "sampling_failure",
                E::EigenSolver(_) => "eigensolver",
                E::NotConverged(_) => "not_converged",
                E::Parse(_) => "parse",
                E::Io(_) => "io",
            },
        }
    }

    /// One-line JSON for stderr.
    pub fn to_json(&self) -> String {
        serde_json::json!({
            "error": self.kind(),
            "message": self.to_string(),
            "exit_code": self.exit_code(),
        })
        .to_string()
    }
}
