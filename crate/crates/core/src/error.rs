use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    Parameter { name: &'static str, reason: String },

    #[error("{path}:{line}: {reason}")]
    Parse {
        path: PathBuf,
        line: usize,
        reason: String,
    },

    #[error("mesh invariant violated: {0}")]
    Mesh(String),

    #[error("coordinate out of range: {0}")]
    CoordinateRange(String),

    #[error("AHA segments are defined for the left ventricle only")]
    UnsupportedChamber,

    #[error("field length {got} does not match node count {expected}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("root node {index} cannot be snapped: {reason}")]
    RootSnap { index: usize, reason: String },

    #[error("{count} node(s) unreachable from the root set (first ids: {ids:?})")]
    Unreachable { count: usize, ids: Vec<usize> },

    #[error("invalid conduction velocity: {0}")]
    Velocity(String),

    #[error("electrode `{name}` lies within {distance:.3} cm of the myocardium")]
    ElectrodeInside { name: String, distance: f64 },

    #[error("trace has no QRS complex (all samples flat)")]
    NoQrs,

    #[error("empty time series")]
    EmptySeries,

    #[error("lead sets differ between recordings")]
    LeadMismatch,

    #[error("unknown scenario `{0}`")]
    UnknownScenario(String),

    #[error("solver did not converge within {0} updates")]
    NoConvergence(usize),

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Stable machine-readable identifier of the variant.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Parameter { .. } => "parameter",
            Error::Parse { .. } => "parse",
            Error::Mesh(_) => "mesh",
            Error::CoordinateRange(_) => "coordinate_range",
            Error::UnsupportedChamber => "unsupported_chamber",
            Error::LengthMismatch { .. } => "length_mismatch",
            Error::RootSnap { .. } => "root_snap",
            Error::Unreachable { .. } => "unreachable",
            Error::Velocity(_) => "velocity",
            Error::ElectrodeInside { .. } => "electrode_inside",
            Error::NoQrs => "no_qrs",
            Error::EmptySeries => "empty_series",
            Error::LeadMismatch => "lead_mismatch",
            Error::UnknownScenario(_) => "unknown_scenario",
            Error::NoConvergence(_) => "no_convergence",
            Error::Config(_) => "config",
            Error::Io(_) => "io",
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
