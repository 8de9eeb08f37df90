use thiserror::Error;

/// Errors raised by the geometry routines and the verification harness.
///
/// The mathematical variants (`NotHermitian` through `NotInSubgroup`) map to
/// CLI exit code 3; parse and configuration problems map to exit code 2.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeoError {
    #[error("NotHermitian: asymmetry {residual:.3e} exceeds tolerance {tolerance:.3e}")]
    NotHermitian { residual: f64, tolerance: f64 },

    #[error("NotPositiveDefinite: smallest eigenvalue {min_eigenvalue:.6e} is below the floor {floor:.3e}")]
    NotPositiveDefinite { min_eigenvalue: f64, floor: f64 },

    #[error("NotUnitary: |u*u - 1| = {residual:.3e} exceeds tolerance {tolerance:.3e}")]
    NotUnitary { residual: f64, tolerance: f64 },

    #[error("Singular: smallest singular value {min_singular:.6e} is below the floor {floor:.3e}")]
    Singular { min_singular: f64, floor: f64 },

    #[error("BranchCut: eigenvalue phase {phase:.12} lies within {tolerance:.1e} of pi")]
    BranchCut { phase: f64, tolerance: f64 },

    #[error("InvalidP: Schatten exponent {0} must be >= 1 (or infinity)")]
    InvalidP(f64),

    #[error("OddDimension: symplectic algebra requires an even size, got {0}")]
    OddDimension(usize),

    #[error("DegenerateBasis: {0}")]
    DegenerateBasis(String),

    #[error("NotInSubgroup: algebra residual {residual:.3e} exceeds {tolerance:.1e}")]
    NotInSubgroup { residual: f64, tolerance: f64 },

    #[error("DimensionMismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("NonFinite: matrix contains NaN or infinite entries")]
    NonFinite,

    #[error("ConfigInvalid: {0}")]
    ConfigInvalid(String),

    #[error("UnknownSuite: {0}")]
    UnknownSuite(String),

    #[error("Parse: {0}")]
    Parse(String),

    #[error("Io: {0}")]
    Io(String),
}

impl GeoError {
    /// Short variant name, printed on stderr by the CLI.
    pub fn name(&self) -> &'static str {
        match self {
            GeoError::NotHermitian { .. } => "NotHermitian",
            GeoError::NotPositiveDefinite { .. } => "NotPositiveDefinite",
            GeoError::NotUnitary { .. } => "NotUnitary",
            GeoError::Singular { .. } => "Singular",
            GeoError::BranchCut { .. } => "BranchCut",
            GeoError::InvalidP(_) => "InvalidP",
            GeoError::OddDimension(_) => "OddDimension",
            GeoError::DegenerateBasis(_) => "DegenerateBasis",
            GeoError::NotInSubgroup { .. } => "NotInSubgroup",
            GeoError::DimensionMismatch { .. } => "DimensionMismatch",
            GeoError::NonFinite => "NonFinite",
            GeoError::ConfigInvalid(_) => "ConfigInvalid",
            GeoError::UnknownSuite(_) => "UnknownSuite",
            GeoError::Parse(_) => "Parse",
            GeoError::Io(_) => "Io",
        }
    }

    /// True for errors caused by a violated mathematical precondition.
    pub fn is_math(&self) -> bool {
        matches!(
            self,
            GeoError::NotHermitian { .. }
                | GeoError::NotPositiveDefinite { .. }
                | GeoError::NotUnitary { .. }
                | GeoError::Singular { .. }
                | GeoError::BranchCut { .. }
                | GeoError::InvalidP(_)
                | GeoError::OddDimension(_)
                | GeoError::DegenerateBasis(_)
                | GeoError::NotInSubgroup { .. }
                | GeoError::DimensionMismatch { .. }
                | GeoError::NonFinite
        )
    }
}

impl From<std::io::Error> for GeoError {
    fn from(e: std::io::Error) -> Self {
        GeoError::Io(e.to_string())
    }
}

impl From<serde_json::Error> for GeoError {
    fn from(e: serde_json::Error) -> Self {
        GeoError::Parse(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, GeoError>;
