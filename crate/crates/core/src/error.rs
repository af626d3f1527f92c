use thiserror::Error;

/// Errors raised anywhere in the solver pipeline.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("gamma function pole at x = {0}")]
    GammaPole(f64),

    #[error("Mittag-Leffler evaluation did not converge (alpha = {alpha}, z = {z})")]
    MlNonConvergence { alpha: f64, z: num_complex::Complex64 },

    #[error("Mittag-Leffler value overflows (alpha = {alpha}, z = {z})")]
    MlOverflow { alpha: f64, z: num_complex::Complex64 },

    #[error("Mittag-Leffler order {0} outside (0, 2]")]
    MlOrder(f64),

    #[error("invalid Jacobi exponent {name} = {value} (must exceed -1)")]
    InvalidExponent { name: &'static str, value: f64 },

    #[error("invalid quadrature size {0}")]
    InvalidRuleSize(usize),

    #[error("fractional order {0} outside (1, 2]")]
    OrderOutOfRange(f64),

    #[error("time order {0} outside (0, 1]")]
    TimeOrderOutOfRange(f64),

    #[error("invalid domain: {0}")]
    InvalidDomain(String),

    #[error("point ({x}, {y}) lies outside the domain")]
    OutsideDomain { x: f64, y: f64 },

    #[error("cannot place {requested} interior nodes (placed {placed})")]
    InfeasibleCount { requested: usize, placed: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid mixing measure: {0}")]
    InvalidMeasure(String),

    #[error("interpolation matrix is ill-conditioned (estimate {0:.3e})")]
    IllConditioned(f64),

    #[error("modal matrix is defective or near-defective (condition estimate {0:.3e})")]
    DefectiveSpectrum(f64),

    #[error("eigendecomposition failed")]
    Eigen,

    #[error("reduced system matrix is singular but a source term is present")]
    SingularSystem,

    #[error("imaginary residue {residue:.3e} exceeds bound {bound:.3e}")]
    ImaginaryResidue { residue: f64, bound: f64 },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("missing config key `{0}`")]
    MissingKey(String),

    #[error("invalid value for config key `{key}`: {value}")]
    BadValue { key: String, value: String },

    #[error("unknown case `{0}`")]
    UnknownCase(String),

    #[error("case {case}: {source}")]
    Case {
        case: String,
        #[source]
        source: Box<Error>,
    },

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
