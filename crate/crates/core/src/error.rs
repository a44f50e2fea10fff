use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("normalizing series does not converge (alpha = {alpha})")]
    NonConvergentNormalization { alpha: f64 },

    #[error("truncation at t_max = {t_max} cannot reach target tail {target} (max t_max {limit})")]
    TruncationTooSmall { t_max: i64, target: f64, limit: i64 },

    #[error("moment of order {order} is not controlled by the tail (alpha = {alpha:?}, tail mass {tail_mass:e})")]
    UnboundedTailError {
        order: u32,
        alpha: Option<f64>,
        tail_mass: f64,
    },

    #[error("support of {len} points exceeds the memory budget of {budget}")]
    SupportOverflow { len: usize, budget: usize },

    #[error("degenerate law: {0}")]
    DegenerateLaw(String),

    #[error("lattice span is {span}, expected 1")]
    LatticeSpan { span: i64 },

    #[error("error budget violated at t = {t}: error bound {bound:e} exceeds allowance {allowance:e}")]
    ErrorBudget { t: i64, bound: f64, allowance: f64 },

    #[error("quadrature did not converge: {0}")]
    Quadrature(String),

    #[error("divergent moment: order {order} is not below the stable index {index}")]
    DivergentMoment { order: f64, index: f64 },

    #[error("undefined at k = {0}: denominator vanishes")]
    UndefinedPoint(i64),

    #[error("no data: {0}")]
    Empty(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("memory budget exceeded: estimated {estimate} items, budget {budget}")]
    Budget { estimate: f64, budget: f64 },

    #[error("io: {0}")]
    Io(String),

    #[error("format: {0}")]
    Format(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Format(e.to_string())
    }
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
