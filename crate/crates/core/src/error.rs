use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid law: {0}")]
    InvalidLaw(String),
    #[error("invalid model spec: {0}")]
    InvalidSpec(String),
    #[error("invalid parameter product: a_{i} * b_{j} = {value} >= 1")]
    InvalidParameterProduct { i: usize, j: usize, value: f64 },
    #[error("boundary parameter z = {z} outside ({lo}, {hi})")]
    BoundaryOutOfRange { z: f64, lo: f64, hi: f64 },
    #[error("grid too large for enumeration: m + n = {0} > 22")]
    GridTooLarge(usize),
    #[error("negative entry {value} at ({i}, {j})")]
    NegativeEntry { i: usize, j: usize, value: i64 },
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("argument out of range: {0}")]
    OutOfRange(String),
    #[error("point {re}{im:+}i lies within 1e-14 of a pole")]
    NearPole { re: f64, im: f64 },
    #[error("near-repeated parameters: use contour form")]
    RepeatedParameters,
    #[error("quadrature not converged: {0}")]
    QuadratureNotConverged(String),
    #[error("kernel terms not decaying after {0} terms")]
    NonDecaying(usize),
    #[error("truncation insufficient: probability {0} outside [0, 1]")]
    TruncationInsufficient(f64),
    #[error("empty bracket: {0}")]
    EmptyBracket(String),
    #[error("left boundary too far: |q| exceeded 1e6 at t = {0}")]
    LeftBoundaryTooFar(f64),
    #[error("trace stalled near a critical point at {re}{im:+}i")]
    TraceStalled { re: f64, im: f64 },
    #[error("contour left its confinement disc at {re}{im:+}i")]
    ContourEscaped { re: f64, im: f64 },
    #[error("direction r = {r} outside the strictly concave cone ({c1}, {c2})")]
    OutsideConcaveCone { r: f64, c1: f64, c2: f64 },
    #[error("not converged: {0}")]
    NotConverged(String),
}

impl Error {
    /// Numerical failures (as opposed to invalid input).
    pub fn is_numeric(&self) -> bool {
        matches!(
            self,
            Error::QuadratureNotConverged(_)
                | Error::NonDecaying(_)
                | Error::TruncationInsufficient(_)
                | Error::EmptyBracket(_)
                | Error::LeftBoundaryTooFar(_)
                | Error::TraceStalled { .. }
                | Error::ContourEscaped { .. }
                | Error::NotConverged(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
