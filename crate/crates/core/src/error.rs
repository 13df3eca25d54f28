use thiserror::Error;

/// Errors raised anywhere in the pipeline.
///
/// The CLI maps [`Error::is_config`] variants to a dedicated exit code so that
/// bad input and numerical trouble can be told apart by scripts.
#[derive(Debug, Error)]
pub enum Error {
    #[error("malformed input: {0}")]
    Malformed(String),

    #[error("invalid group: {0}")]
    InvalidGroup(String),

    #[error("invalid measure: {0}")]
    InvalidMeasure(String),

    #[error("element outside the ball budget: radius {required} required, budget is {budget}")]
    RadiusExceeded { required: usize, budget: usize },

    #[error("precision error: {0}")]
    Precision(String),

    #[error("boundary enumeration did not stabilize: spheres {r1} and {r2} give {n1} and {n2} tables")]
    Unstable {
        r1: usize,
        r2: usize,
        n1: usize,
        n2: usize,
    },

    #[error("budget exceeded: {0}")]
    Budget(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("integrity error: {0}")]
    Integrity(String),

    #[error("degenerate normalizer at boundary point {0}")]
    DegenerateNormalizer(usize),

    #[error("eigenvalue 1 is not simple: {0} eigenvalues within tolerance")]
    NonSimple(usize),

    #[error("non-degeneracy violated: variance {0} is not positive")]
    Nondegeneracy(f64),

    #[error("perturbation too large: {0}")]
    PerturbationTooLarge(String),

    #[error("finite-difference step inconsistent: defect {0:e}")]
    StepSize(f64),

    #[error("no convergence: {0}")]
    NoConvergence(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    /// True for errors caused by the user's configuration rather than by the numerics.
    pub fn is_config(&self) -> bool {
        matches!(
            self,
            Error::Malformed(_)
                | Error::InvalidGroup(_)
                | Error::InvalidMeasure(_)
                | Error::Json(_)
                | Error::Io(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
