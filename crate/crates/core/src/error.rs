use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("degenerate diffusion specification: intrinsic rate is zero with positive induction")]
    DegenerateSpec,

    #[error("degenerate prospect pool: (m - a) * pi = {0} must exceed 1")]
    DegeneratePool(f64),

    #[error("point ({p}, {v}) lies outside the domain")]
    OutsideDomain { p: f64, v: f64 },

    #[error("triangulation failed: {0}")]
    Triangulation(String),

    #[error("duplicate point ({0}, {1})")]
    DuplicatePoint(f64, f64),

    #[error("service level theta = 0 demands an infinite order")]
    InfeasibleServiceLevel,

    #[error("quantile of probability {0} is infinite")]
    InfiniteQuantile(f64),

    #[error("standard deviation must be positive, got {0}")]
    NonPositiveSigma(f64),

    #[error("DKW epsilon {epsilon} is below the validity threshold {threshold} for n = {n}")]
    DkwEpsilon {
        epsilon: f64,
        threshold: f64,
        n: usize,
    },

    #[error("percentage error undefined: exact value is zero")]
    UndefinedError,

    #[error("gap fraction undefined: lower bound {0} is not positive")]
    UndefinedGap(f64),

    #[error("code width {0} exceeds the enumeration limit of 20 bits")]
    CodeWidth(u32),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("parse error in {source_name}: {message}")]
    Parse {
        source_name: String,
        message: String,
    },

    #[error("study cell {cell} failed: {source}")]
    Cell {
        cell: String,
        #[source]
        source: Box<Error>,
    },

    #[error("internal invariant violated: {0}")]
    Invariant(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn parse(source_name: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Parse {
            source_name: source_name.into(),
            message: message.into(),
        }
    }

    /// Process exit code for the CLI: 3 parse/schema, 4 domain/model, 5 internal.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Parse { .. } | Error::Io(_) => 3,
            Error::Invariant(_) => 5,
            Error::Cell { source, .. } => source.exit_code(),
            _ => 4,
        }
    }
}
