use thiserror::Error;

/// Errors raised anywhere in the pricing and study pipeline.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid market parameters: {0}")]
    InvalidMarket(String),

    #[error("invalid payoff: {0}")]
    InvalidPayoff(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("no-arbitrage band violated for lambda = {lambda}, n = {n}: need d < exp(r dt) < u")]
    Arbitrage { lambda: f64, n: usize },

    #[error("quadrature did not converge: estimate {estimate:e}, residual {residual:e}")]
    Quadrature { estimate: f64, residual: f64 },

    #[error("payoff and digital curve share a jump at strike {strike}")]
    CommonJump { strike: f64 },

    #[error("payoff does not supply a second derivative on every segment")]
    MissingSecondDerivative,

    #[error("not enough usable data: {0}")]
    InsufficientData(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("csv row {row}: {message}")]
    Csv { row: usize, message: String },

    #[error("i/o error: {0}")]
    Io(String),

    #[error("at n = {n}: {source}")]
    AtLadderPoint {
        n: usize,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    /// True for failures of the numerics rather than of the inputs.
    pub fn is_numerical(&self) -> bool {
        match self {
            Error::Arbitrage { .. }
            | Error::Quadrature { .. }
            | Error::InsufficientData(_) => true,
            Error::AtLadderPoint { source, .. } => source.is_numerical(),
            _ => false,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
