use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    /// A path or query left the simulated region; usually means the buffer is too small.
    #[error("site {site} at time {time} left the simulated region [{lo}, {hi}]")]
    OutOfWindow { site: i64, time: f64, lo: i64, hi: i64 },
    #[error("time {time} outside the simulated horizon [0, {horizon}]")]
    OutOfHorizon { time: f64, horizon: f64 },
    #[error("schedule infeasible: rho_bar_inf = {achieved:.6e} but 1 - rho_minus = {required:.6e}")]
    ScheduleInfeasible { achieved: f64, required: f64 },
    #[error("resource limit exceeded: {0}")]
    Resource(String),
    #[error("query outside the materialised domain: {0}")]
    Domain(String),
    #[error("io: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidArgument(msg.into()))
}
