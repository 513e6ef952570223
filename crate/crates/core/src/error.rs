use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("time step must be positive, got {0}")]
    NonPositiveStep(f64),
    #[error("grid end {t1} precedes start {t0}")]
    UnorderedGrid { t0: f64, t1: f64 },
    #[error("grid span {span} is not an integer multiple of dt = {dt}")]
    NonIntegralGrid { span: f64, dt: f64 },
    #[error("invalid signal: {0}")]
    InvalidSignal(String),
    #[error("noise signals must be realized on a grid before evaluation")]
    NoiseNeedsRealization,
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error("state dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("integration diverged at step {step} (t = {time}){}", member_suffix(*.member))]
    Diverged {
        member: Option<usize>,
        step: usize,
        time: f64,
    },
    #[error("at least {needed} trajectories required, got {got}")]
    TooFewMembers { needed: usize, got: usize },
    #[error("window [{t0}, {t1}] is outside the trajectory grid [{start}, {end}]")]
    WindowOutsideGrid { t0: f64, t1: f64, start: f64, end: f64 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("root finder did not converge: {0}")]
    NoConvergence(String),
    #[error("unknown scenario '{0}'")]
    UnknownScenario(String),
    #[error("invalid override '{0}': {1}")]
    InvalidOverride(String, String),
    #[error("serialization: {0}")]
    Serialization(String),
    #[error("i/o: {0}")]
    Io(String),
}

fn member_suffix(member: Option<usize>) -> String {
    match member {
        Some(m) => format!(" in ensemble member {m}"),
        None => String::new(),
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Serialization(e.to_string())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
