use alloc::string::String;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("numerical error: {0}")]
    Numerical(String),
    #[error("integration diverged at t = {t}")]
    Diverged { t: f64 },
    #[error("singular point: {0}")]
    Singular(String),
    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(String),
    #[error("time {t} outside the sampled window [0, {t_max}]")]
    OutOfRange { t: f64, t_max: f64 },
}

pub type Result<T> = core::result::Result<T, Error>;

macro_rules! invalid {
    ($($arg:tt)*) => {
        $crate::Error::InvalidArgument(alloc::format!($($arg)*))
    };
}
pub(crate) use invalid;
