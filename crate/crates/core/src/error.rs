use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("capacity exceeded: {what} = {requested} is above the ceiling {ceiling}")]
    Capacity {
        what: &'static str,
        requested: u64,
        ceiling: u64,
    },

    #[error("invalid argument: {0}")]
    Domain(String),

    #[error("{0} is outside the sieved range [{1}, {2})")]
    Range(u64, u64, u64),

    #[error("prime power {p}^{k} is beyond the declared rule depth {depth} of `{label}`")]
    Depth {
        label: String,
        p: u64,
        k: u32,
        depth: u32,
    },

    #[error("Dirichlet series diverges at Re s = {0}")]
    Divergence(f64),

    #[error("Re s = {re} is within the margin {margin} of the abscissa {abscissa}")]
    Margin { re: f64, abscissa: f64, margin: f64 },

    #[error("contour passes through a zero: min |L| = {min_abs:e} on radius {radius}")]
    ContourThroughZero { radius: f64, min_abs: f64 },

    #[error("winding number did not settle to an integer (last estimate {0})")]
    NonIntegerWinding(f64),

    #[error("pole at s = 1")]
    Pole,

    #[error("unsupported modulus {0}")]
    UnsupportedModulus(i64),

    #[error("parse error at column {pos}: {msg}\n  {input}\n  {caret}")]
    Parse {
        input: String,
        pos: usize,
        msg: String,
        caret: String,
    },

    #[error("regression: {key} = {value} does not reproduce the frozen value {frozen}")]
    Regression { key: String, value: f64, frozen: f64 },

    #[error("check failed: {0}")]
    Check(String),

    #[error("io: {0}")]
    Io(String),
}

impl Error {
    pub fn parse(input: &str, pos: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            input: input.to_string(),
            pos,
            msg: msg.into(),
            caret: format!("{}^", " ".repeat(pos)),
        }
    }

    pub fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
