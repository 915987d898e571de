use thiserror::Error;

/// Errors raised by the tree analysis library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("sphere size (Q+1)Q^(n-1) overflows u128 for Q={q}, n={n}")]
    Overflow { q: u32, n: usize },

    #[error("truncated tree for Q={q}, R={radius} needs {vertices} vertices, budget is {budget}")]
    Budget {
        q: u32,
        radius: usize,
        vertices: u128,
        budget: usize,
    },

    #[error("radial amplitudes ~Q^(-n/2) underflow f64 beyond radius {limit} for Q={q}; requested radius {radius}")]
    Underflow { q: u32, radius: usize, limit: usize },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("c-function evaluated within {tolerance:e} of its singular set at z={re}+{im}i; use the limit branch of spherical_phi")]
    Singular { re: f64, im: f64, tolerance: f64 },

    #[error("spectral grid has {got} intervals, need at least {required}")]
    Resolution { required: usize, got: usize },

    #[error("truncation leaked relative mass {leaked:e} (tolerance {tolerance:e})")]
    Truncation { leaked: f64, tolerance: f64 },

    #[error("no trusted vertices: kernel support radius {support} exceeds tree radius {radius}; use a larger R")]
    EmptyTrusted { support: usize, radius: usize },

    #[error("decay fit failed: {0}")]
    Fit(String),

    #[error("blow-up guard tripped at t={time}: sup|u| = {sup:e}")]
    BlowUp { time: f64, sup: f64 },

    #[error("config error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
