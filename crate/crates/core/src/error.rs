use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("mode out of range: k = {k} not in [{k_min}, {k_max}]")]
    ModeOutOfRange { k: i64, k_min: i64, k_max: i64 },

    #[error("incompatible grid: {0}")]
    IncompatibleGrid(String),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid profile: {0}")]
    InvalidProfile(String),

    #[error("invalid kernel: {0}")]
    InvalidKernel(String),

    #[error("windows overlap: exit of window {k} at {t_exit} is not before the next entry at {t_next_enter}")]
    WindowsOverlap {
        k: usize,
        t_exit: f64,
        t_next_enter: f64,
    },

    #[error("separation violated: eta0 = {eta0} is below 100 * k0 for k0 = {k0}")]
    SeparationViolated { k0: usize, eta0: f64 },

    #[error("empty chain tip: row {k} has zero norm at T_{k}")]
    EmptyChainTip { k: i64 },

    #[error("numerical blow-up at (k = {k}, eta = {eta})")]
    NumericalBlowUp { k: i64, eta: f64 },

    #[error("stationarity violated at t = {t}: residual {residual:e} exceeds tolerance {tolerance:e}")]
    StationarityViolated {
        t: f64,
        residual: f64,
        tolerance: f64,
    },

    #[error("initial data not supported in the chain box: {0}")]
    UnsupportedInitialData(String),

    #[error("frequency boxes overlap: chains {a} and {b}")]
    BoxesOverlap { a: usize, b: usize },

    #[error("method mismatch: {0}")]
    MethodMismatch(String),

    #[error("invalid step control: {0}")]
    InvalidStepControl(String),

    #[error("invalid norm spec: {0}")]
    InvalidNormSpec(String),

    #[error("invalid config: {0}")]
    InvalidConfig(String),

    #[error("degenerate ladder: {0}")]
    DegenerateLadder(String),

    #[error("ensemble too small: {got} packets, need at least {need}")]
    EnsembleTooSmall { got: usize, need: usize },

    #[error("unmeasured amplification for chain {0}")]
    UnmeasuredAmplification(usize),

    #[error("io error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
