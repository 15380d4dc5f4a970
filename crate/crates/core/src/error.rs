use num_complex::Complex64;
use thiserror::Error;

/// Errors produced by the estimation and evaluation pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("missing mapped column `{0}` in input header")]
    MissingColumn(String),

    #[error("columns must be distinct: `{0}` is mapped twice")]
    DuplicateColumn(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("invalid catalog metadata: {0}")]
    Metadata(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("evaluator returned a non-finite value at w = {0}")]
    NonFiniteSample(Complex64),

    #[error("coefficient extraction needs m_points >= 2 * n_terms (got {m_points} < 2 * {n_terms})")]
    TooFewSamplePoints { m_points: usize, n_terms: usize },

    #[error("sampling radius must satisfy 0 < rho0 <= 1, got {0}")]
    BadSamplingRadius(f64),

    #[error("empty training window: no time slice contains events")]
    EmptyTrainingWindow,

    #[error("transfer operator has no lags or no wavenumber bins")]
    EmptyOperator,

    #[error("kernel solve singular: |1 + gamma * P(w)| = {magnitude:.3e} at w = {w}")]
    SingularKernelSolve { w: Complex64, magnitude: f64 },

    #[error("kernel was tabulated at dx = {kernel_dx} km but the grid has dx = {grid_dx} km")]
    KernelGridMismatch { kernel_dx: f64, grid_dx: f64 },

    #[error("empty catalog: {0}")]
    EmptyCatalog(&'static str),

    #[error("zero-duration horizon")]
    ZeroHorizon,

    #[error("event intensity underflow: lambda = 0 at event {0}")]
    ZeroIntensity(usize),

    #[error("undefined hit rate: no events on the target day")]
    EmptyTarget,

    #[error("no eligible cells inside the study disc")]
    NoEligibleCells,

    #[error("supercritical branching ratio {0}: must be < 1")]
    Supercritical(f64),

    #[error("invalid simulation spec: {0}")]
    BadSimSpec(String),

    #[error("protocol does not fit the dataset: needs {needed} days, catalog spans {available}")]
    ProtocolTooLong { needed: usize, available: usize },

    #[error("all {0} backtest samples were skipped")]
    AllSamplesSkipped(usize),
}

pub type Result<T> = std::result::Result<T, Error>;
