//! Numerical laboratory for one-dimensional ergodic Schrödinger operators.
//!
//! The crate computes exact band spectra of periodic potentials, runs an
//! iterative word construction whose limit subshift keeps positive-measure
//! spectrum, estimates density-of-states and Lyapunov observables, codes
//! torus translations / skew-shifts / interval exchanges symbolically, and
//! perturbs quasi-periodic sampling functions to close spectral gaps.
//!
//! Entry points by theme:
//!
//! - [`sl2`] — SL(2,ℝ) transfer-matrix kernel (products, conjugacy classes,
//!   contracted/stable directions, Lyapunov estimates).
//! - [`intervals`] — finite unions of closed intervals with measure and set
//!   algebra ([`intervals::BandSet`]).
//! - [`periodic`] — discriminants, band spectra and the exact periodic IDS.
//! - [`construction`] — the staged positive-measure subshift builder with
//!   budget ledger, certificates and combinatorial window checks.
//! - [`codings`] — symbolic codings and complexity/transitivity estimators.
//! - [`dos`] — eigenvalue counting, IDS curves, Thouless and Kotani
//!   diagnostics, polynomially-bounded eigenfunction sets.
//! - [`quasiperiodic`] — rational-frequency spectra, step approximation,
//!   gap-closing perturbations and continuity probes.
//! - [`cli`] — the experiment runner behind the `spectral-lab` binary.
//!
//! Every operation is a pure function over immutable values; scans over
//! energies, words or phases are data-parallel.

pub mod cli;
pub mod codings;
pub mod config;
pub mod construction;
pub mod dos;
pub mod intervals;
pub mod periodic;
pub mod quasiperiodic;
pub mod sl2;
pub mod verify;

/// Crate-wide error taxonomy. Variants are grouped by the subsystem that
/// raises them; all carry enough context to be actionable from the CLI.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    // --- words / transfer products ---
    #[error("empty word has no transfer matrix")]
    EmptyWord,
    #[error("word length {len} exceeds the band-computation cap {cap}")]
    WordTooLong { len: usize, cap: usize },
    #[error("index {index} outside the two-sided window [-{n}, {n}-1]")]
    WindowIndex { index: i64, n: usize },

    // --- matrix classification ---
    #[error("matrix is not hyperbolic (|trace| = {trace_abs}); no stable direction")]
    NotHyperbolic { trace_abs: f64 },
    #[error("matrix is not elliptic (|trace| = {trace_abs}); no rotation angle")]
    NotElliptic { trace_abs: f64 },
    #[error("matrix is conformal within tolerance (norm = {norm}); contracted direction undefined")]
    UndefinedDirection { norm: f64 },

    // --- grids / lifting ---
    #[error("energy grid too coarse to lift direction angles continuously (jump {jump:.4} > {limit:.4} rad at E = {energy})")]
    RefinementNeeded { jump: f64, limit: f64, energy: f64 },
    #[error("invalid energy grid: {0}")]
    BadGrid(String),

    // --- interval sets ---
    #[error("interval has lo > hi: ({lo}, {hi})")]
    BadInterval { lo: f64, hi: f64 },
    #[error("operation requires a nonempty band set")]
    EmptyBandSet,

    // --- band solving ---
    #[error("band solver could not certify {expected} trace roots (found {found}) for word of length {word_len}")]
    SolverResolution {
        expected: usize,
        found: usize,
        word_len: usize,
    },
    #[error("energy {energy} lies outside every band (|discriminant| = {disc_abs:.6} >= 2)")]
    OutsideBand { energy: f64, disc_abs: f64 },

    // --- construction ---
    #[error("construction precondition violated: {0}")]
    ConstructionPrecondition(String),
    #[error("power selection missed the budget {budget:.6e} at m_cap {m_cap} (best residual {best_residual:.6e})")]
    BudgetFailure {
        budget: f64,
        m_cap: u32,
        best_residual: f64,
    },
    #[error("stage too deep: next words would reach length {len}, above the cap {cap}")]
    StageTooDeep { len: usize, cap: usize },
    #[error("stages are not consecutive: level {found} follows level {previous}")]
    NonConsecutiveStages { previous: u32, found: u32 },
    #[error("stage file invalid: {0}")]
    StageInvalid(String),

    // --- codings ---
    #[error("invalid coding system: {0}")]
    BadCodingSystem(String),
    #[error("transitivity window {needed} exceeds the orbit budget {budget}; raise the budget or lower C/exponent")]
    WindowBudget { needed: u64, budget: u64 },
    #[error("hitting time exceeded budget {budget} (gamma = {gamma}); partial max {partial}")]
    HittingBudget { budget: u64, gamma: f64, partial: u64 },

    // --- dos ---
    #[error("poly-bounded scan needs gamma >= 1 (got {gamma}); no normalized solution can stay below it")]
    GammaTooSmall { gamma: f64 },

    // --- quasiperiodic ---
    #[error("invalid sampling function: {0}")]
    BadSamplingFunction(String),
    #[error("rational spectrum did not converge at {phases} phases (last Hausdorff change {change:.3e} > tol {tol:.3e})")]
    SpectrumResolution { phases: usize, change: f64, tol: f64 },
    #[error("gap-closing precondition violated: {0}")]
    GapClosingPrecondition(String),
    #[error("bump supports cannot fit total length {requested} disjointly (needed separation {separation:.3e})")]
    SupportBudget { requested: f64, separation: f64 },

    // --- io / config ---
    #[error("config error: {0}")]
    Config(String),
    #[error("parse error at {path}: {detail}")]
    Parse { path: String, detail: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
