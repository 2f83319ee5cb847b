use std::path::PathBuf;

/// Errors produced by simulation, analysis and configuration routines.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("non-finite state encountered at t = {t:e} s")]
    NonFinite { t: f64 },

    #[error("step size underflow at t = {t:e} s (h = {h:e} s)")]
    StepUnderflow { t: f64, h: f64 },

    #[error("series too short: need at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },

    #[error("input series contains NaN or infinite values")]
    NonFiniteInput,

    #[error("frequency band [{lo}, {hi}] Hz contains {bins} bins (need at least {needed})")]
    EmptyBand { lo: f64, hi: f64, bins: usize, needed: usize },

    #[error("harmonic {k} band reaches {f_hi} Hz, above Nyquist {nyquist} Hz")]
    AboveNyquist { k: usize, f_hi: f64, nyquist: f64 },

    #[error("phase model is not locked: |Δω| = {delta_omega:e} >= 2KΩrs = {bandwidth:e}")]
    NotLocked { delta_omega: f64, bandwidth: f64 },

    #[error("no oscillating point found in scan ({ranges})")]
    NoOscillation { ranges: String },

    #[error(
        "suppression criterion not bracketed: residual ratio {lo_ratio:.4} at Ωrs = {lo:e}, \
         {hi_ratio:.4} at Ωrs = {hi:e} rad/s"
    )]
    NotBracketed { lo: f64, hi: f64, lo_ratio: f64, hi_ratio: f64 },

    #[error("fit needs {needed} points, got {got}")]
    InsufficientPoints { needed: usize, got: usize },

    #[error("degenerate fit: {0}")]
    DegenerateFit(String),

    #[error("no pulled region found in sweep: {0}")]
    NoPulledRegion(String),

    #[error("degenerate mixing: energy gap ΔE is zero")]
    DegenerateMixing,

    #[error("config error at line {line}: {msg}")]
    Config { line: usize, msg: String },

    #[error("sweep cell {index} ({label}) failed: {source}")]
    Cell {
        index: usize,
        label: String,
        #[source]
        source: Box<Error>,
    },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter { name, reason: reason.into() }
    }

    /// Whether the error originates in configuration/validation rather than numerics.
    pub fn is_config(&self) -> bool {
        match self {
            Error::InvalidParameter { .. } | Error::Config { .. } | Error::DegenerateMixing => true,
            Error::Cell { source, .. } => source.is_config(),
            _ => false,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
