//! Benchmark fixtures shared by the criterion benches.

use injlock_core::locking::{excited_seed, reference_params};
use injlock_core::{EquationVariant, MeanFieldState, ModelParams};

/// Reference oscillating point and its seed state.
pub fn reference() -> (ModelParams, MeanFieldState, EquationVariant) {
    (reference_params(), excited_seed(), EquationVariant::Supplementary)
}

/// `n` samples of a 20.8 kHz tone at 1 MS/s.
pub fn tone(n: usize) -> Vec<f64> {
    (0..n).map(|k| (2.0 * std::f64::consts::PI * 20_845.0 * k as f64 * 1e-6).sin()).collect()
}
