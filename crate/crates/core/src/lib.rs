//! Mean-field simulator of a driven Rydberg V-system time crystal, with
//! injection-locking analysis, reduced phase model and field calibration.

// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
// `n % 2 == 0` keeps the 1.75 MSRV.
#![allow(clippy::manual_is_multiple_of)]

pub mod adler;
pub mod calibration;
pub mod config;
pub mod drive;
pub mod error;
pub mod export;
pub mod fit;
pub mod integrator;
pub mod locking;
pub mod model;
pub mod protocols;
pub mod spectral;

pub use adler::{
    default_horizon, integrate_phase, is_locked, phase_rhs, pulled_frequency, slip_rate, steady_phase, AdlerParams,
    PhaseTrajectory,
};
pub use calibration::{
    calibration_chain, field_from_rabi, induced_dipole, kappa, rabi_from_field, CalibrationChain, MixingInputs,
    PhysicalConstants, CODATA,
};
pub use config::{RunConfig, CONFIG_VERSION};
pub use drive::{Amplitude, Detuning, DriveSchedule};
pub use error::{Error, Result};
pub use export::{write_matrix, write_table, Cell, Manifest};
pub use integrator::{integrate, integrate_fixed_step, IntegrationSpec, Trajectory, TrajectoryMeta};
pub use locking::{
    aggregate_bandwidth, bandwidth_by_intercept, critical_point, find_osc_regime, fit_forcing_k, lock_readout, probe,
    scan_regimes, AdlerOscillator, AnalysisSettings, BandwidthLaw, CriticalPoint, ForcingFit, InjectedOscillator,
    InterceptResult, LockReport, OscReference, Probe, Protocol, Regime, ScanCell, ScanGrid, ScanMap, ScanSettings,
    SweepRow,
};
pub use model::{derivative, nonlinear_shift, EquationVariant, MeanFieldState, ModelParams};
pub use protocols::{
    bandwidth_study, critical_points, forcing_study, step_on, sweep_field, sweep_frequency, sweep_frequency_continuous,
    BandwidthStudy, ContinuousSweep, Execution, FieldPoint, OffsetSweep, StepOnResult,
};
pub use spectral::{harmonic_peaks, periodogram, spectrogram, track_peak, PeakReport, Spectrogram, Spectrum, Window};
