//! Reduced phase model of the injected oscillator.
//!
//! The phase difference φ between the oscillation and the injection obeys
//! `φ̇ = Δω/2 + K·Ωrs·cos φ`, which has a stable fixed point iff
//! `|Δω| < 2KΩrs`. Outside that band φ slips and the readout is pulled.

use crate::error::{Error, Result};
use crate::integrator::integrate_segment;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdlerParams {
    /// Δω (rad/s), with Δω/2 = ω_osc − δs.
    pub delta_omega: f64,
    /// Dimensionless forcing scale K.
    pub forcing_k: f64,
    /// Injection Rabi frequency Ωrs (rad/s).
    pub omega_rs: f64,
}

impl AdlerParams {
    pub fn new(delta_omega: f64, forcing_k: f64, omega_rs: f64) -> Result<Self> {
        let p = Self { delta_omega, forcing_k, omega_rs };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.delta_omega.is_finite() {
            return Err(Error::invalid("delta_omega", "must be finite"));
        }
        if !(self.forcing_k.is_finite() && self.forcing_k > 0.0) {
            return Err(Error::invalid("forcing_k", "must be finite and > 0"));
        }
        if !(self.omega_rs.is_finite() && self.omega_rs >= 0.0) {
            return Err(Error::invalid("omega_rs", "must be finite and >= 0"));
        }
        Ok(())
    }

    /// Coupling strength K·Ωrs (rad/s).
    pub fn coupling(&self) -> f64 {
        self.forcing_k * self.omega_rs
    }

    /// Half-width of the lock band in Δω, 2KΩrs (rad/s).
    pub fn lock_bandwidth(&self) -> f64 {
        2.0 * self.coupling()
    }
}

pub fn phase_rhs(phi: f64, p: &AdlerParams) -> f64 {
    0.5 * p.delta_omega + p.coupling() * phi.cos()
}

/// `|Δω| < 2KΩrs`; the boundary itself counts as unlocked.
pub fn is_locked(p: &AdlerParams) -> bool {
    p.delta_omega.abs() < p.lock_bandwidth()
}

/// Stable fixed point φ* ∈ (0, π) with cos φ* = −Δω/(2KΩrs).
pub fn steady_phase(p: &AdlerParams) -> Result<f64> {
    if !is_locked(p) {
        return Err(Error::NotLocked { delta_omega: p.delta_omega, bandwidth: p.lock_bandwidth() });
    }
    Ok((-p.delta_omega / p.lock_bandwidth()).acos())
}

/// Mean phase slip rate (rad/s): zero when locked, otherwise
/// `sign(Δω/2)·sqrt((Δω/2)² − (KΩrs)²)`.
pub fn pulled_frequency(p: &AdlerParams) -> f64 {
    if is_locked(p) {
        return 0.0;
    }
    let half = 0.5 * p.delta_omega;
    let c = p.coupling();
    half.signum() * ((half - c) * (half + c)).max(0.0).sqrt()
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhaseTrajectory {
    pub times: Vec<f64>,
    /// Unwrapped phase φ(t) (rad).
    pub phase: Vec<f64>,
    /// Terminal |φ̇| below 1e-6 of the larger of |Δω/2| and KΩrs.
    pub locked: bool,
    /// (φ(t_end) − φ(t_end/2)) / (t_end/2) (rad/s).
    pub mean_frequency: f64,
}

impl PhaseTrajectory {
    pub fn final_phase(&self) -> f64 {
        *self.phase.last().expect("trajectory has at least one sample")
    }
}

const REL_TOL: f64 = 1e-11;
const ABS_TOL: f64 = 1e-12;

/// Integrates the phase equation from φ(0) = `phi0`, sampling every `dt`.
pub fn integrate_phase(p: &AdlerParams, phi0: f64, t_end: f64, dt: f64) -> Result<PhaseTrajectory> {
    p.validate()?;
    if !phi0.is_finite() {
        return Err(Error::invalid("phi0", "must be finite"));
    }
    if !(t_end.is_finite() && t_end > 0.0) {
        return Err(Error::invalid("t_end", "must be > 0"));
    }
    if !(dt.is_finite() && dt > 0.0 && dt <= t_end) {
        return Err(Error::invalid("dt", "must be in (0, t_end]"));
    }
    let n = (t_end / dt * (1.0 + 1e-12)).floor() as usize + 1;
    let mut times: Vec<f64> = (0..n).map(|k| k as f64 * dt).collect();
    let last = times[n - 1];
    if (t_end - last).abs() <= 1e-9 * dt {
        times[n - 1] = t_end;
    } else if last < t_end {
        times.push(t_end);
    }
    let mut phase = vec![0.0; times.len()];
    let mut rhs = |_t: f64, y: &[f64; 1]| [phase_rhs(y[0], p)];
    let split = times.partition_point(|&t| t <= 0.5 * t_end);
    // split at the midpoint so the mean frequency uses φ(t_end/2) exactly
    let (y_mid, _, _) = integrate_segment(
        &mut rhs,
        0.0,
        0.5 * t_end,
        [phi0],
        REL_TOL,
        ABS_TOL,
        f64::INFINITY,
        &times[..split],
        |i, y| phase[i] = y[0],
    )?;
    let (y_end, _, _) = integrate_segment(
        &mut rhs,
        0.5 * t_end,
        t_end,
        y_mid,
        REL_TOL,
        ABS_TOL,
        f64::INFINITY,
        &times[split..],
        |i, y| phase[split + i] = y[0],
    )?;
    let scale = (0.5 * p.delta_omega).abs().max(p.coupling());
    let locked = phase_rhs(y_end[0], p).abs() < 1e-6 * scale;
    let mean_frequency = (y_end[0] - y_mid[0]) / (0.5 * t_end);
    Ok(PhaseTrajectory { times, phase, locked, mean_frequency })
}

/// Mean slip rate (rad/s) over the whole 2π cycles of the second half of
/// `traj`, with crossing times linearly interpolated between samples.
/// `None` if fewer than two crossings occur.
pub fn slip_rate(traj: &PhaseTrajectory) -> Option<f64> {
    let start = traj.times.partition_point(|&t| t < 0.5 * traj.times.last().copied().unwrap_or(0.0));
    let (t, phi) = (&traj.times[start..], &traj.phase[start..]);
    let two_pi = 2.0 * std::f64::consts::PI;
    let cycle = |v: f64| (v / two_pi).floor();
    let mut crossings = Vec::new();
    for i in 1..phi.len() {
        let (a, b) = (cycle(phi[i - 1]), cycle(phi[i]));
        if a != b {
            // the crossed level is 2π·max(a, b) in either direction
            let level = two_pi * a.max(b);
            let frac = (level - phi[i - 1]) / (phi[i] - phi[i - 1]);
            crossings.push((t[i - 1] + frac * (t[i] - t[i - 1]), level));
        }
    }
    let (first, last) = (crossings.first()?, crossings.last()?);
    if crossings.len() < 2 {
        return None;
    }
    Some((last.1 - first.1) / (last.0 - first.0))
}

/// Integration horizon and sample step adequate for classifying `p`:
/// long enough for a near-boundary fixed point to settle to the lock
/// tolerance or for many slip cycles to elapse, sampled at ≤ 1% of the
/// fastest time scale.
pub fn default_horizon(p: &AdlerParams) -> (f64, f64) {
    let rate = (0.5 * p.delta_omega).abs().max(p.coupling());
    if rate == 0.0 {
        return (1.0, 0.01);
    }
    let t_end = 6000.0 / rate;
    (t_end, 0.01 / rate)
}
