//! Injection drive schedules: amplitude Ωrs(t) and detuning δs(t).
//!
//! The drive enters the equations through `Ωrs(t)` and the accumulated phase
//! `θ(t) = ∫₀ᵗ δs(t') dt'`. For piecewise-linear detuning ramps the phase is
//! integrated in closed form segment by segment, so it stays continuous
//! across knots and carries the correct instantaneous frequency.

use std::fmt;

use crate::error::{Error, Result};

/// Time profile of the injection Rabi frequency.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Amplitude {
    Constant(f64),
    /// Zero before `t_on`, `omega_rs` from `t_on` onward.
    StepOn {
        t_on: f64,
        omega_rs: f64,
    },
}

/// Time profile of the injection detuning δs (rad/s).
#[derive(Debug, Clone, PartialEq)]
pub enum Detuning {
    Constant(f64),
    /// Piecewise-linear through `(t, δs)` knots; held constant outside them.
    Ramp(Vec<(f64, f64)>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct DriveSchedule {
    pub amplitude: Amplitude,
    pub detuning: Detuning,
    /// Antiderivative of δs at each ramp knot, anchored at the first knot.
    knot_phase: Vec<f64>,
}

impl DriveSchedule {
    pub fn new(amplitude: Amplitude, detuning: Detuning) -> Result<Self> {
        match amplitude {
            Amplitude::Constant(a) | Amplitude::StepOn { omega_rs: a, .. } => {
                if !a.is_finite() || a < 0.0 {
                    return Err(Error::invalid("omega_rs", format!("must be finite and >= 0, got {a}")));
                }
            }
        }
        if let Amplitude::StepOn { t_on, .. } = amplitude {
            if !t_on.is_finite() {
                return Err(Error::invalid("t_on", "must be finite"));
            }
        }
        let knot_phase = match &detuning {
            Detuning::Constant(d) => {
                if !d.is_finite() {
                    return Err(Error::invalid("delta_inj", "must be finite"));
                }
                Vec::new()
            }
            Detuning::Ramp(knots) => {
                if knots.is_empty() {
                    return Err(Error::invalid("ramp", "needs at least one knot"));
                }
                if knots.iter().any(|(t, d)| !t.is_finite() || !d.is_finite()) {
                    return Err(Error::invalid("ramp", "knots must be finite"));
                }
                if knots.windows(2).any(|w| w[1].0 <= w[0].0) {
                    return Err(Error::invalid("ramp", "knot times must be strictly increasing"));
                }
                let mut acc = vec![0.0; knots.len()];
                for i in 1..knots.len() {
                    let (t0, d0) = knots[i - 1];
                    let (t1, d1) = knots[i];
                    acc[i] = acc[i - 1] + 0.5 * (d0 + d1) * (t1 - t0);
                }
                acc
            }
        };
        Ok(Self { amplitude, detuning, knot_phase })
    }

    /// Constant amplitude and detuning.
    pub fn constant(omega_rs: f64, delta_inj: f64) -> Result<Self> {
        Self::new(Amplitude::Constant(omega_rs), Detuning::Constant(delta_inj))
    }

    pub fn step_on(t_on: f64, omega_rs: f64, delta_inj: f64) -> Result<Self> {
        Self::new(Amplitude::StepOn { t_on, omega_rs }, Detuning::Constant(delta_inj))
    }

    /// Constant amplitude with a piecewise-linear detuning ramp.
    pub fn ramp(omega_rs: f64, knots: Vec<(f64, f64)>) -> Result<Self> {
        Self::new(Amplitude::Constant(omega_rs), Detuning::Ramp(knots))
    }

    pub fn omega_rs_at(&self, t: f64) -> f64 {
        match self.amplitude {
            Amplitude::Constant(a) => a,
            Amplitude::StepOn { t_on, omega_rs } => {
                if t >= t_on {
                    omega_rs
                } else {
                    0.0
                }
            }
        }
    }

    pub fn detuning_at(&self, t: f64) -> f64 {
        match &self.detuning {
            Detuning::Constant(d) => *d,
            Detuning::Ramp(knots) => {
                let (i, frac) = locate(knots, t);
                match frac {
                    None => knots[i].1,
                    Some(u) => knots[i].1 + u * (knots[i + 1].1 - knots[i].1),
                }
            }
        }
    }

    /// Accumulated drive phase θ(t) = ∫₀ᵗ δs dt'.
    pub fn phase_at(&self, t: f64) -> f64 {
        match &self.detuning {
            Detuning::Constant(d) => d * t,
            Detuning::Ramp(_) => self.antiderivative(t) - self.antiderivative(0.0),
        }
    }

    fn antiderivative(&self, t: f64) -> f64 {
        let Detuning::Ramp(knots) = &self.detuning else { unreachable!("antiderivative only used for ramps") };
        let (t0, d0) = knots[0];
        if t <= t0 {
            return d0 * (t - t0);
        }
        let (i, frac) = locate(knots, t);
        let (ti, di) = knots[i];
        match frac {
            None => self.knot_phase[i] + di * (t - ti),
            Some(_) => {
                let dt = t - ti;
                let slope = (knots[i + 1].1 - di) / (knots[i + 1].0 - ti);
                self.knot_phase[i] + di * dt + 0.5 * slope * dt * dt
            }
        }
    }

    /// Times where the drive is not smooth; the integrator restarts there.
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut out = Vec::new();
        if let Amplitude::StepOn { t_on, .. } = self.amplitude {
            out.push(t_on);
        }
        if let Detuning::Ramp(knots) = &self.detuning {
            out.extend(knots.iter().map(|k| k.0));
        }
        out.sort_by(f64::total_cmp);
        out.dedup();
        out
    }
}

/// Segment index containing `t` and the fractional position inside it;
/// `None` fraction means `t` lies outside the knot span (held at knot `i`).
fn locate(knots: &[(f64, f64)], t: f64) -> (usize, Option<f64>) {
    let n = knots.len();
    if t <= knots[0].0 || n == 1 {
        return (0, None);
    }
    if t >= knots[n - 1].0 {
        return (n - 1, None);
    }
    let i = knots.partition_point(|k| k.0 <= t) - 1;
    let (t0, _) = knots[i];
    let (t1, _) = knots[i + 1];
    (i, Some((t - t0) / (t1 - t0)))
}

impl fmt::Display for DriveSchedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.amplitude {
            Amplitude::Constant(a) => write!(f, "amplitude=constant({a:e})")?,
            Amplitude::StepOn { t_on, omega_rs } => {
                write!(f, "amplitude=step_on(t_on={t_on:e},omega_rs={omega_rs:e})")?
            }
        }
        match &self.detuning {
            Detuning::Constant(d) => write!(f, ";detuning=constant({d:e})"),
            Detuning::Ramp(knots) => {
                write!(f, ";detuning=ramp(")?;
                for (i, (t, d)) in knots.iter().enumerate() {
                    if i > 0 {
                        write!(f, ",")?;
                    }
                    write!(f, "{t:e}:{d:e}")?;
                }
                write!(f, ")")
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_schedule() {
        let d = DriveSchedule::constant(3.0, 7.0).unwrap();
        for t in [-1.0, 0.0, 0.3, 10.0] {
            assert_eq!(d.omega_rs_at(t), 3.0);
            assert_eq!(d.detuning_at(t), 7.0);
            assert_eq!(d.phase_at(t), 7.0 * t);
        }
    }

    #[test]
    fn step_on_switches_at_t_on() {
        let gamma = 2.0 * std::f64::consts::PI * 25.4e3;
        let d = DriveSchedule::step_on(0.6, gamma, 0.0).unwrap();
        assert_eq!(d.omega_rs_at(0.0), 0.0);
        assert_eq!(d.omega_rs_at(0.599_999), 0.0);
        assert_eq!(d.omega_rs_at(0.6), gamma);
        assert_eq!(d.omega_rs_at(1.2), gamma);
        assert_eq!(d.breakpoints(), vec![0.6]);
    }

    #[test]
    fn ramp_phase_matches_trapezoid() {
        let knots = vec![(0.0, 1.0e5), (1.0e-3, 1.2e5), (3.0e-3, 0.9e5)];
        let d = DriveSchedule::ramp(1.0, knots).unwrap();
        // fine trapezoid of the detuning is the independent quadrature route
        let t_end = 2.5e-3;
        let n = 200_000;
        let h = t_end / n as f64;
        let mut trap = 0.0;
        for k in 0..n {
            let a = d.detuning_at(k as f64 * h);
            let b = d.detuning_at((k + 1) as f64 * h);
            trap += 0.5 * (a + b) * h;
        }
        let phase = d.phase_at(t_end);
        assert!(((phase - trap) / trap).abs() < 1e-9, "{phase} vs {trap}");
    }

    #[test]
    fn ramp_phase_is_continuous_at_knots() {
        let knots = vec![(1.0e-3, 5.0e4), (2.0e-3, 8.0e4), (4.0e-3, -3.0e4)];
        let d = DriveSchedule::ramp(1.0, knots.clone()).unwrap();
        for (t, _) in knots {
            let eps = 1e-12;
            let jump = (d.phase_at(t + eps) - d.phase_at(t - eps)).abs();
            assert!(jump < 1e-6, "jump {jump} at {t}");
        }
    }

    #[test]
    fn ramp_outside_span_is_held() {
        let d = DriveSchedule::ramp(1.0, vec![(1.0, 2.0), (2.0, 4.0)]).unwrap();
        assert_eq!(d.detuning_at(0.0), 2.0);
        assert_eq!(d.detuning_at(5.0), 4.0);
        assert_eq!(d.detuning_at(1.5), 3.0);
        // before the first knot the phase grows at the first knot's rate
        assert!((d.phase_at(0.5) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_knots() {
        assert!(DriveSchedule::ramp(1.0, vec![]).is_err());
        assert!(DriveSchedule::ramp(1.0, vec![(1.0, 0.0), (1.0, 2.0)]).is_err());
        assert!(DriveSchedule::constant(-1.0, 0.0).is_err());
    }
}
