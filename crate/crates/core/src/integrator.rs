//! Adaptive Dormand–Prince 5(4) integration with dense output.
//!
//! Steps are accepted against a mixed absolute/relative error norm and the
//! solution is sampled onto a uniform grid with the fourth-order continuous
//! extension of the method. Integration restarts at every drive breakpoint
//! (step-on times, ramp knots) so no step straddles a discontinuity.
//!
//! The system is non-stiff at the parameter scales of interest; if it
//! becomes stiff, lowering `max_step` is the intended escape hatch.

use crate::drive::DriveSchedule;
use crate::error::{Error, Result};
use crate::model::{derivative_driven, EquationVariant, MeanFieldState, ModelParams};

/// Integration window, output grid and accuracy settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegrationSpec {
    pub t_start: f64,
    pub t_end: f64,
    /// Output samples per second.
    pub sample_rate: f64,
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_step: f64,
}

impl IntegrationSpec {
    pub const DEFAULT_REL_TOL: f64 = 1e-8;
    pub const DEFAULT_ABS_TOL: f64 = 1e-10;

    /// Window `[0, t_end]` with default tolerances and no step cap beyond the grid spacing.
    pub fn new(t_end: f64, sample_rate: f64) -> Self {
        Self {
            t_start: 0.0,
            t_end,
            sample_rate,
            rel_tol: Self::DEFAULT_REL_TOL,
            abs_tol: Self::DEFAULT_ABS_TOL,
            max_step: f64::INFINITY,
        }
    }

    pub fn with_tolerances(mut self, rel_tol: f64, abs_tol: f64) -> Self {
        self.rel_tol = rel_tol;
        self.abs_tol = abs_tol;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t_start.is_finite() && self.t_end.is_finite()) || self.t_end <= self.t_start {
            return Err(Error::invalid("t_end", "must be finite and greater than t_start"));
        }
        if !(self.sample_rate.is_finite() && self.sample_rate > 0.0) {
            return Err(Error::invalid("sample_rate", "must be > 0"));
        }
        if !(self.rel_tol > 0.0 && self.abs_tol > 0.0) {
            return Err(Error::invalid("tolerance", "rel_tol and abs_tol must be > 0"));
        }
        if self.max_step.is_nan() || self.max_step <= 0.0 {
            return Err(Error::invalid("max_step", "must be > 0"));
        }
        if self.sample_count() < 2 {
            return Err(Error::invalid("sample_rate", "output grid needs at least two samples"));
        }
        Ok(())
    }

    /// Checks that the grid resolves an oscillation at `freq_hz` with at least 16 samples per period.
    pub fn validate_for_frequency(&self, freq_hz: f64) -> Result<()> {
        self.validate()?;
        if self.sample_rate < 16.0 * freq_hz.abs() {
            return Err(Error::invalid(
                "sample_rate",
                format!("{} S/s gives fewer than 16 samples per period at {freq_hz} Hz", self.sample_rate),
            ));
        }
        Ok(())
    }

    pub fn sample_count(&self) -> usize {
        ((self.t_end - self.t_start) * self.sample_rate * (1.0 + 1e-12)).floor() as usize + 1
    }

    pub fn sample_time(&self, k: usize) -> f64 {
        (self.t_start + k as f64 / self.sample_rate).min(self.t_end)
    }
}

/// Provenance carried with every trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryMeta {
    pub params: ModelParams,
    pub spec: IntegrationSpec,
    pub variant: EquationVariant,
    pub drive: DriveSchedule,
    pub steps_accepted: usize,
    pub steps_rejected: usize,
}

/// Uniformly sampled solution of the mean-field equations.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<MeanFieldState>,
    /// Probe observable Im(σ_gr) at each grid point.
    pub observable: Vec<f64>,
    pub meta: TrajectoryMeta,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn sample_rate(&self) -> f64 {
        self.meta.spec.sample_rate
    }

    pub fn last_state(&self) -> MeanFieldState {
        *self.states.last().expect("trajectory is never empty")
    }
}

// Dormand–Prince 5(4) tableau.
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
// error weights: fifth-order minus embedded fourth-order solution
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
// continuous extension
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

/// One Dormand–Prince step of size `h` from `(t, y)` with `k1 = f(t, y)`.
///
/// Returns the fifth-order solution, its derivative (first stage of the
/// next step), the local error estimate and the dense-output coefficients.
pub(crate) struct DpStep<const N: usize> {
    pub y: [f64; N],
    pub k7: [f64; N],
    pub err: [f64; N],
    stages: [[f64; N]; 6],
}

fn combo<const N: usize>(y: &[f64; N], h: f64, terms: &[(f64, &[f64; N])]) -> [f64; N] {
    let mut out = *y;
    for (c, k) in terms {
        let ch = c * h;
        for i in 0..N {
            out[i] += ch * k[i];
        }
    }
    out
}

pub(crate) fn dp_step<const N: usize, F>(f: &mut F, t: f64, y: &[f64; N], k1: &[f64; N], h: f64) -> DpStep<N>
where
    F: FnMut(f64, &[f64; N]) -> [f64; N],
{
    let k2 = f(t + C2 * h, &combo(y, h, &[(A21, k1)]));
    let k3 = f(t + C3 * h, &combo(y, h, &[(A31, k1), (A32, &k2)]));
    let k4 = f(t + C4 * h, &combo(y, h, &[(A41, k1), (A42, &k2), (A43, &k3)]));
    let k5 = f(t + C5 * h, &combo(y, h, &[(A51, k1), (A52, &k2), (A53, &k3), (A54, &k4)]));
    let k6 = f(t + h, &combo(y, h, &[(A61, k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]));
    let y1 = combo(y, h, &[(A71, k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)]);
    let k7 = f(t + h, &y1);
    let mut err = [0.0; N];
    for i in 0..N {
        err[i] = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
    }
    DpStep { y: y1, k7, err, stages: [*k1, k3, k4, k5, k6, k7] }
}

/// Dense-output polynomial over one accepted step.
struct Dense<const N: usize> {
    t0: f64,
    h: f64,
    r: [[f64; N]; 5],
}

impl<const N: usize> Dense<N> {
    fn new(t0: f64, h: f64, y0: &[f64; N], step: &DpStep<N>) -> Self {
        let [k1, k3, k4, k5, k6, k7] = &step.stages;
        let mut r = [[0.0; N]; 5];
        for i in 0..N {
            let ydiff = step.y[i] - y0[i];
            let bspl = h * k1[i] - ydiff;
            r[0][i] = y0[i];
            r[1][i] = ydiff;
            r[2][i] = bspl;
            r[3][i] = ydiff - h * k7[i] - bspl;
            r[4][i] = h * (D1 * k1[i] + D3 * k3[i] + D4 * k4[i] + D5 * k5[i] + D6 * k6[i] + D7 * k7[i]);
        }
        Self { t0, h, r }
    }

    fn eval(&self, t: f64) -> [f64; N] {
        let s = (t - self.t0) / self.h;
        let s1 = 1.0 - s;
        let mut out = [0.0; N];
        for i in 0..N {
            let r = &self.r;
            out[i] = r[0][i] + s * (r[1][i] + s1 * (r[2][i] + s * (r[3][i] + s1 * r[4][i])));
        }
        out
    }
}

fn error_norm<const N: usize>(err: &[f64; N], y0: &[f64; N], y1: &[f64; N], rtol: f64, atol: f64) -> f64 {
    let mut acc = 0.0;
    for i in 0..N {
        let sc = atol + rtol * y0[i].abs().max(y1[i].abs());
        let r = err[i] / sc;
        acc += r * r;
    }
    (acc / N as f64).sqrt()
}

fn initial_step<const N: usize, F>(
    f: &mut F,
    t: f64,
    y: &[f64; N],
    k1: &[f64; N],
    rtol: f64,
    atol: f64,
    h_max: f64,
) -> f64
where
    F: FnMut(f64, &[f64; N]) -> [f64; N],
{
    let scale = |i: usize| atol + rtol * y[i].abs();
    let rms = |v: &dyn Fn(usize) -> f64| ((0..N).map(|i| v(i).powi(2)).sum::<f64>() / N as f64).sqrt();
    let d0 = rms(&|i| y[i] / scale(i));
    let d1 = rms(&|i| k1[i] / scale(i));
    let mut h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    h0 = h0.min(h_max);
    let y1 = combo(y, h0, &[(1.0, k1)]);
    let k2 = f(t + h0, &y1);
    let d2 = rms(&|i| (k2[i] - k1[i]) / scale(i)) / h0;
    let h1 = if d1.max(d2) <= 1e-15 { (h0 * 1e-3).max(1e-6) } else { (0.01 / d1.max(d2)).powf(1.0 / 5.0) };
    (100.0 * h0).min(h1).min(h_max)
}

/// Adaptive integration of `f` from `t0` to `t1`, calling `sample` with the
/// interpolated state at each requested output time in `[t0, t1]`.
///
/// Output times must be sorted; those outside `[t0, t1]` are skipped.
/// Returns the final state and (accepted, rejected) step counts.
#[allow(clippy::too_many_arguments)]
pub(crate) fn integrate_segment<const N: usize, F, S>(
    f: &mut F,
    t0: f64,
    t1: f64,
    y0: [f64; N],
    rtol: f64,
    atol: f64,
    max_step: f64,
    out_times: &[f64],
    mut sample: S,
) -> Result<([f64; N], usize, usize)>
where
    F: FnMut(f64, &[f64; N]) -> [f64; N],
    S: FnMut(usize, [f64; N]),
{
    let span = t1 - t0;
    let h_max = max_step.min(span);
    let mut t = t0;
    let mut y = y0;
    let mut k1 = f(t, &y);
    let mut h = initial_step(f, t, &y, &k1, rtol, atol, h_max);
    let mut next_out = out_times.partition_point(|&s| s < t0);
    while next_out < out_times.len() && out_times[next_out] <= t0 {
        sample(next_out, y);
        next_out += 1;
    }
    let (mut accepted, mut rejected) = (0usize, 0usize);
    let mut last_rejected = false;

    while t < t1 {
        let last = t + h >= t1 - 1e-12 * span.abs().max(t1.abs());
        if last {
            h = t1 - t;
        }
        if h <= 1e-14 * t.abs().max(span) {
            return Err(Error::StepUnderflow { t, h });
        }
        let step = dp_step(f, t, &y, &k1, h);
        let err = error_norm(&step.err, &y, &step.y, rtol, atol);
        if !err.is_finite() || step.y.iter().any(|v| !v.is_finite()) {
            if h <= 1e-14 * t.abs().max(span) * 10.0 {
                return Err(Error::NonFinite { t });
            }
            h *= 0.1;
            rejected += 1;
            last_rejected = true;
            continue;
        }
        if err <= 1.0 {
            let t_new = if last { t1 } else { t + h };
            let dense = Dense::new(t, h, &y, &step);
            while next_out < out_times.len() && out_times[next_out] <= t_new {
                let ts = out_times[next_out];
                let ys = if ts == t_new { step.y } else { dense.eval(ts) };
                sample(next_out, ys);
                next_out += 1;
            }
            t = t_new;
            y = step.y;
            k1 = step.k7;
            accepted += 1;
            let mut fac = 0.9 * err.max(1e-10).powf(-0.2);
            fac = fac.clamp(0.2, 10.0);
            if last_rejected {
                fac = fac.min(1.0);
            }
            h = (h * fac).min(h_max);
            last_rejected = false;
        } else {
            let fac = (0.9 * err.powf(-0.2)).max(0.2);
            h *= fac;
            rejected += 1;
            last_rejected = true;
        }
    }
    Ok((y, accepted, rejected))
}

fn model_rhs<'a>(
    params: &'a ModelParams,
    drive: &'a DriveSchedule,
    variant: EquationVariant,
    omega_rs: f64,
) -> impl FnMut(f64, &[f64; 8]) -> [f64; 8] + 'a {
    move |t, y| {
        let s = MeanFieldState::from_array(y);
        derivative_driven(&s, params, omega_rs, drive.phase_at(t), variant).to_array()
    }
}

/// Integrates the mean-field equations and samples them on the spec's uniform grid.
///
/// The drive schedule overrides `params.omega_rs` and `params.delta_inj`.
pub fn integrate(
    params: &ModelParams,
    init: &MeanFieldState,
    spec: &IntegrationSpec,
    drive: &DriveSchedule,
    variant: EquationVariant,
) -> Result<Trajectory> {
    params.validate()?;
    spec.validate()?;
    if !init.is_finite() {
        return Err(Error::NonFinite { t: spec.t_start });
    }
    let n = spec.sample_count();
    let times: Vec<f64> = (0..n).map(|k| spec.sample_time(k)).collect();
    let mut states = vec![MeanFieldState::default(); n];

    // segment boundaries at drive breakpoints strictly inside the window
    let mut bounds = vec![spec.t_start];
    bounds.extend(drive.breakpoints().into_iter().filter(|&b| b > spec.t_start && b < spec.t_end));
    bounds.push(spec.t_end);

    let mut y = init.to_array();
    let (mut accepted, mut rejected) = (0, 0);
    for seg in bounds.windows(2) {
        let (a, b) = (seg[0], seg[1]);
        // amplitude is constant on each segment; evaluate it at the midpoint
        let omega_rs = drive.omega_rs_at(0.5 * (a + b));
        let mut f = model_rhs(params, drive, variant, omega_rs);
        let (y_end, acc, rej) =
            integrate_segment(&mut f, a, b, y, spec.rel_tol, spec.abs_tol, spec.max_step, &times, |k, ys| {
                states[k] = MeanFieldState::from_array(&ys)
            })?;
        y = y_end;
        accepted += acc;
        rejected += rej;
    }
    if let Some(t) = states.iter().zip(&times).find(|(s, _)| !s.is_finite()).map(|(_, t)| *t) {
        return Err(Error::NonFinite { t });
    }
    let observable = states.iter().map(MeanFieldState::observable).collect();
    Ok(Trajectory {
        times,
        states,
        observable,
        meta: TrajectoryMeta {
            params: *params,
            spec: *spec,
            variant,
            drive: drive.clone(),
            steps_accepted: accepted,
            steps_rejected: rejected,
        },
    })
}

/// Fixed-step Dormand–Prince integration, used for step-halving convergence checks.
pub fn integrate_fixed_step(
    params: &ModelParams,
    init: &MeanFieldState,
    t_start: f64,
    t_end: f64,
    steps: usize,
    drive: &DriveSchedule,
    variant: EquationVariant,
) -> Result<MeanFieldState> {
    params.validate()?;
    if steps == 0 || t_end <= t_start {
        return Err(Error::invalid("steps", "need at least one step over a non-empty window"));
    }
    let h = (t_end - t_start) / steps as f64;
    let mut y = init.to_array();
    for k in 0..steps {
        let t = t_start + k as f64 * h;
        let omega_rs = drive.omega_rs_at(t + 0.5 * h);
        let mut f = model_rhs(params, drive, variant, omega_rs);
        let k1 = f(t, &y);
        y = dp_step(&mut f, t, &y, &k1, h).y;
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite { t: t + h });
        }
    }
    Ok(MeanFieldState::from_array(&y))
}
