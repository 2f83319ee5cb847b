//! Sweep and step-on protocols built on [`crate::locking`].
//!
//! Sweeps run one independent simulation per cell. Cells start from the same
//! seed state and share nothing, so parallel and serial runs give identical
//! results in identical order.

use std::f64::consts::PI;

use rayon::prelude::*;

use crate::adler::default_horizon;
use crate::drive::DriveSchedule;
use crate::error::{Error, Result};
use crate::integrator::{integrate, IntegrationSpec};
use crate::locking::{
    aggregate_bandwidth, analyse_record, bandwidth_by_intercept, critical_point, fit_forcing_k, probe, BandwidthLaw,
    CriticalPoint, ForcingFit, InjectedOscillator, InterceptResult, LockReport, OscReference, Probe, Protocol,
    SweepRow,
};
use crate::spectral::{spectrogram, Spectrogram, Spectrum};

const TWO_PI: f64 = 2.0 * PI;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    #[default]
    Parallel,
    Serial,
}

/// Runs `f` over `0..n`, keeping cell order, and reports the lowest failing index.
fn run_cells<T, F, L>(n: usize, exec: Execution, label: L, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize) -> Result<T> + Sync,
    L: Fn(usize) -> String,
{
    let results: Vec<Result<T>> = match exec {
        Execution::Parallel => (0..n).into_par_iter().map(&f).collect(),
        Execution::Serial => (0..n).map(&f).collect(),
    };
    results
        .into_iter()
        .enumerate()
        .map(|(index, r)| r.map_err(|e| Error::Cell { index, label: label(index), source: Box::new(e) }))
        .collect()
}

/// One cell of a field sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldPoint {
    /// Swept value in the axis unit (V/m for fields, rad/s for strengths).
    pub field: f64,
    pub omega_rs: f64,
    pub report: LockReport,
    pub spectrum: Spectrum,
}

impl FieldPoint {
    pub fn row(&self) -> SweepRow {
        SweepRow { field: self.field, readout_hz: self.report.readout_hz, locked: self.report.locked }
    }
}

/// Probes every value of `axis` at a fixed injection frequency `f_inj` (Hz).
/// `to_rabi` maps an axis value to Ωrs (rad/s).
pub fn sweep_field<O, M>(
    osc: &O,
    axis: &[f64],
    to_rabi: M,
    f_inj: f64,
    protocol: Protocol,
    exec: Execution,
) -> Result<Vec<FieldPoint>>
where
    O: InjectedOscillator + ?Sized,
    M: Fn(f64) -> Result<f64> + Sync,
{
    run_cells(
        axis.len(),
        exec,
        |i| format!("field {:e}", axis[i]),
        |i| {
            let omega_rs = to_rabi(axis[i])?;
            let Probe { spectrum, report } = probe(osc, omega_rs, f_inj, protocol)?;
            Ok(FieldPoint { field: axis[i], omega_rs, report, spectrum })
        },
    )
}

/// Independent probe at each absolute injection frequency (Hz).
pub fn sweep_frequency<O: InjectedOscillator + ?Sized>(
    osc: &O,
    omega_rs: f64,
    frequencies: &[f64],
    exec: Execution,
) -> Result<Vec<LockReport>> {
    run_cells(
        frequencies.len(),
        exec,
        |i| format!("f_inj {} Hz", frequencies[i]),
        |i| Ok(probe(osc, omega_rs, frequencies[i], Protocol::Steady)?.report),
    )
}

/// Readout of a single run whose injection frequency ramps linearly.
#[derive(Debug, Clone, PartialEq)]
pub struct ContinuousSweep {
    /// Spectrogram column centres (s).
    pub times: Vec<f64>,
    /// Injection frequency at each column centre (Hz).
    pub injection_hz: Vec<f64>,
    /// Dominant line of each column (Hz).
    pub readout_hz: Vec<f64>,
    pub locked: Vec<bool>,
    /// Ramp rate (Hz/s).
    pub rate: f64,
    /// Spectrogram bin width (Hz).
    pub resolution: f64,
}

/// Default ramp rate: one analysis bin per 20 natural periods.
pub fn default_ramp_rate<O: InjectedOscillator + ?Sized>(osc: &O) -> f64 {
    osc.settings().bin_width() * osc.natural_frequency() / 20.0
}

/// Dominant, log-parabola refined line of each column within `band` (Hz).
pub fn column_peaks(sg: &Spectrogram, band: (f64, f64)) -> Vec<f64> {
    let bw = sg.bin_width();
    let last = sg.freqs.len() - 1;
    let lo = ((band.0 / bw).ceil() as usize).clamp(1, last - 1);
    let hi = ((band.1 / bw).floor() as usize).clamp(lo, last - 1);
    sg.magnitude
        .iter()
        .map(|col| {
            let k = (lo..=hi).max_by(|a, b| col[*a].total_cmp(&col[*b])).unwrap_or(lo);
            let (a, b, c) = (col[k - 1], col[k], col[k + 1]);
            let d = if a > 0.0 && b > 0.0 && c > 0.0 {
                let (la, lb, lc) = (a.ln(), b.ln(), c.ln());
                let den = la - 2.0 * lb + lc;
                if den < 0.0 {
                    (0.5 * (la - lc) / den).clamp(-0.5, 0.5)
                } else {
                    0.0
                }
            } else {
                0.0
            };
            (k as f64 + d) * bw
        })
        .collect()
}

/// Ramps the injection from `f_start` to `f_end` (Hz) at `rate` (Hz/s) in one
/// continuous run and tracks the dominant line with a spectrogram.
pub fn sweep_frequency_continuous(
    osc: &OscReference,
    omega_rs: f64,
    f_start: f64,
    f_end: f64,
    rate: f64,
    window_len: f64,
    hop: f64,
) -> Result<ContinuousSweep> {
    if !(rate > 0.0 && rate.is_finite()) {
        return Err(Error::invalid("ramp_rate", "must be > 0"));
    }
    if f_start == f_end {
        return Err(Error::invalid("frequencies", "continuous sweep needs distinct end points"));
    }
    let s = &osc.settings;
    let duration = (f_end - f_start).abs() / rate + window_len;
    // hold f_start for the first half window so the first column is centred on it
    let t0 = 0.5 * window_len;
    let knots = vec![(t0, TWO_PI * f_start), (duration - t0, TWO_PI * f_end)];
    let drive = DriveSchedule::ramp(omega_rs, knots)?;
    let spec = IntegrationSpec::new(duration, s.sample_rate).with_tolerances(s.rel_tol, s.abs_tol);
    let tr = integrate(&osc.params, &osc.seed, &spec, &drive, osc.variant)?;
    let sg = spectrogram(&tr.observable, s.sample_rate, window_len, hop)?;
    let resolution = sg.bin_width();
    let margin = s.band_margin.max(8.0 * resolution);
    let band = (f_start.min(f_end).min(osc.f_osc) - margin, f_start.max(f_end).max(osc.f_osc) + margin);
    let readout_hz = column_peaks(&sg, band);
    let injection_hz: Vec<f64> = sg.times.iter().map(|&t| drive.detuning_at(t) / TWO_PI).collect();
    let locked = readout_hz.iter().zip(&injection_hz).map(|(r, f)| (r - f).abs() <= 0.5 * resolution).collect();
    Ok(ContinuousSweep { times: sg.times.clone(), injection_hz, readout_hz, locked, rate, resolution })
}

/// Step-on run: free oscillation until `t_on`, injection afterwards.
#[derive(Debug, Clone, PartialEq)]
pub struct StepOnResult {
    /// Lock report of the record after `t_on + transient_skip`.
    pub report: LockReport,
    pub spectrogram: Spectrogram,
    /// Dominant line of each spectrogram column (Hz).
    pub track_hz: Vec<f64>,
    pub t_on: f64,
    /// Centre of the first window lying wholly after `t_on` from which every
    /// later column reads within half a bin of `f_inj`, minus `t_on` (s).
    pub acquisition_time: Option<f64>,
}

pub fn step_on<O: InjectedOscillator + ?Sized>(
    osc: &O,
    omega_rs: f64,
    f_inj: f64,
    t_on: f64,
    window_len: f64,
    hop: f64,
) -> Result<StepOnResult> {
    let protocol = Protocol::StepOn { t_on };
    let record = osc.record(omega_rs, f_inj, protocol)?;
    let report = analyse_record(osc, &record, f_inj)?.report;
    let sg = spectrogram(&record.samples, record.sample_rate, window_len, hop)?;
    let res = sg.bin_width();
    let margin = osc.settings().band_margin.max(8.0 * res);
    let f_osc = osc.natural_frequency();
    let track_hz = column_peaks(&sg, (f_osc.min(f_inj) - margin, f_osc.max(f_inj) + margin));
    let on = |f: &f64| (f - f_inj).abs() <= 0.5 * res;
    let first_after = sg.times.iter().position(|&t| t - 0.5 * sg.window_len >= t_on);
    let acquisition_time = first_after.and_then(|start| {
        let tail_start = track_hz.iter().rposition(|f| !on(f)).map_or(0, |i| i + 1).max(start);
        (tail_start < track_hz.len()).then(|| sg.times[tail_start] - t_on)
    });
    Ok(StepOnResult { report, spectrogram: sg, track_hz, t_on, acquisition_time })
}

/// Critical Ωrs at each offset δ (rad/s), then the origin fit for K.
pub fn critical_points<O: InjectedOscillator + ?Sized>(
    osc: &O,
    offsets: &[f64],
    search: (f64, f64),
    exec: Execution,
) -> Result<Vec<CriticalPoint>> {
    run_cells(
        offsets.len(),
        exec,
        |i| format!("offset {:.1} Hz", offsets[i] / TWO_PI),
        |i| critical_point(osc, offsets[i], search),
    )
}

pub fn forcing_study<O: InjectedOscillator + ?Sized>(
    osc: &O,
    offsets: &[f64],
    search: (f64, f64),
    exec: Execution,
) -> Result<(Vec<CriticalPoint>, ForcingFit)> {
    let points = critical_points(osc, offsets, search, exec)?;
    let fit = fit_forcing_k(&points)?;
    Ok((points, fit))
}

/// Field sweep and intercept at one injection offset.
#[derive(Debug)]
pub struct OffsetSweep {
    pub offset_hz: f64,
    pub points: Vec<FieldPoint>,
    pub intercept: Result<InterceptResult>,
}

#[derive(Debug)]
pub struct BandwidthStudy {
    pub sweeps: Vec<OffsetSweep>,
    /// Present when intercepts exist on both sides of f_osc.
    pub law: Option<BandwidthLaw>,
}

/// Field sweeps at each offset (Hz) and the intercept bandwidth of each.
pub fn bandwidth_study<O, M>(
    osc: &O,
    axis: &[f64],
    to_rabi: M,
    offsets_hz: &[f64],
    fit_points: usize,
    exec: Execution,
) -> Result<BandwidthStudy>
where
    O: InjectedOscillator + ?Sized,
    M: Fn(f64) -> Result<f64> + Sync,
{
    if axis.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::invalid("field axis", "must be strictly increasing"));
    }
    let f_osc = osc.natural_frequency();
    let n = axis.len();
    let cells = run_cells(
        n * offsets_hz.len(),
        exec,
        |i| format!("offset {} Hz, field {:e}", offsets_hz[i / n], axis[i % n]),
        |i| {
            let (f_inj, field) = (f_osc + offsets_hz[i / n], axis[i % n]);
            let omega_rs = to_rabi(field)?;
            let Probe { spectrum, report } = probe(osc, omega_rs, f_inj, Protocol::Steady)?;
            Ok(FieldPoint { field, omega_rs, report, spectrum })
        },
    )?;
    let sweeps: Vec<OffsetSweep> = offsets_hz
        .iter()
        .zip(cells.chunks(n.max(1)))
        .map(|(&offset_hz, chunk)| {
            let rows: Vec<SweepRow> = chunk.iter().map(FieldPoint::row).collect();
            let intercept = bandwidth_by_intercept(&rows, f_osc + offset_hz, f_osc, fit_points);
            OffsetSweep { offset_hz, points: chunk.to_vec(), intercept }
        })
        .collect();
    let ok: Vec<InterceptResult> = sweeps.iter().filter_map(|s| s.intercept.as_ref().ok().copied()).collect();
    let law = aggregate_bandwidth(&ok).ok();
    Ok(BandwidthStudy { sweeps, law })
}

/// Mean pulled frequency of the reduced phase model over a field sweep, for
/// comparing against a measured sweep.
pub fn adler_pulling(delta_omega: f64, forcing_k: f64, omega_rs: &[f64]) -> Result<Vec<f64>> {
    omega_rs
        .iter()
        .map(|&w| {
            let p = crate::adler::AdlerParams::new(delta_omega, forcing_k, w)?;
            let (t_end, dt) = default_horizon(&p);
            Ok(crate::adler::integrate_phase(&p, 0.0, t_end, dt)?.mean_frequency)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::locking::{AdlerOscillator, AnalysisSettings};

    fn adler() -> AdlerOscillator {
        AdlerOscillator::new(20_000.0, 0.02, 0.05, AnalysisSettings::default()).unwrap()
    }

    #[test]
    fn parallel_matches_serial() {
        let osc = adler();
        let axis: Vec<f64> = (1..=6).map(|i| 2.5e4 * i as f64).collect();
        let id = |w: f64| Ok(w);
        let par = sweep_field(&osc, &axis, id, 20_300.0, Protocol::Steady, Execution::Parallel).unwrap();
        let ser = sweep_field(&osc, &axis, id, 20_300.0, Protocol::Steady, Execution::Serial).unwrap();
        assert_eq!(par, ser);
        assert!(!par[0].report.locked && par[5].report.locked);
    }

    #[test]
    fn cell_error_carries_index() {
        let osc = adler();
        let err = sweep_frequency(&osc, 1e4, &[20_100.0, 9e5], Execution::Serial).unwrap_err();
        match err {
            Error::Cell { index, ref source, .. } => {
                assert_eq!(index, 1);
                assert!(source.is_config());
            }
            other => panic!("{other:?}"),
        }
        assert!(err.is_config());
    }

    #[test]
    fn step_on_acquires_after_t_on() {
        let osc = adler();
        // threshold 2π·300/0.02 ≈ 9.4e4; drive well above it
        let r = step_on(&osc, 3e5, 20_300.0, 0.02, 5e-3, 1e-3).unwrap();
        assert!(r.report.locked);
        let t = r.acquisition_time.expect("acquired");
        assert!(t > 0.0 && t < 0.02, "{t}");
        // before t_on the free line dominates
        let first = r.track_hz[0];
        assert!((first - 20_000.0).abs() < 100.0, "{first}");
    }

    #[test]
    fn critical_points_recover_adler_k() {
        let osc = adler();
        let offsets: Vec<f64> = [200.0, 400.0, 600.0, 800.0].iter().map(|f| TWO_PI * f).collect();
        let hi = 2.0 * osc.threshold(offsets[3]);
        let (pts, fit) = forcing_study(&osc, &offsets, (0.0, hi), Execution::Parallel).unwrap();
        assert_eq!(pts.len(), 4);
        assert!((fit.k - 0.02).abs() < 0.1 * 0.02, "{}", fit.k);
    }

    #[test]
    fn bandwidth_study_finds_both_sides() {
        let osc = adler();
        let thr = osc.threshold(TWO_PI * 500.0);
        let axis: Vec<f64> = (1..=30).map(|i| thr * 1.5 * i as f64 / 30.0).collect();
        let study = bandwidth_study(&osc, &axis, Ok, &[500.0, -500.0], 6, Execution::Parallel).unwrap();
        for s in &study.sweeps {
            let r = s.intercept.as_ref().unwrap();
            assert!((r.critical_field - thr).abs() < 0.05 * thr, "{} vs {thr}", r.critical_field);
        }
        let law = study.law.unwrap();
        assert!((law.full_slope - 2.0 * 500.0 / thr).abs() < 0.1 * law.full_slope);
    }

    #[test]
    fn adler_pulling_is_monotone() {
        let w: Vec<f64> = (0..5).map(|i| 1e4 * i as f64).collect();
        let f = adler_pulling(TWO_PI * 300.0, 0.02, &w).unwrap();
        assert!(f.windows(2).all(|p| p[1].abs() <= p[0].abs() + 1e-9));
    }
}
