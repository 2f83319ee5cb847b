//! Lock detection on simulated records, critical injection strengths,
//! the forcing-constant fit and intercept bandwidths.
//!
//! The analysis is written against [`InjectedOscillator`], which the full
//! mean-field model ([`OscReference`]) and the reduced phase model
//! ([`AdlerOscillator`]) both implement, so every routine can be checked
//! against the analytic lock threshold.
//!
//! Injection frequencies are ordinary frequencies (Hz). Offsets `delta_inj`
//! and injection strengths `omega_rs` are angular (rad/s). In the full model
//! the drive phase advances at `δs = 2π·f_inj`.

use std::f64::consts::PI;

use rayon::prelude::*;

use crate::adler::{integrate_phase, AdlerParams};
use crate::drive::DriveSchedule;
use crate::error::{Error, Result};
use crate::fit::{fit_line, fit_through_origin, LineFit};
use crate::integrator::{integrate, IntegrationSpec};
use crate::model::{EquationVariant, MeanFieldState, ModelParams};
use crate::spectral::{periodogram, track_peak, PeakReport, Spectrum, Window};

const TWO_PI: f64 = 2.0 * PI;

/// Simulation and spectral settings shared by every probe of one oscillator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnalysisSettings {
    /// Output sample rate (S/s).
    pub sample_rate: f64,
    /// Simulated duration of one probe after the seed state or step (s).
    pub record: f64,
    /// Leading part of the record excluded from the spectrum (s).
    pub transient_skip: f64,
    /// Free run used to bring the initial condition onto the limit cycle (s).
    pub settle: f64,
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub window: Window,
    /// Residual natural-line amplitude, relative to A0, that counts as suppressed.
    pub suppression: f64,
    /// Bins on either side of the injection line excluded from the residual.
    pub guard_bins: usize,
    /// Extra span either side of [f_osc, f_inj] in the readout band (Hz).
    pub band_margin: f64,
    /// Band searched for the free-running line (Hz).
    pub search_band: (f64, f64),
    /// Harmonics (including the fundamental) reported per readout.
    pub harmonics: usize,
}

impl Default for AnalysisSettings {
    fn default() -> Self {
        Self {
            sample_rate: 1e6,
            record: 0.1,
            transient_skip: 0.04,
            settle: 0.01,
            rel_tol: 1e-8,
            abs_tol: 1e-10,
            window: Window::Hann,
            suppression: 0.1,
            guard_bins: 3,
            band_margin: 3e3,
            search_band: (1e3, 1e5),
            harmonics: 3,
        }
    }
}

impl AnalysisSettings {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("sample_rate", self.sample_rate),
            ("record", self.record),
            ("rel_tol", self.rel_tol),
            ("abs_tol", self.abs_tol),
            ("band_margin", self.band_margin),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::invalid(name, format!("must be finite and > 0, got {v}")));
            }
        }
        if !(self.transient_skip >= 0.0 && self.transient_skip < self.record) {
            return Err(Error::invalid("transient_skip", "must lie in [0, record)"));
        }
        if !(self.settle >= 0.0 && self.settle.is_finite()) {
            return Err(Error::invalid("settle", "must be finite and >= 0"));
        }
        if !(self.suppression > 0.0 && self.suppression < 1.0) {
            return Err(Error::invalid("suppression", "must lie in (0, 1)"));
        }
        let (lo, hi) = self.search_band;
        if !(lo >= 0.0 && hi > lo && hi <= 0.5 * self.sample_rate) {
            return Err(Error::invalid("search_band", "must satisfy 0 <= lo < hi <= Nyquist"));
        }
        if self.harmonics == 0 {
            return Err(Error::invalid("harmonics", "must be >= 1"));
        }
        Ok(())
    }

    /// Samples in the analysed part of a steady-protocol record.
    pub fn analysed_samples(&self) -> usize {
        let total = (self.record * self.sample_rate * (1.0 + 1e-12)).floor() as usize + 1;
        total - ((self.transient_skip * self.sample_rate).round() as usize).min(total)
    }

    /// Spectral bin width of a steady-protocol readout (Hz).
    pub fn bin_width(&self) -> f64 {
        self.sample_rate / self.analysed_samples() as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Protocol {
    /// Drive on from the start of the record.
    Steady,
    /// Free running until `t_on`, driven afterwards; the record is extended by `t_on`.
    StepOn { t_on: f64 },
}

impl Protocol {
    fn offset(&self) -> f64 {
        match self {
            Protocol::Steady => 0.0,
            Protocol::StepOn { t_on } => *t_on,
        }
    }
}

/// Sampled observable of one probe.
#[derive(Debug, Clone, PartialEq)]
pub struct Record {
    pub samples: Vec<f64>,
    pub sample_rate: f64,
    /// Start of the analysed part (s from the first sample).
    pub analysis_start: f64,
}

/// An oscillator that can be probed with an injection of given strength and frequency.
pub trait InjectedOscillator: Sync {
    fn settings(&self) -> &AnalysisSettings;
    /// Free-running frequency f_osc (Hz).
    fn natural_frequency(&self) -> f64;
    /// Free-running line amplitude A0, measured with the same pipeline as the residual.
    fn natural_amplitude(&self) -> f64;
    fn record(&self, omega_rs: f64, f_inj: f64, protocol: Protocol) -> Result<Record>;
}

#[derive(Debug, Clone, PartialEq)]
pub struct LockReport {
    pub injection_hz: f64,
    /// Dominant line in the readout band (Hz).
    pub readout_hz: f64,
    pub locked: bool,
    /// Largest line in the readout band away from the injection frequency.
    pub residual: f64,
    /// `residual / A0`.
    pub residual_ratio: f64,
    pub bin_width: f64,
    pub peak: PeakReport,
    /// Peaks near k·readout for k = 1..; stops early at Nyquist.
    pub harmonics: Vec<PeakReport>,
}

/// Spectrum and lock report of one probe.
#[derive(Debug, Clone, PartialEq)]
pub struct Probe {
    pub spectrum: Spectrum,
    pub report: LockReport,
}

/// Reads the spectrum of `record` against an injection at `f_inj`.
///
/// The residual is the largest magnitude in the readout band outside
/// ±`guard_bins` of the injection bin, so a free-running line counts
/// wherever pulling has moved it.
pub fn analyse_record<O: InjectedOscillator + ?Sized>(osc: &O, record: &Record, f_inj: f64) -> Result<Probe> {
    let s = osc.settings();
    let spectrum = periodogram(&record.samples, record.sample_rate, s.window, record.analysis_start)?;
    let bin = spectrum.bin_width();
    let f_osc = osc.natural_frequency();
    let margin = s.band_margin.max(8.0 * bin);
    let band = ((f_osc.min(f_inj) - margin).max(bin), (f_osc.max(f_inj) + margin).min(spectrum.nyquist()));
    let peak = track_peak(&spectrum, band)?;
    let k_inj = spectrum.bin_of(f_inj);
    let (k_lo, k_hi) = (spectrum.bin_of(band.0), spectrum.bin_of(band.1));
    let residual =
        (k_lo..=k_hi).filter(|k| k.abs_diff(k_inj) > s.guard_bins).map(|k| spectrum.magnitude[k]).fold(0.0, f64::max);
    let residual_ratio = residual / osc.natural_amplitude();
    let locked = (peak.frequency - f_inj).abs() <= bin && residual_ratio <= s.suppression;
    let mut harmonics = Vec::new();
    for k in 1..=s.harmonics {
        let centre = k as f64 * peak.frequency;
        let half = 0.25 * peak.frequency;
        if centre + half > spectrum.nyquist() {
            break;
        }
        harmonics.push(track_peak(&spectrum, (centre - half, centre + half))?);
    }
    let report = LockReport {
        injection_hz: f_inj,
        readout_hz: peak.frequency,
        locked,
        residual,
        residual_ratio,
        bin_width: bin,
        peak,
        harmonics,
    };
    Ok(Probe { spectrum, report })
}

fn check_injection<O: InjectedOscillator + ?Sized>(osc: &O, f_inj: f64) -> Result<()> {
    let nyquist = 0.5 * osc.settings().sample_rate;
    if !(f_inj > 0.0 && f_inj < nyquist) {
        return Err(Error::invalid("injection frequency", format!("{f_inj} Hz outside (0, {nyquist}) Hz")));
    }
    Ok(())
}

/// Simulates and analyses one injection at absolute frequency `f_inj` (Hz).
pub fn probe<O: InjectedOscillator + ?Sized>(osc: &O, omega_rs: f64, f_inj: f64, protocol: Protocol) -> Result<Probe> {
    check_injection(osc, f_inj)?;
    let record = osc.record(omega_rs, f_inj, protocol)?;
    analyse_record(osc, &record, f_inj)
}

/// Lock readout for an injection offset `delta_inj` (rad/s) from f_osc.
pub fn lock_readout<O: InjectedOscillator + ?Sized>(
    osc: &O,
    omega_rs: f64,
    delta_inj: f64,
    protocol: Protocol,
) -> Result<LockReport> {
    let f_inj = osc.natural_frequency() + delta_inj / TWO_PI;
    Ok(probe(osc, omega_rs, f_inj, protocol)?.report)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CriticalPoint {
    /// Injection offset δ (rad/s) from the natural frequency.
    pub delta_inj: f64,
    /// Smallest Ωrs (rad/s) found with residual ≤ threshold·A0.
    pub omega_rs_crit: f64,
    /// Residual ratio at `omega_rs_crit`.
    pub suppression: f64,
    /// Final bisection bracket (rad/s).
    pub bracket: (f64, f64),
    pub probes: usize,
}

/// Bisects Ωrs in `search` for the onset of natural-line suppression.
pub fn critical_point<O: InjectedOscillator + ?Sized>(
    osc: &O,
    delta_inj: f64,
    search: (f64, f64),
) -> Result<CriticalPoint> {
    let s = osc.settings();
    let bin = s.bin_width();
    if !(delta_inj.abs() / TWO_PI >= 4.0 * bin) {
        return Err(Error::invalid(
            "delta_inj",
            format!("offset {:.3} Hz is closer than 4 bins ({:.3} Hz) to f_osc", delta_inj / TWO_PI, 4.0 * bin),
        ));
    }
    let (mut lo, mut hi) = search;
    if !(lo >= 0.0 && hi > lo && hi.is_finite()) {
        return Err(Error::invalid("omega_rs search interval", "must satisfy 0 <= lo < hi"));
    }
    let f_inj = osc.natural_frequency() + delta_inj / TWO_PI;
    check_injection(osc, f_inj)?;
    let mut probes = 0;
    let mut ratio = |w: f64| -> Result<f64> {
        probes += 1;
        Ok(probe(osc, w, f_inj, Protocol::Steady)?.report.residual_ratio)
    };
    let lo_ratio = ratio(lo)?;
    let mut hi_ratio = ratio(hi)?;
    if lo_ratio <= s.suppression || hi_ratio > s.suppression {
        return Err(Error::NotBracketed { lo, hi, lo_ratio, hi_ratio });
    }
    while hi - lo > 0.01 * hi {
        let mid = 0.5 * (lo + hi);
        let r = ratio(mid)?;
        if r <= s.suppression {
            hi = mid;
            hi_ratio = r;
        } else {
            lo = mid;
        }
    }
    Ok(CriticalPoint { delta_inj, omega_rs_crit: hi, suppression: hi_ratio, bracket: (lo, hi), probes })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForcingFit {
    /// K from |δ| = K·Ωrs_crit with δ and Ωrs both angular.
    pub k: f64,
    /// K if the offsets are read as ordinary frequencies (K/2π).
    pub k_ordinary: f64,
    pub r_squared: f64,
    /// |δ| − K·Ωrs_crit per point (rad/s).
    pub residuals: Vec<f64>,
}

/// Least-squares |δ| = K·Ωrs_crit through the origin.
pub fn fit_forcing_k(points: &[CriticalPoint]) -> Result<ForcingFit> {
    if points.len() < 4 {
        return Err(Error::InsufficientPoints { needed: 4, got: points.len() });
    }
    let x: Vec<f64> = points.iter().map(|p| p.omega_rs_crit).collect();
    let y: Vec<f64> = points.iter().map(|p| p.delta_inj.abs()).collect();
    let (min, max) = y.iter().fold((f64::INFINITY, 0.0f64), |(a, b), v| (a.min(*v), b.max(*v)));
    if !(max >= 2.0 * min) {
        return Err(Error::DegenerateFit(format!("offsets span {min:e}..{max:e} rad/s, need a factor 2")));
    }
    let fit = fit_through_origin(&x, &y)?;
    if !(fit.slope > 0.0) {
        return Err(Error::DegenerateFit(format!("non-positive K = {}", fit.slope)));
    }
    Ok(ForcingFit { k: fit.slope, k_ordinary: fit.slope / TWO_PI, r_squared: fit.r_squared, residuals: fit.residuals })
}

/// One row of a field sweep at fixed injection frequency.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow {
    /// Applied field or injection strength, in whatever unit the sweep uses.
    pub field: f64,
    pub readout_hz: f64,
    pub locked: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InterceptResult {
    /// Field where the fitted pull line reaches the injection frequency.
    pub critical_field: f64,
    /// f_inj − f_osc (Hz).
    pub offset_hz: f64,
    /// One-sided bandwidth 2π·|f_inj − f_osc| at `critical_field` (rad/s).
    pub bandwidth: f64,
    pub fit: LineFit,
    pub points_used: usize,
}

/// Minimum pulled readouts used by the intercept fit.
pub const MIN_PULLED_POINTS: usize = 6;

/// Critical field from a linear fit of readout shift against field.
///
/// Uses the last `fit_points` (≥ 6) unlocked rows before the first locked row
/// whose readout has moved from f_osc towards the injection.
pub fn bandwidth_by_intercept(rows: &[SweepRow], f_inj: f64, f_osc: f64, fit_points: usize) -> Result<InterceptResult> {
    if rows.windows(2).any(|w| !(w[1].field > w[0].field)) {
        return Err(Error::invalid("field axis", "must be strictly increasing"));
    }
    let fit_points = fit_points.max(MIN_PULLED_POINTS);
    let offset = f_inj - f_osc;
    if offset == 0.0 {
        return Err(Error::invalid("f_inj", "must differ from f_osc"));
    }
    let first_lock = rows.iter().position(|r| r.locked).unwrap_or(rows.len());
    let pulled: Vec<&SweepRow> =
        rows[..first_lock].iter().filter(|r| (r.readout_hz - f_osc) * offset.signum() > 0.0).collect();
    if pulled.len() < MIN_PULLED_POINTS {
        return Err(Error::NoPulledRegion(format!(
            "{} pulled rows before the first lock (need {MIN_PULLED_POINTS}); {} rows locked",
            pulled.len(),
            rows.iter().filter(|r| r.locked).count()
        )));
    }
    let used = &pulled[pulled.len().saturating_sub(fit_points)..];
    let x: Vec<f64> = used.iter().map(|r| r.field).collect();
    let y: Vec<f64> = used.iter().map(|r| r.readout_hz - f_osc).collect();
    let fit = fit_line(&x, &y)?;
    if fit.slope * offset <= 0.0 {
        return Err(Error::DegenerateFit("readout shift does not grow towards the injection".into()));
    }
    let critical_field = (offset - fit.intercept) / fit.slope;
    Ok(InterceptResult {
        critical_field,
        offset_hz: offset,
        bandwidth: TWO_PI * offset.abs(),
        fit,
        points_used: used.len(),
    })
}

/// Field-to-bandwidth law from intercepts on both sides of f_osc.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BandwidthLaw {
    /// |f_inj − f_osc| per unit field for injections above f_osc (Hz/field).
    pub slope_above: f64,
    pub slope_below: f64,
    /// Full lock range per unit field, the sum of the one-sided slopes (Hz/field).
    pub full_slope: f64,
}

pub fn aggregate_bandwidth(results: &[InterceptResult]) -> Result<BandwidthLaw> {
    let side = |above: bool| -> Result<f64> {
        let (x, y): (Vec<f64>, Vec<f64>) = results
            .iter()
            .filter(|r| (r.offset_hz > 0.0) == above)
            .map(|r| (r.critical_field, r.offset_hz.abs()))
            .unzip();
        if x.is_empty() {
            return Err(Error::InsufficientPoints { needed: 1, got: 0 });
        }
        Ok(fit_through_origin(&x, &y)?.slope)
    };
    let slope_above = side(true)?;
    let slope_below = side(false)?;
    Ok(BandwidthLaw { slope_above, slope_below, full_slope: slope_above + slope_below })
}

fn peak_to_peak(s: &[f64]) -> f64 {
    let (lo, hi) = s.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(*v), b.max(*v)));
    hi - lo
}

/// Peak-to-peak of the analysed record and the relative change of the last
/// 20% against the middle 20%.
fn amplitude_drift(samples: &[f64]) -> (f64, f64) {
    let n = samples.len();
    let mid = peak_to_peak(&samples[2 * n / 5..3 * n / 5]);
    let last = peak_to_peak(&samples[4 * n / 5..]);
    let drift = if mid > 0.0 { last / mid - 1.0 } else { f64::INFINITY };
    (peak_to_peak(samples), drift)
}

/// A free-running limit cycle of the mean-field model.
#[derive(Debug, Clone, PartialEq)]
pub struct OscReference {
    /// Model parameters with Ωrs = 0.
    pub params: ModelParams,
    pub variant: EquationVariant,
    /// State on the limit cycle; every probe starts here.
    pub seed: MeanFieldState,
    /// Natural frequency (Hz).
    pub f_osc: f64,
    /// Natural-line amplitude A0.
    pub a0: f64,
    /// Relative peak-to-peak change, last 20% vs middle 20% of the free record.
    pub drift: f64,
    pub settings: AnalysisSettings,
    /// Classification map of the scan that produced this point, if any.
    pub scan: Option<ScanMap>,
}

impl OscReference {
    /// Settles `initial` onto the limit cycle and measures f_osc and A0.
    pub fn characterize(
        params: ModelParams,
        variant: EquationVariant,
        initial: MeanFieldState,
        settings: AnalysisSettings,
    ) -> Result<Self> {
        settings.validate()?;
        let params = params.with_injection(0.0, 0.0);
        params.validate()?;
        let free = DriveSchedule::constant(0.0, 0.0)?;
        let seed = if settings.settle > 0.0 {
            let spec = IntegrationSpec::new(settings.settle, settings.sample_rate)
                .with_tolerances(settings.rel_tol, settings.abs_tol);
            integrate(&params, &initial, &spec, &free, variant)?.last_state()
        } else {
            initial
        };
        let mut reference = Self { params, variant, seed, f_osc: 0.0, a0: 1.0, drift: 0.0, settings, scan: None };
        let record = reference.simulate(0.0, 0.0, Protocol::Steady)?;
        let skip = (settings.transient_skip * settings.sample_rate).round() as usize;
        let (ptp, drift) = amplitude_drift(&record.samples[skip..]);
        let spectrum = periodogram(&record.samples, settings.sample_rate, settings.window, settings.transient_skip)?;
        let peak = track_peak(&spectrum, settings.search_band)?;
        let periods = peak.frequency * (settings.record - settings.transient_skip);
        if !(ptp > MIN_PEAK_TO_PEAK && drift.abs() < MAX_DRIFT) || peak.on_edge {
            return Err(Error::NoOscillation {
                ranges: format!("free run has peak-to-peak {ptp:.3e} and drift {:.2}%", 100.0 * drift),
            });
        }
        if periods < MIN_PERIODS {
            return Err(Error::invalid(
                "record",
                format!("analysed record spans {periods:.0} periods, need {MIN_PERIODS}"),
            ));
        }
        reference.f_osc = peak.frequency;
        reference.a0 = spectrum.amplitude_near(peak.frequency, 1);
        reference.drift = drift;
        Ok(reference)
    }

    fn simulate(&self, omega_rs: f64, f_inj: f64, protocol: Protocol) -> Result<Record> {
        let s = &self.settings;
        let delta = TWO_PI * f_inj;
        let drive = match protocol {
            Protocol::Steady => DriveSchedule::constant(omega_rs, delta)?,
            Protocol::StepOn { t_on } => DriveSchedule::step_on(t_on, omega_rs, delta)?,
        };
        let offset = protocol.offset();
        let spec = IntegrationSpec::new(offset + s.record, s.sample_rate).with_tolerances(s.rel_tol, s.abs_tol);
        let tr = integrate(&self.params, &self.seed, &spec, &drive, self.variant)?;
        Ok(Record { samples: tr.observable, sample_rate: s.sample_rate, analysis_start: offset + s.transient_skip })
    }
}

impl InjectedOscillator for OscReference {
    fn settings(&self) -> &AnalysisSettings {
        &self.settings
    }

    fn natural_frequency(&self) -> f64 {
        self.f_osc
    }

    fn natural_amplitude(&self) -> f64 {
        self.a0
    }

    fn record(&self, omega_rs: f64, f_inj: f64, protocol: Protocol) -> Result<Record> {
        if let Protocol::StepOn { t_on } = protocol {
            if !(t_on >= 0.0 && t_on.is_finite()) {
                return Err(Error::invalid("t_on", "must be finite and >= 0"));
            }
        }
        self.simulate(omega_rs, f_inj, protocol)
    }
}

/// Reduced phase-model oscillator `x = A·sin(2π f_inj t + ψ)` with
/// `ψ̇ = (ω_osc − ω_inj) + K·Ωrs·cos ψ`, analysed with the same pipeline as
/// the full model. Its lock threshold is `|δ| = K·Ωrs`.
#[derive(Debug, Clone, PartialEq)]
pub struct AdlerOscillator {
    pub f_osc: f64,
    pub forcing_k: f64,
    pub amplitude: f64,
    pub settings: AnalysisSettings,
    a0: f64,
}

impl AdlerOscillator {
    pub fn new(f_osc: f64, forcing_k: f64, amplitude: f64, settings: AnalysisSettings) -> Result<Self> {
        settings.validate()?;
        if !(f_osc > 0.0 && f_osc < 0.5 * settings.sample_rate) {
            return Err(Error::invalid("f_osc", "must lie in (0, Nyquist)"));
        }
        if !(amplitude > 0.0 && amplitude.is_finite()) {
            return Err(Error::invalid("amplitude", "must be > 0"));
        }
        AdlerParams::new(0.0, forcing_k, 0.0)?;
        let mut osc = Self { f_osc, forcing_k, amplitude, settings, a0: 1.0 };
        let record = osc.record(0.0, f_osc, Protocol::Steady)?;
        let spectrum = periodogram(&record.samples, settings.sample_rate, settings.window, record.analysis_start)?;
        osc.a0 = spectrum.amplitude_near(f_osc, 1);
        Ok(osc)
    }

    /// Analytic lock threshold Ωrs = |δ|/K.
    pub fn threshold(&self, delta_inj: f64) -> f64 {
        delta_inj.abs() / self.forcing_k
    }
}

impl InjectedOscillator for AdlerOscillator {
    fn settings(&self) -> &AnalysisSettings {
        &self.settings
    }

    fn natural_frequency(&self) -> f64 {
        self.f_osc
    }

    fn natural_amplitude(&self) -> f64 {
        self.a0
    }

    fn record(&self, omega_rs: f64, f_inj: f64, protocol: Protocol) -> Result<Record> {
        let s = &self.settings;
        let offset = protocol.offset();
        let n = ((offset + s.record) * s.sample_rate * (1.0 + 1e-12)).floor() as usize + 1;
        let dt = 1.0 / s.sample_rate;
        let delta_omega = 2.0 * TWO_PI * (self.f_osc - f_inj);
        let mut psi = vec![0.0; n];
        let n_free = match protocol {
            Protocol::Steady => 0,
            Protocol::StepOn { t_on } => ((t_on * s.sample_rate).ceil() as usize).min(n),
        };
        for (k, v) in psi.iter_mut().enumerate().take(n_free) {
            *v = 0.5 * delta_omega * k as f64 * dt;
        }
        if n_free < n {
            let t0 = n_free as f64 * dt;
            let phi0 = 0.5 * delta_omega * t0;
            let span = (n - 1 - n_free) as f64 * dt;
            if span > 0.0 {
                let p = AdlerParams::new(delta_omega, self.forcing_k, omega_rs)?;
                let tr = integrate_phase(&p, phi0, span, dt)?;
                psi[n_free..].copy_from_slice(&tr.phase[..n - n_free]);
            } else {
                psi[n_free] = phi0;
            }
        }
        let samples = psi
            .iter()
            .enumerate()
            .map(|(k, ph)| self.amplitude * (TWO_PI * f_inj * k as f64 * dt + ph).sin())
            .collect();
        Ok(Record { samples, sample_rate: s.sample_rate, analysis_start: offset + s.transient_skip })
    }
}

/// Minimum post-transient peak-to-peak of Im σ_gr for an oscillating point.
pub const MIN_PEAK_TO_PEAK: f64 = 1e-4;
/// Maximum relative amplitude drift of a sustained oscillation.
pub const MAX_DRIFT: f64 = 0.02;
/// Minimum number of periods in the analysed record.
pub const MIN_PERIODS: f64 = 100.0;

/// Parameter grid for locating oscillating regimes; all entries in rad/s.
#[derive(Debug, Clone, PartialEq)]
pub struct ScanGrid {
    pub omega: Vec<f64>,
    pub delta_r: Vec<f64>,
    pub delta_s: Vec<f64>,
    pub chi: Vec<f64>,
    pub gamma: f64,
    pub initial: MeanFieldState,
}

impl ScanGrid {
    pub fn len(&self) -> usize {
        self.omega.len() * self.delta_r.len() * self.delta_s.len() * self.chi.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Parameters of grid point `i`, χ varying fastest.
    pub fn point(&self, i: usize) -> ModelParams {
        let nc = self.chi.len();
        let ns = self.delta_s.len();
        let nr = self.delta_r.len();
        let chi = self.chi[i % nc];
        let ds = self.delta_s[(i / nc) % ns];
        let dr = self.delta_r[(i / (nc * ns)) % nr];
        let om = self.omega[i / (nc * ns * nr)];
        ModelParams::free(om, dr, ds, self.gamma, chi)
    }

    /// Scanned ranges in units of γ.
    pub fn describe(&self) -> String {
        let r = |v: &[f64]| {
            let (lo, hi) = v.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| (a.min(*x), b.max(*x)));
            format!("[{:.4}, {:.4}]γ x{}", lo / self.gamma, hi / self.gamma, v.len())
        };
        format!(
            "Ω {}, Δr {}, Δs {}, χ {}, γ/2π = {:.1} Hz",
            r(&self.omega),
            r(&self.delta_r),
            r(&self.delta_s),
            r(&self.chi),
            self.gamma / TWO_PI
        )
    }

    fn validate(&self) -> Result<()> {
        if self.is_empty() {
            return Err(Error::invalid("scan grid", "every axis needs at least one value"));
        }
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return Err(Error::invalid("gamma", "must be > 0"));
        }
        if !self.initial.is_finite() {
            return Err(Error::invalid("initial state", "must be finite"));
        }
        Ok(())
    }
}

/// Per-point simulation settings of a regime scan.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanSettings {
    pub duration: f64,
    pub transient_skip: f64,
    pub sample_rate: f64,
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub search_band: (f64, f64),
}

impl Default for ScanSettings {
    fn default() -> Self {
        Self {
            duration: 0.012,
            transient_skip: 0.004,
            sample_rate: 1e6,
            rel_tol: 1e-7,
            abs_tol: 1e-9,
            search_band: (1e3, 1e5),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Regime {
    /// Relaxes to a stationary state.
    Stationary,
    /// Sustained, non-decaying oscillation.
    Oscillating,
    /// Integration failed.
    Diverged,
}

impl Regime {
    pub fn as_str(&self) -> &'static str {
        match self {
            Regime::Stationary => "SS",
            Regime::Oscillating => "OSC",
            Regime::Diverged => "DIV",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanCell {
    pub params: ModelParams,
    pub regime: Regime,
    pub peak_to_peak: f64,
    pub drift: f64,
    /// Dominant frequency (Hz) for oscillating points.
    pub frequency: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanMap {
    pub grid: ScanGrid,
    pub variant: EquationVariant,
    pub cells: Vec<ScanCell>,
}

impl ScanMap {
    pub fn oscillating(&self) -> impl Iterator<Item = (usize, &ScanCell)> {
        self.cells.iter().enumerate().filter(|(_, c)| c.regime == Regime::Oscillating)
    }
}

pub fn classify_point(
    params: ModelParams,
    variant: EquationVariant,
    initial: &MeanFieldState,
    scan: &ScanSettings,
) -> ScanCell {
    let spec = IntegrationSpec::new(scan.duration, scan.sample_rate).with_tolerances(scan.rel_tol, scan.abs_tol);
    let free = DriveSchedule::constant(0.0, 0.0).expect("zero drive is valid");
    let diverged =
        ScanCell { params, regime: Regime::Diverged, peak_to_peak: f64::NAN, drift: f64::NAN, frequency: None };
    let tr = match integrate(&params, initial, &spec, &free, variant) {
        Ok(tr) => tr,
        Err(_) => return diverged,
    };
    let skip = ((scan.transient_skip * scan.sample_rate).round() as usize).min(tr.len());
    let (ptp, drift) = amplitude_drift(&tr.observable[skip..]);
    let mut cell = ScanCell { params, regime: Regime::Stationary, peak_to_peak: ptp, drift, frequency: None };
    if !(ptp > MIN_PEAK_TO_PEAK) {
        return cell;
    }
    let peak = periodogram(&tr.observable, scan.sample_rate, Window::Hann, scan.transient_skip)
        .and_then(|s| track_peak(&s, scan.search_band));
    if let Ok(peak) = peak {
        let periods = peak.frequency * (scan.duration - scan.transient_skip);
        if drift.abs() < MAX_DRIFT && periods >= MIN_PERIODS && !peak.on_edge {
            cell.regime = Regime::Oscillating;
            cell.frequency = Some(peak.frequency);
        }
    }
    cell
}

/// Classifies every grid point (in parallel, result order = grid order).
pub fn scan_regimes(grid: &ScanGrid, variant: EquationVariant, scan: &ScanSettings) -> Result<ScanMap> {
    grid.validate()?;
    if !(scan.duration > scan.transient_skip && scan.transient_skip >= 0.0 && scan.sample_rate > 0.0) {
        return Err(Error::invalid("scan settings", "need duration > transient_skip >= 0 and sample_rate > 0"));
    }
    let cells =
        (0..grid.len()).into_par_iter().map(|i| classify_point(grid.point(i), variant, &grid.initial, scan)).collect();
    Ok(ScanMap { grid: grid.clone(), variant, cells })
}

/// Scans `grid` and characterizes the oscillating point closest to `target_hz`.
pub fn find_osc_regime(
    grid: &ScanGrid,
    variant: EquationVariant,
    scan: &ScanSettings,
    settings: &AnalysisSettings,
    target_hz: f64,
) -> Result<OscReference> {
    let map = scan_regimes(grid, variant, scan)?;
    let mut candidates: Vec<(usize, f64)> =
        map.oscillating().map(|(i, c)| (i, (c.frequency.unwrap_or(f64::INFINITY) - target_hz).abs())).collect();
    candidates.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
    for (i, _) in candidates {
        if let Ok(mut r) = OscReference::characterize(map.cells[i].params, variant, grid.initial, *settings) {
            r.scan = Some(map);
            return Ok(r);
        }
    }
    Err(Error::NoOscillation { ranges: grid.describe() })
}

/// Initial condition with excited-state population, used to reach the
/// low-frequency limit-cycle branch that the ground state does not.
pub fn excited_seed() -> MeanFieldState {
    MeanFieldState { n_r: 0.4, n_s: 0.2, sigma_rs: num_complex::Complex64::new(0.12, 0.04), ..Default::default() }
}

/// γ/2π = 25.4 kHz in rad/s.
pub const REFERENCE_GAMMA: f64 = TWO_PI * 25.4e3;

/// Reference oscillating point: Ω = 0.187γ, Δr = −4.542γ, Δs = −3.313γ,
/// χ = −116.7γ. Reached from [`excited_seed`] with the supplementary
/// equations; f_osc ≈ 20.8 kHz.
pub fn reference_params() -> ModelParams {
    let g = REFERENCE_GAMMA;
    ModelParams::free(0.187 * g, -4.542 * g, -3.313 * g, g, -116.7 * g)
}
