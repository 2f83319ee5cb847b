//! Amplitude spectra, spectrograms and peak tracking.
//!
//! Normalization: `Spectrum::magnitude` is a one-sided amplitude spectrum of
//! the mean-removed, windowed record, divided by the window's coherent sum.
//! A unit-amplitude sinusoid centred on a bin therefore reads exactly 1.0 at
//! that bin for either window. [`Spectrum::asd`] converts to an amplitude
//! spectral density (units/√Hz) using the window's equivalent noise bandwidth.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};

/// Minimum samples in an analysed record.
pub const MIN_SAMPLES: usize = 256;
/// Minimum bins in a peak search band.
pub const MIN_BAND_BINS: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Window {
    Rectangular,
    #[default]
    Hann,
}

impl Window {
    /// Periodic window coefficients of length `n`.
    pub fn coefficients(&self, n: usize) -> Vec<f64> {
        match self {
            Window::Rectangular => vec![1.0; n],
            Window::Hann => (0..n).map(|i| 0.5 - 0.5 * (2.0 * PI * i as f64 / n as f64).cos()).collect(),
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Window::Rectangular => "rectangular",
            Window::Hann => "hann",
        }
    }

    /// Response of the window kernel at `delta` bins from a tone, relative to its peak.
    fn kernel(&self, delta: f64) -> f64 {
        let x = PI * delta;
        let sinc = if delta.abs() < 1e-12 { 1.0 } else { x.sin() / x };
        match self {
            Window::Rectangular => sinc.abs(),
            Window::Hann => {
                if (delta.abs() - 1.0).abs() < 1e-9 {
                    0.5
                } else {
                    (sinc / (1.0 - delta * delta)).abs()
                }
            }
        }
    }
}

impl fmt::Display for Window {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Window {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "rectangular" | "rect" => Ok(Window::Rectangular),
            "hann" => Ok(Window::Hann),
            other => Err(Error::invalid("window", format!("unknown window `{other}`"))),
        }
    }
}

/// One-sided amplitude spectrum on uniform bins `k / record_length`.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub freqs: Vec<f64>,
    /// Calibrated amplitude per bin (unit sinusoid at a bin centre reads 1).
    pub magnitude: Vec<f64>,
    pub window: Window,
    /// Duration of the analysed record (s).
    pub record_length: f64,
    pub sample_rate: f64,
    samples: usize,
    coherent_sum: f64,
    power_sum: f64,
}

impl Spectrum {
    pub fn bin_width(&self) -> f64 {
        1.0 / self.record_length
    }

    pub fn nyquist(&self) -> f64 {
        0.5 * self.sample_rate
    }

    pub fn samples(&self) -> usize {
        self.samples
    }

    /// Equivalent noise bandwidth of the window (Hz).
    pub fn enbw(&self) -> f64 {
        self.sample_rate * self.power_sum / (self.coherent_sum * self.coherent_sum)
    }

    /// Amplitude spectral density (units/√Hz): a sinusoid of amplitude `a`
    /// spreads power `a²/2` over one equivalent noise bandwidth.
    pub fn asd(&self) -> Vec<f64> {
        let scale = 1.0 / (2.0 * self.enbw()).sqrt();
        self.magnitude.iter().map(|m| m * scale).collect()
    }

    /// Σ (x·w)² reconstructed from the calibrated magnitudes (Parseval).
    pub fn windowed_energy(&self) -> f64 {
        let n = self.samples;
        let last = self.magnitude.len() - 1;
        let mut acc = 0.0;
        for (k, m) in self.magnitude.iter().enumerate() {
            let edge = k == 0 || (n % 2 == 0 && k == last);
            acc += if edge { m * m } else { 0.5 * m * m };
        }
        acc * self.coherent_sum * self.coherent_sum / n as f64
    }

    /// Index of the bin nearest to `freq`.
    pub fn bin_of(&self, freq: f64) -> usize {
        ((freq / self.bin_width()).round().max(0.0) as usize).min(self.freqs.len() - 1)
    }

    /// Largest magnitude within ±`half_width_bins` of `freq`.
    pub fn amplitude_near(&self, freq: f64, half_width_bins: usize) -> f64 {
        let k = self.bin_of(freq);
        let lo = k.saturating_sub(half_width_bins);
        let hi = (k + half_width_bins).min(self.freqs.len() - 1);
        self.magnitude[lo..=hi].iter().cloned().fold(0.0, f64::max)
    }
}

fn check_series(series: &[f64]) -> Result<()> {
    if series.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFiniteInput);
    }
    if series.len() < MIN_SAMPLES {
        return Err(Error::TooFewSamples { needed: MIN_SAMPLES, got: series.len() });
    }
    Ok(())
}

fn spectrum_of(segment: &[f64], sample_rate: f64, window: Window, planner: &mut FftPlanner<f64>) -> Spectrum {
    let n = segment.len();
    let mean = segment.iter().sum::<f64>() / n as f64;
    let w = window.coefficients(n);
    let coherent_sum: f64 = w.iter().sum();
    let power_sum: f64 = w.iter().map(|v| v * v).sum();
    let mut buf: Vec<Complex64> = segment.iter().zip(&w).map(|(x, wi)| Complex64::new((x - mean) * wi, 0.0)).collect();
    planner.plan_fft_forward(n).process(&mut buf);
    let bins = n / 2 + 1;
    let magnitude = (0..bins)
        .map(|k| {
            let edge = k == 0 || (n % 2 == 0 && k == n / 2);
            let scale = if edge { 1.0 } else { 2.0 };
            scale * buf[k].norm() / coherent_sum
        })
        .collect();
    let record_length = n as f64 / sample_rate;
    let freqs = (0..bins).map(|k| k as f64 / record_length).collect();
    Spectrum { freqs, magnitude, window, record_length, sample_rate, samples: n, coherent_sum, power_sum }
}

/// Amplitude spectrum of `series` after discarding `transient_skip` seconds.
pub fn periodogram(series: &[f64], sample_rate: f64, window: Window, transient_skip: f64) -> Result<Spectrum> {
    if !(sample_rate.is_finite() && sample_rate > 0.0) {
        return Err(Error::invalid("sample_rate", "must be > 0"));
    }
    if !(transient_skip >= 0.0) {
        return Err(Error::invalid("transient_skip", "must be >= 0"));
    }
    let skip = ((transient_skip * sample_rate).round() as usize).min(series.len());
    let rest = &series[skip..];
    check_series(rest)?;
    let mut planner = FftPlanner::new();
    Ok(spectrum_of(rest, sample_rate, window, &mut planner))
}

/// Short-time amplitude spectra; `magnitude[i][k]` is time column `i`, bin `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrogram {
    /// Centre time of each segment (s), relative to the first sample.
    pub times: Vec<f64>,
    pub freqs: Vec<f64>,
    pub magnitude: Vec<Vec<f64>>,
    pub window_len: f64,
    pub hop: f64,
}

impl Spectrogram {
    pub fn bin_width(&self) -> f64 {
        self.freqs.get(1).copied().unwrap_or(0.0)
    }

    /// Magnitude track nearest to `freq` (max over ±`half_width_bins`).
    pub fn track(&self, freq: f64, half_width_bins: usize) -> Vec<f64> {
        let bw = self.bin_width();
        let k = ((freq / bw).round() as usize).min(self.freqs.len() - 1);
        let lo = k.saturating_sub(half_width_bins);
        let hi = (k + half_width_bins).min(self.freqs.len() - 1);
        self.magnitude.iter().map(|col| col[lo..=hi].iter().cloned().fold(0.0, f64::max)).collect()
    }
}

/// Hann-windowed short-time spectra of `window_len` seconds every `hop` seconds.
pub fn spectrogram(series: &[f64], sample_rate: f64, window_len: f64, hop: f64) -> Result<Spectrogram> {
    if series.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFiniteInput);
    }
    if !(sample_rate > 0.0 && window_len > 0.0 && hop > 0.0) {
        return Err(Error::invalid("spectrogram", "sample_rate, window_len and hop must be > 0"));
    }
    if hop > window_len {
        return Err(Error::invalid("hop", "must not exceed window_len"));
    }
    let seg = (window_len * sample_rate).round() as usize;
    let step = ((hop * sample_rate).round() as usize).max(1);
    if seg < MIN_SAMPLES {
        return Err(Error::TooFewSamples { needed: MIN_SAMPLES, got: seg });
    }
    if series.len() < seg {
        return Err(Error::TooFewSamples { needed: seg, got: series.len() });
    }
    let mut planner = FftPlanner::new();
    let mut times = Vec::new();
    let mut magnitude = Vec::new();
    let mut freqs = Vec::new();
    let mut start = 0;
    while start + seg <= series.len() {
        let s = spectrum_of(&series[start..start + seg], sample_rate, Window::Hann, &mut planner);
        times.push((start as f64 + 0.5 * seg as f64) / sample_rate);
        if freqs.is_empty() {
            freqs = s.freqs;
        }
        magnitude.push(s.magnitude);
        start += step;
    }
    Ok(Spectrogram { times, freqs, magnitude, window_len: seg as f64 / sample_rate, hop: step as f64 / sample_rate })
}

/// Dominant spectral line in a band.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeakReport {
    /// Refined peak frequency (Hz).
    pub frequency: f64,
    /// Refined peak amplitude (calibrated magnitude units).
    pub amplitude: f64,
    /// Full width at half power (Hz).
    pub bandwidth_3db: f64,
    /// Whether sub-bin refinement was applied.
    pub interpolated: bool,
    /// The maximum sat on the first or last bin of the band; not refined.
    pub on_edge: bool,
}

/// Locates the strongest line in `[f_lo, f_hi]`.
///
/// The maximum bin is refined from its two neighbours: with a Hann window the
/// closed-form three-bin estimator `δ = 2(X₊ − X₋)/(X₋ + 2X₀ + X₊)` is used
/// (exact for an isolated tone), otherwise a parabola through the
/// log-magnitudes. A maximum on the band edge is reported unrefined with
/// `on_edge` set.
pub fn track_peak(spectrum: &Spectrum, band: (f64, f64)) -> Result<PeakReport> {
    let (f_lo, f_hi) = band;
    let bw = spectrum.bin_width();
    let n = spectrum.freqs.len();
    let k_lo = (f_lo / bw).ceil().max(0.0) as usize;
    let k_hi = ((f_hi / bw).floor() as usize).min(n - 1);
    let bins = if k_hi >= k_lo { k_hi - k_lo + 1 } else { 0 };
    if !(f_hi > f_lo) || bins < MIN_BAND_BINS {
        return Err(Error::EmptyBand { lo: f_lo, hi: f_hi, bins, needed: MIN_BAND_BINS });
    }
    let m = &spectrum.magnitude;
    let mut k = k_lo;
    for i in k_lo..=k_hi {
        if m[i] > m[k] {
            k = i;
        }
    }
    let on_edge = k == k_lo || k == k_hi;
    let (offset, amplitude, interpolated) = if on_edge || k == 0 || k + 1 >= n || m[k] <= 0.0 {
        (0.0, m[k], false)
    } else {
        let (a, b, c) = (m[k - 1], m[k], m[k + 1]);
        match spectrum.window {
            Window::Hann => {
                let d = (2.0 * (c - a) / (a + 2.0 * b + c)).clamp(-0.5, 0.5);
                (d, b / Window::Hann.kernel(d), true)
            }
            Window::Rectangular => {
                // neighbours at the rounding floor mean the tone sits on the bin
                if a > 1e-9 * b && c > 1e-9 * b {
                    let (la, lb, lc) = (a.ln(), b.ln(), c.ln());
                    let denom = la - 2.0 * lb + lc;
                    let d = if denom < 0.0 { (0.5 * (la - lc) / denom).clamp(-0.5, 0.5) } else { 0.0 };
                    (d, (lb - 0.25 * (la - lc) * d).exp(), true)
                } else {
                    (0.0, b, false)
                }
            }
        }
    };
    let frequency = (k as f64 + offset) * bw;
    let bandwidth_3db = half_power_width(spectrum, k, amplitude);
    Ok(PeakReport { frequency, amplitude, bandwidth_3db, interpolated, on_edge })
}

/// Width between the half-power crossings on either side of bin `k`,
/// linearly interpolated between bins.
fn half_power_width(spectrum: &Spectrum, k: usize, peak: f64) -> f64 {
    let m = &spectrum.magnitude;
    let bw = spectrum.bin_width();
    let level = peak / 2f64.sqrt();
    let mut left = 0.0;
    let mut i = k;
    while i > 0 && m[i - 1] > level {
        i -= 1;
    }
    if i > 0 {
        let (y0, y1) = (m[i - 1], m[i]);
        let frac = if y1 > y0 { (level - y0) / (y1 - y0) } else { 0.0 };
        left = (i - 1) as f64 + frac.clamp(0.0, 1.0);
    }
    let mut j = k;
    while j + 1 < m.len() && m[j + 1] > level {
        j += 1;
    }
    let right = if j + 1 < m.len() {
        let (y0, y1) = (m[j], m[j + 1]);
        let frac = if y0 > y1 { (y0 - level) / (y0 - y1) } else { 0.0 };
        j as f64 + frac.clamp(0.0, 1.0)
    } else {
        j as f64
    };
    ((right - left) * bw).max(0.0)
}

/// Peaks near the first `n_harmonics` multiples of `fundamental`, each searched
/// within ±25% of the fundamental.
pub fn harmonic_peaks(spectrum: &Spectrum, fundamental: f64, n_harmonics: usize) -> Result<Vec<PeakReport>> {
    if !(fundamental > 0.0) {
        return Err(Error::invalid("fundamental", "must be > 0"));
    }
    let half = 0.25 * fundamental;
    let nyquist = spectrum.nyquist();
    (1..=n_harmonics)
        .map(|k| {
            let centre = k as f64 * fundamental;
            if centre + half > nyquist {
                return Err(Error::AboveNyquist { k, f_hi: centre + half, nyquist });
            }
            track_peak(spectrum, (centre - half, centre + half))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tone(freq: f64, amp: f64, fs: f64, n: usize, phase: f64) -> Vec<f64> {
        (0..n).map(|i| amp * (2.0 * PI * freq * i as f64 / fs + phase).sin()).collect()
    }

    #[test]
    fn constant_series_has_no_ac_content() {
        let s = periodogram(&vec![3.7; 1024], 1e4, Window::Hann, 0.0).unwrap();
        assert!(s.magnitude.iter().all(|m| m.abs() < 1e-12));
    }

    #[test]
    fn bin_centred_tone_reads_unit_amplitude() {
        for w in [Window::Rectangular, Window::Hann] {
            let n = 4096;
            let fs = 4096.0;
            let s = periodogram(&tone(300.0, 1.0, fs, n, 0.3), fs, w, 0.0).unwrap();
            assert!((s.magnitude[300] - 1.0).abs() < 1e-9, "{w}: {}", s.magnitude[300]);
            let p = track_peak(&s, (250.0, 350.0)).unwrap();
            assert!((p.frequency - 300.0).abs() < 1e-9 * s.bin_width());
            assert!((p.amplitude - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn parseval_holds() {
        let n = 3000;
        let fs = 1e4;
        let x: Vec<f64> = (0..n).map(|i| ((i * 37 % 101) as f64 / 50.0 - 1.0) + (i as f64 * 0.01).sin()).collect();
        for w in [Window::Rectangular, Window::Hann] {
            let s = periodogram(&x, fs, w, 0.0).unwrap();
            let mean = x.iter().sum::<f64>() / n as f64;
            let coeffs = w.coefficients(n);
            let direct: f64 = x.iter().zip(&coeffs).map(|(v, c)| ((v - mean) * c).powi(2)).sum();
            assert!(((s.windowed_energy() - direct) / direct).abs() < 1e-9);
        }
        // odd length too
        let s = periodogram(&x[..2999], fs, Window::Hann, 0.0).unwrap();
        let mean = x[..2999].iter().sum::<f64>() / 2999.0;
        let coeffs = Window::Hann.coefficients(2999);
        let direct: f64 = x[..2999].iter().zip(&coeffs).map(|(v, c)| ((v - mean) * c).powi(2)).sum();
        assert!(((s.windowed_energy() - direct) / direct).abs() < 1e-9);
    }

    #[test]
    fn off_bin_tone_is_refined() {
        let fs = 1e5;
        let n = 8192;
        let bw = fs / n as f64;
        for frac in [0.1, 0.25, 0.37, 0.5, 0.81] {
            let f = (700.0 + frac) * bw;
            let s = periodogram(&tone(f, 0.4, fs, n, 1.1), fs, Window::Hann, 0.0).unwrap();
            let p = track_peak(&s, (f - 20.0 * bw, f + 20.0 * bw)).unwrap();
            assert!((p.frequency - f).abs() < 0.01 * bw, "frac {frac}: {}", (p.frequency - f) / bw);
            assert!((p.amplitude - 0.4).abs() < 0.01 * 0.4);
            assert!(p.interpolated && !p.on_edge);
        }
    }

    #[test]
    fn band_masks_out_of_band_tone() {
        let fs = 1e6;
        let n = 1 << 16;
        let x: Vec<f64> =
            tone(10.25e3, 1.0, fs, n, 0.0).iter().zip(tone(11.2e3, 0.3, fs, n, 0.5)).map(|(a, b)| a + b).collect();
        let s = periodogram(&x, fs, Window::Hann, 0.0).unwrap();
        let p = track_peak(&s, (10.8e3, 11.6e3)).unwrap();
        assert!((p.frequency - 11.2e3).abs() < s.bin_width());
    }

    #[test]
    fn bin_centred_hann_bandwidth() {
        // bins read 1/2, 1, 1/2; linear crossings of 1/√2 sit 2 − √2 bins either side
        let s = periodogram(&tone(500.0, 1.0, 8192.0, 8192, 0.0), 8192.0, Window::Hann, 0.0).unwrap();
        let p = track_peak(&s, (400.0, 600.0)).unwrap();
        let expected = 2.0 * (2.0 - 2f64.sqrt());
        assert!((p.bandwidth_3db - expected).abs() < 1e-9, "{}", p.bandwidth_3db);
    }

    #[test]
    fn edge_peak_is_flagged() {
        let fs = 4096.0;
        let s = periodogram(&tone(300.5, 1.0, fs, 4096, 0.0), fs, Window::Rectangular, 0.0).unwrap();
        let p = track_peak(&s, (310.0, 400.0)).unwrap();
        assert_eq!(p.frequency, 310.0);
        assert!(p.on_edge && !p.interpolated);
    }

    #[test]
    fn errors() {
        assert!(matches!(periodogram(&[0.0; 100], 1.0, Window::Hann, 0.0), Err(Error::TooFewSamples { .. })));
        let mut x = vec![0.0; 512];
        x[7] = f64::NAN;
        assert!(matches!(periodogram(&x, 1.0, Window::Hann, 0.0), Err(Error::NonFiniteInput)));
        let s = periodogram(&tone(50.0, 1.0, 1024.0, 1024, 0.0), 1024.0, Window::Hann, 0.0).unwrap();
        assert!(matches!(track_peak(&s, (40.0, 43.0)), Err(Error::EmptyBand { .. })));
        assert!(matches!(harmonic_peaks(&s, 200.0, 3), Err(Error::AboveNyquist { k: 3, .. })));
    }

    #[test]
    fn transient_skip_drops_leading_samples() {
        let fs = 1000.0;
        let mut x = vec![100.0; 500];
        x.extend(tone(125.0, 1.0, fs, 1000, 0.0));
        let s = periodogram(&x, fs, Window::Hann, 0.5).unwrap();
        assert_eq!(s.samples(), 1000);
        assert!((s.magnitude[125] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn spectrogram_shape_and_stationarity() {
        let fs = 1e4;
        let x = tone(1250.0, 1.0, fs, 20_000, 0.2);
        let sg = spectrogram(&x, fs, 0.1, 0.05).unwrap();
        assert_eq!(sg.magnitude.len(), sg.times.len());
        assert!(sg.magnitude.iter().all(|c| c.len() == sg.freqs.len()));
        assert!(sg.magnitude.iter().flatten().all(|m| *m >= 0.0));
        assert!(spectrogram(&x, fs, 0.1, 0.2).is_err());
        assert!(spectrogram(&x, fs, 0.01, 0.01).is_err());
    }
}
