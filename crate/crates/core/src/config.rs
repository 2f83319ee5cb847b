//! Run configuration: a sectioned `key = value` text format.
//!
//! ```text
//! version = 1
//! [model]
//! gamma = 25.4 kHz
//! omega = 0.187 gamma
//! [sweep]
//! fields = 0.5 .. 6 x 12 mV/cm
//! ```
//!
//! Dimensional values carry a unit, converted to SI once here: angular
//! quantities accept `rad/s`, `Hz`, `kHz`, `MHz` (×2π) or `gamma` (multiples
//! of the model's γ); ordinary frequencies accept `Hz`, `kHz`, `MHz`; fields
//! accept `V/m` or `mV/cm`; flux density `T` or `G`; energies `J` or a
//! frequency (×h). Axes are a comma list or `start .. stop x count`, with
//! one trailing unit. Unknown sections and keys are rejected.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::calibration::{MixingInputs, CODATA, GAUSS, MV_PER_CM};
use crate::error::{Error, Result};
use crate::locking::{excited_seed, AnalysisSettings, ScanGrid, ScanSettings};
use crate::model::{EquationVariant, MeanFieldState, ModelParams};
use crate::spectral::Window;

pub const CONFIG_VERSION: u32 = 1;

const BOHR_DIPOLE: f64 = 8.478_353_625_5e-30;

const SCHEMA: &[(&str, &[&str])] = &[
    ("", &["version"]),
    ("model", &["variant", "gamma", "omega", "delta_r", "delta_s", "chi", "initial"]),
    ("integration", &["sample_rate", "duration", "rel_tol", "abs_tol", "max_step"]),
    ("drive", &["omega_rs", "field", "frequency", "offset", "profile", "t_on", "ramp"]),
    (
        "analysis",
        &[
            "window",
            "record",
            "transient_skip",
            "settle",
            "suppression",
            "guard_bins",
            "band_margin",
            "search_lo",
            "search_hi",
            "harmonics",
            "spectrogram_window",
            "spectrogram_hop",
            "fit_points",
        ],
    ),
    ("calibration", &["b_field", "g_j", "m_j", "delta_e", "d_ref", "alpha", "k_forcing", "e_field"]),
    (
        "sweep",
        &[
            "fields",
            "offsets",
            "frequencies",
            "strengths",
            "mode",
            "ramp_rate",
            "omega_rs_min",
            "omega_rs_max",
            "scan_omega",
            "scan_delta_r",
            "scan_delta_s",
            "scan_chi",
            "scan_duration",
            "scan_skip",
            "scan_target",
        ],
    ),
    ("output", &["dir"]),
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Kind {
    /// rad/s
    Angular,
    /// Hz
    Frequency,
    /// s
    Time,
    /// V/m
    EField,
    /// T
    BField,
    /// J
    Energy,
    /// C·m
    Dipole,
    /// Hz/s
    Rate,
    Plain,
}

struct Entry {
    value: String,
    line: usize,
}

struct Raw {
    entries: BTreeMap<(String, String), Entry>,
    gamma: Option<f64>,
}

fn cfg_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Config { line, msg: msg.into() }
}

fn parse_number(s: &str, line: usize) -> Result<f64> {
    let v: f64 = s.trim().parse().map_err(|_| cfg_err(line, format!("`{s}` is not a number")))?;
    if !v.is_finite() {
        return Err(cfg_err(line, format!("`{s}` is not finite")));
    }
    Ok(v)
}

impl Raw {
    fn parse(text: &str) -> Result<Self> {
        let mut section = String::new();
        let mut entries = BTreeMap::new();
        for (i, raw_line) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw_line.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            if let Some(rest) = content.strip_prefix('[') {
                let name = rest
                    .strip_suffix(']')
                    .ok_or_else(|| cfg_err(line, format!("malformed section header `{content}`")))?
                    .trim();
                if !SCHEMA.iter().any(|(s, _)| *s == name) || name.is_empty() {
                    return Err(cfg_err(line, format!("unknown section `[{name}]`")));
                }
                section = name.to_string();
                continue;
            }
            let (key, value) = content
                .split_once('=')
                .ok_or_else(|| cfg_err(line, format!("expected `key = value`, got `{content}`")))?;
            let key = key.trim();
            let known = SCHEMA.iter().find(|(s, _)| *s == section).map(|(_, k)| *k).unwrap_or(&[]);
            if !known.contains(&key) {
                let where_ = if section.is_empty() { "top level".to_string() } else { format!("[{section}]") };
                return Err(cfg_err(line, format!("unknown key `{key}` in {where_}")));
            }
            let slot = (section.clone(), key.to_string());
            if let Some(prev) = entries.get(&slot) {
                let Entry { line: prev_line, .. } = prev;
                return Err(cfg_err(line, format!("duplicate key `{key}` (first set on line {prev_line})")));
            }
            entries.insert(slot, Entry { value: value.trim().to_string(), line });
        }
        let mut raw = Self { entries, gamma: None };
        raw.gamma = raw.quantity("model", "gamma", Kind::Angular)?;
        Ok(raw)
    }

    fn get(&self, section: &str, key: &str) -> Option<&Entry> {
        self.entries.get(&(section.to_string(), key.to_string()))
    }

    fn line(&self, section: &str, key: &str) -> usize {
        self.get(section, key).map(|e| e.line).unwrap_or(0)
    }

    fn unit_scale(&self, kind: Kind, unit: &str, line: usize) -> Result<f64> {
        let two_pi = 2.0 * PI;
        let scale = match (kind, unit) {
            (Kind::Plain, "") => 1.0,
            (Kind::Angular, "rad/s") => 1.0,
            (Kind::Angular, "Hz") => two_pi,
            (Kind::Angular, "kHz") => two_pi * 1e3,
            (Kind::Angular, "MHz") => two_pi * 1e6,
            (Kind::Angular, "gamma") => {
                self.gamma.ok_or_else(|| cfg_err(line, "unit `gamma` needs `gamma` set in [model]"))?
            }
            (Kind::Frequency, "Hz") => 1.0,
            (Kind::Frequency, "kHz") => 1e3,
            (Kind::Frequency, "MHz") => 1e6,
            (Kind::Time, "s") => 1.0,
            (Kind::Time, "ms") => 1e-3,
            (Kind::Time, "us") => 1e-6,
            (Kind::EField, "V/m") => 1.0,
            (Kind::EField, "mV/cm") => MV_PER_CM,
            (Kind::BField, "T") => 1.0,
            (Kind::BField, "G") => GAUSS,
            (Kind::Energy, "J") => 1.0,
            (Kind::Energy, "Hz") => CODATA.h,
            (Kind::Energy, "kHz") => CODATA.h * 1e3,
            (Kind::Energy, "MHz") => CODATA.h * 1e6,
            (Kind::Energy, "GHz") => CODATA.h * 1e9,
            (Kind::Dipole, "C*m") => 1.0,
            (Kind::Dipole, "ea0") => BOHR_DIPOLE,
            (Kind::Rate, "Hz/s") => 1.0,
            (Kind::Rate, "kHz/s") => 1e3,
            (kind, "") => return Err(cfg_err(line, format!("missing unit for {kind:?} quantity"))),
            (kind, u) => return Err(cfg_err(line, format!("unit `{u}` not accepted for {kind:?} quantity"))),
        };
        Ok(scale)
    }

    /// Splits a trailing unit token from the numeric body.
    fn split_unit(value: &str) -> (&str, &str) {
        match value.rsplit_once(char::is_whitespace) {
            Some((body, unit)) if unit.parse::<f64>().is_err() && !unit.contains("..") && unit != "x" => {
                (body.trim(), unit)
            }
            _ => (value, ""),
        }
    }

    fn quantity(&self, section: &str, key: &str, kind: Kind) -> Result<Option<f64>> {
        let Some(e) = self.get(section, key) else { return Ok(None) };
        let (body, unit) = Self::split_unit(&e.value);
        let unit = if kind == Kind::Plain && !unit.is_empty() {
            return Err(cfg_err(e.line, format!("`{key}` is dimensionless, got unit `{unit}`")));
        } else {
            unit
        };
        Ok(Some(parse_number(body, e.line)? * self.unit_scale(kind, unit, e.line)?))
    }

    fn axis(&self, section: &str, key: &str, kind: Kind) -> Result<Option<Vec<f64>>> {
        let Some(e) = self.get(section, key) else { return Ok(None) };
        let (body, unit) = Self::split_unit(&e.value);
        let scale = self.unit_scale(kind, unit, e.line)?;
        let values = if let Some((range, count)) = body.split_once(" x ") {
            let (a, b) =
                range.split_once("..").ok_or_else(|| cfg_err(e.line, "range axis must be `start .. stop x count`"))?;
            let (a, b) = (parse_number(a, e.line)?, parse_number(b, e.line)?);
            let n: usize = count.trim().parse().map_err(|_| cfg_err(e.line, format!("bad axis count `{count}`")))?;
            match n {
                0 => Vec::new(),
                1 => vec![a],
                _ => (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect(),
            }
        } else {
            body.split(',').filter(|s| !s.trim().is_empty()).map(|s| parse_number(s, e.line)).collect::<Result<_>>()?
        };
        if values.is_empty() {
            return Err(cfg_err(e.line, format!("axis `{key}` is empty")));
        }
        Ok(Some(values.into_iter().map(|v| v * scale).collect()))
    }

    fn word(&self, section: &str, key: &str) -> Option<(&str, usize)> {
        self.get(section, key).map(|e| (e.value.as_str(), e.line))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitialCondition {
    Ground,
    Excited,
}

impl InitialCondition {
    pub fn state(&self) -> MeanFieldState {
        match self {
            InitialCondition::Ground => MeanFieldState::ground(),
            InitialCondition::Excited => excited_seed(),
        }
    }

    fn as_str(&self) -> &'static str {
        match self {
            InitialCondition::Ground => "ground",
            InitialCondition::Excited => "excited",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelConfig {
    pub params: ModelParams,
    pub variant: EquationVariant,
    pub initial: InitialCondition,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegrationConfig {
    pub sample_rate: f64,
    pub duration: f64,
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_step: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Profile {
    Constant,
    StepOn,
    Ramp,
}

/// Injection strength as configured: directly, or as a field through calibration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Strength {
    Rabi(f64),
    Field(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct DriveConfig {
    pub strength: Strength,
    /// Absolute injection frequency (Hz).
    pub frequency: Option<f64>,
    /// Injection offset from f_osc (Hz).
    pub offset: Option<f64>,
    pub profile: Profile,
    pub t_on: f64,
    /// (time s, injection frequency Hz) knots.
    pub ramp: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnalysisConfig {
    pub settings: AnalysisSettings,
    pub spectrogram_window: f64,
    pub spectrogram_hop: f64,
    pub fit_points: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CalibrationConfig {
    pub inputs: MixingInputs,
    pub k_forcing: f64,
    pub e_field: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepMode {
    Independent,
    Continuous,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    /// Field axis (V/m).
    pub fields: Option<Vec<f64>>,
    /// Injection offsets from f_osc (Hz).
    pub offsets: Option<Vec<f64>>,
    /// Absolute injection frequencies (Hz).
    pub frequencies: Option<Vec<f64>>,
    /// Injection strengths (rad/s), e.g. for acquisition-time checks.
    pub strengths: Option<Vec<f64>>,
    pub mode: SweepMode,
    /// Continuous-ramp rate (Hz/s); `None` derives one bin per 20 natural periods.
    pub ramp_rate: Option<f64>,
    pub omega_rs_search: (f64, f64),
    pub scan: Option<ScanGrid>,
    pub scan_settings: ScanSettings,
    pub scan_target: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub version: u32,
    pub model: ModelConfig,
    pub integration: IntegrationConfig,
    pub drive: DriveConfig,
    pub analysis: AnalysisConfig,
    pub calibration: Option<CalibrationConfig>,
    pub sweep: SweepConfig,
    pub output_dir: Option<PathBuf>,
}

fn positive(v: f64, key: &str, line: usize) -> Result<f64> {
    if !(v > 0.0) {
        return Err(cfg_err(line, format!("`{key}` must be > 0")));
    }
    Ok(v)
}

impl RunConfig {
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io { path: path.to_path_buf(), source })?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let raw = Raw::parse(text)?;
        let version = match raw.quantity("", "version", Kind::Plain)? {
            Some(v) if v == CONFIG_VERSION as f64 => CONFIG_VERSION,
            Some(v) => return Err(cfg_err(raw.line("", "version"), format!("unsupported config version {v}"))),
            None => return Err(cfg_err(1, format!("missing `version = {CONFIG_VERSION}`"))),
        };

        let gamma = raw.gamma.ok_or_else(|| cfg_err(0, "missing `gamma` in [model]"))?;
        let ang = |k: &str| -> Result<f64> {
            raw.quantity("model", k, Kind::Angular)?.ok_or_else(|| cfg_err(0, format!("missing `{k}` in [model]")))
        };
        let params = ModelParams::free(ang("omega")?, ang("delta_r")?, ang("delta_s")?, gamma, ang("chi")?);
        params.validate().map_err(|e| cfg_err(raw.line("model", "gamma"), e.to_string()))?;
        let variant = match raw.word("model", "variant") {
            Some((v, line)) => v.parse().map_err(|e: Error| cfg_err(line, e.to_string()))?,
            None => EquationVariant::default(),
        };
        let initial = match raw.word("model", "initial") {
            None | Some(("ground", _)) => InitialCondition::Ground,
            Some(("excited", _)) => InitialCondition::Excited,
            Some((v, line)) => return Err(cfg_err(line, format!("`initial` must be ground or excited, got `{v}`"))),
        };
        let model = ModelConfig { params, variant, initial };

        let q = |s: &str, k: &str, kind: Kind, default: f64| -> Result<f64> {
            Ok(raw.quantity(s, k, kind)?.unwrap_or(default))
        };
        let integration = IntegrationConfig {
            sample_rate: positive(
                q("integration", "sample_rate", Kind::Frequency, 1e6)?,
                "sample_rate",
                raw.line("integration", "sample_rate"),
            )?,
            duration: positive(
                q("integration", "duration", Kind::Time, 0.02)?,
                "duration",
                raw.line("integration", "duration"),
            )?,
            rel_tol: positive(
                q("integration", "rel_tol", Kind::Plain, 1e-8)?,
                "rel_tol",
                raw.line("integration", "rel_tol"),
            )?,
            abs_tol: positive(
                q("integration", "abs_tol", Kind::Plain, 1e-10)?,
                "abs_tol",
                raw.line("integration", "abs_tol"),
            )?,
            max_step: positive(
                q("integration", "max_step", Kind::Time, f64::INFINITY)?,
                "max_step",
                raw.line("integration", "max_step"),
            )?,
        };

        let strength =
            match (raw.quantity("drive", "omega_rs", Kind::Angular)?, raw.quantity("drive", "field", Kind::EField)?) {
                (Some(_), Some(_)) => {
                    return Err(cfg_err(raw.line("drive", "field"), "set either `omega_rs` or `field`, not both"))
                }
                (Some(w), None) => Strength::Rabi(w),
                (None, Some(e)) => Strength::Field(e),
                (None, None) => Strength::Rabi(0.0),
            };
        match strength {
            Strength::Rabi(v) | Strength::Field(v) if v < 0.0 => {
                return Err(cfg_err(
                    raw.line("drive", "omega_rs").max(raw.line("drive", "field")),
                    "injection strength must be >= 0",
                ))
            }
            _ => {}
        }
        let profile = match raw.word("drive", "profile") {
            None | Some(("constant", _)) => Profile::Constant,
            Some(("step_on", _)) => Profile::StepOn,
            Some(("ramp", _)) => Profile::Ramp,
            Some((v, line)) => {
                return Err(cfg_err(line, format!("`profile` must be constant, step_on or ramp, got `{v}`")))
            }
        };
        let ramp = match raw.word("drive", "ramp") {
            None => Vec::new(),
            Some((v, line)) => v
                .split(',')
                .map(|knot| {
                    let (t, f) =
                        knot.split_once(':').ok_or_else(|| cfg_err(line, "ramp knots are `time_s:freq_hz`"))?;
                    Ok((parse_number(t, line)?, parse_number(f, line)?))
                })
                .collect::<Result<_>>()?,
        };
        if profile == Profile::Ramp && ramp.len() < 2 {
            return Err(cfg_err(raw.line("drive", "profile"), "profile = ramp needs at least two `ramp` knots"));
        }
        let drive = DriveConfig {
            strength,
            frequency: raw.quantity("drive", "frequency", Kind::Frequency)?,
            offset: raw.quantity("drive", "offset", Kind::Frequency)?,
            profile,
            t_on: q("drive", "t_on", Kind::Time, 0.0)?,
            ramp,
        };

        let d = AnalysisSettings::default();
        let window = match raw.word("analysis", "window") {
            Some((v, line)) => v.parse::<Window>().map_err(|e| cfg_err(line, e.to_string()))?,
            None => d.window,
        };
        let count = |k: &str, default: usize| -> Result<usize> {
            match raw.quantity("analysis", k, Kind::Plain)? {
                None => Ok(default),
                Some(v) if v >= 0.0 && v.fract() == 0.0 => Ok(v as usize),
                Some(_) => Err(cfg_err(raw.line("analysis", k), format!("`{k}` must be a non-negative integer"))),
            }
        };
        let settings = AnalysisSettings {
            sample_rate: integration.sample_rate,
            record: q("analysis", "record", Kind::Time, d.record)?,
            transient_skip: q("analysis", "transient_skip", Kind::Time, d.transient_skip)?,
            settle: q("analysis", "settle", Kind::Time, d.settle)?,
            rel_tol: integration.rel_tol,
            abs_tol: integration.abs_tol,
            window,
            suppression: q("analysis", "suppression", Kind::Plain, d.suppression)?,
            guard_bins: count("guard_bins", d.guard_bins)?,
            band_margin: q("analysis", "band_margin", Kind::Frequency, d.band_margin)?,
            search_band: (
                q("analysis", "search_lo", Kind::Frequency, d.search_band.0)?,
                q("analysis", "search_hi", Kind::Frequency, d.search_band.1.min(0.5 * integration.sample_rate))?,
            ),
            harmonics: count("harmonics", d.harmonics)?,
        };
        settings.validate().map_err(|e| cfg_err(0, format!("[analysis]: {e}")))?;
        let analysis = AnalysisConfig {
            settings,
            spectrogram_window: q("analysis", "spectrogram_window", Kind::Time, 5e-3)?,
            spectrogram_hop: q("analysis", "spectrogram_hop", Kind::Time, 1e-3)?,
            fit_points: count("fit_points", 6)?,
        };

        let has_calibration = raw.entries.keys().any(|(s, _)| s == "calibration");
        let calibration = if has_calibration {
            let m = MixingInputs::default();
            let inputs = MixingInputs {
                b_field: q("calibration", "b_field", Kind::BField, m.b_field)?,
                g_j: q("calibration", "g_j", Kind::Plain, m.g_j)?,
                m_j: q("calibration", "m_j", Kind::Plain, m.m_j)?,
                delta_e: q("calibration", "delta_e", Kind::Energy, m.delta_e)?,
                d_ref: q("calibration", "d_ref", Kind::Dipole, m.d_ref)?,
                alpha: q("calibration", "alpha", Kind::Plain, m.alpha)?,
            };
            inputs.validate().map_err(|e| match e {
                Error::DegenerateMixing => e,
                other => cfg_err(0, format!("[calibration]: {other}")),
            })?;
            Some(CalibrationConfig {
                inputs,
                k_forcing: q("calibration", "k_forcing", Kind::Plain, 0.014)?,
                e_field: q("calibration", "e_field", Kind::EField, 4.2 * MV_PER_CM)?,
            })
        } else {
            None
        };

        let mode = match raw.word("sweep", "mode") {
            None | Some(("independent", _)) => SweepMode::Independent,
            Some(("continuous", _)) => SweepMode::Continuous,
            Some((v, line)) => {
                return Err(cfg_err(line, format!("`mode` must be independent or continuous, got `{v}`")))
            }
        };
        let scan_axes = [
            raw.axis("sweep", "scan_omega", Kind::Angular)?,
            raw.axis("sweep", "scan_delta_r", Kind::Angular)?,
            raw.axis("sweep", "scan_delta_s", Kind::Angular)?,
            raw.axis("sweep", "scan_chi", Kind::Angular)?,
        ];
        let scan = match scan_axes {
            [Some(omega), Some(delta_r), Some(delta_s), Some(chi)] => {
                Some(ScanGrid { omega, delta_r, delta_s, chi, gamma, initial: initial.state() })
            }
            [None, None, None, None] => None,
            _ => {
                return Err(cfg_err(
                    raw.line("sweep", "scan_omega"),
                    "scan needs all of scan_omega, scan_delta_r, scan_delta_s, scan_chi",
                ))
            }
        };
        let sd = ScanSettings::default();
        let scan_settings = ScanSettings {
            duration: q("sweep", "scan_duration", Kind::Time, sd.duration)?,
            transient_skip: q("sweep", "scan_skip", Kind::Time, sd.transient_skip)?,
            sample_rate: integration.sample_rate,
            rel_tol: sd.rel_tol,
            abs_tol: sd.abs_tol,
            search_band: settings.search_band,
        };
        let omega_rs_search =
            (q("sweep", "omega_rs_min", Kind::Angular, 0.0)?, q("sweep", "omega_rs_max", Kind::Angular, 2.0 * gamma)?);
        if !(omega_rs_search.0 >= 0.0 && omega_rs_search.1 > omega_rs_search.0) {
            return Err(cfg_err(raw.line("sweep", "omega_rs_max"), "need 0 <= omega_rs_min < omega_rs_max"));
        }
        let sweep = SweepConfig {
            fields: raw.axis("sweep", "fields", Kind::EField)?,
            offsets: raw.axis("sweep", "offsets", Kind::Frequency)?,
            frequencies: raw.axis("sweep", "frequencies", Kind::Frequency)?,
            strengths: raw.axis("sweep", "strengths", Kind::Angular)?,
            mode,
            ramp_rate: raw.quantity("sweep", "ramp_rate", Kind::Rate)?,
            omega_rs_search,
            scan,
            scan_settings,
            scan_target: q("sweep", "scan_target", Kind::Frequency, 23.45e3)?,
        };

        let output_dir = raw.word("output", "dir").map(|(v, _)| PathBuf::from(v));
        Ok(Self { version, model, integration, drive, analysis, calibration, sweep, output_dir })
    }

    /// Injection strength in rad/s, resolving a field through the calibration block.
    pub fn omega_rs(&self) -> Result<f64> {
        match self.drive.strength {
            Strength::Rabi(w) => Ok(w),
            Strength::Field(e) => self.field_to_rabi(e),
        }
    }

    /// Ωrs for an applied field (V/m); needs the calibration block.
    pub fn field_to_rabi(&self, e_field: f64) -> Result<f64> {
        let cal = self.require_calibration()?;
        let d_ind = crate::calibration::induced_dipole(&cal.inputs)?;
        crate::calibration::rabi_from_field(e_field, d_ind, cal.inputs.alpha)
    }

    pub fn require_calibration(&self) -> Result<&CalibrationConfig> {
        self.calibration
            .as_ref()
            .ok_or_else(|| Error::Config { line: 0, msg: "this command needs a [calibration] block".into() })
    }

    /// Every resolved value in SI units, one `section.key = value` per line.
    pub fn canonical(&self) -> String {
        let mut s = String::new();
        let p = &self.model.params;
        let _ = writeln!(s, "version = {}", self.version);
        let _ = writeln!(s, "model.variant = {}", self.model.variant);
        let _ = writeln!(s, "model.initial = {}", self.model.initial.as_str());
        for (k, v) in [
            ("gamma", p.gamma),
            ("omega", p.omega),
            ("delta_r", p.delta_r),
            ("delta_s", p.delta_s_state),
            ("chi", p.chi),
        ] {
            let _ = writeln!(s, "model.{k} = {v:e} rad/s");
        }
        let i = &self.integration;
        let _ = writeln!(s, "integration.sample_rate = {:e} Hz", i.sample_rate);
        let _ = writeln!(s, "integration.duration = {:e} s", i.duration);
        let _ = writeln!(s, "integration.rel_tol = {:e}", i.rel_tol);
        let _ = writeln!(s, "integration.abs_tol = {:e}", i.abs_tol);
        let _ = writeln!(s, "integration.max_step = {:e} s", i.max_step);
        let d = &self.drive;
        match d.strength {
            Strength::Rabi(w) => {
                let _ = writeln!(s, "drive.omega_rs = {w:e} rad/s");
            }
            Strength::Field(e) => {
                let _ = writeln!(s, "drive.field = {e:e} V/m");
            }
        }
        let opt = |v: Option<f64>| v.map(|x| format!("{x:e} Hz")).unwrap_or_else(|| "unset".into());
        let _ = writeln!(s, "drive.frequency = {}", opt(d.frequency));
        let _ = writeln!(s, "drive.offset = {}", opt(d.offset));
        let _ = writeln!(s, "drive.profile = {:?}", d.profile);
        let _ = writeln!(s, "drive.t_on = {:e} s", d.t_on);
        let knots: Vec<String> = d.ramp.iter().map(|(t, f)| format!("{t:e}:{f:e}")).collect();
        let _ = writeln!(s, "drive.ramp = {}", knots.join(","));
        let a = &self.analysis.settings;
        let _ = writeln!(s, "analysis.window = {}", a.window);
        let _ = writeln!(s, "analysis.record = {:e} s", a.record);
        let _ = writeln!(s, "analysis.transient_skip = {:e} s", a.transient_skip);
        let _ = writeln!(s, "analysis.settle = {:e} s", a.settle);
        let _ = writeln!(s, "analysis.suppression = {:e}", a.suppression);
        let _ = writeln!(s, "analysis.guard_bins = {}", a.guard_bins);
        let _ = writeln!(s, "analysis.band_margin = {:e} Hz", a.band_margin);
        let _ = writeln!(s, "analysis.search_band = {:e}..{:e} Hz", a.search_band.0, a.search_band.1);
        let _ = writeln!(s, "analysis.harmonics = {}", a.harmonics);
        let _ = writeln!(s, "analysis.spectrogram_window = {:e} s", self.analysis.spectrogram_window);
        let _ = writeln!(s, "analysis.spectrogram_hop = {:e} s", self.analysis.spectrogram_hop);
        let _ = writeln!(s, "analysis.fit_points = {}", self.analysis.fit_points);
        if let Some(c) = &self.calibration {
            let m = &c.inputs;
            let _ = writeln!(s, "calibration.b_field = {:e} T", m.b_field);
            let _ = writeln!(s, "calibration.g_j = {:e}", m.g_j);
            let _ = writeln!(s, "calibration.m_j = {:e}", m.m_j);
            let _ = writeln!(s, "calibration.delta_e = {:e} J", m.delta_e);
            let _ = writeln!(s, "calibration.d_ref = {:e} C*m", m.d_ref);
            let _ = writeln!(s, "calibration.alpha = {:e}", m.alpha);
            let _ = writeln!(s, "calibration.k_forcing = {:e}", c.k_forcing);
            let _ = writeln!(s, "calibration.e_field = {:e} V/m", c.e_field);
        }
        let sw = &self.sweep;
        let axis = |v: &Option<Vec<f64>>, unit: &str| match v {
            None => "unset".to_string(),
            Some(v) => format!("{} {unit}", v.iter().map(|x| format!("{x:e}")).collect::<Vec<_>>().join(",")),
        };
        let _ = writeln!(s, "sweep.fields = {}", axis(&sw.fields, "V/m"));
        let _ = writeln!(s, "sweep.offsets = {}", axis(&sw.offsets, "Hz"));
        let _ = writeln!(s, "sweep.frequencies = {}", axis(&sw.frequencies, "Hz"));
        let _ = writeln!(s, "sweep.strengths = {}", axis(&sw.strengths, "rad/s"));
        let _ = writeln!(s, "sweep.mode = {:?}", sw.mode);
        let _ = writeln!(
            s,
            "sweep.ramp_rate = {}",
            sw.ramp_rate.map(|r| format!("{r:e} Hz/s")).unwrap_or_else(|| "derived".into())
        );
        let _ = writeln!(s, "sweep.omega_rs_search = {:e}..{:e} rad/s", sw.omega_rs_search.0, sw.omega_rs_search.1);
        if let Some(g) = &sw.scan {
            let _ = writeln!(s, "sweep.scan_omega = {}", axis(&Some(g.omega.clone()), "rad/s"));
            let _ = writeln!(s, "sweep.scan_delta_r = {}", axis(&Some(g.delta_r.clone()), "rad/s"));
            let _ = writeln!(s, "sweep.scan_delta_s = {}", axis(&Some(g.delta_s.clone()), "rad/s"));
            let _ = writeln!(s, "sweep.scan_chi = {}", axis(&Some(g.chi.clone()), "rad/s"));
        }
        let _ = writeln!(s, "sweep.scan_duration = {:e} s", sw.scan_settings.duration);
        let _ = writeln!(s, "sweep.scan_skip = {:e} s", sw.scan_settings.transient_skip);
        let _ = writeln!(s, "sweep.scan_target = {:e} Hz", sw.scan_target);
        s
    }

    /// SHA-256 of [`RunConfig::canonical`], hex encoded.
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.canonical().as_bytes()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = "version = 1\n[model]\ngamma = 25.4 kHz\nomega = 0.187 gamma\ndelta_r = -4.542 gamma\ndelta_s = -3.313 gamma\nchi = -116.7 gamma\n";

    #[test]
    fn parses_units_to_si() {
        let text = format!(
            "{BASE}variant = methods\n[drive]\nfield = 4.2 mV/cm\nfrequency = 21 kHz\n[calibration]\nb_field = 4 G\ndelta_e = 1.536 GHz\n[sweep]\nfields = 1 .. 3 x 3 mV/cm\noffsets = -300, 300 Hz\n"
        );
        let c = RunConfig::parse(&text).unwrap();
        let g = 2.0 * PI * 25.4e3;
        assert!((c.model.params.gamma - g).abs() < 1e-9);
        assert!((c.model.params.omega - 0.187 * g).abs() < 1e-9);
        assert_eq!(c.model.variant, EquationVariant::Methods);
        assert_eq!(c.drive.strength, Strength::Field(0.42000000000000004));
        assert_eq!(c.drive.frequency, Some(21e3));
        let cal = c.calibration.unwrap();
        assert!((cal.inputs.b_field - 4e-4).abs() < 1e-18);
        assert_eq!(c.sweep.fields.as_deref(), Some(&[0.1, 0.2, 0.30000000000000004][..]));
        assert_eq!(c.sweep.offsets.as_deref(), Some(&[-300.0, 300.0][..]));
        assert!(c.omega_rs().unwrap() > 0.0);
    }

    #[test]
    fn rejects_unknown_key_with_line() {
        let text = format!("{BASE}[drive]\nomega_rz = 1 gamma\n");
        match RunConfig::parse(&text) {
            Err(Error::Config { line, msg }) => {
                assert_eq!(line, 9);
                assert!(msg.contains("omega_rz"), "{msg}");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn rejects_bad_input() {
        let cases = [
            format!("{BASE}[bogus]\n"),
            format!("{BASE}chi = 1 gamma\n"),
            format!("{BASE}[drive]\nomega_rs = 5\n"),
            format!("{BASE}[drive]\nomega_rs = 5 mV/cm\n"),
            format!("{BASE}[drive]\nomega_rs = 1 gamma\nfield = 1 V/m\n"),
            BASE.replace("version = 1", "version = 7"),
            BASE.replace("version = 1\n", ""),
            format!("{BASE}[sweep]\nfields = 1 .. 2 x 0 V/m\n"),
            format!("{BASE}[sweep]\nscan_omega = 1 gamma\n"),
            format!("{BASE}[calibration]\ndelta_e = 0 J\n"),
        ];
        for text in &cases {
            let err = RunConfig::parse(text).unwrap_err();
            assert!(err.is_config(), "{text}: {err}");
        }
    }

    #[test]
    fn missing_calibration_is_reported() {
        let text = format!("{BASE}[drive]\nfield = 1 V/m\n");
        let c = RunConfig::parse(&text).unwrap();
        assert!(c.omega_rs().unwrap_err().is_config());
    }

    #[test]
    fn canonical_form_and_hash_are_stable() {
        let a = RunConfig::parse(BASE).unwrap();
        let b = RunConfig::parse(&format!("# comment\n{BASE}\n\n")).unwrap();
        assert_eq!(a.canonical(), b.canonical());
        assert_eq!(a.hash(), b.hash());
        let c = RunConfig::parse(&BASE.replace("-116.7", "-116.8")).unwrap();
        assert_ne!(a.hash(), c.hash());
        assert_eq!(a.hash().len(), 64);
    }
}
