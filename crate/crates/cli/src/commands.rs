use std::f64::consts::PI;
use std::fs;
use std::path::PathBuf;

use injlock_core::config::{Profile, SweepMode};
use injlock_core::export::output_path;
use injlock_core::protocols::default_ramp_rate;
use injlock_core::{
    bandwidth_study, calibration_chain, forcing_study, integrate, periodogram, scan_regimes, step_on, sweep_field,
    sweep_frequency, sweep_frequency_continuous, track_peak, write_matrix, write_table, Cell, DriveSchedule, Error,
    Execution, FieldPoint, IntegrationSpec, Manifest, OscReference, Result, RunConfig, Spectrum,
};

use crate::Command;

const TWO_PI: f64 = 2.0 * PI;

pub struct Ctx {
    pub cfg: RunConfig,
    pub out_dir: PathBuf,
}

fn missing(what: &str) -> Error {
    Error::Config { line: 0, msg: format!("this command needs {what}") }
}

/// Magnitudes of `s` between `lo` and `hi` (Hz).
fn band_slice(s: &Spectrum, lo: f64, hi: f64) -> (Vec<f64>, Vec<f64>) {
    let (a, b) = (s.bin_of(lo.max(0.0)), s.bin_of(hi));
    (s.freqs[a..=b].to_vec(), s.magnitude[a..=b].to_vec())
}

impl Ctx {
    pub fn dispatch(&self, cmd: Command) -> Result<()> {
        match cmd {
            Command::Simulate => self.simulate(),
            Command::SweepField => self.sweep_field(),
            Command::SweepFrequency => self.sweep_frequency(),
            Command::StepOn => self.step_on(),
            Command::CriticalPoints => self.critical_points(),
            Command::FitBandwidth => self.fit_bandwidth(),
            Command::Calibrate => self.calibrate(),
            Command::ScanOsc => self.scan_osc(),
        }
    }

    fn manifest(&self, command: &str) -> Manifest {
        Manifest::for_config(command, &self.cfg)
    }

    fn path(&self, name: &str) -> Result<PathBuf> {
        output_path(&self.out_dir, name)
    }

    /// Prints `key = value` lines and writes them, under the manifest, to `<command>_summary.txt`.
    fn summary(&self, command: &str, lines: &[(String, String)]) -> Result<()> {
        let m = self.manifest(command);
        let mut text = String::new();
        for (k, v) in &m.entries {
            text.push_str(&format!("# {k}: {v}\n"));
        }
        for (k, v) in lines {
            println!("{k} = {v}");
            text.push_str(&format!("{k} = {v}\n"));
        }
        let path = self.path(&format!("{}_summary.txt", command.replace('-', "_")))?;
        fs::write(&path, text).map_err(|source| Error::Io { path, source })
    }

    fn reference(&self) -> Result<OscReference> {
        let c = &self.cfg;
        let r =
            OscReference::characterize(c.model.params, c.model.variant, c.model.initial.state(), c.analysis.settings)?;
        eprintln!("reference: f_osc = {:.2} Hz, A0 = {:.4e}, drift = {:.3}%", r.f_osc, r.a0, 100.0 * r.drift);
        Ok(r)
    }

    fn injection_hz(&self, f_osc: Option<f64>) -> Result<f64> {
        match (self.cfg.drive.frequency, self.cfg.drive.offset, f_osc) {
            (Some(f), _, _) => Ok(f),
            (None, Some(off), Some(f0)) => Ok(f0 + off),
            (None, Some(_), None) => Err(missing("a characterized oscillator for `[drive] offset`")),
            (None, None, _) => Err(missing("`[drive] frequency` or `[drive] offset`")),
        }
    }

    /// The swept axis, its unit label, and whether it is a field.
    fn strength_axis(&self) -> Result<(Vec<f64>, &'static str, bool)> {
        let s = &self.cfg.sweep;
        match (&s.fields, &s.strengths) {
            (Some(f), _) => {
                self.cfg.require_calibration()?;
                Ok((f.clone(), "field_v_m", true))
            }
            (None, Some(w)) => Ok((w.clone(), "omega_rs_rad_s", false)),
            (None, None) => Err(missing("`[sweep] fields` or `[sweep] strengths`")),
        }
    }

    fn to_rabi(&self, is_field: bool) -> impl Fn(f64) -> Result<f64> + Sync + '_ {
        move |v| if is_field { self.cfg.field_to_rabi(v) } else { Ok(v) }
    }

    fn simulate(&self) -> Result<()> {
        let c = &self.cfg;
        let omega_rs = c.omega_rs()?;
        let f_inj = if omega_rs > 0.0 || c.drive.profile == Profile::Ramp {
            let f_osc = match c.drive.frequency {
                Some(_) => None,
                None => Some(self.reference()?.f_osc),
            };
            if c.drive.profile == Profile::Ramp {
                0.0
            } else {
                self.injection_hz(f_osc)?
            }
        } else {
            0.0
        };
        let delta = TWO_PI * f_inj;
        let drive = match c.drive.profile {
            Profile::Constant => DriveSchedule::constant(omega_rs, delta)?,
            Profile::StepOn => DriveSchedule::step_on(c.drive.t_on, omega_rs, delta)?,
            Profile::Ramp => {
                DriveSchedule::ramp(omega_rs, c.drive.ramp.iter().map(|&(t, f)| (t, TWO_PI * f)).collect())?
            }
        };
        let i = &c.integration;
        let mut spec = IntegrationSpec::new(i.duration, i.sample_rate).with_tolerances(i.rel_tol, i.abs_tol);
        spec.max_step = i.max_step;
        let tr = integrate(&c.model.params, &c.model.initial.state(), &spec, &drive, c.model.variant)?;

        let mut m = self.manifest("simulate");
        m.push("drive", &drive).push("units", "t s; populations and coherences dimensionless");
        let rows: Vec<Vec<Cell>> = tr
            .times
            .iter()
            .zip(&tr.states)
            .map(|(t, s)| {
                [
                    *t,
                    s.n_r,
                    s.n_s,
                    s.sigma_gr.re,
                    s.sigma_gr.im,
                    s.sigma_gs.re,
                    s.sigma_gs.im,
                    s.sigma_rs.re,
                    s.sigma_rs.im,
                ]
                .into_iter()
                .map(Cell::from)
                .collect()
            })
            .collect();
        let header = [
            "t_s",
            "n_r",
            "n_s",
            "re_sigma_gr",
            "im_sigma_gr",
            "re_sigma_gs",
            "im_sigma_gs",
            "re_sigma_rs",
            "im_sigma_rs",
        ];
        write_table(&self.path("trajectory.csv")?, &m, &header, &rows)?;

        let skip = if c.analysis.settings.transient_skip < 0.5 * i.duration {
            c.analysis.settings.transient_skip
        } else {
            0.0
        };
        let spectrum = periodogram(&tr.observable, i.sample_rate, c.analysis.settings.window, skip)?;
        let mut sm = self.manifest("simulate");
        sm.push("observable", "Im(sigma_gr)").push("transient_skip_s", skip).push("window", spectrum.window);
        let srows: Vec<Vec<Cell>> =
            spectrum.freqs.iter().zip(&spectrum.magnitude).map(|(f, a)| vec![Cell::from(*f), Cell::from(*a)]).collect();
        write_table(&self.path("spectrum.csv")?, &sm, &["freq_hz", "amplitude"], &srows)?;

        let mut lines = vec![
            ("samples".to_string(), tr.len().to_string()),
            ("steps_accepted".to_string(), tr.meta.steps_accepted.to_string()),
            ("steps_rejected".to_string(), tr.meta.steps_rejected.to_string()),
        ];
        if let Ok(peak) = track_peak(&spectrum, c.analysis.settings.search_band) {
            lines.push(("peak_hz".into(), format!("{:.3}", peak.frequency)));
            lines.push(("peak_amplitude".into(), format!("{:.6e}", peak.amplitude)));
        }
        self.summary("simulate", &lines)
    }

    fn field_map(
        &self,
        name: &str,
        command: &str,
        points: &[FieldPoint],
        corner: &str,
        lo: f64,
        hi: f64,
    ) -> Result<()> {
        let Some(first) = points.first() else { return Ok(()) };
        let (freqs, _) = band_slice(&first.spectrum, lo, hi);
        let y: Vec<f64> = points.iter().map(|p| p.field).collect();
        let values: Vec<Vec<f64>> = points.iter().map(|p| band_slice(&p.spectrum, lo, hi).1).collect();
        let mut m = self.manifest(command);
        m.push("layout", "first row frequency (Hz), first column swept value, cells spectral amplitude");
        write_matrix(&self.path(name)?, &m, corner, &freqs, &y, &values)
    }

    fn sweep_field(&self) -> Result<()> {
        let osc = self.reference()?;
        let f_inj = self.injection_hz(Some(osc.f_osc))?;
        let (axis, unit, is_field) = self.strength_axis()?;
        let points = sweep_field(
            &osc,
            &axis,
            self.to_rabi(is_field),
            f_inj,
            injlock_core::Protocol::Steady,
            Execution::Parallel,
        )?;
        let mut m = self.manifest("sweep-field");
        m.push("f_osc_hz", osc.f_osc).push("f_inj_hz", f_inj).push("a0", osc.a0);
        let rows: Vec<Vec<Cell>> = points
            .iter()
            .map(|p| {
                let r = &p.report;
                vec![p.field.into(), p.omega_rs.into(), r.readout_hz.into(), r.locked.into(), r.residual_ratio.into()]
            })
            .collect();
        write_table(
            &self.path("sweep_field.csv")?,
            &m,
            &[unit, "omega_rs_rad_s", "readout_hz", "locked", "residual_ratio"],
            &rows,
        )?;
        let margin = 4.0 * (f_inj - osc.f_osc).abs().max(100.0);
        self.field_map(
            "sweep_field_map.csv",
            "sweep-field",
            &points,
            unit,
            osc.f_osc.min(f_inj) - margin,
            osc.f_osc.max(f_inj) + margin,
        )?;
        let first_lock = points.iter().find(|p| p.report.locked);
        self.summary(
            "sweep-field",
            &[
                ("f_osc_hz".into(), format!("{:.3}", osc.f_osc)),
                ("f_inj_hz".into(), format!("{f_inj:.3}")),
                ("cells".into(), points.len().to_string()),
                ("locked_cells".into(), points.iter().filter(|p| p.report.locked).count().to_string()),
                ("first_locked_value".into(), first_lock.map_or("none".into(), |p| format!("{:e} ({unit})", p.field))),
            ],
        )
    }

    fn frequency_axis(&self, f_osc: f64) -> Result<Vec<f64>> {
        let s = &self.cfg.sweep;
        match (&s.frequencies, &s.offsets) {
            (Some(f), _) => Ok(f.clone()),
            (None, Some(o)) => Ok(o.iter().map(|d| f_osc + d).collect()),
            (None, None) => Err(missing("`[sweep] frequencies` or `[sweep] offsets`")),
        }
    }

    fn sweep_frequency(&self) -> Result<()> {
        let osc = self.reference()?;
        let omega_rs = self.cfg.omega_rs()?;
        let freqs = self.frequency_axis(osc.f_osc)?;
        let mut m = self.manifest("sweep-frequency");
        m.push("f_osc_hz", osc.f_osc)
            .push("omega_rs_rad_s", omega_rs)
            .push("mode", format!("{:?}", self.cfg.sweep.mode));
        match self.cfg.sweep.mode {
            SweepMode::Independent => {
                let reports = sweep_frequency(&osc, omega_rs, &freqs, Execution::Parallel)?;
                let rows: Vec<Vec<Cell>> = reports
                    .iter()
                    .map(|r| {
                        vec![
                            r.injection_hz.into(),
                            r.readout_hz.into(),
                            (r.readout_hz - osc.f_osc).into(),
                            r.locked.into(),
                            r.residual_ratio.into(),
                        ]
                    })
                    .collect();
                write_table(
                    &self.path("sweep_frequency.csv")?,
                    &m,
                    &["f_inj_hz", "readout_hz", "shift_hz", "locked", "residual_ratio"],
                    &rows,
                )?;
                let locked: Vec<f64> = reports.iter().filter(|r| r.locked).map(|r| r.injection_hz).collect();
                let range = match (locked.first(), locked.last()) {
                    (Some(a), Some(b)) => format!("{a:.2} .. {b:.2} Hz"),
                    _ => "none".into(),
                };
                self.summary(
                    "sweep-frequency",
                    &[
                        ("f_osc_hz".into(), format!("{:.3}", osc.f_osc)),
                        ("cells".into(), reports.len().to_string()),
                        ("locked_range".into(), range),
                    ],
                )
            }
            SweepMode::Continuous => {
                let (f0, f1) = (freqs[0], *freqs.last().expect("axis is non-empty"));
                let rate = self.cfg.sweep.ramp_rate.unwrap_or_else(|| default_ramp_rate(&osc));
                let a = &self.cfg.analysis;
                let sw =
                    sweep_frequency_continuous(&osc, omega_rs, f0, f1, rate, a.spectrogram_window, a.spectrogram_hop)?;
                m.push("ramp_rate_hz_s", rate).push("resolution_hz", sw.resolution);
                let rows: Vec<Vec<Cell>> = (0..sw.times.len())
                    .map(|k| {
                        vec![
                            sw.times[k].into(),
                            sw.injection_hz[k].into(),
                            sw.readout_hz[k].into(),
                            sw.locked[k].into(),
                        ]
                    })
                    .collect();
                write_table(
                    &self.path("sweep_frequency_ramp.csv")?,
                    &m,
                    &["t_s", "f_inj_hz", "readout_hz", "locked"],
                    &rows,
                )?;
                self.summary(
                    "sweep-frequency",
                    &[
                        ("f_osc_hz".into(), format!("{:.3}", osc.f_osc)),
                        ("ramp_rate_hz_s".into(), format!("{rate:.3}")),
                        ("columns".into(), sw.times.len().to_string()),
                        ("locked_columns".into(), sw.locked.iter().filter(|l| **l).count().to_string()),
                    ],
                )
            }
        }
    }

    fn step_on(&self) -> Result<()> {
        let osc = self.reference()?;
        let f_inj = self.injection_hz(Some(osc.f_osc))?;
        let a = &self.cfg.analysis;
        let t_on = self.cfg.drive.t_on;
        let strengths = match &self.cfg.sweep.strengths {
            Some(w) => w.clone(),
            None => vec![self.cfg.omega_rs()?],
        };
        let mut rows = Vec::new();
        let mut lines =
            vec![("f_osc_hz".to_string(), format!("{:.3}", osc.f_osc)), ("f_inj_hz".into(), format!("{f_inj:.3}"))];
        for (k, &w) in strengths.iter().enumerate() {
            let r = step_on(&osc, w, f_inj, t_on, a.spectrogram_window, a.spectrogram_hop)?;
            if k == 0 {
                let sg = &r.spectrogram;
                let margin = 4.0 * (f_inj - osc.f_osc).abs().max(100.0);
                let (lo, hi) = (osc.f_osc.min(f_inj) - margin, osc.f_osc.max(f_inj) + margin);
                let bw = sg.bin_width();
                let (ka, kb) =
                    ((lo / bw).round().max(0.0) as usize, ((hi / bw).round() as usize).min(sg.freqs.len() - 1));
                let values: Vec<Vec<f64>> = sg.magnitude.iter().map(|col| col[ka..=kb].to_vec()).collect();
                let mut m = self.manifest("step-on");
                m.push("omega_rs_rad_s", w)
                    .push("t_on_s", t_on)
                    .push("layout", "first row frequency (Hz), first column time (s)");
                write_matrix(
                    &self.path("step_on_spectrogram.csv")?,
                    &m,
                    "t_s",
                    &sg.freqs[ka..=kb],
                    &sg.times,
                    &values,
                )?;
                let track: Vec<Vec<Cell>> =
                    sg.times.iter().zip(&r.track_hz).map(|(t, f)| vec![Cell::from(*t), Cell::from(*f)]).collect();
                write_table(&self.path("step_on_track.csv")?, &m, &["t_s", "dominant_hz"], &track)?;
            }
            let acq = r.acquisition_time.unwrap_or(f64::NAN);
            rows.push(vec![
                Cell::from(w),
                Cell::from(r.report.locked),
                Cell::from(r.report.residual_ratio),
                Cell::from(acq),
            ]);
            lines.push((format!("omega_rs[{k}]_rad_s"), format!("{w:.6e}")));
            lines.push((format!("locked[{k}]"), r.report.locked.to_string()));
            lines.push((
                format!("acquisition_time[{k}]_s"),
                r.acquisition_time.map_or("not acquired".into(), |t| format!("{t:.4e}")),
            ));
        }
        let mut m = self.manifest("step-on");
        m.push("t_on_s", t_on).push("f_inj_hz", f_inj);
        write_table(
            &self.path("step_on.csv")?,
            &m,
            &["omega_rs_rad_s", "locked", "residual_ratio", "acquisition_time_s"],
            &rows,
        )?;
        self.summary("step-on", &lines)
    }

    fn critical_points(&self) -> Result<()> {
        let osc = self.reference()?;
        let offsets_hz = self.cfg.sweep.offsets.clone().ok_or_else(|| missing("`[sweep] offsets`"))?;
        let offsets: Vec<f64> = offsets_hz.iter().map(|f| TWO_PI * f).collect();
        let (points, fit) = forcing_study(&osc, &offsets, self.cfg.sweep.omega_rs_search, Execution::Parallel)?;
        let gamma = self.cfg.model.params.gamma;
        let mut m = self.manifest("critical-points");
        m.push("f_osc_hz", osc.f_osc).push("k", fit.k).push("r_squared", fit.r_squared);
        let rows: Vec<Vec<Cell>> = points
            .iter()
            .zip(&offsets_hz)
            .map(|(p, f)| {
                vec![
                    (*f).into(),
                    p.delta_inj.into(),
                    p.omega_rs_crit.into(),
                    (p.omega_rs_crit / gamma).into(),
                    p.suppression.into(),
                    p.probes.into(),
                ]
            })
            .collect();
        write_table(
            &self.path("critical_points.csv")?,
            &m,
            &["offset_hz", "delta_rad_s", "omega_rs_crit_rad_s", "omega_rs_crit_gamma", "residual_ratio", "probes"],
            &rows,
        )?;
        self.summary(
            "critical-points",
            &[
                ("f_osc_hz".into(), format!("{:.3}", osc.f_osc)),
                ("k".into(), format!("{:.6e}", fit.k)),
                ("k_ordinary_hz_per_rad_s".into(), format!("{:.6e}", fit.k_ordinary)),
                ("r_squared".into(), format!("{:.5}", fit.r_squared)),
            ],
        )
    }

    fn fit_bandwidth(&self) -> Result<()> {
        let osc = self.reference()?;
        let offsets = self.cfg.sweep.offsets.clone().ok_or_else(|| missing("`[sweep] offsets`"))?;
        let (axis, unit, is_field) = self.strength_axis()?;
        let study = bandwidth_study(
            &osc,
            &axis,
            self.to_rabi(is_field),
            &offsets,
            self.cfg.analysis.fit_points,
            Execution::Parallel,
        )?;
        let mut m = self.manifest("fit-bandwidth");
        m.push("f_osc_hz", osc.f_osc).push("axis", unit);
        let mut rows = Vec::new();
        let mut irows = Vec::new();
        let mut lines = vec![("f_osc_hz".to_string(), format!("{:.3}", osc.f_osc))];
        for s in &study.sweeps {
            for p in &s.points {
                rows.push(vec![
                    s.offset_hz.into(),
                    p.field.into(),
                    p.omega_rs.into(),
                    p.report.readout_hz.into(),
                    p.report.locked.into(),
                ]);
            }
            match &s.intercept {
                Ok(r) => {
                    irows.push(vec![
                        s.offset_hz.into(),
                        r.critical_field.into(),
                        r.bandwidth.into(),
                        r.fit.slope.into(),
                        r.points_used.into(),
                    ]);
                    lines
                        .push((format!("critical[{:+}Hz]", s.offset_hz), format!("{:.6e} ({unit})", r.critical_field)));
                }
                Err(e) => lines.push((format!("critical[{:+}Hz]", s.offset_hz), format!("failed: {e}"))),
            }
        }
        write_table(
            &self.path("fit_bandwidth_sweeps.csv")?,
            &m,
            &["offset_hz", unit, "omega_rs_rad_s", "readout_hz", "locked"],
            &rows,
        )?;
        write_table(
            &self.path("fit_bandwidth_intercepts.csv")?,
            &m,
            &["offset_hz", "critical_value", "bandwidth_rad_s", "pull_slope_hz_per_unit", "points_used"],
            &irows,
        )?;
        if let Some(law) = study.law {
            lines.push(("slope_above_hz_per_unit".into(), format!("{:.6e}", law.slope_above)));
            lines.push(("slope_below_hz_per_unit".into(), format!("{:.6e}", law.slope_below)));
            lines.push(("full_range_hz_per_unit".into(), format!("{:.6e}", law.full_slope)));
        }
        self.summary("fit-bandwidth", &lines)
    }

    fn calibrate(&self) -> Result<()> {
        let cal = self.cfg.require_calibration()?;
        let ch = calibration_chain(&cal.inputs, cal.e_field, cal.k_forcing)?;
        let gamma = self.cfg.model.params.gamma;
        let entries = [
            ("zeeman_energy_j", ch.zeeman_energy),
            ("d_ind_c_m", ch.d_ind),
            ("e_field_v_m", ch.e_field),
            ("omega_rs_rad_s", ch.omega_rs),
            ("omega_rs_over_gamma", ch.omega_rs / gamma),
            ("kappa_rad_s_per_v_m", ch.kappa),
            ("lock_kappa_e_rad_s", ch.lock_kappa_e),
            ("lock_two_kappa_e_rad_s", ch.lock_two_kappa_e),
        ];
        let rows: Vec<Vec<Cell>> = entries.iter().map(|(k, v)| vec![Cell::from(*k), Cell::from(*v)]).collect();
        write_table(&self.path("calibration.csv")?, &self.manifest("calibrate"), &["quantity", "value"], &rows)?;
        let lines: Vec<(String, String)> = entries.iter().map(|(k, v)| (k.to_string(), format!("{v:.9e}"))).collect();
        self.summary("calibrate", &lines)
    }

    fn scan_osc(&self) -> Result<()> {
        let s = &self.cfg.sweep;
        let grid = s.scan.as_ref().ok_or_else(|| missing("`[sweep] scan_*` axes"))?;
        let map = scan_regimes(grid, self.cfg.model.variant, &s.scan_settings)?;
        let g = grid.gamma;
        let rows: Vec<Vec<Cell>> = map
            .cells
            .iter()
            .map(|c| {
                let p = &c.params;
                vec![
                    (p.omega / g).into(),
                    (p.delta_r / g).into(),
                    (p.delta_s_state / g).into(),
                    (p.chi / g).into(),
                    c.regime.as_str().into(),
                    c.peak_to_peak.into(),
                    c.drift.into(),
                    c.frequency.unwrap_or(f64::NAN).into(),
                ]
            })
            .collect();
        let mut m = self.manifest("scan-osc");
        m.push("grid", grid.describe()).push("units", "parameters in units of gamma");
        write_table(
            &self.path("scan_osc.csv")?,
            &m,
            &[
                "omega_gamma",
                "delta_r_gamma",
                "delta_s_gamma",
                "chi_gamma",
                "regime",
                "peak_to_peak",
                "drift",
                "freq_hz",
            ],
            &rows,
        )?;
        let count = |r: &str| map.cells.iter().filter(|c| c.regime.as_str() == r).count().to_string();
        let mut lines = vec![
            ("points".to_string(), map.cells.len().to_string()),
            ("ss".into(), count("SS")),
            ("osc".into(), count("OSC")),
            ("div".into(), count("DIV")),
        ];
        let mut candidates: Vec<(usize, f64)> =
            map.oscillating().map(|(i, c)| (i, (c.frequency.unwrap_or(f64::INFINITY) - s.scan_target).abs())).collect();
        candidates.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
        let chosen = candidates.iter().find_map(|(i, _)| {
            OscReference::characterize(map.cells[*i].params, map.variant, grid.initial, self.cfg.analysis.settings).ok()
        });
        let found = chosen.is_some();
        match chosen {
            Some(r) => {
                let p = &r.params;
                lines.push(("chosen_omega_gamma".into(), format!("{:.4}", p.omega / g)));
                lines.push(("chosen_delta_r_gamma".into(), format!("{:.4}", p.delta_r / g)));
                lines.push(("chosen_delta_s_gamma".into(), format!("{:.4}", p.delta_s_state / g)));
                lines.push(("chosen_chi_gamma".into(), format!("{:.4}", p.chi / g)));
                lines.push(("chosen_f_osc_hz".into(), format!("{:.3}", r.f_osc)));
                lines.push(("chosen_a0".into(), format!("{:.4e}", r.a0)));
            }
            None => lines.push(("chosen".into(), "none".into())),
        }
        self.summary("scan-osc", &lines)?;
        if !found {
            return Err(Error::NoOscillation { ranges: grid.describe() });
        }
        Ok(())
    }
}
