//! Mean-field equations of motion for the driven V-type Rydberg ensemble.
//!
//! The state holds the two excited-state populations and the three
//! independent coherences. The conjugate coherences (σ_sr, σ_rg, σ_sg) are
//! never stored; they are obtained by conjugation where the equations need
//! them, which keeps the implied density matrix Hermitian.
//!
//! All rates and detunings are angular frequencies in rad/s.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;

use crate::error::{Error, Result};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Parameters of the mean-field model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    /// Ground to excited Rabi frequency Ω.
    pub omega: f64,
    /// Detuning Δr of |r⟩.
    pub delta_r: f64,
    /// Detuning Δs of |s⟩.
    pub delta_s_state: f64,
    /// Decay rate γ of the upper states.
    pub gamma: f64,
    /// Mean-field interaction strength χ.
    pub chi: f64,
    /// Injection Rabi frequency Ωrs between |r⟩ and |s⟩.
    pub omega_rs: f64,
    /// Injection detuning δs, relative to the |r⟩–|s⟩ separation.
    pub delta_inj: f64,
}

impl ModelParams {
    /// Undriven parameter set (Ωrs = 0, δs = 0).
    pub fn free(omega: f64, delta_r: f64, delta_s_state: f64, gamma: f64, chi: f64) -> Self {
        Self { omega, delta_r, delta_s_state, gamma, chi, omega_rs: 0.0, delta_inj: 0.0 }
    }

    pub fn with_injection(mut self, omega_rs: f64, delta_inj: f64) -> Self {
        self.omega_rs = omega_rs;
        self.delta_inj = delta_inj;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("omega", self.omega),
            ("delta_r", self.delta_r),
            ("delta_s_state", self.delta_s_state),
            ("gamma", self.gamma),
            ("chi", self.chi),
            ("omega_rs", self.omega_rs),
            ("delta_inj", self.delta_inj),
        ];
        for (name, v) in fields {
            if !v.is_finite() {
                return Err(Error::invalid(name, format!("must be finite, got {v}")));
            }
        }
        if self.gamma <= 0.0 {
            return Err(Error::invalid("gamma", "must be > 0"));
        }
        if self.omega_rs < 0.0 {
            return Err(Error::invalid("omega_rs", "must be >= 0"));
        }
        Ok(())
    }
}

/// The five dynamical variables of the mean-field model.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct MeanFieldState {
    pub n_r: f64,
    pub n_s: f64,
    pub sigma_gr: Complex64,
    pub sigma_gs: Complex64,
    pub sigma_rs: Complex64,
}

impl MeanFieldState {
    /// Number of real components.
    pub const DIM: usize = 8;

    /// All population in the ground state.
    pub fn ground() -> Self {
        Self::default()
    }

    pub fn to_array(&self) -> [f64; 8] {
        [
            self.n_r,
            self.n_s,
            self.sigma_gr.re,
            self.sigma_gr.im,
            self.sigma_gs.re,
            self.sigma_gs.im,
            self.sigma_rs.re,
            self.sigma_rs.im,
        ]
    }

    pub fn from_array(a: &[f64; 8]) -> Self {
        Self {
            n_r: a[0],
            n_s: a[1],
            sigma_gr: Complex64::new(a[2], a[3]),
            sigma_gs: Complex64::new(a[4], a[5]),
            sigma_rs: Complex64::new(a[6], a[7]),
        }
    }

    pub fn sigma_sr(&self) -> Complex64 {
        self.sigma_rs.conj()
    }

    pub fn sigma_rg(&self) -> Complex64 {
        self.sigma_gr.conj()
    }

    pub fn sigma_sg(&self) -> Complex64 {
        self.sigma_gs.conj()
    }

    /// Probe observable Im(σ_gr).
    pub fn observable(&self) -> f64 {
        self.sigma_gr.im
    }

    pub fn is_finite(&self) -> bool {
        self.to_array().iter().all(|v| v.is_finite())
    }
}

/// Which published form of the population equations to evaluate.
///
/// The two forms share the coherence equations and differ in the
/// population equations: `Methods` uses `(Ω/2)·Im(σ_gr)` and
/// `+(Ωrs/2)·Im(σ_rs e^{iθ})`, while `Supplementary` uses the first-moment
/// form `i(Ω/2)(σ_gr − σ_rg) = −Ω·Im(σ_gr)` and
/// `i(Ωrs/2)(σ_rs e^{iθ} − c.c.) = −Ωrs·Im(σ_rs e^{iθ})`, a factor −2 apart.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum EquationVariant {
    Methods,
    #[default]
    Supplementary,
}

impl EquationVariant {
    pub fn as_str(&self) -> &'static str {
        match self {
            EquationVariant::Methods => "methods",
            EquationVariant::Supplementary => "supplementary",
        }
    }

    /// Prefactors (Ω-coupling, Ωrs-coupling) applied to Im(σ_gα) and
    /// Im(σ_rs e^{iθ}) in the population equation of |r⟩.
    fn population_couplings(&self) -> (f64, f64) {
        match self {
            EquationVariant::Methods => (0.5, 0.5),
            EquationVariant::Supplementary => (-1.0, -1.0),
        }
    }
}

impl fmt::Display for EquationVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EquationVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "methods" => Ok(EquationVariant::Methods),
            "supplementary" => Ok(EquationVariant::Supplementary),
            other => Err(Error::invalid("variant", format!("expected `methods` or `supplementary`, got `{other}`"))),
        }
    }
}

/// Interaction-induced energy shift E_NL = χ(n_r + n_s).
pub fn nonlinear_shift(state: &MeanFieldState, params: &ModelParams) -> f64 {
    params.chi * (state.n_r + state.n_s)
}

/// Time derivative of the state at time `t`, with the drive phase δs·t.
///
/// Returns an error if the state contains non-finite values.
pub fn derivative(
    state: &MeanFieldState,
    params: &ModelParams,
    t: f64,
    variant: EquationVariant,
) -> Result<MeanFieldState> {
    if !state.is_finite() {
        return Err(Error::NonFinite { t });
    }
    Ok(derivative_driven(state, params, params.omega_rs, params.delta_inj * t, variant))
}

/// Derivative with an explicit injection amplitude and accumulated drive phase θ.
///
/// `params.omega_rs` and `params.delta_inj` are ignored; the integrator
/// supplies the instantaneous values from a drive schedule.
pub fn derivative_driven(
    state: &MeanFieldState,
    params: &ModelParams,
    omega_rs: f64,
    drive_phase: f64,
    variant: EquationVariant,
) -> MeanFieldState {
    let MeanFieldState { n_r, n_s, sigma_gr, sigma_gs, sigma_rs } = *state;
    let half_omega = 0.5 * params.omega;
    let gamma = params.gamma;
    let e_nl = nonlinear_shift(state, params);
    let drive = Complex64::from_polar(1.0, drive_phase);

    let (c_omega, c_rs) = variant.population_couplings();
    let exchange = c_rs * omega_rs * (sigma_rs * drive).im;
    let dn_r = c_omega * params.omega * sigma_gr.im - gamma * n_r + exchange;
    let dn_s = c_omega * params.omega * sigma_gs.im - gamma * n_s - exchange;

    let d_gr = I * half_omega * (2.0 * n_r + n_s + sigma_rs.conj() - 1.0)
        + I * Complex64::new(params.delta_r - e_nl, 0.5 * gamma) * sigma_gr;
    let d_gs = I * half_omega * (2.0 * n_s + n_r + sigma_rs - 1.0)
        + I * Complex64::new(params.delta_s_state - e_nl, 0.5 * gamma) * sigma_gs;
    let d_rs = I * half_omega * (sigma_gs - sigma_gr.conj())
        - I * Complex64::new(params.delta_r - params.delta_s_state, -gamma) * sigma_rs
        + I * (0.5 * omega_rs * (n_r - n_s)) * drive;

    MeanFieldState { n_r: dn_r, n_s: dn_s, sigma_gr: d_gr, sigma_gs: d_gs, sigma_rs: d_rs }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params() -> ModelParams {
        ModelParams::free(1.3e5, -2.0e5, 4.0e4, 1.6e5, -1.5e6)
    }

    #[test]
    fn shift_examples() {
        let p = ModelParams { chi: 10.0, ..params() };
        let zero = MeanFieldState::ground();
        assert_eq!(nonlinear_shift(&zero, &p), 0.0);
        let s = MeanFieldState { n_r: 0.3, n_s: 0.2, ..zero };
        assert!((nonlinear_shift(&s, &p) - 5.0).abs() < 1e-15);
        let s = MeanFieldState { n_r: 0.5, n_s: 0.5, ..zero };
        assert_eq!(nonlinear_shift(&s, &ModelParams { chi: 0.0, ..p }), 0.0);
    }

    #[test]
    fn dark_state_is_fixed() {
        let p = ModelParams { omega: 0.0, ..params() };
        for v in [EquationVariant::Methods, EquationVariant::Supplementary] {
            let d = derivative(&MeanFieldState::ground(), &p, 1.7e-3, v).unwrap();
            assert_eq!(d.to_array(), [0.0; 8]);
        }
    }

    #[test]
    fn pure_decay() {
        let p = ModelParams { omega: 0.0, ..params() };
        let s = MeanFieldState { n_r: 1.0, ..Default::default() };
        let d = derivative(&s, &p, 0.0, EquationVariant::Methods).unwrap();
        assert_eq!(d.n_r, -p.gamma);
        assert_eq!(d.n_s, 0.0);
    }

    #[test]
    fn non_finite_state_rejected() {
        let s = MeanFieldState { n_r: f64::NAN, ..Default::default() };
        let err = derivative(&s, &params(), 2.5e-4, EquationVariant::Methods).unwrap_err();
        assert!(matches!(err, Error::NonFinite { t } if t == 2.5e-4));
    }

    #[test]
    fn variant_round_trips_through_str() {
        for v in [EquationVariant::Methods, EquationVariant::Supplementary] {
            assert_eq!(v.as_str().parse::<EquationVariant>().unwrap(), v);
        }
        assert!("lindblad".parse::<EquationVariant>().is_err());
    }

    fn generic_state() -> MeanFieldState {
        MeanFieldState {
            n_r: 0.31,
            n_s: 0.12,
            sigma_gr: Complex64::new(0.17, -0.23),
            sigma_gs: Complex64::new(-0.08, 0.14),
            sigma_rs: Complex64::new(0.05, 0.11),
        }
    }

    /// Component-wise real transliteration of the printed equations.
    fn oracle(s: &MeanFieldState, p: &ModelParams, t: f64, c_pop: f64) -> [f64; 8] {
        let (a, b) = (s.sigma_gr.re, s.sigma_gr.im);
        let (c, d) = (s.sigma_gs.re, s.sigma_gs.im);
        let (u, v) = (s.sigma_rs.re, s.sigma_rs.im);
        let (w, g, wr) = (p.omega, p.gamma, p.omega_rs);
        let e = p.chi * (s.n_r + s.n_s);
        let (dr, ds) = (p.delta_r - e, p.delta_s_state - e);
        let dd = p.delta_r - p.delta_s_state;
        let (sn, cs) = (p.delta_inj * t).sin_cos();
        let ex = c_pop * wr * (u * sn + v * cs);
        let pop = s.n_r - s.n_s;
        [
            c_pop * w * b - g * s.n_r + ex,
            c_pop * w * d - g * s.n_s - ex,
            0.5 * w * v - dr * b - 0.5 * g * a,
            0.5 * w * (2.0 * s.n_r + s.n_s + u - 1.0) + dr * a - 0.5 * g * b,
            -0.5 * w * v - ds * d - 0.5 * g * c,
            0.5 * w * (2.0 * s.n_s + s.n_r + u - 1.0) + ds * c - 0.5 * g * d,
            -0.5 * w * (d + b) + dd * v - g * u - 0.5 * wr * pop * sn,
            0.5 * w * (c - a) - dd * u - g * v + 0.5 * wr * pop * cs,
        ]
    }

    #[test]
    fn matches_real_oracle() {
        let p = params().with_injection(7.0e4, 2.0 * std::f64::consts::PI * 21.1e3);
        let s = generic_state();
        let t = 0.37e-3;
        for (v, c_pop) in [(EquationVariant::Methods, 0.5), (EquationVariant::Supplementary, -1.0)] {
            let got = derivative(&s, &p, t, v).unwrap().to_array();
            let want = oracle(&s, &p, t, c_pop);
            let scale = want.iter().fold(0.0f64, |m, x| m.max(x.abs()));
            for (k, (g, w)) in got.iter().zip(&want).enumerate() {
                assert!((g - w).abs() <= 1e-12 * scale, "{v} component {k}: {g} vs {w}");
            }
        }
    }

    #[test]
    fn time_enters_only_through_drive_phase() {
        let s = generic_state();
        let free = params();
        let a = derivative(&s, &free, 0.0, EquationVariant::Supplementary).unwrap();
        let b = derivative(&s, &free, 3.3e-3, EquationVariant::Supplementary).unwrap();
        assert_eq!(a, b);
        let p = params().with_injection(5.0e4, 1.3e5);
        let (t, tau) = (1.1e-4, 2.9e-4);
        let shifted = derivative(&s, &p, t + tau, EquationVariant::Supplementary).unwrap();
        let explicit = derivative_driven(&s, &p, 5.0e4, 1.3e5 * (t + tau), EquationVariant::Supplementary);
        assert_eq!(shifted, explicit);
    }

    #[test]
    fn relabelling_r_and_s_is_a_symmetry() {
        let p = params();
        let s = generic_state();
        let theta = 0.83;
        let swap = |x: &MeanFieldState| MeanFieldState {
            n_r: x.n_s,
            n_s: x.n_r,
            sigma_gr: x.sigma_gs,
            sigma_gs: x.sigma_gr,
            sigma_rs: x.sigma_rs.conj(),
        };
        let q = ModelParams { delta_r: p.delta_s_state, delta_s_state: p.delta_r, ..p };
        for v in [EquationVariant::Methods, EquationVariant::Supplementary] {
            let direct = swap(&derivative_driven(&s, &p, 6.0e4, theta, v)).to_array();
            let relabelled = derivative_driven(&swap(&s), &q, 6.0e4, -theta, v).to_array();
            for (x, y) in direct.iter().zip(&relabelled) {
                assert!((x - y).abs() <= 1e-12 * x.abs().max(1.0), "{v}: {x} vs {y}");
            }
        }
    }

    #[test]
    fn params_validation() {
        assert!(params().validate().is_ok());
        assert!(ModelParams { gamma: 0.0, ..params() }.validate().is_err());
        assert!(ModelParams { omega_rs: -1.0, ..params() }.validate().is_err());
        assert!(ModelParams { chi: f64::INFINITY, ..params() }.validate().is_err());
    }
}
