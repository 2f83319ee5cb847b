//! Field-to-Rabi calibration: Zeeman-induced dipole, Ωrs(E) and κ.
//!
//! All quantities are SI. α is applied inside [`rabi_from_field`], so
//! `kappa(K, α, d)·E == K·rabi_from_field(E, d, α)`.

use crate::error::{Error, Result};

/// CODATA 2022 values.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalConstants {
    /// Bohr magneton (J/T).
    pub mu_b: f64,
    /// Reduced Planck constant (J·s).
    pub hbar: f64,
    /// Planck constant (J·s), exact.
    pub h: f64,
}

pub const CODATA: PhysicalConstants =
    PhysicalConstants { mu_b: 9.274_010_065_7e-24, hbar: 1.054_571_817e-34, h: 6.626_070_15e-34 };

/// Gauss to tesla.
pub const GAUSS: f64 = 1e-4;
/// mV/cm to V/m.
pub const MV_PER_CM: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MixingInputs {
    /// Magnetic flux density B (T).
    pub b_field: f64,
    pub g_j: f64,
    pub m_j: f64,
    /// Energy gap ΔE to the admixed dipole-allowed level (J).
    pub delta_e: f64,
    /// Dipole matrix element of the allowed transition (C·m).
    pub d_ref: f64,
    /// Empirical correction factor α.
    pub alpha: f64,
}

impl Default for MixingInputs {
    /// 76D₅/₂ (g_J = 6/5, m_J = 5/2) at 4 G. ΔE = h·1.536 GHz is the
    /// 76D₅/₂–77P₃/₂ gap from Cs quantum defects; d_ref (≈ 5350 e·a₀) is
    /// back-solved so that d_ind = 4.96×10⁻²⁸ C·m.
    fn default() -> Self {
        Self {
            b_field: 4.0 * GAUSS,
            g_j: 1.2,
            m_j: 2.5,
            delta_e: 1.536e9 * CODATA.h,
            d_ref: 4.536_073_809_527_912e-26,
            alpha: 0.11,
        }
    }
}

impl MixingInputs {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("b_field", self.b_field),
            ("g_j", self.g_j),
            ("m_j", self.m_j),
            ("delta_e", self.delta_e),
            ("d_ref", self.d_ref),
            ("alpha", self.alpha),
        ] {
            if !v.is_finite() {
                return Err(Error::invalid(name, "must be finite"));
            }
        }
        if self.delta_e == 0.0 {
            return Err(Error::DegenerateMixing);
        }
        if self.b_field < 0.0 {
            return Err(Error::invalid("b_field", "must be >= 0"));
        }
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(Error::invalid("alpha", "must lie in (0, 1]"));
        }
        Ok(())
    }

    /// Zeeman energy H_B = μ_B g_J m_J B (J).
    pub fn zeeman_energy(&self) -> f64 {
        CODATA.mu_b * self.g_j * self.m_j * self.b_field
    }
}

/// d_ind = (H_B/ΔE)·d_ref (C·m); α is not applied here.
pub fn induced_dipole(m: &MixingInputs) -> Result<f64> {
    m.validate()?;
    Ok(m.zeeman_energy() / m.delta_e * m.d_ref)
}

/// Ωrs = α·d_ind·E/ħ (rad/s).
pub fn rabi_from_field(e_field: f64, d_ind: f64, alpha: f64) -> Result<f64> {
    if !(e_field >= 0.0 && e_field.is_finite()) {
        return Err(Error::invalid("e_field", "must be finite and >= 0"));
    }
    Ok(alpha * d_ind * e_field / CODATA.hbar)
}

/// E = ħ·Ωrs/(α·d_ind) (V/m), the inverse of [`rabi_from_field`].
pub fn field_from_rabi(omega_rs: f64, d_ind: f64, alpha: f64) -> Result<f64> {
    let scale = alpha * d_ind;
    if !(scale > 0.0 && scale.is_finite()) {
        return Err(Error::invalid("alpha·d_ind", "must be finite and > 0"));
    }
    Ok(omega_rs * CODATA.hbar / scale)
}

/// κ = K·α·d_ind/ħ ((rad/s)/(V/m)).
pub fn kappa(k_forcing: f64, alpha: f64, d_ind: f64) -> f64 {
    k_forcing * alpha * d_ind / CODATA.hbar
}

/// Every stage of the chain at one applied field.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CalibrationChain {
    pub zeeman_energy: f64,
    pub d_ind: f64,
    pub e_field: f64,
    pub omega_rs: f64,
    pub kappa: f64,
    /// κ·E (rad/s), the lock range as printed.
    pub lock_kappa_e: f64,
    /// 2κ·E (rad/s), the lock range if κ·E is the half-width K·Ωrs.
    pub lock_two_kappa_e: f64,
}

pub fn calibration_chain(m: &MixingInputs, e_field: f64, k_forcing: f64) -> Result<CalibrationChain> {
    let d_ind = induced_dipole(m)?;
    let omega_rs = rabi_from_field(e_field, d_ind, m.alpha)?;
    let kappa = kappa(k_forcing, m.alpha, d_ind);
    Ok(CalibrationChain {
        zeeman_energy: m.zeeman_energy(),
        d_ind,
        e_field,
        omega_rs,
        kappa,
        lock_kappa_e: kappa * e_field,
        lock_two_kappa_e: 2.0 * kappa * e_field,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const D_IND: f64 = 4.96e-28;

    #[test]
    fn default_inputs_reproduce_reference_dipole() {
        let d = induced_dipole(&MixingInputs::default()).unwrap();
        assert!(((d - D_IND) / D_IND).abs() < 1e-12, "{d}");
    }

    #[test]
    fn dipole_examples() {
        let m = MixingInputs { b_field: 0.0, ..Default::default() };
        assert_eq!(induced_dipole(&m).unwrap(), 0.0);
        let one = induced_dipole(&MixingInputs::default()).unwrap();
        let two = induced_dipole(&MixingInputs { b_field: 8.0 * GAUSS, ..Default::default() }).unwrap();
        assert!((two - 2.0 * one).abs() < 1e-15 * two);
        let bad = MixingInputs { delta_e: 0.0, ..Default::default() };
        assert!(matches!(induced_dipole(&bad), Err(Error::DegenerateMixing)));
    }

    #[test]
    fn rabi_hand_arithmetic() {
        // 4.96e-28 · 0.42 / 1.054571817e-34
        let bare = rabi_from_field(4.2 * MV_PER_CM, D_IND, 1.0).unwrap();
        assert!((bare - 1.975_398_893e6).abs() < 1.0);
        let eff = rabi_from_field(4.2 * MV_PER_CM, D_IND, 0.11).unwrap();
        assert!((eff - 2.172_938_78e5).abs() < 1.0);
        let gamma = 2.0 * std::f64::consts::PI * 25.4e3;
        assert!((eff / gamma - 1.3616).abs() < 1e-3);
        assert_eq!(rabi_from_field(0.0, D_IND, 0.11).unwrap(), 0.0);
        assert!(rabi_from_field(-1.0, D_IND, 0.11).is_err());
    }

    #[test]
    fn kappa_hand_arithmetic() {
        let k = kappa(0.014, 0.11, D_IND);
        assert!((k - 7243.129).abs() < 1e-2);
        assert!((k * 0.42 - 3042.11).abs() < 1e-1);
        assert_eq!(kappa(0.014, 0.0, D_IND), 0.0);
    }

    #[test]
    fn field_inverse() {
        let w = rabi_from_field(0.42, D_IND, 0.11).unwrap();
        assert!((field_from_rabi(w, D_IND, 0.11).unwrap() - 0.42).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn kappa_e_equals_k_times_rabi(e in 0.0..10.0f64, k in 1e-4..1.0f64, a in 1e-3..1.0f64, d in 1e-30..1e-26f64) {
            let lhs = kappa(k, a, d) * e;
            let rhs = k * rabi_from_field(e, d, a).unwrap();
            prop_assert!((lhs - rhs).abs() <= 1e-14 * lhs.abs().max(1e-300));
        }

        #[test]
        fn chain_is_homogeneous(e in 0.01..10.0f64, s in 0.1..10.0f64) {
            let w1 = rabi_from_field(e, D_IND, 0.11).unwrap();
            let w2 = rabi_from_field(s * e, D_IND, 0.11).unwrap();
            prop_assert!((w2 - s * w1).abs() <= 1e-14 * w2);
            let k1 = kappa(0.014, 0.11, D_IND);
            let k2 = kappa(0.014, 0.11, s * D_IND);
            prop_assert!((k2 - s * k1).abs() <= 1e-14 * k2);
        }
    }
}
