//! Point-particle radiation into one cavity mode, used as an independent
//! check of the quantum results.

use core::f64::consts::{PI, TAU};

use crate::{Error, Result, C64};

/// SI constants, CODATA 2018.
pub mod constants {
    pub const C: f64 = 299_792_458.0;
    pub const E_CHARGE: f64 = 1.602_176_634e-19;
    pub const HBAR: f64 = 1.054_571_817e-34;
    pub const M_E: f64 = 9.109_383_701_5e-31;
    pub const EPSILON_0: f64 = 8.854_187_812_8e-12;
    pub const MU_0: f64 = 1.256_637_062_12e-6;
}

use constants::{C, EPSILON_0, E_CHARGE, HBAR, MU_0};

/// Geometry and frequency of the cavity mode seen by the electron.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassicalModeSpec {
    /// `|E_qz| / |E_q⊥|`.
    pub eta_q: f64,
    pub n_eff: f64,
    /// Interaction length `L` (m).
    pub length: f64,
    /// Resonator circumference `L_c` (m).
    pub circumference: f64,
    /// Effective mode area `A_em` (m²).
    pub mode_area: f64,
    /// Angular frequency (rad/s).
    pub omega: f64,
}

impl ClassicalModeSpec {
    pub fn validate(&self) -> Result<()> {
        let ok = self.eta_q > 0.0
            && self.n_eff > 1.0
            && self.length >= 0.0
            && self.circumference > 0.0
            && self.mode_area > 0.0
            && self.omega > 0.0
            && [self.eta_q, self.n_eff, self.length, self.circumference, self.mode_area, self.omega]
                .iter()
                .all(|v| v.is_finite());
        if !ok {
            return Err(Error::InvalidParameter(
                "mode spec needs positive η_q, area, circumference, ω, L ≥ 0 and n_eff > 1".into(),
            ));
        }
        Ok(())
    }

    /// `V_mode = A_em L_c`.
    pub fn mode_volume(&self) -> f64 {
        self.mode_area * self.circumference
    }

    /// Longitudinal mode spacing `Δω = 2πc/(L_c n_eff)`.
    pub fn mode_spacing(&self) -> f64 {
        TAU * C / (self.circumference * self.n_eff)
    }

    /// Mode impedance `Z_q = √(μ₀/ε₀)/n_eff`.
    pub fn impedance(&self) -> f64 {
        libm::sqrt(MU_0 / EPSILON_0) / self.n_eff
    }
}

/// `M_b = (1/N_e) Σ_j e^{iωt_0j}`.
pub fn classical_bunching(omega: f64, arrival_times: &[f64]) -> Result<C64> {
    if arrival_times.is_empty() {
        return Err(Error::InvalidParameter("need at least one electron".into()));
    }
    let s: C64 = arrival_times
        .iter()
        .map(|&t| C64::from_polar(1.0, omega * t))
        .sum();
    Ok(s / arrival_times.len() as f64)
}

/// Energy exchanged with the mode field `E_qz` over `0..L`:
/// `−e E_qz ∫₀^L e^{iΔz} dz`, `Δ = ω/v − q_z` the synchronism mismatch.
pub fn energy_exchange(field_z: f64, length: f64, mismatch: f64) -> C64 {
    let integral = if mismatch == 0.0 {
        C64::new(length, 0.0)
    } else {
        (C64::from_polar(1.0, mismatch * length) - 1.0) / C64::new(0.0, mismatch)
    };
    integral * (-E_CHARGE * field_z)
}

/// Spontaneous spectral energy per mode per electron at synchronism,
/// `|ΔW|²/(8πP_q)` with `P_q = |E_q⊥|² A_em / (2Z_q)`.
pub fn spectral_energy(mode: &ClassicalModeSpec) -> f64 {
    // the transverse amplitude cancels; pick unity
    let e_perp = 1.0;
    let dw = energy_exchange(mode.eta_q * e_perp, mode.length, 0.0);
    let power = e_perp * e_perp * mode.mode_area / (2.0 * mode.impedance());
    dw.norm_sqr() / (8.0 * PI * power)
}

/// Radiated energy into one longitudinal mode: spectral energy times `Δω`.
pub fn mode_energy(mode: &ClassicalModeSpec) -> f64 {
    spectral_energy(mode) * mode.mode_spacing()
}

/// Spontaneous photons per electron per mode, `ΔW_mode / ħω`.
pub fn spontaneous_photons_per_electron(mode: &ClassicalModeSpec) -> f64 {
    mode_energy(mode) / (HBAR * mode.omega)
}

/// Photon numbers `(spontaneous, superradiant)` for `N_e` electrons:
/// `N_e n` and `|M_b|² N_e² n`.
pub fn beam_emission(n_e: usize, m_b: C64, mode: &ClassicalModeSpec) -> (f64, f64) {
    let n = spontaneous_photons_per_electron(mode);
    let ne = n_e as f64;
    (ne * n, m_b.norm_sqr() * ne * ne * n)
}

/// Quantized coupling `g = iη_q e A₀ L/ħ` with the vacuum amplitude
/// `A₀ = √(ħ / (2 n_eff² ε₀ ω V))`.
pub fn qed_coupling(mode: &ClassicalModeSpec) -> C64 {
    let a0 = libm::sqrt(
        HBAR / (2.0 * mode.n_eff * mode.n_eff * EPSILON_0 * mode.omega * mode.mode_volume()),
    );
    C64::new(0.0, mode.eta_q * E_CHARGE * a0 * mode.length / HBAR)
}

/// `|g|²` of [`qed_coupling`], the quantum prediction for photons per electron.
pub fn qed_coupling_magnitude(mode: &ClassicalModeSpec) -> f64 {
    qed_coupling(mode).norm_sqr()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mode() -> ClassicalModeSpec {
        ClassicalModeSpec {
            eta_q: 0.6,
            n_eff: 2.2,
            length: 20e-6,
            circumference: 200e-6,
            mode_area: 0.5e-12,
            omega: TAU * C / 800e-9,
        }
    }

    #[test]
    fn bunching_limits() {
        assert!((classical_bunching(3.0, &[1.0, 1.0, 1.0]).unwrap().norm() - 1.0).abs() < 1e-14);
        let w = TAU;
        let m = classical_bunching(w, &[0.0, 0.5]).unwrap();
        assert!(m.norm() < 1e-15);
        assert!(classical_bunching(1.0, &[]).is_err());
    }

    #[test]
    fn scalings() {
        let m = mode();
        let n = spontaneous_photons_per_electron(&m);
        let mut m2 = m;
        m2.length *= 2.0;
        assert!((spontaneous_photons_per_electron(&m2) / n - 4.0).abs() < 1e-12);
        let mut m3 = m;
        m3.mode_area *= 2.0;
        assert!((spontaneous_photons_per_electron(&m3) / n - 0.5).abs() < 1e-12);
        let mut m4 = m;
        m4.eta_q *= 3.0;
        assert!((qed_coupling_magnitude(&m4) / qed_coupling_magnitude(&m) - 9.0).abs() < 1e-12);
    }

    #[test]
    fn quantum_classical_identity() {
        let m = mode();
        let a = spontaneous_photons_per_electron(&m);
        let b = qed_coupling_magnitude(&m);
        assert!((a - b).abs() / b < 1e-12);
    }

    #[test]
    fn microcavity_coupling_range() {
        let g = qed_coupling_magnitude(&mode()).sqrt();
        assert!(g > 1e-2 && g < 1e-1, "|g| = {g}");
    }

    #[test]
    fn beam_limits() {
        let m = mode();
        let n = spontaneous_photons_per_electron(&m);
        let (sp, sr) = beam_emission(50, C64::new(0.0, 0.0), &m);
        assert_eq!(sr, 0.0);
        assert!((sp - 50.0 * n).abs() < 1e-15);
        let (_, sr) = beam_emission(50, C64::new(1.0, 0.0), &m);
        assert!((sr - 2500.0 * n).abs() < 1e-12 * sr);
        let (sp, sr) = beam_emission(50, C64::new((1.0f64 / 50.0).sqrt(), 0.0), &m);
        assert!((sp - sr).abs() < 1e-12 * sp);
    }

    #[test]
    fn zero_length_emits_nothing() {
        let mut m = mode();
        m.length = 0.0;
        m.validate().unwrap();
        assert_eq!(spontaneous_photons_per_electron(&m), 0.0);
    }

    #[test]
    fn mismatch_reduces_exchange() {
        let on = energy_exchange(1.0, 1e-5, 0.0).norm();
        let off = energy_exchange(1.0, 1e-5, 1e5).norm();
        assert!(off < on);
        // full 2π slip cancels
        assert!(energy_exchange(1.0, 1e-5, TAU / 1e-5).norm() < 1e-12 * on);
    }
}
