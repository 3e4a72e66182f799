//! A single PINEM-modulated Gaussian electron wavepacket: momentum
//! amplitudes, bunching factors and real-space density.
//!
//! Everything is dimensionless. Wavenumbers are in units of the laser recoil
//! `δk = ω_L/v₀` (`κ = (k − k₀)/δk`), drift times in units of
//! `T_b = 2π / (ħδk²/2γ³mₑ)`, and positions are the co-moving laser phase
//! `ξ = δk (z − v₀ t_d)`.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::{FRAC_PI_2, PI, TAU};

use crate::classical::constants::{C, E_CHARGE, HBAR, M_E};
use crate::special::{bessel_cutoff, bessel_j, harmonic_cutoff};
use crate::{Error, Result, C64};

/// Lab-frame description from which the dimensionless fields follow.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalBlock {
    /// Kinetic energy in keV.
    pub beam_energy_kev: f64,
    /// Modulating laser wavelength in metres.
    pub wavelength: f64,
    /// Temporal envelope width σ_t in seconds.
    pub sigma_t: f64,
    /// Drift length from the modulation point to the cavity, metres.
    pub drift_length: f64,
}

/// Quantities derived from a [`PhysicalBlock`], SI units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalDerived {
    pub gamma: f64,
    pub v0: f64,
    pub omega_l: f64,
    pub delta_k: f64,
    pub sigma_k: f64,
    pub t_d: f64,
    /// Fundamental drift period `T_b`.
    pub t_b: f64,
    pub sigma_ratio: f64,
    pub t_d_ratio: f64,
    /// `ω_L t_d` reduced to `[0, 2π)`.
    pub carrier_phase: f64,
}

impl PhysicalBlock {
    pub fn derive(&self) -> PhysicalDerived {
        let rest = M_E * C * C;
        let gamma = 1.0 + self.beam_energy_kev * 1e3 * E_CHARGE / rest;
        let v0 = C * libm::sqrt(1.0 - 1.0 / (gamma * gamma));
        let omega_l = TAU * C / self.wavelength;
        let delta_k = omega_l / v0;
        let sigma_k = 1.0 / (2.0 * v0 * self.sigma_t);
        let t_d = self.drift_length / v0;
        let big_omega = HBAR * delta_k * delta_k / (2.0 * gamma * gamma * gamma * M_E);
        let t_b = TAU / big_omega;
        PhysicalDerived {
            gamma,
            v0,
            omega_l,
            delta_k,
            sigma_k,
            t_d,
            t_b,
            sigma_ratio: sigma_k / delta_k,
            t_d_ratio: t_d / t_b,
            carrier_phase: crate::special::rem_euclid(omega_l * t_d, TAU),
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = self.beam_energy_kev > 0.0
            && self.wavelength > 0.0
            && self.sigma_t > 0.0
            && self.drift_length >= 0.0;
        if !ok {
            return Err(Error::InvalidParameter(
                "physical block needs positive energy, wavelength, σ_t and non-negative drift".into(),
            ));
        }
        Ok(())
    }
}

/// Modulation and drift of one wavepacket.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QewParams {
    /// PINEM coupling `g_L ≥ 0`.
    pub g_l: f64,
    /// `σ_k/δk`.
    pub sigma_ratio: f64,
    /// `t_d/T_b`.
    pub t_d_ratio: f64,
    /// Modulation phase φ₀ (radians).
    pub phi_0: f64,
    /// `Δ_k/δk_L`; the cavity recoil is `δk_c = (1 − detuning) δk_L`.
    pub detuning_ratio: f64,
    /// Linear drift phase `ω_L t_d` mod 2π. It sets the absolute phase of the
    /// Schrödinger-picture harmonics and nothing else.
    pub drift_carrier_phase: f64,
    pub physical: Option<PhysicalBlock>,
}

impl QewParams {
    pub fn new(g_l: f64, sigma_ratio: f64, t_d_ratio: f64, phi_0: f64) -> Result<Self> {
        let p = Self {
            g_l,
            sigma_ratio,
            t_d_ratio,
            phi_0,
            detuning_ratio: 0.0,
            drift_carrier_phase: 0.0,
            physical: None,
        };
        p.validate()?;
        Ok(p)
    }

    /// An unmodulated Gaussian wavepacket.
    pub fn unmodulated(sigma_ratio: f64) -> Result<Self> {
        Self::new(0.0, sigma_ratio, 0.0, 0.0)
    }

    pub fn from_physical(g_l: f64, phi_0: f64, block: PhysicalBlock) -> Result<Self> {
        block.validate()?;
        let d = block.derive();
        let p = Self {
            g_l,
            sigma_ratio: d.sigma_ratio,
            t_d_ratio: d.t_d_ratio,
            phi_0,
            detuning_ratio: 0.0,
            drift_carrier_phase: d.carrier_phase,
            physical: Some(block),
        };
        p.validate()?;
        Ok(p)
    }

    pub fn with_detuning(mut self, detuning_ratio: f64) -> Self {
        self.detuning_ratio = detuning_ratio;
        self
    }

    pub fn with_phi_0(mut self, phi_0: f64) -> Self {
        self.phi_0 = phi_0;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [
            self.g_l,
            self.sigma_ratio,
            self.t_d_ratio,
            self.phi_0,
            self.detuning_ratio,
            self.drift_carrier_phase,
        ]
        .iter()
        .all(|v| v.is_finite());
        if !finite {
            return Err(Error::InvalidParameter("QEW parameters must be finite".into()));
        }
        if !(self.sigma_ratio > 0.0) {
            return Err(Error::InvalidParameter("sigma_ratio must be positive".into()));
        }
        if self.g_l < 0.0 {
            return Err(Error::InvalidParameter("g_L must be non-negative".into()));
        }
        if self.t_d_ratio < 0.0 {
            return Err(Error::InvalidParameter("t_d_ratio must be non-negative".into()));
        }
        if let Some(block) = self.physical {
            block.validate()?;
            let d = block.derive();
            let close = |a: f64, b: f64| (a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1.0);
            if !close(d.sigma_ratio, self.sigma_ratio)
                || !close(d.t_d_ratio, self.t_d_ratio)
                || !close(d.carrier_phase, self.drift_carrier_phase)
            {
                return Err(Error::InvalidParameter(
                    "dimensionless fields disagree with the physical block".into(),
                ));
            }
        }
        Ok(())
    }

    /// Spatial waist `σ_z0 = 1/(2σ_k)` in units of `1/δk`.
    pub fn waist(&self) -> f64 {
        0.5 / self.sigma_ratio
    }

    /// Envelope width after drift, chirp included, in units of `1/δk`.
    pub fn drifted_width(&self) -> f64 {
        let w0 = self.waist();
        let chirp = 4.0 * PI * self.t_d_ratio * self.sigma_ratio;
        libm::sqrt(w0 * w0 + chirp * chirp)
    }
}

/// Real, signed amplitude of the n-th harmonic:
/// `J_n[4g_L sin(2πnτ(1−d))] e^{−8π²n²τ²σ²(1−d)²} e^{−n²d²/8σ²}`.
pub fn harmonic_amplitude(params: &QewParams, n: i64) -> f64 {
    if n == 0 {
        return 1.0;
    }
    let nf = n as f64;
    let tau = params.t_d_ratio;
    let sig = params.sigma_ratio;
    let d = params.detuning_ratio;
    let s = 1.0 - d;
    let arg = 4.0 * params.g_l * libm::sin(TAU * nf * tau * s);
    let decay = -8.0 * PI * PI * nf * nf * tau * tau * sig * sig * s * s;
    let detune = -nf * nf * d * d / (8.0 * sig * sig);
    bessel_j(n, arg) * libm::exp(decay + detune)
}

/// Closed-form Schrödinger-picture bunching factor
/// `b⁽ⁿ⁾ = e^{−in(ω_L t_d + φ₀ + π/2)} J_n[…] e^{…}`, with the detuned form when
/// `detuning_ratio ≠ 0`.
pub fn bunching_analytic(params: &QewParams, n: i64) -> C64 {
    if n == 0 {
        return C64::new(1.0, 0.0);
    }
    let s = 1.0 - params.detuning_ratio;
    let phase = -(n as f64) * (s * params.drift_carrier_phase + params.phi_0 + FRAC_PI_2);
    C64::from_polar(1.0, phase) * harmonic_amplitude(params, n)
}

/// Smallest harmonic range that captures every `|b⁽ⁿ⁾| ≥ 1e-13` for `params`.
pub fn default_r_max(params: &QewParams) -> usize {
    harmonic_cutoff(4.0 * params.g_l, 1e-13).max(1)
}

/// Which frame the harmonics refer to.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Picture {
    Schrodinger,
    /// Interaction picture for an envelope entering the modulator with laser
    /// phase `arrival_phase = ω_L t_0j`.
    Interaction { arrival_phase: f64 },
}

/// Harmonics `b̃⁽ⁿ⁾` for `|n| ≤ r_max`; zero beyond.
#[derive(Debug, Clone, PartialEq)]
pub struct BunchingSpectrum {
    r_max: usize,
    harmonics: Vec<C64>,
    picture: Picture,
}

impl BunchingSpectrum {
    /// Builds a conjugate-symmetric spectrum from `b⁽¹⁾, b⁽²⁾, …`.
    pub fn from_harmonics(positive: &[C64], picture: Picture) -> Result<Self> {
        let r = positive.len().max(1);
        let mut h = vec![C64::new(0.0, 0.0); 2 * r + 1];
        h[r] = C64::new(1.0, 0.0);
        for (i, &b) in positive.iter().enumerate() {
            if !(b.norm() <= 1.0 + 1e-12) {
                return Err(Error::InvalidParameter(alloc::format!(
                    "|b({})| = {} exceeds 1",
                    i + 1,
                    b.norm()
                )));
            }
            h[r + i + 1] = b;
            h[r - i - 1] = b.conj();
        }
        Ok(Self {
            r_max: r,
            harmonics: h,
            picture,
        })
    }

    /// Spectrum of an unmodulated wavepacket: only `b⁽⁰⁾ = 1`.
    pub fn unmodulated() -> Self {
        Self::from_harmonics(&[], Picture::Schrodinger).expect("empty spectrum is valid")
    }

    /// The point-particle limit `b̃⁽ⁿ⁾ = 1` for all `|n| ≤ r_max`.
    pub fn point_particle(r_max: usize) -> Self {
        let ones = vec![C64::new(1.0, 0.0); r_max];
        Self::from_harmonics(&ones, Picture::Schrodinger).expect("unit harmonics are valid")
    }

    pub fn r_max(&self) -> usize {
        self.r_max
    }

    pub fn picture(&self) -> Picture {
        self.picture
    }

    pub fn get(&self, n: i64) -> C64 {
        if n.unsigned_abs() as usize > self.r_max {
            return C64::new(0.0, 0.0);
        }
        self.harmonics[(n + self.r_max as i64) as usize]
    }

    /// `(n, b̃⁽ⁿ⁾)` pairs with `|b̃⁽ⁿ⁾| ≥ 1e-12`.
    pub fn support(&self) -> Vec<(i64, C64)> {
        let r = self.r_max as i64;
        (-r..=r)
            .map(|n| (n, self.get(n)))
            .filter(|(_, b)| b.norm() >= 1e-12)
            .collect()
    }

    /// `b̃⁽ⁿ⁾ e^{inΔ}`: the spectrum of the same wavepacket arriving `Δ` later
    /// in laser phase.
    pub fn rotated(&self, delta: f64) -> Self {
        let r = self.r_max as i64;
        let harmonics = (-r..=r)
            .map(|n| self.get(n) * C64::from_polar(1.0, n as f64 * delta))
            .collect();
        Self {
            r_max: self.r_max,
            harmonics,
            picture: self.picture,
        }
    }

    /// Largest violation of `b̃⁽⁰⁾ = 1`, `b̃⁽⁻ⁿ⁾ = conj(b̃⁽ⁿ⁾)`, `|b̃| ≤ 1`.
    pub fn invariant_defect(&self) -> f64 {
        let r = self.r_max as i64;
        let mut worst = (self.get(0) - 1.0).norm();
        for n in 1..=r {
            worst = worst.max((self.get(-n) - self.get(n).conj()).norm());
            worst = worst.max(self.get(n).norm() - 1.0);
        }
        worst
    }
}

/// Harmonics of one wavepacket out to `r_max`.
///
/// In the interaction picture `b̃⁽ⁿ⁾ = A_n e^{in(ω_L t_0j − φ₀ − π/2)}` with the
/// signed amplitude `A_n` of [`harmonic_amplitude`]; only `ω_L t_0j − φ₀` matters.
pub fn bunching_spectrum(
    params: &QewParams,
    r_max: usize,
    picture: Picture,
) -> Result<BunchingSpectrum> {
    if r_max < 1 {
        return Err(Error::InvalidParameter("r_max must be at least 1".into()));
    }
    params.validate()?;
    let positive: Vec<C64> = (1..=r_max as i64)
        .map(|n| match picture {
            Picture::Schrodinger => bunching_analytic(params, n),
            Picture::Interaction { arrival_phase } => {
                let phi_l = arrival_phase - params.phi_0;
                harmonic_amplitude(params, n)
                    * C64::from_polar(1.0, n as f64 * (phi_l - FRAC_PI_2))
            }
        })
        .collect();
    BunchingSpectrum::from_harmonics(&positive, picture)
}

/// Sampling of the momentum axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KGrid {
    /// Samples per recoil `δk`.
    pub samples_per_recoil: usize,
    /// Half width in units of `δk`; `None` picks `N_B + 8σ`.
    pub half_span: Option<f64>,
}

impl Default for KGrid {
    fn default() -> Self {
        Self {
            samples_per_recoil: 64,
            half_span: None,
        }
    }
}

/// Samples `c(κ_i)` on `κ_i = (first + i)/samples_per_recoil`.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentumAmplitudes {
    params: QewParams,
    samples_per_recoil: usize,
    first: i64,
    values: Vec<C64>,
    sidebands: Vec<f64>,
}

fn sideband_weights(params: &QewParams) -> Vec<f64> {
    let nb = bessel_cutoff(params.g_l) as i64;
    (-nb..=nb).map(|n| bessel_j(n, 2.0 * params.g_l)).collect()
}

fn amplitude_at(params: &QewParams, sidebands: &[f64], kappa: f64) -> C64 {
    let sig = params.sigma_ratio;
    let nb = (sidebands.len() / 2) as i64;
    let mut acc = C64::new(0.0, 0.0);
    for (i, &j) in sidebands.iter().enumerate() {
        let n = i as i64 - nb;
        let dk = kappa - n as f64;
        let env = libm::exp(-dk * dk / (4.0 * sig * sig));
        if env == 0.0 || j == 0.0 {
            continue;
        }
        acc += C64::from_polar(j * env, -(n as f64) * params.phi_0);
    }
    let pref = libm::pow(TAU * sig * sig, -0.25);
    let drift = kappa * params.drift_carrier_phase + TAU * params.t_d_ratio * kappa * kappa;
    acc * C64::from_polar(pref, -drift)
}

fn trapezoid_weight(i: usize, len: usize) -> f64 {
    if i == 0 || i + 1 == len {
        0.5
    } else {
        1.0
    }
}

impl MomentumAmplitudes {
    pub fn params(&self) -> &QewParams {
        &self.params
    }

    pub fn step(&self) -> f64 {
        1.0 / self.samples_per_recoil as f64
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn kappa(&self, i: usize) -> f64 {
        (self.first + i as i64) as f64 * self.step()
    }

    pub fn values(&self) -> &[C64] {
        &self.values
    }

    /// Half width of the grid in units of `δk`.
    pub fn half_span(&self) -> f64 {
        -(self.first as f64) * self.step()
    }

    /// `Σ |c_k|² Δk` by the trapezoid rule.
    pub fn norm(&self) -> f64 {
        let h = self.step();
        let n = self.values.len();
        self.values
            .iter()
            .enumerate()
            .map(|(i, c)| trapezoid_weight(i, n) * c.norm_sqr() * h)
            .sum()
    }

    /// Evaluates the closed-form amplitude off the grid.
    pub fn amplitude(&self, kappa: f64) -> C64 {
        amplitude_at(&self.params, &self.sidebands, kappa)
    }

    /// Stored sample `i` (relative to the first), or the closed form off the grid.
    fn sample(&self, i: i64) -> C64 {
        if i >= 0 && (i as usize) < self.values.len() {
            self.values[i as usize]
        } else {
            self.amplitude((self.first + i) as f64 * self.step())
        }
    }

    /// `∫ c*_κ c_{κ+shift} dκ` with `shift` in units of `δk`, over the union
    /// of the grid and its shifted copy.
    fn overlap(&self, shift: f64) -> Result<C64> {
        if !shift.is_finite() {
            return Err(Error::OutOfSpan(shift));
        }
        let h = self.step();
        let len = self.values.len() as i64;
        let scaled = shift * self.samples_per_recoil as f64;
        let idx = libm::round(scaled);
        let integer = (scaled - idx).abs() < 1e-9;
        let lo = (-libm::ceil(scaled) as i64).min(0);
        let hi = (len - 1 - libm::floor(scaled) as i64).max(len - 1);
        let mut acc = C64::new(0.0, 0.0);
        for i in lo..=hi {
            let other = if integer {
                self.sample(i + idx as i64)
            } else {
                self.amplitude((self.first + i) as f64 * h + shift)
            };
            let w = if i == lo || i == hi { 0.5 } else { 1.0 };
            acc += self.sample(i).conj() * other * w;
        }
        Ok(acc * h)
    }
}

/// Samples the modulated, drifted wavepacket in momentum space:
///
/// ```text
/// c(κ) = (2πσ²)^{−1/4} Σ_n J_n(2g_L) e^{−(κ−n)²/4σ² − inφ₀} e^{−i(κ ω_L t_d + 2π τ κ²)}
/// ```
///
/// Fails if the grid loses more than 1e-8 of the norm.
pub fn momentum_amplitudes(params: &QewParams, grid: KGrid) -> Result<MomentumAmplitudes> {
    params.validate()?;
    if grid.samples_per_recoil == 0 {
        return Err(Error::InvalidParameter("samples_per_recoil must be positive".into()));
    }
    let sidebands = sideband_weights(params);
    let nb = (sidebands.len() / 2) as f64;
    let span = grid.half_span.unwrap_or(nb + 8.0 * params.sigma_ratio);
    let k = libm::ceil(span * grid.samples_per_recoil as f64) as i64;
    let h = 1.0 / grid.samples_per_recoil as f64;
    let values: Vec<C64> = (-k..=k)
        .map(|i| amplitude_at(params, &sidebands, i as f64 * h))
        .collect();
    let amps = MomentumAmplitudes {
        params: *params,
        samples_per_recoil: grid.samples_per_recoil,
        first: -k,
        values,
        sidebands,
    };
    let deficit = (1.0 - amps.norm()).abs();
    if deficit > 1e-8 {
        return Err(Error::GridTooCoarse(deficit));
    }
    Ok(amps)
}

/// Brute-force bunching factor `b⁽ⁿ⁾ = ∫ c*_κ c_{κ + n(1−d)} dκ`.
pub fn bunching_numeric(amps: &MomentumAmplitudes, n: i64) -> Result<C64> {
    let shift = n as f64 * (1.0 - amps.params.detuning_ratio);
    amps.overlap(shift)
}

/// Density spectrum `M_b(k) = ∫ c*_κ c_{κ+k} dκ`, `k` in units of `δk`.
pub fn density_spectrum(amps: &MomentumAmplitudes, k: f64) -> Result<C64> {
    amps.overlap(k)
}

/// Uniform co-moving grid covering ±7 drifted envelope widths with eight
/// samples per radian.
pub fn default_profile_grid(params: &QewParams) -> Vec<f64> {
    let half = 7.0 * params.drifted_width();
    let n = libm::ceil(2.0 * half * 8.0) as usize + 1;
    (0..n)
        .map(|i| -half + 2.0 * half * i as f64 / (n - 1) as f64)
        .collect()
}

/// Trapezoid integral of samples on a (possibly non-uniform) grid.
pub fn integrate(xs: &[f64], ys: &[f64]) -> f64 {
    xs.windows(2)
        .zip(ys.windows(2))
        .map(|(x, y)| 0.5 * (x[1] - x[0]) * (y[0] + y[1]))
        .sum()
}

/// `|ψ(ξ)|²` from the inverse Fourier transform of the sampled amplitudes,
/// chirp included. Density per unit `ξ`.
pub fn density_profile_exact(amps: &MomentumAmplitudes, xi: &[f64]) -> Result<Vec<f64>> {
    let h = amps.step();
    // samples every h in κ make ψ periodic in ξ with period 2π/h
    let alias_free = PI / h - 8.0 * amps.params.drifted_width();
    if xi.iter().any(|x| x.abs() > alias_free) {
        return Err(Error::InvalidParameter(
            "position grid reaches the aliased copy of the wavepacket".into(),
        ));
    }
    let len = amps.values.len();
    let theta = amps.params.drift_carrier_phase;
    let norm = h / libm::sqrt(TAU);
    let k0 = amps.kappa(0);
    let out = xi
        .iter()
        .map(|&x| {
            let arg = x + theta;
            let mut ph = C64::from_polar(1.0, k0 * arg);
            let step = C64::from_polar(1.0, h * arg);
            let mut acc = C64::new(0.0, 0.0);
            for (i, c) in amps.values.iter().enumerate() {
                acc += c * ph * trapezoid_weight(i, len);
                ph *= step;
            }
            (acc * norm).norm_sqr()
        })
        .collect();
    Ok(out)
}

/// Harmonic-sum approximation `f_e(ξ) Σ_n b⁽ⁿ⁾ e^{in(ξ + ω_L t_d)}` with an
/// unchirped Gaussian envelope of width `1/(2σ_k)`.
pub fn density_profile_approx(params: &QewParams, xi: &[f64]) -> Vec<f64> {
    let w = params.waist();
    let r = default_r_max(params) as i64;
    let b: Vec<C64> = (1..=r).map(|n| bunching_analytic(params, n)).collect();
    let theta = params.drift_carrier_phase;
    xi.iter()
        .map(|&x| {
            let env = libm::exp(-x * x / (2.0 * w * w)) / libm::sqrt(TAU * w * w);
            let mut carrier = 1.0;
            for (i, bn) in b.iter().enumerate() {
                let n = (i + 1) as f64;
                carrier += 2.0 * (bn * C64::from_polar(1.0, n * (x + theta))).re;
            }
            env * carrier
        })
        .collect()
}

/// Co-moving position of the micro-bunch crests in `(−π, π]`.
///
/// For an envelope that enters the modulator at `t = 0`, `φ_L = −φ₀` and the
/// crests sit at `ξ = −(φ_L − π/2) + 2πN`, i.e. `ξ = φ₀ + π/2`; a negative
/// first-harmonic amplitude moves them by π.
pub fn microbunch_phase(params: &QewParams) -> f64 {
    let mut p = params.phi_0 + FRAC_PI_2;
    if harmonic_amplitude(params, 1) < 0.0 {
        p += PI;
    }
    wrap_phase(p)
}

/// Wraps an angle into `(−π, π]`.
pub fn wrap_phase(x: f64) -> f64 {
    let y = crate::special::rem_euclid(x, TAU);
    if y > PI {
        y - TAU
    } else {
        y
    }
}

/// Tallest local maximum of `ys`, refined by a parabola through the three
/// samples around it. Assumes a uniform grid.
pub fn tallest_crest(xs: &[f64], ys: &[f64]) -> Option<f64> {
    let i = (1..ys.len().saturating_sub(1))
        .filter(|&i| ys[i] >= ys[i - 1] && ys[i] > ys[i + 1])
        .max_by(|&a, &b| ys[a].total_cmp(&ys[b]))?;
    let h = xs[i + 1] - xs[i];
    let curv = ys[i + 1] - 2.0 * ys[i] + ys[i - 1];
    Some(xs[i] + 0.5 * h * (ys[i - 1] - ys[i + 1]) / curv)
}
