//! Run configuration: one JSON document, optionally patched by dotted-path
//! overrides, resolved into core parameter types.

use std::f64::consts::PI;

use qews_core::beam::expected_photon_correlated;
use qews_core::classical::ClassicalModeSpec;
use qews_core::fock::select_cutoff;
use qews_core::qew::{default_r_max, harmonic_amplitude, PhysicalBlock};
use qews_core::{BeamMode, BeamSpec, CouplingSpec, QewParams, C64};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    /// Preset name this config came from, if any.
    pub preset: Option<String>,
    pub seed: u64,
    /// Fock cutoff; chosen from the predicted mean photon number when absent.
    pub cutoff: Option<usize>,
    pub trace_budget: f64,
    pub coupling: CouplingConfig,
    pub qew: QewConfig,
    pub single: SingleConfig,
    pub beam: BeamConfig,
    pub ensemble: EnsembleConfig,
    pub wigner: WignerConfig,
    pub bunching: BunchingConfig,
    pub classical: ClassicalConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            preset: None,
            seed: 0,
            cutoff: None,
            trace_budget: 1e-8,
            coupling: CouplingConfig::default(),
            qew: QewConfig::default(),
            single: SingleConfig::default(),
            beam: BeamConfig::default(),
            ensemble: EnsembleConfig::default(),
            wigner: WignerConfig::default(),
            bunching: BunchingConfig::default(),
            classical: ClassicalConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CouplingConfig {
    /// `[re, im]`.
    pub g: [f64; 2],
}

impl Default for CouplingConfig {
    fn default() -> Self {
        Self { g: [0.0, 0.1] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhysicalConfig {
    pub beam_energy_kev: f64,
    /// Metres.
    pub wavelength: f64,
    /// Seconds.
    pub sigma_t: f64,
    /// Metres.
    pub drift_length: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct QewConfig {
    pub g_l: f64,
    pub sigma_ratio: Option<f64>,
    pub t_d_ratio: Option<f64>,
    pub phi_0: f64,
    pub detuning_ratio: f64,
    pub drift_carrier_phase: Option<f64>,
    /// When present, `sigma_ratio`, `t_d_ratio` and `drift_carrier_phase`
    /// follow from it.
    pub physical: Option<PhysicalConfig>,
}

impl Default for QewConfig {
    fn default() -> Self {
        Self {
            g_l: 0.0,
            sigma_ratio: Some(0.05),
            t_d_ratio: Some(0.0),
            phi_0: 0.0,
            detuning_ratio: 0.0,
            drift_carrier_phase: None,
            physical: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SingleConfig {
    /// `ω_L t₀` of the electron's envelope centre.
    pub arrival_phase: f64,
    /// Harmonics kept; defaults to every `|b⁽ⁿ⁾| ≥ 1e-13`.
    pub r_max: Option<usize>,
    /// Number of φ₀ samples on `[0, 2π)` for the variance sweep; 0 disables it.
    pub phi_0_sweep: usize,
}

impl Default for SingleConfig {
    fn default() -> Self {
        Self {
            arrival_phase: 0.0,
            r_max: None,
            phi_0_sweep: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModeConfig {
    Unmodulated,
    Correlated { phi_l: f64 },
    Uncorrelated,
    PartiallyCoherent { mean_phi_l: f64, sigma_phi: f64 },
}

impl From<ModeConfig> for BeamMode {
    fn from(m: ModeConfig) -> Self {
        match m {
            ModeConfig::Unmodulated => BeamMode::Unmodulated,
            ModeConfig::Correlated { phi_l } => BeamMode::Correlated { phi_l },
            ModeConfig::Uncorrelated => BeamMode::Uncorrelated,
            ModeConfig::PartiallyCoherent {
                mean_phi_l,
                sigma_phi,
            } => BeamMode::PartiallyCoherent {
                mean_phi_l,
                sigma_phi,
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BeamConfig {
    pub n_e: usize,
    pub mode: ModeConfig,
    pub r_max: Option<usize>,
}

impl Default for BeamConfig {
    fn default() -> Self {
        Self {
            n_e: 50,
            mode: ModeConfig::Correlated { phi_l: -PI / 4.0 },
            r_max: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EnsembleConfig {
    pub events: usize,
}

impl Default for EnsembleConfig {
    fn default() -> Self {
        Self { events: 200 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WignerConfig {
    pub enabled: bool,
    /// Square half-width; defaults to `√(2⟨n⟩) + 6`.
    pub half_width: Option<f64>,
    pub points: usize,
    /// State file for the `wigner` command.
    pub input: Option<String>,
}

impl Default for WignerConfig {
    fn default() -> Self {
        Self {
            enabled: false,
            half_width: None,
            points: 201,
            input: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BunchingConfig {
    pub harmonics: usize,
    /// Drift times `t_d/T_b` to sweep; empty means the QEW's own.
    pub t_d_ratios: Vec<f64>,
    pub samples_per_recoil: usize,
    pub profile: bool,
}

impl Default for BunchingConfig {
    fn default() -> Self {
        Self {
            harmonics: 4,
            t_d_ratios: Vec::new(),
            samples_per_recoil: 64,
            profile: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ClassicalConfig {
    pub eta_q: f64,
    pub n_eff: f64,
    pub length: f64,
    pub circumference: f64,
    pub mode_area: f64,
    /// Vacuum wavelength of the mode, metres.
    pub wavelength: f64,
    /// Electron counts for the scaling table.
    pub n_e: Vec<usize>,
    /// `|M_b|` values for the scaling table.
    pub m_b: Vec<f64>,
}

impl Default for ClassicalConfig {
    fn default() -> Self {
        Self {
            eta_q: 0.6,
            n_eff: 2.2,
            length: 20e-6,
            circumference: 200e-6,
            mode_area: 0.5e-12,
            wavelength: 800e-9,
            n_e: vec![1, 2, 5, 10, 20, 50, 100],
            m_b: vec![0.0, 0.1, 0.572, 1.0],
        }
    }
}

impl ClassicalConfig {
    pub fn mode(&self) -> Result<ClassicalModeSpec, CliError> {
        let m = ClassicalModeSpec {
            eta_q: self.eta_q,
            n_eff: self.n_eff,
            length: self.length,
            circumference: self.circumference,
            mode_area: self.mode_area,
            omega: std::f64::consts::TAU * qews_core::classical::constants::C / self.wavelength,
        };
        m.validate()?;
        Ok(m)
    }
}

/// Parses a config document, failing on unknown keys.
pub fn parse(text: &str) -> Result<Value, CliError> {
    serde_json::from_str(text).map_err(|e| CliError::Config(format!("invalid JSON: {e}")))
}

/// Sets `path` (dot-separated) in `doc` to `raw`, read as JSON when it
/// parses and as a string otherwise.
pub fn apply_override(doc: &mut Value, path: &str, raw: &str) -> Result<(), CliError> {
    let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    let mut cur = doc;
    let keys: Vec<&str> = path.split('.').collect();
    if keys.iter().any(|k| k.is_empty()) {
        return Err(CliError::Config(format!("bad override path '{path}'")));
    }
    for (i, key) in keys.iter().enumerate() {
        if !cur.is_object() {
            if cur.is_null() {
                *cur = Value::Object(Default::default());
            } else {
                return Err(CliError::Config(format!(
                    "override '{path}': '{}' is not an object",
                    keys[..i].join(".")
                )));
            }
        }
        let map = cur.as_object_mut().expect("checked above");
        if i + 1 == keys.len() {
            map.insert(key.to_string(), value);
            return Ok(());
        }
        cur = map.entry(key.to_string()).or_insert(Value::Null);
    }
    Ok(())
}

/// Parses `key=value`.
pub fn split_override(s: &str) -> Result<(&str, &str), CliError> {
    s.split_once('=')
        .ok_or_else(|| CliError::Config(format!("override '{s}' is not key=value")))
}

pub fn from_value(doc: Value) -> Result<RunConfig, CliError> {
    serde_json::from_value(doc).map_err(|e| CliError::Config(e.to_string()))
}

impl RunConfig {
    pub fn coupling_spec(&self) -> Result<CouplingSpec, CliError> {
        let c = CouplingSpec::new(C64::new(self.coupling.g[0], self.coupling.g[1]));
        c.validate()?;
        Ok(c)
    }

    pub fn qew_params(&self) -> Result<QewParams, CliError> {
        let q = &self.qew;
        let mut p = match &q.physical {
            Some(ph) => {
                let block = PhysicalBlock {
                    beam_energy_kev: ph.beam_energy_kev,
                    wavelength: ph.wavelength,
                    sigma_t: ph.sigma_t,
                    drift_length: ph.drift_length,
                };
                let mut p = QewParams::from_physical(q.g_l, q.phi_0, block)?;
                // explicit values must agree with the block; validate checks it
                if let Some(s) = q.sigma_ratio {
                    p.sigma_ratio = s;
                }
                if let Some(t) = q.t_d_ratio {
                    p.t_d_ratio = t;
                }
                if let Some(c) = q.drift_carrier_phase {
                    p.drift_carrier_phase = c;
                }
                p
            }
            None => {
                let sigma = q
                    .sigma_ratio
                    .ok_or_else(|| CliError::Config("qew.sigma_ratio is required".into()))?;
                let mut p = QewParams::new(q.g_l, sigma, q.t_d_ratio.unwrap_or(0.0), q.phi_0)?;
                p.drift_carrier_phase = q.drift_carrier_phase.unwrap_or(0.0);
                p
            }
        };
        p.detuning_ratio = q.detuning_ratio;
        p.validate()?;
        Ok(p)
    }

    /// The config with every derived field written out.
    pub fn resolved(&self) -> Result<RunConfig, CliError> {
        let mut out = self.clone();
        let p = self.qew_params()?;
        out.qew.sigma_ratio = Some(p.sigma_ratio);
        out.qew.t_d_ratio = Some(p.t_d_ratio);
        out.qew.drift_carrier_phase = Some(p.drift_carrier_phase);
        Ok(out)
    }

    pub fn beam_spec(&self) -> Result<BeamSpec, CliError> {
        let template = self.qew_params()?;
        let spec = BeamSpec {
            n_e: self.beam.n_e,
            mode: self.beam.mode.into(),
            template,
            r_max: self.beam.r_max.unwrap_or_else(|| default_r_max(&template)),
            seed: self.seed,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn single_r_max(&self) -> Result<usize, CliError> {
        let p = self.qew_params()?;
        Ok(self.single.r_max.unwrap_or_else(|| default_r_max(&p)))
    }

    /// Cutoff for a single electron.
    pub fn single_cutoff(&self) -> Result<usize, CliError> {
        let g = self.coupling_spec()?.g;
        Ok(self.cutoff.unwrap_or_else(|| select_cutoff(g.norm_sqr())))
    }

    /// Cutoff for a beam, from the largest mean photon number an event is
    /// likely to reach.
    pub fn beam_cutoff(&self) -> Result<usize, CliError> {
        if let Some(c) = self.cutoff {
            return Ok(c);
        }
        let beam = self.beam_spec()?;
        let g = self.coupling_spec()?.g.norm();
        let b1 = harmonic_amplitude(&beam.template, 1).abs();
        let n = beam.n_e as f64;
        let mu = match beam.mode {
            BeamMode::Unmodulated => n * g * g,
            BeamMode::Correlated { .. } | BeamMode::PartiallyCoherent { .. } => {
                expected_photon_correlated(beam.n_e, g, b1)
            }
            // |Σ b̃_j|² is roughly exponential with mean N|b|²; cover its upper tail
            BeamMode::Uncorrelated => n * g * g * (1.0 + 9.0 * b1 * b1),
        };
        Ok(select_cutoff(mu))
    }
}
