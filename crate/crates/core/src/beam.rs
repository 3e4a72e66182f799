//! Multi-electron build-up: the single-electron channel applied once per
//! electron, beam correlation models and Monte Carlo ensembles.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::{FRAC_PI_2, TAU};

use rand_chacha::ChaCha8Rng;
use rand_core::SeedableRng;
use rand_distr::{Distribution, Normal, Uniform};

use crate::fock::{displacement_matrix, mean_photon, DensityMatrix, DisplacementMatrix};
use crate::interaction::{scatter, CouplingSpec};
use crate::phase_space::ladder_moments;
use crate::qew::{harmonic_amplitude, BunchingSpectrum, Picture, QewParams};
use crate::{Error, Result, C64};

/// How the laser phase `φ_L = ω_L t_0j − φ_0j` varies between electrons.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BeamMode {
    /// Plain Gaussian wavepackets, no harmonics.
    Unmodulated,
    /// Every electron sees the same `φ_L`.
    Correlated { phi_l: f64 },
    /// `φ_L` uniform on `[0, 2π)`, drawn per electron.
    Uncorrelated,
    /// `φ_L ~ Normal(mean, sigma)` drawn once per event and shared by all
    /// electrons of that event.
    PartiallyCoherent { mean_phi_l: f64, sigma_phi: f64 },
}

impl BeamMode {
    /// Modes whose events differ only by a global phase-space rotation.
    pub fn is_rotational(&self) -> bool {
        !matches!(self, BeamMode::Uncorrelated)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BeamSpec {
    pub n_e: usize,
    pub mode: BeamMode,
    pub template: QewParams,
    /// Harmonics kept per electron.
    pub r_max: usize,
    /// Seed for the random modes; event `k` uses stream `k` of this seed.
    pub seed: u64,
}

impl BeamSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n_e < 1 {
            return Err(Error::InvalidParameter("a beam needs at least one electron".into()));
        }
        if self.r_max < 1 {
            return Err(Error::InvalidParameter("r_max must be at least 1".into()));
        }
        if let BeamMode::PartiallyCoherent { sigma_phi, mean_phi_l } = self.mode {
            if !(sigma_phi >= 0.0) || !sigma_phi.is_finite() || !mean_phi_l.is_finite() {
                return Err(Error::InvalidParameter("σ_φ must be finite and non-negative".into()));
            }
        }
        self.template.validate()
    }

    /// Interaction-picture spectrum at `φ_L = 0`; the spectrum at any other
    /// phase is this one rotated by `φ_L`.
    pub fn base_spectrum(&self) -> Result<BunchingSpectrum> {
        if let BeamMode::Unmodulated = self.mode {
            return Ok(BunchingSpectrum::unmodulated());
        }
        let positive: Vec<C64> = (1..=self.r_max as i64)
            .map(|n| {
                harmonic_amplitude(&self.template, n)
                    * C64::from_polar(1.0, -(n as f64) * FRAC_PI_2)
            })
            .collect();
        BunchingSpectrum::from_harmonics(&positive, Picture::Interaction { arrival_phase: 0.0 })
    }

    /// Per-electron `φ_L` for event `event`.
    pub fn electron_phases(&self, seed: u64, event: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(event);
        match self.mode {
            BeamMode::Unmodulated => vec![0.0; self.n_e],
            BeamMode::Correlated { phi_l } => vec![phi_l; self.n_e],
            BeamMode::Uncorrelated => {
                let u = Uniform::new(0.0, TAU);
                (0..self.n_e).map(|_| u.sample(&mut rng)).collect()
            }
            BeamMode::PartiallyCoherent {
                mean_phi_l,
                sigma_phi,
            } => {
                let phi = Normal::new(mean_phi_l, sigma_phi)
                    .map(|d| d.sample(&mut rng))
                    .unwrap_or(mean_phi_l);
                vec![phi; self.n_e]
            }
        }
    }
}

/// State summary after electron `j` (1-based).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BuildupStep {
    pub j: usize,
    pub mean_photon: f64,
    /// `⟨a⟩`.
    pub a: C64,
    /// `⟨a²⟩`.
    pub a2: C64,
    pub dq2: f64,
    pub dp2: f64,
    pub trace_deficit: f64,
}

impl BuildupStep {
    fn from_state(j: usize, rho: &DensityMatrix) -> Self {
        let (a, a2, n) = ladder_moments(rho);
        let mut s = Self {
            j,
            mean_photon: n,
            a,
            a2,
            dq2: 0.0,
            dp2: 0.0,
            trace_deficit: rho.trace_deficit(),
        };
        s.refresh_variances();
        s
    }

    fn refresh_variances(&mut self) {
        let n = self.mean_photon;
        self.dq2 = 0.5 + n + self.a2.re - 2.0 * self.a.re * self.a.re;
        self.dp2 = 0.5 + n - self.a2.re - 2.0 * self.a.im * self.a.im;
    }

    /// The same step after rotating the state by `e^{iΔ a†a}`.
    pub fn rotated(&self, delta: f64) -> Self {
        let mut s = *self;
        s.a = self.a * C64::from_polar(1.0, delta);
        s.a2 = self.a2 * C64::from_polar(1.0, 2.0 * delta);
        s.refresh_variances();
        s
    }

    pub fn dc2(&self) -> f64 {
        0.5 * (self.dq2 + self.dp2)
    }

    pub fn dr2(&self) -> f64 {
        0.5 * (self.dq2 - self.dp2)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BuildupTrajectory {
    pub steps: Vec<BuildupStep>,
    /// `φ_L` used for each electron.
    pub phases: Vec<f64>,
}

/// Applies `spectra` in order, starting from vacuum.
pub fn run_buildup_with_spectra(
    spectra: &[BunchingSpectrum],
    coupling: &CouplingSpec,
    cutoff: usize,
    trace_budget: f64,
) -> Result<(DensityMatrix, Vec<BuildupStep>)> {
    let m = displacement_matrix(coupling.g, cutoff)?;
    apply_sequence(spectra, &m, cutoff, trace_budget)
}

fn apply_sequence(
    spectra: &[BunchingSpectrum],
    m: &DisplacementMatrix,
    cutoff: usize,
    trace_budget: f64,
) -> Result<(DensityMatrix, Vec<BuildupStep>)> {
    let mut rho = DensityMatrix::vacuum(cutoff)?;
    let mut steps = Vec::with_capacity(spectra.len());
    for (i, spec) in spectra.iter().enumerate() {
        rho = scatter(&rho, spec, m, trace_budget).map_err(|e| match e {
            Error::TraceBudget { deficit, budget } => Error::CutoffExhausted {
                step: i + 1,
                deficit,
                budget,
            },
            other => other,
        })?;
        steps.push(BuildupStep::from_state(i + 1, &rho));
    }
    Ok((rho, steps))
}

/// One beam emission event: event index `event` of `seed`.
pub fn run_event(
    beam: &BeamSpec,
    coupling: &CouplingSpec,
    cutoff: usize,
    trace_budget: f64,
    seed: u64,
    event: u64,
) -> Result<(DensityMatrix, BuildupTrajectory)> {
    beam.validate()?;
    coupling.validate()?;
    let base = beam.base_spectrum()?;
    let phases = beam.electron_phases(seed, event);
    let spectra: Vec<BunchingSpectrum> = phases.iter().map(|&p| base.rotated(p)).collect();
    let (rho, steps) = run_buildup_with_spectra(&spectra, coupling, cutoff, trace_budget)?;
    Ok((rho, BuildupTrajectory { steps, phases }))
}

/// Iterative build-up from vacuum, one channel application per electron.
pub fn run_buildup(
    beam: &BeamSpec,
    coupling: &CouplingSpec,
    cutoff: usize,
    trace_budget: f64,
) -> Result<(DensityMatrix, BuildupTrajectory)> {
    run_event(beam, coupling, cutoff, trace_budget, beam.seed, 0)
}

/// `N_e|g|² + N_e(N_e−1)|g|²|b⁽¹⁾|²`.
pub fn expected_photon_correlated(n_e: usize, g_abs: f64, b1_abs: f64) -> f64 {
    let n = n_e as f64;
    let g2 = g_abs * g_abs;
    n * g2 + n * (n - 1.0) * g2 * b1_abs * b1_abs
}

/// `N_e|g|² + |g|² Σ_{i≠j} b̃_i conj(b̃_j)` for one first harmonic per electron.
pub fn expected_photon_general(b1: &[C64], g: C64) -> f64 {
    let g2 = g.norm_sqr();
    let sum: C64 = b1.iter().sum();
    let diag: f64 = b1.iter().map(|b| b.norm_sqr()).sum();
    b1.len() as f64 * g2 + g2 * (sum.norm_sqr() - diag)
}

/// Geometric photon distribution with mean `N_e|g|²`.
pub fn bose_einstein_diagonal(n_e: usize, g_abs: f64, n: usize) -> f64 {
    let mu = n_e as f64 * g_abs * g_abs;
    libm::pow(mu / (mu + 1.0), n as f64) / (mu + 1.0)
}

/// Per-event summary kept by an ensemble.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EventSummary {
    pub index: u64,
    /// `φ_L` of the first electron.
    pub phi_l: f64,
    pub last: BuildupStep,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleReport {
    pub events: usize,
    pub per_event: Vec<EventSummary>,
    /// Event-averaged density matrix.
    pub mean_state: DensityMatrix,
    /// Event averages after each electron.
    pub mean_curve: Vec<CurvePoint>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvePoint {
    pub j: usize,
    pub mean_photon: f64,
    /// Standard error of `mean_photon` across events.
    pub stderr: f64,
    pub mean_dc2: f64,
    pub mean_dr2: f64,
}

/// Order-sensitive accumulator; feed events by increasing index for
/// reproducible sums.
#[derive(Debug, Clone)]
pub struct EnsembleAccumulator {
    count: usize,
    sum_state: DensityMatrix,
    sum_n: Vec<f64>,
    sum_n2: Vec<f64>,
    sum_dc2: Vec<f64>,
    sum_dr2: Vec<f64>,
    per_event: Vec<EventSummary>,
}

impl EnsembleAccumulator {
    pub fn new(cutoff: usize, n_e: usize) -> Result<Self> {
        Ok(Self {
            count: 0,
            sum_state: DensityMatrix::zeros(cutoff)?,
            sum_n: vec![0.0; n_e],
            sum_n2: vec![0.0; n_e],
            sum_dc2: vec![0.0; n_e],
            sum_dr2: vec![0.0; n_e],
            per_event: Vec::new(),
        })
    }

    pub fn push(
        &mut self,
        index: u64,
        state: &DensityMatrix,
        traj: &BuildupTrajectory,
    ) -> Result<()> {
        self.sum_state.add_scaled(state, 1.0)?;
        for (i, s) in traj.steps.iter().enumerate() {
            self.sum_n[i] += s.mean_photon;
            self.sum_n2[i] += s.mean_photon * s.mean_photon;
            self.sum_dc2[i] += s.dc2();
            self.sum_dr2[i] += s.dr2();
        }
        let last = *traj
            .steps
            .last()
            .ok_or_else(|| Error::InvalidParameter("empty trajectory".into()))?;
        self.per_event.push(EventSummary {
            index,
            phi_l: traj.phases.first().copied().unwrap_or(0.0),
            last,
        });
        self.count += 1;
        Ok(())
    }

    pub fn finish(self) -> Result<EnsembleReport> {
        let k = self.count;
        if k == 0 {
            return Err(Error::InvalidParameter("ensemble needs at least one event".into()));
        }
        let kf = k as f64;
        let mut mean_state = DensityMatrix::zeros(self.sum_state.cutoff())?;
        mean_state.add_scaled(&self.sum_state, 1.0 / kf)?;
        let mean_curve = (0..self.sum_n.len())
            .map(|i| {
                let (s, s2) = (self.sum_n[i], self.sum_n2[i]);
                let mean = s / kf;
                let se = if k > 1 {
                    let var = ((s2 - kf * mean * mean) / (kf - 1.0)).max(0.0);
                    libm::sqrt(var / kf)
                } else {
                    0.0
                };
                CurvePoint {
                    j: i + 1,
                    mean_photon: mean,
                    stderr: se,
                    mean_dc2: self.sum_dc2[i] / kf,
                    mean_dr2: self.sum_dr2[i] / kf,
                }
            })
            .collect();
        Ok(EnsembleReport {
            events: k,
            per_event: self.per_event,
            mean_state,
            mean_curve,
        })
    }
}

/// Event `event` of a rotational beam, obtained by rotating the `φ_L = 0`
/// build-up instead of recomputing it.
pub fn rotate_event(
    beam: &BeamSpec,
    base_state: &DensityMatrix,
    base_traj: &BuildupTrajectory,
    seed: u64,
    event: u64,
) -> (DensityMatrix, BuildupTrajectory) {
    let phases = beam.electron_phases(seed, event);
    let phi = phases.first().copied().unwrap_or(0.0);
    let state = base_state.rotated(phi);
    let steps = base_traj.steps.iter().map(|s| s.rotated(phi)).collect();
    (state, BuildupTrajectory { steps, phases })
}

/// `events` independent beam events with seeds derived from `master_seed` by
/// event index.
///
/// Correlated, partially coherent and unmodulated beams share one build-up
/// per ensemble: changing the common `φ_L` by Δ rotates the final state by
/// `e^{iΔa†a}`, so each event is a rotation of the `φ_L = 0` run.
pub fn ensemble_run(
    beam: &BeamSpec,
    coupling: &CouplingSpec,
    cutoff: usize,
    trace_budget: f64,
    events: usize,
    master_seed: u64,
) -> Result<EnsembleReport> {
    if events < 1 {
        return Err(Error::InvalidParameter("events must be at least 1".into()));
    }
    beam.validate()?;
    let mut acc = EnsembleAccumulator::new(cutoff, beam.n_e)?;
    if beam.mode.is_rotational() {
        let mut zero = *beam;
        zero.mode = match beam.mode {
            BeamMode::Unmodulated => BeamMode::Unmodulated,
            _ => BeamMode::Correlated { phi_l: 0.0 },
        };
        let (s0, t0) = run_event(&zero, coupling, cutoff, trace_budget, master_seed, 0)?;
        for k in 0..events as u64 {
            let (s, t) = rotate_event(beam, &s0, &t0, master_seed, k);
            acc.push(k, &s, &t)?;
        }
    } else {
        for k in 0..events as u64 {
            let (s, t) = run_event(beam, coupling, cutoff, trace_budget, master_seed, k)?;
            acc.push(k, &s, &t)?;
        }
    }
    acc.finish()
}

/// Numerical checks of the diagonal-coefficient sum rules.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SumRuleReport {
    /// `Σ_n c⁽⁰⁾_{0,n}` from the unmodulated build-up.
    pub norm: f64,
    /// `Σ_n n c⁽⁰⁾_{0,n}`, expected `N_e|g|²`.
    pub first_moment: f64,
    pub expected_first_moment: f64,
    /// Excess `⟨n⟩ − N_e|g|²` per unit `Σ_{i≠j} b̃_i b̃_j*` at `b = 0`.
    pub slope_at_zero: f64,
    /// The same at `b = 0.02` and `b = 0.04`.
    pub slopes: [f64; 2],
    /// Linear extrapolation of the slopes in `b²` to `b = 0`.
    pub extrapolated_slope: f64,
    /// `|g|²`.
    pub expected_slope: f64,
}

impl SumRuleReport {
    pub fn passes(&self, rel: f64) -> bool {
        let close = |a: f64, b: f64| (a - b).abs() <= rel * b.abs();
        (self.norm - 1.0).abs() <= rel
            && close(self.first_moment, self.expected_first_moment)
            && close(self.extrapolated_slope, self.expected_slope)
            && self.slope_at_zero.abs() <= rel * self.expected_slope
    }
}

pub fn sum_rule_checks(g: C64, n_e: usize, cutoff: usize) -> Result<SumRuleReport> {
    let coupling = CouplingSpec::new(g);
    let budget = 1e-8;
    let run = |b: f64| -> Result<f64> {
        let spec = if b == 0.0 {
            BunchingSpectrum::unmodulated()
        } else {
            BunchingSpectrum::from_harmonics(&[C64::new(b, 0.0)], Picture::Schrodinger)?
        };
        let spectra = vec![spec; n_e];
        let (rho, _) = run_buildup_with_spectra(&spectra, &coupling, cutoff, budget)?;
        Ok(mean_photon(&rho))
    };
    let spectra = vec![BunchingSpectrum::unmodulated(); n_e];
    let (rho0, _) = run_buildup_with_spectra(&spectra, &coupling, cutoff, budget)?;
    let norm = rho0.trace().re;
    let first = mean_photon(&rho0);
    let g2 = g.norm_sqr();
    let ne = n_e as f64;
    let base = ne * g2;
    let pairs = |b: f64| ne * (ne - 1.0) * b * b;
    let slope_at_zero = run(0.0)? - base;
    let bs = [0.02, 0.04];
    let mut slopes = [0.0; 2];
    for (i, &b) in bs.iter().enumerate() {
        slopes[i] = (run(b)? - base) / pairs(b);
    }
    let (x1, x2) = (bs[0] * bs[0], bs[1] * bs[1]);
    let extrapolated = (slopes[0] * x2 - slopes[1] * x1) / (x2 - x1);
    Ok(SumRuleReport {
        norm,
        first_moment: first,
        expected_first_moment: base,
        slope_at_zero,
        slopes,
        extrapolated_slope: extrapolated,
        expected_slope: g2,
    })
}
