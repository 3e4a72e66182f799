//! Quadrature moments and the Wigner quasi-distribution of a cavity state.
//!
//! Units have ħ = 1 with `q = (a + a†)/√2`, `p = i(a† − a)/√2`, so the vacuum
//! has `Δq² = Δp² = 1/2` and `W(q,p) = e^{−q²−p²}/π`.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::{FRAC_1_PI, PI, SQRT_2};

use crate::fock::{laguerre_band, mean_photon, DensityMatrix};
use crate::{Error, Result, C64};

/// `(⟨a⟩, ⟨a²⟩, ⟨a†a⟩)`.
pub fn ladder_moments(rho: &DensityMatrix) -> (C64, C64, f64) {
    let d = rho.dim();
    let mut a = C64::new(0.0, 0.0);
    let mut a2 = C64::new(0.0, 0.0);
    for i in 1..d {
        a += rho[(i, i - 1)] * libm::sqrt(i as f64);
        if i >= 2 {
            a2 += rho[(i, i - 2)] * libm::sqrt((i * (i - 1)) as f64);
        }
    }
    (a, a2, mean_photon(rho))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureMoments {
    pub q: f64,
    pub p: f64,
    pub dq2: f64,
    pub dp2: f64,
    /// `(Δq² + Δp²)/2`.
    pub dc2: f64,
    /// `(Δq² − Δp²)/2`.
    pub dr2: f64,
}

impl QuadratureMoments {
    fn from_raw(q: f64, p: f64, q2: f64, p2: f64) -> Self {
        let dq2 = q2 - q * q;
        let dp2 = p2 - p * p;
        Self {
            q,
            p,
            dq2,
            dp2,
            dc2: 0.5 * (dq2 + dp2),
            dr2: 0.5 * (dq2 - dp2),
        }
    }

    /// `(⟨q⟩² + ⟨p⟩²)/2`.
    pub fn offset(&self) -> f64 {
        0.5 * (self.q * self.q + self.p * self.p)
    }

    /// Polar angle of the centre `(⟨q⟩, ⟨p⟩)`.
    pub fn polar_angle(&self) -> f64 {
        libm::atan2(self.p, self.q)
    }
}

pub fn moments(rho: &DensityMatrix) -> QuadratureMoments {
    let (a, a2, n) = ladder_moments(rho);
    let tr = rho.trace().re;
    QuadratureMoments::from_raw(
        SQRT_2 * a.re,
        SQRT_2 * a.im,
        a2.re + n + 0.5 * tr,
        -a2.re + n + 0.5 * tr,
    )
}

/// `(Δq², Δp²)` of single-electron emission with harmonic magnitudes
/// `|b⁽¹⁾|`, `|b⁽²⁾|` and modulation phase `Φ`:
/// `1/2 + |g|²(1−|b⁽¹⁾|²) ∓ |g|²(|b⁽²⁾|−|b⁽¹⁾|²) cos 2Φ`.
pub fn variance_closed_single(g: C64, b1: f64, b2: f64, phase: f64) -> (f64, f64) {
    let g2 = g.norm_sqr();
    let mean = 0.5 + g2 * (1.0 - b1 * b1);
    let osc = g2 * (b2 - b1 * b1) * libm::cos(2.0 * phase);
    (mean - osc, mean + osc)
}

/// `(Δq², Δp², Δ_c², Δ_r²)` after `N_e` electrons with interaction-picture
/// phases `φ_L,j`; a single phase is shared by all electrons.
pub fn variance_closed_beam(
    n_e: usize,
    g: C64,
    b1: f64,
    b2: f64,
    phases: &[f64],
) -> (f64, f64, f64, f64) {
    let g2 = g.norm_sqr();
    let ne = n_e as f64;
    let sum_cos = match phases {
        [phi] => ne * libm::cos(2.0 * phi),
        _ => phases.iter().map(|&p| libm::cos(2.0 * p)).sum(),
    };
    let dc2 = 0.5 + ne * g2 * (1.0 - b1 * b1);
    let dr2 = g2 * (b2 - b1 * b1) * sum_cos;
    (dc2 + dr2, dc2 - dr2, dc2, dr2)
}

/// `(⟨q⟩² + ⟨p⟩²)/2 = N_e²|g|²|b⁽¹⁾|²` for a correlated beam.
pub fn offset_closed(n_e: usize, g: C64, b1: f64) -> f64 {
    let ne = n_e as f64;
    ne * ne * g.norm_sqr() * b1 * b1
}

/// Rectangular sampling grid, endpoints included.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WignerGridSpec {
    pub q_min: f64,
    pub q_max: f64,
    pub p_min: f64,
    pub p_max: f64,
    pub nq: usize,
    pub np: usize,
}

impl WignerGridSpec {
    /// Square grid of half-width `√(2⟨n⟩) + 6`, 201 × 201 points.
    pub fn for_state(rho: &DensityMatrix) -> Self {
        let h = Self::required_half_width(mean_photon(rho)) + 2.0;
        Self::square(h, 201)
    }

    /// Smallest half-width that holds a state of mean photon number `mu`.
    pub fn required_half_width(mu: f64) -> f64 {
        libm::sqrt(2.0 * mu.max(0.0)) + 4.0
    }

    pub fn square(half_width: f64, n: usize) -> Self {
        Self {
            q_min: -half_width,
            q_max: half_width,
            p_min: -half_width,
            p_max: half_width,
            nq: n,
            np: n,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.nq >= 2
            && self.np >= 2
            && self.q_max > self.q_min
            && self.p_max > self.p_min
            && [self.q_min, self.q_max, self.p_min, self.p_max]
                .iter()
                .all(|v| v.is_finite());
        if !ok {
            return Err(Error::InvalidParameter(
                "Wigner grid needs at least 2 points per axis and a finite, non-empty range".into(),
            ));
        }
        Ok(())
    }

    pub fn dq(&self) -> f64 {
        (self.q_max - self.q_min) / (self.nq - 1) as f64
    }

    pub fn dp(&self) -> f64 {
        (self.p_max - self.p_min) / (self.np - 1) as f64
    }

    pub fn q(&self, i: usize) -> f64 {
        self.q_min + i as f64 * self.dq()
    }

    pub fn p(&self, j: usize) -> f64 {
        self.p_min + j as f64 * self.dp()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum WignerWarning {
    /// The grid is narrower than `√(2⟨n⟩) + 4` along some axis.
    GridTooNarrow { required: f64 },
    /// `|ΣW ΔqΔp − 1|` above 1e-6.
    Normalization { deficit: f64 },
    /// The top Fock level carries population, so the state is likely truncated.
    CutoffEdge { population: f64 },
}

/// `W(q_i, p_j)` stored row-major in `q`.
#[derive(Debug, Clone, PartialEq)]
pub struct WignerGrid {
    pub spec: WignerGridSpec,
    pub values: Vec<f64>,
    pub warnings: Vec<WignerWarning>,
}

impl WignerGrid {
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.spec.np + j]
    }

    /// `Σ W ΔqΔp`.
    pub fn integral(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.spec.dq() * self.spec.dp()
    }

    /// Quadrature moments from grid sums.
    pub fn moments(&self) -> QuadratureMoments {
        let s = &self.spec;
        let (mut q1, mut p1, mut q2, mut p2) = (0.0, 0.0, 0.0, 0.0);
        for i in 0..s.nq {
            let q = s.q(i);
            for j in 0..s.np {
                let p = s.p(j);
                let w = self.get(i, j);
                q1 += q * w;
                p1 += p * w;
                q2 += q * q * w;
                p2 += p * p * w;
            }
        }
        let da = s.dq() * s.dp();
        QuadratureMoments::from_raw(q1 * da, p1 * da, q2 * da, p2 * da)
    }

    /// `∫ W dp` at each `q_i`.
    pub fn q_marginal(&self) -> Vec<f64> {
        let dp = self.spec.dp();
        (0..self.spec.nq)
            .map(|i| (0..self.spec.np).map(|j| self.get(i, j)).sum::<f64>() * dp)
            .collect()
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

/// Precomputed `(−1)^m ρ(m, m+a)` diagonals for repeated point evaluation.
#[derive(Debug, Clone)]
pub struct WignerKernel {
    dim: usize,
    bands: Vec<Vec<C64>>,
}

impl WignerKernel {
    pub fn new(rho: &DensityMatrix) -> Self {
        let d = rho.dim();
        let bands = (0..d)
            .map(|a| {
                (0..d - a)
                    .map(|m| {
                        let v = rho[(m, m + a)];
                        if m % 2 == 0 {
                            v
                        } else {
                            -v
                        }
                    })
                    .collect::<Vec<C64>>()
            })
            .map(|band| {
                if band.iter().all(|v| v.norm() == 0.0) {
                    Vec::new()
                } else {
                    band
                }
            })
            .collect();
        Self { dim: d, bands }
    }

    /// `W(q, p) = (1/π) Tr[ρ D(β) Π]` with `β = √2(q + ip)` and `Π` the parity.
    pub fn eval(&self, q: f64, p: f64, scratch: &mut Vec<f64>) -> f64 {
        let x = 2.0 * (q * q + p * p);
        let phi = libm::atan2(p, q);
        scratch.resize(self.dim, 0.0);
        let mut total = 0.0;
        for (a, band) in self.bands.iter().enumerate() {
            if band.is_empty() {
                continue;
            }
            let u = &mut scratch[..band.len()];
            laguerre_band(x, a, u);
            let s: C64 = band.iter().zip(u.iter()).map(|(r, &u)| r * u).sum();
            if a == 0 {
                total += s.re;
            } else {
                total += 2.0 * (s * C64::from_polar(1.0, a as f64 * phi)).re;
            }
        }
        FRAC_1_PI * total
    }
}

/// One row `W(q_i, p_j)`, `j = 0..np`.
pub fn wigner_row(kernel: &WignerKernel, spec: &WignerGridSpec, i: usize) -> Vec<f64> {
    let q = spec.q(i);
    let mut scratch = Vec::new();
    (0..spec.np)
        .map(|j| kernel.eval(q, spec.p(j), &mut scratch))
        .collect()
}

pub fn wigner_at(rho: &DensityMatrix, q: f64, p: f64) -> f64 {
    WignerKernel::new(rho).eval(q, p, &mut Vec::new())
}

/// Assembles precomputed rows and attaches diagnostics.
pub fn wigner_from_rows(
    rho: &DensityMatrix,
    spec: WignerGridSpec,
    rows: Vec<Vec<f64>>,
) -> Result<WignerGrid> {
    spec.validate()?;
    if rows.len() != spec.nq || rows.iter().any(|r| r.len() != spec.np) {
        return Err(Error::EntryCount {
            expected: spec.nq * spec.np,
            got: rows.iter().map(|r| r.len()).sum(),
        });
    }
    let values: Vec<f64> = rows.into_iter().flatten().collect();
    let mut grid = WignerGrid {
        spec,
        values,
        warnings: Vec::new(),
    };
    let mu = mean_photon(rho);
    let required = WignerGridSpec::required_half_width(mu);
    let m = moments(rho);
    let covers = |lo: f64, hi: f64, c: f64| lo <= c - required && hi >= c + required;
    if !covers(spec.q_min, spec.q_max, 0.0) && !covers(spec.q_min, spec.q_max, m.q)
        || !covers(spec.p_min, spec.p_max, 0.0) && !covers(spec.p_min, spec.p_max, m.p)
    {
        grid.warnings.push(WignerWarning::GridTooNarrow { required });
    }
    let deficit = (grid.integral() - rho.trace().re).abs();
    if deficit > 1e-6 {
        grid.warnings.push(WignerWarning::Normalization { deficit });
    }
    let top = rho[(rho.cutoff(), rho.cutoff())].re;
    if top > 1e-10 {
        grid.warnings.push(WignerWarning::CutoffEdge { population: top });
    }
    Ok(grid)
}

/// Wigner function of `rho` sampled on `spec`.
pub fn wigner(rho: &DensityMatrix, spec: WignerGridSpec) -> Result<WignerGrid> {
    spec.validate()?;
    let kernel = WignerKernel::new(rho);
    let rows = (0..spec.nq).map(|i| wigner_row(&kernel, &spec, i)).collect();
    wigner_from_rows(rho, spec, rows)
}

/// Position-quadrature density `⟨q|ρ|q⟩ = Σ ρ(m,n) ψ_m(q) ψ_n(q)` with
/// Hermite functions `ψ_n`.
pub fn q_distribution(rho: &DensityMatrix, q: f64) -> f64 {
    let d = rho.dim();
    let mut psi = vec![0.0; d];
    psi[0] = libm::pow(PI, -0.25) * libm::exp(-0.5 * q * q);
    if d > 1 {
        psi[1] = SQRT_2 * q * psi[0];
    }
    for n in 2..d {
        let nf = n as f64;
        psi[n] = libm::sqrt(2.0 / nf) * q * psi[n - 1] - libm::sqrt((nf - 1.0) / nf) * psi[n - 2];
    }
    let mut s = 0.0;
    for m in 0..d {
        for n in 0..d {
            s += rho[(m, n)].re * psi[m] * psi[n];
        }
    }
    s
}
