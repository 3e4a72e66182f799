//! Truncated Fock-space primitives: density matrices, displacement matrices
//! and photon statistics.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::{Index, IndexMut};

use nalgebra::DMatrix;

use crate::special::ln_factorial;
use crate::{Error, Result, C64};

/// Acceptance thresholds used by [`validate`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Largest allowed `|ρ(n,m) − conj(ρ(m,n))|`.
    pub hermiticity: f64,
    /// Truncation-loss budget ε_tr: the trace may fall short of 1 by this much.
    pub trace_budget: f64,
    /// How far the trace may exceed 1.
    pub trace_excess: f64,
    /// Smallest allowed eigenvalue.
    pub min_eigenvalue: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            hermiticity: 1e-12,
            trace_budget: 1e-8,
            trace_excess: 1e-12,
            min_eigenvalue: -1e-10,
        }
    }
}

/// Report produced by [`validate`]. Never an error by itself.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Diagnostics {
    pub hermiticity_defect: f64,
    pub trace: f64,
    pub trace_imag: f64,
    pub trace_deficit: f64,
    pub min_eigenvalue: f64,
    pub hermitian: bool,
    pub trace_ok: bool,
    pub positive: bool,
}

impl Diagnostics {
    pub fn is_clean(&self) -> bool {
        self.hermitian && self.trace_ok && self.positive
    }
}

fn check_cutoff(cutoff: usize) -> Result<()> {
    if cutoff < 1 {
        return Err(Error::InvalidCutoff(cutoff));
    }
    Ok(())
}

/// Photon density matrix on Fock levels `0..=cutoff`, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    cutoff: usize,
    entries: Vec<C64>,
}

impl DensityMatrix {
    pub fn zeros(cutoff: usize) -> Result<Self> {
        check_cutoff(cutoff)?;
        let d = cutoff + 1;
        Ok(Self {
            cutoff,
            entries: vec![C64::new(0.0, 0.0); d * d],
        })
    }

    pub fn from_entries(cutoff: usize, entries: Vec<C64>) -> Result<Self> {
        check_cutoff(cutoff)?;
        let d = cutoff + 1;
        if entries.len() != d * d {
            return Err(Error::EntryCount {
                expected: d * d,
                got: entries.len(),
            });
        }
        Ok(Self { cutoff, entries })
    }

    pub fn vacuum(cutoff: usize) -> Result<Self> {
        Self::fock(cutoff, 0)
    }

    /// The number state `|n⟩⟨n|`.
    pub fn fock(cutoff: usize, n: usize) -> Result<Self> {
        let mut rho = Self::zeros(cutoff)?;
        if n > cutoff {
            return Err(Error::InvalidParameter(alloc::format!(
                "Fock level {n} above cutoff {cutoff}"
            )));
        }
        rho[(n, n)] = C64::new(1.0, 0.0);
        Ok(rho)
    }

    /// Diagonal state with the given populations.
    pub fn from_diagonal(cutoff: usize, probs: &[f64]) -> Result<Self> {
        let mut rho = Self::zeros(cutoff)?;
        for (n, &p) in probs.iter().take(cutoff + 1).enumerate() {
            rho[(n, n)] = C64::new(p, 0.0);
        }
        Ok(rho)
    }

    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    pub fn dim(&self) -> usize {
        self.cutoff + 1
    }

    /// Row-major entries.
    pub fn entries(&self) -> &[C64] {
        &self.entries
    }

    pub fn entries_mut(&mut self) -> &mut [C64] {
        &mut self.entries
    }

    pub fn trace(&self) -> C64 {
        let d = self.dim();
        (0..d).map(|n| self.entries[n * d + n]).sum()
    }

    /// `1 − Re tr ρ`.
    pub fn trace_deficit(&self) -> f64 {
        1.0 - self.trace().re
    }

    pub fn hermiticity_defect(&self) -> f64 {
        let d = self.dim();
        let mut worst = 0.0f64;
        for n in 0..d {
            for m in n..d {
                let e = (self.entries[n * d + m] - self.entries[m * d + n].conj()).norm();
                worst = worst.max(e);
            }
        }
        worst
    }

    /// Smallest eigenvalue of the Hermitian part.
    pub fn min_eigenvalue(&self) -> f64 {
        let d = self.dim();
        let m = DMatrix::from_fn(d, d, |i, j| {
            let a = self.entries[i * d + j];
            let b = self.entries[j * d + i].conj();
            (a + b) * 0.5
        });
        m.symmetric_eigenvalues().min()
    }

    /// Phase-space rotation `ρ(n,m) e^{i(n−m)Δ}`, i.e. `e^{iΔ a†a} ρ e^{−iΔ a†a}`.
    pub fn rotated(&self, delta: f64) -> Self {
        let d = self.dim();
        let mut out = self.clone();
        for n in 0..d {
            for m in 0..d {
                let ph = C64::from_polar(1.0, (n as f64 - m as f64) * delta);
                out.entries[n * d + m] *= ph;
            }
        }
        out
    }

    /// `self += w · other`.
    pub fn add_scaled(&mut self, other: &DensityMatrix, w: f64) -> Result<()> {
        if other.cutoff != self.cutoff {
            return Err(Error::CutoffMismatch(self.cutoff, other.cutoff));
        }
        for (a, b) in self.entries.iter_mut().zip(other.entries.iter()) {
            *a += b * w;
        }
        Ok(())
    }

    pub fn max_abs_diff(&self, other: &DensityMatrix) -> f64 {
        self.entries
            .iter()
            .zip(other.entries.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }
}

impl Index<(usize, usize)> for DensityMatrix {
    type Output = C64;
    fn index(&self, (n, m): (usize, usize)) -> &C64 {
        &self.entries[n * (self.cutoff + 1) + m]
    }
}

impl IndexMut<(usize, usize)> for DensityMatrix {
    fn index_mut(&mut self, (n, m): (usize, usize)) -> &mut C64 {
        &mut self.entries[n * (self.cutoff + 1) + m]
    }
}

/// Normalized Laguerre band of the displacement operator.
///
/// Writes `out[k] = √(k!/(k+a)!) x^{a/2} e^{−x/2} L_k^{(a)}(x)` for
/// `k = 0..out.len()`, which is `|⟨k+a|D(β)|k⟩|` up to sign with `x = |β|²`.
/// The three-term recurrence runs on the normalized values so nothing overflows,
/// and it stays accurate where the alternating finite sum cancels badly.
pub(crate) fn laguerre_band(x: f64, a: usize, out: &mut [f64]) {
    if out.is_empty() {
        return;
    }
    let af = a as f64;
    let log_pow = if a == 0 { 0.0 } else { 0.5 * af * libm::log(x) };
    out[0] = libm::exp(log_pow - 0.5 * ln_factorial(a) - 0.5 * x);
    if out.len() > 1 {
        out[1] = (1.0 + af - x) * out[0] / libm::sqrt(1.0 + af);
    }
    for k in 1..out.len().saturating_sub(1) {
        let kf = k as f64;
        let num = (2.0 * kf + 1.0 + af - x) * out[k] - libm::sqrt(kf * (kf + af)) * out[k - 1];
        out[k + 1] = num / libm::sqrt((kf + 1.0) * (kf + 1.0 + af));
    }
}

/// `M_{n_f,n_i} = ⟨n_f|D(g)|n_i⟩` on levels `0..=cutoff`.
#[derive(Debug, Clone, PartialEq)]
pub struct DisplacementMatrix {
    g: C64,
    cutoff: usize,
    entries: Vec<C64>,
}

impl DisplacementMatrix {
    pub fn g(&self) -> C64 {
        self.g
    }

    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    pub fn dim(&self) -> usize {
        self.cutoff + 1
    }

    pub fn entries(&self) -> &[C64] {
        &self.entries
    }

    #[inline]
    pub fn get(&self, nf: usize, ni: usize) -> C64 {
        self.entries[nf * (self.cutoff + 1) + ni]
    }

    /// `max |(M†M − I)_{ij}|` over the leading `k × k` block.
    pub fn unitarity_defect(&self, k: usize) -> f64 {
        let d = self.dim();
        let k = k.min(d);
        let mut worst = 0.0f64;
        for i in 0..k {
            for j in 0..k {
                let mut s = C64::new(0.0, 0.0);
                for r in 0..d {
                    s += self.get(r, i).conj() * self.get(r, j);
                }
                if i == j {
                    s -= 1.0;
                }
                worst = worst.max(s.norm());
            }
        }
        worst
    }
}

/// Size of the leading block on which a truncated `D(g)` is unitary to machine
/// precision: levels whose displaced support `n ± 2|g|√n` stays below the cutoff.
pub fn unitary_block(g: C64, cutoff: usize) -> usize {
    let ga = g.norm();
    let a = cutoff as f64 - libm::ceil(4.0 * ga * ga + 10.0);
    let r = (libm::sqrt(cutoff as f64) - ga - 3.5).max(0.0);
    let b = libm::floor(r * r);
    a.min(b).max(0.0) as usize
}

/// Displacement matrix `⟨n_f|D(g)|n_i⟩` for `n_f, n_i ≤ cutoff`.
pub fn displacement_matrix(g: C64, cutoff: usize) -> Result<DisplacementMatrix> {
    check_cutoff(cutoff)?;
    let d = cutoff + 1;
    let x = g.norm_sqr();
    let phi = g.arg();
    let mut entries = vec![C64::new(0.0, 0.0); d * d];
    let mut band = vec![0.0; d];
    for a in 0..d {
        let len = d - a;
        laguerre_band(x, a, &mut band[..len]);
        let ph = C64::from_polar(1.0, a as f64 * phi);
        let sign = if a % 2 == 0 { 1.0 } else { -1.0 };
        for k in 0..len {
            let v = ph * band[k];
            entries[(k + a) * d + k] = v;
            if a > 0 {
                entries[k * d + k + a] = v.conj() * sign;
            }
        }
    }
    Ok(DisplacementMatrix { g, cutoff, entries })
}

/// One element of `D(g)` from the alternating finite sum over `m`, accumulated
/// term by term in the log domain.
///
/// Exact for small indices; cancellation ruins it once `|g|²` and the indices
/// grow, which is why [`displacement_matrix`] does not use it.
pub fn displacement_element(g: C64, nf: usize, ni: usize) -> C64 {
    let x = g.norm_sqr();
    if x == 0.0 {
        return if nf == ni { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) };
    }
    let d = nf as i64 - ni as i64;
    let lx = libm::log(x);
    let pre = -0.5 * x + 0.5 * d as f64 * lx + 0.5 * (ln_factorial(ni) + ln_factorial(nf));
    let m0 = ni.saturating_sub(nf);
    let mut sum = 0.0;
    for m in m0..=ni {
        let lt = m as f64 * lx
            - ln_factorial(m)
            - ln_factorial((m as i64 + d) as usize)
            - ln_factorial(ni - m);
        let t = libm::exp(pre + lt);
        sum += if m % 2 == 0 { t } else { -t };
    }
    C64::from_polar(1.0, d as f64 * g.arg()) * sum
}

/// Coherent-state amplitudes `e^{−|g|²/2} gⁿ/√(n!)` for `n = 0..=cutoff`.
pub fn coherent_amplitudes(g: C64, cutoff: usize) -> Vec<C64> {
    let x = g.norm_sqr();
    (0..=cutoff)
        .map(|n| {
            if n == 0 {
                return C64::new(libm::exp(-0.5 * x), 0.0);
            }
            if x == 0.0 {
                return C64::new(0.0, 0.0);
            }
            let lm = -0.5 * x + 0.5 * n as f64 * libm::log(x) - 0.5 * ln_factorial(n);
            C64::from_polar(libm::exp(lm), n as f64 * g.arg())
        })
        .collect()
}

/// Truncated projector onto the coherent state `|g⟩`.
pub fn coherent_density(g: C64, cutoff: usize) -> Result<DensityMatrix> {
    check_cutoff(cutoff)?;
    let c = coherent_amplitudes(g, cutoff);
    let mut rho = DensityMatrix::zeros(cutoff)?;
    for n in 0..=cutoff {
        for m in 0..=cutoff {
            rho[(n, m)] = c[n] * c[m].conj();
        }
    }
    Ok(rho)
}

/// Fock-level populations `p_n = Re ρ(n,n)`.
pub fn photon_statistics(rho: &DensityMatrix) -> Vec<f64> {
    (0..rho.dim()).map(|n| rho[(n, n)].re).collect()
}

pub fn mean_photon(rho: &DensityMatrix) -> f64 {
    photon_statistics(rho)
        .iter()
        .enumerate()
        .map(|(n, p)| n as f64 * p)
        .sum()
}

/// `⟨n² − n⟩ / ⟨n⟩²`.
pub fn g2_zero(rho: &DensityMatrix) -> Result<f64> {
    let p = photon_statistics(rho);
    let mean: f64 = p.iter().enumerate().map(|(n, p)| n as f64 * p).sum();
    if !(mean > 0.0) {
        return Err(Error::ZeroMean);
    }
    let fact: f64 = p
        .iter()
        .enumerate()
        .map(|(n, p)| (n as f64) * (n as f64 - 1.0) * p)
        .sum();
    Ok(fact / (mean * mean))
}

pub fn validate(rho: &DensityMatrix, tol: &Tolerances) -> Diagnostics {
    let herm = rho.hermiticity_defect();
    let tr = rho.trace();
    let deficit = 1.0 - tr.re;
    let min_eig = rho.min_eigenvalue();
    Diagnostics {
        hermiticity_defect: herm,
        trace: tr.re,
        trace_imag: tr.im,
        trace_deficit: deficit,
        min_eigenvalue: min_eig,
        hermitian: herm <= tol.hermiticity,
        trace_ok: deficit <= tol.trace_budget
            && -deficit <= tol.trace_excess
            && tr.im.abs() <= tol.hermiticity,
        positive: min_eig >= tol.min_eigenvalue,
    }
}

/// Default cutoff for a state whose mean photon number is about `mu`.
pub fn select_cutoff(mu: f64) -> usize {
    let mu = mu.max(0.0);
    libm::ceil(mu + 8.0 * libm::sqrt(mu + 1.0) + 20.0) as usize
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn zero_displacement_is_identity() {
        let m = displacement_matrix(c(0.0, 0.0), 5).unwrap();
        for i in 0..6 {
            for j in 0..6 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert_eq!(m.get(i, j), c(want, 0.0));
            }
        }
    }

    #[test]
    fn vacuum_element() {
        let g = c(0.0, 1.3);
        let m = displacement_matrix(g, 30).unwrap();
        let want = (-0.845f64).exp();
        assert!((m.get(0, 0).re - want).abs() < 1e-15);
        assert!((m.get(0, 0).re - 0.429_557_358_210_739_15).abs() < 1e-15);
        assert!((displacement_element(g, 0, 0).re - want).abs() < 1e-15);
    }

    #[test]
    fn column_zero_is_coherent() {
        let g = c(0.0, 1.3);
        let m = displacement_matrix(g, 40).unwrap();
        let amp = coherent_amplitudes(g, 40);
        let mut norm = 0.0;
        for n in 0..=40 {
            assert!((m.get(n, 0) - amp[n]).norm() < 1e-15);
            norm += m.get(n, 0).norm_sqr();
        }
        assert!((norm - 1.0).abs() < 1e-14);
    }

    #[test]
    fn recurrence_matches_finite_sum_at_small_indices() {
        for &g in &[c(0.3, -0.2), c(0.0, 1.3), c(-1.1, 0.7)] {
            let m = displacement_matrix(g, 20).unwrap();
            for nf in 0..=20 {
                for ni in 0..=20 {
                    let e = displacement_element(g, nf, ni);
                    assert!((m.get(nf, ni) - e).norm() < 1e-11, "{g} {nf} {ni}");
                }
            }
        }
    }

    #[test]
    fn large_cutoff_stays_unitary() {
        let g = c(2.1, -2.1);
        let m = displacement_matrix(g, 400).unwrap();
        let k = unitary_block(g, 400);
        assert!(k > 150);
        let mut worst = 0.0f64;
        for i in (0..k).step_by(7) {
            for j in (0..k).step_by(11) {
                let mut s = c(0.0, 0.0);
                for r in 0..=400 {
                    s += m.get(r, i).conj() * m.get(r, j);
                }
                if i == j {
                    s -= 1.0;
                }
                worst = worst.max(s.norm());
            }
        }
        assert!(worst < 1e-10, "{worst}");
    }

    #[test]
    fn coherent_density_properties() {
        let g = c(0.0, 1.3);
        let rho = coherent_density(g, 35).unwrap();
        assert!((rho[(0, 0)].re - (-1.69f64).exp()).abs() < 1e-15);
        assert!((rho[(0, 0)].re - 0.184_519_523_992_989_6).abs() < 1e-12);
        assert!((mean_photon(&rho) - 1.69).abs() < 1e-12);
        assert!((g2_zero(&rho).unwrap() - 1.0).abs() < 1e-9);
        let v = coherent_density(c(0.0, 0.0), 3).unwrap();
        assert_eq!(v, DensityMatrix::vacuum(3).unwrap());
    }

    #[test]
    fn poisson_statistics() {
        let g = c(0.0, 1.3);
        let p = photon_statistics(&coherent_density(g, 35).unwrap());
        let mut pn = (-1.69f64).exp();
        for (n, &v) in p.iter().enumerate() {
            if n > 0 {
                pn *= 1.69 / n as f64;
            }
            assert!((v - pn).abs() < 1e-12);
        }
    }

    #[test]
    fn g2_cases() {
        let f1 = DensityMatrix::fock(4, 1).unwrap();
        assert_eq!(g2_zero(&f1).unwrap(), 0.0);
        assert_eq!(g2_zero(&DensityMatrix::vacuum(4).unwrap()), Err(Error::ZeroMean));
        // thermal state: g2 = 2
        let mu: f64 = 0.5;
        let probs: Vec<f64> = (0..=80)
            .map(|n| (mu / (mu + 1.0)).powi(n) / (mu + 1.0))
            .collect();
        let th = DensityMatrix::from_diagonal(80, &probs).unwrap();
        assert!((mean_photon(&th) - mu).abs() < 1e-12);
        assert!((g2_zero(&th).unwrap() - 2.0).abs() < 1e-10);
    }

    #[test]
    fn validate_reports() {
        let tol = Tolerances::default();
        assert!(validate(&DensityMatrix::vacuum(4).unwrap(), &tol).is_clean());

        let cut = coherent_density(c(3.0, 0.0), 4).unwrap();
        let d = validate(&cut, &tol);
        assert!(!d.trace_ok);
        let tail: f64 = 1.0 - (0..=4).map(|n| {
            let mut p = (-9.0f64).exp();
            for k in 1..=n {
                p *= 9.0 / k as f64;
            }
            p
        }).sum::<f64>();
        assert!((d.trace_deficit - tail).abs() < 1e-12);

        let mut bad = coherent_density(c(0.5, 0.0), 6).unwrap();
        bad[(1, 2)] += c(0.0, 1e-3);
        let d = validate(&bad, &tol);
        assert!(!d.hermitian);
        assert!(d.hermiticity_defect > 9e-4);
    }

    #[test]
    fn cutoff_selector() {
        assert_eq!(select_cutoff(0.0), 28);
        assert_eq!(select_cutoff(8.516), 54);
        assert_eq!(select_cutoff(1.69), 35);
    }

    #[test]
    fn invalid_cutoff() {
        assert_eq!(displacement_matrix(c(1.0, 0.0), 0), Err(Error::InvalidCutoff(0)));
        assert!(DensityMatrix::zeros(0).is_err());
    }

    #[test]
    fn rotation_moves_phase() {
        let rho = coherent_density(c(0.7, 0.0), 20).unwrap();
        let r = rho.rotated(0.4);
        let want = coherent_density(C64::from_polar(0.7, 0.4), 20).unwrap();
        assert!(r.max_abs_diff(&want) < 1e-14);
    }
}
