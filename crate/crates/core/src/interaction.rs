//! The single-electron channel acting on the cavity photon state.
//!
//! One electron with harmonics `b̃` maps
//!
//! ```text
//! ρ_f(a, b) = Σ_{n,n'} ρ(n, n') b̃^((a−n)−(b−n')) M_{a,n} conj(M_{b,n'})
//! ```
//!
//! with `M = D(g)`. The exponent counts photons created on the ket side minus
//! the bra side, since every created photon carries one recoil `b̂`.

use alloc::vec;
use alloc::vec::Vec;

use crate::classical::constants::{E_CHARGE, M_E};
use crate::fock::{DensityMatrix, DisplacementMatrix};
use crate::qew::BunchingSpectrum;
use crate::{Error, Result, C64};

/// Lab-frame inputs for the coupling `g = i e A_{0,eff} k₀ L / (γ mₑ v₀)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CouplingPhysical {
    /// Effective vacuum vector-potential amplitude `A_{0,eff}` (V·s/m).
    pub a0_eff: f64,
    /// Electron central wavenumber `k₀` (1/m).
    pub k0: f64,
    /// Interaction length `L` (m).
    pub length: f64,
    pub gamma: f64,
    /// Electron velocity (m/s).
    pub v0: f64,
}

impl CouplingPhysical {
    pub fn coupling(&self) -> C64 {
        C64::new(
            0.0,
            E_CHARGE * self.a0_eff * self.k0 * self.length / (self.gamma * M_E * self.v0),
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CouplingSpec {
    pub g: C64,
    pub physical: Option<CouplingPhysical>,
}

impl CouplingSpec {
    pub fn new(g: C64) -> Self {
        Self { g, physical: None }
    }

    pub fn from_physical(block: CouplingPhysical) -> Result<Self> {
        let s = Self {
            g: block.coupling(),
            physical: Some(block),
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.g.re.is_finite() && self.g.im.is_finite()) {
            return Err(Error::InvalidParameter("coupling must be finite".into()));
        }
        if let Some(p) = self.physical {
            let d = (p.coupling() - self.g).norm();
            if d > 1e-12 * self.g.norm().max(1e-300) {
                return Err(Error::InvalidParameter(
                    "coupling disagrees with its physical block".into(),
                ));
            }
        }
        Ok(())
    }
}

/// Row-major `B_{nm}(s) = b̃^(m−n−s)`: the mask applied to `ρ` before
/// displacement when assembling output diagonal `s`.
pub fn dephasing_matrix(spec: &BunchingSpectrum, s: i64, cutoff: usize) -> Vec<C64> {
    let d = cutoff + 1;
    let mut out = vec![C64::new(0.0, 0.0); d * d];
    for n in 0..d {
        for m in 0..d {
            out[n * d + m] = spec.get(m as i64 - n as i64 - s);
        }
    }
    out
}

/// Applies one electron to `rho_in`.
///
/// Output diagonal `s` is `ρ_f(a, a+s) = Σ_{n'} conj(M_{a+s,n'}) [M (ρ ∘ B(s))]_{a,n'}`;
/// only the band `|n' − n − s| ≤ R_max` of `ρ ∘ B(s)` is non-zero. Diagonals
/// with `s < 0` are filled by Hermitian conjugation. Fails if the output trace
/// falls short of 1 by more than `trace_budget`.
pub fn scatter(
    rho_in: &DensityMatrix,
    spec: &BunchingSpectrum,
    m: &DisplacementMatrix,
    trace_budget: f64,
) -> Result<DensityMatrix> {
    let cutoff = rho_in.cutoff();
    if m.cutoff() != cutoff {
        return Err(Error::CutoffMismatch(cutoff, m.cutoff()));
    }
    let deficit_in = rho_in.trace_deficit();
    if deficit_in > trace_budget {
        return Err(Error::TraceBudget {
            deficit: deficit_in,
            budget: trace_budget,
        });
    }
    let d = cutoff + 1;
    let support = spec.support();
    let rho = rho_in.entries();
    // mt[n*d + a] = M_{a,n}: columns of M made contiguous
    let mut mt = vec![C64::new(0.0, 0.0); d * d];
    for a in 0..d {
        for n in 0..d {
            mt[n * d + a] = m.get(a, n);
        }
    }
    // skip input diagonals that are identically zero (diagonal states stay cheap)
    let mut diag_live = vec![false; 2 * d - 1];
    for n in 0..d {
        for np in 0..d {
            if rho[n * d + np] != C64::new(0.0, 0.0) {
                diag_live[np + d - 1 - n] = true;
            }
        }
    }

    let mut out = DensityMatrix::zeros(cutoff)?;
    let mut x = vec![C64::new(0.0, 0.0); d * d];
    for s in 0..d {
        let rows = d - s;
        let mut any = false;
        for v in x.iter_mut() {
            *v = C64::new(0.0, 0.0);
        }
        for np in 0..d {
            let xrow = &mut x[np * d..np * d + rows];
            for &(k, bk) in &support {
                // n = n' − s − k
                let n = np as i64 - s as i64 - k;
                if n < 0 || n >= d as i64 {
                    continue;
                }
                let n = n as usize;
                if !diag_live[np + d - 1 - n] {
                    continue;
                }
                let c = rho[n * d + np] * bk;
                if c == C64::new(0.0, 0.0) {
                    continue;
                }
                any = true;
                let col = &mt[n * d..n * d + rows];
                for (xv, mv) in xrow.iter_mut().zip(col.iter()) {
                    *xv += mv * c;
                }
            }
        }
        if !any {
            continue;
        }
        let o = out.entries_mut();
        for np in 0..d {
            let xrow = &x[np * d..np * d + rows];
            let mrow = &mt[np * d + s..np * d + d];
            for a in 0..rows {
                o[a * d + a + s] += mrow[a].conj() * xrow[a];
            }
        }
    }
    let o = out.entries_mut();
    for a in 0..d {
        for b in (a + 1)..d {
            o[b * d + a] = o[a * d + b].conj();
        }
    }
    let deficit = out.trace_deficit();
    if deficit > trace_budget {
        return Err(Error::TraceBudget {
            deficit,
            budget: trace_budget,
        });
    }
    Ok(out)
}

/// Closed-form state after one electron leaves vacuum:
/// `ρ(n,m) = e^{−|g|²} b̃^(n−m) gⁿ conj(g)ᵐ / √(n! m!)`.
pub fn spontaneous_single(
    spec: &BunchingSpectrum,
    coupling: &CouplingSpec,
    cutoff: usize,
) -> Result<DensityMatrix> {
    let c = crate::fock::coherent_amplitudes(coupling.g, cutoff);
    let mut rho = DensityMatrix::zeros(cutoff)?;
    for n in 0..=cutoff {
        for m in 0..=cutoff {
            rho[(n, m)] = c[n] * c[m].conj() * spec.get(n as i64 - m as i64);
        }
    }
    Ok(rho)
}

/// Second-order expansion of the channel in `g`, valid for `|g| ≤ 0.3`.
///
/// With `X = g a†b̂ − g* a b̂†` the map is `ρ + [X, ρ] + ½{X², ρ} − XρX` after
/// tracing the electron, where each `b̂^k` becomes `b̃^(k)`.
pub fn perturbative_update(
    rho_in: &DensityMatrix,
    coupling: &CouplingSpec,
    spec: &BunchingSpectrum,
) -> Result<DensityMatrix> {
    let g = coupling.g;
    if g.norm() > 0.3 {
        return Err(Error::CouplingTooLarge(g.norm()));
    }
    let n_max = rho_in.cutoff() as i64;
    let at = |n: i64, m: i64| -> C64 {
        if n < 0 || m < 0 || n > n_max || m > n_max {
            C64::new(0.0, 0.0)
        } else {
            rho_in[(n as usize, m as usize)]
        }
    };
    let sq = |v: i64| libm::sqrt(v.max(0) as f64);
    let gc = g.conj();
    let g2 = g * g;
    let gc2 = gc * gc;
    let x = g.norm_sqr();
    let (b1, bm1, b2, bm2) = (spec.get(1), spec.get(-1), spec.get(2), spec.get(-2));
    let mut out = rho_in.clone();
    for n in 0..=n_max {
        for m in 0..=n_max {
            let mut v = C64::new(0.0, 0.0);
            // [X, ρ]
            v += g * b1 * sq(n) * at(n - 1, m);
            v -= gc * bm1 * sq(n + 1) * at(n + 1, m);
            v -= g * b1 * sq(m + 1) * at(n, m + 1);
            v += gc * bm1 * sq(m) * at(n, m - 1);
            // −XρX
            v += x * sq(n) * sq(m) * at(n - 1, m - 1);
            v -= g2 * b2 * sq(n) * sq(m + 1) * at(n - 1, m + 1);
            v -= gc2 * bm2 * sq(n + 1) * sq(m) * at(n + 1, m - 1);
            v += x * sq(n + 1) * sq(m + 1) * at(n + 1, m + 1);
            // ½X²ρ
            v += 0.5 * g2 * b2 * sq(n) * sq(n - 1) * at(n - 2, m);
            v -= 0.5 * x * (2 * n + 1) as f64 * at(n, m);
            v += 0.5 * gc2 * bm2 * sq(n + 1) * sq(n + 2) * at(n + 2, m);
            // ½ρX²
            v += 0.5 * g2 * b2 * sq(m + 1) * sq(m + 2) * at(n, m + 2);
            v -= 0.5 * x * (2 * m + 1) as f64 * at(n, m);
            v += 0.5 * gc2 * bm2 * sq(m) * sq(m - 1) * at(n, m - 2);
            out[(n as usize, m as usize)] += v;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{coherent_density, displacement_matrix, photon_statistics};
    use crate::qew::Picture;

    fn spec(b1: C64, b2: C64) -> BunchingSpectrum {
        BunchingSpectrum::from_harmonics(&[b1, b2, b1 * b2 * 0.5], Picture::Schrodinger).unwrap()
    }

    #[test]
    fn dephasing_patterns() {
        let u = BunchingSpectrum::unmodulated();
        let b = dephasing_matrix(&u, 0, 4);
        for n in 0..5 {
            for m in 0..5 {
                let want = if n == m { 1.0 } else { 0.0 };
                assert_eq!(b[n * 5 + m], C64::new(want, 0.0));
            }
        }
        let s = spec(C64::new(0.3, -0.2), C64::new(0.05, 0.1));
        let b = dephasing_matrix(&s, 0, 6);
        for n in 0..7 {
            assert_eq!(b[n * 7 + n], C64::new(1.0, 0.0));
            for m in 0..7 {
                assert!((b[n * 7 + m] - b[m * 7 + n].conj()).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn vacuum_unmodulated_is_poisson_diagonal() {
        let g = C64::new(0.0, 1.3);
        let m = displacement_matrix(g, 35).unwrap();
        let out = scatter(
            &DensityMatrix::vacuum(35).unwrap(),
            &BunchingSpectrum::unmodulated(),
            &m,
            1e-8,
        )
        .unwrap();
        let want = coherent_density(g, 35).unwrap();
        for n in 0..36 {
            assert!((out[(n, n)] - want[(n, n)]).norm() < 1e-15);
            for k in 0..36 {
                if k != n {
                    assert_eq!(out[(n, k)], C64::new(0.0, 0.0));
                }
            }
        }
    }

    #[test]
    fn vacuum_modulated_matches_closed_form() {
        let g = C64::new(0.0, 0.9);
        let s = spec(C64::new(0.4, 0.3), C64::new(-0.1, 0.2));
        let m = displacement_matrix(g, 30).unwrap();
        let out = scatter(&DensityMatrix::vacuum(30).unwrap(), &s, &m, 1e-8).unwrap();
        let want = spontaneous_single(&s, &CouplingSpec::new(g), 30).unwrap();
        assert!(out.max_abs_diff(&want) < 1e-14);
    }

    #[test]
    fn point_particle_limit_is_coherent() {
        let g = C64::new(0.2, 0.5);
        let s = BunchingSpectrum::point_particle(30);
        let rho = spontaneous_single(&s, &CouplingSpec::new(g), 30).unwrap();
        assert!(rho.max_abs_diff(&coherent_density(g, 30).unwrap()) < 1e-15);
    }

    #[test]
    fn carrier_only_transforms_each_diagonal() {
        let g = C64::new(0.3, 0.1);
        let m = displacement_matrix(g, 25).unwrap();
        let rho = coherent_density(C64::new(0.5, -0.4), 25).unwrap();
        let out = scatter(&rho, &BunchingSpectrum::unmodulated(), &m, 1e-8).unwrap();
        for n in 0..26usize {
            for s in 0..(26 - n) {
                let mut want = C64::new(0.0, 0.0);
                for ni in 0..(26 - s) {
                    want += m.get(n, ni) * rho[(ni, ni + s)] * m.get(n + s, ni + s).conj();
                }
                assert!((out[(n, n + s)] - want).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn statistics_do_not_depend_on_shape() {
        let g = C64::new(0.0, 1.3);
        let m = displacement_matrix(g, 35).unwrap();
        let vac = DensityMatrix::vacuum(35).unwrap();
        let a = photon_statistics(&scatter(&vac, &BunchingSpectrum::unmodulated(), &m, 1e-8).unwrap());
        let b = photon_statistics(
            &scatter(&vac, &spec(C64::new(0.5, 0.1), C64::new(0.2, 0.0)), &m, 1e-8).unwrap(),
        );
        for (x, y) in a.iter().zip(b.iter()) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn trace_budget_enforced() {
        let g = C64::new(2.0, 0.0);
        let m = displacement_matrix(g, 6).unwrap();
        let r = scatter(&DensityMatrix::vacuum(6).unwrap(), &BunchingSpectrum::unmodulated(), &m, 1e-8);
        assert!(matches!(r, Err(Error::TraceBudget { .. })));
        let m2 = displacement_matrix(g, 7).unwrap();
        let r = scatter(&DensityMatrix::vacuum(6).unwrap(), &BunchingSpectrum::unmodulated(), &m2, 1e-8);
        assert_eq!(r, Err(Error::CutoffMismatch(6, 7)));
    }

    #[test]
    fn perturbative_guard_and_identity() {
        let rho = coherent_density(C64::new(0.3, 0.2), 20).unwrap();
        let s = spec(C64::new(0.4, 0.1), C64::new(0.1, 0.0));
        let same = perturbative_update(&rho, &CouplingSpec::new(C64::new(0.0, 0.0)), &s).unwrap();
        assert_eq!(same, rho);
        assert!(matches!(
            perturbative_update(&rho, &CouplingSpec::new(C64::new(0.0, 0.31)), &s),
            Err(Error::CouplingTooLarge(_))
        ));
    }

    #[test]
    fn perturbative_first_coherence() {
        let g = C64::new(0.0, 0.1);
        let s = spec(C64::new(0.45, -0.2), C64::new(0.1, 0.05));
        let out = perturbative_update(&DensityMatrix::vacuum(10).unwrap(), &CouplingSpec::new(g), &s)
            .unwrap();
        let want = (-g.norm_sqr()).exp() * g.conj() * s.get(-1);
        assert!((out[(0, 1)] - want).norm() < 2.0 * g.norm().powi(3));
    }

    #[test]
    fn physical_coupling() {
        let p = CouplingPhysical {
            a0_eff: 1e-12,
            k0: 2.6e12,
            length: 1e-5,
            gamma: 1.39,
            v0: 2.08e8,
        };
        let c = CouplingSpec::from_physical(p).unwrap();
        assert_eq!(c.g.re, 0.0);
        let mut bad = c;
        bad.g *= 1.0 + 1e-9;
        assert!(bad.validate().is_err());
    }
}
