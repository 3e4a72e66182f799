use proptest::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_core::SeedableRng;
use rand_distr::{Distribution, Uniform};
use qews_core::beam::run_buildup_with_spectra;
use qews_core::classical::{
    classical_bunching, qed_coupling_magnitude, spontaneous_photons_per_electron,
    ClassicalModeSpec,
};
use qews_core::fock::{
    coherent_amplitudes, coherent_density, displacement_element, displacement_matrix, g2_zero,
    unitary_block,
};
use qews_core::interaction::spontaneous_single;
use qews_core::phase_space::{moments, variance_closed_single};
use qews_core::qew::{bunching_spectrum, Picture};
use qews_core::{BunchingSpectrum, CouplingSpec, DensityMatrix, QewParams, C64};

fn arb_g(max: f64) -> impl Strategy<Value = C64> {
    (0.0f64..max, -3.2f64..3.2).prop_map(|(r, t)| C64::from_polar(r, t))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn displacement_symmetry_and_unitarity(g in arb_g(2.0), extra in 0usize..40) {
        let cutoff = (4.0 * g.norm_sqr()).ceil() as usize + 30 + extra;
        let m = displacement_matrix(g, cutoff).unwrap();
        for nf in 0..=cutoff {
            for ni in 0..=cutoff {
                let sign = if (nf + ni) % 2 == 0 { 1.0 } else { -1.0 };
                let d = m.get(ni, nf) - m.get(nf, ni).conj() * sign;
                prop_assert!(d.norm() < 1e-12);
            }
        }
        let inner = cutoff - (4.0 * g.norm_sqr() + 10.0).ceil() as usize;
        let k = unitary_block(g, cutoff).min(inner);
        prop_assert!(m.unitarity_defect(k) < 1e-8);
        let col = coherent_amplitudes(g, cutoff);
        for n in 0..=cutoff {
            prop_assert!((m.get(n, 0) - col[n]).norm() < 1e-13);
        }
    }

    #[test]
    fn recurrence_matches_finite_sum(g in arb_g(1.5), nf in 0usize..25, ni in 0usize..25) {
        let m = displacement_matrix(g, 25).unwrap();
        let want = displacement_element(g, nf, ni);
        prop_assert!((m.get(nf, ni) - want).norm() < 1e-11);
    }

    #[test]
    fn coherent_state_is_displaced_vacuum(g in arb_g(2.0)) {
        let cutoff = (4.0 * g.norm_sqr()).ceil() as usize + 30;
        let m = displacement_matrix(g, cutoff).unwrap();
        let rho = coherent_density(g, cutoff).unwrap();
        for a in 0..=cutoff {
            for b in 0..=cutoff {
                let want = m.get(a, 0) * m.get(b, 0).conj();
                prop_assert!((rho[(a, b)] - want).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn coherent_g2_is_one(r in 0.1f64..2.0, t in -3.2f64..3.2) {
        let g = C64::from_polar(r, t);
        let rho = coherent_density(g, 60).unwrap();
        prop_assert!((g2_zero(&rho).unwrap() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn variances_oscillate_in_opposite_phase(
        gl in 0.1f64..1.5,
        td in 0.0f64..0.5,
        phi in -3.2f64..3.2,
        gi in 0.05f64..1.0,
    ) {
        let p = QewParams::new(gl, 0.05, td, phi).unwrap();
        let spec = bunching_spectrum(&p, 8, Picture::Interaction { arrival_phase: 0.0 }).unwrap();
        let g = C64::new(0.0, gi);
        let rho = spontaneous_single(&spec, &CouplingSpec::new(g), 50).unwrap();
        let m = moments(&rho);
        let (b1, b2) = (spec.get(1).norm(), spec.get(2).norm());
        prop_assert!(m.dq2 > 0.5 && m.dp2 > 0.5);
        let sum = m.dq2 + m.dp2;
        let want = 1.0 + 2.0 * g.norm_sqr() * (1.0 - b1 * b1);
        prop_assert!((sum - want).abs() < 1e-10);
        let (q, pp) = variance_closed_single(g, b1, b2, 0.0);
        prop_assert!((q + pp - want).abs() < 1e-12);
    }
}

fn arb_mode() -> impl Strategy<Value = ClassicalModeSpec> {
    (
        0.05f64..2.0,
        1.05f64..4.0,
        1e-6f64..1e-3,
        1e-5f64..1e-2,
        1e-14f64..1e-10,
        1e14f64..1e16,
    )
        .prop_map(|(eta_q, n_eff, length, circumference, mode_area, omega)| ClassicalModeSpec {
            eta_q,
            n_eff,
            length,
            circumference,
            mode_area,
            omega,
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn classical_and_quantum_photon_numbers_agree(mode in arb_mode()) {
        mode.validate().unwrap();
        let a = spontaneous_photons_per_electron(&mode);
        let b = qed_coupling_magnitude(&mode);
        prop_assert!((a - b).abs() <= 1e-12 * b);
    }

    #[test]
    fn classical_bunching_bounded(
        omega in 0.1f64..10.0,
        times in prop::collection::vec(-100.0f64..100.0, 1..60),
    ) {
        let m = classical_bunching(omega, &times).unwrap();
        prop_assert!(m.norm_sqr() <= 1.0 + 1e-12);
    }
}

#[test]
fn reordering_identical_electrons_leaves_state_unchanged() {
    let p = QewParams::new(0.43, 0.02, 0.2, 0.0).unwrap();
    let base = bunching_spectrum(&p, 6, Picture::Interaction { arrival_phase: 0.0 }).unwrap();
    let a = base.rotated(0.4);
    let b = BunchingSpectrum::unmodulated();
    let c = CouplingSpec::new(C64::new(0.0, 0.12));
    let order1 = vec![a.clone(), a.clone(), b.clone(), a.clone(), b.clone()];
    let order2 = vec![b.clone(), a.clone(), b.clone(), a.clone(), a.clone()];
    let (r1, _) = run_buildup_with_spectra(&order1, &c, 30, 1e-8).unwrap();
    let (r2, _) = run_buildup_with_spectra(&order2, &c, 30, 1e-8).unwrap();
    // same channel repeated: only multiplicities matter for the mean photon number
    assert!((qews_core::fock::mean_photon(&r1) - qews_core::fock::mean_photon(&r2)).abs() < 1e-10);
    let same1 = vec![a.clone(); 6];
    let (s1, _) = run_buildup_with_spectra(&same1, &c, 30, 1e-8).unwrap();
    let (s2, _) = run_buildup_with_spectra(&same1, &c, 30, 1e-8).unwrap();
    assert_eq!(s1, s2);
}

#[test]
fn random_arrival_times_average_to_inverse_count() {
    // |M_b|² for uniformly random phases has mean 1/N_e
    let n_e = 20usize;
    let trials = 4000usize;
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let unit = Uniform::new(0.0, 1.0);
    let mut next = || unit.sample(&mut rng);
    let samples: Vec<f64> = (0..trials)
        .map(|_| {
            let t: Vec<f64> = (0..n_e).map(|_| next()).collect();
            classical_bunching(std::f64::consts::TAU, &t).unwrap().norm_sqr()
        })
        .collect();
    let mean = samples.iter().sum::<f64>() / trials as f64;
    let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (trials - 1) as f64;
    let se = (var / trials as f64).sqrt();
    assert!((mean - 1.0 / n_e as f64).abs() < 3.0 * se, "{mean} ± {se}");
}

#[test]
fn vacuum_diagnostics_clean() {
    let rho = DensityMatrix::vacuum(10).unwrap();
    let d = qews_core::fock::validate(&rho, &Default::default());
    assert!(d.is_clean());
}
