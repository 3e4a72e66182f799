//! The subcommands. Each reads a resolved [`RunConfig`], writes its files
//! into an [`OutDir`] and returns a JSON summary.

use std::f64::consts::{FRAC_PI_2, PI, SQRT_2, TAU};

use qews_core::beam::{
    bose_einstein_diagonal, expected_photon_correlated, expected_photon_general, rotate_event,
    run_event, BuildupTrajectory, EnsembleAccumulator,
};
use qews_core::classical::{
    beam_emission, mode_energy, qed_coupling, qed_coupling_magnitude, spectral_energy,
    spontaneous_photons_per_electron,
};
use qews_core::fock::{
    displacement_matrix, g2_zero, mean_photon, photon_statistics, validate, Tolerances,
};
use qews_core::interaction::{scatter, spontaneous_single};
use qews_core::phase_space::{
    moments, offset_closed, variance_closed_beam, variance_closed_single, wigner_from_rows,
    wigner_row, WignerKernel,
};
use qews_core::qew::{
    bunching_analytic, bunching_numeric, bunching_spectrum, default_profile_grid,
    density_profile_approx, density_profile_exact, harmonic_amplitude, integrate,
    microbunch_phase, momentum_amplitudes, tallest_crest, wrap_phase, KGrid,
};
use qews_core::{
    BeamMode, BeamSpec, BuildupStep, CouplingSpec, DensityMatrix, EnsembleReport, Picture,
    QewParams, QuadratureMoments, WignerGrid, WignerGridSpec, C64,
};
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::config::RunConfig;
use crate::error::CliError;
use crate::output::{density_json, metadata, wigner_json, wigner_table, Cell, OutDir, Table};

/// Worker pool for the parallel parts; results never depend on its size.
pub struct Context {
    pool: rayon::ThreadPool,
}

impl Context {
    pub fn new(jobs: usize) -> Result<Self, CliError> {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build()
            .map_err(|e| CliError::Config(format!("cannot start {jobs} workers: {e}")))?;
        Ok(Self { pool })
    }
}

/// The fully resolved config, as recorded in output metadata.
pub fn params_value(cfg: &RunConfig) -> Result<Value, CliError> {
    let r = cfg.resolved()?;
    Ok(serde_json::to_value(r).expect("serializable config"))
}

fn moments_json(m: &QuadratureMoments) -> Value {
    json!({
        "q": m.q, "p": m.p, "dq2": m.dq2, "dp2": m.dp2, "dc2": m.dc2, "dr2": m.dr2,
        "offset": m.offset(), "polar_angle": m.polar_angle(),
    })
}

fn diagnostics_json(rho: &DensityMatrix) -> Value {
    let d = validate(rho, &Tolerances::default());
    json!({
        "hermiticity_defect": d.hermiticity_defect,
        "trace": d.trace,
        "trace_deficit": d.trace_deficit,
        "min_eigenvalue": d.min_eigenvalue,
        "clean": d.is_clean(),
    })
}

/// Wigner grid of `rho` per the config, rows computed on the pool.
pub fn wigner_grid(
    ctx: &Context,
    cfg: &RunConfig,
    rho: &DensityMatrix,
) -> Result<WignerGrid, CliError> {
    let spec = match cfg.wigner.half_width {
        Some(h) => WignerGridSpec::square(h, cfg.wigner.points),
        None => {
            let mut s = WignerGridSpec::for_state(rho);
            s.nq = cfg.wigner.points;
            s.np = cfg.wigner.points;
            s
        }
    };
    spec.validate()?;
    let kernel = WignerKernel::new(rho);
    let rows: Vec<Vec<f64>> = ctx.pool.install(|| {
        (0..spec.nq)
            .into_par_iter()
            .map(|i| wigner_row(&kernel, &spec, i))
            .collect()
    });
    Ok(wigner_from_rows(rho, spec, rows)?)
}

fn write_wigner(
    ctx: &Context,
    cfg: &RunConfig,
    out: &mut OutDir,
    rho: &DensityMatrix,
    meta: &Value,
) -> Result<Value, CliError> {
    let grid = wigner_grid(ctx, cfg, rho)?;
    out.write_table("wigner.csv", &wigner_table(&grid))?;
    out.write("wigner.json", &wigner_json(&grid, meta))?;
    let gm = grid.moments();
    Ok(json!({
        "integral": grid.integral(),
        "min": grid.min_value(),
        "moments": moments_json(&gm),
        "warnings": grid.warnings.iter().map(|w| format!("{w:?}")).collect::<Vec<_>>(),
    }))
}

fn statistics_table(rho: &DensityMatrix, reference: impl Fn(usize) -> f64, col: &str) -> Table {
    let mut t = Table::new(&["n", "p", col]);
    for (n, p) in photon_statistics(rho).into_iter().enumerate() {
        t.push(vec![n.into(), p.into(), reference(n).into()]);
    }
    t
}

fn poisson(mu: f64, n: usize) -> f64 {
    if mu == 0.0 {
        return if n == 0 { 1.0 } else { 0.0 };
    }
    let ln = -mu + n as f64 * mu.ln() - qews_core::special::ln_factorial(n);
    ln.exp()
}

/// State after one electron leaves vacuum, with the spectrum used.
pub fn single_state(
    cfg: &RunConfig,
) -> Result<(DensityMatrix, qews_core::BunchingSpectrum, CouplingSpec), CliError> {
    let params = cfg.qew_params()?;
    let coupling = cfg.coupling_spec()?;
    let cutoff = cfg.single_cutoff()?;
    let spec = bunching_spectrum(
        &params,
        cfg.single_r_max()?,
        Picture::Interaction {
            arrival_phase: cfg.single.arrival_phase,
        },
    )?;
    let m = displacement_matrix(coupling.g, cutoff)?;
    let vac = DensityMatrix::vacuum(cutoff)?;
    let rho = scatter(&vac, &spec, &m, cfg.trace_budget)?;
    Ok((rho, spec, coupling))
}

pub fn cmd_single(ctx: &Context, cfg: &RunConfig, out: &mut OutDir) -> Result<Value, CliError> {
    let params_v = params_value(cfg)?;
    let meta = metadata(&params_v, cfg.seed, "density_matrix");
    let (rho, spec, coupling) = single_state(cfg)?;
    let g = coupling.g;
    let closed = spontaneous_single(&spec, &coupling, rho.cutoff())?;
    let mu = g.norm_sqr();
    out.write("state.json", &density_json(&rho, &meta))?;
    out.write_table("photon_statistics.csv", &statistics_table(&rho, |n| poisson(mu, n), "poisson"))?;

    let m = moments(&rho);
    let (b1, b2) = (spec.get(1).norm(), spec.get(2).norm());
    let phi_l = cfg.single.arrival_phase - cfg.qew_params()?.phi_0;
    let (cq, cp, _, _) = variance_closed_beam(1, g, b1, b2, &[phi_l]);
    let mut summary = json!({
        "command": "single",
        "cutoff": rho.cutoff(),
        "mean_photon": mean_photon(&rho),
        "expected_mean_photon": mu,
        "g2": g2_zero(&rho).ok(),
        "closed_form_max_diff": rho.max_abs_diff(&closed),
        "b1": [spec.get(1).re, spec.get(1).im],
        "b2": [spec.get(2).re, spec.get(2).im],
        "moments": moments_json(&m),
        "closed_form_variances": {"dq2": cq, "dp2": cp},
        "diagnostics": diagnostics_json(&rho),
    });

    if cfg.single.phi_0_sweep > 0 {
        let t = phi_0_sweep(cfg, cfg.single.phi_0_sweep)?;
        out.write_table("variances.csv", &t)?;
    }
    if cfg.wigner.enabled {
        summary["wigner"] = write_wigner(ctx, cfg, out, &rho, &meta)?;
    }
    Ok(summary)
}

/// Quadrature variances of single-electron emission over `φ₀ ∈ [0, 2π)`,
/// next to the closed form.
pub fn phi_0_sweep(cfg: &RunConfig, points: usize) -> Result<Table, CliError> {
    let mut t = Table::new(&["phi_0", "dq2", "dp2", "dq2_closed", "dp2_closed"]);
    for k in 0..points {
        let phi0 = TAU * k as f64 / points as f64;
        let mut c = cfg.clone();
        c.qew.phi_0 = phi0;
        let (rho, spec, coupling) = single_state(&c)?;
        let m = moments(&rho);
        // interaction picture, envelope arriving at t = 0
        let phase = phi0 + FRAC_PI_2 - c.single.arrival_phase;
        let (q, p) =
            variance_closed_single(coupling.g, spec.get(1).norm(), spec.get(2).norm(), phase);
        t.push(vec![phi0.into(), m.dq2.into(), m.dp2.into(), q.into(), p.into()]);
    }
    Ok(t)
}

fn step_row(s: &BuildupStep) -> Vec<Cell> {
    vec![
        s.j.into(),
        s.mean_photon.into(),
        s.dq2.into(),
        s.dp2.into(),
        s.dc2().into(),
        s.dr2().into(),
        s.trace_deficit.into(),
    ]
}

pub fn cmd_buildup(ctx: &Context, cfg: &RunConfig, out: &mut OutDir) -> Result<Value, CliError> {
    let params_v = params_value(cfg)?;
    let meta = metadata(&params_v, cfg.seed, "density_matrix");
    let beam = cfg.beam_spec()?;
    let coupling = cfg.coupling_spec()?;
    let cutoff = cfg.beam_cutoff()?;
    let (rho, traj) = run_event(&beam, &coupling, cutoff, cfg.trace_budget, beam.seed, 0)?;
    let g = coupling.g;
    let base = beam.base_spectrum()?;
    let b1: Vec<C64> = traj.phases.iter().map(|&p| base.rotated(p).get(1)).collect();
    let b1_abs = base.get(1).norm();
    let b2_abs = base.get(2).norm();

    let mut t = Table::new(&[
        "j", "mean_photon", "dq2", "dp2", "dc2", "dr2", "trace_deficit", "expected_general", "expected_correlated", "expected_linear",
    ]);
    for s in &traj.steps {
        let mut row = step_row(s);
        row.push(expected_photon_general(&b1[..s.j], g).into());
        row.push(expected_photon_correlated(s.j, g.norm(), b1_abs).into());
        row.push((s.j as f64 * g.norm_sqr()).into());
        t.push(row);
    }
    out.write_table("trajectory.csv", &t)?;
    out.write("state.json", &density_json(&rho, &meta))?;
    let n_e = beam.n_e;
    out.write_table(
        "photon_statistics.csv",
        &statistics_table(&rho, |n| bose_einstein_diagonal(n_e, g.norm(), n), "bose_einstein"),
    )?;

    let m = moments(&rho);
    let (cq, cp, cc, cr) = variance_closed_beam(n_e, g, b1_abs, b2_abs, &traj.phases);
    let mut summary = json!({
        "command": "buildup",
        "cutoff": cutoff,
        "n_e": n_e,
        "mean_photon": mean_photon(&rho),
        "expected_general": expected_photon_general(&b1, g),
        "expected_correlated": expected_photon_correlated(n_e, g.norm(), b1_abs),
        "expected_linear": n_e as f64 * g.norm_sqr(),
        "g2": g2_zero(&rho).ok(),
        "moments": moments_json(&m),
        "closed_form": {
            "dq2": cq, "dp2": cp, "dc2": cc, "dr2": cr,
            "offset": offset_closed(n_e, g, b1_abs),
        },
        "diagnostics": diagnostics_json(&rho),
    });
    if cfg.wigner.enabled {
        summary["wigner"] = write_wigner(ctx, cfg, out, &rho, &meta)?;
    }
    Ok(summary)
}

/// Events `0..events` on the pool, merged in index order.
pub fn parallel_ensemble(
    ctx: &Context,
    beam: &BeamSpec,
    coupling: &CouplingSpec,
    cutoff: usize,
    trace_budget: f64,
    events: usize,
    master_seed: u64,
) -> Result<EnsembleReport, CliError> {
    if events < 1 {
        return Err(CliError::Config("ensemble.events must be at least 1".into()));
    }
    beam.validate()?;
    let mut acc = EnsembleAccumulator::new(cutoff, beam.n_e)?;
    if beam.mode.is_rotational() {
        // one build-up; every event is a phase-space rotation of it
        let mut zero = *beam;
        if !matches!(beam.mode, BeamMode::Unmodulated) {
            zero.mode = BeamMode::Correlated { phi_l: 0.0 };
        }
        let (s0, t0) = run_event(&zero, coupling, cutoff, trace_budget, master_seed, 0)?;
        for k in 0..events as u64 {
            let (s, t) = rotate_event(beam, &s0, &t0, master_seed, k);
            acc.push(k, &s, &t)?;
        }
    } else {
        let results: Vec<qews_core::Result<(DensityMatrix, BuildupTrajectory)>> =
            ctx.pool.install(|| {
                (0..events as u64)
                    .into_par_iter()
                    .map(|k| run_event(beam, coupling, cutoff, trace_budget, master_seed, k))
                    .collect()
            });
        for (k, r) in results.into_iter().enumerate() {
            let (s, t) = r?;
            acc.push(k as u64, &s, &t)?;
        }
    }
    Ok(acc.finish()?)
}

pub fn cmd_ensemble(ctx: &Context, cfg: &RunConfig, out: &mut OutDir) -> Result<Value, CliError> {
    let params_v = params_value(cfg)?;
    let meta = metadata(&params_v, cfg.seed, "density_matrix");
    let beam = cfg.beam_spec()?;
    let coupling = cfg.coupling_spec()?;
    let cutoff = cfg.beam_cutoff()?;
    let events = cfg.ensemble.events;
    let rep = parallel_ensemble(ctx, &beam, &coupling, cutoff, cfg.trace_budget, events, cfg.seed)?;
    let g = coupling.g;
    let b1_abs = match beam.mode {
        BeamMode::Unmodulated => 0.0,
        _ => harmonic_amplitude(&beam.template, 1).abs(),
    };

    let mut ev = Table::new(&[
        "event", "phi_l", "mean_photon", "q", "p", "dq2", "dp2", "dc2", "dr2", "trace_deficit",
    ]);
    for e in &rep.per_event {
        let s = &e.last;
        ev.push(vec![
            e.index.into(),
            e.phi_l.into(),
            s.mean_photon.into(),
            (SQRT_2 * s.a.re).into(),
            (SQRT_2 * s.a.im).into(),
            s.dq2.into(),
            s.dp2.into(),
            s.dc2().into(),
            s.dr2().into(),
            s.trace_deficit.into(),
        ]);
    }
    out.write_table("events.csv", &ev)?;

    let mut mt = Table::new(&["j", "mean_photon", "stderr", "mean_dc2", "mean_dr2", "expected_correlated", "expected_linear"]);
    for c in &rep.mean_curve {
        mt.push(vec![
            c.j.into(),
            c.mean_photon.into(),
            c.stderr.into(),
            c.mean_dc2.into(),
            c.mean_dr2.into(),
            expected_photon_correlated(c.j, g.norm(), b1_abs).into(),
            (c.j as f64 * g.norm_sqr()).into(),
        ]);
    }
    out.write_table("mean_trajectory.csv", &mt)?;
    out.write("mean_state.json", &density_json(&rep.mean_state, &meta))?;

    let last = rep.mean_curve.last().expect("n_e >= 1");
    let m = moments(&rep.mean_state);
    let mut summary = json!({
        "command": "ensemble",
        "cutoff": cutoff,
        "events": rep.events,
        "n_e": beam.n_e,
        "mean_photon": last.mean_photon,
        "stderr": last.stderr,
        "expected_linear": beam.n_e as f64 * g.norm_sqr(),
        "mean_state_moments": moments_json(&m),
        "diagnostics": diagnostics_json(&rep.mean_state),
    });
    if cfg.wigner.enabled {
        summary["wigner"] = write_wigner(ctx, cfg, out, &rep.mean_state, &meta)?;
    }
    Ok(summary)
}

/// Exact and harmonic-sum density profiles of one wavepacket.
#[derive(Debug, Clone)]
pub struct ProfileReport {
    pub xi: Vec<f64>,
    pub exact: Vec<f64>,
    pub approx: Vec<f64>,
    /// `‖exact − approx‖₂ / ‖exact‖₂` over `|ξ| ≤ 5` envelope widths.
    pub l2_relative: f64,
    /// Crest of the exact profile nearest the envelope centre.
    pub crest: Option<f64>,
    pub predicted_crest: f64,
}

pub fn profile_comparison(params: &QewParams, grid: KGrid) -> Result<ProfileReport, CliError> {
    let amps = momentum_amplitudes(params, grid)?;
    let xi = default_profile_grid(params);
    let exact = density_profile_exact(&amps, &xi)?;
    let approx = density_profile_approx(params, &xi);
    let w = 5.0 * params.drifted_width();
    let (mut xs, mut d2, mut e2) = (Vec::new(), Vec::new(), Vec::new());
    for i in 0..xi.len() {
        if xi[i].abs() <= w {
            xs.push(xi[i]);
            d2.push((exact[i] - approx[i]).powi(2));
            e2.push(exact[i].powi(2));
        }
    }
    let l2_relative = (integrate(&xs, &d2) / integrate(&xs, &e2)).sqrt();
    // the tallest crest within one period of the envelope centre
    let fine: Vec<f64> = (0..=4000).map(|i| -PI + TAU * i as f64 / 4000.0).collect();
    let fine_exact = density_profile_exact(&amps, &fine)?;
    let crest = tallest_crest(&fine, &fine_exact).map(wrap_phase);
    Ok(ProfileReport {
        xi,
        exact,
        approx,
        l2_relative,
        crest,
        predicted_crest: microbunch_phase(params),
    })
}

pub fn cmd_bunching(_ctx: &Context, cfg: &RunConfig, out: &mut OutDir) -> Result<Value, CliError> {
    let params = cfg.qew_params()?;
    let grid = KGrid {
        samples_per_recoil: cfg.bunching.samples_per_recoil,
        half_span: None,
    };
    let taus = if cfg.bunching.t_d_ratios.is_empty() {
        vec![params.t_d_ratio]
    } else {
        cfg.bunching.t_d_ratios.clone()
    };
    let mut t = Table::new(&[
        "n", "t_d_ratio", "analytic_re", "analytic_im", "numeric_re", "numeric_im", "abs_error",
    ]);
    let mut worst = 0.0f64;
    for &tau in &taus {
        let mut p = params;
        if tau != p.t_d_ratio {
            // a swept drift no longer matches the lab-frame block
            p.physical = None;
            p.t_d_ratio = tau;
        }
        let amps = momentum_amplitudes(&p, grid)?;
        for n in 0..=cfg.bunching.harmonics as i64 {
            let a = bunching_analytic(&p, n);
            let b = bunching_numeric(&amps, n)?;
            let err = (a - b).norm();
            worst = worst.max(err / a.norm().max(1e-3));
            t.push(vec![n.into(), tau.into(), a.re.into(), a.im.into(), b.re.into(), b.im.into(), err.into()]);
        }
    }
    out.write_table("bunching.csv", &t)?;
    let mut summary = json!({
        "command": "bunching",
        "max_relative_error": worst,
        "harmonics": cfg.bunching.harmonics,
    });
    if cfg.bunching.profile {
        let r = profile_comparison(&params, grid)?;
        let mut pt = Table::new(&["xi", "exact", "approx"]);
        for i in 0..r.xi.len() {
            pt.push(vec![r.xi[i].into(), r.exact[i].into(), r.approx[i].into()]);
        }
        out.write_table("profile.csv", &pt)?;
        summary["profile"] = json!({
            "l2_relative": r.l2_relative,
            "crest": r.crest,
            "predicted_crest": r.predicted_crest,
        });
    }
    Ok(summary)
}

pub fn cmd_classical(_ctx: &Context, cfg: &RunConfig, out: &mut OutDir) -> Result<Value, CliError> {
    let mode = cfg.classical.mode()?;
    let classical = spontaneous_photons_per_electron(&mode);
    let quantum = qed_coupling_magnitude(&mode);
    let rel = if quantum == 0.0 {
        classical.abs()
    } else {
        (classical - quantum).abs() / quantum
    };
    let g = qed_coupling(&mode);
    let mut t = Table::new(&["n_e", "m_b", "spontaneous", "superradiant", "total"]);
    for &n in &cfg.classical.n_e {
        for &mb in &cfg.classical.m_b {
            let (sp, sr) = beam_emission(n, C64::new(mb, 0.0), &mode);
            t.push(vec![n.into(), mb.into(), sp.into(), sr.into(), (sp + sr).into()]);
        }
    }
    out.write_table("scaling.csv", &t)?;
    let params_v = params_value(cfg)?;
    let report = json!({
        "command": "classical",
        "spectral_energy": spectral_energy(&mode),
        "mode_energy": mode_energy(&mode),
        "photons_per_electron_classical": classical,
        "photons_per_electron_quantum": quantum,
        "g": [g.re, g.im],
        "relative_difference": rel,
        "identical": rel <= 1e-12,
        "metadata": metadata(&params_v, cfg.seed, "classical"),
    });
    out.write_json("classical.json", &report)?;
    Ok(report)
}

pub fn cmd_wigner(ctx: &Context, cfg: &RunConfig, out: &mut OutDir) -> Result<Value, CliError> {
    let rho = match &cfg.wigner.input {
        Some(path) => crate::output::read_density(std::path::Path::new(path))?,
        None => single_state(cfg)?.0,
    };
    let params_v = params_value(cfg)?;
    let meta = metadata(&params_v, cfg.seed, "wigner");
    let w = write_wigner(ctx, cfg, out, &rho, &meta)?;
    Ok(json!({
        "command": "wigner",
        "operator_moments": moments_json(&moments(&rho)),
        "wigner": w,
    }))
}
