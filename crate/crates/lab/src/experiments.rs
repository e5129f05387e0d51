//! One function per experiment kind. Each returns a JSON summary, its checks and
//! the tables to emit; nothing here touches the filesystem.

use std::path::PathBuf;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};
use sigmalab::fit::{line_fit, loglog_fit, LineFit};
use sigmalab::geometry::{
    build_manifold, fermi_chart, sigma_quadrature, GeometryError, Hypersurface, ManifoldKind, ManifoldModel,
    SigmaComponent,
};
use sigmalab::lrcontrol::{
    apply_control, kernel_verify, observability_gramian, LrError, LrPlan, ObservabilityGramian, SpectralModel,
    StageMode, TransmutationKernel,
};
use sigmalab::raydyn::{check_tgcc, score_ray, TgccReport, TgccSampling, Verdict, PASS_FLOOR};
use sigmalab::spectral::radial::{agmon_rate_fit, radial_eigensolve, radial_eigensolve_h, weyl_count, window_onset};
use sigmalab::spectral::sphere::{gamma_chain_check, lambda_l, sphere_equator_cauchy};
use sigmalab::spectral::{
    cauchy_data, extend_with_parity, lower_bound_sweep, sphere_modes, torus_modes, Bc0, BoundSweepTable, CauchyData,
    EigenMode, Parity, SpectralError,
};

use crate::config::{
    ControlConfig, ExpectedVerdict, GramianConfig, KernelConfig, RevolutionConfig, SpectraConfig, SphereConfig,
    TgccConfig,
};
use crate::report::Check;
use crate::table::Table;
use crate::LabError;

pub struct Outcome {
    pub result: Value,
    pub checks: Vec<Check>,
    pub tables: Vec<(PathBuf, Table)>,
}

fn fit_json(f: &LineFit) -> Value {
    json!({ "slope": f.slope, "intercept": f.intercept, "r2": f.r2, "n": f.n })
}

fn verdict_name(v: &Verdict) -> &'static str {
    match v {
        Verdict::PassAtResolution => "PassAtResolution",
        Verdict::FailWitness { .. } => "FailWitness",
    }
}

fn per_ray_table(rep: &TgccReport) -> Table {
    let mut t = Table::new(
        "tgcc-rays",
        1,
        &[
            "base_index", "dir_index", "sign", "x1", "x2", "v1", "v2", "best_margin", "inconclusive", "crossings",
            "first_transversal_time",
        ],
    );
    for r in &rep.rays {
        let s = &r.seed;
        t.push(vec![
            s.base_index.into(),
            s.dir_index.into(),
            s.sign.into(),
            s.x[0].into(),
            s.x[1].into(),
            s.v[0].into(),
            s.v[1].into(),
            r.best.into(),
            r.inconclusive.into(),
            r.crossings.into(),
            r.first_transversal_time.unwrap_or(f64::NAN).into(),
        ]);
    }
    t
}

pub fn tgcc(c: &TgccConfig) -> Result<Outcome, LabError> {
    let m = build_manifold(&c.manifold)?;
    let sigma = c.sigma.build()?;
    m.check_sigma(&sigma)?;
    let sampling = TgccSampling {
        nx: c.nx,
        ndir: c.ndir,
        step: c.step,
    };
    let rep = check_tgcc(&m, &sigma, c.horizon, sampling)?;
    let expect = c.expect.unwrap_or_else(|| ExpectedVerdict::for_pair(&c.manifold, &c.sigma));
    let passed = rep.passed();
    let mut checks = vec![Check::holds(
        "verdict_matches_expectation",
        passed == (expect == ExpectedVerdict::Pass),
    )];
    let worst = rep.worst.map(|i| rep.rays[i].seed);
    match &rep.verdict {
        Verdict::PassAtResolution => {
            if expect == ExpectedVerdict::Pass {
                checks.push(Check::at_least("eps_star", rep.eps_star, c.eps_floor));
            }
        }
        Verdict::FailWitness { seed, .. } => {
            // The witness must reproduce when flowed again on its own.
            let chart = fermi_chart(&m, &sigma)?;
            let (best, _) = score_ray(&m, &chart, seed, c.horizon, c.step)?;
            checks.push(Check::at_most("witness_reflow_margin", best, PASS_FLOOR));
        }
    }
    let witness = match &rep.verdict {
        Verdict::FailWitness { seed, point } => json!({ "seed": seed, "point": point }),
        Verdict::PassAtResolution => Value::Null,
    };
    let per_ray = c.per_ray.clone().unwrap_or_else(|| crate::config::sidecar(&c.out, "rays.csv"));
    let result = json!({
        "verdict": verdict_name(&rep.verdict),
        "expected": expect,
        "eps_star": rep.eps_star,
        "inconclusive_count": rep.inconclusive_count,
        "rays": rep.rays.len(),
        "sampling": rep.sampling,
        "worst_ray": worst.map(|s| json!({ "x": s.x, "v": s.v, "sign": s.sign })),
        "witness": witness,
        "per_ray_csv": per_ray,
    });
    Ok(Outcome {
        result,
        checks,
        tables: vec![(per_ray, per_ray_table(&rep))],
    })
}

/// Modes with λ ≤ cutoff. Revolution modes start at angular index 2.
pub fn modes_below(m: &ManifoldModel, cutoff: f64, grid_n: usize) -> Result<Vec<EigenMode>, LabError> {
    Ok(match m.kind {
        ManifoldKind::Torus2 => torus_modes(cutoff)?,
        ManifoldKind::Sphere2 => {
            let mut lmax = 0usize;
            while lambda_l(lmax + 1) <= cutoff {
                lmax += 1;
            }
            sphere_modes(lmax)?
        }
        ManifoldKind::Revolution => {
            let p = m.profile();
            let mut out = Vec::new();
            let mut k = 2u32;
            loop {
                let emax = (cutoff / k as f64).powi(2);
                let mut any = false;
                for bc in [Bc0::Neumann, Bc0::Dirichlet] {
                    let prob = radial_eigensolve(p, k, bc, grid_n, (0.0, emax))?;
                    for pair in &prob.pairs {
                        any = true;
                        out.push(extend_with_parity(&prob, pair.index, bc.parity())?);
                    }
                }
                if !any {
                    break;
                }
                k += 1;
            }
            out.sort_by(|a, b| a.lambda.total_cmp(&b.lambda));
            out
        }
    })
}

fn sweep_table(t: &BoundSweepTable) -> Table {
    let mut out = Table::new("spectra-sweep", 1, &["lambda", "dim", "min_form", "bound", "label"]);
    for r in &t.rows {
        out.push(vec![r.lambda.into(), r.dim.into(), r.min_form.into(), r.bound.name().into(), r.label.text().into()]);
    }
    out
}

pub fn spectra(c: &SpectraConfig) -> Result<Outcome, LabError> {
    let m = build_manifold(&c.manifold)?;
    let sigma = c.sigma.build()?;
    m.check_sigma(&sigma)?;
    let nodes = c.nodes.unwrap_or(64);
    let quad = sigma_quadrature(&m, &sigma, nodes)?;
    let modes = modes_below(&m, c.cutoff, c.grid_n)?;
    let sweep = lower_bound_sweep(&modes, &quad, c.bound)?;
    let (mut min_form, mut argmin) = (f64::INFINITY, f64::NAN);
    for r in &sweep.rows {
        if r.min_form < min_form {
            min_form = r.min_form;
            argmin = r.lambda;
        }
    }
    let checks = vec![Check::at_least("min_form_positive", min_form, f64::MIN_POSITIVE)];
    let result = json!({
        "modes": modes.len(),
        "eigenspaces": sweep.rows.len(),
        "min_form": min_form,
        "argmin_lambda": argmin,
        "table": c.out,
    });
    Ok(Outcome {
        result,
        checks,
        tables: vec![(c.out.clone(), sweep_table(&sweep))],
    })
}

pub fn counterexample_sphere(c: &SphereConfig) -> Result<Outcome, LabError> {
    let mut table = Table::new("sphere-counterexample", 1, &["l", "lambda", "amplitude", "scaled_ratio"]);
    let (mut ls, mut amps, mut ratios, mut bound) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
    for l in c.lmin..=c.lmax {
        let (amp, ratio) = sphere_equator_cauchy(l);
        let lam = lambda_l(l);
        table.push(vec![l.into(), lam.into(), amp.into(), ratio.into()]);
        ls.push(l as f64);
        amps.push(amp);
        ratios.push(ratio);
        bound.push(ratio * lam.powf(0.25));
    }
    let amp_fit = loglog_fit(&ls, &amps);
    let ratio_fit = loglog_fit(&ls, &ratios);
    // Smallest tested l from which ratio ≤ λ^{-1/4} holds to the end.
    let l0 = (0..bound.len())
        .rev()
        .take_while(|&i| bound[i] <= 1.0)
        .last()
        .map(|i| ls[i] as usize);
    let tail_max = match l0 {
        Some(l) => bound[l - c.lmin..].iter().cloned().fold(0.0, f64::max),
        None => *bound.last().unwrap(),
    };

    let gl: Vec<_> = (1..=c.gamma_lmax).map(gamma_chain_check).collect();
    let refl = gl.iter().map(|g| g.reflection).fold(0.0, f64::max);
    let prod = gl.iter().map(|g| g.product).fold(0.0, f64::max);
    let mut checks = vec![
        Check::within("amplitude_l2", sphere_equator_cauchy(2).0, 3.0 * (5.0 / (24.0 * std::f64::consts::PI)).sqrt(), 1e-12),
        Check::within("amplitude_slope", amp_fit.slope, 0.75, c.slope_tol),
        Check::within("scaled_ratio_slope", ratio_fit.slope, -0.25, c.slope_tol),
        Check::at_most("scaled_ratio_times_lambda_quarter_tail", tail_max, 1.0),
        Check::at_most("gamma_reflection_residual", refl, 1e-10),
        Check::at_most("gamma_product_residual", prod, 1e-10),
    ];
    let mut stab = Value::Null;
    if c.gamma_lmax >= 200 {
        let d = (gl[199].ratio / gl[99].ratio - 1.0).abs();
        checks.push(Check::at_most("quarter_ratio_stability_100_200", d, 0.01));
        stab = json!(d);
    }
    let result = json!({
        "amplitude_fit": fit_json(&amp_fit),
        "scaled_ratio_fit": fit_json(&ratio_fit),
        "l0": l0,
        "bound_constant_at_lmax": bound.last(),
        "bound_constant_max": bound.iter().cloned().fold(0.0, f64::max),
        "gamma": {
            "lmax": c.gamma_lmax,
            "max_reflection_residual": refl,
            "max_product_residual": prod,
            "ratio_100": gl.get(99).map(|g| g.ratio),
            "ratio_200": gl.get(199).map(|g| g.ratio),
            "relative_change_100_200": stab,
        },
        "table": c.out,
    });
    Ok(Outcome {
        result,
        checks,
        tables: vec![(c.out.clone(), table)],
    })
}

#[derive(Clone, Debug)]
pub struct RevolutionRow {
    pub k: u32,
    pub parity: Parity,
    pub index: usize,
    pub energy: f64,
    pub cauchy: CauchyData,
    pub solver_residual: f64,
}

impl RevolutionRow {
    /// The trace that the parity does not kill: ‖u_e|_Σ‖ or ‖∂_ν u_o|_Σ‖.
    pub fn complementary(&self) -> f64 {
        match self.parity {
            Parity::Even => self.cauchy.trace_norm,
            Parity::Odd => self.cauchy.normal_norm,
        }
    }

    /// The trace that the parity kills.
    pub fn killed(&self) -> f64 {
        match self.parity {
            Parity::Even => self.cauchy.normal_norm,
            Parity::Odd => self.cauchy.trace_norm,
        }
    }
}

/// Top window mode of each parity for every k in the family.
pub fn revolution_family(m: &ManifoldModel, c: &RevolutionConfig) -> Result<Vec<RevolutionRow>, LabError> {
    let p = m.profile();
    let quad = sigma_quadrature(m, &Hypersurface::single(SigmaComponent::RevolutionWaist), 64)?;
    let mut rows = Vec::new();
    for k in (c.kmin..=c.kmax).step_by(c.k_step.max(1) as usize) {
        for parity in [Parity::Even, Parity::Odd] {
            let prob = radial_eigensolve_h(p, 1.0 / k as f64, parity.bc0(), c.grid_n, c.window)?;
            let pair = prob.pairs.last().ok_or(SpectralError::WindowEmpty)?;
            let mode = extend_with_parity(&prob, pair.index, parity)?;
            rows.push(RevolutionRow {
                k,
                parity,
                index: pair.index,
                energy: pair.energy,
                cauchy: cauchy_data(&mode, &quad)?,
                solver_residual: pair.residual,
            });
        }
    }
    Ok(rows)
}

fn parity_tag(p: Parity) -> &'static str {
    match p {
        Parity::Even => "e",
        Parity::Odd => "o",
    }
}

pub fn counterexample_revolution(c: &RevolutionConfig) -> Result<Outcome, LabError> {
    let m = build_manifold(&c.manifold)?;
    if m.kind != ManifoldKind::Revolution {
        return Err(GeometryError::UnsupportedKind(c.manifold.kind.clone()).into());
    }
    let p = m.profile();
    let onset = window_onset(p, c.kmax, c.grid_n, c.window);
    let h = 1.0 / c.weyl_k as f64;
    let weyl: Vec<(Parity, usize, f64)> = [Parity::Even, Parity::Odd]
        .iter()
        .map(|&par| weyl_count(p, h, par.bc0(), c.grid_n, c.window).map(|(n, pred)| (par, n, pred)))
        .collect::<Result<_, _>>()?;
    let rows = revolution_family(&m, c)?;

    let mut table = Table::new(
        "revolution-counterexample",
        1,
        &["k", "parity", "index", "energy", "lambda", "trace_norm", "normal_norm", "scaled_normal_norm", "solver_residual"],
    );
    for r in &rows {
        table.push(vec![
            r.k.into(),
            parity_tag(r.parity).into(),
            r.index.into(),
            r.energy.into(),
            r.cauchy.lambda.into(),
            r.cauchy.trace_norm.into(),
            r.cauchy.normal_norm.into(),
            r.cauchy.scaled_normal_norm.into(),
            r.solver_residual.into(),
        ]);
    }

    let mut checks = vec![Check::at_most(
        "window_onset_k0",
        onset.map(|k| k as f64).unwrap_or(f64::INFINITY),
        c.kmin as f64,
    )];
    for (par, n, pred) in &weyl {
        checks.push(Check::at_most(
            format!("weyl_relative_error_{}", parity_tag(*par)),
            (*n as f64 / pred - 1.0).abs(),
            0.2,
        ));
    }
    let mut fits = serde_json::Map::new();
    let mut agmon = serde_json::Map::new();
    for par in [Parity::Even, Parity::Odd] {
        let fam: Vec<&RevolutionRow> = rows.iter().filter(|r| r.parity == par).collect();
        let tag = parity_tag(par);
        let killed = fam.iter().map(|r| r.killed()).fold(0.0, f64::max);
        checks.push(Check::at_most(format!("killed_trace_{tag}"), killed, 0.0));
        let comp: Vec<f64> = fam.iter().map(|r| r.complementary()).collect();
        let min_comp = comp.iter().cloned().fold(f64::INFINITY, f64::min);
        checks.push(Check::at_least(format!("complementary_trace_positive_{tag}"), min_comp, f64::MIN_POSITIVE));
        let ks: Vec<f64> = fam.iter().map(|r| r.k as f64).collect();
        let logs: Vec<f64> = comp.iter().map(|v| v.ln()).collect();
        let f = line_fit(&ks, &logs);
        checks.push(Check::at_most(format!("complementary_log_slope_{tag}"), f.slope, 0.0));
        fits.insert(tag.into(), fit_json(&f));

        let aks: Vec<u32> = (c.kmin..=c.kmax)
            .step_by(c.k_step.max(1) as usize)
            .filter(|&k| k >= c.agmon_kmin)
            .collect();
        let a = agmon_rate_fit(p, &aks, c.eps, par, c.grid_n, c.window)?;
        checks.push(Check::at_least(format!("agmon_rate_positive_{tag}"), a.c_fit, f64::MIN_POSITIVE));
        checks.push(Check::at_most(format!("agmon_relative_error_{tag}"), a.relative_error(), 0.15));
        agmon.insert(
            tag.into(),
            json!({ "c_fit": a.c_fit, "prediction": a.prediction, "relative_error": a.relative_error(), "r2": a.r2, "ks": a.ks }),
        );
    }
    let result = json!({
        "window": c.window,
        "window_onset_k0": onset,
        "weyl": weyl.iter().map(|(par, n, pred)| json!({ "parity": parity_tag(*par), "h": h, "count": n, "prediction": pred })).collect::<Vec<_>>(),
        "complementary_log_fit": fits,
        "agmon": agmon,
        "table": c.out,
    });
    Ok(Outcome {
        result,
        checks,
        tables: vec![(c.out.clone(), table)],
    })
}

pub fn kernel(c: &KernelConfig) -> Result<Outcome, LabError> {
    let alpha = c.alpha.unwrap_or(1.05 * c.half_width * c.half_width * (1.0 + 1.0 / c.delta));
    let k = TransmutationKernel::new(c.horizon, c.half_width, c.delta, alpha, c.n_max, c.tol)?;
    let r = kernel_verify(&k, c.grid)?;
    let checks = vec![
        Check::at_most("pde_residual", r.residual[0], 1e-5),
        Check::within("stencil_order", r.observed_order, 4.0, 0.5),
        Check::at_most("trace_at_s0", r.s0_trace, 0.0),
        Check::at_most("ds_trace_error", r.ds_trace_error, 1e-8),
        Check::count_zero("pointwise_bound_violations", r.bound_violations),
        Check::count_zero("derivative_bound_violations", r.derivative_violations),
        Check::at_most("odd_symmetry", r.odd_symmetry, 1e-12),
        Check::at_most("time_reflection", r.time_reflection, 1e-10),
        Check::at_most("endpoint_trace", r.endpoint_trace, 1e-300),
    ];
    Ok(Outcome {
        result: json!({ "kernel": k, "report": r }),
        checks,
        tables: Vec::new(),
    })
}

/// Finite heat model for a built-in (M, Σ) pair.
pub fn spectral_model(m: &ManifoldModel, sigma: &Hypersurface, cutoff: f64) -> Result<SpectralModel, LabError> {
    m.check_sigma(sigma)?;
    Ok(match m.kind {
        ManifoldKind::Torus2 => SpectralModel::torus(sigma, cutoff)?,
        ManifoldKind::Sphere2 => SpectralModel::sphere(cutoff)?,
        ManifoldKind::Revolution => {
            return Err(LrError::Unsupported("heat model on the surface of revolution".into()).into())
        }
    })
}

pub fn gramian_rows(model: &SpectralModel, lambdas: &[f64], horizons: &[f64]) -> Result<Vec<ObservabilityGramian>, LabError> {
    let mut out = Vec::new();
    for &t in horizons {
        for &l in lambdas {
            out.push(observability_gramian(model, l, t)?);
        }
    }
    Ok(out)
}

/// Affine fits of ln κ against λ (per T) and against 1/T (per λ), where
/// at least three points are available.
pub fn gramian_fits(rows: &[ObservabilityGramian], r2_min: f64) -> (Vec<Check>, Value) {
    let mut checks = Vec::new();
    let mut fits = Vec::new();
    let mut horizons: Vec<f64> = rows.iter().map(|r| r.horizon).collect();
    horizons.dedup();
    horizons.sort_by(f64::total_cmp);
    horizons.dedup();
    let mut lambdas: Vec<f64> = rows.iter().map(|r| r.cutoff).collect();
    lambdas.sort_by(f64::total_cmp);
    lambdas.dedup();
    for &t in &horizons {
        let sel: Vec<&ObservabilityGramian> = rows.iter().filter(|r| r.horizon == t).collect();
        if sel.len() >= 3 {
            let x: Vec<f64> = sel.iter().map(|r| r.cutoff).collect();
            let y: Vec<f64> = sel.iter().map(|r| r.ln_kappa).collect();
            let f = line_fit(&x, &y);
            checks.push(Check::at_least(format!("lambda_fit_r2_T{t}"), f.r2, r2_min));
            checks.push(Check::at_least(format!("lambda_fit_slope_T{t}"), f.slope, f64::MIN_POSITIVE));
            let mut sorted = sel.clone();
            sorted.sort_by(|a, b| a.cutoff.total_cmp(&b.cutoff));
            let rises = sorted.windows(2).filter(|w| w[1].ln_min_eig > w[0].ln_min_eig + 1e-9).count();
            checks.push(Check::count_zero(format!("min_eig_monotone_T{t}"), rises));
            fits.push(json!({ "variable": "lambda", "T": t, "fit": fit_json(&f) }));
        }
    }
    for &l in &lambdas {
        let sel: Vec<&ObservabilityGramian> = rows.iter().filter(|r| r.cutoff == l).collect();
        if sel.len() >= 3 {
            let x: Vec<f64> = sel.iter().map(|r| 1.0 / r.horizon).collect();
            let y: Vec<f64> = sel.iter().map(|r| r.ln_kappa).collect();
            let f = line_fit(&x, &y);
            checks.push(Check::at_least(format!("inverse_t_fit_r2_lambda{l}"), f.r2, r2_min));
            checks.push(Check::at_least(format!("inverse_t_fit_slope_lambda{l}"), f.slope, f64::MIN_POSITIVE));
            fits.push(json!({ "variable": "1/T", "lambda": l, "fit": fit_json(&f) }));
        }
    }
    (checks, Value::Array(fits))
}

pub fn gramian(c: &GramianConfig) -> Result<Outcome, LabError> {
    let m = build_manifold(&c.manifold)?;
    let sigma = c.sigma.build()?;
    let lmax = c.lambda_grid.iter().cloned().fold(0.0, f64::max);
    let model = spectral_model(&m, &sigma, lmax)?;
    let rows = gramian_rows(&model, &c.lambda_grid, &c.t_grid)?;
    let mut table = Table::new(
        "gramian",
        1,
        &[
            "lambda", "T", "dim", "ln_min_eig", "max_eig", "ln_kappa", "symmetry_defect", "psd_ratio", "beyond_double",
            "working_precision",
        ],
    );
    for r in &rows {
        table.push(vec![
            r.cutoff.into(),
            r.horizon.into(),
            r.dim.into(),
            r.ln_min_eig.into(),
            r.max_eig.into(),
            r.ln_kappa.into(),
            r.symmetry_defect.into(),
            r.psd_ratio.into(),
            r.beyond_double.into(),
            r.working_precision.into(),
        ]);
    }
    let (mut checks, fits) = gramian_fits(&rows, c.r2_min);
    let sym = rows.iter().map(|r| r.symmetry_defect).fold(0.0, f64::max);
    let psd = rows.iter().map(|r| r.psd_ratio).fold(f64::INFINITY, f64::min);
    checks.push(Check::at_most("symmetry_defect", sym, 1e-12));
    checks.push(Check::at_least("psd_ratio", psd, -1e-10));
    Ok(Outcome {
        result: json!({ "model_dim": model.len(), "fits": fits, "table": c.out }),
        checks,
        tables: vec![(c.out.clone(), table)],
    })
}

pub fn control(c: &ControlConfig) -> Result<Outcome, LabError> {
    let m = build_manifold(&c.manifold)?;
    let sigma = c.sigma.build()?;
    let model = spectral_model(&m, &sigma, c.work_cutoff)?;
    let plan = LrPlan::new(&model, c.horizon, c.lambda0, c.work_cutoff)?;
    let mut rng = ChaCha8Rng::seed_from_u64(c.seed);
    let mut grid: Vec<f64> = plan
        .schedule
        .entries
        .iter()
        .filter(|e| e.mode == StageMode::Control)
        .map(|e| e.end)
        .collect();
    grid.push(c.horizon);
    let mut samples = Vec::new();
    let (mut worst_terminal, mut worst_annihilation): (f64, f64) = (0.0, 0.0);
    for i in 0..c.samples {
        let v0 = model.random_h_minus1(&mut rng);
        let r = plan.run(&model, &v0, c.rho)?;
        worst_terminal = worst_terminal.max(r.terminal_norm);
        for s in &r.stages {
            worst_annihilation = worst_annihilation.max(s.annihilation);
        }
        let trajectory = apply_control(&model, &v0, &r, &grid)?;
        samples.push(json!({
            "sample": i,
            "v0_norm": model.sobolev_norm(&v0, -1.0),
            "cost": r.cost,
            "terminal_norm": r.terminal_norm,
            "stages": r.stages,
            "trajectory": grid.iter().zip(&trajectory).map(|(t, n)| json!({ "t": t, "norm": n })).collect::<Vec<_>>(),
            "pieces": r.pieces.iter().map(|p| json!({
                "start": p.start, "end": p.end, "cutoff": p.cutoff, "modes": p.modes, "coeffs": p.coeffs_f64(),
            })).collect::<Vec<_>>(),
        }));
    }
    let checks = vec![
        Check::at_most("terminal_norm", worst_terminal, c.terminal_tol),
        Check::at_most("stage_annihilation", worst_annihilation, c.annihilation_tol),
    ];
    let result = json!({
        "seed": c.seed,
        "model_dim": model.len(),
        "schedule": plan.schedule,
        "stage_precisions": plan.stage_operators().iter().map(|s| s.prec).collect::<Vec<_>>(),
        "samples": samples,
    });
    Ok(Outcome {
        result,
        checks,
        tables: Vec::new(),
    })
}
