//! The nine acceptance criteria, each as a list of named checks.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};
use sigmalab::fit::{line_fit, loglog_fit};
use sigmalab::geometry::{
    area_quadrature, build_manifold, sigma_quadrature, Hypersurface, ManifoldModel, RevolutionProfile, SigmaComponent,
};
use sigmalab::lrcontrol::{
    admissibility_check, duality_check, elliptic_evolve, heat_evolve, miller_check, min_norm_control, CostFit, LrPlan,
    SpectralModel,
};
use sigmalab::raydyn::{base_distance, char_lift, flow, FlowOptions, RayError};
use sigmalab::spectral::radial::{radial_eigensolve, richardson_order};
use sigmalab::spectral::{
    extend_with_parity, lower_bound_sweep, orthonormality_defect, sphere_modes, torus_mode, torus_modes, Bc0,
    BoundKind, Parity,
};

use crate::config::{
    revolution_default, GramianConfig, KernelConfig, RevolutionConfig, SphereConfig, TgccConfig,
};
use crate::experiments::{self, gramian_fits, gramian_rows, Outcome};
use crate::report::Check;
use crate::LabError;

/// Floor for the union-Σ eigenspace minima of the ⟨λ⟩-scaled Cauchy form:
/// 0.4 times the value 1/(2π) of the constant mode.
pub const UNION_FLOOR: f64 = 0.4 / (2.0 * PI);

/// Horizons for the cost-versus-1/T fit of the control synthesis.
pub const CONTROL_HORIZONS: [f64; 7] = [1.0, 0.7, 0.5, 0.35, 0.25, 0.15, 0.1];

#[derive(Clone, Debug, Serialize)]
pub struct CriterionOutcome {
    pub id: u8,
    pub title: &'static str,
    pub pass: bool,
    pub result: Value,
    pub checks: Vec<Check>,
}

impl CriterionOutcome {
    fn new(id: u8, result: Value, checks: Vec<Check>) -> Self {
        CriterionOutcome {
            id,
            title: title(id),
            pass: checks.iter().all(|c| c.pass),
            result,
            checks,
        }
    }

    /// One line per criterion, then one indented line per failed check.
    pub fn summary(&self) -> String {
        let mut s = format!("{} criterion {}: {}", if self.pass { "PASS" } else { "FAIL" }, self.id, self.title);
        for c in self.checks.iter().filter(|c| !c.pass) {
            s.push_str(&format!(
                "\n    failed {}: measured {:e}, {:?} {:e} (tol {:e})",
                c.name, c.measured, c.relation, c.expected, c.tolerance
            ));
        }
        s
    }
}

pub fn title(id: u8) -> &'static str {
    match id {
        1 => "sphere counterexample rates",
        2 => "Gamma-identity chain",
        3 => "revolution counterexample",
        4 => "TGCC checker and flow invariants",
        5 => "Cauchy-data lower-bound sweeps",
        6 => "transmutation kernel",
        7 => "Gramian cost structure",
        8 => "null-control synthesis",
        9 => "property suites",
        _ => "unknown",
    }
}

pub fn run_criterion(id: u8, seed: u64) -> Result<CriterionOutcome, LabError> {
    match id {
        1 => criterion_1(),
        2 => criterion_2(),
        3 => criterion_3(),
        4 => criterion_4(seed),
        5 => criterion_5(),
        6 => criterion_6(),
        7 => criterion_7(),
        8 => criterion_8(seed),
        9 => criterion_9(seed),
        other => Err(LabError::Config(format!("unknown criterion {other}"))),
    }
}

fn pick(o: &Outcome, names: &[&str]) -> Vec<Check> {
    o.checks.iter().filter(|c| names.contains(&c.name.as_str())).cloned().collect()
}

pub fn criterion_1() -> Result<CriterionOutcome, LabError> {
    let o = experiments::counterexample_sphere(&SphereConfig::default())?;
    let checks = pick(
        &o,
        &["amplitude_l2", "amplitude_slope", "scaled_ratio_slope", "scaled_ratio_times_lambda_quarter_tail"],
    );
    Ok(CriterionOutcome::new(1, o.result, checks))
}

pub fn criterion_2() -> Result<CriterionOutcome, LabError> {
    let o = experiments::counterexample_sphere(&SphereConfig::default())?;
    let checks = pick(
        &o,
        &["gamma_reflection_residual", "gamma_product_residual", "quarter_ratio_stability_100_200"],
    );
    Ok(CriterionOutcome::new(2, o.result["gamma"].clone(), checks))
}

pub fn criterion_3() -> Result<CriterionOutcome, LabError> {
    let o = experiments::counterexample_revolution(&RevolutionConfig::default())?;
    Ok(CriterionOutcome::new(3, o.result, o.checks))
}

fn tgcc_case(name: &str, manifold: &str, sigma: &[&str], horizon: f64, nx: usize, ndir: usize) -> Result<(Vec<Check>, Value), LabError> {
    let cfg = TgccConfig {
        manifold: sigmalab::geometry::ManifoldDescriptor {
            kind: manifold.into(),
            profile: None,
        },
        sigma: sigmalab::geometry::SigmaDescriptor::Many(sigma.iter().map(|s| s.to_string()).collect()),
        horizon,
        nx,
        ndir,
        ..TgccConfig::default()
    };
    let o = experiments::tgcc(&cfg)?;
    let checks = o.checks.into_iter().map(|c| c.prefixed(name)).collect();
    Ok((checks, o.result))
}

struct FlowStats {
    rays: usize,
    aborted: usize,
    drift: f64,
    homogeneity: f64,
    reversibility: f64,
    periodicity: f64,
}

fn random_ray<R: Rng>(m: &ManifoldModel, rng: &mut R) -> Result<sigmalab::raydyn::PhasePoint, RayError> {
    let x = match m.kind {
        sigmalab::geometry::ManifoldKind::Torus2 => [rng.random_range(-PI..PI), rng.random_range(-PI..PI)],
        sigmalab::geometry::ManifoldKind::Sphere2 => [rng.random_range(0.0..2.0 * PI), rng.random_range(0.2..PI - 0.2)],
        sigmalab::geometry::ManifoldKind::Revolution => [rng.random_range(-3.0..3.0), rng.random_range(0.0..2.0 * PI)],
    };
    let e = m.orthonormal_frame(x)?;
    let a: f64 = rng.random_range(0.0..2.0 * PI);
    let (s, c) = a.sin_cos();
    let v = [c * e[0][0] + s * e[1][0], c * e[0][1] + s * e[1][1]];
    let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
    char_lift(m, x, v, sign)
}

fn flow_invariants(seed: u64) -> Result<FlowStats, LabError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let models = [
        (ManifoldModel::torus(), 400usize),
        (ManifoldModel::sphere(), 300),
        (ManifoldModel::revolution(RevolutionProfile::canonical()), 300),
    ];
    let opts = FlowOptions::default();
    let mut st = FlowStats {
        rays: 0,
        aborted: 0,
        drift: 0.0,
        homogeneity: 0.0,
        reversibility: 0.0,
        periodicity: 0.0,
    };
    let lambda = 2.5;
    for (m, n) in &models {
        for _ in 0..*n {
            let p = random_ray(m, &mut rng)?;
            st.rays += 1;
            let s = 2.0 * PI;
            let tr = match flow(m, None, &p, s, &opts) {
                Ok(t) => t,
                Err(RayError::GlancingBoundaryAbort { .. }) => {
                    st.aborted += 1;
                    continue;
                }
                Err(e) => return Err(e.into()),
            };
            st.drift = st.drift.max(tr.max_drift).max(tr.end.defect(m)?);
            let scaled = flow(m, None, &p.scaled(lambda), s / lambda, &opts)?;
            st.homogeneity = st.homogeneity.max(base_distance(m, scaled.end.x, tr.end.x));
            if m.kind != sigmalab::geometry::ManifoldKind::Revolution {
                let back = flow(m, None, &tr.end, -s, &opts)?;
                st.reversibility = st.reversibility.max(base_distance(m, back.end.x, p.x));
            }
            if m.kind == sigmalab::geometry::ManifoldKind::Sphere2 {
                st.periodicity = st.periodicity.max(base_distance(m, tr.end.x, p.x));
            }
        }
    }
    Ok(st)
}

pub fn criterion_4(seed: u64) -> Result<CriterionOutcome, LabError> {
    let mut checks = Vec::new();
    let mut result = serde_json::Map::new();
    let cases: [(&str, &str, &[&str], f64, usize, usize); 3] = [
        ("sphere_equator", "sphere2", &["equator"], 20.0, 36, 32),
        ("torus_single", "torus2", &["x0"], 20.0, 64, 32),
        ("torus_union", "torus2", &["x0", "y0"], 2.0 * PI * 2f64.sqrt() + 0.1, 64, 128),
    ];
    for (name, m, s, t, nx, nd) in cases {
        let (c, r) = tgcc_case(name, m, s, t, nx, nd)?;
        checks.extend(c);
        result.insert(name.into(), r);
    }
    let st = flow_invariants(seed)?;
    checks.push(Check::at_most("flow.constraint_drift", st.drift, 1e-9));
    checks.push(Check::at_most("flow.homogeneity", st.homogeneity, 1e-8));
    checks.push(Check::at_most("flow.reversibility", st.reversibility, 1e-8));
    checks.push(Check::at_most("flow.sphere_periodicity", st.periodicity, 1e-6));
    result.insert(
        "flow".into(),
        json!({
            "rays": st.rays, "aborted": st.aborted, "constraint_drift": st.drift,
            "homogeneity": st.homogeneity, "reversibility": st.reversibility, "sphere_periodicity": st.periodicity,
        }),
    );
    Ok(CriterionOutcome::new(4, Value::Object(result), checks))
}

pub fn criterion_5() -> Result<CriterionOutcome, LabError> {
    let torus = ManifoldModel::torus();
    let mut checks = Vec::new();

    let union = Hypersurface::torus_union();
    let q = sigma_quadrature(&torus, &union, 256)?;
    let modes = torus_modes(50.0)?;
    let sweep = lower_bound_sweep(&modes, &q, BoundKind::Unique)?;
    let (mut umin, mut uarg) = (f64::INFINITY, 0.0);
    for r in &sweep.rows {
        if r.min_form < umin {
            umin = r.min_form;
            uarg = r.lambda;
        }
    }
    checks.push(Check::at_least("torus_union.min_form", umin, UNION_FLOOR));

    let single = Hypersurface::single(SigmaComponent::TorusCircleX0);
    let qs = sigma_quadrature(&torus, &single, 256)?;
    let (mut lam, mut form) = (Vec::new(), Vec::new());
    for n in 5..=50i64 {
        let pair = [torus_mode(1, n), torus_mode(-1, n)];
        let t = lower_bound_sweep(&pair, &qs, BoundKind::Unique)?;
        lam.push(t.rows[0].lambda);
        form.push(t.rows[0].min_form);
    }
    let fam = loglog_fit(&lam, &form);
    checks.push(Check::within("torus_single.family_slope", fam.slope, -2.0, 0.1));

    let rev = build_manifold(&revolution_default())?;
    let rows = experiments::revolution_family(&rev, &RevolutionConfig::default())?;
    let comb: Vec<f64> = rows.iter().map(|r| r.cauchy.trace_norm + r.cauchy.normal_norm).collect();
    let cmin = comb.iter().cloned().fold(f64::INFINITY, f64::min);
    let lams: Vec<f64> = rows.iter().map(|r| r.cauchy.lambda).collect();
    let lf = line_fit(&lams, &comb.iter().map(|v| v.ln()).collect::<Vec<_>>());
    checks.push(Check::at_least("revolution.combined_positive", cmin, f64::MIN_POSITIVE));
    checks.push(Check::at_most("revolution.log_combined_slope", lf.slope, 0.0));

    let result = json!({
        "torus_union": { "eigenspaces": sweep.rows.len(), "min_form": umin, "argmin_lambda": uarg, "floor": UNION_FLOOR },
        "torus_single_family": { "n": [5, 50], "fit": { "slope": fam.slope, "r2": fam.r2 } },
        "revolution": { "modes": rows.len(), "min_combined": cmin, "log_fit_vs_lambda": { "slope": lf.slope, "r2": lf.r2 } },
    });
    Ok(CriterionOutcome::new(5, result, checks))
}

pub fn criterion_6() -> Result<CriterionOutcome, LabError> {
    let o = experiments::kernel(&KernelConfig::default())?;
    Ok(CriterionOutcome::new(6, o.result["report"].clone(), o.checks))
}

pub fn criterion_7() -> Result<CriterionOutcome, LabError> {
    let cfg = GramianConfig::default();
    let m = build_manifold(&cfg.manifold)?;
    let model = experiments::spectral_model(&m, &cfg.sigma.build()?, 32.0)?;
    let mut rows = gramian_rows(&model, &[4.0, 8.0, 16.0, 32.0], &[1.0])?;
    rows.extend(gramian_rows(&model, &[8.0], &[0.5, 0.2, 0.1])?);
    let (mut checks, fits) = gramian_fits(&rows, 0.9);
    let sym = rows.iter().map(|r| r.symmetry_defect).fold(0.0, f64::max);
    let psd = rows.iter().map(|r| r.psd_ratio).fold(f64::INFINITY, f64::min);
    checks.push(Check::at_most("symmetry_defect", sym, 1e-12));
    checks.push(Check::at_least("psd_ratio", psd, -1e-10));
    let table: Vec<Value> = rows
        .iter()
        .map(|r| json!({ "lambda": r.cutoff, "T": r.horizon, "dim": r.dim, "ln_kappa": r.ln_kappa, "precision": r.working_precision }))
        .collect();
    Ok(CriterionOutcome::new(7, json!({ "fits": fits, "rows": table }), checks))
}

pub fn criterion_8(seed: u64) -> Result<CriterionOutcome, LabError> {
    let model = SpectralModel::torus(&Hypersurface::torus_union(), 32.0)?;
    let mut rows = Vec::new();
    let (mut worst_terminal, mut worst_annihilation): (f64, f64) = (0.0, 0.0);
    for &t in &CONTROL_HORIZONS {
        let plan = LrPlan::new(&model, t, 2.0, 32.0)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut cost: f64 = 0.0;
        let mut terminal: f64 = 0.0;
        for _ in 0..10 {
            let v0 = model.random_h_minus1(&mut rng);
            let r = plan.run(&model, &v0, 1e-9)?;
            cost = cost.max(r.cost);
            terminal = terminal.max(r.terminal_norm);
            for s in &r.stages {
                worst_annihilation = worst_annihilation.max(s.annihilation);
            }
        }
        worst_terminal = worst_terminal.max(terminal);
        rows.push((t, cost, terminal));
    }
    let x: Vec<f64> = rows.iter().map(|r| 1.0 / r.0).collect();
    let y: Vec<f64> = rows.iter().map(|r| r.1.ln()).collect();
    let f = line_fit(&x, &y);
    let checks = vec![
        Check::at_most("terminal_norm", worst_terminal, 1e-6),
        Check::at_most("stage_annihilation", worst_annihilation, 1e-10),
        Check::at_least("log_cost_slope", f.slope, f64::MIN_POSITIVE),
        Check::at_least("log_cost_r2", f.r2, 0.9),
    ];
    let result = json!({
        "work_cutoff": 32.0,
        "lambda0": 2.0,
        "seeds": 10,
        "rows": rows.iter().map(|(t, c, n)| json!({ "T": t, "max_cost": c, "ln_cost": c.ln(), "max_terminal_norm": n })).collect::<Vec<_>>(),
        "fit": { "slope": f.slope, "intercept": f.intercept, "r2": f.r2 },
    });
    Ok(CriterionOutcome::new(8, result, checks))
}

pub fn criterion_9(seed: u64) -> Result<CriterionOutcome, LabError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut checks = Vec::new();
    let union = Hypersurface::torus_union();

    let small = SpectralModel::torus(&union, 6.0)?;
    let d = duality_check(&small, 1.0, 100, &mut rng)?;
    checks.push(Check::at_most("duality.max_rel_error", d.max_rel_error, 1e-8));

    let tor50 = SpectralModel::torus(&union, 50.0)?;
    let at = admissibility_check(&tor50, 1.0)?;
    checks.push(Check::at_most("admissibility.torus_max_ratio", at.max_ratio, f64::MAX));
    checks.push(Check::at_most("admissibility.torus_monotone_from", at.monotone_from, 10.0));
    let sph50 = SpectralModel::sphere(50.0)?;
    let asp = admissibility_check(&sph50, 1.0)?;
    checks.push(Check::at_most("admissibility.sphere_max_ratio", asp.max_ratio, f64::MAX));

    let m8 = SpectralModel::torus(&union, 8.0)?;
    let fit = CostFit::from_gramians(&m8, &[2.0, 4.0, 8.0], &[0.5, 1.0, 2.0])?;
    let mil = miller_check(&m8, 0.5, 1.0, 100, fit, &mut rng)?;
    checks.push(Check::count_zero("miller.conclusion_violations", mil.conclusion_violations));
    checks.push(Check::count_zero("miller.implication_violations", mil.implication_violations));

    // Orthonormality and eigen-residuals of closed-form modes.
    let tm = torus_modes(4.0)?;
    let sm = sphere_modes(6)?;
    let td = orthonormality_defect(&tm, &area_quadrature(&ManifoldModel::torus(), 32));
    let sd = orthonormality_defect(&sm, &area_quadrature(&ManifoldModel::sphere(), 32));
    checks.push(Check::at_most("modes.torus_orthonormality", td, 1e-8));
    checks.push(Check::at_most("modes.sphere_orthonormality", sd, 1e-8));
    let res = tm.iter().chain(&sm).map(|u| u.eigen_residual()).fold(0.0, f64::max);
    checks.push(Check::at_most("modes.closed_form_residual", res, 1e-8));

    // Radial solver invariants at k = 40.
    let prof = RevolutionProfile::canonical();
    let window = (0.2, 0.5);
    let mut rad_orth: f64 = 0.0;
    let mut ext_ratio: f64 = 0.0;
    let mut parity_err: f64 = 0.0;
    for bc in [Bc0::Neumann, Bc0::Dirichlet] {
        let prob = radial_eigensolve(&prof, 40, bc, 4000, window)?;
        let (off, diag) = prob.orthogonality_defect();
        rad_orth = rad_orth.max(off).max(diag);
        let pair = prob.pairs.last().ok_or(sigmalab::spectral::SpectralError::WindowEmpty)?;
        let mode = extend_with_parity(&prob, pair.index, bc.parity())?;
        ext_ratio = ext_ratio.max(mode.eigen_residual() / pair.residual.max(f64::MIN_POSITIVE));
        let psi = mode.radial_samples().unwrap_or(&[]);
        let n = psi.len() / 2;
        let sgn = if bc.parity() == Parity::Even { 1.0 } else { -1.0 };
        for i in 0..=n {
            parity_err = parity_err.max((psi[n + i] - sgn * psi[n - i]).abs());
        }
    }
    checks.push(Check::at_most("radial.orthogonality", rad_orth, 1e-8));
    checks.push(Check::at_most("radial.extended_residual_ratio", ext_ratio, 5.0));
    checks.push(Check::at_most("radial.parity_exactness", parity_err, 0.0));
    let (order, _) = richardson_order(&prof, 40, Bc0::Neumann, 1000, window)?;
    checks.push(Check::within("radial.richardson_order", order, 2.0, 0.2));

    // Semigroup, elliptic limits and cost homogeneity on the small model.
    let v: Vec<f64> = (0..small.len()).map(|_| rng.random_range(-1.0..1.0)).collect();
    let a = heat_evolve(&small, &heat_evolve(&small, &v, 0.3)?, 0.2)?;
    let b = heat_evolve(&small, &v, 0.5)?;
    let semi = a.iter().zip(&b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    checks.push(Check::at_most("heat.semigroup", semi, 1e-14));
    let zero = vec![0.0; small.len()];
    let e0 = elliptic_evolve(&small, &v, &zero, 0.0)?;
    let e0err = e0.iter().zip(&v).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    checks.push(Check::at_most("elliptic.s0_identity", e0err, 0.0));
    let mut unit = zero.clone();
    unit[0] = 1.0;
    let e2 = elliptic_evolve(&small, &zero, &unit, 2.0)?;
    checks.push(Check::within("elliptic.zero_mode_limit", e2[0], 2.0, 1e-15));
    let v0 = small.random_h_minus1(&mut rng);
    let idx = small.truncation(4.0);
    let mut w0 = vec![0.0; small.len()];
    for &j in &idx {
        w0[j] = v0[j];
    }
    let c1 = min_norm_control(&small, 4.0, &w0, 1.0)?;
    let w2: Vec<f64> = w0.iter().map(|x| 2.0 * x).collect();
    let c2 = min_norm_control(&small, 4.0, &w2, 1.0)?;
    checks.push(Check::within("control.cost_homogeneity", c2.cost / c1.cost, 2.0, 1e-12));

    let result = json!({
        "duality": { "trials": d.trials, "max_rel_error": d.max_rel_error },
        "admissibility": {
            "torus": { "max_ratio": at.max_ratio, "monotone_from": at.monotone_from, "modes": at.rows.len() },
            "sphere": { "max_ratio": asp.max_ratio, "monotone_from": asp.monotone_from, "modes": asp.rows.len() },
        },
        "miller": mil,
        "modes": { "torus_orthonormality": td, "sphere_orthonormality": sd, "max_residual": res },
        "radial": { "orthogonality": rad_orth, "extended_residual_ratio": ext_ratio, "richardson_order": order },
    });
    Ok(CriterionOutcome::new(9, result, checks))
}
