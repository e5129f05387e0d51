//! Minimal-norm (HUM) controls and the dyadic Lebeau–Robbiano schedule.
//!
//! A control piece on [a, b] with cutoff λ and coefficients c_j (λ_j ≤ λ) is
//! f₀(s) = Σ c_j e^{−(b−s)λ_j²} u_j|_Σ, f₁(s) = −Σ c_j e^{−(b−s)λ_j²} ∂_ν u_j|_Σ.
//! Its effect on mode k is Σ_j c_j B_kj ∫ e^{−(b−s)λ_j² − (t−s)λ_k²} ds, in closed form.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rug::Float;
use serde::{Deserialize, Serialize};

use super::gramian::{GramianFactor, WeightCache};
use super::model::{ExactTrace, SpectralModel};
use super::{check_len, LrError};
use crate::mp::{GUARD_BITS, START_PREC};
use crate::quad::gauss_legendre;

/// Coefficients kept in extended precision: they can exceed the state by the
/// Gramian's full condition number, and their effect is a cancelling sum.
#[derive(Clone, Debug)]
pub struct ControlPiece {
    pub start: f64,
    pub end: f64,
    pub cutoff: f64,
    pub modes: Vec<usize>,
    coeffs: Vec<Float>,
}

impl ControlPiece {
    pub fn new(start: f64, end: f64, cutoff: f64, modes: Vec<usize>, coeffs: Vec<Float>) -> Result<Self, LrError> {
        if !(end > start) || start < 0.0 {
            return Err(LrError::InvalidArgument(format!("control interval [{start}, {end}]")));
        }
        if modes.len() != coeffs.len() {
            return Err(LrError::InvalidArgument("modes and coefficients differ in length".into()));
        }
        Ok(ControlPiece {
            start,
            end,
            cutoff,
            modes,
            coeffs,
        })
    }

    pub fn coeffs(&self) -> &[Float] {
        &self.coeffs
    }

    pub fn coeffs_f64(&self) -> Vec<f64> {
        self.coeffs.iter().map(|c| c.to_f64()).collect()
    }

    fn prec(&self) -> u32 {
        self.coeffs.iter().map(|c| c.prec()).max().unwrap_or(64)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum StageMode {
    Control,
    Dissipate,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScheduleEntry {
    pub start: f64,
    pub end: f64,
    pub cutoff: f64,
    pub mode: StageMode,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LrSchedule {
    pub entries: Vec<ScheduleEntry>,
}

impl LrSchedule {
    /// Stage k: [T(1−2^{−k}), T(1−2^{−k−1})), control on the first half at 2^k λ0.
    /// The last stage dissipates until T.
    pub fn dyadic(horizon: f64, lambda0: f64, work_cutoff: f64) -> Result<Self, LrError> {
        if !(horizon > 0.0) {
            return Err(LrError::NegativeTime(horizon));
        }
        if !(lambda0 > 0.0) || work_cutoff < 16.0 * lambda0 {
            return Err(LrError::InvalidArgument(format!(
                "need λ0 > 0 and working cutoff ≥ 16λ0 (λ0 = {lambda0}, cutoff = {work_cutoff})"
            )));
        }
        let mut entries = Vec::new();
        let mut t = 0.0;
        let mut k = 0;
        loop {
            let lam = lambda0 * 2f64.powi(k);
            let len = horizon * 0.5f64.powi(k + 1);
            let last = 2.0 * lam > work_cutoff * (1.0 + 1e-12);
            entries.push(ScheduleEntry {
                start: t,
                end: t + 0.5 * len,
                cutoff: lam,
                mode: StageMode::Control,
            });
            let end = if last { horizon } else { t + len };
            entries.push(ScheduleEntry {
                start: t + 0.5 * len,
                end,
                cutoff: lam,
                mode: StageMode::Dissipate,
            });
            if last {
                break;
            }
            t = end;
            k += 1;
        }
        Ok(LrSchedule { entries })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ControlStage {
    pub index: usize,
    pub cutoff: f64,
    pub control: (f64, f64),
    pub cost: f64,
    /// ‖P_λ v(b)‖_{H^{−1}} / ‖v0‖_{H^{−1}} right after the control half.
    pub annihilation: f64,
    pub norm_before: f64,
    pub norm_after: f64,
    pub precision: u32,
    pub ln_min_eig: f64,
    pub beyond_double: bool,
}

#[derive(Clone, Debug)]
pub struct ControlResult {
    pub model_dim: usize,
    pub horizon: f64,
    pub pieces: Vec<ControlPiece>,
    /// ‖(f₀, f₁)‖_{L²((0,T)×Σ)}.
    pub cost: f64,
    pub terminal: Vec<f64>,
    pub terminal_norm: f64,
    pub tolerance: f64,
    pub stages: Vec<ControlStage>,
}

fn mp_exp_neg(prec: u32, x: f64) -> Float {
    Float::with_val(prec, -x).exp()
}

fn h_minus1_norm(model: &SpectralModel, v: &[Float], only: Option<&[usize]>) -> f64 {
    let prec = v.first().map(|x| x.prec()).unwrap_or(64);
    let mut acc = Float::new(prec);
    let mut add = |k: usize| {
        let sq = Float::with_val(prec, v[k].square_ref());
        acc += sq / (1.0 + model.lambda2[k]);
    };
    match only {
        Some(idx) => idx.iter().for_each(|&k| add(k)),
        None => (0..v.len()).for_each(&mut add),
    }
    acc.sqrt().to_f64()
}

/// Control half of one stage: factored Gramian plus the precomputed kicks
/// K_kj = B_kj w(ℓ, λ_k²+λ_j²) onto every mode of the model.
pub struct StageOperator {
    pub factor: GramianFactor,
    pub prec: u32,
    kicks: Vec<Vec<(usize, Float)>>,
}

impl StageOperator {
    pub fn new(model: &SpectralModel, cutoff: f64, ell: f64) -> Result<Self, LrError> {
        Self::with_start_precision(model, cutoff, ell, START_PREC)
    }

    pub fn with_start_precision(model: &SpectralModel, cutoff: f64, ell: f64, start: u32) -> Result<Self, LrError> {
        let factor = GramianFactor::with_start_precision(model, cutoff, ell, start)?;
        let prec = factor.max_prec();
        let tr = ExactTrace::new(model, prec);
        let mut w = WeightCache::new(ell, prec);
        let mut inside = vec![false; model.len()];
        factor.idx.iter().for_each(|&j| inside[j] = true);
        let kicks = (0..model.len())
            .map(|k| {
                model
                    .trace_row(k)
                    .iter()
                    .filter(|(j, _)| inside[*j])
                    .map(|&(j, _)| (j, tr.entry(k, j) * w.get(model.lambda2[k] + model.lambda2[j])))
                    .collect()
            })
            .collect();
        Ok(StageOperator { factor, prec, kicks })
    }

    /// Drive P_λ v(a) to zero over [a, a+ℓ]; returns (coefficients on idx, cost², v(a+ℓ)).
    fn run(&self, model: &SpectralModel, state: &[Float]) -> (Vec<Float>, Float, Vec<Float>) {
        let p = self.prec;
        let ell = self.factor.ell;
        let n = model.len();
        let decay: Vec<Float> = model.lambda2.iter().map(|l2| mp_exp_neg(p, ell * l2)).collect();
        let mut r: Vec<Float> = (0..n).map(|_| Float::new(p)).collect();
        for &j in &self.factor.idx {
            r[j] = -Float::with_val(p, &decay[j] * &state[j]);
        }
        let c = self.factor.solve(&r, p);
        let mut cost2 = Float::new(p);
        for &j in &self.factor.idx {
            cost2 += Float::with_val(p, &c[j] * &r[j]);
        }
        let next: Vec<Float> = (0..n)
            .map(|k| {
                let mut acc = Float::with_val(p, &decay[k] * &state[k]);
                for (j, kj) in &self.kicks[k] {
                    acc += Float::with_val(p, kj * &c[*j]);
                }
                acc
            })
            .collect();
        let coeffs = self.factor.idx.iter().map(|&j| c[j].clone()).collect();
        (coeffs, cost2, next)
    }
}

/// HUM control on [0, T] driving the E_λ-supported v0 to zero on E_λ.
pub fn min_norm_control(model: &SpectralModel, cutoff: f64, v0: &[f64], horizon: f64) -> Result<ControlResult, LrError> {
    check_len(model, v0)?;
    if !(horizon > 0.0) {
        return Err(LrError::NegativeTime(horizon));
    }
    let l2 = cutoff * cutoff * (1.0 + 1e-12) + 1e-12;
    if v0.iter().zip(&model.lambda2).any(|(v, l)| *v != 0.0 && *l > l2) {
        return Err(LrError::InvalidArgument("v0 is not supported in E_λ".into()));
    }
    let op = StageOperator::new(model, cutoff, horizon)?;
    let state: Vec<Float> = v0.iter().map(|x| Float::with_val(op.prec, *x)).collect();
    let v0n = model.sobolev_norm(v0, -1.0);
    let (coeffs, cost2, next) = op.run(model, &state);
    let cost = cost2.to_f64().max(0.0).sqrt();
    let resid = h_minus1_norm(model, &next, Some(&op.factor.idx));
    let terminal: Vec<f64> = next.iter().map(|x| x.to_f64()).collect();
    let stage = stage_summary(0, &op, (0.0, horizon), cost, resid, v0n, v0n, &next, model);
    Ok(ControlResult {
        model_dim: model.len(),
        horizon,
        pieces: vec![ControlPiece::new(0.0, horizon, cutoff, op.factor.idx.clone(), coeffs)?],
        cost,
        terminal_norm: model.sobolev_norm(&terminal, -1.0),
        terminal,
        tolerance: 1e-10,
        stages: vec![stage],
    })
}

#[allow(clippy::too_many_arguments)]
fn stage_summary(
    index: usize,
    op: &StageOperator,
    control: (f64, f64),
    cost: f64,
    resid: f64,
    v0n: f64,
    before: f64,
    after: &[Float],
    model: &SpectralModel,
) -> ControlStage {
    let ln_min = op.factor.ln_min_eig();
    ControlStage {
        index,
        cutoff: op.factor.cutoff,
        control,
        cost,
        annihilation: if v0n > 0.0 { resid / v0n } else { resid },
        norm_before: before,
        norm_after: h_minus1_norm(model, after, None),
        precision: op.prec,
        ln_min_eig: ln_min,
        beyond_double: ln_min - op.factor.ln_max_eig() < (1e-13f64).ln(),
    }
}

/// Dyadic LR schedule with every stage Gramian factored once, reusable across initial states.
pub struct LrPlan {
    pub horizon: f64,
    pub schedule: LrSchedule,
    stages: Vec<StageOperator>,
}

impl LrPlan {
    pub fn new(model: &SpectralModel, horizon: f64, lambda0: f64, work_cutoff: f64) -> Result<Self, LrError> {
        if work_cutoff > model.max_frequency() + 1e-9 && work_cutoff > model.cutoff + 1e-9 {
            return Err(LrError::ModelMismatch(format!(
                "working cutoff {work_cutoff} above model cutoff {}",
                model.cutoff
            )));
        }
        let schedule = LrSchedule::dyadic(horizon, lambda0, work_cutoff)?;
        let mut stages: Vec<StageOperator> = Vec::new();
        for (k, e) in schedule.entries.iter().filter(|e| e.mode == StageMode::Control).enumerate() {
            // log cond roughly doubles with the cutoff; start near the expected need.
            let start = stages
                .last()
                .map(|s| {
                    let need = 2.0 * s.factor.log2_cond() + GUARD_BITS as f64;
                    ((need / 64.0).ceil() as u32 * 64).max(START_PREC)
                })
                .unwrap_or(START_PREC);
            let op = StageOperator::with_start_precision(model, e.cutoff, e.end - e.start, start).map_err(|err| {
                LrError::StageGramianSingular {
                    stage: k,
                    source: Box::new(err),
                }
            })?;
            stages.push(op);
        }
        Ok(LrPlan {
            horizon,
            schedule,
            stages,
        })
    }

    pub fn stage_operators(&self) -> &[StageOperator] {
        &self.stages
    }

    /// Runs the schedule from v0; stops controlling once ‖v‖_{H^{−1}} ≤ ρ.
    pub fn run(&self, model: &SpectralModel, v0: &[f64], rho: f64) -> Result<ControlResult, LrError> {
        check_len(model, v0)?;
        let p0 = self.stages.iter().map(|s| s.prec).max().unwrap_or(128);
        let mut state: Vec<Float> = v0.iter().map(|x| Float::with_val(p0, *x)).collect();
        let v0n = model.sobolev_norm(v0, -1.0);
        let mut pieces = Vec::new();
        let mut stages = Vec::new();
        let mut cost2 = 0.0;
        let mut k = 0;
        for e in &self.schedule.entries {
            if e.mode == StageMode::Control {
                let op = &self.stages[k];
                k += 1;
                let before = h_minus1_norm(model, &state, None);
                if before > rho {
                    let (coeffs, c2, next) = op.run(model, &state);
                    let cost = c2.to_f64().max(0.0).sqrt();
                    cost2 += cost * cost;
                    let resid = h_minus1_norm(model, &next, Some(&op.factor.idx));
                    stages.push(stage_summary(k - 1, op, (e.start, e.end), cost, resid, v0n, before, &next, model));
                    pieces.push(ControlPiece::new(e.start, e.end, e.cutoff, op.factor.idx.clone(), coeffs)?);
                    state = next.into_iter().map(|x| Float::with_val(p0, x)).collect();
                    continue;
                }
            }
            let dt = e.end - e.start;
            for (x, l2) in state.iter_mut().zip(&model.lambda2) {
                *x *= mp_exp_neg(p0, dt * l2);
            }
        }
        let terminal: Vec<f64> = state.iter().map(|x| x.to_f64()).collect();
        Ok(ControlResult {
            model_dim: model.len(),
            horizon: self.horizon,
            pieces,
            cost: cost2.sqrt(),
            terminal_norm: model.sobolev_norm(&terminal, -1.0),
            terminal,
            tolerance: rho,
            stages,
        })
    }
}

/// One-shot LR control with the model cutoff as working cutoff.
pub fn lr_control(
    model: &SpectralModel,
    v0: &[f64],
    horizon: f64,
    lambda0: f64,
    rho: f64,
) -> Result<(ControlResult, LrSchedule), LrError> {
    let plan = LrPlan::new(model, horizon, lambda0, model.cutoff)?;
    let r = plan.run(model, v0, rho)?;
    Ok((r, plan.schedule))
}

/// State at time t under the pieces, by closed-form Duhamel integrals.
pub fn state_at(model: &SpectralModel, v0: &[f64], pieces: &[ControlPiece], t: f64) -> Result<Vec<Float>, LrError> {
    check_len(model, v0)?;
    if t < 0.0 {
        return Err(LrError::NegativeTime(t));
    }
    let prec = pieces.iter().map(|p| p.prec()).max().unwrap_or(128).max(128);
    let n = model.len();
    let mut v: Vec<Float> = (0..n)
        .map(|k| Float::with_val(prec, v0[k]) * mp_exp_neg(prec, t * model.lambda2[k]))
        .collect();
    let tr = ExactTrace::new(model, prec);
    for p in pieces.iter().filter(|p| p.start < t) {
        if p.modes.iter().any(|&j| j >= n) {
            return Err(LrError::ModelMismatch("control mode index outside model".into()));
        }
        let tau = t.min(p.end);
        let mut w = WeightCache::new(tau - p.start, prec);
        let mut pos = vec![usize::MAX; n];
        p.modes.iter().enumerate().for_each(|(i, &j)| pos[j] = i);
        // e^{−(b−τ)λ_j²} c_j and e^{−(t−τ)λ_k²}
        let cj: Vec<Float> = p
            .modes
            .iter()
            .zip(&p.coeffs)
            .map(|(&j, c)| Float::with_val(prec, c * mp_exp_neg(prec, (p.end - tau) * model.lambda2[j])))
            .collect();
        for k in 0..n {
            let ek = mp_exp_neg(prec, (t - tau) * model.lambda2[k]);
            let mut acc = Float::new(prec);
            for &(j, _) in model.trace_row(k) {
                let i = pos[j];
                if i == usize::MAX {
                    continue;
                }
                let b = tr.entry(k, j);
                acc += b * w.get(model.lambda2[k] + model.lambda2[j]) * &cj[i];
            }
            v[k] += acc * ek;
        }
    }
    Ok(v)
}

/// Sampled ‖v(t)‖_{H^{−1}} along t_grid.
pub fn apply_control(model: &SpectralModel, v0: &[f64], ctrl: &ControlResult, t_grid: &[f64]) -> Result<Vec<f64>, LrError> {
    if ctrl.model_dim != model.len() {
        return Err(LrError::ModelMismatch(format!(
            "control built on a model of dimension {}, applied to {}",
            ctrl.model_dim,
            model.len()
        )));
    }
    t_grid
        .iter()
        .map(|&t| state_at(model, v0, &ctrl.pieces, t).map(|v| h_minus1_norm(model, &v, None)))
        .collect()
}

/// v_k(t) by composite Simpson quadrature of the Duhamel integrand in f64 (oracle).
pub fn state_by_time_quadrature(model: &SpectralModel, v0: &[f64], pieces: &[ControlPiece], t: f64, steps: usize) -> Vec<f64> {
    let n = model.len();
    let steps = steps + steps % 2;
    let mut v: Vec<f64> = (0..n).map(|k| v0[k] * (-t * model.lambda2[k]).exp()).collect();
    for p in pieces.iter().filter(|p| p.start < t) {
        let tau = t.min(p.end);
        let h = (tau - p.start) / steps as f64;
        let c = p.coeffs_f64();
        for (k, vk) in v.iter_mut().enumerate() {
            let terms: Vec<(f64, f64)> = model
                .trace_row(k)
                .iter()
                .filter_map(|&(j, b)| p.modes.iter().position(|&m| m == j).map(|i| (c[i] * b, model.lambda2[j])))
                .collect();
            if terms.is_empty() {
                continue;
            }
            let f = |s: f64| -> f64 {
                terms.iter().map(|(cb, l2)| cb * (-(p.end - s) * l2).exp()).sum::<f64>()
                    * (-(t - s) * model.lambda2[k]).exp()
            };
            let mut acc = f(p.start) + f(tau);
            for i in 1..steps {
                let s = p.start + i as f64 * h;
                acc += if i % 2 == 1 { 4.0 } else { 2.0 } * f(s);
            }
            *vk += acc * h / 3.0;
        }
    }
    v
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DualityReport {
    pub trials: usize,
    pub max_rel_error: f64,
}

/// ⟨v(T), ũ⟩ = ⟨v0, e^{−TΛ}ũ⟩ + ∫₀^T ⟨f(s), B e^{−(T−s)Λ}ũ⟩ ds for random pieces,
/// initial data and adjoint data; the left side by closed form, the right by
/// Gauss–Legendre time quadrature of the pairing.
pub fn duality_check<R: Rng>(model: &SpectralModel, horizon: f64, trials: usize, rng: &mut R) -> Result<DualityReport, LrError> {
    let n = model.len();
    let (gx, gw) = gauss_legendre(64);
    let mut worst: f64 = 0.0;
    let lam_max = model.max_frequency();
    for _ in 0..trials {
        let v0: Vec<f64> = (0..n).map(|_| StandardNormal.sample(rng)).collect();
        let u: Vec<f64> = (0..n).map(|_| StandardNormal.sample(rng)).collect();
        let npieces = rng.random_range(1..=3usize);
        let mut cuts: Vec<f64> = (0..npieces - 1).map(|_| rng.random_range(0.0..horizon)).collect();
        cuts.push(0.0);
        cuts.push(horizon);
        cuts.sort_by(f64::total_cmp);
        let mut pieces = Vec::new();
        for w in cuts.windows(2) {
            if w[1] - w[0] < 1e-6 * horizon {
                continue;
            }
            let cutoff = rng.random_range(0.0..=lam_max);
            let modes = model.truncation(cutoff);
            let coeffs = modes
                .iter()
                .map(|_| {
                    let z: f64 = StandardNormal.sample(rng);
                    Float::with_val(128, z)
                })
                .collect();
            pieces.push(ControlPiece::new(w[0], w[1], cutoff, modes, coeffs)?);
        }
        let vt = state_at(model, &v0, &pieces, horizon)?;
        let lhs: f64 = vt.iter().zip(&u).map(|(a, b)| a.to_f64() * b).sum();
        let mut rhs: f64 = (0..n).map(|k| v0[k] * (-horizon * model.lambda2[k]).exp() * u[k]).sum();
        let mut scale = rhs.abs();
        for p in &pieces {
            let c = p.coeffs_f64();
            let half = 0.5 * (p.end - p.start);
            let mid = 0.5 * (p.end + p.start);
            for (x, wq) in gx.iter().zip(&gw) {
                let s = mid + half * x;
                let mut val = 0.0;
                for (i, &j) in p.modes.iter().enumerate() {
                    let fj = c[i] * (-(p.end - s) * model.lambda2[j]).exp();
                    for &(k, b) in model.trace_row(j) {
                        val += fj * b * u[k] * (-(horizon - s) * model.lambda2[k]).exp();
                    }
                }
                rhs += half * wq * val;
                scale += (half * wq * val).abs();
            }
        }
        worst = worst.max((lhs - rhs).abs() / scale.max(1e-300));
    }
    Ok(DualityReport {
        trials,
        max_rel_error: worst,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Hypersurface;
    use rand::SeedableRng;

    fn small() -> SpectralModel {
        SpectralModel::torus(&Hypersurface::torus_union(), 5.0).unwrap()
    }

    #[test]
    fn constant_mode_is_annihilated() {
        let m = small();
        let mut v0 = vec![0.0; m.len()];
        v0[0] = 1.0;
        let r = min_norm_control(&m, 0.0, &v0, 0.7).unwrap();
        assert!(r.terminal[0].abs() < 1e-10);
        assert!(r.cost > 0.0);
    }

    #[test]
    fn closed_form_matches_time_quadrature() {
        let m = small();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let v0: Vec<f64> = m.truncation(3.0).iter().fold(vec![0.0; m.len()], |mut v, &j| {
            v[j] = StandardNormal.sample(&mut rng);
            v
        });
        let r = min_norm_control(&m, 3.0, &v0, 1.0).unwrap();
        let a = state_at(&m, &v0, &r.pieces, 1.0).unwrap();
        let b = state_by_time_quadrature(&m, &v0, &r.pieces, 1.0, 10_000);
        let scale = b.iter().fold(0.0f64, |s, x| s.max(x.abs()));
        for (x, y) in a.iter().zip(&b) {
            assert!((x.to_f64() - y).abs() <= 1e-8 * scale.max(1.0), "{} {}", x.to_f64(), y);
        }
        for &j in &m.truncation(3.0) {
            assert!(a[j].to_f64().abs() < 1e-10);
        }
    }

    #[test]
    fn duality_identity_small_model() {
        let m = small();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let d = duality_check(&m, 1.0, 5, &mut rng).unwrap();
        assert!(d.max_rel_error < 1e-10, "{}", d.max_rel_error);
    }

    #[test]
    fn schedule_partitions_horizon() {
        let s = LrSchedule::dyadic(1.0, 2.0, 32.0).unwrap();
        assert_eq!(s.entries.len(), 10);
        assert_eq!(s.entries[0].start, 0.0);
        assert_eq!(s.entries.last().unwrap().end, 1.0);
        for w in s.entries.windows(2) {
            assert_eq!(w[0].end, w[1].start);
        }
    }
}
