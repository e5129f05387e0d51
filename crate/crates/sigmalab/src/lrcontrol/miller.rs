//! Admissibility of the trace observation and the low-to-full frequency
//! observability step checked on random states.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::gramian::{time_weight, GramianFactor};
use super::model::SpectralModel;
use super::LrError;
use crate::fit::plane_fit;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdmissibilityRow {
    pub lambda: f64,
    pub ratio: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdmissibilityTable {
    pub horizon: f64,
    pub rows: Vec<AdmissibilityRow>,
    pub max_ratio: f64,
    /// Smallest λ past which the per-eigenvalue maxima never increase.
    pub monotone_from: f64,
}

/// ‖B e^{tA}φ_j‖²_{L²(0,T)} / ‖φ_j‖²_{H¹} = B_jj (1 − e^{−2Tλ²})/(2λ²(1+λ²)), or T·B_jj at λ = 0.
pub fn admissibility_check(model: &SpectralModel, horizon: f64) -> Result<AdmissibilityTable, LrError> {
    if !(horizon > 0.0) {
        return Err(LrError::NegativeTime(horizon));
    }
    let rows: Vec<AdmissibilityRow> = (0..model.len())
        .map(|j| {
            let l2 = model.lambda2[j];
            let b = model.trace_entry(j, j);
            let ratio = if l2 == 0.0 {
                horizon * b
            } else {
                b * time_weight(2.0 * horizon, l2) / (2.0 * (1.0 + l2))
            };
            AdmissibilityRow {
                lambda: l2.sqrt(),
                ratio,
            }
        })
        .collect();
    let mut groups: Vec<(f64, f64)> = Vec::new();
    for r in &rows {
        match groups.last_mut() {
            Some(g) if (g.0 - r.lambda).abs() <= 1e-12 * (1.0 + r.lambda) => g.1 = g.1.max(r.ratio),
            _ => groups.push((r.lambda, r.ratio)),
        }
    }
    let mut monotone_from = groups.last().map(|g| g.0).unwrap_or(0.0);
    for i in (0..groups.len().saturating_sub(1)).rev() {
        if groups[i].1 >= groups[i + 1].1 {
            monotone_from = groups[i].0;
        } else {
            break;
        }
    }
    Ok(AdmissibilityTable {
        horizon,
        max_ratio: rows.iter().map(|r| r.ratio).fold(0.0, f64::max),
        rows,
        monotone_from,
    })
}

/// log κ(λ, T) ≈ log a₀ + aλ + b/T with κ = 1/√λ_min(G_λ(T)).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CostFit {
    pub ln_a0: f64,
    pub a: f64,
    pub b: f64,
    pub max_residual: f64,
}

impl CostFit {
    /// Fit over a λ × T grid; a₀ is inflated by the largest residual so the
    /// fitted form dominates every grid point.
    pub fn from_gramians(model: &SpectralModel, lambdas: &[f64], horizons: &[f64]) -> Result<Self, LrError> {
        let (mut x1, mut x2, mut y) = (Vec::new(), Vec::new(), Vec::new());
        for &l in lambdas {
            for &t in horizons {
                let f = GramianFactor::new(model, l, t)?;
                x1.push(l);
                x2.push(1.0 / t);
                y.push(-0.5 * f.ln_min_eig());
            }
        }
        if y.len() < 3 {
            return Err(LrError::InvalidArgument("cost fit needs at least three Gramians".into()));
        }
        let beta = plane_fit(&x1, &x2, &y);
        let max_residual = (0..y.len())
            .map(|i| y[i] - (beta[0] + beta[1] * x1[i] + beta[2] * x2[i]))
            .fold(0.0, f64::max);
        Ok(CostFit {
            ln_a0: beta[0] + max_residual,
            a: beta[1].max(0.0),
            b: beta[2].max(0.0),
            max_residual,
        })
    }

    /// r minimizing a/r + b/ε under the dyadic frequency growth, ε = 1/2.
    pub fn r(&self) -> f64 {
        let (a, b) = (self.a, self.b);
        if b <= 0.0 {
            return 1.0;
        }
        (-4.0 * a + (16.0 * a * a + 32.0 * b).sqrt()) / (16.0 * b)
    }

    /// f(T) = (2a₀²)^{−1} e^{−(2/T)(a/r + b/ε)} with ε = 1/2.
    pub fn f(&self, horizon: f64) -> f64 {
        let eps = 0.5;
        let r = self.r();
        let a_term = if self.a > 0.0 { self.a / r } else { 0.0 };
        (-2.0 * self.ln_a0 - (2.0 / horizon) * (a_term + self.b / eps)).exp() / 2.0
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MillerReport {
    pub q: f64,
    pub horizons: Vec<f64>,
    pub fit: CostFit,
    pub trials: usize,
    pub hypothesis_held: usize,
    pub conclusion_violations: usize,
    /// Trials where the hypothesis held but the conclusion failed.
    pub implication_violations: usize,
    /// min over trials of (yᵀG y − f((1−q)T)‖e^{TA}y‖²)/yᵀG y.
    pub min_conclusion_margin: f64,
}

/// yᵀ G(T) y over the whole model.
pub fn gramian_form(model: &SpectralModel, y: &[f64], horizon: f64) -> f64 {
    let mut acc = 0.0;
    for (j, yj) in y.iter().enumerate() {
        if *yj == 0.0 {
            continue;
        }
        for &(k, b) in model.trace_row(j) {
            acc += yj * y[k] * b * time_weight(horizon, model.lambda2[j] + model.lambda2[k]);
        }
    }
    acc
}

/// Random-state check of: f(T)‖e^{TA}y‖² − f(qT)‖y‖² ≤ yᵀG(T)y (hypothesis) and
/// f((1−q)T)‖e^{TA}y‖² ≤ yᵀG(T)y (conclusion) on T ∈ {T*/4, T*/2, T*}.
pub fn miller_check<R: Rng>(
    model: &SpectralModel,
    q: f64,
    t_star: f64,
    trials: usize,
    fit: CostFit,
    rng: &mut R,
) -> Result<MillerReport, LrError> {
    if !(q > 0.0 && q < 1.0) {
        return Err(LrError::InvalidArgument(format!("q = {q} outside (0, 1)")));
    }
    if !(t_star > 0.0) {
        return Err(LrError::NegativeTime(t_star));
    }
    let horizons = vec![0.25 * t_star, 0.5 * t_star, t_star];
    let mut held = 0;
    let mut viol = 0;
    let mut imp = 0;
    let mut margin = f64::INFINITY;
    for i in 0..trials {
        let t = horizons[i % horizons.len()];
        let y: Vec<f64> = (0..model.len()).map(|_| StandardNormal.sample(rng)).collect();
        let y2: f64 = y.iter().map(|v| v * v).sum();
        let ey2: f64 = y.iter().zip(&model.lambda2).map(|(v, l2)| (v * (-t * l2).exp()).powi(2)).sum();
        let g = gramian_form(model, &y, t);
        let hyp = fit.f(t) * ey2 - fit.f(q * t) * y2 <= g;
        let lhs = fit.f((1.0 - q) * t) * ey2;
        let ok = lhs <= g;
        held += hyp as usize;
        viol += !ok as usize;
        imp += (hyp && !ok) as usize;
        margin = margin.min((g - lhs) / g);
    }
    Ok(MillerReport {
        q,
        horizons,
        fit,
        trials,
        hypothesis_held: held,
        conclusion_violations: viol,
        implication_violations: imp,
        min_conclusion_margin: margin,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Hypersurface;

    #[test]
    fn zero_mode_ratio_is_t_times_trace() {
        let m = SpectralModel::torus(&Hypersurface::torus_union(), 6.0).unwrap();
        let a = admissibility_check(&m, 0.8).unwrap();
        assert!((a.rows[0].ratio - 0.8 * m.trace_entry(0, 0)).abs() < 1e-15);
        assert!(a.max_ratio.is_finite());
    }

    #[test]
    fn f_is_increasing_in_t() {
        let fit = CostFit {
            ln_a0: 1.0,
            a: 0.5,
            b: 2.0,
            max_residual: 0.0,
        };
        assert!(fit.f(0.5) < fit.f(1.0));
        assert!(fit.f(1.0) < fit.f(2.0));
    }
}
