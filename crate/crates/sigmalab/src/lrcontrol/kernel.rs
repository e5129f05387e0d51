//! Transmutation kernel k_T(t, s) = Σ_k s^{2k+1}/(2k+1)! g₁^{(k)}(t) with
//! g₁(t) = e^{−α(1/t + 1/(T−t))}, a solution of (∂_t − ∂_s²)k = 0 vanishing at s = 0.
//!
//! Derivatives are carried as G_k = g₁^{(k)}/(k! g₁), which satisfy
//! G_{k+1} = (1/(k+1)) Σ_{j≤k} (j+1) P_{j+1} G_{k−j}, P_m = −α((−1)^m t^{−m−1} + (T−t)^{−m−1}).

use rayon::prelude::*;
use rug::Float;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use super::LrError;

const KERNEL_PREC: u32 = 320;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransmutationKernel {
    pub horizon: f64,
    pub half_width: f64,
    pub delta: f64,
    pub alpha: f64,
    pub n_max: usize,
    pub tol: f64,
}

impl TransmutationKernel {
    pub fn new(horizon: f64, half_width: f64, delta: f64, alpha: f64, n_max: usize, tol: f64) -> Result<Self, LrError> {
        if !(horizon > 0.0) {
            return Err(LrError::NegativeTime(horizon));
        }
        if !(delta > 0.0 && delta < 1.0) || !(half_width > 0.0) || n_max == 0 || !(tol > 0.0) {
            return Err(LrError::InvalidArgument(format!(
                "kernel parameters S = {half_width}, δ = {delta}, N = {n_max}, tol = {tol}"
            )));
        }
        let threshold = half_width * half_width * (1.0 + 1.0 / delta);
        if !(alpha > threshold) {
            return Err(LrError::InvalidArgument(format!("α = {alpha} must exceed S²(1+1/δ) = {threshold}")));
        }
        Ok(TransmutationKernel {
            horizon,
            half_width,
            delta,
            alpha,
            n_max,
            tol,
        })
    }

    /// δ = 1/2, α = 1.05·S²(1+1/δ), N_max = 200, tol = 1e−12.
    pub fn with_defaults(horizon: f64, half_width: f64) -> Result<Self, LrError> {
        let delta = 0.5;
        Self::new(horizon, half_width, delta, 1.05 * half_width * half_width * (1.0 + 1.0 / delta), 200, 1e-12)
    }

    pub fn tau(&self, t: f64) -> f64 {
        t.min(self.horizon - t)
    }

    fn check_t(&self, t: f64) -> Result<(), LrError> {
        if !(t > 0.0 && t < self.horizon) {
            return Err(LrError::OutOfInterval(t));
        }
        Ok(())
    }

    /// ln of |s| e^{(s²/δ − α/(1+δ))/τ}.
    pub fn ln_pointwise_bound(&self, t: f64, s: f64) -> f64 {
        let tau = self.tau(t);
        s.abs().ln() + (s * s / self.delta - self.alpha / (1.0 + self.delta)) / tau
    }

    /// ln of k!/(δτ)^k e^{−α/((1+δ)τ)}.
    pub fn ln_derivative_bound(&self, t: f64, k: usize) -> f64 {
        let tau = self.tau(t);
        ln_gamma(k as f64 + 1.0) - k as f64 * (self.delta * tau).ln() - self.alpha / ((1.0 + self.delta) * tau)
    }

    /// ln of b_k = |s|^{2k+1} k!/((2k+1)!(δτ)^k) e^{−α/((1+δ)τ)}, the majorant of term k.
    fn ln_term_bound(&self, tau: f64, s: f64, k: usize) -> f64 {
        let kf = k as f64;
        (2.0 * kf + 1.0) * s.abs().ln() + ln_gamma(kf + 1.0) - ln_gamma(2.0 * kf + 2.0) - kf * (self.delta * tau).ln()
            - self.alpha / ((1.0 + self.delta) * tau)
    }

    /// Bound on Σ_{k>K} |term_k| from the geometric tail of b_k.
    fn tail_bound(&self, tau: f64, s: f64, last: usize) -> f64 {
        if s == 0.0 {
            return 0.0;
        }
        let k = last + 1;
        let r = s * s / (2.0 * (2.0 * k as f64 + 3.0) * self.delta * tau);
        if r >= 1.0 {
            return f64::INFINITY;
        }
        self.ln_term_bound(tau, s, k).exp() / (1.0 - r)
    }

    fn column(&self, t: f64) -> KernelColumn {
        KernelColumn::new(self.horizon, self.alpha, t, self.n_max)
    }
}

/// g₁(t) and G_0..G_{N} at one t, in extended precision.
struct KernelColumn {
    g: Float,
    gk: Vec<Float>,
}

impl KernelColumn {
    fn new(horizon: f64, alpha: f64, t: f64, n: usize) -> Self {
        let p = KERNEL_PREC;
        let tt = Float::with_val(p, t);
        let ut = Float::with_val(p, horizon) - &tt;
        let it = Float::with_val(p, tt.recip_ref());
        let iu = Float::with_val(p, ut.recip_ref());
        let a = Float::with_val(p, alpha);
        // P_m for m = 1..=n
        let mut pm = Vec::with_capacity(n + 1);
        pm.push(Float::new(p));
        let mut pt = it.clone();
        let mut pu = iu.clone();
        for m in 1..=n {
            pt *= &it;
            pu *= &iu;
            let first = if m % 2 == 0 { pt.clone() } else { -pt.clone() };
            pm.push(-(Float::with_val(p, &first + &pu) * &a));
        }
        let mut gk = Vec::with_capacity(n + 1);
        gk.push(Float::with_val(p, 1));
        for k in 0..n {
            let mut acc = Float::new(p);
            for j in 0..=k {
                acc += Float::with_val(p, &pm[j + 1] * &gk[k - j]) * (j as u32 + 1);
            }
            gk.push(acc / (k as u32 + 1));
        }
        let g = (-(a * (it + iu))).exp();
        KernelColumn { g, gk }
    }

    /// Partial sum of Σ s^{2k+1} k!/(2k+1)! G_k, with term magnitudes.
    fn terms(&self, s: f64) -> impl Iterator<Item = Float> + '_ {
        let p = KERNEL_PREC;
        let s2 = Float::with_val(p, s * s);
        let mut c = Float::with_val(p, s);
        self.gk.iter().enumerate().map(move |(k, gk)| {
            let t = Float::with_val(p, &c * gk);
            c *= &s2;
            c /= 2 * (2 * k as u32 + 3);
            t
        })
    }

    /// k_T(t, s) using every computed term.
    fn full(&self, s: f64) -> Float {
        let mut acc = Float::new(KERNEL_PREC);
        for t in self.terms(s) {
            acc += t;
        }
        acc * &self.g
    }

    /// Σ (−1)^k s^{2k+1}/(2k+1)! g₁^{(k)}(t), which equals k_T(T−t, s) since
    /// g₁^{(k)}(T−t) = (−1)^k g₁^{(k)}(t).
    fn reflected(&self, s: f64) -> Float {
        let mut acc = Float::new(KERNEL_PREC);
        for (k, t) in self.terms(s).enumerate() {
            if k % 2 == 0 {
                acc += t;
            } else {
                acc -= t;
            }
        }
        acc * &self.g
    }
}

/// g₁^{(k)}(t) for k = 0..=k_max.
pub fn g1_derivatives(horizon: f64, alpha: f64, t: f64, k_max: usize) -> Result<Vec<f64>, LrError> {
    if !(t > 0.0 && t < horizon) {
        return Err(LrError::OutOfInterval(t));
    }
    let col = KernelColumn::new(horizon, alpha, t, k_max);
    let mut fact = Float::with_val(KERNEL_PREC, 1);
    Ok(col
        .gk
        .iter()
        .enumerate()
        .map(|(k, gk)| {
            if k > 0 {
                fact *= k as u32;
            }
            (Float::with_val(KERNEL_PREC, gk * &fact) * &col.g).to_f64()
        })
        .collect())
}

/// ln |g₁^{(k)}(t)| for k = 0..=k_max (−∞ for exact zeros).
pub fn ln_abs_g1_derivatives(horizon: f64, alpha: f64, t: f64, k_max: usize) -> Result<Vec<f64>, LrError> {
    if !(t > 0.0 && t < horizon) {
        return Err(LrError::OutOfInterval(t));
    }
    let col = KernelColumn::new(horizon, alpha, t, k_max);
    let ln_g = -alpha * (1.0 / t + 1.0 / (horizon - t));
    Ok(col
        .gk
        .iter()
        .enumerate()
        .map(|(k, gk)| {
            if gk.is_zero() {
                f64::NEG_INFINITY
            } else {
                ln_float(gk) + ln_gamma(k as f64 + 1.0) + ln_g
            }
        })
        .collect())
}

fn ln_float(x: &Float) -> f64 {
    let mut y = x.clone().abs();
    let e = y.get_exp().unwrap_or(0);
    y >>= e;
    y.to_f64().ln() + e as f64 * std::f64::consts::LN_2
}

/// (k_T(t, s), truncation bound). Stops once two consecutive terms fall below
/// tol·|partial sum| past the peak index s²/(4δτ) of the majorant.
pub fn transmutation_eval(k: &TransmutationKernel, t: f64, s: f64) -> Result<(f64, f64), LrError> {
    k.check_t(t)?;
    if s == 0.0 {
        return Ok((0.0, 0.0));
    }
    let tau = k.tau(t);
    let ln_bound = k.ln_pointwise_bound(t, s);
    if ln_bound < -745.0 {
        // Below the smallest subnormal: the value flushes to zero.
        return Ok((0.0, ln_bound.exp()));
    }
    let col = k.column(t);
    let k_min = (s * s / (4.0 * k.delta * tau)).ceil() as usize;
    let mut acc = Float::new(KERNEL_PREC);
    let mut small = 0;
    let mut last = 0;
    let mut converged = false;
    for (i, term) in col.terms(s).enumerate() {
        acc += &term;
        last = i;
        let tiny = Float::with_val(KERNEL_PREC, term.abs_ref()) <= Float::with_val(KERNEL_PREC, acc.abs_ref()) * k.tol;
        small = if tiny { small + 1 } else { 0 };
        if i >= k_min && small >= 2 {
            converged = true;
            break;
        }
    }
    let value = Float::with_val(KERNEL_PREC, &acc * &col.g).to_f64();
    let tail = k.tail_bound(tau, s, last);
    if !converged && !(tail <= k.tol * value.abs()) {
        return Err(LrError::SeriesNotConverged {
            terms: last + 1,
            last: tail,
        });
    }
    Ok((value, tail))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelReport {
    pub grid: usize,
    pub steps: [f64; 2],
    pub max_abs_k: f64,
    /// max |∂_t k − ∂_s² k| / max |k| at each stencil step.
    pub residual: [f64; 2],
    pub observed_order: f64,
    /// max |k(t, 0)|.
    pub s0_trace: f64,
    /// max |(k(t, ε) − k(t, −ε))/(2ε) − g₁(t)| / max g₁, ε = 1e−5.
    pub ds_trace_error: f64,
    /// max of ln|k| − ln bound over the grid (≤ 0 when the pointwise bound holds).
    pub bound_log_margin: f64,
    pub bound_violations: usize,
    /// max over t-grid, k ≤ 40 of ln|g₁^{(k)}| − ln(k!/(δτ)^k e^{−α/((1+δ)τ)}).
    pub derivative_log_margin: f64,
    pub derivative_violations: usize,
    /// max |k(T−t, s) − Σ(−1)^k s^{2k+1}/(2k+1)! g₁^{(k)}(t)| / max |k|.
    pub time_reflection: f64,
    /// max |k(T−t, s) − k(t, s)| / max |k|; not small, since only g₁ itself is symmetric.
    pub time_asymmetry: f64,
    /// max |k(t, −s) + k(t, s)| / max |k|.
    pub odd_symmetry: f64,
    /// max |k| at t = 1e−6 and t = T − 1e−6.
    pub endpoint_trace: f64,
}

/// Grid check of the heat equation, boundary traces, bounds and symmetries.
/// Nodes: t_i = T(i+1)/(n+1), s_j = S(2(j+½)/n − 1).
pub fn kernel_verify(k: &TransmutationKernel, grid: usize) -> Result<KernelReport, LrError> {
    let p = KERNEL_PREC;
    let n = grid.max(2);
    let ts: Vec<f64> = (0..n).map(|i| k.horizon * (i + 1) as f64 / (n + 1) as f64).collect();
    let ss: Vec<f64> = (0..n).map(|j| k.half_width * (2.0 * (j as f64 + 0.5) / n as f64 - 1.0)).collect();
    let steps = [1e-3, 5e-4];

    struct Row {
        max_k: f64,
        res: [f64; 2],
        s0: f64,
        ds: f64,
        g1: f64,
        margin: f64,
        violations: usize,
        tref: f64,
        tsym: f64,
        odd: f64,
    }
    let rows: Vec<Row> = ts
        .par_iter()
        .map(|&t| {
            let col = k.column(t);
            let mirror = k.column(k.horizon - t);
            let shifted: Vec<[KernelColumn; 4]> = steps
                .iter()
                .map(|h| [k.column(t - 2.0 * h), k.column(t - h), k.column(t + h), k.column(t + 2.0 * h)])
                .collect();
            let mut row = Row {
                max_k: 0.0,
                res: [0.0; 2],
                s0: col.full(0.0).to_f64().abs(),
                ds: 0.0,
                g1: col.g.to_f64(),
                margin: f64::NEG_INFINITY,
                violations: 0,
                tref: 0.0,
                tsym: 0.0,
                odd: 0.0,
            };
            let eps = 1e-5;
            let dk = (col.full(eps) - col.full(-eps)).to_f64() / (2.0 * eps);
            row.ds = (dk - row.g1).abs();
            for &s in &ss {
                let c = col.full(s);
                let kv = c.to_f64();
                row.max_k = row.max_k.max(kv.abs());
                for (m, &h) in steps.iter().enumerate() {
                    let sh = &shifted[m];
                    let dt = (Float::with_val(p, &sh[2].full(s) - &sh[1].full(s)) * 8u32
                        - Float::with_val(p, &sh[3].full(s) - &sh[0].full(s)))
                        / (12.0 * h);
                    let dss = (Float::with_val(p, col.full(s + h) + col.full(s - h)) * 16u32
                        - Float::with_val(p, col.full(s + 2.0 * h) + col.full(s - 2.0 * h))
                        - Float::with_val(p, &c * 30u32))
                        / (12.0 * h * h);
                    row.res[m] = row.res[m].max((dt - dss).to_f64().abs());
                }
                if !c.is_zero() {
                    let margin = ln_float(&c) - k.ln_pointwise_bound(t, s);
                    row.margin = row.margin.max(margin);
                    if margin > 0.0 {
                        row.violations += 1;
                    }
                }
                let m = mirror.full(s);
                row.tref = row.tref.max((Float::with_val(p, &m - col.reflected(s))).to_f64().abs());
                row.tsym = row.tsym.max((m - &c).to_f64().abs());
                row.odd = row.odd.max((col.full(-s) + &c).to_f64().abs());
            }
            row
        })
        .collect();

    let max_k = rows.iter().map(|r| r.max_k).fold(0.0, f64::max);
    let max_g1 = rows.iter().map(|r| r.g1).fold(0.0, f64::max);
    let residual = [
        rows.iter().map(|r| r.res[0]).fold(0.0, f64::max) / max_k,
        rows.iter().map(|r| r.res[1]).fold(0.0, f64::max) / max_k,
    ];
    let mut d_margin = f64::NEG_INFINITY;
    let mut d_viol = 0;
    for &t in &ts {
        let lg = ln_abs_g1_derivatives(k.horizon, k.alpha, t, 40)?;
        for (j, l) in lg.iter().enumerate() {
            let m = l - k.ln_derivative_bound(t, j);
            d_margin = d_margin.max(m);
            if m > 0.0 {
                d_viol += 1;
            }
        }
    }
    let mut endpoint: f64 = 0.0;
    for &t in &[1e-6, k.horizon - 1e-6] {
        for &s in &ss {
            endpoint = endpoint.max(transmutation_eval(k, t, s)?.0.abs());
        }
    }
    Ok(KernelReport {
        grid: n,
        steps,
        max_abs_k: max_k,
        residual,
        observed_order: (residual[0] / residual[1]).log2(),
        s0_trace: rows.iter().map(|r| r.s0).fold(0.0, f64::max),
        ds_trace_error: rows.iter().map(|r| r.ds).fold(0.0, f64::max) / max_g1,
        bound_log_margin: rows.iter().map(|r| r.margin).fold(f64::NEG_INFINITY, f64::max),
        bound_violations: rows.iter().map(|r| r.violations).sum(),
        derivative_log_margin: d_margin,
        derivative_violations: d_viol,
        time_reflection: rows.iter().map(|r| r.tref).fold(0.0, f64::max) / max_k,
        time_asymmetry: rows.iter().map(|r| r.tsym).fold(0.0, f64::max) / max_k,
        odd_symmetry: rows.iter().map(|r| r.odd).fold(0.0, f64::max) / max_k,
        endpoint_trace: endpoint,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn g1_midpoint_value_and_symmetry() {
        let (t, a) = (1.0, 3.15);
        let d = g1_derivatives(t, a, 0.5, 3).unwrap();
        assert!((d[0] / (-4.0 * a / t).exp() - 1.0).abs() < 1e-14);
        assert!(d[1].abs() < 1e-20);
    }

    #[test]
    fn g1_derivatives_match_finite_differences() {
        let (tt, a, t) = (1.0, 3.15, 0.3);
        let g = |x: f64| (-a * (1.0 / x + 1.0 / (tt - x))).exp();
        let d = g1_derivatives(tt, a, t, 2).unwrap();
        let h = 1e-5;
        let fd1 = (g(t + h) - g(t - h)) / (2.0 * h);
        let h = 1e-3;
        let fd2 = (-g(t + 2.0 * h) + 16.0 * g(t + h) - 30.0 * g(t) + 16.0 * g(t - h) - g(t - 2.0 * h)) / (12.0 * h * h);
        assert!((d[1] - fd1).abs() < 1e-7 * d[1].abs(), "{} {}", d[1], fd1);
        assert!((d[2] - fd2).abs() < 1e-6 * d[2].abs(), "{} {}", d[2], fd2);
    }

    #[test]
    fn kernel_vanishes_at_s0_and_is_odd() {
        let k = TransmutationKernel::with_defaults(1.0, 1.0).unwrap();
        assert_eq!(transmutation_eval(&k, 0.3, 0.0).unwrap().0, 0.0);
        let (a, _) = transmutation_eval(&k, 0.3, 0.7).unwrap();
        let (b, _) = transmutation_eval(&k, 0.3, -0.7).unwrap();
        assert!((a + b).abs() <= 1e-14 * a.abs());
    }

    #[test]
    fn rejects_small_alpha() {
        assert!(TransmutationKernel::new(1.0, 1.0, 0.5, 2.9, 200, 1e-12).is_err());
    }
}
