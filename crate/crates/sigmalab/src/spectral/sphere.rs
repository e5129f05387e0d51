//! Spherical harmonics, the Y_l^{l-1} column and the Γ-function chain for its
//! normal derivative on the equator.

use statrs::function::gamma::ln_gamma;
use std::f64::consts::PI;

/// Fully normalized associated Legendre values N_lm P_l^m(cos φ) for l = m..=lmax,
/// evaluated from (cos φ, sin φ). `s` may be negative, which continues the
/// function to φ ∈ (π, 2π) as a trigonometric polynomial. Condon–Shortley phase.
pub fn legendre_column(lmax: usize, m: usize, c: f64, s: f64) -> Vec<f64> {
    assert!(m <= lmax);
    let mut out = vec![0.0; lmax - m + 1];
    // P̄_m^m = (-1)^m sqrt((2m+1)/(4π) ∏_{i≤m} (2i-1)/(2i)) s^m
    let mut pmm = (1.0 / (4.0 * PI)).sqrt();
    for i in 1..=m {
        let fi = i as f64;
        pmm *= -((2.0 * fi + 1.0) / (2.0 * fi)).sqrt() * s;
    }
    out[0] = pmm;
    if lmax == m {
        return out;
    }
    let mf = m as f64;
    let mut p1 = c * (2.0 * mf + 3.0).sqrt() * pmm;
    out[1] = p1;
    let mut p0 = pmm;
    for l in (m + 2)..=lmax {
        let lf = l as f64;
        let a = ((4.0 * lf * lf - 1.0) / (lf * lf - mf * mf)).sqrt();
        let b = (((lf - 1.0).powi(2) - mf * mf) / (4.0 * (lf - 1.0).powi(2) - 1.0)).sqrt();
        let p2 = a * (c * p1 - b * p0);
        p0 = p1;
        p1 = p2;
        out[l - m] = p2;
    }
    out
}

/// N_lm P_l^m(cos φ) for one (l, m ≥ 0).
pub fn legendre_normalized(l: usize, m: usize, c: f64, s: f64) -> f64 {
    *legendre_column(l, m, c, s).last().unwrap()
}

/// φ-derivative of N_lm P_l^m(cos φ) for 0 ≤ m ≤ l, 0 < φ < π.
pub fn legendre_normalized_dphi(l: usize, m: usize, phi: f64) -> f64 {
    let (s, c) = phi.sin_cos();
    let col = legendre_column(l, m, c, s);
    let pl = col[l - m];
    let plm1 = if l > m { col[l - m - 1] } else { 0.0 };
    let (lf, mf) = (l as f64, m as f64);
    // (1-x²) dP̄_l^m/dx = sqrt((2l+1)(l+m)(l-m)/(2l-1)) P̄_{l-1}^m - l x P̄_l^m
    let k = if l > m {
        ((2.0 * lf + 1.0) * (lf + mf) * (lf - mf) / (2.0 * lf - 1.0)).sqrt()
    } else {
        0.0
    };
    -(k * plm1 - lf * c * pl) / s
}

/// log of N_{l,l-1}(2l-1)!!, the equator amplitude of ∂_φ Y_l^{l-1}.
pub fn log_closed_form_coefficient(l: usize) -> f64 {
    let lf = l as f64;
    let ln_dfact = ln_gamma(2.0 * lf + 1.0) - lf * 2f64.ln() - ln_gamma(lf + 1.0);
    0.5 * ((2.0 * lf + 1.0) / (4.0 * PI)).ln() - 0.5 * ln_gamma(2.0 * lf) + ln_dfact
}

/// N_{l,l-1} P_l^{l-1}(cos φ) = (-1)^{l-1} N_{l,l-1} (2l-1)!! cos φ sin^{l-1} φ in log form.
pub fn closed_form_value(l: usize, phi: f64) -> f64 {
    let sign = if (l - 1) % 2 == 0 { 1.0 } else { -1.0 };
    let s = phi.sin();
    // cos φ as sin(π/2 − φ): exactly zero on the equator.
    let c = (PI / 2.0 - phi).sin();
    if s == 0.0 {
        return if l == 1 { sign * log_closed_form_coefficient(l).exp() * c } else { 0.0 };
    }
    let mag = (log_closed_form_coefficient(l) + (l as f64 - 1.0) * s.abs().ln()).exp();
    let sgn_s = if s < 0.0 && (l - 1) % 2 == 1 { -1.0 } else { 1.0 };
    sign * sgn_s * mag * c
}

/// φ-derivative of the closed form.
pub fn closed_form_dphi(l: usize, phi: f64) -> f64 {
    let sign = if (l - 1) % 2 == 0 { 1.0 } else { -1.0 };
    let (s, c) = phi.sin_cos();
    let lf = l as f64;
    let a = log_closed_form_coefficient(l).exp();
    // d/dφ [cos φ sin^{l-1} φ] = -sin^l φ + (l-1) cos²φ sin^{l-2} φ
    let d = if l >= 2 {
        -s.powi(l as i32) + (lf - 1.0) * c * c * s.powi(l as i32 - 2)
    } else {
        -s
    };
    sign * a * d
}

/// λ_l = sqrt(l(l+1)).
pub fn lambda_l(l: usize) -> f64 {
    let lf = l as f64;
    (lf * (lf + 1.0)).sqrt()
}

/// log|Γ(1/2 − l)| by downward recurrence from Γ(1/2) = √π.
pub fn ln_abs_gamma_half_minus(l: usize) -> f64 {
    let mut s = 0.5 * PI.ln();
    for j in 1..=l {
        s -= (j as f64 - 0.5).ln();
    }
    s
}

/// Sign of Γ(1/2 − l).
pub fn sign_gamma_half_minus(l: usize) -> f64 {
    if l % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Equator data of Y_l^{l-1}: (|∂_φ Y| amplitude, λ_l^{-1}·amplitude·√(2π)).
/// The amplitude is evaluated through the Γ(1/2 − l) chain in log space.
pub fn sphere_equator_cauchy(l: usize) -> (f64, f64) {
    assert!(l >= 2, "equator chain needs l >= 2");
    let lf = l as f64;
    let ln_gamma_abs = PI.ln() - ln_gamma(lf + 0.5);
    let ln_amp = 0.5 * (2.0 * lf + 1.0).ln() - 0.5 * (4.0 * PI).ln() - 0.5 * ln_gamma(2.0 * lf)
        + lf * 2f64.ln()
        + 0.5 * PI.ln()
        - ln_gamma_abs;
    let amp = ln_amp.exp();
    (amp, amp * (2.0 * PI).sqrt() / lambda_l(l))
}

/// Residuals of the Γ identities and the l^{1/4}-normalized product ratio.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GammaChainResidual {
    /// |log|Γ(1/2−l)| − log(π/Γ(l+1/2))| plus a sign check.
    pub reflection: f64,
    /// |log|Γ(1/2−l) ∏(2j−1)| − log(2^l √π)| plus a sign check.
    pub product: f64,
    /// ∏(2j−1)/sqrt((2l−1)!) · l^{−1/4}.
    pub ratio: f64,
}

pub fn gamma_chain_check(l: usize) -> GammaChainResidual {
    assert!((1..=300).contains(&l));
    let lf = l as f64;
    let lg = ln_abs_gamma_half_minus(l);
    let sign = sign_gamma_half_minus(l);
    let sign_ref = if l % 2 == 0 { 1.0 } else { -1.0 };
    let sign_pen = if sign == sign_ref { 0.0 } else { f64::INFINITY };
    let reflection = (lg - (PI.ln() - ln_gamma(lf + 0.5))).abs() + sign_pen;
    let ln_prod: f64 = (1..=l).map(|j| (2.0 * j as f64 - 1.0).ln()).sum();
    let product = (lg + ln_prod - (lf * 2f64.ln() + 0.5 * PI.ln())).abs() + sign_pen;
    let ratio = (ln_prod - 0.5 * ln_gamma(2.0 * lf) - 0.25 * lf.ln()).exp();
    GammaChainResidual {
        reflection,
        product,
        ratio,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn y10() {
        // Y_1^0 = sqrt(3/4π) cos φ
        let phi: f64 = 0.7;
        let v = legendre_normalized(1, 0, phi.cos(), phi.sin());
        assert!((v - (3.0 / (4.0 * PI)).sqrt() * phi.cos()).abs() < 1e-15);
    }

    #[test]
    fn closed_form_matches_recurrence() {
        for l in [2usize, 5, 17, 40] {
            for &phi in &[0.3, 1.1, 2.0] {
                let a = closed_form_value(l, phi);
                let b = legendre_normalized(l, l - 1, phi.cos(), phi.sin());
                assert!((a - b).abs() < 1e-12 * (1.0 + b.abs()), "l={l} {a} {b}");
                let da = closed_form_dphi(l, phi);
                let db = legendre_normalized_dphi(l, l - 1, phi);
                assert!((da - db).abs() < 1e-11 * (1.0 + db.abs()), "l={l} {da} {db}");
            }
        }
    }

    #[test]
    fn amplitude_l2() {
        let (a, _) = sphere_equator_cauchy(2);
        assert!((a - 3.0 * (5.0 / (24.0 * PI)).sqrt()).abs() < 1e-14);
        assert!((a - closed_form_dphi(2, PI / 2.0).abs()).abs() < 1e-14);
    }

    #[test]
    fn gamma_small_cases() {
        // Γ(-1/2) = -2√π, Γ(-5/2) = -8√π/15
        assert!((ln_abs_gamma_half_minus(1) - (2.0 * PI.sqrt()).ln()).abs() < 1e-15);
        assert_eq!(sign_gamma_half_minus(1), -1.0);
        assert!((ln_abs_gamma_half_minus(3) - (8.0 * PI.sqrt() / 15.0).ln()).abs() < 1e-14);
        let r = gamma_chain_check(3);
        assert!(r.reflection < 1e-12 && r.product < 1e-12);
    }
}
