//! Least-squares fits used by the rate checks.

use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
    pub n: usize,
}

impl LineFit {
    pub fn eval(&self, x: f64) -> f64 {
        self.intercept + self.slope * x
    }
}

/// Ordinary least squares y ≈ a + b x.
pub fn line_fit(x: &[f64], y: &[f64]) -> LineFit {
    assert_eq!(x.len(), y.len());
    let n = x.len();
    assert!(n >= 2, "line fit needs two points");
    let nf = n as f64;
    let mx = x.iter().sum::<f64>() / nf;
    let my = y.iter().sum::<f64>() / nf;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|v| (v - my).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = x
        .iter()
        .zip(y)
        .map(|(a, b)| (b - intercept - slope * a).powi(2))
        .sum();
    let r2 = if syy > 0.0 { 1.0 - ss_res / syy } else { 1.0 };
    LineFit {
        slope,
        intercept,
        r2,
        n,
    }
}

/// Log-log fit: returns the exponent p in y ≈ C x^p.
pub fn loglog_fit(x: &[f64], y: &[f64]) -> LineFit {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    line_fit(&lx, &ly)
}

/// Least squares for y ≈ c0 + c1 x1 + c2 x2 (normal equations, 3×3).
pub fn plane_fit(x1: &[f64], x2: &[f64], y: &[f64]) -> [f64; 3] {
    let mut a = nalgebra::Matrix3::<f64>::zeros();
    let mut b = nalgebra::Vector3::<f64>::zeros();
    for i in 0..y.len() {
        let r = [1.0, x1[i], x2[i]];
        for p in 0..3 {
            b[p] += r[p] * y[i];
            for q in 0..3 {
                a[(p, q)] += r[p] * r[q];
            }
        }
    }
    let s = a.lu().solve(&b).expect("plane fit: degenerate design");
    [s[0], s[1], s[2]]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_line() {
        let x = [1.0, 2.0, 3.0, 4.0];
        let y: Vec<f64> = x.iter().map(|v| 2.0 - 0.5 * v).collect();
        let f = line_fit(&x, &y);
        assert!((f.slope + 0.5).abs() < 1e-14);
        assert!((f.intercept - 2.0).abs() < 1e-14);
        assert!((f.r2 - 1.0).abs() < 1e-14);
    }

    #[test]
    fn plane_recovers_coefficients() {
        let x1 = [1.0, 2.0, 3.0, 1.0, 5.0];
        let x2 = [0.5, 0.1, 0.7, 0.9, 0.2];
        let y: Vec<f64> = (0..5).map(|i| 1.0 + 2.0 * x1[i] - 3.0 * x2[i]).collect();
        let c = plane_fit(&x1, &x2, &y);
        assert!((c[0] - 1.0).abs() < 1e-10 && (c[1] - 2.0).abs() < 1e-10 && (c[2] + 3.0).abs() < 1e-10);
    }
}
