//! Trigonometric interpolation of periodic samples with exact derivatives.

use num_complex::Complex64;
use std::f64::consts::PI;

/// Interpolant Σ c_k e^{ikφ}, |k| < N/2, of samples on φ_j = 2πj/N.
#[derive(Clone, Debug)]
pub struct TrigInterp {
    coeffs: Vec<(f64, Complex64)>,
}

impl TrigInterp {
    pub fn from_samples(g: &[Complex64]) -> Self {
        let n = g.len();
        let half = (n as i64 - 1) / 2;
        let coeffs = (-half..=half)
            .map(|k| {
                let mut c = Complex64::new(0.0, 0.0);
                for (j, gj) in g.iter().enumerate() {
                    let a = -(k as f64) * 2.0 * PI * j as f64 / n as f64;
                    c += gj * Complex64::from_polar(1.0, a);
                }
                (k as f64, c / n as f64)
            })
            .filter(|(_, c)| c.norm() > 0.0)
            .collect();
        TrigInterp { coeffs }
    }

    /// Samples `f` at 2πj/n, j < n.
    pub fn sample<F: Fn(f64) -> Complex64>(f: F, n: usize) -> Self {
        let g: Vec<Complex64> = (0..n).map(|j| f(2.0 * PI * j as f64 / n as f64)).collect();
        Self::from_samples(&g)
    }

    /// (f, f', f'') at φ.
    pub fn eval(&self, phi: f64) -> [Complex64; 3] {
        let mut out = [Complex64::new(0.0, 0.0); 3];
        for &(k, c) in &self.coeffs {
            let e = c * Complex64::from_polar(1.0, k * phi);
            out[0] += e;
            out[1] += e * Complex64::new(0.0, k);
            out[2] += e * (-k * k);
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derivatives_of_trig_polynomial() {
        let f = |x: f64| Complex64::new((3.0 * x).cos() + 0.5 * x.sin(), 0.0);
        let t = TrigInterp::sample(f, 8);
        let x = 0.37;
        let [v, d, dd] = t.eval(x);
        assert!((v.re - f(x).re).abs() < 1e-14);
        assert!((d.re - (-3.0 * (3.0 * x).sin() + 0.5 * x.cos())).abs() < 1e-13);
        assert!((dd.re - (-9.0 * (3.0 * x).cos() - 0.5 * x.sin())).abs() < 1e-12);
    }
}
