//! Symmetric tridiagonal eigenvalues by Sturm bisection.

/// Symmetric tridiagonal matrix with diagonal `d` and off-diagonal `e` (len n−1).
#[derive(Clone, Debug)]
pub struct Tridiagonal {
    pub d: Vec<f64>,
    pub e: Vec<f64>,
}

impl Tridiagonal {
    pub fn n(&self) -> usize {
        self.d.len()
    }

    /// Number of eigenvalues strictly below `x` (Sturm sequence of LDLᵀ pivots).
    pub fn count_below(&self, x: f64) -> usize {
        let n = self.d.len();
        let mut count = 0;
        let mut q = self.d[0] - x;
        if q < 0.0 {
            count += 1;
        }
        for i in 1..n {
            let qq = if q == 0.0 { f64::EPSILON * (self.e[i - 1].abs() + 1e-300) } else { q };
            q = self.d[i] - x - self.e[i - 1] * self.e[i - 1] / qq;
            if q < 0.0 {
                count += 1;
            }
        }
        count
    }

    /// Gershgorin interval containing the spectrum.
    pub fn gershgorin(&self) -> (f64, f64) {
        let n = self.d.len();
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..n {
            let mut r = 0.0;
            if i > 0 {
                r += self.e[i - 1].abs();
            }
            if i + 1 < n {
                r += self.e[i].abs();
            }
            lo = lo.min(self.d[i] - r);
            hi = hi.max(self.d[i] + r);
        }
        (lo, hi)
    }

    /// The k-th eigenvalue (0-based, ascending), bisected to machine precision.
    pub fn eigenvalue(&self, k: usize) -> f64 {
        let (mut lo, mut hi) = self.gershgorin();
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.count_below(mid) > k {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        0.5 * (lo + hi)
    }

    /// All eigenvalues in [a, b], ascending.
    pub fn eigenvalues_in(&self, a: f64, b: f64) -> Vec<f64> {
        let i0 = self.count_below(a);
        let i1 = self.count_below(b);
        (i0..i1).map(|k| self.eigenvalue(k)).collect()
    }

    /// y = A x.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let n = self.d.len();
        (0..n)
            .map(|i| {
                let mut s = self.d[i] * x[i];
                if i > 0 {
                    s += self.e[i - 1] * x[i - 1];
                }
                if i + 1 < n {
                    s += self.e[i] * x[i + 1];
                }
                s
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn discrete_laplacian_spectrum() {
        // -u'' on n interior points: eigenvalues 2 - 2cos(kπ/(n+1)).
        let n = 50;
        let t = Tridiagonal {
            d: vec![2.0; n],
            e: vec![-1.0; n - 1],
        };
        for k in 0..n {
            let exact = 2.0 - 2.0 * (std::f64::consts::PI * (k + 1) as f64 / (n + 1) as f64).cos();
            assert!((t.eigenvalue(k) - exact).abs() < 1e-13);
        }
        assert_eq!(t.eigenvalues_in(0.0, 1.0).len(), t.count_below(1.0));
    }
}
