//! Diagonal heat model on a real eigenbasis with the exact trace Gram matrix
//! B_jk = ⟨u_j|_Σ, u_k|_Σ⟩ + ⟨∂_ν u_j, ∂_ν u_k⟩ over Σ.

use rug::float::Constant;
use rug::Float;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::f64::consts::PI;

use super::LrError;
use crate::geometry::{Hypersurface, ManifoldKind, SigmaComponent, SigmaQuadrature};
use crate::spectral::sphere;

/// One real 1D Fourier factor on the circle: 1/√(2π), cos(kx)/√π or sin(kx)/√π.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Factor {
    Cos(u32),
    Sin(u32),
}

impl Factor {
    pub fn k(self) -> u32 {
        match self {
            Factor::Cos(k) | Factor::Sin(k) => k,
        }
    }

    /// Value at 0.
    pub fn val0(self) -> f64 {
        match self {
            Factor::Cos(0) => 1.0 / (2.0 * PI).sqrt(),
            Factor::Cos(_) => 1.0 / PI.sqrt(),
            Factor::Sin(_) => 0.0,
        }
    }

    /// Derivative at 0.
    pub fn der0(self) -> f64 {
        match self {
            Factor::Sin(k) => k as f64 / PI.sqrt(),
            Factor::Cos(_) => 0.0,
        }
    }

    pub fn eval(self, x: f64) -> (f64, f64) {
        match self {
            Factor::Cos(0) => (1.0 / (2.0 * PI).sqrt(), 0.0),
            Factor::Cos(k) => {
                let kf = k as f64;
                ((kf * x).cos() / PI.sqrt(), -kf * (kf * x).sin() / PI.sqrt())
            }
            Factor::Sin(k) => {
                let kf = k as f64;
                ((kf * x).sin() / PI.sqrt(), kf * (kf * x).cos() / PI.sqrt())
            }
        }
    }
}

/// Real basis labels.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RealLabel {
    /// f_x(x)·f_y(y) on the torus.
    Torus { fx: Factor, fy: Factor },
    /// N_lm P_l^m(cos φ)·{1, √2 cos mθ, √2 sin mθ} on the sphere.
    Sphere { l: usize, m: usize, sine: bool },
}

/// Spectral data of the truncated heat model.
#[derive(Clone, Debug)]
pub struct SpectralModel {
    pub kind: ManifoldKind,
    pub sigma: Hypersurface,
    pub cutoff: f64,
    /// λ_j², non-decreasing.
    pub lambda2: Vec<f64>,
    pub labels: Vec<RealLabel>,
    /// Sparse symmetric trace Gram rows, sorted by column.
    trace: Vec<Vec<(usize, f64)>>,
    /// Optional involution of the basis preserving λ and B (x ↔ y on the torus union).
    swap: Option<Vec<usize>>,
}

impl SpectralModel {
    pub fn len(&self) -> usize {
        self.lambda2.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lambda2.is_empty()
    }

    pub fn trace_row(&self, j: usize) -> &[(usize, f64)] {
        &self.trace[j]
    }

    pub fn trace_entry(&self, j: usize, k: usize) -> f64 {
        let row = &self.trace[j];
        match row.binary_search_by_key(&k, |e| e.0) {
            Ok(p) => row[p].1,
            Err(_) => 0.0,
        }
    }

    pub fn swap(&self) -> Option<&[usize]> {
        self.swap.as_deref()
    }

    /// Indices of E_λ = span{φ_j : λ_j ≤ λ}.
    pub fn truncation(&self, lambda: f64) -> Vec<usize> {
        let l2 = lambda * lambda * (1.0 + 1e-12) + 1e-12;
        (0..self.len()).filter(|&j| self.lambda2[j] <= l2).collect()
    }

    pub fn max_frequency(&self) -> f64 {
        self.lambda2.last().map(|v| v.sqrt()).unwrap_or(0.0)
    }

    /// ‖v‖_{H^s} with weights (1 + λ_j²)^s.
    pub fn sobolev_norm(&self, v: &[f64], s: f64) -> f64 {
        v.iter()
            .zip(&self.lambda2)
            .map(|(x, l2)| (1.0 + l2).powf(s) * x * x)
            .sum::<f64>()
            .sqrt()
    }

    /// Torus with Σ ⊂ {x = 0} ∪ {y = 0}: all real product modes with λ ≤ cutoff.
    pub fn torus(sigma: &Hypersurface, cutoff: f64) -> Result<Self, LrError> {
        let has_x = sigma.components.contains(&SigmaComponent::TorusCircleX0);
        let has_y = sigma.components.contains(&SigmaComponent::TorusCircleY0);
        if sigma.components.iter().any(|c| c.host() != ManifoldKind::Torus2) || !(has_x || has_y) {
            return Err(LrError::Unsupported(format!("torus model with Σ = {}", sigma.label())));
        }
        let kmax = cutoff.floor() as u32;
        let mut factors = vec![Factor::Cos(0)];
        for k in 1..=kmax {
            factors.push(Factor::Cos(k));
            factors.push(Factor::Sin(k));
        }
        let c2 = cutoff * cutoff + 1e-9;
        let mut modes: Vec<(u64, Factor, Factor)> = Vec::new();
        for &fx in &factors {
            for &fy in &factors {
                let l2 = (fx.k() as u64).pow(2) + (fy.k() as u64).pow(2);
                if l2 as f64 <= c2 {
                    modes.push((l2, fx, fy));
                }
            }
        }
        modes.sort();
        let labels: Vec<RealLabel> = modes.iter().map(|&(_, fx, fy)| RealLabel::Torus { fx, fy }).collect();
        let lambda2: Vec<f64> = modes.iter().map(|m| m.0 as f64).collect();
        let pos: HashMap<(Factor, Factor), usize> =
            modes.iter().enumerate().map(|(i, &(_, fx, fy))| ((fx, fy), i)).collect();
        let x_form = |a: Factor, b: Factor| a.val0() * b.val0() + a.der0() * b.der0();
        // Group modes by shared factor so coupling partners are found without a full scan.
        let mut by_fy: HashMap<Factor, Vec<usize>> = HashMap::new();
        let mut by_fx: HashMap<Factor, Vec<usize>> = HashMap::new();
        for (i, &(_, fx, fy)) in modes.iter().enumerate() {
            by_fy.entry(fy).or_default().push(i);
            by_fx.entry(fx).or_default().push(i);
        }
        let mut trace: Vec<Vec<(usize, f64)>> = vec![Vec::new(); modes.len()];
        for (i, &(_, fx, fy)) in modes.iter().enumerate() {
            let mut row: HashMap<usize, f64> = HashMap::new();
            if has_x {
                for &j in &by_fy[&fy] {
                    let v = x_form(fx, modes[j].1);
                    if v != 0.0 {
                        *row.entry(j).or_default() += v;
                    }
                }
            }
            if has_y {
                for &j in &by_fx[&fx] {
                    let v = x_form(fy, modes[j].2);
                    if v != 0.0 {
                        *row.entry(j).or_default() += v;
                    }
                }
            }
            let mut r: Vec<(usize, f64)> = row.into_iter().collect();
            r.sort_by_key(|e| e.0);
            trace[i] = r;
        }
        let swap = if has_x && has_y {
            Some(modes.iter().map(|&(_, fx, fy)| pos[&(fy, fx)]).collect())
        } else {
            None
        };
        Ok(SpectralModel {
            kind: ManifoldKind::Torus2,
            sigma: sigma.clone(),
            cutoff,
            lambda2,
            labels,
            trace,
            swap,
        })
    }

    /// Round sphere observed on the equator: real harmonics with l(l+1) ≤ cutoff².
    pub fn sphere(cutoff: f64) -> Result<Self, LrError> {
        let sigma = Hypersurface::single(SigmaComponent::SphereEquator);
        let mut lmax = 0usize;
        while ((lmax + 1) * (lmax + 2)) as f64 <= cutoff * cutoff + 1e-9 {
            lmax += 1;
        }
        if lmax > crate::spectral::SPHERE_LMAX {
            return Err(LrError::Unsupported(format!("sphere cutoff {cutoff} too large")));
        }
        let mut labels = Vec::new();
        let mut lambda2 = Vec::new();
        // Equator values and φ-derivatives of N_lm P_l^m, exact parity zeros.
        let mut val = HashMap::new();
        let mut der = HashMap::new();
        for m in 0..=lmax {
            let col = sphere::legendre_column(lmax, m, 0.0, 1.0);
            for l in m..=lmax {
                let v = if (l - m) % 2 == 0 { col[l - m] } else { 0.0 };
                // dP̄/dφ = −sin φ dP̄/dx = −sqrt((2l+1)(l+m)(l−m)/(2l−1)) P̄_{l−1}^m at x = 0
                let d = if l > m && (l - m) % 2 == 1 {
                    let (lf, mf) = (l as f64, m as f64);
                    -((2.0 * lf + 1.0) * (lf + mf) * (lf - mf) / (2.0 * lf - 1.0)).sqrt() * col[l - 1 - m]
                } else {
                    0.0
                };
                val.insert((l, m), v);
                der.insert((l, m), d);
            }
        }
        for l in 0..=lmax {
            for m in 0..=l {
                labels.push(RealLabel::Sphere { l, m, sine: false });
                lambda2.push((l * (l + 1)) as f64);
                if m > 0 {
                    labels.push(RealLabel::Sphere { l, m, sine: true });
                    lambda2.push((l * (l + 1)) as f64);
                }
            }
        }
        let n = labels.len();
        let mut trace = vec![Vec::new(); n];
        for i in 0..n {
            let RealLabel::Sphere { l, m, sine } = labels[i] else { unreachable!() };
            for j in 0..n {
                let RealLabel::Sphere { l: l2, m: m2, sine: s2 } = labels[j] else { unreachable!() };
                if m2 != m || s2 != sine {
                    continue;
                }
                // ∫ of the θ-factors over the unit-speed equator is 2π in every case.
                let b = 2.0 * PI * (val[&(l, m)] * val[&(l2, m)] + der[&(l, m)] * der[&(l2, m)]);
                if b != 0.0 {
                    trace[i].push((j, b));
                }
            }
        }
        Ok(SpectralModel {
            kind: ManifoldKind::Sphere2,
            sigma,
            cutoff,
            lambda2,
            labels,
            trace,
            swap: None,
        })
    }

    /// (u_j, ∂_ν u_j) at a point of component `ci` of Σ.
    pub fn trace_values(&self, j: usize, quad: &SigmaQuadrature, node: usize) -> (f64, f64) {
        let nd = &quad.nodes[node];
        let chart = &quad.chart.components[nd.component];
        let x = nd.point;
        match self.labels[j] {
            RealLabel::Torus { fx, fy } => {
                let (vx, dx) = fx.eval(x[0]);
                let (vy, dy) = fy.eval(x[1]);
                (vx * vy, chart.normal_derivative([dx * vy, vx * dy]))
            }
            RealLabel::Sphere { l, m, sine } => {
                let (theta, phi) = (x[0], x[1]);
                let p = sphere::legendre_normalized(l, m, (PI / 2.0 - phi).sin(), phi.sin());
                let dp = sphere::legendre_normalized_dphi(l, m, phi);
                let ang = if m == 0 {
                    1.0
                } else if sine {
                    2f64.sqrt() * (m as f64 * theta).sin()
                } else {
                    2f64.sqrt() * (m as f64 * theta).cos()
                };
                (p * ang, chart.normal_derivative([0.0, dp * ang]))
            }
        }
    }

    /// Trace Gram entry recomputed by quadrature on Σ (consistency oracle).
    pub fn trace_entry_by_quadrature(&self, j: usize, k: usize, quad: &SigmaQuadrature) -> f64 {
        (0..quad.len())
            .map(|i| {
                let (a, da) = self.trace_values(j, quad, i);
                let (b, db) = self.trace_values(k, quad, i);
                quad.weights[i] * (a * b + da * db)
            })
            .sum()
    }

    /// Random coefficients with ‖v‖_{H^{-1}} = 1, drawn as (1+λ²)^{1/2} times i.i.d. normals.
    pub fn random_h_minus1<R: rand::Rng>(&self, rng: &mut R) -> Vec<f64> {
        use rand_distr::{Distribution, StandardNormal};
        let g: Vec<f64> = (0..self.len()).map(|_| StandardNormal.sample(rng)).collect();
        let mut v: Vec<f64> = g.iter().zip(&self.lambda2).map(|(x, l2)| (1.0 + l2).sqrt() * x).collect();
        let n = self.sobolev_norm(&v, -1.0);
        v.iter_mut().for_each(|x| *x /= n);
        v
    }
}

/// Trace Gram entries evaluated at a given precision. Rounding the table to f64
/// perturbs B by ≈1e−16 relative, which swamps Gramian eigenvalues far below that.
pub struct ExactTrace<'a> {
    model: &'a SpectralModel,
    prec: u32,
    has_x: bool,
    has_y: bool,
    inv_sqrt_pi: Float,
    inv_sqrt_2pi: Float,
    two_pi: Float,
    sphere: HashMap<(usize, usize), (Float, Float)>,
}

impl<'a> ExactTrace<'a> {
    pub fn new(model: &'a SpectralModel, prec: u32) -> Self {
        let pi = Float::with_val(prec, Constant::Pi);
        let two_pi = Float::with_val(prec, &pi * 2u32);
        let mut sphere = HashMap::new();
        if model.kind == ManifoldKind::Sphere2 {
            let lmax = model
                .labels
                .iter()
                .map(|l| match l {
                    RealLabel::Sphere { l, .. } => *l,
                    _ => 0,
                })
                .max()
                .unwrap_or(0);
            for m in 0..=lmax {
                let col = legendre_column_equator(lmax, m, prec, &pi);
                for l in m..=lmax {
                    let v = if (l - m) % 2 == 0 { col[l - m].clone() } else { Float::new(prec) };
                    let d = if l > m && (l - m) % 2 == 1 {
                        let f = Float::with_val(prec, ((2 * l + 1) * (l + m) * (l - m)) as f64)
                            / Float::with_val(prec, (2 * l - 1) as f64);
                        -(f.sqrt() * &col[l - 1 - m])
                    } else {
                        Float::new(prec)
                    };
                    sphere.insert((l, m), (v, d));
                }
            }
        }
        let comps = &model.sigma.components;
        ExactTrace {
            model,
            prec,
            has_x: comps.contains(&SigmaComponent::TorusCircleX0),
            has_y: comps.contains(&SigmaComponent::TorusCircleY0),
            inv_sqrt_pi: Float::with_val(prec, pi.clone().sqrt().recip()),
            inv_sqrt_2pi: Float::with_val(prec, two_pi.clone().sqrt().recip()),
            two_pi,
            sphere,
        }
    }

    fn val0(&self, f: Factor) -> Float {
        match f {
            Factor::Cos(0) => self.inv_sqrt_2pi.clone(),
            Factor::Cos(_) => self.inv_sqrt_pi.clone(),
            Factor::Sin(_) => Float::new(self.prec),
        }
    }

    fn der0(&self, f: Factor) -> Float {
        match f {
            Factor::Sin(k) => Float::with_val(self.prec, &self.inv_sqrt_pi * k),
            Factor::Cos(_) => Float::new(self.prec),
        }
    }

    fn x_form(&self, a: Factor, b: Factor) -> Float {
        self.val0(a) * self.val0(b) + self.der0(a) * self.der0(b)
    }

    pub fn entry(&self, j: usize, k: usize) -> Float {
        match (self.model.labels[j], self.model.labels[k]) {
            (RealLabel::Torus { fx, fy }, RealLabel::Torus { fx: gx, fy: gy }) => {
                let mut acc = Float::new(self.prec);
                if self.has_x && fy == gy {
                    acc += self.x_form(fx, gx);
                }
                if self.has_y && fx == gx {
                    acc += self.x_form(fy, gy);
                }
                acc
            }
            (RealLabel::Sphere { l, m, sine }, RealLabel::Sphere { l: l2, m: m2, sine: s2 }) => {
                if m != m2 || sine != s2 {
                    return Float::new(self.prec);
                }
                let (v1, d1) = &self.sphere[&(l, m)];
                let (v2, d2) = &self.sphere[&(l2, m)];
                Float::with_val(self.prec, v1 * v2 + d1 * d2) * &self.two_pi
            }
            _ => Float::new(self.prec),
        }
    }
}

/// Normalized associated Legendre values P̄_l^m(0), l = m..=lmax.
fn legendre_column_equator(lmax: usize, m: usize, prec: u32, pi: &Float) -> Vec<Float> {
    let mut pmm = Float::with_val(prec, pi * 4u32).recip().sqrt();
    for i in 1..=m {
        let r = Float::with_val(prec, (2 * i + 1) as f64) / Float::with_val(prec, (2 * i) as f64);
        pmm = -(pmm * r.sqrt());
    }
    let mut out = vec![pmm];
    if lmax == m {
        return out;
    }
    out.push(Float::new(prec));
    for l in (m + 2)..=lmax {
        let num = Float::with_val(prec, (l * l - m * m) as f64);
        let a2 = Float::with_val(prec, (4 * l * l - 1) as f64) / &num;
        let b2 = Float::with_val(prec, ((l - 1) * (l - 1) - m * m) as f64)
            / Float::with_val(prec, (4 * (l - 1) * (l - 1) - 1) as f64);
        let p2 = -(a2.sqrt() * b2.sqrt() * &out[l - m - 2]);
        out.push(p2);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{sigma_quadrature, ManifoldModel};

    #[test]
    fn torus_counts_and_constant_entry() {
        let s = Hypersurface::single(SigmaComponent::TorusCircleX0);
        let m = SpectralModel::torus(&s, 10.0).unwrap();
        assert_eq!(m.len(), 317);
        assert_eq!(m.lambda2[0], 0.0);
        assert!((m.trace_entry(0, 0) - 1.0 / (2.0 * PI)).abs() < 1e-16);
    }

    #[test]
    fn torus_trace_gram_matches_quadrature() {
        let s = Hypersurface::torus_union();
        let model = SpectralModel::torus(&s, 5.0).unwrap();
        let q = sigma_quadrature(&ManifoldModel::torus(), &s, 64).unwrap();
        for j in 0..model.len() {
            for k in 0..model.len() {
                let a = model.trace_entry(j, k);
                let b = model.trace_entry_by_quadrature(j, k, &q);
                assert!((a - b).abs() < 1e-12, "{j} {k} {a} {b}");
            }
        }
        let sw = model.swap().unwrap();
        for j in 0..model.len() {
            assert_eq!(sw[sw[j]], j);
            for k in 0..model.len() {
                assert_eq!(model.trace_entry(j, k), model.trace_entry(sw[j], sw[k]));
            }
        }
    }

    #[test]
    fn sphere_trace_gram_matches_quadrature() {
        let model = SpectralModel::sphere(6.0).unwrap();
        let s = Hypersurface::single(SigmaComponent::SphereEquator);
        let q = sigma_quadrature(&ManifoldModel::sphere(), &s, 64).unwrap();
        for j in 0..model.len() {
            for k in 0..model.len() {
                let a = model.trace_entry(j, k);
                let b = model.trace_entry_by_quadrature(j, k, &q);
                assert!((a - b).abs() < 1e-12, "{j} {k} {a} {b}");
            }
        }
    }

    #[test]
    fn exact_trace_matches_table() {
        let t = SpectralModel::torus(&Hypersurface::torus_union(), 6.0).unwrap();
        let sp = SpectralModel::sphere(12.0).unwrap();
        for m in [&t, &sp] {
            let e = ExactTrace::new(m, 200);
            for j in 0..m.len() {
                for k in 0..m.len() {
                    let b = m.trace_entry(j, k);
                    let x = e.entry(j, k).to_f64();
                    assert!((b - x).abs() <= 1e-14 * (1.0 + b.abs()), "{j} {k} {b} {x}");
                }
            }
        }
    }
}
