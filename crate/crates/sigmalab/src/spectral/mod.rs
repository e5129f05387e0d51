//! Eigenmodes of the three model manifolds, their Cauchy data on Σ and the
//! eigenspace lower-bound sweeps.

pub mod fourier;
pub mod radial;
pub mod sphere;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::sync::Arc;
use thiserror::Error;

use crate::geometry::{
    AreaQuadrature, ComponentChart, GeometryError, ManifoldKind, RevolutionProfile, SigmaQuadrature,
};
use fourier::TrigInterp;
pub use radial::{Bc0, Parity, RadialEigenproblem, RadialPair};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpectralError {
    #[error("cutoff {cutoff} would produce {count} modes (limit 1e6)")]
    CutoffTooLargeForMemory { cutoff: f64, count: usize },
    #[error("mode index out of range: {0}")]
    IndexOutOfRange(String),
    #[error("mode lives on {mode} but Σ lives on {sigma}")]
    ManifoldMismatch { mode: String, sigma: String },
    #[error("parity mismatch: {0}")]
    ParityMismatch(String),
    #[error("empty mode list")]
    EmptyInput,
    #[error("need at least 4 sample points, got {0}")]
    InsufficientPoints(usize),
    #[error("grid has {0} cells, need at least 200")]
    GridTooCoarse(usize),
    #[error("angular index k = {0} is below 2")]
    AngularIndexTooSmall(u32),
    #[error("no eigenvalue in the requested window")]
    WindowEmpty,
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

pub const MAX_MODES: usize = 1_000_000;
pub const SPHERE_LMAX: usize = 500;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ModeLabel {
    Torus { m: i64, n: i64 },
    Sphere { l: usize, m: i64 },
    Revolution { k: u32, index: usize, parity: Parity },
}

impl ModeLabel {
    pub fn text(&self) -> String {
        match self {
            ModeLabel::Torus { m, n } => format!("({m},{n})"),
            ModeLabel::Sphere { l, m } => format!("({l},{m})"),
            ModeLabel::Revolution { k, index, parity } => format!("({k},{index},{})", parity.tag()),
        }
    }
}

#[derive(Debug)]
struct RevolutionBody {
    profile: RevolutionProfile,
    h: f64,
    energy: f64,
    /// Half-grid cell count N; `psi` lives on z_j = −π + jπ/N, j = 0..=2N.
    grid_n: usize,
    psi: Vec<f64>,
    solver_residual: f64,
}

#[derive(Clone, Debug)]
enum ModeBody {
    Torus,
    Sphere { closed_form: bool },
    Revolution(Arc<RevolutionBody>),
}

/// An L²-normalized Laplace eigenfunction with −Δ_g u = λ² u.
#[derive(Clone, Debug)]
pub struct EigenMode {
    pub lambda: f64,
    pub label: ModeLabel,
    pub kind: ManifoldKind,
    body: ModeBody,
}

/// ⟨λ⟩ = (1 + λ²)^{1/2}.
pub fn japanese(lambda: f64) -> f64 {
    (1.0 + lambda * lambda).sqrt()
}

/// All e^{i(mx+ny)}/(2π) with m² + n² ≤ Λ², ordered by (λ², m, n).
pub fn torus_modes(cutoff: f64) -> Result<Vec<EigenMode>, SpectralError> {
    if !(cutoff >= 0.0) {
        return Err(SpectralError::InvalidArgument(format!("cutoff {cutoff} < 0")));
    }
    let c2 = cutoff * cutoff;
    let mmax = cutoff.floor() as i64;
    let mut count = 0usize;
    for m in -mmax..=mmax {
        let r = (c2 - (m * m) as f64).max(0.0).sqrt().floor() as usize;
        count += 2 * r + 1;
        if count > MAX_MODES {
            return Err(SpectralError::CutoffTooLargeForMemory {
                cutoff,
                count: (PI * c2) as usize,
            });
        }
    }
    let mut idx = Vec::with_capacity(count);
    for m in -mmax..=mmax {
        for n in -mmax..=mmax {
            if ((m * m + n * n) as f64) <= c2 {
                idx.push((m * m + n * n, m, n));
            }
        }
    }
    idx.sort();
    Ok(idx.into_iter().map(|(_, m, n)| torus_mode(m, n)).collect())
}

pub fn torus_mode(m: i64, n: i64) -> EigenMode {
    EigenMode {
        lambda: ((m * m + n * n) as f64).sqrt(),
        label: ModeLabel::Torus { m, n },
        kind: ManifoldKind::Torus2,
        body: ModeBody::Torus,
    }
}

/// Y_l^m; the m = ±(l−1) column uses the log-Γ closed form.
pub fn sphere_mode(l: usize, m: i64) -> Result<EigenMode, SpectralError> {
    if l > SPHERE_LMAX || m.unsigned_abs() as usize > l {
        return Err(SpectralError::IndexOutOfRange(format!("(l, m) = ({l}, {m})")));
    }
    Ok(EigenMode {
        lambda: sphere::lambda_l(l),
        label: ModeLabel::Sphere { l, m },
        kind: ManifoldKind::Sphere2,
        body: ModeBody::Sphere {
            closed_form: l >= 1 && m.unsigned_abs() as usize == l - 1,
        },
    })
}

/// All Y_l^m with l ≤ lmax.
pub fn sphere_modes(lmax: usize) -> Result<Vec<EigenMode>, SpectralError> {
    let mut out = Vec::new();
    for l in 0..=lmax {
        for m in -(l as i64)..=(l as i64) {
            out.push(sphere_mode(l, m)?);
        }
    }
    Ok(out)
}

/// Mirror the half-interval eigenfunction across z = 0 (odd for Dirichlet, even for
/// Neumann data at 0), undo the R^{1/2} conjugation and attach e^{ikθ}/√(2π).
pub fn extend_by_involution(prob: &RadialEigenproblem, index: usize) -> Result<EigenMode, SpectralError> {
    extend_with_parity(prob, index, prob.bc0.parity())
}

/// As [`extend_by_involution`], asserting the expected parity.
pub fn extend_with_parity(
    prob: &RadialEigenproblem,
    index: usize,
    parity: Parity,
) -> Result<EigenMode, SpectralError> {
    if prob.bc0.parity() != parity {
        return Err(SpectralError::ParityMismatch(format!(
            "{:?} data at z = 0 cannot give a {:?} extension",
            prob.bc0, parity
        )));
    }
    let pair = prob
        .pairs
        .iter()
        .find(|p| p.index == index)
        .ok_or_else(|| SpectralError::IndexOutOfRange(format!("no eigenpair with index {index}")))?;
    let n = prob.grid_n;
    let sgn = match parity {
        Parity::Even => 1.0,
        Parity::Odd => -1.0,
    };
    let mut psi = vec![0.0; 2 * n + 1];
    for i in 0..=n {
        psi[n + i] = pair.psi[i];
        psi[n - i] = sgn * pair.psi[i];
    }
    if parity == Parity::Odd {
        psi[n] = 0.0;
    }
    let k = prob.k().round() as u32;
    Ok(EigenMode {
        lambda: pair.energy.sqrt() / prob.h,
        label: ModeLabel::Revolution { k, index, parity },
        kind: ManifoldKind::Revolution,
        body: ModeBody::Revolution(Arc::new(RevolutionBody {
            profile: prob.profile.clone(),
            h: prob.h,
            energy: pair.energy,
            grid_n: n,
            psi,
            solver_residual: pair.residual,
        })),
    })
}

impl EigenMode {
    pub fn eigenvalue(&self) -> f64 {
        self.lambda * self.lambda
    }

    fn sphere_theta_factor(&self, theta: f64) -> Complex64 {
        let ModeLabel::Sphere { m, .. } = self.label else { unreachable!() };
        let sign = if m < 0 && m % 2 != 0 { -1.0 } else { 1.0 };
        Complex64::from_polar(sign, m as f64 * theta)
    }

    /// Real φ-profile of a sphere mode (with signed sin φ, so 2π-periodic).
    fn sphere_profile(&self, phi: f64) -> f64 {
        let (ModeLabel::Sphere { l, m }, ModeBody::Sphere { closed_form }) = (self.label, &self.body) else {
            unreachable!()
        };
        if *closed_form && l >= 2 {
            sphere::closed_form_value(l, phi)
        } else {
            sphere::legendre_normalized(l, m.unsigned_abs() as usize, phi.cos(), phi.sin())
        }
    }

    fn sphere_profile_dphi(&self, phi: f64) -> f64 {
        let (ModeLabel::Sphere { l, m }, ModeBody::Sphere { closed_form }) = (self.label, &self.body) else {
            unreachable!()
        };
        if *closed_form && l >= 2 {
            sphere::closed_form_dphi(l, phi)
        } else {
            sphere::legendre_normalized_dphi(l, m.unsigned_abs() as usize, phi)
        }
    }

    /// Grid location of z for a revolution mode: (cell index, fraction).
    fn rev_locate(b: &RevolutionBody, z: f64) -> (usize, f64) {
        let dz = PI / b.grid_n as f64;
        let t = ((z + PI) / dz).clamp(0.0, (2 * b.grid_n) as f64);
        let r = t.round();
        let t = if (t - r).abs() < 1e-9 { r } else { t };
        let i = (t.floor() as usize).min(2 * b.grid_n - 1);
        (i, t - i as f64)
    }

    /// Central-difference ψ′ at full-grid node j (one-sided at the ends).
    fn rev_dpsi(b: &RevolutionBody, j: usize) -> f64 {
        let dz = PI / b.grid_n as f64;
        let last = 2 * b.grid_n;
        if j == 0 {
            (b.psi[1] - b.psi[0]) / dz
        } else if j == last {
            (b.psi[last] - b.psi[last - 1]) / dz
        } else {
            (b.psi[j + 1] - b.psi[j - 1]) / (2.0 * dz)
        }
    }

    fn rev_k(&self) -> f64 {
        match self.label {
            ModeLabel::Revolution { k, .. } => k as f64,
            _ => unreachable!(),
        }
    }

    /// u(x) in the manifold's chart.
    pub fn value(&self, x: [f64; 2]) -> Complex64 {
        match &self.body {
            ModeBody::Torus => {
                let ModeLabel::Torus { m, n } = self.label else { unreachable!() };
                Complex64::from_polar(1.0 / (2.0 * PI), m as f64 * x[0] + n as f64 * x[1])
            }
            ModeBody::Sphere { .. } => self.sphere_theta_factor(x[0]) * self.sphere_profile(x[1]),
            ModeBody::Revolution(b) => {
                let (i, t) = Self::rev_locate(b, x[0]);
                let psi = if t == 0.0 { b.psi[i] } else { (1.0 - t) * b.psi[i] + t * b.psi[i + 1] };
                let r = b.profile.r(x[0]);
                Complex64::from_polar(psi / (r.sqrt() * (2.0 * PI).sqrt()), self.rev_k() * x[1])
            }
        }
    }

    /// Coordinate gradient (∂₁u, ∂₂u).
    pub fn gradient(&self, x: [f64; 2]) -> [Complex64; 2] {
        let i = Complex64::new(0.0, 1.0);
        match &self.body {
            ModeBody::Torus => {
                let ModeLabel::Torus { m, n } = self.label else { unreachable!() };
                let u = self.value(x);
                [i * m as f64 * u, i * n as f64 * u]
            }
            ModeBody::Sphere { .. } => {
                let ModeLabel::Sphere { m, .. } = self.label else { unreachable!() };
                let e = self.sphere_theta_factor(x[0]);
                [
                    i * m as f64 * e * self.sphere_profile(x[1]),
                    e * self.sphere_profile_dphi(x[1]),
                ]
            }
            ModeBody::Revolution(b) => {
                let (j, t) = Self::rev_locate(b, x[0]);
                let (psi, dpsi) = if t == 0.0 {
                    (b.psi[j], Self::rev_dpsi(b, j))
                } else {
                    (
                        (1.0 - t) * b.psi[j] + t * b.psi[j + 1],
                        (1.0 - t) * Self::rev_dpsi(b, j) + t * Self::rev_dpsi(b, j + 1),
                    )
                };
                let pv = b.profile.eval(x[0]);
                let rs = pv.r.sqrt();
                let dz_val = dpsi / rs - 0.5 * pv.dr * psi / (pv.r * rs);
                let phase = Complex64::from_polar(1.0 / (2.0 * PI).sqrt(), self.rev_k() * x[1]);
                [phase * dz_val, i * self.rev_k() * phase * psi / rs]
            }
        }
    }

    /// (u, ∂_ν u) at a point of the given Σ component.
    pub fn sigma_values(&self, chart: &ComponentChart, x: [f64; 2]) -> (Complex64, Complex64) {
        (self.value(x), chart.normal_derivative(self.gradient(x)))
    }

    /// Relative eigen-residual ‖(−Δ_g − λ²)u‖/‖u‖. Closed forms are differentiated
    /// spectrally; revolution modes use the full-interval discrete operator.
    pub fn eigen_residual(&self) -> f64 {
        match &self.body {
            ModeBody::Torus => {
                let ModeLabel::Torus { m, n } = self.label else { unreachable!() };
                let deg = m.unsigned_abs().max(n.unsigned_abs()) as usize;
                let npts = 2 * deg + 4;
                let fx = TrigInterp::sample(|x| Complex64::from_polar(1.0, m as f64 * x), npts);
                let fy = TrigInterp::sample(|y| Complex64::from_polar(1.0, n as f64 * y), npts);
                let (mut num, mut den) = (0.0, 0.0);
                for a in 0..npts {
                    let x = 2.0 * PI * (a as f64 + 0.3) / npts as f64;
                    let [u, _, uxx] = fx.eval(x);
                    for b in 0..npts {
                        let y = 2.0 * PI * (b as f64 + 0.6) / npts as f64;
                        let [v, _, vyy] = fy.eval(y);
                        let w = u * v / (2.0 * PI);
                        let lap = (uxx * v + u * vyy) / (2.0 * PI);
                        num += (-lap - self.eigenvalue() * w).norm_sqr();
                        den += w.norm_sqr();
                    }
                }
                (num / den).sqrt()
            }
            ModeBody::Sphere { .. } => {
                let ModeLabel::Sphere { l, m } = self.label else { unreachable!() };
                let npts = 2 * l + 4;
                let f = TrigInterp::sample(|phi| Complex64::new(self.sphere_profile(phi), 0.0), npts);
                let (x, w) = crate::quad::gauss_legendre(l + 8);
                let m2 = (m * m) as f64;
                let (mut num, mut den) = (0.0, 0.0);
                for (xi, wi) in x.iter().zip(&w) {
                    let phi = xi.acos();
                    let s = phi.sin();
                    let [v, d, dd] = f.eval(phi);
                    let lap = dd + d * (xi / s) - v * (m2 / (s * s));
                    num += wi * (-lap - v * self.eigenvalue()).norm_sqr();
                    den += wi * v.norm_sqr();
                }
                (num / den).sqrt()
            }
            ModeBody::Revolution(b) => {
                let (num, den) = Self::rev_residual(b, 2);
                (num / den).sqrt()
            }
        }
    }

    /// Σ r², Σ ψ² of the interior full-grid residual with a 3-point (order 2) or
    /// 5-point (order 4) stencil for −h²∂²; returns squared sums.
    fn rev_residual(b: &RevolutionBody, order: usize) -> (f64, f64) {
        let n = b.grid_n;
        let dz = PI / n as f64;
        let h2 = b.h * b.h;
        let (mut num, mut den) = (0.0, 0.0);
        let lo = if order == 2 { 1 } else { 2 };
        for j in lo..=(2 * n - lo) {
            let z = -PI + j as f64 * dz;
            let pv = b.profile.eval(z);
            let p = &b.psi;
            let d2 = if order == 2 {
                (p[j + 1] - 2.0 * p[j] + p[j - 1]) / (dz * dz)
            } else {
                (-p[j + 2] + 16.0 * p[j + 1] - 30.0 * p[j] + 16.0 * p[j - 1] - p[j - 2]) / (12.0 * dz * dz)
            };
            let r = -h2 * d2 + (pv.v + h2 * pv.v1) * p[j] - b.energy * p[j];
            num += r * r;
            den += p[j] * p[j];
        }
        (num, den)
    }

    /// Revolution only: residual against a fourth-order stencil, which measures the
    /// O(dz²) distance of the discrete mode from the continuum eigenfunction.
    pub fn continuum_residual(&self) -> Option<f64> {
        match &self.body {
            ModeBody::Revolution(b) => {
                let (num, den) = Self::rev_residual(b, 4);
                Some((num / den).sqrt())
            }
            _ => None,
        }
    }

    /// Revolution only: half-interval solver residual.
    pub fn solver_residual(&self) -> Option<f64> {
        match &self.body {
            ModeBody::Revolution(b) => Some(b.solver_residual),
            _ => None,
        }
    }

    /// Revolution only: semiclassical energy E = h²λ².
    pub fn energy(&self) -> Option<f64> {
        match &self.body {
            ModeBody::Revolution(b) => Some(b.energy),
            _ => None,
        }
    }

    /// Revolution only: full-grid ψ on z_j = −π + jπ/N.
    pub fn radial_samples(&self) -> Option<&[f64]> {
        match &self.body {
            ModeBody::Revolution(b) => Some(&b.psi),
            _ => None,
        }
    }

    /// ‖u‖²_{L²(M)} with the given area quadrature (revolution modes use the
    /// trapezoid rule on their own grid, exact for the discrete inner product).
    pub fn norm_sqr(&self, quad: &AreaQuadrature) -> f64 {
        match &self.body {
            ModeBody::Revolution(b) => {
                let dz = PI / b.grid_n as f64;
                let s: f64 = b.psi.iter().map(|v| v * v).sum();
                s * dz
            }
            _ => quad.integrate(|x| self.value(x).norm_sqr()),
        }
    }
}

/// Gram matrix ⟨u_i, u_j⟩ under an area quadrature.
pub fn gram_matrix(modes: &[EigenMode], quad: &AreaQuadrature) -> DMatrix<Complex64> {
    let vals: Vec<Vec<Complex64>> = modes
        .par_iter()
        .map(|m| quad.points.iter().map(|&p| m.value(p)).collect())
        .collect();
    let n = modes.len();
    DMatrix::from_fn(n, n, |i, j| {
        vals[i]
            .iter()
            .zip(&vals[j])
            .zip(&quad.weights)
            .map(|((a, b), w)| a.conj() * b * *w)
            .sum()
    })
}

/// max |G − I| entrywise.
pub fn orthonormality_defect(modes: &[EigenMode], quad: &AreaQuadrature) -> f64 {
    let g = gram_matrix(modes, quad);
    let n = modes.len();
    let mut d: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            let target = if i == j { 1.0 } else { 0.0 };
            d = d.max((g[(i, j)] - target).norm());
        }
    }
    d
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CauchyData {
    pub lambda: f64,
    pub trace_norm: f64,
    pub normal_norm: f64,
    pub scaled_normal_norm: f64,
    pub combined: f64,
}

impl CauchyData {
    pub fn from_norms(lambda: f64, trace_norm: f64, normal_norm: f64) -> Self {
        let scaled = normal_norm / japanese(lambda);
        CauchyData {
            lambda,
            trace_norm,
            normal_norm,
            scaled_normal_norm: scaled,
            combined: trace_norm + scaled,
        }
    }
}

fn check_pair(mode: &EigenMode, quad: &SigmaQuadrature) -> Result<(), SpectralError> {
    if mode.kind != quad.chart.kind {
        return Err(SpectralError::ManifoldMismatch {
            mode: mode.kind.name().into(),
            sigma: quad.chart.kind.name().into(),
        });
    }
    Ok(())
}

/// ‖u|_Σ‖, ‖∂_ν u|_Σ‖ and the ⟨λ⟩-scaled combination by quadrature on Σ.
pub fn cauchy_data(mode: &EigenMode, quad: &SigmaQuadrature) -> Result<CauchyData, SpectralError> {
    check_pair(mode, quad)?;
    let (mut t2, mut n2) = (0.0, 0.0);
    for (node, w) in quad.nodes.iter().zip(&quad.weights) {
        let (u, du) = mode.sigma_values(&quad.chart.components[node.component], node.point);
        t2 += w * u.norm_sqr();
        n2 += w * du.norm_sqr();
    }
    Ok(CauchyData::from_norms(mode.lambda, t2.sqrt(), n2.sqrt()))
}

/// Which inequality a sweep probes; fixes the weight on the normal trace.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum BoundKind {
    /// ‖u|_Σ‖² + ‖∂_ν u|_Σ‖².
    GenLow,
    /// ‖u|_Σ‖² + ‖⟨λ⟩⁻¹∂_ν u|_Σ‖².
    Unique,
    /// Same form as `Unique`, read as the control-side inequality.
    UniqueControl,
}

impl BoundKind {
    pub fn name(&self) -> &'static str {
        match self {
            BoundKind::GenLow => "genLow",
            BoundKind::Unique => "unique",
            BoundKind::UniqueControl => "uniqueControl",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "genLow" => Some(BoundKind::GenLow),
            "unique" => Some(BoundKind::Unique),
            "uniqueControl" => Some(BoundKind::UniqueControl),
            _ => None,
        }
    }

    fn normal_weight(&self, lambda: f64) -> f64 {
        match self {
            BoundKind::GenLow => 1.0,
            _ => 1.0 / japanese(lambda),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub lambda: f64,
    pub dim: usize,
    /// Smallest eigenvalue of the eigenspace Gramian of the Cauchy quadratic form.
    pub min_form: f64,
    pub bound: BoundKind,
    /// Label of the first mode of the eigenspace.
    pub label: ModeLabel,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundSweepTable {
    pub bound: BoundKind,
    pub rows: Vec<SweepRow>,
}

/// Split modes (sorted by λ²) into eigenspaces; tolerance 1e−9·(1 + λ²).
pub fn group_eigenspaces(modes: &[EigenMode]) -> Vec<Vec<usize>> {
    let mut order: Vec<usize> = (0..modes.len()).collect();
    order.sort_by(|&a, &b| modes[a].eigenvalue().total_cmp(&modes[b].eigenvalue()));
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for i in order {
        let e = modes[i].eigenvalue();
        match groups.last_mut() {
            Some(g) if (modes[g[0]].eigenvalue() - e).abs() <= 1e-9 * (1.0 + e) => g.push(i),
            _ => groups.push(vec![i]),
        }
    }
    groups
}

/// Per eigenspace, the minimum of q(u) = ‖u|_Σ‖² + w²‖∂_ν u|_Σ‖² over unit u in the
/// span, computed as the smallest eigenvalue of the Hermitian Gramian.
pub fn lower_bound_sweep(
    modes: &[EigenMode],
    quad: &SigmaQuadrature,
    bound: BoundKind,
) -> Result<BoundSweepTable, SpectralError> {
    if modes.is_empty() {
        return Err(SpectralError::EmptyInput);
    }
    for m in modes {
        check_pair(m, quad)?;
    }
    let groups = group_eigenspaces(modes);
    let rows = groups
        .par_iter()
        .map(|g| {
            let lambda = modes[g[0]].lambda;
            let wn = bound.normal_weight(lambda);
            let vecs: Vec<Vec<Complex64>> = g
                .iter()
                .map(|&i| {
                    let mut v = Vec::with_capacity(2 * quad.len());
                    for (node, w) in quad.nodes.iter().zip(&quad.weights) {
                        let (u, du) = modes[i].sigma_values(&quad.chart.components[node.component], node.point);
                        let sw = w.sqrt();
                        v.push(u * sw);
                        v.push(du * (sw * wn));
                    }
                    v
                })
                .collect();
            let d = g.len();
            let gram = DMatrix::from_fn(d, d, |a, b| {
                vecs[a].iter().zip(&vecs[b]).map(|(x, y)| x.conj() * y).sum::<Complex64>()
            });
            let min_form = if d == 1 {
                gram[(0, 0)].re
            } else {
                gram.symmetric_eigenvalues().iter().cloned().fold(f64::INFINITY, f64::min)
            };
            SweepRow {
                lambda,
                dim: d,
                min_form,
                bound,
                label: modes[g[0]].label,
            }
        })
        .collect();
    Ok(BoundSweepTable { bound, rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{area_quadrature, sigma_quadrature, Hypersurface, ManifoldModel, SigmaComponent};

    #[test]
    fn torus_counts() {
        assert_eq!(torus_modes(0.0).unwrap().len(), 1);
        assert_eq!(torus_modes(10.0).unwrap().len(), 317);
    }

    #[test]
    fn torus_mode_traces() {
        let m = ManifoldModel::torus();
        let q = sigma_quadrature(&m, &Hypersurface::single(SigmaComponent::TorusCircleX0), 64).unwrap();
        let u = torus_mode(3, 4);
        assert_eq!(u.lambda, 5.0);
        let cd = cauchy_data(&u, &q).unwrap();
        assert!((cd.trace_norm - 1.0 / (2.0 * PI).sqrt()).abs() < 1e-14);
        assert!((cd.normal_norm - 3.0 / (2.0 * PI).sqrt()).abs() < 1e-13);
        let c = cauchy_data(&torus_mode(0, 0), &q).unwrap();
        assert!((c.trace_norm - 1.0 / (2.0 * PI).sqrt()).abs() < 1e-14 && c.normal_norm == 0.0);
    }

    #[test]
    fn sphere_mode_norms_and_residuals() {
        let m = ManifoldModel::sphere();
        let q = area_quadrature(&m, 48);
        for (l, mm) in [(1usize, 0i64), (40, 39), (40, -39), (7, -3)] {
            let u = sphere_mode(l, mm).unwrap();
            assert!((u.norm_sqr(&q) - 1.0).abs() < 1e-10, "{l},{mm}");
            assert!(u.eigen_residual() < 1e-9, "{l},{mm}: {}", u.eigen_residual());
        }
        assert!(sphere_mode(3, 4).is_err());
    }

    #[test]
    fn equator_trace_of_closed_column_vanishes() {
        let m = ManifoldModel::sphere();
        let q = sigma_quadrature(&m, &Hypersurface::single(SigmaComponent::SphereEquator), 64).unwrap();
        for l in [2usize, 9, 30] {
            let cd = cauchy_data(&sphere_mode(l, l as i64 - 1).unwrap(), &q).unwrap();
            assert_eq!(cd.trace_norm, 0.0);
            let (amp, _) = sphere::sphere_equator_cauchy(l);
            assert!((cd.normal_norm - amp * (2.0 * PI).sqrt()).abs() < 1e-10 * amp);
        }
    }
}
