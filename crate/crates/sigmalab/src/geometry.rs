//! Manifold models (flat torus, round sphere, surface of revolution), their
//! interior hypersurfaces, Fermi-type normal data and quadrature on Σ.
//!
//! Charts: torus (x, y) ∈ [-π, π)²; sphere (θ, φ) ∈ [0, 2π) × [0, π];
//! revolution (z, θ) ∈ [-π, π] × [0, 2π) with metric dz² + R(z)² dθ².

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use thiserror::Error;

use crate::quad;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("unsupported manifold kind `{0}`")]
    UnsupportedKind(String),
    #[error("profile constraints cannot be met: {0}")]
    ProfileConstraintViolation(String),
    #[error("profile is not positive: R({z}) = {value}")]
    NonPositiveProfile { z: f64, value: f64 },
    #[error("point ({}, {}) is outside the chart domain", .0[0], .0[1])]
    OutOfChart([f64; 2]),
    #[error("hypersurface component {sigma} does not live on {manifold}")]
    UnsupportedPair { manifold: String, sigma: String },
    #[error("quadrature needs at least 4 nodes, got {0}")]
    TooFewNodes(usize),
    #[error("unknown hypersurface `{0}`")]
    UnknownSigma(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ManifoldKind {
    Torus2,
    Sphere2,
    Revolution,
}

impl ManifoldKind {
    pub fn name(&self) -> &'static str {
        match self {
            ManifoldKind::Torus2 => "torus2",
            ManifoldKind::Sphere2 => "sphere2",
            ManifoldKind::Revolution => "revolution",
        }
    }
}

/// Even profile R(z) = Σ_k a_k cos(k z).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RevolutionProfile {
    coeffs: Vec<f64>,
}

/// Values of the profile and the derived potentials at one z.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ProfileValues {
    pub r: f64,
    pub dr: f64,
    pub d2r: f64,
    /// V = 1/R².
    pub v: f64,
    /// Potential produced by conjugating Δ_g with R^{1/2}.
    pub v1: f64,
}

const POSITIVITY_SAMPLES: usize = 4096;

impl RevolutionProfile {
    pub fn from_cos_coeffs(coeffs: Vec<f64>) -> Result<Self, GeometryError> {
        if coeffs.is_empty() {
            return Err(GeometryError::ProfileConstraintViolation(
                "empty cosine series".into(),
            ));
        }
        let p = RevolutionProfile { coeffs };
        // R is even and 2π-periodic, so [0, π] suffices.
        for i in 0..=POSITIVITY_SAMPLES {
            let z = PI * i as f64 / POSITIVITY_SAMPLES as f64;
            let r = p.r(z);
            if !(r > 0.0) {
                return Err(GeometryError::NonPositiveProfile { z, value: r });
            }
        }
        Ok(p)
    }

    /// Cosine series with `terms` coefficients through R(0), R(π/2), R(π).
    pub fn from_point_constraints(
        r0: f64,
        r_half: f64,
        r_pi: f64,
        terms: usize,
    ) -> Result<Self, GeometryError> {
        for (z, value) in [(0.0, r0), (PI / 2.0, r_half), (PI, r_pi)] {
            if !(value > 0.0) {
                return Err(GeometryError::NonPositiveProfile { z, value });
            }
        }
        if terms == 0 {
            return Err(GeometryError::ProfileConstraintViolation(
                "zero-length series".into(),
            ));
        }
        // cos(kz) at z = 0, π/2, π is 1, cos(kπ/2), (-1)^k; three terms interpolate.
        let a1 = 0.5 * (r0 - r_pi);
        let a0 = 0.5 * (0.5 * (r0 + r_pi) + r_half);
        let a2 = 0.5 * (r0 + r_pi) - a0;
        let mut coeffs = vec![a0, a1, a2];
        if terms < 3 {
            let dropped = &coeffs[terms..];
            if dropped.iter().any(|c| c.abs() > 1e-14) {
                return Err(GeometryError::ProfileConstraintViolation(format!(
                    "three point values need three cosine terms, {terms} requested"
                )));
            }
            coeffs.truncate(terms);
        } else {
            coeffs.resize(terms, 0.0);
        }
        let p = Self::from_cos_coeffs(coeffs)?;
        for (z, want) in [(0.0, r0), (PI / 2.0, r_half), (PI, r_pi)] {
            let got = p.r(z);
            if (got - want).abs() > 1e-12 {
                return Err(GeometryError::ProfileConstraintViolation(format!(
                    "R({z}) = {got}, wanted {want}"
                )));
            }
        }
        Ok(p)
    }

    /// Three-term interpolant of R(0) = 1, R(π/2) = √5, R(π) = 1/√2.
    pub fn canonical() -> Self {
        Self::from_point_constraints(1.0, 5f64.sqrt(), 0.5f64.sqrt(), 3)
            .expect("canonical profile is positive")
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn r(&self, z: f64) -> f64 {
        self.coeffs
            .iter()
            .enumerate()
            .map(|(k, a)| a * (k as f64 * z).cos())
            .sum()
    }

    pub fn eval(&self, z: f64) -> ProfileValues {
        let (mut r, mut dr, mut d2r) = (0.0, 0.0, 0.0);
        for (k, a) in self.coeffs.iter().enumerate() {
            let kf = k as f64;
            let (s, c) = (kf * z).sin_cos();
            r += a * c;
            dr -= a * kf * s;
            d2r -= a * kf * kf * c;
        }
        let v = 1.0 / (r * r);
        let v1 = -0.25 * dr * dr / (r * r) + 0.5 * d2r / r;
        ProfileValues { r, dr, d2r, v, v1 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SigmaComponent {
    TorusCircleX0,
    TorusCircleY0,
    SphereEquator,
    RevolutionWaist,
}

impl SigmaComponent {
    pub fn name(&self) -> &'static str {
        match self {
            SigmaComponent::TorusCircleX0 => "x0",
            SigmaComponent::TorusCircleY0 => "y0",
            SigmaComponent::SphereEquator => "equator",
            SigmaComponent::RevolutionWaist => "waist",
        }
    }

    pub fn parse(s: &str) -> Result<Self, GeometryError> {
        match s {
            "x0" => Ok(SigmaComponent::TorusCircleX0),
            "y0" => Ok(SigmaComponent::TorusCircleY0),
            "equator" => Ok(SigmaComponent::SphereEquator),
            "waist" => Ok(SigmaComponent::RevolutionWaist),
            other => Err(GeometryError::UnknownSigma(other.to_string())),
        }
    }

    pub fn host(&self) -> ManifoldKind {
        match self {
            SigmaComponent::TorusCircleX0 | SigmaComponent::TorusCircleY0 => ManifoldKind::Torus2,
            SigmaComponent::SphereEquator => ManifoldKind::Sphere2,
            SigmaComponent::RevolutionWaist => ManifoldKind::Revolution,
        }
    }
}

/// A closed hypersurface: one circle or a union of circles, with a coorientation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Hypersurface {
    pub components: Vec<SigmaComponent>,
    /// +1 or -1; flips ∂_ν and the sign of x₁ on every component.
    pub coorientation: f64,
}

impl Hypersurface {
    pub fn single(c: SigmaComponent) -> Self {
        Hypersurface {
            components: vec![c],
            coorientation: 1.0,
        }
    }

    pub fn union(cs: Vec<SigmaComponent>) -> Self {
        Hypersurface {
            components: cs,
            coorientation: 1.0,
        }
    }

    pub fn torus_union() -> Self {
        Self::union(vec![SigmaComponent::TorusCircleX0, SigmaComponent::TorusCircleY0])
    }

    pub fn is_union(&self) -> bool {
        self.components.len() > 1
    }

    pub fn label(&self) -> String {
        self.components
            .iter()
            .map(|c| c.name())
            .collect::<Vec<_>>()
            .join("+")
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ManifoldModel {
    pub kind: ManifoldKind,
    pub profile: Option<RevolutionProfile>,
    /// Built-in hypersurfaces available on this model.
    pub hypersurfaces: Vec<Hypersurface>,
}

impl ManifoldModel {
    pub fn torus() -> Self {
        ManifoldModel {
            kind: ManifoldKind::Torus2,
            profile: None,
            hypersurfaces: vec![
                Hypersurface::single(SigmaComponent::TorusCircleX0),
                Hypersurface::single(SigmaComponent::TorusCircleY0),
                Hypersurface::torus_union(),
            ],
        }
    }

    pub fn sphere() -> Self {
        ManifoldModel {
            kind: ManifoldKind::Sphere2,
            profile: None,
            hypersurfaces: vec![Hypersurface::single(SigmaComponent::SphereEquator)],
        }
    }

    pub fn revolution(profile: RevolutionProfile) -> Self {
        ManifoldModel {
            kind: ManifoldKind::Revolution,
            profile: Some(profile),
            hypersurfaces: vec![Hypersurface::single(SigmaComponent::RevolutionWaist)],
        }
    }

    pub fn has_boundary(&self) -> bool {
        self.kind == ManifoldKind::Revolution
    }

    pub fn profile(&self) -> &RevolutionProfile {
        self.profile
            .as_ref()
            .expect("revolution model carries a profile")
    }

    pub fn check_sigma(&self, sigma: &Hypersurface) -> Result<(), GeometryError> {
        for c in &sigma.components {
            if c.host() != self.kind {
                return Err(GeometryError::UnsupportedPair {
                    manifold: self.kind.name().into(),
                    sigma: c.name().into(),
                });
            }
        }
        Ok(())
    }

    /// Diagonal of the inverse metric g^{-1} at x.
    pub fn cometric(&self, x: [f64; 2]) -> Result<[f64; 2], GeometryError> {
        match self.kind {
            ManifoldKind::Torus2 => Ok([1.0, 1.0]),
            ManifoldKind::Sphere2 => {
                let s = x[1].sin();
                if !(x[1] > 0.0 && x[1] < PI) || s == 0.0 {
                    return Err(GeometryError::OutOfChart(x));
                }
                Ok([1.0 / (s * s), 1.0])
            }
            ManifoldKind::Revolution => {
                if x[0].abs() > PI + 1e-12 {
                    return Err(GeometryError::OutOfChart(x));
                }
                let r = self.profile().r(x[0]);
                Ok([1.0, 1.0 / (r * r)])
            }
        }
    }

    /// Diagonal of the metric g at x.
    pub fn metric(&self, x: [f64; 2]) -> Result<[f64; 2], GeometryError> {
        let c = self.cometric(x)?;
        Ok([1.0 / c[0], 1.0 / c[1]])
    }

    /// Orthonormal frame (e₁, e₂) of T_xM, as coordinate vectors.
    pub fn orthonormal_frame(&self, x: [f64; 2]) -> Result<[[f64; 2]; 2], GeometryError> {
        let g = self.metric(x)?;
        Ok([[1.0 / g[0].sqrt(), 0.0], [0.0, 1.0 / g[1].sqrt()]])
    }
}

/// Cometric norm |ξ|_g.
pub fn metric_norm(m: &ManifoldModel, x: [f64; 2], xi: [f64; 2]) -> Result<f64, GeometryError> {
    let c = m.cometric(x)?;
    Ok((c[0] * xi[0] * xi[0] + c[1] * xi[1] * xi[1]).sqrt())
}

/// Metric norm of a tangent vector.
pub fn vector_norm(m: &ManifoldModel, x: [f64; 2], v: [f64; 2]) -> Result<f64, GeometryError> {
    let g = m.metric(x)?;
    Ok((g[0] * v[0] * v[0] + g[1] * v[1] * v[1]).sqrt())
}

/// Fermi data for one component of Σ.
#[derive(Clone, Debug, PartialEq)]
pub struct ComponentChart {
    pub component: SigmaComponent,
    pub sign: f64,
    r_sigma: f64,
}

/// Fermi data for every component of Σ.
#[derive(Clone, Debug, PartialEq)]
pub struct FermiChart {
    pub kind: ManifoldKind,
    pub components: Vec<ComponentChart>,
}

pub fn wrap_pi(x: f64) -> f64 {
    let y = (x + PI).rem_euclid(2.0 * PI) - PI;
    if y >= PI {
        y - 2.0 * PI
    } else {
        y
    }
}

impl ComponentChart {
    /// Signed distance to the component, positive on the side ∂_ν points into.
    pub fn x1(&self, x: [f64; 2]) -> f64 {
        self.sign
            * match self.component {
                SigmaComponent::TorusCircleX0 => wrap_pi(x[0]),
                SigmaComponent::TorusCircleY0 => wrap_pi(x[1]),
                SigmaComponent::SphereEquator => PI / 2.0 - x[1],
                SigmaComponent::RevolutionWaist => x[0],
            }
    }

    /// Normal covector component ξ₁ = ⟨ξ, ∂_ν⟩.
    pub fn xi1(&self, xi: [f64; 2]) -> f64 {
        self.sign
            * match self.component {
                SigmaComponent::TorusCircleX0 => xi[0],
                SigmaComponent::TorusCircleY0 => xi[1],
                SigmaComponent::SphereEquator => -xi[1],
                SigmaComponent::RevolutionWaist => xi[0],
            }
    }

    /// Tangential cometric r₀(x', ξ') on Σ.
    pub fn r0(&self, _xp: f64, xi_p: f64) -> f64 {
        match self.component {
            SigmaComponent::RevolutionWaist => xi_p * xi_p / (self.r_sigma * self.r_sigma),
            _ => xi_p * xi_p,
        }
    }

    /// ∂_ν u from the coordinate gradient (∂₁u, ∂₂u).
    pub fn normal_derivative<T>(&self, grad: [T; 2]) -> T
    where
        T: std::ops::Mul<f64, Output = T> + Copy,
    {
        match self.component {
            SigmaComponent::TorusCircleX0 => grad[0] * self.sign,
            SigmaComponent::TorusCircleY0 => grad[1] * self.sign,
            SigmaComponent::SphereEquator => grad[1] * (-self.sign),
            SigmaComponent::RevolutionWaist => grad[0] * self.sign,
        }
    }

    /// Point of Σ at arc parameter s ∈ [0, 2π) (angle along the circle).
    pub fn point(&self, s: f64) -> [f64; 2] {
        match self.component {
            SigmaComponent::TorusCircleX0 => [0.0, wrap_pi(s)],
            SigmaComponent::TorusCircleY0 => [wrap_pi(s), 0.0],
            SigmaComponent::SphereEquator => [s.rem_euclid(2.0 * PI), PI / 2.0],
            SigmaComponent::RevolutionWaist => [0.0, s.rem_euclid(2.0 * PI)],
        }
    }

    /// Arc length per unit of the angle parameter.
    pub fn speed(&self) -> f64 {
        match self.component {
            SigmaComponent::RevolutionWaist => self.r_sigma,
            _ => 1.0,
        }
    }

    /// Unit normal as a coordinate vector at a point of Σ.
    pub fn normal_vector(&self) -> [f64; 2] {
        match self.component {
            SigmaComponent::TorusCircleX0 => [self.sign, 0.0],
            SigmaComponent::TorusCircleY0 => [0.0, self.sign],
            SigmaComponent::SphereEquator => [0.0, -self.sign],
            SigmaComponent::RevolutionWaist => [self.sign, 0.0],
        }
    }

    /// Sampled bounds C₁ ≤ r₀(x', ξ')/|ξ'|² ≤ C₂ over `n` points of Σ and unit ξ'.
    /// |ξ'|² is measured with the ambient coordinate norm of the chart.
    pub fn cometric_bounds(&self, n: usize) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = 0.0f64;
        for i in 0..n {
            let s = 2.0 * PI * i as f64 / n as f64;
            let q = self.r0(s, 1.0);
            lo = lo.min(q);
            hi = hi.max(q);
        }
        (lo, hi)
    }
}

pub fn fermi_chart(m: &ManifoldModel, sigma: &Hypersurface) -> Result<FermiChart, GeometryError> {
    m.check_sigma(sigma)?;
    let r_sigma = match m.kind {
        ManifoldKind::Revolution => m.profile().r(0.0),
        _ => 1.0,
    };
    Ok(FermiChart {
        kind: m.kind,
        components: sigma
            .components
            .iter()
            .map(|&component| ComponentChart {
                component,
                sign: sigma.coorientation,
                r_sigma,
            })
            .collect(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SigmaNode {
    pub component: usize,
    /// Angle parameter along the circle.
    pub param: f64,
    pub point: [f64; 2],
}

/// Periodic trapezoid rule on Σ; weights in units of arc length.
#[derive(Clone, Debug, PartialEq)]
pub struct SigmaQuadrature {
    pub nodes: Vec<SigmaNode>,
    pub weights: Vec<f64>,
    pub chart: FermiChart,
}

impl SigmaQuadrature {
    pub fn total_length(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn integrate<F: Fn(&SigmaNode) -> f64>(&self, f: F) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(n, w)| w * f(n)).sum()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

/// `n` equispaced nodes per component.
pub fn sigma_quadrature(
    m: &ManifoldModel,
    sigma: &Hypersurface,
    n: usize,
) -> Result<SigmaQuadrature, GeometryError> {
    if n < 4 {
        return Err(GeometryError::TooFewNodes(n));
    }
    let chart = fermi_chart(m, sigma)?;
    let mut nodes = Vec::with_capacity(n * chart.components.len());
    let mut weights = Vec::with_capacity(n * chart.components.len());
    for (ci, cc) in chart.components.iter().enumerate() {
        let w = 2.0 * PI * cc.speed() / n as f64;
        for i in 0..n {
            let param = 2.0 * PI * i as f64 / n as f64;
            nodes.push(SigmaNode {
                component: ci,
                param,
                point: cc.point(param),
            });
            weights.push(w);
        }
    }
    Ok(SigmaQuadrature {
        nodes,
        weights,
        chart,
    })
}

/// Tensor quadrature for area integrals ∫_M f dvol_g.
#[derive(Clone, Debug)]
pub struct AreaQuadrature {
    pub points: Vec<[f64; 2]>,
    pub weights: Vec<f64>,
}

impl AreaQuadrature {
    pub fn integrate<F: Fn([f64; 2]) -> f64>(&self, f: F) -> f64 {
        self.points.iter().zip(&self.weights).map(|(p, w)| w * f(*p)).sum()
    }
}

/// Torus: n×n trapezoid. Sphere: n Gauss–Legendre nodes in cos φ times 2n
/// trapezoid nodes in θ. Revolution: composite Simpson in z (n forced odd) times
/// n trapezoid nodes in θ, with the R(z) volume factor.
pub fn area_quadrature(m: &ManifoldModel, n: usize) -> AreaQuadrature {
    let mut points = Vec::new();
    let mut weights = Vec::new();
    match m.kind {
        ManifoldKind::Torus2 => {
            let h = 2.0 * PI / n as f64;
            for i in 0..n {
                for j in 0..n {
                    points.push([-PI + i as f64 * h, -PI + j as f64 * h]);
                    weights.push(h * h);
                }
            }
        }
        ManifoldKind::Sphere2 => {
            let (x, w) = quad::gauss_legendre(n);
            let nt = 2 * n;
            let ht = 2.0 * PI / nt as f64;
            for (xi, wi) in x.iter().zip(&w) {
                let phi = xi.acos();
                for j in 0..nt {
                    points.push([j as f64 * ht, phi]);
                    weights.push(wi * ht);
                }
            }
        }
        ManifoldKind::Revolution => {
            let nz = if n % 2 == 1 { n } else { n + 1 };
            let wz = quad::simpson_weights(nz, -PI, PI);
            let ht = 2.0 * PI / n as f64;
            let p = m.profile();
            for (i, wzi) in wz.iter().enumerate() {
                let z = -PI + 2.0 * PI * i as f64 / (nz - 1) as f64;
                let r = p.r(z);
                for j in 0..n {
                    points.push([z, j as f64 * ht]);
                    weights.push(wzi * r * ht);
                }
            }
        }
    }
    AreaQuadrature { points, weights }
}

/// Structured-text descriptor of a manifold.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifoldDescriptor {
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub profile: Option<ProfileDescriptor>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ProfileDescriptor {
    Constraints {
        constraints: String,
    },
    CosCoeffs {
        cos_coeffs: Vec<f64>,
    },
    Points {
        /// R(0), R(π/2), R(π).
        points: [f64; 3],
        #[serde(default = "default_terms")]
        terms: usize,
    },
}

fn default_terms() -> usize {
    3
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SigmaDescriptor {
    One(String),
    Many(Vec<String>),
}

impl SigmaDescriptor {
    pub fn build(&self) -> Result<Hypersurface, GeometryError> {
        match self {
            SigmaDescriptor::One(s) => Ok(Hypersurface::single(SigmaComponent::parse(s)?)),
            SigmaDescriptor::Many(v) => {
                let cs = v
                    .iter()
                    .map(|s| SigmaComponent::parse(s))
                    .collect::<Result<Vec<_>, _>>()?;
                if cs.is_empty() {
                    return Err(GeometryError::UnknownSigma("[]".into()));
                }
                Ok(Hypersurface::union(cs))
            }
        }
    }
}

pub fn build_manifold(desc: &ManifoldDescriptor) -> Result<ManifoldModel, GeometryError> {
    match desc.kind.as_str() {
        "torus2" => Ok(ManifoldModel::torus()),
        "sphere2" => Ok(ManifoldModel::sphere()),
        "revolution" => {
            let profile = match &desc.profile {
                None => RevolutionProfile::canonical(),
                Some(ProfileDescriptor::Constraints { constraints }) => {
                    if constraints == "paper-default" {
                        RevolutionProfile::canonical()
                    } else {
                        return Err(GeometryError::ProfileConstraintViolation(format!(
                            "unknown constraint set `{constraints}`"
                        )));
                    }
                }
                Some(ProfileDescriptor::CosCoeffs { cos_coeffs }) => {
                    RevolutionProfile::from_cos_coeffs(cos_coeffs.clone())?
                }
                Some(ProfileDescriptor::Points { points, terms }) => {
                    RevolutionProfile::from_point_constraints(points[0], points[1], points[2], *terms)?
                }
            };
            Ok(ManifoldModel::revolution(profile))
        }
        other => Err(GeometryError::UnsupportedKind(other.to_string())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_profile_point_values() {
        let p = RevolutionProfile::canonical();
        assert!((p.r(0.0) - 1.0).abs() < 1e-12);
        assert!((p.r(PI / 2.0) - 5f64.sqrt()).abs() < 1e-12);
        assert!((p.r(PI) - 0.5f64.sqrt()).abs() < 1e-12);
        let v = p.eval(0.0);
        assert_eq!(v.dr, 0.0);
        assert!((v.v - 1.0).abs() < 1e-12);
        assert!((p.eval(PI / 2.0).v - 0.2).abs() < 1e-12);
        assert!((p.eval(PI).v - 2.0).abs() < 1e-12);
    }

    #[test]
    fn negative_endpoint_rejected() {
        let e = RevolutionProfile::from_point_constraints(1.0, 5f64.sqrt(), -1.0, 3).unwrap_err();
        assert!(matches!(e, GeometryError::NonPositiveProfile { .. }));
    }

    #[test]
    fn short_series_cannot_interpolate() {
        let e = RevolutionProfile::from_point_constraints(1.0, 5f64.sqrt(), 0.5f64.sqrt(), 2)
            .unwrap_err();
        assert!(matches!(e, GeometryError::ProfileConstraintViolation(_)));
    }

    #[test]
    fn norms() {
        let t = ManifoldModel::torus();
        assert_eq!(metric_norm(&t, [0.3, 0.1], [3.0, 4.0]).unwrap(), 5.0);
        let s = ManifoldModel::sphere();
        assert!((metric_norm(&s, [0.0, PI / 2.0], [1.0, 0.0]).unwrap() - 1.0).abs() < 1e-15);
        assert!(metric_norm(&s, [0.0, 0.0], [1.0, 0.0]).is_err());
        let r = ManifoldModel::revolution(RevolutionProfile::canonical());
        let z = 0.7;
        let rz = r.profile().r(z);
        assert!((metric_norm(&r, [z, 0.0], [0.0, 1.0]).unwrap() - 1.0 / rz).abs() < 1e-15);
    }

    #[test]
    fn fermi_examples() {
        let t = ManifoldModel::torus();
        let c = fermi_chart(&t, &Hypersurface::single(SigmaComponent::TorusCircleX0)).unwrap();
        assert!((c.components[0].x1([0.25, 1.0]) - 0.25).abs() < 1e-15);
        assert!((c.components[0].x1([2.0 * PI - 0.25, 1.0]) + 0.25).abs() < 1e-14);
        let s = ManifoldModel::sphere();
        let c = fermi_chart(&s, &Hypersurface::single(SigmaComponent::SphereEquator)).unwrap();
        assert!((c.components[0].x1([1.0, 1.2]) - (PI / 2.0 - 1.2)).abs() < 1e-15);
        assert_eq!(c.components[0].r0(0.3, 2.0), 4.0);
        assert!(fermi_chart(&s, &Hypersurface::single(SigmaComponent::TorusCircleX0)).is_err());
    }

    #[test]
    fn quadrature_examples() {
        let s = ManifoldModel::sphere();
        let q = sigma_quadrature(&s, &Hypersurface::single(SigmaComponent::SphereEquator), 8).unwrap();
        assert!(q.weights.iter().all(|w| (w - PI / 4.0).abs() < 1e-15));
        assert!((q.total_length() - 2.0 * PI).abs() < 1e-12);
        let re: f64 = q.integrate(|n| n.point[0].cos());
        let im: f64 = q.integrate(|n| n.point[0].sin());
        assert!(re.abs() < 1e-12 && im.abs() < 1e-12);
        assert!(matches!(
            sigma_quadrature(&s, &Hypersurface::single(SigmaComponent::SphereEquator), 3),
            Err(GeometryError::TooFewNodes(3))
        ));
    }
}
