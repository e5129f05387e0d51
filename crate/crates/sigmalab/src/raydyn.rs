//! Bicharacteristic flow of ½(−τ² + |ξ|²_g) on the characteristic set,
//! specular reflection at ∂M, Σ-crossing classification and a
//! finite-resolution checker for the transversal geometric control condition.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use thiserror::Error;

use crate::geometry::{
    fermi_chart, metric_norm, vector_norm, wrap_pi, ComponentChart, FermiChart, GeometryError,
    Hypersurface, ManifoldKind, ManifoldModel,
};

/// Root tolerance for |x₁| at a located crossing.
pub const ROOT_TOL: f64 = 1e-10;
/// |x₁| below this without a sign change is logged as a tangency.
pub const TANGENCY_TOL: f64 = 1e-8;
/// Boundary hits with |ξ_normal| < GLANCING_TOL·|τ| are glancing.
pub const GLANCING_TOL: f64 = 1e-6;
/// Smallest ε_star reported as a pass.
pub const PASS_FLOOR: f64 = 1e-8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RayError {
    #[error("direction has metric norm {0}, expected 1")]
    NotUnitDirection(f64),
    #[error("phase point is off the characteristic set (relative defect {0})")]
    OffCharacteristic(f64),
    #[error("time frequency τ must be nonzero")]
    ZeroTau,
    #[error("glancing boundary contact at t = {t}, x = ({}, {})", .x[0], .x[1])]
    GlancingBoundaryAbort { t: f64, x: [f64; 2] },
    #[error("constraint drift {drift} exceeds 1e-6 at t = {t}")]
    IntegratorDivergence { drift: f64, t: f64 },
    #[error("boundary contact is tangential (|ξ_normal| = {0})")]
    GlancingContact(f64),
    #[error("point is not on ∂M")]
    NotOnBoundary,
    #[error("point is not on Σ (|x₁| = {0})")]
    NotOnSigma(f64),
    #[error("sampling counts must be at least 8 (got nx = {nx}, ndir = {ndir})")]
    BadSampling { nx: usize, ndir: usize },
    #[error("horizon must be positive")]
    BadHorizon,
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhasePoint {
    pub t: f64,
    pub x: [f64; 2],
    pub tau: f64,
    pub xi: [f64; 2],
}

impl PhasePoint {
    /// Relative characteristic defect |−τ² + |ξ|²_g| / τ².
    pub fn defect(&self, m: &ManifoldModel) -> Result<f64, GeometryError> {
        let n = metric_norm(m, self.x, self.xi)?;
        Ok((n * n - self.tau * self.tau).abs() / (self.tau * self.tau))
    }

    /// Dilation (t, x, λτ, λξ).
    pub fn scaled(&self, lambda: f64) -> PhasePoint {
        PhasePoint {
            t: self.t,
            x: self.x,
            tau: lambda * self.tau,
            xi: [lambda * self.xi[0], lambda * self.xi[1]],
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CrossingClass {
    /// ξ₁²/τ².
    pub margin: f64,
    pub eps: f64,
    pub transverse: bool,
}

impl CrossingClass {
    pub fn new(margin: f64, eps: f64) -> Self {
        CrossingClass {
            margin,
            eps,
            transverse: margin > eps,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum RayEvent {
    SigmaCrossing {
        component: usize,
        s: f64,
        point: PhasePoint,
        class: CrossingClass,
    },
    GlancingCandidate {
        component: usize,
        s: f64,
        point: PhasePoint,
    },
    BoundaryReflection {
        s: f64,
        point: PhasePoint,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub struct RayTrajectory {
    pub samples: Vec<PhasePoint>,
    pub events: Vec<RayEvent>,
    pub end: PhasePoint,
    /// Largest relative constraint defect seen before each projection.
    pub max_drift: f64,
}

impl RayTrajectory {
    pub fn crossings(&self) -> impl Iterator<Item = (usize, f64, &PhasePoint, &CrossingClass)> {
        self.events.iter().filter_map(|e| match e {
            RayEvent::SigmaCrossing {
                component,
                s,
                point,
                class,
            } => Some((*component, *s, point, class)),
            _ => None,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlowOptions {
    /// Physical-time step of the RK4 integrator.
    pub step: f64,
    /// ε used to label recorded crossings.
    pub eps_report: f64,
    /// Record every n-th step (0: endpoints only).
    pub sample_stride: usize,
}

impl Default for FlowOptions {
    fn default() -> Self {
        FlowOptions {
            step: 1e-3,
            eps_report: 0.0,
            sample_stride: 0,
        }
    }
}

type State = [f64; 6];

fn add_scaled(a: &State, b: &State, h: f64) -> State {
    let mut r = *a;
    for i in 0..6 {
        r[i] += h * b[i];
    }
    r
}

fn to_state(m: &ManifoldModel, p: &PhasePoint) -> Result<State, GeometryError> {
    match m.kind {
        ManifoldKind::Torus2 | ManifoldKind::Revolution => {
            Ok([p.x[0], p.x[1], p.xi[0], p.xi[1], 0.0, 0.0])
        }
        ManifoldKind::Sphere2 => {
            let (th, ph) = (p.x[0], p.x[1]);
            let c = m.cometric(p.x)?;
            let (st, ct) = th.sin_cos();
            let (sp, cp) = ph.sin_cos();
            let vth = c[0] * p.xi[0];
            let vph = p.xi[1];
            let dth = [-st * sp, ct * sp, 0.0];
            let dph = [ct * cp, st * cp, -sp];
            Ok([
                ct * sp,
                st * sp,
                cp,
                vth * dth[0] + vph * dph[0],
                vth * dth[1] + vph * dph[1],
                vth * dth[2] + vph * dph[2],
            ])
        }
    }
}

fn base_point(m: &ManifoldModel, st: &State) -> [f64; 2] {
    match m.kind {
        ManifoldKind::Torus2 => [wrap_pi(st[0]), wrap_pi(st[1])],
        ManifoldKind::Revolution => [st[0], st[1].rem_euclid(2.0 * PI)],
        ManifoldKind::Sphere2 => {
            let th = st[1].atan2(st[0]).rem_euclid(2.0 * PI);
            let ph = st[2].clamp(-1.0, 1.0).acos();
            [th, ph]
        }
    }
}

fn from_state(m: &ManifoldModel, st: &State, t: f64, tau: f64) -> PhasePoint {
    match m.kind {
        ManifoldKind::Torus2 | ManifoldKind::Revolution => PhasePoint {
            t,
            x: base_point(m, st),
            tau,
            xi: [st[2], st[3]],
        },
        ManifoldKind::Sphere2 => {
            let x = base_point(m, st);
            let (s_t, c_t) = x[0].sin_cos();
            let (s_p, c_p) = x[1].sin_cos();
            let q = [st[3], st[4], st[5]];
            let dth = [-s_t * s_p, c_t * s_p, 0.0];
            let dph = [c_t * c_p, s_t * c_p, -s_p];
            let xi_th = q[0] * dth[0] + q[1] * dth[1];
            let xi_ph = q[0] * dph[0] + q[1] * dph[1] + q[2] * dph[2];
            PhasePoint {
                t,
                x,
                tau,
                xi: [xi_th, xi_ph],
            }
        }
    }
}

fn rhs(m: &ManifoldModel, st: &State) -> State {
    match m.kind {
        ManifoldKind::Torus2 => [st[2], st[3], 0.0, 0.0, 0.0, 0.0],
        ManifoldKind::Revolution => {
            let pv = m.profile().eval(st[0]);
            let r2 = pv.r * pv.r;
            [
                st[2],
                st[3] / r2,
                st[3] * st[3] * pv.dr / (r2 * pv.r),
                0.0,
                0.0,
                0.0,
            ]
        }
        ManifoldKind::Sphere2 => {
            let q2 = st[3] * st[3] + st[4] * st[4] + st[5] * st[5];
            [st[3], st[4], st[5], -q2 * st[0], -q2 * st[1], -q2 * st[2]]
        }
    }
}

fn rk4(m: &ManifoldModel, st: &State, h: f64) -> State {
    let k1 = rhs(m, st);
    let k2 = rhs(m, &add_scaled(st, &k1, 0.5 * h));
    let k3 = rhs(m, &add_scaled(st, &k2, 0.5 * h));
    let k4 = rhs(m, &add_scaled(st, &k3, h));
    let mut r = *st;
    for i in 0..6 {
        r[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    r
}

/// Squared speed |ξ|²_g in the integration state.
fn speed2(m: &ManifoldModel, st: &State) -> f64 {
    match m.kind {
        ManifoldKind::Torus2 => st[2] * st[2] + st[3] * st[3],
        ManifoldKind::Revolution => {
            let r = m.profile().r(st[0]);
            st[2] * st[2] + st[3] * st[3] / (r * r)
        }
        ManifoldKind::Sphere2 => st[3] * st[3] + st[4] * st[4] + st[5] * st[5],
    }
}

/// Projects back onto the shell |ξ|_g = |τ|; returns the defect seen before.
fn project(m: &ManifoldModel, st: &mut State, tau: f64) -> f64 {
    if m.kind == ManifoldKind::Sphere2 {
        let pn = (st[0] * st[0] + st[1] * st[1] + st[2] * st[2]).sqrt();
        for v in st.iter_mut().take(3) {
            *v /= pn;
        }
        let dot = st[0] * st[3] + st[1] * st[4] + st[2] * st[5];
        for i in 0..3 {
            st[3 + i] -= dot * st[i];
        }
    }
    let s2 = speed2(m, st);
    let drift = (s2 - tau * tau).abs() / (tau * tau);
    let f = tau.abs() / s2.sqrt();
    match m.kind {
        ManifoldKind::Sphere2 => {
            for v in st.iter_mut().skip(3) {
                *v *= f;
            }
        }
        _ => {
            st[2] *= f;
            st[3] *= f;
        }
    }
    if m.kind == ManifoldKind::Torus2 {
        st[0] = wrap_pi(st[0]);
        st[1] = wrap_pi(st[1]);
    }
    drift
}

fn x1_state(m: &ManifoldModel, c: &ComponentChart, st: &State) -> f64 {
    match m.kind {
        ManifoldKind::Sphere2 => c.sign * st[2].clamp(-1.0, 1.0).asin(),
        _ => c.x1([st[0], st[1]]),
    }
}

fn xi1_state(m: &ManifoldModel, c: &ComponentChart, st: &State) -> f64 {
    match m.kind {
        ManifoldKind::Sphere2 => {
            let z = st[2];
            c.sign * st[5] / (1.0 - z * z).max(1e-300).sqrt()
        }
        _ => c.xi1([st[2], st[3]]),
    }
}

/// Lift (x, v) with |v|_g = 1 to (0, x, sign, v♭).
pub fn char_lift(
    m: &ManifoldModel,
    x: [f64; 2],
    v: [f64; 2],
    sign: f64,
) -> Result<PhasePoint, RayError> {
    let n = vector_norm(m, x, v)?;
    if (n - 1.0).abs() > 1e-10 {
        return Err(RayError::NotUnitDirection(n));
    }
    let g = m.metric(x)?;
    Ok(PhasePoint {
        t: 0.0,
        x,
        tau: sign.signum(),
        xi: [g[0] * v[0], g[1] * v[1]],
    })
}

/// Specular reflection at z = ±π.
pub fn reflect(m: &ManifoldModel, p: &PhasePoint) -> Result<PhasePoint, RayError> {
    if m.kind != ManifoldKind::Revolution || (p.x[0].abs() - PI).abs() > 1e-9 {
        return Err(RayError::NotOnBoundary);
    }
    if p.xi[0].abs() <= GLANCING_TOL * p.tau.abs() {
        return Err(RayError::GlancingContact(p.xi[0].abs()));
    }
    Ok(PhasePoint {
        xi: [-p.xi[0], p.xi[1]],
        ..*p
    })
}

/// Classify a point of Σ by its margin ξ₁²/τ².
pub fn classify_crossing(
    chart: &ComponentChart,
    p: &PhasePoint,
    eps: f64,
) -> Result<CrossingClass, RayError> {
    let x1 = chart.x1(p.x);
    if x1.abs() > TANGENCY_TOL {
        return Err(RayError::NotOnSigma(x1.abs()));
    }
    let xi1 = chart.xi1(p.xi);
    Ok(CrossingClass::new(xi1 * xi1 / (p.tau * p.tau), eps))
}

struct Tracker<'a> {
    m: &'a ManifoldModel,
    chart: Option<&'a FermiChart>,
    tau: f64,
    t0: f64,
    eps: f64,
    tangency: Vec<bool>,
    events: Vec<RayEvent>,
}

impl Tracker<'_> {
    fn point(&self, st: &State, s: f64) -> PhasePoint {
        from_state(self.m, st, self.t0 - self.tau * s, self.tau)
    }

    /// Scan the RK4 segment a → rk4(a, len) for Σ crossings.
    fn segment(&mut self, a: &State, b: &State, s_a: f64, len: f64) {
        let Some(chart) = self.chart else { return };
        for (ci, c) in chart.components.iter().enumerate() {
            let xa = x1_state(self.m, c, a);
            let xb = x1_state(self.m, c, b);
            let sign_change = (xa < 0.0 && xb >= 0.0) || (xa > 0.0 && xb <= 0.0);
            // Sign flips of rounding noise along a tangent run are not crossings.
            let in_band = xa.abs() < TANGENCY_TOL && xb.abs() < TANGENCY_TOL;
            if sign_change && !in_band && (xb - xa).abs() < PI {
                let (mut lo, mut hi) = (0.0f64, 1.0f64);
                let mut root = *b;
                let mut frac = 1.0;
                if xb != 0.0 {
                    for _ in 0..200 {
                        let mid = 0.5 * (lo + hi);
                        let mut sm = rk4(self.m, a, mid * len);
                        project(self.m, &mut sm, self.tau);
                        let xm = x1_state(self.m, c, &sm);
                        root = sm;
                        frac = mid;
                        if xm.abs() < ROOT_TOL || hi - lo < 1e-15 {
                            break;
                        }
                        if (xm < 0.0) == (xa < 0.0) && xm != 0.0 {
                            lo = mid;
                        } else {
                            hi = mid;
                        }
                    }
                }
                let xi1 = xi1_state(self.m, c, &root);
                let s = s_a + frac * len;
                let point = self.point(&root, s);
                self.events.push(RayEvent::SigmaCrossing {
                    component: ci,
                    s,
                    point,
                    class: CrossingClass::new(xi1 * xi1 / (self.tau * self.tau), self.eps),
                });
                self.tangency[ci] = false;
            } else if xb.abs() < TANGENCY_TOL {
                if !self.tangency[ci] {
                    let s = s_a + len;
                    let point = self.point(b, s);
                    self.events.push(RayEvent::GlancingCandidate {
                        component: ci,
                        s,
                        point,
                    });
                    self.tangency[ci] = true;
                }
            } else {
                self.tangency[ci] = false;
            }
        }
    }
}

/// Integrate the bicharacteristic flow for parameter duration `s` (either sign).
/// With |τ| = 1 the parameter is physical time: t = t₀ − τ s.
pub fn flow(
    m: &ManifoldModel,
    chart: Option<&FermiChart>,
    p: &PhasePoint,
    s: f64,
    opts: &FlowOptions,
) -> Result<RayTrajectory, RayError> {
    if p.tau == 0.0 {
        return Err(RayError::ZeroTau);
    }
    let d0 = p.defect(m)?;
    if d0 > 1e-9 {
        return Err(RayError::OffCharacteristic(d0));
    }
    let tau = p.tau;
    let phys = s.abs() * tau.abs();
    let n = ((phys / opts.step).ceil() as usize).max(1);
    let ds = s / n as f64;
    let mut st = to_state(m, p)?;
    let mut tr = Tracker {
        m,
        chart,
        tau,
        t0: p.t,
        eps: opts.eps_report,
        tangency: vec![false; chart.map_or(0, |c| c.components.len())],
        events: Vec::new(),
    };
    let mut samples = vec![*p];
    let mut max_drift = 0.0f64;
    let mut s_now = 0.0;
    for i in 1..=n {
        let mut remaining = ds;
        let mut cur = st;
        let mut guard = 0;
        loop {
            let mut next = rk4(m, &cur, remaining);
            let drift = project(m, &mut next, tau);
            max_drift = max_drift.max(drift);
            if drift > 1e-6 {
                return Err(RayError::IntegratorDivergence {
                    drift,
                    t: p.t - tau * (s_now + remaining),
                });
            }
            if m.kind == ManifoldKind::Revolution && next[0].abs() > PI && guard < 8 {
                guard += 1;
                let side = next[0].signum();
                let (mut lo, mut hi) = (0.0f64, 1.0f64);
                for _ in 0..100 {
                    let mid = 0.5 * (lo + hi);
                    let sm = rk4(m, &cur, mid * remaining);
                    if sm[0].abs() > PI {
                        hi = mid;
                    } else {
                        lo = mid;
                    }
                }
                let mut hit = rk4(m, &cur, lo * remaining);
                project(m, &mut hit, tau);
                tr.segment(&cur, &hit, s_now, lo * remaining);
                hit[0] = side * PI;
                s_now += lo * remaining;
                if hit[2].abs() <= GLANCING_TOL * tau.abs() {
                    let pt = tr.point(&hit, s_now);
                    return Err(RayError::GlancingBoundaryAbort { t: pt.t, x: pt.x });
                }
                hit[2] = -hit[2];
                let pt = tr.point(&hit, s_now);
                tr.events.push(RayEvent::BoundaryReflection { s: s_now, point: pt });
                remaining *= 1.0 - lo;
                cur = hit;
                continue;
            }
            tr.segment(&cur, &next, s_now, remaining);
            s_now += remaining;
            st = next;
            break;
        }
        if opts.sample_stride > 0 && i % opts.sample_stride == 0 && i != n {
            samples.push(tr.point(&st, s_now));
        }
    }
    // Land exactly on the requested parameter for the recorded endpoint time.
    let end = from_state(m, &st, p.t - tau * s, tau);
    samples.push(end);
    Ok(RayTrajectory {
        samples,
        events: tr.events,
        end,
        max_drift,
    })
}

/// Base-point distance accounting for periodic coordinates.
pub fn base_distance(m: &ManifoldModel, a: [f64; 2], b: [f64; 2]) -> f64 {
    match m.kind {
        ManifoldKind::Torus2 => wrap_pi(a[0] - b[0]).hypot(wrap_pi(a[1] - b[1])),
        ManifoldKind::Revolution => (a[0] - b[0]).hypot(wrap_pi(a[1] - b[1])),
        ManifoldKind::Sphere2 => {
            let e = |x: [f64; 2]| {
                let (st, ct) = x[0].sin_cos();
                let (sp, cp) = x[1].sin_cos();
                [ct * sp, st * sp, cp]
            };
            let (u, v) = (e(a), e(b));
            ((u[0] - v[0]).powi(2) + (u[1] - v[1]).powi(2) + (u[2] - v[2]).powi(2)).sqrt()
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TgccSampling {
    pub nx: usize,
    pub ndir: usize,
    pub step: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RaySeed {
    pub x: [f64; 2],
    pub v: [f64; 2],
    pub sign: f64,
    pub base_index: usize,
    pub dir_index: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RayRecord {
    pub seed: RaySeed,
    /// max over crossings of min(margin, t, T − t); NaN when inconclusive.
    pub best: f64,
    pub inconclusive: bool,
    pub crossings: usize,
    pub first_transversal_time: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Verdict {
    PassAtResolution,
    FailWitness { seed: RaySeed, point: PhasePoint },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TgccReport {
    pub verdict: Verdict,
    pub eps_star: f64,
    pub horizon: f64,
    pub sampling: TgccSampling,
    pub inconclusive_count: usize,
    pub worst: Option<usize>,
    pub rays: Vec<RayRecord>,
}

impl TgccReport {
    pub fn passed(&self) -> bool {
        matches!(self.verdict, Verdict::PassAtResolution)
    }
}

/// Grid of base points: cell-centred on the torus, odd number of latitude rows
/// on the sphere (so the equator is included), cell-centred z rows on the
/// surface of revolution.
pub fn base_points(m: &ManifoldModel, nx: usize) -> Vec<[f64; 2]> {
    let mut pts = Vec::new();
    match m.kind {
        ManifoldKind::Torus2 => {
            let na = ((nx as f64).sqrt().round() as usize).max(1);
            let h = 2.0 * PI / na as f64;
            for i in 0..na {
                for j in 0..na {
                    pts.push([-PI + (i as f64 + 0.5) * h, -PI + (j as f64 + 0.5) * h]);
                }
            }
        }
        ManifoldKind::Sphere2 => {
            let target = (nx as f64 / 2.0).sqrt();
            let mut nlat = (target.round() as usize).max(1);
            if nlat % 2 == 0 {
                nlat = if (nlat as f64) < target { nlat + 1 } else { nlat - 1 };
            }
            let nlon = nx.div_ceil(nlat);
            for i in 0..nlat {
                let ph = PI * (i as f64 + 0.5) / nlat as f64;
                for j in 0..nlon {
                    pts.push([2.0 * PI * j as f64 / nlon as f64, ph]);
                }
            }
        }
        ManifoldKind::Revolution => {
            let mut nz = ((nx as f64).sqrt().round() as usize).max(2);
            if nz % 2 == 1 {
                nz += 1;
            }
            let nt = nx.div_ceil(nz);
            let h = 2.0 * PI / nz as f64;
            for i in 0..nz {
                for j in 0..nt {
                    pts.push([-PI + (i as f64 + 0.5) * h, 2.0 * PI * j as f64 / nt as f64]);
                }
            }
        }
    }
    pts
}

/// Seeds for both signs of τ over the base grid and `ndir` directions.
pub fn ray_seeds(m: &ManifoldModel, nx: usize, ndir: usize) -> Result<Vec<RaySeed>, RayError> {
    let mut seeds = Vec::new();
    for (bi, x) in base_points(m, nx).into_iter().enumerate() {
        let e = m.orthonormal_frame(x)?;
        for k in 0..ndir {
            let a = 2.0 * PI * k as f64 / ndir as f64;
            let (s, c) = a.sin_cos();
            let v = [c * e[0][0] + s * e[1][0], c * e[0][1] + s * e[1][1]];
            for sign in [-1.0, 1.0] {
                seeds.push(RaySeed {
                    x,
                    v,
                    sign,
                    base_index: bi,
                    dir_index: k,
                });
            }
        }
    }
    Ok(seeds)
}

/// Flow one seed over t ∈ (0, T) and score it.
pub fn score_ray(
    m: &ManifoldModel,
    chart: &FermiChart,
    seed: &RaySeed,
    horizon: f64,
    step: f64,
) -> Result<(f64, RayTrajectory), RayError> {
    let p = char_lift(m, seed.x, seed.v, seed.sign)?;
    // t = −τ s, so τ = +1 rays run with negative parameter.
    let s = -seed.sign * horizon;
    let opts = FlowOptions {
        step,
        ..Default::default()
    };
    let tr = flow(m, Some(chart), &p, s, &opts)?;
    let best = tr
        .crossings()
        .map(|(_, _, pt, c)| c.margin.min(pt.t).min(horizon - pt.t))
        .fold(0.0f64, f64::max);
    Ok((best, tr))
}

pub fn check_tgcc(
    m: &ManifoldModel,
    sigma: &Hypersurface,
    horizon: f64,
    sampling: TgccSampling,
) -> Result<TgccReport, RayError> {
    if !(horizon > 0.0) {
        return Err(RayError::BadHorizon);
    }
    if sampling.nx < 8 || sampling.ndir < 8 {
        return Err(RayError::BadSampling {
            nx: sampling.nx,
            ndir: sampling.ndir,
        });
    }
    let chart = fermi_chart(m, sigma)?;
    let seeds = ray_seeds(m, sampling.nx, sampling.ndir)?;
    let scored: Vec<Result<(f64, Vec<(f64, f64)>), RayError>> = seeds
        .par_iter()
        .map(|seed| match score_ray(m, &chart, seed, horizon, sampling.step) {
            Ok((best, tr)) => {
                let cr = tr
                    .crossings()
                    .map(|(_, _, pt, c)| (pt.t, c.margin))
                    .collect();
                Ok((best, cr))
            }
            Err(e) => Err(e),
        })
        .collect();
    let mut rays = Vec::with_capacity(seeds.len());
    let mut crossing_lists = Vec::with_capacity(seeds.len());
    let mut inconclusive_count = 0;
    for (seed, r) in seeds.iter().zip(scored) {
        match r {
            Ok((best, cr)) => {
                rays.push(RayRecord {
                    seed: *seed,
                    best,
                    inconclusive: false,
                    crossings: cr.len(),
                    first_transversal_time: None,
                });
                crossing_lists.push(cr);
            }
            Err(RayError::GlancingBoundaryAbort { .. }) => {
                inconclusive_count += 1;
                rays.push(RayRecord {
                    seed: *seed,
                    best: f64::NAN,
                    inconclusive: true,
                    crossings: 0,
                    first_transversal_time: None,
                });
                crossing_lists.push(Vec::new());
            }
            Err(e) => return Err(e),
        }
    }
    let mut worst = None;
    let mut eps_star = f64::INFINITY;
    for (i, r) in rays.iter().enumerate() {
        if !r.inconclusive && r.best < eps_star {
            eps_star = r.best;
            worst = Some(i);
        }
    }
    if worst.is_none() {
        eps_star = 0.0;
    }
    for (r, cr) in rays.iter_mut().zip(&crossing_lists) {
        r.first_transversal_time = cr
            .iter()
            .find(|(t, mg)| {
                *mg > eps_star.min(r.best * 0.999999) && *t > 0.0 && *t < horizon
            })
            .map(|(t, _)| *t);
    }
    let verdict = match worst {
        Some(i) if eps_star <= PASS_FLOOR => {
            let seed = rays[i].seed;
            Verdict::FailWitness {
                seed,
                point: char_lift(m, seed.x, seed.v, seed.sign)?,
            }
        }
        None => {
            let seed = rays[0].seed;
            Verdict::FailWitness {
                seed,
                point: char_lift(m, seed.x, seed.v, seed.sign)?,
            }
        }
        _ => Verdict::PassAtResolution,
    };
    Ok(TgccReport {
        verdict,
        eps_star,
        horizon,
        sampling,
        inconclusive_count,
        worst,
        rays,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::SigmaComponent;

    #[test]
    fn torus_straight_line() {
        let m = ManifoldModel::torus();
        let p = char_lift(&m, [1.0, 0.0], [1.0, 0.0], -1.0).unwrap();
        assert_eq!(p.tau, -1.0);
        assert_eq!(p.xi, [1.0, 0.0]);
        let tr = flow(&m, None, &p, PI, &FlowOptions::default()).unwrap();
        assert!((tr.end.x[0] - wrap_pi(1.0 + PI)).abs() < 1e-12);
        assert!(tr.end.x[1].abs() < 1e-15);
        assert_eq!(tr.end.xi, [1.0, 0.0]);
        assert!((tr.end.t - PI).abs() < 1e-15);
    }

    #[test]
    fn lift_rejects_non_unit() {
        let m = ManifoldModel::torus();
        assert!(matches!(
            char_lift(&m, [0.0, 0.0], [2.0, 0.0], 1.0),
            Err(RayError::NotUnitDirection(_))
        ));
    }

    #[test]
    fn sphere_equator_glancing() {
        let m = ManifoldModel::sphere();
        let sigma = Hypersurface::single(SigmaComponent::SphereEquator);
        let chart = fermi_chart(&m, &sigma).unwrap();
        let p = char_lift(&m, [0.0, PI / 2.0], [1.0, 0.0], -1.0).unwrap();
        assert!((p.xi[0] - 1.0).abs() < 1e-15 && p.xi[1] == 0.0);
        let tr = flow(&m, Some(&chart), &p, 2.0 * PI, &FlowOptions::default()).unwrap();
        assert_eq!(tr.crossings().count(), 0);
        assert!(base_distance(&m, tr.end.x, p.x) < 1e-9);
    }

    #[test]
    fn sphere_meridian_crosses_twice() {
        let m = ManifoldModel::sphere();
        let sigma = Hypersurface::single(SigmaComponent::SphereEquator);
        let chart = fermi_chart(&m, &sigma).unwrap();
        // Start near the north pole heading south along θ = 0.3.
        let p = char_lift(&m, [0.3, 0.2], [0.0, 1.0], -1.0).unwrap();
        let tr = flow(&m, Some(&chart), &p, 2.0 * PI, &FlowOptions::default()).unwrap();
        let cs: Vec<_> = tr.crossings().collect();
        assert_eq!(cs.len(), 2);
        for (_, _, _, c) in cs {
            assert!((c.margin - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn reflection_examples() {
        let m = ManifoldModel::revolution(crate::geometry::RevolutionProfile::canonical());
        let p = PhasePoint {
            t: 0.0,
            x: [PI, 0.0],
            tau: -1.0,
            xi: [1.0, 0.0],
        };
        assert_eq!(reflect(&m, &p).unwrap().xi, [-1.0, 0.0]);
        let g = PhasePoint { xi: [0.0, 1.0], ..p };
        assert!(matches!(reflect(&m, &g), Err(RayError::GlancingContact(_))));
        let rpi = m.profile().r(PI);
        let o = PhasePoint {
            xi: [0.6, 0.8 * rpi],
            ..p
        };
        let r = reflect(&m, &o).unwrap();
        assert_eq!(r.xi, [-0.6, 0.8 * rpi]);
        let n0 = metric_norm(&m, o.x, o.xi).unwrap();
        let n1 = metric_norm(&m, r.x, r.xi).unwrap();
        assert!((n0 - n1).abs() < 1e-15);
    }

    #[test]
    fn classify_examples() {
        let m = ManifoldModel::torus();
        let chart = fermi_chart(&m, &Hypersurface::single(SigmaComponent::TorusCircleX0)).unwrap();
        let c = &chart.components[0];
        let mk = |xi1: f64| PhasePoint {
            t: 0.0,
            x: [0.0, 0.4],
            tau: 1.0,
            xi: [xi1, (1.0 - xi1 * xi1).sqrt()],
        };
        let a = classify_crossing(c, &mk(1.0), 0.5).unwrap();
        assert!(a.transverse && (a.margin - 1.0).abs() < 1e-15);
        let b = classify_crossing(c, &mk(0.0), 0.0).unwrap();
        assert!(!b.transverse);
        let p = mk(0.6);
        assert!(classify_crossing(c, &p, 0.3).unwrap().transverse);
        assert!(!classify_crossing(c, &p, 0.4).unwrap().transverse);
        let off = PhasePoint { x: [0.5, 0.0], ..p };
        assert!(matches!(classify_crossing(c, &off, 0.1), Err(RayError::NotOnSigma(_))));
    }
}
