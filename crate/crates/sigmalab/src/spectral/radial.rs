//! Semiclassical radial problem on (0, π) for the surface of revolution:
//! P_h = −h²∂_z² + 1/R² + h²V₁ with Dirichlet at π and Dirichlet or Neumann at 0.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use super::SpectralError;
use crate::geometry::RevolutionProfile;
use crate::linalg::Tridiagonal;
use crate::quad;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Bc0 {
    Dirichlet,
    Neumann,
}

/// Parity of the extension across the waist z = 0.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Parity {
    Even,
    Odd,
}

impl Bc0 {
    pub fn parity(self) -> Parity {
        match self {
            Bc0::Dirichlet => Parity::Odd,
            Bc0::Neumann => Parity::Even,
        }
    }
}

impl Parity {
    pub fn bc0(self) -> Bc0 {
        match self {
            Parity::Odd => Bc0::Dirichlet,
            Parity::Even => Bc0::Neumann,
        }
    }

    pub fn tag(self) -> &'static str {
        match self {
            Parity::Even => "e",
            Parity::Odd => "o",
        }
    }
}

pub const MIN_GRID: usize = 200;

/// One eigenpair. `psi[i]` is the value at z = iπ/N, i = 0..=N, normalized so
/// the trapezoid integral of ψ² over (0, π) is 1/2 (the mirrored function has unit norm).
#[derive(Clone, Debug, PartialEq)]
pub struct RadialPair {
    pub index: usize,
    pub energy: f64,
    pub psi: Vec<f64>,
    /// Discrete relative residual ‖(P_h − E)ψ‖/‖ψ‖.
    pub residual: f64,
}

#[derive(Clone, Debug)]
pub struct RadialEigenproblem {
    pub profile: RevolutionProfile,
    pub h: f64,
    pub bc0: Bc0,
    pub grid_n: usize,
    pub window: (f64, f64),
    pub pairs: Vec<RadialPair>,
}

impl RadialEigenproblem {
    pub fn k(&self) -> f64 {
        1.0 / self.h
    }

    pub fn dz(&self) -> f64 {
        PI / self.grid_n as f64
    }

    pub fn energies(&self) -> Vec<f64> {
        self.pairs.iter().map(|p| p.energy).collect()
    }

    /// Largest |⟨ψ_i, ψ_j⟩| (i ≠ j) and largest |‖ψ_i‖² − 1/2| in the trapezoid product.
    pub fn orthogonality_defect(&self) -> (f64, f64) {
        let dz = self.dz();
        let ip = |a: &[f64], b: &[f64]| -> f64 {
            let n = a.len() - 1;
            let mut s = 0.5 * (a[0] * b[0] + a[n] * b[n]);
            for i in 1..n {
                s += a[i] * b[i];
            }
            s * dz
        };
        let mut off: f64 = 0.0;
        let mut diag: f64 = 0.0;
        for (i, a) in self.pairs.iter().enumerate() {
            diag = diag.max((ip(&a.psi, &a.psi) - 0.5).abs());
            for b in &self.pairs[i + 1..] {
                off = off.max(2.0 * ip(&a.psi, &b.psi).abs());
            }
        }
        (off, diag)
    }
}

/// Discretized operator: node diagonals d_i (i = 0..N−1) and the constant off-diagonal.
pub(crate) struct RadialOperator {
    pub d: Vec<f64>,
    pub e: f64,
    /// Potential V + h²V₁ at the nodes.
    pub w: Vec<f64>,
    pub n: usize,
    pub bc0: Bc0,
}

impl RadialOperator {
    pub fn new(profile: &RevolutionProfile, h: f64, bc0: Bc0, n: usize) -> Self {
        let dz = PI / n as f64;
        let h2 = h * h;
        let w: Vec<f64> = (0..=n)
            .map(|i| {
                let pv = profile.eval(i as f64 * dz);
                pv.v + h2 * pv.v1
            })
            .collect();
        let d = (0..n).map(|i| 2.0 * h2 / (dz * dz) + w[i]).collect();
        RadialOperator {
            d,
            e: -h2 / (dz * dz),
            w,
            n,
            bc0,
        }
    }

    pub fn tridiagonal(&self) -> Tridiagonal {
        match self.bc0 {
            Bc0::Dirichlet => Tridiagonal {
                d: self.d[1..].to_vec(),
                e: vec![self.e; self.n - 2],
            },
            Bc0::Neumann => {
                let mut e = vec![self.e; self.n - 1];
                e[0] *= 2f64.sqrt();
                Tridiagonal {
                    d: self.d.clone(),
                    e,
                }
            }
        }
    }

    /// (P_h ψ)_i on the unknown rows, with the mirror ghost ψ_{−1} = ψ_1 for Neumann.
    pub fn apply_row(&self, psi: &[f64], i: usize) -> f64 {
        let left = if i == 0 { psi[1] } else { psi[i - 1] };
        self.d[i] * psi[i] + self.e * (left + psi[i + 1])
    }

    fn first_row(&self) -> usize {
        match self.bc0 {
            Bc0::Dirichlet => 1,
            Bc0::Neumann => 0,
        }
    }

    pub fn relative_residual(&self, psi: &[f64], energy: f64) -> f64 {
        let mut num = 0.0;
        let mut den = 0.0;
        for i in self.first_row()..self.n {
            let wgt = if i == 0 { 0.5 } else { 1.0 };
            let r = self.apply_row(psi, i) - energy * psi[i];
            num += wgt * r * r;
            den += wgt * psi[i] * psi[i];
        }
        (num / den).sqrt()
    }

    /// Eigenvector for an accurate eigenvalue: forward and backward three-term
    /// recurrences glued at a node of the classically allowed region.
    pub fn eigenvector(&self, energy: f64) -> Vec<f64> {
        let n = self.n;
        let e = self.e;
        const BIG: f64 = 1e150;
        let allowed: Vec<usize> = (1..n).filter(|&i| self.w[i] < energy).collect();
        let (ia, ib) = match (allowed.first(), allowed.last()) {
            (Some(&a), Some(&b)) => (a, b),
            _ => (n / 2, n / 2),
        };
        // Each recurrence only runs into the allowed region, never through the far
        // forbidden zone where it would amplify the wrong solution.
        let mut f = vec![0.0; n + 1];
        match self.bc0 {
            Bc0::Dirichlet => {
                f[0] = 0.0;
                f[1] = 1.0;
            }
            Bc0::Neumann => {
                f[0] = 1.0;
                f[1] = (energy - self.d[0]) / (2.0 * e);
            }
        }
        for i in 1..(ib + 1).min(n) {
            f[i + 1] = ((energy - self.d[i]) * f[i] - e * f[i - 1]) / e;
            if f[i + 1].abs() > BIG {
                f[..=i + 1].iter_mut().for_each(|v| *v /= BIG);
            }
        }
        let mut b = vec![0.0; n + 1];
        b[n] = 0.0;
        b[n - 1] = 1.0;
        for i in (ia.max(1)..n).rev() {
            b[i - 1] = ((energy - self.d[i]) * b[i] - e * b[i + 1]) / e;
            if b[i - 1].abs() > BIG {
                b[i - 1..].iter_mut().for_each(|v| *v /= BIG);
            }
        }
        let fmax = allowed_max(&f, &self.w, energy);
        let bmax = allowed_max(&b, &self.w, energy);
        let mut m = n / 2;
        let mut best = -1.0;
        for i in ia..=ib {
            if self.w[i] < energy {
                let q = (f[i].abs() / fmax).min(b[i].abs() / bmax);
                if q > best {
                    best = q;
                    m = i;
                }
            }
        }
        let scale = f[m] / b[m];
        let mut psi: Vec<f64> = (0..=n)
            .map(|i| if i <= m { f[i] } else { b[i] * scale })
            .collect();
        if self.bc0 == Bc0::Dirichlet {
            psi[0] = 0.0;
        }
        psi[n] = 0.0;
        let dz = PI / n as f64;
        let mut norm2 = 0.5 * psi[0] * psi[0];
        for v in &psi[1..n] {
            norm2 += v * v;
        }
        norm2 *= dz;
        let c = (0.5 / norm2).sqrt();
        // Sign convention: positive where |ψ| is largest.
        let imax = psi
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
            .map(|(i, _)| i)
            .unwrap_or(0);
        let sign = if psi[imax] < 0.0 { -1.0 } else { 1.0 };
        psi.iter_mut().for_each(|v| *v *= c * sign);
        psi
    }
}

fn allowed_max(v: &[f64], w: &[f64], energy: f64) -> f64 {
    let mut m: f64 = 0.0;
    for i in 1..v.len() - 1 {
        if w[i] < energy {
            m = m.max(v[i].abs());
        }
    }
    if m == 0.0 {
        1.0
    } else {
        m
    }
}

/// Solve with k = 1/h integral.
pub fn radial_eigensolve(
    profile: &RevolutionProfile,
    k: u32,
    bc0: Bc0,
    grid_n: usize,
    window: (f64, f64),
) -> Result<RadialEigenproblem, SpectralError> {
    if k < 2 {
        return Err(SpectralError::AngularIndexTooSmall(k));
    }
    radial_eigensolve_h(profile, 1.0 / k as f64, bc0, grid_n, window)
}

/// All eigenpairs with energy in `window`. An empty window is not an error.
pub fn radial_eigensolve_h(
    profile: &RevolutionProfile,
    h: f64,
    bc0: Bc0,
    grid_n: usize,
    window: (f64, f64),
) -> Result<RadialEigenproblem, SpectralError> {
    if grid_n < MIN_GRID {
        return Err(SpectralError::GridTooCoarse(grid_n));
    }
    if !(h > 0.0) || !(window.0 <= window.1) {
        return Err(SpectralError::InvalidArgument(format!(
            "h = {h}, window = [{}, {}]",
            window.0, window.1
        )));
    }
    let op = RadialOperator::new(profile, h, bc0, grid_n);
    let t = op.tridiagonal();
    let i0 = t.count_below(window.0);
    let i1 = t.count_below(window.1);
    let pairs = (i0..i1)
        .into_par_iter()
        .map(|idx| {
            let energy = t.eigenvalue(idx);
            let psi = op.eigenvector(energy);
            let residual = op.relative_residual(&psi, energy);
            RadialPair {
                index: idx,
                energy,
                psi,
                residual,
            }
        })
        .collect();
    Ok(RadialEigenproblem {
        profile: profile.clone(),
        h,
        bc0,
        grid_n,
        window,
        pairs,
    })
}

/// Only the largest eigenpair in the window, if any.
pub fn top_window_pair(
    profile: &RevolutionProfile,
    h: f64,
    bc0: Bc0,
    grid_n: usize,
    window: (f64, f64),
) -> Result<Option<RadialPair>, SpectralError> {
    if grid_n < MIN_GRID {
        return Err(SpectralError::GridTooCoarse(grid_n));
    }
    let op = RadialOperator::new(profile, h, bc0, grid_n);
    let t = op.tridiagonal();
    let i0 = t.count_below(window.0);
    let i1 = t.count_below(window.1);
    if i1 <= i0 {
        return Ok(None);
    }
    let energy = t.eigenvalue(i1 - 1);
    let psi = op.eigenvector(energy);
    let residual = op.relative_residual(&psi, energy);
    Ok(Some(RadialPair {
        index: i1 - 1,
        energy,
        psi,
        residual,
    }))
}

/// Number of eigenvalues of the discrete P_h in [a, b) without computing them.
pub fn count_in_window(profile: &RevolutionProfile, h: f64, bc0: Bc0, grid_n: usize, window: (f64, f64)) -> usize {
    let t = RadialOperator::new(profile, h, bc0, grid_n).tridiagonal();
    t.count_below(window.1) - t.count_below(window.0)
}

/// Phase-space area |{(z, ξ) ∈ (0,π)×ℝ : ξ² + V(z) ∈ [a, b]}| with V = 1/R².
pub fn phase_space_area(profile: &RevolutionProfile, window: (f64, f64)) -> f64 {
    let (a, b) = window;
    let f = |z: f64| {
        let v = profile.eval(z).v;
        2.0 * ((b - v).max(0.0).sqrt() - (a - v).max(0.0).sqrt())
    };
    quad::integrate(f, 0.0, PI, 4096, 8)
}

/// (discrete count in the window, Weyl prediction (2πh)⁻¹·area).
pub fn weyl_count(
    profile: &RevolutionProfile,
    h: f64,
    bc0: Bc0,
    grid_n: usize,
    window: (f64, f64),
) -> Result<(usize, f64), SpectralError> {
    if h > 0.1 || h <= 0.0 {
        return Err(SpectralError::InvalidArgument(format!("Weyl count needs 0 < h <= 1/10, got {h}")));
    }
    if grid_n < MIN_GRID {
        return Err(SpectralError::GridTooCoarse(grid_n));
    }
    let count = count_in_window(profile, h, bc0, grid_n, window);
    let pred = phase_space_area(profile, window) / (2.0 * PI * h);
    Ok((count, pred))
}

/// Smallest k₀ ≤ kmax such that the window holds eigenvalues of both parities for
/// every k ∈ [k₀, kmax]; `None` if even kmax fails.
pub fn window_onset(profile: &RevolutionProfile, kmax: u32, grid_n: usize, window: (f64, f64)) -> Option<u32> {
    let ok = |k: u32| {
        let h = 1.0 / k as f64;
        count_in_window(profile, h, Bc0::Neumann, grid_n, window) > 0
            && count_in_window(profile, h, Bc0::Dirichlet, grid_n, window) > 0
    };
    if !ok(kmax) {
        return None;
    }
    let mut k0 = kmax;
    while k0 > 2 && ok(k0 - 1) {
        k0 -= 1;
    }
    Some(k0)
}

/// Observed convergence order of the lowest window eigenvalue from grids n, 2n, 4n.
pub fn richardson_order(
    profile: &RevolutionProfile,
    k: u32,
    bc0: Bc0,
    grid_n: usize,
    window: (f64, f64),
) -> Result<(f64, [f64; 3]), SpectralError> {
    let h = 1.0 / k as f64;
    let base = RadialOperator::new(profile, h, bc0, grid_n).tridiagonal();
    let idx = base.count_below(window.0);
    if idx >= base.count_below(window.1) {
        return Err(SpectralError::WindowEmpty);
    }
    let e: Vec<f64> = [grid_n, 2 * grid_n, 4 * grid_n]
        .iter()
        .map(|&n| RadialOperator::new(profile, h, bc0, n).tridiagonal().eigenvalue(idx))
        .collect();
    let order = ((e[0] - e[1]) / (e[1] - e[2])).abs().log2();
    Ok((order, [e[0], e[1], e[2]]))
}

/// Agmon distance from the turning point z_E to 0: ∫₀^{z_E} √(max(V − E, 0)) dz,
/// where z_E is the first z > 0 with V(z) = E.
pub fn agmon_distance(profile: &RevolutionProfile, energy: f64) -> f64 {
    let v = |z: f64| profile.eval(z).v;
    if v(0.0) <= energy {
        return 0.0;
    }
    let n = 20_000;
    let dz = PI / n as f64;
    let mut hi = None;
    for i in 1..=n {
        if v(i as f64 * dz) <= energy {
            hi = Some(i as f64 * dz);
            break;
        }
    }
    let Some(mut b) = hi else {
        return f64::INFINITY;
    };
    let mut a = b - dz;
    for _ in 0..100 {
        let mid = 0.5 * (a + b);
        if v(mid) > energy {
            a = mid;
        } else {
            b = mid;
        }
    }
    let ze = 0.5 * (a + b);
    quad::integrate_sqrt_endpoint(|z| (v(z) - energy).max(0.0).sqrt(), 0.0, ze, 64)
}

/// min over E ∈ window of the Agmon distance (scanned on a fine grid).
pub fn agmon_prediction(profile: &RevolutionProfile, window: (f64, f64)) -> f64 {
    let n = 200;
    (0..=n)
        .map(|i| window.0 + (window.1 - window.0) * i as f64 / n as f64)
        .map(|e| agmon_distance(profile, e))
        .fold(f64::INFINITY, f64::min)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AgmonFit {
    pub c_fit: f64,
    pub prediction: f64,
    pub r2: f64,
    pub ks: Vec<u32>,
    pub sup_norms: Vec<f64>,
    pub energies: Vec<f64>,
}

impl AgmonFit {
    pub fn relative_error(&self) -> f64 {
        (self.c_fit - self.prediction).abs() / self.prediction
    }
}

/// sup over |z| ≤ ε of |R^{−1/2}ψ|/√(2π) for the mirrored eigenfunction.
pub fn sup_near_waist(profile: &RevolutionProfile, pair: &RadialPair, grid_n: usize, eps: f64) -> f64 {
    let dz = PI / grid_n as f64;
    let imax = ((eps / dz).floor() as usize).min(grid_n);
    (0..=imax)
        .map(|i| pair.psi[i].abs() / profile.r(i as f64 * dz).sqrt())
        .fold(0.0, f64::max)
        / (2.0 * PI).sqrt()
}

/// Fit log ‖u‖_{L∞(−ε,ε)} ≈ a − c k over the given k, using the largest window
/// eigenvalue of the given parity at each k.
pub fn agmon_rate_fit(
    profile: &RevolutionProfile,
    ks: &[u32],
    eps: f64,
    parity: Parity,
    grid_n: usize,
    window: (f64, f64),
) -> Result<AgmonFit, SpectralError> {
    if ks.len() < 4 {
        return Err(SpectralError::InsufficientPoints(ks.len()));
    }
    let rows: Result<Vec<(f64, f64)>, SpectralError> = ks
        .par_iter()
        .map(|&k| {
            let pair = top_window_pair(profile, 1.0 / k as f64, parity.bc0(), grid_n, window)?
                .ok_or(SpectralError::WindowEmpty)?;
            Ok((sup_near_waist(profile, &pair, grid_n, eps), pair.energy))
        })
        .collect();
    let rows = rows?;
    let x: Vec<f64> = ks.iter().map(|&k| k as f64).collect();
    let y: Vec<f64> = rows.iter().map(|r| r.0.ln()).collect();
    let fit = crate::fit::line_fit(&x, &y);
    Ok(AgmonFit {
        c_fit: -fit.slope,
        prediction: agmon_prediction(profile, window),
        r2: fit.r2,
        ks: ks.to_vec(),
        sup_norms: rows.iter().map(|r| r.0).collect(),
        energies: rows.iter().map(|r| r.1).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_profile_matches_sine_series() {
        // R ≡ 1: V = 1, V₁ = 0, Dirichlet both ends → E = 1 + h² j² (up to O(dz²)).
        let p = RevolutionProfile::from_cos_coeffs(vec![1.0]).unwrap();
        let h = 0.1;
        let prob = radial_eigensolve_h(&p, h, Bc0::Dirichlet, 2000, (1.0, 1.2)).unwrap();
        for pair in &prob.pairs {
            let j = pair.index as f64 + 1.0;
            assert!((pair.energy - 1.0 - h * h * j * j).abs() < 1e-4 * h * h * j * j + 1e-6);
            assert!(pair.residual < 1e-10);
        }
        let (off, diag) = prob.orthogonality_defect();
        assert!(off < 1e-10 && diag < 1e-12);
    }

    #[test]
    fn neumann_constant_profile() {
        let p = RevolutionProfile::from_cos_coeffs(vec![1.0]).unwrap();
        let h = 0.1;
        // Neumann at 0, Dirichlet at π: ψ = cos((j + 1/2) z).
        let prob = radial_eigensolve_h(&p, h, Bc0::Neumann, 4000, (1.0, 1.05)).unwrap();
        for pair in &prob.pairs {
            let j = pair.index as f64 + 0.5;
            assert!((pair.energy - 1.0 - h * h * j * j).abs() < 1e-4);
            let dz = PI / 4000.0;
            let exact = (j * 100.0 * dz).cos() / PI.sqrt();
            assert!((pair.psi[100].abs() - exact.abs()).abs() < 1e-4);
        }
    }
}
