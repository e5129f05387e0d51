//! Observability Gramians G_jk = w_jk B_jk with the exact time weight
//! w_jk = ∫₀^ℓ e^{−t(λ_j²+λ_k²)} dt, factored block by block in extended precision.

use nalgebra::DMatrix;
use rug::Float;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;

use super::model::{ExactTrace, SpectralModel};
use super::LrError;
use crate::mp::{adaptive_factor, AdaptiveFactor, MpSym, START_PREC};

/// Time weights (1 − e^{−ℓs})/s at one precision, cached by s.
pub struct WeightCache {
    prec: u32,
    ell: Float,
    map: HashMap<u64, Float>,
}

impl WeightCache {
    pub fn new(ell: f64, prec: u32) -> Self {
        WeightCache {
            prec,
            ell: Float::with_val(prec, ell),
            map: HashMap::new(),
        }
    }

    pub fn get(&mut self, s: f64) -> &Float {
        let prec = self.prec;
        let ell = &self.ell;
        self.map.entry(s.to_bits()).or_insert_with(|| {
            if s == 0.0 {
                ell.clone()
            } else {
                let x = Float::with_val(prec, -(ell * Float::with_val(prec, s)));
                let em1 = x.exp_m1();
                -em1 / Float::with_val(prec, s)
            }
        })
    }
}

/// f64 time weight.
pub fn time_weight(ell: f64, s: f64) -> f64 {
    if s == 0.0 {
        ell
    } else {
        -(-ell * s).exp_m1() / s
    }
}

/// Independent sub-problems of a Gramian on an index set.
#[derive(Clone, Debug, PartialEq)]
pub enum Block {
    Plain(Vec<usize>),
    /// `image[i] = σ(base[i])`; the image block has the same matrix.
    Mirrored { base: Vec<usize>, image: Vec<usize> },
    /// σ-invariant block split into symmetric and antisymmetric parts.
    Split { fixed: Vec<usize>, pairs: Vec<(usize, usize)> },
}

impl Block {
    pub fn size(&self) -> usize {
        match self {
            Block::Plain(v) => v.len(),
            Block::Mirrored { base, .. } => 2 * base.len(),
            Block::Split { fixed, pairs } => fixed.len() + 2 * pairs.len(),
        }
    }
}

/// Connected components of the trace graph restricted to `idx`, reduced by the
/// model's basis involution when present.
pub fn plan_blocks(model: &SpectralModel, idx: &[usize]) -> Vec<Block> {
    let n = model.len();
    let mut inside = vec![false; n];
    for &i in idx {
        inside[i] = true;
    }
    let mut comp = vec![usize::MAX; n];
    let mut comps: Vec<Vec<usize>> = Vec::new();
    for &s in idx {
        if comp[s] != usize::MAX {
            continue;
        }
        let c = comps.len();
        let mut stack = vec![s];
        comp[s] = c;
        let mut members = Vec::new();
        while let Some(v) = stack.pop() {
            members.push(v);
            for &(w, _) in model.trace_row(v) {
                if inside[w] && comp[w] == usize::MAX {
                    comp[w] = c;
                    stack.push(w);
                }
            }
        }
        members.sort_unstable();
        comps.push(members);
    }
    let Some(sw) = model.swap() else {
        return comps.into_iter().map(Block::Plain).collect();
    };
    let mut done = vec![false; comps.len()];
    let mut blocks = Vec::new();
    for c in 0..comps.len() {
        if done[c] {
            continue;
        }
        done[c] = true;
        let members = &comps[c];
        let img_comp = comp[sw[members[0]]];
        if img_comp == c {
            let mut fixed = Vec::new();
            let mut pairs = Vec::new();
            for &a in members {
                let b = sw[a];
                if a == b {
                    fixed.push(a);
                } else if a < b {
                    pairs.push((a, b));
                }
            }
            blocks.push(Block::Split { fixed, pairs });
        } else {
            done[img_comp] = true;
            let image = members.iter().map(|&a| sw[a]).collect();
            blocks.push(Block::Mirrored {
                base: members.clone(),
                image,
            });
        }
    }
    blocks
}

/// Gramian entry G_ab at the cache's precision.
fn entry(model: &SpectralModel, tr: &ExactTrace, w: &mut WeightCache, prec: u32, a: usize, b: usize) -> Float {
    if model.trace_entry(a, b) == 0.0 {
        return Float::new(prec);
    }
    let s = model.lambda2[a] + model.lambda2[b];
    tr.entry(a, b) * w.get(s)
}

/// Which reduced system of a block.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Part {
    Whole,
    Sym,
    Anti,
}

fn build_system(model: &SpectralModel, block: &Block, part: Part, ell: f64, prec: u32) -> MpSym {
    let mut w = WeightCache::new(ell, prec);
    let tr = ExactTrace::new(model, prec);
    match (block, part) {
        (Block::Plain(v), _) | (Block::Mirrored { base: v, .. }, _) => {
            MpSym::from_fn(v.len(), prec, |i, j| entry(model, &tr, &mut w, prec, v[i], v[j]))
        }
        (Block::Split { fixed, pairs }, Part::Sym) => {
            let nf = fixed.len();
            let sqrt2 = Float::with_val(prec, 2).sqrt();
            MpSym::from_fn(nf + pairs.len(), prec, |i, j| match (i < nf, j < nf) {
                (true, true) => entry(model, &tr, &mut w, prec, fixed[i], fixed[j]),
                (false, true) => Float::with_val(prec, &sqrt2 * entry(model, &tr, &mut w, prec, pairs[i - nf].0, fixed[j])),
                (true, false) => Float::with_val(prec, &sqrt2 * entry(model, &tr, &mut w, prec, fixed[i], pairs[j - nf].0)),
                (false, false) => {
                    let (a, _) = pairs[i - nf];
                    let (b, sb) = pairs[j - nf];
                    entry(model, &tr, &mut w, prec, a, b) + entry(model, &tr, &mut w, prec, a, sb)
                }
            })
        }
        (Block::Split { pairs, .. }, _) => MpSym::from_fn(pairs.len(), prec, |i, j| {
            let (a, _) = pairs[i];
            let (b, sb) = pairs[j];
            entry(model, &tr, &mut w, prec, a, b) - entry(model, &tr, &mut w, prec, a, sb)
        }),
    }
}

#[derive(Clone, Debug)]
pub struct FactoredBlock {
    pub block: Block,
    factors: Vec<(Part, AdaptiveFactor)>,
}

/// Gramian of E_λ over a time interval of length ℓ, ready for solves.
#[derive(Clone, Debug)]
pub struct GramianFactor {
    pub ell: f64,
    pub cutoff: f64,
    pub idx: Vec<usize>,
    pub blocks: Vec<FactoredBlock>,
}

impl GramianFactor {
    pub fn new(model: &SpectralModel, cutoff: f64, ell: f64) -> Result<Self, LrError> {
        Self::with_start_precision(model, cutoff, ell, START_PREC)
    }

    /// As `new`, first trying `start` bits (a good guess saves a wasted factorization).
    pub fn with_start_precision(model: &SpectralModel, cutoff: f64, ell: f64, start: u32) -> Result<Self, LrError> {
        let idx = model.truncation(cutoff);
        if idx.is_empty() {
            return Err(LrError::EmptyTruncation(cutoff));
        }
        let blocks = plan_blocks(model, &idx);
        let mut out = Vec::with_capacity(blocks.len());
        for block in blocks {
            let parts: &[Part] = match &block {
                Block::Split { pairs, .. } if pairs.is_empty() => &[Part::Sym],
                Block::Split { fixed, .. } if fixed.is_empty() => &[Part::Sym, Part::Anti],
                Block::Split { .. } => &[Part::Sym, Part::Anti],
                _ => &[Part::Whole],
            };
            let mut factors = Vec::new();
            for &p in parts {
                let f = adaptive_factor(|prec| build_system(model, &block, p, ell, prec), start).map_err(|e| {
                    LrError::GramianSingular {
                        cutoff,
                        detail: e.to_string(),
                    }
                })?;
                factors.push((p, f));
            }
            out.push(FactoredBlock { block, factors });
        }
        Ok(GramianFactor {
            ell,
            cutoff,
            idx,
            blocks: out,
        })
    }

    pub fn ln_min_eig(&self) -> f64 {
        self.blocks
            .iter()
            .flat_map(|b| b.factors.iter().map(|f| f.1.ln_min_eig))
            .fold(f64::INFINITY, f64::min)
    }

    pub fn ln_max_eig(&self) -> f64 {
        self.blocks
            .iter()
            .flat_map(|b| b.factors.iter().map(|f| f.1.ln_max_eig))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn log2_cond(&self) -> f64 {
        (self.ln_max_eig() - self.ln_min_eig()) / std::f64::consts::LN_2
    }

    pub fn max_prec(&self) -> u32 {
        self.blocks
            .iter()
            .flat_map(|b| b.factors.iter().map(|f| f.1.chol.prec))
            .max()
            .unwrap_or(START_PREC)
    }

    /// Solve G c = r for r given on the full model index (entries outside E_λ ignored).
    pub fn solve(&self, r: &[Float], prec: u32) -> Vec<Float> {
        let mut c: Vec<Float> = (0..r.len()).map(|_| Float::new(prec)).collect();
        for fb in &self.blocks {
            let get = |p: Part| &fb.factors.iter().find(|f| f.0 == p).expect("factor").1.chol;
            match &fb.block {
                Block::Plain(v) => {
                    let x = get(Part::Whole).solve(&gather(r, v));
                    scatter(&mut c, v, x);
                }
                Block::Mirrored { base, image } => {
                    let ch = get(Part::Whole);
                    scatter(&mut c, base, ch.solve(&gather(r, base)));
                    scatter(&mut c, image, ch.solve(&gather(r, image)));
                }
                Block::Split { fixed, pairs } => {
                    let ps = get(Part::Sym).prec.max(prec);
                    let sqrt2 = Float::with_val(ps, 2).sqrt();
                    let mut rs: Vec<Float> = fixed.iter().map(|&f| r[f].clone()).collect();
                    rs.extend(pairs.iter().map(|&(a, b)| Float::with_val(ps, &r[a] + &r[b]) / &sqrt2));
                    let ys = get(Part::Sym).solve(&rs);
                    for (i, &f) in fixed.iter().enumerate() {
                        c[f] = Float::with_val(prec, &ys[i]);
                    }
                    let nf = fixed.len();
                    if pairs.is_empty() {
                        continue;
                    }
                    let ra: Vec<Float> = pairs
                        .iter()
                        .map(|&(a, b)| Float::with_val(ps, &r[a] - &r[b]) / &sqrt2)
                        .collect();
                    let ya = get(Part::Anti).solve(&ra);
                    for (i, &(a, b)) in pairs.iter().enumerate() {
                        c[a] = Float::with_val(prec, Float::with_val(ps, &ys[nf + i] + &ya[i]) / &sqrt2);
                        c[b] = Float::with_val(prec, Float::with_val(ps, &ys[nf + i] - &ya[i]) / &sqrt2);
                    }
                }
            }
        }
        c
    }
}

fn gather(r: &[Float], v: &[usize]) -> Vec<Float> {
    v.iter().map(|&i| r[i].clone()).collect()
}

fn scatter(c: &mut [Float], v: &[usize], x: Vec<Float>) {
    for (&i, xi) in v.iter().zip(x) {
        let p = c[i].prec();
        c[i] = Float::with_val(p, xi);
    }
}

/// Summary of the Gramian on E_λ over (0, T).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ObservabilityGramian {
    pub cutoff: f64,
    pub horizon: f64,
    pub dim: usize,
    pub ln_min_eig: f64,
    pub max_eig: f64,
    /// ln(1/√λ_min(G)), the observability constant of E_λ.
    pub ln_kappa: f64,
    /// max |G − Gᵀ| of the f64 matrix.
    pub symmetry_defect: f64,
    /// Smallest f64 eigenvalue / largest (≥ −1e−10 for a PSD Gram matrix).
    pub psd_ratio: f64,
    /// λ_min/λ_max below 1e−13: beyond what a double-precision solve can resolve.
    pub beyond_double: bool,
    pub working_precision: u32,
}

/// Dense f64 Gramian on `idx` over (0, T).
pub fn gramian_f64(model: &SpectralModel, idx: &[usize], horizon: f64) -> DMatrix<f64> {
    let n = idx.len();
    DMatrix::from_fn(n, n, |i, j| {
        let (a, b) = (idx[i], idx[j]);
        model.trace_entry(a, b) * time_weight(horizon, model.lambda2[a] + model.lambda2[b])
    })
}

pub fn observability_gramian(model: &SpectralModel, cutoff: f64, horizon: f64) -> Result<ObservabilityGramian, LrError> {
    if !(horizon > 0.0) {
        return Err(LrError::NegativeTime(horizon));
    }
    if cutoff > model.max_frequency() + 1e-9 {
        return Err(LrError::Unsupported(format!(
            "cutoff {cutoff} exceeds model frequency {}",
            model.max_frequency()
        )));
    }
    let f = GramianFactor::new(model, cutoff, horizon)?;
    let g = gramian_f64(model, &f.idx, horizon);
    let mut sym: f64 = 0.0;
    for i in 0..g.nrows() {
        for j in 0..i {
            sym = sym.max((g[(i, j)] - g[(j, i)]).abs());
        }
    }
    let ev = g.clone().symmetric_eigenvalues();
    let emax = ev.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let emin = ev.iter().cloned().fold(f64::INFINITY, f64::min);
    let ln_min = f.ln_min_eig();
    Ok(ObservabilityGramian {
        cutoff,
        horizon,
        dim: f.idx.len(),
        ln_min_eig: ln_min,
        max_eig: emax,
        ln_kappa: -0.5 * ln_min,
        symmetry_defect: sym,
        psd_ratio: emin / emax,
        beyond_double: ln_min - emax.ln() < (1e-13f64).ln(),
        working_precision: f.max_prec(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{Hypersurface, SigmaComponent};

    #[test]
    fn constant_mode_gramian() {
        let s = Hypersurface::single(SigmaComponent::TorusCircleX0);
        let m = SpectralModel::torus(&s, 3.0).unwrap();
        let g = observability_gramian(&m, 0.0, 1.7).unwrap();
        assert_eq!(g.dim, 1);
        assert!((g.ln_min_eig.exp() - 1.7 / (2.0 * std::f64::consts::PI)).abs() < 1e-14);
    }

    #[test]
    fn block_solve_matches_dense_f64() {
        let s = Hypersurface::torus_union();
        let m = SpectralModel::torus(&s, 3.0).unwrap();
        let f = GramianFactor::new(&m, 3.0, 1.0).unwrap();
        let g = gramian_f64(&m, &f.idx, 1.0);
        let r: Vec<f64> = (0..m.len()).map(|i| ((i * 7 % 5) as f64) - 2.0).collect();
        let rr: Vec<Float> = r.iter().map(|v| Float::with_val(256, *v)).collect();
        let c = f.solve(&rr, 256);
        let cv = nalgebra::DVector::from_iterator(f.idx.len(), f.idx.iter().map(|&i| c[i].to_f64()));
        let back = &g * cv;
        for (k, &i) in f.idx.iter().enumerate() {
            assert!((back[k] - r[i]).abs() < 1e-6 * (1.0 + r[i].abs()), "{} vs {}", back[k], r[i]);
        }
    }
}
