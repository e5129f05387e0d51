//! Experiment configurations. Every field has a default, and `materialize`
//! resolves the remaining derived values so the echoed config is complete.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sigmalab::geometry::{ManifoldDescriptor, ProfileDescriptor, SigmaDescriptor};
use sigmalab::spectral::BoundKind;

use crate::LabError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ExperimentConfig {
    Tgcc(TgccConfig),
    Spectra(SpectraConfig),
    CounterexampleSphere(SphereConfig),
    CounterexampleRevolution(RevolutionConfig),
    Kernel(KernelConfig),
    Gramian(GramianConfig),
    Control(ControlConfig),
    AcceptAll(AcceptAllConfig),
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, LabError> {
        let cfg: ExperimentConfig = serde_json::from_str(text).map_err(|e| LabError::Config(e.to_string()))?;
        cfg.materialize()
    }

    pub fn kind(&self) -> &'static str {
        match self {
            ExperimentConfig::Tgcc(_) => "tgcc",
            ExperimentConfig::Spectra(_) => "spectra",
            ExperimentConfig::CounterexampleSphere(_) => "counterexample-sphere",
            ExperimentConfig::CounterexampleRevolution(_) => "counterexample-revolution",
            ExperimentConfig::Kernel(_) => "kernel",
            ExperimentConfig::Gramian(_) => "gramian",
            ExperimentConfig::Control(_) => "control",
            ExperimentConfig::AcceptAll(_) => "accept-all",
        }
    }

    /// Fill derived defaults and validate ranges.
    pub fn materialize(self) -> Result<Self, LabError> {
        Ok(match self {
            ExperimentConfig::Tgcc(mut c) => {
                if c.expect.is_none() {
                    c.expect = Some(ExpectedVerdict::for_pair(&c.manifold, &c.sigma));
                }
                if c.per_ray.is_none() {
                    c.per_ray = Some(sidecar(&c.out, "rays.csv"));
                }
                positive("horizon", c.horizon)?;
                positive("step", c.step)?;
                ExperimentConfig::Tgcc(c)
            }
            ExperimentConfig::Spectra(mut c) => {
                if c.nodes.is_none() {
                    c.nodes = Some(((4.0 * c.cutoff.max(0.0)).ceil() as usize + 16).max(64));
                }
                if !(c.cutoff >= 0.0) {
                    return Err(LabError::Config(format!("cutoff must be >= 0, got {}", c.cutoff)));
                }
                ExperimentConfig::Spectra(c)
            }
            ExperimentConfig::CounterexampleSphere(c) => {
                if c.lmin < 2 || c.lmax <= c.lmin || c.lmax > 500 {
                    return Err(LabError::Config(format!("need 2 <= lmin < lmax <= 500, got [{}, {}]", c.lmin, c.lmax)));
                }
                if c.gamma_lmax == 0 || c.gamma_lmax > 300 {
                    return Err(LabError::Config(format!("gamma_lmax must lie in 1..=300, got {}", c.gamma_lmax)));
                }
                ExperimentConfig::CounterexampleSphere(c)
            }
            ExperimentConfig::CounterexampleRevolution(c) => {
                if c.kmin < 2 || c.kmax <= c.kmin {
                    return Err(LabError::Config(format!("need 2 <= kmin < kmax, got [{}, {}]", c.kmin, c.kmax)));
                }
                if c.manifold.kind != "revolution" {
                    return Err(LabError::Config(format!("revolution counterexample needs a revolution manifold, got {}", c.manifold.kind)));
                }
                ExperimentConfig::CounterexampleRevolution(c)
            }
            ExperimentConfig::Kernel(mut c) => {
                if c.alpha.is_none() {
                    c.alpha = Some(1.05 * c.half_width * c.half_width * (1.0 + 1.0 / c.delta));
                }
                ExperimentConfig::Kernel(c)
            }
            ExperimentConfig::Gramian(c) => {
                if c.lambda_grid.is_empty() || c.t_grid.is_empty() {
                    return Err(LabError::Config("lambda and T grids must be nonempty".into()));
                }
                for &t in &c.t_grid {
                    positive("T", t)?;
                }
                ExperimentConfig::Gramian(c)
            }
            ExperimentConfig::Control(c) => {
                positive("T", c.horizon)?;
                positive("lambda0", c.lambda0)?;
                if c.samples == 0 {
                    return Err(LabError::Config("samples must be at least 1".into()));
                }
                ExperimentConfig::Control(c)
            }
            ExperimentConfig::AcceptAll(c) => {
                if let Some(bad) = c.criteria.iter().find(|&&i| !(1..=9).contains(&i)) {
                    return Err(LabError::Config(format!("unknown criterion {bad}")));
                }
                ExperimentConfig::AcceptAll(c)
            }
        })
    }

    /// Path of the JSON run report.
    pub fn report_path(&self) -> PathBuf {
        let out = match self {
            ExperimentConfig::Tgcc(c) => &c.out,
            ExperimentConfig::Spectra(c) => &c.out,
            ExperimentConfig::CounterexampleSphere(c) => &c.out,
            ExperimentConfig::CounterexampleRevolution(c) => &c.out,
            ExperimentConfig::Kernel(c) => &c.out,
            ExperimentConfig::Gramian(c) => &c.out,
            ExperimentConfig::Control(c) => &c.out,
            ExperimentConfig::AcceptAll(c) => &c.out,
        };
        if out.extension().is_some_and(|e| e == "json") {
            out.clone()
        } else {
            sidecar(out, "report.json")
        }
    }
}

fn positive(name: &str, x: f64) -> Result<(), LabError> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(LabError::Config(format!("{name} must be positive, got {x}")))
    }
}

/// `dir/stem.<suffix>` next to `path`.
pub fn sidecar(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "out".into());
    path.with_file_name(format!("{stem}.{suffix}"))
}

fn torus() -> ManifoldDescriptor {
    ManifoldDescriptor {
        kind: "torus2".into(),
        profile: None,
    }
}

fn torus_union() -> SigmaDescriptor {
    SigmaDescriptor::Many(vec!["x0".into(), "y0".into()])
}

pub fn revolution_default() -> ManifoldDescriptor {
    ManifoldDescriptor {
        kind: "revolution".into(),
        profile: Some(ProfileDescriptor::Constraints {
            constraints: "paper-default".into(),
        }),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExpectedVerdict {
    Pass,
    FailWitness,
}

impl ExpectedVerdict {
    /// Built-in pairs: only the torus with both circles satisfies the condition.
    pub fn for_pair(m: &ManifoldDescriptor, sigma: &SigmaDescriptor) -> Self {
        let union = match sigma {
            SigmaDescriptor::Many(v) => v.iter().any(|s| s == "x0") && v.iter().any(|s| s == "y0"),
            SigmaDescriptor::One(_) => false,
        };
        if m.kind == "torus2" && union {
            ExpectedVerdict::Pass
        } else {
            ExpectedVerdict::FailWitness
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TgccConfig {
    pub manifold: ManifoldDescriptor,
    pub sigma: SigmaDescriptor,
    pub horizon: f64,
    pub nx: usize,
    pub ndir: usize,
    pub step: f64,
    pub expect: Option<ExpectedVerdict>,
    /// Minimal ε_star demanded when a pass is expected.
    pub eps_floor: f64,
    pub out: PathBuf,
    pub per_ray: Option<PathBuf>,
}

impl Default for TgccConfig {
    fn default() -> Self {
        TgccConfig {
            manifold: torus(),
            sigma: torus_union(),
            horizon: 2.0 * PI * 2f64.sqrt() + 0.1,
            nx: 64,
            ndir: 128,
            step: 1e-3,
            expect: None,
            eps_floor: 0.4,
            out: "tgcc.json".into(),
            per_ray: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpectraConfig {
    pub manifold: ManifoldDescriptor,
    pub sigma: SigmaDescriptor,
    pub cutoff: f64,
    pub bound: BoundKind,
    /// Quadrature nodes per Σ component.
    pub nodes: Option<usize>,
    /// Radial grid for revolution modes.
    pub grid_n: usize,
    pub out: PathBuf,
}

impl Default for SpectraConfig {
    fn default() -> Self {
        SpectraConfig {
            manifold: torus(),
            sigma: torus_union(),
            cutoff: 20.0,
            bound: BoundKind::Unique,
            nodes: None,
            grid_n: 2000,
            out: "spectra.csv".into(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SphereConfig {
    pub lmin: usize,
    pub lmax: usize,
    pub gamma_lmax: usize,
    pub slope_tol: f64,
    pub out: PathBuf,
}

impl Default for SphereConfig {
    fn default() -> Self {
        SphereConfig {
            lmin: 20,
            lmax: 200,
            gamma_lmax: 300,
            slope_tol: 0.02,
            out: "sphere.csv".into(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RevolutionConfig {
    pub manifold: ManifoldDescriptor,
    pub kmin: u32,
    pub kmax: u32,
    pub k_step: u32,
    pub window: (f64, f64),
    pub grid_n: usize,
    /// Half-width of the waist neighbourhood for the Agmon fit.
    pub eps: f64,
    pub agmon_kmin: u32,
    /// h = 1/weyl_k for the Weyl count.
    pub weyl_k: u32,
    pub out: PathBuf,
}

impl Default for RevolutionConfig {
    fn default() -> Self {
        RevolutionConfig {
            manifold: revolution_default(),
            kmin: 20,
            kmax: 160,
            k_step: 10,
            window: (0.2, 0.5),
            grid_n: 4000,
            eps: 0.05,
            agmon_kmin: 40,
            weyl_k: 40,
            out: "rev.csv".into(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KernelConfig {
    pub horizon: f64,
    pub half_width: f64,
    pub delta: f64,
    pub alpha: Option<f64>,
    pub grid: usize,
    pub n_max: usize,
    pub tol: f64,
    pub out: PathBuf,
}

impl Default for KernelConfig {
    fn default() -> Self {
        KernelConfig {
            horizon: 1.0,
            half_width: 1.0,
            delta: 0.5,
            alpha: None,
            grid: 64,
            n_max: 200,
            tol: 1e-12,
            out: "kernel.json".into(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GramianConfig {
    pub manifold: ManifoldDescriptor,
    pub sigma: SigmaDescriptor,
    pub lambda_grid: Vec<f64>,
    pub t_grid: Vec<f64>,
    pub r2_min: f64,
    pub out: PathBuf,
}

impl Default for GramianConfig {
    fn default() -> Self {
        GramianConfig {
            manifold: torus(),
            sigma: torus_union(),
            lambda_grid: vec![4.0, 8.0, 16.0, 32.0],
            t_grid: vec![1.0],
            r2_min: 0.9,
            out: "gram.csv".into(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ControlConfig {
    pub manifold: ManifoldDescriptor,
    pub sigma: SigmaDescriptor,
    pub horizon: f64,
    pub lambda0: f64,
    pub work_cutoff: f64,
    pub seed: u64,
    /// Number of random initial states drawn from the seeded stream.
    pub samples: usize,
    /// Controlling stops once the H^{-1} norm is below this.
    pub rho: f64,
    pub terminal_tol: f64,
    pub annihilation_tol: f64,
    pub out: PathBuf,
}

impl Default for ControlConfig {
    fn default() -> Self {
        ControlConfig {
            manifold: torus(),
            sigma: torus_union(),
            horizon: 0.5,
            lambda0: 2.0,
            work_cutoff: 32.0,
            seed: 7,
            samples: 1,
            rho: 1e-9,
            terminal_tol: 1e-6,
            annihilation_tol: 1e-10,
            out: "control.json".into(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AcceptAllConfig {
    pub criteria: Vec<u8>,
    pub seed: u64,
    pub out: PathBuf,
}

impl Default for AcceptAllConfig {
    fn default() -> Self {
        AcceptAllConfig {
            criteria: (1..=9).collect(),
            seed: 20240607,
            out: "report.json".into(),
        }
    }
}
