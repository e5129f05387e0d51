use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use expcli::config::{
    AcceptAllConfig, ControlConfig, ExpectedVerdict, GramianConfig, KernelConfig, RevolutionConfig, SpectraConfig,
    SphereConfig, TgccConfig,
};
use expcli::{emit_tables, run, ExperimentConfig, LabError};
use sigmalab::geometry::{ManifoldDescriptor, SigmaDescriptor};
use sigmalab::spectral::BoundKind;

#[derive(Parser)]
#[command(name = "lab", version, about = "Numerical laboratory for interior-hypersurface observability")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run an experiment described by a JSON config file.
    Run {
        #[arg(long)]
        config: PathBuf,
    },
    /// Finite-resolution TGCC verdict.
    Tgcc(TgccArgs),
    /// Eigenspace minima of a Cauchy-data form.
    Spectra(SpectraArgs),
    /// The two sharpness counterexamples.
    Counterexample {
        #[command(subcommand)]
        which: CounterCmd,
    },
    /// Transmutation kernel verification.
    Kernel(KernelArgs),
    /// Observability Gramians over a λ × T grid.
    Gramian(GramianArgs),
    /// Lebeau–Robbiano null-control synthesis from seeded random states.
    Control(ControlArgs),
    /// Every acceptance criterion.
    AcceptAll(AcceptArgs),
}

#[derive(Args)]
struct Geo {
    /// Kind name, JSON object, or path to a JSON file.
    #[arg(long)]
    manifold: Option<String>,
    /// Component name, comma-separated list, JSON, or path to a JSON file.
    #[arg(long)]
    sigma: Option<String>,
}

#[derive(Args)]
struct TgccArgs {
    #[command(flatten)]
    geo: Geo,
    #[arg(long)]
    horizon: Option<f64>,
    #[arg(long)]
    nx: Option<usize>,
    #[arg(long)]
    ndir: Option<usize>,
    #[arg(long)]
    step: Option<f64>,
    /// pass | fail-witness; inferred from the (M, Σ) pair when omitted.
    #[arg(long)]
    expect: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SpectraArgs {
    #[command(flatten)]
    geo: Geo,
    #[arg(long)]
    cutoff: Option<f64>,
    /// genLow | unique | uniqueControl
    #[arg(long)]
    bound: Option<String>,
    #[arg(long)]
    nodes: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum CounterCmd {
    Sphere {
        #[arg(long)]
        lmin: Option<usize>,
        #[arg(long)]
        lmax: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    Revolution {
        #[arg(long)]
        manifold: Option<String>,
        #[arg(long)]
        kmin: Option<u32>,
        #[arg(long)]
        kmax: Option<u32>,
        #[arg(long)]
        grid_n: Option<usize>,
        #[arg(long)]
        eps: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct KernelArgs {
    #[arg(long = "T")]
    horizon: Option<f64>,
    #[arg(long = "S")]
    half_width: Option<f64>,
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    grid: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct GramianArgs {
    #[command(flatten)]
    geo: Geo,
    #[arg(long, value_delimiter = ',')]
    lambda_grid: Option<Vec<f64>>,
    #[arg(long = "T-grid", value_delimiter = ',')]
    t_grid: Option<Vec<f64>>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ControlArgs {
    #[command(flatten)]
    geo: Geo,
    #[arg(long = "T")]
    horizon: Option<f64>,
    #[arg(long)]
    lambda0: Option<f64>,
    #[arg(long)]
    work_cutoff: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct AcceptArgs {
    #[arg(long, value_delimiter = ',')]
    criteria: Option<Vec<u8>>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn set<T>(slot: &mut T, v: Option<T>) {
    if let Some(v) = v {
        *slot = v;
    }
}

fn read_json_arg(s: &str) -> Result<Option<serde_json::Value>, LabError> {
    let t = s.trim();
    let text = if t.starts_with('{') || t.starts_with('[') || t.starts_with('"') {
        t.to_string()
    } else if std::path::Path::new(t).is_file() {
        fs::read_to_string(t).map_err(|e| LabError::Io {
            path: t.into(),
            detail: e.to_string(),
        })?
    } else {
        return Ok(None);
    };
    serde_json::from_str(&text)
        .map(Some)
        .map_err(|e| LabError::Config(format!("bad JSON `{t}`: {e}")))
}

/// A manifold argument may carry its own `sigma` key; it is returned separately.
fn parse_manifold(s: &str) -> Result<(ManifoldDescriptor, Option<SigmaDescriptor>), LabError> {
    match read_json_arg(s)? {
        Some(mut v) => {
            let sigma = match v.as_object_mut().and_then(|o| o.remove("sigma")) {
                Some(sv) => Some(serde_json::from_value(sv).map_err(|e| LabError::Config(e.to_string()))?),
                None => None,
            };
            let m = serde_json::from_value(v).map_err(|e| LabError::Config(e.to_string()))?;
            Ok((m, sigma))
        }
        None => Ok((
            ManifoldDescriptor {
                kind: s.trim().to_string(),
                profile: None,
            },
            None,
        )),
    }
}

fn parse_sigma(s: &str) -> Result<SigmaDescriptor, LabError> {
    if let Some(v) = read_json_arg(s)? {
        return serde_json::from_value(v).map_err(|e| LabError::Config(e.to_string()));
    }
    let parts: Vec<String> = s.split(',').map(|p| p.trim().to_string()).filter(|p| !p.is_empty()).collect();
    Ok(match parts.len() {
        1 => SigmaDescriptor::One(parts[0].clone()),
        _ => SigmaDescriptor::Many(parts),
    })
}

fn apply_geo(geo: &Geo, m: &mut ManifoldDescriptor, sigma: &mut SigmaDescriptor) -> Result<(), LabError> {
    if let Some(s) = &geo.manifold {
        let (md, sd) = parse_manifold(s)?;
        *m = md;
        set(sigma, sd);
    }
    if let Some(s) = &geo.sigma {
        *sigma = parse_sigma(s)?;
    }
    Ok(())
}

fn build_config(cmd: Cmd) -> Result<ExperimentConfig, LabError> {
    Ok(match cmd {
        Cmd::Run { config } => {
            let text = fs::read_to_string(&config).map_err(|e| LabError::Io {
                path: config.clone(),
                detail: e.to_string(),
            })?;
            return ExperimentConfig::from_json(&text);
        }
        Cmd::Tgcc(a) => {
            let mut c = TgccConfig::default();
            apply_geo(&a.geo, &mut c.manifold, &mut c.sigma)?;
            set(&mut c.horizon, a.horizon);
            set(&mut c.nx, a.nx);
            set(&mut c.ndir, a.ndir);
            set(&mut c.step, a.step);
            set(&mut c.out, a.out);
            if let Some(e) = a.expect {
                c.expect = Some(
                    serde_json::from_value::<ExpectedVerdict>(serde_json::Value::String(e.clone()))
                        .map_err(|_| LabError::Config(format!("unknown verdict `{e}`")))?,
                );
            }
            ExperimentConfig::Tgcc(c)
        }
        Cmd::Spectra(a) => {
            let mut c = SpectraConfig::default();
            apply_geo(&a.geo, &mut c.manifold, &mut c.sigma)?;
            set(&mut c.cutoff, a.cutoff);
            if let Some(b) = a.bound {
                c.bound = BoundKind::parse(&b).ok_or_else(|| LabError::Config(format!("unknown bound `{b}`")))?;
            }
            c.nodes = a.nodes;
            set(&mut c.out, a.out);
            ExperimentConfig::Spectra(c)
        }
        Cmd::Counterexample { which } => match which {
            CounterCmd::Sphere { lmin, lmax, out } => {
                let mut c = SphereConfig::default();
                set(&mut c.lmin, lmin);
                set(&mut c.lmax, lmax);
                set(&mut c.out, out);
                ExperimentConfig::CounterexampleSphere(c)
            }
            CounterCmd::Revolution {
                manifold,
                kmin,
                kmax,
                grid_n,
                eps,
                out,
            } => {
                let mut c = RevolutionConfig::default();
                if let Some(s) = manifold {
                    c.manifold = parse_manifold(&s)?.0;
                }
                set(&mut c.kmin, kmin);
                set(&mut c.kmax, kmax);
                set(&mut c.grid_n, grid_n);
                set(&mut c.eps, eps);
                set(&mut c.out, out);
                ExperimentConfig::CounterexampleRevolution(c)
            }
        },
        Cmd::Kernel(a) => {
            let mut c = KernelConfig::default();
            set(&mut c.horizon, a.horizon);
            set(&mut c.half_width, a.half_width);
            set(&mut c.delta, a.delta);
            c.alpha = a.alpha;
            set(&mut c.grid, a.grid);
            set(&mut c.out, a.out);
            ExperimentConfig::Kernel(c)
        }
        Cmd::Gramian(a) => {
            let mut c = GramianConfig::default();
            apply_geo(&a.geo, &mut c.manifold, &mut c.sigma)?;
            set(&mut c.lambda_grid, a.lambda_grid);
            set(&mut c.t_grid, a.t_grid);
            set(&mut c.out, a.out);
            ExperimentConfig::Gramian(c)
        }
        Cmd::Control(a) => {
            let mut c = ControlConfig::default();
            apply_geo(&a.geo, &mut c.manifold, &mut c.sigma)?;
            set(&mut c.horizon, a.horizon);
            set(&mut c.lambda0, a.lambda0);
            set(&mut c.work_cutoff, a.work_cutoff);
            set(&mut c.seed, a.seed);
            set(&mut c.samples, a.samples);
            set(&mut c.out, a.out);
            ExperimentConfig::Control(c)
        }
        Cmd::AcceptAll(a) => {
            let mut c = AcceptAllConfig::default();
            set(&mut c.criteria, a.criteria);
            set(&mut c.seed, a.seed);
            set(&mut c.out, a.out);
            ExperimentConfig::AcceptAll(c)
        }
    })
}

fn configure_threads() -> Result<(), LabError> {
    if let Ok(v) = std::env::var("LAB_THREADS") {
        let n: usize = v
            .trim()
            .parse()
            .map_err(|_| LabError::Config(format!("LAB_THREADS must be a positive integer, got `{v}`")))?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build_global()
            .map_err(|e| LabError::Config(e.to_string()))?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = configure_threads()
        .and_then(|_| build_config(cli.cmd))
        .and_then(run)
        .and_then(|out| emit_tables(&out).map(|paths| (out, paths)));
    match result {
        Ok((out, paths)) => {
            for p in &paths {
                eprintln!("wrote {}", p.display());
            }
            for c in out.report.failed_checks() {
                eprintln!(
                    "FAIL {}: measured {:e}, {:?} {:e} (tol {:e})",
                    c.name, c.measured, c.relation, c.expected, c.tolerance
                );
            }
            eprintln!("{}", if out.report.pass { "overall: PASS" } else { "overall: FAIL" });
            ExitCode::from(out.exit_code() as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
