use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use pvo_core::planner::{Method, PlannerConfig};
use pvo_core::sim::{
    benchmark_timing, compare, consistency_report, run_scenario, write_rows, CompareRow, ScenarioConfig, Termination,
};
use pvo_core::Error;

const EXIT_FAILURE: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_INFEASIBLE: u8 = 3;

#[derive(Parser)]
#[command(name = "pvo", version, about = "Robust velocity-obstacle planning by distribution matching")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Overrides {
    /// Planner method: rkhs, gmm_kld, linearized_gaussian, ev_gauss, deterministic
    #[arg(long)]
    method: Option<String>,
    /// Polynomial kernel degree
    #[arg(long)]
    degree: Option<u32>,
    /// Weight on the distribution distance
    #[arg(long)]
    rho: Option<f64>,
    /// Target probability for the surrogate baselines
    #[arg(long)]
    eta: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario and write `<name>.csv` and `<name>.json`
    Run {
        #[arg(long)]
        scenario: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Run scenarios × methods × degrees × seeds and write `compare.csv`
    Compare {
        #[arg(long, required = true, num_args = 1..)]
        scenario: Vec<PathBuf>,
        #[arg(long, value_delimiter = ',')]
        method: Vec<String>,
        #[arg(long, value_delimiter = ',')]
        degree: Vec<u32>,
        #[arg(long)]
        rho: Option<f64>,
        #[arg(long)]
        eta: Option<f64>,
        /// Number of seeds, starting at `--seed`
        #[arg(long, default_value_t = 10)]
        seeds: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Embedding error against sample size; writes `consistency.csv`
    Consistency {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long, value_delimiter = ',', default_values_t = [5usize, 10, 20, 40])]
        n: Vec<usize>,
        #[arg(long, value_delimiter = ',', default_values_t = [1u32, 2, 3])]
        degree: Vec<u32>,
        #[arg(long, default_value_t = 10)]
        seeds: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Per-decision wall-clock time; writes `timing.csv`
    Timing {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long, value_delimiter = ',', default_values_t = [String::from("rkhs"), String::from("gmm_kld")])]
        method: Vec<String>,
        #[arg(long, value_delimiter = ',')]
        degree: Vec<u32>,
        /// Obstacle counts to time; defaults to all of the scenario's
        #[arg(long, value_delimiter = ',')]
        obstacles: Vec<usize>,
        #[arg(long, default_value_t = 5)]
        repeats: usize,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
}

fn apply(cfg: &mut ScenarioConfig, o: &Overrides) -> Result<(), Error> {
    if let Some(m) = &o.method {
        cfg.planner.method = m.parse()?;
    }
    if let Some(d) = o.degree {
        cfg.planner.degree = d;
    }
    if let Some(r) = o.rho {
        cfg.planner.rho = r;
    }
    if let Some(e) = o.eta {
        cfg.planner.eta = e;
    }
    if let Some(s) = o.seed {
        cfg.seed = s;
    }
    cfg.validate()
}

fn stem(cfg: &ScenarioConfig, path: &Path) -> String {
    if cfg.name.is_empty() {
        path.file_stem().map_or_else(|| "run".to_string(), |s| s.to_string_lossy().into_owned())
    } else {
        cfg.name.clone()
    }
}

fn load(path: &Path) -> Result<ScenarioConfig, Error> {
    let mut cfg = ScenarioConfig::load(path)?;
    if cfg.name.is_empty() {
        cfg.name = stem(&cfg, path);
    }
    Ok(cfg)
}

fn write_csv<T: serde::Serialize>(dir: &Path, file: &str, rows: &[T]) -> Result<PathBuf, Error> {
    std::fs::create_dir_all(dir)?;
    let path = dir.join(file);
    write_rows(std::fs::File::create(&path)?, rows)?;
    Ok(path)
}

fn execute(cli: Cli) -> Result<u8, Error> {
    match cli.command {
        Command::Run { scenario, overrides, out } => {
            let mut cfg = load(&scenario)?;
            apply(&mut cfg, &overrides)?;
            let log = run_scenario(&cfg)?;
            let name = format!("{}_{}_s{}", cfg.name, cfg.planner.method, cfg.seed);
            log.save(&out, &name)?;
            println!("{}", log.summary_json());
            eprintln!("wrote {}", out.join(format!("{name}.csv")).display());
            Ok(match log.summary.termination {
                Termination::DesiredInfeasible | Termination::NoFeasibleControl => EXIT_INFEASIBLE,
                _ => 0,
            })
        }
        Command::Compare { scenario, method, degree, rho, eta, seeds, seed, out } => {
            let cfgs = scenario.iter().map(|p| load(p)).collect::<Result<Vec<_>, _>>()?;
            let base = cfgs[0].planner.clone();
            let methods: Vec<Method> = if method.is_empty() {
                vec![base.method]
            } else {
                method.iter().map(|m| m.parse()).collect::<Result<_, _>>()?
            };
            let degrees = if degree.is_empty() { vec![base.degree] } else { degree };
            let mut variants = Vec::new();
            for &m in &methods {
                for &d in &degrees {
                    let mut p: PlannerConfig = base.clone();
                    p.method = m;
                    p.degree = d;
                    if let Some(r) = rho {
                        p.rho = r;
                    }
                    if let Some(e) = eta {
                        p.eta = e;
                    }
                    p.validate()?;
                    variants.push(p);
                }
            }
            // each scenario keeps its own planner settings apart from the swept ones
            let seeds: Vec<u64> = (seed..seed + seeds).collect();
            let mut rows = Vec::new();
            for cfg in &cfgs {
                let vs: Vec<PlannerConfig> = variants
                    .iter()
                    .map(|v| PlannerConfig { grid: cfg.planner.grid.clone(), tracking_weight: cfg.planner.tracking_weight, ..v.clone() })
                    .collect();
                let summaries = compare(std::slice::from_ref(cfg), &vs, &seeds)?;
                rows.extend(summaries.iter().map(CompareRow::from));
            }
            let path = write_csv(&out, "compare.csv", &rows)?;
            eprintln!("wrote {} ({} runs)", path.display(), rows.len());
            Ok(0)
        }
        Command::Consistency { scenario, n, degree, seeds, seed, out } => {
            let cfg = load(&scenario)?;
            let seeds: Vec<u64> = (seed..seed + seeds).collect();
            let rows = consistency_report(&cfg, &n, &degree, &seeds)?;
            for r in &rows {
                println!("d={} n={:>3} error={:.6e}", r.degree, r.n, r.mean_error);
            }
            write_csv(&out, "consistency.csv", &rows)?;
            Ok(0)
        }
        Command::Timing { scenario, method, degree, obstacles, repeats, out } => {
            let mut cfg = load(&scenario)?;
            let methods: Vec<Method> = method.iter().map(|m| m.parse()).collect::<Result<_, _>>()?;
            let counts = if obstacles.is_empty() { (1..=cfg.obstacles.len()).collect() } else { obstacles };
            let degrees = if degree.is_empty() { vec![cfg.planner.degree] } else { degree };
            let mut rows = Vec::new();
            for d in degrees {
                cfg.planner.degree = d;
                rows.extend(benchmark_timing(&cfg, &methods, &counts, repeats)?);
            }
            for r in &rows {
                println!("{:<20} d={} obstacles={} mean={:.4}s std={:.4}s", r.method, r.degree, r.obstacles, r.mean_s, r.std_s);
            }
            write_csv(&out, "timing.csv", &rows)?;
            Ok(0)
        }
    }
}

fn configure_threads() -> Result<(), Error> {
    if let Ok(v) = std::env::var("PVO_THREADS") {
        let threads: usize = v
            .parse()
            .ok()
            .filter(|&t| t > 0)
            .ok_or_else(|| Error::config("PVO_THREADS", format!("expected a positive integer, got `{v}`")))?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| Error::config("PVO_THREADS", e.to_string()))?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = configure_threads().and_then(|()| execute(cli));
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e {
                Error::Config { .. } | Error::Json(_) => EXIT_CONFIG,
                Error::DesiredDistributionInfeasible { .. } | Error::NoFeasibleControl { .. } => EXIT_INFEASIBLE,
                _ => EXIT_FAILURE,
            })
        }
    }
}
