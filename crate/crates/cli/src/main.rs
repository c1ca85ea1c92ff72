use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};
use thickpoints::experiment::{self, ExperimentConfig};
use thickpoints::green::{green_function, SlitDomain};
use thickpoints::verify::{run_suite, Suite};
use thickpoints::Error;

#[derive(Parser, Debug)]
#[command(name = "thickpoints", version, about = "Thick points of the Cauchy process: simulation and checks")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Global {
    /// Key = value file; command-line flags override its entries.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    reps: Option<usize>,
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads; 0 uses one per core.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[arg(long, global = true)]
    dt: Option<f64>,
    /// Comma-separated epsilon list.
    #[arg(long, global = true)]
    eps: Option<String>,
    /// Comma-separated thickness levels.
    #[arg(long, global = true)]
    a: Option<String>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Killed Cauchy paths: one CSV per replication plus manifest.json.
    Simulate {
        #[arg(long)]
        barrier: Option<f64>,
        #[arg(long)]
        max_steps: Option<usize>,
        #[arg(long)]
        x0: Option<f64>,
    },
    /// Green function values, an N x N grid, or the moment and tail bounds.
    Green(GreenArgs),
    /// Coarse multifractal spectrum and sup statistic.
    Spectrum {
        #[arg(long)]
        barrier: Option<f64>,
        #[arg(long)]
        max_steps: Option<usize>,
        #[arg(long)]
        sup_eps: Option<f64>,
    },
    /// Excursion counts at the scales eps_k = eps_1 (k!)^-3.
    Excursions {
        #[arg(long)]
        epsilon1: Option<f64>,
        #[arg(long)]
        k_max: Option<usize>,
        /// Centers are equispaced on the axis in [-span, span].
        #[arg(long)]
        span: Option<f64>,
        #[arg(long)]
        max_steps: Option<usize>,
    },
    /// Maximal local time of the integer walk.
    Walk {
        /// Comma-separated checkpoints.
        #[arg(long)]
        n: Option<String>,
        /// Also dump each trajectory as CSV.
        #[arg(long)]
        trajectory: bool,
        #[arg(long)]
        site_cap: Option<usize>,
    },
    /// Runs a verification suite and prints its JSON report.
    Verify {
        #[arg(value_enum)]
        suite: SuiteArg,
    },
}

#[derive(Args, Debug)]
struct GreenArgs {
    /// Domain radius.
    #[arg(long, default_value_t = 1.0)]
    radius: f64,
    #[arg(long, requires = "x")]
    x0: Option<f64>,
    #[arg(long, requires = "x0")]
    x: Option<f64>,
    /// Emit the N x N grid of interior points.
    #[arg(long, conflicts_with_all = ["x0", "r1"])]
    grid: Option<usize>,
    #[arg(long, requires_all = ["r3", "c"])]
    r1: Option<f64>,
    #[arg(long)]
    r3: Option<f64>,
    #[arg(long)]
    c: Option<f64>,
    /// Highest moment order in the bounds table.
    #[arg(long, default_value_t = 4)]
    k: u32,
    /// Comma-separated t values for the tail bound.
    #[arg(long)]
    t: Option<String>,
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum SuiteArg {
    GreenMc,
    Bounds,
    Excursions,
    Spectrum,
    Walk,
}

impl From<SuiteArg> for Suite {
    fn from(s: SuiteArg) -> Self {
        match s {
            SuiteArg::GreenMc => Suite::GreenMc,
            SuiteArg::Bounds => Suite::Bounds,
            SuiteArg::Excursions => Suite::Excursions,
            SuiteArg::Spectrum => Suite::Spectrum,
            SuiteArg::Walk => Suite::Walk,
        }
    }
}

fn build_config(cli: &Cli) -> thickpoints::Result<ExperimentConfig> {
    let g = &cli.global;
    let mut cfg = match &g.config {
        Some(p) => ExperimentConfig::from_file(p)?,
        None => ExperimentConfig::default(),
    };
    let mut flags: Vec<(&str, String)> = Vec::new();
    let mut put = |k: &'static str, v: Option<String>| {
        if let Some(v) = v {
            flags.push((k, v));
        }
    };
    put("seed", g.seed.map(|v| v.to_string()));
    put("reps", g.reps.map(|v| v.to_string()));
    put("out", g.out.as_ref().map(|p| p.display().to_string()));
    put("threads", g.threads.map(|v| v.to_string()));
    put("dt", g.dt.map(|v| v.to_string()));
    put("eps", g.eps.clone());
    put("a", g.a.clone());
    match &cli.command {
        Command::Simulate { barrier, max_steps, x0 } => {
            put("barrier", barrier.map(|v| v.to_string()));
            put("max_steps", max_steps.map(|v| v.to_string()));
            put("x0", x0.map(|v| v.to_string()));
        }
        Command::Spectrum { barrier, max_steps, sup_eps } => {
            put("barrier", barrier.map(|v| v.to_string()));
            put("max_steps", max_steps.map(|v| v.to_string()));
            put("sup_eps", sup_eps.map(|v| v.to_string()));
        }
        Command::Excursions { epsilon1, k_max, span, max_steps } => {
            put("epsilon1", epsilon1.map(|v| v.to_string()));
            put("k_max", k_max.map(|v| v.to_string()));
            put("span", span.map(|v| v.to_string()));
            put("max_steps", max_steps.map(|v| v.to_string()));
        }
        Command::Walk { n, trajectory, site_cap } => {
            put("n", n.clone());
            put("trajectory", trajectory.then(|| "true".to_string()));
            put("site_cap", site_cap.map(|v| v.to_string()));
        }
        Command::Green(_) | Command::Verify { .. } => {}
    }
    for (k, v) in flags {
        cfg.set(k, &v)?;
    }
    Ok(cfg)
}

fn green(args: &GreenArgs, cfg: &ExperimentConfig) -> anyhow::Result<()> {
    let stdout = io::stdout();
    let mut out = stdout.lock();
    if let (Some(r1), Some(r3), Some(c)) = (args.r1, args.r3, args.c) {
        let ts = match &args.t {
            Some(s) => experiment::parse_list("t", s)?,
            None => Vec::new(),
        };
        let table = experiment::bounds_table(r1, r3, c, args.k, &ts)?;
        serde_json::to_writer_pretty(&mut out, &table)?;
        writeln!(out)?;
        if let Some(dir) = &cfg.out {
            std::fs::create_dir_all(dir)?;
            experiment::write_json(&dir.join("bounds.json"), &table)?;
        }
        return Ok(());
    }
    if let Some(n) = args.grid {
        anyhow::ensure!(n >= 1, Error::InvalidArgument("grid size must be positive".into()));
        match &cfg.out {
            Some(dir) => {
                std::fs::create_dir_all(dir)?;
                let path = dir.join("green_grid.csv");
                let f = std::fs::File::create(&path).with_context(|| format!("cannot write {}", path.display()))?;
                let mut w = io::BufWriter::new(f);
                experiment::write_green_grid(n, args.radius, &mut w)?;
                w.flush()?;
            }
            None => experiment::write_green_grid(n, args.radius, io::BufWriter::new(&mut out))?,
        }
        return Ok(());
    }
    match (args.x0, args.x) {
        (Some(x0), Some(x)) => {
            let g = green_function(x0, x, &SlitDomain::new(args.radius)?)?;
            writeln!(out, "x0,x,G")?;
            writeln!(out, "{:.16e},{:.16e},{:.16e}", x0, x, g)?;
            Ok(())
        }
        _ => Err(Error::InvalidArgument("give --x0 and --x, --grid, or --r1 --r3 --c".into()).into()),
    }
}

fn print_json<T: serde::Serialize>(value: &T) -> anyhow::Result<()> {
    let stdout = io::stdout();
    let mut out = stdout.lock();
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out)?;
    Ok(())
}

/// Exit code 1 for verification failures, 0 otherwise.
fn run(cli: &Cli) -> anyhow::Result<ExitCode> {
    let cfg = build_config(cli)?;
    match &cli.command {
        Command::Simulate { .. } => {
            let m = experiment::cmd_simulate(&cfg)?;
            eprintln!("wrote {} paths and manifest.json", m.runs.len());
        }
        Command::Green(args) => green(args, &cfg)?,
        Command::Spectrum { .. } => {
            let s = experiment::cmd_spectrum(&cfg)?;
            for e in &s.spectra {
                eprintln!("a = {}: slope {:.4} (reference {:.4})", e.a, e.slope, e.theoretical_slope);
            }
        }
        Command::Excursions { .. } => print_json(&experiment::cmd_excursions(&cfg)?.rows)?,
        Command::Walk { .. } => print_json(&experiment::cmd_walk(&cfg)?.reports)?,
        Command::Verify { suite } => {
            let suite = Suite::from(*suite);
            let report = run_suite(suite, &cfg)?;
            let json = report.to_json()?;
            if let Some(dir) = &cfg.out {
                std::fs::create_dir_all(dir)?;
                std::fs::write(dir.join(format!("verify_{suite}.json")), &json)?;
            }
            io::stdout().write_all(json.as_bytes())?;
            if !report.passed {
                for c in report.checks.iter().filter(|c| !c.passed) {
                    eprintln!("FAIL {}: measured {} vs {} (tolerance {})", c.name, c.measured, c.expected, c.tolerance);
                }
                return Ok(ExitCode::from(1));
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn is_usage_error(e: &anyhow::Error) -> bool {
    matches!(
        e.downcast_ref::<Error>(),
        Some(Error::InvalidArgument(_) | Error::HypothesisViolation { .. } | Error::Domain(_) | Error::Singular(_) | Error::Range(_))
    )
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(if is_usage_error(&e) { 2 } else { 1 })
        }
    }
}
