use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use nspd_bench::experiments::{run_experiment, solve, ExperimentKind, ExperimentSpec, Scale, SolveConfig};
use nspd_core::metrics::Trace;
use nspd_core::Error;

#[derive(Parser)]
#[command(name = "nspd", version, about = "Non-stationary primal-dual experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Experiment {
    LadCase1,
    LadCase2,
    Game,
}

#[derive(Subcommand)]
enum Command {
    /// Run a comparison experiment and write traces and reports.
    Run {
        experiment: Experiment,
        #[arg(long, conflicts_with = "paper")]
        desk: bool,
        #[arg(long)]
        paper: bool,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 10_000)]
        max_iters: usize,
        #[arg(long, default_value_t = 1)]
        trace_every: usize,
        #[arg(long, default_value_t = 1_000_000)]
        reference_budget: usize,
        /// Target accuracy of the smoothing baseline (game only).
        #[arg(long, default_value_t = 1e-3)]
        epsilon: f64,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Exit with status 2 if any certificate is violated.
        #[arg(long)]
        check: bool,
    },
    /// Run one solver on a generated instance described by a TOML file.
    Solve {
        #[arg(long)]
        config: PathBuf,
        /// Trace destination; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print log10 columns of a trace for log-log plotting.
    Plotdata {
        trace: PathBuf,
        /// Optimal value subtracted from F before taking logs.
        #[arg(long)]
        f_star: Option<f64>,
    },
}

fn log10_or_empty(v: Option<f64>) -> String {
    match v {
        Some(v) if v > 0.0 && v.is_finite() => format!("{:.12e}", v.log10()),
        _ => String::new(),
    }
}

fn plotdata(path: &PathBuf, f_star: Option<f64>) -> Result<(), Error> {
    let trace = Trace::read_csv(path.display().to_string(), File::open(path)?)?;
    let mut out = BufWriter::new(io::stdout().lock());
    writeln!(out, "log10_k,log10_F,log10_G,log10_gap,log10_feas")?;
    for r in &trace.records {
        let f = f_star.map_or(r.primal, |fs| r.primal - fs);
        writeln!(
            out,
            "{},{},{},{},{}",
            log10_or_empty(Some(r.k as f64)),
            log10_or_empty(Some(f)),
            log10_or_empty(r.dual),
            log10_or_empty(r.gap),
            log10_or_empty(r.feas)
        )?;
    }
    out.flush()?;
    Ok(())
}

fn run(cli: Cli) -> Result<ExitCode, Error> {
    match cli.command {
        Command::Run {
            experiment,
            desk: _,
            paper,
            seed,
            max_iters,
            trace_every,
            reference_budget,
            epsilon,
            out,
            check,
        } => {
            let kind = match experiment {
                Experiment::LadCase1 => ExperimentKind::LadCase1,
                Experiment::LadCase2 => ExperimentKind::LadCase2,
                Experiment::Game => ExperimentKind::Game { epsilon },
            };
            let scale = if paper { Scale::Paper } else { Scale::Desk };
            let spec = ExperimentSpec {
                max_iters,
                trace_every,
                reference_budget,
                out_dir: Some(out.clone()),
                ..ExperimentSpec::new(kind, scale, seed)
            };
            let result = run_experiment(&spec)?;
            let report = &result.report;
            println!(
                "{} seed={} F*={:.12e} (reference residuals {:.2e}/{:.2e})",
                report.experiment,
                seed,
                report.reference.f_star,
                report.reference.quality.residual[0],
                report.reference.quality.residual[1]
            );
            for v in &report.variants {
                let cert = match &v.check {
                    Some(c) if c.passed() => format!("certificate ok (worst ratio {:.3})", c.worst_ratio),
                    Some(c) => format!("certificate VIOLATED at k={:?}", c.first_violation),
                    None => String::new(),
                };
                println!(
                    "  {:<24} final {:<12} slope {:<8} {} {}",
                    v.name,
                    v.final_metric.map_or("-".into(), |m| format!("{m:.3e}")),
                    v.slope.map_or("-".into(), |s| format!("{s:.3}")),
                    cert,
                    v.error.as_deref().unwrap_or("")
                );
            }
            println!("wrote {}", out.display());
            if check && report.certificate_violations() > 0 {
                return Ok(ExitCode::from(2));
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Solve { config, out } => {
            let cfg = SolveConfig::from_toml(&fs::read_to_string(&config)?)?;
            let trace = solve(&cfg)?;
            match out {
                Some(p) => trace.write_csv(BufWriter::new(File::create(p)?))?,
                None => trace.write_csv(io::stdout().lock())?,
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Plotdata { trace, f_star } => {
            plotdata(&trace, f_star)?;
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    env_logger::init();
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::OracleFailure { .. } => ExitCode::from(3),
                _ => ExitCode::from(1),
            }
        }
    }
}
