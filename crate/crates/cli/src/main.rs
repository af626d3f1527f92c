use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use frac_kansa::bench::{
    convergence_study, parse_list, run_case, summary_text, vector_vs_classical, write_outputs, BenchmarkCase, CaseId,
    Config, ErrorReport,
};
use frac_kansa::par::{with_thread_cap, Execution};

#[derive(Parser)]
#[command(name = "frac-kansa", version, about = "Meshless solver for space-time fractional diffusion")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the case described by a config file and write CSV outputs.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Output directory (overrides `output_dir` in the config).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Node-generation seed (overrides `seed` in the config).
        #[arg(long)]
        seed: Option<u64>,
        /// Use the large node layout where the case defines one.
        #[arg(long)]
        large: bool,
    },
    /// Error table over a list of decreasing spacings.
    Convergence {
        #[arg(long)]
        case: CaseId,
        /// Comma-separated spacings; fractions such as 1/20 are accepted.
        #[arg(long)]
        spacings: String,
        /// Also write `report.csv` into this directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the built-in cases.
    ListCases,
}

fn run(config: PathBuf, out: Option<PathBuf>, seed: Option<u64>, large: bool) -> Result<()> {
    let cfg = Config::read(&config)?;
    let mut case = cfg.to_case().with_context(|| format!("config {}", config.display()))?;
    if let Some(seed) = seed {
        case.seed = seed;
    }
    if large {
        case = case.large();
    }
    let dir = out
        .or_else(|| cfg.get("output_dir").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("output").join(case.id.as_str()));
    let result = run_case(&case, Execution::Parallel)?;
    write_outputs(&dir, &result)?;
    print!("{}", summary_text(&result));
    println!("outputs         {}", dir.display());
    Ok(())
}

fn convergence(case: CaseId, spacings: &str, out: Option<PathBuf>) -> Result<()> {
    let spacings = match parse_list(spacings) {
        Ok(s) => s,
        Err(bad) => bail!("invalid spacing `{bad}`"),
    };
    let base = BenchmarkCase::new(case);
    let reports: Vec<ErrorReport> = if case == CaseId::VectorVsClassical {
        let (a, b) = vector_vs_classical(&base, &spacings, Execution::Parallel)?;
        vec![a, b]
    } else {
        vec![convergence_study(&base, &spacings, Execution::Parallel)?]
    };
    for r in &reports {
        print!("{}", r.to_table());
    }
    if let Some(dir) = out {
        std::fs::create_dir_all(&dir).with_context(|| dir.display().to_string())?;
        let mut all = ErrorReport::default();
        for r in &reports {
            all.rows.extend(r.rows.iter().cloned());
        }
        let path = dir.join("report.csv");
        std::fs::write(&path, all.to_csv(base.record_timing)).with_context(|| path.display().to_string())?;
    }
    Ok(())
}

fn list_cases() {
    for id in CaseId::ALL {
        let exact = if id.has_exact() { "analytic" } else { "no analytic solution" };
        println!("{:<20} {} ({exact})", id.as_str(), id.description());
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = with_thread_cap(move || match cli.command {
        Command::Run { config, out, seed, large } => run(config, out, seed, large),
        Command::Convergence { case, spacings, out } => convergence(case, &spacings, out),
        Command::ListCases => {
            list_cases();
            Ok(())
        }
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
