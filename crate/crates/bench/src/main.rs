use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use rmes_bench::config::parse_objective;
use rmes_bench::output::{write_histograms, write_records, write_summary};
use rmes_bench::{aggregate, check, run_benchmark, scenario, BenchmarkConfig, GroundTruth, Objective};

#[derive(Parser)]
#[command(name = "rmes-bench", version, about = "Bayesian-optimization benchmarks for RMES, MES, EI and UCB")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run the experiment described by a config file and write the CSV.
    Run {
        config: PathBuf,
        /// Overrides the config's `output` key.
        #[arg(long)]
        output: Option<PathBuf>,
        /// Overrides the config's `seed` key.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run the numerical conformance suite against independent oracles.
    Check,
    /// Print the true maximum and maximizer of an objective.
    Truth {
        /// e.g. `branin`, `eggholder`, `gp_sample(7, 0.33, 1)`
        objective: String,
    },
    /// Compare MES and RMES on a 1-D misconception scenario.
    Scenario { config: PathBuf },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Cmd::Run { config, output, seed } => run(&config, output, seed),
        Cmd::Check => {
            let outcomes = check::run_all();
            for o in &outcomes {
                println!("{o}");
            }
            let failed = outcomes.iter().filter(|o| !o.passed).count();
            println!("{} checks, {failed} failed", outcomes.len());
            return if failed == 0 { ExitCode::SUCCESS } else { ExitCode::FAILURE };
        }
        Cmd::Truth { objective } => truth(&objective),
        Cmd::Scenario { config } => scenario::Scenario::load(&config)
            .and_then(|s| s.evaluate())
            .map(|outcome| println!("{outcome}")),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn run(path: &Path, output: Option<PathBuf>, seed: Option<u64>) -> rmes_bench::Result<()> {
    let mut config = BenchmarkConfig::load(path)?;
    if let Some(o) = output {
        config.output = Some(o);
    }
    if let Some(s) = seed {
        config.seed = s;
    }
    let records = run_benchmark(&config)?;
    let dim = records.first().map_or(0, |r| r.x.len());
    let table = aggregate(&records);

    let out_path = config.output.clone().unwrap_or_else(|| path.with_extension("csv"));
    let mut out = BufWriter::new(File::create(&out_path)?);
    write_records(&mut out, dim, &records)?;
    out.flush()?;
    let mut summary = BufWriter::new(File::create(out_path.with_extension("summary.csv"))?);
    write_summary(&mut summary, &table)?;
    summary.flush()?;
    let mut hist = BufWriter::new(File::create(out_path.with_extension("histogram.csv"))?);
    write_histograms(&mut hist, &table)?;
    hist.flush()?;

    let failures = records.iter().filter(|r| r.failure.is_some()).count();
    for acq in &config.acquisitions {
        if let Some(last) = table.rows.iter().filter(|r| r.acquisition == *acq).last() {
            println!(
                "{acq:>4}  T={:<4} log10 mean SR {:>8.3}  log10 mean IR {:>8.3}  median SR {:.3e}",
                last.iteration, last.log10_mean_simple_regret, last.log10_mean_inference_regret, last.median_simple_regret
            );
        }
    }
    println!("wrote {} rows to {}", records.len(), out_path.display());
    if failures > 0 {
        eprintln!("{failures} repetition(s) ended early; see the log");
    }
    Ok(())
}

fn truth(spec: &str) -> rmes_bench::Result<()> {
    let kind = parse_objective(spec, Path::new(".")).map_err(rmes_bench::BenchError::Config)?;
    let objective = Objective::new(kind, None)?;
    let t = GroundTruth::compute(&objective)?;
    println!("objective   {}", objective.kind().name());
    println!("mean shift  {:.16e}", objective.mean_shift());
    println!("f*          {:.16e}", t.max_value);
    let x: Vec<String> = t.maximizer.iter().map(|v| format!("{v:.16e}")).collect();
    println!("x*          {}", x.join(" "));
    Ok(())
}
