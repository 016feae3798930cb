use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use freesense_cli::{
    mp_density_table, parse_spec, provenance_comments, run_experiment, ExperimentKind,
    ExperimentSpec, RunError, RunOptions,
};

#[derive(Parser)]
#[command(name = "freesense", version, about = "Blind multi-cell power estimation experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment file and write its CSV.
    Run {
        spec: PathBuf,
        /// Override the master seed of the file.
        #[arg(long)]
        seed: Option<u64>,
        /// Worker threads (default: available cores).
        #[arg(long)]
        workers: Option<usize>,
        /// Output directory (default: current directory).
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Parse an experiment file and print its resolved configuration.
    Validate { spec: PathBuf },
    /// Print the Marchenko-Pastur density as CSV on stdout.
    MpDensity {
        #[arg(long, allow_hyphen_values = true)]
        c: f64,
        #[arg(long, default_value_t = 512)]
        points: usize,
    },
}

fn print_resolved(spec: &ExperimentSpec) {
    for line in provenance_comments(spec) {
        println!("# {line}");
    }
    print!("{}", spec.render());
}

fn run(cli: Cli) -> Result<(), RunError> {
    match cli.command {
        Command::Run { spec, seed, workers, out } => {
            let mut spec = parse_spec(&spec)?;
            if let Some(s) = seed {
                spec = spec.with_seed(s);
            }
            print_resolved(&spec);
            let workers = workers.unwrap_or_else(|| {
                std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
            });
            if workers == 0 {
                return Err(RunError::Config("--workers must be at least 1".into()));
            }
            let report = run_experiment(&spec, &RunOptions { workers, out_dir: out })?;
            eprintln!("wrote {} rows to {}", report.rows, report.output.display());
        }
        Command::Validate { spec } => {
            let spec = parse_spec(&spec)?;
            print_resolved(&spec);
        }
        Command::MpDensity { c, points } => {
            let (header, rows) = mp_density_table(c, points)?;
            println!("# kind={}", ExperimentKind::MpDensity.label());
            println!("{}", header.join(","));
            for row in rows {
                println!("{}", row.join(","));
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
