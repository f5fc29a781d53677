use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use tlschain::OffsetMode;
use tlschain_cli::fit::{cmd_fit, parse_offset, parse_window, FitRequest, Observable};
use tlschain_cli::reproduce::{cmd_reproduce, FigureId};
use tlschain_cli::run::cmd_run;
use tlschain_cli::scan::{cmd_scan, parse_couplings};
use tlschain_cli::{csvio, exit, parse_config, CliError, Result, RunConfig};

/// Qubit relaxation in a two-level-system chain.
#[derive(Parser)]
#[command(name = "tlschain", version)]
struct Cli {
    /// Master seed; overrides the config file.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory; overrides the config file.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads. Results do not depend on this.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the ensemble described by a config file.
    Run { config: PathBuf },
    /// Fit A exp(-t/T) + C to a CSV column.
    Fit {
        csv: PathBuf,
        #[arg(long, default_value = "n_q")]
        observable: Observable,
        /// `free` or `fixed=<value>`.
        #[arg(long, default_value = "free", value_parser = parse_offset)]
        offset: OffsetMode<f64>,
        /// `lo,hi`
        #[arg(long, value_parser = parse_window)]
        window: Option<(f64, f64)>,
    },
    /// Run and fit the config at each qubit coupling, then fit the power law.
    Scan {
        config: PathBuf,
        /// Comma-separated couplings.
        #[arg(long = "J", value_parser = parse_couplings)]
        couplings: Vec<f64>,
    },
    /// Run a standard figure parameter set.
    Reproduce {
        figure: FigureId,
        /// Also write an SVG plot of the curves.
        #[arg(long)]
        plot: bool,
    },
}

fn load_config(path: &PathBuf, cli: &Cli) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io {
        path: path.clone(),
        source: e,
    })?;
    let mut c = parse_config(&text).map_err(|e| match e {
        CliError::Parse { line, column, message } => CliError::Parse {
            line,
            column,
            message: format!("{}: {message}", path.display()),
        },
        other => other,
    })?;
    if let Some(seed) = cli.seed {
        c.master_seed = seed;
    }
    if let Some(out) = &cli.out {
        c.output_dir = out.display().to_string();
    }
    Ok(c)
}

fn progress(line: &str) {
    eprintln!("{line}");
}

fn execute(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Run { config } => {
            let c = load_config(config, cli)?;
            let out = cmd_run(&c, c.output_dir.as_ref())?;
            let last = out.ensemble.n_q.mean.last().copied().unwrap_or(f64::NAN);
            println!("trajectories={}", out.ensemble.trajectories.len());
            println!("final_mean_n_q={last}");
            for f in &out.files {
                println!("wrote {}", f.display());
            }
        }
        Command::Fit {
            csv,
            observable,
            offset,
            window,
        } => {
            let report = cmd_fit(
                csv,
                &FitRequest {
                    observable: *observable,
                    offset: *offset,
                    window: *window,
                },
            )?;
            print!("{report}");
            if let Some(dir) = &cli.out {
                csvio::write_text(&dir.join("fit_report.txt"), &report.to_string())?;
            }
        }
        Command::Scan { config, couplings } => {
            let c = load_config(config, cli)?;
            let couplings: Vec<f64> = couplings.iter().copied().collect();
            let outcome = cmd_scan(&c, &couplings, c.output_dir.as_ref(), &progress)?;
            print!("{}", tlschain_cli::scan::scaling_report(&outcome.t1, "T1"));
            if let Some(t2) = &outcome.t2 {
                print!("{}", tlschain_cli::scan::scaling_report(t2, "T2"));
            }
        }
        Command::Reproduce { figure, plot } => {
            let seed = cli.seed.unwrap_or(RunConfig::default().master_seed);
            let dir = cli
                .out
                .clone()
                .unwrap_or_else(|| PathBuf::from("out"))
                .join(figure.name());
            let fig = cmd_reproduce(*figure, seed, &dir, *plot, &progress)?;
            print!("{}", fig.report());
            println!("output in {}", dir.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: cannot start {n} threads: {e}");
            return ExitCode::from(exit::SIMULATION as u8);
        }
    }
    match execute(&cli) {
        Ok(()) => ExitCode::from(exit::OK as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
