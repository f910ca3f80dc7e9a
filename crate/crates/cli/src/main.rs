use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use hgram_cli::{commands, resolve, CliError, EXIT_OK, OUT_ENV};

#[derive(Parser)]
#[command(
    name = "hgram",
    version,
    about = "Hyperbolic graph meta-learning toolkit"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// TOML run configuration; defaults apply to every missing key.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Comma-separated seeds, overriding the config.
    #[arg(long, value_delimiter = ',')]
    seed: Option<Vec<u64>>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker thread cap.
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic dataset and its manifest.
    Generate(Common),
    /// Meta-train every seed and fold.
    Train {
        #[command(flatten)]
        common: Common,
        /// Skip units whose metrics already exist.
        #[arg(long)]
        resume: bool,
    },
    /// Meta-test a checkpoint.
    Eval {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        checkpoint: Option<PathBuf>,
    },
    /// Accuracy against shots or hops.
    Sweep {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        resume: bool,
    },
    /// Check the influence and information-loss bounds on random graphs.
    Verify(Common),
    /// Compare the full model with its prototype-only and head-only variants.
    Ablate(Common),
}

fn run(cli: Cli) -> Result<(), CliError> {
    let (name, common) = match &cli.command {
        Command::Generate(c) => ("generate", c),
        Command::Train { common, .. } => ("train", common),
        Command::Eval { common, .. } => ("eval", common),
        Command::Sweep { common, .. } => ("sweep", common),
        Command::Verify(c) => ("verify", c),
        Command::Ablate(c) => ("ablate", c),
    };
    if let Some(n) = common.threads {
        if n == 0 {
            return Err(CliError::Config("--threads must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(e.to_string()))?;
    }
    let env_out = std::env::var_os(OUT_ENV).map(PathBuf::from);
    let inv = resolve(
        name,
        common.config.as_deref(),
        common.seed.clone(),
        common.out.clone(),
        env_out,
    )?;
    match &cli.command {
        Command::Generate(_) => {
            let m = commands::generate(&inv)?;
            println!(
                "{} graphs, {} nodes, {} labels -> {}",
                m.n_graphs,
                m.total_nodes,
                m.num_labels,
                inv.out.display()
            );
        }
        Command::Train { resume, .. } => {
            let s = commands::train(&inv, *resume)?;
            println!(
                "accuracy {:.4} ± {:.4} (n = {}) -> {}",
                s.mean,
                s.ci95,
                s.n,
                inv.out.display()
            );
        }
        Command::Eval { checkpoint, .. } => {
            let r = commands::eval(&inv, checkpoint.as_deref())?;
            println!(
                "accuracy {:.4} ± {:.4} (n = {}) -> {}",
                r.mean,
                r.ci95,
                r.n,
                inv.out.display()
            );
        }
        Command::Sweep { resume, .. } => {
            let t = commands::sweep(&inv, *resume)?;
            print!("{}", t.to_csv());
        }
        Command::Verify(_) => {
            let reports = commands::verify(&inv)?;
            for r in reports {
                println!(
                    "seed {}: {} pairs, 0 violations, tree curve monotone: {}",
                    r.seed, r.pairs, r.tree_curve_monotone
                );
            }
        }
        Command::Ablate(_) => {
            let r = commands::ablate(&inv)?;
            print!("{}", r.to_csv());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::from(EXIT_OK as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
