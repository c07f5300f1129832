use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use heatlab_cli::plot::{plot_file, PlotSpec};
use heatlab_cli::runner::{run_suite, threads_from_env, validate_suite};
use heatlab_cli::{golden, CliResult, ExperimentRegistry, SuiteConfig, REFERENCE_CONFIG};

#[derive(Parser)]
#[command(name = "heatlab", version, about = "Heat semigroup and semilinear heat equation experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every experiment in a suite config and write a manifest.
    Run {
        config: PathBuf,
        /// Overrides `output_dir` from the config.
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
    /// Check a config without running it, or print the reference config.
    Validate {
        #[arg(required_unless_present = "reference")]
        config: Option<PathBuf>,
        #[arg(long)]
        reference: bool,
    },
    /// Log-log SVG of two CSV columns.
    Plot {
        csv: PathBuf,
        #[arg(long, default_value = "t")]
        x: String,
        #[arg(long)]
        y: String,
        /// Column splitting rows into separate lines.
        #[arg(long)]
        group: Option<String>,
        /// Reference slope; repeatable.
        #[arg(long = "slope", allow_hyphen_values = true)]
        slopes: Vec<f64>,
        #[arg(long)]
        title: Option<String>,
        #[arg(long, short)]
        out: PathBuf,
    },
    /// Regenerate the golden reference files.
    Golden {
        #[arg(long)]
        dir: PathBuf,
        /// Overwrite existing files.
        #[arg(long)]
        force: bool,
    },
    /// List the registered experiment kinds.
    Kinds,
}

fn execute(cli: Cli) -> CliResult<()> {
    let registry = ExperimentRegistry::with_defaults();
    match cli.command {
        Command::Run { config, output } => {
            let cfg = SuiteConfig::load(&config)?;
            let threads = threads_from_env()?;
            let run = run_suite(&cfg, &registry, output.as_deref(), threads)?;
            println!(
                "{} experiment(s), {} file(s); manifest in {}",
                run.manifest.experiments.len(),
                run.manifest.files.len(),
                run.output_dir.display()
            );
            for e in &run.manifest.experiments {
                let failed = e.checks.iter().filter(|c| !c.pass).count();
                println!("  {:<24} {:<16} {} check(s), {failed} failed", e.name, e.status, e.checks.len());
            }
            run.verdict()
        }
        Command::Validate { config, reference } => {
            if reference {
                print!("{REFERENCE_CONFIG}");
                return Ok(());
            }
            let path = config.expect("clap requires a config");
            let cfg = SuiteConfig::load(&path)?;
            validate_suite(&cfg, &registry)?;
            println!("{}: {} experiment(s) valid", path.display(), cfg.experiments.len());
            Ok(())
        }
        Command::Plot {
            csv,
            x,
            y,
            group,
            slopes,
            title,
            out,
        } => {
            let spec = PlotSpec {
                x,
                y,
                group,
                slopes,
                title,
            };
            plot_file(&csv, &spec, &out)?;
            println!("wrote {}", out.display());
            Ok(())
        }
        Command::Golden { dir, force } => {
            for f in golden::write_golden(&dir, force)? {
                println!("wrote {}", dir.join(f).display());
            }
            Ok(())
        }
        Command::Kinds => {
            for k in registry.kinds() {
                println!("{:<18} {}", k.kind(), k.describe());
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
