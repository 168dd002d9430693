use branchlink_cli::{apply_override, execute, figures, parse_config, CliError, Command, Format, RunConfig};
use clap::{Args, Parser, Subcommand, ValueEnum};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

/// Branching-process kernels, equivalence and matching checks, TVD bounds and estimates.
#[derive(Parser)]
#[command(name = "branchlink", version)]
struct Cli {
    #[command(subcommand)]
    action: Action,
    #[command(flatten)]
    global: Global,
}

#[derive(Args)]
struct Global {
    /// Master seed; overrides `seed` in the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads; results do not depend on this.
    #[arg(long, global = true, env = "BRANCHLINK_WORKERS")]
    workers: Option<usize>,
    /// Cached kernel rows per process.
    #[arg(long, global = true, env = "BRANCHLINK_CACHE_CAP")]
    cache_cap: Option<usize>,
    /// Output file; stdout when absent.
    #[arg(short, long, global = true)]
    output: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<FormatArg>,
    /// Also write an SVG chart next to the output file.
    #[arg(long, global = true)]
    plot: bool,
    /// Exit with status 4 unless the verdict matches.
    #[arg(long, global = true, value_enum)]
    expect: Option<Expect>,
    /// Overrides a `[run]` key, e.g. `--set N=1000`. Repeatable.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum Expect {
    Yes,
    No,
}

#[derive(Subcommand)]
enum Action {
    /// Runs the command named in the config's `[run]` section.
    Run { config: PathBuf },
    /// Simulates trajectories of every process in the config.
    Simulate { config: PathBuf },
    /// Tabulates conditional means and variances.
    Moments { config: PathBuf },
    /// Decides whether the CBP has an equivalent PSDBP.
    Equivalence { config: PathBuf },
    /// Looks for a moment-matched counterpart.
    Match { config: PathBuf },
    /// Certifies regularity and evaluates the TVD bounds.
    Bound { config: PathBuf },
    /// Estimates the k-step path TVD.
    Tvd { config: PathBuf },
    /// Regenerates the data for a built-in figure.
    Figure {
        #[arg(value_parser = clap::builder::PossibleValuesParser::new(figures::NAMES))]
        name: String,
        /// Multiplies the replicate count N.
        #[arg(long, default_value_t = 1.0)]
        scale: f64,
        /// Prints the built-in config and exits.
        #[arg(long)]
        print_config: bool,
    },
}

fn load(path: &Path, command: Option<Command>) -> Result<RunConfig, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Failure(format!("cannot read {}: {e}", path.display())))?;
    let mut cfg = parse_config(&text)?;
    if let Some(c) = command {
        cfg.run.command = Some(c);
    }
    Ok(cfg)
}

fn run(cli: Cli) -> Result<ExitCode, CliError> {
    let mut cfg = match cli.action {
        Action::Run { config } => load(&config, None)?,
        Action::Simulate { config } => load(&config, Some(Command::Simulate))?,
        Action::Moments { config } => load(&config, Some(Command::Moments))?,
        Action::Equivalence { config } => load(&config, Some(Command::Equivalence))?,
        Action::Match { config } => load(&config, Some(Command::Match))?,
        Action::Bound { config } => load(&config, Some(Command::Bound))?,
        Action::Tvd { config } => load(&config, Some(Command::Tvd))?,
        Action::Figure { name, scale, print_config } => {
            if print_config {
                print!("{}", figures::text(&name).expect("value parser admits only known names"));
                return Ok(ExitCode::SUCCESS);
            }
            figures::config(&name, scale)?
        }
    };
    let g = cli.global;
    for o in &g.overrides {
        apply_override(&mut cfg, o)?;
    }
    if let Some(s) = g.seed {
        cfg.run.seed = Some(s);
    }
    if let Some(w) = g.workers {
        if w == 0 {
            return Err(CliError::Validation { line: 0, key: "workers".into(), message: "must be positive".into() });
        }
        cfg.run.workers = Some(w);
    }
    if let Some(c) = g.cache_cap {
        cfg.run.cache_cap = Some(c);
    }
    if let Some(f) = g.format {
        cfg.run.format = Some(match f {
            FormatArg::Csv => Format::Csv,
            FormatArg::Json => Format::Json,
        });
    }
    if let Some(o) = &g.output {
        cfg.run.output = Some(o.display().to_string());
    }
    if g.plot {
        cfg.run.plot = Some(true);
    }
    if cfg.run.plot == Some(true) && cfg.run.output.is_none() {
        return Err(CliError::Validation { line: 0, key: "plot".into(), message: "needs an output file".into() });
    }

    let output = cfg.run.output.clone().map(PathBuf::from);
    let artifact = execute(cfg)?;
    match &output {
        Some(path) => {
            std::fs::write(path, &artifact.body)?;
            if let Some(svg) = &artifact.svg {
                std::fs::write(path.with_extension("svg"), svg)?;
            }
        }
        None => print!("{}", artifact.body),
    }
    if let Some(want) = g.expect {
        let got = artifact.affirmative.map(|a| if a { Expect::Yes } else { Expect::No });
        if got != Some(want) {
            eprintln!("branchlink: expectation not met");
            return Ok(ExitCode::from(4));
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("branchlink: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
