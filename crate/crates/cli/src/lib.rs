//! Library half of the `branchlink` command: config parsing, command
//! runners and output assembly. `main.rs` only maps flags onto these.

pub mod commands;
pub mod config;
pub mod error;
pub mod figures;
pub mod plot;

pub use config::{parse_config, Command, Format, RunConfig};
pub use error::CliError;

use serde_json::json;

/// A finished run, ready to be written.
#[derive(Debug, Clone)]
pub struct Artifact {
    pub command: Command,
    pub format: Format,
    /// Header plus CSV rows, or the JSON document.
    pub body: String,
    pub svg: Option<String>,
    pub affirmative: Option<bool>,
}

/// Applies a `key=value` override to the `[run]` section and revalidates.
pub fn apply_override(cfg: &mut RunConfig, assignment: &str) -> Result<(), CliError> {
    let (key, value) = assignment.split_once('=').ok_or_else(|| CliError::Parse {
        line: 0,
        column: 1,
        expected: "`key=value`".into(),
        found: format!("`{assignment}`"),
    })?;
    cfg.run
        .set(key, value)
        .map_err(|message| CliError::Validation { line: 0, key: key.into(), message })?;
    cfg.validate()
}

fn default_format(command: Command) -> Format {
    match command {
        Command::Equivalence | Command::Match => Format::Json,
        _ => Format::Csv,
    }
}

/// Every line of the rendered config prefixed by `# `, then notes as `# # `.
pub fn header(cfg: &RunConfig, notes: &[String]) -> String {
    let mut out = String::new();
    for line in cfg.render().lines() {
        out.push_str("# ");
        out.push_str(line);
        out.push('\n');
    }
    for note in notes {
        out.push_str("# # ");
        out.push_str(note);
        out.push('\n');
    }
    out
}

/// Recovers the config embedded in a CSV header or a JSON document.
pub fn extract_config(output: &str) -> Result<RunConfig, CliError> {
    if output.trim_start().starts_with('{') {
        let doc: serde_json::Value = serde_json::from_str(output).map_err(|e| CliError::Failure(e.to_string()))?;
        let text = doc["config"].as_str().ok_or_else(|| CliError::Failure("document has no `config` field".into()))?;
        return parse_config(text);
    }
    let text: String = output
        .lines()
        .map_while(|l| l.strip_prefix("# "))
        .map(|l| format!("{l}\n"))
        .collect();
    parse_config(&text)
}

/// Runs the config's command. The seed is pinned first so the header records it.
pub fn execute(mut cfg: RunConfig) -> Result<Artifact, CliError> {
    let command = cfg.run.command.ok_or_else(|| CliError::Validation {
        line: 0,
        key: "command".into(),
        message: "no command given (set command= in [run] or use a subcommand)".into(),
    })?;
    let seed = *cfg.run.seed.get_or_insert(0);
    let format = cfg.run.format.unwrap_or_else(|| default_format(command));
    let out = commands::run(&cfg, command)?;
    let body = match format {
        Format::Csv => header(&cfg, &out.notes) + &out.csv,
        Format::Json => {
            let doc = json!({
                "config": cfg.render(),
                "seed": seed,
                "command": command.name(),
                "notes": out.notes,
                "result": out.json,
            });
            serde_json::to_string_pretty(&doc).map_err(|e| CliError::Failure(e.to_string()))? + "\n"
        }
    };
    let svg = if cfg.run.plot == Some(true) { out.plot.as_ref().map(plot::render_svg) } else { None };
    Ok(Artifact { command, format, body, svg, affirmative: out.affirmative })
}
