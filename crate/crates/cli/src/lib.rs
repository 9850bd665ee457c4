//! Command-line front end: subcommands run validation suites and print
//! PASS/WARN/FAIL reports.

pub mod config;
pub mod presets;
pub mod report;
pub mod suites;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use config::{GroupSpec, JetsConfig, ProlongConfig, RunOptions, SuiteConfig};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("configuration error: {0}")]
    Core(#[from] cartanlab::Error),
}

/// Exit status for configuration errors.
pub const EXIT_CONFIG: i32 = 2;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Json,
}

#[derive(Debug, Parser)]
#[command(name = "cartanlab", version, about = "Numerical checks for Cartan connections, prolongations and jets")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Common {
    /// Built-in or user preset name.
    #[arg(long, conflicts_with = "config")]
    preset: Option<String>,
    /// JSON configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    samples: Option<usize>,
    /// Hexadecimal seed.
    #[arg(long, value_parser = config::parse_seed)]
    seed: Option<u64>,
    /// Multiplies every tolerance.
    #[arg(long, default_value_t = 1.0)]
    tol_scale: f64,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
    /// Treat WARN as failure.
    #[arg(long)]
    strict: bool,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Axioms, curvature and Bianchi identity of a connection.
    Check(Common),
    /// Developing maps, holonomy and the flat characteristic chain map.
    Develop(Common),
    /// Closedness and transgression of characteristic forms.
    ChernWeil(Common),
    /// Extension of connections from a subgroup.
    Extend(Common),
    /// Prolongation dimensions of a linear Lie algebra.
    Prolong {
        #[command(flatten)]
        common: Common,
        /// Preset name of the linear algebra.
        #[arg(long, conflicts_with_all = ["preset", "config"])]
        group: Option<String>,
        #[arg(long, default_value_t = 2)]
        k_max: usize,
    },
    /// Torsion normalization and canonical connections of G-structures.
    Gstructure(Common),
    /// Truncated jet groups and the flat jet model.
    Jets {
        #[command(flatten)]
        common: Common,
        #[arg(long, conflicts_with_all = ["preset", "config"])]
        group: Option<String>,
        #[arg(long, default_value_t = 1)]
        k: usize,
    },
    /// Print the preset catalog.
    ListPresets,
}

/// Output of one invocation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Outcome {
    pub stdout: String,
    pub stderr: String,
    pub code: i32,
}

impl Outcome {
    fn config_error(msg: impl std::fmt::Display) -> Self {
        Outcome { stdout: String::new(), stderr: format!("{msg}\n"), code: EXIT_CONFIG }
    }
}

fn resolve(command: &str, common: &Common, group: Option<(&String, SuiteConfig)>) -> Result<(SuiteConfig, String), CliError> {
    if let Some((name, cfg)) = group {
        GroupSpec::Preset(name.clone()).build()?;
        return Ok((cfg, name.clone()));
    }
    let (cfg, label) = match (&common.preset, &common.config) {
        (Some(p), None) => (presets::resolve(command, p)?, p.clone()),
        (None, Some(path)) => (SuiteConfig::load(path)?, path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()),
        _ => return Err(CliError::Config(format!("`{command}` needs --preset or --config"))),
    };
    if cfg.command() != command {
        return Err(CliError::Config(format!("configuration is for `{}`, not `{command}`", cfg.command())));
    }
    Ok((cfg, label))
}

/// Parses `args` (including the program name) and runs the subcommand.
pub fn run<I, T>(args: I) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { 0 };
            let text = e.render().to_string();
            return if code == 0 { Outcome { stdout: text, stderr: String::new(), code } } else { Outcome::config_error(text.trim_end()) };
        }
    };
    let (command, common, resolved) = match &cli.command {
        Command::ListPresets => return Outcome { stdout: presets::listing(), stderr: String::new(), code: 0 },
        Command::Check(c) => ("check", c, resolve("check", c, None)),
        Command::Develop(c) => ("develop", c, resolve("develop", c, None)),
        Command::ChernWeil(c) => ("chern-weil", c, resolve("chern-weil", c, None)),
        Command::Extend(c) => ("extend", c, resolve("extend", c, None)),
        Command::Gstructure(c) => ("gstructure", c, resolve("gstructure", c, None)),
        Command::Prolong { common, group, k_max } => {
            let g = group.as_ref().map(|g| (g, SuiteConfig::Prolong(ProlongConfig { group: GroupSpec::Preset(g.clone()), k_max: *k_max, strict_invariance: common.strict })));
            ("prolong", common, resolve("prolong", common, g))
        }
        Command::Jets { common, group, k } => {
            let g = group.as_ref().map(|g| (g, SuiteConfig::Jets(JetsConfig { group: GroupSpec::Preset(g.clone()), k: *k, flow_order: 6 })));
            ("jets", common, resolve("jets", common, g))
        }
    };
    let _ = command;
    let (cfg, label) = match resolved {
        Ok(r) => r,
        Err(e) => return Outcome::config_error(e),
    };
    if !(common.tol_scale > 0.0 && common.tol_scale.is_finite()) {
        return Outcome::config_error("configuration error: --tol-scale must be positive");
    }
    let opts = RunOptions {
        samples: common.samples,
        seed: common.seed.unwrap_or(cartanlab::sampling::DEFAULT_SEED),
        tol_scale: common.tol_scale,
        strict: common.strict,
    };
    match suites::run_suite(&cfg, &label, &opts) {
        Ok(report) => {
            let stdout = match common.format {
                Format::Text => report.to_text(),
                Format::Json => report.to_json() + "\n",
            };
            Outcome { stdout, stderr: String::new(), code: report.exit_code(opts.strict) }
        }
        Err(e) => Outcome::config_error(e),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn missing_inputs_and_bad_flags_exit_with_config_status() {
        assert_eq!(run(["cartanlab", "check"]).code, EXIT_CONFIG);
        assert_eq!(run(["cartanlab", "check", "--preset", "nope"]).code, EXIT_CONFIG);
        assert_eq!(run(["cartanlab", "check", "--preset", "so2-mc", "--seed", "xyz"]).code, EXIT_CONFIG);
        assert_eq!(run(["cartanlab", "develop", "--preset", "so2-mc"]).code, EXIT_CONFIG);
        let out = run(["cartanlab", "check", "--preset", "so2-mc", "--tol-scale", "0"]);
        assert_eq!(out.code, EXIT_CONFIG);
        assert!(out.stdout.is_empty() && !out.stderr.is_empty());
    }

    #[test]
    fn list_presets_is_stable() {
        let a = run(["cartanlab", "list-presets"]);
        assert_eq!(a.code, 0);
        assert_eq!(a, run(["cartanlab", "list-presets"]));
        assert!(a.stdout.contains("so2-in-sl2"));
    }

    #[test]
    fn maurer_cartan_preset_passes() {
        let out = run(["cartanlab", "check", "--preset", "so2-mc", "--format", "json"]);
        assert_eq!(out.code, 0, "{}", out.stdout);
        let r: report::Report = serde_json::from_str(&out.stdout).unwrap();
        assert!(r.find("flatness").unwrap().passed());
    }
}
