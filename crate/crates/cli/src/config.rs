//! On-disk suite configurations and run options.

use std::path::Path as FsPath;

use cartanlab::forms::literal::PolyMatrixLiteral;
use cartanlab::lie::presets::GroupRelation;
use cartanlab::prolongation::LinearLieAlgebra;
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::CliError;

/// A configuration file: `{"command": "...", "config": {...}}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "command", content = "config", rename_all = "kebab-case")]
pub enum SuiteConfig {
    Check(CheckConfig),
    Develop(DevelopConfig),
    ChernWeil(ChernWeilConfig),
    Extend(ExtendConfig),
    Prolong(ProlongConfig),
    Gstructure(GStructureConfig),
    Jets(JetsConfig),
}

impl SuiteConfig {
    pub fn command(&self) -> &'static str {
        match self {
            SuiteConfig::Check(_) => "check",
            SuiteConfig::Develop(_) => "develop",
            SuiteConfig::ChernWeil(_) => "chern-weil",
            SuiteConfig::Extend(_) => "extend",
            SuiteConfig::Prolong(_) => "prolong",
            SuiteConfig::Gstructure(_) => "gstructure",
            SuiteConfig::Jets(_) => "jets",
        }
    }

    pub fn parse(text: &str, origin: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Config(format!("{origin}: line {}, column {}: {e}", e.line(), e.column())))
    }

    pub fn load(path: &FsPath) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        Self::parse(&text, &path.display().to_string())
    }
}

/// How the connection form of a `check` run is produced.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ConnectionSpec {
    /// Left Maurer-Cartan form of the group of `h`.
    MaurerCartan,
    /// `A(x)` with seeded random polynomial entries, plus `1` at each listed
    /// `(row, col)`.
    Random {
        degree: usize,
        scale: f64,
        seed: u64,
        #[serde(default)]
        unit_entries: Vec<[usize; 2]>,
    },
    Poly { coefficients: PolyMatrixLiteral },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckConfig {
    /// Algebra preset of the model.
    pub h: String,
    /// Basis indices of `h` spanning the subalgebra.
    pub sub: Vec<usize>,
    pub base_dim: usize,
    pub connection: ConnectionSpec,
    /// Run the Cartan-only checks (nondegeneracy, zeta brackets).
    #[serde(default)]
    pub cartan: bool,
    /// Judge the curvature norm against the flatness tolerance.
    #[serde(default)]
    pub expect_flat: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DevelopConfig {
    /// Exponential-map preset `psi` with `kappa` its left logarithmic derivative.
    pub map: String,
    pub paths: usize,
    pub loops: usize,
    pub steps: usize,
    pub path_degree: usize,
    /// Largest arity of the chain-map check.
    pub max_arity: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InvariantSpec {
    /// `tr(rho(X) rho(Y))` in the preset representation.
    TraceSquare,
    Killing,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChernWeilConfig {
    pub h: String,
    pub sub: Vec<usize>,
    pub base_dim: usize,
    pub f: InvariantSpec,
    pub seeds: [u64; 2],
    pub degree: usize,
    pub scale: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExtendConfig {
    /// Outer algebra preset.
    pub h: String,
    /// Columns spanning the inner algebra in coordinates of `h`.
    pub inclusion: Vec<Vec<f64>>,
    pub names: Vec<String>,
    pub base_dim: usize,
    pub connections: usize,
    pub max_form_degree: usize,
}

impl ExtendConfig {
    pub fn inclusion_matrix(&self, h_dim: usize) -> Result<DMatrix<f64>, CliError> {
        if self.inclusion.iter().any(|c| c.len() != h_dim) {
            return Err(CliError::Config(format!("inclusion columns must have length {h_dim}")));
        }
        Ok(DMatrix::from_fn(h_dim, self.inclusion.len(), |i, j| self.inclusion[j][i]))
    }
}

/// A linear Lie algebra: a preset name or explicit basis matrices.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GroupSpec {
    Preset(String),
    Matrices {
        n: usize,
        /// Basis matrices, row by row.
        matrices: Vec<Vec<Vec<f64>>>,
    },
}

impl GroupSpec {
    pub fn build(&self) -> Result<LinearLieAlgebra, CliError> {
        match self {
            GroupSpec::Preset(name) => Ok(LinearLieAlgebra::preset(name)?),
            GroupSpec::Matrices { n, matrices } => {
                let mut mats = Vec::new();
                for m in matrices {
                    if m.len() != *n || m.iter().any(|r| r.len() != *n) {
                        return Err(CliError::Config(format!("basis matrices must be {n} x {n}")));
                    }
                    mats.push(DMatrix::from_fn(*n, *n, |i, j| m[i][j]));
                }
                Ok(LinearLieAlgebra::new("custom", *n, mats, GroupRelation::None)?)
            }
        }
    }

    pub fn label(&self) -> String {
        match self {
            GroupSpec::Preset(name) => name.clone(),
            GroupSpec::Matrices { .. } => "custom".into(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProlongConfig {
    pub group: GroupSpec,
    pub k_max: usize,
    #[serde(default)]
    pub strict_invariance: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GStructureConfig {
    pub group: GroupSpec,
    /// Frame field `S(x)`; the identity when absent.
    #[serde(default)]
    pub frame: Option<PolyMatrixLiteral>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JetsConfig {
    pub group: GroupSpec,
    pub k: usize,
    /// Jet order used for the flow comparison.
    pub flow_order: usize,
}

/// Command-line options shared by all suites.
#[derive(Clone, Debug, PartialEq)]
pub struct RunOptions {
    pub samples: Option<usize>,
    pub seed: u64,
    pub tol_scale: f64,
    pub strict: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions { samples: None, seed: cartanlab::sampling::DEFAULT_SEED, tol_scale: 1.0, strict: false }
    }
}

pub fn parse_seed(s: &str) -> Result<u64, String> {
    let t = s.trim();
    let hex = t.strip_prefix("0x").or_else(|| t.strip_prefix("0X")).unwrap_or(t);
    u64::from_str_radix(hex, 16).map_err(|e| format!("seed `{s}` is not hexadecimal: {e}"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seeds_parse_as_hex() {
        assert_eq!(parse_seed("0x5EED"), Ok(0x5EED));
        assert_eq!(parse_seed("ff"), Ok(255));
        assert!(parse_seed("zz").is_err());
    }

    #[test]
    fn unknown_fields_and_bad_json_are_rejected_with_positions() {
        let bad = r#"{"command": "prolong", "config": {"group": "so3", "k_max": 2, "kmax": 1}}"#;
        let e = SuiteConfig::parse(bad, "cfg").unwrap_err().to_string();
        assert!(e.contains("line 1") && e.contains("kmax"), "{e}");
        assert!(SuiteConfig::parse("{\"command\": ", "cfg").is_err());
        let ok = r#"{"command": "prolong", "config": {"group": {"n": 1, "matrices": [[[1.0]]]}, "k_max": 2}}"#;
        let c = SuiteConfig::parse(ok, "cfg").unwrap();
        match &c {
            SuiteConfig::Prolong(p) => assert_eq!(p.group.build().unwrap().dim(), 1),
            _ => panic!("wrong command"),
        }
    }
}
