//! Check records and report rendering.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Verdict {
    Pass,
    Warn,
    Fail,
}

impl Verdict {
    /// PASS at or below `tol`, WARN in `(tol, 10 tol)`, FAIL otherwise.
    pub fn classify(residual: f64, tol: f64) -> Self {
        if residual.is_nan() {
            Verdict::Fail
        } else if residual <= tol {
            Verdict::Pass
        } else if residual < 10.0 * tol {
            Verdict::Warn
        } else {
            Verdict::Fail
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Verdict::Pass => "PASS",
            Verdict::Warn => "WARN",
            Verdict::Fail => "FAIL",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub paper_anchor: String,
    pub residual: f64,
    pub tolerance: f64,
    pub verdict: Verdict,
}

impl Check {
    pub fn new(name: &str, anchor: &str, residual: f64, tolerance: f64) -> Self {
        Check { name: name.into(), paper_anchor: anchor.into(), residual, tolerance, verdict: Verdict::classify(residual, tolerance) }
    }

    /// A yes/no check: residual 0 on success, 1 on failure, no WARN band.
    pub fn holds(name: &str, anchor: &str, ok: bool) -> Self {
        Check {
            name: name.into(),
            paper_anchor: anchor.into(),
            residual: if ok { 0.0 } else { 1.0 },
            tolerance: 0.0,
            verdict: if ok { Verdict::Pass } else { Verdict::Fail },
        }
    }

    pub fn passed(&self) -> bool {
        self.verdict == Verdict::Pass
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub command: String,
    pub preset: String,
    pub seed: String,
    pub samples: usize,
    pub checks: Vec<Check>,
    /// Computed quantities that are reported but not judged.
    pub info: BTreeMap<String, serde_json::Value>,
}

impl Report {
    pub fn new(command: &str, preset: &str, seed: u64, samples: usize) -> Self {
        Report { command: command.into(), preset: preset.into(), seed: format!("{seed:#x}"), samples, checks: vec![], info: BTreeMap::new() }
    }

    pub fn push(&mut self, check: Check) {
        self.checks.push(check);
    }

    pub fn info(&mut self, key: &str, value: impl Serialize) {
        self.info.insert(key.into(), serde_json::to_value(value).unwrap_or(serde_json::Value::Null));
    }

    pub fn count(&self, v: Verdict) -> usize {
        self.checks.iter().filter(|c| c.verdict == v).count()
    }

    pub fn find(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    /// 0 without failures, 1 otherwise; in strict mode WARN also fails.
    pub fn exit_code(&self, strict: bool) -> i32 {
        let bad = self.count(Verdict::Fail) + if strict { self.count(Verdict::Warn) } else { 0 };
        i32::from(bad > 0)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialize")
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "cartanlab {} {} (seed {}, {} samples)", self.command, self.preset, self.seed, self.samples);
        let width = self.checks.iter().map(|c| c.name.len()).max().unwrap_or(0);
        for c in &self.checks {
            let _ = writeln!(s, "{}  {:<width$}  residual {:>10.3e}  tol {:>9.2e}  [{}]", c.verdict.label(), c.name, c.residual, c.tolerance, c.paper_anchor);
        }
        for (k, v) in &self.info {
            let _ = writeln!(s, "      {k}: {v}");
        }
        let _ = writeln!(s, "summary: {} PASS, {} WARN, {} FAIL", self.count(Verdict::Pass), self.count(Verdict::Warn), self.count(Verdict::Fail));
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn verdict_bands() {
        assert_eq!(Verdict::classify(1e-9, 1e-8), Verdict::Pass);
        assert_eq!(Verdict::classify(1e-8, 1e-8), Verdict::Pass);
        assert_eq!(Verdict::classify(5e-8, 1e-8), Verdict::Warn);
        assert_eq!(Verdict::classify(1e-7, 1e-8), Verdict::Fail);
        assert_eq!(Verdict::classify(f64::NAN, 1.0), Verdict::Fail);
        assert_eq!(Verdict::classify(0.0, 0.0), Verdict::Pass);
    }

    #[test]
    fn exit_codes_and_json_round_trip() {
        let mut r = Report::new("check", "x", 0x5EED, 4);
        r.push(Check::new("a", "anchor", 0.0, 1.0));
        assert_eq!(r.exit_code(false), 0);
        r.push(Check::new("b", "anchor", 2.0, 1.0));
        assert_eq!((r.exit_code(false), r.exit_code(true)), (0, 1));
        r.push(Check::holds("c", "anchor", false));
        assert_eq!(r.exit_code(false), 1);
        r.info("dims", vec![1, 2]);
        let back: Report = serde_json::from_str(&r.to_json()).unwrap();
        assert_eq!(back, r);
        assert!(r.to_text().contains("summary: 1 PASS, 1 WARN, 1 FAIL"));
    }
}
