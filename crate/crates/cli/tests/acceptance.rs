//! Acceptance gate: one PASS/FAIL line per criterion, nonzero exit on failure.
//!
//! Criteria 1-10 run the suites in process; criterion 11 drives the built
//! binary. Each criterion also has a wall-clock budget.

use std::path::PathBuf;
use std::process::Command;
use std::time::{Duration, Instant};

use cartanlab_cli::config::*;
use cartanlab_cli::presets;
use cartanlab_cli::report::{Report, Verdict};
use cartanlab_cli::suites::run_suite;

type Outcome = Result<String, String>;

fn run(cfg: &SuiteConfig, label: &str, samples: Option<usize>) -> Result<Report, String> {
    let opts = RunOptions { samples, ..RunOptions::default() };
    run_suite(cfg, label, &opts).map_err(|e| format!("{label}: {e}"))
}

fn preset(command: &str, name: &str, samples: Option<usize>) -> Result<Report, String> {
    let cfg = presets::resolve(command, name).map_err(|e| e.to_string())?;
    run(&cfg, name, samples)
}

/// Every named check must be present and PASS; returns the worst ratio
/// residual/tolerance among them.
fn require(r: &Report, names: &[&str]) -> Result<f64, String> {
    let mut worst: f64 = 0.0;
    for n in names {
        let c = r.find(n).ok_or_else(|| format!("{}: missing check {n}", r.preset))?;
        if !c.passed() {
            return Err(format!("{}: {n} {} (residual {:.3e}, tol {:.2e})", r.preset, c.verdict.label(), c.residual, c.tolerance));
        }
        if c.tolerance > 0.0 {
            worst = worst.max(c.residual / c.tolerance);
        }
    }
    Ok(worst)
}

fn require_all(r: &Report) -> Result<f64, String> {
    let names: Vec<&str> = r.checks.iter().map(|c| c.name.as_str()).collect();
    require(r, &names)
}

fn random_check(h: &str, sub: Vec<usize>, seed: u64, scale: f64, unit_entries: Vec<[usize; 2]>, cartan: bool) -> SuiteConfig {
    SuiteConfig::Check(CheckConfig {
        h: h.into(),
        sub,
        base_dim: 2,
        connection: ConnectionSpec::Random { degree: 2, scale, seed, unit_entries },
        cartan,
        expect_flat: false,
    })
}

fn mc_flatness() -> Outcome {
    let mut worst: f64 = 0.0;
    for name in ["so2-mc", "so3-mc", "sl2-mc", "heisenberg-mc"] {
        let r = preset("check", name, Some(64))?;
        worst = worst.max(require(&r, &["flatness"])?);
    }
    Ok(format!("4 groups, worst residual/tol {worst:.1e}"))
}

fn bianchi() -> Outcome {
    let mut worst: f64 = 0.0;
    for seed in 1..=5 {
        let borel = random_check("sl2", vec![0, 1], seed, 0.7, vec![], false);
        let e2 = random_check("e2", vec![0], seed, 0.5, vec![], false);
        for (label, cfg) in [("sl2-borel", borel), ("e2-so2", e2)] {
            let r = run(&cfg, &format!("{label}-{seed}"), None)?;
            worst = worst.max(require(&r, &["bianchi"])?);
        }
    }
    Ok(format!("10 connections, worst residual/tol {worst:.1e}"))
}

fn bracket_defect() -> Outcome {
    let mut worst: f64 = 0.0;
    for seed in 2..=6 {
        let cfg = random_check("e2", vec![0], seed, 0.4, vec![[1, 0], [2, 1]], true);
        let r = run(&cfg, &format!("e2-cartan-{seed}"), Some(32))?;
        worst = worst.max(require(&r, &["nondegenerate", "bracket_defect"])?);
    }
    Ok(format!("5 Cartan connections, worst residual/tol {worst:.1e}"))
}

fn chern_weil() -> Outcome {
    let mut worst: f64 = 0.0;
    for name in presets::names_for("chern-weil") {
        let r = preset("chern-weil", name, None)?;
        worst = worst.max(require(&r, &["invariance", "closed", "transgression"])?);
    }
    Ok(format!("3 models, worst residual/tol {worst:.1e}"))
}

fn extension() -> Outcome {
    let r = preset("extend", "so2-in-sl2", Some(32))?;
    let worst = require(
        &r,
        &[
            "connection_round_trip",
            "form_round_trip",
            "extended_reproduction",
            "extended_equivariance",
            "intertwining",
            "curvature_correspondence",
        ],
    )?;
    require_all(&r)?;
    Ok(format!("{} checks, worst residual/tol {worst:.1e}", r.checks.len()))
}

fn development() -> Outcome {
    let mut worst: f64 = 0.0;
    for name in presets::names_for("develop") {
        let r = preset("develop", name, None)?;
        worst = worst.max(require(
            &r,
            &["development_endpoint", "left_log_derivative_mc", "right_log_derivative_mc", "flat_holonomy", "rk4_order"],
        )?);
    }
    Ok(format!("3 maps, worst residual/tol {worst:.1e}"))
}

fn chain_map() -> Outcome {
    let r = preset("develop", "so3-exp", None)?;
    let worst = require(&r, &["chain_map", "chain_map_group", "factorization"])?;
    Ok(format!("arity <= 3, worst residual/tol {worst:.1e}"))
}

fn prolongation() -> Outcome {
    let goldens: [(&str, [usize; 3], Option<&str>); 4] =
        [("so2", [1, 0, 0], None), ("so3", [3, 0, 0], None), ("gl2", [4, 6, 8], None), ("co3", [4, 3, 0], Some("TYPE2"))];
    for (group, dims, verdict) in goldens {
        let cfg = SuiteConfig::Prolong(ProlongConfig { group: GroupSpec::Preset(group.into()), k_max: 2, strict_invariance: false });
        let r = run(&cfg, group, None)?;
        require(&r, &["membership", "span_equality", "brute_force_oracle"])?;
        let got: Vec<usize> = serde_json::from_value(r.info["dims"].clone()).map_err(|e| e.to_string())?;
        if got != dims {
            return Err(format!("{group}: dims {got:?}, expected {dims:?}"));
        }
        if let Some(v) = verdict {
            if r.info["verdict"] != v {
                return Err(format!("{group}: verdict {}, expected {v}", r.info["verdict"]));
            }
        }
    }
    Ok("so2 [1,0,0] so3 [3,0,0] gl2 [4,6,8] co3 [4,3,0] TYPE2".into())
}

fn type_one() -> Outcome {
    let r = preset("gstructure", "so2-flat", None)?;
    let worst = require(&r, &["torsion_shift_law", "flatness", "bianchi", "torsion_free"])?;
    require_all(&r)?;
    Ok(format!("{} checks, worst residual/tol {worst:.1e}", r.checks.len()))
}

fn jets() -> Outcome {
    let mut worst: f64 = 0.0;
    for (group, k) in [("so2", 1), ("co3", 2)] {
        let cfg = SuiteConfig::Jets(JetsConfig { group: GroupSpec::Preset(group.into()), k, flow_order: 6 });
        let r = run(&cfg, group, None)?;
        worst = worst.max(require(&r, &["group_axioms", "exp_vs_flow", "flat_model", "semidirect_table"])?);
        require_all(&r)?;
    }
    Ok(format!("so2 k=1, co3 k=2, worst residual/tol {worst:.1e}"))
}

fn bin(args: &[&str]) -> Result<std::process::Output, String> {
    Command::new(env!("CARGO_BIN_EXE_cartanlab")).args(args).output().map_err(|e| e.to_string())
}

fn scratch_dir() -> PathBuf {
    let dir = std::env::temp_dir().join(format!("cartanlab-acceptance-{}", std::process::id()));
    std::fs::create_dir_all(&dir).expect("scratch directory");
    dir
}

fn cli_contract() -> Outcome {
    let mut invocations: Vec<Vec<String>> = presets::catalog()
        .into_iter()
        .map(|(name, c)| vec![c.command().to_string(), "--preset".into(), name.to_string()])
        .collect();
    for g in ["so2", "so3", "gl2", "co3"] {
        invocations.push(vec!["prolong".into(), "--group".into(), g.into()]);
    }
    invocations.push(vec!["jets".into(), "--group".into(), "so2".into()]);
    invocations.push(vec!["jets".into(), "--group".into(), "co3".into(), "--k".into(), "2".into()]);
    for inv in &invocations {
        let mut args: Vec<&str> = inv.iter().map(String::as_str).collect();
        args.extend(["--format", "json"]);
        let a = bin(&args)?;
        let b = bin(&args)?;
        if a.stdout != b.stdout {
            return Err(format!("`{}` is not byte-identical across runs", inv.join(" ")));
        }
        if a.status.code() != Some(0) {
            return Err(format!("`{}` exited with {:?}", inv.join(" "), a.status.code()));
        }
        let r: Report = serde_json::from_slice(&a.stdout).map_err(|e| format!("`{}`: {e}", inv.join(" ")))?;
        if r.count(Verdict::Fail) > 0 {
            return Err(format!("`{}` reports failures", inv.join(" ")));
        }
    }

    let dir = scratch_dir();
    let curved = SuiteConfig::Check(CheckConfig {
        h: "e2".into(),
        sub: vec![0],
        base_dim: 2,
        connection: ConnectionSpec::Random { degree: 2, scale: 0.4, seed: 2, unit_entries: vec![[1, 0], [2, 1]] },
        cartan: false,
        expect_flat: true,
    });
    let curved_path = dir.join("curved.json");
    std::fs::write(&curved_path, serde_json::to_string(&curved).unwrap()).map_err(|e| e.to_string())?;
    let broken_path = dir.join("broken.json");
    std::fs::write(&broken_path, "{\"command\": \"check\", \"config\": {").map_err(|e| e.to_string())?;

    let failing = bin(&["check", "--config", curved_path.to_str().unwrap()])?;
    let broken = bin(&["check", "--config", broken_path.to_str().unwrap()])?;
    let warn = bin(&["develop", "--preset", "sl2-exp", "--tol-scale", "0.3"])?;
    let strict = bin(&["develop", "--preset", "sl2-exp", "--tol-scale", "0.3", "--strict"])?;
    let _ = std::fs::remove_dir_all(&dir);

    if failing.status.code() != Some(1) {
        return Err(format!("curved connection judged flat exited with {:?}", failing.status.code()));
    }
    if broken.status.code() != Some(2) || !broken.stdout.is_empty() || broken.stderr.is_empty() {
        return Err(format!("malformed config exited with {:?}", broken.status.code()));
    }
    if !String::from_utf8_lossy(&warn.stdout).contains("WARN") || warn.status.code() != Some(0) || strict.status.code() != Some(1) {
        return Err(format!("WARN run exited with {:?}, strict with {:?}", warn.status.code(), strict.status.code()));
    }
    Ok(format!("{} invocations identical; exit codes 0/1/2 and --strict honored", invocations.len()))
}

fn main() {
    let criteria: [(&str, u64, fn() -> Outcome); 11] = [
        ("maurer-cartan flatness", 5, mc_flatness),
        ("bianchi identity", 10, bianchi),
        ("bracket defect", 10, bracket_defect),
        ("chern-weil closedness and transgression", 20, chern_weil),
        ("extension correspondence", 30, extension),
        ("development and holonomy", 30, development),
        ("flat characteristic chain map", 10, chain_map),
        ("prolongation dimensions", 10, prolongation),
        ("type-1 canonical connection", 20, type_one),
        ("jet groups and flat jet model", 30, jets),
        ("cli determinism and exit codes", 10, cli_contract),
    ];
    let mut failures = 0;
    for (i, (name, budget, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = f();
        let elapsed = start.elapsed();
        let over = elapsed > Duration::from_secs(*budget);
        let (ok, detail) = match outcome {
            Ok(d) if !over => (true, d),
            Ok(d) => (false, format!("{d}; over budget")),
            Err(e) => (false, e),
        };
        failures += usize::from(!ok);
        println!(
            "{} criterion {:>2} {:<40} {:>6.2}s / {:>2}s  {detail}",
            if ok { "PASS" } else { "FAIL" },
            i + 1,
            name,
            elapsed.as_secs_f64(),
            budget
        );
    }
    println!("acceptance: {} of {} criteria pass", criteria.len() - failures, criteria.len());
    if failures > 0 {
        std::process::exit(1);
    }
}
