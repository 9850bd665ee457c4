//! Built-in suite presets and the user preset directory.

use std::path::PathBuf;

use crate::config::*;
use crate::CliError;

/// Directory searched for `<name>.json` before the built-in catalog.
pub const PRESET_DIR_VAR: &str = "CARTANLAB_PRESET_DIR";

fn mc(h: &str) -> SuiteConfig {
    SuiteConfig::Check(CheckConfig {
        h: h.into(),
        sub: vec![0],
        base_dim: 0,
        connection: ConnectionSpec::MaurerCartan,
        cartan: false,
        expect_flat: true,
    })
}

fn develop(map: &str) -> SuiteConfig {
    SuiteConfig::Develop(DevelopConfig { map: map.into(), paths: 20, loops: 10, steps: 256, path_degree: 3, max_arity: 3 })
}

fn chern_weil(h: &str, sub: Vec<usize>, f: InvariantSpec) -> SuiteConfig {
    SuiteConfig::ChernWeil(ChernWeilConfig { h: h.into(), sub, base_dim: 4, f, seeds: [1, 2], degree: 2, scale: 0.6 })
}

fn gstructure(group: &str, frame: Option<&str>) -> SuiteConfig {
    SuiteConfig::Gstructure(GStructureConfig {
        group: GroupSpec::Preset(group.into()),
        frame: frame.map(|f| serde_json::from_str(f).expect("built-in frame literal")),
    })
}

/// `S(x) = I + small polynomial terms` on `R^2`.
const SO2_PERTURBED_FRAME: &str = r#"{"rows": 2, "cols": 2, "entries": [
    {"row": 0, "col": 0, "coeff_poly": {"0,0": 1.0, "0,1": 0.2}},
    {"row": 1, "col": 0, "coeff_poly": {"1,1": 0.15}},
    {"row": 1, "col": 1, "coeff_poly": {"0,0": 1.0, "2,0": -0.1}}
]}"#;

/// The built-in catalog in a stable order: `(name, config)`.
pub fn catalog() -> Vec<(&'static str, SuiteConfig)> {
    vec![
        ("so2-mc", mc("so2")),
        ("so3-mc", mc("so3")),
        ("sl2-mc", mc("sl2")),
        ("heisenberg-mc", mc("heisenberg")),
        (
            "sl2-borel-random",
            SuiteConfig::Check(CheckConfig {
                h: "sl2".into(),
                sub: vec![0, 1],
                base_dim: 2,
                connection: ConnectionSpec::Random { degree: 2, scale: 0.7, seed: 1, unit_entries: vec![] },
                cartan: false,
                expect_flat: false,
            }),
        ),
        (
            "e2-curved",
            SuiteConfig::Check(CheckConfig {
                h: "e2".into(),
                sub: vec![0],
                base_dim: 2,
                connection: ConnectionSpec::Random { degree: 2, scale: 0.4, seed: 2, unit_entries: vec![[1, 0], [2, 1]] },
                cartan: true,
                expect_flat: false,
            }),
        ),
        ("so3-exp", develop("so3-exp")),
        ("sl2-exp", develop("sl2-exp")),
        ("heisenberg-exp", develop("heisenberg-exp")),
        ("e2-cw", chern_weil("e2", vec![0], InvariantSpec::TraceSquare)),
        ("sl2-borel-cw", chern_weil("sl2", vec![0, 1], InvariantSpec::TraceSquare)),
        ("aff2-cw", chern_weil("aff2", vec![0, 1, 2, 3], InvariantSpec::TraceSquare)),
        (
            "so2-in-sl2",
            SuiteConfig::Extend(ExtendConfig {
                h: "sl2".into(),
                inclusion: vec![vec![0.0, -1.0, 1.0]],
                names: vec!["R".into()],
                base_dim: 2,
                connections: 2,
                max_form_degree: 2,
            }),
        ),
        ("so2-flat", gstructure("so2", None)),
        ("so2-perturbed", gstructure("so2", Some(SO2_PERTURBED_FRAME))),
        ("co3-flat", gstructure("co3", None)),
        ("gl2-flat", gstructure("gl2", None)),
    ]
}

/// Built-in presets of one subcommand.
pub fn names_for(command: &str) -> Vec<&'static str> {
    catalog().into_iter().filter(|(_, c)| c.command() == command).map(|(n, _)| n).collect()
}

fn user_preset(name: &str) -> Result<Option<SuiteConfig>, CliError> {
    let Some(dir) = std::env::var_os(PRESET_DIR_VAR) else { return Ok(None) };
    let path = PathBuf::from(dir).join(format!("{name}.json"));
    if !path.is_file() {
        return Ok(None);
    }
    SuiteConfig::load(&path).map(Some)
}

/// Looks a preset up for `command`; `prolong` and `jets` also accept any
/// linear algebra preset name as the group.
pub fn resolve(command: &str, name: &str) -> Result<SuiteConfig, CliError> {
    let found = match user_preset(name)? {
        Some(c) => Some(c),
        None => catalog().into_iter().find(|(n, _)| *n == name).map(|(_, c)| c),
    };
    if let Some(c) = found {
        if c.command() != command {
            return Err(CliError::Config(format!("preset `{name}` belongs to `{}`, not `{command}`", c.command())));
        }
        return Ok(c);
    }
    let group = GroupSpec::Preset(name.into());
    match command {
        "prolong" if group.build().is_ok() => Ok(SuiteConfig::Prolong(ProlongConfig { group, k_max: 2, strict_invariance: false })),
        "jets" if group.build().is_ok() => Ok(SuiteConfig::Jets(JetsConfig { group, k: 1, flow_order: 6 })),
        _ => Err(CliError::Config(format!("unknown {command} preset `{name}` (see `cartanlab list-presets`)"))),
    }
}

/// Human-readable catalog for `list-presets`.
pub fn listing() -> String {
    let mut out = String::new();
    for (name, c) in catalog() {
        let detail = match &c {
            SuiteConfig::Check(k) => format!("h={} sub={:?} base_dim={}", k.h, k.sub, k.base_dim),
            SuiteConfig::Develop(d) => format!("map={} paths={} loops={}", d.map, d.paths, d.loops),
            SuiteConfig::ChernWeil(w) => format!("h={} sub={:?} base_dim={}", w.h, w.sub, w.base_dim),
            SuiteConfig::Extend(e) => format!("h={} inner_dim={} base_dim={}", e.h, e.inclusion.len(), e.base_dim),
            SuiteConfig::Gstructure(g) => format!("group={} frame={}", g.group.label(), if g.frame.is_some() { "custom" } else { "identity" }),
            SuiteConfig::Prolong(p) => format!("group={}", p.group.label()),
            SuiteConfig::Jets(j) => format!("group={} k={}", j.group.label(), j.k),
        };
        out.push_str(&format!("{:<11} {:<18} {detail}\n", c.command(), name));
    }
    let groups: Vec<String> = cartanlab::lie::presets::names()
        .into_iter()
        .filter_map(|n| cartanlab::prolongation::LinearLieAlgebra::preset(n).ok().map(|g| format!("{n}(n={}, dim={})", g.n(), g.dim())))
        .collect();
    out.push_str(&format!("prolong/jets groups: {}\n", groups.join(" ")));
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn catalog_is_unique_and_round_trips() {
        let cat = catalog();
        let mut names: Vec<_> = cat.iter().map(|(n, _)| *n).collect();
        names.sort();
        names.dedup();
        assert_eq!(names.len(), cat.len());
        for (name, c) in &cat {
            let json = serde_json::to_string(c).unwrap();
            assert_eq!(&SuiteConfig::parse(&json, name).unwrap(), c, "{name}");
        }
        assert_eq!(names_for("develop"), vec!["so3-exp", "sl2-exp", "heisenberg-exp"]);
    }

    #[test]
    fn resolution_rules() {
        assert!(matches!(resolve("check", "so2-mc"), Ok(SuiteConfig::Check(_))));
        assert!(resolve("develop", "so2-mc").is_err());
        assert!(matches!(resolve("prolong", "co3"), Ok(SuiteConfig::Prolong(_))));
        assert!(matches!(resolve("jets", "so2"), Ok(SuiteConfig::Jets(_))));
        assert!(resolve("prolong", "nope").is_err());
        assert_eq!(listing(), listing());
    }
}
