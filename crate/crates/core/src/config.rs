//! Run configuration: a sectioned key-value file (TOML) with defaults,
//! full-file validation (every violation reported, not just the first) and
//! CLI-style overrides applied on top.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::CoreError;
use crate::tolerances;

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ExperimentConfig {
    /// Initial-data preset name (parsed by `presets::Preset`).
    pub preset: String,
    pub resolution: usize,
    pub box_length: f64,
    pub target_l3: f64,
    /// None = choose by the smallness criterion.
    pub horizon: Option<f64>,
    pub dt: f64,
    pub rho: f64,
    pub seed: u64,
    /// Picard tolerance in the (5,5) mixed norm.
    pub tol: f64,
    pub k_max: usize,
    /// Duhamel / mild-solver time steps per horizon.
    pub steps: usize,
    pub record_every: usize,
    /// None = resolution-scaled default.
    pub eps_energy: Option<f64>,
    pub threads: usize,
    pub horizon_t_max: f64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            preset: "bump".to_string(),
            resolution: 48,
            box_length: 2.0 * std::f64::consts::PI,
            target_l3: 1.0,
            horizon: None,
            dt: 1e-3,
            rho: 0.0,
            seed: 0,
            tol: tolerances::PICARD_TOL,
            k_max: 30,
            steps: 64,
            record_every: 1,
            eps_energy: None,
            threads: 0,
            horizon_t_max: tolerances::HORIZON_T_MAX,
        }
    }
}

impl ExperimentConfig {
    pub fn eps_energy_or_default(&self) -> f64 {
        self.eps_energy
            .unwrap_or_else(|| tolerances::energy_eps(self.resolution))
    }
}

#[derive(Debug)]
pub enum ConfigError {
    Io(std::io::Error),
    Parse(String),
    /// Every violation found in the file, not just the first.
    Invalid(Vec<String>),
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConfigError::Io(e) => write!(f, "config i/o: {e}"),
            ConfigError::Parse(e) => write!(f, "config parse: {e}"),
            ConfigError::Invalid(violations) => {
                writeln!(f, "invalid configuration ({} problem(s)):", violations.len())?;
                for v in violations {
                    writeln!(f, "  - {v}")?;
                }
                Ok(())
            }
        }
    }
}

impl std::error::Error for ConfigError {}

const GRID_KEYS: &[&str] = &["resolution", "box_length"];
const RUN_KEYS: &[&str] = &[
    "preset",
    "target_l3",
    "horizon",
    "dt",
    "rho",
    "seed",
    "steps",
    "k_max",
    "record_every",
    "threads",
    "horizon_t_max",
];
const TOLERANCE_KEYS: &[&str] = &["tol", "eps_energy"];

/// Loads a sectioned config file over the defaults. An empty file yields
/// all defaults; unknown keys are reported with the valid alternatives.
pub fn load_config(path: &Path) -> Result<ExperimentConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(ConfigError::Io)?;
    parse_config(&text)
}

pub fn parse_config(text: &str) -> Result<ExperimentConfig, ConfigError> {
    let table: toml::Table = text
        .parse()
        .map_err(|e: toml::de::Error| ConfigError::Parse(e.to_string()))?;
    let mut cfg = ExperimentConfig::default();
    let mut violations = Vec::new();

    let sections: [(&str, &[&str]); 3] = [
        ("grid", GRID_KEYS),
        ("run", RUN_KEYS),
        ("tolerances", TOLERANCE_KEYS),
    ];
    for (key, value) in &table {
        match sections.iter().find(|(name, _)| name == key) {
            None => violations.push(format!(
                "unknown section `{key}` (valid sections: grid, run, tolerances)"
            )),
            Some((section, valid_keys)) => {
                let Some(sub) = value.as_table() else {
                    violations.push(format!("section `{section}` must be a table"));
                    continue;
                };
                for (k, v) in sub {
                    if !valid_keys.contains(&k.as_str()) {
                        violations.push(format!(
                            "unknown key `{section}.{k}` (valid keys: {})",
                            valid_keys.join(", ")
                        ));
                        continue;
                    }
                    if let Err(msg) = assign(&mut cfg, section, k, v) {
                        violations.push(msg);
                    }
                }
            }
        }
    }

    violations.extend(validate(&cfg));
    if violations.is_empty() {
        Ok(cfg)
    } else {
        Err(ConfigError::Invalid(violations))
    }
}

fn assign(
    cfg: &mut ExperimentConfig,
    section: &str,
    key: &str,
    value: &toml::Value,
) -> Result<(), String> {
    let bad = |want: &str| format!("`{section}.{key}` must be {want}, got {value}");
    let as_f64 = |v: &toml::Value| -> Option<f64> {
        v.as_float().or_else(|| v.as_integer().map(|i| i as f64))
    };
    let as_usize = |v: &toml::Value| -> Option<usize> {
        v.as_integer().and_then(|i| usize::try_from(i).ok())
    };
    match (section, key) {
        ("grid", "resolution") => cfg.resolution = as_usize(value).ok_or(bad("an integer"))?,
        ("grid", "box_length") => cfg.box_length = as_f64(value).ok_or(bad("a number"))?,
        ("run", "preset") => {
            cfg.preset = value.as_str().ok_or(bad("a string"))?.to_string();
        }
        ("run", "target_l3") => cfg.target_l3 = as_f64(value).ok_or(bad("a number"))?,
        ("run", "horizon") => cfg.horizon = Some(as_f64(value).ok_or(bad("a number"))?),
        ("run", "dt") => cfg.dt = as_f64(value).ok_or(bad("a number"))?,
        ("run", "rho") => cfg.rho = as_f64(value).ok_or(bad("a number"))?,
        ("run", "seed") => {
            cfg.seed = value
                .as_integer()
                .and_then(|i| u64::try_from(i).ok())
                .ok_or(bad("a nonnegative integer"))?;
        }
        ("run", "steps") => cfg.steps = as_usize(value).ok_or(bad("an integer"))?,
        ("run", "k_max") => cfg.k_max = as_usize(value).ok_or(bad("an integer"))?,
        ("run", "record_every") => {
            cfg.record_every = as_usize(value).ok_or(bad("an integer"))?;
        }
        ("run", "threads") => cfg.threads = as_usize(value).ok_or(bad("an integer"))?,
        ("run", "horizon_t_max") => {
            cfg.horizon_t_max = as_f64(value).ok_or(bad("a number"))?;
        }
        ("tolerances", "tol") => cfg.tol = as_f64(value).ok_or(bad("a number"))?,
        ("tolerances", "eps_energy") => {
            cfg.eps_energy = Some(as_f64(value).ok_or(bad("a number"))?);
        }
        _ => unreachable!("key lists cover all assignments"),
    }
    Ok(())
}

/// All physical-validity violations of a configuration.
pub fn validate(cfg: &ExperimentConfig) -> Vec<String> {
    let mut v = Vec::new();
    if let Err(CoreError::InvalidGrid(msg)) =
        crate::grid::Grid::new(cfg.box_length, cfg.resolution)
    {
        v.push(format!("grid: {msg}"));
    }
    if !(cfg.dt > 0.0) {
        v.push(format!("run.dt must be positive, got {}", cfg.dt));
    }
    if cfg.rho < 0.0 || cfg.rho >= cfg.box_length / 4.0 {
        if cfg.rho != 0.0 {
            v.push(format!(
                "run.rho must lie in [0, box_length/4), got {}",
                cfg.rho
            ));
        }
    }
    if cfg.target_l3 < 0.0 {
        v.push(format!("run.target_l3 must be nonnegative, got {}", cfg.target_l3));
    }
    if let Some(h) = cfg.horizon {
        if !(h > 0.0) {
            v.push(format!("run.horizon must be positive, got {h}"));
        }
    }
    if !(cfg.tol > 0.0) {
        v.push(format!("tolerances.tol must be positive, got {}", cfg.tol));
    }
    if let Some(e) = cfg.eps_energy {
        if !(e > 0.0) {
            v.push(format!("tolerances.eps_energy must be positive, got {e}"));
        }
    }
    if cfg.steps < 2 {
        v.push(format!("run.steps must be at least 2, got {}", cfg.steps));
    }
    if cfg.k_max == 0 {
        v.push("run.k_max must be at least 1".to_string());
    }
    if cfg.record_every == 0 {
        v.push("run.record_every must be at least 1".to_string());
    }
    if cfg.preset.parse::<crate::presets::Preset>().is_err() {
        v.push(format!("run.preset `{}` is not a known preset", cfg.preset));
    }
    v
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_defaults() {
        let cfg = parse_config("").unwrap();
        assert_eq!(cfg, ExperimentConfig::default());
    }

    #[test]
    fn negative_dt_is_named_in_the_violation() {
        let err = parse_config("[run]\ndt = -1.0\n").unwrap_err();
        match err {
            ConfigError::Invalid(v) => {
                assert!(v.iter().any(|m| m.contains("run.dt")), "{v:?}");
            }
            other => panic!("{other}"),
        }
    }

    #[test]
    fn unknown_keys_list_the_valid_ones() {
        let err = parse_config("[run]\ndx = 0.1\nviscosity = 2.0\n").unwrap_err();
        match err {
            ConfigError::Invalid(v) => {
                assert_eq!(v.len(), 2, "{v:?}");
                assert!(v[0].contains("valid keys"));
            }
            other => panic!("{other}"),
        }
    }

    #[test]
    fn all_violations_are_collected() {
        let err = parse_config(
            "[grid]\nresolution = 7\n[run]\ndt = 0.0\nrho = 100.0\npreset = \"vortex\"\n",
        )
        .unwrap_err();
        match err {
            ConfigError::Invalid(v) => assert!(v.len() >= 4, "{v:?}"),
            other => panic!("{other}"),
        }
    }

    #[test]
    fn sectioned_values_land_in_the_config() {
        let cfg = parse_config(
            "[grid]\nresolution = 32\nbox_length = 12.566370614359172\n\
             [run]\npreset = \"two_bump\"\nseed = 9\nhorizon = 0.25\n\
             [tolerances]\ntol = 1e-10\n",
        )
        .unwrap();
        assert_eq!(cfg.resolution, 32);
        assert_eq!(cfg.preset, "two_bump");
        assert_eq!(cfg.seed, 9);
        assert_eq!(cfg.horizon, Some(0.25));
        assert_eq!(cfg.tol, 1e-10);
    }
}
