//! Experiment configuration: JSON file plus `key=value` overrides.

use crate::CliError;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use sha2::{Digest, Sha256};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum Experiment {
    Fig1b,
    Fig2b,
    Fig2c,
    Fig2d,
    Fig3,
    #[serde(rename = "figS2")]
    FigS2,
    #[serde(rename = "figS5")]
    FigS5,
    #[serde(rename = "figS6")]
    FigS6,
    #[serde(rename = "figS7")]
    FigS7,
    Custom,
}

impl Experiment {
    pub const ALL: [Experiment; 10] = [
        Experiment::Fig1b,
        Experiment::Fig2b,
        Experiment::Fig2c,
        Experiment::Fig2d,
        Experiment::Fig3,
        Experiment::FigS2,
        Experiment::FigS5,
        Experiment::FigS6,
        Experiment::FigS7,
        Experiment::Custom,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Experiment::Fig1b => "fig1b",
            Experiment::Fig2b => "fig2b",
            Experiment::Fig2c => "fig2c",
            Experiment::Fig2d => "fig2d",
            Experiment::Fig3 => "fig3",
            Experiment::FigS2 => "figS2",
            Experiment::FigS5 => "figS5",
            Experiment::FigS6 => "figS6",
            Experiment::FigS7 => "figS7",
            Experiment::Custom => "custom",
        }
    }

    pub fn parse(s: &str) -> Result<Self, CliError> {
        Self::ALL
            .iter()
            .find(|e| e.name().eq_ignore_ascii_case(s))
            .copied()
            .ok_or_else(|| CliError::Config(format!("unknown experiment '{s}'; see `adaprep list`")))
    }

    /// What the experiment produces.
    pub fn summary(&self) -> &'static str {
        match self {
            Experiment::Fig1b => "dissipative gap vs v² for fermion, spin and adaptive chains (Δ = 0, 2)",
            Experiment::Fig2b => "adaptive circuit: ensemble S_vN per cycle",
            Experiment::Fig2c => "single-trajectory S_vN, adaptive vs fixed parity",
            Experiment::Fig2d => "fixed-parity circuit: ensemble S_vN per cycle for several v²",
            Experiment::Fig3 => "squeezing: ξ²/ξ²_min and gap vs r, standard and adaptive",
            Experiment::FigS2 => "random Lindbladians: gap vs Rényi-2 entropy, with and without aux",
            Experiment::FigS5 => "fitted relaxation length ξ_n vs chain size",
            Experiment::FigS6 => "circuit log-negativity per pair under record errors",
            Experiment::FigS7 => "adaptive squeezing trajectories with record errors and post-selection",
            Experiment::Custom => "gap and dark-state entropy of one chain model over a v² list",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ChainModel {
    Fermion,
    Spin,
    String,
    Adaptive,
}

impl ChainModel {
    pub fn name(&self) -> &'static str {
        match self {
            ChainModel::Fermion => "fermion",
            ChainModel::Spin => "spin",
            ChainModel::String => "string",
            ChainModel::Adaptive => "adaptive",
        }
    }
}

/// Every field except `experiment` and `seed` has an experiment-specific default.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "schema")]
    pub schema_version: u32,
    pub experiment: Experiment,
    pub seed: u64,
    /// sites per chain
    pub n: Option<usize>,
    #[serde(default = "one")]
    pub j: f64,
    #[serde(default = "one")]
    pub gamma: f64,
    pub delta: Option<Vec<f64>>,
    pub v2: Option<Vec<f64>>,
    pub models: Option<Vec<ChainModel>>,
    pub traj: Option<usize>,
    pub cycles: Option<usize>,
    pub epsilon: Option<Vec<f64>>,
    /// collective spin sizes
    pub spins: Option<Vec<usize>>,
    pub r: Option<Vec<f64>>,
    pub t_final: Option<f64>,
    pub dt: Option<f64>,
    pub checkpoint: Option<f64>,
    /// S2 targets as fractions of ln N
    pub s2_fraction: Option<Vec<f64>>,
    pub local_dim: Option<usize>,
    pub seeds: Option<usize>,
    pub chain_sizes: Option<Vec<usize>>,
    pub out: Option<String>,
    pub format: Option<Format>,
}

fn schema() -> u32 {
    SCHEMA_VERSION
}
fn one() -> f64 {
    1.0
}

/// Parses `key=value`; the value is read as JSON, falling back to a plain string.
/// Comma-separated numbers become a list.
pub fn parse_override(s: &str) -> Result<(String, Value), CliError> {
    let (k, v) = s.split_once('=').ok_or_else(|| CliError::Config(format!("override '{s}' is not key=value")))?;
    let k = k.trim();
    if k.is_empty() {
        return Err(CliError::Config(format!("override '{s}' has an empty key")));
    }
    let v = v.trim();
    let value = match serde_json::from_str::<Value>(v) {
        Ok(x) => x,
        Err(_) if v.contains(',') => {
            let items: Result<Vec<Value>, _> = v.split(',').map(|x| serde_json::from_str::<Value>(x.trim())).collect();
            Value::Array(items.map_err(|_| CliError::Config(format!("cannot parse list '{v}'")))?)
        }
        Err(_) => Value::String(v.to_string()),
    };
    Ok((k.to_string(), value))
}

/// Keys whose values are lists; a scalar override is wrapped.
const LIST_KEYS: [&str; 9] = ["delta", "v2", "models", "epsilon", "spins", "r", "s2_fraction", "chain_sizes", "eps"];

/// Builds a config from an optional JSON document and overrides (applied in order).
pub fn build_config(base: Option<&str>, overrides: &[(String, Value)]) -> Result<ExperimentConfig, CliError> {
    let mut map: Map<String, Value> = match base {
        Some(text) => match serde_json::from_str::<Value>(text) {
            Ok(Value::Object(m)) => m,
            Ok(_) => return Err(CliError::Config("config file must hold a JSON object".into())),
            Err(e) => return Err(CliError::Config(format!("config file: {e}"))),
        },
        None => Map::new(),
    };
    for (k, v) in overrides {
        let key = match k.as_str() {
            "eps" => "epsilon",
            "trajectories" => "traj",
            other => other,
        };
        let v = if LIST_KEYS.contains(&key) && !v.is_array() { Value::Array(vec![v.clone()]) } else { v.clone() };
        map.insert(key.to_string(), v);
    }
    if !map.contains_key("seed") {
        return Err(CliError::Config("a seed is mandatory (--seed or \"seed\" in the config)".into()));
    }
    let cfg: ExperimentConfig = serde_json::from_value(Value::Object(map)).map_err(|e| CliError::Config(e.to_string()))?;
    if cfg.schema_version != SCHEMA_VERSION {
        return Err(CliError::Config(format!("unsupported schema_version {}", cfg.schema_version)));
    }
    Ok(cfg)
}

impl ExperimentConfig {
    pub fn minimal(experiment: Experiment, seed: u64) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            experiment,
            seed,
            n: None,
            j: 1.0,
            gamma: 1.0,
            delta: None,
            v2: None,
            models: None,
            traj: None,
            cycles: None,
            epsilon: None,
            spins: None,
            r: None,
            t_final: None,
            dt: None,
            checkpoint: None,
            s2_fraction: None,
            local_dim: None,
            seeds: None,
            chain_sizes: None,
            out: None,
            format: None,
        }
    }

    /// Canonical JSON (fixed field order) used for the hash and the metadata echo.
    /// Output location does not affect results and is left out.
    pub fn canonical_json(&self) -> String {
        let mut c = self.clone();
        c.out = None;
        c.format = None;
        serde_json::to_string(&c).expect("config serializes")
    }

    pub fn hash(&self) -> String {
        let d = Sha256::digest(self.canonical_json().as_bytes());
        d.iter().map(|b| format!("{b:02x}")).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn overrides_parse_and_apply() {
        let o: Vec<_> = ["n=2", "v2=0.1,0.2", "models=\"spin\"", "traj=5"].iter().map(|s| parse_override(s).unwrap()).collect();
        let c = build_config(Some(r#"{"experiment":"fig1b","seed":3}"#), &o).unwrap();
        assert_eq!(c.n, Some(2));
        assert_eq!(c.v2, Some(vec![0.1, 0.2]));
        assert_eq!(c.models, Some(vec![ChainModel::Spin]));
        assert_eq!(c.traj, Some(5));
    }

    #[test]
    fn seed_is_mandatory() {
        assert!(matches!(build_config(Some(r#"{"experiment":"fig2b"}"#), &[]), Err(CliError::Config(_))));
    }

    #[test]
    fn unknown_keys_and_experiments_rejected() {
        assert!(build_config(Some(r#"{"experiment":"fig2b","seed":1,"bogus":1}"#), &[]).is_err());
        assert!(build_config(Some(r#"{"experiment":"fig9","seed":1}"#), &[]).is_err());
        assert!(parse_override("novalue").is_err());
        assert_eq!(Experiment::parse("FIGS2").unwrap(), Experiment::FigS2);
    }

    #[test]
    fn hash_ignores_output_location() {
        let mut a = ExperimentConfig::minimal(Experiment::Fig2b, 1);
        let h = a.hash();
        a.out = Some("x.csv".into());
        assert_eq!(a.hash(), h);
        a.seed = 2;
        assert_ne!(a.hash(), h);
        assert_eq!(h.len(), 64);
    }
}
