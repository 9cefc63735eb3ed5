//! Experiment configuration: JSON schema, dotted-path overrides, canonical
//! serialization, and run manifests.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::game::{
    make_3x3_convention_game, make_asymmetric_2x2, make_pure_coordination, make_stochastic_2x2,
    Convention3x3Params, GameFile, StateGame,
};
use crate::learners::{LearnerKind, Prior};

pub const BUILTIN_GAMES: &[&str] = &[
    "pure_coordination",
    "asymmetric2x2",
    "stochastic2x2",
    "convention3x3",
];

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GameSpec {
    Builtin {
        builtin: String,
        #[serde(default)]
        params: serde_json::Map<String, Value>,
    },
    File {
        file: PathBuf,
    },
}

impl GameSpec {
    pub fn builtin(name: &str) -> Self {
        GameSpec::Builtin {
            builtin: name.to_string(),
            params: serde_json::Map::new(),
        }
    }

    /// Construct the game. The flag is the convention3x3 indistinguishability
    /// warning (None for other games).
    pub fn build(&self) -> Result<(StateGame, Option<bool>)> {
        match self {
            GameSpec::File { file } => Ok((GameFile::load(file)?.into_game()?, None)),
            GameSpec::Builtin { builtin, params } => build_builtin(builtin, params),
        }
    }
}

pub fn build_builtin(
    name: &str,
    params: &serde_json::Map<String, Value>,
) -> Result<(StateGame, Option<bool>)> {
    let get_f64 = |key: &str, default: f64| -> Result<f64> {
        match params.get(key) {
            None => Ok(default),
            Some(v) => v
                .as_f64()
                .ok_or_else(|| Error::Config(format!("game param '{key}' must be a number"))),
        }
    };
    match name {
        "pure_coordination" => {
            let n = get_f64("n", 2.0)? as usize;
            let c = get_f64("c", 1.0)?;
            let d = get_f64("d", 0.0)?;
            Ok((make_pure_coordination(n, c, d)?, None))
        }
        "asymmetric2x2" => {
            let v = get_f64("v_coord", 4.0)?;
            Ok((make_asymmetric_2x2(v)?, None))
        }
        "stochastic2x2" => {
            let p = get_f64("fail_p", 0.1)?;
            Ok((make_stochastic_2x2(p)?, None))
        }
        "convention3x3" => {
            let defaults = Convention3x3Params::default();
            let p = Convention3x3Params {
                slip_q: get_f64("slip_q", defaults.slip_q)?,
                majority_r: get_f64("majority_r", defaults.majority_r)?,
                good_utility: get_f64("good_utility", defaults.good_utility)?,
                bad_utility: get_f64("bad_utility", defaults.bad_utility)?,
            };
            let (game, warn) = make_3x3_convention_game(&p)?;
            Ok((game, Some(warn)))
        }
        other => Err(Error::Config(format!(
            "unknown builtin game '{other}'; known: {}",
            BUILTIN_GAMES.join(", ")
        ))),
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LearnerConfig {
    pub kind: LearnerKind,
    #[serde(default)]
    pub epsilon: f64,
    #[serde(default)]
    pub prior: Prior,
}

fn default_seed() -> u64 {
    42
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub game: GameSpec,
    pub learner: LearnerConfig,
    #[serde(default)]
    pub conventions: bool,
    pub horizon: usize,
    pub trials: u64,
    #[serde(default = "default_seed")]
    pub seed: u64,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.horizon < 1 {
            return Err(Error::Config("horizon must be at least 1".into()));
        }
        if self.trials < 1 {
            return Err(Error::Config("trials must be at least 1".into()));
        }
        if self.epsilon() < 0.0 {
            return Err(Error::Config("epsilon must be nonnegative".into()));
        }
        Ok(())
    }

    pub fn epsilon(&self) -> f64 {
        self.learner.epsilon
    }

    pub fn from_value(value: Value) -> Result<Self> {
        let config: ExperimentConfig = serde_json::from_value(value)
            .map_err(|e| Error::Config(format!("invalid experiment config: {e}")))?;
        config.validate()?;
        Ok(config)
    }

    pub fn to_value(&self) -> Result<Value> {
        Ok(serde_json::to_value(self)?)
    }
}

/// Read a config file into a raw JSON value (overrides apply to the value).
pub fn load_config_value(path: &Path) -> Result<Value> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| Error::Config(format!("cannot parse config {}: {e}", path.display())))
}

/// Apply a `--set key=value` override. Dotted paths address nested fields;
/// bare keys fall back to top-level fields, then learner fields, then game
/// params.
pub fn apply_override(root: &mut Value, assignment: &str) -> Result<()> {
    let (path, raw) = assignment
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("override '{assignment}' must be key=value")))?;
    let value: Value = serde_json::from_str(raw).unwrap_or(Value::String(raw.to_string()));
    let path = resolve_path(root, path);
    let mut node = root;
    let parts: Vec<&str> = path.split('.').collect();
    for (i, part) in parts.iter().enumerate() {
        let obj = node
            .as_object_mut()
            .ok_or_else(|| Error::Config(format!("override path '{path}' hits a non-object")))?;
        if i + 1 == parts.len() {
            obj.insert(part.to_string(), value);
            return Ok(());
        }
        node = obj
            .entry(part.to_string())
            .or_insert_with(|| Value::Object(serde_json::Map::new()));
    }
    unreachable!()
}

fn resolve_path(root: &Value, path: &str) -> String {
    if path.contains('.') {
        return path.to_string();
    }
    if root.get(path).is_some() {
        return path.to_string();
    }
    if matches!(path, "kind" | "epsilon" | "prior") {
        return format!("learner.{path}");
    }
    format!("game.params.{path}")
}

/// Canonical JSON: object keys sorted (serde_json's default map is ordered),
/// pretty-printed, trailing newline.
pub fn canonical_json(value: &Value) -> String {
    serde_json::to_string_pretty(value).expect("JSON value serializes") + "\n"
}

pub fn config_hash(value: &Value) -> String {
    let mut hasher = Sha256::new();
    hasher.update(canonical_json(value).as_bytes());
    let digest = hasher.finalize();
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

/// Audit record written next to every result file.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub tool_version: String,
    pub config_hash: String,
    pub base_seed: u64,
    pub outputs: Vec<String>,
    pub config: Value,
}

impl RunManifest {
    pub fn new(config: &ExperimentConfig, outputs: Vec<String>) -> Result<Self> {
        let value = config.to_value()?;
        Ok(RunManifest {
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            config_hash: config_hash(&value),
            base_seed: config.seed,
            outputs,
            config: value,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let value = serde_json::to_value(self)?;
        std::fs::write(path, canonical_json(&value))?;
        Ok(())
    }
}
