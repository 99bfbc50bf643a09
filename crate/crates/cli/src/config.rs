use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::Result;
use clap::ValueEnum;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

/// Bad flags, schema violations, unreadable inputs and violated
/// preconditions; mapped to exit status 2.
#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

pub fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

/// Exit status for an error: 2 for usage problems, 1 for numerical ones.
pub fn exit_code(err: &anyhow::Error) -> i32 {
    for cause in err.chain() {
        if cause.is::<UsageError>() || cause.is::<serde_json::Error>() {
            return 2;
        }
        if let Some(e) = cause.downcast_ref::<wulff_hardy::Error>() {
            return match e {
                wulff_hardy::Error::InvalidArgument(_)
                | wulff_hardy::Error::Domain(_)
                | wulff_hardy::Error::Parse(_)
                | wulff_hardy::Error::Json(_) => 2,
                _ => 1,
            };
        }
    }
    1
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum CommandName {
    Constants,
    NormsCheck,
    Rearrange,
    Lorentz,
    GeometryCheck,
    Solve,
    Sharpness,
    EstimateSweep,
}

impl CommandName {
    pub fn as_str(&self) -> &'static str {
        match self {
            CommandName::Constants => "constants",
            CommandName::NormsCheck => "norms-check",
            CommandName::Rearrange => "rearrange",
            CommandName::Lorentz => "lorentz",
            CommandName::GeometryCheck => "geometry-check",
            CommandName::Solve => "solve",
            CommandName::Sharpness => "sharpness",
            CommandName::EstimateSweep => "estimate-sweep",
        }
    }
}

/// `{"command": ..., "params": {...}, "out": ..., "seed": ..., "jobs": ..., "mesh": ...}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub command: CommandName,
    #[serde(default)]
    pub params: serde_json::Value,
    #[serde(default)]
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub jobs: Option<usize>,
    #[serde(default)]
    pub mesh: Option<usize>,
}

/// A config together with the directory its relative paths refer to.
#[derive(Debug, Clone)]
pub struct Loaded {
    pub config: ExperimentConfig,
    pub base: PathBuf,
}

impl Loaded {
    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| usage(format!("cannot read config {}: {e}", path.display())))?;
        let config: ExperimentConfig = serde_json::from_str(&text)
            .map_err(|e| usage(format!("config {} does not match the schema: {e}", path.display())))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(Loaded { config, base })
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base.join(p)
        }
    }
}

/// Parameters that name input files.
pub trait InputPaths {
    fn resolve(&mut self, _loaded: &Loaded) {}
}

/// Command parameters from the config (defaults when absent).
pub fn params<P: DeserializeOwned + Default + InputPaths>(loaded: Option<&Loaded>) -> Result<P> {
    let Some(l) = loaded else { return Ok(P::default()) };
    let mut p: P = if l.config.params.is_null() {
        P::default()
    } else {
        serde_json::from_value(l.config.params.clone()).map_err(|e| {
            usage(format!(
                "params for `{}` do not match the schema: {e}",
                l.config.command.as_str()
            ))
        })?
    };
    p.resolve(l);
    Ok(p)
}

/// JSON value of a flag, e.g. `--norm '{"kind":"power","r":3,"dim":2}'`.
pub fn json_flag<T: DeserializeOwned>(flag: &str, text: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| usage(format!("--{flag}: {e}")))
}

pub fn read_input(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| usage(format!("cannot read input {}: {e}", path.display())))
}
