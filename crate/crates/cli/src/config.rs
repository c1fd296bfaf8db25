//! Run configuration: a JSON file whose fields are overridden by flags.

use std::path::{Path, PathBuf};

use brokenflow::symbols::FamilyKind;
use serde::Deserialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum IntegratorKind {
    Analytic,
    Rk4,
}

/// Every field is optional; command-line flags take precedence.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub arrangement: Option<PathBuf>,
    pub lambda: Option<f64>,
    pub seed: Option<u64>,
    pub output: Option<PathBuf>,
    pub format: Option<Format>,

    pub omega: Option<Vec<f64>>,
    pub tau: Option<f64>,
    pub v: Option<Vec<f64>>,

    pub time: Option<f64>,
    pub integrator: Option<IntegratorKind>,
    pub step: Option<f64>,
    pub dt: Option<f64>,
    pub geodesic_output: Option<PathBuf>,

    pub point: Option<Vec<f64>>,
    pub direction: Option<Vec<f64>>,
    pub max_breaks: Option<usize>,
    pub normal_samples: Option<usize>,

    pub family: Option<FamilyKind>,
    pub face: Option<String>,
    pub nu: Option<Vec<f64>>,
    pub eps: Option<f64>,
    pub delta: Option<f64>,
    pub delta_fraction: Option<f64>,
    pub a0: Option<f64>,
    pub t_shrink: Option<f64>,
    pub beta: Option<f64>,
    pub samples: Option<usize>,
}

impl RunConfig {
    /// Reads a config file. Relative paths inside it are resolved against
    /// the file's directory.
    pub fn load(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        let mut cfg: RunConfig = serde_json::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))?;
        let base = path.parent().unwrap_or(Path::new("."));
        for p in [&mut cfg.arrangement, &mut cfg.output, &mut cfg.geodesic_output].into_iter().flatten() {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(cfg)
    }
}

/// `flag` if given, else the config value.
pub fn pick<T: Clone>(flag: &Option<T>, cfg: &Option<T>) -> Option<T> {
    flag.clone().or_else(|| cfg.clone())
}

pub fn require<T>(value: Option<T>, name: &str) -> Result<T, String> {
    value.ok_or_else(|| format!("missing parameter `{name}` (flag --{} or config field `{}`)", name.replace('_', "-"), name))
}
