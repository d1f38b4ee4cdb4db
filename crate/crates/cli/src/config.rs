//! JSON configuration file and its merge with command-line flags.
//!
//! Every field is optional. A flag given on the command line wins over the
//! file, and the file wins over the built-in default.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use elmdoc_core::dataset::{DEFAULT_REPETITIONS, DEFAULT_SIZES};
use elmdoc_core::{Activation, ElmConfig};
use serde::Deserialize;

pub const DEFAULT_ELM_REPEATS: usize = 10;

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FileConfig {
    pub elm: ElmSection,
    pub grid: GridSection,
    pub paths: PathsSection,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ElmSection {
    #[serde(alias = "N")]
    pub hidden: Option<usize>,
    #[serde(alias = "C")]
    pub c: Option<f64>,
    pub activation: Option<Activation>,
    pub normalize: Option<bool>,
    pub seed: Option<u64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSection {
    pub sizes: Option<Vec<usize>>,
    pub reps: Option<usize>,
    pub elm_repeats: Option<usize>,
    pub seed: Option<u64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PathsSection {
    pub netspec: Option<PathBuf>,
    pub corpus: Option<PathBuf>,
    pub features: Option<PathBuf>,
    pub output: Option<PathBuf>,
}

impl FileConfig {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read config {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("invalid config {}", path.display()))
    }
}

/// ELM overrides collected from flags.
#[derive(Debug, Default, Clone)]
pub struct ElmOverrides {
    pub hidden: Option<usize>,
    pub c: Option<f64>,
    pub activation: Option<Activation>,
    pub no_normalize: bool,
    pub seed: Option<u64>,
}

pub fn resolve_elm(file: &ElmSection, flags: &ElmOverrides) -> Result<ElmConfig> {
    let defaults = ElmConfig::default();
    let config = ElmConfig {
        hidden: flags.hidden.or(file.hidden).unwrap_or(defaults.hidden),
        c: flags.c.or(file.c).unwrap_or(defaults.c),
        activation: flags
            .activation
            .or(file.activation)
            .unwrap_or(defaults.activation),
        normalize: if flags.no_normalize {
            false
        } else {
            file.normalize.unwrap_or(defaults.normalize)
        },
        seed: flags.seed.or(file.seed).unwrap_or(defaults.seed),
    };
    if config.hidden == 0 {
        bail!("--hidden: hidden node count must be at least 1");
    }
    if !(config.c > 0.0 && config.c.is_finite()) {
        bail!(
            "--reg: regularization C must be positive and finite, got {}",
            config.c
        );
    }
    Ok(config)
}

#[derive(Debug, Default, Clone)]
pub struct GridOverrides {
    pub sizes: Option<Vec<usize>>,
    pub reps: Option<usize>,
    pub elm_repeats: Option<usize>,
    pub partition_seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridConfig {
    pub sizes: Vec<usize>,
    pub reps: usize,
    pub elm_repeats: usize,
    pub seed: u64,
}

/// The partition seed falls back to the ELM seed so a single `--seed`
/// pins the whole run.
pub fn resolve_grid(
    file: &GridSection,
    flags: &GridOverrides,
    elm_seed: u64,
) -> Result<GridConfig> {
    let grid = GridConfig {
        sizes: flags
            .sizes
            .clone()
            .or_else(|| file.sizes.clone())
            .unwrap_or_else(|| DEFAULT_SIZES.to_vec()),
        reps: flags.reps.or(file.reps).unwrap_or(DEFAULT_REPETITIONS),
        elm_repeats: flags
            .elm_repeats
            .or(file.elm_repeats)
            .unwrap_or(DEFAULT_ELM_REPEATS),
        seed: flags.partition_seed.or(file.seed).unwrap_or(elm_seed),
    };
    if grid.sizes.is_empty() || grid.sizes.contains(&0) {
        bail!("--sizes: every training size must be at least 1");
    }
    if grid.reps == 0 {
        bail!("--reps must be at least 1");
    }
    if grid.elm_repeats == 0 {
        bail!("--elm-repeats must be at least 1");
    }
    Ok(grid)
}

/// Picks the flag value, then the config path, or fails naming both.
pub fn require_path(flag: Option<PathBuf>, file: &Option<PathBuf>, name: &str) -> Result<PathBuf> {
    match flag.or_else(|| file.clone()) {
        Some(p) => Ok(p),
        None => bail!("missing --{name} (or paths.{name} in the config file)"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_override_file_and_defaults_fill_gaps() {
        let file: FileConfig = serde_json::from_str(
            r#"{"elm": {"N": 300, "C": 4.0, "activation": "relu"}, "grid": {"reps": 3}}"#,
        )
        .unwrap();
        let flags = ElmOverrides {
            c: Some(0.5),
            ..Default::default()
        };
        let elm = resolve_elm(&file.elm, &flags).unwrap();
        assert_eq!(elm.hidden, 300);
        assert_eq!(elm.c, 0.5);
        assert_eq!(elm.activation, Activation::Relu);
        assert!(elm.normalize);

        let grid = resolve_grid(&file.grid, &GridOverrides::default(), 9).unwrap();
        assert_eq!(grid.sizes, DEFAULT_SIZES.to_vec());
        assert_eq!(
            (grid.reps, grid.elm_repeats, grid.seed),
            (3, DEFAULT_ELM_REPEATS, 9)
        );
    }

    #[test]
    fn invalid_values_are_rejected() {
        let file = FileConfig::default();
        let zero_c = ElmOverrides {
            c: Some(0.0),
            ..Default::default()
        };
        assert!(resolve_elm(&file.elm, &zero_c)
            .unwrap_err()
            .to_string()
            .contains("--reg"));
        let bad = GridOverrides {
            reps: Some(0),
            ..Default::default()
        };
        assert!(resolve_grid(&file.grid, &bad, 0).is_err());
        assert!(serde_json::from_str::<FileConfig>(r#"{"elm": {"hiden": 3}}"#).is_err());
    }
}
