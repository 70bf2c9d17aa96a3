//! Config resolution: command-line flags over the config file over defaults.
//!
//! The config file is TOML with the [`ObmoConfig`] fields at top level and
//! optional `[classes.<Name>]` tables. Offsets in the file are fractions
//! (`0.04`); the `--delta-z` flag takes percents (`4`).

use std::fs;
use std::path::Path;

use obmo_core::obmo::{GtBoxSource, ObmoConfig};
use obmo_core::{ImageSize, ScoreStrategy};

use crate::error::CliError;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ObmoOverrides {
    pub strategy: Option<ScoreStrategy>,
    /// Fractions, already converted from percents.
    pub delta_z_set: Option<Vec<f64>>,
    pub c: Option<f64>,
    pub lambda: Option<f64>,
    pub filter_threshold: Option<f64>,
    pub gt_box: Option<GtBoxSource>,
}

pub fn parse_config_file(path: &Path) -> Result<ObmoConfig, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Path {
        path: path.to_path_buf(),
        reason: e.to_string(),
    })?;
    toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

pub fn resolve(file: Option<&Path>, flags: &ObmoOverrides) -> Result<ObmoConfig, CliError> {
    let mut cfg = match file {
        Some(path) => parse_config_file(path)?,
        None => ObmoConfig::default(),
    };
    if let Some(s) = flags.strategy {
        cfg.strategy = s;
    }
    if let Some(set) = &flags.delta_z_set {
        cfg.delta_z_set = set.clone();
    }
    if let Some(c) = flags.c {
        cfg.c = c;
    }
    if let Some(l) = flags.lambda {
        cfg.lambda = l;
    }
    if let Some(t) = flags.filter_threshold {
        cfg.filter_threshold = t;
    }
    if let Some(g) = flags.gt_box {
        cfg.gt_box = g;
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Comma-separated reals; an empty string is an empty list.
pub fn parse_real_list(s: &str) -> Result<Vec<f64>, String> {
    s.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| t.parse::<f64>().map_err(|e| format!("`{t}`: {e}")))
        .collect()
}

/// Comma-separated percents, returned as fractions.
pub fn parse_percent_list(s: &str) -> Result<Vec<f64>, String> {
    Ok(parse_real_list(s)?.into_iter().map(|p| p / 100.0).collect())
}

/// `WIDTHxHEIGHT`, e.g. `1242x375`.
pub fn parse_image_size(s: &str) -> Result<ImageSize, String> {
    let (w, h) = s
        .split_once(['x', 'X'])
        .ok_or_else(|| format!("expected WIDTHxHEIGHT, got `{s}`"))?;
    let parse = |v: &str| v.trim().parse::<u32>().map_err(|e| format!("`{v}`: {e}"));
    Ok(ImageSize {
        width: parse(w)?,
        height: parse(h)?,
    })
}
