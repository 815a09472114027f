//! Config files: TOML with a `[sim]` table holding every [`SimConfig`]
//! field and an optional `[campaign]` table with the sweep grid. Powers are
//! in dBm, thresholds in dB, distances in meters.
//!
//! ```toml
//! [sim]
//! area_side_m = 500.0
//! num_cues = 20
//! # ...
//!
//! [campaign]
//! pair_counts = [5, 10, 15]
//! pt_dbm_values = [10.0, 15.0, 20.0]
//! tau_n_values_db = [-30.0, -20.0, -10.0, 0.0]
//! schemes = ["csd", "max_sd"]
//! drops = 50
//! ```
//!
//! Run manifests use the same layout with an extra `[manifest]` table, so a
//! manifest can be fed back as a config.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scenario::SimConfig;
use crate::simkit::{CampaignSpec, Scheme};

#[derive(Debug, Error)]
pub enum ConfigFileError {
    #[error("{path}: cannot read: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}{}: {message}", line_suffix(*.line))]
    Parse {
        path: PathBuf,
        line: Option<usize>,
        message: String,
    },
    #[error("{path}{}: field `{field}`: {message}", line_suffix(*.line))]
    Invalid {
        path: PathBuf,
        field: String,
        line: Option<usize>,
        message: String,
    },
    #[error("{path}: missing [{section}] section")]
    MissingSection { path: PathBuf, section: &'static str },
}

fn line_suffix(line: Option<usize>) -> String {
    line.map(|l| format!(":{l}")).unwrap_or_default()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CampaignSection {
    pub pair_counts: Vec<usize>,
    pub pt_dbm_values: Vec<f64>,
    pub tau_n_values_db: Vec<f64>,
    pub schemes: Vec<Scheme>,
    /// Falls back to `sim.drops`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub drops: Option<usize>,
}

/// Provenance written next to every result set.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunManifest {
    pub config_path: String,
    pub tool_version: String,
    pub started_unix_s: u64,
    pub wall_clock_s: f64,
    pub outputs: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub manifest: Option<RunManifest>,
    pub sim: SimConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub campaign: Option<CampaignSection>,
}

/// 1-based line of byte `offset` in `text`.
fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

/// Line where `key = ...` first appears, if it does.
fn line_of_key(text: &str, key: &str) -> Option<usize> {
    let leaf = key.rsplit('.').next().unwrap_or(key);
    text.lines().position(|l| {
        let l = l.trim_start();
        l.strip_prefix(leaf)
            .is_some_and(|rest| rest.trim_start().starts_with('='))
    })
    .map(|i| i + 1)
}

impl ConfigFile {
    pub fn parse(text: &str, path: &Path) -> Result<Self, ConfigFileError> {
        let file: ConfigFile = toml::from_str(text).map_err(|e| ConfigFileError::Parse {
            path: path.to_owned(),
            line: e.span().map(|s| line_of(text, s.start)),
            message: e.message().trim().to_owned(),
        })?;
        let invalid = |field: &str, message: String| ConfigFileError::Invalid {
            path: path.to_owned(),
            field: field.to_owned(),
            line: line_of_key(text, field),
            message,
        };
        file.sim.validate().map_err(|e| invalid(e.field, e.message))?;
        if file.campaign.is_some() {
            let spec = file.campaign_spec(path)?;
            spec.validate().map_err(|e| invalid(e.field, e.message))?;
        }
        if i64::try_from(file.sim.rng_seed).is_err() {
            return Err(invalid("rng_seed", "must fit in a signed 64-bit integer".into()));
        }
        Ok(file)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigFileError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigFileError::Io {
            path: path.to_owned(),
            source,
        })?;
        Self::parse(&text, path)
    }

    pub fn campaign_spec(&self, path: &Path) -> Result<CampaignSpec, ConfigFileError> {
        let c = self.campaign.as_ref().ok_or_else(|| ConfigFileError::MissingSection {
            path: path.to_owned(),
            section: "campaign",
        })?;
        Ok(CampaignSpec {
            base: self.sim.clone(),
            pair_counts: c.pair_counts.clone(),
            pt_dbm_values: c.pt_dbm_values.clone(),
            tau_n_values_db: c.tau_n_values_db.clone(),
            schemes: c.schemes.clone(),
            drops: c.drops.unwrap_or(self.sim.drops),
        })
    }

    pub fn from_spec(spec: &CampaignSpec) -> Self {
        Self {
            manifest: None,
            sim: spec.base.clone(),
            campaign: Some(CampaignSection {
                pair_counts: spec.pair_counts.clone(),
                pt_dbm_values: spec.pt_dbm_values.clone(),
                tau_n_values_db: spec.tau_n_values_db.clone(),
                schemes: spec.schemes.clone(),
                drops: Some(spec.drops),
            }),
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config tables serialize to TOML")
    }
}
