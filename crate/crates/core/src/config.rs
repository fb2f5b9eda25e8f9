//! Engine configuration.
//!
//! One TOML document configures ingestion, mining, recommendation and the
//! wording used in insight and question text. Every key is optional; missing
//! keys take the defaults below.
//!
//! ```toml
//! [dataset]
//! numeric_fraction = 0.9          # share of non-missing cells that must parse as numbers
//! max_categorical_distinct = 12   # integer columns with at most this many values group
//! identifier_min_distinct = 25    # text columns above this many values are row labels
//! missing_markers = ["", "NA", "N/A", "null", "NULL", "NaN"]
//!
//! [dataset.roles]                 # explicit role overrides
//! Cylinders = "categorical"
//!
//! [miner]
//! strong_r = 0.7
//! min_n = 20
//! fence_k = 1.5
//! coverage = 0.5
//! bin_count = 10
//! max_filter_values = 30
//! aggregates = ["mean"]
//! item_level = true
//!
//! [recommender]
//! k = 6
//!
//! [text]
//! entity_plural = "cars"
//! entity_singular = "car"
//!
//! [text.labels]
//! Weight_in_lbs = "Weight"
//!
//! [text.group_phrases]            # how a group member reads after the entity
//! Origin = "from {value}"
//!
//! [text.filter_phrases]           # how a filter reads as a trailing clause
//! Origin = "from {value}"
//! ```

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dataset::Role;
use crate::stats::Aggregate;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("failed to read config {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid config: {0}")]
    Parse(#[from] toml::de::Error),
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub dataset: DatasetConfig,
    pub miner: MinerConfig,
    pub recommender: RecommenderConfig,
    pub text: TextConfig,
}

impl Config {
    pub fn from_toml_str(text: &str) -> Result<Self, ConfigError> {
        Ok(toml::from_str(text)?)
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self, ConfigError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_toml_str(&text)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DatasetConfig {
    pub numeric_fraction: f64,
    pub max_categorical_distinct: usize,
    pub identifier_min_distinct: usize,
    pub missing_markers: Vec<String>,
    pub roles: BTreeMap<String, Role>,
}

impl Default for DatasetConfig {
    fn default() -> Self {
        Self {
            numeric_fraction: 0.9,
            max_categorical_distinct: 12,
            identifier_min_distinct: 25,
            missing_markers: ["", "NA", "N/A", "null", "NULL", "NaN"]
                .into_iter()
                .map(String::from)
                .collect(),
            roles: BTreeMap::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MinerConfig {
    /// Minimum |r| for a correlation insight.
    pub strong_r: f64,
    /// Minimum number of complete pairs for a correlation insight.
    pub min_n: usize,
    /// Tukey fence factor.
    pub fence_k: f64,
    /// Fraction of values a modal range must cover.
    pub coverage: f64,
    pub bin_count: usize,
    /// Categorical columns with more distinct values are not used as filters.
    pub max_filter_values: usize,
    pub aggregates: Vec<Aggregate>,
    /// Mine per-row extremum insights over the identifier column.
    pub item_level: bool,
}

impl Default for MinerConfig {
    fn default() -> Self {
        Self {
            strong_r: 0.7,
            min_n: 20,
            fence_k: 1.5,
            coverage: 0.5,
            bin_count: 10,
            max_filter_values: 30,
            aggregates: vec![Aggregate::Mean],
            item_level: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RecommenderConfig {
    /// Panel size cap.
    pub k: usize,
}

impl Default for RecommenderConfig {
    fn default() -> Self {
        Self { k: 6 }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TextConfig {
    /// Plural noun for the rows, e.g. "cars". Defaults to the table name.
    pub entity_plural: Option<String>,
    /// Singular noun for one row. Defaults to the plural with a trailing "s" removed.
    pub entity_singular: Option<String>,
    pub labels: BTreeMap<String, String>,
    pub group_phrases: BTreeMap<String, String>,
    pub filter_phrases: BTreeMap<String, String>,
}
