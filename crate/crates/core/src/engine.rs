use std::collections::BTreeSet;

use crate::config::Config;
use crate::dataset::{load_table, DatasetError, Table};
use crate::insight::{Insight, InsightSpace};
use crate::miner::Miner;
use crate::recommend::{self, Question};
use crate::text::{Phrasebook, Templates};

/// A table, its mined insight space and the configuration both were built
/// with. Immutable once built; share it behind an `Arc`.
#[derive(Debug, Clone)]
pub struct Engine {
    table: Table,
    space: InsightSpace,
    config: Config,
    phrases: Phrasebook,
    fingerprint: String,
}

impl Engine {
    pub fn new(table: Table, config: Config) -> Self {
        Self::with_templates(table, config, Templates::default())
    }

    pub fn with_templates(table: Table, config: Config, templates: Templates) -> Self {
        let phrases = Phrasebook::new(&table.name, &config.text, templates);
        let space = Miner::new(&table, &config.miner, &phrases).mine_all();
        let fingerprint = space.fingerprint();
        Self { table, space, config, phrases, fingerprint }
    }

    pub fn from_csv(bytes: &[u8], name: &str, config: Config) -> Result<Self, DatasetError> {
        let table = load_table(bytes, name, &config.dataset)?;
        Ok(Self::new(table, config))
    }

    pub fn table(&self) -> &Table {
        &self.table
    }

    pub fn space(&self) -> &InsightSpace {
        &self.space
    }

    pub fn config(&self) -> &Config {
        &self.config
    }

    pub fn phrases(&self) -> &Phrasebook {
        &self.phrases
    }

    /// Cached [`InsightSpace::fingerprint`].
    pub fn fingerprint(&self) -> &str {
        &self.fingerprint
    }

    /// Question panel for one insight with nothing explored yet.
    pub fn recommend(&self, source: &Insight, k: usize) -> Vec<Question> {
        recommend::recommend(source, &BTreeSet::new(), &self.space, &self.phrases, k)
    }
}
