//! Enumerates the insight space: extremum, correlation, anomaly and
//! distribution insights, unfiltered and under every single-value filter.

use crate::chart::chart_for_payload;
use crate::config::{Config, MinerConfig};
use crate::dataset::{Role, Table};
use crate::insight::{
    AnomalyPayload, CorrelationPayload, Direction, DistributionPayload, ExtremumPayload, Insight, InsightSpace,
    OutlierRow, Payload, Polarity,
};
use crate::stats::{self, Aggregate, Filter, StatsError};
use crate::text::{Phrasebook, Templates};

/// Strength at or above which an insight counts as strong for tiering.
pub const STRONG_STRENGTH: f64 = 0.6;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MineError {
    #[error("need at least two groups with data, found {0}")]
    TooFewGroups(usize),
    #[error(transparent)]
    Stats(#[from] StatsError),
}

/// Importance level: 1 for strong unfiltered insights, 2 for weak unfiltered
/// or strong filtered ones, 3 otherwise.
pub fn score_tier(filtered: bool, strength: f64) -> u8 {
    match (filtered, strength >= STRONG_STRENGTH) {
        (false, true) => 1,
        (false, false) | (true, true) => 2,
        (true, false) => 3,
    }
}

/// Mining context for one table.
pub struct Miner<'a> {
    table: &'a Table,
    config: &'a MinerConfig,
    phrases: &'a Phrasebook,
}

impl<'a> Miner<'a> {
    pub fn new(table: &'a Table, config: &'a MinerConfig, phrases: &'a Phrasebook) -> Self {
        Self { table, config, phrases }
    }

    fn finish(&self, payload: Payload, filter: Option<&Filter>, strength: f64) -> Insight {
        let strength = strength.clamp(0.0, 1.0);
        Insight {
            id: Insight::canonical_id(&payload, filter),
            insight_type: payload.insight_type(),
            text: self.phrases.statement(&payload, filter),
            attributes: Insight::attributes_of(&payload, filter),
            filter: filter.cloned(),
            tier: score_tier(filter.is_some(), strength),
            strength,
            vis_objects: vec![chart_for_payload(&payload, filter)],
            payload,
        }
    }

    /// Lowest and highest group under `aggregate`. Nothing when every group
    /// scores the same.
    pub fn extremum(
        &self,
        group_by: &str,
        measure: &str,
        aggregate: Aggregate,
        filter: Option<&Filter>,
    ) -> Result<Vec<Insight>, MineError> {
        let groups = stats::group_aggregate(self.table, group_by, measure, aggregate, filter)?;
        let scores: Vec<(String, f64)> = groups.entries.into_iter().collect();
        self.extremes(group_by, measure, Some(aggregate), scores, None, filter)
    }

    /// Per-row extremum over the identifier column.
    pub fn item_extremum(&self, measure: &str, filter: Option<&Filter>) -> Result<Vec<Insight>, MineError> {
        let Some(id_column) = self.table.identifier() else {
            return Ok(Vec::new());
        };
        let scores: Vec<(usize, String, f64)> = stats::measure_values(self.table, measure, filter)?
            .into_iter()
            .filter_map(|(row, x)| id_column.values[row].as_key().map(|label| (row, label, x)))
            .collect();
        let rows: Vec<usize> = scores.iter().map(|s| s.0).collect();
        let labelled = scores.into_iter().map(|(_, l, x)| (l, x)).collect();
        self.extremes(&id_column.name, measure, None, labelled, Some(rows), filter)
    }

    fn extremes(
        &self,
        group_by: &str,
        measure: &str,
        aggregate: Option<Aggregate>,
        scores: Vec<(String, f64)>,
        rows: Option<Vec<usize>>,
        filter: Option<&Filter>,
    ) -> Result<Vec<Insight>, MineError> {
        if scores.len() < 2 {
            return Err(MineError::TooFewGroups(scores.len()));
        }
        // stable order: score, then original position
        let mut order: Vec<usize> = (0..scores.len()).collect();
        order.sort_by(|&a, &b| scores[a].1.total_cmp(&scores[b].1).then(a.cmp(&b)));
        let min = scores[order[0]].1;
        let max = scores[order[order.len() - 1]].1;
        if max == min {
            return Ok(Vec::new());
        }
        let spread = max - min;

        let mut out = Vec::with_capacity(2);
        for polarity in [Polarity::Lowest, Polarity::Highest] {
            let (win, run) = match polarity {
                Polarity::Lowest => (order[0], order[1]),
                Polarity::Highest => {
                    // first position holding the maximum
                    let top = order.iter().copied().filter(|&i| scores[i].1 == max).min().unwrap();
                    let runner = order
                        .iter()
                        .rev()
                        .copied()
                        .find(|&i| i != top)
                        .unwrap();
                    (top, runner)
                }
            };
            let strength = (scores[win].1 - scores[run].1).abs() / spread;
            let payload = Payload::Extremum(ExtremumPayload {
                group_by: group_by.to_string(),
                measure: measure.to_string(),
                aggregate,
                polarity,
                winner: scores[win].0.clone(),
                winner_score: scores[win].1,
                runner_up: scores[run].0.clone(),
                runner_up_score: scores[run].1,
                winner_row: rows.as_ref().map(|r| r[win]),
            });
            out.push(self.finish(payload, filter, strength));
        }
        Ok(out)
    }

    /// Emitted when |r| and the pair count reach the configured thresholds.
    pub fn correlation(&self, first: &str, second: &str) -> Option<Insight> {
        let c = stats::pearson(self.table, first, second, None).ok()?;
        if c.r.abs() < self.config.strong_r || c.n < self.config.min_n {
            return None;
        }
        let (a, b) = match (self.table.column_position(first), self.table.column_position(second)) {
            (Some(i), Some(j)) if j < i => (second, first),
            _ => (first, second),
        };
        let payload = Payload::Correlation(CorrelationPayload {
            measures: [a.to_string(), b.to_string()],
            r: c.r,
            n: c.n,
            direction: if c.r >= 0.0 { Direction::Positive } else { Direction::Negative },
        });
        Some(self.finish(payload, None, c.r.abs()))
    }

    pub fn anomaly(&self, measure: &str, filter: Option<&Filter>) -> Option<Insight> {
        let t = stats::tukey_outliers(self.table, measure, self.config.fence_k, filter).ok()?;
        if t.outliers.is_empty() {
            return None;
        }
        let strength = t.outliers.iter().map(|o| o.exceedance).fold(0.0, f64::max).min(1.0);
        let outliers: Vec<OutlierRow> = t
            .outliers
            .iter()
            .map(|o| OutlierRow {
                row: o.row,
                value: o.value,
                exceedance: o.exceedance,
                label: self.table.row_label(o.row),
            })
            .collect();
        let payload = Payload::Anomaly(AnomalyPayload {
            measure: measure.to_string(),
            count: outliers.len(),
            outliers,
            lower_fence: t.lower_fence,
            upper_fence: t.upper_fence,
        });
        Some(self.finish(payload, filter, strength))
    }

    pub fn distribution(&self, measure: &str, filter: Option<&Filter>) -> Option<Insight> {
        let m = stats::modal_range(self.table, measure, self.config.coverage, self.config.bin_count, filter).ok()?;
        let payload = Payload::Distribution(DistributionPayload {
            measure: measure.to_string(),
            lo: m.lo,
            hi: m.hi,
            achieved_coverage: m.achieved_coverage,
            bin_width: m.bin_width,
        });
        Some(self.finish(payload, filter, m.achieved_coverage))
    }

    /// Drill-down filters: one per value of every categorical column with at
    /// most `max_filter_values` distinct values.
    pub fn filters(&self) -> Vec<Filter> {
        let mut out = Vec::new();
        for column in self.table.columns_with_role(Role::Categorical) {
            let values = column.distinct_keys();
            if values.len() > self.config.max_filter_values {
                tracing::warn!(
                    column = %column.name,
                    distinct = values.len(),
                    cap = self.config.max_filter_values,
                    "too many distinct values; column not used as a filter"
                );
                continue;
            }
            out.extend(values.into_iter().map(|v| Filter::new(&column.name, v)));
        }
        out
    }

    pub fn mine_all(&self) -> InsightSpace {
        let categorical: Vec<&str> = self
            .table
            .columns_with_role(Role::Categorical)
            .map(|c| c.name.as_str())
            .collect();
        let quantitative: Vec<&str> = self
            .table
            .columns_with_role(Role::Quantitative)
            .map(|c| c.name.as_str())
            .collect();

        let mut insights = Vec::new();
        for (i, a) in quantitative.iter().enumerate() {
            for b in &quantitative[i + 1..] {
                insights.extend(self.correlation(a, b));
            }
        }

        let filters = self.filters();
        let scopes = std::iter::once(None).chain(filters.iter().map(Some));
        for filter in scopes {
            for &measure in &quantitative {
                for &group_by in &categorical {
                    if filter.is_some_and(|f| f.column == group_by) {
                        continue;
                    }
                    for &aggregate in &self.config.aggregates {
                        if let Ok(found) = self.extremum(group_by, measure, aggregate, filter) {
                            insights.extend(found);
                        }
                    }
                }
                if self.config.item_level {
                    if let Ok(found) = self.item_extremum(measure, filter) {
                        insights.extend(found);
                    }
                }
                insights.extend(self.anomaly(measure, filter));
                insights.extend(self.distribution(measure, filter));
            }
        }

        InsightSpace::new(&self.table.name, self.table.row_count, insights)
            .expect("canonical ids are unique per candidate")
    }
}

/// Mines `table` with the bundled templates.
pub fn mine_all(table: &Table, config: &Config) -> InsightSpace {
    let phrases = Phrasebook::new(&table.name, &config.text, Templates::default());
    Miner::new(table, &config.miner, &phrases).mine_all()
}
