//! Insight records and the indexed insight space.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::chart::ChartSpec;
use crate::stats::{Aggregate, Filter};

pub const SPACE_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InsightType {
    Extremum,
    Correlation,
    Anomaly,
    Distribution,
}

impl InsightType {
    pub fn as_str(self) -> &'static str {
        match self {
            InsightType::Extremum => "extremum",
            InsightType::Correlation => "correlation",
            InsightType::Anomaly => "anomaly",
            InsightType::Distribution => "distribution",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.to_ascii_lowercase().as_str() {
            "extremum" | "ext" => Some(Self::Extremum),
            "correlation" | "cor" => Some(Self::Correlation),
            "anomaly" | "ano" => Some(Self::Anomaly),
            "distribution" | "dis" => Some(Self::Distribution),
            _ => None,
        }
    }
}

impl fmt::Display for InsightType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Polarity {
    Lowest,
    Highest,
}

impl Polarity {
    pub fn as_str(self) -> &'static str {
        match self {
            Polarity::Lowest => "lowest",
            Polarity::Highest => "highest",
        }
    }

    pub fn flipped(self) -> Self {
        match self {
            Polarity::Lowest => Polarity::Highest,
            Polarity::Highest => Polarity::Lowest,
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.to_ascii_lowercase().as_str() {
            "lowest" | "low" | "min" => Some(Self::Lowest),
            "highest" | "high" | "max" => Some(Self::Highest),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Positive,
    Negative,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ExtremumPayload {
    pub group_by: String,
    pub measure: String,
    /// `None` for the item-level variant, where every row is its own group.
    pub aggregate: Option<Aggregate>,
    pub polarity: Polarity,
    #[serde(rename = "winnerValue")]
    pub winner: String,
    pub winner_score: f64,
    pub runner_up: String,
    pub runner_up_score: f64,
    /// Row index of the winner for the item-level variant.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub winner_row: Option<usize>,
}

impl ExtremumPayload {
    pub fn is_item_level(&self) -> bool {
        self.aggregate.is_none()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct CorrelationPayload {
    /// Unordered pair, stored in table column order.
    pub measures: [String; 2],
    pub r: f64,
    pub n: usize,
    pub direction: Direction,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct OutlierRow {
    pub row: usize,
    pub value: f64,
    pub exceedance: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct AnomalyPayload {
    pub measure: String,
    #[serde(rename = "outlierRows")]
    pub outliers: Vec<OutlierRow>,
    pub count: usize,
    pub lower_fence: f64,
    pub upper_fence: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct DistributionPayload {
    pub measure: String,
    pub lo: f64,
    pub hi: f64,
    pub achieved_coverage: f64,
    pub bin_width: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Payload {
    Extremum(ExtremumPayload),
    Correlation(CorrelationPayload),
    Anomaly(AnomalyPayload),
    Distribution(DistributionPayload),
}

impl Payload {
    pub fn insight_type(&self) -> InsightType {
        match self {
            Payload::Extremum(_) => InsightType::Extremum,
            Payload::Correlation(_) => InsightType::Correlation,
            Payload::Anomaly(_) => InsightType::Anomaly,
            Payload::Distribution(_) => InsightType::Distribution,
        }
    }

    /// Quantitative columns, in payload order.
    pub fn measures(&self) -> Vec<&str> {
        match self {
            Payload::Extremum(p) => vec![p.measure.as_str()],
            Payload::Correlation(p) => vec![p.measures[0].as_str(), p.measures[1].as_str()],
            Payload::Anomaly(p) => vec![p.measure.as_str()],
            Payload::Distribution(p) => vec![p.measure.as_str()],
        }
    }

    /// Every column the payload refers to.
    pub fn columns(&self) -> Vec<&str> {
        let mut cols = self.measures();
        if let Payload::Extremum(p) = self {
            cols.insert(0, p.group_by.as_str());
        }
        cols
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Insight {
    pub id: String,
    #[serde(rename = "type")]
    pub insight_type: InsightType,
    pub text: String,
    pub attributes: BTreeSet<String>,
    pub filter: Option<Filter>,
    pub tier: u8,
    pub strength: f64,
    pub vis_objects: Vec<ChartSpec>,
    pub payload: Payload,
}

impl Insight {
    /// Canonical key: `type|groupBy|measures|filter|polarity`, `-` for empty parts.
    pub fn canonical_id(payload: &Payload, filter: Option<&Filter>) -> String {
        let (group, measures, polarity) = match payload {
            Payload::Extremum(p) => (
                p.group_by.clone(),
                match p.aggregate {
                    Some(a) => format!("{}:{}", a.as_str(), p.measure),
                    None => p.measure.clone(),
                },
                p.polarity.as_str().to_string(),
            ),
            Payload::Correlation(p) => ("-".into(), p.measures.join(","), "-".into()),
            Payload::Anomaly(p) => ("-".into(), p.measure.clone(), "-".into()),
            Payload::Distribution(p) => ("-".into(), p.measure.clone(), "-".into()),
        };
        let filter = filter.map_or_else(|| "-".to_string(), Filter::to_string);
        format!("{}|{group}|{measures}|{filter}|{polarity}", payload.insight_type())
    }

    pub fn attributes_of(payload: &Payload, filter: Option<&Filter>) -> BTreeSet<String> {
        let mut attrs: BTreeSet<String> = payload.columns().into_iter().map(String::from).collect();
        if let Some(f) = filter {
            attrs.insert(f.column.clone());
        }
        attrs
    }

    pub fn measures(&self) -> Vec<&str> {
        self.payload.measures()
    }

    pub fn extremum(&self) -> Option<&ExtremumPayload> {
        match &self.payload {
            Payload::Extremum(p) => Some(p),
            _ => None,
        }
    }

    pub fn correlation(&self) -> Option<&CorrelationPayload> {
        match &self.payload {
            Payload::Correlation(p) => Some(p),
            _ => None,
        }
    }

    /// Ranking key shared by the recommender and the root selector:
    /// tier ascending, strength descending, id ascending.
    pub fn rank_cmp(&self, other: &Insight) -> std::cmp::Ordering {
        self.tier
            .cmp(&other.tier)
            .then(other.strength.total_cmp(&self.strength))
            .then_with(|| self.id.cmp(&other.id))
    }
}

#[derive(Debug, thiserror::Error)]
pub enum SpaceError {
    #[error("invalid insight space document: {0}")]
    Json(#[from] serde_json::Error),
    #[error("unsupported insight space version {found}, expected {expected}")]
    VersionMismatch { found: u32, expected: u32 },
    #[error("duplicate insight id '{0}'")]
    DuplicateId(String),
    #[error("insight '{0}' has a type that does not match its payload")]
    TypeMismatch(String),
}

#[derive(Debug, Clone, Default)]
struct SpaceIndex {
    by_id: HashMap<String, usize>,
    by_type: BTreeMap<InsightType, Vec<usize>>,
    by_attribute: BTreeMap<String, Vec<usize>>,
    by_type_measures: BTreeMap<(InsightType, Vec<String>), Vec<usize>>,
}

/// Frozen, id-sorted collection of insights with lookup indexes.
#[derive(Debug, Clone)]
pub struct InsightSpace {
    table: String,
    row_count: usize,
    insights: Vec<Insight>,
    index: SpaceIndex,
}

impl PartialEq for InsightSpace {
    fn eq(&self, other: &Self) -> bool {
        self.table == other.table && self.row_count == other.row_count && self.insights == other.insights
    }
}

#[derive(Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
struct SpaceDocument {
    version: u32,
    table: String,
    row_count: usize,
    insights: Vec<Insight>,
}

fn sorted_measures(insight: &Insight) -> Vec<String> {
    let mut m: Vec<String> = insight.measures().into_iter().map(String::from).collect();
    m.sort();
    m
}

impl InsightSpace {
    /// Sorts by id and builds the indexes. Fails on duplicate ids.
    pub fn new(table: impl Into<String>, row_count: usize, mut insights: Vec<Insight>) -> Result<Self, SpaceError> {
        insights.sort_by(|a, b| a.id.cmp(&b.id));
        let mut index = SpaceIndex::default();
        for (i, insight) in insights.iter().enumerate() {
            if insight.insight_type != insight.payload.insight_type() {
                return Err(SpaceError::TypeMismatch(insight.id.clone()));
            }
            if index.by_id.insert(insight.id.clone(), i).is_some() {
                return Err(SpaceError::DuplicateId(insight.id.clone()));
            }
            index.by_type.entry(insight.insight_type).or_default().push(i);
            for attr in &insight.attributes {
                index.by_attribute.entry(attr.clone()).or_default().push(i);
            }
            index
                .by_type_measures
                .entry((insight.insight_type, sorted_measures(insight)))
                .or_default()
                .push(i);
        }
        Ok(Self {
            table: table.into(),
            row_count,
            insights,
            index,
        })
    }

    pub fn table(&self) -> &str {
        &self.table
    }

    pub fn row_count(&self) -> usize {
        self.row_count
    }

    pub fn insights(&self) -> &[Insight] {
        &self.insights
    }

    pub fn len(&self) -> usize {
        self.insights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.insights.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&Insight> {
        self.index.by_id.get(id).map(|&i| &self.insights[i])
    }

    pub fn of_type(&self, t: InsightType) -> impl Iterator<Item = &Insight> {
        self.index
            .by_type
            .get(&t)
            .into_iter()
            .flatten()
            .map(|&i| &self.insights[i])
    }

    pub fn with_attribute(&self, attr: &str) -> impl Iterator<Item = &Insight> {
        self.index
            .by_attribute
            .get(attr)
            .into_iter()
            .flatten()
            .map(|&i| &self.insights[i])
    }

    /// Insights of type `t` whose measure set equals `measures` (any order).
    pub fn with_measures(&self, t: InsightType, measures: &[&str]) -> impl Iterator<Item = &Insight> {
        let mut key: Vec<String> = measures.iter().map(|s| s.to_string()).collect();
        key.sort();
        self.index
            .by_type_measures
            .get(&(t, key))
            .into_iter()
            .flatten()
            .map(|&i| &self.insights[i])
    }

    /// The correlation insight between two measures, if mined.
    pub fn correlation_between(&self, a: &str, b: &str) -> Option<&Insight> {
        self.with_measures(InsightType::Correlation, &[a, b]).next()
    }

    /// Pretty JSON with lexicographically ordered keys.
    pub fn to_canonical_json(&self) -> String {
        let doc = SpaceDocument {
            version: SPACE_FORMAT_VERSION,
            table: self.table.clone(),
            row_count: self.row_count,
            insights: self.insights.clone(),
        };
        crate::canonical_json(&doc)
    }

    pub fn from_json(bytes: &[u8]) -> Result<Self, SpaceError> {
        let doc: SpaceDocument = serde_json::from_slice(bytes)?;
        if doc.version != SPACE_FORMAT_VERSION {
            return Err(SpaceError::VersionMismatch {
                found: doc.version,
                expected: SPACE_FORMAT_VERSION,
            });
        }
        Self::new(doc.table, doc.row_count, doc.insights)
    }

    /// Hex SHA-256 prefix of the canonical JSON; identifies the space a
    /// session was recorded against.
    pub fn fingerprint(&self) -> String {
        let digest = Sha256::digest(self.to_canonical_json().as_bytes());
        digest[..12].iter().map(|b| format!("{b:02x}")).collect()
    }
}
