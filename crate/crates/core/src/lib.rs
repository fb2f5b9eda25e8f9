//! Insight mining, follow-up question recommendation and branching notebook
//! sessions over tabular data.
//!
//! Load a CSV into a [`Table`], build an [`Engine`] (which mines the
//! [`InsightSpace`]), then drive a [`Session`] by selecting questions.

pub mod chart;
pub mod config;
pub mod dataset;
pub mod engine;
pub mod insight;
pub mod miner;
pub mod recommend;
pub mod session;
pub mod stats;
pub mod text;

pub use chart::{chart_for_insight, ChartSpec};
pub use config::Config;
pub use dataset::{load_table, Role, Table, Value};
pub use engine::Engine;
pub use insight::{Insight, InsightSpace, InsightType, Payload, Polarity};
pub use recommend::{recommend, Answer, Question, QuestionKind};
pub use session::{Cell, CellContent, Event, RootSelector, Session, SessionError};

use serde::Serialize;
use serde_json::{Map, Value as Json};

fn sort_keys(value: Json) -> Json {
    match value {
        Json::Object(map) => {
            let mut entries: Vec<(String, Json)> = map.into_iter().collect();
            entries.sort_by(|a, b| a.0.cmp(&b.0));
            let mut sorted = Map::new();
            for (k, v) in entries {
                sorted.insert(k, sort_keys(v));
            }
            Json::Object(sorted)
        }
        Json::Array(items) => Json::Array(items.into_iter().map(sort_keys).collect()),
        other => other,
    }
}

/// Pretty JSON with object keys in lexicographic order at every depth.
pub fn canonical_json<T: Serialize>(value: &T) -> String {
    let tree = serde_json::to_value(value).expect("domain types serialize to JSON");
    let mut out = serde_json::to_string_pretty(&sort_keys(tree)).expect("JSON values serialize");
    out.push('\n');
    out
}
