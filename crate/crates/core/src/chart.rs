//! Declarative chart specifications for insights.
//!
//! The schema is deliberately small: four marks, an x and optional y
//! encoding, an optional filter and one highlight predicate. The JSON form is
//! described by `schema/chartspec.schema.json` at the repository root.

use serde::{Deserialize, Serialize};

use crate::dataset::{Role, Table, Value};
use crate::insight::{Insight, Payload, Polarity};
use crate::stats::{Aggregate, Filter};

/// Bars shown for an item-level extremum.
pub const ITEM_TOP_N: usize = 20;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ChartError {
    #[error("insight '{0}' has no chart mapping for its type")]
    UnsupportedInsight(String),
    #[error("invalid chart spec: {}", .0.join("; "))]
    Invalid(Vec<String>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mark {
    Bar,
    Point,
    Tick,
    Histogram,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FieldRole {
    Nominal,
    Quantitative,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Bin {
    pub start: f64,
    pub step: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Encoding {
    pub field: String,
    pub role: FieldRole,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub aggregate: Option<Aggregate>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bin: Option<Bin>,
}

impl Encoding {
    fn nominal(field: &str) -> Self {
        Self { field: field.into(), role: FieldRole::Nominal, aggregate: None, bin: None }
    }

    fn quantitative(field: &str) -> Self {
        Self { field: field.into(), role: FieldRole::Quantitative, aggregate: None, bin: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum HighlightOp {
    Eq,
    Lt,
    Gt,
    OutsideRange,
    WithinRange,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Highlight {
    pub field: String,
    pub op: HighlightOp,
    pub values: Vec<Value>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SortOrder {
    Ascending,
    Descending,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ChartSpec {
    pub mark: Mark,
    #[serde(rename = "xEncoding")]
    pub x: Encoding,
    #[serde(rename = "yEncoding", default, skip_serializing_if = "Option::is_none")]
    pub y: Option<Encoding>,
    #[serde(rename = "filterClause", default, skip_serializing_if = "Option::is_none")]
    pub filter: Option<Filter>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub highlight: Option<Highlight>,
    /// Sort bars by the y value.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sort: Option<SortOrder>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub limit: Option<usize>,
    pub title: String,
}

fn title_suffix(filter: Option<&Filter>) -> String {
    filter.map_or_else(String::new, |f| format!(" ({} = {})", f.column, f.value))
}

/// Maps an insight to its chart.
pub fn chart_for_insight(insight: &Insight) -> Result<ChartSpec, ChartError> {
    if insight.insight_type != insight.payload.insight_type() {
        return Err(ChartError::UnsupportedInsight(insight.id.clone()));
    }
    Ok(chart_for_payload(&insight.payload, insight.filter.as_ref()))
}

pub(crate) fn chart_for_payload(payload: &Payload, filter: Option<&Filter>) -> ChartSpec {
    let suffix = title_suffix(filter);
    let filter = filter.cloned();
    match payload {
        Payload::Extremum(p) => match p.aggregate {
            Some(agg) => ChartSpec {
                mark: Mark::Bar,
                x: Encoding::nominal(&p.group_by),
                y: Some(Encoding { aggregate: Some(agg), ..Encoding::quantitative(&p.measure) }),
                filter,
                highlight: Some(Highlight {
                    field: p.group_by.clone(),
                    op: HighlightOp::Eq,
                    values: vec![Value::Text(p.winner.clone())],
                }),
                sort: None,
                limit: None,
                title: format!("{} {} by {}{suffix}", agg.as_str(), p.measure, p.group_by),
            },
            None => ChartSpec {
                mark: Mark::Bar,
                x: Encoding::nominal(&p.group_by),
                y: Some(Encoding::quantitative(&p.measure)),
                filter,
                highlight: Some(Highlight {
                    field: p.group_by.clone(),
                    op: HighlightOp::Eq,
                    values: vec![Value::Text(p.winner.clone())],
                }),
                sort: Some(match p.polarity {
                    Polarity::Lowest => SortOrder::Ascending,
                    Polarity::Highest => SortOrder::Descending,
                }),
                limit: Some(ITEM_TOP_N),
                title: format!("{} {ITEM_TOP_N} {} by {}{suffix}", p.polarity.as_str(), p.group_by, p.measure),
            },
        },
        Payload::Correlation(p) => ChartSpec {
            mark: Mark::Point,
            x: Encoding::quantitative(&p.measures[0]),
            y: Some(Encoding::quantitative(&p.measures[1])),
            filter,
            highlight: None,
            sort: None,
            limit: None,
            title: format!("{} vs {}{suffix}", p.measures[0], p.measures[1]),
        },
        Payload::Anomaly(p) => ChartSpec {
            mark: Mark::Tick,
            x: Encoding::quantitative(&p.measure),
            y: None,
            filter,
            highlight: Some(Highlight {
                field: p.measure.clone(),
                op: HighlightOp::OutsideRange,
                values: vec![Value::Number(p.lower_fence), Value::Number(p.upper_fence)],
            }),
            sort: None,
            limit: None,
            title: format!("outliers of {}{suffix}", p.measure),
        },
        Payload::Distribution(p) => {
            let step = if p.bin_width > 0.0 { p.bin_width } else { 1.0 };
            let start = if p.bin_width > 0.0 { (p.lo / step).floor() * step } else { p.lo };
            ChartSpec {
                mark: Mark::Histogram,
                x: Encoding { bin: Some(Bin { start, step }), ..Encoding::quantitative(&p.measure) },
                y: Some(Encoding { aggregate: Some(Aggregate::Count), ..Encoding::quantitative(&p.measure) }),
                filter,
                highlight: Some(Highlight {
                    field: p.measure.clone(),
                    op: HighlightOp::WithinRange,
                    values: vec![Value::Number(p.lo), Value::Number(p.hi)],
                }),
                sort: None,
                limit: None,
                title: format!("distribution of {}{suffix}", p.measure),
            }
        }
    }
}

/// One chart per answer insight, extremum charts before correlation charts.
pub fn charts_for_answer(insights: &[&Insight]) -> Result<Vec<(String, ChartSpec)>, ChartError> {
    let mut ordered: Vec<&Insight> = insights.to_vec();
    ordered.sort_by_key(|i| i.insight_type);
    ordered
        .into_iter()
        .map(|i| chart_for_insight(i).map(|c| (i.id.clone(), c)))
        .collect()
}

impl ChartSpec {
    fn encodings(&self) -> impl Iterator<Item = &Encoding> {
        std::iter::once(&self.x).chain(self.y.as_ref())
    }

    /// Structural checks, plus field resolution when a table is given.
    pub fn validate(&self, table: Option<&Table>) -> Result<(), ChartError> {
        let mut problems = Vec::new();
        let y_role = self.y.as_ref().map(|y| y.role);
        match self.mark {
            Mark::Bar => {
                if self.x.role != FieldRole::Nominal || y_role != Some(FieldRole::Quantitative) {
                    problems.push("bar needs a nominal x and a quantitative y".to_string());
                }
            }
            Mark::Point => {
                if self.x.role != FieldRole::Quantitative || y_role != Some(FieldRole::Quantitative) {
                    problems.push("point needs quantitative x and y".to_string());
                }
            }
            Mark::Tick => {
                if self.x.role != FieldRole::Quantitative {
                    problems.push("tick needs a quantitative x".to_string());
                }
            }
            Mark::Histogram => match &self.x.bin {
                Some(bin) if bin.step > 0.0 && bin.step.is_finite() && bin.start.is_finite() => {
                    if self.x.role != FieldRole::Quantitative {
                        problems.push("histogram bins a quantitative x".to_string());
                    }
                }
                _ => problems.push("histogram needs a bin with a positive step on x".to_string()),
            },
        }
        if self.mark != Mark::Histogram && self.x.bin.is_some() {
            problems.push("only histograms bin".to_string());
        }
        for e in self.encodings() {
            if e.field.is_empty() {
                problems.push("encoding with empty field".to_string());
            }
        }

        if let Some(h) = &self.highlight {
            let known = self.encodings().any(|e| e.field == h.field)
                || self.filter.as_ref().is_some_and(|f| f.column == h.field);
            if !known {
                problems.push(format!("highlight field '{}' is not encoded", h.field));
            }
            let arity = match h.op {
                HighlightOp::Eq | HighlightOp::Lt | HighlightOp::Gt => 1,
                HighlightOp::OutsideRange | HighlightOp::WithinRange => 2,
            };
            if h.values.len() != arity {
                problems.push(format!("highlight {:?} takes {arity} value(s)", h.op));
            } else if arity == 2 {
                match (h.values[0].as_number(), h.values[1].as_number()) {
                    (Some(lo), Some(hi)) if lo <= hi => {}
                    _ => problems.push("highlight range must be two ordered numbers".to_string()),
                }
            }
        }

        if let Some(table) = table {
            for e in self.encodings() {
                match table.column(&e.field) {
                    None => problems.push(format!("unknown field '{}'", e.field)),
                    Some(c) => {
                        let ok = match e.role {
                            FieldRole::Quantitative => c.role == Role::Quantitative,
                            FieldRole::Nominal => c.role != Role::Quantitative,
                        };
                        if !ok {
                            problems.push(format!("field '{}' is {}, encoded as {:?}", e.field, c.role, e.role));
                        }
                    }
                }
            }
            if let Some(f) = &self.filter {
                if table.column(&f.column).map(|c| c.role) != Some(Role::Categorical) {
                    problems.push(format!("filter column '{}' is not categorical", f.column));
                }
            }
        }

        if problems.is_empty() {
            Ok(())
        } else {
            Err(ChartError::Invalid(problems))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::insight::{
        AnomalyPayload, CorrelationPayload, Direction, DistributionPayload, ExtremumPayload, InsightType,
    };

    fn insight(payload: Payload, filter: Option<Filter>) -> Insight {
        Insight {
            id: Insight::canonical_id(&payload, filter.as_ref()),
            insight_type: payload.insight_type(),
            text: String::new(),
            attributes: Insight::attributes_of(&payload, filter.as_ref()),
            filter,
            tier: 1,
            strength: 1.0,
            vis_objects: vec![],
            payload,
        }
    }

    fn year_extremum() -> Insight {
        insight(
            Payload::Extremum(ExtremumPayload {
                group_by: "Year".into(),
                measure: "Horsepower".into(),
                aggregate: Some(Aggregate::Mean),
                polarity: Polarity::Lowest,
                winner: "1980".into(),
                winner_score: 77.5,
                runner_up: "1982".into(),
                runner_up_score: 81.7,
                winner_row: None,
            }),
            None,
        )
    }

    fn correlation() -> Insight {
        insight(
            Payload::Correlation(CorrelationPayload {
                measures: ["Horsepower".into(), "Weight_in_lbs".into()],
                r: 0.86,
                n: 400,
                direction: Direction::Positive,
            }),
            None,
        )
    }

    #[test]
    fn extremum_is_a_highlighted_bar() {
        let c = chart_for_insight(&year_extremum()).unwrap();
        assert_eq!(c.mark, Mark::Bar);
        assert_eq!(c.x.field, "Year");
        let y = c.y.as_ref().unwrap();
        assert_eq!((y.field.as_str(), y.aggregate), ("Horsepower", Some(Aggregate::Mean)));
        let h = c.highlight.as_ref().unwrap();
        assert_eq!((h.field.as_str(), h.op), ("Year", HighlightOp::Eq));
        assert_eq!(h.values, vec![Value::Text("1980".into())]);
        c.validate(None).unwrap();
    }

    #[test]
    fn correlation_is_a_scatter() {
        let c = chart_for_insight(&correlation()).unwrap();
        assert_eq!(c.mark, Mark::Point);
        assert_eq!(c.x.field, "Horsepower");
        assert_eq!(c.y.unwrap().field, "Weight_in_lbs");
    }

    #[test]
    fn degenerate_distribution_histogram() {
        let d = insight(
            Payload::Distribution(DistributionPayload {
                measure: "v".into(),
                lo: 4.0,
                hi: 4.0,
                achieved_coverage: 1.0,
                bin_width: 0.0,
            }),
            Some(Filter::new("g", "a")),
        );
        let c = chart_for_insight(&d).unwrap();
        assert_eq!(c.mark, Mark::Histogram);
        assert_eq!(c.x.bin, Some(Bin { start: 4.0, step: 1.0 }));
        assert_eq!(c.highlight.as_ref().unwrap().values, vec![Value::Number(4.0), Value::Number(4.0)]);
        assert!(c.title.ends_with("(g = a)"));
        c.validate(None).unwrap();
    }

    #[test]
    fn anomaly_strip() {
        let a = insight(
            Payload::Anomaly(AnomalyPayload {
                measure: "v".into(),
                outliers: vec![],
                count: 0,
                lower_fence: -1.0,
                upper_fence: 2.0,
            }),
            None,
        );
        let c = chart_for_insight(&a).unwrap();
        assert_eq!(c.mark, Mark::Tick);
        assert_eq!(c.highlight.unwrap().op, HighlightOp::OutsideRange);
    }

    #[test]
    fn combo_orders_extremum_first() {
        let e = year_extremum();
        let c = correlation();
        let charts = charts_for_answer(&[&c, &e]).unwrap();
        let marks: Vec<Mark> = charts.iter().map(|(_, s)| s.mark).collect();
        assert_eq!(marks, [Mark::Bar, Mark::Point]);
        assert_eq!(charts[0].0, e.id);
        assert_eq!(charts_for_answer(&[&e]).unwrap().len(), 1);
    }

    #[test]
    fn mismatched_type_is_unsupported() {
        let mut e = year_extremum();
        e.insight_type = InsightType::Anomaly;
        assert!(matches!(chart_for_insight(&e), Err(ChartError::UnsupportedInsight(_))));
    }

    #[test]
    fn validation_catches_problems() {
        let mut c = chart_for_insight(&year_extremum()).unwrap();
        c.highlight.as_mut().unwrap().field = "Origin".into();
        c.mark = Mark::Histogram;
        let Err(ChartError::Invalid(p)) = c.validate(None) else { panic!() };
        assert_eq!(p.len(), 2);
    }
}
