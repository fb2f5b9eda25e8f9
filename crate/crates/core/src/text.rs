//! Template-driven wording for insight statements and follow-up questions.

use serde::Deserialize;

use crate::config::TextConfig;
use crate::insight::{AnomalyPayload, ExtremumPayload, Payload};
use crate::stats::{Aggregate, Filter};

const DEFAULT_TEMPLATES: &str = include_str!("../resources/templates.toml");

/// Formats a number for display: integral values keep one decimal
/// (`75.0`), others are rounded to ten decimals.
pub fn format_number(x: f64) -> String {
    let rounded = (x * 1e10).round() / 1e10;
    let s = format!("{rounded}");
    if s.contains('.') || s.contains('e') || !rounded.is_finite() {
        s
    } else {
        format!("{s}.0")
    }
}

fn number_word(n: usize) -> String {
    const WORDS: [&str; 11] = [
        "zero", "one", "two", "three", "four", "five", "six", "seven", "eight", "nine", "ten",
    ];
    WORDS.get(n).map_or_else(|| n.to_string(), |w| w.to_string())
}

fn capitalise(s: &str) -> String {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) => c.to_uppercase().chain(chars).collect(),
        None => String::new(),
    }
}

fn decapitalise(s: &str) -> String {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) => c.to_lowercase().chain(chars).collect(),
        None => String::new(),
    }
}

/// Replaces `{name}` slots. Unknown slots are kept verbatim.
pub fn fill(template: &str, slots: &[(&str, String)]) -> String {
    let mut out = String::with_capacity(template.len() + 32);
    let mut rest = template;
    while let Some(open) = rest.find('{') {
        out.push_str(&rest[..open]);
        let after = &rest[open + 1..];
        match after.find('}') {
            Some(close) => {
                let name = &after[..close];
                match slots.iter().find(|(k, _)| *k == name) {
                    Some((_, v)) => out.push_str(v),
                    None => {
                        out.push('{');
                        out.push_str(name);
                        out.push('}');
                    }
                }
                rest = &after[close + 1..];
            }
            None => {
                out.push_str(&rest[open..]);
                rest = "";
            }
        }
    }
    out.push_str(rest);
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExtremumTemplates {
    pub statement: String,
    pub why: String,
    pub question: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorrelationTemplates {
    pub statement: String,
    pub why: String,
    pub question: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnomalyTemplates {
    pub statement_single: String,
    pub statement: String,
    pub question: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DistributionTemplates {
    pub statement: String,
    pub question: String,
    pub question_filtered: String,
}

/// The template table. See `resources/templates.toml` for the slot reference.
#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Templates {
    pub extremum: ExtremumTemplates,
    pub extremum_item: ExtremumTemplates,
    pub correlation: CorrelationTemplates,
    pub anomaly: AnomalyTemplates,
    pub distribution: DistributionTemplates,
}

impl Templates {
    pub fn from_toml_str(text: &str) -> Result<Self, toml::de::Error> {
        toml::from_str(text)
    }
}

impl Default for Templates {
    fn default() -> Self {
        Self::from_toml_str(DEFAULT_TEMPLATES).expect("bundled templates parse")
    }
}

/// Column labels, row nouns and templates for one table.
#[derive(Debug, Clone, PartialEq)]
pub struct Phrasebook {
    templates: Templates,
    text: TextConfig,
    plural: String,
    singular: String,
}

impl Phrasebook {
    pub fn new(table_name: &str, text: &TextConfig, templates: Templates) -> Self {
        let plural = text
            .entity_plural
            .clone()
            .unwrap_or_else(|| table_name.to_lowercase());
        let singular = text.entity_singular.clone().unwrap_or_else(|| {
            plural
                .strip_suffix('s')
                .filter(|s| !s.is_empty())
                .unwrap_or(&plural)
                .to_string()
        });
        Self {
            templates,
            text: text.clone(),
            plural,
            singular,
        }
    }

    pub fn label(&self, column: &str) -> String {
        self.text
            .labels
            .get(column)
            .cloned()
            .unwrap_or_else(|| column.replace('_', " "))
    }

    /// `" in the year 1980"`, or empty without a filter.
    pub fn filter_clause(&self, filter: Option<&Filter>) -> String {
        let Some(f) = filter else { return String::new() };
        let pattern = self
            .text
            .filter_phrases
            .get(&f.column)
            .map_or("in the {column} {value}", String::as_str);
        let phrase = fill(
            pattern,
            &[
                ("column", self.label(&f.column).to_lowercase()),
                ("value", f.value.clone()),
            ],
        );
        format!(" {phrase}")
    }

    /// `"cars from the year 1980"`.
    fn group_phrase(&self, column: &str, value: &str) -> String {
        let pattern = self
            .text
            .group_phrases
            .get(column)
            .map_or("from the {column} {value}", String::as_str);
        let phrase = fill(
            pattern,
            &[
                ("column", self.label(column).to_lowercase()),
                ("value", value.to_string()),
            ],
        );
        format!("{} {phrase}", self.plural)
    }

    fn aggregate_word(a: Option<Aggregate>) -> &'static str {
        match a {
            Some(Aggregate::Mean) => "average",
            Some(Aggregate::Sum) => "total",
            Some(Aggregate::Count) => "count of",
            None => "",
        }
    }

    fn extremum_slots(&self, p: &ExtremumPayload, filter: Option<&Filter>) -> Vec<(&'static str, String)> {
        let group = self.group_phrase(&p.group_by, &p.winner);
        vec![
            ("Group", capitalise(&group)),
            ("group", decapitalise(&group)),
            ("group_column", self.label(&p.group_by).to_lowercase()),
            ("item", p.winner.clone()),
            ("entity", self.singular.clone()),
            ("polarity", p.polarity.as_str().to_string()),
            ("aggregate", Self::aggregate_word(p.aggregate).to_string()),
            ("measure", self.label(&p.measure)),
            ("filter", self.filter_clause(filter)),
        ]
    }

    fn extremum_templates(&self, p: &ExtremumPayload) -> &ExtremumTemplates {
        if p.is_item_level() {
            &self.templates.extremum_item
        } else {
            &self.templates.extremum
        }
    }

    fn anomaly_statement(&self, p: &AnomalyPayload, filter: Option<&Filter>) -> String {
        let t = &self.templates.anomaly;
        let label = (p.count == 1)
            .then(|| p.outliers.first().and_then(|o| o.label.clone()))
            .flatten();
        let mut slots = vec![
            ("entity", self.singular.clone()),
            ("measure", self.label(&p.measure)),
            ("filter", self.filter_clause(filter)),
            ("count", number_word(p.count)),
            ("be", if p.count == 1 { "is" } else { "are" }.to_string()),
            ("noun", if p.count == 1 { "anomaly" } else { "anomalies" }.to_string()),
        ];
        match label {
            Some(item) => {
                slots.push(("item", item));
                fill(&t.statement_single, &slots)
            }
            None => fill(&t.statement, &slots),
        }
    }

    /// Declarative sentence for an insight.
    pub fn statement(&self, payload: &Payload, filter: Option<&Filter>) -> String {
        match payload {
            Payload::Extremum(p) => fill(&self.extremum_templates(p).statement, &self.extremum_slots(p, filter)),
            Payload::Correlation(p) => fill(
                &self.templates.correlation.statement,
                &[("first", self.label(&p.measures[0])), ("second", self.label(&p.measures[1]))],
            ),
            Payload::Anomaly(p) => self.anomaly_statement(p, filter),
            Payload::Distribution(p) => fill(
                &self.templates.distribution.statement,
                &[
                    ("measure", self.label(&p.measure)),
                    ("filter", self.filter_clause(filter)),
                    ("lo", format_number(p.lo)),
                    ("hi", format_number(p.hi)),
                ],
            ),
        }
    }

    /// Aggregated "why" question about an extremum or correlation insight.
    pub fn why_question(&self, payload: &Payload, filter: Option<&Filter>) -> Option<String> {
        match payload {
            Payload::Extremum(p) => Some(fill(&self.extremum_templates(p).why, &self.extremum_slots(p, filter))),
            Payload::Correlation(p) => Some(fill(
                &self.templates.correlation.why,
                &[("first", self.label(&p.measures[0])), ("second", self.label(&p.measures[1]))],
            )),
            _ => None,
        }
    }

    /// Question whose answer is the given insight.
    pub fn question(&self, payload: &Payload, filter: Option<&Filter>) -> String {
        match payload {
            Payload::Extremum(p) => fill(&self.extremum_templates(p).question, &self.extremum_slots(p, filter)),
            Payload::Correlation(p) => fill(
                &self.templates.correlation.question,
                &[("first", self.label(&p.measures[0])), ("second", self.label(&p.measures[1]))],
            ),
            Payload::Anomaly(p) => fill(
                &self.templates.anomaly.question,
                &[("measure", self.label(&p.measure)), ("filter", self.filter_clause(filter))],
            ),
            Payload::Distribution(p) => {
                let t = &self.templates.distribution;
                let template = if filter.is_some() { &t.question_filtered } else { &t.question };
                fill(
                    template,
                    &[("measure", self.label(&p.measure)), ("filter", self.filter_clause(filter))],
                )
            }
        }
    }
}
