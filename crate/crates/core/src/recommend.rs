//! Follow-up question retrieval.
//!
//! Logically-related answers come from per-type rules:
//!
//! * extremum `(c1, q1, polarity, winner w)`:
//!   1. extremum `(c1, q2)` with the same winner, aggregate and filter, paired
//!      with the correlation `(q1, q2)`; the polarity must agree with the
//!      correlation direction (same when positive, flipped when negative);
//!   2. anomaly of `q1` under the filter `c1 = w`;
//!   3. extremum `(c2, q1)` with the same polarity under the filter `c1 = w`.
//! * correlation `(q1, q2)`: the pair of correlations `(q1, q3)` and `(q2, q3)`.
//! * anomaly `q1`: the unfiltered distribution of `q1`.
//! * distribution `q1` under filter `f`: the anomaly of `q1` under `f`, and
//!   when unfiltered every filtered distribution of `q1`.
//!
//! Attribute-related answers are every other insight sharing an attribute.

use std::cmp::Ordering;
use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::insight::{Direction, Insight, InsightSpace, InsightType, Payload};
use crate::stats::Filter;
use crate::text::Phrasebook;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QuestionKind {
    LogicallyRelated,
    AttributeRelated,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Answer {
    /// One insight, or an extremum/correlation (or correlation/correlation)
    /// combination.
    pub insight_ids: Vec<String>,
    pub action_text: String,
}

impl Answer {
    fn new(parts: &[&Insight]) -> Self {
        Self {
            insight_ids: parts.iter().map(|i| i.id.clone()).collect(),
            action_text: parts.iter().map(|i| i.text.as_str()).collect::<Vec<_>>().join("; "),
        }
    }
}

/// Ranking basis: the best answer's tier and strength.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Rank {
    pub tier: u8,
    pub strength: f64,
}

impl Rank {
    fn of(insight: &Insight) -> Self {
        Self { tier: insight.tier, strength: insight.strength }
    }

    /// Tier ascending, then strength descending.
    pub fn cmp_priority(&self, other: &Rank) -> Ordering {
        self.tier.cmp(&other.tier).then(other.strength.total_cmp(&self.strength))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Question {
    pub id: String,
    pub kind: QuestionKind,
    pub text: String,
    pub source_insight_id: String,
    pub answers: Vec<Answer>,
    /// The single "why" question aggregating every explanation.
    pub aggregated: bool,
    pub rank: Rank,
}

impl Question {
    pub fn answer_insight_ids(&self) -> impl Iterator<Item = &str> {
        self.answers.iter().flat_map(|a| a.insight_ids.iter().map(String::as_str))
    }
}

fn answer_rank(answer: &Answer, space: &InsightSpace) -> Rank {
    answer
        .insight_ids
        .first()
        .and_then(|id| space.get(id))
        .map_or(Rank { tier: 3, strength: 0.0 }, Rank::of)
}

fn same_filter(a: Option<&Filter>, b: Option<&Filter>) -> bool {
    a == b
}

/// Logically-related answers for `insight` under the retrieval rules.
pub fn logically_related(insight: &Insight, space: &InsightSpace) -> Vec<Answer> {
    let mut answers = Vec::new();
    match &insight.payload {
        Payload::Extremum(e) => {
            for other in space.of_type(InsightType::Extremum) {
                let Some(x) = other.extremum() else { continue };
                if x.group_by != e.group_by
                    || x.measure == e.measure
                    || x.winner != e.winner
                    || x.aggregate != e.aggregate
                    || !same_filter(other.filter.as_ref(), insight.filter.as_ref())
                {
                    continue;
                }
                let Some(cor) = space.correlation_between(&e.measure, &x.measure) else { continue };
                let expected = match cor.correlation().map(|c| c.direction) {
                    Some(Direction::Positive) => e.polarity,
                    Some(Direction::Negative) => e.polarity.flipped(),
                    None => continue,
                };
                if x.polarity == expected {
                    answers.push(Answer::new(&[other, cor]));
                }
            }

            let drill = Filter::new(&e.group_by, &e.winner);
            for other in space.with_measures(InsightType::Anomaly, &[&e.measure]) {
                if other.filter.as_ref() == Some(&drill) {
                    answers.push(Answer::new(&[other]));
                }
            }
            for other in space.with_measures(InsightType::Extremum, &[&e.measure]) {
                let Some(x) = other.extremum() else { continue };
                if x.group_by != e.group_by
                    && x.aggregate.is_some()
                    && x.aggregate == e.aggregate
                    && x.polarity == e.polarity
                    && other.filter.as_ref() == Some(&drill)
                {
                    answers.push(Answer::new(&[other]));
                }
            }
        }
        Payload::Correlation(c) => {
            let [q1, q2] = [&c.measures[0], &c.measures[1]];
            for first in space.of_type(InsightType::Correlation) {
                let Some(p) = first.correlation() else { continue };
                let q3 = if p.measures[0] == *q1 {
                    &p.measures[1]
                } else if p.measures[1] == *q1 {
                    &p.measures[0]
                } else {
                    continue;
                };
                if q3 == q2 {
                    continue;
                }
                if let Some(second) = space.correlation_between(q2, q3) {
                    answers.push(Answer::new(&[first, second]));
                }
            }
        }
        Payload::Anomaly(a) => {
            answers.extend(
                space
                    .with_measures(InsightType::Distribution, &[&a.measure])
                    .filter(|d| d.filter.is_none())
                    .map(|d| Answer::new(&[d])),
            );
        }
        Payload::Distribution(d) => {
            answers.extend(
                space
                    .with_measures(InsightType::Anomaly, &[&d.measure])
                    .filter(|a| same_filter(a.filter.as_ref(), insight.filter.as_ref()))
                    .map(|a| Answer::new(&[a])),
            );
            if insight.filter.is_none() {
                answers.extend(
                    space
                        .with_measures(InsightType::Distribution, &[&d.measure])
                        .filter(|x| x.filter.is_some())
                        .map(|x| Answer::new(&[x])),
                );
            }
        }
    }
    answers.retain(|a| !a.insight_ids.contains(&insight.id));
    answers
}

/// Insights sharing at least one attribute with `insight`, excluding the
/// source and anything already among `logical`.
pub fn attribute_related(insight: &Insight, space: &InsightSpace, logical: &[Answer]) -> Vec<Answer> {
    let taken: BTreeSet<&str> = logical
        .iter()
        .flat_map(|a| a.insight_ids.iter().map(String::as_str))
        .chain(std::iter::once(insight.id.as_str()))
        .collect();
    let mut found: BTreeSet<&str> = BTreeSet::new();
    for attr in &insight.attributes {
        for other in space.with_attribute(attr) {
            if !taken.contains(other.id.as_str()) {
                found.insert(other.id.as_str());
            }
        }
    }
    found
        .into_iter()
        .filter_map(|id| space.get(id))
        .map(|i| Answer::new(&[i]))
        .collect()
}

/// Turns retrieved answers into panel questions.
///
/// Logically-related answers to an extremum or correlation become one
/// aggregated "why" question; every other answer becomes its own question
/// worded by the answer insight's template.
pub fn to_questions(
    source: &Insight,
    answers: Vec<Answer>,
    kind: QuestionKind,
    space: &InsightSpace,
    phrases: &Phrasebook,
) -> Vec<Question> {
    if answers.is_empty() {
        return Vec::new();
    }
    let why = match (kind, source.insight_type) {
        (QuestionKind::LogicallyRelated, InsightType::Extremum | InsightType::Correlation) => {
            phrases.why_question(&source.payload, source.filter.as_ref())
        }
        _ => None,
    };
    if let Some(text) = why {
        let rank = answers
            .iter()
            .map(|a| answer_rank(a, space))
            .min_by(Rank::cmp_priority)
            .expect("answers is non-empty");
        return vec![Question {
            id: format!("why:{}", source.id),
            kind,
            text,
            source_insight_id: source.id.clone(),
            answers,
            aggregated: true,
            rank,
        }];
    }

    let prefix = match kind {
        QuestionKind::LogicallyRelated => "lr",
        QuestionKind::AttributeRelated => "ar",
    };
    answers
        .into_iter()
        .filter_map(|answer| {
            let target = space.get(answer.insight_ids.first()?)?;
            Some(Question {
                id: format!("{prefix}:{}:{}", source.id, answer.insight_ids.join("+")),
                kind,
                text: phrases.question(&target.payload, target.filter.as_ref()),
                source_insight_id: source.id.clone(),
                rank: Rank::of(target),
                answers: vec![answer],
                aggregated: false,
            })
        })
        .collect()
}

fn panel_order(a: &Question, b: &Question) -> Ordering {
    b.aggregated
        .cmp(&a.aggregated)
        .then(a.rank.cmp_priority(&b.rank))
        .then_with(|| a.id.cmp(&b.id))
}

/// The ordered question panel for a cell showing `source`.
///
/// Logically-related questions come first (the "why" question leading), then
/// attribute-related ones, each group ordered by tier, strength and id.
/// Questions whose answers were all shown on the path from the cell to the
/// root (`explored`) are dropped. At most `k` questions are returned.
pub fn recommend(
    source: &Insight,
    explored: &BTreeSet<String>,
    space: &InsightSpace,
    phrases: &Phrasebook,
    k: usize,
) -> Vec<Question> {
    let logical = logically_related(source, space);
    let attribute = attribute_related(source, space, &logical);

    let fresh = |q: &Question| !q.answer_insight_ids().all(|id| explored.contains(id));
    let mut first: Vec<Question> = to_questions(source, logical, QuestionKind::LogicallyRelated, space, phrases)
        .into_iter()
        .filter(fresh)
        .collect();
    let mut second: Vec<Question> = to_questions(source, attribute, QuestionKind::AttributeRelated, space, phrases)
        .into_iter()
        .filter(fresh)
        .collect();
    first.sort_by(panel_order);
    second.sort_by(panel_order);
    first.extend(second);
    first.truncate(k);
    first
}
