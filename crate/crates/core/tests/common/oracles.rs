use std::collections::{BTreeMap, BTreeSet};

use branchbook_core::dataset::{Table, Value};
use branchbook_core::insight::{Insight, InsightSpace, Payload, Polarity};
use branchbook_core::recommend::QuestionKind;
use branchbook_core::stats::Filter;

fn num(v: &Value) -> Option<f64> {
    match v {
        Value::Number(x) => Some(*x),
        _ => None,
    }
}

fn text(v: &Value) -> Option<String> {
    match v {
        Value::Text(s) => Some(s.clone()),
        Value::Number(x) => Some(format!("{x}")),
        Value::Missing => None,
    }
}

fn col<'a>(t: &'a Table, name: &str) -> &'a [Value] {
    &t.columns.iter().find(|c| c.name == name).unwrap().values
}

fn keep(t: &Table, row: usize, filter: Option<&Filter>) -> bool {
    filter.is_none_or(|f| text(&col(t, &f.column)[row]).as_deref() == Some(f.value.as_str()))
}

/// `(row, value)` pairs of `measure` after filtering.
pub fn values(t: &Table, measure: &str, filter: Option<&Filter>) -> Vec<(usize, f64)> {
    let m = col(t, measure);
    (0..t.row_count)
        .filter(|&r| keep(t, r, filter))
        .filter_map(|r| num(&m[r]).map(|x| (r, x)))
        .collect()
}

/// Two-pass Pearson over complete pairs. `None` when undefined.
pub fn pearson(xs: &[f64], ys: &[f64]) -> Option<f64> {
    let n = xs.len();
    if n < 2 {
        return None;
    }
    let mx = xs.iter().sum::<f64>() / n as f64;
    let my = ys.iter().sum::<f64>() / n as f64;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for i in 0..n {
        sxy += (xs[i] - mx) * (ys[i] - my);
        sxx += (xs[i] - mx) * (xs[i] - mx);
        syy += (ys[i] - my) * (ys[i] - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    Some(sxy / (sxx * syy).sqrt())
}

pub fn pearson_columns(t: &Table, a: &str, b: &str) -> (Option<f64>, usize) {
    let (ca, cb) = (col(t, a), col(t, b));
    let (xs, ys): (Vec<f64>, Vec<f64>) = (0..t.row_count)
        .filter_map(|r| Some((num(&ca[r])?, num(&cb[r])?)))
        .unzip();
    (pearson(&xs, &ys), xs.len())
}

/// One pass over the rows accumulating `(sum, count)` per group.
pub fn group_sums(t: &Table, group_by: &str, measure: &str, filter: Option<&Filter>) -> BTreeMap<String, (f64, usize)> {
    let (g, m) = (col(t, group_by), col(t, measure));
    let mut acc: BTreeMap<String, (f64, usize)> = BTreeMap::new();
    for r in 0..t.row_count {
        if !keep(t, r, filter) {
            continue;
        }
        if let (Some(key), Some(x)) = (text(&g[r]), num(&m[r])) {
            let e = acc.entry(key).or_insert((0.0, 0));
            e.0 += x;
            e.1 += 1;
        }
    }
    acc
}

pub fn group_means(t: &Table, group_by: &str, measure: &str, filter: Option<&Filter>) -> BTreeMap<String, f64> {
    group_sums(t, group_by, measure, filter)
        .into_iter()
        .map(|(k, (s, n))| (k, s / n as f64))
        .collect()
}

/// Linear-interpolation quantile: position `p * (n - 1)` in the sorted list.
pub fn quantile(sorted: &[f64], p: f64) -> f64 {
    let pos = p * (sorted.len() - 1) as f64;
    let below = pos.floor() as usize;
    let above = pos.ceil() as usize;
    sorted[below] + (pos - below as f64) * (sorted[above] - sorted[below])
}

/// Rows outside the Tukey fences. `None` with fewer than four values.
pub fn tukey_rows(pairs: &[(usize, f64)], k: f64) -> Option<BTreeSet<usize>> {
    if pairs.len() < 4 {
        return None;
    }
    let mut sorted: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let q1 = quantile(&sorted, 0.25);
    let q3 = quantile(&sorted, 0.75);
    let iqr = q3 - q1;
    let median = quantile(&sorted, 0.5);
    Some(
        pairs
            .iter()
            .filter(|(_, x)| {
                if iqr == 0.0 {
                    *x != median
                } else {
                    *x < q1 - k * iqr || *x > q3 + k * iqr
                }
            })
            .map(|p| p.0)
            .collect(),
    )
}

/// Smallest 1, 2, 2.5 or 5 times a power of ten that is at least `raw`.
pub fn nice_width(raw: f64) -> f64 {
    let mut best = f64::INFINITY;
    for e in -30..=30 {
        for m in [1.0, 2.0, 2.5, 5.0] {
            let w = m * 10f64.powi(e);
            if w >= raw * (1.0 - 1e-12) && w < best {
                best = w;
            }
        }
    }
    best
}

/// Exhaustive modal range: bins of nice width aligned to multiples of the
/// width, every consecutive run scored by direct counting.
pub fn modal_range(values: &[f64], coverage: f64, bin_count: usize) -> Option<(f64, f64, f64)> {
    if values.is_empty() {
        return None;
    }
    let min = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if min == max {
        return Some((min, max, 1.0));
    }
    let w = nice_width((max - min) / bin_count as f64);
    let mut first = (min / w).floor() as i64;
    while first as f64 * w > min {
        first -= 1;
    }
    let edge = |i: i64| (first + i) as f64 * w;
    let mut nbins = 1;
    while edge(nbins) <= max {
        nbins += 1;
    }
    let n = values.len() as f64;
    // (length, -count, start) minimised
    let mut best: Option<(i64, i64, i64)> = None;
    for s in 0..nbins {
        for e in s..nbins {
            let lo = edge(s);
            let hi = edge(e + 1);
            let count = values.iter().filter(|&&v| v >= lo && v < hi).count() as i64;
            if count as f64 / n >= coverage {
                let key = (e - s + 1, -count, s);
                if best.is_none_or(|b| key < b) {
                    best = Some(key);
                }
            }
        }
    }
    let (len, neg_count, s) = best.unwrap();
    Some((edge(s), edge(s + len), -neg_count as f64 / n))
}

// ---- recommender rules, applied literally ----

fn filter_is(i: &Insight, column: &str, value: &str) -> bool {
    i.filter.as_ref().is_some_and(|f| f.column == column && f.value == value)
}

fn measure_set(i: &Insight) -> BTreeSet<String> {
    i.payload.measures().into_iter().map(String::from).collect()
}

/// Answer id lists of the logically-related rules, by scanning every
/// insight (and every pair for the combo rules).
pub fn logically_related(source: &Insight, space: &InsightSpace) -> BTreeSet<Vec<String>> {
    let all = space.insights();
    let mut out = BTreeSet::new();
    match &source.payload {
        Payload::Extremum(s) => {
            for x in all {
                let Payload::Extremum(p) = &x.payload else { continue };
                for y in all {
                    let Payload::Correlation(c) = &y.payload else { continue };
                    let pair: BTreeSet<String> = [s.measure.clone(), p.measure.clone()].into();
                    let consistent = if c.r > 0.0 { p.polarity == s.polarity } else { p.polarity != s.polarity };
                    if p.group_by == s.group_by
                        && p.measure != s.measure
                        && p.winner == s.winner
                        && p.aggregate == s.aggregate
                        && x.filter == source.filter
                        && measure_set(y) == pair
                        && consistent
                    {
                        out.insert(vec![x.id.clone(), y.id.clone()]);
                    }
                }
            }
            for x in all {
                match &x.payload {
                    Payload::Anomaly(a) if a.measure == s.measure && filter_is(x, &s.group_by, &s.winner) => {
                        out.insert(vec![x.id.clone()]);
                    }
                    Payload::Extremum(p)
                        if p.group_by != s.group_by
                            && p.aggregate.is_some()
                            && p.aggregate == s.aggregate
                            && p.polarity == s.polarity
                            && p.measure == s.measure
                            && filter_is(x, &s.group_by, &s.winner) =>
                    {
                        out.insert(vec![x.id.clone()]);
                    }
                    _ => {}
                }
            }
        }
        Payload::Correlation(s) => {
            let (q1, q2) = (&s.measures[0], &s.measures[1]);
            for x in all {
                for y in all {
                    let (Payload::Correlation(a), Payload::Correlation(b)) = (&x.payload, &y.payload) else { continue };
                    let sa: BTreeSet<&String> = a.measures.iter().collect();
                    let sb: BTreeSet<&String> = b.measures.iter().collect();
                    let q3: Vec<&&String> = sa.iter().filter(|m| **m != q1).collect();
                    if !sa.contains(q1) || sa.contains(q2) || q3.len() != 1 {
                        continue;
                    }
                    let want: BTreeSet<&String> = [q2, *q3[0]].into();
                    if sb == want {
                        out.insert(vec![x.id.clone(), y.id.clone()]);
                    }
                }
            }
        }
        Payload::Anomaly(s) => {
            for x in all {
                if matches!(&x.payload, Payload::Distribution(d) if d.measure == s.measure) && x.filter.is_none() {
                    out.insert(vec![x.id.clone()]);
                }
            }
        }
        Payload::Distribution(s) => {
            for x in all {
                match &x.payload {
                    Payload::Anomaly(a) if a.measure == s.measure && x.filter == source.filter => {
                        out.insert(vec![x.id.clone()]);
                    }
                    Payload::Distribution(d)
                        if d.measure == s.measure && source.filter.is_none() && x.filter.is_some() =>
                    {
                        out.insert(vec![x.id.clone()]);
                    }
                    _ => {}
                }
            }
        }
    }
    out.retain(|ids| !ids.contains(&source.id));
    out
}

/// Insights sharing an attribute with `source`, minus the source and any
/// logically-related answer insight.
pub fn attribute_related(source: &Insight, space: &InsightSpace) -> BTreeSet<String> {
    let logical: BTreeSet<String> = logically_related(source, space).into_iter().flatten().collect();
    space
        .insights()
        .iter()
        .filter(|i| i.id != source.id && !logical.contains(&i.id))
        .filter(|i| !i.attributes.is_disjoint(&source.attributes))
        .map(|i| i.id.clone())
        .collect()
}

/// Expected panel as `(question id, kind, answer id lists)`, built from the
/// brute-force retrievals and sorted by the documented keys.
pub fn panel(
    source: &Insight,
    explored: &BTreeSet<String>,
    space: &InsightSpace,
    k: usize,
) -> Vec<(String, QuestionKind, BTreeSet<Vec<String>>)> {
    struct Q {
        id: String,
        kind: QuestionKind,
        answers: BTreeSet<Vec<String>>,
        aggregated: bool,
        tier: u8,
        strength: f64,
    }
    let rank_of = |ids: &Vec<String>| {
        let first = space.get(&ids[0]).unwrap();
        (first.tier, first.strength)
    };
    let better = |a: (u8, f64), b: (u8, f64)| a.0 < b.0 || (a.0 == b.0 && a.1 > b.1);

    let logical = logically_related(source, space);
    let mut lr: Vec<Q> = Vec::new();
    let explains = matches!(source.payload, Payload::Extremum(_) | Payload::Correlation(_));
    if explains && !logical.is_empty() {
        let mut best = rank_of(logical.iter().next().unwrap());
        for ids in &logical {
            let r = rank_of(ids);
            if better(r, best) {
                best = r;
            }
        }
        lr.push(Q {
            id: format!("why:{}", source.id),
            kind: QuestionKind::LogicallyRelated,
            answers: logical.clone(),
            aggregated: true,
            tier: best.0,
            strength: best.1,
        });
    } else {
        for ids in &logical {
            let (tier, strength) = rank_of(ids);
            lr.push(Q {
                id: format!("lr:{}:{}", source.id, ids.join("+")),
                kind: QuestionKind::LogicallyRelated,
                answers: [ids.clone()].into(),
                aggregated: false,
                tier,
                strength,
            });
        }
    }
    let mut ar: Vec<Q> = attribute_related(source, space)
        .into_iter()
        .map(|id| {
            let i = space.get(&id).unwrap();
            Q {
                id: format!("ar:{}:{}", source.id, id),
                kind: QuestionKind::AttributeRelated,
                answers: [vec![id.clone()]].into(),
                aggregated: false,
                tier: i.tier,
                strength: i.strength,
            }
        })
        .collect();
    let fresh = |q: &Q| q.answers.iter().flatten().any(|id| !explored.contains(id));
    lr.retain(fresh);
    ar.retain(fresh);
    let key = |a: &Q, b: &Q| {
        b.aggregated
            .cmp(&a.aggregated)
            .then(a.tier.cmp(&b.tier))
            .then(b.strength.partial_cmp(&a.strength).unwrap())
            .then(a.id.cmp(&b.id))
    };
    lr.sort_by(key);
    ar.sort_by(key);
    lr.into_iter()
        .chain(ar)
        .take(k)
        .map(|q| (q.id, q.kind, q.answers))
        .collect()
}

pub fn polarity_of(i: &Insight) -> Option<Polarity> {
    match &i.payload {
        Payload::Extremum(p) => Some(p.polarity),
        _ => None,
    }
}
