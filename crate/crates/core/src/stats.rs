//! Deterministic statistics over a [`Table`]: group aggregation, Pearson
//! correlation, Tukey outlier fences and modal-range binning.
//!
//! Every function takes at most one categorical equality [`Filter`] and works
//! on the non-missing values left after filtering.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::dataset::{Column, Role, Table, Value};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum StatsError {
    #[error("unknown column '{0}'")]
    UnknownColumn(String),
    #[error("column '{column}' is {found}, expected {expected}")]
    RoleMismatch {
        column: String,
        expected: Role,
        found: Role,
    },
    #[error("insufficient data: need {needed} values, have {found}")]
    InsufficientData { needed: usize, found: usize },
    #[error("zero variance")]
    ZeroVariance,
    #[error("the two columns must differ ('{0}')")]
    SameColumn(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

/// Single-level drill-down: keep rows whose categorical `column` equals `value`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Filter {
    pub column: String,
    pub value: String,
}

impl Filter {
    pub fn new(column: impl Into<String>, value: impl Into<String>) -> Self {
        Self {
            column: column.into(),
            value: value.into(),
        }
    }
}

impl fmt::Display for Filter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}={}", self.column, self.value)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Aggregate {
    Mean,
    Sum,
    Count,
}

impl Aggregate {
    pub fn as_str(self) -> &'static str {
        match self {
            Aggregate::Mean => "mean",
            Aggregate::Sum => "sum",
            Aggregate::Count => "count",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct GroupAggregate {
    pub group_by: String,
    pub measure: String,
    pub aggregate: Aggregate,
    pub entries: BTreeMap<String, f64>,
    pub support_counts: BTreeMap<String, usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Correlation {
    pub r: f64,
    pub n: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Outlier {
    pub row: usize,
    pub value: f64,
    /// Distance beyond the violated fence in IQR units.
    pub exceedance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct TukeyOutliers {
    pub q1: f64,
    pub q3: f64,
    pub lower_fence: f64,
    pub upper_fence: f64,
    pub outliers: Vec<Outlier>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ModalRange {
    pub lo: f64,
    pub hi: f64,
    pub achieved_coverage: f64,
    /// Width of the histogram bins; 0 for a zero-width distribution.
    pub bin_width: f64,
}

pub(crate) fn column_with_role<'a>(
    table: &'a Table,
    name: &str,
    role: Role,
) -> Result<&'a Column, StatsError> {
    let column = table
        .column(name)
        .ok_or_else(|| StatsError::UnknownColumn(name.to_string()))?;
    if column.role != role {
        return Err(StatsError::RoleMismatch {
            column: name.to_string(),
            expected: role,
            found: column.role,
        });
    }
    Ok(column)
}

/// Row indices that pass `filter`, in table order.
pub fn filtered_rows(table: &Table, filter: Option<&Filter>) -> Result<Vec<usize>, StatsError> {
    let Some(filter) = filter else {
        return Ok((0..table.row_count).collect());
    };
    let column = column_with_role(table, &filter.column, Role::Categorical)?;
    Ok(column
        .values
        .iter()
        .enumerate()
        .filter(|(_, v)| matches!(v, Value::Text(s) if *s == filter.value))
        .map(|(i, _)| i)
        .collect())
}

/// `(row, value)` pairs of a quantitative column after filtering.
pub fn measure_values(
    table: &Table,
    measure: &str,
    filter: Option<&Filter>,
) -> Result<Vec<(usize, f64)>, StatsError> {
    let column = column_with_role(table, measure, Role::Quantitative)?;
    let rows = filtered_rows(table, filter)?;
    Ok(rows
        .into_iter()
        .filter_map(|i| column.values[i].as_number().map(|x| (i, x)))
        .collect())
}

pub fn group_aggregate(
    table: &Table,
    group_by: &str,
    measure: &str,
    aggregate: Aggregate,
    filter: Option<&Filter>,
) -> Result<GroupAggregate, StatsError> {
    let groups = column_with_role(table, group_by, Role::Categorical)?;
    let values = measure_values(table, measure, filter)?;

    let mut sums: BTreeMap<String, (f64, usize)> = BTreeMap::new();
    for (row, x) in values {
        let Some(key) = groups.values[row].as_key() else { continue };
        let slot = sums.entry(key).or_insert((0.0, 0));
        slot.0 += x;
        slot.1 += 1;
    }

    let entries = sums
        .iter()
        .map(|(k, &(sum, count))| {
            let v = match aggregate {
                Aggregate::Mean => sum / count as f64,
                Aggregate::Sum => sum,
                Aggregate::Count => count as f64,
            };
            (k.clone(), v)
        })
        .collect();
    let support_counts = sums.into_iter().map(|(k, (_, c))| (k, c)).collect();

    Ok(GroupAggregate {
        group_by: group_by.to_string(),
        measure: measure.to_string(),
        aggregate,
        entries,
        support_counts,
    })
}

/// Pearson product-moment correlation over rows where both values are present.
pub fn pearson(
    table: &Table,
    first: &str,
    second: &str,
    filter: Option<&Filter>,
) -> Result<Correlation, StatsError> {
    if first == second {
        return Err(StatsError::SameColumn(first.to_string()));
    }
    let a = column_with_role(table, first, Role::Quantitative)?;
    let b = column_with_role(table, second, Role::Quantitative)?;
    let pairs: Vec<(f64, f64)> = filtered_rows(table, filter)?
        .into_iter()
        .filter_map(|i| Some((a.values[i].as_number()?, b.values[i].as_number()?)))
        .collect();
    let n = pairs.len();
    if n < 2 {
        return Err(StatsError::InsufficientData { needed: 2, found: n });
    }

    let mean_x = pairs.iter().map(|p| p.0).sum::<f64>() / n as f64;
    let mean_y = pairs.iter().map(|p| p.1).sum::<f64>() / n as f64;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for &(x, y) in &pairs {
        let dx = x - mean_x;
        let dy = y - mean_y;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(StatsError::ZeroVariance);
    }
    let r = (sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0);
    Ok(Correlation { r, n })
}

/// Quantile of sorted data by linear interpolation between closest ranks
/// (position `p * (n - 1)`, the R-7 / NumPy default). The exclusive-median
/// hinge variant is not used.
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    assert!(!sorted.is_empty());
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Rows beyond the Tukey fences `Q1 - k*IQR` and `Q3 + k*IQR`.
///
/// When the IQR is zero every value that differs from the median is an
/// outlier with exceedance 1.
pub fn tukey_outliers(
    table: &Table,
    measure: &str,
    k: f64,
    filter: Option<&Filter>,
) -> Result<TukeyOutliers, StatsError> {
    // also rejects NaN
    if k.is_nan() || k <= 0.0 {
        return Err(StatsError::InvalidParameter(format!("fence factor must be > 0, got {k}")));
    }
    let values = measure_values(table, measure, filter)?;
    if values.len() < 4 {
        return Err(StatsError::InsufficientData { needed: 4, found: values.len() });
    }
    let mut sorted: Vec<f64> = values.iter().map(|v| v.1).collect();
    sorted.sort_by(f64::total_cmp);
    let q1 = quantile_sorted(&sorted, 0.25);
    let q3 = quantile_sorted(&sorted, 0.75);
    let iqr = q3 - q1;

    let outliers = if iqr == 0.0 {
        let median = quantile_sorted(&sorted, 0.5);
        values
            .iter()
            .filter(|(_, x)| *x != median)
            .map(|&(row, value)| Outlier { row, value, exceedance: 1.0 })
            .collect()
    } else {
        let (lower, upper) = (q1 - k * iqr, q3 + k * iqr);
        values
            .iter()
            .filter_map(|&(row, value)| {
                let beyond = if value < lower {
                    lower - value
                } else if value > upper {
                    value - upper
                } else {
                    return None;
                };
                Some(Outlier { row, value, exceedance: beyond / iqr })
            })
            .collect()
    };

    Ok(TukeyOutliers {
        q1,
        q3,
        lower_fence: q1 - k * iqr,
        upper_fence: q3 + k * iqr,
        outliers,
    })
}

/// Smallest `m * 10^e` with `m` in {1, 2, 2.5, 5} that is at least `raw`.
pub fn nice_step(raw: f64) -> f64 {
    assert!(raw > 0.0 && raw.is_finite());
    let base = 10f64.powi(raw.log10().floor() as i32);
    [1.0, 2.0, 2.5, 5.0, 10.0]
        .into_iter()
        .map(|m| m * base)
        .find(|&s| s >= raw * (1.0 - 1e-12))
        .unwrap_or(10.0 * base)
}

/// Equal-width bins aligned to multiples of a nice step.
#[derive(Debug, Clone, PartialEq)]
pub struct Bins {
    pub step: f64,
    /// Index of the first bin's lower edge in units of `step`.
    pub first: i64,
    pub counts: Vec<usize>,
}

impl Bins {
    pub fn edge(&self, i: usize) -> f64 {
        (self.first + i as i64) as f64 * self.step
    }

    fn index_of(&self, v: f64) -> usize {
        let mut idx = ((v / self.step).floor() as i64 - self.first).max(0) as usize;
        while idx > 0 && v < self.edge(idx) {
            idx -= 1;
        }
        while v >= self.edge(idx + 1) {
            idx += 1;
        }
        idx
    }

    /// Bins `values` (min < max) with about `bin_count` bins.
    pub fn build(values: &[f64], bin_count: usize) -> Self {
        let min = values.iter().copied().fold(f64::INFINITY, f64::min);
        let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let step = nice_step((max - min) / bin_count as f64);
        let mut bins = Bins {
            step,
            first: (min / step).floor() as i64,
            counts: Vec::new(),
        };
        while bins.edge(0) > min {
            bins.first -= 1;
        }
        bins.counts = vec![0; bins.index_of(max) + 1];
        for &v in values {
            let i = bins.index_of(v);
            bins.counts[i] += 1;
        }
        bins
    }
}

/// Shortest run of consecutive nice-width bins holding at least `coverage` of
/// the values. Ties go to the higher achieved coverage, then the lower edge.
pub fn modal_range(
    table: &Table,
    measure: &str,
    coverage: f64,
    bin_count: usize,
    filter: Option<&Filter>,
) -> Result<ModalRange, StatsError> {
    if !(coverage > 0.0 && coverage <= 1.0) {
        return Err(StatsError::InvalidParameter(format!("coverage must be in (0, 1], got {coverage}")));
    }
    if bin_count < 2 {
        return Err(StatsError::InvalidParameter(format!("bin count must be >= 2, got {bin_count}")));
    }
    let values: Vec<f64> = measure_values(table, measure, filter)?.into_iter().map(|v| v.1).collect();
    modal_range_of(&values, coverage, bin_count)
}

pub fn modal_range_of(values: &[f64], coverage: f64, bin_count: usize) -> Result<ModalRange, StatsError> {
    if values.is_empty() {
        return Err(StatsError::InsufficientData { needed: 1, found: 0 });
    }
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if min == max {
        return Ok(ModalRange { lo: min, hi: max, achieved_coverage: 1.0, bin_width: 0.0 });
    }

    let bins = Bins::build(values, bin_count);
    let total = values.len() as f64;
    // (run length, count, start)
    let mut best: Option<(usize, usize, usize)> = None;
    for start in 0..bins.counts.len() {
        let mut count = 0;
        for end in start..bins.counts.len() {
            count += bins.counts[end];
            if count as f64 / total >= coverage {
                let len = end - start + 1;
                let better = match best {
                    None => true,
                    Some((l, c, _)) => len < l || (len == l && count > c),
                };
                if better {
                    best = Some((len, count, start));
                }
                break;
            }
        }
    }
    let (len, count, start) = best.expect("the full bin range always reaches the coverage");
    Ok(ModalRange {
        lo: bins.edge(start),
        hi: bins.edge(start + len),
        achieved_coverage: count as f64 / total,
        bin_width: bins.step,
    })
}
