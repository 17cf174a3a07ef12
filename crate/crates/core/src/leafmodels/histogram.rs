//! Equi-depth histograms with value-snapped bucket boundaries.
//!
//! Buckets never straddle a value: a boundary always falls between two
//! distinct values, so point lookups on integer data and range queries
//! aligned with bucket edges are exact. Partially covered buckets use the
//! continuous-uniform spread assumption — integer attributes measure
//! coverage by lattice count, real attributes by length.

use serde::{Deserialize, Serialize};

use crate::catalog::{AttrKind, Column, Value};
use crate::error::{Error, Result};
use crate::regions::AttrConstraint;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bucket {
    pub lo: f64,
    pub hi: f64,
    /// Share of the table's rows in [lo, hi].
    pub fraction: f64,
    /// Distinct values in the bucket (≥ 1 whenever fraction > 0).
    pub distinct: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum AttrHistogram {
    Numeric { buckets: Vec<Bucket>, integer: bool },
    /// Per-code frequencies of the values actually seen.
    Categorical { fractions: Vec<(u32, f64)> },
}

impl AttrHistogram {
    /// Build from one column; `bucket_count ≥ 1`. Equi-depth on the sorted
    /// values, closing a bucket only at a value-group boundary.
    pub fn build(column: &Column, bucket_count: usize) -> AttrHistogram {
        match column {
            Column::Cat(codes) => {
                let n = codes.len() as f64;
                let mut counts: std::collections::BTreeMap<u32, usize> = Default::default();
                for &c in codes {
                    *counts.entry(c).or_insert(0) += 1;
                }
                AttrHistogram::Categorical {
                    fractions: counts.into_iter().map(|(c, k)| (c, k as f64 / n)).collect(),
                }
            }
            Column::Int(_) | Column::Real(_) => {
                let integer = matches!(column, Column::Int(_));
                let mut vals: Vec<f64> =
                    (0..column.len()).map(|r| column.get(r).as_f64()).collect();
                vals.sort_by(f64::total_cmp);
                AttrHistogram::Numeric { buckets: equi_depth(&vals, bucket_count), integer }
            }
        }
    }

    /// Fraction of rows with the attribute inside the constraint, in [0,1].
    pub fn selectivity(&self, c: &AttrConstraint) -> Result<f64> {
        match (self, c) {
            (AttrHistogram::Categorical { fractions }, AttrConstraint::Codes(set)) => {
                Ok(fractions.iter().filter(|(code, _)| set.contains(code)).map(|(_, f)| f).sum())
            }
            (AttrHistogram::Numeric { buckets, integer }, AttrConstraint::Intervals(ivs)) => {
                let mut p = 0.0;
                for b in buckets {
                    p += b.fraction * coverage(b, ivs, *integer);
                }
                Ok(p.clamp(0.0, 1.0))
            }
            _ => Err(Error::Estimate("constraint kind does not match histogram kind".into())),
        }
    }

    /// Estimated distinct values inside the constraint: full buckets count
    /// their recorded distincts, partial buckets a proportional share.
    pub fn distinct(&self, c: &AttrConstraint) -> Result<f64> {
        match (self, c) {
            (AttrHistogram::Categorical { fractions }, AttrConstraint::Codes(set)) => {
                Ok(fractions.iter().filter(|(code, f)| set.contains(code) && *f > 0.0).count()
                    as f64)
            }
            (AttrHistogram::Numeric { buckets, integer }, AttrConstraint::Intervals(ivs)) => {
                let mut d = 0.0;
                for b in buckets {
                    d += b.distinct * coverage(b, ivs, *integer);
                }
                Ok(d)
            }
            _ => Err(Error::Estimate("constraint kind does not match histogram kind".into())),
        }
    }

    pub fn full_distinct(&self) -> f64 {
        match self {
            AttrHistogram::Categorical { fractions } => fractions.len() as f64,
            AttrHistogram::Numeric { buckets, .. } => buckets.iter().map(|b| b.distinct).sum(),
        }
    }
}

fn equi_depth(sorted: &[f64], bucket_count: usize) -> Vec<Bucket> {
    let n = sorted.len();
    if n == 0 {
        return Vec::new();
    }
    let target = n.div_ceil(bucket_count.max(1));
    let mut buckets = Vec::new();
    let (mut start, mut i) = (0, 0);
    let mut distinct = 0.0;
    while i < n {
        // Advance over one value group.
        let v = sorted[i];
        let mut j = i;
        while j + 1 < n && sorted[j + 1] == v {
            j += 1;
        }
        distinct += 1.0;
        let filled = j + 1 - start >= target;
        let last_group = j + 1 == n;
        if filled || last_group {
            buckets.push(Bucket {
                lo: sorted[start],
                hi: v,
                fraction: (j + 1 - start) as f64 / n as f64,
                distinct,
            });
            start = j + 1;
            distinct = 0.0;
        }
        i = j + 1;
    }
    buckets
}

/// Covered share of a bucket under a disjoint interval list. A zero-measure
/// bucket (single real value) is all-or-nothing; otherwise the uniform
/// spread over the lattice (integer) or the length (real).
fn coverage(b: &Bucket, ivs: &[crate::regions::Interval], integer: bool) -> f64 {
    let measure = |lo: f64, hi: f64| -> f64 {
        if integer {
            (hi.floor() - lo.ceil() + 1.0).max(0.0)
        } else {
            (hi - lo).max(0.0)
        }
    };
    let total = measure(b.lo, b.hi);
    if total == 0.0 {
        return if ivs.iter().any(|iv| iv.lo <= b.lo && b.lo <= iv.hi) { 1.0 } else { 0.0 };
    }
    let covered: f64 =
        ivs.iter().map(|iv| measure(iv.lo.max(b.lo), iv.hi.min(b.hi))).sum();
    (covered / total).clamp(0.0, 1.0)
}

/// Standalone multi-attribute histogram model: per-attribute equi-depth
/// histograms combined under attribute-value independence (selectivities
/// multiply; distinct counts multiply over constrained attributes).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistogramModel {
    pub table: usize,
    pub attrs: Vec<AttrHistogram>,
    pub rows: u64,
}

impl HistogramModel {
    pub fn build(data: &crate::catalog::TableData, bucket_count: usize) -> HistogramModel {
        HistogramModel {
            table: data.table,
            attrs: data.columns.iter().map(|c| AttrHistogram::build(c, bucket_count)).collect(),
            rows: data.rows as u64,
        }
    }

    pub fn selectivity(&self, attr: usize, c: &AttrConstraint) -> Result<f64> {
        self.attrs[attr].selectivity(c)
    }
}

/// `kind` as estimators need it, recoverable from stored columns.
pub fn column_kind(column: &Column) -> AttrKind {
    match column {
        Column::Int(_) => AttrKind::Integer,
        Column::Real(_) => AttrKind::Real,
        Column::Cat(_) => AttrKind::Categorical,
    }
}

/// Observed min and max of a numeric column slice, as constraint bounds.
pub fn value_bounds(column: &Column, rows: &[usize]) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for &r in rows {
        let v = column.get(r).as_f64();
        lo = lo.min(v);
        hi = hi.max(v);
    }
    (lo, hi)
}

pub fn value_of(column: &Column, row: usize) -> Value {
    column.get(row)
}
