//! Pluggable single-table estimators. Every leaf answers the same two
//! questions about a region of its table's domain — probability mass and
//! distinct count — so the join-level machinery can mix estimator kinds
//! freely: an exact scan for one table, a histogram or SPN for another.

pub mod histogram;
pub mod spn;

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::catalog::{ColId, TableData};
use crate::correlate::sample_indices;
use crate::error::{Error, Result};
use crate::regions::RegularRegion;

pub use histogram::{AttrHistogram, HistogramModel};
pub use spn::{SpnModel, SpnNode};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LeafKind {
    Exact,
    Histogram,
    Sample,
    Spn,
}

impl std::str::FromStr for LeafKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<LeafKind> {
        match s {
            "exact" => Ok(LeafKind::Exact),
            "histogram" => Ok(LeafKind::Histogram),
            "sample" => Ok(LeafKind::Sample),
            "spn" => Ok(LeafKind::Spn),
            other => Err(Error::Build(format!(
                "unknown leaf kind {other:?} (expected exact|histogram|sample|spn)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct LeafParams {
    /// Equi-depth bucket count for histogram models and SPN leaves.
    pub buckets: usize,
    /// Reservoir size for sample models.
    pub sample_n: usize,
    /// Independence threshold for SPN factorization.
    pub spn_tau: f64,
    /// Stop splitting below this many rows.
    pub spn_min_rows: usize,
    pub seed: u64,
}

impl Default for LeafParams {
    fn default() -> Self {
        LeafParams { buckets: 32, sample_n: 1000, spn_tau: 0.3, spn_min_rows: 256, seed: 0 }
    }
}

impl LeafParams {
    pub fn validate(&self) -> Result<()> {
        if self.buckets < 1 {
            return Err(Error::Build("bucket count must be at least 1".into()));
        }
        if self.sample_n < 1 {
            return Err(Error::Build("sample size must be at least 1".into()));
        }
        if !(self.spn_tau > 0.0 && self.spn_tau < 1.0) {
            return Err(Error::Build("independence threshold must lie in (0,1)".into()));
        }
        Ok(())
    }
}

/// Exact scan over the full table; oracle-grade answers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExactModel {
    pub data: TableData,
}

/// Uniform row sample; answers are matching fractions of the sample.
/// Distinct counts come from the sample alone, an underestimate unless the
/// sample covers the table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleModel {
    pub sample: TableData,
    pub total_rows: u64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum LeafModel {
    Exact(ExactModel),
    Histogram(HistogramModel),
    Sample(SampleModel),
    Spn(SpnModel),
    /// Built from an empty table: probability 0 for any constrained region,
    /// 1 for the full region, distinct 0.
    Zero { table: usize, kind: LeafKind },
}

impl LeafModel {
    pub fn build(data: &TableData, kind: LeafKind, params: &LeafParams) -> Result<LeafModel> {
        params.validate()?;
        if data.rows == 0 {
            return Ok(LeafModel::Zero { table: data.table, kind });
        }
        Ok(match kind {
            LeafKind::Exact => LeafModel::Exact(ExactModel { data: data.clone() }),
            LeafKind::Histogram => {
                LeafModel::Histogram(HistogramModel::build(data, params.buckets))
            }
            LeafKind::Sample => LeafModel::Sample(SampleModel {
                sample: data.subset(&sample_indices(data.rows, params.sample_n, params.seed)),
                total_rows: data.rows as u64,
                seed: params.seed,
            }),
            LeafKind::Spn => LeafModel::Spn(SpnModel::build(data, params)),
        })
    }

    pub fn table(&self) -> usize {
        match self {
            LeafModel::Exact(m) => m.data.table,
            LeafModel::Histogram(m) => m.table,
            LeafModel::Sample(m) => m.sample.table,
            LeafModel::Spn(m) => m.table,
            LeafModel::Zero { table, .. } => *table,
        }
    }

    pub fn kind(&self) -> LeafKind {
        match self {
            LeafModel::Exact(_) => LeafKind::Exact,
            LeafModel::Histogram(_) => LeafKind::Histogram,
            LeafModel::Sample(_) => LeafKind::Sample,
            LeafModel::Spn(_) => LeafKind::Spn,
            LeafModel::Zero { kind, .. } => *kind,
        }
    }

    pub fn row_count(&self) -> u64 {
        match self {
            LeafModel::Exact(m) => m.data.rows as u64,
            LeafModel::Histogram(m) => m.rows,
            LeafModel::Sample(m) => m.total_rows,
            LeafModel::Spn(m) => m.rows,
            LeafModel::Zero { .. } => 0,
        }
    }

    /// Probability that a row of this table falls in the region. The region
    /// may only constrain this table's attributes.
    pub fn prob(&self, region: &RegularRegion) -> Result<f64> {
        self.check_scope(region)?;
        if region.is_unconstrained() {
            return Ok(1.0);
        }
        if region.is_empty() {
            return Ok(0.0);
        }
        let p = match self {
            LeafModel::Exact(m) => matching_rows(&m.data, region).len() as f64 / m.data.rows as f64,
            LeafModel::Sample(m) => {
                matching_rows(&m.sample, region).len() as f64 / m.sample.rows as f64
            }
            LeafModel::Histogram(m) => {
                let mut p = 1.0;
                for (col, c) in &region.constraints {
                    p *= m.selectivity(col.attr as usize, c)?;
                }
                p
            }
            LeafModel::Spn(m) => m.prob(region)?,
            LeafModel::Zero { .. } => 0.0,
        };
        Ok(p.clamp(0.0, 1.0))
    }

    /// Distinct count of the projection onto the region's constrained
    /// attributes, over rows matching the region.
    pub fn distinct(&self, region: &RegularRegion) -> Result<f64> {
        self.check_scope(region)?;
        if region.is_unconstrained() {
            return Err(Error::Estimate(
                "distinct requires at least one constrained attribute".into(),
            ));
        }
        if region.is_empty() {
            return Ok(0.0);
        }
        Ok(match self {
            LeafModel::Exact(m) => distinct_rows(&m.data, region),
            LeafModel::Sample(m) => distinct_rows(&m.sample, region),
            LeafModel::Histogram(m) => {
                // Per-attribute estimates multiply, mirroring the
                // attribute-value-independence rule used for probabilities.
                let mut d = 1.0;
                for (col, c) in &region.constraints {
                    d *= m.attrs[col.attr as usize].distinct(c)?;
                }
                d
            }
            LeafModel::Spn(m) => m.distinct(region)?,
            LeafModel::Zero { .. } => 0.0,
        })
    }

    fn check_scope(&self, region: &RegularRegion) -> Result<()> {
        let table = self.table();
        for col in region.scope() {
            if col.table as usize != table {
                return Err(Error::Estimate(format!(
                    "leaf model for table {table} got a constraint on table {}",
                    col.table
                )));
            }
        }
        Ok(())
    }
}

fn matching_rows(data: &TableData, region: &RegularRegion) -> Vec<usize> {
    (0..data.rows)
        .filter(|&r| region.contains_row(|c| Some(data.value(r, c.attr as usize))))
        .collect()
}

fn distinct_rows(data: &TableData, region: &RegularRegion) -> f64 {
    let scope: Vec<ColId> = region.scope().collect();
    let mut seen: HashSet<Vec<u64>> = HashSet::new();
    for r in matching_rows(data, region) {
        seen.insert(scope.iter().map(|c| data.value(r, c.attr as usize).key_bits()).collect());
    }
    seen.len() as f64
}
