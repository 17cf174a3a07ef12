//! Sum-product network over one table.
//!
//! Build recursion: when every attribute pair scores below the independence
//! threshold, the node factorizes (product over per-attribute children);
//! otherwise the domain is split in two on the most correlated attribute
//! (sum node) and both halves recurse. Leaves are 1-D histograms. Splits
//! always produce regular, non-overlapping child regions, which is what
//! makes the sum-node distinct rule sound on the split attribute.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::catalog::{AttrKind, ColId, TableData};
use crate::correlate::{rdc_score, CorrelationParams};
use crate::error::{Error, Result};
use crate::leafmodels::histogram::{column_kind, value_bounds, AttrHistogram};
use crate::leafmodels::LeafParams;
use crate::regions::{AttrConstraint, RegularRegion};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum SpnNode {
    Sum {
        children: Vec<SpnNode>,
        /// Row fractions; positive, sum to 1.
        weights: Vec<f64>,
        /// Disjoint constraint on the split attribute, one per child.
        regions: Vec<RegularRegion>,
    },
    Product {
        children: Vec<SpnNode>,
        /// Attribute indices each child covers.
        groups: Vec<Vec<u32>>,
    },
    Leaf {
        attr: u32,
        hist: AttrHistogram,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpnModel {
    pub table: usize,
    pub rows: u64,
    pub root: SpnNode,
}

impl SpnModel {
    /// Deterministic given (data, params). Caller guarantees ≥ 1 row.
    pub fn build(data: &TableData, params: &LeafParams) -> SpnModel {
        let rows: Vec<usize> = (0..data.rows).collect();
        let attrs: Vec<u32> = (0..data.columns.len() as u32).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
        let root = build_node(data, &rows, &attrs, params, &mut rng);
        SpnModel { table: data.table, rows: data.rows as u64, root }
    }

    /// Probability mass of the region (constraints on this table only).
    pub fn prob(&self, region: &RegularRegion) -> Result<f64> {
        prob_node(&self.root, self.table, region)
    }

    /// Distinct count over the projection onto the region's constrained
    /// attributes.
    pub fn distinct(&self, region: &RegularRegion) -> Result<f64> {
        distinct_node(&self.root, self.table, region)
    }
}

fn build_node(
    data: &TableData,
    rows: &[usize],
    attrs: &[u32],
    params: &LeafParams,
    rng: &mut ChaCha8Rng,
) -> SpnNode {
    if attrs.len() == 1 {
        return leaf(data, rows, attrs[0], params);
    }
    if rows.len() < params.spn_min_rows.max(3) {
        return forced_product(data, rows, attrs, params);
    }

    // Pairwise dependence on this node's rows.
    let cols: Vec<Vec<f64>> = attrs
        .iter()
        .map(|&a| rows.iter().map(|&r| data.value(r, a as usize).as_f64()).collect())
        .collect();
    let m = attrs.len();
    let mut score = vec![vec![0.0; m]; m];
    let corr = CorrelationParams { seed: rng.gen(), ..Default::default() };
    for i in 0..m {
        for j in i + 1..m {
            let s = rdc_score(&cols[i], &cols[j], &corr).expect("aligned columns");
            score[i][j] = s;
            score[j][i] = s;
        }
    }

    let all_independent = (0..m).all(|i| (i + 1..m).all(|j| score[i][j] < params.spn_tau));
    if all_independent {
        // Correlation graph has no edges; every component is a single
        // attribute.
        let children = attrs.iter().map(|&a| leaf(data, rows, a, params)).collect();
        return SpnNode::Product { children, groups: attrs.iter().map(|&a| vec![a]).collect() };
    }

    // Split the attribute with the highest total correlation; fall back to
    // the next best when an attribute has only one value in these rows.
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&i, &j| {
        let (ti, tj) = (score[i].iter().sum::<f64>(), score[j].iter().sum::<f64>());
        tj.total_cmp(&ti).then(attrs[i].cmp(&attrs[j]))
    });
    for &i in &order {
        if let Some(node) = try_split(data, rows, attrs, attrs[i], params, rng) {
            return node;
        }
    }
    forced_product(data, rows, attrs, params)
}

/// Two-way split on `attr`: numeric rows split at the median row's value
/// (the value itself goes right), categorical values by seeded bisection.
/// Returns None when the attribute has a single value in `rows`.
fn try_split(
    data: &TableData,
    rows: &[usize],
    attrs: &[u32],
    attr: u32,
    params: &LeafParams,
    rng: &mut ChaCha8Rng,
) -> Option<SpnNode> {
    let col = &data.columns[attr as usize];
    let col_id = ColId::new(data.table, attr as usize);
    let (left_c, right_c): (AttrConstraint, AttrConstraint) = match column_kind(col) {
        AttrKind::Categorical => {
            let mut codes: Vec<u32> = rows
                .iter()
                .map(|&r| match data.value(r, attr as usize) {
                    crate::catalog::Value::Cat(c) => c,
                    _ => unreachable!(),
                })
                .collect();
            codes.sort_unstable();
            codes.dedup();
            if codes.len() < 2 {
                return None;
            }
            codes.shuffle(rng);
            let (l, r) = codes.split_at(codes.len() / 2);
            (AttrConstraint::codes(l.iter().copied()), AttrConstraint::codes(r.iter().copied()))
        }
        kind => {
            let mut vals: Vec<f64> =
                rows.iter().map(|&r| data.value(r, attr as usize).as_f64()).collect();
            vals.sort_by(f64::total_cmp);
            let mut v = vals[vals.len() / 2];
            if v == vals[0] {
                // Median equals the minimum; advance to the next distinct
                // value so the left half is non-empty.
                v = *vals.iter().find(|&&x| x > v)?;
            }
            let (lo, hi) = value_bounds(col, rows);
            AttrConstraint::range(lo, hi).split_at(v, kind)
        }
    };

    let split = |c: AttrConstraint| -> (Vec<usize>, RegularRegion) {
        let region = RegularRegion::full().with(col_id, c);
        let kept: Vec<usize> = rows
            .iter()
            .copied()
            .filter(|&r| region.contains_row(|q| (q == col_id).then(|| data.value(r, q.attr as usize))))
            .collect();
        (kept, region)
    };
    let (left_rows, left_region) = split(left_c);
    let (right_rows, right_region) = split(right_c);
    debug_assert_eq!(left_rows.len() + right_rows.len(), rows.len());

    let n = rows.len() as f64;
    Some(SpnNode::Sum {
        weights: vec![left_rows.len() as f64 / n, right_rows.len() as f64 / n],
        children: vec![
            build_node(data, &left_rows, attrs, params, rng),
            build_node(data, &right_rows, attrs, params, rng),
        ],
        regions: vec![left_region, right_region],
    })
}

/// Stop rule: too few rows to justify more structure — factor every
/// remaining attribute independently.
fn forced_product(data: &TableData, rows: &[usize], attrs: &[u32], params: &LeafParams) -> SpnNode {
    SpnNode::Product {
        children: attrs.iter().map(|&a| leaf(data, rows, a, params)).collect(),
        groups: attrs.iter().map(|&a| vec![a]).collect(),
    }
}

fn leaf(data: &TableData, rows: &[usize], attr: u32, params: &LeafParams) -> SpnNode {
    // Histogram over just this node's rows.
    let col = &data.columns[attr as usize];
    let sub = match col {
        crate::catalog::Column::Int(v) => {
            crate::catalog::Column::Int(rows.iter().map(|&r| v[r]).collect())
        }
        crate::catalog::Column::Real(v) => {
            crate::catalog::Column::Real(rows.iter().map(|&r| v[r]).collect())
        }
        crate::catalog::Column::Cat(v) => {
            crate::catalog::Column::Cat(rows.iter().map(|&r| v[r]).collect())
        }
    };
    SpnNode::Leaf { attr, hist: AttrHistogram::build(&sub, params.buckets) }
}

fn prob_node(node: &SpnNode, table: usize, region: &RegularRegion) -> Result<f64> {
    if region.is_empty() {
        return Ok(0.0);
    }
    match node {
        SpnNode::Leaf { attr, hist } => {
            match region.constraints.get(&ColId::new(table, *attr as usize)) {
                Some(c) => hist.selectivity(c),
                None => Ok(1.0),
            }
        }
        SpnNode::Sum { children, weights, regions } => {
            let mut p = 0.0;
            for ((child, w), reg) in children.iter().zip(weights).zip(regions) {
                let sub = region.intersect(reg)?;
                if sub.is_empty() {
                    continue;
                }
                p += w * prob_node(child, table, &sub)?;
            }
            Ok(p.clamp(0.0, 1.0))
        }
        SpnNode::Product { children, groups } => {
            let mut p = 1.0;
            for (child, group) in children.iter().zip(groups) {
                let scope: std::collections::BTreeSet<ColId> =
                    group.iter().map(|&a| ColId::new(table, a as usize)).collect();
                p *= prob_node(child, table, &region.project(&scope))?;
            }
            Ok(p.clamp(0.0, 1.0))
        }
    }
}

fn distinct_node(node: &SpnNode, table: usize, region: &RegularRegion) -> Result<f64> {
    if region.is_empty() {
        return Ok(0.0);
    }
    match node {
        SpnNode::Leaf { attr, hist } => {
            match region.constraints.get(&ColId::new(table, *attr as usize)) {
                Some(c) => hist.distinct(c),
                None => Err(Error::Estimate(
                    "distinct reached a leaf outside the constrained scope".into(),
                )),
            }
        }
        // Children cover disjoint regular sub-spaces, so their distinct
        // sets are disjoint on the split attribute and simply add. When the
        // query does not constrain the split attribute this overcounts;
        // that is the documented estimation error of the rule.
        SpnNode::Sum { children, regions, .. } => {
            let mut d = 0.0;
            for (child, reg) in children.iter().zip(regions) {
                if region.intersect(reg)?.is_empty() {
                    continue;
                }
                d += distinct_node(child, table, region)?;
            }
            Ok(d)
        }
        // Every constrained group must be counted; each contributes its
        // own distinct factor.
        SpnNode::Product { children, groups } => {
            let mut d = 1.0;
            for (child, group) in children.iter().zip(groups) {
                let touched = group
                    .iter()
                    .any(|&a| region.constraints.contains_key(&ColId::new(table, a as usize)));
                if touched {
                    d *= distinct_node(child, table, region)?;
                }
            }
            Ok(d)
        }
    }
}

/// Structural checks: sum weights sum to 1 and child regions are disjoint.
/// Exposed for tests and the partition-soundness audit.
pub fn validate_structure(model: &SpnModel) -> Result<()> {
    fn walk(node: &SpnNode) -> Result<()> {
        if let SpnNode::Sum { children, weights, regions } = node {
            let total: f64 = weights.iter().sum();
            if (total - 1.0).abs() > 1e-9 {
                return Err(Error::Build(format!("sum weights total {total}")));
            }
            if weights.iter().any(|&w| w < 0.0) {
                return Err(Error::Build("negative sum weight".into()));
            }
            for i in 0..regions.len() {
                for j in i + 1..regions.len() {
                    if !regions[i].intersect(&regions[j])?.is_empty() {
                        return Err(Error::Build("sum child regions overlap".into()));
                    }
                }
            }
            for c in children {
                walk(c)?;
            }
        } else if let SpnNode::Product { children, .. } = node {
            for c in children {
                walk(c)?;
            }
        }
        Ok(())
    }
    walk(&model.root)
}
