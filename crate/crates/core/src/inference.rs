//! Query-time estimation over a decomposition tree.
//!
//! Evaluation recurses the tree with the query's effective join set (the
//! minimal connected cover of its listed tables). A node whose S side the
//! cover never touches delegates entirely to its T child and vice versa;
//! a node touched on both sides combines the children through its stored
//! fanout statistics. Combination never consults base data: child calls
//! bottom out in the per-table leaf models.
//!
//! When the cover reaches only part of a side, the child reports a
//! probability over its cover-restricted sub-join while this node's |T|,
//! |S| and fanout statistics describe the full side. The mixture is the
//! method's approximation for partially covered sides; results stay
//! deterministic, and covers that span whole sides (every two-table query,
//! and any query whose effective set fills the sides it touches) are
//! unaffected.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::catalog::Catalog;
use crate::error::{Error, Result};
use crate::gluetree::{DecompNode, DecompositionTree};
use crate::join::minimal_cover;
use crate::regions::{Query, RegularRegion};

/// How a node combines its two sides: through per-context ratios, or by
/// treating the sides as independent after fanout correction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EstimationMode {
    Independent,
    Context,
}

impl fmt::Display for EstimationMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EstimationMode::Independent => "independent",
            EstimationMode::Context => "context",
        })
    }
}

impl FromStr for EstimationMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "independent" => Ok(EstimationMode::Independent),
            "context" => Ok(EstimationMode::Context),
            other => Err(Error::Estimate(format!(
                "unknown estimation mode {other:?} (expected context or independent)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct EstimateReport {
    pub cardinality: f64,
    /// Probability over the effective join; absent for distinct counts.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub probability: Option<f64>,
    pub effective_tables: Vec<usize>,
    pub leaf_calls: u64,
    pub cache_hits: u64,
    pub elapsed_ms: f64,
}

/// Shared memo for repeated sub-evaluations, keyed by node identity, the
/// cover restricted to the node's tables, and the query region projected
/// onto them. Hits return the stored (probability, rows) pair unchanged,
/// so cached and uncached evaluation agree bit for bit.
#[derive(Debug, Default)]
pub struct SubplanCache {
    map: HashMap<(usize, u64, String), (f64, f64)>,
    pub leaf_calls: u64,
    pub cache_hits: u64,
}

impl SubplanCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }
}

struct EvalCtx<'a> {
    mode: EstimationMode,
    cache: Option<&'a mut SubplanCache>,
    leaf_calls: u64,
    cache_hits: u64,
}

/// Estimate the query's cardinality (or distinct count) over the join of
/// its effective table set. Uses the tree's build-time estimation mode.
pub fn estimate(
    tree: &DecompositionTree,
    query: &Query,
    cache: Option<&mut SubplanCache>,
) -> Result<EstimateReport> {
    let started = Instant::now();
    let cover = cover_mask(&tree.catalog, query)?;
    let mut ctx = EvalCtx { mode: tree.config.mode, cache, leaf_calls: 0, cache_hits: 0 };

    let (cardinality, probability) = if query.distinct {
        let d = distinct_node(&tree.root, &query.region, cover, &mut ctx)?;
        (d, None)
    } else {
        let (p, rows) = eval_node_inner(&tree.root, &query.region, cover, 0, &mut ctx)?;
        (p * rows, Some(p))
    };

    if let Some(c) = ctx.cache.as_deref_mut() {
        c.leaf_calls += ctx.leaf_calls;
        c.cache_hits += ctx.cache_hits;
    }
    Ok(EstimateReport {
        cardinality,
        probability,
        effective_tables: (0..64).filter(|t| cover & (1 << t) != 0).collect(),
        leaf_calls: ctx.leaf_calls,
        cache_hits: ctx.cache_hits,
        elapsed_ms: started.elapsed().as_secs_f64() * 1e3,
    })
}

/// Probability of `region` over a subtree's full join, outside any query
/// context (used for build-time precomputation and diagnostics).
pub fn subtree_prob(node: &DecompNode, region: &RegularRegion, mode: EstimationMode) -> Result<f64> {
    let mut ctx = EvalCtx { mode, cache: None, leaf_calls: 0, cache_hits: 0 };
    Ok(eval_node_inner(node, region, node.tables_mask(), 0, &mut ctx)?.0)
}

fn cover_mask(catalog: &Catalog, query: &Query) -> Result<u64> {
    let n = catalog.tables.len();
    if let Some(&t) = query.tables.iter().find(|&&t| t >= n) {
        return Err(Error::Estimate(format!("query references unknown table index {t}")));
    }
    Ok(minimal_cover(catalog, &query.tables).iter().fold(0u64, |m, &t| m | (1 << t)))
}

fn eval_node_inner(
    node: &DecompNode,
    region: &RegularRegion,
    cover: u64,
    id: usize,
    ctx: &mut EvalCtx<'_>,
) -> Result<(f64, f64)> {
    let node_mask = node.tables_mask();
    let local = region.project_tables(node_mask);
    let key = (id, cover & node_mask, local.canonical_key());
    if let Some(c) = ctx.cache.as_deref_mut() {
        if let Some(&hit) = c.map.get(&key) {
            ctx.cache_hits += 1;
            return Ok(hit);
        }
    }

    let out = match node {
        DecompNode::Leaf { model, .. } => {
            ctx.leaf_calls += 1;
            (model.prob(&local)?, model.row_count() as f64)
        }
        DecompNode::Inner { left, right, t_tables, s_tables, .. } => {
            let t_touched = cover & t_tables != 0;
            let s_touched = cover & s_tables != 0;
            if !t_touched && !s_touched {
                return Err(Error::Estimate("evaluation reached an uncovered node".into()));
            }
            if !s_touched {
                eval_node_inner(left, region, cover, id + 1, ctx)?
            } else if !t_touched {
                eval_node_inner(right, region, cover, id + 1 + left.node_count(), ctx)?
            } else {
                combine(node, region, cover, id, ctx)?
            }
        }
    };
    if let Some(c) = ctx.cache.as_deref_mut() {
        c.map.insert(key, out);
    }
    Ok(out)
}

/// Combine the two sides of an inner node touched on both sides.
fn combine(
    node: &DecompNode,
    region: &RegularRegion,
    cover: u64,
    id: usize,
    ctx: &mut EvalCtx<'_>,
) -> Result<(f64, f64)> {
    let DecompNode::Inner {
        left,
        right,
        t_tables,
        s_tables,
        contexts,
        t_parts,
        s_parts,
        e_t,
        e_s,
        m,
        m_null,
        ctx_denom,
        smass_full,
        s_norm,
        t_rows,
        s_rows,
        w_rows,
        ..
    } = node
    else {
        unreachable!("combine is only called on inner nodes");
    };
    let q_t = region.project_tables(*t_tables);
    let q_s = region.project_tables(*s_tables);
    let t_open = q_t.is_unconstrained();
    let s_open = q_s.is_unconstrained();
    if t_open && s_open {
        return Ok((1.0, *w_rows));
    }

    let right_id = id + 1 + left.node_count();

    // T-side mass per part: Pr_child(Q_T ∩ T_k), sparse over nonempty
    // intersections.
    let mut pt: Vec<(usize, f64)> = Vec::new();
    if !t_open {
        for (k, part) in t_parts.iter().enumerate() {
            let r = q_t.intersect(part)?;
            if r.is_empty() {
                continue;
            }
            let (p, _) = eval_node_inner(left, &r, cover, id + 1, ctx)?;
            if p > 0.0 {
                pt.push((k, p));
            }
        }
    }

    // S-side mass of q restricted to one context:
    // (|S|/|W|) · Σ_j Pr_child(q_s ∩ L_i ∩ S_j) · e_S[j].
    let smass = |ctx_region: &RegularRegion, ctx: &mut EvalCtx<'_>| -> Result<f64> {
        let mut sum = 0.0;
        for (j, part) in s_parts.iter().enumerate() {
            let r = ctx_region.intersect(part)?;
            if r.is_empty() {
                continue;
            }
            let (p, _) = eval_node_inner(right, &r, cover, right_id, ctx)?;
            sum += p * e_s[j];
        }
        Ok(s_rows / w_rows * sum)
    };

    let prob = match ctx.mode {
        EstimationMode::Context => {
            // Per-context ratio: how much the T-side restriction shifts
            // this context's share of the join. An unconstrained T side
            // leaves every context untouched (ratio 1 regardless of its
            // denominator, which matters for purely dangling contexts).
            let ratio = |i: usize| -> f64 {
                if t_open {
                    return 1.0;
                }
                if ctx_denom[i] <= 0.0 {
                    return 0.0;
                }
                let num: f64 = pt.iter().map(|&(k, p)| p * m[k][i]).sum();
                num / ctx_denom[i]
            };
            if s_open {
                // Paired mass context by context, plus the rows whose S
                // side matches no context (null-extended and out-of-scope
                // partners), which an unconstrained S side admits.
                let paired: f64 =
                    (0..contexts.len()).map(|i| smass_full[i] * ratio(i)).sum();
                let null_mass: f64 = pt.iter().map(|&(k, p)| p * m_null[k]).sum();
                paired + t_rows / w_rows * null_mass
            } else {
                let mut total = 0.0;
                for (i, l) in contexts.iter().enumerate() {
                    let restricted = q_s.intersect(l)?;
                    if restricted.is_empty() {
                        continue;
                    }
                    total += smass(&restricted, ctx)? * ratio(i);
                }
                total
            }
        }
        EstimationMode::Independent => {
            let p_t = if t_open {
                1.0
            } else {
                let sum: f64 = pt.iter().map(|&(k, p)| p * e_t[k]).sum();
                t_rows / w_rows * sum
            };
            let p_s = if s_open {
                1.0
            } else if *s_norm > 0.0 {
                let mut total = 0.0;
                for l in contexts {
                    let restricted = q_s.intersect(l)?;
                    if restricted.is_empty() {
                        continue;
                    }
                    total += smass(&restricted, ctx)?;
                }
                total / s_norm
            } else {
                0.0
            };
            p_t * p_s
        }
    };
    Ok((prob.clamp(0.0, 1.0), *w_rows))
}

/// Distinct-count recursion. Per context, the T side contributes the sum
/// of child distinct counts over parts that scatter into the context (in
/// independent mode: that scatter at all), and the S side the sum over
/// parts with any scatter back. Sides the query leaves unconstrained
/// contribute a factor of one.
fn distinct_node(
    node: &DecompNode,
    region: &RegularRegion,
    cover: u64,
    ctx: &mut EvalCtx<'_>,
) -> Result<f64> {
    match node {
        DecompNode::Leaf { model, .. } => {
            ctx.leaf_calls += 1;
            model.distinct(&region.project_tables(1 << model.table()))
        }
        DecompNode::Inner {
            left,
            right,
            t_tables,
            s_tables,
            contexts,
            t_parts,
            s_parts,
            m,
            t_scatter,
            s_scatter,
            ..
        } => {
            let t_touched = cover & t_tables != 0;
            let s_touched = cover & s_tables != 0;
            if !s_touched {
                return distinct_node(left, region, cover, ctx);
            }
            if !t_touched {
                return distinct_node(right, region, cover, ctx);
            }
            let q_t = region.project_tables(*t_tables);
            let q_s = region.project_tables(*s_tables);

            // Child distinct per T part, computed lazily: in context mode
            // the same value enters several contexts' indicator sums.
            let mut dis_t: Vec<Option<f64>> = vec![None; t_parts.len()];
            let mut dis_t_at = |k: usize, ctx: &mut EvalCtx<'_>| -> Result<f64> {
                if let Some(d) = dis_t[k] {
                    return Ok(d);
                }
                let r = q_t.intersect(&t_parts[k])?;
                let d = if r.is_empty() { 0.0 } else { distinct_node(left, &r, cover, ctx)? };
                dis_t[k] = Some(d);
                Ok(d)
            };

            if q_s.is_unconstrained() {
                // Only the T side carries distinct scope; parts that
                // scatter nothing produce no join rows to count.
                let mut total = 0.0;
                for (k, &scatter) in t_scatter.iter().enumerate() {
                    if scatter > 0.0 {
                        total += dis_t_at(k, ctx)?;
                    }
                }
                return Ok(total);
            }

            let t_constrained = !q_t.is_unconstrained();
            let mut total = 0.0;
            for (i, l) in contexts.iter().enumerate() {
                let in_ctx = q_s.intersect(l)?;
                if in_ctx.is_empty() {
                    continue;
                }
                let t_factor = if !t_constrained {
                    1.0
                } else {
                    let mut sum = 0.0;
                    for k in 0..t_parts.len() {
                        let scatters = match ctx.mode {
                            EstimationMode::Context => m[k][i] > 0.0,
                            EstimationMode::Independent => t_scatter[k] > 0.0,
                        };
                        if scatters {
                            sum += dis_t_at(k, ctx)?;
                        }
                    }
                    sum
                };
                if t_factor == 0.0 {
                    continue;
                }
                let mut s_factor = 0.0;
                for (j, part) in s_parts.iter().enumerate() {
                    if s_scatter[j] <= 0.0 {
                        continue;
                    }
                    let r = in_ctx.intersect(part)?;
                    if !r.is_empty() {
                        s_factor += distinct_node(right, &r, cover, ctx)?;
                    }
                }
                total += t_factor * s_factor;
            }
            Ok(total)
        }
    }
}

// ---------------------------------------------------------------------------
// Subplan enumeration

#[derive(Debug, Clone, Serialize)]
pub struct SubplanEstimate {
    pub tables: Vec<usize>,
    #[serde(flatten)]
    pub report: EstimateReport,
}

#[derive(Debug, Clone, Serialize)]
pub struct SubplanReport {
    pub plans: Vec<SubplanEstimate>,
    /// Totals across all plans with the shared cache.
    pub leaf_calls: u64,
    pub cache_hits: u64,
}

/// Estimate every connected sub-table-set of the query's touched tables,
/// sharing one evaluation cache across all of them. Plans are ordered by
/// size, then by table list; per-plan counters report the work that plan
/// added on top of earlier ones.
pub fn estimate_subplans(tree: &DecompositionTree, query: &Query) -> Result<SubplanReport> {
    if query.distinct {
        return Err(Error::Estimate("subplan enumeration expects a cardinality query".into()));
    }
    let touched: Vec<usize> = query.tables.iter().copied().collect();
    let mut subsets: Vec<Vec<usize>> = Vec::new();
    for bits in 1u64..(1 << touched.len()) {
        let tables: Vec<usize> = touched
            .iter()
            .enumerate()
            .filter(|(pos, _)| bits & (1 << pos) != 0)
            .map(|(_, &t)| t)
            .collect();
        let mask = tables.iter().fold(0u64, |m, &t| m | (1 << t));
        if crate::gluetree::mask_connected(&tree.catalog, mask) {
            subsets.push(tables);
        }
    }
    subsets.sort_by(|a, b| (a.len(), a).cmp(&(b.len(), b)));

    let mut cache = SubplanCache::new();
    let mut plans = Vec::with_capacity(subsets.len());
    for tables in subsets {
        let sub = Query {
            tables: tables.iter().copied().collect(),
            region: query
                .region
                .project_tables(tables.iter().fold(0u64, |m, &t| m | (1 << t))),
            distinct: false,
        };
        let report = estimate(tree, &sub, Some(&mut cache))?;
        plans.push(SubplanEstimate { tables, report });
    }
    Ok(SubplanReport { plans, leaf_calls: cache.leaf_calls, cache_hits: cache.cache_hits })
}

#[cfg(test)]
mod tests {
    use std::sync::OnceLock;

    use proptest::prelude::*;

    use super::*;
    use crate::catalog::Database;
    use crate::gluetree::{build_tree, BuildConfig, PartitionStrategy};
    use crate::oracle::{build_database, exec_distinct, exec_exact, fixture_a};
    use crate::regions::parse_query;

    const Q1: &str = r#"{"tables":["T","S"],"predicates":[
        {"col":"T.a","op":"eq","val":10},{"col":"S.b","op":"eq","val":100}]}"#;
    const OPEN: &str = r#"{"tables":["T","S"],"predicates":[]}"#;

    fn fixture_tree(mode: EstimationMode) -> (Database, DecompositionTree) {
        let db = fixture_a();
        let config = BuildConfig {
            mode,
            partitions: PartitionStrategy::Singleton,
            ..Default::default()
        };
        let tree = build_tree(&db, &config).unwrap();
        (db, tree)
    }

    fn card(tree: &DecompositionTree, json: &str) -> f64 {
        let q = parse_query(json, &tree.catalog).unwrap();
        estimate(tree, &q, None).unwrap().cardinality
    }

    #[test]
    fn local_contexts_recover_the_fixture_counts() {
        let (_, tree) = fixture_tree(EstimationMode::Context);
        let cases = [
            (Q1, 2.0),
            (OPEN, 6.0),
            (r#"{"tables":["T","S"],"predicates":[{"col":"T.a","op":"eq","val":20}]}"#, 2.0),
            (r#"{"tables":["T","S"],"predicates":[{"col":"S.b","op":"eq","val":100}]}"#, 2.0),
            (r#"{"tables":["T","S"],"predicates":[{"col":"S.b","op":"eq","val":300}]}"#, 1.0),
        ];
        for (json, want) in cases {
            let got = card(&tree, json);
            assert!((got - want).abs() < 1e-9, "{json}: got {got}, want {want}");
        }
    }

    #[test]
    fn independence_misses_the_correlated_point() {
        let (_, tree) = fixture_tree(EstimationMode::Independent);
        // The matching S rows concentrate under the matching T rows, which
        // a product of marginals cannot see: 1 instead of 2.
        assert!((card(&tree, Q1) - 1.0).abs() < 1e-9);
        assert!((card(&tree, OPEN) - 6.0).abs() < 1e-9);
    }

    #[test]
    fn distinct_counts_follow_the_mode() {
        let d1 = r#"{"tables":["T","S"],"distinct":true,"predicates":[
            {"col":"T.a","op":"eq","val":10},{"col":"S.b","op":"eq","val":100}]}"#;
        let db = fixture_a();

        let (_, ctx_tree) = fixture_tree(EstimationMode::Context);
        let q = parse_query(d1, &ctx_tree.catalog).unwrap();
        let got = estimate(&ctx_tree, &q, None).unwrap();
        assert!((got.cardinality - 1.0).abs() < 1e-9);
        assert!(got.probability.is_none());
        assert_eq!(got.cardinality, exec_distinct(&db, &q, 1 << 20).unwrap());

        // Independently-combined scatters count the a=10 key block twice.
        let (_, ind_tree) = fixture_tree(EstimationMode::Independent);
        assert!((card(&ind_tree, d1) - 2.0).abs() < 1e-9);
    }

    #[test]
    fn untouched_sides_fall_through_to_the_leaf() {
        let (_, tree) = fixture_tree(EstimationMode::Context);
        let q = parse_query(
            r#"{"tables":["T"],"predicates":[{"col":"T.a","op":"eq","val":10}]}"#,
            &tree.catalog,
        )
        .unwrap();
        let report = estimate(&tree, &q, None).unwrap();
        assert_eq!(report.cardinality, 2.0);
        assert_eq!(report.probability, Some(0.5));
        assert_eq!(report.effective_tables, vec![0]);
        assert_eq!(report.leaf_calls, 1);
    }

    #[test]
    fn point_queries_match_the_oracle_exactly() {
        let (db, tree) = fixture_tree(EstimationMode::Context);
        for a in [10, 20, 35] {
            for b in [100, 200, 300, 50] {
                let json = format!(
                    r#"{{"tables":["T","S"],"predicates":[
                        {{"col":"T.a","op":"eq","val":{a}}},{{"col":"S.b","op":"eq","val":{b}}}]}}"#
                );
                let q = parse_query(&json, &tree.catalog).unwrap();
                let got = estimate(&tree, &q, None).unwrap().cardinality;
                let want = exec_exact(&db, &q, 1 << 20).unwrap();
                assert!((got - want).abs() <= 1e-9 * want.max(1.0), "a={a} b={b}: {got} vs {want}");
            }
        }
    }

    fn chain3_db() -> Database {
        let schema = r#"{
            "tables": [
                {"name":"a","columns":[{"name":"id","kind":"integer","min":0,"max":100},{"name":"x","kind":"integer","min":0,"max":10}]},
                {"name":"b","columns":[{"name":"id","kind":"integer","min":0,"max":100},{"name":"a_id","kind":"integer","min":0,"max":100},{"name":"y","kind":"integer","min":0,"max":10}]},
                {"name":"c","columns":[{"name":"b_id","kind":"integer","min":0,"max":100},{"name":"z","kind":"integer","min":0,"max":10}]}
            ],
            "joins": [
                {"left":"a.id","right":"b.a_id","kind":"pk_fk"},
                {"left":"b.id","right":"c.b_id","kind":"pk_fk"}
            ]
        }"#;
        let a_csv = "id,x\n1,1\n2,2\n3,3\n4,4\n";
        let b_csv = "id,a_id,y\n10,1,5\n11,1,6\n12,2,5\n13,9,6\n";
        let c_csv = "b_id,z\n10,7\n10,8\n12,7\n99,9\n";
        build_database(schema, &[("a", a_csv), ("b", b_csv), ("c", c_csv)]).unwrap()
    }

    const CHAIN_Q: &str = r#"{"tables":["a","b","c"],"predicates":[
        {"col":"a.x","op":"range","lo":1,"hi":2},{"col":"c.z","op":"eq","val":7}]}"#;

    #[test]
    fn caching_changes_effort_but_not_results() {
        let db = chain3_db();
        let tree = build_tree(&db, &BuildConfig::default()).unwrap();
        let q = parse_query(CHAIN_Q, &tree.catalog).unwrap();

        let plain = estimate(&tree, &q, None).unwrap();
        let mut cache = SubplanCache::new();
        let first = estimate(&tree, &q, Some(&mut cache)).unwrap();
        let second = estimate(&tree, &q, Some(&mut cache)).unwrap();

        assert_eq!(plain.cardinality.to_bits(), first.cardinality.to_bits());
        assert_eq!(first.cardinality.to_bits(), second.cardinality.to_bits());
        assert!(first.leaf_calls > 0);
        assert_eq!(second.leaf_calls, 0, "repeat evaluation should stop at the memo");
        assert!(second.cache_hits >= 1);
        assert!(!cache.is_empty());
    }

    #[test]
    fn subplans_cover_exactly_the_connected_subsets() {
        let db = chain3_db();
        let tree = build_tree(&db, &BuildConfig::default()).unwrap();
        let q = parse_query(CHAIN_Q, &tree.catalog).unwrap();

        let report = estimate_subplans(&tree, &q).unwrap();
        let sets: Vec<Vec<usize>> = report.plans.iter().map(|p| p.tables.clone()).collect();
        assert_eq!(
            sets,
            vec![vec![0], vec![1], vec![2], vec![0, 1], vec![1, 2], vec![0, 1, 2]],
            "chain subsets must skip the disconnected {{a, c}} pair"
        );
        // The full plan agrees with a standalone estimate bit for bit.
        let full = estimate(&tree, &q, None).unwrap();
        let last = &report.plans[5].report;
        assert_eq!(last.cardinality.to_bits(), full.cardinality.to_bits());
        // Shared memoization: six plans cost fewer leaf visits than six
        // isolated evaluations of the same sub-queries.
        let isolated: u64 = report
            .plans
            .iter()
            .map(|p| {
                let mask = p.tables.iter().fold(0u64, |m, &t| m | (1 << t));
                let sub = Query {
                    tables: p.tables.iter().copied().collect(),
                    region: q.region.project_tables(mask),
                    distinct: false,
                };
                estimate(&tree, &sub, None).unwrap().leaf_calls
            })
            .sum();
        assert!(report.leaf_calls < isolated, "{} vs {isolated}", report.leaf_calls);
    }

    fn shared_fixture_tree() -> &'static DecompositionTree {
        static TREE: OnceLock<DecompositionTree> = OnceLock::new();
        TREE.get_or_init(|| fixture_tree(EstimationMode::Context).1)
    }

    proptest! {
        #[test]
        fn partner_value_slices_are_additive(split in 0i64..400) {
            let tree = shared_fixture_tree();
            let part = |lo: i64, hi: i64| {
                card(tree, &format!(
                    r#"{{"tables":["T","S"],"predicates":[{{"col":"S.b","op":"range","lo":{lo},"hi":{hi}}}]}}"#
                ))
            };
            let whole = part(0, 400);
            let halves = part(0, split) + part(split + 1, 400);
            prop_assert!((whole - halves).abs() < 1e-9, "{whole} vs {halves} at {split}");
        }

        #[test]
        fn shrinking_a_region_never_raises_the_estimate(lo in 0i64..400, hi in 0i64..400) {
            let (lo, hi) = (lo.min(hi), lo.max(hi));
            let tree = shared_fixture_tree();
            let narrow = card(tree, &format!(
                r#"{{"tables":["T","S"],"predicates":[
                    {{"col":"T.a","op":"eq","val":10}},{{"col":"S.b","op":"range","lo":{lo},"hi":{hi}}}]}}"#
            ));
            let wide = card(tree, &format!(
                r#"{{"tables":["T","S"],"predicates":[{{"col":"S.b","op":"range","lo":{lo},"hi":{hi}}}]}}"#
            ));
            prop_assert!(narrow <= wide + 1e-9, "{narrow} > {wide}");
        }
    }
}
