//! Tree construction: cost-based decomposition search, then bottom-up node
//! assembly with exact (or sampled) fanout statistics.
//!
//! Planning works over table bitmasks. A cross-pair dependence matrix is
//! computed once on a sample of the full-schema join; the score of a split
//! is the matrix maximum across it. Dynamic programming over connected
//! masks finds the cheapest tree under the cost model, breaking ties toward
//! the numerically smallest left mask, which also fixes the orientation of
//! cost-symmetric splits.

use std::collections::{BTreeSet, HashMap};

use crate::catalog::{Catalog, ColId, Database, JoinEdge};
use crate::correlate::{
    pair_score, sample_indices, CorrelationParams, Provenance, SampleMethod, SampleSet,
};
use crate::error::{Error, Result};
use crate::gluetree::{
    divide_cross, divide_fanout, leaf_cost, mask_connected, restricted_fanout_matrix,
    singleton_partition, BuildConfig, CostParams, DecompNode, DecompositionTree,
    PartitionStrategy, StatsMode,
};
use crate::inference::subtree_prob;
use crate::join::materialize;
use crate::leafmodels::{LeafModel, LeafParams};
use crate::regions::RegularRegion;

/// Cost of joining two sides with cross-pair score `s`:
/// α·min(‖S‖,‖T‖) + β·s + γ·s^max(‖S‖,‖T‖), sizes in tables.
pub fn split_cost(cost: &CostParams, s: f64, left_tables: usize, right_tables: usize) -> f64 {
    let lo = left_tables.min(right_tables) as f64;
    let hi = left_tables.max(right_tables) as i32;
    cost.alpha * lo + cost.beta * s + cost.gamma * s.powi(hi)
}

#[derive(Debug, Clone, Copy)]
pub struct DpEntry {
    pub cost: f64,
    /// `(left mask, right mask, edge index)`; `None` for single tables.
    pub split: Option<(u64, u64, usize)>,
}

fn leaf_dp_cost(catalog: &Catalog, config: &BuildConfig, t: usize) -> f64 {
    let meta = &catalog.tables[t];
    leaf_cost(config.leaf_kind(&meta.name), meta.attrs.len())
}

/// The unique schema edge with endpoints on opposite sides, if any.
fn crossing_edge(catalog: &Catalog, a: u64, b: u64) -> Option<usize> {
    catalog.edges.iter().position(|e| {
        let (l, r) = (1u64 << e.left.table, 1u64 << e.right.table);
        (l & a != 0 && r & b != 0) || (l & b != 0 && r & a != 0)
    })
}

/// Cheapest decomposition for every connected table mask. `score` maps a
/// (left mask, right mask) split to its cross-pair dependence.
pub fn dp_plan<F: Fn(u64, u64) -> f64>(
    catalog: &Catalog,
    config: &BuildConfig,
    score: &F,
) -> Result<HashMap<u64, DpEntry>> {
    let n = catalog.tables.len();
    let full: u64 = (1 << n) - 1;
    let mut memo: HashMap<u64, DpEntry> = HashMap::new();
    for t in 0..n {
        memo.insert(1 << t, DpEntry { cost: leaf_dp_cost(catalog, config, t), split: None });
    }
    // Ascending mask order visits every proper submask first.
    for mask in 3..=full {
        if mask.count_ones() < 2 || !mask_connected(catalog, mask) {
            continue;
        }
        let mut best: Option<(f64, u64, u64, usize)> = None;
        let mut sub = (mask - 1) & mask;
        while sub > 0 {
            let rest = mask & !sub;
            // Only splits into two connected halves are realizable; those
            // are exactly the halves already present in the memo.
            if rest != 0 && memo.contains_key(&sub) && memo.contains_key(&rest) {
                if let Some(eidx) = crossing_edge(catalog, sub, rest) {
                    let s = score(sub, rest);
                    let total = split_cost(
                        &config.cost,
                        s,
                        sub.count_ones() as usize,
                        rest.count_ones() as usize,
                    ) + memo[&sub].cost
                        + memo[&rest].cost;
                    let better = match best {
                        None => true,
                        Some((c, bl, ..)) => total < c || (total == c && sub < bl),
                    };
                    if better {
                        best = Some((total, sub, rest, eidx));
                    }
                }
            }
            sub = (sub - 1) & mask;
        }
        if let Some((cost, l, r, e)) = best {
            memo.insert(mask, DpEntry { cost, split: Some((l, r, e)) });
        }
    }
    if !memo.contains_key(&full) {
        return Err(Error::Build("join graph is disconnected; no tree covers every table".into()));
    }
    Ok(memo)
}

/// Brute-force minimum cost over all decompositions of `mask`, evaluating
/// the identical cost expression as [`dp_plan`] (their results agree
/// exactly, which the tests pin down).
pub fn exhaustive_cost<F: Fn(u64, u64) -> f64>(
    catalog: &Catalog,
    config: &BuildConfig,
    score: &F,
    mask: u64,
) -> Option<f64> {
    if mask.count_ones() == 1 {
        return Some(leaf_dp_cost(catalog, config, mask.trailing_zeros() as usize));
    }
    if !mask_connected(catalog, mask) {
        return None;
    }
    let mut best: Option<f64> = None;
    let mut sub = (mask - 1) & mask;
    while sub > 0 {
        let rest = mask & !sub;
        if rest != 0
            && mask_connected(catalog, sub)
            && mask_connected(catalog, rest)
            && crossing_edge(catalog, sub, rest).is_some()
        {
            if let (Some(cl), Some(cr)) = (
                exhaustive_cost(catalog, config, score, sub),
                exhaustive_cost(catalog, config, score, rest),
            ) {
                let total = split_cost(
                    &config.cost,
                    score(sub, rest),
                    sub.count_ones() as usize,
                    rest.count_ones() as usize,
                ) + cl
                    + cr;
                best = Some(match best {
                    None => total,
                    Some(b) => b.min(total),
                });
            }
        }
        sub = (sub - 1) & mask;
    }
    best
}

// ---------------------------------------------------------------------------
// Cross-pair score matrix

/// RDC between every cross-table pair of non-key attributes, over one
/// sample of the full-schema join. Key columns express join structure, not
/// payload dependence, so they are left out of table affinity scoring.
fn score_matrix(db: &Database, config: &BuildConfig) -> Result<HashMap<(ColId, ColId), f64>> {
    let n = db.tables.len();
    let mut out = HashMap::new();
    if n < 2 {
        return Ok(out);
    }
    let all: BTreeSet<usize> = (0..n).collect();
    let jr = materialize(db, &all, config.join_cap)?;
    let rows = sample_indices(jr.rows, config.sample_n, mix(config.seed, 0xA757));
    let full_mask = (1u64 << n) - 1;
    let ss = SampleSet::from_joined(&jr, &rows, prov_of(full_mask));
    let keys = key_columns(&db.catalog);
    let params = CorrelationParams { seed: config.seed, ..Default::default() };
    let payload: Vec<ColId> = ss.cols.iter().filter(|c| !keys.contains(c)).copied().collect();
    for (i, &a) in payload.iter().enumerate() {
        for &b in &payload[i + 1..] {
            if a.table != b.table {
                out.insert((a, b), pair_score(&ss, a, b, &params)?);
            }
        }
    }
    Ok(out)
}

pub(crate) fn mask_score(matrix: &HashMap<(ColId, ColId), f64>, left: u64, right: u64) -> f64 {
    let mut best = 0.0f64;
    for (&(a, b), &s) in matrix {
        let (ta, tb) = (1u64 << a.table, 1u64 << b.table);
        if (ta & left != 0 && tb & right != 0) || (ta & right != 0 && tb & left != 0) {
            best = best.max(s);
        }
    }
    best
}

pub(crate) fn key_columns(catalog: &Catalog) -> BTreeSet<ColId> {
    catalog.edges.iter().flat_map(|e| [e.left, e.right]).collect()
}

pub(crate) fn mix(seed: u64, salt: u64) -> u64 {
    let mut z = seed ^ salt.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub(crate) fn prov_of(mask: u64) -> Provenance {
    let lo = mask.trailing_zeros() as usize;
    let hi = 63 - mask.leading_zeros() as usize;
    if lo == hi {
        Provenance::SingleTable { table: lo }
    } else {
        Provenance::Join { left: lo, right: hi, method: SampleMethod::Materialize }
    }
}

pub(crate) fn mask_tables(mask: u64) -> BTreeSet<usize> {
    (0..64).filter(|t| mask & (1 << t) != 0).collect()
}

// ---------------------------------------------------------------------------
// Tree assembly

/// Build the decomposition tree over the database's full schema.
pub fn build_tree(db: &Database, config: &BuildConfig) -> Result<DecompositionTree> {
    config.validate()?;
    let n = db.tables.len();
    if n == 0 {
        return Err(Error::Build("database has no tables".into()));
    }
    if n > 48 {
        return Err(Error::Build(format!("{n} tables exceed the planner's subset budget")));
    }
    let matrix = score_matrix(db, config)?;
    let memo = dp_plan(&db.catalog, config, &|l, r| mask_score(&matrix, l, r))?;
    let root = realize(db, config, &memo, (1 << n) - 1)?;
    let tree =
        DecompositionTree { config: config.clone(), catalog: db.catalog.clone(), root };
    tree.validate_structure()?;
    Ok(tree)
}

fn realize(
    db: &Database,
    config: &BuildConfig,
    memo: &HashMap<u64, DpEntry>,
    mask: u64,
) -> Result<DecompNode> {
    match memo[&mask].split {
        None => {
            let t = mask.trailing_zeros() as usize;
            let params = LeafParams { seed: mix(config.seed, mask), ..config.leaf };
            let kind = config.leaf_kind(&db.catalog.tables[t].name);
            Ok(DecompNode::Leaf { table: t, model: LeafModel::build(&db.tables[t], kind, &params)? })
        }
        Some((lm, rm, eidx)) => {
            let left = realize(db, config, memo, lm)?;
            let right = realize(db, config, memo, rm)?;
            build_inner(db, config, left, right, db.catalog.edges[eidx])
        }
    }
}

/// Per-part means of a fanout vector: (Ê[F*], Pr[F=0], Ê[F]). Parts without
/// rows get the single-dangling-row convention (1, 1, 0).
pub(crate) fn part_fanout_stats(
    ss: &SampleSet,
    f: &[u32],
    parts: &[RegularRegion],
) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let mut e_star = Vec::with_capacity(parts.len());
    let mut null_mass = Vec::with_capacity(parts.len());
    let mut scatter = Vec::with_capacity(parts.len());
    for part in parts {
        let rows = ss.rows_in(part);
        if rows.is_empty() {
            e_star.push(1.0);
            null_mass.push(1.0);
            scatter.push(0.0);
            continue;
        }
        let n = rows.len() as f64;
        let (mut star, mut dangling, mut raw) = (0.0, 0.0, 0.0);
        for &r in &rows {
            let x = f[r] as f64;
            star += x.max(1.0);
            raw += x;
            if x == 0.0 {
                dangling += 1.0;
            }
        }
        e_star.push(star / n);
        null_mass.push(dangling / n);
        scatter.push(raw / n);
    }
    (e_star, null_mass, scatter)
}

/// Count each row's join partners on the other side, matching key values
/// exactly; null keys (from outer-join extension) partner with nothing.
pub(crate) fn fanout_counts(rows_of: &SampleSet, key: ColId, other: &SampleSet, other_key: ColId) -> Vec<u32> {
    let mut counts: HashMap<u64, u32> = HashMap::new();
    for r in 0..other.rows {
        if let Some(v) = other.get(r, other_key) {
            *counts.entry(v.key_bits()).or_default() += 1;
        }
    }
    (0..rows_of.rows)
        .map(|r| match rows_of.get(r, key) {
            Some(v) => counts.get(&v.key_bits()).copied().unwrap_or(0),
            None => 0,
        })
        .collect()
}

pub(crate) fn context_of_rows(s: &SampleSet, contexts: &[RegularRegion]) -> Vec<Option<usize>> {
    (0..s.rows)
        .map(|r| contexts.iter().position(|c| c.contains_row(|col| s.get(r, col))))
        .collect()
}

/// Per-context fanout columns for the T side: entry `[i][r]` counts row
/// r's partners that land in context i.
pub(crate) fn context_fanouts(
    t: &SampleSet,
    t_key: ColId,
    s_full: &SampleSet,
    s_key: ColId,
    ctx_of: &[Option<usize>],
    n_ctx: usize,
) -> Vec<Vec<u32>> {
    let mut maps: Vec<HashMap<u64, u32>> = vec![HashMap::new(); n_ctx];
    for (r, &ctx) in ctx_of.iter().enumerate() {
        if let (Some(v), Some(i)) = (s_full.get(r, s_key), ctx) {
            *maps[i].entry(v.key_bits()).or_default() += 1;
        }
    }
    maps.iter()
        .map(|m| {
            (0..t.rows)
                .map(|r| match t.get(r, t_key) {
                    Some(v) => m.get(&v.key_bits()).copied().unwrap_or(0),
                    None => 0,
                })
                .collect()
        })
        .collect()
}

/// Columns with no null cells across the side's rows; splitting any other
/// column would orphan its null rows from every part.
pub(crate) fn null_free_cols(ss: &SampleSet) -> BTreeSet<ColId> {
    ss.cols
        .iter()
        .filter(|&&c| ss.column(c).iter().all(Option::is_some))
        .copied()
        .collect()
}

/// Side samples for one inner node: full and statistics row sets, fanout
/// columns, and the attribute lists / scoring parameters the divide step
/// uses. Built identically by the initial construction and by the update
/// path so both rate dependence on the same inputs.
pub(crate) struct NodeSamples {
    pub t_key: ColId,
    pub s_key: ColId,
    pub t_full: SampleSet,
    pub s_full: SampleSet,
    pub t_stat: SampleSet,
    pub s_stat: SampleSet,
    pub f_s_stat: Vec<u32>,
    pub t_fanout_attrs: Vec<ColId>,
    pub s_fanout_attrs: Vec<ColId>,
    pub t_payload: Vec<ColId>,
    pub s_payload: Vec<ColId>,
    pub t_params: CorrelationParams,
    pub s_params: CorrelationParams,
    pub t_rows: f64,
    pub s_rows: f64,
    pub w_rows: f64,
}

pub(crate) fn node_samples(
    db: &Database,
    config: &BuildConfig,
    t_mask: u64,
    s_mask: u64,
    t_key: ColId,
    s_key: ColId,
    contexts: Option<&[RegularRegion]>,
) -> Result<NodeSamples> {
    // Singleton partitioning only makes sense against full data.
    let exact =
        config.stats == StatsMode::Exact || config.partitions == PartitionStrategy::Singleton;

    let t_jr = materialize(db, &mask_tables(t_mask), config.join_cap)?;
    let s_jr = materialize(db, &mask_tables(s_mask), config.join_cap)?;
    let t_all: Vec<usize> = (0..t_jr.rows).collect();
    let s_all: Vec<usize> = (0..s_jr.rows).collect();
    let t_full = SampleSet::from_joined(&t_jr, &t_all, prov_of(t_mask));
    let s_full = SampleSet::from_joined(&s_jr, &s_all, prov_of(s_mask));
    let (t_rows, s_rows) = (t_jr.rows as f64, s_jr.rows as f64);

    let f_t_full = fanout_counts(&t_full, t_key, &s_full, s_key);
    let f_s_full = fanout_counts(&s_full, s_key, &t_full, t_key);

    // Statistics rows: everything in exact mode, else a seeded sample.
    let t_stat_rows = if exact {
        t_all
    } else {
        sample_indices(t_jr.rows, config.sample_n, mix(config.seed, t_mask ^ 0x7))
    };
    let s_stat_rows = if exact {
        s_all
    } else {
        sample_indices(s_jr.rows, config.sample_n, mix(config.seed, s_mask ^ 0x13))
    };
    let mut t_stat = SampleSet::from_joined(&t_jr, &t_stat_rows, prov_of(t_mask));
    let mut s_stat = SampleSet::from_joined(&s_jr, &s_stat_rows, prov_of(s_mask));
    let f_t_stat: Vec<u32> = t_stat_rows.iter().map(|&r| f_t_full[r]).collect();
    let f_s_stat: Vec<u32> = s_stat_rows.iter().map(|&r| f_s_full[r]).collect();
    t_stat.add_fanout("fanout", f_t_stat.clone());
    s_stat.add_fanout("fanout", f_s_stat.clone());

    // |W|: every T-side row contributes max(F,1) join rows, and dangling
    // S-side rows contribute their null extensions. Counted from both
    // sides in exact mode, where the two routes must agree exactly.
    let w_rows = if exact {
        let from_t: u64 = f_t_full.iter().map(|&f| (f as u64).max(1)).sum::<u64>()
            + f_s_full.iter().filter(|&&f| f == 0).count() as u64;
        let from_s: u64 = f_s_full.iter().map(|&f| (f as u64).max(1)).sum::<u64>()
            + f_t_full.iter().filter(|&&f| f == 0).count() as u64;
        assert_eq!(from_t, from_s, "join size must agree when counted from either side");
        from_t as f64
    } else {
        let avg = |f: &[u32]| {
            if f.is_empty() {
                0.0
            } else {
                f.iter().map(|&x| (x as f64).max(1.0)).sum::<f64>() / f.len() as f64
            }
        };
        let frac0 = |f: &[u32]| {
            if f.is_empty() {
                0.0
            } else {
                f.iter().filter(|&&x| x == 0).count() as f64 / f.len() as f64
            }
        };
        t_rows * avg(&f_t_stat) + s_rows * frac0(&f_s_stat)
    };

    let keys = key_columns(&db.catalog);
    let t_clean = null_free_cols(&t_full);
    let s_clean = null_free_cols(&s_full);
    // Fanout partitions may split any clean column; cross contexts stick
    // to payload columns (key pairs always look maximally dependent on a
    // join sample without saying anything about the payload).
    let t_payload: Vec<ColId> = t_clean.iter().filter(|c| !keys.contains(c)).copied().collect();
    let s_payload: Vec<ColId> = s_clean.iter().filter(|c| !keys.contains(c)).copied().collect();
    let t_fanout_attrs: Vec<ColId> = t_clean.iter().copied().collect();
    let s_fanout_attrs: Vec<ColId> = s_clean.iter().copied().collect();

    // Restricted per-context fanouts, when the context list is already
    // known (update path; the build adds them once contexts exist).
    if let Some(ctxs) = contexts {
        let ctx_of = context_of_rows(&s_full, ctxs);
        for (i, col) in context_fanouts(&t_stat, t_key, &s_full, s_key, &ctx_of, ctxs.len())
            .into_iter()
            .enumerate()
        {
            t_stat.add_fanout(format!("ctx{i}"), col);
        }
    }

    let t_params =
        CorrelationParams { seed: mix(config.seed, t_mask ^ 0x31), ..Default::default() };
    let s_params =
        CorrelationParams { seed: mix(config.seed, s_mask ^ 0x59), ..Default::default() };

    Ok(NodeSamples {
        t_key,
        s_key,
        t_full,
        s_full,
        t_stat,
        s_stat,
        f_s_stat,
        t_fanout_attrs,
        s_fanout_attrs,
        t_payload,
        s_payload,
        t_params,
        s_params,
        t_rows,
        s_rows,
        w_rows,
    })
}

/// Sample of the node's own join (both sides together), used to find and
/// to rescore cross-side contexts.
pub(crate) fn node_join_sample(
    db: &Database,
    config: &BuildConfig,
    node_mask: u64,
) -> Result<(SampleSet, CorrelationParams)> {
    let exact =
        config.stats == StatsMode::Exact || config.partitions == PartitionStrategy::Singleton;
    let node_jr = materialize(db, &mask_tables(node_mask), config.join_cap)?;
    let node_rows = if exact {
        (0..node_jr.rows).collect()
    } else {
        sample_indices(node_jr.rows, config.sample_n, mix(config.seed, node_mask ^ 0x29))
    };
    let node_ss = SampleSet::from_joined(&node_jr, &node_rows, prov_of(node_mask));
    let cross_params =
        CorrelationParams { seed: mix(config.seed, node_mask ^ 0xC3), ..Default::default() };
    Ok((node_ss, cross_params))
}

/// The query-independent statistics stored on an inner node, derived from
/// side samples and a fixed set of partitions.
pub(crate) struct NodeStats {
    pub e_t: Vec<f64>,
    pub e_s: Vec<f64>,
    pub m: Vec<Vec<f64>>,
    pub m_null: Vec<f64>,
    pub t_scatter: Vec<f64>,
    pub s_scatter: Vec<f64>,
    pub t_part_w: Vec<f64>,
    pub ctx_denom: Vec<f64>,
    pub smass_full: Vec<f64>,
    pub s_norm: f64,
    pub t_rows: f64,
    pub s_rows: f64,
    pub w_rows: f64,
}

pub(crate) fn node_statistics(
    config: &BuildConfig,
    left: &DecompNode,
    right: &DecompNode,
    ns: &NodeSamples,
    contexts: &[RegularRegion],
    t_parts: &[RegularRegion],
    s_parts: &[RegularRegion],
) -> Result<NodeStats> {
    let exact =
        config.stats == StatsMode::Exact || config.partitions == PartitionStrategy::Singleton;
    let tstats =
        restricted_fanout_matrix(&ns.t_stat, t_parts, &ns.s_full, contexts, ns.t_key, ns.s_key)?;
    let (e_s, _, s_scatter) = part_fanout_stats(&ns.s_stat, &ns.f_s_stat, s_parts);
    if exact {
        // Each partner lands in exactly one context or in none, so the
        // restricted means must reassemble the clamped fanout mean.
        for k in 0..t_parts.len() {
            let total: f64 = tstats.m[k].iter().sum::<f64>() + tstats.m_null[k];
            assert!(
                (total - tstats.e_t[k]).abs() <= 1e-9 * tstats.e_t[k].max(1.0),
                "restricted fanout means must reassemble the clamped mean (part {k}: {total} vs {})",
                tstats.e_t[k]
            );
        }
    }

    // Query-independent pieces of the combination formulas, computed with
    // the children's own estimators so estimation stays self-consistent.
    let t_part_w: Vec<f64> = t_parts
        .iter()
        .map(|p| subtree_prob(left, p, config.mode))
        .collect::<Result<_>>()?;
    let ctx_denom: Vec<f64> = (0..contexts.len())
        .map(|i| t_part_w.iter().zip(&tstats.m).map(|(w, row)| w * row[i]).sum())
        .collect();
    let mut smass_full = Vec::with_capacity(contexts.len());
    for l in contexts {
        let mut sum = 0.0;
        for (j, sp) in s_parts.iter().enumerate() {
            let r = l.intersect(sp)?;
            if r.is_empty() {
                continue;
            }
            sum += subtree_prob(right, &r, config.mode)? * e_s[j];
        }
        smass_full.push(if ns.w_rows > 0.0 { ns.s_rows / ns.w_rows * sum } else { 0.0 });
    }
    let null_term: f64 = t_part_w.iter().zip(&tstats.m_null).map(|(w, mn)| w * mn).sum();
    let s_norm = smass_full.iter().sum::<f64>()
        + if ns.w_rows > 0.0 { ns.t_rows / ns.w_rows * null_term } else { 0.0 };

    Ok(NodeStats {
        e_t: tstats.e_t,
        e_s,
        m: tstats.m,
        m_null: tstats.m_null,
        t_scatter: tstats.t_scatter,
        s_scatter,
        t_part_w,
        ctx_denom,
        smass_full,
        s_norm,
        t_rows: ns.t_rows,
        s_rows: ns.s_rows,
        w_rows: ns.w_rows,
    })
}

fn build_inner(
    db: &Database,
    config: &BuildConfig,
    left: DecompNode,
    right: DecompNode,
    edge: JoinEdge,
) -> Result<DecompNode> {
    let t_mask = left.tables_mask();
    let s_mask = right.tables_mask();
    let (t_key, s_key) = if t_mask & (1 << edge.left.table) != 0 {
        (edge.left, edge.right)
    } else {
        (edge.right, edge.left)
    };

    let mut ns = node_samples(db, config, t_mask, s_mask, t_key, s_key, None)?;

    let (contexts, ctx_capped, t_parts, t_capped, s_parts, s_capped) = match config.partitions {
        PartitionStrategy::Singleton => {
            let contexts = singleton_partition(&ns.s_full, &ns.s_fanout_attrs);
            let t_parts = singleton_partition(&ns.t_full, &ns.t_fanout_attrs);
            let s_parts = contexts.clone();
            let nc = contexts.len();
            (
                contexts,
                vec![false; nc],
                t_parts.clone(),
                vec![false; t_parts.len()],
                s_parts,
                vec![false; nc],
            )
        }
        PartitionStrategy::Auto => {
            // Contexts come from cross-pair dependence on this node's own
            // join sample.
            let (node_ss, cross_params) = node_join_sample(db, config, t_mask | s_mask)?;
            let dc = divide_cross(
                &node_ss,
                &ns.t_payload,
                &ns.s_payload,
                config.tau,
                config.max_parts,
                config.min_rows,
                &cross_params,
            )?;

            let sd = divide_fanout(
                &ns.s_stat,
                &ns.s_fanout_attrs,
                "fanout",
                config.tau,
                config.max_parts,
                config.min_rows,
                &ns.s_params,
            )?;

            // The T partition must decorrelate the *restricted* fanouts
            // too: a part may have flat total fanout yet still shift
            // which contexts its rows scatter into.
            let ctx_of = context_of_rows(&ns.s_full, &dc.parts);
            for (i, col) in
                context_fanouts(&ns.t_stat, t_key, &ns.s_full, s_key, &ctx_of, dc.parts.len())
                    .into_iter()
                    .enumerate()
            {
                ns.t_stat.add_fanout(format!("ctx{i}"), col);
            }
            let td = divide_fanout(
                &ns.t_stat,
                &ns.t_fanout_attrs,
                "fanout",
                config.tau,
                config.max_parts,
                config.min_rows,
                &ns.t_params,
            )?;
            (dc.parts, dc.capped, td.parts, td.capped, sd.parts, sd.capped)
        }
    };

    let st = node_statistics(config, &left, &right, &ns, &contexts, &t_parts, &s_parts)?;

    Ok(DecompNode::Inner {
        left: Box::new(left),
        right: Box::new(right),
        edge: JoinEdge { left: t_key, right: s_key, kind: edge.kind },
        t_tables: t_mask,
        s_tables: s_mask,
        contexts,
        t_parts,
        s_parts,
        ctx_capped,
        t_capped,
        s_capped,
        e_t: st.e_t,
        e_s: st.e_s,
        m: st.m,
        m_null: st.m_null,
        t_scatter: st.t_scatter,
        s_scatter: st.s_scatter,
        t_part_w: st.t_part_w,
        ctx_denom: st.ctx_denom,
        smass_full: st.smass_full,
        s_norm: st.s_norm,
        t_rows: st.t_rows,
        s_rows: st.s_rows,
        w_rows: st.w_rows,
    })
}
