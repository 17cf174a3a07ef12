//! Drift detection and in-place refresh against changed tables.
//!
//! A finished tree freezes its partitions together with the guarantee that
//! every undivided part scored at or below the dependence threshold. Data
//! changes erode that silently: a part that looked independent at build
//! time can turn dependent under new rows. [`check_update`] re-runs the
//! scoring of the divide step on current data and reports every part that
//! now fails the threshold; [`refresh_statistics`] re-splits exactly those
//! parts and recomputes all stored fanout statistics, leaving the tree
//! shape and the single-table models untouched (rebuild for those).
//!
//! Parts that were capped by the size budget at build time already run
//! without the guarantee and are skipped. Conversely, a reported part the
//! divider cannot separate any further stays flagged on the next check;
//! treat a persistent report as a signal to rebuild the node's subtree.

use serde::Serialize;

use crate::catalog::{ColId, Database};
use crate::correlate::{fanout_score, max_pair_score, CorrelationParams, SampleSet};
use crate::error::Result;
use crate::gluetree::build::{
    context_fanouts, context_of_rows, node_join_sample, node_samples, node_statistics,
};
use crate::gluetree::{
    divide_cross, divide_fanout, singleton_partition, BuildConfig, DecompNode, DecompositionTree,
    PartitionStrategy,
};
use crate::regions::RegularRegion;

/// Which of an inner node's three partition families a part belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PartitionKind {
    TSide,
    SSide,
    Context,
}

/// A part whose dependence score exceeds the divide threshold on current
/// data.
#[derive(Debug, Clone, Serialize)]
pub struct StalePart {
    /// Turns from the root to the owning node: 0 = left child, 1 = right.
    pub node_path: Vec<u8>,
    pub partition: PartitionKind,
    pub part: usize,
    pub score: f64,
}

/// Rescore every non-capped part of every inner node against `db` and
/// return the ones whose dependence now exceeds the threshold
/// (`tau` overrides the tree's build-time value).
pub fn check_update(
    tree: &DecompositionTree,
    db: &Database,
    tau: Option<f64>,
) -> Result<Vec<StalePart>> {
    let tau = tau.unwrap_or(tree.config.tau);
    let mut out = Vec::new();
    check_node(db, &tree.config, &tree.root, tau, &mut Vec::new(), &mut out)?;
    Ok(out)
}

fn check_node(
    db: &Database,
    config: &BuildConfig,
    node: &DecompNode,
    tau: f64,
    path: &mut Vec<u8>,
    out: &mut Vec<StalePart>,
) -> Result<()> {
    let DecompNode::Inner {
        left,
        right,
        edge,
        t_tables,
        s_tables,
        contexts,
        t_parts,
        s_parts,
        ctx_capped,
        t_capped,
        s_capped,
        ..
    } = node
    else {
        return Ok(());
    };

    let ns = node_samples(db, config, *t_tables, *s_tables, edge.left, edge.right, Some(contexts))?;

    for (k, part) in t_parts.iter().enumerate() {
        if t_capped[k] {
            continue;
        }
        let score = fanout_rescore(&ns.t_stat, part, &ns.t_fanout_attrs, &ns.t_params)?;
        if score > tau {
            out.push(StalePart {
                node_path: path.clone(),
                partition: PartitionKind::TSide,
                part: k,
                score,
            });
        }
    }
    for (j, part) in s_parts.iter().enumerate() {
        if s_capped[j] {
            continue;
        }
        let score = fanout_rescore(&ns.s_stat, part, &ns.s_fanout_attrs, &ns.s_params)?;
        if score > tau {
            out.push(StalePart {
                node_path: path.clone(),
                partition: PartitionKind::SSide,
                part: j,
                score,
            });
        }
    }
    if !ns.t_payload.is_empty() && !ns.s_payload.is_empty() {
        let (node_ss, cross_params) = node_join_sample(db, config, t_tables | s_tables)?;
        for (i, ctx) in contexts.iter().enumerate() {
            if ctx_capped[i] {
                continue;
            }
            let rows = node_ss.rows_in(ctx);
            if rows.len() < 3 {
                continue;
            }
            let sub = node_ss.restrict(&rows);
            let (score, _) = max_pair_score(&sub, &ns.t_payload, &ns.s_payload, &cross_params)?;
            if score > tau {
                out.push(StalePart {
                    node_path: path.clone(),
                    partition: PartitionKind::Context,
                    part: i,
                    score,
                });
            }
        }
    }

    path.push(0);
    check_node(db, config, left, tau, path, out)?;
    path.pop();
    path.push(1);
    check_node(db, config, right, tau, path, out)?;
    path.pop();
    Ok(())
}

/// Max dependence between any offered attribute and any fanout column,
/// over the rows of one part.
fn fanout_rescore(
    ss: &SampleSet,
    part: &RegularRegion,
    attrs: &[ColId],
    params: &CorrelationParams,
) -> Result<f64> {
    let rows = ss.rows_in(part);
    if rows.len() < 3 || attrs.is_empty() {
        return Ok(0.0);
    }
    let sub = ss.restrict(&rows);
    let names: Vec<String> = sub.fanout_names().map(str::to_owned).collect();
    let mut best = 0.0f64;
    for name in &names {
        for a in attrs {
            best = best.max(fanout_score(&sub, *a, name, params)?);
        }
    }
    Ok(best)
}

/// Re-run the divide pass of every inner node in place against `db`:
/// re-split each part that fails the threshold now, then recompute all
/// stored fanout statistics, bottom-up. Returns the parts that were
/// re-split (or newly capped). Contexts go first so the T side is rescored
/// against the refreshed restricted fanouts. Leaf models keep their
/// build-time data; per-part weights stay consistent because they are
/// recomputed through those same models.
pub fn refresh_statistics(tree: &mut DecompositionTree, db: &Database) -> Result<Vec<StalePart>> {
    let config = tree.config.clone();
    let mut out = Vec::new();
    refresh_node(db, &config, &mut tree.root, &mut Vec::new(), &mut out)?;
    Ok(out)
}

fn refresh_node(
    db: &Database,
    config: &BuildConfig,
    node: &mut DecompNode,
    path: &mut Vec<u8>,
    out: &mut Vec<StalePart>,
) -> Result<()> {
    let DecompNode::Inner {
        left,
        right,
        edge,
        t_tables,
        s_tables,
        contexts,
        t_parts,
        s_parts,
        ctx_capped,
        t_capped,
        s_capped,
        e_t,
        e_s,
        m,
        m_null,
        t_scatter,
        s_scatter,
        t_part_w,
        ctx_denom,
        smass_full,
        s_norm,
        t_rows,
        s_rows,
        w_rows,
    } = node
    else {
        return Ok(());
    };

    // Children first, so this node's part weights run through refreshed
    // descendant statistics.
    path.push(0);
    refresh_node(db, config, left, path, out)?;
    path.pop();
    path.push(1);
    refresh_node(db, config, right, path, out)?;
    path.pop();

    let mut ns = node_samples(db, config, *t_tables, *s_tables, edge.left, edge.right, None)?;

    if config.partitions == PartitionStrategy::Singleton {
        // Point partitions cannot be split further; rebuild them from the
        // combinations present now.
        *contexts = singleton_partition(&ns.s_full, &ns.s_fanout_attrs);
        *s_parts = contexts.clone();
        *t_parts = singleton_partition(&ns.t_full, &ns.t_fanout_attrs);
        *ctx_capped = vec![false; contexts.len()];
        *s_capped = vec![false; contexts.len()];
        *t_capped = vec![false; t_parts.len()];
    } else {
        // Contexts first: the restricted fanout columns used to rescore
        // the T side key off the final context list.
        if !ns.t_payload.is_empty() && !ns.s_payload.is_empty() {
            let (node_ss, cross_params) = node_join_sample(db, config, *t_tables | *s_tables)?;
            let mut i = 0;
            while i < contexts.len() {
                if ctx_capped[i] {
                    i += 1;
                    continue;
                }
                let rows = node_ss.rows_in(&contexts[i]);
                if rows.len() < 3 {
                    i += 1;
                    continue;
                }
                let sub = node_ss.restrict(&rows);
                let (score, _) =
                    max_pair_score(&sub, &ns.t_payload, &ns.s_payload, &cross_params)?;
                if score <= config.tau {
                    i += 1;
                    continue;
                }
                out.push(StalePart {
                    node_path: path.clone(),
                    partition: PartitionKind::Context,
                    part: i,
                    score,
                });
                let budget = part_budget(config.max_parts, contexts.len());
                if budget < 2 {
                    ctx_capped[i] = true;
                    i += 1;
                    continue;
                }
                let dc = divide_cross(
                    &sub,
                    &ns.t_payload,
                    &ns.s_payload,
                    config.tau,
                    budget,
                    config.min_rows,
                    &cross_params,
                )?;
                i += splice_part(contexts, ctx_capped, i, dc.parts, dc.capped)?;
            }
        }

        let mut j = 0;
        while j < s_parts.len() {
            if s_capped[j] {
                j += 1;
                continue;
            }
            let score = fanout_rescore(&ns.s_stat, &s_parts[j], &ns.s_fanout_attrs, &ns.s_params)?;
            if score <= config.tau {
                j += 1;
                continue;
            }
            out.push(StalePart {
                node_path: path.clone(),
                partition: PartitionKind::SSide,
                part: j,
                score,
            });
            let budget = part_budget(config.max_parts, s_parts.len());
            if budget < 2 {
                s_capped[j] = true;
                j += 1;
                continue;
            }
            let rows = ns.s_stat.rows_in(&s_parts[j]);
            let sub = ns.s_stat.restrict(&rows);
            let sd = divide_fanout(
                &sub,
                &ns.s_fanout_attrs,
                "fanout",
                config.tau,
                budget,
                config.min_rows,
                &ns.s_params,
            )?;
            j += splice_part(s_parts, s_capped, j, sd.parts, sd.capped)?;
        }

        let ctx_of = context_of_rows(&ns.s_full, contexts);
        for (i, col) in
            context_fanouts(&ns.t_stat, ns.t_key, &ns.s_full, ns.s_key, &ctx_of, contexts.len())
                .into_iter()
                .enumerate()
        {
            ns.t_stat.add_fanout(format!("ctx{i}"), col);
        }
        let mut k = 0;
        while k < t_parts.len() {
            if t_capped[k] {
                k += 1;
                continue;
            }
            let score = fanout_rescore(&ns.t_stat, &t_parts[k], &ns.t_fanout_attrs, &ns.t_params)?;
            if score <= config.tau {
                k += 1;
                continue;
            }
            out.push(StalePart {
                node_path: path.clone(),
                partition: PartitionKind::TSide,
                part: k,
                score,
            });
            let budget = part_budget(config.max_parts, t_parts.len());
            if budget < 2 {
                t_capped[k] = true;
                k += 1;
                continue;
            }
            let rows = ns.t_stat.rows_in(&t_parts[k]);
            let sub = ns.t_stat.restrict(&rows);
            let td = divide_fanout(
                &sub,
                &ns.t_fanout_attrs,
                "fanout",
                config.tau,
                budget,
                config.min_rows,
                &ns.t_params,
            )?;
            k += splice_part(t_parts, t_capped, k, td.parts, td.capped)?;
        }
    }

    let st = node_statistics(config, left, right, &ns, contexts, t_parts, s_parts)?;
    *e_t = st.e_t;
    *e_s = st.e_s;
    *m = st.m;
    *m_null = st.m_null;
    *t_scatter = st.t_scatter;
    *s_scatter = st.s_scatter;
    *t_part_w = st.t_part_w;
    *ctx_denom = st.ctx_denom;
    *smass_full = st.smass_full;
    *s_norm = st.s_norm;
    *t_rows = st.t_rows;
    *s_rows = st.s_rows;
    *w_rows = st.w_rows;
    Ok(())
}

/// How many parts one re-split may produce without pushing the partition
/// past the global size budget.
fn part_budget(max_parts: usize, current: usize) -> usize {
    (max_parts + 1).saturating_sub(current)
}

/// Replace part `idx` with its sub-parts and return how many went in. The
/// divider tiles the part's rows starting from an unconstrained region, so
/// each sub-part is intersected with the original to keep the family
/// disjoint.
fn splice_part(
    parts: &mut Vec<RegularRegion>,
    capped: &mut Vec<bool>,
    idx: usize,
    sub_parts: Vec<RegularRegion>,
    sub_capped: Vec<bool>,
) -> Result<usize> {
    let base = parts[idx].clone();
    let mut nested = Vec::with_capacity(sub_parts.len());
    for p in sub_parts {
        nested.push(base.intersect(&p)?);
    }
    let n = nested.len().max(1);
    parts.splice(idx..=idx, nested);
    capped.splice(idx..=idx, sub_capped);
    Ok(n)
}
