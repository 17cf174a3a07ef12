//! Partition refinement for decomposition-tree nodes.
//!
//! All three partition families come from the same loop: keep a worklist of
//! parts, score each part for residual dependence, and split the worst
//! attribute until every part scores at or below τ or hits a cap
//! (`max_parts` reached, or too few rows to trust another split). Splits
//! follow the value-goes-right convention of [`AttrConstraint::split_at`],
//! so sibling regions stay disjoint and tile their parent exactly.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::catalog::{AttrKind, ColId, Value};
use crate::correlate::{fanout_score, max_pair_score, CorrelationParams, SampleSet};
use crate::error::{Error, Result};
use crate::regions::{AttrConstraint, RegularRegion};

/// Disjoint regions plus, per part, whether refinement stopped on a cap
/// rather than on the dependence threshold.
#[derive(Debug, Clone)]
pub struct DividedPartition {
    pub parts: Vec<RegularRegion>,
    pub capped: Vec<bool>,
}

/// Fanout partition with its per-part statistics: Ê[F*] (clamped mean),
/// the fraction of rows with no partner, and the unclamped mean Ê[F].
#[derive(Debug, Clone)]
pub struct FanoutDivision {
    pub parts: Vec<RegularRegion>,
    pub capped: Vec<bool>,
    pub e_star: Vec<f64>,
    pub null_mass: Vec<f64>,
    pub scatter: Vec<f64>,
}

struct PartState {
    region: RegularRegion,
    rows: Vec<usize>,
    capped: bool,
    done: bool,
}

/// Generic refinement loop. `scorer` returns the part's worst residual
/// dependence and the attribute to split if it exceeds τ.
fn refine(
    ss: &SampleSet,
    tau: f64,
    max_parts: usize,
    min_rows: usize,
    seed: u64,
    mut scorer: impl FnMut(&SampleSet, &[usize]) -> Result<(f64, ColId)>,
) -> Result<Vec<PartState>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut parts = vec![PartState {
        region: RegularRegion::full(),
        rows: (0..ss.rows).collect(),
        capped: false,
        done: false,
    }];
    while let Some(idx) = parts.iter().position(|p| !p.done) {
        let (score, attr) = scorer(ss, &parts[idx].rows)?;
        if score <= tau {
            parts[idx].done = true;
            continue;
        }
        if parts.len() >= max_parts || parts[idx].rows.len() < min_rows {
            parts[idx].capped = true;
            parts[idx].done = true;
            continue;
        }
        match split_part(ss, &parts[idx], attr, &mut rng) {
            Some((left, right)) => {
                parts[idx] = left;
                parts.insert(idx + 1, right);
            }
            // The chosen attribute has a single distinct value; a positive
            // score against it should be impossible, but stop cleanly.
            None => parts[idx].done = true,
        }
    }
    Ok(parts)
}

/// Split one part on `attr`: numeric attributes at the upper-median row
/// value, categorical ones by a seeded random bisection of the codes
/// present. Returns `None` when the attribute cannot separate the rows.
fn split_part(
    ss: &SampleSet,
    part: &PartState,
    attr: ColId,
    rng: &mut ChaCha8Rng,
) -> Option<(PartState, PartState)> {
    let mut vals = Vec::with_capacity(part.rows.len());
    for &r in &part.rows {
        // Refinement only ever splits null-free attributes; a null here
        // would orphan the row from both children.
        vals.push(ss.get(r, attr)?);
    }
    let (left_c, right_c) = match vals[0] {
        Value::Cat(_) => {
            let mut codes: Vec<u32> = vals
                .iter()
                .map(|v| match v {
                    Value::Cat(c) => *c,
                    _ => unreachable!("mixed value kinds in one column"),
                })
                .collect();
            codes.sort_unstable();
            codes.dedup();
            if codes.len() < 2 {
                return None;
            }
            codes.shuffle(rng);
            let right = codes.split_off(codes.len() / 2);
            (AttrConstraint::codes(codes), AttrConstraint::codes(right))
        }
        Value::Int(_) | Value::Real(_) => {
            let kind =
                if matches!(vals[0], Value::Int(_)) { AttrKind::Integer } else { AttrKind::Real };
            let mut xs: Vec<f64> = vals.iter().map(Value::as_f64).collect();
            xs.sort_unstable_by(f64::total_cmp);
            let mut v = xs[xs.len() / 2];
            if v == xs[0] {
                // Upper median collided with the minimum: advance to the
                // next distinct value so the left half is nonempty.
                match xs.iter().find(|&&x| x > v) {
                    Some(&next) => v = next,
                    None => return None,
                }
            }
            let base = match part.region.constraints.get(&attr) {
                Some(c) => c.clone(),
                None => AttrConstraint::range(xs[0], xs[xs.len() - 1]),
            };
            base.split_at(v, kind)
        }
    };
    let split = |c: AttrConstraint| {
        let rows = part
            .rows
            .iter()
            .zip(&vals)
            .filter(|(_, v)| c.contains(v))
            .map(|(&r, _)| r)
            .collect();
        PartState {
            region: part.region.clone().with(attr, c),
            rows,
            capped: false,
            done: false,
        }
    };
    Some((split(left_c), split(right_c)))
}

fn unpack(parts: Vec<PartState>) -> (Vec<RegularRegion>, Vec<bool>, Vec<Vec<usize>>) {
    let mut regions = Vec::with_capacity(parts.len());
    let mut capped = Vec::with_capacity(parts.len());
    let mut rows = Vec::with_capacity(parts.len());
    for p in parts {
        regions.push(p.region);
        capped.push(p.capped);
        rows.push(p.rows);
    }
    (regions, capped, rows)
}

/// Partition a side by fanout dependence: split while some attribute still
/// predicts some fanout column of `ss` above τ. `primary` names the fanout
/// column the returned Ê/null-mass statistics are taken over; any further
/// fanout columns (e.g. context-restricted ones) only guide splitting.
pub fn divide_fanout(
    ss: &SampleSet,
    attrs: &[ColId],
    primary: &str,
    tau: f64,
    max_parts: usize,
    min_rows: usize,
    params: &CorrelationParams,
) -> Result<FanoutDivision> {
    let f_primary = ss
        .fanout(primary)
        .ok_or_else(|| Error::Build(format!("no fanout column named {primary:?}")))?
        .to_vec();
    let fanout_names: Vec<String> = ss.fanout_names().map(String::from).collect();

    let parts = refine(ss, tau, max_parts, min_rows, params.seed, |ss, rows| {
        if attrs.is_empty() {
            return Ok((0.0, ColId::new(0, 0)));
        }
        let local = ss.restrict(rows);
        let mut best = (0.0f64, attrs[0]);
        for &a in attrs {
            for name in &fanout_names {
                let s = fanout_score(&local, a, name, params)?;
                if s > best.0 {
                    best = (s, a);
                }
            }
        }
        Ok(best)
    })?;

    let (parts, capped, rows) = unpack(parts);
    let mut e_star = Vec::with_capacity(parts.len());
    let mut null_mass = Vec::with_capacity(parts.len());
    let mut scatter = Vec::with_capacity(parts.len());
    for part_rows in &rows {
        let n = part_rows.len() as f64;
        let (mut star, mut dangling, mut raw) = (0.0, 0.0, 0.0);
        for &r in part_rows {
            let f = f_primary[r] as f64;
            star += f.max(1.0);
            raw += f;
            if f == 0.0 {
                dangling += 1.0;
            }
        }
        if part_rows.is_empty() {
            // Degenerate but harmless: pretend one dangling row.
            e_star.push(1.0);
            null_mass.push(1.0);
            scatter.push(0.0);
        } else {
            e_star.push(star / n);
            null_mass.push(dangling / n);
            scatter.push(raw / n);
        }
    }
    Ok(FanoutDivision { parts, capped, e_star, null_mass, scatter })
}

/// Partition the S side into contexts: split S-side attributes while some
/// cross-table pair (T attribute, S attribute) still scores above τ within
/// a part. `ss` must span both sides (a join sample); parts constrain only
/// S-side attributes. Rows whose S side is entirely null-extended match no
/// context — they are the implicit null context.
pub fn divide_cross(
    ss: &SampleSet,
    t_attrs: &[ColId],
    s_attrs: &[ColId],
    tau: f64,
    max_parts: usize,
    min_rows: usize,
    params: &CorrelationParams,
) -> Result<DividedPartition> {
    if t_attrs.is_empty() || s_attrs.is_empty() {
        return Ok(DividedPartition { parts: vec![RegularRegion::full()], capped: vec![false] });
    }
    let parts = refine(ss, tau, max_parts, min_rows, params.seed, |ss, rows| {
        let local = ss.restrict(rows);
        let (score, (_, s_attr)) = max_pair_score(&local, t_attrs, s_attrs, params)?;
        Ok((score, s_attr))
    })?;
    let (parts, capped, _) = unpack(parts);
    Ok(DividedPartition { parts, capped })
}

/// One part per distinct value combination of `attrs` among the sample's
/// rows, in ascending value order. Every part pins every attribute to a
/// point, which is what makes two-table context estimation exact.
pub fn singleton_partition(ss: &SampleSet, attrs: &[ColId]) -> Vec<RegularRegion> {
    let mut combos: BTreeMap<Vec<u64>, Vec<Value>> = BTreeMap::new();
    'rows: for r in 0..ss.rows {
        let mut key = Vec::with_capacity(attrs.len());
        let mut vals = Vec::with_capacity(attrs.len());
        for &a in attrs {
            match ss.get(r, a) {
                Some(v) => {
                    key.push(v.key_bits());
                    vals.push(v);
                }
                // Null-extended cells belong to no combination.
                None => continue 'rows,
            }
        }
        combos.entry(key).or_insert(vals);
    }
    combos
        .into_values()
        .map(|vals| {
            let mut region = RegularRegion::full();
            for (&a, v) in attrs.iter().zip(&vals) {
                let c = match v {
                    Value::Cat(code) => AttrConstraint::codes([*code]),
                    other => AttrConstraint::point(other.as_f64()),
                };
                region = region.with(a, c);
            }
            region
        })
        .collect()
}

/// T-side fanout statistics against a context partition, all means taken
/// over the rows of `t_stat` falling in each part.
#[derive(Debug, Clone)]
pub struct TSideFanoutStats {
    /// Ê[F*_{T→S}] per part (clamped at 1).
    pub e_t: Vec<f64>,
    /// M[k][i]: mean count of S partners landing in context i.
    pub m: Vec<Vec<f64>>,
    /// Mean count of partners outside every context, plus the fraction of
    /// rows with no partner at all.
    pub m_null: Vec<f64>,
    /// Unclamped Ê[F_{T→S}] per part.
    pub t_scatter: Vec<f64>,
    /// Stat rows per part.
    pub part_rows: Vec<usize>,
}

/// Count, for every T-side part, how its rows' partners distribute over the
/// contexts. Partners are matched by join-key value against the *full* S
/// side; `t_stat` may be a sample. Rows with a null join key have no
/// partners. The exact identity Σ_i M[k][i] + m_null[k] = Ê[F*][k] holds
/// by construction whenever every S row lands in some context.
pub fn restricted_fanout_matrix(
    t_stat: &SampleSet,
    t_parts: &[RegularRegion],
    s_full: &SampleSet,
    contexts: &[RegularRegion],
    t_key: ColId,
    s_key: ColId,
) -> Result<TSideFanoutStats> {
    // Partner lookup and context membership over the full S side.
    let mut by_key: BTreeMap<u64, Vec<usize>> = BTreeMap::new();
    for r in 0..s_full.rows {
        if let Some(v) = s_full.get(r, s_key) {
            by_key.entry(v.key_bits()).or_default().push(r);
        }
    }
    let ctx_of: Vec<Option<usize>> = (0..s_full.rows)
        .map(|r| {
            contexts
                .iter()
                .position(|c| c.contains_row(|col| s_full.get(r, col)))
        })
        .collect();

    let kp = t_parts.len();
    let ki = contexts.len();
    let mut sums = TSideFanoutStats {
        e_t: vec![0.0; kp],
        m: vec![vec![0.0; ki]; kp],
        m_null: vec![0.0; kp],
        t_scatter: vec![0.0; kp],
        part_rows: vec![0; kp],
    };
    let empty = Vec::new();
    for r in 0..t_stat.rows {
        let Some(k) = t_parts
            .iter()
            .position(|p| p.contains_row(|col| t_stat.get(r, col)))
        else {
            continue; // Row outside every part carries no statistics.
        };
        sums.part_rows[k] += 1;
        let partners = match t_stat.get(r, t_key) {
            Some(v) => by_key.get(&v.key_bits()).unwrap_or(&empty),
            None => &empty,
        };
        let f = partners.len() as f64;
        sums.e_t[k] += f.max(1.0);
        sums.t_scatter[k] += f;
        if partners.is_empty() {
            sums.m_null[k] += 1.0;
        }
        for &s in partners {
            match ctx_of[s] {
                Some(i) => sums.m[k][i] += 1.0,
                None => sums.m_null[k] += 1.0,
            }
        }
    }
    for k in 0..kp {
        let n = sums.part_rows[k] as f64;
        if sums.part_rows[k] == 0 {
            // No evidence: treat as a single dangling row.
            sums.e_t[k] = 1.0;
            sums.m_null[k] = 1.0;
            sums.t_scatter[k] = 0.0;
        } else {
            sums.e_t[k] /= n;
            sums.m_null[k] /= n;
            sums.t_scatter[k] /= n;
            for i in 0..ki {
                sums.m[k][i] /= n;
            }
        }
    }
    Ok(sums)
}
