//! Dependence scoring and sampling: the raw statistics every partitioning
//! decision is made from.
//!
//! The dependence measure is the randomized dependence coefficient (RDC):
//! rank/copula-transform both inputs, push them through seeded random
//! sinusoidal features, and take the largest canonical correlation between
//! the two feature sets. It is distribution-free, detects nonlinear
//! dependence, and — because it only sees ranks — is invariant under
//! strictly monotone transforms of either input.

use std::collections::{BTreeMap, HashMap};

use nalgebra::{DMatrix, SymmetricEigen};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::catalog::{ColId, Database, JoinEdge, TableData, Value};
use crate::error::{Error, Result};
use crate::join::{materialize, JoinedRows};
use crate::regions::RegularRegion;

#[derive(Debug, Clone, Copy)]
pub struct CorrelationParams {
    /// Number of random sinusoidal features per side.
    pub k: usize,
    /// Standard deviation of the Gaussian projection weights.
    pub s: f64,
    pub seed: u64,
}

impl Default for CorrelationParams {
    fn default() -> Self {
        CorrelationParams { k: 20, s: 1.0 / 6.0, seed: 0 }
    }
}

/// Where a [`SampleSet`]'s rows came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    SingleTable { table: usize },
    Join { left: usize, right: usize, method: SampleMethod },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SampleMethod {
    /// Build the full outer join exactly, then reservoir-sample.
    Materialize,
    /// Rejection sampling against the max fanout; pk_fk edges only.
    OlkenChain,
}

/// Columnar row sample, possibly spanning a join (null cells mark outer-join
/// extension), with optional named fanout columns aligned to the rows.
#[derive(Debug, Clone)]
pub struct SampleSet {
    pub cols: Vec<ColId>,
    index: BTreeMap<ColId, usize>,
    /// Column-major cells; `None` only ever comes from null extension.
    data: Vec<Vec<Option<Value>>>,
    pub rows: usize,
    fanouts: BTreeMap<String, Vec<u32>>,
    pub provenance: Provenance,
    pub seed: u64,
}

impl SampleSet {
    pub fn from_table(data: &TableData, rows: &[usize]) -> SampleSet {
        let cols: Vec<ColId> = (0..data.columns.len())
            .map(|a| ColId::new(data.table, a))
            .collect();
        let matrix = cols
            .iter()
            .map(|c| rows.iter().map(|&r| Some(data.value(r, c.attr as usize))).collect())
            .collect();
        SampleSet {
            index: cols.iter().enumerate().map(|(i, &c)| (c, i)).collect(),
            cols,
            data: matrix,
            rows: rows.len(),
            fanouts: BTreeMap::new(),
            provenance: Provenance::SingleTable { table: data.table },
            seed: 0,
        }
    }

    pub fn from_joined(jr: &JoinedRows, rows: &[usize], provenance: Provenance) -> SampleSet {
        let cols = jr.cols.clone();
        let matrix = cols
            .iter()
            .map(|&c| rows.iter().map(|&r| jr.get(r, c)).collect())
            .collect();
        SampleSet {
            index: cols.iter().enumerate().map(|(i, &c)| (c, i)).collect(),
            cols,
            data: matrix,
            rows: rows.len(),
            fanouts: BTreeMap::new(),
            provenance,
            seed: 0,
        }
    }

    pub fn has_col(&self, col: ColId) -> bool {
        self.index.contains_key(&col)
    }

    pub fn get(&self, row: usize, col: ColId) -> Option<Value> {
        self.data[self.index[&col]][row]
    }

    pub fn column(&self, col: ColId) -> &[Option<Value>] {
        &self.data[self.index[&col]]
    }

    pub fn add_fanout(&mut self, name: impl Into<String>, f: Vec<u32>) {
        assert_eq!(f.len(), self.rows, "fanout column must align with rows");
        self.fanouts.insert(name.into(), f);
    }

    pub fn fanout(&self, name: &str) -> Option<&[u32]> {
        self.fanouts.get(name).map(Vec::as_slice)
    }

    pub fn fanout_names(&self) -> impl Iterator<Item = &str> {
        self.fanouts.keys().map(String::as_str)
    }

    /// Row indices whose cells satisfy the region (nulls never match).
    pub fn rows_in(&self, region: &RegularRegion) -> Vec<usize> {
        (0..self.rows)
            .filter(|&r| region.contains_row(|c| self.has_col(c).then(|| self.get(r, c)).flatten()))
            .collect()
    }

    /// New sample holding only the given rows (fanouts restricted too).
    pub fn restrict(&self, keep: &[usize]) -> SampleSet {
        SampleSet {
            cols: self.cols.clone(),
            index: self.index.clone(),
            data: self
                .data
                .iter()
                .map(|col| keep.iter().map(|&r| col[r]).collect())
                .collect(),
            rows: keep.len(),
            fanouts: self
                .fanouts
                .iter()
                .map(|(n, f)| (n.clone(), keep.iter().map(|&r| f[r]).collect()))
                .collect(),
            provenance: self.provenance,
            seed: self.seed,
        }
    }
}

// ---------------------------------------------------------------------------
// RDC

/// Randomized dependence coefficient between two equal-length vectors,
/// in [0,1]. Deterministic given `params.seed`; constant inputs score 0.
pub fn rdc_score(x: &[f64], y: &[f64], params: &CorrelationParams) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::Sample(format!(
            "correlation inputs differ in length ({} vs {})",
            x.len(),
            y.len()
        )));
    }
    if x.len() < 3 {
        return Err(Error::Sample(format!(
            "correlation needs at least 3 rows, got {}",
            x.len()
        )));
    }
    let constant = |v: &[f64]| v.iter().all(|&a| a == v[0]);
    if constant(x) || constant(y) {
        return Ok(0.0);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let fx = sin_features(&copula(x), params, &mut rng);
    let fy = sin_features(&copula(y), params, &mut rng);
    let r = max_canonical_correlation(&fx, &fy);
    Ok(if r.is_finite() { r.clamp(0.0, 1.0) } else { 0.0 })
}

/// Average-rank copula transform: maps values to (0,1) preserving order,
/// averaging ranks over ties.
fn copula(x: &[f64]) -> Vec<f64> {
    let n = x.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| x[i].total_cmp(&x[j]));
    let mut u = vec![0.0; n];
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && x[order[j + 1]] == x[order[i]] {
            j += 1;
        }
        // 1-based ranks i+1 ..= j+1 averaged, scaled by n+1.
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &r in &order[i..=j] {
            u[r] = avg / (n as f64 + 1.0);
        }
        i = j + 1;
    }
    u
}

/// Project `[u; 1]` through k Gaussian weight pairs (sd = s) and apply sine.
fn sin_features(u: &[f64], params: &CorrelationParams, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let n = u.len();
    let mut m = DMatrix::zeros(n, params.k);
    for j in 0..params.k {
        let w: f64 = params.s * rng.sample::<f64, _>(StandardNormal);
        let b: f64 = params.s * rng.sample::<f64, _>(StandardNormal);
        for i in 0..n {
            m[(i, j)] = (w * u[i] + b).sin();
        }
    }
    m
}

/// Largest canonical correlation between two centered feature matrices:
/// the top singular value of Cxx^{-1/2} · Cxy · Cyy^{-1/2}, ridged for
/// stability.
fn max_canonical_correlation(fx: &DMatrix<f64>, fy: &DMatrix<f64>) -> f64 {
    const RIDGE: f64 = 1e-6;
    let n = fx.nrows() as f64;
    let center = |m: &DMatrix<f64>| {
        let mut c = m.clone();
        for j in 0..c.ncols() {
            let mean = c.column(j).sum() / n;
            for i in 0..c.nrows() {
                c[(i, j)] -= mean;
            }
        }
        c
    };
    let (cx, cy) = (center(fx), center(fy));
    let cxx = cx.transpose() * &cx / n;
    let cyy = cy.transpose() * &cy / n;
    let cxy = cx.transpose() * &cy / n;
    let inv_sqrt = |m: DMatrix<f64>| {
        let eig = SymmetricEigen::new(m);
        let d = DMatrix::from_diagonal(&eig.eigenvalues.map(|l| 1.0 / l.max(RIDGE).sqrt()));
        &eig.eigenvectors * d * eig.eigenvectors.transpose()
    };
    let m = inv_sqrt(cxx) * cxy * inv_sqrt(cyy);
    m.svd(false, false).singular_values.max()
}

/// RDC between two sample columns, computed over rows where both cells are
/// present. Fewer than 3 joint rows count as no evidence of dependence (0).
/// Each pair gets its own projection seed derived from the column ids, so
/// scores are deterministic but not artificially tied across pairs.
pub fn pair_score(ss: &SampleSet, a: ColId, b: ColId, params: &CorrelationParams) -> Result<f64> {
    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    for r in 0..ss.rows {
        if let (Some(x), Some(y)) = (ss.get(r, a), ss.get(r, b)) {
            xs.push(x.as_f64());
            ys.push(y.as_f64());
        }
    }
    if xs.len() < 3 {
        return Ok(0.0);
    }
    rdc_score(&xs, &ys, &CorrelationParams { seed: mix_seed(params.seed, a, b), ..*params })
}

/// RDC between a sample column and a fanout column, over rows where the
/// attribute cell is present.
pub fn fanout_score(
    ss: &SampleSet,
    a: ColId,
    fanout_name: &str,
    params: &CorrelationParams,
) -> Result<f64> {
    let f = ss
        .fanout(fanout_name)
        .ok_or_else(|| Error::Sample(format!("no fanout column named {fanout_name:?}")))?;
    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    for (r, &fr) in f.iter().enumerate() {
        if let Some(x) = ss.get(r, a) {
            xs.push(x.as_f64());
            ys.push(fr as f64);
        }
    }
    if xs.len() < 3 {
        return Ok(0.0);
    }
    let salt = ColId { table: u32::MAX, attr: fanout_name.len() as u32 };
    rdc_score(&xs, &ys, &CorrelationParams { seed: mix_seed(params.seed, a, salt), ..*params })
}

fn mix_seed(seed: u64, a: ColId, b: ColId) -> u64 {
    // SplitMix64 over the packed column pair.
    let packed = ((a.table as u64) << 48)
        ^ ((a.attr as u64) << 32)
        ^ ((b.table as u64) << 16)
        ^ (b.attr as u64);
    let mut z = seed ^ packed.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Max RDC over all cross pairs (a ∈ `a_cols`, b ∈ `b_cols`) of one aligned
/// sample, with the maximizing pair. The argmax drives split selection.
pub fn max_pair_score(
    ss: &SampleSet,
    a_cols: &[ColId],
    b_cols: &[ColId],
    params: &CorrelationParams,
) -> Result<(f64, (ColId, ColId))> {
    if a_cols.is_empty() || b_cols.is_empty() {
        return Err(Error::Sample("correlation scope is empty".into()));
    }
    let mut best = (-1.0, (a_cols[0], b_cols[0]));
    for &a in a_cols {
        for &b in b_cols {
            let s = pair_score(ss, a, b, params)?;
            if s > best.0 {
                best = (s, (a, b));
            }
        }
    }
    Ok(best)
}

// ---------------------------------------------------------------------------
// Sampling

/// Uniform without-replacement choice of `n` of `total` row indices,
/// returned sorted; `n >= total` selects everything.
pub fn sample_indices(total: usize, n: usize, seed: u64) -> Vec<usize> {
    if n >= total {
        return (0..total).collect();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut idx: Vec<usize> = (0..total).collect();
    // Partial Fisher-Yates: the first n entries become the sample.
    for i in 0..n {
        let j = rng.gen_range(i..idx.len());
        idx.swap(i, j);
    }
    idx.truncate(n);
    idx.sort_unstable();
    idx
}

/// Uniform without-replacement sample of `n` rows; `n >= row_count` returns
/// the whole table in row order.
pub fn draw_sample(data: &TableData, n: usize, seed: u64) -> SampleSet {
    assert!(n >= 1, "sample size must be at least 1");
    let mut ss = SampleSet::from_table(data, &sample_indices(data.rows, n, seed));
    ss.seed = seed;
    ss
}

/// Sample `n` rows distributed as uniform draws from the full outer join of
/// the edge's two tables.
///
/// `Materialize` builds the join exactly and reservoir-samples (returns the
/// whole join when `n` covers it). `OlkenChain` avoids materialization:
/// draw a right-table row uniformly, accept with probability F*/max(F*)
/// where F counts its left partners, then emit one uniform partner (or the
/// null extension for dangling rows); left rows with no partner form a
/// separate branch entered with probability proportional to their count.
pub fn join_sample(
    db: &Database,
    edge: &JoinEdge,
    n: usize,
    method: SampleMethod,
    seed: u64,
    cap: usize,
) -> Result<SampleSet> {
    if n == 0 {
        return Err(Error::Sample("join sample size must satisfy n ≥ 1".into()));
    }
    let (lt, rt) = (edge.left.table as usize, edge.right.table as usize);
    let provenance = Provenance::Join { left: lt, right: rt, method };
    match method {
        SampleMethod::Materialize => {
            let jr = materialize(db, &[lt, rt].into(), cap)?;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let rows: Vec<usize> = if n >= jr.rows {
                (0..jr.rows).collect()
            } else {
                // Reservoir over the joined rows.
                let mut keep: Vec<usize> = (0..n).collect();
                for r in n..jr.rows {
                    let j = rng.gen_range(0..=r);
                    if j < n {
                        keep[j] = r;
                    }
                }
                keep.sort_unstable();
                keep
            };
            let mut ss = SampleSet::from_joined(&jr, &rows, provenance);
            ss.seed = seed;
            Ok(ss)
        }
        SampleMethod::OlkenChain => {
            if edge.kind != crate::catalog::JoinKind::PkFk {
                return Err(Error::Sample(
                    "olken_chain sampling requires a pk_fk edge".into(),
                ));
            }
            olken_two_table(db, edge, n, seed)
        }
    }
}

fn olken_two_table(db: &Database, edge: &JoinEdge, n: usize, seed: u64) -> Result<SampleSet> {
    let left = &db.tables[edge.left.table as usize];
    let right = &db.tables[edge.right.table as usize];
    let (lk, rk) = (edge.left.attr as usize, edge.right.attr as usize);

    // Partner lists for every right row, and the left rows nothing matches.
    let mut by_key: HashMap<u64, Vec<usize>> = HashMap::new();
    for r in 0..left.rows {
        by_key.entry(left.value(r, lk).key_bits()).or_default().push(r);
    }
    let empty: Vec<usize> = Vec::new();
    let partners: Vec<&Vec<usize>> = (0..right.rows)
        .map(|r| by_key.get(&right.value(r, rk).key_bits()).unwrap_or(&empty))
        .collect();
    let mut matched_left: Vec<bool> = vec![false; left.rows];
    for p in &partners {
        for &l in p.iter() {
            matched_left[l] = true;
        }
    }
    let dangling_left: Vec<usize> =
        (0..left.rows).filter(|&r| !matched_left[r]).collect();

    let star_sum: usize = partners.iter().map(|p| p.len().max(1)).sum();
    let max_star = partners.iter().map(|p| p.len().max(1)).max().unwrap_or(1);
    let total = star_sum + dangling_left.len();
    if total == 0 {
        return Err(Error::Sample("cannot sample an empty join".into()));
    }

    let n_cols = left.columns.len() + right.columns.len();
    let mut data: Vec<Vec<Option<Value>>> = vec![Vec::with_capacity(n); n_cols];
    let push_pair = |data: &mut Vec<Vec<Option<Value>>>, l: Option<usize>, r: Option<usize>| {
        for (a, col) in data.iter_mut().take(left.columns.len()).enumerate() {
            col.push(l.map(|row| left.value(row, a)));
        }
        for (a, col) in data.iter_mut().skip(left.columns.len()).enumerate() {
            col.push(r.map(|row| right.value(row, a)));
        }
    };

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..n {
        if !dangling_left.is_empty() && rng.gen_range(0..total) < dangling_left.len() {
            let l = dangling_left[rng.gen_range(0..dangling_left.len())];
            push_pair(&mut data, Some(l), None);
            continue;
        }
        // Rejection loop: right rows accepted proportionally to F*.
        loop {
            let r = rng.gen_range(0..right.rows);
            let f_star = partners[r].len().max(1);
            if rng.gen_range(0..max_star) >= f_star {
                continue;
            }
            match partners[r].as_slice() {
                [] => push_pair(&mut data, None, Some(r)),
                p => push_pair(&mut data, Some(p[rng.gen_range(0..p.len())]), Some(r)),
            }
            break;
        }
    }

    let cols: Vec<ColId> = (0..left.columns.len())
        .map(|a| ColId::new(left.table, a))
        .chain((0..right.columns.len()).map(|a| ColId::new(right.table, a)))
        .collect();
    Ok(SampleSet {
        index: cols.iter().enumerate().map(|(i, &c)| (c, i)).collect(),
        cols,
        data,
        rows: n,
        fanouts: BTreeMap::new(),
        provenance: Provenance::Join {
            left: left.table,
            right: right.table,
            method: SampleMethod::OlkenChain,
        },
        seed,
    })
}

// ---------------------------------------------------------------------------
// Fanout columns

/// Per-row join partner counts, with the outer-join clamp F* = max(F, 1)
/// alongside (a row that joins nothing still occurs once, null-extended).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FanoutColumn {
    pub f: Vec<u32>,
}

impl FanoutColumn {
    pub fn clamped(&self) -> Vec<u32> {
        self.f.iter().map(|&v| v.max(1)).collect()
    }

    pub fn star_sum(&self) -> u64 {
        self.f.iter().map(|&v| u64::from(v.max(1))).sum()
    }
}

/// F_{a→b}: for each row of `a`, how many rows of `b` share its key under
/// `edge` (which must join the two tables, in either orientation).
pub fn compute_fanout(a: &TableData, b: &TableData, edge: &JoinEdge) -> Result<FanoutColumn> {
    let (a_key, b_key) = if edge.left.table as usize == a.table
        && edge.right.table as usize == b.table
    {
        (edge.left.attr as usize, edge.right.attr as usize)
    } else if edge.right.table as usize == a.table && edge.left.table as usize == b.table {
        (edge.right.attr as usize, edge.left.attr as usize)
    } else {
        return Err(Error::Sample(format!(
            "edge does not join tables {} and {}",
            a.table, b.table
        )));
    };
    let mut counts: HashMap<u64, u32> = HashMap::new();
    for r in 0..b.rows {
        *counts.entry(b.value(r, b_key).key_bits()).or_insert(0) += 1;
    }
    let f = (0..a.rows)
        .map(|r| counts.get(&a.value(r, a_key).key_bits()).copied().unwrap_or(0))
        .collect();
    Ok(FanoutColumn { f })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::JoinKind;
    use crate::oracle::{build_database, exec_exact, fixture_a, DEFAULT_JOIN_CAP};
    use crate::regions::parse_query;

    fn params(seed: u64) -> CorrelationParams {
        CorrelationParams { seed, ..Default::default() }
    }

    #[test]
    fn rdc_detects_self_dependence() {
        let x: Vec<f64> = (1..=1000).map(f64::from).collect();
        let score = rdc_score(&x, &x, &params(42)).unwrap();
        assert!(score >= 0.95, "self-dependence scored {score}");
    }

    #[test]
    fn rdc_scores_independent_inputs_low() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let x: Vec<f64> = (0..1000).map(|_| rng.gen::<f64>()).collect();
        let y: Vec<f64> = (0..1000).map(|_| rng.gen::<f64>()).collect();
        let score = rdc_score(&x, &y, &params(42)).unwrap();
        assert!(score <= 0.2, "independent inputs scored {score}");
    }

    #[test]
    fn rdc_detects_nonlinear_and_nonmonotone_dependence() {
        // A parabola has zero linear correlation but full dependence.
        let x: Vec<f64> = (0..1000).map(|i| (i as f64 - 500.0) / 500.0).collect();
        let y: Vec<f64> = x.iter().map(|v| v * v).collect();
        let score = rdc_score(&x, &y, &params(42)).unwrap();
        assert!(score >= 0.5, "deterministic dependence scored only {score}");
    }

    #[test]
    fn rdc_is_zero_for_constant_input() {
        let x: Vec<f64> = (1..=100).map(f64::from).collect();
        let c = vec![3.5; 100];
        assert_eq!(rdc_score(&x, &c, &params(42)).unwrap(), 0.0);
        assert_eq!(rdc_score(&c, &x, &params(42)).unwrap(), 0.0);
    }

    #[test]
    fn rdc_rejects_mismatched_or_tiny_inputs() {
        let x = vec![1.0, 2.0, 3.0];
        assert!(rdc_score(&x, &x[..2], &params(0)).is_err());
        assert!(rdc_score(&x[..2], &x[..2], &params(0)).is_err());
    }

    #[test]
    fn rdc_ignores_monotone_reparameterization() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x: Vec<f64> = (0..500).map(|_| rng.gen::<f64>() * 10.0).collect();
        let y: Vec<f64> = x.iter().map(|v| v.sin() + rng.gen::<f64>()).collect();
        let base = rdc_score(&x, &y, &params(42)).unwrap();
        // Strictly monotone transforms preserve ranks, hence the score.
        let warped: Vec<f64> = x.iter().map(|v| v.exp()).collect();
        let score = rdc_score(&warped, &y, &params(42)).unwrap();
        assert!((score - base).abs() <= 0.05, "{score} vs {base}");
    }

    #[test]
    fn max_pair_score_finds_the_duplicated_column() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n = 600;
        let mut csv_t = String::from("pk,a0,a1\n");
        let mut csv_s = String::from("fk,b0\n");
        for i in 1..=n {
            let shared = rng.gen_range(0..50);
            csv_t.push_str(&format!("{i},{},{shared}\n", rng.gen_range(0..50)));
            csv_s.push_str(&format!("{i},{shared}\n"));
        }
        let schema = format!(
            r#"{{"tables":[
                {{"name":"T","columns":[{{"name":"pk","kind":"integer","min":1,"max":{n}}},
                                        {{"name":"a0","kind":"integer","min":0,"max":49}},
                                        {{"name":"a1","kind":"integer","min":0,"max":49}}]}},
                {{"name":"S","columns":[{{"name":"fk","kind":"integer","min":1,"max":{n}}},
                                        {{"name":"b0","kind":"integer","min":0,"max":49}}]}}],
               "joins":[{{"left":"T.pk","right":"S.fk","kind":"pk_fk"}}]}}"#
        );
        let db = build_database(&schema, &[("T", &csv_t), ("S", &csv_s)]).unwrap();
        let jr = materialize(&db, &[0usize, 1].into(), DEFAULT_JOIN_CAP).unwrap();
        let all: Vec<usize> = (0..jr.rows).collect();
        let ss = SampleSet::from_joined(
            &jr,
            &all,
            Provenance::Join { left: 0, right: 1, method: SampleMethod::Materialize },
        );
        let t_cols = [ColId::new(0, 1), ColId::new(0, 2)];
        let s_cols = [ColId::new(1, 1)];
        let (score, (a, b)) = max_pair_score(&ss, &t_cols, &s_cols, &params(42)).unwrap();
        assert!(score >= 0.95, "duplicated column scored {score}");
        assert_eq!((a, b), (ColId::new(0, 2), ColId::new(1, 1)));

        let err = max_pair_score(&ss, &[], &s_cols, &params(42)).unwrap_err();
        assert!(err.to_string().contains("scope"), "{err}");
    }

    #[test]
    fn pair_score_without_joint_rows_is_zero() {
        let db = fixture_a();
        let jr = materialize(&db, &[0usize, 1].into(), DEFAULT_JOIN_CAP).unwrap();
        let all: Vec<usize> = (0..jr.rows).collect();
        let ss = SampleSet::from_joined(
            &jr,
            &all,
            Provenance::Join { left: 0, right: 1, method: SampleMethod::Materialize },
        );
        // Only 3 joined rows have both sides present; restrict to the
        // dangling ones so no joint observation remains.
        let dangling: Vec<usize> = (0..ss.rows)
            .filter(|&r| ss.get(r, ColId::new(0, 1)).is_none() || ss.get(r, ColId::new(1, 1)).is_none())
            .collect();
        let restricted = ss.restrict(&dangling);
        let s = pair_score(&restricted, ColId::new(0, 1), ColId::new(1, 1), &params(0)).unwrap();
        assert_eq!(s, 0.0);
    }

    #[test]
    fn draw_sample_covers_and_reproduces() {
        let db = fixture_a();
        let t = &db.tables[0];
        let full = draw_sample(t, 4, 1);
        assert_eq!(full.rows, 4);
        let s1 = draw_sample(t, 2, 9);
        let s2 = draw_sample(t, 2, 9);
        assert_eq!(s1.rows, 2);
        for c in &s1.cols {
            assert_eq!(s1.column(*c), s2.column(*c));
        }
        let one = draw_sample(t, 1, 3);
        assert_eq!(one.rows, 1);
        // The sampled row is a real table row.
        let pk = one.get(0, ColId::new(0, 0)).unwrap();
        assert!((0..t.rows).any(|r| t.value(r, 0) == pk));
    }

    #[test]
    fn materialize_sample_with_enough_capacity_is_the_whole_join() {
        let db = fixture_a();
        let edge = db.catalog.edges[0];
        let ss = join_sample(&db, &edge, 10, SampleMethod::Materialize, 0, DEFAULT_JOIN_CAP).unwrap();
        assert_eq!(ss.rows, 6);
        // Exactly the 6 outer-join rows (2 dangling T, 1 dangling S).
        let a_col = ColId::new(0, 1);
        let b_col = ColId::new(1, 1);
        let mut rows: Vec<(Option<Value>, Option<Value>)> =
            (0..6).map(|r| (ss.get(r, a_col), ss.get(r, b_col))).collect();
        rows.sort_by_key(|(a, b)| {
            (a.map(|v| v.key_bits()).unwrap_or(0), b.map(|v| v.key_bits()).unwrap_or(0))
        });
        let int = |v: i64| Some(Value::Int(v));
        assert_eq!(
            rows,
            vec![
                (None, int(300)),
                (int(10), int(100)),
                (int(10), int(100)),
                (int(10), int(200)),
                (int(20), None),
                (int(20), None),
            ]
        );
    }

    #[test]
    fn olken_requires_pk_fk_and_positive_n() {
        let db = fixture_a();
        let mut edge = db.catalog.edges[0];
        edge.kind = JoinKind::FkFk;
        let err = join_sample(&db, &edge, 5, SampleMethod::OlkenChain, 0, DEFAULT_JOIN_CAP)
            .unwrap_err();
        assert!(err.to_string().contains("pk_fk"), "{err}");
        let err = join_sample(&db, &db.catalog.edges[0], 0, SampleMethod::Materialize, 0, DEFAULT_JOIN_CAP)
            .unwrap_err();
        assert!(err.to_string().contains("n ≥ 1"), "{err}");
    }

    #[test]
    fn olken_draws_look_uniform_over_the_outer_join() {
        let db = fixture_a();
        let edge = db.catalog.edges[0];
        let n = 6000;
        let ss = join_sample(&db, &edge, n, SampleMethod::OlkenChain, 17, DEFAULT_JOIN_CAP).unwrap();
        assert_eq!(ss.rows, n);
        // Bucket draws by their full (pk, b) identity; 6 join rows but the
        // two (1,100) copies collapse into one bucket of double mass.
        let pk = ColId::new(0, 0);
        let b = ColId::new(1, 1);
        let mut counts: HashMap<(Option<u64>, Option<u64>), usize> = HashMap::new();
        for r in 0..n {
            let key = (
                ss.get(r, pk).map(|v| v.key_bits()),
                ss.get(r, b).map(|v| v.key_bits()),
            );
            *counts.entry(key).or_insert(0) += 1;
        }
        assert_eq!(counts.len(), 5);
        for (key, &c) in &counts {
            let expect = if key.0 == Some(Value::Int(1).key_bits()) { n / 3 } else { n / 6 };
            let tol = expect / 4;
            assert!(
                c.abs_diff(expect) <= tol,
                "row {key:?} drawn {c} times, expected about {expect}"
            );
        }
    }

    #[test]
    fn fixture_fanout_vectors_match_hand_counts() {
        let db = fixture_a();
        let edge = db.catalog.edges[0];
        let t_to_s = compute_fanout(&db.tables[0], &db.tables[1], &edge).unwrap();
        assert_eq!(t_to_s.f, vec![2, 1, 0, 0]);
        assert_eq!(t_to_s.clamped(), vec![2, 1, 1, 1]);
        let s_to_t = compute_fanout(&db.tables[1], &db.tables[0], &edge).unwrap();
        assert_eq!(s_to_t.f, vec![1, 1, 1, 0]);
        assert_eq!(s_to_t.clamped(), vec![1, 1, 1, 1]);
    }

    #[test]
    fn identical_key_columns_give_group_size_fanouts() {
        let db = build_database(
            r#"{"tables":[
                {"name":"T","columns":[{"name":"pk","kind":"integer","min":0,"max":9}]},
                {"name":"S","columns":[{"name":"fk","kind":"integer","min":0,"max":9}]}],
               "joins":[{"left":"T.pk","right":"S.fk","kind":"fk_fk"}]}"#,
            &[("T", "pk\n1\n1\n2\n"), ("S", "fk\n1\n1\n2\n")],
        )
        .unwrap();
        let f = compute_fanout(&db.tables[0], &db.tables[1], &db.catalog.edges[0]).unwrap();
        assert_eq!(f.f, vec![2, 2, 1]);
        assert_eq!(f.clamped(), f.f);
    }

    #[test]
    fn clamped_fanout_sum_plus_dangling_reconstructs_join_size() {
        for (db, name) in [
            (fixture_a(), "fixture"),
            (
                crate::oracle::gen_synthetic(
                    &crate::oracle::SyntheticSpec::FanoutSkew { t_rows: 80 },
                    21,
                )
                .unwrap(),
                "fanout_skew",
            ),
        ] {
            let edge = db.catalog.edges[0];
            let f = compute_fanout(&db.tables[0], &db.tables[1], &edge).unwrap();
            let back = compute_fanout(&db.tables[1], &db.tables[0], &edge).unwrap();
            let dangling_right = back.f.iter().filter(|&&v| v == 0).count();
            let q = parse_query(r#"{"tables":["T","S"]}"#, &db.catalog).unwrap();
            let w = exec_exact(&db, &q, DEFAULT_JOIN_CAP).unwrap();
            assert_eq!(
                f.star_sum() + dangling_right as u64,
                w as u64,
                "join size identity failed on {name}"
            );
        }
    }

    #[test]
    fn joined_samples_keep_null_extension_cells() {
        let db = fixture_a();
        let jr = materialize(&db, &[0usize, 1].into(), DEFAULT_JOIN_CAP).unwrap();
        let all: Vec<usize> = (0..jr.rows).collect();
        let ss = SampleSet::from_joined(
            &jr,
            &all,
            Provenance::Join { left: 0, right: 1, method: SampleMethod::Materialize },
        );
        let nulls_t = (0..ss.rows).filter(|&r| ss.get(r, ColId::new(0, 0)).is_none()).count();
        let nulls_s = (0..ss.rows).filter(|&r| ss.get(r, ColId::new(1, 0)).is_none()).count();
        assert_eq!((nulls_t, nulls_s), (1, 2));
    }
}
