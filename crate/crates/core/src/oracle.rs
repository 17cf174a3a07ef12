//! Ground truth and benchmarking: exact query execution over materialized
//! outer joins, q-error accounting, bundled fixtures, and seeded synthetic
//! data / workload generators.
//!
//! Everything here is intentionally brute force — the oracle exists to be
//! obviously correct, not fast. Estimator code must never call into the
//! estimator-side statistics to produce "truth".

use std::collections::{BTreeSet, HashSet};

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::catalog::{
    ingest_csv, load_schema, AttrDomain, AttrKind, Catalog, ColId, Database, Value,
};
use crate::error::{Error, Result};
use crate::join::{materialize, minimal_cover};
use crate::regions::{AttrConstraint, Query, RegularRegion};

/// Default cap on materialized intermediate rows.
pub const DEFAULT_JOIN_CAP: usize = 10_000_000;

/// Exact cardinality: materialize the full outer join over the minimal
/// connected cover of the query's tables, then count rows matching the
/// region. Predicates never match null-extended cells.
pub fn exec_exact(db: &Database, query: &Query, cap: usize) -> Result<f64> {
    let cover = minimal_cover(&db.catalog, &query.tables);
    let jr = materialize(db, &cover, cap)?;
    let mut n = 0u64;
    for r in 0..jr.rows {
        if jr.row_in(r, &query.region) {
            n += 1;
        }
    }
    Ok(n as f64)
}

/// Exact distinct count of the projection onto the query's constrained
/// attributes, over rows matching the region.
pub fn exec_distinct(db: &Database, query: &Query, cap: usize) -> Result<f64> {
    let scope: Vec<ColId> = query.region.scope().collect();
    if scope.is_empty() {
        return Err(Error::Query(
            "distinct requires at least one constrained attribute".into(),
        ));
    }
    let cover = minimal_cover(&db.catalog, &query.tables);
    let jr = materialize(db, &cover, cap)?;
    let mut seen: HashSet<Vec<u64>> = HashSet::new();
    for r in 0..jr.rows {
        if jr.row_in(r, &query.region) {
            let key: Vec<u64> = scope
                .iter()
                .map(|&c| jr.get(r, c).map(|v| v.key_bits()).unwrap_or(u64::MAX))
                .collect();
            seen.insert(key);
        }
    }
    Ok(seen.len() as f64)
}

/// q-error with both sides clamped to at least one, so empty results
/// compare as 1.0 instead of dividing by zero.
pub fn qerror(estimate: f64, truth: f64) -> f64 {
    let e = estimate.max(1.0);
    let t = truth.max(1.0);
    (e / t).max(t / e)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct QErrorSummary {
    pub qerrors: Vec<f64>,
    pub median: f64,
    pub p90: f64,
    pub p99: f64,
    pub max: f64,
}

impl QErrorSummary {
    pub fn new(qerrors: Vec<f64>) -> QErrorSummary {
        let mut sorted = qerrors.clone();
        sorted.sort_by(f64::total_cmp);
        let pct = |p: f64| -> f64 {
            if sorted.is_empty() {
                return f64::NAN;
            }
            // Nearest-rank percentile.
            let rank = ((p / 100.0) * sorted.len() as f64).ceil() as usize;
            sorted[rank.clamp(1, sorted.len()) - 1]
        };
        QErrorSummary {
            median: pct(50.0),
            p90: pct(90.0),
            p99: pct(99.0),
            max: sorted.last().copied().unwrap_or(f64::NAN),
            qerrors,
        }
    }
}

// ---------------------------------------------------------------------------
// Fixtures

/// Schema and data for fixture A, the hand-checkable two-table database used
/// throughout the tests: T(pk, a) with 4 rows, S(fk, b) with 4 rows, a pk_fk
/// edge T.pk = S.fk, two dangling T rows and one dangling S row, full outer
/// join size 6.
pub fn fixture_a() -> Database {
    build_database(
        include_str!("../fixtures/fixture_a/schema.json"),
        &[
            ("T", include_str!("../fixtures/fixture_a/T.csv")),
            ("S", include_str!("../fixtures/fixture_a/S.csv")),
        ],
    )
    .expect("fixture A is well-formed")
}

/// Build a database from a schema document and `(table, csv)` pairs; every
/// declared table must be supplied. Test and fixture plumbing.
pub fn build_database(schema: &str, csvs: &[(&str, &str)]) -> Result<Database> {
    let mut catalog = load_schema(schema)?;
    let mut tables = Vec::new();
    for t in 0..catalog.tables.len() {
        let name = catalog.tables[t].name.clone();
        let (_, csv) = csvs
            .iter()
            .find(|(n, _)| *n == name)
            .ok_or_else(|| Error::Ingest(format!("no CSV supplied for table {name:?}")))?;
        tables.push(ingest_csv(&mut catalog, t, csv.as_bytes())?);
    }
    Ok(Database { catalog, tables })
}

// ---------------------------------------------------------------------------
// Synthetic data

/// Seeded dataset shapes for benchmarks and tests.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum SyntheticSpec {
    /// Cross-table independence that holds exactly, not just in expectation:
    /// S is the cross product of T's keys with a fixed block of `s_rows /
    /// t_rows` attribute rows, so every T row sees the same partner
    /// attribute distribution and there are no dangling keys.
    Independent { t_rows: usize, s_rows: usize, t_attrs: usize, s_attrs: usize },
    /// Deterministic cross-table dependence: S.b equals the joined T row's
    /// `a` attribute, propagated through the key; uniform fanout.
    Correlated { t_rows: usize, fanout: usize, values: u32 },
    /// Fanout is a function of a T attribute: rows with a = 10 have two S
    /// partners, rows with a = 20 have one.
    FanoutSkew { t_rows: usize },
}

/// Generate a two-table database per the spec. Deterministic in `seed`.
pub fn gen_synthetic(spec: &SyntheticSpec, seed: u64) -> Result<Database> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    match *spec {
        SyntheticSpec::Independent { t_rows, s_rows, t_attrs, s_attrs } => {
            if t_rows == 0 || s_rows % t_rows != 0 {
                return Err(Error::Build(format!(
                    "independent generator needs t_rows to divide s_rows (got {t_rows}, {s_rows})"
                )));
            }
            let fanout = s_rows / t_rows;
            let t_cols: Vec<String> = (0..t_attrs).map(|i| format!("a{i}")).collect();
            let s_cols: Vec<String> = (0..s_attrs).map(|i| format!("b{i}")).collect();
            let schema = two_table_schema(t_rows as i64, &t_cols, &s_cols, 0, 99);

            let mut t_csv = format!("pk,{}\n", t_cols.join(","));
            for pk in 1..=t_rows {
                let vals: Vec<String> =
                    (0..t_attrs).map(|_| rng.gen_range(0..100i64).to_string()).collect();
                t_csv.push_str(&format!("{pk},{}\n", vals.join(",")));
            }
            // One fixed attribute block shared by every key.
            let block: Vec<Vec<i64>> = (0..fanout)
                .map(|_| (0..s_attrs).map(|_| rng.gen_range(0..100i64)).collect())
                .collect();
            let mut s_csv = format!("fk,{}\n", s_cols.join(","));
            for pk in 1..=t_rows {
                for row in &block {
                    let vals: Vec<String> = row.iter().map(|v| v.to_string()).collect();
                    s_csv.push_str(&format!("{pk},{}\n", vals.join(",")));
                }
            }
            build_database(&schema, &[("T", &t_csv), ("S", &s_csv)])
        }
        SyntheticSpec::Correlated { t_rows, fanout, values } => {
            let schema = two_table_schema(
                t_rows as i64,
                &["a".into()],
                &["b".into()],
                0,
                values as i64 - 1,
            );
            let a: Vec<i64> = (1..=t_rows).map(|_| rng.gen_range(0..values as i64)).collect();
            let mut t_csv = String::from("pk,a\n");
            for (i, v) in a.iter().enumerate() {
                t_csv.push_str(&format!("{},{v}\n", i + 1));
            }
            let mut s_csv = String::from("fk,b\n");
            for (i, v) in a.iter().enumerate() {
                for _ in 0..fanout {
                    s_csv.push_str(&format!("{},{v}\n", i + 1));
                }
            }
            build_database(&schema, &[("T", &t_csv), ("S", &s_csv)])
        }
        SyntheticSpec::FanoutSkew { t_rows } => {
            let schema = two_table_schema(t_rows as i64, &["a".into()], &["b".into()], 0, 99);
            let mut t_csv = String::from("pk,a\n");
            let mut s_csv = String::from("fk,b\n");
            for pk in 1..=t_rows {
                let a = if rng.gen_bool(0.5) { 10 } else { 20 };
                t_csv.push_str(&format!("{pk},{a}\n"));
                let partners = if a == 10 { 2 } else { 1 };
                for _ in 0..partners {
                    s_csv.push_str(&format!("{pk},{}\n", rng.gen_range(0..100)));
                }
            }
            build_database(&schema, &[("T", &t_csv), ("S", &s_csv)])
        }
    }
}

fn two_table_schema(
    max_key: i64,
    t_cols: &[String],
    s_cols: &[String],
    attr_min: i64,
    attr_max: i64,
) -> String {
    let col = |name: &str| {
        format!(r#"{{"name":"{name}","kind":"integer","min":{attr_min},"max":{attr_max}}}"#)
    };
    let t: Vec<String> = std::iter::once(format!(
        r#"{{"name":"pk","kind":"integer","min":1,"max":{max_key}}}"#
    ))
    .chain(t_cols.iter().map(|c| col(c)))
    .collect();
    let s: Vec<String> = std::iter::once(format!(
        r#"{{"name":"fk","kind":"integer","min":1,"max":{max_key}}}"#
    ))
    .chain(s_cols.iter().map(|c| col(c)))
    .collect();
    format!(
        r#"{{"tables":[{{"name":"T","columns":[{}]}},{{"name":"S","columns":[{}]}}],
            "joins":[{{"left":"T.pk","right":"S.fk","kind":"pk_fk"}}]}}"#,
        t.join(","),
        s.join(",")
    )
}

// ---------------------------------------------------------------------------
// Workload generation

#[derive(Debug, Clone)]
pub struct WorkloadOptions {
    /// Predicates per query are drawn from `1..=max_predicates`.
    pub max_predicates: usize,
    pub eq: bool,
    pub range: bool,
    pub in_list: bool,
    /// Allow predicates on join-key columns. Key columns carry the join
    /// structure itself, which some benchmark setups want left alone.
    pub allow_key_columns: bool,
    /// Force every range to a single sampled point (`lo == hi`).
    pub point_ranges: bool,
}

impl Default for WorkloadOptions {
    fn default() -> Self {
        WorkloadOptions {
            max_predicates: 3,
            eq: true,
            range: true,
            in_list: true,
            allow_key_columns: true,
            point_ranges: false,
        }
    }
}

/// Seeded random workload: each query touches a random connected table
/// subset and constrains 1-3 columns with values sampled from the data.
pub fn gen_workload(db: &Database, n: usize, seed: u64, opts: &WorkloadOptions) -> Vec<Query> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let catalog = &db.catalog;
    let n_tables = catalog.tables.len();

    let key_cols: HashSet<ColId> = catalog
        .edges
        .iter()
        .flat_map(|e| [e.left, e.right])
        .collect();

    let mut ops = Vec::new();
    if opts.eq {
        ops.push(0u8);
    }
    if opts.range {
        ops.push(1);
    }
    if opts.in_list {
        ops.push(2);
    }
    assert!(!ops.is_empty(), "workload needs at least one predicate op");

    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        // Random connected subset: grow from a random start table.
        let target = rng.gen_range(1..=n_tables);
        let mut tables: BTreeSet<usize> = [rng.gen_range(0..n_tables)].into();
        while tables.len() < target {
            let adjacent: Vec<usize> = (0..n_tables)
                .filter(|t| {
                    !tables.contains(t)
                        && catalog.edges.iter().any(|e| {
                            let (a, b) = (e.left.table as usize, e.right.table as usize);
                            (a == *t && tables.contains(&b)) || (b == *t && tables.contains(&a))
                        })
                })
                .collect();
            match adjacent.as_slice() {
                [] => break,
                adj => {
                    let pick = adj[rng.gen_range(0..adj.len())];
                    tables.insert(pick);
                }
            }
        }

        let eligible: Vec<ColId> = tables
            .iter()
            .flat_map(|&t| catalog.cols_of(t))
            .filter(|c| opts.allow_key_columns || !key_cols.contains(c))
            .filter(|c| db.tables[c.table as usize].rows > 0)
            .collect();
        if eligible.is_empty() {
            continue;
        }

        let mut region = RegularRegion::full();
        for _ in 0..rng.gen_range(1..=opts.max_predicates) {
            let col = eligible[rng.gen_range(0..eligible.len())];
            let data = &db.tables[col.table as usize];
            let sample_val =
                |rng: &mut ChaCha8Rng| data.value(rng.gen_range(0..data.rows), col.attr as usize);
            let kind = catalog.attr(col).kind();
            let op = ops[rng.gen_range(0..ops.len())];
            let constraint = match (op, kind) {
                (1, AttrKind::Integer | AttrKind::Real) => {
                    let (x, y) = (sample_val(&mut rng).as_f64(), sample_val(&mut rng).as_f64());
                    if opts.point_ranges {
                        AttrConstraint::range(x, x)
                    } else {
                        AttrConstraint::range(x.min(y), x.max(y))
                    }
                }
                (2, AttrKind::Categorical) => AttrConstraint::codes(
                    (0..rng.gen_range(1..=3)).map(|_| match sample_val(&mut rng) {
                        Value::Cat(c) => c,
                        _ => unreachable!(),
                    }),
                ),
                (2, _) => AttrConstraint::points(
                    (0..rng.gen_range(1..=3)).map(|_| sample_val(&mut rng).as_f64()).collect(),
                ),
                // eq, and range on categoricals falls back to eq.
                (_, AttrKind::Categorical) => match sample_val(&mut rng) {
                    Value::Cat(c) => AttrConstraint::codes([c]),
                    _ => unreachable!(),
                },
                (_, _) => AttrConstraint::point(sample_val(&mut rng).as_f64()),
            };
            let merged = match region.constraints.get(&col) {
                Some(existing) => existing.intersect(&constraint).expect("kinds match"),
                None => constraint,
            };
            region.constraints.insert(col, merged);
        }
        out.push(Query { tables, region, distinct: false });
    }
    out
}

/// Render a query back into the external query-document shape. Only the
/// constraint shapes a single predicate can express are supported (single
/// interval, point set, code set) — exactly what [`gen_workload`] produces.
pub fn query_to_doc(query: &Query, catalog: &Catalog) -> Result<serde_json::Value> {
    use serde_json::{json, Value as J};
    let tables: Vec<J> = query
        .tables
        .iter()
        .map(|&t| J::String(catalog.tables[t].name.clone()))
        .collect();
    let mut predicates = Vec::new();
    for (col, c) in &query.region.constraints {
        let name = catalog.col_name(*col);
        let kind = catalog.attr(*col).kind();
        let pred = match c {
            AttrConstraint::Codes(set) => {
                let AttrDomain::Cat { dict } = &catalog.attr(*col).domain else {
                    return Err(Error::Query(format!("code constraint on numeric {name}")));
                };
                let labels: Vec<J> = set
                    .iter()
                    .map(|&code| J::String(dict[code as usize].clone()))
                    .collect();
                match labels.len() {
                    1 => json!({"col": name, "op": "eq", "val": labels[0]}),
                    _ => json!({"col": name, "op": "in", "vals": labels}),
                }
            }
            AttrConstraint::Intervals(ivs) => {
                let num = |v: f64| -> J {
                    if kind == AttrKind::Integer && v.fract() == 0.0 {
                        json!(v as i64)
                    } else {
                        json!(v)
                    }
                };
                if ivs.len() == 1 && ivs[0].lo == ivs[0].hi {
                    json!({"col": name, "op": "eq", "val": num(ivs[0].lo)})
                } else if ivs.len() == 1 {
                    json!({"col": name, "op": "range", "lo": ivs[0].lo, "hi": ivs[0].hi})
                } else if ivs.iter().all(|iv| iv.lo == iv.hi) {
                    json!({"col": name, "op": "in",
                           "vals": ivs.iter().map(|iv| num(iv.lo)).collect::<Vec<J>>()})
                } else {
                    return Err(Error::Query(format!(
                        "constraint on {name} is not expressible as one predicate"
                    )));
                }
            }
        };
        predicates.push(pred);
    }
    Ok(json!({"tables": tables, "predicates": predicates, "distinct": query.distinct}))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::join::materialize_in_order;
    use crate::regions::parse_query;

    fn q(db: &Database, doc: &str) -> Query {
        parse_query(doc, &db.catalog).unwrap()
    }

    #[test]
    fn fixture_outer_join_has_six_rows() {
        let db = fixture_a();
        let full = q(&db, r#"{"tables":["T","S"]}"#);
        assert_eq!(exec_exact(&db, &full, DEFAULT_JOIN_CAP).unwrap(), 6.0);
    }

    #[test]
    fn fixture_q1_counts_two_rows() {
        let db = fixture_a();
        let q1 = q(
            &db,
            r#"{"tables":["T","S"],"predicates":[
                {"col":"T.a","op":"eq","val":10},{"col":"S.b","op":"eq","val":100}]}"#,
        );
        assert_eq!(exec_exact(&db, &q1, DEFAULT_JOIN_CAP).unwrap(), 2.0);
    }

    #[test]
    fn null_extended_rows_match_only_unconstrained_sides() {
        let db = fixture_a();
        // b = 300 sits on a dangling S row; the T side of that row is null.
        let sq = q(&db, r#"{"tables":["T","S"],"predicates":[{"col":"S.b","op":"eq","val":300}]}"#);
        assert_eq!(exec_exact(&db, &sq, DEFAULT_JOIN_CAP).unwrap(), 1.0);
        // Any predicate on T excludes it.
        let both = q(
            &db,
            r#"{"tables":["T","S"],"predicates":[
                {"col":"S.b","op":"eq","val":300},{"col":"T.a","op":"range","lo":0,"hi":100}]}"#,
        );
        assert_eq!(exec_exact(&db, &both, DEFAULT_JOIN_CAP).unwrap(), 0.0);
    }

    #[test]
    fn single_table_query_equals_direct_filtering() {
        let db = fixture_a();
        let sq = q(&db, r#"{"tables":["T"],"predicates":[{"col":"T.a","op":"eq","val":10}]}"#);
        let got = exec_exact(&db, &sq, DEFAULT_JOIN_CAP).unwrap();
        let t = &db.tables[0];
        let want = (0..t.rows).filter(|&r| t.value(r, 1) == Value::Int(10)).count();
        assert_eq!(got, want as f64);
    }

    #[test]
    fn fixture_distinct_counts() {
        let db = fixture_a();
        let d1 = q(&db, r#"{"tables":["T","S"],"predicates":[{"col":"S.b","op":"eq","val":100}]}"#);
        assert_eq!(exec_distinct(&db, &d1, DEFAULT_JOIN_CAP).unwrap(), 1.0);
        let d2 = q(
            &db,
            r#"{"tables":["T","S"],"predicates":[
                {"col":"T.a","op":"eq","val":10},{"col":"S.b","op":"eq","val":100}]}"#,
        );
        assert_eq!(exec_distinct(&db, &d2, DEFAULT_JOIN_CAP).unwrap(), 1.0);
        let err = exec_distinct(&db, &q(&db, r#"{"tables":["T"]}"#), DEFAULT_JOIN_CAP).unwrap_err();
        assert!(err.to_string().contains("constrained attribute"), "{err}");
    }

    #[test]
    fn distinct_never_exceeds_count() {
        let db = fixture_a();
        for doc in [
            r#"{"tables":["T","S"],"predicates":[{"col":"S.b","op":"range","lo":0,"hi":1000}]}"#,
            r#"{"tables":["S"],"predicates":[{"col":"S.fk","op":"in","vals":[1,2,5]}]}"#,
        ] {
            let query = q(&db, doc);
            let c = exec_exact(&db, &query, DEFAULT_JOIN_CAP).unwrap();
            let d = exec_distinct(&db, &query, DEFAULT_JOIN_CAP).unwrap();
            assert!(d <= c, "{doc}: distinct {d} > count {c}");
        }
    }

    #[test]
    fn join_cap_is_enforced() {
        let db = fixture_a();
        let full = q(&db, r#"{"tables":["T","S"]}"#);
        let err = exec_exact(&db, &full, 3).unwrap_err();
        assert!(matches!(err, Error::JoinCap { cap: 3 }));
    }

    fn chain_db() -> Database {
        build_database(
            r#"{"tables":[
                {"name":"A","columns":[{"name":"k","kind":"integer","min":0,"max":9},
                                        {"name":"x","kind":"integer","min":0,"max":9}]},
                {"name":"B","columns":[{"name":"ka","kind":"integer","min":0,"max":9},
                                        {"name":"kc","kind":"integer","min":0,"max":9}]},
                {"name":"C","columns":[{"name":"k","kind":"integer","min":0,"max":9},
                                        {"name":"y","kind":"integer","min":0,"max":9}]}],
               "joins":[{"left":"A.k","right":"B.ka","kind":"pk_fk"},
                        {"left":"C.k","right":"B.kc","kind":"pk_fk"}]}"#,
            &[
                ("A", "k,x\n1,1\n2,2\n3,3\n"),
                ("B", "ka,kc\n1,7\n1,8\n2,7\n5,7\n"),
                ("C", "k,y\n7,1\n8,2\n9,3\n"),
            ],
        )
        .unwrap()
    }

    #[test]
    fn fold_order_does_not_change_counts() {
        let db = chain_db();
        let queries = [
            q(&db, r#"{"tables":["A","B","C"]}"#),
            q(&db, r#"{"tables":["A","B","C"],"predicates":[{"col":"C.y","op":"eq","val":1}]}"#),
            q(&db, r#"{"tables":["A","B","C"],"predicates":[{"col":"A.x","op":"range","lo":1,"hi":2}]}"#),
        ];
        // B must join before (or between) A and C; these are the connected
        // fold orders.
        let orders: [&[usize]; 4] = [&[0, 1, 2], &[1, 0, 2], &[1, 2, 0], &[2, 1, 0]];
        for query in &queries {
            let counts: Vec<usize> = orders
                .iter()
                .map(|o| {
                    let jr = materialize_in_order(&db, o, DEFAULT_JOIN_CAP).unwrap();
                    (0..jr.rows).filter(|&r| jr.row_in(r, &query.region)).count()
                })
                .collect();
            assert!(counts.windows(2).all(|w| w[0] == w[1]), "{counts:?}");
        }
    }

    #[test]
    fn effective_join_set_is_the_steiner_cover() {
        let db = chain_db();
        let cover = minimal_cover(&db.catalog, &[0usize, 2].into());
        assert_eq!(cover, [0usize, 1, 2].into());
        // Query touching A and C silently joins through B.
        let query = q(&db, r#"{"tables":["A","C"],"predicates":[{"col":"C.y","op":"eq","val":1}]}"#);
        // Joined rows with C.y = 1: C row (7,1) joins B rows (1,7),(2,7),(5,7);
        // of those, B.ka = 1 and 2 reach A; ka = 5 dangles but still pairs with C.
        assert_eq!(exec_exact(&db, &query, DEFAULT_JOIN_CAP).unwrap(), 3.0);
    }

    #[test]
    fn qerror_clamps_both_sides() {
        assert_eq!(qerror(0.0, 0.0), 1.0);
        assert_eq!(qerror(2.0, 8.0), 4.0);
        assert_eq!(qerror(8.0, 2.0), 4.0);
        assert_eq!(qerror(0.25, 1.0), 1.0);
        assert_eq!(qerror(40.0, 0.0), 40.0);
    }

    #[test]
    fn summary_percentiles_use_nearest_rank() {
        let s = QErrorSummary::new((1..=100).map(|i| i as f64).collect());
        assert_eq!(s.median, 50.0);
        assert_eq!(s.p90, 90.0);
        assert_eq!(s.p99, 99.0);
        assert_eq!(s.max, 100.0);
    }

    #[test]
    fn independent_generator_is_a_key_block_cross_product() {
        let spec = SyntheticSpec::Independent { t_rows: 50, s_rows: 150, t_attrs: 2, s_attrs: 2 };
        let db = gen_synthetic(&spec, 7).unwrap();
        assert_eq!(db.tables[0].rows, 50);
        assert_eq!(db.tables[1].rows, 150);
        let s = &db.tables[1];
        // Every key carries the same block of attribute rows.
        let block: Vec<Vec<i64>> = (0..3)
            .map(|r| (1..=2).map(|a| match s.value(r, a) { Value::Int(v) => v, _ => panic!() }).collect())
            .collect();
        for r in 0..s.rows {
            let want = &block[r % 3];
            for a in 1..=2 {
                assert_eq!(s.value(r, a), Value::Int(want[a - 1]));
            }
        }
    }

    #[test]
    fn correlated_generator_propagates_a_through_the_key() {
        let db = gen_synthetic(&SyntheticSpec::Correlated { t_rows: 40, fanout: 2, values: 10 }, 9)
            .unwrap();
        let jr = materialize(&db, &[0usize, 1].into(), DEFAULT_JOIN_CAP).unwrap();
        assert_eq!(jr.rows, 80);
        for r in 0..jr.rows {
            let a = jr.get(r, ColId::new(0, 1)).unwrap();
            let b = jr.get(r, ColId::new(1, 1)).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn fanout_skew_generator_ties_fanout_to_a() {
        let db = gen_synthetic(&SyntheticSpec::FanoutSkew { t_rows: 30 }, 11).unwrap();
        let t = &db.tables[0];
        let s = &db.tables[1];
        for r in 0..t.rows {
            let pk = t.value(r, 0);
            let partners = (0..s.rows).filter(|&j| s.value(j, 0) == pk).count();
            let want = if t.value(r, 1) == Value::Int(10) { 2 } else { 1 };
            assert_eq!(partners, want);
        }
    }

    #[test]
    fn workload_is_deterministic_and_well_formed() {
        let db = fixture_a();
        let opts = WorkloadOptions::default();
        let w1 = gen_workload(&db, 50, 123, &opts);
        let w2 = gen_workload(&db, 50, 123, &opts);
        assert_eq!(w1, w2);
        for query in &w1 {
            assert!(!query.tables.is_empty());
            let n = query.region.constraints.len();
            assert!((1..=3).contains(&n));
            for col in query.region.scope() {
                assert!(query.tables.contains(&(col.table as usize)));
            }
            // Queries stay executable.
            exec_exact(&db, query, DEFAULT_JOIN_CAP).unwrap();
        }
    }

    #[test]
    fn workload_respects_key_column_exclusion() {
        let db = fixture_a();
        let opts = WorkloadOptions { allow_key_columns: false, ..Default::default() };
        for query in gen_workload(&db, 80, 5, &opts) {
            for col in query.region.scope() {
                assert!(col.attr != 0, "key column constrained: {col:?}");
            }
        }
    }

    #[test]
    fn queries_round_trip_through_documents() {
        let db = fixture_a();
        for query in gen_workload(&db, 60, 77, &WorkloadOptions::default()) {
            let doc = query_to_doc(&query, &db.catalog).unwrap();
            let back = parse_query(&doc.to_string(), &db.catalog).unwrap();
            assert_eq!(back, query);
        }
    }
}
