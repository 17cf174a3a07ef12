//! Region algebra over attribute domains.
//!
//! A query in canonical conjunctive form constrains each attribute
//! independently, so every query region is a cross product of per-attribute
//! constraints (a "regular" region). Numeric constraints are sorted disjoint
//! closed intervals; categorical constraints are code sets. An attribute
//! absent from a region is unconstrained — which is *not* the same as being
//! explicitly constrained to its full domain: explicit constraints never
//! match null-extended rows, absence matches everything.
//!
//! Split points follow one convention everywhere: a split at `v` sends `v`
//! to the right part (integers end the left part at `v-1`, reals at the
//! largest float below `v`), so partitions built from splits stay disjoint
//! without half-open interval bookkeeping.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::catalog::{AttrKind, Catalog, ColId, Value};
use crate::error::{Error, Result};

/// Closed interval `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Self {
        Interval { lo, hi }
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }
}

/// Constraint on one attribute: a union of disjoint sorted closed intervals
/// (numeric) or a set of dictionary codes (categorical). The empty union /
/// empty set is the explicit empty constraint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum AttrConstraint {
    Intervals(Vec<Interval>),
    Codes(BTreeSet<u32>),
}

impl AttrConstraint {
    pub fn point(v: f64) -> Self {
        AttrConstraint::Intervals(vec![Interval::new(v, v)])
    }

    pub fn range(lo: f64, hi: f64) -> Self {
        if lo <= hi {
            AttrConstraint::Intervals(vec![Interval::new(lo, hi)])
        } else {
            AttrConstraint::Intervals(Vec::new())
        }
    }

    /// Normalized union of points: sorted, deduplicated, merged when adjacent
    /// values happen to be equal.
    pub fn points(mut vals: Vec<f64>) -> Self {
        vals.sort_by(f64::total_cmp);
        vals.dedup();
        AttrConstraint::Intervals(vals.into_iter().map(|v| Interval::new(v, v)).collect())
    }

    pub fn codes<I: IntoIterator<Item = u32>>(codes: I) -> Self {
        AttrConstraint::Codes(codes.into_iter().collect())
    }

    pub fn is_empty(&self) -> bool {
        match self {
            AttrConstraint::Intervals(v) => v.is_empty(),
            AttrConstraint::Codes(s) => s.is_empty(),
        }
    }

    pub fn contains(&self, v: &Value) -> bool {
        match (self, v) {
            (AttrConstraint::Codes(s), Value::Cat(c)) => s.contains(c),
            (AttrConstraint::Codes(_), _) => false,
            (AttrConstraint::Intervals(ivs), v) => {
                let x = v.as_f64();
                ivs.iter().any(|iv| iv.contains(x))
            }
        }
    }

    /// Intersection; mixing interval and code constraints on one attribute
    /// is a kind error.
    pub fn intersect(&self, other: &AttrConstraint) -> Result<AttrConstraint> {
        match (self, other) {
            (AttrConstraint::Codes(a), AttrConstraint::Codes(b)) => {
                Ok(AttrConstraint::Codes(a.intersection(b).copied().collect()))
            }
            (AttrConstraint::Intervals(a), AttrConstraint::Intervals(b)) => {
                let mut out = Vec::new();
                let (mut i, mut j) = (0, 0);
                while i < a.len() && j < b.len() {
                    let lo = a[i].lo.max(b[j].lo);
                    let hi = a[i].hi.min(b[j].hi);
                    if lo <= hi {
                        out.push(Interval::new(lo, hi));
                    }
                    if a[i].hi <= b[j].hi {
                        i += 1;
                    } else {
                        j += 1;
                    }
                }
                Ok(AttrConstraint::Intervals(out))
            }
            _ => Err(Error::Region(
                "cannot intersect interval and code constraints on one attribute".into(),
            )),
        }
    }

    /// Keep values `<= x`.
    pub fn clip_hi(&self, x: f64) -> AttrConstraint {
        match self {
            AttrConstraint::Codes(_) => self.clone(),
            AttrConstraint::Intervals(ivs) => AttrConstraint::Intervals(
                ivs.iter()
                    .filter(|iv| iv.lo <= x)
                    .map(|iv| Interval::new(iv.lo, iv.hi.min(x)))
                    .collect(),
            ),
        }
    }

    /// Keep values `>= x`.
    pub fn clip_lo(&self, x: f64) -> AttrConstraint {
        match self {
            AttrConstraint::Codes(_) => self.clone(),
            AttrConstraint::Intervals(ivs) => AttrConstraint::Intervals(
                ivs.iter()
                    .filter(|iv| iv.hi >= x)
                    .map(|iv| Interval::new(iv.lo.max(x), iv.hi))
                    .collect(),
            ),
        }
    }

    /// Split at `v` with the value-goes-right convention. `kind` decides the
    /// left boundary: `v - 1` for integers, the predecessor float for reals.
    pub fn split_at(&self, v: f64, kind: AttrKind) -> (AttrConstraint, AttrConstraint) {
        let left_hi = match kind {
            AttrKind::Integer => v - 1.0,
            _ => f64_pred(v),
        };
        (self.clip_hi(left_hi), self.clip_lo(v))
    }

    fn canon_into(&self, out: &mut String) {
        match self {
            AttrConstraint::Intervals(ivs) => {
                for iv in ivs {
                    let _ = write!(out, "i{:x}:{:x};", iv.lo.to_bits(), iv.hi.to_bits());
                }
            }
            AttrConstraint::Codes(s) => {
                for c in s {
                    let _ = write!(out, "c{c};");
                }
            }
        }
    }
}

/// Largest float strictly below `v`.
fn f64_pred(v: f64) -> f64 {
    f64::next_down(v)
}

// ---------------------------------------------------------------------------
// Regular regions

/// Cross product of per-attribute constraints; attributes not present are
/// unconstrained.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct RegularRegion {
    // Serialized as an (ordered) pair list: JSON object keys must be
    // strings, which ColId is not.
    #[serde(with = "constraint_pairs")]
    pub constraints: BTreeMap<ColId, AttrConstraint>,
}

mod constraint_pairs {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(
        map: &BTreeMap<ColId, AttrConstraint>,
        s: S,
    ) -> std::result::Result<S::Ok, S::Error> {
        s.collect_seq(map.iter())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(
        d: D,
    ) -> std::result::Result<BTreeMap<ColId, AttrConstraint>, D::Error> {
        Ok(Vec::<(ColId, AttrConstraint)>::deserialize(d)?.into_iter().collect())
    }
}

impl RegularRegion {
    pub fn full() -> Self {
        RegularRegion::default()
    }

    pub fn with(mut self, col: ColId, c: AttrConstraint) -> Self {
        self.constraints.insert(col, c);
        self
    }

    /// No explicit constraints at all.
    pub fn is_unconstrained(&self) -> bool {
        self.constraints.is_empty()
    }

    /// A region is empty exactly when some attribute's constraint is empty
    /// (cross products have no other way to vanish).
    pub fn is_empty(&self) -> bool {
        self.constraints.values().any(|c| c.is_empty())
    }

    pub fn scope(&self) -> impl Iterator<Item = ColId> + '_ {
        self.constraints.keys().copied()
    }

    pub fn intersect(&self, other: &RegularRegion) -> Result<RegularRegion> {
        // Iterate the smaller map into the larger clone.
        let (base, add) = if self.constraints.len() >= other.constraints.len() {
            (self, other)
        } else {
            (other, self)
        };
        let mut out = base.constraints.clone();
        for (col, c) in &add.constraints {
            match out.get(col) {
                Some(existing) => {
                    let merged = existing.intersect(c)?;
                    out.insert(*col, merged);
                }
                None => {
                    out.insert(*col, c.clone());
                }
            }
        }
        Ok(RegularRegion { constraints: out })
    }

    /// Restrict to the given attributes (constraints outside are dropped,
    /// i.e. those attributes become unconstrained).
    pub fn project(&self, scope: &BTreeSet<ColId>) -> RegularRegion {
        RegularRegion {
            constraints: self
                .constraints
                .iter()
                .filter(|(col, _)| scope.contains(col))
                .map(|(col, c)| (*col, c.clone()))
                .collect(),
        }
    }

    /// Restrict to attributes of tables in the bitmask.
    pub fn project_tables(&self, mask: u64) -> RegularRegion {
        RegularRegion {
            constraints: self
                .constraints
                .iter()
                .filter(|(col, _)| mask & (1 << col.table) != 0)
                .map(|(col, c)| (*col, c.clone()))
                .collect(),
        }
    }

    /// Row membership through an accessor returning `None` for null cells.
    /// Explicit constraints never match nulls.
    pub fn contains_row(&self, mut get: impl FnMut(ColId) -> Option<Value>) -> bool {
        self.constraints.iter().all(|(col, c)| match get(*col) {
            Some(v) => c.contains(&v),
            None => false,
        })
    }

    /// Deterministic key for memoization: constraints in `ColId` order with
    /// exact float bit patterns.
    pub fn canonical_key(&self) -> String {
        let mut out = String::new();
        for (col, c) in &self.constraints {
            let _ = write!(out, "{}#{}=", col.table, col.attr);
            c.canon_into(&mut out);
            out.push('|');
        }
        out
    }
}

/// A set of regions over a fixed scope intended to be pairwise disjoint and
/// to cover the scope's domain. Disjointness/coverage are properties the
/// builders guarantee and the tests assert; the type itself doesn't enforce
/// them on construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Partition {
    pub scope: BTreeSet<ColId>,
    pub parts: Vec<RegularRegion>,
}

impl Partition {
    /// Single full part over the scope.
    pub fn trivial(scope: BTreeSet<ColId>) -> Self {
        Partition { scope, parts: vec![RegularRegion::full()] }
    }

    /// Index of the unique part containing the row, or `None` if no part
    /// matches (e.g. the row is null on a constrained attribute).
    pub fn part_of(&self, mut get: impl FnMut(ColId) -> Option<Value>) -> Option<usize> {
        self.parts.iter().position(|p| p.contains_row(&mut get))
    }
}

// ---------------------------------------------------------------------------
// Queries

/// A parsed query: the joined table set plus a conjunctive predicate region.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Query {
    pub tables: BTreeSet<usize>,
    pub region: RegularRegion,
    pub distinct: bool,
}

#[derive(Deserialize)]
struct QueryDoc {
    tables: Vec<String>,
    #[serde(default)]
    predicates: Vec<PredicateDoc>,
    #[serde(default)]
    distinct: bool,
}

#[derive(Deserialize)]
struct PredicateDoc {
    col: String,
    op: String,
    #[serde(default)]
    val: Option<serde_json::Value>,
    #[serde(default)]
    lo: Option<f64>,
    #[serde(default)]
    hi: Option<f64>,
    #[serde(default)]
    vals: Option<Vec<serde_json::Value>>,
}

/// Parse a query document against the catalog. Predicates on one attribute
/// conjoin (intersect); `in` lists express per-attribute disjunction, which
/// is the only disjunction the canonical form supports.
pub fn parse_query(json: &str, catalog: &Catalog) -> Result<Query> {
    let doc: QueryDoc =
        serde_json::from_str(json).map_err(|e| Error::Query(format!("malformed document: {e}")))?;
    if doc.tables.is_empty() {
        return Err(Error::Query("query lists no tables".into()));
    }
    let mut tables = BTreeSet::new();
    for name in &doc.tables {
        tables.insert(
            catalog
                .table_index(name)
                .map_err(|_| Error::Query(format!("unknown table {name:?}")))?,
        );
    }

    let mut region = RegularRegion::full();
    for p in &doc.predicates {
        let col = catalog
            .parse_col_ref(&p.col)
            .map_err(|_| Error::Query(format!("unknown column {:?}", p.col)))?;
        if !tables.contains(&(col.table as usize)) {
            return Err(Error::Query(format!(
                "predicate on {:?} but its table is not in the query's table list",
                p.col
            )));
        }
        let kind = catalog.attr(col).kind();
        let constraint = match p.op.as_str() {
            "eq" => {
                let val = p.val.as_ref().ok_or_else(|| miss(&p.col, "val"))?;
                scalar_constraint(catalog, col, kind, val)?
            }
            "range" => {
                if kind == AttrKind::Categorical {
                    return Err(Error::Query(format!(
                        "range predicate on categorical column {:?}",
                        p.col
                    )));
                }
                let lo = p.lo.ok_or_else(|| miss(&p.col, "lo"))?;
                let hi = p.hi.ok_or_else(|| miss(&p.col, "hi"))?;
                AttrConstraint::range(lo, hi)
            }
            "in" => {
                let vals = p.vals.as_ref().ok_or_else(|| miss(&p.col, "vals"))?;
                let alts: Vec<AttrConstraint> = vals
                    .iter()
                    .map(|v| scalar_constraint(catalog, col, kind, v))
                    .collect::<Result<_>>()?;
                match kind {
                    AttrKind::Categorical => AttrConstraint::Codes(
                        alts.iter()
                            .flat_map(|c| match c {
                                AttrConstraint::Codes(s) => s.iter().copied().collect::<Vec<_>>(),
                                _ => Vec::new(),
                            })
                            .collect(),
                    ),
                    _ => AttrConstraint::points(
                        alts.iter()
                            .flat_map(|c| match c {
                                AttrConstraint::Intervals(ivs) => {
                                    ivs.iter().map(|iv| iv.lo).collect::<Vec<_>>()
                                }
                                _ => Vec::new(),
                            })
                            .collect(),
                    ),
                }
            }
            other => return Err(Error::Query(format!("unknown predicate op {other:?}"))),
        };
        let merged = match region.constraints.get(&col) {
            Some(existing) => existing.intersect(&constraint)?,
            None => constraint,
        };
        region.constraints.insert(col, merged);
    }

    Ok(Query { tables, region, distinct: doc.distinct })
}

fn miss(col: &str, field: &str) -> Error {
    Error::Query(format!("predicate on {col:?} is missing {field:?}"))
}

/// Single scalar -> constraint, respecting the attribute kind. Unknown
/// categorical labels and non-integral values on integer attributes yield
/// the empty constraint (they cannot match any row), not an error.
fn scalar_constraint(
    catalog: &Catalog,
    col: ColId,
    kind: AttrKind,
    val: &serde_json::Value,
) -> Result<AttrConstraint> {
    match kind {
        AttrKind::Categorical => {
            let s = val.as_str().ok_or_else(|| {
                Error::Query(format!(
                    "categorical column {:?} takes string values",
                    catalog.col_name(col)
                ))
            })?;
            let crate::catalog::AttrDomain::Cat { dict } = &catalog.attr(col).domain else {
                unreachable!()
            };
            Ok(match dict.iter().position(|v| v == s) {
                Some(code) => AttrConstraint::codes([code as u32]),
                None => AttrConstraint::Codes(BTreeSet::new()),
            })
        }
        AttrKind::Integer => {
            let v = val.as_f64().ok_or_else(|| {
                Error::Query(format!("numeric value expected on {:?}", catalog.col_name(col)))
            })?;
            Ok(if v.fract() == 0.0 {
                AttrConstraint::point(v)
            } else {
                AttrConstraint::Intervals(Vec::new())
            })
        }
        AttrKind::Real => {
            let v = val.as_f64().ok_or_else(|| {
                Error::Query(format!("numeric value expected on {:?}", catalog.col_name(col)))
            })?;
            Ok(AttrConstraint::point(v))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::load_schema;

    fn c(iv: &[(f64, f64)]) -> AttrConstraint {
        AttrConstraint::Intervals(iv.iter().map(|&(lo, hi)| Interval::new(lo, hi)).collect())
    }

    /// Brute-force membership over an integer grid; the oracle for interval
    /// set operations.
    fn members(c: &AttrConstraint, lo: i64, hi: i64) -> Vec<i64> {
        (lo..=hi).filter(|&x| c.contains(&Value::Int(x))).collect()
    }

    #[test]
    fn interval_intersection_matches_pointwise_oracle() {
        let a = c(&[(0.0, 5.0), (8.0, 9.0)]);
        let b = c(&[(4.0, 8.0)]);
        let got = a.intersect(&b).unwrap();
        assert_eq!(got, c(&[(4.0, 5.0), (8.0, 8.0)]));
        let want: Vec<i64> = (-2..=12)
            .filter(|&x| {
                members(&a, -2, 12).contains(&x) && members(&b, -2, 12).contains(&x)
            })
            .collect();
        assert_eq!(members(&got, -2, 12), want);
    }

    #[test]
    fn empty_intersection_is_detected() {
        let a = c(&[(0.0, 3.0)]);
        let b = c(&[(5.0, 9.0)]);
        let got = a.intersect(&b).unwrap();
        assert!(got.is_empty());
        let r = RegularRegion::full().with(ColId::new(0, 0), got);
        assert!(r.is_empty());
        assert!(!RegularRegion::full().is_empty());
    }

    #[test]
    fn code_sets_intersect() {
        let a = AttrConstraint::codes([1, 2, 5]);
        let b = AttrConstraint::codes([2, 3, 5, 7]);
        assert_eq!(a.intersect(&b).unwrap(), AttrConstraint::codes([2, 5]));
        let err = a.intersect(&c(&[(0.0, 1.0)])).unwrap_err();
        assert!(err.to_string().contains("interval and code"), "{err}");
    }

    #[test]
    fn split_sends_value_right() {
        let full = c(&[(0.0, 10.0)]);
        let (l, r) = full.split_at(5.0, AttrKind::Integer);
        assert_eq!(l, c(&[(0.0, 4.0)]));
        assert_eq!(r, c(&[(5.0, 10.0)]));
        assert!(!l.contains(&Value::Int(5)));
        assert!(r.contains(&Value::Int(5)));

        let full = c(&[(0.0, 1.0)]);
        let (l, r) = full.split_at(0.5, AttrKind::Real);
        assert!(!l.contains(&Value::Real(0.5)));
        assert!(r.contains(&Value::Real(0.5)));
        assert!(l.contains(&Value::Real(0.4999999999)));
        // No gap: the left boundary is the immediate predecessor of 0.5.
        let AttrConstraint::Intervals(ivs) = &l else { panic!() };
        assert_eq!(f64::next_up(ivs[0].hi), 0.5);
    }

    #[test]
    fn project_drops_other_tables() {
        let r = RegularRegion::full()
            .with(ColId::new(0, 1), c(&[(1.0, 2.0)]))
            .with(ColId::new(1, 0), c(&[(3.0, 4.0)]));
        let p = r.project_tables(1 << 0);
        assert_eq!(p.constraints.len(), 1);
        assert!(p.constraints.contains_key(&ColId::new(0, 1)));
        let scope: BTreeSet<ColId> = [ColId::new(1, 0)].into();
        assert_eq!(r.project(&scope).constraints.len(), 1);
    }

    #[test]
    fn explicit_constraints_never_match_nulls() {
        let r = RegularRegion::full().with(ColId::new(0, 0), c(&[(0.0, 100.0)]));
        assert!(!r.contains_row(|_| None));
        assert!(r.contains_row(|_| Some(Value::Int(5))));
        // The unconstrained region matches even all-null rows.
        assert!(RegularRegion::full().contains_row(|_| None));
    }

    fn fixture_catalog() -> Catalog {
        load_schema(
            r#"{
          "tables": [
            {"name": "T", "columns": [
              {"name": "pk", "kind": "integer", "min": 0, "max": 100},
              {"name": "a", "kind": "integer", "min": 0, "max": 100}
            ]},
            {"name": "S", "columns": [
              {"name": "fk", "kind": "integer", "min": 0, "max": 100},
              {"name": "b", "kind": "integer", "min": 0, "max": 1000},
              {"name": "c", "kind": "categorical", "values": ["x", "y", "z"]}
            ]}
          ],
          "joins": [{"left": "T.pk", "right": "S.fk", "kind": "pk_fk"}]
        }"#,
        )
        .unwrap()
    }

    #[test]
    fn parses_conjunctive_query() {
        let cat = fixture_catalog();
        let q = parse_query(
            r#"{"tables": ["T", "S"], "predicates": [
                {"col": "T.a", "op": "eq", "val": 10},
                {"col": "S.b", "op": "range", "lo": 0, "hi": 150},
                {"col": "S.c", "op": "in", "vals": ["x", "z"]}
            ]}"#,
            &cat,
        )
        .unwrap();
        assert_eq!(q.tables.len(), 2);
        assert!(!q.distinct);
        assert_eq!(
            q.region.constraints[&ColId::new(0, 1)],
            AttrConstraint::point(10.0)
        );
        assert_eq!(
            q.region.constraints[&ColId::new(1, 2)],
            AttrConstraint::codes([0, 2])
        );
    }

    #[test]
    fn repeated_predicates_conjoin() {
        let cat = fixture_catalog();
        let q = parse_query(
            r#"{"tables": ["S"], "predicates": [
                {"col": "S.b", "op": "range", "lo": 0, "hi": 150},
                {"col": "S.b", "op": "range", "lo": 100, "hi": 900}
            ]}"#,
            &cat,
        )
        .unwrap();
        assert_eq!(
            q.region.constraints[&ColId::new(1, 1)],
            c(&[(100.0, 150.0)])
        );
    }

    #[test]
    fn unknown_label_yields_empty_constraint() {
        let cat = fixture_catalog();
        let q = parse_query(
            r#"{"tables": ["S"], "predicates": [{"col": "S.c", "op": "eq", "val": "nope"}]}"#,
            &cat,
        )
        .unwrap();
        assert!(q.region.is_empty());
    }

    #[test]
    fn query_errors() {
        let cat = fixture_catalog();
        for (doc, needle) in [
            (r#"{"tables": []}"#, "no tables"),
            (r#"{"tables": ["Z"]}"#, "unknown table"),
            (
                r#"{"tables": ["T"], "predicates": [{"col": "T.zz", "op": "eq", "val": 1}]}"#,
                "unknown column",
            ),
            (
                r#"{"tables": ["T"], "predicates": [{"col": "S.b", "op": "eq", "val": 1}]}"#,
                "not in the query's table list",
            ),
            (
                r#"{"tables": ["S"], "predicates": [{"col": "S.c", "op": "range", "lo": 0, "hi": 1}]}"#,
                "range predicate on categorical",
            ),
            (
                r#"{"tables": ["T"], "predicates": [{"col": "T.a", "op": "like", "val": 1}]}"#,
                "unknown predicate op",
            ),
        ] {
            let err = parse_query(doc, &cat).unwrap_err();
            assert!(err.to_string().contains(needle), "{doc} -> {err}");
        }
    }

    #[test]
    fn canonical_keys_distinguish_regions() {
        let r1 = RegularRegion::full().with(ColId::new(0, 0), c(&[(0.0, 1.0)]));
        let r2 = RegularRegion::full().with(ColId::new(0, 0), c(&[(0.0, 2.0)]));
        let r3 = r1.clone();
        assert_ne!(r1.canonical_key(), r2.canonical_key());
        assert_eq!(r1.canonical_key(), r3.canonical_key());
    }

    // ----- property tests -------------------------------------------------

    use proptest::prelude::*;

    fn arb_constraint() -> impl Strategy<Value = AttrConstraint> {
        prop::collection::vec((0i64..30, 0i64..8), 0..4).prop_map(|spans| {
            let mut ivs: Vec<Interval> = Vec::new();
            for (lo, len) in spans {
                ivs.push(Interval::new(lo as f64, (lo + len) as f64));
            }
            ivs.sort_by(|a, b| a.lo.total_cmp(&b.lo));
            // Merge overlaps so the representation invariant holds.
            let mut merged: Vec<Interval> = Vec::new();
            for iv in ivs {
                match merged.last_mut() {
                    Some(last) if iv.lo <= last.hi => last.hi = last.hi.max(iv.hi),
                    _ => merged.push(iv),
                }
            }
            AttrConstraint::Intervals(merged)
        })
    }

    proptest! {
        #[test]
        fn intersect_commutes(a in arb_constraint(), b in arb_constraint()) {
            prop_assert_eq!(a.intersect(&b).unwrap(), b.intersect(&a).unwrap());
        }

        #[test]
        fn intersect_is_associative_pointwise(
            a in arb_constraint(), b in arb_constraint(), c in arb_constraint()
        ) {
            let ab_c = a.intersect(&b).unwrap().intersect(&c).unwrap();
            let a_bc = a.intersect(&b.intersect(&c).unwrap()).unwrap();
            for x in -1..=40 {
                prop_assert_eq!(ab_c.contains(&Value::Int(x)), a_bc.contains(&Value::Int(x)));
            }
        }

        #[test]
        fn intersect_is_idempotent(a in arb_constraint()) {
            let aa = a.intersect(&a).unwrap();
            for x in -1..=40 {
                prop_assert_eq!(aa.contains(&Value::Int(x)), a.contains(&Value::Int(x)));
            }
        }

        #[test]
        fn intersection_membership_matches_oracle(a in arb_constraint(), b in arb_constraint()) {
            let got = a.intersect(&b).unwrap();
            for x in -1..=40 {
                let v = Value::Int(x);
                prop_assert_eq!(got.contains(&v), a.contains(&v) && b.contains(&v));
            }
        }

        #[test]
        fn split_partitions_membership(a in arb_constraint(), at in 0i64..31) {
            let (l, r) = a.split_at(at as f64, AttrKind::Integer);
            for x in -1..=40 {
                let v = Value::Int(x);
                let in_parts = (l.contains(&v) as u8) + (r.contains(&v) as u8);
                prop_assert_eq!(in_parts == 1, a.contains(&v));
                prop_assert!(in_parts <= 1);
            }
        }
    }
}
