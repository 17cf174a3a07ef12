//! Schema catalog and columnar table storage.
//!
//! A schema document declares tables, attribute kinds/domains and join
//! edges. CSV ingestion fills columnar [`TableData`] and is the only phase
//! that mutates the catalog: it records row counts and grows categorical
//! dictionaries in first-seen order. Numeric domains come from the schema,
//! never from the data; out-of-domain cells are ingestion errors.

use std::collections::{HashMap, HashSet};
use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AttrKind {
    Integer,
    Real,
    Categorical,
}

/// Value domain of one attribute. Numeric bounds are closed and declared in
/// the schema; the categorical dictionary maps code -> label, with codes
/// assigned in first-seen order during ingestion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum AttrDomain {
    Int { min: i64, max: i64 },
    Real { min: f64, max: f64 },
    Cat { dict: Vec<String> },
}

impl AttrDomain {
    pub fn kind(&self) -> AttrKind {
        match self {
            AttrDomain::Int { .. } => AttrKind::Integer,
            AttrDomain::Real { .. } => AttrKind::Real,
            AttrDomain::Cat { .. } => AttrKind::Categorical,
        }
    }

    /// Closed numeric bounds, with categorical domains exposed as the code
    /// range `[0, dict_len - 1]`.
    pub fn bounds(&self) -> (f64, f64) {
        match self {
            AttrDomain::Int { min, max } => (*min as f64, *max as f64),
            AttrDomain::Real { min, max } => (*min, *max),
            AttrDomain::Cat { dict } => (0.0, dict.len().saturating_sub(1) as f64),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttributeMeta {
    pub name: String,
    pub domain: AttrDomain,
}

impl AttributeMeta {
    pub fn kind(&self) -> AttrKind {
        self.domain.kind()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableMeta {
    pub name: String,
    pub attrs: Vec<AttributeMeta>,
    /// Rows ingested so far; 0 until ingestion.
    pub row_count: usize,
}

/// Column reference as (table index, attribute index) into the catalog.
/// Orders by table then attribute, which fixes the canonical attribute
/// order used by regions and serialized maps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ColId {
    pub table: u32,
    pub attr: u32,
}

impl ColId {
    pub fn new(table: usize, attr: usize) -> Self {
        ColId { table: table as u32, attr: attr as u32 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JoinKind {
    PkFk,
    FkFk,
}

/// An equi-join edge between two base-table columns. For `pk_fk` edges the
/// left column is the key side.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct JoinEdge {
    pub left: ColId,
    pub right: ColId,
    pub kind: JoinKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Catalog {
    pub tables: Vec<TableMeta>,
    pub edges: Vec<JoinEdge>,
}

// ---------------------------------------------------------------------------
// Schema document

#[derive(Deserialize)]
struct SchemaDoc {
    tables: Vec<SchemaTable>,
    #[serde(default)]
    joins: Vec<SchemaJoin>,
}

#[derive(Deserialize)]
struct SchemaTable {
    name: String,
    columns: Vec<SchemaColumn>,
}

#[derive(Deserialize)]
struct SchemaColumn {
    name: String,
    kind: String,
    #[serde(default)]
    min: Option<f64>,
    #[serde(default)]
    max: Option<f64>,
    #[serde(default)]
    values: Option<Vec<String>>,
}

#[derive(Deserialize)]
struct SchemaJoin {
    left: String,
    right: String,
    kind: String,
}

/// Parse and validate a schema document. The join graph must be connected
/// and acyclic (a join tree); cyclic schemas are out of scope and rejected
/// here rather than failing obscurely during decomposition.
pub fn load_schema(json: &str) -> Result<Catalog> {
    let doc: SchemaDoc =
        serde_json::from_str(json).map_err(|e| Error::Schema(format!("malformed document: {e}")))?;
    if doc.tables.is_empty() {
        return Err(Error::Schema("no tables declared".into()));
    }

    let mut tables = Vec::new();
    let mut seen = HashSet::new();
    for t in &doc.tables {
        if !seen.insert(t.name.clone()) {
            return Err(Error::Schema(format!("duplicate table name {:?}", t.name)));
        }
        let mut attrs = Vec::new();
        let mut attr_seen = HashSet::new();
        for c in &t.columns {
            if !attr_seen.insert(c.name.clone()) {
                return Err(Error::Schema(format!(
                    "duplicate column {:?} in table {:?}",
                    c.name, t.name
                )));
            }
            let domain = match c.kind.as_str() {
                "integer" => {
                    let (min, max) = numeric_bounds(c, t)?;
                    if min.fract() != 0.0 || max.fract() != 0.0 {
                        return Err(Error::Schema(format!(
                            "non-integral bounds on integer column {}.{}",
                            t.name, c.name
                        )));
                    }
                    AttrDomain::Int { min: min as i64, max: max as i64 }
                }
                "real" => {
                    let (min, max) = numeric_bounds(c, t)?;
                    AttrDomain::Real { min, max }
                }
                "categorical" => {
                    let dict = c.values.clone().unwrap_or_default();
                    let mut dup = HashSet::new();
                    if !dict.iter().all(|v| dup.insert(v.clone())) {
                        return Err(Error::Schema(format!(
                            "duplicate dictionary value on {}.{}",
                            t.name, c.name
                        )));
                    }
                    AttrDomain::Cat { dict }
                }
                other => {
                    return Err(Error::Schema(format!(
                        "unknown attribute kind {other:?} on {}.{}",
                        t.name, c.name
                    )))
                }
            };
            attrs.push(AttributeMeta { name: c.name.clone(), domain });
        }
        tables.push(TableMeta { name: t.name.clone(), attrs, row_count: 0 });
    }

    let mut catalog = Catalog { tables, edges: Vec::new() };
    for j in &doc.joins {
        let left = catalog.parse_col_ref(&j.left).map_err(|e| dangling(e, &j.left))?;
        let right = catalog.parse_col_ref(&j.right).map_err(|e| dangling(e, &j.right))?;
        if left.table == right.table {
            return Err(Error::Schema(format!("self-join edge {} = {}", j.left, j.right)));
        }
        if catalog.attr(left).kind() != catalog.attr(right).kind() {
            return Err(Error::Schema(format!(
                "join attributes {} and {} differ in kind",
                j.left, j.right
            )));
        }
        let kind = match j.kind.as_str() {
            "pk_fk" => JoinKind::PkFk,
            "fk_fk" => JoinKind::FkFk,
            other => return Err(Error::Schema(format!("unknown join kind {other:?}"))),
        };
        catalog.edges.push(JoinEdge { left, right, kind });
    }

    catalog.check_join_graph()?;
    Ok(catalog)
}

fn numeric_bounds(c: &SchemaColumn, t: &SchemaTable) -> Result<(f64, f64)> {
    match (c.min, c.max) {
        (Some(min), Some(max)) if min <= max && min.is_finite() && max.is_finite() => {
            Ok((min, max))
        }
        _ => Err(Error::Schema(format!(
            "numeric column {}.{} needs finite min <= max",
            t.name, c.name
        ))),
    }
}

fn dangling(e: Error, col: &str) -> Error {
    Error::Schema(format!("join edge references unknown column {col:?}: {e}"))
}

impl Catalog {
    pub fn table_index(&self, name: &str) -> Result<usize> {
        self.tables
            .iter()
            .position(|t| t.name == name)
            .ok_or_else(|| Error::Schema(format!("unknown table {name:?}")))
    }

    /// Resolve a `"table.column"` reference.
    pub fn parse_col_ref(&self, col: &str) -> Result<ColId> {
        let (t, a) = col
            .split_once('.')
            .ok_or_else(|| Error::Schema(format!("column reference {col:?} is not table.column")))?;
        let table = self.table_index(t)?;
        let attr = self.tables[table]
            .attrs
            .iter()
            .position(|x| x.name == a)
            .ok_or_else(|| Error::Schema(format!("unknown column {col:?}")))?;
        Ok(ColId::new(table, attr))
    }

    pub fn attr(&self, id: ColId) -> &AttributeMeta {
        &self.tables[id.table as usize].attrs[id.attr as usize]
    }

    pub fn col_name(&self, id: ColId) -> String {
        format!(
            "{}.{}",
            self.tables[id.table as usize].name,
            self.attr(id).name
        )
    }

    pub fn cols_of(&self, table: usize) -> impl Iterator<Item = ColId> + '_ {
        (0..self.tables[table].attrs.len()).map(move |a| ColId::new(table, a))
    }

    /// Edges with both endpoints inside `tables`.
    pub fn edges_within(&self, tables: &HashSet<usize>) -> Vec<usize> {
        self.edges
            .iter()
            .enumerate()
            .filter(|(_, e)| {
                tables.contains(&(e.left.table as usize))
                    && tables.contains(&(e.right.table as usize))
            })
            .map(|(i, _)| i)
            .collect()
    }

    fn check_join_graph(&self) -> Result<()> {
        let n = self.tables.len();
        if n == 1 {
            if !self.edges.is_empty() {
                return Err(Error::Schema("self-join edge on single table".into()));
            }
            return Ok(());
        }
        if self.edges.len() + 1 != n {
            return Err(Error::Schema(format!(
                "join graph over {n} tables must be a tree ({} edges declared, {} expected); \
                 cyclic or disconnected schemas are unsupported",
                self.edges.len(),
                n - 1
            )));
        }
        let mut adj = vec![Vec::new(); n];
        for e in &self.edges {
            adj[e.left.table as usize].push(e.right.table as usize);
            adj[e.right.table as usize].push(e.left.table as usize);
        }
        let mut seen = vec![false; n];
        let mut stack = vec![0usize];
        seen[0] = true;
        while let Some(t) = stack.pop() {
            for &u in &adj[t] {
                if !seen[u] {
                    seen[u] = true;
                    stack.push(u);
                }
            }
        }
        if seen.iter().all(|&s| s) {
            Ok(())
        } else {
            Err(Error::Schema("join graph is disconnected".into()))
        }
    }
}

// ---------------------------------------------------------------------------
// Values and columnar storage

/// One cell value. Categorical cells hold dictionary codes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Value {
    Int(i64),
    Real(f64),
    Cat(u32),
}

impl Value {
    /// Numeric view used by interval checks and rank statistics; categorical
    /// codes map to their code index.
    pub fn as_f64(&self) -> f64 {
        match self {
            Value::Int(v) => *v as f64,
            Value::Real(v) => *v,
            Value::Cat(c) => *c as f64,
        }
    }

    /// Canonical bit pattern for hashing/equality of join keys.
    pub fn key_bits(&self) -> u64 {
        match self {
            Value::Int(v) => *v as u64,
            Value::Real(v) => v.to_bits(),
            Value::Cat(c) => *c as u64,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Column {
    Int(Vec<i64>),
    Real(Vec<f64>),
    Cat(Vec<u32>),
}

impl Column {
    pub fn len(&self) -> usize {
        match self {
            Column::Int(v) => v.len(),
            Column::Real(v) => v.len(),
            Column::Cat(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn get(&self, row: usize) -> Value {
        match self {
            Column::Int(v) => Value::Int(v[row]),
            Column::Real(v) => Value::Real(v[row]),
            Column::Cat(v) => Value::Cat(v[row]),
        }
    }
}

/// Columnar rows of one base table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableData {
    pub table: usize,
    pub columns: Vec<Column>,
    pub rows: usize,
}

impl TableData {
    pub fn value(&self, row: usize, attr: usize) -> Value {
        self.columns[attr].get(row)
    }

    /// Copy of the table holding only the given rows, in the given order.
    pub fn subset(&self, keep: &[usize]) -> TableData {
        let columns = self
            .columns
            .iter()
            .map(|c| match c {
                Column::Int(v) => Column::Int(keep.iter().map(|&r| v[r]).collect()),
                Column::Real(v) => Column::Real(keep.iter().map(|&r| v[r]).collect()),
                Column::Cat(v) => Column::Cat(keep.iter().map(|&r| v[r]).collect()),
            })
            .collect();
        TableData { table: self.table, columns, rows: keep.len() }
    }
}

/// Ingest one table's CSV. The header must list the declared attributes in
/// order. Mutates the catalog: records the row count and extends categorical
/// dictionaries with unseen labels in first-seen order.
pub fn ingest_csv<R: Read>(catalog: &mut Catalog, table: usize, reader: R) -> Result<TableData> {
    let meta_name = catalog.tables[table].name.clone();
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);

    {
        let headers = rdr
            .headers()
            .map_err(|e| Error::Ingest(format!("{meta_name}: {e}")))?;
        let expected: Vec<&str> =
            catalog.tables[table].attrs.iter().map(|a| a.name.as_str()).collect();
        let got: Vec<&str> = headers.iter().collect();
        if got != expected {
            return Err(Error::Ingest(format!(
                "{meta_name}: header mismatch: expected {expected:?}, got {got:?}"
            )));
        }
    }

    let n_attrs = catalog.tables[table].attrs.len();
    let mut columns: Vec<Column> = (0..n_attrs)
        .map(|a| match catalog.tables[table].attrs[a].kind() {
            AttrKind::Integer => Column::Int(Vec::new()),
            AttrKind::Real => Column::Real(Vec::new()),
            AttrKind::Categorical => Column::Cat(Vec::new()),
        })
        .collect();
    // Label -> code caches so repeated labels don't rescan dictionaries.
    let mut dict_index: Vec<HashMap<String, u32>> = (0..n_attrs)
        .map(|a| match &catalog.tables[table].attrs[a].domain {
            AttrDomain::Cat { dict } => {
                dict.iter().enumerate().map(|(i, v)| (v.clone(), i as u32)).collect()
            }
            _ => HashMap::new(),
        })
        .collect();

    let mut rows = 0usize;
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| Error::Ingest(format!("{meta_name}: {e}")))?;
        if rec.len() != n_attrs {
            return Err(Error::Ingest(format!(
                "{meta_name} row {}: expected {n_attrs} cells, got {}",
                line + 2,
                rec.len()
            )));
        }
        for (a, cell) in rec.iter().enumerate() {
            let ctx = || format!("{meta_name}.{} row {}", catalog.tables[table].attrs[a].name, line + 2);
            match &mut columns[a] {
                Column::Int(col) => {
                    let v: i64 = cell
                        .parse()
                        .map_err(|_| Error::Ingest(format!("{}: unparsable integer {cell:?}", ctx())))?;
                    let AttrDomain::Int { min, max } = catalog.tables[table].attrs[a].domain else {
                        unreachable!()
                    };
                    if v < min || v > max {
                        return Err(Error::Ingest(format!(
                            "{}: value {v} outside domain [{min}, {max}]",
                            ctx()
                        )));
                    }
                    col.push(v);
                }
                Column::Real(col) => {
                    let v: f64 = cell
                        .parse()
                        .map_err(|_| Error::Ingest(format!("{}: unparsable real {cell:?}", ctx())))?;
                    if !v.is_finite() {
                        return Err(Error::Ingest(format!("{}: non-finite value", ctx())));
                    }
                    let AttrDomain::Real { min, max } = catalog.tables[table].attrs[a].domain else {
                        unreachable!()
                    };
                    if v < min || v > max {
                        return Err(Error::Ingest(format!(
                            "{}: value {v} outside domain [{min}, {max}]",
                            ctx()
                        )));
                    }
                    // Normalize -0.0 so join-key bit equality behaves.
                    col.push(if v == 0.0 { 0.0 } else { v });
                }
                Column::Cat(col) => {
                    let code = match dict_index[a].get(cell) {
                        Some(&c) => c,
                        None => {
                            let AttrDomain::Cat { dict } =
                                &mut catalog.tables[table].attrs[a].domain
                            else {
                                unreachable!()
                            };
                            let c = dict.len() as u32;
                            dict.push(cell.to_string());
                            dict_index[a].insert(cell.to_string(), c);
                            c
                        }
                    };
                    col.push(code);
                }
            }
        }
        rows += 1;
    }

    catalog.tables[table].row_count = rows;
    Ok(TableData { table, columns, rows })
}

/// A catalog together with the ingested data of every table, in catalog
/// order. This is the unit the CLI persists after `ingest`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Database {
    pub catalog: Catalog,
    pub tables: Vec<TableData>,
}

impl Database {
    /// Ingest `<dir>/<table>.csv` for every declared table.
    pub fn ingest_dir(mut catalog: Catalog, dir: &Path) -> Result<Database> {
        let mut tables = Vec::new();
        for t in 0..catalog.tables.len() {
            let path = dir.join(format!("{}.csv", catalog.tables[t].name));
            let file = std::fs::File::open(&path).map_err(|e| {
                Error::Ingest(format!("cannot open {}: {e}", path.display()))
            })?;
            tables.push(ingest_csv(&mut catalog, t, file)?);
        }
        Ok(Database { catalog, tables })
    }

    pub fn table_by_name(&self, name: &str) -> Result<&TableData> {
        Ok(&self.tables[self.catalog.table_index(name)?])
    }
}

// ---------------------------------------------------------------------------
// Validation report

/// Referential health of one join edge: rows on each side with no partner
/// on the other (these become null-extended rows in the full outer join).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeCheck {
    pub edge: usize,
    pub left_dangling: usize,
    pub right_dangling: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub edges: Vec<EdgeCheck>,
}

/// Count dangling rows per join edge.
pub fn validate(db: &Database) -> Result<ValidationReport> {
    let mut edges = Vec::new();
    for (i, e) in db.catalog.edges.iter().enumerate() {
        let lt = &db.tables[e.left.table as usize];
        let rt = &db.tables[e.right.table as usize];
        if lt.table != e.left.table as usize || rt.table != e.right.table as usize {
            return Err(Error::Schema("table data out of order".into()));
        }
        let lcol = &lt.columns[e.left.attr as usize];
        let rcol = &rt.columns[e.right.attr as usize];
        let lkeys: HashSet<u64> = (0..lt.rows).map(|r| lcol.get(r).key_bits()).collect();
        let rkeys: HashSet<u64> = (0..rt.rows).map(|r| rcol.get(r).key_bits()).collect();
        let left_dangling =
            (0..lt.rows).filter(|&r| !rkeys.contains(&lcol.get(r).key_bits())).count();
        let right_dangling =
            (0..rt.rows).filter(|&r| !lkeys.contains(&rcol.get(r).key_bits())).count();
        edges.push(EdgeCheck { edge: i, left_dangling, right_dangling });
    }
    Ok(ValidationReport { edges })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_table_schema() -> &'static str {
        r#"{
          "tables": [
            {"name": "T", "columns": [
              {"name": "pk", "kind": "integer", "min": 0, "max": 100},
              {"name": "a", "kind": "integer", "min": 0, "max": 100}
            ]},
            {"name": "S", "columns": [
              {"name": "fk", "kind": "integer", "min": 0, "max": 100},
              {"name": "b", "kind": "integer", "min": 0, "max": 1000}
            ]}
          ],
          "joins": [{"left": "T.pk", "right": "S.fk", "kind": "pk_fk"}]
        }"#
    }

    #[test]
    fn loads_two_table_schema() {
        let cat = load_schema(two_table_schema()).unwrap();
        assert_eq!(cat.tables.len(), 2);
        assert_eq!(cat.edges.len(), 1);
        assert_eq!(cat.attr(ColId::new(0, 1)).kind(), AttrKind::Integer);
        assert_eq!(cat.parse_col_ref("S.b").unwrap(), ColId::new(1, 1));
        assert_eq!(cat.col_name(ColId::new(1, 0)), "S.fk");
    }

    #[test]
    fn rejects_unknown_kind() {
        let s = r#"{"tables":[{"name":"T","columns":[{"name":"x","kind":"decimal","min":0,"max":1}]}]}"#;
        let err = load_schema(s).unwrap_err();
        assert!(err.to_string().contains("unknown attribute kind"), "{err}");
    }

    #[test]
    fn rejects_dangling_edge_reference() {
        let s = r#"{
          "tables": [
            {"name":"T","columns":[{"name":"x","kind":"integer","min":0,"max":1}]},
            {"name":"S","columns":[{"name":"y","kind":"integer","min":0,"max":1}]}
          ],
          "joins": [{"left":"T.x","right":"S.zzz","kind":"pk_fk"}]
        }"#;
        let err = load_schema(s).unwrap_err();
        assert!(err.to_string().contains("unknown column"), "{err}");
    }

    #[test]
    fn rejects_disconnected_graph() {
        let s = r#"{
          "tables": [
            {"name":"T","columns":[{"name":"x","kind":"integer","min":0,"max":1}]},
            {"name":"S","columns":[{"name":"y","kind":"integer","min":0,"max":1}]}
          ],
          "joins": []
        }"#;
        let err = load_schema(s).unwrap_err();
        assert!(err.to_string().contains("tree"), "{err}");
    }

    #[test]
    fn rejects_cyclic_graph() {
        let s = r#"{
          "tables": [
            {"name":"A","columns":[{"name":"x","kind":"integer","min":0,"max":9}]},
            {"name":"B","columns":[{"name":"x","kind":"integer","min":0,"max":9}]},
            {"name":"C","columns":[{"name":"x","kind":"integer","min":0,"max":9}]}
          ],
          "joins": [
            {"left":"A.x","right":"B.x","kind":"fk_fk"},
            {"left":"B.x","right":"C.x","kind":"fk_fk"},
            {"left":"C.x","right":"A.x","kind":"fk_fk"}
          ]
        }"#;
        let err = load_schema(s).unwrap_err();
        assert!(err.to_string().contains("tree"), "{err}");
    }

    #[test]
    fn rejects_join_kind_mismatch() {
        let s = r#"{
          "tables": [
            {"name":"T","columns":[{"name":"x","kind":"integer","min":0,"max":1}]},
            {"name":"S","columns":[{"name":"y","kind":"real","min":0,"max":1}]}
          ],
          "joins": [{"left":"T.x","right":"S.y","kind":"pk_fk"}]
        }"#;
        let err = load_schema(s).unwrap_err();
        assert!(err.to_string().contains("differ in kind"), "{err}");
    }

    #[test]
    fn ingest_fills_columns_and_row_count() {
        let mut cat = load_schema(two_table_schema()).unwrap();
        let data = ingest_csv(&mut cat, 0, "pk,a\n1,10\n2,10\n3,20\n4,20\n".as_bytes()).unwrap();
        assert_eq!(data.rows, 4);
        assert_eq!(cat.tables[0].row_count, 4);
        assert_eq!(data.value(2, 1), Value::Int(20));
    }

    #[test]
    fn ingest_rejects_header_mismatch() {
        let mut cat = load_schema(two_table_schema()).unwrap();
        let err = ingest_csv(&mut cat, 0, "pk,wrong\n1,10\n".as_bytes()).unwrap_err();
        assert!(err.to_string().contains("header mismatch"), "{err}");
    }

    #[test]
    fn ingest_rejects_unparsable_cell() {
        let mut cat = load_schema(two_table_schema()).unwrap();
        let err = ingest_csv(&mut cat, 0, "pk,a\n1,ten\n".as_bytes()).unwrap_err();
        assert!(err.to_string().contains("unparsable"), "{err}");
    }

    #[test]
    fn ingest_rejects_out_of_domain_cell() {
        let mut cat = load_schema(two_table_schema()).unwrap();
        let err = ingest_csv(&mut cat, 0, "pk,a\n1,999\n".as_bytes()).unwrap_err();
        assert!(err.to_string().contains("outside domain"), "{err}");
    }

    #[test]
    fn categorical_dictionary_grows_in_first_seen_order() {
        let s = r#"{"tables":[{"name":"T","columns":[{"name":"c","kind":"categorical"}]}]}"#;
        let mut cat = load_schema(s).unwrap();
        let data = ingest_csv(&mut cat, 0, "c\nyes\nno\nyes\nmaybe\n".as_bytes()).unwrap();
        let AttrDomain::Cat { dict } = &cat.tables[0].attrs[0].domain else { panic!() };
        assert_eq!(dict, &["yes", "no", "maybe"]);
        assert_eq!(data.columns[0], Column::Cat(vec![0, 1, 0, 2]));
    }

    #[test]
    fn validate_counts_dangling_rows_per_side() {
        let mut cat = load_schema(two_table_schema()).unwrap();
        let t = ingest_csv(&mut cat, 0, "pk,a\n1,10\n2,10\n3,20\n4,20\n".as_bytes()).unwrap();
        let s = ingest_csv(&mut cat, 1, "fk,b\n1,100\n1,100\n2,200\n5,300\n".as_bytes()).unwrap();
        let db = Database { catalog: cat, tables: vec![t, s] };
        let report = validate(&db).unwrap();

        // Independent check: brute-force partner counts.
        let t = &db.tables[0];
        let s = &db.tables[1];
        let mut left = 0;
        for i in 0..t.rows {
            let k = t.value(i, 0);
            if !(0..s.rows).any(|j| s.value(j, 0) == k) {
                left += 1;
            }
        }
        let mut right = 0;
        for j in 0..s.rows {
            let k = s.value(j, 0);
            if !(0..t.rows).any(|i| t.value(i, 0) == k) {
                right += 1;
            }
        }
        assert_eq!((left, right), (2, 1));
        assert_eq!(report.edges[0].left_dangling, left);
        assert_eq!(report.edges[0].right_dangling, right);
    }

    #[test]
    fn database_round_trips_through_json() {
        let mut cat = load_schema(two_table_schema()).unwrap();
        let t = ingest_csv(&mut cat, 0, "pk,a\n1,10\n2,10\n".as_bytes()).unwrap();
        let s = ingest_csv(&mut cat, 1, "fk,b\n1,100\n".as_bytes()).unwrap();
        let db = Database { catalog: cat, tables: vec![t, s] };
        let json = serde_json::to_string(&db).unwrap();
        let back: Database = serde_json::from_str(&json).unwrap();
        assert_eq!(db, back);
    }
}
