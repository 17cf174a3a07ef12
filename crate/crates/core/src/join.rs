//! Full-outer-join materialization shared by the oracle and by exact-mode
//! statistics collection.
//!
//! Joins run along the schema tree's edges, folding one table at a time into
//! the current result. Null join keys never match, and both sides are
//! null-extended, so every base row survives into the final result at least
//! once.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use crate::catalog::{Catalog, ColId, Database, Value};
use crate::error::{Error, Result};
use crate::regions::RegularRegion;

/// Column-major rows of a (partial) join; `None` cells are null extensions.
#[derive(Debug, Clone)]
pub struct JoinedRows {
    pub cols: Vec<ColId>,
    index: BTreeMap<ColId, usize>,
    /// data[c][r] is the value of column `c` in row `r`.
    pub data: Vec<Vec<Option<Value>>>,
    pub rows: usize,
}

impl JoinedRows {
    pub fn get(&self, row: usize, col: ColId) -> Option<Value> {
        self.data[self.index[&col]][row]
    }

    pub fn has_col(&self, col: ColId) -> bool {
        self.index.contains_key(&col)
    }

    pub fn column(&self, col: ColId) -> &[Option<Value>] {
        &self.data[self.index[&col]]
    }

    pub fn row_in(&self, row: usize, region: &RegularRegion) -> bool {
        region.contains_row(|c| self.get(row, c))
    }

    fn from_table(db: &Database, table: usize) -> JoinedRows {
        let t = &db.tables[table];
        let cols: Vec<ColId> = db.catalog.cols_of(table).collect();
        let data = cols
            .iter()
            .map(|c| (0..t.rows).map(|r| Some(t.value(r, c.attr as usize))).collect())
            .collect();
        let index = cols.iter().enumerate().map(|(i, c)| (*c, i)).collect();
        JoinedRows { cols, index, data, rows: t.rows }
    }
}

/// The minimal connected table set covering `tables` in the schema tree
/// (the union of the paths between the touched tables).
pub fn minimal_cover(catalog: &Catalog, tables: &BTreeSet<usize>) -> BTreeSet<usize> {
    let n = catalog.tables.len();
    let mut keep = vec![true; n];
    let mut degree = vec![0usize; n];
    for e in &catalog.edges {
        degree[e.left.table as usize] += 1;
        degree[e.right.table as usize] += 1;
    }
    // Repeatedly strip untouched leaves of the schema tree; what survives is
    // the Steiner tree of the touched set.
    loop {
        let mut removed = false;
        for t in 0..n {
            if keep[t] && degree[t] <= 1 && !tables.contains(&t) {
                keep[t] = false;
                removed = true;
                for e in &catalog.edges {
                    let (a, b) = (e.left.table as usize, e.right.table as usize);
                    if a == t && keep[b] {
                        degree[b] -= 1;
                    } else if b == t && keep[a] {
                        degree[a] -= 1;
                    }
                }
                degree[t] = 0;
            }
        }
        if !removed {
            break;
        }
    }
    (0..n).filter(|&t| keep[t]).collect()
}

/// Deterministic fold order: start at the smallest table index, then always
/// attach the smallest-index table adjacent to what is already joined.
pub fn default_order(catalog: &Catalog, tables: &BTreeSet<usize>) -> Vec<usize> {
    let mut order = Vec::with_capacity(tables.len());
    let mut joined = BTreeSet::new();
    let first = *tables.iter().next().expect("non-empty table set");
    order.push(first);
    joined.insert(first);
    while joined.len() < tables.len() {
        let next = tables
            .iter()
            .find(|t| {
                !joined.contains(t)
                    && catalog.edges.iter().any(|e| {
                        let (a, b) = (e.left.table as usize, e.right.table as usize);
                        (a == **t && joined.contains(&b)) || (b == **t && joined.contains(&a))
                    })
            })
            .copied()
            .expect("table set connected in schema tree");
        order.push(next);
        joined.insert(next);
    }
    order
}

/// Materialize the full outer join of the given (connected) table set.
pub fn materialize(db: &Database, tables: &BTreeSet<usize>, cap: usize) -> Result<JoinedRows> {
    materialize_in_order(db, &default_order(&db.catalog, tables), cap)
}

/// Same, with an explicit fold order (each prefix must be connected). Counts
/// and row multisets do not depend on the order; tests exercise this.
pub fn materialize_in_order(db: &Database, order: &[usize], cap: usize) -> Result<JoinedRows> {
    let mut acc = JoinedRows::from_table(db, order[0]);
    let mut joined: BTreeSet<usize> = [order[0]].into();
    for &t in &order[1..] {
        let edge = db
            .catalog
            .edges
            .iter()
            .find(|e| {
                let (a, b) = (e.left.table as usize, e.right.table as usize);
                (a == t && joined.contains(&b)) || (b == t && joined.contains(&a))
            })
            .ok_or_else(|| Error::Build(format!("table {t} not adjacent to joined set")))?;
        let (acc_key, new_key) = if edge.left.table as usize == t {
            (edge.right, edge.left)
        } else {
            (edge.left, edge.right)
        };
        acc = fold_outer(db, acc, t, acc_key, new_key, cap)?;
        joined.insert(t);
    }
    Ok(acc)
}

fn fold_outer(
    db: &Database,
    acc: JoinedRows,
    table: usize,
    acc_key: ColId,
    new_key: ColId,
    cap: usize,
) -> Result<JoinedRows> {
    let new = &db.tables[table];
    let new_cols: Vec<ColId> = db.catalog.cols_of(table).collect();
    let key_attr = new_key.attr as usize;

    // Hash the new table's rows by join key.
    let mut by_key: HashMap<u64, Vec<usize>> = HashMap::new();
    for r in 0..new.rows {
        by_key.entry(new.value(r, key_attr).key_bits()).or_default().push(r);
    }

    let mut out_cols = acc.cols.clone();
    out_cols.extend(&new_cols);
    let mut out: Vec<Vec<Option<Value>>> = vec![Vec::new(); out_cols.len()];
    let n_acc = acc.cols.len();
    let mut rows = 0usize;
    let mut matched_keys: BTreeSet<u64> = BTreeSet::new();

    let push_row = |out: &mut Vec<Vec<Option<Value>>>,
                        rows: &mut usize,
                        acc_row: Option<usize>,
                        new_row: Option<usize>|
     -> Result<()> {
        *rows += 1;
        if *rows > cap {
            return Err(Error::JoinCap { cap });
        }
        for (i, col) in out.iter_mut().enumerate() {
            let v = if i < n_acc {
                acc_row.and_then(|r| acc.data[i][r])
            } else {
                new_row.map(|r| new.value(r, new_cols[i - n_acc].attr as usize))
            };
            col.push(v);
        }
        Ok(())
    };

    for r in 0..acc.rows {
        match acc.get(r, acc_key) {
            Some(k) => match by_key.get(&k.key_bits()) {
                Some(partners) => {
                    matched_keys.insert(k.key_bits());
                    for &p in partners {
                        push_row(&mut out, &mut rows, Some(r), Some(p))?;
                    }
                }
                None => push_row(&mut out, &mut rows, Some(r), None)?,
            },
            // A null key joins nothing; the row survives null-extended.
            None => push_row(&mut out, &mut rows, Some(r), None)?,
        }
    }
    // Dangling new-side rows.
    for p in 0..new.rows {
        if !matched_keys.contains(&new.value(p, key_attr).key_bits()) {
            push_row(&mut out, &mut rows, None, Some(p))?;
        }
    }

    let index = out_cols.iter().enumerate().map(|(i, c)| (*c, i)).collect();
    Ok(JoinedRows { cols: out_cols, index, data: out, rows })
}
