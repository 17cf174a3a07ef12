//! The join decomposition tree: structure, construction configuration, and
//! the versioned, checksummed model file format.
//!
//! A tree's inner node splits its table set into two connected halves
//! joined by one schema edge. Estimation treats the left half as the T side
//! (fanout-corrected via Ê[F*] per T-partition part) and the right half as
//! the S side (contexts L_i and parts S_j). All statistics a node needs at
//! query time are precomputed here so estimation never touches base data.

pub mod build;
pub mod divide;
pub mod update;

use std::collections::BTreeMap;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::catalog::{Catalog, Database, JoinEdge};
use crate::error::{Error, Result};
use crate::inference::EstimationMode;
use crate::leafmodels::{LeafKind, LeafModel, LeafParams};
use crate::regions::RegularRegion;

pub use build::build_tree;
pub use divide::{divide_cross, divide_fanout, singleton_partition, restricted_fanout_matrix};
pub use update::{check_update, refresh_statistics, PartitionKind, StalePart};

/// Weights of the tree-search cost model. The per-node term is
/// α·min(‖S‖,‖T‖) + β·s + γ·s^max(‖S‖,‖T‖), where ‖·‖ counts tables and s
/// is the max cross-pair dependence score between the two sides.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct CostParams {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
}

impl Default for CostParams {
    fn default() -> Self {
        CostParams { alpha: 1.0, beta: 1.0, gamma: 1.0 }
    }
}

impl CostParams {
    pub fn validate(&self) -> Result<()> {
        let all = [self.alpha, self.beta, self.gamma];
        if all.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::Build("cost weights must be non-negative".into()));
        }
        if all.iter().all(|v| *v == 0.0) {
            return Err(Error::Build("at least one cost weight must be positive".into()));
        }
        Ok(())
    }
}

/// Leaf-model cost g(T) as a function of the table's attribute count:
/// linear for histogram/exact/sample models, quadratic for SPNs.
pub fn leaf_cost(kind: LeafKind, attrs: usize) -> f64 {
    let k = attrs as f64;
    match kind {
        LeafKind::Spn => k * k,
        LeafKind::Exact | LeafKind::Histogram | LeafKind::Sample => k,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StatsMode {
    /// Ê, M and |W| computed over the full data; acceptance-grade exactness.
    Exact,
    /// Statistics from row samples of size `sample_n`.
    Sampled,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PartitionStrategy {
    /// Dependence-guided refinement until scores fall below τ.
    Auto,
    /// One part per distinct value combination; ignores max_parts. Turns
    /// context-mode estimation exact on two-table schemas (at the cost of
    /// as many parts as distinct rows).
    Singleton,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BuildConfig {
    pub mode: EstimationMode,
    /// Dependence threshold for all partition refinement.
    pub tau: f64,
    pub max_parts: usize,
    /// Parts smaller than this stop splitting.
    pub min_rows: usize,
    /// Sample size in sampled stats mode.
    pub sample_n: usize,
    pub stats: StatsMode,
    pub partitions: PartitionStrategy,
    pub cost: CostParams,
    pub leaf_default: LeafKind,
    /// Per-table leaf kind overrides, keyed by table name.
    pub leaf_overrides: BTreeMap<String, LeafKind>,
    pub leaf: LeafParams,
    pub seed: u64,
    /// Cap on materialized intermediate join rows during construction.
    pub join_cap: usize,
}

impl Default for BuildConfig {
    fn default() -> Self {
        BuildConfig {
            mode: EstimationMode::Context,
            tau: 0.3,
            max_parts: 64,
            min_rows: 32,
            sample_n: 10_000,
            stats: StatsMode::Exact,
            partitions: PartitionStrategy::Auto,
            cost: CostParams::default(),
            leaf_default: LeafKind::Exact,
            leaf_overrides: BTreeMap::new(),
            leaf: LeafParams::default(),
            seed: 0,
            join_cap: crate::oracle::DEFAULT_JOIN_CAP,
        }
    }
}

impl BuildConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tau > 0.0 && self.tau < 1.0) {
            return Err(Error::Build("dependence threshold must lie in (0,1)".into()));
        }
        if self.max_parts < 1 {
            return Err(Error::Build("max_parts must be at least 1".into()));
        }
        if self.sample_n < 1 {
            return Err(Error::Build("sample size must be at least 1".into()));
        }
        self.cost.validate()?;
        self.leaf.validate()
    }

    pub fn leaf_kind(&self, table_name: &str) -> LeafKind {
        self.leaf_overrides.get(table_name).copied().unwrap_or(self.leaf_default)
    }
}

/// One node of the decomposition tree. All vectors on an inner node are
/// indexed consistently: `k` over `t_parts`, `i` over `contexts`, `j` over
/// `s_parts`.
// One node per join edge, so the Leaf/Inner size gap costs nothing.
#[allow(clippy::large_enum_variant)]
#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum DecompNode {
    Leaf {
        table: usize,
        model: LeafModel,
    },
    Inner {
        left: Box<DecompNode>,
        right: Box<DecompNode>,
        /// Schema edge tying the two sides; `t_key`/`s_key` are its
        /// endpoints on the left/right side respectively.
        edge: JoinEdge,
        t_tables: u64,
        s_tables: u64,

        /// Cross-table contexts L_i over S-side attributes.
        contexts: Vec<RegularRegion>,
        /// T-side partition T_k (fanout independence).
        t_parts: Vec<RegularRegion>,
        /// S-side partition S_j (fanout independence).
        s_parts: Vec<RegularRegion>,
        /// Per-part "hit a size/count cap before decorrelating" flags.
        ctx_capped: Vec<bool>,
        t_capped: Vec<bool>,
        s_capped: Vec<bool>,

        /// Ê over T[T_k] of F*_{T→S} (clamped ≥ 1).
        e_t: Vec<f64>,
        /// Ê over S[S_j] of F*_{S→T} (clamped ≥ 1).
        e_s: Vec<f64>,
        /// Restricted fanout matrix: M[k][i] = Ê over T[T_k] of the count
        /// of S partners falling in L_i (unclamped).
        m: Vec<Vec<f64>>,
        /// Per T_k: expected partners outside every context plus the
        /// fraction of rows with no partner at all. On a two-table node
        /// this is exactly the dangling fraction; on deeper nodes it also
        /// absorbs partners whose context attributes are null-extended.
        m_null: Vec<f64>,
        /// Unclamped Ê over T[T_k] of F_{T→S}; zero means the part
        /// scatters nothing (drives the distinct-count indicators).
        t_scatter: Vec<f64>,
        /// Unclamped Ê over S[S_j] of F_{S→T}.
        s_scatter: Vec<f64>,

        /// Pr_T(T_k) as the left child's own estimator reports it.
        t_part_w: Vec<f64>,
        /// Σ_k t_part_w[k]·M[k][i]: context-ratio denominators.
        ctx_denom: Vec<f64>,
        /// Probability mass of each full context through the S side:
        /// (|S|/|W|)·Σ_j Pr_S(L_i ∩ S_j)·e_S[j].
        smass_full: Vec<f64>,
        /// S-side normalizer for independent-mode combination; 1 up to
        /// float rounding in exact stats mode.
        s_norm: f64,

        t_rows: f64,
        s_rows: f64,
        w_rows: f64,
    },
}

impl DecompNode {
    pub fn tables_mask(&self) -> u64 {
        match self {
            DecompNode::Leaf { table, .. } => 1 << table,
            DecompNode::Inner { t_tables, s_tables, .. } => t_tables | s_tables,
        }
    }

    pub fn node_count(&self) -> usize {
        match self {
            DecompNode::Leaf { .. } => 1,
            DecompNode::Inner { left, right, .. } => 1 + left.node_count() + right.node_count(),
        }
    }

    /// Join size of this subtree (leaf: table rows).
    pub fn join_rows(&self) -> f64 {
        match self {
            DecompNode::Leaf { model, .. } => model.row_count() as f64,
            DecompNode::Inner { w_rows, .. } => *w_rows,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DecompositionTree {
    pub config: BuildConfig,
    pub catalog: Catalog,
    pub root: DecompNode,
}

impl DecompositionTree {
    /// Structural validity: the root covers every table, each inner node
    /// splits into two nonempty connected halves crossed by its edge, and
    /// leaves are single tables appearing exactly once.
    pub fn validate_structure(&self) -> Result<()> {
        let all: u64 = (0..self.catalog.tables.len() as u64).map(|t| 1 << t).sum();
        if self.root.tables_mask() != all {
            return Err(Error::Build("tree root does not cover every table".into()));
        }
        self.check_node(&self.root)
    }

    fn check_node(&self, node: &DecompNode) -> Result<()> {
        let DecompNode::Inner { left, right, edge, t_tables, s_tables, .. } = node else {
            return Ok(());
        };
        if left.tables_mask() != *t_tables || right.tables_mask() != *s_tables {
            return Err(Error::Build("node table masks disagree with children".into()));
        }
        if t_tables & s_tables != 0 {
            return Err(Error::Build("node sides overlap".into()));
        }
        for (mask, name) in [(t_tables, "left"), (s_tables, "right")] {
            if !mask_connected(&self.catalog, *mask) {
                return Err(Error::Build(format!("{name} side is not connected")));
            }
        }
        let (lt, rt) = (1u64 << edge.left.table, 1u64 << edge.right.table);
        let crosses = (lt & t_tables != 0 && rt & s_tables != 0)
            || (lt & s_tables != 0 && rt & t_tables != 0);
        if !crosses {
            return Err(Error::Build("node edge does not cross its split".into()));
        }
        self.check_node(left)?;
        self.check_node(right)
    }

    pub fn save<W: Write>(&self, sink: W) -> Result<()> {
        let payload = serde_json::to_vec(self)?;
        write_envelope(sink, MODEL_MAGIC, &payload)
    }

    pub fn load<R: Read>(source: R) -> Result<DecompositionTree> {
        let payload = read_envelope(source, MODEL_MAGIC)?;
        Ok(serde_json::from_slice(&payload)?)
    }

    /// Full structured dump, stable across runs, for diffing models.
    pub fn inspect(&self) -> String {
        serde_json::to_string_pretty(self).expect("tree serializes")
    }
}

pub fn mask_connected(catalog: &Catalog, mask: u64) -> bool {
    if mask == 0 {
        return false;
    }
    let start = mask.trailing_zeros() as u64;
    let mut seen = 1u64 << start;
    let mut frontier = vec![start as usize];
    while let Some(t) = frontier.pop() {
        for e in &catalog.edges {
            let (a, b) = (e.left.table as u64, e.right.table as u64);
            for (from, to) in [(a, b), (b, a)] {
                if from == t as u64 && mask & (1 << to) != 0 && seen & (1 << to) == 0 {
                    seen |= 1 << to;
                    frontier.push(to as usize);
                }
            }
        }
    }
    seen == mask
}

// ---------------------------------------------------------------------------
// File envelope: magic, version, length-prefixed payload, SHA-256 trailer.

pub const MODEL_MAGIC: &[u8; 4] = b"GLTR";
pub const DATA_MAGIC: &[u8; 4] = b"GLDT";
const FORMAT_VERSION: u8 = 1;

pub fn write_envelope<W: Write>(mut sink: W, magic: &[u8; 4], payload: &[u8]) -> Result<()> {
    sink.write_all(magic)?;
    sink.write_all(&[FORMAT_VERSION])?;
    sink.write_all(&(payload.len() as u64).to_le_bytes())?;
    sink.write_all(payload)?;
    sink.write_all(&Sha256::digest(payload))?;
    Ok(())
}

pub fn read_envelope<R: Read>(mut source: R, magic: &[u8; 4]) -> Result<Vec<u8>> {
    let mut bytes = Vec::new();
    source.read_to_end(&mut bytes)?;
    if bytes.len() < 13 || &bytes[..4] != magic {
        return Err(Error::ModelFile(format!(
            "not a {} file (bad magic)",
            String::from_utf8_lossy(magic)
        )));
    }
    if bytes[4] != FORMAT_VERSION {
        return Err(Error::ModelFile(format!(
            "unsupported file version {} (expected {FORMAT_VERSION})",
            bytes[4]
        )));
    }
    let len = u64::from_le_bytes(bytes[5..13].try_into().unwrap()) as usize;
    let end = 13 + len;
    if bytes.len() != end + 32 {
        return Err(Error::ModelFile("file is truncated or has trailing bytes".into()));
    }
    let payload = &bytes[13..end];
    if Sha256::digest(payload).as_slice() != &bytes[end..] {
        return Err(Error::ModelFile("checksum mismatch".into()));
    }
    Ok(payload.to_vec())
}

/// Ingested database files share the model envelope under their own magic.
pub fn save_database<W: Write>(db: &Database, sink: W) -> Result<()> {
    let payload = serde_json::to_vec(db)?;
    write_envelope(sink, DATA_MAGIC, &payload)
}

pub fn load_database<R: Read>(source: R) -> Result<Database> {
    let payload = read_envelope(source, DATA_MAGIC)?;
    Ok(serde_json::from_slice(&payload)?)
}
