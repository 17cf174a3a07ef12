use thiserror::Error;

/// Errors shared across the crate. Variants are grouped by the surface that
/// raises them rather than one variant per failure site; the message carries
/// the specifics.
#[derive(Debug, Error)]
pub enum Error {
    /// Schema document problems: malformed JSON, unknown attribute kinds,
    /// dangling edge references, disconnected or cyclic join graphs.
    #[error("schema: {0}")]
    Schema(String),

    /// CSV ingestion problems: header mismatch, row width, unparsable or
    /// out-of-domain cells.
    #[error("ingest: {0}")]
    Ingest(String),

    /// Query document problems: unknown tables/attributes, predicates on
    /// tables outside the touched set, disconnected touched set.
    #[error("query: {0}")]
    Query(String),

    /// Region algebra misuse: mixing interval and code constraints on the
    /// same attribute, constraints on attributes outside a model's scope.
    #[error("region: {0}")]
    Region(String),

    /// Invalid sampling/correlation inputs: length mismatch, too few rows,
    /// unsupported join method for the edge kind.
    #[error("sample: {0}")]
    Sample(String),

    /// Invalid build parameters or an unbuildable tree (e.g. join set not
    /// connected in the schema graph).
    #[error("build: {0}")]
    Build(String),

    /// Estimation-time problems: query tables missing from the tree,
    /// distinct estimation without any constrained attribute.
    #[error("estimate: {0}")]
    Estimate(String),

    /// Oracle execution refused to continue (intermediate join exceeded the
    /// configured row cap).
    #[error("oracle: intermediate join exceeds cap of {cap} rows")]
    JoinCap { cap: usize },

    /// Model/data file problems: bad magic, unsupported version, checksum
    /// mismatch, truncation.
    #[error("model file: {0}")]
    ModelFile(String),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
