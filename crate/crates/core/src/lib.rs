//! Join cardinality estimation by merging per-table estimators through a
//! join decomposition tree.
//!
//! The crate is organized around the lifecycle of a model:
//!
//! * [`catalog`] — schema documents, CSV ingestion, columnar storage.
//! * [`regions`] — the region algebra queries and partitions live in.
//! * [`correlate`] — dependence scoring (RDC), sampling, fanout columns.
//! * [`leafmodels`] — per-table estimators (exact, histogram, sample, SPN).
//! * [`gluetree`] — the decomposition tree: cost-based shape search,
//!   partition refinement, fanout statistics, persistence.
//! * [`inference`] — cardinality and distinct-count estimation over a tree.
//! * [`oracle`] — exact execution, synthetic data/workloads, q-error.

pub mod catalog;
pub mod correlate;
pub mod error;
pub mod gluetree;
pub mod inference;
pub mod join;
pub mod leafmodels;
pub mod oracle;
pub mod regions;

pub use error::{Error, Result};
