//! Segregation data cubes from individual/group affiliation data.
//!
//! The pipeline runs: ingest, project the membership graph, cluster it into
//! units, flatten into a unit table, mine closed itemsets, and fill a cube of
//! segregation indexes over every (minority, context) pair.

pub mod check;
pub mod clustering;
pub mod cube;
pub mod export;
pub mod indexes;
pub mod ingest;
pub mod miner;
pub mod pipeline;
pub mod projection;
pub mod schema;
pub mod synth;
pub mod table;

pub use clustering::{connected_components, threshold_components, Clustering, ClusteringMethod, UnitAssignment};
pub use cube::{build_cube, query_cell, top_k, CubeCell, CubeError, CubeParams, SegregationCube};
pub use export::{export_csv, export_json, parse_json, report_summary, CubeDocument};
pub use indexes::{CountsVector, IndexKind};
pub use ingest::{Dataset, IngestError};
pub use miner::{encode, mine_closed, ClosedItemset, TransactionDb};
pub use projection::{project, project_with, ProjectedGraph, ProjectionOptions, ProjectionSide};
pub use schema::{AttributeDecl, AttributeKind, AttributeSchema, SnapshotDate};
pub use table::{build_table, load_table, UnitTable};
