//! Maximum inner product search over navigable small world graphs.
//!
//! The crate provides two graph indexes — a single inner-product graph
//! (`IpNswIndex`) and a two-graph variant (`IpNswPlusIndex`) whose angular
//! stage seeds the inner-product walk — together with exact brute-force
//! baselines, dataset synthesis and norm statistics, and the diagnostics that
//! expose how large-norm items dominate results, graph in-degrees, and
//! evaluation effort.
//!
//! Layout:
//! - [`dataset`]: vector collections, file formats, synthesis, norm
//!   transforms and rank-percentile partitions
//! - [`similarity`]: inner-product and angular scoring
//! - [`graph`], [`pool`], [`search`], [`build`]: the proximity graph, the
//!   bounded candidate pool, the greedy walk, and sequential construction
//! - [`index`]: the two user-facing indexes and their file format
//! - [`oracle`]: linear-scan ground truth, recall, candidate-aggregation
//!   experiments
//! - [`analysis`]: probability/regression diagnostics and the norm-bias
//!   pipelines

pub mod analysis;
pub mod build;
pub mod dataset;
pub mod error;
pub mod graph;
pub mod index;
pub mod oracle;
pub mod pool;
pub mod search;
pub mod similarity;

pub use analysis::{
    cardinality_bias_curve, computation_distribution, group_value_rows, product_survival,
    result_norm_occupancy, rows_to_csv, theorem1_probability, theorem2_conditional,
    theorem2_regression, GroupValueRow, NormBiasReport, RegressionFit,
};
pub use build::build_nsw;
pub use dataset::{Dataset, FileFormat, NormGroupPartition, NormModel};
pub use error::{Error, Result};
pub use graph::{in_degree_stats, InDegreeStats, ProximityGraph};
pub use index::{
    AnyIndex, IndexMeta, IpNswIndex, IpNswParams, IpNswPlusIndex, IpNswPlusParams, PlusQueryOptions,
};
pub use oracle::{
    brute_topk, mips_of_mips_oracle_recall, recall, two_stage_oracle_recall, GroundTruth,
    GroundTruthMeta, TopKResult,
};
pub use pool::{CandidatePool, PoolEntry};
pub use search::{graph_search, Scorer, SearchStats, VisitedSet};
pub use similarity::SimilarityKind;
