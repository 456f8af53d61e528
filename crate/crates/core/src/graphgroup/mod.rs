//! Unit-distance graphs of Enflo spaces, their wedge, and the group whose
//! generators are graph edges and whose relations are all loops.
//!
//! Every closed walk is a relation, so a non-tree edge equals the tree path
//! between its endpoints and the group is free on the tree edges. Elements are
//! stored as freely reduced words over tree letters.

mod free_group;
mod graph;
mod word;

pub use free_group::{free_reduce, GroupElement, Letter};
pub use graph::{bfs_distance, metric_agreement, neighbors, MetricAgreement, Graph, SpanningTree, WedgeGraph};
pub use word::{
    cayley_ball, edge_image, fundamental_cycles, isometric_embedding_check, subgroup_distortion, vertex_image,
    word_length, DistortionRow, EmbeddingCheckReport, FundamentalCycle, GeneratorImage, PairCheck, PairSelection,
    PairStatus, WordMetric, DEFAULT_MAX_BALL,
};
