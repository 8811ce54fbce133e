//! Attribute-star mining on attributed graphs.
//!
//! An a-star pairs a set of core attribute values with a set of leaf values
//! that co-occur on neighbouring vertices. The miner greedily merges leafsets
//! while the total description length of model plus data keeps shrinking, and
//! the resulting code lengths drive attribute completion and rule ranking.

pub mod cli;
pub mod encoding;
pub mod error;
pub mod graph;
pub mod inverted;
pub mod miner;
pub mod rules;
pub mod scoring;
pub mod synth;

pub use encoding::{conditional_entropy, data_length, model_length, total_length, LengthReport, Model};
pub use error::{Error, Result};
pub use graph::{
    build_mapping_table, load_coresets, load_graph, singleton_coresets, AttrId, AttributedGraph, CoreId, Coreset,
    GraphBuilder, MappingTable, VertexId,
};
pub use inverted::{InvertedDatabase, Leafset, LeafsetId, MergeCase};
pub use miner::{mine_basic, mine_partial, AStar, Algorithm, GainMode, Miner, MinerConfig, MiningResult};
pub use rules::{coverage_ratio, split_to_pairs, PairRule, RuleLibrary};
pub use scoring::{fuse_scores, ndcg_at_k, recall_at_k, score_node, similarity_weight, ScoreVector};
