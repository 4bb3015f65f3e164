//! Dynamic density-based hierarchical clustering over a sliding window.

pub mod bubble_tree;
pub mod bubbles;
pub mod dynamic;
pub mod error;
pub mod harness;
pub mod hierarchy;
pub mod index;
mod lct;
pub mod metric;
pub mod mst;
pub mod pipeline;

pub use dynamic::{DynamicClusterer, UpdateStats};
pub use error::{Error, Result};
pub use hierarchy::{build_dendrogram, extract_flat, nmi, Dendrogram, FlatClustering, NOISE};
pub use index::{IndexConfig, SsTree};
pub use metric::{CoreRecord, Neighbor, Point, PointId, ReachEdge};
pub use mst::{dual_tree_boruvka, LinkCutForest};
pub use bubble_tree::{BubbleTree, BubbleTreeConfig, ClusteringFeature, Quality};
pub use bubbles::DataBubble;
pub use harness::{Mode, SlideReport, WindowConfig};
pub use pipeline::{cluster_exact, cluster_summary, static_cluster, PointClustering};
