//! Offline steps that turn each online structure into point labels.

use serde::{Deserialize, Serialize};

use crate::bubble_tree::BubbleTree;
use crate::bubbles::{assign_points, cluster_bubbles, DataBubble};
use crate::dynamic::DynamicClusterer;
use crate::error::{Error, Result};
use crate::hierarchy::{build_dendrogram, extract_flat, Dendrogram, FlatClustering, NOISE};
use crate::index::IndexConfig;
use crate::metric::{Point, PointId};

/// Point-level flat clustering, ids ascending.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointClustering {
    pub ids: Vec<PointId>,
    pub labels: Vec<i64>,
    pub n_clusters: usize,
    /// Merge heights of the hierarchy the labels were cut from.
    pub merge_weights: Vec<f64>,
}

impl PointClustering {
    pub fn noise_count(&self) -> usize {
        self.labels.iter().filter(|&&l| l == NOISE).count()
    }
}

fn from_flat(dendrogram: &Dendrogram, flat: FlatClustering) -> PointClustering {
    let mut pairs: Vec<(PointId, i64)> = flat.ids.into_iter().zip(flat.labels).collect();
    pairs.sort_unstable_by_key(|p| p.0);
    PointClustering {
        ids: pairs.iter().map(|p| p.0).collect(),
        labels: pairs.iter().map(|p| p.1).collect(),
        n_clusters: flat.cluster_weights.len(),
        merge_weights: dendrogram.merge_weights(),
    }
}

/// Cuts the tree the clusterer currently maintains.
pub fn cluster_exact(c: &DynamicClusterer, min_cluster_weight: u64) -> Result<PointClustering> {
    let mst = c.mst_snapshot()?;
    let records = c.core_records();
    let leaves: Vec<(PointId, u64)> = records.keys().map(|&id| (id, 1)).collect();
    let mut dendrogram = build_dendrogram(&leaves, &mst)?;
    dendrogram.set_leaf_levels(records.values().map(|r| r.core_distance).collect())?;
    let flat = extract_flat(&dendrogram, min_cluster_weight)?;
    Ok(from_flat(&dendrogram, flat))
}

/// One-shot clustering from scratch: index build, core distances,
/// dual-tree Borůvka, hierarchy and flat cut.
pub fn static_cluster(points: &[Point], min_pts: usize, min_cluster_weight: u64) -> Result<PointClustering> {
    if points.len() <= min_pts {
        return Err(Error::InsufficientData { needed: min_pts + 1, available: points.len() });
    }
    let c = DynamicClusterer::from_points(IndexConfig::new(min_pts, 5, 10)?, points.iter().cloned())?;
    cluster_exact(&c, min_cluster_weight)
}

/// Bubble pipeline: leaf summaries to bubbles, static clustering over the
/// bubbles, then every stored point takes the label of its nearest bubble.
pub fn cluster_summary(tree: &BubbleTree, min_pts: usize, min_cluster_weight: u64) -> Result<PointClustering> {
    let bubbles: Vec<DataBubble> = tree.leaf_cfs().iter().map(DataBubble::from_leaf).collect::<Result<_>>()?;
    let res = cluster_bubbles(&bubbles, min_pts)?;
    let flat = extract_flat(&res.dendrogram, min_cluster_weight)?;
    let points = tree.points();
    let owner = assign_points(&points, &bubbles)?;
    Ok(PointClustering {
        ids: points.iter().map(|p| p.id).collect(),
        labels: owner.iter().map(|&b| flat.labels[b]).collect(),
        n_clusters: flat.cluster_weights.len(),
        merge_weights: res.dendrogram.merge_weights(),
    })
}
