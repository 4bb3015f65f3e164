//! Data bubbles derived from leaf summaries, their distances and core
//! distances, and static clustering over them.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bubble_tree::{ClusteringFeature, LeafSummary};
use crate::error::{Error, Result};
use crate::hierarchy::{build_dendrogram, Dendrogram};
use crate::index::{IndexConfig, SsTree};
use crate::metric::{distance, Point, PointId, ReachEdge};

const RADICAND_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DataBubble {
    pub rep: Vec<f64>,
    pub n: u64,
    pub extent: f64,
    pub dim: usize,
    pub members: Vec<PointId>,
}

impl DataBubble {
    /// Estimated distance to the k-th nearest neighbor inside the bubble.
    pub fn nn_dist(&self, k: u64) -> f64 {
        if self.n == 0 || self.extent == 0.0 {
            return 0.0;
        }
        (k as f64 / self.n as f64).powf(1.0 / self.dim as f64) * self.extent
    }

    pub fn from_leaf(leaf: &LeafSummary) -> Result<Self> {
        let mut b = derive_bubble(&leaf.cf, leaf.cf.dim())?;
        b.members = leaf.members.clone();
        Ok(b)
    }
}

pub fn derive_bubble(cf: &ClusteringFeature, dim: usize) -> Result<DataBubble> {
    if cf.n == 0 {
        return Err(Error::InvalidInput("cannot derive a bubble from an empty summary".into()));
    }
    if dim == 0 || dim != cf.dim() {
        return Err(Error::DimensionMismatch { expected: cf.dim(), got: dim });
    }
    let extent = if cf.n == 1 {
        0.0
    } else {
        let n = cf.n as f64;
        let num = 2.0 * n * cf.ss - 2.0 * cf.ls_norm_sq();
        if num < -RADICAND_SLACK * (2.0 * n * cf.ss).max(1.0) {
            return Err(Error::InvalidInput(format!("summary has negative spread ({num})")));
        }
        (num.max(0.0) / (n * (n - 1.0))).sqrt()
    };
    Ok(DataBubble { rep: cf.rep(), n: cf.n, extent, dim, members: Vec::new() })
}

fn raw_distance(b: &DataBubble, c: &DataBubble) -> f64 {
    let d = distance(&b.rep, &c.rep);
    if d >= b.extent + c.extent {
        d - (b.extent + c.extent) + (b.nn_dist(1) + c.nn_dist(1))
    } else {
        b.nn_dist(1).max(c.nn_dist(1))
    }
}

/// Rep distance minus both extents plus both 1-NN estimates when the bubbles
/// do not overlap; the larger 1-NN estimate when they do.
pub fn bubble_distance(b: &DataBubble, c: &DataBubble) -> Result<f64> {
    if b.dim != c.dim || b.rep.len() != c.rep.len() {
        return Err(Error::DimensionMismatch { expected: b.dim, got: c.dim });
    }
    if b == c {
        return Ok(0.0);
    }
    Ok(raw_distance(b, c))
}

fn core_distance_at(b: usize, bubbles: &[DataBubble], weight: u64) -> Result<f64> {
    let own = &bubbles[b];
    if own.n >= weight {
        return Ok(own.nn_dist(weight));
    }
    let mut others: Vec<(f64, usize)> = bubbles
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != b)
        .map(|(i, c)| (raw_distance(own, c), i))
        .collect();
    others.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)));
    let mut cum = own.n;
    for (d, i) in others {
        let c = &bubbles[i];
        if cum + c.n >= weight {
            return Ok(d + c.nn_dist(weight - cum));
        }
        cum += c.n;
    }
    Err(Error::InsufficientData { needed: weight as usize, available: cum as usize })
}

/// Distance from bubble `b` at which `min_pts` points are reached, counting
/// the bubble's own weight first and taking only the remainder from the
/// bubble that completes the count.
pub fn bubble_core_distance(b: usize, bubbles: &[DataBubble], min_pts: usize) -> Result<f64> {
    if b >= bubbles.len() {
        return Err(Error::InvalidInput(format!("bubble {b} out of range")));
    }
    if let Some(c) = bubbles.iter().find(|c| c.dim != bubbles[b].dim) {
        return Err(Error::DimensionMismatch { expected: bubbles[b].dim, got: c.dim });
    }
    core_distance_at(b, bubbles, min_pts as u64)
}

pub fn bubble_mutual_reachability(cd_b: f64, cd_c: f64, d: f64) -> f64 {
    cd_b.max(cd_c).max(d)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BubbleClustering {
    /// Leaves are bubble indices weighted by bubble size.
    pub dendrogram: Dendrogram,
    pub core_distances: Vec<f64>,
    pub mst: Vec<ReachEdge>,
}

/// Static hierarchy over bubbles: exact Prim on the complete bubble graph.
///
/// As with points, a bubble's neighborhood does not count the represented
/// point itself, so core distances target `min_pts + 1` points of weight.
/// With one point per bubble this is exactly the point-level hierarchy.
pub fn cluster_bubbles(bubbles: &[DataBubble], min_pts: usize) -> Result<BubbleClustering> {
    if bubbles.is_empty() {
        return Err(Error::InvalidInput("no bubbles to cluster".into()));
    }
    let dim = bubbles[0].dim;
    if let Some(c) = bubbles.iter().find(|c| c.dim != dim) {
        return Err(Error::DimensionMismatch { expected: dim, got: c.dim });
    }
    let total: u64 = bubbles.iter().map(|b| b.n).sum();
    let target = min_pts as u64 + 1;
    if total < target {
        return Err(Error::InsufficientData { needed: target as usize, available: total as usize });
    }
    let cds: Vec<f64> = (0..bubbles.len())
        .into_par_iter()
        .map(|b| core_distance_at(b, bubbles, target))
        .collect::<Result<_>>()?;

    let l = bubbles.len();
    let mut in_tree = vec![false; l];
    let mut best = vec![(f64::INFINITY, usize::MAX); l];
    let mut mst = Vec::with_capacity(l.saturating_sub(1));
    let mut cur = 0;
    in_tree[0] = true;
    for _ in 1..l {
        for j in 0..l {
            if in_tree[j] {
                continue;
            }
            let w = bubble_mutual_reachability(cds[cur], cds[j], raw_distance(&bubbles[cur], &bubbles[j]));
            if w < best[j].0 {
                best[j] = (w, cur);
            }
        }
        let next = (0..l)
            .filter(|&j| !in_tree[j])
            .min_by(|&a, &b| best[a].0.total_cmp(&best[b].0).then(a.cmp(&b)))
            .expect("vertices left");
        in_tree[next] = true;
        mst.push(ReachEdge::new(best[next].1 as PointId, next as PointId, best[next].0));
        cur = next;
    }
    mst.sort_by(ReachEdge::order);
    let leaves: Vec<(PointId, u64)> = bubbles.iter().enumerate().map(|(i, b)| (i as PointId, b.n)).collect();
    let mut dendrogram = build_dendrogram(&leaves, &mst)?;
    dendrogram.set_leaf_levels(cds.clone())?;
    Ok(BubbleClustering { dendrogram, core_distances: cds, mst })
}

/// Index of the bubble whose representative is nearest to each point; ties
/// go to the smaller bubble index.
pub fn assign_points(points: &[Point], bubbles: &[DataBubble]) -> Result<Vec<usize>> {
    if bubbles.is_empty() {
        return Err(Error::InvalidInput("no bubbles to assign to".into()));
    }
    let mut reps = SsTree::new(IndexConfig::new(1, 2, 8)?);
    for (i, b) in bubbles.iter().enumerate() {
        reps.insert(Point::new(i as PointId, b.rep.clone()))?;
    }
    points
        .par_iter()
        .map(|p| Ok(reps.knn(&p.coords, 1, None)?[0].id as usize))
        .collect()
}
