//! Offline extraction: single-linkage dendrogram from a spanning tree,
//! condensed-tree flat clustering with excess-of-mass selection, and NMI.
//!
//! Leaves carry integer weights (1 for points, the represented count for data
//! bubbles). Cluster sizes, the minimum cluster weight and stabilities are all
//! measured in that weight.

use std::collections::{BTreeMap, HashMap};

use petgraph::unionfind::UnionFind;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metric::{PointId, ReachEdge};

/// Label given to elements outside every selected cluster.
pub const NOISE: i64 = -1;

/// One merge of two subclusters. Node ids below the leaf count are leaves;
/// merge `i` creates node `leaf_count + i`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Merge {
    pub left: usize,
    pub right: usize,
    pub weight: f64,
    pub size: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dendrogram {
    leaf_ids: Vec<PointId>,
    leaf_weights: Vec<u64>,
    merges: Vec<Merge>,
    /// Height at which each leaf itself appears (its core distance), if known.
    #[serde(default)]
    leaf_levels: Option<Vec<f64>>,
}

impl Dendrogram {
    /// Records the height at which each leaf appears. A leaf that continues a
    /// cluster on its own then persists until this level instead of vanishing
    /// at its last merge.
    pub fn set_leaf_levels(&mut self, levels: Vec<f64>) -> Result<()> {
        if levels.len() != self.leaf_count() {
            return Err(Error::InvalidInput(format!("{} leaf levels for {} leaves", levels.len(), self.leaf_count())));
        }
        if levels.iter().any(|l| l.is_nan() || *l < 0.0) {
            return Err(Error::InvalidInput("leaf levels must be non-negative".into()));
        }
        self.leaf_levels = Some(levels);
        Ok(())
    }

    pub fn leaf_levels(&self) -> Option<&[f64]> {
        self.leaf_levels.as_deref()
    }

    pub fn leaf_ids(&self) -> &[PointId] {
        &self.leaf_ids
    }

    pub fn leaf_weights(&self) -> &[u64] {
        &self.leaf_weights
    }

    pub fn merges(&self) -> &[Merge] {
        &self.merges
    }

    pub fn leaf_count(&self) -> usize {
        self.leaf_ids.len()
    }

    pub fn total_weight(&self) -> u64 {
        self.leaf_weights.iter().sum()
    }

    /// Merge heights in ascending order.
    pub fn merge_weights(&self) -> Vec<f64> {
        self.merges.iter().map(|m| m.weight).collect()
    }

    fn size(&self, node: usize) -> u64 {
        let n = self.leaf_count();
        if node < n {
            self.leaf_weights[node]
        } else {
            self.merges[node - n].size
        }
    }
}

/// Single-linkage dendrogram: edges are merged in ascending weight order.
/// `leaves` lists every vertex with its weight; `edges` must be a spanning
/// tree over exactly those vertices.
pub fn build_dendrogram(leaves: &[(PointId, u64)], edges: &[ReachEdge]) -> Result<Dendrogram> {
    let n = leaves.len();
    if n == 0 {
        return Err(Error::InvalidInput("dendrogram needs at least one leaf".into()));
    }
    if edges.len() != n - 1 {
        return Err(Error::InvalidInput(format!("{} edges cannot span {n} leaves", edges.len())));
    }
    let mut pos = HashMap::with_capacity(n);
    for (i, &(id, _)) in leaves.iter().enumerate() {
        if pos.insert(id, i).is_some() {
            return Err(Error::InvalidInput(format!("leaf {id} listed twice")));
        }
    }
    let mut sorted = edges.to_vec();
    sorted.sort_by(ReachEdge::order);
    let mut uf = UnionFind::new(n);
    let mut node_of: Vec<usize> = (0..n).collect();
    let mut size: Vec<u64> = leaves.iter().map(|&(_, w)| w).collect();
    let mut merges = Vec::with_capacity(n.saturating_sub(1));
    for e in &sorted {
        let a = *pos.get(&e.u).ok_or_else(|| Error::InvalidInput(format!("edge endpoint {} is not a leaf", e.u)))?;
        let b = *pos.get(&e.v).ok_or_else(|| Error::InvalidInput(format!("edge endpoint {} is not a leaf", e.v)))?;
        let (ra, rb) = (uf.find(a), uf.find(b));
        if ra == rb {
            return Err(Error::InvalidInput(format!("edge {}-{} closes a cycle", e.u, e.v)));
        }
        uf.union(ra, rb);
        let root = uf.find(ra);
        let (l, r) = (node_of[ra].min(node_of[rb]), node_of[ra].max(node_of[rb]));
        let merged = size[ra] + size[rb];
        merges.push(Merge { left: l, right: r, weight: e.weight, size: merged });
        node_of[root] = n + merges.len() - 1;
        size[root] = merged;
    }
    Ok(Dendrogram {
        leaf_ids: leaves.iter().map(|&(id, _)| id).collect(),
        leaf_weights: leaves.iter().map(|&(_, w)| w).collect(),
        merges,
        leaf_levels: None,
    })
}

/// A flat partition of the dendrogram's leaves.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlatClustering {
    /// Leaf ids, aligned with `labels`.
    pub ids: Vec<PointId>,
    /// Cluster label per leaf, or [`NOISE`].
    pub labels: Vec<i64>,
    /// Aggregate leaf weight of each cluster, indexed by label.
    pub cluster_weights: Vec<u64>,
    pub noise_weight: u64,
}

impl FlatClustering {
    pub fn n_clusters(&self) -> usize {
        self.cluster_weights.len()
    }

    pub fn label_of(&self) -> HashMap<PointId, i64> {
        self.ids.iter().copied().zip(self.labels.iter().copied()).collect()
    }
}

struct Condensed {
    parent: Option<usize>,
    birth: f64,
    size: u64,
    children: Vec<usize>,
}

/// Flat clusters by condensed-tree pruning and excess-of-mass stability.
///
/// A split counts only when at least two sides weigh `min_cluster_weight` or
/// more; lighter sides fall out as noise at that level. Merges of equal height
/// are treated as one multiway split, so the result depends only on the
/// hierarchy and not on how ties were ordered. Leaves with recorded levels
/// persist until their own level. The root is eligible only when
/// it never splits; its members are then the elements that stay until its
/// densest level.
pub fn extract_flat(dendrogram: &Dendrogram, min_cluster_weight: u64) -> Result<FlatClustering> {
    if min_cluster_weight == 0 {
        return Err(Error::InvalidInput("min_cluster_weight must be at least 1".into()));
    }
    let n = dendrogram.leaf_count();
    let total = dendrogram.total_weight();
    let all_noise = || FlatClustering {
        ids: dendrogram.leaf_ids.clone(),
        labels: vec![NOISE; n],
        cluster_weights: Vec::new(),
        noise_weight: total,
    };
    if total < min_cluster_weight {
        return Ok(all_noise());
    }

    let levels = dendrogram.leaf_levels.as_deref().unwrap_or(&[]);
    let max_lambda = dendrogram
        .merges
        .iter()
        .map(|m| m.weight)
        .chain(levels.iter().copied())
        .filter(|&w| w > 0.0)
        .map(|w| 1.0 / w)
        .fold(0.0, f64::max);
    let zero_lambda = if max_lambda > 0.0 { 2.0 * max_lambda } else { 1.0 };
    let lambda = |w: f64| if w > 0.0 { 1.0 / w } else { zero_lambda };
    let weight_of = |node: usize| if node < n { f64::NAN } else { dendrogram.merges[node - n].weight };
    // λ at which a leaf reached at λ `reached` leaves its cluster
    let leaf_death = |leaf: usize, reached: f64| match dendrogram.leaf_levels.as_deref() {
        Some(l) => lambda(l[leaf]).max(reached),
        None => reached,
    };
    let children_of = |node: usize| {
        let m = &dendrogram.merges[node - n];
        [m.left, m.right]
    };

    let root_node = 2 * n - 2;
    let mut clusters = vec![Condensed { parent: None, birth: 0.0, size: total, children: Vec::new() }];
    let mut depart_cluster = vec![0usize; n];
    let mut depart_lambda = vec![0.0f64; n];

    let fall_out = |node: usize, c: usize, lam: f64, dc: &mut Vec<usize>, dl: &mut Vec<f64>| {
        let mut stack = vec![node];
        while let Some(x) = stack.pop() {
            if x < n {
                dc[x] = c;
                dl[x] = lam;
            } else {
                stack.extend(children_of(x));
            }
        }
    };

    // (dendrogram node, condensed cluster, λ at which the node was reached)
    let mut work = vec![(root_node, 0usize, 0.0f64)];
    while let Some((node, c, reached)) = work.pop() {
        if node < n {
            depart_cluster[node] = c;
            depart_lambda[node] = leaf_death(node, reached);
            continue;
        }
        let w = weight_of(node);
        let lam = lambda(w);
        let mut kids = Vec::new();
        let mut expand = vec![node];
        while let Some(x) = expand.pop() {
            for k in children_of(x) {
                if k >= n && weight_of(k) == w {
                    expand.push(k);
                } else {
                    kids.push(k);
                }
            }
        }
        kids.sort_unstable();
        // a leaf that would vanish at this very level is not a cluster
        let big: Vec<usize> = kids
            .iter()
            .copied()
            .filter(|&k| dendrogram.size(k) >= min_cluster_weight && (k >= n || leaf_death(k, lam) > lam))
            .collect();
        for &k in kids.iter().filter(|k| !big.contains(k)) {
            fall_out(k, c, lam, &mut depart_cluster, &mut depart_lambda);
        }
        match big.len() {
            0 => {}
            1 => work.push((big[0], c, lam)),
            _ => {
                for &k in &big {
                    let id = clusters.len();
                    clusters.push(Condensed { parent: Some(c), birth: lam, size: dendrogram.size(k), children: Vec::new() });
                    clusters[c].children.push(id);
                    work.push((k, id, lam));
                }
            }
        }
    }

    let mut stability = vec![0.0f64; clusters.len()];
    for leaf in 0..n {
        let c = depart_cluster[leaf];
        stability[c] += dendrogram.leaf_weights[leaf] as f64 * (depart_lambda[leaf] - clusters[c].birth);
    }
    for c in 1..clusters.len() {
        let p = clusters[c].parent.unwrap();
        stability[p] += clusters[c].size as f64 * (clusters[c].birth - clusters[p].birth);
    }

    // bottom-up excess of mass; children always have larger ids than parents
    let mut value = vec![0.0f64; clusters.len()];
    let mut chosen = vec![false; clusters.len()];
    for c in (0..clusters.len()).rev() {
        if clusters[c].children.is_empty() {
            value[c] = stability[c];
            chosen[c] = true;
            continue;
        }
        let sub: f64 = clusters[c].children.iter().map(|&k| value[k]).sum();
        if c != 0 && stability[c] >= sub {
            value[c] = stability[c];
            chosen[c] = true;
        } else {
            value[c] = sub;
        }
    }
    // keep only the topmost chosen clusters
    let mut selected_root = vec![None; clusters.len()];
    for c in 0..clusters.len() {
        let inherited = clusters[c].parent.and_then(|p| selected_root[p]);
        selected_root[c] = inherited.or(if chosen[c] { Some(c) } else { None });
    }

    let root_threshold = if chosen[0] {
        (0..n).filter(|&l| depart_cluster[l] == 0).map(|l| depart_lambda[l]).fold(f64::NEG_INFINITY, f64::max)
    } else {
        f64::INFINITY
    };

    let mut remap: BTreeMap<usize, i64> = BTreeMap::new();
    let mut order = Vec::new();
    let mut labels = vec![NOISE; n];
    for leaf in 0..n {
        let Some(sel) = selected_root[depart_cluster[leaf]] else { continue };
        if sel == 0 && depart_lambda[leaf] < root_threshold {
            continue;
        }
        let next = remap.len() as i64;
        let label = *remap.entry(sel).or_insert_with(|| {
            order.push(sel);
            next
        });
        labels[leaf] = label;
    }
    let mut cluster_weights = vec![0u64; remap.len()];
    let mut noise_weight = 0;
    for (&label, &w) in labels.iter().zip(&dendrogram.leaf_weights) {
        match label {
            NOISE => noise_weight += w,
            l => cluster_weights[l as usize] += w,
        }
    }
    Ok(FlatClustering { ids: dendrogram.leaf_ids.clone(), labels, cluster_weights, noise_weight })
}

fn entropy(counts: impl Iterator<Item = u64>, total: f64) -> f64 {
    counts
        .filter(|&c| c > 0)
        .map(|c| {
            let p = c as f64 / total;
            -p * p.ln()
        })
        .sum()
}

/// Normalized mutual information with arithmetic-mean normalization and
/// natural logarithms. Noise is an ordinary class.
pub fn nmi(a: &[i64], b: &[i64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::InvalidInput(format!("label lengths differ: {} vs {}", a.len(), b.len())));
    }
    if a.is_empty() {
        return Err(Error::InvalidInput("labelings are empty".into()));
    }
    let total = a.len() as f64;
    let mut ca: BTreeMap<i64, u64> = BTreeMap::new();
    let mut cb: BTreeMap<i64, u64> = BTreeMap::new();
    let mut joint: BTreeMap<(i64, i64), u64> = BTreeMap::new();
    for (&x, &y) in a.iter().zip(b) {
        *ca.entry(x).or_default() += 1;
        *cb.entry(y).or_default() += 1;
        *joint.entry((x, y)).or_default() += 1;
    }
    let ha = entropy(ca.values().copied(), total);
    let hb = entropy(cb.values().copied(), total);
    if ca.len() == 1 && cb.len() == 1 {
        return Ok(1.0);
    }
    if ca.len() == 1 || cb.len() == 1 {
        return Ok(0.0);
    }
    if joint.len() == ca.len() && joint.len() == cb.len() {
        // one-to-one class correspondence: the partitions are identical
        return Ok(1.0);
    }
    let mi: f64 = joint
        .iter()
        .map(|(&(x, y), &nxy)| {
            let nxy = nxy as f64;
            nxy / total * (total * nxy / (ca[&x] as f64 * cb[&y] as f64)).ln()
        })
        .sum();
    let denom = 0.5 * (ha + hb);
    Ok((mi / denom).clamp(0.0, 1.0))
}
