//! A fully dynamic bounding-sphere tree (SS-tree style).
//!
//! Every node stores the centroid of its descendant points, a radius that
//! covers all of them, and `cd_max`, the largest core distance among them.
//! The core distance cache is what makes reverse-kNN queries prunable: a
//! subtree whose points all have core distances shorter than their distance
//! to the query cannot contain a reverse neighbor.
//!
//! Bounding data is recomputed from the children on every structural change,
//! never updated incrementally.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap};

use crate::error::{Error, Result};
use crate::metric::{distance, Neighbor, Point, PointId};

pub type NodeId = usize;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct IndexConfig {
    pub min_pts: usize,
    pub min_fanout: usize,
    pub max_fanout: usize,
}

impl IndexConfig {
    pub fn new(min_pts: usize, min_fanout: usize, max_fanout: usize) -> Result<Self> {
        if min_pts == 0 {
            return Err(Error::InvalidInput("min_pts must be positive".into()));
        }
        if min_fanout < 1 || max_fanout < 2 || 2 * min_fanout > max_fanout + 1 {
            return Err(Error::InvalidInput(format!(
                "fanout bounds must satisfy 1 <= m, 2 <= M and 2m <= M + 1 (got m={min_fanout}, M={max_fanout})"
            )));
        }
        Ok(IndexConfig { min_pts, min_fanout, max_fanout })
    }
}

impl Default for IndexConfig {
    fn default() -> Self {
        IndexConfig { min_pts: 10, min_fanout: 5, max_fanout: 10 }
    }
}

#[derive(Debug, Clone)]
pub(crate) struct Entry {
    pub id: PointId,
    pub coords: Vec<f64>,
    pub cd: f64,
    leaf: NodeId,
}

#[derive(Debug, Clone)]
pub(crate) struct Node {
    pub parent: Option<NodeId>,
    /// 0 for leaves.
    pub height: u32,
    /// Entry slots for leaves, node ids otherwise.
    pub children: Vec<usize>,
    sum: Vec<f64>,
    pub count: usize,
    pub centroid: Vec<f64>,
    pub radius: f64,
    pub cd_max: f64,
}

impl Node {
    pub fn is_leaf(&self) -> bool {
        self.height == 0
    }
}

/// `max(0, ‖q − centroid‖ − radius)`: a lower bound on the distance from `q`
/// to anything inside the sphere.
pub fn min_node_distance(q: &[f64], centroid: &[f64], radius: f64) -> f64 {
    (distance(q, centroid) - radius).max(0.0)
}

/// Relative slack applied to sphere bounds before they are used to prune, so
/// that rounding in the triangle inequality never discards a boundary point.
const PRUNE_SLACK: f64 = 1e-12;

#[inline]
pub(crate) fn prune_bound(center_dist: f64, radii: f64) -> f64 {
    (center_dist - radii - PRUNE_SLACK * (center_dist + radii)).max(0.0)
}

#[derive(Debug, Clone)]
pub struct SsTree {
    config: IndexConfig,
    dim: Option<usize>,
    nodes: Vec<Node>,
    free_nodes: Vec<NodeId>,
    root: Option<NodeId>,
    entries: Vec<Option<Entry>>,
    free_entries: Vec<usize>,
    slots: HashMap<PointId, usize>,
}

#[derive(PartialEq)]
struct Frontier(f64, NodeId);

impl Eq for Frontier {}

impl Ord for Frontier {
    // reversed: BinaryHeap pops the smallest lower bound first
    fn cmp(&self, other: &Self) -> Ordering {
        other.0.total_cmp(&self.0).then(other.1.cmp(&self.1))
    }
}

impl PartialOrd for Frontier {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

struct Candidate(Neighbor);

impl PartialEq for Candidate {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Candidate {}

impl Ord for Candidate {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.order(&other.0)
    }
}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl SsTree {
    pub fn new(config: IndexConfig) -> Self {
        SsTree {
            config,
            dim: None,
            nodes: Vec::new(),
            free_nodes: Vec::new(),
            root: None,
            entries: Vec::new(),
            free_entries: Vec::new(),
            slots: HashMap::new(),
        }
    }

    pub fn config(&self) -> IndexConfig {
        self.config
    }

    pub fn len(&self) -> usize {
        self.slots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slots.is_empty()
    }

    pub fn dim(&self) -> Option<usize> {
        self.dim
    }

    pub fn contains(&self, id: PointId) -> bool {
        self.slots.contains_key(&id)
    }

    pub fn coords(&self, id: PointId) -> Option<&[f64]> {
        self.slots.get(&id).map(|&s| self.entry(s).coords.as_slice())
    }

    pub fn core_distance(&self, id: PointId) -> Option<f64> {
        self.slots.get(&id).map(|&s| self.entry(s).cd)
    }

    /// Stored points in slot order as `(id, coords, cd)`.
    pub fn points(&self) -> impl Iterator<Item = (PointId, &[f64], f64)> {
        self.entries.iter().flatten().map(|e| (e.id, e.coords.as_slice(), e.cd))
    }

    pub fn height(&self) -> Option<u32> {
        self.root.map(|r| self.nodes[r].height)
    }

    pub fn root_cd_max(&self) -> Option<f64> {
        self.root.map(|r| self.nodes[r].cd_max)
    }

    pub(crate) fn root(&self) -> Option<NodeId> {
        self.root
    }

    pub(crate) fn node(&self, id: NodeId) -> &Node {
        &self.nodes[id]
    }

    pub(crate) fn entry(&self, slot: usize) -> &Entry {
        self.entries[slot].as_ref().expect("live entry slot")
    }

    pub(crate) fn slot_of(&self, id: PointId) -> Option<usize> {
        self.slots.get(&id).copied()
    }

    pub(crate) fn slot_capacity(&self) -> usize {
        self.entries.len()
    }

    /// Exact lower bound from `q` to any point under `node`.
    pub fn node_min_distance(&self, q: &[f64], node: NodeId) -> f64 {
        let n = &self.nodes[node];
        min_node_distance(q, &n.centroid, n.radius)
    }

    fn check_dim(&mut self, coords: &[f64]) -> Result<()> {
        match self.dim {
            Some(d) if d != coords.len() => Err(Error::DimensionMismatch { expected: d, got: coords.len() }),
            Some(_) => Ok(()),
            None => {
                if coords.is_empty() {
                    return Err(Error::InvalidInput("points need at least one coordinate".into()));
                }
                self.dim = Some(coords.len());
                Ok(())
            }
        }
    }

    /// Inserts a point whose core distance is not yet known (stored as +inf).
    pub fn insert(&mut self, point: Point) -> Result<()> {
        self.insert_with_cd(point, f64::INFINITY)
    }

    pub fn insert_with_cd(&mut self, point: Point, cd: f64) -> Result<()> {
        if self.slots.contains_key(&point.id) {
            return Err(Error::Duplicate(point.id));
        }
        self.check_dim(&point.coords)?;
        let entry = Entry { id: point.id, coords: point.coords, cd, leaf: usize::MAX };
        let slot = match self.free_entries.pop() {
            Some(s) => {
                self.entries[s] = Some(entry);
                s
            }
            None => {
                self.entries.push(Some(entry));
                self.entries.len() - 1
            }
        };
        self.slots.insert(point.id, slot);
        self.place(slot);
        Ok(())
    }

    pub fn delete(&mut self, id: PointId) -> Result<Point> {
        let slot = self.slots.remove(&id).ok_or(Error::NotFound(id))?;
        let entry = self.entries[slot].take().expect("live entry slot");
        self.free_entries.push(slot);
        let leaf = entry.leaf;
        self.nodes[leaf].children.retain(|&s| s != slot);
        self.condense(leaf);
        if self.slots.is_empty() {
            self.dim = None;
        }
        Ok(Point::new(entry.id, entry.coords))
    }

    /// Updates one point's cached core distance and the `cd_max` of its ancestors.
    pub fn refresh_cd(&mut self, id: PointId, cd: f64) -> Result<()> {
        let slot = *self.slots.get(&id).ok_or(Error::NotFound(id))?;
        let e = self.entries[slot].as_mut().expect("live entry slot");
        e.cd = cd;
        let mut node = Some(e.leaf);
        while let Some(n) = node {
            let new_max = self.children_cd_max(n);
            if self.nodes[n].cd_max == new_max {
                break;
            }
            self.nodes[n].cd_max = new_max;
            node = self.nodes[n].parent;
        }
        Ok(())
    }

    /// The `k` nearest stored points to `q`, optionally ignoring one id.
    pub fn knn(&self, q: &[f64], k: usize, exclude: Option<PointId>) -> Result<Vec<Neighbor>> {
        if k == 0 {
            return Err(Error::InvalidInput("k must be positive".into()));
        }
        if let Some(d) = self.dim {
            if d != q.len() {
                return Err(Error::DimensionMismatch { expected: d, got: q.len() });
            }
        }
        let excluded = exclude.is_some_and(|id| self.contains(id));
        let available = self.len() - usize::from(excluded);
        if available < k {
            return Err(Error::InsufficientData { needed: k, available });
        }
        let mut best: BinaryHeap<Candidate> = BinaryHeap::with_capacity(k + 1);
        let mut frontier = BinaryHeap::new();
        if let Some(r) = self.root {
            frontier.push(Frontier(0.0, r));
        }
        while let Some(Frontier(bound, node)) = frontier.pop() {
            if best.len() == k && bound > best.peek().unwrap().0.distance {
                break;
            }
            let n = &self.nodes[node];
            if n.is_leaf() {
                for &slot in &n.children {
                    let e = self.entry(slot);
                    if Some(e.id) == exclude {
                        continue;
                    }
                    let cand = Candidate(Neighbor { id: e.id, distance: distance(q, &e.coords) });
                    if best.len() < k {
                        best.push(cand);
                    } else if cand < *best.peek().unwrap() {
                        best.pop();
                        best.push(cand);
                    }
                }
            } else {
                for &c in &n.children {
                    let cn = &self.nodes[c];
                    let b = prune_bound(distance(q, &cn.centroid), cn.radius);
                    if best.len() < k || b <= best.peek().unwrap().0.distance {
                        frontier.push(Frontier(b, c));
                    }
                }
            }
        }
        let mut out: Vec<Neighbor> = best.into_iter().map(|c| c.0).collect();
        out.sort_by(Neighbor::order);
        Ok(out)
    }

    /// Reverse nearest neighbors of `p`: every stored `q` with `d(p, q) < cd(q)`.
    /// Result is sorted by id.
    pub fn rknn(&self, p: &[f64]) -> Vec<PointId> {
        self.reverse_scan(p, false)
    }

    /// Like [`SsTree::rknn`] but with `d(p, q) <= cd(q)`: also catches points
    /// for which `p` ties their current farthest neighbor.
    pub fn rknn_inclusive(&self, p: &[f64]) -> Vec<PointId> {
        self.reverse_scan(p, true)
    }

    fn reverse_scan(&self, p: &[f64], inclusive: bool) -> Vec<PointId> {
        let mut out = Vec::new();
        let mut stack: Vec<NodeId> = self.root.into_iter().collect();
        while let Some(node) = stack.pop() {
            let n = &self.nodes[node];
            let bound = prune_bound(distance(p, &n.centroid), n.radius);
            if bound > n.cd_max || (!inclusive && bound >= n.cd_max) {
                continue;
            }
            if n.is_leaf() {
                for &slot in &n.children {
                    let e = self.entry(slot);
                    let d = distance(p, &e.coords);
                    if d < e.cd || (inclusive && d == e.cd) {
                        out.push(e.id);
                    }
                }
            } else {
                stack.extend_from_slice(&n.children);
            }
        }
        out.sort_unstable();
        out
    }

    fn alloc_node(&mut self, height: u32, parent: Option<NodeId>) -> NodeId {
        let d = self.dim.unwrap_or(0);
        let node = Node {
            parent,
            height,
            children: Vec::with_capacity(self.config.max_fanout + 1),
            sum: vec![0.0; d],
            count: 0,
            centroid: vec![0.0; d],
            radius: 0.0,
            cd_max: 0.0,
        };
        match self.free_nodes.pop() {
            Some(id) => {
                self.nodes[id] = node;
                id
            }
            None => {
                self.nodes.push(node);
                self.nodes.len() - 1
            }
        }
    }

    fn place(&mut self, slot: usize) {
        let Some(root) = self.root else {
            let leaf = self.alloc_node(0, None);
            self.nodes[leaf].children.push(slot);
            self.entries[slot].as_mut().unwrap().leaf = leaf;
            self.recompute(leaf);
            self.root = Some(leaf);
            return;
        };
        let mut node = root;
        while !self.nodes[node].is_leaf() {
            let coords = &self.entry(slot).coords;
            node = *self.nodes[node]
                .children
                .iter()
                .min_by(|&&a, &&b| {
                    let (na, nb) = (&self.nodes[a], &self.nodes[b]);
                    distance(coords, &na.centroid)
                        .total_cmp(&distance(coords, &nb.centroid))
                        .then(na.count.cmp(&nb.count))
                        .then(a.cmp(&b))
                })
                .expect("internal node has children");
        }
        self.nodes[node].children.push(slot);
        self.entries[slot].as_mut().unwrap().leaf = node;
        self.fix_upward(node);
    }

    /// Splits overflowing nodes from `node` upward and refreshes bounding data
    /// along the path to the root.
    fn fix_upward(&mut self, mut node: NodeId) {
        loop {
            if self.nodes[node].children.len() > self.config.max_fanout {
                let sibling = self.split(node);
                match self.nodes[node].parent {
                    None => {
                        let h = self.nodes[node].height + 1;
                        let root = self.alloc_node(h, None);
                        self.nodes[root].children.extend([node, sibling]);
                        self.nodes[node].parent = Some(root);
                        self.nodes[sibling].parent = Some(root);
                        self.recompute(root);
                        self.root = Some(root);
                        return;
                    }
                    Some(p) => {
                        self.nodes[p].children.push(sibling);
                        self.nodes[sibling].parent = Some(p);
                        node = p;
                    }
                }
            } else {
                self.recompute(node);
                match self.nodes[node].parent {
                    Some(p) => node = p,
                    None => return,
                }
            }
        }
    }

    fn item_position(&self, node: NodeId, item: usize) -> &[f64] {
        if self.nodes[node].is_leaf() {
            &self.entry(item).coords
        } else {
            &self.nodes[item].centroid
        }
    }

    /// Median split along the axis of largest spread; returns the new sibling.
    fn split(&mut self, node: NodeId) -> NodeId {
        let dim = self.dim.unwrap_or(0);
        let items = std::mem::take(&mut self.nodes[node].children);
        let k = items.len() as f64;
        let mut mean = vec![0.0; dim];
        for &it in &items {
            for (m, x) in mean.iter_mut().zip(self.item_position(node, it)) {
                *m += x / k;
            }
        }
        let mut var = vec![0.0; dim];
        for &it in &items {
            for ((v, m), x) in var.iter_mut().zip(&mean).zip(self.item_position(node, it)) {
                *v += (x - m) * (x - m);
            }
        }
        let axis = (0..dim).max_by(|&a, &b| var[a].total_cmp(&var[b]).then(b.cmp(&a))).unwrap_or(0);
        let mut keyed: Vec<(f64, usize)> = items
            .iter()
            .map(|&it| (self.item_position(node, it)[axis], it))
            .collect();
        keyed.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let half = keyed.len() / 2;
        let height = self.nodes[node].height;
        let sibling = self.alloc_node(height, None);
        for (i, &(_, it)) in keyed.iter().enumerate() {
            let target = if i < half { node } else { sibling };
            self.nodes[target].children.push(it);
            if height == 0 {
                self.entries[it].as_mut().unwrap().leaf = target;
            } else {
                self.nodes[it].parent = Some(target);
            }
        }
        self.recompute(node);
        self.recompute(sibling);
        sibling
    }

    fn children_cd_max(&self, node: NodeId) -> f64 {
        let n = &self.nodes[node];
        if n.is_leaf() {
            n.children.iter().map(|&s| self.entry(s).cd).fold(0.0, f64::max)
        } else {
            n.children.iter().map(|&c| self.nodes[c].cd_max).fold(0.0, f64::max)
        }
    }

    fn recompute(&mut self, node: NodeId) {
        let dim = self.dim.unwrap_or(0);
        let mut sum = vec![0.0; dim];
        let mut count = 0;
        let n = &self.nodes[node];
        if n.is_leaf() {
            for &s in &n.children {
                for (a, x) in sum.iter_mut().zip(&self.entry(s).coords) {
                    *a += x;
                }
            }
            count = n.children.len();
        } else {
            for &c in &n.children {
                for (a, x) in sum.iter_mut().zip(&self.nodes[c].sum) {
                    *a += x;
                }
                count += self.nodes[c].count;
            }
        }
        let centroid: Vec<f64> = if count == 0 {
            vec![0.0; dim]
        } else {
            sum.iter().map(|s| s / count as f64).collect()
        };
        let radius = if n.is_leaf() {
            n.children
                .iter()
                .map(|&s| distance(&centroid, &self.entry(s).coords))
                .fold(0.0, f64::max)
        } else {
            n.children
                .iter()
                .map(|&c| distance(&centroid, &self.nodes[c].centroid) + self.nodes[c].radius)
                .fold(0.0, f64::max)
        };
        let cd_max = self.children_cd_max(node);
        let n = &mut self.nodes[node];
        n.sum = sum;
        n.count = count;
        n.centroid = centroid;
        n.radius = radius;
        n.cd_max = cd_max;
    }

    fn collect_subtree(&mut self, node: NodeId, slots: &mut Vec<usize>) {
        let mut stack = vec![node];
        while let Some(n) = stack.pop() {
            let children = std::mem::take(&mut self.nodes[n].children);
            if self.nodes[n].is_leaf() {
                slots.extend(children);
            } else {
                stack.extend(children);
            }
            self.nodes[n].parent = None;
            self.free_nodes.push(n);
        }
    }

    /// Removes underfull nodes on the path from `start` to the root and
    /// reinserts the points they held.
    fn condense(&mut self, start: NodeId) {
        let mut orphans = Vec::new();
        let mut node = start;
        while let Some(p) = self.nodes[node].parent {
            if self.nodes[node].children.len() < self.config.min_fanout {
                self.nodes[p].children.retain(|&c| c != node);
                self.collect_subtree(node, &mut orphans);
            } else {
                self.recompute(node);
            }
            node = p;
        }
        // node is the root
        while let Some(r) = self.root {
            let n = &self.nodes[r];
            if n.children.is_empty() {
                self.free_nodes.push(r);
                self.root = None;
            } else if !n.is_leaf() && n.children.len() == 1 {
                let child = n.children[0];
                self.nodes[r].children.clear();
                self.free_nodes.push(r);
                self.nodes[child].parent = None;
                self.root = Some(child);
            } else {
                self.recompute(r);
                break;
            }
        }
        for slot in orphans {
            self.place(slot);
        }
    }

    /// Full structural audit: fanout bounds, equal leaf depth, parent links,
    /// sphere containment, exact `cd_max` and registry consistency.
    pub fn check_invariants(&self) -> std::result::Result<(), String> {
        let Some(root) = self.root else {
            return if self.slots.is_empty() { Ok(()) } else { Err("points stored without a root".into()) };
        };
        if self.nodes[root].parent.is_some() {
            return Err("root has a parent".into());
        }
        let mut seen = 0usize;
        let mut stack = vec![(root, 0u32)];
        let mut leaf_depth = None;
        let (m, cap) = (self.config.min_fanout, self.config.max_fanout);
        while let Some((node, depth)) = stack.pop() {
            let n = &self.nodes[node];
            let k = n.children.len();
            if k > cap {
                return Err(format!("node {node} has {k} > {cap} children"));
            }
            if node == root {
                if !n.is_leaf() && k < 2 {
                    return Err("internal root with fewer than 2 children".into());
                }
            } else if k < m {
                return Err(format!("node {node} has {k} < {m} children"));
            }
            let slack = 1e-9 * (1.0 + n.radius + n.centroid.iter().map(|x| x.abs()).fold(0.0, f64::max));
            let mut cd_max = 0.0f64;
            let mut count = 0;
            if n.is_leaf() {
                match leaf_depth {
                    None => leaf_depth = Some(depth),
                    Some(d) if d != depth => return Err(format!("leaves at depths {d} and {depth}")),
                    _ => {}
                }
                for &s in &n.children {
                    let e = self.entries[s].as_ref().ok_or("dead slot in leaf")?;
                    if e.leaf != node {
                        return Err(format!("entry {} has stale leaf link", e.id));
                    }
                    if self.slots.get(&e.id) != Some(&s) {
                        return Err(format!("entry {} missing from registry", e.id));
                    }
                    if distance(&n.centroid, &e.coords) > n.radius + slack {
                        return Err(format!("point {} outside sphere of node {node}", e.id));
                    }
                    cd_max = cd_max.max(e.cd);
                    seen += 1;
                }
                count = k;
            } else {
                for &c in &n.children {
                    let cn = &self.nodes[c];
                    if cn.parent != Some(node) {
                        return Err(format!("node {c} has stale parent link"));
                    }
                    if cn.height + 1 != n.height {
                        return Err(format!("node {c} height mismatch"));
                    }
                    if distance(&n.centroid, &cn.centroid) + cn.radius > n.radius + slack {
                        return Err(format!("child sphere {c} escapes node {node}"));
                    }
                    cd_max = cd_max.max(cn.cd_max);
                    count += cn.count;
                    stack.push((c, depth + 1));
                }
            }
            if cd_max != n.cd_max {
                return Err(format!("node {node} cd_max {} != {}", n.cd_max, cd_max));
            }
            if count != n.count {
                return Err(format!("node {node} count {} != {}", n.count, count));
            }
        }
        if seen != self.slots.len() {
            return Err(format!("reached {seen} points, registry holds {}", self.slots.len()));
        }
        Ok(())
    }
}
