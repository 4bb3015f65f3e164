//! Minimum spanning tree maintenance over the implicit mutual reachability
//! graph.
//!
//! [`LinkCutForest`] carries the current tree. Edges are materialized as their
//! own link-cut nodes so that a path-maximum query returns an edge that can be
//! cut. Insertions feed candidate edges through [`apply_candidate_edge`];
//! deletions cut the invalidated edges and reconnect the resulting forest with
//! [`dual_tree_boruvka`] over the spatial index.

use std::collections::HashMap;

use petgraph::unionfind::UnionFind;

use crate::error::{Error, Result};
use crate::index::{prune_bound, NodeId, SsTree};
use crate::lct::LinkCut;
use crate::metric::{distance, reach, PointId, ReachEdge};

fn key(a: PointId, b: PointId) -> (PointId, PointId) {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

/// A dynamic forest over point ids supporting link, cut, connectivity and
/// path-maximum edge queries.
#[derive(Debug, Clone, Default)]
pub struct LinkCutForest {
    lct: LinkCut,
    vertices: HashMap<PointId, usize>,
    edges: HashMap<(PointId, PointId), usize>,
    /// Endpoints of edge nodes, indexed by link-cut node.
    ends: Vec<Option<(PointId, PointId)>>,
    adjacency: HashMap<PointId, Vec<PointId>>,
}

impl LinkCutForest {
    pub fn new() -> Self {
        Self::default()
    }

    fn alloc(&mut self, value: f64, ends: Option<(PointId, PointId)>) -> usize {
        let x = self.lct.alloc(value);
        if x >= self.ends.len() {
            self.ends.resize(x + 1, None);
        }
        self.ends[x] = ends;
        x
    }

    /// Adds an isolated vertex; returns false if it already existed.
    pub fn add_vertex(&mut self, id: PointId) -> bool {
        if self.vertices.contains_key(&id) {
            return false;
        }
        let x = self.alloc(f64::NEG_INFINITY, None);
        self.vertices.insert(id, x);
        self.adjacency.insert(id, Vec::new());
        true
    }

    /// Removes a vertex that has no incident tree edges.
    pub fn remove_vertex(&mut self, id: PointId) -> Result<()> {
        let adj = self.adjacency.get(&id).ok_or(Error::NotFound(id))?;
        if !adj.is_empty() {
            return Err(Error::State(format!("vertex {id} still has {} tree edges", adj.len())));
        }
        self.adjacency.remove(&id);
        let x = self.vertices.remove(&id).unwrap();
        self.lct.release(x);
        Ok(())
    }

    pub fn contains_vertex(&self, id: PointId) -> bool {
        self.vertices.contains_key(&id)
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Number of trees, counting isolated vertices.
    pub fn component_count(&self) -> usize {
        self.vertices.len() - self.edges.len()
    }

    fn vertex(&self, id: PointId) -> Result<usize> {
        self.vertices.get(&id).copied().ok_or(Error::NotFound(id))
    }

    pub fn connected(&mut self, a: PointId, b: PointId) -> Result<bool> {
        let (x, y) = (self.vertex(a)?, self.vertex(b)?);
        Ok(self.lct.connected(x, y))
    }

    pub fn link(&mut self, a: PointId, b: PointId, weight: f64) -> Result<()> {
        let (x, y) = (self.vertex(a)?, self.vertex(b)?);
        if a == b || self.lct.connected(x, y) {
            return Err(Error::State(format!("linking {a}-{b} would close a cycle")));
        }
        let e = self.alloc(weight, Some(key(a, b)));
        self.lct.link(x, e);
        self.lct.link(e, y);
        self.edges.insert(key(a, b), e);
        self.adjacency.get_mut(&a).unwrap().push(b);
        self.adjacency.get_mut(&b).unwrap().push(a);
        Ok(())
    }

    pub fn cut(&mut self, a: PointId, b: PointId) -> Result<ReachEdge> {
        let e = self
            .edges
            .remove(&key(a, b))
            .ok_or_else(|| Error::State(format!("no tree edge {a}-{b}")))?;
        let (x, y) = (self.vertex(a)?, self.vertex(b)?);
        let weight = self.lct.value(e);
        self.lct.cut(x, e);
        self.lct.cut(e, y);
        self.lct.release(e);
        self.ends[e] = None;
        self.adjacency.get_mut(&a).unwrap().retain(|&v| v != b);
        self.adjacency.get_mut(&b).unwrap().retain(|&v| v != a);
        Ok(ReachEdge::new(a, b, weight))
    }

    pub fn weight(&self, a: PointId, b: PointId) -> Option<f64> {
        self.edges.get(&key(a, b)).map(|&e| self.lct.value(e))
    }

    /// Replaces the weight of an existing tree edge.
    pub fn set_weight(&mut self, a: PointId, b: PointId, weight: f64) -> Result<()> {
        let e = *self
            .edges
            .get(&key(a, b))
            .ok_or_else(|| Error::State(format!("no tree edge {a}-{b}")))?;
        self.lct.set_value(e, weight);
        Ok(())
    }

    /// Heaviest edge on the tree path between `a` and `b`, or `None` if they
    /// are not connected (or equal).
    pub fn path_max(&mut self, a: PointId, b: PointId) -> Result<Option<ReachEdge>> {
        let (x, y) = (self.vertex(a)?, self.vertex(b)?);
        if x == y || !self.lct.connected(x, y) {
            return Ok(None);
        }
        let m = self.lct.path_max(x, y);
        let (u, v) = self.ends[m].expect("path maximum is always an edge node");
        Ok(Some(ReachEdge::new(u, v, self.lct.value(m))))
    }

    /// Tree neighbors of `id`.
    pub fn incident(&self, id: PointId) -> &[PointId] {
        self.adjacency.get(&id).map_or(&[], |v| v.as_slice())
    }

    /// All tree edges sorted by (weight, u, v).
    pub fn edges(&self) -> Vec<ReachEdge> {
        let mut out: Vec<ReachEdge> = self
            .edges
            .iter()
            .map(|(&(u, v), &e)| ReachEdge::new(u, v, self.lct.value(e)))
            .collect();
        out.sort_by(ReachEdge::order);
        out
    }

    pub fn total_weight(&self) -> f64 {
        crate::metric::total_weight(&self.edges())
    }
}

/// What [`apply_candidate_edge`] did with a candidate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CandidateOutcome {
    Linked,
    Replaced(ReachEdge),
    Rejected,
}

/// Offers one edge to the forest: link it if its endpoints are disconnected,
/// otherwise swap it for the heaviest edge on the cycle it closes when that
/// edge is strictly heavier. Incumbents win ties.
pub fn apply_candidate_edge(forest: &mut LinkCutForest, e: ReachEdge) -> Result<CandidateOutcome> {
    if e.u == e.v {
        return Err(Error::InvalidInput("self-loop candidate".into()));
    }
    match forest.path_max(e.u, e.v)? {
        None => {
            forest.link(e.u, e.v, e.weight)?;
            Ok(CandidateOutcome::Linked)
        }
        Some(max) if max.weight <= e.weight => Ok(CandidateOutcome::Rejected),
        Some(max) => {
            forest.cut(max.u, max.v)?;
            forest.link(e.u, e.v, e.weight)?;
            Ok(CandidateOutcome::Replaced(max))
        }
    }
}

/// Cuts every tree edge matching `pred` and returns the removed edges.
pub fn remove_edges<F>(forest: &mut LinkCutForest, mut pred: F) -> Vec<ReachEdge>
where
    F: FnMut(&ReachEdge) -> bool,
{
    let doomed: Vec<ReachEdge> = forest.edges().into_iter().filter(|e| pred(e)).collect();
    for e in &doomed {
        forest.cut(e.u, e.v).expect("edge listed by the forest");
    }
    doomed
}

const MIXED: usize = usize::MAX;

/// Working state of one Borůvka run: components over index slots, the best
/// outgoing edge found so far for each component, and per-node component
/// marks and bounds.
#[derive(Debug)]
pub struct BoruvkaState {
    uf: UnionFind<usize>,
    /// Component representative of every slot, refreshed by `update_tree`.
    comp: Vec<usize>,
    comp_bound: Vec<f64>,
    comp_edge: Vec<Option<(usize, usize)>>,
    node_comp: Vec<usize>,
    node_bound: Vec<f64>,
    node_cd_min: Vec<f64>,
}

impl BoruvkaState {
    /// Builds the union-find from the forest's current trees.
    pub fn from_forest(index: &SsTree, forest: &LinkCutForest) -> Result<Self> {
        if forest.vertex_count() != index.len() {
            return Err(Error::State(format!(
                "forest has {} vertices, index has {} points",
                forest.vertex_count(),
                index.len()
            )));
        }
        let n = index.slot_capacity();
        let mut uf = UnionFind::new(n.max(1));
        for e in forest.edges() {
            let (a, b) = (
                index.slot_of(e.u).ok_or(Error::State(format!("forest vertex {} not indexed", e.u)))?,
                index.slot_of(e.v).ok_or(Error::State(format!("forest vertex {} not indexed", e.v)))?,
            );
            uf.union(a, b);
        }
        for (id, _, _) in index.points() {
            if !forest.contains_vertex(id) {
                return Err(Error::State(format!("indexed point {id} missing from forest")));
            }
        }
        Ok(BoruvkaState {
            uf,
            comp: vec![0; n],
            comp_bound: vec![f64::INFINITY; n],
            comp_edge: vec![None; n],
            node_comp: Vec::new(),
            node_bound: Vec::new(),
            node_cd_min: Vec::new(),
        })
    }

    /// Component representative of a stored point.
    pub fn component_of(&self, index: &SsTree, id: PointId) -> Option<usize> {
        index.slot_of(id).map(|s| self.uf.find(s))
    }

    /// Refreshes slot components and marks each index node with its single
    /// component (or as mixed), resetting per-round bounds.
    pub fn update_tree(&mut self, index: &SsTree) {
        for (id, _, _) in index.points() {
            let s = index.slot_of(id).unwrap();
            self.comp[s] = self.uf.find(s);
        }
        self.comp_bound.fill(f64::INFINITY);
        self.comp_edge.fill(None);
        let nodes = index_node_capacity(index);
        self.node_comp = vec![MIXED; nodes];
        self.node_bound = vec![f64::INFINITY; nodes];
        self.node_cd_min = vec![f64::INFINITY; nodes];
        if let Some(r) = index.root() {
            self.mark(index, r);
        }
    }

    fn mark(&mut self, index: &SsTree, node: NodeId) -> usize {
        let n = index.node(node);
        let mut comp = None;
        let mut mixed = false;
        let mut cd_min = f64::INFINITY;
        for &c in &n.children {
            let (cc, cd) = if n.is_leaf() {
                (self.comp[c], index.entry(c).cd)
            } else {
                (self.mark(index, c), self.node_cd_min[c])
            };
            cd_min = cd_min.min(cd);
            match comp {
                None => comp = Some(cc),
                Some(x) if x != cc => mixed = true,
                _ => {}
            }
        }
        let mark = match comp {
            Some(c) if !mixed => c,
            _ => MIXED,
        };
        self.node_comp[node] = mark;
        self.node_cd_min[node] = cd_min;
        mark
    }

    /// Best outgoing edge recorded for every component with a point under `node`.
    fn edges_under(&self, index: &SsTree, node: NodeId) -> Vec<ReachEdge> {
        let mut comps = Vec::new();
        let mut stack = vec![node];
        while let Some(x) = stack.pop() {
            let n = index.node(x);
            if n.is_leaf() {
                comps.extend(n.children.iter().map(|&s| self.comp[s]));
            } else {
                stack.extend_from_slice(&n.children);
            }
        }
        comps.sort_unstable();
        comps.dedup();
        let mut out: Vec<ReachEdge> = comps
            .into_iter()
            .filter_map(|c| self.comp_edge[c].map(|(a, b)| (c, a, b)))
            .map(|(c, a, b)| ReachEdge::new(index.entry(a).id, index.entry(b).id, self.comp_bound[c]))
            .collect();
        out.sort_by(ReachEdge::order);
        out.dedup_by(|a, b| a.u == b.u && a.v == b.v);
        out
    }
}

fn index_node_capacity(index: &SsTree) -> usize {
    // node ids are dense arena indices; the largest live id bounds them
    let mut max = 0;
    let mut stack: Vec<NodeId> = index.root().into_iter().collect();
    while let Some(x) = stack.pop() {
        max = max.max(x);
        let n = index.node(x);
        if !n.is_leaf() {
            stack.extend_from_slice(&n.children);
        }
    }
    max + 1
}

/// Dual-tree search for the lightest edge leaving each component, over the
/// node pair `(q, r)`. Returns the best edge now recorded for every component
/// with a point under `q`.
pub fn find_component_neighbors(index: &SsTree, q: NodeId, r: NodeId, state: &mut BoruvkaState) -> Vec<ReachEdge> {
    traverse(index, q, r, state);
    state.edges_under(index, q)
}

fn leaf_bound(index: &SsTree, q: NodeId, state: &BoruvkaState) -> f64 {
    index
        .node(q)
        .children
        .iter()
        .map(|&s| state.comp_bound[state.comp[s]])
        .fold(0.0, f64::max)
}

fn traverse(index: &SsTree, q: NodeId, r: NodeId, state: &mut BoruvkaState) {
    let qc = state.node_comp[q];
    if qc != MIXED && qc == state.node_comp[r] {
        return;
    }
    let (qn, rn) = (index.node(q), index.node(r));
    if qn.is_leaf() {
        state.node_bound[q] = leaf_bound(index, q, state);
    }
    let lower = prune_bound(distance(&qn.centroid, &rn.centroid), qn.radius + rn.radius)
        .max(state.node_cd_min[q])
        .max(state.node_cd_min[r]);
    if lower >= state.node_bound[q] {
        return;
    }
    match (qn.is_leaf(), rn.is_leaf()) {
        (true, true) => {
            for &qs in &qn.children {
                let cq = state.comp[qs];
                let qe = index.entry(qs);
                if qe.cd >= state.comp_bound[cq] {
                    continue;
                }
                for &rs in &rn.children {
                    if state.comp[rs] == cq {
                        continue;
                    }
                    let re = index.entry(rs);
                    let w = reach(qe.cd, re.cd, distance(&qe.coords, &re.coords));
                    if w < state.comp_bound[cq] {
                        state.comp_bound[cq] = w;
                        state.comp_edge[cq] = Some((qs, rs));
                    }
                }
            }
            state.node_bound[q] = leaf_bound(index, q, state);
        }
        (true, false) => {
            for c in nearest_first(index, q, &rn.children) {
                traverse(index, q, c, state);
            }
        }
        (false, true) => {
            for &c in &qn.children {
                traverse(index, c, r, state);
            }
            state.node_bound[q] = qn.children.iter().map(|&c| state.node_bound[c]).fold(0.0, f64::max);
        }
        (false, false) => {
            for &qc in &qn.children {
                for c in nearest_first(index, qc, &rn.children) {
                    traverse(index, qc, c, state);
                }
            }
            state.node_bound[q] = qn.children.iter().map(|&c| state.node_bound[c]).fold(0.0, f64::max);
        }
    }
}

fn nearest_first(index: &SsTree, from: NodeId, candidates: &[NodeId]) -> Vec<NodeId> {
    let f = index.node(from);
    let mut keyed: Vec<(f64, NodeId)> = candidates
        .iter()
        .map(|&c| {
            let cn = index.node(c);
            (prune_bound(distance(&f.centroid, &cn.centroid), f.radius + cn.radius), c)
        })
        .collect();
    keyed.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    keyed.into_iter().map(|(_, c)| c).collect()
}

/// Summary of one [`dual_tree_boruvka`] run.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct BoruvkaReport {
    /// Components of the input forest.
    pub components: usize,
    pub rounds: usize,
    pub edges_added: usize,
}

/// Completes `forest` to a minimum spanning tree of the mutual reachability
/// graph over the points in `index`, using the core distances cached there.
pub fn dual_tree_boruvka(index: &SsTree, forest: &mut LinkCutForest) -> Result<BoruvkaReport> {
    let mut state = BoruvkaState::from_forest(index, forest)?;
    let mut components = forest.component_count();
    let mut report = BoruvkaReport { components, ..Default::default() };
    let Some(root) = index.root() else {
        return Ok(report);
    };
    while components > 1 {
        state.update_tree(index);
        let candidates = find_component_neighbors(index, root, root, &mut state);
        let mut added = 0;
        for e in candidates {
            let (a, b) = (index.slot_of(e.u).unwrap(), index.slot_of(e.v).unwrap());
            if state.uf.union(a, b) {
                forest.link(e.u, e.v, e.weight)?;
                added += 1;
            }
        }
        if added == 0 {
            return Err(Error::State(format!("Borůvka round found no edges with {components} components left")));
        }
        components -= added;
        report.rounds += 1;
        report.edges_added += added;
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::index::IndexConfig;
    use crate::metric::{brute_core_distances, brute_mst, reference_d1, total_weight, Point};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn forest_on(ids: &[PointId], edges: &[(PointId, PointId, f64)]) -> LinkCutForest {
        let mut f = LinkCutForest::new();
        for &id in ids {
            f.add_vertex(id);
        }
        for &(a, b, w) in edges {
            f.link(a, b, w).unwrap();
        }
        f
    }

    fn indexed(points: &[Point], min_pts: usize) -> SsTree {
        let cores = brute_core_distances(points, min_pts).unwrap();
        let mut t = SsTree::new(IndexConfig::new(min_pts, 2, 4).unwrap());
        for p in points {
            t.insert_with_cd(p.clone(), cores[&p.id].core_distance).unwrap();
        }
        t
    }

    fn d1_mst_forest() -> LinkCutForest {
        forest_on(&[0, 1, 2, 3], &[(0, 1, 2.0), (1, 2, 2.0), (2, 3, 9.0)])
    }

    #[test]
    fn tie_candidate_is_rejected() {
        let mut f = forest_on(&[0, 1, 2], &[(0, 1, 2.0), (1, 2, 2.0)]);
        let out = apply_candidate_edge(&mut f, ReachEdge::new(0, 2, 2.0)).unwrap();
        assert_eq!(out, CandidateOutcome::Rejected);
        assert_eq!(f.total_weight(), 4.0);
    }

    #[test]
    fn lighter_candidate_replaces_path_max() {
        let mut f = forest_on(&[0, 1, 2], &[(0, 1, 2.0), (1, 2, 2.0)]);
        let out = apply_candidate_edge(&mut f, ReachEdge::new(0, 2, 1.0)).unwrap();
        assert!(matches!(out, CandidateOutcome::Replaced(e) if e.weight == 2.0));
        assert_eq!(f.total_weight(), 3.0);
        assert_eq!(f.edge_count(), 2);
    }

    #[test]
    fn candidate_between_components_links() {
        let mut f = forest_on(&[10, 20], &[]);
        assert_eq!(apply_candidate_edge(&mut f, ReachEdge::new(10, 20, 4.0)).unwrap(), CandidateOutcome::Linked);
        assert!(f.connected(10, 20).unwrap());
        assert!(matches!(
            apply_candidate_edge(&mut f, ReachEdge::new(10, 99, 1.0)),
            Err(Error::NotFound(99))
        ));
    }

    #[test]
    fn remove_incident_edges() {
        let mut f = d1_mst_forest();
        let removed = remove_edges(&mut f, |e| e.touches(3));
        assert_eq!(removed, vec![ReachEdge::new(2, 3, 9.0)]);
        assert_eq!(f.edges(), vec![ReachEdge::new(0, 1, 2.0), ReachEdge::new(1, 2, 2.0)]);
        assert_eq!(f.incident(3), &[] as &[PointId]);
        assert!(remove_edges(&mut f, |_| false).is_empty());
        assert_eq!(f.edge_count(), 2);
        assert_eq!(remove_edges(&mut f, |_| true).len(), 2);
        assert_eq!(f.component_count(), 4);
    }

    #[test]
    fn boruvka_from_empty_forest_on_d1() {
        let t = indexed(&reference_d1(), 2);
        let mut f = forest_on(&[0, 1, 2, 3], &[]);
        let report = dual_tree_boruvka(&t, &mut f).unwrap();
        assert_eq!(f.total_weight(), 13.0);
        assert_eq!(f.edge_count(), 3);
        assert_eq!(report.components, 4);
    }

    #[test]
    fn boruvka_on_spanning_forest_is_a_no_op() {
        let t = indexed(&reference_d1(), 2);
        let mut f = d1_mst_forest();
        let before = f.edges();
        let report = dual_tree_boruvka(&t, &mut f).unwrap();
        assert_eq!(report.rounds, 0);
        assert_eq!(f.edges(), before);
    }

    #[test]
    fn boruvka_restores_the_missing_edge() {
        let t = indexed(&reference_d1(), 2);
        let mut f = forest_on(&[0, 1, 2, 3], &[(0, 1, 2.0), (1, 2, 2.0)]);
        let report = dual_tree_boruvka(&t, &mut f).unwrap();
        assert_eq!(report.rounds, 1);
        assert_eq!(report.edges_added, 1);
        let added: Vec<ReachEdge> = f.edges().into_iter().filter(|e| e.touches(3)).collect();
        assert_eq!(added.len(), 1);
        assert_eq!(added[0].weight, 9.0);
    }

    #[test]
    fn boruvka_rejects_vertex_mismatch() {
        let t = indexed(&reference_d1(), 2);
        let mut f = forest_on(&[0, 1, 2], &[]);
        assert!(matches!(dual_tree_boruvka(&t, &mut f), Err(Error::State(_))));
    }

    #[test]
    fn component_neighbors_of_two_d1_components() {
        let t = indexed(&reference_d1(), 2);
        let f = forest_on(&[0, 1, 2, 3], &[(0, 1, 2.0), (2, 3, 9.0)]);
        let mut s = BoruvkaState::from_forest(&t, &f).unwrap();
        s.update_tree(&t);
        let root = t.root().unwrap();
        let found = find_component_neighbors(&t, root, root, &mut s);
        // both components pick the crossing pair (1, 2) at weight 2
        assert!(!found.is_empty());
        assert!(found.iter().all(|e| e.weight == 2.0));
        assert!(found.iter().any(|e| (e.u, e.v) == (1, 2) || (e.u, e.v) == (0, 2)));
    }

    #[test]
    fn single_component_subtree_prunes_immediately() {
        let t = indexed(&reference_d1(), 2);
        let f = d1_mst_forest();
        let mut s = BoruvkaState::from_forest(&t, &f).unwrap();
        s.update_tree(&t);
        let root = t.root().unwrap();
        assert!(find_component_neighbors(&t, root, root, &mut s).is_empty());
    }

    #[test]
    fn first_round_matches_exhaustive_nearest_component() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let pts: Vec<Point> = (0..80).map(|i| Point::new(i, vec![rng.random(), rng.random()])).collect();
        let cores = brute_core_distances(&pts, 3).unwrap();
        let t = indexed(&pts, 3);
        let f = forest_on(&pts.iter().map(|p| p.id).collect::<Vec<_>>(), &[]);
        let mut s = BoruvkaState::from_forest(&t, &f).unwrap();
        s.update_tree(&t);
        let root = t.root().unwrap();
        let found = find_component_neighbors(&t, root, root, &mut s);
        for p in &pts {
            let best = pts
                .iter()
                .filter(|q| q.id != p.id)
                .map(|q| {
                    reach(cores[&p.id].core_distance, cores[&q.id].core_distance, distance(&p.coords, &q.coords))
                })
                .fold(f64::INFINITY, f64::min);
            let c = s.component_of(&t, p.id).unwrap();
            assert_eq!(s.comp_bound[c], best, "point {}", p.id);
        }
        assert!(!found.is_empty());
    }

    fn random_points(n: usize, d: usize, rng: &mut ChaCha8Rng) -> Vec<Point> {
        (0..n)
            .map(|i| Point::new(i as PointId, (0..d).map(|_| rng.random::<f64>()).collect()))
            .collect()
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(20))]

        #[test]
        fn boruvka_weight_equals_prim(seed in 0u64..100_000, n in 8usize..300, d in 1usize..5, min_pts in 1usize..6) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let pts = random_points(n, d, &mut rng);
            let cores = brute_core_distances(&pts, min_pts).unwrap();
            let want = total_weight(&brute_mst(&pts, &cores).unwrap());
            let t = indexed(&pts, min_pts);
            let mut f = forest_on(&pts.iter().map(|p| p.id).collect::<Vec<_>>(), &[]);
            dual_tree_boruvka(&t, &mut f).unwrap();
            prop_assert_eq!(f.edge_count(), n - 1);
            prop_assert_eq!(f.total_weight(), want);
        }

        #[test]
        fn candidate_order_does_not_change_weight(seed in 0u64..100_000, n in 5usize..60) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let pts = random_points(n, 2, &mut rng);
            let cores = brute_core_distances(&pts, 2).unwrap();
            let mut all = Vec::new();
            for i in 0..n {
                for j in i + 1..n {
                    let (p, q) = (&pts[i], &pts[j]);
                    all.push(ReachEdge::new(p.id, q.id, reach(cores[&p.id].core_distance, cores[&q.id].core_distance, distance(&p.coords, &q.coords))));
                }
            }
            let want = total_weight(&brute_mst(&pts, &cores).unwrap());
            let ids: Vec<PointId> = pts.iter().map(|p| p.id).collect();
            for pass in 0..2 {
                use rand::seq::SliceRandom;
                let mut order = all.clone();
                order.shuffle(&mut rng);
                let mut f = forest_on(&ids, &[]);
                let mut last = f.total_weight();
                for e in order {
                    let connected = f.connected(e.u, e.v).unwrap();
                    apply_candidate_edge(&mut f, e).unwrap();
                    let now = f.total_weight();
                    if connected { prop_assert!(now <= last); }
                    prop_assert_eq!(f.edge_count() + f.component_count(), f.vertex_count());
                    last = now;
                }
                prop_assert_eq!(f.total_weight(), want, "pass {}", pass);
            }
        }
    }
}
