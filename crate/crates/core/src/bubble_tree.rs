//! Online summarization: a balanced tree of clustering features whose leaf
//! count follows a compression ratio of the stored points.
//!
//! Leaves keep the ids of their member points and the tree keeps a registry
//! of coordinates, so points can be deleted and leaves dissolved or split.
//! Node summaries are recomputed from children whenever points leave; the
//! insert path only adds.

use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metric::{distance, Point, PointId};

const SS_SLACK: f64 = 1e-9;

/// Additive summary {LS, SS, n} of a point set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusteringFeature {
    pub ls: Vec<f64>,
    pub ss: f64,
    pub n: u64,
}

impl ClusteringFeature {
    /// The algebraic identity (n = 0).
    pub fn zero(dim: usize) -> Self {
        Self { ls: vec![0.0; dim], ss: 0.0, n: 0 }
    }

    pub fn from_point(coords: &[f64]) -> Self {
        Self { ls: coords.to_vec(), ss: coords.iter().map(|x| x * x).sum(), n: 1 }
    }

    pub fn from_points<'a>(dim: usize, points: impl IntoIterator<Item = &'a [f64]>) -> Self {
        let mut cf = Self::zero(dim);
        for p in points {
            cf.add_point(p);
        }
        cf
    }

    pub fn dim(&self) -> usize {
        self.ls.len()
    }

    /// LS / n.
    pub fn rep(&self) -> Vec<f64> {
        let n = self.n as f64;
        self.ls.iter().map(|x| x / n).collect()
    }

    pub fn ls_norm_sq(&self) -> f64 {
        self.ls.iter().map(|x| x * x).sum()
    }

    fn add_point(&mut self, p: &[f64]) {
        for (a, b) in self.ls.iter_mut().zip(p) {
            *a += b;
        }
        self.ss += p.iter().map(|x| x * x).sum::<f64>();
        self.n += 1;
    }

    fn add(&mut self, other: &Self) {
        for (a, b) in self.ls.iter_mut().zip(&other.ls) {
            *a += b;
        }
        self.ss += other.ss;
        self.n += other.n;
    }
}

pub fn cf_merge(a: &ClusteringFeature, b: &ClusteringFeature) -> Result<ClusteringFeature> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch { expected: a.dim(), got: b.dim() });
    }
    let mut out = a.clone();
    out.add(b);
    Ok(out)
}

/// Inverse of [`cf_merge`]. A slightly negative SS from rounding clamps to 0.
pub fn cf_subtract(a: &ClusteringFeature, b: &ClusteringFeature) -> Result<ClusteringFeature> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch { expected: a.dim(), got: b.dim() });
    }
    if b.n >= a.n {
        return Err(Error::Underflow(format!("subtracting n={} from n={} leaves no points", b.n, a.n)));
    }
    let ls: Vec<f64> = a.ls.iter().zip(&b.ls).map(|(x, y)| x - y).collect();
    let mut ss = a.ss - b.ss;
    if ss < 0.0 {
        if ss < -SS_SLACK * a.ss.max(1.0) {
            return Err(Error::Underflow(format!("negative sum of squares {ss}")));
        }
        ss = 0.0;
    }
    Ok(ClusteringFeature { ls, ss, n: a.n - b.n })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BubbleTreeConfig {
    /// Target leaves per stored point, in (0, 1].
    pub rho: f64,
    pub min_fanout: usize,
    pub max_fanout: usize,
}

impl BubbleTreeConfig {
    pub fn new(rho: f64, min_fanout: usize, max_fanout: usize) -> Result<Self> {
        if !(rho > 0.0 && rho <= 1.0) {
            return Err(Error::InvalidInput(format!("compression ratio {rho} outside (0, 1]")));
        }
        if min_fanout < 2 || 2 * min_fanout > max_fanout + 1 {
            return Err(Error::InvalidInput(format!(
                "fanout m={min_fanout}, M={max_fanout} violates 2 <= m and 2m <= M + 1"
            )));
        }
        Ok(Self { rho, min_fanout, max_fanout })
    }
}

impl Default for BubbleTreeConfig {
    fn default() -> Self {
        Self { rho: 0.01, min_fanout: 3, max_fanout: 6 }
    }
}

/// What one [`BubbleTree::maintain_compression`] call did.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Maintenance {
    Dissolved,
    Split,
    Reorganized,
    Idle,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeafSummary {
    pub cf: ClusteringFeature,
    /// Member ids in ascending order.
    pub members: Vec<PointId>,
}

#[derive(Debug, Clone)]
struct BNode {
    parent: Option<usize>,
    height: u32,
    children: Vec<usize>,
    members: Vec<PointId>,
    cf: ClusteringFeature,
    created: u64,
    /// Member count under which this leaf is filed in `leaf_order`.
    filed_n: u64,
}

#[derive(Debug, Clone)]
pub struct BubbleTree {
    config: BubbleTreeConfig,
    dim: Option<usize>,
    nodes: Vec<Option<BNode>>,
    free: Vec<usize>,
    root: Option<usize>,
    registry: HashMap<PointId, (Vec<f64>, usize)>,
    leaf_order: BTreeSet<(u64, u64, usize)>,
    clock: u64,
}

impl BubbleTree {
    pub fn new(config: BubbleTreeConfig) -> Self {
        Self {
            config,
            dim: None,
            nodes: Vec::new(),
            free: Vec::new(),
            root: None,
            registry: HashMap::new(),
            leaf_order: BTreeSet::new(),
            clock: 0,
        }
    }

    pub fn config(&self) -> BubbleTreeConfig {
        self.config
    }

    pub fn len(&self) -> usize {
        self.registry.len()
    }

    pub fn is_empty(&self) -> bool {
        self.registry.is_empty()
    }

    pub fn dim(&self) -> Option<usize> {
        self.dim
    }

    pub fn contains(&self, id: PointId) -> bool {
        self.registry.contains_key(&id)
    }

    pub fn leaf_count(&self) -> usize {
        self.leaf_order.len()
    }

    pub fn height(&self) -> Option<u32> {
        self.root.map(|r| self.node(r).height)
    }

    /// ⌈ρ·N⌉, with products that are integral up to rounding taken as exact.
    pub fn target_leaf_count(&self) -> usize {
        let x = self.config.rho * self.len() as f64;
        let r = x.round();
        if (x - r).abs() <= 1e-9 * x.max(1.0) {
            r as usize
        } else {
            x.ceil() as usize
        }
    }

    pub fn root_cf(&self) -> Option<&ClusteringFeature> {
        self.root.map(|r| &self.node(r).cf)
    }

    pub fn coords(&self, id: PointId) -> Option<&[f64]> {
        self.registry.get(&id).map(|(c, _)| c.as_slice())
    }

    /// Stored points in ascending id order.
    pub fn points(&self) -> Vec<Point> {
        let mut pts: Vec<Point> = self.registry.iter().map(|(&id, (c, _))| Point::new(id, c.clone())).collect();
        pts.sort_by_key(|p| p.id);
        pts
    }

    fn node(&self, id: usize) -> &BNode {
        self.nodes[id].as_ref().expect("live bubble node")
    }

    fn node_mut(&mut self, id: usize) -> &mut BNode {
        self.nodes[id].as_mut().expect("live bubble node")
    }

    fn alloc(&mut self, height: u32) -> usize {
        let dim = self.dim.unwrap_or(0);
        let node = BNode {
            parent: None,
            height,
            children: Vec::new(),
            members: Vec::new(),
            cf: ClusteringFeature::zero(dim),
            created: self.clock,
            filed_n: 0,
        };
        self.clock += 1;
        let id = match self.free.pop() {
            Some(id) => {
                self.nodes[id] = Some(node);
                id
            }
            None => {
                self.nodes.push(Some(node));
                self.nodes.len() - 1
            }
        };
        if height == 0 {
            self.leaf_order.insert((0, self.node(id).created, id));
        }
        id
    }

    fn release(&mut self, id: usize) {
        let n = self.nodes[id].take().expect("live bubble node");
        if n.height == 0 {
            self.leaf_order.remove(&(n.filed_n, n.created, id));
        }
        self.free.push(id);
    }

    fn refile(&mut self, leaf: usize) {
        let (old, created, now) = {
            let n = self.node(leaf);
            (n.filed_n, n.created, n.members.len() as u64)
        };
        if old != now {
            self.leaf_order.remove(&(old, created, leaf));
            self.leaf_order.insert((now, created, leaf));
            self.node_mut(leaf).filed_n = now;
        }
    }

    fn recompute(&mut self, id: usize) {
        let dim = self.dim.unwrap_or(0);
        let n = self.node(id);
        let cf = if n.height == 0 {
            ClusteringFeature::from_points(dim, n.members.iter().map(|m| self.registry[m].0.as_slice()))
        } else {
            let mut cf = ClusteringFeature::zero(dim);
            for &c in &n.children {
                cf.add(&self.node(c).cf);
            }
            cf
        };
        self.node_mut(id).cf = cf;
    }

    fn recompute_up(&mut self, id: usize) {
        let mut cur = Some(id);
        while let Some(x) = cur {
            self.recompute(x);
            cur = self.node(x).parent;
        }
    }

    /// Child of `id` whose representative is nearest to `q`; ties go to the
    /// older child.
    fn nearest_child(&self, id: usize, q: &[f64]) -> usize {
        let mut best = None;
        for &c in &self.node(id).children {
            let n = self.node(c);
            let d = distance(&n.cf.rep(), q);
            let key = (d, n.created);
            match best {
                Some((bd, bc, _)) if (bd, bc) <= key => {}
                _ => best = Some((d, n.created, c)),
            }
        }
        best.expect("internal node has children").2
    }

    fn attach_point(&mut self, id: PointId, coords: Vec<f64>) {
        let leaf = match self.root {
            None => {
                let leaf = self.alloc(0);
                self.root = Some(leaf);
                leaf
            }
            Some(mut x) => {
                while self.node(x).height > 0 {
                    x = self.nearest_child(x, &coords);
                }
                x
            }
        };
        let single = ClusteringFeature::from_point(&coords);
        self.registry.insert(id, (coords, leaf));
        self.node_mut(leaf).members.push(id);
        self.refile(leaf);
        let mut cur = Some(leaf);
        while let Some(x) = cur {
            self.node_mut(x).cf.add(&single);
            cur = self.node(x).parent;
        }
    }

    pub fn bt_insert(&mut self, p: Point) -> Result<Maintenance> {
        if self.registry.contains_key(&p.id) {
            return Err(Error::Duplicate(p.id));
        }
        if p.coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidInput(format!("point {} has non-finite coordinates", p.id)));
        }
        match self.dim {
            Some(d) if d != p.dim() => return Err(Error::DimensionMismatch { expected: d, got: p.dim() }),
            None => self.dim = Some(p.dim()),
            _ => {}
        }
        self.attach_point(p.id, p.coords);
        Ok(self.maintain_compression())
    }

    fn detach_point(&mut self, id: PointId) -> Result<Vec<f64>> {
        let (coords, leaf) = self.registry.remove(&id).ok_or(Error::NotFound(id))?;
        self.node_mut(leaf).members.retain(|&m| m != id);
        self.refile(leaf);
        if self.node(leaf).members.is_empty() {
            let orphans = self.unlink(leaf);
            self.release(leaf);
            for o in orphans {
                self.place_leaf(o);
            }
        } else {
            self.recompute_up(leaf);
        }
        Ok(coords)
    }

    pub fn bt_delete(&mut self, id: PointId) -> Result<Maintenance> {
        self.detach_point(id)?;
        if self.registry.is_empty() {
            self.dim = None;
            return Ok(Maintenance::Idle);
        }
        Ok(self.maintain_compression())
    }

    fn leaves_under(&self, id: usize, out: &mut Vec<usize>) {
        let mut stack = vec![id];
        while let Some(x) = stack.pop() {
            let n = self.node(x);
            if n.height == 0 {
                out.push(x);
            } else {
                stack.extend(n.children.iter().rev());
            }
        }
    }

    /// Detaches `id` from its parent. Underfull ancestors are dissolved; the
    /// leaves they held are returned detached for reinsertion.
    fn unlink(&mut self, id: usize) -> Vec<usize> {
        let mut orphans = Vec::new();
        let Some(par) = self.node(id).parent else {
            self.root = None;
            return orphans;
        };
        self.node_mut(id).parent = None;
        self.node_mut(par).children.retain(|&c| c != id);
        let is_root = self.node(par).parent.is_none();
        let left = self.node(par).children.len();
        if is_root {
            if left == 1 {
                let only = self.node(par).children[0];
                self.node_mut(only).parent = None;
                self.root = Some(only);
                self.release(par);
            } else {
                self.recompute(par);
            }
        } else if left < self.config.min_fanout {
            let kids = std::mem::take(&mut self.node_mut(par).children);
            let mut leaves = Vec::new();
            for k in kids {
                self.leaves_under(k, &mut leaves);
                self.release_internal_under(k);
            }
            for &l in &leaves {
                self.node_mut(l).parent = None;
            }
            orphans.extend(leaves);
            orphans.extend(self.unlink(par));
            self.release(par);
        } else {
            self.recompute_up(par);
        }
        orphans
    }

    fn release_internal_under(&mut self, id: usize) {
        if self.node(id).height == 0 {
            return;
        }
        let kids = std::mem::take(&mut self.node_mut(id).children);
        for k in kids {
            self.release_internal_under(k);
        }
        self.release(id);
    }

    /// Inserts a detached leaf under the height-1 node nearest its representative.
    fn place_leaf(&mut self, leaf: usize) {
        let Some(root) = self.root else {
            self.root = Some(leaf);
            return;
        };
        if self.node(root).height == 0 {
            let top = self.alloc(1);
            self.node_mut(top).children = vec![root, leaf];
            self.node_mut(root).parent = Some(top);
            self.node_mut(leaf).parent = Some(top);
            self.root = Some(top);
            self.recompute(top);
            return;
        }
        let rep = self.node(leaf).cf.rep();
        let mut x = root;
        while self.node(x).height > 1 {
            x = self.nearest_child(x, &rep);
        }
        self.node_mut(x).children.push(leaf);
        self.node_mut(leaf).parent = Some(x);
        self.recompute_up(x);
        self.split_if_full(x);
    }

    fn split_if_full(&mut self, mut x: usize) {
        while self.node(x).children.len() > self.config.max_fanout {
            let kids = self.node(x).children.clone();
            let reps: Vec<Vec<f64>> = kids.iter().map(|&c| self.node(c).cf.rep()).collect();
            let (a, b) = partition_by_seeds(&reps, self.config.min_fanout);
            let height = self.node(x).height;
            let sib = self.alloc(height);
            self.node_mut(x).children = a.iter().map(|&i| kids[i]).collect();
            self.node_mut(sib).children = b.iter().map(|&i| kids[i]).collect();
            for &i in &b {
                self.node_mut(kids[i]).parent = Some(sib);
            }
            self.recompute(x);
            self.recompute(sib);
            match self.node(x).parent {
                None => {
                    let top = self.alloc(height + 1);
                    self.node_mut(top).children = vec![x, sib];
                    self.node_mut(x).parent = Some(top);
                    self.node_mut(sib).parent = Some(top);
                    self.root = Some(top);
                    self.recompute(top);
                    return;
                }
                Some(p) => {
                    self.node_mut(p).children.push(sib);
                    self.node_mut(sib).parent = Some(p);
                    self.recompute_up(p);
                    x = p;
                }
            }
        }
    }

    fn min_leaf(&self) -> Option<usize> {
        self.leaf_order.first().map(|&(_, _, id)| id)
    }

    /// Leaf with the most members; ties go to the oldest.
    fn max_leaf(&self) -> Option<usize> {
        let &(n, _, _) = self.leaf_order.last()?;
        self.leaf_order.range((n, 0, 0)..).next().map(|&(_, _, id)| id)
    }

    fn dissolve_leaf(&mut self, leaf: usize) {
        let members = std::mem::take(&mut self.node_mut(leaf).members);
        self.refile(leaf);
        let orphans = self.unlink(leaf);
        self.release(leaf);
        for o in orphans {
            self.place_leaf(o);
        }
        for id in members {
            let (coords, _) = self.registry.remove(&id).expect("registered member");
            self.attach_point(id, coords);
        }
    }

    fn split_leaf(&mut self, leaf: usize) {
        let members = self.node(leaf).members.clone();
        let coords: Vec<Vec<f64>> = members.iter().map(|m| self.registry[m].0.clone()).collect();
        let (a, b) = partition_by_seeds(&coords, 1);
        let sib = self.alloc(0);
        self.node_mut(leaf).members = a.iter().map(|&i| members[i]).collect();
        self.node_mut(sib).members = b.iter().map(|&i| members[i]).collect();
        for &i in &b {
            self.registry.get_mut(&members[i]).unwrap().1 = sib;
        }
        self.refile(leaf);
        self.refile(sib);
        self.recompute_up(leaf);
        self.recompute(sib);
        self.place_leaf(sib);
    }

    fn reorganize(&mut self, leaf: usize) -> bool {
        let n = self.node(leaf).members.len();
        let take = self.config.min_fanout.min(n.saturating_sub(1));
        if take == 0 {
            return false;
        }
        let rep = self.node(leaf).cf.rep();
        let mut by_dist: Vec<(f64, PointId)> = self
            .node(leaf)
            .members
            .iter()
            .map(|&m| (distance(&self.registry[&m].0, &rep), m))
            .collect();
        by_dist.sort_by(|x, y| y.0.total_cmp(&x.0).then(x.1.cmp(&y.1)));
        let moved: Vec<PointId> = by_dist[..take].iter().map(|&(_, m)| m).collect();
        self.node_mut(leaf).members.retain(|m| !moved.contains(m));
        self.refile(leaf);
        self.recompute_up(leaf);
        for id in moved {
            let (coords, _) = self.registry.remove(&id).expect("registered member");
            self.attach_point(id, coords);
        }
        true
    }

    /// One corrective step toward ⌈ρN⌉ leaves: dissolve the smallest leaf when
    /// there are too many, split the largest when there are too few, otherwise
    /// move the farthest members of the largest leaf.
    pub fn maintain_compression(&mut self) -> Maintenance {
        if self.root.is_none() {
            return Maintenance::Idle;
        }
        let target = self.target_leaf_count();
        let leaves = self.leaf_count();
        if leaves > target {
            let leaf = self.min_leaf().expect("non-empty tree");
            self.dissolve_leaf(leaf);
            Maintenance::Dissolved
        } else if leaves < target {
            let leaf = self.max_leaf().expect("non-empty tree");
            if self.node(leaf).members.len() < 2 {
                return Maintenance::Idle;
            }
            self.split_leaf(leaf);
            Maintenance::Split
        } else {
            let leaf = self.max_leaf().expect("non-empty tree");
            if self.reorganize(leaf) {
                Maintenance::Reorganized
            } else {
                Maintenance::Idle
            }
        }
    }

    /// Leaf summaries in tree order.
    pub fn leaf_cfs(&self) -> Vec<LeafSummary> {
        let Some(root) = self.root else { return Vec::new() };
        let mut leaves = Vec::new();
        self.leaves_under(root, &mut leaves);
        leaves
            .into_iter()
            .map(|l| {
                let n = self.node(l);
                let mut members = n.members.clone();
                members.sort_unstable();
                LeafSummary { cf: n.cf.clone(), members }
            })
            .collect()
    }

    /// Full structural audit.
    pub fn check_invariants(&self) -> std::result::Result<(), String> {
        let Some(root) = self.root else {
            if !self.registry.is_empty() || !self.leaf_order.is_empty() {
                return Err("empty tree with registered points or leaves".into());
            }
            return Ok(());
        };
        if self.node(root).parent.is_some() {
            return Err("root has a parent".into());
        }
        let mut stack = vec![root];
        let mut seen_points = 0usize;
        let mut seen_leaves = 0usize;
        let dim = self.dim.unwrap_or(0);
        while let Some(x) = stack.pop() {
            let n = self.node(x);
            let expect = if n.height == 0 {
                if n.members.is_empty() {
                    return Err(format!("leaf {x} is empty"));
                }
                if !self.leaf_order.contains(&(n.members.len() as u64, n.created, x)) {
                    return Err(format!("leaf {x} misfiled"));
                }
                for m in &n.members {
                    match self.registry.get(m) {
                        Some((_, l)) if *l == x => {}
                        _ => return Err(format!("member {m} of leaf {x} not registered there")),
                    }
                }
                seen_points += n.members.len();
                seen_leaves += 1;
                ClusteringFeature::from_points(dim, n.members.iter().map(|m| self.registry[m].0.as_slice()))
            } else {
                let k = n.children.len();
                let lo = if x == root { 2 } else { self.config.min_fanout };
                if k < lo || k > self.config.max_fanout {
                    return Err(format!("node {x} has {k} children"));
                }
                let mut cf = ClusteringFeature::zero(dim);
                for &c in &n.children {
                    let cn = self.node(c);
                    if cn.parent != Some(x) || cn.height + 1 != n.height {
                        return Err(format!("child {c} of {x} mislinked"));
                    }
                    cf.add(&cn.cf);
                    stack.push(c);
                }
                cf
            };
            if expect.n != n.cf.n || !close(expect.ss, n.cf.ss) || expect.ls.iter().zip(&n.cf.ls).any(|(a, b)| !close(*a, *b))
            {
                return Err(format!("node {x} summary out of date"));
            }
        }
        if seen_points != self.registry.len() || seen_leaves != self.leaf_order.len() {
            return Err("registry or leaf index disagrees with tree".into());
        }
        Ok(())
    }
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * a.abs().max(b.abs()).max(1.0)
}

/// Splits item indices around the farthest pair, each side keeping at least
/// `min_side` items.
fn partition_by_seeds(items: &[Vec<f64>], min_side: usize) -> (Vec<usize>, Vec<usize>) {
    let n = items.len();
    debug_assert!(n >= 2 * min_side.max(1));
    let (mut sa, mut sb, mut far) = (0, 1, -1.0);
    for i in 0..n {
        for j in i + 1..n {
            let d = distance(&items[i], &items[j]);
            if d > far {
                (sa, sb, far) = (i, j, d);
            }
        }
    }
    // margin > 0 means closer to seed b
    let mut margin: Vec<(f64, usize)> = (0..n)
        .map(|i| (distance(&items[i], &items[sa]) - distance(&items[i], &items[sb]), i))
        .collect();
    margin.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)));
    let natural_a = margin.iter().filter(|m| m.0 <= 0.0).count();
    let cut = natural_a.clamp(min_side.max(1), n - min_side.max(1));
    let mut a: Vec<usize> = margin[..cut].iter().map(|m| m.1).collect();
    let mut b: Vec<usize> = margin[cut..].iter().map(|m| m.1).collect();
    a.sort_unstable();
    b.sort_unstable();
    (a, b)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Quality {
    Good,
    Under,
    Over,
}

/// Mean and population standard deviation of the shares β = n/N.
pub fn quality_moments(weights: &[u64], total: u64) -> Result<(f64, f64)> {
    if weights.is_empty() {
        return Err(Error::InvalidInput("no bubbles to classify".into()));
    }
    if total == 0 || weights.iter().sum::<u64>() != total {
        return Err(Error::InvalidInput(format!("bubble weights do not sum to {total}")));
    }
    let beta = weights.iter().map(|&w| w as f64 / total as f64);
    let mu = beta.clone().sum::<f64>() / weights.len() as f64;
    let sigma = (beta.map(|b| (b - mu) * (b - mu)).sum::<f64>() / weights.len() as f64).sqrt();
    Ok((mu, sigma))
}

/// Labels each bubble by its share β = n/N against μ ± kσ of all shares.
/// Boundary values count as good.
pub fn classify_quality(weights: &[u64], total: u64, k: f64) -> Result<Vec<Quality>> {
    if k.is_nan() || k <= 0.0 {
        return Err(Error::InvalidInput(format!("k must be positive, got {k}")));
    }
    let (mu, sigma) = quality_moments(weights, total)?;
    let slack = 1e-12;
    let (lo, hi) = (mu - k * sigma - slack, mu + k * sigma + slack);
    Ok(weights
        .iter()
        .map(|&w| {
            let b = w as f64 / total as f64;
            if b < lo {
                Quality::Under
            } else if b > hi {
                Quality::Over
            } else {
                Quality::Good
            }
        })
        .collect())
}
