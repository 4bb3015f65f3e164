//! Points, Euclidean distance, the mutual reachability metric and the
//! brute-force oracles (linear-scan kNN, core distances, Prim MST over the
//! complete mutual reachability graph) that every other module is tested
//! against.
//!
//! Neighborhoods exclude the query point: the core distance of `p` is the
//! distance to its `min_pts`-th nearest *other* point. Ties between equal
//! distances are broken by ascending point id.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type PointId = u64;

/// An identified point in d-dimensional Euclidean space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub id: PointId,
    pub coords: Vec<f64>,
}

impl Point {
    pub fn new(id: PointId, coords: Vec<f64>) -> Self {
        Point { id, coords }
    }

    /// Like [`Point::new`] but rejects non-finite coordinates and empty vectors.
    pub fn try_new(id: PointId, coords: Vec<f64>) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::InvalidInput(format!("point {id} has no coordinates")));
        }
        if let Some(c) = coords.iter().find(|c| !c.is_finite()) {
            return Err(Error::InvalidInput(format!("point {id} has non-finite coordinate {c}")));
        }
        Ok(Point { id, coords })
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }
}

/// Plain L2 distance. Callers guarantee equal lengths.
#[inline]
pub fn distance(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .map(|(x, y)| {
            let d = x - y;
            d * d
        })
        .sum::<f64>()
        .sqrt()
}

/// Checked Euclidean distance between two points.
pub fn euclidean(p: &Point, q: &Point) -> Result<f64> {
    if p.dim() != q.dim() {
        return Err(Error::DimensionMismatch { expected: p.dim(), got: q.dim() });
    }
    Ok(distance(&p.coords, &q.coords))
}

/// One entry of a kNN list.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Neighbor {
    pub id: PointId,
    pub distance: f64,
}

impl Neighbor {
    /// Total order used everywhere a neighbor list is sorted: distance, then id.
    #[inline]
    pub fn order(&self, other: &Neighbor) -> Ordering {
        self.distance.total_cmp(&other.distance).then(self.id.cmp(&other.id))
    }
}

/// A point's `min_pts` nearest other points and the resulting core distance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoreRecord {
    pub point_id: PointId,
    pub neighbors: Vec<Neighbor>,
    pub core_distance: f64,
}

impl CoreRecord {
    /// Builds a record from a neighbor list already sorted by [`Neighbor::order`].
    pub fn from_sorted(point_id: PointId, neighbors: Vec<Neighbor>) -> Self {
        let core_distance = neighbors.last().map_or(f64::INFINITY, |n| n.distance);
        CoreRecord { point_id, neighbors, core_distance }
    }

    pub fn contains(&self, id: PointId) -> bool {
        self.neighbors.iter().any(|n| n.id == id)
    }

    pub fn neighbor_ids(&self) -> Vec<PointId> {
        self.neighbors.iter().map(|n| n.id).collect()
    }
}

/// An edge of the mutual reachability graph. Endpoints are stored with `u < v`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReachEdge {
    pub u: PointId,
    pub v: PointId,
    pub weight: f64,
}

impl ReachEdge {
    pub fn new(a: PointId, b: PointId, weight: f64) -> Self {
        debug_assert_ne!(a, b);
        let (u, v) = if a < b { (a, b) } else { (b, a) };
        ReachEdge { u, v, weight }
    }

    /// Ascending (weight, u, v).
    pub fn order(&self, other: &ReachEdge) -> Ordering {
        self.weight
            .total_cmp(&other.weight)
            .then(self.u.cmp(&other.u))
            .then(self.v.cmp(&other.v))
    }

    pub fn touches(&self, id: PointId) -> bool {
        self.u == id || self.v == id
    }
}

#[inline]
pub(crate) fn reach(cd_p: f64, cd_q: f64, dist: f64) -> f64 {
    cd_p.max(cd_q).max(dist)
}

/// `max(cd_p, cd_q, dist)`; all arguments must be non-negative.
pub fn mutual_reachability(cd_p: f64, cd_q: f64, dist: f64) -> Result<f64> {
    for (name, v) in [("cd_p", cd_p), ("cd_q", cd_q), ("dist", dist)] {
        if v.is_nan() || v < 0.0 {
            return Err(Error::InvalidInput(format!("{name} must be non-negative, got {v}")));
        }
    }
    Ok(reach(cd_p, cd_q, dist))
}

fn check_dims(points: &[Point]) -> Result<()> {
    if let Some(first) = points.first() {
        for p in points {
            if p.dim() != first.dim() {
                return Err(Error::DimensionMismatch { expected: first.dim(), got: p.dim() });
            }
        }
    }
    Ok(())
}

/// Linear-scan kNN of `q` among `points`, skipping `exclude`.
pub fn brute_knn(points: &[Point], q: &[f64], k: usize, exclude: Option<PointId>) -> Vec<Neighbor> {
    let mut all: Vec<Neighbor> = points
        .iter()
        .filter(|p| Some(p.id) != exclude)
        .map(|p| Neighbor { id: p.id, distance: distance(q, &p.coords) })
        .collect();
    all.sort_by(Neighbor::order);
    all.truncate(k);
    all
}

/// Linear-scan reverse neighbors: every stored point `x` with `d(q, x) < cd(x)`.
pub fn brute_rknn(points: &[Point], cds: &BTreeMap<PointId, f64>, q: &[f64]) -> Vec<PointId> {
    let mut out: Vec<PointId> = points
        .iter()
        .filter(|p| distance(q, &p.coords) < cds[&p.id])
        .map(|p| p.id)
        .collect();
    out.sort_unstable();
    out
}

/// Core records of every point by linear scan.
pub fn brute_core_distances(points: &[Point], min_pts: usize) -> Result<BTreeMap<PointId, CoreRecord>> {
    if min_pts == 0 {
        return Err(Error::InvalidInput("min_pts must be positive".into()));
    }
    if points.len() <= min_pts {
        return Err(Error::InsufficientData { needed: min_pts + 1, available: points.len() });
    }
    check_dims(points)?;
    Ok(points
        .iter()
        .map(|p| {
            let nn = brute_knn(points, &p.coords, min_pts, Some(p.id));
            (p.id, CoreRecord::from_sorted(p.id, nn))
        })
        .collect())
}

/// Prim's algorithm over the complete mutual reachability graph.
pub fn brute_mst(points: &[Point], cores: &BTreeMap<PointId, CoreRecord>) -> Result<Vec<ReachEdge>> {
    let n = points.len();
    if n < 2 {
        return Err(Error::InsufficientData { needed: 2, available: n });
    }
    check_dims(points)?;
    let cd: Vec<f64> = points
        .iter()
        .map(|p| cores.get(&p.id).map(|c| c.core_distance).ok_or(Error::NotFound(p.id)))
        .collect::<Result<_>>()?;

    let mut in_tree = vec![false; n];
    let mut best = vec![f64::INFINITY; n];
    let mut from = vec![0usize; n];
    let mut edges = Vec::with_capacity(n - 1);
    let mut current = 0usize;
    in_tree[0] = true;
    for _ in 1..n {
        let mut next = usize::MAX;
        let mut next_w = f64::INFINITY;
        for j in 0..n {
            if in_tree[j] {
                continue;
            }
            let w = reach(cd[current], cd[j], distance(&points[current].coords, &points[j].coords));
            if w < best[j] {
                best[j] = w;
                from[j] = current;
            }
            if best[j] < next_w || next == usize::MAX {
                next_w = best[j];
                next = j;
            }
        }
        in_tree[next] = true;
        edges.push(ReachEdge::new(points[from[next]].id, points[next].id, next_w));
        current = next;
    }
    Ok(edges)
}

/// Edge weights in ascending order. Every MST of a graph has the same multiset.
pub fn weight_multiset(edges: &[ReachEdge]) -> Vec<f64> {
    let mut w: Vec<f64> = edges.iter().map(|e| e.weight).collect();
    w.sort_by(f64::total_cmp);
    w
}

/// Sum of edge weights, accumulated in ascending order so equal multisets give
/// bit-identical totals.
pub fn total_weight(edges: &[ReachEdge]) -> f64 {
    weight_multiset(edges).iter().sum()
}

/// The one-dimensional reference dataset used by worked examples throughout
/// the test suites: ids 0..=3 at coordinates 0, 1, 2 and 10.
pub fn reference_d1() -> Vec<Point> {
    [0.0, 1.0, 2.0, 10.0]
        .iter()
        .enumerate()
        .map(|(i, &x)| Point::new(i as PointId, vec![x]))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand::seq::SliceRandom;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_points(n: usize, d: usize, seed: u64) -> Vec<Point> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|i| Point::new(i as PointId, (0..d).map(|_| rng.random::<f64>()).collect()))
            .collect()
    }

    #[test]
    fn euclidean_examples() {
        let p = |c: Vec<f64>| Point::new(0, c);
        assert_eq!(euclidean(&p(vec![0.0]), &p(vec![0.0])).unwrap(), 0.0);
        assert_eq!(euclidean(&p(vec![0.0]), &p(vec![10.0])).unwrap(), 10.0);
        assert_relative_eq!(
            euclidean(&p(vec![1.0, 0.0]), &p(vec![0.0, 1.0])).unwrap(),
            std::f64::consts::SQRT_2
        );
        assert!(matches!(
            euclidean(&p(vec![1.0]), &p(vec![0.0, 1.0])),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn d1_core_distances() {
        let cores = brute_core_distances(&reference_d1(), 2).unwrap();
        assert_eq!(cores[&0].neighbor_ids(), vec![1, 2]);
        assert_eq!(cores[&0].core_distance, 2.0);
        // 0 and 2 tie at distance 1; smaller id first
        assert_eq!(cores[&1].neighbor_ids(), vec![0, 2]);
        assert_eq!(cores[&1].core_distance, 1.0);
        assert_eq!(cores[&3].neighbor_ids(), vec![2, 1]);
        assert_eq!(cores[&3].core_distance, 9.0);
    }

    #[test]
    fn core_distances_need_more_points_than_min_pts() {
        let pts = reference_d1();
        assert!(matches!(brute_core_distances(&pts, 4), Err(Error::InsufficientData { .. })));
        assert!(brute_core_distances(&pts, 3).is_ok());
    }

    #[test]
    fn mutual_reachability_examples() {
        assert_eq!(mutual_reachability(2.0, 1.0, 1.0).unwrap(), 2.0);
        assert_eq!(mutual_reachability(3.5, 3.5, 0.0).unwrap(), 3.5);
        assert_eq!(mutual_reachability(2.0, 9.0, 8.0).unwrap(), 9.0);
        assert!(mutual_reachability(-1.0, 0.0, 0.0).is_err());
    }

    #[test]
    fn d1_mst() {
        let pts = reference_d1();
        let cores = brute_core_distances(&pts, 2).unwrap();
        let mst = brute_mst(&pts, &cores).unwrap();
        assert_eq!(weight_multiset(&mst), vec![2.0, 2.0, 9.0]);
        assert_eq!(total_weight(&mst), 13.0);
        // (1,3) and (2,3) both weigh 9; either completes a minimum tree
        assert!(mst.iter().any(|e| e.touches(3) && e.weight == 9.0));
    }

    #[test]
    fn two_point_mst() {
        let pts = vec![Point::new(0, vec![0.0]), Point::new(1, vec![5.0])];
        let cores = brute_core_distances(&pts, 1).unwrap();
        let mst = brute_mst(&pts, &cores).unwrap();
        assert_eq!(mst, vec![ReachEdge::new(0, 1, 5.0)]);
    }

    #[test]
    fn d1_plus_insert_mst_weight() {
        let mut pts = reference_d1();
        pts.push(Point::new(4, vec![1.5]));
        let cores = brute_core_distances(&pts, 2).unwrap();
        assert_eq!(total_weight(&brute_mst(&pts, &cores).unwrap()), 12.0);
    }

    #[test]
    fn brute_mst_rejects_single_point() {
        let pts = vec![Point::new(0, vec![0.0])];
        assert!(matches!(brute_mst(&pts, &BTreeMap::new()), Err(Error::InsufficientData { .. })));
    }

    #[test]
    fn mst_edge_weights_match_recomputed_reachability() {
        for seed in 0..10 {
            let n = 20 + (seed as usize * 17) % 180;
            let d = 1 + seed as usize % 5;
            let pts = random_points(n, d, seed);
            let cores = brute_core_distances(&pts, 4).unwrap();
            let by_id: BTreeMap<_, _> = pts.iter().map(|p| (p.id, p)).collect();
            for e in brute_mst(&pts, &cores).unwrap() {
                let w = mutual_reachability(
                    cores[&e.u].core_distance,
                    cores[&e.v].core_distance,
                    euclidean(by_id[&e.u], by_id[&e.v]).unwrap(),
                )
                .unwrap();
                assert_eq!(w, e.weight);
            }
        }
    }

    proptest! {
        #[test]
        fn reachability_dominates_its_inputs(a in 0.0..1e6f64, b in 0.0..1e6f64, d in 0.0..1e6f64) {
            let m = mutual_reachability(a, b, d).unwrap();
            prop_assert!(m >= a && m >= b && m >= d);
            prop_assert_eq!(m, mutual_reachability(b, a, d).unwrap());
        }

        #[test]
        fn oracles_are_permutation_invariant(seed in 0u64..500, n in 6usize..40, d in 1usize..4) {
            let pts = random_points(n, d, seed);
            let mut shuffled = pts.clone();
            shuffled.shuffle(&mut ChaCha8Rng::seed_from_u64(seed ^ 0xabcd));
            let a = brute_core_distances(&pts, 3).unwrap();
            let b = brute_core_distances(&shuffled, 3).unwrap();
            prop_assert_eq!(&a, &b);
            let wa = total_weight(&brute_mst(&pts, &a).unwrap());
            let wb = total_weight(&brute_mst(&shuffled, &b).unwrap());
            prop_assert_eq!(wa, wb);
        }
    }
}
