//! Exact dynamic clustering state: spatial index, neighborhood records and
//! the minimum spanning tree of the mutual reachability graph, kept in step
//! under single-point insertions and deletions.

use std::collections::{BTreeMap, HashMap};
use std::time::{Duration, Instant};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::index::{IndexConfig, SsTree};
use crate::metric::{distance, reach, CoreRecord, Neighbor, Point, PointId, ReachEdge};
use crate::mst::{apply_candidate_edge, dual_tree_boruvka, CandidateOutcome, LinkCutForest};

/// Instrumentation returned by every update.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct UpdateStats {
    /// Points whose neighborhood gained or lost the updated point.
    pub rknn: usize,
    /// Candidate edges offered to the forest on insertion.
    pub candidates: usize,
    pub linked: usize,
    pub replacements: usize,
    /// Tree edges cut on deletion.
    pub edges_removed: usize,
    /// Forest components handed to Borůvka.
    pub components: usize,
    pub boruvka_rounds: usize,
    /// True when the update crossed the maintenance threshold and the tree was
    /// built or dropped wholesale.
    pub rebuilt: bool,
    pub core_time: Duration,
    pub mst_time: Duration,
}

#[derive(Debug, Clone)]
pub struct DynamicClusterer {
    index: SsTree,
    forest: LinkCutForest,
    cores: HashMap<PointId, CoreRecord>,
    ops: u64,
}

impl DynamicClusterer {
    pub fn new(min_pts: usize) -> Result<Self> {
        Ok(Self::with_config(IndexConfig::new(min_pts, 5, 10)?))
    }

    pub fn with_config(config: IndexConfig) -> Self {
        Self { index: SsTree::new(config), forest: LinkCutForest::new(), cores: HashMap::new(), ops: 0 }
    }

    /// Loads all points at once and builds the tree with a single Borůvka run.
    pub fn from_points(config: IndexConfig, points: impl IntoIterator<Item = Point>) -> Result<Self> {
        let mut c = Self::with_config(config);
        for p in points {
            c.index.insert(p)?;
        }
        if c.is_maintained() {
            c.rebuild()?;
        }
        Ok(c)
    }

    pub fn min_pts(&self) -> usize {
        self.index.config().min_pts
    }

    pub fn len(&self) -> usize {
        self.index.len()
    }

    pub fn is_empty(&self) -> bool {
        self.index.is_empty()
    }

    pub fn dim(&self) -> Option<usize> {
        self.index.dim()
    }

    /// Number of completed insert/delete operations.
    pub fn operations(&self) -> u64 {
        self.ops
    }

    /// Whether a spanning tree exists, i.e. more than `min_pts` points are stored.
    pub fn is_maintained(&self) -> bool {
        self.len() > self.min_pts()
    }

    pub fn index(&self) -> &SsTree {
        &self.index
    }

    pub fn contains(&self, id: PointId) -> bool {
        self.index.contains(id)
    }

    pub fn core_record(&self, id: PointId) -> Option<&CoreRecord> {
        self.cores.get(&id)
    }

    pub fn core_records(&self) -> BTreeMap<PointId, CoreRecord> {
        self.cores.iter().map(|(&k, v)| (k, v.clone())).collect()
    }

    /// Stored points in ascending id order.
    pub fn points(&self) -> Vec<Point> {
        let mut pts: Vec<Point> = self.index.points().map(|(id, c, _)| Point::new(id, c.to_vec())).collect();
        pts.sort_by_key(|p| p.id);
        pts
    }

    pub fn ids(&self) -> Vec<PointId> {
        let mut ids: Vec<PointId> = self.index.points().map(|(id, _, _)| id).collect();
        ids.sort_unstable();
        ids
    }

    /// Current tree edges sorted by (weight, u, v).
    pub fn mst_snapshot(&self) -> Result<Vec<ReachEdge>> {
        if !self.is_maintained() {
            return Err(Error::State(format!(
                "no spanning tree below {} points",
                self.min_pts() + 1
            )));
        }
        Ok(self.forest.edges())
    }

    pub fn mst_weight(&self) -> Option<f64> {
        self.is_maintained().then(|| self.forest.total_weight())
    }

    fn rebuild(&mut self) -> Result<UpdateStats> {
        let t0 = Instant::now();
        let k = self.min_pts();
        let pts = self.points();
        self.cores.clear();
        for p in &pts {
            let nn = self.index.knn(&p.coords, k, Some(p.id))?;
            let rec = CoreRecord::from_sorted(p.id, nn);
            self.index.refresh_cd(p.id, rec.core_distance)?;
            self.cores.insert(p.id, rec);
        }
        let core_time = t0.elapsed();
        let t1 = Instant::now();
        self.forest = LinkCutForest::new();
        for p in &pts {
            self.forest.add_vertex(p.id);
        }
        let report = dual_tree_boruvka(&self.index, &mut self.forest)?;
        Ok(UpdateStats {
            linked: report.edges_added,
            components: report.components,
            boruvka_rounds: report.rounds,
            rebuilt: true,
            core_time,
            mst_time: t1.elapsed(),
            ..Default::default()
        })
    }

    fn drop_tree(&mut self) -> Result<()> {
        self.forest = LinkCutForest::new();
        self.cores.clear();
        let ids = self.ids();
        for id in ids {
            self.index.refresh_cd(id, f64::INFINITY)?;
        }
        Ok(())
    }

    fn coords(&self, id: PointId) -> Result<&[f64]> {
        self.index.coords(id).ok_or_else(|| Error::State(format!("point {id} missing from index")))
    }

    fn cd(&self, id: PointId) -> Result<f64> {
        self.cores
            .get(&id)
            .map(|r| r.core_distance)
            .ok_or_else(|| Error::State(format!("point {id} has no core record")))
    }

    pub fn insert_point(&mut self, p: Point) -> Result<UpdateStats> {
        if self.index.contains(p.id) {
            return Err(Error::Duplicate(p.id));
        }
        if p.coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidInput(format!("point {} has non-finite coordinates", p.id)));
        }
        if let Some(d) = self.dim() {
            if d != p.dim() {
                return Err(Error::DimensionMismatch { expected: d, got: p.dim() });
            }
        }
        let was_maintained = self.is_maintained();
        if !was_maintained {
            self.index.insert(p)?;
            self.ops += 1;
            return if self.is_maintained() { self.rebuild() } else { Ok(UpdateStats::default()) };
        }

        let k = self.min_pts();
        let t0 = Instant::now();
        let rec_p = CoreRecord::from_sorted(p.id, self.index.knn(&p.coords, k, None)?);
        let cd_p = rec_p.core_distance;
        let mut changed = Vec::new();
        for r in self.index.rknn_inclusive(&p.coords) {
            let d = distance(self.coords(r)?, &p.coords);
            let cand = Neighbor { id: p.id, distance: d };
            let rec = self.cores.get_mut(&r).ok_or_else(|| Error::State(format!("point {r} has no core record")))?;
            let last = rec.neighbors.last().expect("non-empty neighborhood");
            if cand.order(last).is_lt() {
                let at = rec.neighbors.partition_point(|n| n.order(&cand).is_lt());
                rec.neighbors.insert(at, cand);
                rec.neighbors.pop();
                rec.core_distance = rec.neighbors.last().unwrap().distance;
                changed.push(r);
            }
        }
        changed.sort_unstable();
        let coords = p.coords.clone();
        let id = p.id;
        self.index.insert_with_cd(p, cd_p)?;
        self.cores.insert(id, rec_p);
        for &r in &changed {
            self.index.refresh_cd(r, self.cd(r)?)?;
        }
        let core_time = t0.elapsed();

        let t1 = Instant::now();
        self.forest.add_vertex(id);
        for &r in &changed {
            let cd_r = self.cd(r)?;
            for x in self.forest.incident(r).to_vec() {
                let w = reach(cd_r, self.cd(x)?, distance(self.coords(r)?, self.coords(x)?));
                self.forest.set_weight(r, x, w)?;
            }
        }
        let mut inserted: Vec<ReachEdge> = self
            .index
            .points()
            .filter(|&(q, _, _)| q != id)
            .map(|(q, c, cd_q)| ReachEdge::new(id, q, reach(cd_p, cd_q, distance(&coords, c))))
            .collect();
        inserted.sort_by(ReachEdge::order);
        let mut pairs = Vec::new();
        for &r in &changed {
            for n in &self.cores[&r].neighbors {
                if n.id != id {
                    pairs.push((r.min(n.id), r.max(n.id)));
                }
            }
        }
        pairs.sort_unstable();
        pairs.dedup();
        let mut modified = Vec::with_capacity(pairs.len());
        for (a, b) in pairs {
            let w = reach(self.cd(a)?, self.cd(b)?, distance(self.coords(a)?, self.coords(b)?));
            modified.push(ReachEdge::new(a, b, w));
        }
        modified.sort_by(ReachEdge::order);

        let mut stats = UpdateStats { rknn: changed.len(), core_time, ..Default::default() };
        for e in inserted.into_iter().chain(modified) {
            stats.candidates += 1;
            match apply_candidate_edge(&mut self.forest, e)? {
                CandidateOutcome::Linked => stats.linked += 1,
                CandidateOutcome::Replaced(_) => stats.replacements += 1,
                CandidateOutcome::Rejected => {}
            }
        }
        if self.forest.component_count() != 1 {
            return Err(Error::State("forest not spanning after insertion".into()));
        }
        stats.mst_time = t1.elapsed();
        self.ops += 1;
        Ok(stats)
    }

    pub fn delete_point(&mut self, id: PointId) -> Result<UpdateStats> {
        if !self.index.contains(id) {
            return Err(Error::NotFound(id));
        }
        if !self.is_maintained() {
            self.index.delete(id)?;
            self.ops += 1;
            return Ok(UpdateStats::default());
        }
        if self.len() - 1 <= self.min_pts() {
            self.index.delete(id)?;
            self.drop_tree()?;
            self.ops += 1;
            return Ok(UpdateStats { rebuilt: true, ..Default::default() });
        }

        let k = self.min_pts();
        let t0 = Instant::now();
        let p = self.index.delete(id)?;
        self.cores.remove(&id);
        let mut affected: Vec<PointId> = self
            .index
            .rknn_inclusive(&p.coords)
            .into_iter()
            .filter(|r| self.cores.get(r).is_some_and(|rec| rec.contains(id)))
            .collect();
        affected.sort_unstable();
        for &r in &affected {
            let nn = self.index.knn(self.coords(r)?, k, Some(r))?;
            let rec = CoreRecord::from_sorted(r, nn);
            self.index.refresh_cd(r, rec.core_distance)?;
            self.cores.insert(r, rec);
        }
        let core_time = t0.elapsed();

        let t1 = Instant::now();
        let mut removed = 0;
        for x in self.forest.incident(id).to_vec() {
            self.forest.cut(id, x)?;
            removed += 1;
        }
        self.forest.remove_vertex(id)?;
        for &r in &affected {
            for x in self.forest.incident(r).to_vec() {
                self.forest.cut(r, x)?;
                removed += 1;
            }
        }
        let report = dual_tree_boruvka(&self.index, &mut self.forest)?;
        self.ops += 1;
        Ok(UpdateStats {
            rknn: affected.len(),
            linked: report.edges_added,
            edges_removed: removed,
            components: report.components,
            boruvka_rounds: report.rounds,
            core_time,
            mst_time: t1.elapsed(),
            ..Default::default()
        })
    }
}
