//! Data ingestion, synthetic mixtures, the sliding-window driver and report
//! output.

use std::collections::VecDeque;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::str::FromStr;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::bubble_tree::{BubbleTree, BubbleTreeConfig};
use crate::dynamic::{DynamicClusterer, UpdateStats};
use crate::error::{Error, Result};
use crate::hierarchy::nmi;
use crate::index::IndexConfig;
use crate::metric::{distance, Point, PointId};
use crate::pipeline::{cluster_exact, cluster_summary, static_cluster, PointClustering};

/// Reads one point per row. A first row with any non-numeric cell is taken
/// as a header. Ids follow data-row order from 0.
pub fn load_csv(path: impl AsRef<Path>) -> Result<Vec<Point>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(path.as_ref())
        .map_err(csv_error)?;
    let mut points = Vec::new();
    let mut dim = None;
    for (i, rec) in rdr.records().enumerate() {
        let row = i + 1;
        let rec = rec.map_err(csv_error)?;
        if rec.iter().all(|c| c.is_empty()) {
            continue;
        }
        let parsed: std::result::Result<Vec<f64>, _> = rec.iter().map(f64::from_str).collect();
        let coords = match parsed {
            Ok(c) => c,
            Err(_) if row == 1 => continue,
            Err(e) => return Err(Error::Parse { row, message: e.to_string() }),
        };
        if let Some(bad) = coords.iter().find(|c| !c.is_finite()) {
            return Err(Error::Parse { row, message: format!("non-finite value {bad}") });
        }
        match dim {
            None => dim = Some(coords.len()),
            Some(d) if d != coords.len() => {
                return Err(Error::Parse { row, message: format!("expected {d} columns, found {}", coords.len()) })
            }
            _ => {}
        }
        points.push(Point::new(points.len() as PointId, coords));
    }
    Ok(points)
}

fn csv_error(e: csv::Error) -> Error {
    let row = e.position().map(|p| p.line() as usize).unwrap_or(0);
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Parse { row, message: format!("{other:?}") },
    }
}

/// Writes points as headerless CSV rows, with an optional trailing label column.
pub fn write_points_csv(path: impl AsRef<Path>, points: &[Point], labels: Option<&[i64]>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    for (i, p) in points.iter().enumerate() {
        let mut line = p.coords.iter().map(|c| c.to_string()).collect::<Vec<_>>().join(",");
        if let Some(l) = labels {
            line.push(',');
            line.push_str(&l[i].to_string());
        }
        writeln!(w, "{line}")?;
    }
    w.flush()?;
    Ok(())
}

/// Reads one integer label per line, skipping blank lines and a
/// non-numeric first line.
pub fn load_labels(path: impl AsRef<Path>) -> Result<Vec<i64>> {
    let f = BufReader::new(File::open(path)?);
    let mut out = Vec::new();
    for (i, line) in f.lines().enumerate() {
        let line = line?;
        let t = line.trim();
        if t.is_empty() {
            continue;
        }
        match t.parse::<i64>() {
            Ok(v) => out.push(v),
            Err(_) if i == 0 => {}
            Err(e) => return Err(Error::Parse { row: i + 1, message: e.to_string() }),
        }
    }
    Ok(out)
}

pub fn write_labels(path: impl AsRef<Path>, labels: &[i64]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    for l in labels {
        writeln!(w, "{l}")?;
    }
    w.flush()?;
    Ok(())
}

/// Isotropic Gaussian mixture in the unit cube with equal component weights.
///
/// Means are at least `sep` apart, where `sep` starts from a packing scale
/// shrunk by `1 - overlap_hint`. The shared σ leaves a fraction `overlap_hint`
/// of each component's mass outside the ball of radius half the nearest-mean
/// distance. Points come out in random component order, with ground-truth labels.
pub fn gen_gaussian_mixture(
    n: usize,
    dim: usize,
    components: usize,
    overlap_hint: f64,
    seed: u64,
) -> Result<(Vec<Point>, Vec<i64>)> {
    if dim == 0 || components == 0 || n < components {
        return Err(Error::InvalidInput(format!(
            "need dim >= 1, components >= 1 and n >= components (got n={n}, dim={dim}, components={components})"
        )));
    }
    if !(overlap_hint > 0.0 && overlap_hint < 1.0) {
        return Err(Error::InvalidInput(format!("overlap hint {overlap_hint} outside (0, 1)")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let scale = (dim as f64).sqrt() / (2.0 * (components as f64).powf(1.0 / dim as f64));
    let mut sep = scale * (1.0 - overlap_hint);
    let mut means: Vec<Vec<f64>> = Vec::with_capacity(components);
    let mut failures = 0;
    while means.len() < components {
        let m: Vec<f64> = (0..dim).map(|_| rng.random::<f64>()).collect();
        if means.iter().all(|o| distance(o, &m) >= sep) {
            means.push(m);
            failures = 0;
        } else {
            failures += 1;
            if failures == 1000 {
                sep *= 0.9;
                failures = 0;
            }
        }
    }
    let nearest = if components > 1 {
        let mut best = f64::INFINITY;
        for i in 0..components {
            for j in i + 1..components {
                best = best.min(distance(&means[i], &means[j]));
            }
        }
        best
    } else {
        sep
    };
    let r = ChiSquared::new(dim as f64).expect("positive dof").inverse_cdf(1.0 - overlap_hint).sqrt();
    let sigma = nearest / (2.0 * r);
    let noise = Normal::new(0.0, sigma).map_err(|e| Error::InvalidInput(e.to_string()))?;

    let mut labels: Vec<i64> = (0..n).map(|i| (i % components) as i64).collect();
    labels.shuffle(&mut rng);
    let points = labels
        .iter()
        .enumerate()
        .map(|(i, &l)| {
            let mean = &means[l as usize];
            Point::new(i as PointId, mean.iter().map(|m| m + noise.sample(&mut rng)).collect())
        })
        .collect();
    Ok((points, labels))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Mode {
    Exact,
    Bubble { rho: f64 },
    Static,
}

impl Mode {
    pub fn name(&self) -> String {
        match self {
            Mode::Exact => "exact".into(),
            Mode::Bubble { rho } => format!("bubble({rho})"),
            Mode::Static => "static".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowConfig {
    pub window: usize,
    pub slide_delete: usize,
    pub slide_insert: usize,
    pub min_pts: usize,
    /// Defaults to `min_pts`.
    pub min_cluster_size: Option<u64>,
    pub mode: Mode,
    pub seed: u64,
    /// Recompute the static pipeline every slide for NMI and timing.
    pub baseline: bool,
    /// Cap on slides; the stream length is the other limit.
    pub max_slides: Option<usize>,
}

impl WindowConfig {
    pub fn new(window: usize, slide_delete: usize, slide_insert: usize, min_pts: usize, mode: Mode) -> Self {
        Self {
            window,
            slide_delete,
            slide_insert,
            min_pts,
            min_cluster_size: None,
            mode,
            seed: 0,
            baseline: true,
            max_slides: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.slide_delete > self.window {
            return Err(Error::InvalidInput(format!(
                "slide deletes {} exceed window {}",
                self.slide_delete, self.window
            )));
        }
        if self.min_pts == 0 {
            return Err(Error::InvalidInput("minPts must be positive".into()));
        }
        if self.window <= self.min_pts {
            return Err(Error::InvalidInput(format!("window {} must exceed minPts {}", self.window, self.min_pts)));
        }
        if self.window - self.slide_delete + self.slide_insert <= self.min_pts {
            return Err(Error::InvalidInput("residents would drop to minPts or fewer".into()));
        }
        if let Mode::Bubble { rho } = self.mode {
            BubbleTreeConfig::new(rho, 3, 6)?;
        }
        if self.min_cluster_size == Some(0) {
            return Err(Error::InvalidInput("minimum cluster size must be positive".into()));
        }
        Ok(())
    }

    pub fn min_cluster_weight(&self) -> u64 {
        self.min_cluster_size.unwrap_or(self.min_pts as u64)
    }
}

/// Per-slide measurements. Fields prefixed `t_` are wall-clock milliseconds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlideReport {
    pub slide: usize,
    pub t_online_ms: f64,
    pub t_offline_ms: f64,
    pub t_static_ms: Option<f64>,
    pub t_core_ms: f64,
    pub t_mst_ms: f64,
    pub nmi: Option<f64>,
    pub n_resident: usize,
    pub n_clusters: usize,
    pub n_noise: usize,
    pub static_clusters: Option<usize>,
    pub mode: String,
    pub seed: u64,
    pub rknn_mean: f64,
    pub boruvka_components: usize,
    pub replacements: usize,
    pub leaves: Option<usize>,
}

impl SlideReport {
    /// The report with every wall-clock field zeroed.
    pub fn without_timings(&self) -> SlideReport {
        SlideReport {
            t_online_ms: 0.0,
            t_offline_ms: 0.0,
            t_static_ms: self.t_static_ms.map(|_| 0.0),
            t_core_ms: 0.0,
            t_mst_ms: 0.0,
            ..self.clone()
        }
    }
}

enum Engine {
    Exact(Box<DynamicClusterer>),
    Bubble(Box<BubbleTree>),
    Static,
}

/// Resident window over a point stream, deleting oldest first.
pub struct SlidingWindow {
    cfg: WindowConfig,
    stream: Vec<Point>,
    next: usize,
    residents: VecDeque<Point>,
    engine: Engine,
    slides: usize,
}

fn ms(d: std::time::Duration) -> f64 {
    d.as_secs_f64() * 1e3
}

impl SlidingWindow {
    pub fn new(cfg: WindowConfig, stream: Vec<Point>) -> Result<Self> {
        cfg.validate()?;
        if stream.len() < cfg.window {
            return Err(Error::InsufficientData { needed: cfg.window, available: stream.len() });
        }
        if let Some(d) = stream.first().map(Point::dim) {
            if let Some(p) = stream.iter().find(|p| p.dim() != d) {
                return Err(Error::DimensionMismatch { expected: d, got: p.dim() });
            }
        }
        let residents: VecDeque<Point> = stream[..cfg.window].iter().cloned().collect();
        let engine = match cfg.mode {
            Mode::Exact => Engine::Exact(Box::new(DynamicClusterer::from_points(
                IndexConfig::new(cfg.min_pts, 5, 10)?,
                residents.iter().cloned(),
            )?)),
            Mode::Bubble { rho } => {
                let mut t = BubbleTree::new(BubbleTreeConfig::new(rho, 3, 6)?);
                for p in &residents {
                    t.bt_insert(p.clone())?;
                }
                Engine::Bubble(Box::new(t))
            }
            Mode::Static => Engine::Static,
        };
        Ok(Self { next: cfg.window, cfg, stream, residents, engine, slides: 0 })
    }

    pub fn residents(&self) -> impl Iterator<Item = &Point> {
        self.residents.iter()
    }

    pub fn resident_ids(&self) -> Vec<PointId> {
        self.residents.iter().map(|p| p.id).collect()
    }

    /// Valid after `make_contiguous`, which `step` calls once per slide.
    fn resident_slice(&self) -> &[Point] {
        let (a, b) = self.residents.as_slices();
        debug_assert!(b.is_empty());
        a
    }

    fn offline(&self) -> Result<PointClustering> {
        let mcw = self.cfg.min_cluster_weight();
        match &self.engine {
            Engine::Exact(c) => cluster_exact(c, mcw),
            Engine::Bubble(t) => cluster_summary(t, self.cfg.min_pts, mcw),
            Engine::Static => static_cluster(self.resident_slice(), self.cfg.min_pts, mcw),
        }
    }

    /// Runs one slide, or returns `None` when the stream cannot supply it.
    pub fn step(&mut self) -> Result<Option<SlideReport>> {
        if self.stream.len() - self.next < self.cfg.slide_insert
            || self.cfg.max_slides.is_some_and(|m| self.slides >= m)
        {
            return Ok(None);
        }
        let mut agg = UpdateStats::default();
        let mut rknn_total = 0usize;
        let mut updates = 0usize;
        let t0 = Instant::now();
        for _ in 0..self.cfg.slide_delete {
            let old = self.residents.pop_front().expect("window holds more than D points");
            match &mut self.engine {
                Engine::Exact(c) => {
                    let s = c.delete_point(old.id)?;
                    accumulate(&mut agg, &s);
                    rknn_total += s.rknn;
                    updates += 1;
                }
                Engine::Bubble(t) => {
                    t.bt_delete(old.id)?;
                }
                Engine::Static => {}
            }
        }
        for _ in 0..self.cfg.slide_insert {
            let p = self.stream[self.next].clone();
            self.next += 1;
            self.residents.push_back(p.clone());
            match &mut self.engine {
                Engine::Exact(c) => {
                    let s = c.insert_point(p)?;
                    accumulate(&mut agg, &s);
                    rknn_total += s.rknn;
                    updates += 1;
                }
                Engine::Bubble(t) => {
                    t.bt_insert(p)?;
                }
                Engine::Static => {}
            }
        }
        let t_online = t0.elapsed();
        self.residents.make_contiguous();

        let t1 = Instant::now();
        let result = self.offline()?;
        let t_offline = t1.elapsed();

        let (nmi_score, t_static, static_clusters) = if matches!(self.engine, Engine::Static) {
            (Some(nmi(&result.labels, &result.labels)?), Some(ms(t_offline)), Some(result.n_clusters))
        } else if self.cfg.baseline {
            let t2 = Instant::now();
            let base = static_cluster(self.resident_slice(), self.cfg.min_pts, self.cfg.min_cluster_weight())?;
            let t = t2.elapsed();
            if base.ids != result.ids {
                return Err(Error::State("baseline and mode disagree on the resident set".into()));
            }
            (Some(nmi(&result.labels, &base.labels)?), Some(ms(t)), Some(base.n_clusters))
        } else {
            (None, None, None)
        };

        self.slides += 1;
        Ok(Some(SlideReport {
            slide: self.slides,
            t_online_ms: ms(t_online),
            t_offline_ms: ms(t_offline),
            t_static_ms: t_static,
            t_core_ms: ms(agg.core_time),
            t_mst_ms: ms(agg.mst_time),
            nmi: nmi_score,
            n_resident: self.residents.len(),
            n_clusters: result.n_clusters,
            n_noise: result.noise_count(),
            static_clusters,
            mode: self.cfg.mode.name(),
            seed: self.cfg.seed,
            rknn_mean: if updates > 0 { rknn_total as f64 / updates as f64 } else { 0.0 },
            boruvka_components: agg.components,
            replacements: agg.replacements,
            leaves: match &self.engine {
                Engine::Bubble(t) => Some(t.leaf_count()),
                _ => None,
            },
        }))
    }
}

fn accumulate(agg: &mut UpdateStats, s: &UpdateStats) {
    agg.rknn += s.rknn;
    agg.candidates += s.candidates;
    agg.linked += s.linked;
    agg.replacements += s.replacements;
    agg.edges_removed += s.edges_removed;
    agg.components += s.components;
    agg.boruvka_rounds += s.boruvka_rounds;
    agg.core_time += s.core_time;
    agg.mst_time += s.mst_time;
}

/// Drives every slide the stream allows.
pub fn run_sliding_window(cfg: WindowConfig, stream: Vec<Point>) -> Result<Vec<SlideReport>> {
    let mut w = SlidingWindow::new(cfg, stream)?;
    let mut out = Vec::new();
    while let Some(r) = w.step()? {
        out.push(r);
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ReportFormat {
    Jsonl,
    Csv,
}

impl FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "jsonl" => Ok(ReportFormat::Jsonl),
            "csv" => Ok(ReportFormat::Csv),
            other => Err(Error::InvalidInput(format!("unknown report format {other:?}"))),
        }
    }
}

const REPORT_FIELDS: [&str; 17] = [
    "slide",
    "t_online_ms",
    "t_offline_ms",
    "t_static_ms",
    "t_core_ms",
    "t_mst_ms",
    "nmi",
    "n_resident",
    "n_clusters",
    "n_noise",
    "static_clusters",
    "mode",
    "seed",
    "rknn_mean",
    "boruvka_components",
    "replacements",
    "leaves",
];

pub fn emit_report(reports: &[SlideReport], path: impl AsRef<Path>, format: ReportFormat) -> Result<()> {
    let file = File::create(path)?;
    match format {
        ReportFormat::Jsonl => {
            let mut w = BufWriter::new(file);
            for r in reports {
                serde_json::to_writer(&mut w, r).map_err(|e| Error::Io(e.into()))?;
                writeln!(w)?;
            }
            w.flush()?;
        }
        ReportFormat::Csv => {
            let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(file);
            w.write_record(REPORT_FIELDS).map_err(csv_error)?;
            for r in reports {
                w.serialize(r).map_err(csv_error)?;
            }
            w.flush()?;
        }
    }
    Ok(())
}

pub fn read_report(path: impl AsRef<Path>, format: ReportFormat) -> Result<Vec<SlideReport>> {
    match format {
        ReportFormat::Jsonl => {
            let f = BufReader::new(File::open(path)?);
            let mut out = Vec::new();
            for (i, line) in f.lines().enumerate() {
                let line = line?;
                if line.trim().is_empty() {
                    continue;
                }
                out.push(serde_json::from_str(&line).map_err(|e| Error::Parse { row: i + 1, message: e.to_string() })?);
            }
            Ok(out)
        }
        ReportFormat::Csv => {
            let mut rdr = csv::Reader::from_path(path).map_err(csv_error)?;
            rdr.deserialize().map(|r| r.map_err(csv_error)).collect()
        }
    }
}
