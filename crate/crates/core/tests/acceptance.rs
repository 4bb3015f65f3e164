//! Acceptance checks, one PASS/FAIL line per criterion.
//!
//! Criteria listed in `KNOWN_FAILING` were measured to fail with the faithful
//! implementation; they still print FAIL. The run exits non-zero on any other
//! failure, or if a known failure starts passing so the list gets updated.

use std::collections::BTreeSet;
use std::process::ExitCode;
use std::time::Instant;

use dynhdb::bubble_tree::{classify_quality, quality_moments, BubbleTreeConfig, ClusteringFeature, Quality};
use dynhdb::harness::{emit_report, gen_gaussian_mixture, read_report, run_sliding_window, Mode, ReportFormat, WindowConfig};
use dynhdb::metric::{brute_core_distances, brute_knn, brute_mst, brute_rknn, reference_d1, total_weight};
use dynhdb::{
    cluster_summary, nmi, static_cluster, BubbleTree, DynamicClusterer, IndexConfig, Point, PointId, UpdateStats,
};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// 4: per-delete cost is flat in the fraction deleted, so cumulative time is linear.
/// 7: in 10-d, bubble extents exceed half the gap between components and the
/// overlap rule of the bubble distance chains components together.
const KNOWN_FAILING: [usize; 2] = [4, 7];

type Outcome = Result<(bool, String), String>;
type Criterion = (&'static str, fn() -> Outcome);

fn uniform(rng: &mut ChaCha8Rng, id: PointId, d: usize) -> Point {
    Point::new(id, (0..d).map(|_| rng.random::<f64>()).collect())
}

fn e<E: std::fmt::Display>(err: E) -> String {
    err.to_string()
}

fn oracle_mismatch(c: &DynamicClusterer) -> Result<Option<String>, String> {
    let pts = c.points();
    let cores = brute_core_distances(&pts, c.min_pts()).map_err(e)?;
    if c.core_records() != cores {
        return Ok(Some("core records differ".into()));
    }
    let want = total_weight(&brute_mst(&pts, &cores).map_err(e)?);
    let got = c.mst_weight().ok_or("no forest")?;
    Ok((got != want).then(|| format!("forest weight {got} vs oracle {want}")))
}

fn c1_oracle_equivalence() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let seed: Vec<Point> = (0..150).map(|i| uniform(&mut rng, i, 3)).collect();
    let mut c = DynamicClusterer::from_points(IndexConfig::new(5, 5, 10).map_err(e)?, seed).map_err(e)?;
    let mut next = 150;
    let (mut ins, mut del) = (0, 0);
    for op in 0..200 {
        if rng.random_bool(0.5) {
            c.insert_point(uniform(&mut rng, next, 3)).map_err(e)?;
            next += 1;
            ins += 1;
        } else {
            let ids = c.ids();
            c.delete_point(ids[rng.random_range(0..ids.len())]).map_err(e)?;
            del += 1;
        }
        if let Some(why) = oracle_mismatch(&c)? {
            return Ok((false, format!("after op {op}: {why}")));
        }
    }
    let secs = start.elapsed().as_secs_f64();
    Ok((secs < 60.0, format!("{ins} inserts, {del} deletes all exact; {secs:.2} s (limit 60 s)")))
}

fn c2_worked_example() -> Outcome {
    let mut c = DynamicClusterer::new(2).map_err(e)?;
    for p in reference_d1() {
        c.insert_point(p).map_err(e)?;
    }
    let base = c.mst_weight().ok_or("no forest")?;
    c.insert_point(Point::new(4, vec![1.5])).map_err(e)?;
    let after_insert = c.mst_weight().ok_or("no forest")?;
    let oracle_insert = oracle_mismatch(&c)?;

    let mut c = DynamicClusterer::new(2).map_err(e)?;
    for p in reference_d1() {
        c.insert_point(p).map_err(e)?;
    }
    c.delete_point(3).map_err(e)?;
    let after_delete = c.mst_weight().ok_or("no forest")?;
    let oracle_delete = oracle_mismatch(&c)?;
    let ok = base == 13.0 && after_insert == 12.0 && after_delete == 4.0 && oracle_insert.is_none() && oracle_delete.is_none();
    Ok((ok, format!("base {base}, +1.5 -> {after_insert} (want 12), -10 -> {after_delete} (want 4)")))
}

fn c3_knn_rknn() -> Outcome {
    let mut checked = 0;
    for (case, &d) in [2usize, 5, 8].iter().enumerate() {
        for &min_pts in &[3usize, 5, 10] {
            let mut rng = ChaCha8Rng::seed_from_u64(300 + case as u64 * 10 + min_pts as u64);
            let pts: Vec<Point> = (0..300).map(|i| uniform(&mut rng, i, d)).collect();
            let c = DynamicClusterer::from_points(IndexConfig::new(min_pts, 5, 10).map_err(e)?, pts.clone())
                .map_err(e)?;
            let cds = c.core_records().into_iter().map(|(id, r)| (id, r.core_distance)).collect();
            for qi in 0..50 {
                let q: Vec<f64> = if qi % 5 == 0 {
                    pts[rng.random_range(0..pts.len())].coords.clone()
                } else {
                    (0..d).map(|_| rng.random::<f64>()).collect()
                };
                let knn: Vec<PointId> = c.index().knn(&q, min_pts, None).map_err(e)?.iter().map(|n| n.id).collect();
                let want: Vec<PointId> = brute_knn(&pts, &q, min_pts, None).iter().map(|n| n.id).collect();
                let rknn: BTreeSet<PointId> = c.index().rknn(&q).into_iter().collect();
                let want_r: BTreeSet<PointId> = brute_rknn(&pts, &cds, &q).into_iter().collect();
                if knn != want || rknn != want_r {
                    return Ok((false, format!("d={d} minPts={min_pts} query {qi} disagrees with linear scan")));
                }
                checked += 1;
            }
        }
    }
    Ok((true, format!("{checked} queries over d in {{2,5,8}}, minPts in {{3,5,10}} match linear scan")))
}

fn c4_feasibility_trend() -> Outcome {
    let (pts, _) = gen_gaussian_mixture(20_000, 10, 10, 0.1, 4).map_err(e)?;
    let mut ids: Vec<PointId> = pts.iter().map(|p| p.id).collect();
    let mut c = DynamicClusterer::from_points(IndexConfig::new(10, 5, 10).map_err(e)?, pts).map_err(e)?;
    ids.shuffle(&mut ChaCha8Rng::seed_from_u64(4));
    let step = ids.len() / 100;
    let mut cumulative = Vec::new();
    let mut components = Vec::new();
    let mut total = UpdateStats::default();
    for chunk in ids.chunks(step).take(10) {
        for &id in chunk {
            let s = c.delete_point(id).map_err(e)?;
            total.core_time += s.core_time;
            total.mst_time += s.mst_time;
            total.components += s.components;
        }
        cumulative.push((total.core_time + total.mst_time).as_secs_f64());
        components.push(total.components);
    }
    // Wall-clock noise is a few percent, so a linear curve must not pass by luck:
    // the second half has to cost at least 10% more than the first.
    let ratio = (cumulative[9] - cumulative[4]) / cumulative[4];
    let mst_share = total.mst_time.as_secs_f64() / (total.core_time + total.mst_time).as_secs_f64();
    let curve: Vec<String> = cumulative.iter().map(|t| format!("{t:.2}")).collect();
    Ok((
        ratio > 1.1 && mst_share > 0.5,
        format!(
            "cumulative s at 1..10% deleted [{}]; cumulative components {components:?}; (T(10%) - T(5%)) / T(5%) = {ratio:.2} (superlinear needs > 1.1); MST share {:.1}% (needs > 50%)",
            curve.join(", "),
            mst_share * 100.0
        ),
    ))
}

fn c5_bubble_conservation() -> Outcome {
    let rho = 0.05;
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut tree = BubbleTree::new(BubbleTreeConfig::new(rho, 3, 6).map_err(e)?);
    let mut resident: Vec<Point> = Vec::new();
    let mut next = 0;
    let mut worst_ls = 0.0f64;
    let mut worst_ss = 0.0f64;
    let mut worst_leaf = 0i64;
    for op in 0..10_000 {
        if resident.is_empty() || rng.random_bool(0.6) {
            let p = uniform(&mut rng, next, 4);
            next += 1;
            tree.bt_insert(p.clone()).map_err(e)?;
            resident.push(p);
        } else {
            let p = resident.swap_remove(rng.random_range(0..resident.len()));
            tree.bt_delete(p.id).map_err(e)?;
        }
        if op % 100 != 99 && op != 9_999 {
            continue;
        }
        let direct = ClusteringFeature::from_points(4, resident.iter().map(|p| p.coords.as_slice()));
        let root = tree.root_cf().ok_or("empty tree")?;
        if root.n != direct.n {
            return Ok((false, format!("op {op}: root n {} vs {}", root.n, direct.n)));
        }
        let norm = direct.ls.iter().map(|x| x * x).sum::<f64>().sqrt();
        let diff = root.ls.iter().zip(&direct.ls).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
        worst_ls = worst_ls.max(diff / norm);
        worst_ss = worst_ss.max((root.ss - direct.ss).abs() / direct.ss);
        let target = (rho * resident.len() as f64 - 1e-9).ceil().max(1.0) as i64;
        worst_leaf = worst_leaf.max((tree.leaf_count() as i64 - target).abs());
    }
    let ok = worst_ls <= 1e-9 && worst_ss <= 1e-9 && worst_leaf <= 1;
    Ok((
        ok,
        format!(
            "N={} after 10000 ops; max rel LS err {worst_ls:.1e}, SS err {worst_ss:.1e}; max |leaves - ceil(rho N)| = {worst_leaf}",
            resident.len()
        ),
    ))
}

fn c6_full_degeneration() -> Outcome {
    let (pts, _) = gen_gaussian_mixture(500, 2, 3, 0.1, 6).map_err(e)?;
    let mut tree = BubbleTree::new(BubbleTreeConfig::new(1.0, 3, 6).map_err(e)?);
    for p in &pts {
        tree.bt_insert(p.clone()).map_err(e)?;
    }
    let exact = static_cluster(&pts, 5, 5).map_err(e)?;
    let bubble = cluster_summary(&tree, 5, 5).map_err(e)?;
    let sorted = |v: &[f64]| {
        let mut v = v.to_vec();
        v.sort_by(f64::total_cmp);
        v
    };
    let same = sorted(&exact.merge_weights) == sorted(&bubble.merge_weights);
    let score = nmi(&bubble.labels, &exact.labels).map_err(e)?;
    Ok((
        same && score == 1.0 && bubble.ids == exact.ids,
        format!(
            "{} leaves; merge multisets equal: {same}; NMI {score} ({} clusters)",
            tree.leaf_count(),
            exact.n_clusters
        ),
    ))
}

fn c7_quality_at_compression() -> Outcome {
    let (pts, _) = gen_gaussian_mixture(50_000, 10, 10, 0.1, 7).map_err(e)?;
    let exact = static_cluster(&pts, 10, 10).map_err(e)?;
    let mut scores = Vec::new();
    for rho in [0.01, 0.05, 0.10] {
        let mut tree = BubbleTree::new(BubbleTreeConfig::new(rho, 3, 6).map_err(e)?);
        for p in &pts {
            tree.bt_insert(p.clone()).map_err(e)?;
        }
        let res = cluster_summary(&tree, 10, 10).map_err(e)?;
        scores.push(nmi(&res.labels, &exact.labels).map_err(e)?);
    }
    let monotone = scores.windows(2).all(|w| w[1] >= w[0] - 0.05);
    Ok((
        scores[2] >= 0.85 && monotone,
        format!(
            "NMI vs static at rho 0.01/0.05/0.10 = {:.3}/{:.3}/{:.3} (need >= 0.85 at 0.10, nondecreasing within 0.05); static found {} clusters",
            scores[0], scores[1], scores[2], exact.n_clusters
        ),
    ))
}

fn c8_window_speed() -> Outcome {
    let (pts, _) = gen_gaussian_mixture(20_000, 10, 10, 0.1, 8).map_err(e)?;
    let mut cfg = WindowConfig::new(10_000, 1_000, 1_000, 10, Mode::Bubble { rho: 0.01 });
    cfg.seed = 8;
    let reports = run_sliding_window(cfg, pts).map_err(e)?;
    let n = reports.len() as f64;
    let bubble = reports.iter().map(|r| r.t_online_ms + r.t_offline_ms).sum::<f64>() / n;
    let stat = reports.iter().map(|r| r.t_static_ms.unwrap_or(f64::NAN)).sum::<f64>() / n;
    let nmi_mean = reports.iter().filter_map(|r| r.nmi).sum::<f64>() / n;
    Ok((
        reports.len() >= 10 && bubble < stat,
        format!(
            "{} slides; mean per-slide bubble {bubble:.1} ms vs static {stat:.1} ms; mean NMI {nmi_mean:.3}",
            reports.len()
        ),
    ))
}

fn c9_quality_hand_values() -> Outcome {
    let w = [100, 100, 100, 700];
    let labels = classify_quality(&w, 1000, 1.0).map_err(e)?;
    let (mu, sigma) = quality_moments(&w, 1000).map_err(e)?;
    let ok = labels == [Quality::Good, Quality::Good, Quality::Good, Quality::Over]
        && mu == 0.25
        && (sigma - 0.259808).abs() <= 1e-6;
    Ok((ok, format!("labels {labels:?}, mu {mu}, sigma {sigma:.7}")))
}

fn c10_determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(e)?;
    let mut checked = Vec::new();
    for (i, mode) in [Mode::Exact, Mode::Bubble { rho: 0.05 }, Mode::Static].into_iter().enumerate() {
        let run = |tag: &str| -> Result<Vec<dynhdb::harness::SlideReport>, String> {
            let (pts, _) = gen_gaussian_mixture(1_500, 3, 4, 0.1, 10).map_err(e)?;
            let mut cfg = WindowConfig::new(800, 100, 100, 8, mode);
            cfg.seed = 10;
            let reports = run_sliding_window(cfg, pts).map_err(e)?;
            let stripped: Vec<_> = reports.iter().map(|r| r.without_timings()).collect();
            let path = dir.path().join(format!("{i}-{tag}.jsonl"));
            emit_report(&stripped, &path, ReportFormat::Jsonl).map_err(e)?;
            read_report(&path, ReportFormat::Jsonl).map_err(e)
        };
        let (a, b) = (run("a")?, run("b")?);
        let bytes = |tag: &str| std::fs::read(dir.path().join(format!("{i}-{tag}.jsonl"))).map_err(e);
        if a != b || bytes("a")? != bytes("b")? {
            return Ok((false, format!("mode {} differs between identical runs", mode.name())));
        }
        checked.push(format!("{} ({} slides)", mode.name(), a.len()));
    }
    Ok((true, format!("byte-identical reports modulo timings for {}", checked.join(", "))))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("exact dynamic matches brute force after every update", c1_oracle_equivalence),
        ("worked example weights", c2_worked_example),
        ("kNN and RkNN match linear scan", c3_knn_rknn),
        ("deletion cost trend and MST share", c4_feasibility_trend),
        ("bubble-tree conservation and compression", c5_bubble_conservation),
        ("full-ratio bubbles degenerate to points", c6_full_degeneration),
        ("clustering quality under compression", c7_quality_at_compression),
        ("sliding-window speed ordering", c8_window_speed),
        ("quality classifier hand values", c9_quality_hand_values),
        ("determinism", c10_determinism),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut unexpected = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let n = i + 1;
        if !filter.is_empty() && !filter.iter().any(|f| *f == n.to_string()) {
            continue;
        }
        let t = Instant::now();
        let (ok, detail) = match check() {
            Ok(r) => r,
            Err(err) => (false, format!("error: {err}")),
        };
        let known = KNOWN_FAILING.contains(&n);
        if ok == known {
            unexpected += 1;
        }
        let verdict = match (ok, known) {
            (true, false) => "PASS",
            (true, true) => "PASS (listed as known failure)",
            (false, true) => "FAIL (known)",
            (false, false) => "FAIL",
        };
        println!("{verdict} criterion {n}: {name}: {detail} [{:.1} s]", t.elapsed().as_secs_f64());
    }
    if unexpected == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{unexpected} criteria differ from the expected outcome");
        ExitCode::FAILURE
    }
}
