use std::collections::BTreeMap;

use dynhdb::metric::{brute_core_distances, brute_mst, total_weight, weight_multiset};
use dynhdb::{DynamicClusterer, IndexConfig, Point, PointId};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_point(rng: &mut ChaCha8Rng, id: PointId, d: usize) -> Point {
    Point::new(id, (0..d).map(|_| rng.random::<f64>()).collect())
}

fn check_against_oracle(c: &DynamicClusterer) {
    let pts = c.points();
    let cores = brute_core_distances(&pts, c.min_pts()).unwrap();
    assert_eq!(c.core_records(), cores);
    let oracle = brute_mst(&pts, &cores).unwrap();
    let snap = c.mst_snapshot().unwrap();
    assert_eq!(snap.len(), pts.len() - 1);
    assert_eq!(weight_multiset(&snap), weight_multiset(&oracle));
    assert_eq!(total_weight(&snap), total_weight(&oracle));
    c.index().check_invariants().unwrap();
}

fn cds(c: &DynamicClusterer) -> BTreeMap<PointId, f64> {
    c.core_records().into_iter().map(|(k, v)| (k, v.core_distance)).collect()
}

#[test]
fn interleaved_updates_match_brute_force() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let seed: Vec<Point> = (0..150).map(|i| random_point(&mut rng, i, 3)).collect();
    let mut c = DynamicClusterer::from_points(IndexConfig::new(5, 3, 6).unwrap(), seed).unwrap();
    check_against_oracle(&c);
    let mut next_id = 150;
    for _ in 0..200 {
        let before = cds(&c);
        if rng.random_bool(0.5) {
            let n = c.len();
            let p = random_point(&mut rng, next_id, 3);
            next_id += 1;
            let s = c.insert_point(p).unwrap();
            assert!(s.candidates >= n, "every existing point yields one inserted edge");
            let after = cds(&c);
            assert!(before.iter().all(|(id, cd)| after[id] <= *cd), "insertion never raises a core distance");
        } else {
            let ids = c.ids();
            let victim = ids[rng.random_range(0..ids.len())];
            c.delete_point(victim).unwrap();
            let after = cds(&c);
            assert!(after.iter().all(|(id, cd)| *cd >= before[id]), "deletion never lowers a core distance");
        }
        check_against_oracle(&c);
    }
}

#[test]
fn tie_heavy_grid_stays_exact() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut c = DynamicClusterer::with_config(IndexConfig::new(4, 2, 4).unwrap());
    let mut id = 0;
    for x in 0..8 {
        for y in 0..8 {
            c.insert_point(Point::new(id, vec![x as f64, y as f64])).unwrap();
            id += 1;
        }
    }
    check_against_oracle(&c);
    for _ in 0..60 {
        if rng.random_bool(0.5) {
            let p = Point::new(id, vec![rng.random_range(0..8) as f64, rng.random_range(0..8) as f64]);
            id += 1;
            c.insert_point(p).unwrap();
        } else {
            let ids = c.ids();
            c.delete_point(ids[rng.random_range(0..ids.len())]).unwrap();
        }
        check_against_oracle(&c);
    }
}

#[test]
fn rknn_size_tracks_min_pts_not_n() {
    let mean_rknn = |min_pts: usize, n: usize| {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let pts: Vec<Point> = (0..n as PointId).map(|i| random_point(&mut rng, i, 2)).collect();
        let mut c = DynamicClusterer::from_points(IndexConfig::new(min_pts, 5, 10).unwrap(), pts).unwrap();
        let mut total = 0;
        for i in 0..100 {
            total += c.insert_point(random_point(&mut rng, (n + i) as PointId, 2)).unwrap().rknn;
        }
        total as f64 / 100.0
    };
    let small = mean_rknn(4, 1000);
    let large_k = mean_rknn(16, 1000);
    let large_n = mean_rknn(4, 4000);
    assert!(large_k > 2.0 * small, "rknn should grow with minPts: {small} vs {large_k}");
    assert!(large_n < 1.5 * small, "rknn should not grow with n: {small} vs {large_n}");
}
