use dynhdb::harness::gen_gaussian_mixture;
use dynhdb::{nmi, static_cluster};

#[test]
fn static_recovers_generated_components() {
    for seed in [1, 2] {
        let (pts, truth) = gen_gaussian_mixture(5000, 10, 10, 0.1, seed).unwrap();
        let res = static_cluster(&pts, 10, 10).unwrap();
        let score = nmi(&res.labels, &truth).unwrap();
        assert!(score >= 0.8, "seed {seed}: NMI {score}");
    }
}
