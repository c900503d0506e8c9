mod common;

use std::path::Path;

use common::*;
use pald::cache::marginal_threshold;
use pald::{
    cohesion_matrix, cohesion_matrix_with, natural_threshold, CohesionCache, DissimilarityMatrix,
    Metric, Options, QueryOutcome, QueryPoint,
};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn cache_for(split: &Split) -> CohesionCache {
    CohesionCache::from_points(split.reference.clone(), Metric::Euclidean, None, &Options::default()).unwrap()
}

fn text(cache: &CohesionCache) -> String {
    let mut buf = Vec::new();
    cache.write_to(&mut buf).unwrap();
    String::from_utf8(buf).unwrap()
}

fn splits() -> impl Strategy<Value = Split> {
    (any::<u64>(), 0u64..1000).prop_map(|(seed, i)| split_instance(seed, i))
}

/// A lattice instance with `t` taken from the same grid.
fn lattice_splits() -> impl Strategy<Value = Split> {
    (any::<u64>(), 4usize..16).prop_map(|(seed, n)| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut pts = lattice(&mut rng, n, 2, 5);
        let t = pts.pop().unwrap();
        Split {
            reference: pts,
            t,
            kind: Cloud::Uniform,
        }
    })
}

fn assert_matches_batch(split: &Split, out: &QueryOutcome, tol: f64) -> Result<(), TestCaseError> {
    let n = split.reference.len();
    let o = oracle_cohesion(&dense(&split.all()));
    for w in 0..n {
        prop_assert!(scaled_err(out.cohesion_to[w], o[n][w]) < tol, "row entry {w}");
        prop_assert!(scaled_err(out.cohesion_from[w], o[w][n]) < tol, "column entry {w}");
    }
    prop_assert!(rel_err(out.self_cohesion, o[n][n]) < tol);
    prop_assert!(rel_err(out.tau_updated, oracle_threshold(&o)) < tol);
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn online_matches_batch(split in splits()) {
        let out = cache_for(&split).query(QueryPoint::Point(&split.t)).unwrap();
        assert_matches_batch(&split, &out, 1e-10)?;
    }

    #[test]
    fn online_matches_batch_with_ties(split in lattice_splits()) {
        let out = cache_for(&split).query(QueryPoint::Point(&split.t)).unwrap();
        assert_matches_batch(&split, &out, 1e-12)?;
    }

    #[test]
    fn marginal_formula_is_exact(split in splits()) {
        let cache = cache_for(&split);
        let out = cache.query_distances(&split.dt()).unwrap();
        let batch_t = natural_threshold(&cohesion_matrix(
            &DissimilarityMatrix::from_points(&split.all(), Metric::Euclidean).unwrap(),
        ));
        prop_assert!(rel_err(out.tau_updated, batch_t) < 1e-12);
        prop_assert_eq!(
            out.tau_updated,
            marginal_threshold(cache.tau_ref(), out.self_cohesion, out.epsilon, cache.n())
        );
    }

    #[test]
    fn epsilon_bounds(split in splits()) {
        let n = split.reference.len() as f64;
        let out = cache_for(&split).query(QueryPoint::Point(&split.t)).unwrap();
        prop_assert!(out.epsilon >= 0.0);
        prop_assert!(out.epsilon <= (n - 1.0) / (12.0 * (n + 1.0)) + 1e-15);
    }

    #[test]
    fn distant_point_law(split in splits(), margin in 1.0001f64..10.0) {
        let cache = cache_for(&split);
        let reach = cache.dissimilarities().diameter() * margin;
        // displaced along the first axis, beyond the diameter from every point
        let mut t = split.reference[0].clone();
        let far = split.reference.iter().map(|p| p[0]).fold(f64::NEG_INFINITY, f64::max);
        t[0] = far + reach;
        let out = cache.query(QueryPoint::Point(&t)).unwrap();
        prop_assert_eq!(out.epsilon, 0.0);
        prop_assert!(out.cohesion_to.iter().all(|&c| c == 0.0));
        prop_assert!(out.cohesion_from.iter().all(|&c| c == 0.0));
        prop_assert!(out.is_outlier);
        let n = cache.n() as f64;
        prop_assert_eq!(
            out.tau_updated,
            cache.tau_ref() * (n - 1.0) / (n + 1.0) + out.self_cohesion / (n + 1.0)
        );
    }

    #[test]
    fn outcome_is_self_consistent(split in splits()) {
        let out = cache_for(&split).query(QueryPoint::Point(&split.t)).unwrap();
        for (w, &c) in out.cohesion_to.iter().enumerate() {
            prop_assert!(out.self_cohesion >= c);
            prop_assert_eq!(out.strong_neighbors.contains(&w), out.weight(w) >= out.tau_updated);
        }
        prop_assert_eq!(out.is_outlier, out.strong_neighbors.is_empty());
    }

    #[test]
    fn queries_do_not_touch_the_cache(a in splits(), b in splits()) {
        prop_assume!(a.reference[0].len() == b.reference[0].len());
        let cache = cache_for(&a);
        let before = text(&cache);
        let ta = a.t.clone();
        let tb = b.t.clone();
        let alone_a = cache.query(QueryPoint::Point(&ta));
        let alone_b = cache.query(QueryPoint::Point(&tb));
        let (ia, ib) = std::thread::scope(|s| {
            let ha = s.spawn(|| cache.query(QueryPoint::Point(&ta)));
            let hb = s.spawn(|| cache.query(QueryPoint::Point(&tb)));
            (ha.join().unwrap(), hb.join().unwrap())
        });
        prop_assert_eq!(alone_a.ok(), ia.ok());
        prop_assert_eq!(alone_b.ok(), ib.ok());
        prop_assert_eq!(before, text(&cache));
    }

    #[test]
    fn lazy_network_matches_batch(split in splits()) {
        let cache = cache_for(&split);
        let batch = cohesion_matrix_with(cache.dissimilarities(), &Options::sequential()).unwrap();
        prop_assert!(cache.lazy_network().max_abs_diff(&batch) < 1e-12);
        prop_assert_eq!(cache.lazy_network_with(false), batch);
    }

    #[test]
    fn save_load_round_trip(split in splits(), labelled in any::<bool>()) {
        let labels = labelled.then(|| (0..split.reference.len()).map(|i| format!("c{}", i % 3)).collect());
        let cache = CohesionCache::from_points(split.reference.clone(), Metric::Euclidean, labels, &Options::default()).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.cache");
        cache.save(&path).unwrap();
        let back = CohesionCache::load(&path).unwrap();
        prop_assert_eq!(back.sizes(), cache.sizes());
        prop_assert_eq!(back.tau_ref().to_bits(), cache.tau_ref().to_bits());
        prop_assert_eq!(back.dissimilarities(), cache.dissimilarities());
        prop_assert_eq!(back.labels(), cache.labels());
        prop_assert_eq!(text(&back), text(&cache));
        // a reloaded cache answers distance queries identically
        let dt = split.dt();
        prop_assert_eq!(back.query_distances(&dt).unwrap(), cache.query_distances(&dt).unwrap());
    }
}

#[test]
fn strong_neighbors_of_a_tight_pair() {
    let pts = vec![vec![0.0], vec![0.1], vec![10.0], vec![10.1]];
    let cache = CohesionCache::from_points(pts, Metric::Euclidean, None, &Options::default()).unwrap();
    let out = cache.query(QueryPoint::Point(&[0.05])).unwrap();
    assert!(out.strong_neighbors.contains(&0) && out.strong_neighbors.contains(&1));
    assert!(!out.is_outlier);
}

#[test]
fn json_has_exactly_the_outcome_keys() {
    let cache = CohesionCache::from_points(vec![vec![0.0], vec![1.0]], Metric::Euclidean, None, &Options::default()).unwrap();
    let out = cache.query(QueryPoint::Point(&[-0.5])).unwrap();
    let value = serde_json::to_value(&out).unwrap();
    let mut keys: Vec<&str> = value.as_object().unwrap().keys().map(String::as_str).collect();
    keys.sort_unstable();
    assert_eq!(
        keys,
        [
            "cohesion_from",
            "cohesion_to",
            "epsilon",
            "is_outlier",
            "self_cohesion",
            "strong_neighbors",
            "tau_updated"
        ]
    );
}

#[test]
fn precomputed_cache_needs_distances() {
    let square = vec![vec![0.0, 1.0, 3.0], vec![1.0, 0.0, 2.0], vec![3.0, 2.0, 0.0]];
    let cache = CohesionCache::from_points(square, Metric::Precomputed, None, &Options::default()).unwrap();
    assert!(cache.reference().is_none());
    assert!(cache.query(QueryPoint::Point(&[0.0])).is_err());
    let out = cache.query(QueryPoint::Distances(&[9.0, 8.0, 6.0])).unwrap();
    assert_eq!(out.epsilon, 0.0);
}

#[test]
fn lazy_network_at_scale() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let pts = cloud(&mut rng, 300, 2, Cloud::Uniform);
    let cache = CohesionCache::from_points(pts, Metric::Euclidean, None, &Options::default()).unwrap();
    let batch = cohesion_matrix(cache.dissimilarities());
    assert!(cache.lazy_network().max_abs_diff(&batch) < 1e-12);
}

#[test]
fn loads_from_text() {
    let text = "PALDCACHE v1\nn=2\ntau=2.5e-1\n2\n1.0\n";
    let cache = CohesionCache::read_from(text, Path::new("inline")).unwrap();
    let out = cache.query_distances(&[0.5, 1.5]).unwrap();
    assert!((out.tau_updated - 7.0 / 36.0).abs() < 1e-15);
}
