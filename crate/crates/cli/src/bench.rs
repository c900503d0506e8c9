//! Batch PaLD on `n + 1` points against the online path on `n` points plus
//! one query.

use std::fmt::Write as _;
use std::time::Instant;

use pald::cache::sig17;
use pald::{cohesion_matrix_with, CohesionCache, DissimilarityMatrix, Metric, Options, QueryPoint};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const HEADER: &str = "n,batch_s,build_s,query_s,lazy_network_s,total_online_s,reps";

/// Mean stage times for one reference size.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BenchRecord {
    pub n: usize,
    pub batch_seconds: f64,
    pub build_seconds: f64,
    pub query_seconds: f64,
    pub lazy_network_seconds: f64,
    pub repetitions: usize,
}

impl BenchRecord {
    /// Build, lazy network and query together.
    pub fn total_online_seconds(&self) -> f64 {
        self.build_seconds + self.lazy_network_seconds + self.query_seconds
    }
}

fn unit_square(n: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| vec![rng.random::<f64>(), rng.random::<f64>()])
        .collect()
}

fn time<T>(f: impl FnOnce() -> T) -> (T, f64) {
    let start = Instant::now();
    let out = f();
    (out, start.elapsed().as_secs_f64())
}

pub fn measure(n: usize, reps: usize, seed: u64, options: &Options) -> Result<BenchRecord, String> {
    let mut sums = [0.0; 4];
    for rep in 0..reps {
        let mut points = unit_square(n + 1, seed.wrapping_add((n * 1_000_003 + rep) as u64));
        let (batch, batch_s) = time(|| {
            let d = DissimilarityMatrix::from_points(&points, Metric::Euclidean)?;
            cohesion_matrix_with(&d, options)
        });
        batch.map_err(|e| e.to_string())?;

        let t = points.pop().expect("n + 1 points");
        let (cache, build_s) = time(|| CohesionCache::from_points(points, Metric::Euclidean, None, options));
        let cache = cache.map_err(|e| e.to_string())?;
        let (_, lazy_s) = time(|| cache.lazy_network_with(options.parallel));
        let (outcome, query_s) = time(|| cache.query(QueryPoint::Point(&t)));
        outcome.map_err(|e| e.to_string())?;

        for (sum, v) in sums.iter_mut().zip([batch_s, build_s, query_s, lazy_s]) {
            *sum += v;
        }
    }
    let mean = |i: usize| sums[i] / reps as f64;
    Ok(BenchRecord {
        n,
        batch_seconds: mean(0),
        build_seconds: mean(1),
        query_seconds: mean(2),
        lazy_network_seconds: mean(3),
        repetitions: reps,
    })
}

/// CSV table over `sizes`; the batch/query ratio of each size goes to stderr.
pub fn run(sizes: &[usize], reps: usize, seed: u64, options: &Options) -> Result<String, String> {
    if reps == 0 {
        return Err("--reps must be at least 1".into());
    }
    if let Some(&n) = sizes.iter().find(|&&n| n < 3) {
        return Err(format!("benchmark sizes must be at least 3, got {n}"));
    }
    let mut out = format!("{HEADER}\n");
    for &n in sizes {
        let r = measure(n, reps, seed, options)?;
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.n,
            sig17(r.batch_seconds),
            sig17(r.build_seconds),
            sig17(r.query_seconds),
            sig17(r.lazy_network_seconds),
            sig17(r.total_online_seconds()),
            r.repetitions
        );
        eprintln!("n = {n}: batch / query = {:.1}x", r.batch_seconds / r.query_seconds);
    }
    Ok(out)
}
