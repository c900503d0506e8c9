//! `pald`: build cohesion caches, query them, cluster, evaluate, benchmark.

mod bench;

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use pald::cache::sig17;
use pald::dataset::read_numeric_csv;
use pald::gpald::{fuse_dissimilarities_with, generalized_cohesion};
use pald::tasks::{
    cross_validate_anomaly, cross_validate_classifier, decision_boundary_grid,
    evaluate_anomaly_split, evaluate_classifier_split, Bounds, Classifier, EvalReport, Method,
    Scorer,
};
use pald::{
    cohesion_matrix_with, cohesion_network, natural_threshold, strong_components, CohesionCache,
    Dataset, DissimilarityMatrix, Metric, Options, QueryPoint, Tolerance,
};
use serde::Serialize;

type CliResult<T> = Result<T, String>;

#[derive(Parser)]
#[command(name = "pald", version, about = "Partitioned local depth with an online query cache")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct Common {
    /// Worker threads; 1 runs sequentially with a fixed summation order.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Distances within this much of a focus radius count as inside it.
    #[arg(long, global = true, default_value_t = 0.0)]
    tolerance: f64,
    /// Output path; standard output when omitted.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Args)]
struct Source {
    /// CSV of points, optionally with a header holding `label`, `anomaly`, `id` columns.
    #[arg(long, conflicts_with = "distances")]
    input: Option<PathBuf>,
    /// Square CSV of precomputed dissimilarities; repeat to fuse several.
    #[arg(long)]
    distances: Vec<PathBuf>,
    #[arg(long, default_value = "euclidean")]
    metric: Metric,
}

#[derive(Subcommand)]
enum Command {
    /// Precompute the cohesion cache for a reference set.
    Build {
        #[command(flatten)]
        source: Source,
        /// Where to write the cache.
        #[arg(long)]
        cache: PathBuf,
    },
    /// Extend the cached cohesion network to one new point.
    Query {
        #[arg(long)]
        cache: PathBuf,
        /// Reference CSV the cache was built from; needed with `--point`.
        #[arg(long, requires = "point")]
        input: Option<PathBuf>,
        #[arg(long, default_value = "euclidean")]
        metric: Metric,
        /// Comma-separated coordinates of the test point.
        #[arg(long, allow_hyphen_values = true, conflicts_with = "distances")]
        point: Option<String>,
        /// Comma-separated dissimilarities from the test point to every reference point.
        #[arg(long, allow_hyphen_values = true)]
        distances: Option<String>,
    },
    /// Cluster by the connected components of the strong links.
    Cluster {
        #[command(flatten)]
        source: Source,
        /// Comma-separated fusion weights, one per `--distances` file.
        #[arg(long)]
        weights: Option<String>,
    },
    /// Evaluate online anomaly scores by ROC and PR AUC.
    Anomaly {
        #[arg(long)]
        input: PathBuf,
        /// Held-out test CSV; stratified folds over `--input` when omitted.
        #[arg(long)]
        test: Option<PathBuf>,
        #[arg(long, default_value = "euclidean")]
        metric: Metric,
        /// `pald` or `knn`.
        #[arg(long, default_value = "pald")]
        score: String,
        #[arg(long, default_value_t = 5)]
        k: usize,
        #[arg(long, default_value_t = 5)]
        folds: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Evaluate semi-supervised classification accuracy.
    Classify {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        test: Option<PathBuf>,
        #[arg(long, default_value = "euclidean")]
        metric: Metric,
        /// One of count_to, count_from, sum_to, sum_from, max_to, max_from, knn.
        #[arg(long, default_value = "count_to")]
        method: String,
        #[arg(long, default_value_t = 5)]
        k: usize,
        #[arg(long, default_value_t = 10)]
        folds: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Time batch PaLD against cache build, lazy network, and one query.
    Bench {
        /// Comma-separated reference sizes.
        #[arg(long, default_value = "7,15,31,63,127,239,499")]
        sizes: String,
        #[arg(long, default_value_t = 3)]
        reps: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Classify every cell centre of a grid over a labelled 2-d reference set.
    Boundary {
        /// Labelled 2-d CSV.
        #[arg(long)]
        input: PathBuf,
        /// Cache built from `--input`, to skip the build.
        #[arg(long)]
        cache: Option<PathBuf>,
        #[arg(long, default_value = "euclidean")]
        metric: Metric,
        #[arg(long, default_value = "count_to")]
        method: Method,
        /// Cells along x and y, as `nx,ny`.
        #[arg(long, default_value = "100,100")]
        grid: String,
        /// `x_min,x_max,y_min,y_max`; the padded bounding box of the data when omitted.
        #[arg(long, allow_hyphen_values = true)]
        bounds: Option<String>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(message) => {
            eprintln!("error: {}", message.replace('\n', " "));
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> CliResult<()> {
    let common = &cli.common;
    let options = options(common)?;
    match &cli.command {
        Command::Build { source, cache } => cmd_build(source, cache, &options),
        Command::Query { cache, input, metric, point, distances } => {
            cmd_query(common, cache, input.as_deref(), *metric, point.as_deref(), distances.as_deref())
        }
        Command::Cluster { source, weights } => cmd_cluster(common, source, weights.as_deref(), &options),
        Command::Anomaly { input, test, metric, score, k, folds, seed } => {
            let scorer = match score.as_str() {
                "pald" => Scorer::Pald,
                "knn" => Scorer::Knn { k: *k },
                other => return Err(format!("unknown scorer {other:?}; expected pald or knn")),
            };
            cmd_anomaly(common, input, test.as_deref(), *metric, scorer, *folds, *seed, &options)
        }
        Command::Classify { input, test, metric, method, k, folds, seed } => {
            let classifier = match method.as_str() {
                "knn" => Classifier::Knn { k: *k },
                m => Classifier::Pald(m.parse().map_err(err)?),
            };
            cmd_classify(common, input, test.as_deref(), *metric, classifier, *folds, *seed, &options)
        }
        Command::Bench { sizes, reps, seed } => {
            let sizes: Vec<usize> = parse_list(sizes, "sizes")?;
            let table = bench::run(&sizes, *reps, *seed, &options)?;
            emit(common.out.as_deref(), &table)
        }
        Command::Boundary { input, cache, metric, method, grid, bounds } => {
            cmd_boundary(common, input, cache.as_deref(), *metric, *method, grid, bounds.as_deref(), &options)
        }
    }
}

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

fn options(common: &Common) -> CliResult<Options> {
    let tolerance = Tolerance::new(common.tolerance).map_err(err)?;
    let parallel = match common.threads {
        Some(0) => return Err("--threads must be at least 1".into()),
        Some(1) => false,
        Some(t) => {
            rayon::ThreadPoolBuilder::new()
                .num_threads(t)
                .build_global()
                .map_err(err)?;
            true
        }
        None => true,
    };
    Ok(Options { tolerance, parallel })
}

fn parse_list<T: std::str::FromStr>(text: &str, what: &str) -> CliResult<Vec<T>> {
    text.split(',')
        .map(|f| {
            f.trim()
                .parse()
                .map_err(|_| format!("invalid value {:?} in --{what}", f.trim()))
        })
        .collect()
}

fn emit(out: Option<&Path>, text: &str) -> CliResult<()> {
    match out {
        Some(path) => fs::write(path, text).map_err(|e| format!("{}: {e}", path.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn to_json(value: &impl Serialize) -> CliResult<String> {
    serde_json::to_string_pretty(value).map(|s| s + "\n").map_err(err)
}

fn read_dataset(path: &Path) -> CliResult<Dataset> {
    Dataset::from_csv_path(path).map_err(err)
}

fn read_distances(path: &Path) -> CliResult<DissimilarityMatrix> {
    let rows = read_numeric_csv(path).map_err(err)?;
    DissimilarityMatrix::from_square(&rows).map_err(|e| format!("{}: {e}", path.display()))
}

fn cmd_build(source: &Source, cache_path: &Path, options: &Options) -> CliResult<()> {
    let cache = match (&source.input, source.distances.as_slice()) {
        (Some(input), _) => {
            let ds = read_dataset(input)?;
            CohesionCache::from_points(ds.points, source.metric, ds.labels, options).map_err(err)?
        }
        (None, [path]) => CohesionCache::build_with(read_distances(path)?, None, options).map_err(err)?,
        (None, []) => return Err("build needs --input or --distances".into()),
        (None, _) => return Err("build takes a single --distances file".into()),
    };
    cache.save(cache_path).map_err(err)?;
    println!("n: {}", cache.n());
    println!("tau: {:.6}", cache.tau_ref());
    Ok(())
}

/// Loads a cache and attaches the reference points it was built from.
fn load_cache(cache_path: &Path, input: Option<&Path>, metric: Metric) -> CliResult<CohesionCache> {
    let cache = CohesionCache::load(cache_path).map_err(err)?;
    match input {
        Some(path) => {
            let ds = read_dataset(path)?;
            cache
                .with_reference(ds.points, metric)
                .map_err(|e| format!("{} does not match {}: {e}", path.display(), cache_path.display()))
        }
        None => Ok(cache),
    }
}

fn cmd_query(
    common: &Common,
    cache_path: &Path,
    input: Option<&Path>,
    metric: Metric,
    point: Option<&str>,
    distances: Option<&str>,
) -> CliResult<()> {
    let cache = load_cache(cache_path, input, metric)?;
    let outcome = match (point, distances) {
        (Some(p), _) => cache.query(QueryPoint::Point(&parse_list::<f64>(p, "point")?)),
        (None, Some(d)) => cache.query(QueryPoint::Distances(&parse_list::<f64>(d, "distances")?)),
        (None, None) => return Err("query needs --point or --distances".into()),
    }
    .map_err(err)?;
    let text = match common.format.unwrap_or(Format::Json) {
        Format::Json => to_json(&outcome)?,
        Format::Csv => {
            let mut s = String::from(
                "index,cohesion_to,cohesion_from,weight,strong,self_cohesion,epsilon,tau_updated,is_outlier\n",
            );
            for w in 0..cache.n() {
                let _ = writeln!(
                    s,
                    "{w},{},{},{},{},{},{},{},{}",
                    sig17(outcome.cohesion_to[w]),
                    sig17(outcome.cohesion_from[w]),
                    sig17(outcome.weight(w)),
                    outcome.strong_neighbors.contains(&w),
                    sig17(outcome.self_cohesion),
                    sig17(outcome.epsilon),
                    sig17(outcome.tau_updated),
                    outcome.is_outlier,
                );
            }
            s
        }
    };
    emit(common.out.as_deref(), &text)
}

#[derive(Serialize)]
struct ClusterReport {
    n: usize,
    tau: f64,
    clusters: Vec<Vec<usize>>,
}

fn cmd_cluster(common: &Common, source: &Source, weights: Option<&str>, options: &Options) -> CliResult<()> {
    let mut labels = None;
    let cohesion = match (&source.input, source.distances.as_slice()) {
        (Some(input), _) => {
            let ds = read_dataset(input)?;
            labels = ds.labels;
            let d = DissimilarityMatrix::from_points(&ds.points, source.metric).map_err(err)?;
            cohesion_matrix_with(&d, options).map_err(err)?
        }
        (None, []) => return Err("cluster needs --input or --distances".into()),
        (None, [path]) if weights.is_none() => {
            cohesion_matrix_with(&read_distances(path)?, options).map_err(err)?
        }
        (None, paths) => {
            let ds: Vec<DissimilarityMatrix> = paths.iter().map(|p| read_distances(p)).collect::<CliResult<_>>()?;
            let w = match weights {
                Some(w) => parse_list::<f64>(w, "weights")?,
                None => vec![1.0 / ds.len() as f64; ds.len()],
            };
            let (r, q) = fuse_dissimilarities_with(&ds, &w, options.tolerance).map_err(err)?;
            generalized_cohesion(&r, &q).map_err(err)?
        }
    };
    let clusters = strong_components(&cohesion_network(&cohesion));
    let report = ClusterReport {
        n: cohesion.n(),
        tau: natural_threshold(&cohesion),
        clusters,
    };
    let text = match common.format.unwrap_or(Format::Csv) {
        Format::Json => to_json(&report)?,
        Format::Csv => {
            let mut assignment = vec![0; report.n];
            for (c, members) in report.clusters.iter().enumerate() {
                members.iter().for_each(|&x| assignment[x] = c);
            }
            let mut s = String::from(if labels.is_some() { "index,cluster,label\n" } else { "index,cluster\n" });
            for (x, c) in assignment.iter().enumerate() {
                match &labels {
                    Some(l) => writeln!(s, "{x},{c},{}", l[x]),
                    None => writeln!(s, "{x},{c}"),
                }
                .map_err(err)?;
            }
            s
        }
    };
    emit(common.out.as_deref(), &text)?;
    if common.out.is_some() {
        println!("n: {}", report.n);
        println!("tau: {:.6}", report.tau);
        println!("clusters: {}", report.clusters.len());
    }
    Ok(())
}

/// Summary on standard output; per-point records to `--out` when given.
fn report(common: &Common, report: &EvalReport) -> CliResult<()> {
    match (&common.out, common.format) {
        (None, Some(Format::Json)) => emit(None, &to_json(report)?),
        (None, Some(Format::Csv)) => emit(None, &report.folds_csv()),
        (None, None) => emit(None, &report.summary()),
        (Some(path), format) => {
            let text = match format.unwrap_or(Format::Csv) {
                Format::Json => to_json(report)?,
                Format::Csv => {
                    let mut s = String::from("index,fold,truth,score,predicted,tie\n");
                    for p in &report.points {
                        let _ = writeln!(
                            s,
                            "{},{},{},{},{},{}",
                            p.index,
                            p.fold,
                            p.truth,
                            sig17(p.score),
                            p.predicted.as_deref().unwrap_or(""),
                            p.tie
                        );
                    }
                    s
                }
            };
            emit(Some(path), &text)?;
            emit(None, &report.summary())
        }
    }
}

fn anomaly_flags(ds: &Dataset, path: &Path) -> CliResult<Vec<bool>> {
    ds.anomaly
        .clone()
        .ok_or_else(|| format!("{}: no `anomaly` column", path.display()))
}

#[allow(clippy::too_many_arguments)]
fn cmd_anomaly(
    common: &Common,
    input: &Path,
    test: Option<&Path>,
    metric: Metric,
    scorer: Scorer,
    folds: usize,
    seed: u64,
    options: &Options,
) -> CliResult<()> {
    let train = read_dataset(input)?;
    let train_flags = anomaly_flags(&train, input)?;
    let result = match test {
        Some(test_path) => {
            let test = read_dataset(test_path)?;
            let test_flags = anomaly_flags(&test, test_path)?;
            evaluate_anomaly_split(&train.points, &train_flags, &test.points, &test_flags, scorer, metric, options)
        }
        None => cross_validate_anomaly(&train.points, &train_flags, folds, seed, scorer, metric, options),
    };
    report(common, &result.map_err(err)?)
}

fn class_labels(ds: &Dataset, path: &Path) -> CliResult<Vec<String>> {
    ds.labels
        .clone()
        .ok_or_else(|| format!("{}: no `label` column", path.display()))
}

#[allow(clippy::too_many_arguments)]
fn cmd_classify(
    common: &Common,
    input: &Path,
    test: Option<&Path>,
    metric: Metric,
    classifier: Classifier,
    folds: usize,
    seed: u64,
    options: &Options,
) -> CliResult<()> {
    let train = read_dataset(input)?;
    let train_labels = class_labels(&train, input)?;
    let result = match test {
        Some(test_path) => {
            let test = read_dataset(test_path)?;
            let test_labels = class_labels(&test, test_path)?;
            evaluate_classifier_split(&train.points, &train_labels, &test.points, &test_labels, classifier, metric, options)
        }
        None => cross_validate_classifier(&train.points, &train_labels, folds, seed, classifier, metric, options),
    };
    report(common, &result.map_err(err)?)
}

#[allow(clippy::too_many_arguments)]
fn cmd_boundary(
    common: &Common,
    input: &Path,
    cache_path: Option<&Path>,
    metric: Metric,
    method: Method,
    grid: &str,
    bounds: Option<&str>,
    options: &Options,
) -> CliResult<()> {
    let cache = match cache_path {
        Some(path) => {
            let cache = load_cache(path, Some(input), metric)?;
            if cache.labels().is_none() {
                return Err(format!("{}: the cache holds no class labels", path.display()));
            }
            cache
        }
        None => {
            let ds = read_dataset(input)?;
            let labels = class_labels(&ds, input)?;
            CohesionCache::from_points(ds.points, metric, Some(labels), options).map_err(err)?
        }
    };
    let steps = match parse_list::<usize>(grid, "grid")?.as_slice() {
        &[nx, ny] if nx > 0 && ny > 0 => (nx, ny),
        _ => return Err("--grid takes two positive counts, nx,ny".into()),
    };
    let bounds = match bounds {
        Some(text) => match parse_list::<f64>(text, "bounds")?.as_slice() {
            &[x_min, x_max, y_min, y_max] if x_min < x_max && y_min < y_max => Bounds { x_min, x_max, y_min, y_max },
            _ => return Err("--bounds takes x_min,x_max,y_min,y_max with min < max".into()),
        },
        None => {
            let reference = cache.reference().ok_or_else(|| err(pald::PaldError::MissingReference))?;
            Bounds::around(&reference.points, 0.1)
        }
    };
    let cells = decision_boundary_grid(&cache, bounds, steps, method).map_err(err)?;
    let text = match common.format.unwrap_or(Format::Csv) {
        Format::Json => to_json(&cells)?,
        Format::Csv => {
            let mut s = String::from("x,y,class\n");
            for c in &cells {
                let _ = writeln!(s, "{},{},{}", sig17(c.x), sig17(c.y), c.class.as_deref().unwrap_or(""));
            }
            s
        }
    };
    emit(common.out.as_deref(), &text)
}
