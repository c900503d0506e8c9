//! Plain-text cache files.
//!
//! ```text
//! PALDCACHE v1
//! n=<int>
//! tau=<17 significant digits>
//! <upper-triangular focus sizes, one matrix row per line>
//! <upper-triangular dissimilarities, 17 significant digits>
//! labels:            (optional)
//! <one label per line>
//! ```
//!
//! A `tolerance=<value>` line follows `tau=` when the cache was built with a
//! non-zero tie tolerance.

use std::fs;
use std::io::{self, Write};
use std::path::Path;
use std::time::SystemTime;

use super::CohesionCache;
use crate::cohesion::{threshold_from_sizes, Tolerance};
use crate::dissimilarity::DissimilarityMatrix;
use crate::error::{PaldError, Result};
use crate::pairs::{pair_count, PairMatrix};

pub const FORMAT_VERSION: u32 = 1;
const MAGIC: &str = "PALDCACHE";
const LABELS_HEADER: &str = "labels:";

/// Formats `x` with 17 significant digits, which round-trips every f64.
pub fn sig17(x: f64) -> String {
    format!("{x:.16e}")
}

pub(super) fn write(cache: &CohesionCache, out: &mut impl Write) -> io::Result<()> {
    let n = cache.n();
    writeln!(out, "{MAGIC} v{FORMAT_VERSION}")?;
    writeln!(out, "n={n}")?;
    writeln!(out, "tau={}", sig17(cache.tau_ref()))?;
    if cache.tolerance().value() != 0.0 {
        writeln!(out, "tolerance={}", sig17(cache.tolerance().value()))?;
    }
    write_upper(out, n, cache.sizes().as_upper(), |v| v.to_string())?;
    write_upper(out, n, cache.dissimilarities().pairs().as_upper(), |&v| sig17(v))?;
    if let Some(labels) = cache.labels() {
        writeln!(out, "{LABELS_HEADER}")?;
        for label in labels {
            writeln!(out, "{label}")?;
        }
    }
    Ok(())
}

fn write_upper<T>(
    out: &mut impl Write,
    n: usize,
    values: &[T],
    fmt: impl Fn(&T) -> String,
) -> io::Result<()> {
    let mut rest = values;
    for x in 0..n - 1 {
        let (row, tail) = rest.split_at(n - x - 1);
        let line: Vec<String> = row.iter().map(&fmt).collect();
        writeln!(out, "{}", line.join(" "))?;
        rest = tail;
    }
    Ok(())
}

pub(super) fn save(cache: &CohesionCache, path: &Path) -> Result<()> {
    let io_err = |source| PaldError::Io {
        path: path.to_path_buf(),
        source,
    };
    let file = fs::File::create(path).map_err(io_err)?;
    let mut out = io::BufWriter::new(file);
    write(cache, &mut out).map_err(io_err)?;
    out.flush().map_err(io_err)
}

pub(super) fn load(path: &Path) -> Result<CohesionCache> {
    let io_err = |source| PaldError::Io {
        path: path.to_path_buf(),
        source,
    };
    let text = fs::read_to_string(path).map_err(io_err)?;
    let built_at = fs::metadata(path)
        .and_then(|m| m.modified())
        .unwrap_or_else(|_| SystemTime::now());
    parse(&text, path, built_at)
}

struct Lines<'a> {
    path: &'a Path,
    inner: std::iter::Peekable<std::iter::Enumerate<std::str::Lines<'a>>>,
    last: usize,
}

impl<'a> Lines<'a> {
    fn err(&self, line: usize, message: impl Into<String>) -> PaldError {
        PaldError::Format {
            path: self.path.to_path_buf(),
            line,
            message: message.into(),
        }
    }

    fn next_line(&mut self, what: &str) -> Result<(usize, &'a str)> {
        match self.inner.next() {
            Some((i, l)) => {
                self.last = i + 1;
                Ok((i + 1, l.strip_suffix('\r').unwrap_or(l)))
            }
            None => Err(self.err(self.last + 1, format!("unexpected end of file, expected {what}"))),
        }
    }

    fn key_value(&mut self, key: &str) -> Result<(usize, &'a str)> {
        let (line, text) = self.next_line(&format!("`{key}=`"))?;
        match text.strip_prefix(key).and_then(|r| r.strip_prefix('=')) {
            Some(v) => Ok((line, v.trim())),
            None => Err(self.err(line, format!("expected `{key}=...`, found {text:?}"))),
        }
    }

    /// Reads `count` whitespace-separated tokens that may span lines.
    fn tokens<T>(&mut self, count: usize, what: &str, parse: impl Fn(&str) -> Option<T>) -> Result<Vec<T>> {
        let mut out = Vec::with_capacity(count);
        while out.len() < count {
            let (line, text) = self.next_line(what)?;
            for tok in text.split_whitespace() {
                if out.len() == count {
                    return Err(self.err(line, format!("too many {what} values")));
                }
                out.push(
                    parse(tok).ok_or_else(|| self.err(line, format!("invalid {what} value {tok:?}")))?,
                );
            }
        }
        Ok(out)
    }
}

pub(super) fn parse(text: &str, path: &Path, built_at: SystemTime) -> Result<CohesionCache> {
    let mut lines = Lines {
        path,
        inner: text.lines().enumerate().peekable(),
        last: 0,
    };

    let (line, header) = lines.next_line("header")?;
    let version = header
        .strip_prefix(MAGIC)
        .and_then(|r| r.trim().strip_prefix('v'))
        .ok_or_else(|| lines.err(line, format!("not a cache file (header {header:?})")))?;
    match version.parse::<u32>() {
        Ok(FORMAT_VERSION) => {}
        _ => return Err(lines.err(line, format!("unsupported version {version:?}"))),
    }

    let (line, n) = lines.key_value("n")?;
    let n: usize = n
        .parse()
        .ok()
        .filter(|&n| n >= 2)
        .ok_or_else(|| lines.err(line, format!("invalid point count {n:?}")))?;
    let (tau_line, tau) = lines.key_value("tau")?;
    let tau: f64 = tau
        .parse()
        .ok()
        .filter(|t: &f64| t.is_finite() && *t > 0.0)
        .ok_or_else(|| lines.err(tau_line, format!("invalid threshold {tau:?}")))?;

    let mut tolerance = Tolerance::EXACT;
    if let Some((_, l)) = lines.inner.peek() {
        if l.starts_with("tolerance=") {
            let (line, v) = lines.key_value("tolerance")?;
            tolerance = v
                .parse()
                .ok()
                .and_then(|v| Tolerance::new(v).ok())
                .ok_or_else(|| lines.err(line, format!("invalid tolerance {v:?}")))?;
        }
    }

    let pairs = pair_count(n);
    let sizes = lines.tokens(pairs, "focus size", |t| {
        t.parse::<u32>().ok().filter(|&v| v >= 2 && v as usize <= n)
    })?;
    let values = lines.tokens(pairs, "dissimilarity", |t| t.parse::<f64>().ok())?;
    let dissimilarities = DissimilarityMatrix::from_upper(n, values).map_err(|e| lines.err(lines.last, e.to_string()))?;
    let sizes = PairMatrix::from_upper(n, sizes).expect("token count checked");

    let recomputed = threshold_from_sizes(n, sizes.as_upper().iter().map(|&v| f64::from(v)));
    if ((recomputed - tau) / tau).abs() > 1e-12 {
        return Err(lines.err(
            tau_line,
            format!("threshold {tau} disagrees with focus sizes ({recomputed})"),
        ));
    }

    let mut labels = None;
    while let Some((i, l)) = lines.inner.peek().copied() {
        if l.trim().is_empty() {
            lines.inner.next();
            continue;
        }
        if l.trim_end() != LABELS_HEADER {
            return Err(lines.err(i + 1, format!("unexpected content {l:?}")));
        }
        lines.next_line("labels")?;
        let mut read = Vec::with_capacity(n);
        for _ in 0..n {
            let (_, label) = lines.next_line("label")?;
            read.push(label.to_string());
        }
        labels = Some(read);
        if let Some((i, l)) = lines.inner.find(|(_, l)| !l.trim().is_empty()) {
            return Err(lines.err(i + 1, format!("unexpected content after labels {l:?}")));
        }
        break;
    }

    Ok(CohesionCache::from_parts(
        sizes,
        tau,
        dissimilarities,
        labels,
        tolerance,
        built_at,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cohesion::Options;
    use crate::dissimilarity::Metric;

    fn cache(labels: bool) -> CohesionCache {
        let pts = vec![vec![0.0], vec![1.0], vec![3.0]];
        let labels = labels.then(|| vec!["a".to_string(), "b b".into(), "a".into()]);
        CohesionCache::from_points(pts, Metric::Euclidean, labels, &Options::default()).unwrap()
    }

    fn to_text(c: &CohesionCache) -> String {
        let mut buf = Vec::new();
        write(c, &mut buf).unwrap();
        String::from_utf8(buf).unwrap()
    }

    #[test]
    fn layout_is_stable() {
        let text = to_text(&cache(true));
        assert_eq!(
            text,
            "PALDCACHE v1\nn=3\ntau=1.9444444444444442e-1\n2 3\n3\n\
             1.0000000000000000e0 3.0000000000000000e0\n2.0000000000000000e0\n\
             labels:\na\nb b\na\n"
        );
    }

    #[test]
    fn round_trip_preserves_fields() {
        for labels in [false, true] {
            let c = cache(labels);
            let back = parse(&to_text(&c), Path::new("mem"), SystemTime::now()).unwrap();
            assert_eq!(back.n(), c.n());
            assert_eq!(back.sizes(), c.sizes());
            assert_eq!(back.tau_ref().to_bits(), c.tau_ref().to_bits());
            assert_eq!(back.dissimilarities(), c.dissimilarities());
            assert_eq!(back.labels(), c.labels());
        }
    }

    #[test]
    fn truncated_file_reports_line() {
        let text = to_text(&cache(false));
        let cut: String = text.lines().take(4).map(|l| format!("{l}\n")).collect();
        match parse(&cut, Path::new("cut"), SystemTime::now()).unwrap_err() {
            PaldError::Format { line, message, .. } => {
                assert_eq!(line, 5);
                assert!(message.contains("unexpected end"), "{message}");
            }
            e => panic!("wrong error {e}"),
        }
    }

    #[test]
    fn unknown_version_is_rejected() {
        let text = to_text(&cache(false)).replacen("v1", "v999", 1);
        match parse(&text, Path::new("v"), SystemTime::now()).unwrap_err() {
            PaldError::Format { line: 1, message, .. } => {
                assert!(message.contains("unsupported version"))
            }
            e => panic!("wrong error {e}"),
        }
    }

    #[test]
    fn corrupt_values_are_rejected() {
        let text = to_text(&cache(false)).replacen("2 3\n", "2 x\n", 1);
        assert!(matches!(
            parse(&text, Path::new("c"), SystemTime::now()).unwrap_err(),
            PaldError::Format { line: 4, .. }
        ));
        let text = to_text(&cache(false)).replacen("2 3\n", "2 2\n", 1);
        assert!(matches!(
            parse(&text, Path::new("c"), SystemTime::now()).unwrap_err(),
            PaldError::Format { line: 3, .. }
        ));
        let text = format!("{}garbage\n", to_text(&cache(false)));
        assert!(parse(&text, Path::new("c"), SystemTime::now()).is_err());
    }

    #[test]
    fn tolerance_line_round_trips() {
        let pts = vec![vec![0.0], vec![1.0], vec![3.0]];
        let opts = Options {
            tolerance: Tolerance::new(1e-9).unwrap(),
            parallel: false,
        };
        let c = CohesionCache::from_points(pts, Metric::Euclidean, None, &opts).unwrap();
        let text = to_text(&c);
        assert!(text.contains("\ntolerance=1.0000000000000001e-9\n"), "{text}");
        let back = parse(&text, Path::new("t"), SystemTime::now()).unwrap();
        assert_eq!(back.tolerance(), c.tolerance());
    }
}
