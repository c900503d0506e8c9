//! CSV ingestion.
//!
//! Rows are points. A header is optional and detected by the presence of any
//! non-numeric field in the first record. With a header, the columns `label`,
//! `anomaly` (0/1) and `id` are pulled out; every other column must be numeric.

use std::fs::File;
use std::path::Path;

use crate::dissimilarity::check_rows;
use crate::error::{PaldError, Result};

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Dataset {
    pub points: Vec<Vec<f64>>,
    pub labels: Option<Vec<String>>,
    /// `true` marks an anomaly.
    pub anomaly: Option<Vec<bool>>,
    pub ids: Option<Vec<String>>,
    pub feature_names: Option<Vec<String>>,
}

impl Dataset {
    pub fn new(points: Vec<Vec<f64>>) -> Result<Self> {
        let ds = Dataset {
            points,
            ..Default::default()
        };
        ds.validate()?;
        Ok(ds)
    }

    pub fn with_labels(mut self, labels: Vec<String>) -> Result<Self> {
        self.labels = Some(labels);
        self.validate()?;
        Ok(self)
    }

    pub fn n(&self) -> usize {
        self.points.len()
    }

    pub fn dim(&self) -> usize {
        self.points.first().map_or(0, Vec::len)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n() < 2 {
            return Err(PaldError::TooFewPoints {
                required: 2,
                got: self.n(),
            });
        }
        check_rows(&self.points)?;
        let n = self.n();
        let lens = [
            self.labels.as_ref().map(Vec::len),
            self.anomaly.as_ref().map(Vec::len),
            self.ids.as_ref().map(Vec::len),
        ];
        for len in lens.into_iter().flatten() {
            if len != n {
                return Err(PaldError::SizeMismatch(format!(
                    "{len} annotations for {n} points"
                )));
            }
        }
        Ok(())
    }

    /// Rows at `indices`, annotations included.
    pub fn select(&self, indices: &[usize]) -> Dataset {
        let pick = |v: &Vec<String>| indices.iter().map(|&i| v[i].clone()).collect();
        Dataset {
            points: indices.iter().map(|&i| self.points[i].clone()).collect(),
            labels: self.labels.as_ref().map(pick),
            anomaly: self
                .anomaly
                .as_ref()
                .map(|a| indices.iter().map(|&i| a[i]).collect()),
            ids: self.ids.as_ref().map(pick),
            feature_names: self.feature_names.clone(),
        }
    }

    pub fn from_csv_path(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|source| PaldError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_reader(file, path)
    }

    pub fn from_reader(reader: impl std::io::Read, origin: &Path) -> Result<Self> {
        let records = read_records(reader, origin)?;
        let fmt = |line: usize, message: String| PaldError::Format {
            path: origin.to_path_buf(),
            line,
            message,
        };
        let Some(first) = records.first() else {
            return Err(fmt(1, "empty file".into()));
        };
        let has_header = first.iter().any(|f| f.trim().parse::<f64>().is_err());
        let (header, body) = if has_header {
            (Some(first.clone()), &records[1..])
        } else {
            (None, &records[..])
        };

        let width = first.len();
        let find = |name: &str| {
            header
                .as_ref()
                .and_then(|h| h.iter().position(|c| c.trim().eq_ignore_ascii_case(name)))
        };
        let (label_col, anomaly_col, id_col) = (find("label"), find("anomaly"), find("id"));
        let special = [label_col, anomaly_col, id_col];
        let feature_cols: Vec<usize> = (0..width).filter(|c| !special.contains(&Some(*c))).collect();

        let mut ds = Dataset {
            feature_names: header
                .as_ref()
                .map(|h| feature_cols.iter().map(|&c| h[c].trim().to_string()).collect()),
            labels: label_col.map(|_| Vec::new()),
            anomaly: anomaly_col.map(|_| Vec::new()),
            ids: id_col.map(|_| Vec::new()),
            ..Default::default()
        };
        let offset = usize::from(has_header) + 1;
        for (i, rec) in body.iter().enumerate() {
            let line = i + offset;
            if rec.len() != width {
                return Err(fmt(line, format!("expected {width} fields, found {}", rec.len())));
            }
            let row = feature_cols
                .iter()
                .map(|&c| {
                    let f = rec[c].trim();
                    f.parse::<f64>()
                        .ok()
                        .filter(|v| v.is_finite())
                        .ok_or_else(|| fmt(line, format!("non-numeric feature {f:?}")))
                })
                .collect::<Result<Vec<f64>>>()?;
            ds.points.push(row);
            if let (Some(c), Some(l)) = (label_col, ds.labels.as_mut()) {
                l.push(rec[c].trim().to_string());
            }
            if let (Some(c), Some(a)) = (anomaly_col, ds.anomaly.as_mut()) {
                a.push(match rec[c].trim() {
                    "1" | "1.0" | "true" => true,
                    "0" | "0.0" | "false" => false,
                    other => return Err(fmt(line, format!("anomaly must be 0 or 1, found {other:?}"))),
                });
            }
            if let (Some(c), Some(ids)) = (id_col, ds.ids.as_mut()) {
                ids.push(rec[c].trim().to_string());
            }
        }
        ds.validate().map_err(|e| fmt(offset, e.to_string()))?;
        Ok(ds)
    }
}

fn read_records(reader: impl std::io::Read, origin: &Path) -> Result<Vec<Vec<String>>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| PaldError::Format {
            path: origin.to_path_buf(),
            line: i + 1,
            message: e.to_string(),
        })?;
        if rec.iter().all(|f| f.is_empty()) {
            continue;
        }
        out.push(rec.iter().map(str::to_string).collect());
    }
    Ok(out)
}

/// A purely numeric CSV: every record becomes a row.
pub fn read_numeric_csv(path: impl AsRef<Path>) -> Result<Vec<Vec<f64>>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|source| PaldError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    read_records(file, path)?
        .into_iter()
        .enumerate()
        .map(|(i, rec)| {
            rec.iter()
                .map(|f| {
                    f.parse::<f64>().map_err(|_| PaldError::Format {
                        path: path.to_path_buf(),
                        line: i + 1,
                        message: format!("non-numeric value {f:?}"),
                    })
                })
                .collect()
        })
        .collect()
}
