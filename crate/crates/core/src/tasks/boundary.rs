use rayon::prelude::*;
use serde::Serialize;

use crate::cache::{CohesionCache, QueryPoint};
use crate::error::{PaldError, Result};
use crate::tasks::classify::{classify_outcome, Method};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bounds {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
}

impl Bounds {
    /// Bounding box of `points` widened by `pad` times its extent on each side.
    pub fn around(points: &[Vec<f64>], pad: f64) -> Self {
        let (mut x_min, mut x_max) = (f64::INFINITY, f64::NEG_INFINITY);
        let (mut y_min, mut y_max) = (f64::INFINITY, f64::NEG_INFINITY);
        for p in points {
            x_min = x_min.min(p[0]);
            x_max = x_max.max(p[0]);
            y_min = y_min.min(p[1]);
            y_max = y_max.max(p[1]);
        }
        let (dx, dy) = ((x_max - x_min) * pad, (y_max - y_min) * pad);
        Bounds {
            x_min: x_min - dx,
            x_max: x_max + dx,
            y_min: y_min - dy,
            y_max: y_max + dy,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridCell {
    pub x: f64,
    pub y: f64,
    /// `None` when the cell has no strong neighbor.
    pub class: Option<String>,
}

/// Classifies the centre of every cell of a `steps.0 x steps.1` grid, row by
/// row from `y_min`. A centre that coincides with a reference point takes that
/// point's label.
pub fn decision_boundary_grid(
    cache: &CohesionCache,
    bounds: Bounds,
    steps: (usize, usize),
    method: Method,
) -> Result<Vec<GridCell>> {
    let labels = cache.labels().ok_or(PaldError::NoLabels)?;
    let reference = cache.reference().ok_or(PaldError::MissingReference)?;
    let dim = reference.points[0].len();
    if dim != 2 {
        return Err(PaldError::NotTwoDimensional(dim));
    }
    let (nx, ny) = steps;
    let (wx, wy) = (
        (bounds.x_max - bounds.x_min) / nx as f64,
        (bounds.y_max - bounds.y_min) / ny as f64,
    );
    (0..nx * ny)
        .into_par_iter()
        .map(|cell| {
            let (i, j) = (cell % nx, cell / nx);
            let x = bounds.x_min + (i as f64 + 0.5) * wx;
            let y = bounds.y_min + (j as f64 + 0.5) * wy;
            let point = [x, y];
            if let Some(k) = reference.points.iter().position(|p| p[..] == point) {
                return Ok(GridCell {
                    x,
                    y,
                    class: Some(labels[k].clone()),
                });
            }
            let outcome = cache.query(QueryPoint::Point(&point))?;
            let class = if outcome.is_outlier {
                None
            } else {
                Some(classify_outcome(&outcome, labels, method)?.predicted)
            };
            Ok(GridCell { x, y, class })
        })
        .collect()
}
