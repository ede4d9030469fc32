//! Exact Euclidean distance transform and marker extraction.
//!
//! The transform uses the separable lower-envelope-of-parabolas method
//! (one column pass, one row pass) on squared integer distances, so every
//! value is exact before the final square root.

use crate::error::Result;
use crate::raster::{check_unit, BinaryMask, MarkerMask};

/// Default marker threshold on the normalized distance map.
pub const DEFAULT_MARKER_THRESHOLD: f64 = 0.17;

/// Per-pixel distance from droplet pixels to the nearest background pixel.
///
/// Holds both the raw distances (pixel units) and the min-max normalized map
/// the marker step works on. Background pixels are 0 in both.
#[derive(Clone, Debug, PartialEq)]
pub struct DistanceMap {
    width: usize,
    height: usize,
    raw: Vec<f64>,
    values: Vec<f64>,
}

impl DistanceMap {
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    /// Distances in pixels, before normalization.
    pub fn raw(&self) -> &[f64] {
        &self.raw
    }

    /// Min-max normalized distances in `[0, 1]`.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.values[y * self.width + x]
    }

    /// Largest raw distance on the map.
    pub fn max_distance(&self) -> f64 {
        self.raw.iter().copied().fold(0.0, f64::max)
    }

    fn from_raw(width: usize, height: usize, raw: Vec<f64>) -> Self {
        let (min, max) = raw.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), &d| {
            (lo.min(d), hi.max(d))
        });
        let values = if max == 0.0 {
            vec![0.0; raw.len()]
        } else if max == min {
            raw.iter()
                .map(|&d| if d > 0.0 { 1.0 } else { 0.0 })
                .collect()
        } else {
            let span = max - min;
            raw.iter()
                .map(|&d| if d > 0.0 { (d - min) / span } else { 0.0 })
                .collect()
        };
        Self {
            width,
            height,
            raw,
            values,
        }
    }
}

const UNREACHED: f64 = f64::INFINITY;

/// Squared distance transform of one line. `f` holds 0 at sites and
/// `UNREACHED` elsewhere (or partial results from a previous pass).
fn squared_line(f: &[f64], out: &mut [f64], sites: &mut Vec<usize>, bounds: &mut Vec<f64>) {
    sites.clear();
    bounds.clear();
    for (q, &fq) in f.iter().enumerate() {
        if fq == UNREACHED {
            continue;
        }
        let qf = q as f64;
        let mut s = f64::NEG_INFINITY;
        while let Some(&v) = sites.last() {
            let vf = v as f64;
            s = ((fq + qf * qf) - (f[v] + vf * vf)) / (2.0 * (qf - vf));
            if s <= *bounds.last().expect("one bound per site") {
                sites.pop();
                bounds.pop();
                s = f64::NEG_INFINITY;
            } else {
                break;
            }
        }
        sites.push(q);
        bounds.push(s);
    }

    if sites.is_empty() {
        out.fill(UNREACHED);
        return;
    }
    let mut k = 0;
    for (q, slot) in out.iter_mut().enumerate() {
        let qf = q as f64;
        while k + 1 < sites.len() && bounds[k + 1] < qf {
            k += 1;
        }
        let v = sites[k];
        let dq = qf - v as f64;
        *slot = dq * dq + f[v];
    }
}

/// Squared distances to the nearest `false` cell of a `width x height` grid.
fn squared_edt(width: usize, height: usize, foreground: &[bool]) -> Vec<f64> {
    let mut grid: Vec<f64> = foreground
        .iter()
        .map(|&fg| if fg { UNREACHED } else { 0.0 })
        .collect();

    let mut sites = Vec::new();
    let mut bounds = Vec::new();

    let mut column = vec![0.0; height];
    let mut column_out = vec![0.0; height];
    for x in 0..width {
        for (y, c) in column.iter_mut().enumerate() {
            *c = grid[y * width + x];
        }
        squared_line(&column, &mut column_out, &mut sites, &mut bounds);
        for (y, &c) in column_out.iter().enumerate() {
            grid[y * width + x] = c;
        }
    }

    let mut row_out = vec![0.0; width];
    for row in grid.chunks_exact_mut(width) {
        squared_line(row, &mut row_out, &mut sites, &mut bounds);
        row.copy_from_slice(&row_out);
    }
    grid
}

/// Exact Euclidean distance from every droplet pixel to the nearest
/// background pixel, measured between pixel centers. Background pixels get 0.
///
/// When the mask has no background at all, the ring of pixels just outside
/// the image is treated as background.
pub fn euclidean_distances(mask: &BinaryMask) -> Vec<f64> {
    let (width, height) = (mask.width(), mask.height());
    let squared = if mask.values().iter().any(|&fg| !fg) {
        squared_edt(width, height, mask.values())
    } else {
        let (pw, ph) = (width + 2, height + 2);
        let mut padded = vec![false; pw * ph];
        for y in 0..height {
            padded[(y + 1) * pw + 1..(y + 1) * pw + 1 + width].fill(true);
        }
        let full = squared_edt(pw, ph, &padded);
        (0..height)
            .flat_map(|y| full[(y + 1) * pw + 1..(y + 1) * pw + 1 + width].to_vec())
            .collect()
    };
    squared.into_iter().map(f64::sqrt).collect()
}

/// Distance transform followed by a single global min-max normalization.
pub fn distance_transform(mask: &BinaryMask) -> DistanceMap {
    DistanceMap::from_raw(mask.width(), mask.height(), euclidean_distances(mask))
}

/// Keeps the droplet pixels whose normalized distance is at least `threshold`.
pub fn extract_markers(dist: &DistanceMap, threshold: f64) -> Result<MarkerMask> {
    check_unit("marker threshold", threshold)?;
    let values = dist
        .raw
        .iter()
        .zip(&dist.values)
        .map(|(&raw, &norm)| raw > 0.0 && norm >= threshold)
        .collect();
    MarkerMask::new(dist.width, dist.height, values)
}
