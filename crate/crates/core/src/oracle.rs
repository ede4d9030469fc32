//! Brute-force reference implementations used by the test suites.
//!
//! Everything here is deliberately naive (quadratic or worse) and shares no
//! code with the production paths it is compared against.

use crate::raster::{BinaryMask, GrayRaster};

/// All-pairs minimum Euclidean distance from each foreground pixel to a
/// background pixel. With no background pixels, the one-pixel ring just
/// outside the image stands in as background.
pub fn brute_force_distances(mask: &BinaryMask) -> Vec<f64> {
    let (w, h) = (mask.width() as i64, mask.height() as i64);
    let mut background: Vec<(i64, i64)> = Vec::new();
    for y in 0..h {
        for x in 0..w {
            if !mask.get(x as usize, y as usize) {
                background.push((x, y));
            }
        }
    }
    if background.is_empty() {
        for x in -1..=w {
            background.push((x, -1));
            background.push((x, h));
        }
        for y in 0..h {
            background.push((-1, y));
            background.push((w, y));
        }
    }

    let mut out = Vec::with_capacity((w * h) as usize);
    for y in 0..h {
        for x in 0..w {
            if !mask.get(x as usize, y as usize) {
                out.push(0.0);
                continue;
            }
            let best = background
                .iter()
                .map(|&(bx, by)| (((x - bx).pow(2) + (y - by).pow(2)) as f64).sqrt())
                .fold(f64::INFINITY, f64::min);
            out.push(best);
        }
    }
    out
}

/// 8-connected labeling by repeated min-label relaxation, then renumbering
/// in row-major order of first appearance.
pub fn brute_force_components8(w: usize, h: usize, on: &[bool]) -> (Vec<u32>, u32) {
    let mut provisional: Vec<usize> = (0..w * h).map(|i| if on[i] { i + 1 } else { 0 }).collect();
    loop {
        let mut changed = false;
        for y in 0..h {
            for x in 0..w {
                let i = y * w + x;
                if provisional[i] == 0 {
                    continue;
                }
                for ny in y.saturating_sub(1)..=(y + 1).min(h - 1) {
                    for nx in x.saturating_sub(1)..=(x + 1).min(w - 1) {
                        let j = ny * w + nx;
                        if provisional[j] != 0 && provisional[j] < provisional[i] {
                            provisional[i] = provisional[j];
                            changed = true;
                        }
                    }
                }
            }
        }
        if !changed {
            break;
        }
    }
    let mut remap = std::collections::HashMap::new();
    let mut labels = vec![0u32; w * h];
    for i in 0..w * h {
        if provisional[i] != 0 {
            let next = remap.len() as u32 + 1;
            labels[i] = *remap.entry(provisional[i]).or_insert(next);
        }
    }
    (labels, remap.len() as u32)
}

/// Marker-controlled flood simulated with a plain list: every step scans the
/// whole pending list for the smallest `(intensity, enqueue order)` entry.
///
/// Rules: markers seeded in row-major order, expansion to unlabeled
/// foreground 4-neighbors in the order up, left, right, down, each claimed
/// pixel labeled when it is enqueued.
pub fn brute_force_flood(gray: &GrayRaster, markers: &[u32], mask: &BinaryMask) -> Vec<u32> {
    let (w, h) = (mask.width(), mask.height());
    let mut labels = markers.to_vec();
    let mut pending: Vec<(f32, usize, usize)> = Vec::new();
    let mut order = 0usize;
    for y in 0..h {
        for x in 0..w {
            let i = y * w + x;
            if labels[i] != 0 {
                pending.push((gray.get(x, y), order, i));
                order += 1;
            }
        }
    }

    while !pending.is_empty() {
        let mut best = 0;
        for k in 1..pending.len() {
            let (v, o, _) = pending[k];
            let (bv, bo, _) = pending[best];
            if v < bv || (v == bv && o < bo) {
                best = k;
            }
        }
        let (_, _, i) = pending.remove(best);
        let (x, y) = ((i % w) as i64, (i / w) as i64);
        for (dx, dy) in [(0i64, -1i64), (-1, 0), (1, 0), (0, 1)] {
            let (nx, ny) = (x + dx, y + dy);
            if nx < 0 || ny < 0 || nx >= w as i64 || ny >= h as i64 {
                continue;
            }
            let j = ny as usize * w + nx as usize;
            if mask.values()[j] && labels[j] == 0 {
                labels[j] = labels[i];
                pending.push((gray.values()[j], order, j));
                order += 1;
            }
        }
    }
    labels
}

pub fn count_labeled(labels: &[u32]) -> usize {
    labels.iter().filter(|&&l| l != 0).count()
}

/// True when the `true` cells form a single 4-connected set (an empty set
/// counts as connected).
pub fn is_4_connected(w: usize, h: usize, cells: &[bool]) -> bool {
    let Some(start) = cells.iter().position(|&c| c) else {
        return true;
    };
    let mut seen = vec![false; cells.len()];
    let mut stack = vec![start];
    seen[start] = true;
    while let Some(i) = stack.pop() {
        let (x, y) = (i % w, i / w);
        let mut visit = |j: usize| {
            if cells[j] && !seen[j] {
                seen[j] = true;
                stack.push(j);
            }
        };
        if x > 0 {
            visit(i - 1);
        }
        if x + 1 < w {
            visit(i + 1);
        }
        if y > 0 {
            visit(i - w);
        }
        if y + 1 < h {
            visit(i + w);
        }
    }
    cells.iter().zip(&seen).all(|(&c, &s)| !c || s)
}

/// Volume-weighted percentile by definition: the smallest listed diameter
/// `d` such that the volume of all drops with diameter `<= d` is at least
/// `p` of the total volume. Volume is taken proportional to `d^3`.
pub fn brute_force_volume_percentile(diameters: &[f64], p: f64) -> Option<f64> {
    let total: f64 = diameters.iter().map(|d| d * d * d).sum();
    diameters
        .iter()
        .copied()
        .filter(|&candidate| {
            let below: f64 = diameters
                .iter()
                .filter(|&&d| d <= candidate)
                .map(|d| d * d * d)
                .sum();
            below >= p * total
        })
        .fold(None, |acc: Option<f64>, d| {
            Some(acc.map_or(d, |a| a.min(d)))
        })
}

/// Counts occupied boxes by testing every box against every pixel.
pub fn brute_force_box_count(mask: &BinaryMask, sigma: usize) -> usize {
    let (w, h) = (mask.width(), mask.height());
    let mut count = 0;
    for by in (0..h).step_by(sigma) {
        for bx in (0..w).step_by(sigma) {
            let occupied = (by..(by + sigma).min(h))
                .any(|y| (bx..(bx + sigma).min(w)).any(|x| mask.get(x, y)));
            if occupied {
                count += 1;
            }
        }
    }
    count
}

/// Ordinary least-squares slope and intercept of `y` on `x`, computed from
/// centered sums.
pub fn least_squares(points: &[(f64, f64)]) -> (f64, f64) {
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}
