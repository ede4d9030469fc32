//! Droplet instance segmentation: marker labeling and marker-controlled
//! watershed flooding restricted to the foreground mask.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, VecDeque};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::raster::{BinaryMask, GrayRaster, MarkerMask};

/// Marker components, `0` = no marker, `1..=count` = component id.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LabeledMarkers {
    width: usize,
    height: usize,
    labels: Vec<u32>,
    count: u32,
}

impl LabeledMarkers {
    /// Wraps an existing labeling. Ids must be dense in `1..=count`.
    pub fn new(width: usize, height: usize, labels: Vec<u32>) -> Result<Self> {
        if width == 0 || height == 0 || labels.len() != width * height {
            return Err(Error::InvalidParameter(format!(
                "label grid of {} entries does not fit {width}x{height}",
                labels.len()
            )));
        }
        let count = labels.iter().copied().max().unwrap_or(0);
        let mut seen = vec![false; count as usize + 1];
        for &l in &labels {
            seen[l as usize] = true;
        }
        if seen.iter().skip(1).any(|s| !s) {
            return Err(Error::InvalidParameter("marker ids are not dense".into()));
        }
        Ok(Self {
            width,
            height,
            labels,
            count,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    pub fn count(&self) -> u32 {
        self.count
    }
}

/// One segmented droplet in pixel units.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DropletSegment {
    pub id: u32,
    pub pixel_area: usize,
    /// Mean `(x, y)` of member pixels.
    pub centroid: (f64, f64),
    /// Inclusive `(x0, y0, x1, y1)`.
    pub bounding_box: (usize, usize, usize, usize),
}

/// Output of [`watershed`]: per-pixel droplet ids plus one record per id.
#[derive(Clone, Debug, PartialEq)]
pub struct SegmentationResult {
    width: usize,
    height: usize,
    labels: Vec<u32>,
    count: u32,
    pub segments: Vec<DropletSegment>,
}

impl SegmentationResult {
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    /// `0` = background or unclaimed, `k >= 1` = droplet id.
    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    pub fn segment_count(&self) -> u32 {
        self.count
    }

    pub fn labeled_pixel_count(&self) -> usize {
        self.labels.iter().filter(|&&l| l != 0).count()
    }
}

const NEIGHBORS_8: [(isize, isize); 8] = [
    (-1, -1),
    (0, -1),
    (1, -1),
    (-1, 0),
    (1, 0),
    (-1, 1),
    (0, 1),
    (1, 1),
];

/// Flood order for watershed expansion: up, left, right, down.
pub const FLOOD_NEIGHBORS: [(isize, isize); 4] = [(0, -1), (-1, 0), (1, 0), (0, 1)];

#[inline]
fn offset(x: usize, y: usize, dx: isize, dy: isize, w: usize, h: usize) -> Option<usize> {
    let nx = x.checked_add_signed(dx)?;
    let ny = y.checked_add_signed(dy)?;
    (nx < w && ny < h).then_some(ny * w + nx)
}

/// 8-connected component labeling of the marker mask. Ids are assigned in
/// row-major order of each component's first pixel.
pub fn label_markers(markers: &MarkerMask) -> LabeledMarkers {
    let (w, h) = (markers.width(), markers.height());
    let on = markers.values();
    let mut labels = vec![0u32; w * h];
    let mut next = 0u32;
    let mut queue = VecDeque::new();

    for start in 0..w * h {
        if !on[start] || labels[start] != 0 {
            continue;
        }
        next += 1;
        labels[start] = next;
        queue.push_back(start);
        while let Some(i) = queue.pop_front() {
            let (x, y) = (i % w, i / w);
            for (dx, dy) in NEIGHBORS_8 {
                if let Some(j) = offset(x, y, dx, dy, w, h) {
                    if on[j] && labels[j] == 0 {
                        labels[j] = next;
                        queue.push_back(j);
                    }
                }
            }
        }
    }

    LabeledMarkers {
        width: w,
        height: h,
        labels,
        count: next,
    }
}

/// Orders intensities in `[0, 1]` by their bit pattern, which is monotone
/// for non-negative floats.
#[inline]
fn intensity_key(v: f32) -> u32 {
    if v <= 0.0 {
        0
    } else {
        v.to_bits()
    }
}

/// Marker-controlled watershed.
///
/// All marker pixels are seeded at once in row-major order. The flood pops
/// the darkest queued pixel (ties broken by enqueue order) and claims its
/// unlabeled foreground 4-neighbors for the same droplet. Foreground pixels
/// no marker can reach stay 0.
pub fn watershed(
    gray: &GrayRaster,
    markers: &LabeledMarkers,
    mask: &BinaryMask,
) -> Result<SegmentationResult> {
    let (w, h) = (mask.width(), mask.height());
    for actual in [
        (gray.width(), gray.height()),
        (markers.width(), markers.height()),
    ] {
        if actual != (w, h) {
            return Err(Error::DimensionMismatch {
                expected: (w, h),
                actual,
            });
        }
    }

    let fg = mask.values();
    let intensity = gray.values();
    let mut labels = markers.labels().to_vec();
    let mut heap = BinaryHeap::new();
    let mut seq = 0u64;

    for (i, &l) in labels.iter().enumerate() {
        if l == 0 {
            continue;
        }
        if !fg[i] {
            return Err(Error::MarkerOutsideMask { x: i % w, y: i / w });
        }
        heap.push(Reverse((intensity_key(intensity[i]), seq, i)));
        seq += 1;
    }

    while let Some(Reverse((_, _, i))) = heap.pop() {
        let (x, y) = (i % w, i / w);
        let label = labels[i];
        for (dx, dy) in FLOOD_NEIGHBORS {
            if let Some(j) = offset(x, y, dx, dy, w, h) {
                if fg[j] && labels[j] == 0 {
                    labels[j] = label;
                    heap.push(Reverse((intensity_key(intensity[j]), seq, j)));
                    seq += 1;
                }
            }
        }
    }

    let count = markers.count();
    let segments = measure_labels(w, &labels, count);
    Ok(SegmentationResult {
        width: w,
        height: h,
        labels,
        count,
        segments,
    })
}

fn measure_labels(width: usize, labels: &[u32], count: u32) -> Vec<DropletSegment> {
    struct Acc {
        n: usize,
        sx: f64,
        sy: f64,
        x0: usize,
        y0: usize,
        x1: usize,
        y1: usize,
    }
    let mut acc: Vec<Acc> = (0..count)
        .map(|_| Acc {
            n: 0,
            sx: 0.0,
            sy: 0.0,
            x0: usize::MAX,
            y0: usize::MAX,
            x1: 0,
            y1: 0,
        })
        .collect();

    for (i, &l) in labels.iter().enumerate() {
        if l == 0 {
            continue;
        }
        let (x, y) = (i % width, i / width);
        let a = &mut acc[l as usize - 1];
        a.n += 1;
        a.sx += x as f64;
        a.sy += y as f64;
        a.x0 = a.x0.min(x);
        a.y0 = a.y0.min(y);
        a.x1 = a.x1.max(x);
        a.y1 = a.y1.max(y);
    }

    acc.into_iter()
        .enumerate()
        .filter(|(_, a)| a.n > 0)
        .map(|(k, a)| DropletSegment {
            id: k as u32 + 1,
            pixel_area: a.n,
            centroid: (a.sx / a.n as f64, a.sy / a.n as f64),
            bounding_box: (a.x0, a.y0, a.x1, a.y1),
        })
        .collect()
}

/// Recomputes per-droplet pixel counts, centroids and bounding boxes from
/// the label grid.
pub fn measure_segments(result: &SegmentationResult) -> Vec<DropletSegment> {
    measure_labels(result.width, &result.labels, result.count)
}
