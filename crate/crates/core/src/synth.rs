//! Synthetic water-sensitive cards with exact ground truth.
//!
//! A card is a uniform background with dark disks of known diameter. Disks
//! are rasterized with a center-in-circle test, so the ground truth carries
//! the exact pixel area of every disk. Cards are described by a TOML file:
//!
//! ```toml
//! card_width_um = 20000
//! card_height_um = 10000
//! dpi = 1200
//! overlap = "forbid"      # or "allow"
//! background_gray = 0.9
//! drop_gray = 0.15
//! seed = 7
//! min_gap_px = 2.0        # extra clearance between disks under "forbid"
//! edge_blend = false      # 1-px linear blend at disk edges
//!
//! [[disks]]
//! diameter_um = 500
//! count = 10              # randomly placed
//!
//! [[disks]]
//! diameter_um = 1000
//! center_um = [5000, 5000]
//! ```

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::{min_pixels_for_diameter, MICROMETERS_PER_INCH};
use crate::raster::{RgbRaster, DEFAULT_BIN_THRESHOLD};

/// Placement attempts per disk before giving up.
pub const MAX_PLACEMENT_ATTEMPTS: usize = 10_000;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OverlapPolicy {
    #[default]
    Forbid,
    Allow,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiskSpec {
    pub diameter_um: f64,
    #[serde(default = "one")]
    pub count: usize,
    /// Fixed center in card micrometers; only valid with `count = 1`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub center_um: Option<(f64, f64)>,
}

fn one() -> usize {
    1
}

fn default_background() -> f64 {
    0.9
}

fn default_drop() -> f64 {
    0.15
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticCardSpec {
    pub card_width_um: f64,
    pub card_height_um: f64,
    pub dpi: f64,
    #[serde(default)]
    pub disks: Vec<DiskSpec>,
    #[serde(default)]
    pub overlap: OverlapPolicy,
    #[serde(default = "default_background")]
    pub background_gray: f64,
    #[serde(default = "default_drop")]
    pub drop_gray: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub min_gap_px: f64,
    #[serde(default)]
    pub edge_blend: bool,
}

impl SyntheticCardSpec {
    /// Blank card with default rendering settings.
    pub fn new(card_width_um: f64, card_height_um: f64, dpi: f64) -> Self {
        Self {
            card_width_um,
            card_height_um,
            dpi,
            disks: Vec::new(),
            overlap: OverlapPolicy::Forbid,
            background_gray: default_background(),
            drop_gray: default_drop(),
            seed: 0,
            min_gap_px: 0.0,
            edge_blend: false,
        }
    }

    pub fn with_disks(mut self, diameter_um: f64, count: usize) -> Self {
        self.disks.push(DiskSpec {
            diameter_um,
            count,
            center_um: None,
        });
        self
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Spec(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Spec(e.to_string()))
    }

    /// Image size in pixels: card size at `dpi`, rounded.
    pub fn pixel_dims(&self) -> (usize, usize) {
        let px = |um: f64| (um * self.dpi / MICROMETERS_PER_INCH).round() as usize;
        (px(self.card_width_um), px(self.card_height_um))
    }

    pub fn validate(&self) -> Result<()> {
        let spec_err = |msg: String| Err(Error::Spec(msg));
        if !(self.dpi > 0.0 && self.card_width_um > 0.0 && self.card_height_um > 0.0) {
            return spec_err("card size and dpi must be positive".into());
        }
        let (w, h) = self.pixel_dims();
        if w == 0 || h == 0 {
            return spec_err(format!("card renders to an empty {w}x{h} image"));
        }
        for (name, v) in [
            ("background_gray", self.background_gray),
            ("drop_gray", self.drop_gray),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return spec_err(format!("{name} must lie in [0, 1], got {v}"));
            }
        }
        if !(self.drop_gray < DEFAULT_BIN_THRESHOLD
            && DEFAULT_BIN_THRESHOLD <= self.background_gray)
        {
            return spec_err(format!(
                "need drop_gray < {DEFAULT_BIN_THRESHOLD} <= background_gray, got {} and {}",
                self.drop_gray, self.background_gray
            ));
        }
        if self.min_gap_px.is_nan() || self.min_gap_px < 0.0 {
            return spec_err("min_gap_px must be non-negative".into());
        }
        for disk in &self.disks {
            if disk.diameter_um.is_nan()
                || disk.diameter_um <= 0.0
                || min_pixels_for_diameter(disk.diameter_um, self.dpi).is_none()
            {
                return spec_err(format!(
                    "{} um is not representable at {} dpi",
                    disk.diameter_um, self.dpi
                ));
            }
            if disk.center_um.is_some() && disk.count != 1 {
                return spec_err("a disk with a fixed center must have count = 1".into());
            }
        }
        Ok(())
    }
}

/// One rendered disk.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TruthDisk {
    /// Center in pixel coordinates (pixel centers sit on integers).
    pub center_px: (f64, f64),
    pub diameter_um: f64,
    /// Pixels whose centers fall inside the disk.
    pub area_px: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub width_px: usize,
    pub height_px: usize,
    pub um_per_px: f64,
    pub disks: Vec<TruthDisk>,
    /// Covered pixels (union of all disks) over total pixels.
    pub total_coverage_fraction: f64,
}

fn quantize(v: f64) -> f32 {
    ((v.clamp(0.0, 1.0) * 255.0).round() as u8) as f32 / 255.0
}

/// Renders a card. Identical specs (including the seed) give bit-identical
/// rasters; intensities land on the 8-bit grid so PNG round trips are exact.
pub fn generate_card(spec: &SyntheticCardSpec) -> Result<(RgbRaster, GroundTruth)> {
    spec.validate()?;
    let (w, h) = spec.pixel_dims();
    let um_per_px = spec.card_width_um / w as f64;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);

    let mut placed: Vec<(f64, f64, f64, f64)> = Vec::new(); // cx, cy, r, diameter_um
    let mut index = 0;
    for disk in &spec.disks {
        let r = disk.diameter_um / 2.0 / um_per_px;
        let lo_x = r - 0.5;
        let hi_x = w as f64 - 0.5 - r;
        let lo_y = r - 0.5;
        let hi_y = h as f64 - 0.5 - r;
        if lo_x > hi_x || lo_y > hi_y {
            return Err(Error::Spec(format!(
                "{} um disk does not fit on the card",
                disk.diameter_um
            )));
        }
        let clear = |cx: f64, cy: f64, placed: &[(f64, f64, f64, f64)]| {
            spec.overlap == OverlapPolicy::Allow
                || placed
                    .iter()
                    .all(|&(px, py, pr, _)| (cx - px).hypot(cy - py) > r + pr + spec.min_gap_px)
        };

        for _ in 0..disk.count {
            let center = if let Some((x_um, y_um)) = disk.center_um {
                let (cx, cy) = (x_um / um_per_px - 0.5, y_um / um_per_px - 0.5);
                if !(lo_x..=hi_x).contains(&cx) || !(lo_y..=hi_y).contains(&cy) {
                    return Err(Error::Spec(format!(
                        "disk at ({x_um}, {y_um}) um crosses the card border"
                    )));
                }
                clear(cx, cy, &placed).then_some((cx, cy))
            } else {
                (0..MAX_PLACEMENT_ATTEMPTS).find_map(|_| {
                    let cx = rng.random_range(lo_x..=hi_x);
                    let cy = rng.random_range(lo_y..=hi_y);
                    clear(cx, cy, &placed).then_some((cx, cy))
                })
            };
            let Some((cx, cy)) = center else {
                return Err(Error::Capacity {
                    index,
                    diameter_um: disk.diameter_um,
                    attempts: if disk.center_um.is_some() {
                        1
                    } else {
                        MAX_PLACEMENT_ATTEMPTS
                    },
                });
            };
            placed.push((cx, cy, r, disk.diameter_um));
            index += 1;
        }
    }

    // Darkness in [0, 1] per pixel: 1 = full drop color.
    let mut ink = vec![0.0f64; w * h];
    let mut truth_disks = Vec::with_capacity(placed.len());
    for &(cx, cy, r, diameter_um) in &placed {
        let reach = r + 1.0;
        let x0 = (cx - reach).floor().max(0.0) as usize;
        let y0 = (cy - reach).floor().max(0.0) as usize;
        let x1 = ((cx + reach).ceil() as usize).min(w - 1);
        let y1 = ((cy + reach).ceil() as usize).min(h - 1);
        let mut area_px = 0;
        for y in y0..=y1 {
            for x in x0..=x1 {
                let (dx, dy) = (x as f64 - cx, y as f64 - cy);
                let inside = dx * dx + dy * dy <= r * r;
                if inside {
                    area_px += 1;
                }
                let t = if spec.edge_blend {
                    (r + 0.5 - dx.hypot(dy)).clamp(0.0, 1.0)
                } else if inside {
                    1.0
                } else {
                    0.0
                };
                let cell = &mut ink[y * w + x];
                *cell = cell.max(t);
            }
        }
        truth_disks.push(TruthDisk {
            center_px: (cx, cy),
            diameter_um,
            area_px,
        });
    }

    let covered = placed_union_count(&placed, w, h);
    let pixels = ink
        .iter()
        .map(|&t| {
            let v = spec.background_gray + (spec.drop_gray - spec.background_gray) * t;
            [quantize(v); 3]
        })
        .collect();
    let raster = RgbRaster::new(w, h, pixels)?;
    Ok((
        raster,
        GroundTruth {
            width_px: w,
            height_px: h,
            um_per_px,
            disks: truth_disks,
            total_coverage_fraction: covered as f64 / (w * h) as f64,
        },
    ))
}

fn placed_union_count(placed: &[(f64, f64, f64, f64)], w: usize, h: usize) -> usize {
    let mut hit = vec![false; w * h];
    for &(cx, cy, r, _) in placed {
        let x0 = (cx - r).floor().max(0.0) as usize;
        let y0 = (cy - r).floor().max(0.0) as usize;
        let x1 = ((cx + r).ceil() as usize).min(w - 1);
        let y1 = ((cy + r).ceil() as usize).min(h - 1);
        for y in y0..=y1 {
            for x in x0..=x1 {
                let (dx, dy) = (x as f64 - cx, y as f64 - cy);
                if dx * dx + dy * dy <= r * r {
                    hit[y * w + x] = true;
                }
            }
        }
    }
    hit.iter().filter(|&&b| b).count()
}
