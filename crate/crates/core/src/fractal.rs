//! Box-counting dimension of the droplet mask, used as a spray-regularity
//! descriptor: denser, more space-filling deposits score closer to 2.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::raster::BinaryMask;

/// `(box size, occupied boxes)` pairs with box sizes in increasing powers of 2.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoxCountSeries {
    pub points: Vec<(usize, usize)>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FractalEstimate {
    /// `-slope`, clamped to `[0, 2]`.
    pub dimension: f64,
    /// Least-squares slope of `ln N` against `ln sigma`.
    pub slope: f64,
    pub r_squared: f64,
}

/// Number of `sigma x sigma` cells (grid anchored at the origin, partial
/// cells at the right and bottom edges included) holding at least one
/// foreground pixel.
pub fn box_count(mask: &BinaryMask, sigma: usize) -> Result<usize> {
    if sigma < 1 {
        return Err(Error::InvalidParameter(
            "box size must be at least 1".into(),
        ));
    }
    let cols = mask.width().div_ceil(sigma);
    let rows = mask.height().div_ceil(sigma);
    let mut occupied = vec![false; cols * rows];
    let mut count = 0;
    for (y, row) in mask.values().chunks_exact(mask.width()).enumerate() {
        let by = y / sigma;
        for (x, _) in row.iter().enumerate().filter(|(_, &fg)| fg) {
            let cell = &mut occupied[by * cols + x / sigma];
            if !*cell {
                *cell = true;
                count += 1;
            }
        }
    }
    Ok(count)
}

/// Side of the square analysis window: the next power of two covering the
/// mask, at least 8 so the series has two points.
pub fn padded_side(mask: &BinaryMask) -> usize {
    mask.width().max(mask.height()).next_power_of_two().max(8)
}

/// Box counts for `sigma = 1, 2, 4, ..., M/4`. Background padding to the
/// `M x M` window adds no occupied boxes, so counts are taken directly on
/// the mask.
pub fn box_count_series(mask: &BinaryMask) -> BoxCountSeries {
    let side = padded_side(mask);
    let points = std::iter::successors(Some(1usize), |s| Some(s * 2))
        .take_while(|&s| s <= side / 4)
        .map(|s| (s, box_count(mask, s).expect("sigma >= 1")))
        .collect();
    BoxCountSeries { points }
}

pub fn fractal_dimension(mask: &BinaryMask) -> Result<FractalEstimate> {
    if mask.foreground_count() == 0 {
        return Err(Error::EmptyMask);
    }
    let series = box_count_series(mask);
    let xs: Vec<f64> = series
        .points
        .iter()
        .map(|&(s, _)| (s as f64).ln())
        .collect();
    let ys: Vec<f64> = series
        .points
        .iter()
        .map(|&(_, n)| (n as f64).ln())
        .collect();

    let n = xs.len() as f64;
    let mean_x = xs.iter().sum::<f64>() / n;
    let mean_y = ys.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    let mut syy = 0.0;
    for (x, y) in xs.iter().zip(&ys) {
        sxx += (x - mean_x) * (x - mean_x);
        sxy += (x - mean_x) * (y - mean_y);
        syy += (y - mean_y) * (y - mean_y);
    }
    let slope = sxy / sxx;
    let r_squared = if syy == 0.0 {
        1.0
    } else {
        (sxy * sxy / (sxx * syy)).clamp(0.0, 1.0)
    };

    Ok(FractalEstimate {
        // `0.0 - slope` rather than `-slope` so a flat series gives +0.
        dimension: (0.0 - slope).clamp(0.0, 2.0),
        slope,
        r_squared,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn full(side: usize) -> BinaryMask {
        BinaryMask::new(side, side, vec![true; side * side]).unwrap()
    }

    #[test]
    fn box_count_examples() {
        assert_eq!(box_count(&full(64), 32).unwrap(), 4);
        assert_eq!(
            box_count(&BinaryMask::empty(64, 64).unwrap(), 4).unwrap(),
            0
        );
        let mut one = BinaryMask::empty(50, 30).unwrap();
        one.set(17, 29, true);
        for s in [1, 2, 3, 8, 64] {
            assert_eq!(box_count(&one, s).unwrap(), 1);
        }
        assert!(box_count(&one, 0).is_err());
    }

    #[test]
    fn box_count_matches_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        for _ in 0..40 {
            let (w, h) = (rng.random_range(1..70), rng.random_range(1..70));
            let values = (0..w * h).map(|_| rng.random_bool(0.05)).collect();
            let mask = BinaryMask::new(w, h, values).unwrap();
            for s in [1, 2, 3, 4, 7, 16] {
                assert_eq!(
                    box_count(&mask, s).unwrap(),
                    oracle::brute_force_box_count(&mask, s)
                );
            }
        }
    }

    #[test]
    fn series_invariants() {
        let mut rng = ChaCha8Rng::seed_from_u64(43);
        let values = (0..100 * 60).map(|_| rng.random_bool(0.02)).collect();
        let mask = BinaryMask::new(100, 60, values).unwrap();
        let series = box_count_series(&mask);
        assert_eq!(series.points.first().unwrap().1, mask.foreground_count());
        assert_eq!(series.points.last().unwrap().0, 32);
        for pair in series.points.windows(2) {
            assert_eq!(pair[1].0, pair[0].0 * 2);
            assert!(pair[1].1 <= pair[0].1);
        }
        for &(s, n) in &series.points {
            assert!(n <= 128usize.div_ceil(s).pow(2));
        }
    }

    #[test]
    fn filled_square_is_two() {
        let est = fractal_dimension(&full(256)).unwrap();
        assert!((est.dimension - 2.0).abs() <= 0.05);
        assert!(est.r_squared > 0.999);
    }

    #[test]
    fn single_pixel_is_zero() {
        let mut mask = BinaryMask::empty(256, 256).unwrap();
        mask.set(100, 37, true);
        let est = fractal_dimension(&mask).unwrap();
        assert!(est.dimension.abs() <= 0.05);
        assert_eq!(est.r_squared, 1.0);
    }

    #[test]
    fn line_is_one() {
        let mut mask = BinaryMask::empty(256, 256).unwrap();
        for x in 0..256 {
            mask.set(x, 128, true);
        }
        // Analytic counts N = 256 / sigma regressed independently.
        let points: Vec<(f64, f64)> = (0..=6)
            .map(|k| {
                let s = (1u32 << k) as f64;
                (s.ln(), (256.0 / s).ln())
            })
            .collect();
        let (expected_slope, _) = oracle::least_squares(&points);
        let est = fractal_dimension(&mask).unwrap();
        assert!((est.slope - expected_slope).abs() < 1e-12);
        assert!((est.dimension - 1.0).abs() <= 0.1);
    }

    #[test]
    fn empty_mask_is_an_error() {
        assert!(matches!(
            fractal_dimension(&BinaryMask::empty(16, 16).unwrap()),
            Err(Error::EmptyMask)
        ));
    }

    #[test]
    fn tiny_masks_still_regress() {
        let est = fractal_dimension(&full(1)).unwrap();
        assert!(est.dimension.is_finite());
    }

    #[test]
    fn translation_changes_little() {
        // A spray-like field of small drops, shifted by a non-aligned offset.
        let mut rng = ChaCha8Rng::seed_from_u64(47);
        let centers: Vec<(f64, f64)> = (0..80)
            .map(|_| (rng.random_range(10.0..200.0), rng.random_range(10.0..200.0)))
            .collect();
        let field = |dx: f64, dy: f64| {
            let values = (0..256 * 256)
                .map(|i| {
                    let (x, y) = ((i % 256) as f64, (i / 256) as f64);
                    centers
                        .iter()
                        .any(|&(cx, cy)| (x - cx - dx).powi(2) + (y - cy - dy).powi(2) <= 9.0)
                })
                .collect();
            BinaryMask::new(256, 256, values).unwrap()
        };
        let a = fractal_dimension(&field(0.0, 0.0)).unwrap().dimension;
        for (dx, dy) in [(13.0, 7.0), (5.0, 31.0), (1.0, 1.0)] {
            let b = fractal_dimension(&field(dx, dy)).unwrap().dimension;
            assert!((a - b).abs() <= 0.05, "{a} vs {b}");
        }
    }
}
