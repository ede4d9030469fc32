//! Pixels needed to resolve a length at a given scan resolution.

use std::fmt::Write;

use dropmeter_core::min_pixels_for_diameter;

pub const TABLE_DIAMETERS_UM: [f64; 7] = [10.0, 50.0, 100.0, 250.0, 500.0, 1000.0, 10000.0];
pub const TABLE_DPIS: [f64; 7] = [50.0, 100.0, 300.0, 600.0, 1200.0, 2400.0, 2600.0];

/// Marker printed for a length that spans less than one pixel.
pub const NOT_REPRESENTABLE: &str = "-";

/// Whitespace-aligned grid: one row per diameter, one column per dpi.
pub fn render_table(diameters_um: &[f64], dpis: &[f64]) -> String {
    let mut out = String::new();
    let _ = write!(out, "{:>10}", "um\\dpi");
    for dpi in dpis {
        let _ = write!(out, " {dpi:>7}");
    }
    out.push('\n');
    for &d in diameters_um {
        let _ = write!(out, "{d:>10}");
        for &dpi in dpis {
            match min_pixels_for_diameter(d, dpi) {
                Some(px) => {
                    let _ = write!(out, " {px:>7}");
                }
                None => {
                    let _ = write!(out, " {NOT_REPRESENTABLE:>7}");
                }
            }
        }
        out.push('\n');
    }
    out
}
