//! Quick-look raster of unit costs. Cells without a result stay grey.

use std::path::Path;

use anyhow::{Context, Result};
use image::{Rgb, RgbImage};

use pvtrade_core::geo::eval::EvaluationRun;
use pvtrade_core::TradeRegime;

const SCALE: u32 = 6;
const MISSING: Rgb<u8> = Rgb([200, 200, 200]);

/// Blue (cheap) to yellow to red (expensive).
fn ramp(t: f64) -> Rgb<u8> {
    let stops = [(0.0, [49, 54, 149]), (0.5, [255, 255, 191]), (1.0, [165, 0, 38])];
    let t = t.clamp(0.0, 1.0);
    let i = if t < 0.5 { 0 } else { 1 };
    let (t0, a) = stops[i];
    let (t1, b) = stops[i + 1];
    let u = (t - t0) / (t1 - t0);
    let mix = |x: u8, y: u8| (x as f64 + (y as f64 - x as f64) * u).round() as u8;
    Rgb([mix(a[0], b[0]), mix(a[1], b[1]), mix(a[2], b[2])])
}

fn axis(values: impl Iterator<Item = f64>) -> Vec<f64> {
    let mut v: Vec<f64> = values.collect();
    v.sort_by(f64::total_cmp);
    v.dedup();
    v
}

pub fn render_unit_cost(run: &EvaluationRun, regime: TradeRegime, path: &Path) -> Result<()> {
    let lats = axis(run.cells.iter().map(|c| c.lat));
    let lons = axis(run.cells.iter().map(|c| c.lon));
    let costs: Vec<f64> = run.cells.iter().filter_map(|c| c.get(regime).map(|r| r.unit_cost)).collect();
    let lo = costs.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = costs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let w = lons.len().max(1) as u32;
    let h = lats.len().max(1) as u32;
    let mut img = RgbImage::from_pixel(w * SCALE, h * SCALE, MISSING);
    for c in &run.cells {
        let Some(r) = c.get(regime) else { continue };
        let x = lons.partition_point(|&v| v < c.lon) as u32;
        // north up
        let y = h - 1 - lats.partition_point(|&v| v < c.lat) as u32;
        let t = if hi > lo { (r.unit_cost - lo) / (hi - lo) } else { 0.5 };
        let px = ramp(t);
        for dy in 0..SCALE {
            for dx in 0..SCALE {
                img.put_pixel(x * SCALE + dx, y * SCALE + dy, px);
            }
        }
    }
    img.save(path).with_context(|| format!("writing {}", path.display()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ramp_ends() {
        assert_eq!(ramp(0.0), Rgb([49, 54, 149]));
        assert_eq!(ramp(1.0), Rgb([165, 0, 38]));
        assert_eq!(ramp(0.5), Rgb([255, 255, 191]));
    }
}
