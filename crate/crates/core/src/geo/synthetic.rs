//! Synthetic latitude climate used when no gridded irradiation data is at hand.
//!
//! The smooth profile is extraterrestrial irradiation times a clearness index
//! that peaks over the subtropical deserts and drops in mid-latitude winters,
//! times a yield factor that grows with latitude (tilted modules). A separate
//! weather year multiplies it by AR(1) log-normal noise whose strength grows
//! with latitude; it feeds the generation/storage search.
//!
//! Southern latitudes reuse the northern profile shifted by 182 days, so the
//! two hemispheres are exact mirror images.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dispatch::{deseasonalize, optimize_gs, InsolationSeries, DAYS_PER_YEAR};
use crate::error::{require, Result};
use crate::model::PvCostInputs;

use super::anchors::Anchor;

/// kW per m^2.
const SOLAR_CONSTANT: f64 = 1.367;
const HEMISPHERE_SHIFT_DAYS: usize = 182;
pub const MAX_SYNTHETIC_LATITUDE: f64 = 65.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SyntheticClimate {
    /// Clearness index at the equator and toward the poles.
    pub clearness_base: f64,
    /// Extra clearness over the subtropical belt.
    pub clearness_peak: f64,
    pub clearness_peak_lat: f64,
    pub clearness_peak_width: f64,
    /// Relative clearness lost at the winter solstice, at 60 degrees.
    pub winter_cloud: f64,
    /// Latitude where winter cloudiness starts to build up.
    pub winter_cloud_onset: f64,
    /// kWh/kWp per kWh/m^2 at the equator.
    pub yield_factor: f64,
    /// Relative yield gain per unit `sin^2(lat)` from tilting modules.
    pub tilt_gain: f64,
    /// Day-to-day log-noise at the equator and at 60 degrees.
    pub noise_sigma_equator: f64,
    pub noise_sigma_high: f64,
    /// Lag-one autocorrelation of the log-noise.
    pub noise_rho: f64,
    /// Weather years averaged per anchor.
    pub weather_years: u32,
    pub seed: u64,
}

impl Default for SyntheticClimate {
    fn default() -> Self {
        Self {
            clearness_base: 0.46,
            clearness_peak: 0.2,
            clearness_peak_lat: 24.0,
            clearness_peak_width: 13.0,
            winter_cloud: 0.45,
            winter_cloud_onset: 15.0,
            yield_factor: 0.8,
            tilt_gain: 0.6,
            noise_sigma_equator: 0.36,
            noise_sigma_high: 0.45,
            noise_rho: 0.6,
            weather_years: 6,
            seed: 2017,
        }
    }
}

/// Daily extraterrestrial irradiation on a horizontal plane, kWh/m^2.
/// `day` counts from 0 = 1 January.
pub fn extraterrestrial_daily(lat_deg: f64, day: usize) -> f64 {
    let n = day as f64 + 1.0;
    let phi = lat_deg.to_radians();
    let decl = 23.45f64.to_radians() * (2.0 * std::f64::consts::PI * (284.0 + n) / 365.0).sin();
    let ws = (-phi.tan() * decl.tan()).clamp(-1.0, 1.0).acos();
    let e0 = 1.0 + 0.033 * (2.0 * std::f64::consts::PI * n / 365.0).cos();
    let h = 24.0 / std::f64::consts::PI
        * SOLAR_CONSTANT
        * e0
        * (phi.cos() * decl.cos() * ws.sin() + ws * phi.sin() * decl.sin());
    h.max(0.0)
}

impl SyntheticClimate {
    fn clearness(&self, abs_lat: f64, day: usize) -> f64 {
        let z = (abs_lat - self.clearness_peak_lat) / self.clearness_peak_width;
        let annual = self.clearness_base + self.clearness_peak * (-z * z).exp();
        // 1 at the winter solstice (northern hemisphere), 0 at midsummer
        let winterness = 0.5 * (1.0 + (2.0 * std::f64::consts::PI * (day as f64 - 354.0) / 365.0).cos());
        let ramp = ((abs_lat - self.winter_cloud_onset) / (60.0 - self.winter_cloud_onset)).clamp(0.0, 1.0);
        annual * (1.0 - self.winter_cloud * ramp * ramp * winterness)
    }

    fn yield_scale(&self, abs_lat: f64) -> f64 {
        self.yield_factor * (1.0 + self.tilt_gain * abs_lat.to_radians().sin().powi(2))
    }

    fn northern_profile(&self, abs_lat: f64) -> Vec<f64> {
        let scale = self.yield_scale(abs_lat);
        (0..DAYS_PER_YEAR)
            .map(|d| extraterrestrial_daily(abs_lat, d) * self.clearness(abs_lat, d) * scale)
            .collect()
    }

    fn noise_sigma(&self, abs_lat: f64) -> f64 {
        let t = (abs_lat / 60.0).clamp(0.0, 1.0);
        self.noise_sigma_equator + (self.noise_sigma_high - self.noise_sigma_equator) * t
    }
}

fn hemisphere(lat: f64, northern: Vec<f64>) -> Vec<f64> {
    let mut v = northern;
    if lat < 0.0 {
        v.rotate_left(HEMISPHERE_SHIFT_DAYS);
    }
    v
}

fn check_latitude(lat: f64) -> Result<()> {
    require(
        lat.is_finite() && lat.abs() <= MAX_SYNTHETIC_LATITUDE,
        "latitude",
        lat,
        "synthetic climate covers |lat| <= 65",
    )
}

/// Smooth representative-year PV output at `lat`, kWh/kWp/day.
pub fn synthetic_latitude_series(lat: f64, climate: &SyntheticClimate) -> Result<InsolationSeries> {
    check_latitude(lat)?;
    let values = hemisphere(lat, climate.northern_profile(lat.abs()));
    Ok(InsolationSeries::new(values)?.with_source("synthetic"))
}

/// Noisy weather year number `year` at `lat`. Deterministic in
/// `(|lat|, year, seed)`.
pub fn synthetic_weather_year(lat: f64, year: u32, climate: &SyntheticClimate) -> Result<InsolationSeries> {
    Ok(weather_year_with_sigma(lat, year, climate, climate.noise_sigma(lat.abs()))?.with_source("synthetic-weather"))
}

/// Weather year with an explicit noise level, same random stream as
/// [`synthetic_weather_year`].
pub fn weather_year_with_sigma(lat: f64, year: u32, climate: &SyntheticClimate, sigma: f64) -> Result<InsolationSeries> {
    check_latitude(lat)?;
    require(sigma.is_finite() && sigma >= 0.0, "sigma", sigma, "must be >= 0")?;
    let abs_lat = lat.abs();
    let smooth = climate.northern_profile(abs_lat);
    let stream = ((abs_lat * 1e6).round() as u64) << 8 | u64::from(year & 0xff);
    let seed = climate.seed ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rho = climate.noise_rho;
    let innovation = (1.0 - rho * rho).sqrt();
    let mut z: f64 = StandardNormal.sample(&mut rng);
    let values = smooth
        .iter()
        .map(|&s| {
            let eps: f64 = StandardNormal.sample(&mut rng);
            z = rho * z + innovation * eps;
            s * (sigma * z - 0.5 * sigma * sigma).exp()
        })
        .collect();
    InsolationSeries::new(hemisphere(lat, values))
}

/// Overcapacity factor and storage at the 31 anchor latitudes `0, 2, ..., 60`,
/// each the mean over `weather_years` deseasonalized weather years, mirrored
/// to the southern hemisphere.
pub fn synthetic_anchor_table(climate: &SyntheticClimate, pv: &PvCostInputs) -> Result<Vec<Anchor>> {
    let northern: Vec<Anchor> = (0..=30)
        .into_par_iter()
        .map(|i| {
            let lat = 2.0 * i as f64;
            anchor_at(lat, climate, pv)
        })
        .collect::<Result<_>>()?;
    let mut all: Vec<Anchor> = northern
        .iter()
        .filter(|a| a.lat > 0.0)
        .map(|a| Anchor { lat: -a.lat, ..*a })
        .collect();
    all.extend(northern);
    all.sort_by(|a, b| a.lat.total_cmp(&b.lat));
    Ok(all)
}

/// Anchor for one latitude, averaged over the configured weather years.
pub fn anchor_at(lat: f64, climate: &SyntheticClimate, pv: &PvCostInputs) -> Result<Anchor> {
    let years = climate.weather_years.max(1);
    let (mut ocf, mut days) = (0.0, 0.0);
    for year in 0..years {
        let weather = deseasonalize(&synthetic_weather_year(lat, year, climate)?)?;
        let opt = optimize_gs(&weather, pv, 1.0)?;
        ocf += opt.ocf;
        days += opt.storage_ratio / weather.mean();
    }
    Ok(Anchor {
        lat,
        ocf: ocf / f64::from(years),
        storage_days: days / f64::from(years),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dispatch::winter_hole_from_series;

    #[test]
    fn extraterrestrial_reference_values() {
        // equator around the March equinox: about 10.4 kWh/m^2
        let h = extraterrestrial_daily(0.0, 80);
        assert!((h - 10.4).abs() < 0.3, "{h}");
        // polar night
        assert_eq!(extraterrestrial_daily(80.0, 355), 0.0);
    }

    #[test]
    fn equator_is_nearly_flat() {
        let s = synthetic_latitude_series(0.0, &SyntheticClimate::default()).unwrap();
        assert!(winter_hole_from_series(&s).unwrap() < 0.2);
    }

    #[test]
    fn hemispheres_mirror() {
        let c = SyntheticClimate::default();
        let n = synthetic_latitude_series(45.0, &c).unwrap();
        let s = synthetic_latitude_series(-45.0, &c).unwrap();
        assert_eq!(n.rotated(HEMISPHERE_SHIFT_DAYS).values(), s.values());
        let nw = synthetic_weather_year(30.0, 1, &c).unwrap();
        let sw = synthetic_weather_year(-30.0, 1, &c).unwrap();
        assert_eq!(nw.rotated(HEMISPHERE_SHIFT_DAYS).values(), sw.values());
    }

    #[test]
    fn winter_hole_grows_off_the_tropics() {
        let c = SyntheticClimate::default();
        let ws: Vec<f64> = (10..=55)
            .map(|lat| winter_hole_from_series(&synthetic_latitude_series(lat as f64, &c).unwrap()).unwrap())
            .collect();
        assert!(ws.windows(2).all(|p| p[1] > p[0]), "{ws:?}");
    }

    #[test]
    fn yield_peaks_near_the_tropics() {
        let c = SyntheticClimate::default();
        let ep = |lat: f64| synthetic_latitude_series(lat, &c).unwrap().annual_total();
        let peak = (0..=55).max_by(|&a, &b| ep(a as f64).total_cmp(&ep(b as f64))).unwrap();
        assert!((18..=28).contains(&peak), "peak at {peak}");
        assert!(ep(0.0) < ep(peak as f64) && ep(55.0) < ep(peak as f64));
    }

    #[test]
    fn weather_year_is_deterministic() {
        let c = SyntheticClimate::default();
        assert_eq!(synthetic_weather_year(12.0, 0, &c).unwrap(), synthetic_weather_year(12.0, 0, &c).unwrap());
        assert_ne!(synthetic_weather_year(12.0, 0, &c).unwrap(), synthetic_weather_year(12.0, 1, &c).unwrap());
        assert!(synthetic_latitude_series(70.0, &c).is_err());
    }
}
