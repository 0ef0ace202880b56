use pvtrade_core::dispatch::{deseasonalize, optimize_gs, InsolationSeries};
use pvtrade_core::geo::synthetic::{weather_year_with_sigma, SyntheticClimate};
use pvtrade_core::PvCostInputs;

/// Fixed day-to-day pattern whose amplitude grows linearly with |lat|.
fn latitude_family(lat: f64, year: u32) -> InsolationSeries {
    let base = deseasonalize(&weather_year_with_sigma(0.0, year, &SyntheticClimate::default(), 0.3).unwrap()).unwrap();
    let m = base.mean();
    let amplitude = 0.7 * lat.abs() / 55.0;
    InsolationSeries::new(base.values().iter().map(|v| m * (1.0 + amplitude * (v / m - 1.0))).collect())
        .unwrap()
        .with_location(lat, 0.0)
}

#[test]
fn ocf_and_storage_grow_with_latitude() {
    let pv = PvCostInputs::default();
    for year in 0..4 {
        let mut prev: Option<(f64, f64)> = None;
        for lat in (0..=55).step_by(5) {
            let s = latitude_family(lat as f64, year);
            let opt = optimize_gs(&s, &pv, 1.0).unwrap();
            let cur = (opt.ocf, opt.storage_ratio);
            if let Some(p) = prev {
                assert!(cur.0 >= p.0 - 1e-9 && cur.1 >= p.1 - 1e-9, "year {year} lat {lat}: {cur:?} after {p:?}");
            }
            prev = Some(cur);
        }
    }
}
