use pvtrade_core::dispatch::{optimize_gs, InsolationSeries};
use pvtrade_core::geo::anchors::{Anchor, AnchorTable};
use pvtrade_core::geo::synthetic::{synthetic_anchor_table, synthetic_latitude_series, SyntheticClimate};
use pvtrade_core::PvCostInputs;

#[test]
fn bundled_anchors_match_regeneration() {
    let regenerated = synthetic_anchor_table(&SyntheticClimate::default(), &PvCostInputs::default()).unwrap();
    let bundled = AnchorTable::bundled();
    assert_eq!(bundled.anchors().len(), regenerated.len());
    for (a, b) in bundled.anchors().iter().zip(&regenerated) {
        assert_eq!(a.lat, b.lat);
        assert!((a.ocf - b.ocf).abs() <= 1e-9 * b.ocf, "{a:?} vs {b:?}");
        assert!((a.storage_days - b.storage_days).abs() <= 1e-9 * b.storage_days, "{a:?} vs {b:?}");
    }
}

fn direct(series: &InsolationSeries, pv: &PvCostInputs) -> (f64, f64) {
    let opt = optimize_gs(series, pv, 1.0).unwrap();
    (opt.ocf, opt.storage_ratio / series.mean())
}

// Interpolating anchors computed every degree reproduces the values computed
// directly at the skipped latitudes.
#[test]
fn leave_one_out_interpolation() {
    let climate = SyntheticClimate::default();
    let pv = PvCostInputs::default();
    let lats: Vec<f64> = (20..=40).map(f64::from).collect();
    let computed: Vec<(f64, (f64, f64))> = lats
        .iter()
        .map(|&lat| (lat, direct(&synthetic_latitude_series(lat, &climate).unwrap(), &pv)))
        .collect();
    let kept: Vec<Anchor> = computed
        .iter()
        .step_by(2)
        .map(|&(lat, (ocf, storage_days))| Anchor { lat, ocf, storage_days })
        .collect();
    let table = AnchorTable::new(kept).unwrap();
    for &(lat, (ocf, days)) in computed.iter().skip(1).step_by(2) {
        let (io, id) = table.interpolate(lat);
        assert!((io - ocf).abs() <= 0.05 * ocf, "lat {lat}: ocf {io} vs {ocf}");
        assert!((id - days).abs() <= 0.05 * days, "lat {lat}: storage {id} vs {days}");
    }
}
