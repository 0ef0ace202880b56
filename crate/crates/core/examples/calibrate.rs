//! Prints the synthetic climate at the anchor latitudes and checks the regime
//! ordering under the bundled cost presets. An optional argument is a JSON
//! object overriding `SyntheticClimate` fields.
//!
//! cargo run --release -p pvtrade-core --example calibrate -- '{"noise_sigma_equator":0.35}'

use pvtrade_core::dispatch::winter_hole_from_series;
use pvtrade_core::geo::anchors::AnchorTable;
use pvtrade_core::geo::synthetic::{synthetic_anchor_table, synthetic_latitude_series, SyntheticClimate};
use pvtrade_core::model::{evaluate_regimes, PvCostInputs, ScenarioResult, SiteParams, TradeRegime};
use pvtrade_core::presets::CostPreset;

const REGIMES: [TradeRegime; 3] = [TradeRegime::Autarky, TradeRegime::EastWest, TradeRegime::NorthSouth];

fn main() -> pvtrade_core::Result<()> {
    let climate: SyntheticClimate = match std::env::args().nth(1) {
        Some(json) => serde_json::from_str(&json).expect("climate json"),
        None => SyntheticClimate::default(),
    };
    let pv = PvCostInputs::default();
    let table = AnchorTable::new(synthetic_anchor_table(&climate, &pv)?)?;
    let eval = |lat: f64, preset: CostPreset| -> pvtrade_core::Result<(SiteParams, Vec<ScenarioResult>)> {
        let s = synthetic_latitude_series(lat, &climate)?;
        let ep = s.annual_total();
        let (ocf, sg) = table.site_params_at(lat, ep);
        let site = SiteParams {
            latitude: lat,
            yield_ep: ep,
            winter_hole: winter_hole_from_series(&s)?,
            ocf,
            storage_ratio: sg,
            optimal_yield_estar: 1515.0,
        };
        let r = evaluate_regimes(&site, &preset.baseload(), &pv, &REGIMES, None)?;
        Ok((site, r))
    };

    println!("lat     E_p      w    OCF    S/G      F   | high A     EW     NS | wtpEW  wtpNS    | med A  | low beta A/EW/NS");
    for i in 0..=22 {
        let lat = 2.5 * i as f64;
        let (site, high) = eval(lat, CostPreset::High)?;
        let (_, med) = eval(lat, CostPreset::Median)?;
        let (_, low) = eval(lat, CostPreset::Low)?;
        let f = high[2].pv_unit_cost;
        println!(
            "{lat:4.1} {:7.1} {:6.3} {:6.3} {:6.3} {f:6.2} | {:6.2} {:6.2} {:6.2} | {:6.2} {:6.2} {} | {:6.2} | {:.2}/{:.2}/{:.2}",
            site.yield_ep,
            site.winter_hole,
            site.ocf,
            site.storage_ratio,
            high[0].unit_cost,
            high[1].unit_cost,
            high[2].unit_cost,
            high[1].wtp.unwrap(),
            high[2].wtp.unwrap(),
            if high[1].wtp > high[2].wtp { "EW" } else { "NS" },
            med[0].unit_cost,
            low[0].beta_star,
            low[1].beta_star,
            low[2].beta_star,
        );
    }

    // worst margins over the 5 degree cells and the per-degree sweep
    let mut ew_margin = f64::INFINITY;
    let mut ns_margin = f64::INFINITY;
    for i in 0..11 {
        let lat = 2.5 + 5.0 * i as f64;
        let (_, r) = eval(lat, CostPreset::High)?;
        let d = r[1].wtp.unwrap() - r[2].wtp.unwrap();
        if lat < 15.0 {
            ew_margin = ew_margin.min(d);
        } else if lat > 20.0 {
            ns_margin = ns_margin.min(-d);
        }
    }
    let mut low_beta: f64 = 0.0;
    let mut med_min = f64::INFINITY;
    for lat in 0..=55 {
        let (_, r) = eval(lat as f64, CostPreset::Low)?;
        low_beta = r.iter().map(|x| x.beta_star).fold(low_beta, f64::max);
        let (_, m) = eval(lat as f64, CostPreset::Median)?;
        med_min = med_min.min(m[0].unit_cost);
    }
    println!("min EW-NS margin within 15: {ew_margin:.2}; min NS-EW margin beyond 20: {ns_margin:.2}");
    println!("max low-preset beta over 0..55: {low_beta:.3}; min median autarky cost: {med_min:.2}");
    Ok(())
}
