//! `POST /v1/evaluate`.

use serde::{Deserialize, Serialize};

use pvtrade_core::geo::eval::{GridCell, DOMAIN_MAX_LATITUDE};
use pvtrade_core::geo::synthetic::synthetic_latitude_series;
use pvtrade_core::model::{
    adjustment_factor, entry_threshold_ratio, evaluate_regimes, excess_threshold, gains_from_trade, regime_outcome,
    willingness_to_pay,
};
use pvtrade_core::presets::REFERENCE_OPTIMAL_YIELD;
use pvtrade_core::transmission::{transmission_breakdown, TransmissionBreakdown, TransmissionSpec};
use pvtrade_core::{BaseloadBackupCost, PvCostInputs, ScenarioResult, SiteParams, TradeRegime};

use crate::error::ApiError;
use crate::{Quantity, ServiceState};

/// Baseload total used with `k` when `baseload_total` is omitted, USD/MWh.
pub const DEFAULT_BASELOAD_TOTAL: f64 = 100.0;

/// Site values supplied directly; with `latitude` they override the
/// synthetic climate.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SiteOverrides {
    pub yield_ep: Option<f64>,
    pub ocf: Option<f64>,
    pub storage_ratio: Option<f64>,
    pub optimal_yield_estar: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioRequest {
    /// Winter hole coefficient; exclusive with `latitude`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub w: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub latitude: Option<f64>,
    /// Fixed share of the baseload cost, with `baseload_total`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub baseload_total: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub baseload: Option<BaseloadBackupCost>,
    /// `C_P / C_B`: replaces the site-derived PV cost (autarky and N-S only).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ratio: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pv: Option<PvCostInputs>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub site: Option<SiteOverrides>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub regimes: Option<Vec<TradeRegime>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub transmission: Option<TransmissionSpec>,
    /// USD/MWh; exclusive with `transmission`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub transmission_cost: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BaseloadView {
    pub fixed: Quantity,
    pub variable: Quantity,
    pub total: Quantity,
    pub fixed_share: Quantity,
}

impl From<&BaseloadBackupCost> for BaseloadView {
    fn from(bb: &BaseloadBackupCost) -> Self {
        Self {
            fixed: Quantity::usd_mwh(bb.fixed_per_mwh()),
            variable: Quantity::usd_mwh(bb.variable_per_mwh()),
            total: Quantity::usd_mwh(bb.total_per_mwh()),
            fixed_share: Quantity::ratio(bb.fixed_share()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SiteView {
    pub latitude: Option<Quantity>,
    pub winter_hole: Quantity,
    pub yield_ep: Quantity,
    pub ocf: Quantity,
    pub storage_ratio: Quantity,
    pub optimal_yield_estar: Quantity,
}

impl SiteView {
    fn new(site: &SiteParams, latitude: Option<f64>) -> Self {
        Self {
            latitude: latitude.map(Quantity::degrees),
            winter_hole: Quantity::ratio(site.winter_hole),
            yield_ep: Quantity::new(site.yield_ep, "kWh/kWp/yr"),
            ocf: Quantity::ratio(site.ocf),
            storage_ratio: Quantity::new(site.storage_ratio, "kWh/kWp"),
            optimal_yield_estar: Quantity::new(site.optimal_yield_estar, "kWh/kWp/yr"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegimeView {
    pub regime: TradeRegime,
    pub beta_star: Quantity,
    pub unit_cost: Quantity,
    pub pv_unit_cost: Quantity,
    pub wtp: Option<Quantity>,
    pub gains: Option<Quantity>,
}

impl From<&ScenarioResult> for RegimeView {
    fn from(r: &ScenarioResult) -> Self {
        Self {
            regime: r.regime,
            beta_star: Quantity::ratio(r.beta_star),
            unit_cost: Quantity::usd_mwh(r.unit_cost),
            pv_unit_cost: Quantity::usd_mwh(r.pv_unit_cost),
            wtp: r.wtp.map(Quantity::usd_mwh),
            gains: r.gains.map(Quantity::usd_mwh),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TransmissionView {
    pub name: String,
    pub capex: Quantity,
    pub yearly_cost: Quantity,
    pub delivered: Quantity,
    pub capital_term: Quantity,
    pub loss_term: Quantity,
    pub utilization: Quantity,
    pub unit_cost: Quantity,
}

impl From<&TransmissionBreakdown> for TransmissionView {
    fn from(b: &TransmissionBreakdown) -> Self {
        Self {
            name: b.name.clone(),
            capex: Quantity::new(b.capex, "USD"),
            yearly_cost: Quantity::new(b.yearly_cost, "USD/yr"),
            delivered: Quantity::new(b.delivered_mwh_per_year, "MWh/yr"),
            capital_term: Quantity::usd_mwh(b.capital_term),
            loss_term: Quantity::usd_mwh(b.loss_term),
            utilization: Quantity::ratio(b.utilization),
            unit_cost: Quantity::usd_mwh(b.unit_cost),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScenarioResponse {
    pub winter_hole: Quantity,
    pub adjustment_factor: Quantity,
    pub excess_threshold: Quantity,
    /// `C_P / C_B` below which PV enters in autarky.
    pub entry_threshold_ratio: Quantity,
    pub baseload: BaseloadView,
    pub site: Option<SiteView>,
    pub results: Vec<RegimeView>,
    pub transmission: Option<TransmissionView>,
}

fn finite(field: &str, v: Option<f64>) -> Result<(), ApiError> {
    match v {
        Some(x) if !x.is_finite() => Err(ApiError::bad(field, "must be a finite number")),
        _ => Ok(()),
    }
}

impl ScenarioRequest {
    fn baseload(&self, state: &ServiceState) -> Result<BaseloadBackupCost, ApiError> {
        let given = [self.k.is_some(), self.preset.is_some(), self.baseload.is_some()];
        if given.iter().filter(|&&g| g).count() > 1 {
            return Err(ApiError::conflict("baseload", "give only one of k, preset and baseload"));
        }
        if self.baseload_total.is_some() && self.k.is_none() {
            return Err(ApiError::conflict("baseload_total", "baseload_total needs k"));
        }
        if let Some(k) = self.k {
            return Ok(BaseloadBackupCost::from_unit_total(self.baseload_total.unwrap_or(DEFAULT_BASELOAD_TOTAL), k)?);
        }
        if let Some(bb) = self.baseload {
            bb.validate()?;
            return Ok(bb);
        }
        let name = self.preset.as_deref().unwrap_or("high");
        state.preset(name).ok_or_else(|| {
            ApiError::bad("preset", format!("unknown preset '{name}', known: {}", state.preset_names().join(", ")))
        })
    }

    fn transmission(&self) -> Result<(Option<f64>, Option<TransmissionBreakdown>), ApiError> {
        match (&self.transmission, self.transmission_cost) {
            (Some(_), Some(_)) => Err(ApiError::conflict("transmission", "give transmission or transmission_cost, not both")),
            (Some(spec), None) => {
                let b = transmission_breakdown(spec)?;
                Ok((Some(b.unit_cost), Some(b)))
            }
            (None, Some(tc)) if !(tc >= 0.0) => Err(ApiError::bad("transmission_cost", "must be >= 0")),
            (None, tc) => Ok((tc, None)),
        }
    }

    fn site(&self, state: &ServiceState, w: Option<f64>) -> Result<SiteParams, ApiError> {
        let over = self.site.unwrap_or_default();
        let estar = over.optimal_yield_estar.unwrap_or(REFERENCE_OPTIMAL_YIELD);
        let site = if let Some(lat) = self.latitude {
            if !(lat.abs() <= DOMAIN_MAX_LATITUDE) {
                return Err(ApiError::bad("latitude", format!("must lie within +-{DOMAIN_MAX_LATITUDE}")));
            }
            let series = synthetic_latitude_series(lat, &state.climate)?;
            let ep = over.yield_ep.unwrap_or_else(|| series.annual_total());
            let mut site = GridCell::from_series(lat, 0.0, series, ep)?.site_params(&state.anchors, estar)?;
            if let Some(ocf) = over.ocf {
                site.ocf = ocf;
            }
            match (over.storage_ratio, over.yield_ep) {
                (Some(sg), _) => site.storage_ratio = sg,
                // storage scales with the overridden yield
                (None, Some(_)) => site.storage_ratio = state.anchors.site_params_at(lat, ep).1,
                (None, None) => {}
            }
            site
        } else {
            let missing = |f: &str| ApiError::bad(format!("site.{f}"), "required when w is given without ratio");
            SiteParams {
                latitude: 0.0,
                yield_ep: over.yield_ep.ok_or_else(|| missing("yield_ep"))?,
                winter_hole: w.unwrap_or_default(),
                ocf: over.ocf.ok_or_else(|| missing("ocf"))?,
                storage_ratio: over.storage_ratio.ok_or_else(|| missing("storage_ratio"))?,
                optimal_yield_estar: estar,
            }
        };
        site.validate()?;
        Ok(site)
    }
}

/// Evaluates one request. Pure in `(request, state)`.
pub fn evaluate(req: &ScenarioRequest, state: &ServiceState) -> Result<ScenarioResponse, ApiError> {
    for (field, v) in [
        ("w", req.w),
        ("latitude", req.latitude),
        ("k", req.k),
        ("baseload_total", req.baseload_total),
        ("ratio", req.ratio),
        ("transmission_cost", req.transmission_cost),
    ] {
        finite(field, v)?;
    }
    match (req.w, req.latitude) {
        (Some(_), Some(_)) => return Err(ApiError::conflict("w", "give either w or latitude, not both")),
        (None, None) => return Err(ApiError::bad("w", "one of w or latitude is required")),
        _ => {}
    }
    if req.ratio.is_some() && req.latitude.is_some() {
        return Err(ApiError::conflict("ratio", "ratio replaces site costs and needs w, not latitude"));
    }
    if req.ratio.is_some() && req.site.is_some() {
        return Err(ApiError::conflict("ratio", "give ratio or site values, not both"));
    }
    let bb = req.baseload(state)?;
    let pv = req.pv.unwrap_or_default();
    pv.validate()?;
    let (tc, breakdown) = req.transmission()?;

    let (w, site, results) = if let Some(ratio) = req.ratio {
        let w = req.w.unwrap_or_default();
        if !(ratio >= 0.0) {
            return Err(ApiError::bad("ratio", "must be >= 0"));
        }
        let regimes = req.regimes.clone().unwrap_or_else(|| vec![TradeRegime::Autarky, TradeRegime::NorthSouth]);
        if let Some(r) = regimes.iter().find(|r| matches!(r, TradeRegime::EastWest | TradeRegime::Global)) {
            return Err(ApiError::conflict("regimes", format!("{r} needs site values; drop ratio")));
        }
        let pv_cost = ratio * bb.total_per_mwh();
        let (_, autarky) = regime_outcome(TradeRegime::Autarky, w, &bb, pv_cost)?;
        let results = regimes
            .iter()
            .map(|&regime| {
                let (beta_star, unit_cost) = regime_outcome(regime, w, &bb, pv_cost)?;
                let trade = regime.is_trade();
                Ok(ScenarioResult {
                    regime,
                    beta_star,
                    unit_cost,
                    pv_unit_cost: pv_cost,
                    wtp: if trade { Some(willingness_to_pay(autarky, unit_cost)?) } else { None },
                    gains: match tc {
                        Some(tc) if trade => Some(gains_from_trade(autarky, unit_cost, tc)?),
                        _ => None,
                    },
                })
            })
            .collect::<pvtrade_core::Result<Vec<_>>>()?;
        (w, None, results)
    } else {
        let site = req.site(state, req.w)?;
        let regimes = req.regimes.clone().unwrap_or_else(|| TradeRegime::ALL.to_vec());
        let results = evaluate_regimes(&site, &bb, &pv, &regimes, tc)?;
        (site.winter_hole, Some(SiteView::new(&site, req.latitude)), results)
    };
    if results.is_empty() {
        return Err(ApiError::bad("regimes", "list at least one regime"));
    }

    Ok(ScenarioResponse {
        winter_hole: Quantity::ratio(w),
        adjustment_factor: Quantity::ratio(adjustment_factor(w)?),
        excess_threshold: Quantity::ratio(excess_threshold(w)?),
        entry_threshold_ratio: Quantity::ratio(entry_threshold_ratio(w, bb.fixed_share())?),
        baseload: BaseloadView::from(&bb),
        site,
        results: results.iter().map(RegimeView::from).collect(),
        transmission: breakdown.as_ref().map(TransmissionView::from),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use axum::http::StatusCode;

    fn state() -> ServiceState {
        ServiceState::default()
    }

    fn beta(r: &ScenarioResponse, regime: TradeRegime) -> f64 {
        r.results.iter().find(|x| x.regime == regime).unwrap().beta_star.value
    }

    #[test]
    fn no_seasonality_cheap_pv_covers_everything() {
        let req = ScenarioRequest { w: Some(0.0), ratio: Some(0.9), k: Some(0.5), ..Default::default() };
        let r = evaluate(&req, &state()).unwrap();
        assert_eq!(beta(&r, TradeRegime::Autarky), 1.0);
    }

    #[test]
    fn threshold_ratio_lands_on_excess() {
        let req = ScenarioRequest { w: Some(10.0), ratio: Some(7.0 / 22.0), k: Some(0.5), ..Default::default() };
        let r = evaluate(&req, &state()).unwrap();
        let e = 12.0 / 22.0;
        assert!((beta(&r, TradeRegime::Autarky) - e).abs() < 1e-9);
        assert!((r.entry_threshold_ratio.value - 7.0 / 22.0).abs() < 1e-15);
    }

    #[test]
    fn central_global_cost() {
        let req = ScenarioRequest { latitude: Some(0.0), regimes: Some(vec![TradeRegime::Global]), ..Default::default() };
        let r = evaluate(&req, &state()).unwrap();
        assert!((r.results[0].unit_cost.value - 21.47).abs() < 0.01);
        assert_eq!(r.results[0].unit_cost.unit, "USD/MWh");
    }

    #[test]
    fn conflicting_and_missing_fields() {
        let both = ScenarioRequest { w: Some(1.0), latitude: Some(10.0), ..Default::default() };
        assert_eq!(evaluate(&both, &state()).unwrap_err().status, StatusCode::UNPROCESSABLE_ENTITY);
        let neither = ScenarioRequest::default();
        assert_eq!(evaluate(&neither, &state()).unwrap_err().status, StatusCode::BAD_REQUEST);
        let bad_k = ScenarioRequest { w: Some(1.0), ratio: Some(0.5), k: Some(1.5), ..Default::default() };
        let e = evaluate(&bad_k, &state()).unwrap_err();
        assert_eq!((e.status, e.errors[0].field.as_str()), (StatusCode::BAD_REQUEST, "k"));
        let no_site = ScenarioRequest { w: Some(1.0), ..Default::default() };
        assert_eq!(evaluate(&no_site, &state()).unwrap_err().errors[0].field, "site.yield_ep");
        let ew_ratio = ScenarioRequest { w: Some(1.0), ratio: Some(0.5), regimes: Some(vec![TradeRegime::EastWest]), ..Default::default() };
        assert_eq!(evaluate(&ew_ratio, &state()).unwrap_err().status, StatusCode::UNPROCESSABLE_ENTITY);
        let unknown = ScenarioRequest { latitude: Some(1.0), preset: Some("huge".into()), ..Default::default() };
        assert_eq!(evaluate(&unknown, &state()).unwrap_err().errors[0].field, "preset");
        let far = ScenarioRequest { latitude: Some(60.0), ..Default::default() };
        assert_eq!(evaluate(&far, &state()).unwrap_err().errors[0].field, "latitude");
    }

    #[test]
    fn gains_use_transmission() {
        let spec: TransmissionSpec = serde_json::from_str(include_str!("../../../data/transmission/suncable.json")).unwrap();
        let req = ScenarioRequest { latitude: Some(40.0), transmission: Some(spec), ..Default::default() };
        let r = evaluate(&req, &state()).unwrap();
        let tc = r.transmission.as_ref().unwrap().unit_cost.value;
        assert!((tc - 19.75).abs() < 0.1);
        for g in r.results.iter().filter(|x| x.regime.is_trade()) {
            assert!((g.wtp.unwrap().value - tc - g.gains.unwrap().value).abs() < 1e-9);
        }
    }

    #[test]
    fn explicit_site_matches_core() {
        let site = SiteOverrides { yield_ep: Some(1500.0), ocf: Some(2.0), storage_ratio: Some(6.0), optimal_yield_estar: None };
        let req = ScenarioRequest { w: Some(2.0), site: Some(site), preset: Some("median".into()), ..Default::default() };
        let r = evaluate(&req, &state()).unwrap();
        let core_site = SiteParams { latitude: 0.0, yield_ep: 1500.0, winter_hole: 2.0, ocf: 2.0, storage_ratio: 6.0, optimal_yield_estar: 1515.0 };
        let bb = pvtrade_core::presets::CostPreset::Median.baseload();
        let expect = evaluate_regimes(&core_site, &bb, &PvCostInputs::default(), &TradeRegime::ALL, None).unwrap();
        for (a, b) in r.results.iter().zip(&expect) {
            assert_eq!(a.unit_cost.value, b.unit_cost);
            assert_eq!(a.beta_star.value, b.beta_star);
        }
    }
}
