//! `GET /v1/latitude-sweep`: per-degree regime curves on the synthetic climate.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::Serialize;

use pvtrade_core::geo::eval::{latitude_sweep, DOMAIN_MAX_LATITUDE};
use pvtrade_core::geo::io::{format_significant, SIGNIFICANT_DIGITS};
use pvtrade_core::presets::REFERENCE_OPTIMAL_YIELD;
use pvtrade_core::{BaseloadBackupCost, PvCostInputs, TradeRegime};

use crate::error::ApiError;
use crate::evaluate::BaseloadView;
use crate::query::{float, reject_unknown};
use crate::surface::MAX_STEPS;
use crate::{Series, ServiceState};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Format {
    #[default]
    Json,
    Csv,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRequest {
    /// Preset name, or `"inline"` for explicit costs.
    pub scenario: String,
    pub baseload: BaseloadBackupCost,
    pub pv: PvCostInputs,
    pub lat_min: f64,
    pub lat_max: f64,
    pub lat_step: f64,
    pub format: Format,
}

const KNOWN: &[&str] = &[
    "scenario",
    "fixed_annual",
    "variable_unit",
    "capex_gen",
    "lifetime_gen",
    "capex_sto",
    "lifetime_sto",
    "discount_rate",
    "lat_min",
    "lat_max",
    "lat_step",
    "format",
];

impl SweepRequest {
    pub fn from_query(q: &BTreeMap<String, String>, state: &ServiceState) -> Result<Self, ApiError> {
        reject_unknown(q, KNOWN)?;
        let inline = (float(q, "fixed_annual")?, float(q, "variable_unit")?);
        let (scenario, baseload) = match (q.get("scenario"), inline) {
            (Some(_), (Some(_), _) | (_, Some(_))) => {
                return Err(ApiError::conflict("scenario", "give a scenario name or inline costs, not both"))
            }
            (None, (Some(f), Some(v))) => ("inline".to_string(), BaseloadBackupCost::new(f, v)?),
            (None, (Some(_), None)) => return Err(ApiError::bad("variable_unit", "required with fixed_annual")),
            (None, (None, Some(_))) => return Err(ApiError::bad("fixed_annual", "required with variable_unit")),
            (name, (None, None)) => {
                let name = name.map(String::as_str).unwrap_or("high");
                let bb = state.preset(name).ok_or_else(|| {
                    ApiError::bad("scenario", format!("unknown scenario '{name}', known: {}", state.preset_names().join(", ")))
                })?;
                (name.to_lowercase(), bb)
            }
        };
        let d = PvCostInputs::default();
        let pv = PvCostInputs {
            capex_gen: float(q, "capex_gen")?.unwrap_or(d.capex_gen),
            lifetime_gen: float(q, "lifetime_gen")?.unwrap_or(d.lifetime_gen),
            capex_sto: float(q, "capex_sto")?.unwrap_or(d.capex_sto),
            lifetime_sto: float(q, "lifetime_sto")?.unwrap_or(d.lifetime_sto),
            discount_rate: float(q, "discount_rate")?.unwrap_or(d.discount_rate),
        };
        pv.validate()?;
        let format = match q.get("format").map(String::as_str) {
            None | Some("json") => Format::Json,
            Some("csv") => Format::Csv,
            Some(other) => return Err(ApiError::bad("format", format!("unknown format '{other}', use json or csv"))),
        };
        let req = Self {
            scenario,
            baseload,
            pv,
            lat_min: float(q, "lat_min")?.unwrap_or(-DOMAIN_MAX_LATITUDE),
            lat_max: float(q, "lat_max")?.unwrap_or(DOMAIN_MAX_LATITUDE),
            lat_step: float(q, "lat_step")?.unwrap_or(1.0),
            format,
        };
        req.latitudes()?;
        Ok(req)
    }

    pub fn latitudes(&self) -> Result<Vec<f64>, ApiError> {
        for (field, v) in [("lat_min", self.lat_min), ("lat_max", self.lat_max)] {
            if !(v.abs() <= DOMAIN_MAX_LATITUDE) {
                return Err(ApiError::bad(field, format!("must lie within +-{DOMAIN_MAX_LATITUDE}")));
            }
        }
        if !(self.lat_step > 0.0) {
            return Err(ApiError::bad("lat_step", "must be > 0"));
        }
        if self.lat_max < self.lat_min {
            return Err(ApiError::conflict("lat_max", "must be >= lat_min"));
        }
        let n = ((self.lat_max - self.lat_min) / self.lat_step + 1e-9).floor() + 1.0;
        if n > MAX_STEPS as f64 {
            return Err(ApiError::bad("lat_step", format!("sweep would have {n} points, the limit is {MAX_STEPS}")));
        }
        Ok((0..n as usize).map(|i| self.lat_min + i as f64 * self.lat_step).collect())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegimeCurve {
    pub regime: TradeRegime,
    pub beta_star: Series,
    pub unit_cost: Series,
    /// Empty for autarky.
    pub wtp: Series,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Sweep {
    pub scenario: String,
    pub baseload: BaseloadView,
    pub latitude: Series,
    pub curves: Vec<RegimeCurve>,
}

impl Sweep {
    pub fn curve(&self, regime: TradeRegime) -> Option<&RegimeCurve> {
        self.curves.iter().find(|c| c.regime == regime)
    }

    /// One row per latitude; costs in USD/MWh.
    pub fn to_csv(&self) -> String {
        let f = |x: f64| format_significant(x, SIGNIFICANT_DIGITS);
        let mut out = String::from("lat");
        for c in &self.curves {
            let r = c.regime.as_str();
            let _ = write!(out, ",{r}_beta,{r}_unit_cost");
            if c.regime.is_trade() {
                let _ = write!(out, ",{r}_wtp");
            }
        }
        out.push('\n');
        for (i, &lat) in self.latitude.values.iter().enumerate() {
            out.push_str(&f(lat));
            for c in &self.curves {
                let _ = write!(out, ",{},{}", f(c.beta_star.values[i]), f(c.unit_cost.values[i]));
                if c.regime.is_trade() {
                    let _ = write!(out, ",{}", f(c.wtp.values[i]));
                }
            }
            out.push('\n');
        }
        out
    }
}

pub fn sweep(req: &SweepRequest, state: &ServiceState) -> Result<Sweep, ApiError> {
    let lats = req.latitudes()?;
    let points = latitude_sweep(
        &lats,
        &state.climate,
        &state.anchors,
        &req.baseload,
        &req.pv,
        &TradeRegime::ALL,
        REFERENCE_OPTIMAL_YIELD,
    )?;
    let usd = |v: Vec<f64>| Series { values: v, unit: "USD/MWh" };
    let curves = TradeRegime::ALL
        .iter()
        .enumerate()
        .map(|(j, &regime)| RegimeCurve {
            regime,
            beta_star: Series { values: points.iter().map(|p| p.results[j].beta_star).collect(), unit: "1" },
            unit_cost: usd(points.iter().map(|p| p.results[j].unit_cost).collect()),
            wtp: usd(points.iter().filter_map(|p| p.results[j].wtp).collect()),
        })
        .collect();
    Ok(Sweep {
        scenario: req.scenario.clone(),
        baseload: BaseloadView::from(&req.baseload),
        latitude: Series { values: lats, unit: "deg" },
        curves,
    })
}
