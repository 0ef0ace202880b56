//! Per-cell evaluation of all trade regimes and latitude aggregation.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::dispatch::{winter_hole_from_series, InsolationSeries};
use crate::error::{require, ModelError, Result};
use crate::model::{evaluate_regimes, BaseloadBackupCost, PvCostInputs, ScenarioResult, SiteParams, TradeRegime};
use crate::presets::{CostPreset, REFERENCE_OPTIMAL_YIELD};

use super::anchors::AnchorTable;
use super::synthetic::{synthetic_latitude_series, SyntheticClimate, MAX_SYNTHETIC_LATITUDE};

/// Cells beyond this absolute latitude are not evaluated.
pub const DOMAIN_MAX_LATITUDE: f64 = 55.0;

/// One grid cell. `winter_hole` is `None` when the series has a zero
/// 50-day minimum (polar night).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridCell {
    pub lat: f64,
    pub lon: f64,
    /// kWh/kWp/yr.
    pub yield_ep: f64,
    pub winter_hole: Option<f64>,
    #[serde(skip)]
    pub series: Option<InsolationSeries>,
}

impl GridCell {
    /// Cell with the winter hole taken from `series` and the given yield.
    pub fn from_series(lat: f64, lon: f64, series: InsolationSeries, yield_ep: f64) -> Result<Self> {
        let winter_hole = match winter_hole_from_series(&series) {
            Ok(w) => Some(w),
            Err(ModelError::OutsideDomain(_)) => None,
            Err(e) => return Err(e),
        };
        Ok(Self {
            lat,
            lon,
            yield_ep,
            winter_hole,
            series: Some(series.with_location(lat, lon)),
        })
    }

    pub fn from_params(lat: f64, lon: f64, yield_ep: f64, winter_hole: f64) -> Self {
        Self {
            lat,
            lon,
            yield_ep,
            winter_hole: Some(winter_hole),
            series: None,
        }
    }

    /// Why the cell is skipped, if it is.
    pub fn domain_issue(&self) -> Option<String> {
        if !(self.lat.abs() <= DOMAIN_MAX_LATITUDE) {
            Some(format!("|lat| = {} beyond {DOMAIN_MAX_LATITUDE}", self.lat.abs()))
        } else if self.winter_hole.is_none() {
            Some("zero 50-day minimum (polar night)".into())
        } else {
            None
        }
    }

    pub fn in_domain(&self) -> bool {
        self.domain_issue().is_none()
    }

    pub fn site_params(&self, anchors: &AnchorTable, estar: f64) -> Result<SiteParams> {
        if let Some(issue) = self.domain_issue() {
            return Err(ModelError::OutsideDomain(issue));
        }
        let (ocf, storage_ratio) = anchors.site_params_at(self.lat, self.yield_ep);
        let site = SiteParams {
            latitude: self.lat,
            yield_ep: self.yield_ep,
            winter_hole: self.winter_hole.unwrap_or_default(),
            ocf,
            storage_ratio,
            optimal_yield_estar: estar,
        };
        site.validate()?;
        Ok(site)
    }
}

/// A cell that produced no results.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellIssue {
    pub lat: f64,
    pub lon: f64,
    pub outside_domain: bool,
    pub reason: String,
}

/// Cells plus what was rejected while building them.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub cells: Vec<GridCell>,
    /// Synthetic grids use the reference optimal yield by default.
    pub synthetic: bool,
    pub rejected: Vec<CellIssue>,
}

/// Zonally uniform grid from the synthetic climate with cell centres at
/// half steps, e.g. `+-2.5, +-7.5, ...` for a 5 degree step.
pub fn synthetic_grid(climate: &SyntheticClimate, lat_step: f64, lon_step: f64) -> Result<Grid> {
    require(lat_step.is_finite() && lat_step > 0.0 && lat_step <= 30.0, "lat_step", lat_step, "must lie in (0, 30]")?;
    require(lon_step.is_finite() && lon_step > 0.0 && lon_step <= 360.0, "lon_step", lon_step, "must lie in (0, 360]")?;
    let n_lat = (2.0 * MAX_SYNTHETIC_LATITUDE / lat_step).floor() as usize;
    let lat0 = -(n_lat as f64) * lat_step / 2.0 + lat_step / 2.0;
    let n_lon = (360.0 / lon_step).floor().max(1.0) as usize;
    let lon0 = -180.0 + lon_step / 2.0;
    let rows: Vec<Vec<GridCell>> = (0..n_lat)
        .into_par_iter()
        .map(|i| {
            let lat = lat0 + i as f64 * lat_step;
            let series = synthetic_latitude_series(lat, climate)?;
            let ep = series.annual_total();
            (0..n_lon)
                .map(|j| GridCell::from_series(lat, lon0 + j as f64 * lon_step, series.clone(), ep))
                .collect()
        })
        .collect::<Result<_>>()?;
    Ok(Grid {
        cells: rows.into_iter().flatten().collect(),
        synthetic: true,
        rejected: Vec::new(),
    })
}

/// Baseload/backup cost given by preset name or explicitly.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum BaseloadChoice {
    Preset(CostPreset),
    Explicit(BaseloadBackupCost),
}

impl BaseloadChoice {
    pub fn resolve(&self) -> Result<BaseloadBackupCost> {
        match self {
            BaseloadChoice::Preset(p) => Ok(p.baseload()),
            BaseloadChoice::Explicit(bb) => {
                bb.validate()?;
                Ok(*bb)
            }
        }
    }
}

/// How `E*_p` is chosen for the global regime.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EstarChoice {
    /// Quantile of in-domain cell yields; synthetic grids fall back to the
    /// reference value.
    Quantile { q: f64 },
    Fixed { value: f64 },
}

impl Default for EstarChoice {
    fn default() -> Self {
        EstarChoice::Quantile { q: 0.75 }
    }
}

fn default_regimes() -> Vec<TradeRegime> {
    TradeRegime::ALL.to_vec()
}

fn default_label() -> String {
    "run".into()
}

fn default_baseload() -> BaseloadChoice {
    BaseloadChoice::Preset(CostPreset::High)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    #[serde(default = "default_label")]
    pub label: String,
    #[serde(default = "default_baseload")]
    pub baseload: BaseloadChoice,
    #[serde(default)]
    pub pv: PvCostInputs,
    #[serde(default = "default_regimes")]
    pub regimes: Vec<TradeRegime>,
    #[serde(default)]
    pub estar: EstarChoice,
    /// Anchor CSV; the bundled table when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub anchors: Option<String>,
    /// Transmission unit cost, USD/MWh, for gains from trade.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub transmission_cost: Option<f64>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            label: default_label(),
            baseload: default_baseload(),
            pv: PvCostInputs::default(),
            regimes: default_regimes(),
            estar: EstarChoice::default(),
            anchors: None,
            transmission_cost: None,
        }
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| ModelError::Data(format!("run config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.baseload.resolve()?;
        self.pv.validate()?;
        if self.regimes.is_empty() {
            return Err(ModelError::Data("run config lists no regimes".into()));
        }
        match self.estar {
            EstarChoice::Quantile { q } => require(q.is_finite() && (0.0..=1.0).contains(&q), "q", q, "must lie in [0, 1]"),
            EstarChoice::Fixed { value } => require(value.is_finite() && value > 0.0, "estar", value, "must be > 0"),
        }?;
        if let Some(tc) = self.transmission_cost {
            require(tc.is_finite() && tc >= 0.0, "transmission_cost", tc, "must be >= 0")?;
        }
        Ok(())
    }
}

/// Linear-interpolated quantile (type 7) of unsorted values.
pub fn quantile(values: &[f64], q: f64) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let h = q.clamp(0.0, 1.0) * (v.len() - 1) as f64;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    Some(v[lo] + (h - lo as f64) * (v[hi] - v[lo]))
}

/// `E*_p` for a grid under `choice`.
pub fn resolve_estar(grid: &Grid, choice: EstarChoice) -> f64 {
    match choice {
        EstarChoice::Fixed { value } => value,
        EstarChoice::Quantile { .. } if grid.synthetic => REFERENCE_OPTIMAL_YIELD,
        EstarChoice::Quantile { q } => {
            let yields: Vec<f64> = grid.cells.iter().filter(|c| c.in_domain()).map(|c| c.yield_ep).collect();
            quantile(&yields, q).unwrap_or(REFERENCE_OPTIMAL_YIELD)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellResult {
    pub lat: f64,
    pub lon: f64,
    pub site: SiteParams,
    /// In the order of the run's regime list.
    pub results: Vec<ScenarioResult>,
}

impl CellResult {
    pub fn get(&self, regime: TradeRegime) -> Option<&ScenarioResult> {
        self.results.iter().find(|r| r.regime == regime)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationRun {
    pub label: String,
    pub config: RunConfig,
    pub baseload: BaseloadBackupCost,
    pub estar: f64,
    /// Hex SHA-256 over config, anchors and cell inputs.
    pub input_hash: String,
    /// Sorted by `(lat, lon)`.
    pub cells: Vec<CellResult>,
    /// Loader rejections, skipped and failed cells.
    pub issues: Vec<CellIssue>,
}

fn cell_order(a: (f64, f64), b: (f64, f64)) -> std::cmp::Ordering {
    a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1))
}

/// Hash of everything that determines a run's numbers.
pub fn run_input_hash(grid: &Grid, config: &RunConfig, anchors: &AnchorTable, estar: f64) -> String {
    #[derive(Serialize)]
    struct HashInput<'a> {
        config: &'a RunConfig,
        estar: f64,
        anchors: &'a AnchorTable,
        cells: Vec<(f64, f64, f64, Option<f64>)>,
        rejected: &'a [CellIssue],
    }
    let input = HashInput {
        config,
        estar,
        anchors,
        cells: grid.cells.iter().map(|c| (c.lat, c.lon, c.yield_ep, c.winter_hole)).collect(),
        rejected: &grid.rejected,
    };
    let bytes = serde_json::to_vec(&input).expect("hash input serializes");
    hex::encode(Sha256::digest(&bytes))
}

/// Evaluates every in-domain cell under every configured regime. Failures are
/// collected per cell. Results do not depend on the rayon pool size.
pub fn evaluate_grid(grid: &Grid, config: &RunConfig, anchors: &AnchorTable) -> Result<EvaluationRun> {
    config.validate()?;
    let baseload = config.baseload.resolve()?;
    let estar = resolve_estar(grid, config.estar);
    let outcomes: Vec<std::result::Result<CellResult, CellIssue>> = grid
        .cells
        .par_iter()
        .map(|cell| {
            let issue = |outside_domain: bool, reason: String| CellIssue {
                lat: cell.lat,
                lon: cell.lon,
                outside_domain,
                reason,
            };
            if let Some(reason) = cell.domain_issue() {
                return Err(issue(true, reason));
            }
            let site = cell.site_params(anchors, estar).map_err(|e| issue(false, e.to_string()))?;
            let results = evaluate_regimes(&site, &baseload, &config.pv, &config.regimes, config.transmission_cost)
                .map_err(|e| issue(false, e.to_string()))?;
            Ok(CellResult {
                lat: cell.lat,
                lon: cell.lon,
                site,
                results,
            })
        })
        .collect();
    let mut cells = Vec::new();
    let mut issues = grid.rejected.clone();
    for o in outcomes {
        match o {
            Ok(c) => cells.push(c),
            Err(i) => issues.push(i),
        }
    }
    cells.sort_by(|a, b| cell_order((a.lat, a.lon), (b.lat, b.lon)));
    issues.sort_by(|a, b| cell_order((a.lat, a.lon), (b.lat, b.lon)));
    Ok(EvaluationRun {
        label: config.label.clone(),
        config: config.clone(),
        baseload,
        estar,
        input_hash: run_input_hash(grid, config, anchors, estar),
        cells,
        issues,
    })
}

/// Regime results at one latitude of the synthetic climate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub lat: f64,
    pub site: SiteParams,
    pub results: Vec<ScenarioResult>,
}

/// Evaluates the synthetic climate along `lats` (each within +-55).
pub fn latitude_sweep(
    lats: &[f64],
    climate: &SyntheticClimate,
    anchors: &AnchorTable,
    baseload: &BaseloadBackupCost,
    pv: &PvCostInputs,
    regimes: &[TradeRegime],
    estar: f64,
) -> Result<Vec<SweepPoint>> {
    lats.par_iter()
        .map(|&lat| {
            require(lat.is_finite() && lat.abs() <= DOMAIN_MAX_LATITUDE, "lat", lat, "sweep covers |lat| <= 55")?;
            let series = synthetic_latitude_series(lat, climate)?;
            let ep = series.annual_total();
            let cell = GridCell::from_series(lat, 0.0, series, ep)?;
            let site = cell.site_params(anchors, estar)?;
            let results = evaluate_regimes(&site, baseload, pv, regimes, None)?;
            Ok(SweepPoint { lat, site, results })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegimeMean {
    pub regime: TradeRegime,
    pub beta_star: f64,
    pub unit_cost: f64,
    pub wtp: Option<f64>,
}

/// Averages over the cells whose latitude lies in `[lat_lo, lat_lo + 1)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileRow {
    pub lat_lo: f64,
    pub lat_hi: f64,
    pub cells: usize,
    pub regimes: Vec<RegimeMean>,
}

impl ProfileRow {
    pub fn get(&self, regime: TradeRegime) -> Option<&RegimeMean> {
        self.regimes.iter().find(|r| r.regime == regime)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LatitudeProfile {
    pub regimes: Vec<TradeRegime>,
    pub rows: Vec<ProfileRow>,
    /// Empty bands between the first and last populated band.
    pub notes: Vec<String>,
}

/// Per-degree latitude means of beta, unit cost and WTP.
pub fn latitude_profile(run: &EvaluationRun) -> LatitudeProfile {
    let regimes = run.config.regimes.clone();
    let mut bands: BTreeMap<i64, Vec<&CellResult>> = BTreeMap::new();
    for c in &run.cells {
        bands.entry(c.lat.floor() as i64).or_default().push(c);
    }
    let mut notes = Vec::new();
    if let (Some(&lo), Some(&hi)) = (bands.keys().next(), bands.keys().next_back()) {
        for band in lo..=hi {
            if !bands.contains_key(&band) {
                notes.push(format!("no cells in [{band}, {})", band + 1));
            }
        }
    }
    let rows = bands
        .into_iter()
        .map(|(band, cells)| {
            let n = cells.len() as f64;
            let means = regimes
                .iter()
                .map(|&regime| {
                    let rs: Vec<&ScenarioResult> = cells.iter().filter_map(|c| c.get(regime)).collect();
                    let mean = |f: &dyn Fn(&ScenarioResult) -> f64| rs.iter().map(|r| f(r)).sum::<f64>() / n;
                    RegimeMean {
                        regime,
                        beta_star: mean(&|r| r.beta_star),
                        unit_cost: mean(&|r| r.unit_cost),
                        wtp: regime.is_trade().then(|| mean(&|r| r.wtp.unwrap_or_default())),
                    }
                })
                .collect();
            ProfileRow {
                lat_lo: band as f64,
                lat_hi: band as f64 + 1.0,
                cells: cells.len(),
                regimes: means,
            }
        })
        .collect();
    LatitudeProfile { regimes, rows, notes }
}
