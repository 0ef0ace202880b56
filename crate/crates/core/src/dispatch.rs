//! Daily PV-plus-storage dispatch, the generation/storage frontier search and
//! the 50-day moving-average winter hole.
//!
//! Units: a series holds kWh per kWp per day, generation capacity is kWp,
//! storage is kWh and demand is a constant load in kW. The sub-daily cycle is
//! not simulated; it is covered by the diurnal floors (OCF >= 1.05 and half a
//! day of average output in storage), which the frontier search reserves for
//! the night cycle on top of whatever day-to-day balancing needs.

use serde::{Deserialize, Serialize};

use crate::error::{require, ModelError, Result};
use crate::model::{PvCostInputs, DIURNAL_MIN_OCF, HALF_DAYS_PER_YEAR, HOURS_PER_YEAR};

pub const DAYS_PER_YEAR: usize = 365;
pub const MOVING_AVERAGE_DAYS: usize = 50;
/// Share of charged energy that can be discharged again.
pub const STORAGE_EFFICIENCY: f64 = 0.9;

const GEN_GRID_POINTS: usize = 200;
const STORAGE_REL_TOL: f64 = 1e-6;
const UNMET_REL_TOL: f64 = 1e-9;

/// A 365-day profile of potential PV output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InsolationSeries {
    values: Vec<f64>,
    pub latitude: Option<f64>,
    pub longitude: Option<f64>,
    pub source: String,
}

impl InsolationSeries {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.len() != DAYS_PER_YEAR {
            return Err(ModelError::Data(format!(
                "series has {} days, expected {DAYS_PER_YEAR}",
                values.len()
            )));
        }
        if let Some((d, v)) = values.iter().enumerate().find(|(_, v)| !(v.is_finite() && **v >= 0.0)) {
            return Err(ModelError::Data(format!("day {}: value {v} must be finite and >= 0", d + 1)));
        }
        Ok(Self {
            values,
            latitude: None,
            longitude: None,
            source: String::new(),
        })
    }

    pub fn with_location(mut self, latitude: f64, longitude: f64) -> Self {
        self.latitude = Some(latitude);
        self.longitude = Some(longitude);
        self
    }

    pub fn with_source(mut self, source: impl Into<String>) -> Self {
        self.source = source.into();
        self
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Annual yield, kWh per kWp per year.
    pub fn annual_total(&self) -> f64 {
        self.values.iter().sum()
    }

    pub fn mean(&self) -> f64 {
        self.annual_total() / DAYS_PER_YEAR as f64
    }

    /// Same metadata, new values.
    fn map_values(&self, values: Vec<f64>) -> Result<Self> {
        Ok(Self {
            values: InsolationSeries::new(values)?.values,
            latitude: self.latitude,
            longitude: self.longitude,
            source: self.source.clone(),
        })
    }

    /// Shifts the series so that day `d` of the result is day `d + days` of `self`.
    pub fn rotated(&self, days: usize) -> Self {
        let mut values = self.values.clone();
        values.rotate_left(days % DAYS_PER_YEAR);
        Self { values, ..self.clone() }
    }
}

/// Removes 29 February from a 366-day year; 365-day years pass through.
pub fn drop_leap_day(year: &[f64]) -> Result<Vec<f64>> {
    match year.len() {
        DAYS_PER_YEAR => Ok(year.to_vec()),
        366 => {
            let mut v = year.to_vec();
            v.remove(59);
            Ok(v)
        }
        n => Err(ModelError::Data(format!("incomplete year with {n} days"))),
    }
}

/// Day-of-year mean over several years of daily data.
pub fn representative_year(years: &[Vec<f64>]) -> Result<InsolationSeries> {
    if years.is_empty() {
        return Err(ModelError::Data("need at least one full year".into()));
    }
    let mut acc = vec![0.0; DAYS_PER_YEAR];
    for year in years {
        for (a, v) in acc.iter_mut().zip(drop_leap_day(year)?) {
            *a += v;
        }
    }
    let n = years.len() as f64;
    InsolationSeries::new(acc.into_iter().map(|s| s / n).collect())
}

/// Centered circular moving average over 50 days: 25 before, the day itself
/// and 24 after.
pub fn moving_average_50(series: &InsolationSeries) -> InsolationSeries {
    let v = series.values();
    let n = v.len();
    let before = MOVING_AVERAGE_DAYS / 2;
    let smoothed = (0..n)
        .map(|d| {
            (0..MOVING_AVERAGE_DAYS)
                .map(|j| v[(d + n + j - before) % n])
                .sum::<f64>()
                / MOVING_AVERAGE_DAYS as f64
        })
        .collect();
    series.map_values(smoothed).expect("average of valid series")
}

/// `w = (max - min) / min` of the 50-day moving average.
pub fn winter_hole_from_series(series: &InsolationSeries) -> Result<f64> {
    let ma = moving_average_50(series);
    let max = ma.values().iter().cloned().fold(f64::MIN, f64::max);
    let min = ma.values().iter().cloned().fold(f64::MAX, f64::min);
    if min <= 0.0 {
        return Err(ModelError::OutsideDomain(
            "50-day minimum insolation is zero (polar night)".into(),
        ));
    }
    Ok((max - min) / min)
}

/// Rescales each day by the inverse of its 50-day average so only variability
/// shorter than the seasonal cycle remains; the annual total is preserved.
pub fn deseasonalize(series: &InsolationSeries) -> Result<InsolationSeries> {
    let ma = moving_average_50(series);
    if ma.values().iter().any(|&m| m <= 0.0) {
        return Err(ModelError::OutsideDomain(
            "50-day minimum insolation is zero (polar night)".into(),
        ));
    }
    let level = ma.mean();
    let raw: Vec<f64> = series
        .values()
        .iter()
        .zip(ma.values())
        .map(|(s, m)| s * level / m)
        .collect();
    let scale = series.annual_total() / raw.iter().sum::<f64>();
    series.map_values(raw.into_iter().map(|x| x * scale).collect())
}

/// One simulated day. Energies in kWh.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DayState {
    pub day: usize,
    pub generation: f64,
    /// Surplus taken from generation into storage, before losses.
    pub charged: f64,
    pub discharged: f64,
    pub curtailed: f64,
    pub unmet: f64,
    pub soc_start: f64,
    pub soc_end: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DispatchOutcome {
    pub feasible: bool,
    pub unmet_total: f64,
    pub soc_end_first_year: f64,
    pub soc_end_second_year: f64,
    pub trace: Vec<DayState>,
}

fn check_capacities(gen: f64, sto: f64, demand: f64) -> Result<()> {
    require(gen.is_finite() && gen >= 0.0, "gen", gen, "must be finite and >= 0")?;
    require(sto.is_finite() && sto >= 0.0, "sto", sto, "must be finite and >= 0")?;
    require(demand.is_finite() && demand > 0.0, "demand", demand, "must be finite and > 0")
}

/// Runs two years from a full store. Returns (worst daily unmet, soc after
/// year 1, soc after year 2).
fn run(series: &[f64], gen: f64, sto: f64, daily_demand: f64, mut trace: Option<&mut Vec<DayState>>) -> (f64, f64, f64, f64) {
    let mut soc = sto;
    let mut worst_unmet: f64 = 0.0;
    let mut unmet_total = 0.0;
    let mut soc_year1 = sto;
    for year in 0..2 {
        for (d, &y) in series.iter().enumerate() {
            let generation = gen * y;
            let soc_start = soc;
            let (mut charged, mut discharged, mut curtailed, mut unmet) = (0.0, 0.0, 0.0, 0.0);
            if generation >= daily_demand {
                let surplus = generation - daily_demand;
                charged = surplus.min((sto - soc) / STORAGE_EFFICIENCY);
                curtailed = surplus - charged;
                soc = (soc + charged * STORAGE_EFFICIENCY).min(sto);
            } else {
                let deficit = daily_demand - generation;
                discharged = deficit.min(soc);
                unmet = deficit - discharged;
                soc -= discharged;
            }
            worst_unmet = worst_unmet.max(unmet);
            unmet_total += unmet;
            if let Some(t) = trace.as_deref_mut() {
                t.push(DayState {
                    day: year * DAYS_PER_YEAR + d,
                    generation,
                    charged,
                    discharged,
                    curtailed,
                    unmet,
                    soc_start,
                    soc_end: soc,
                });
            }
        }
        if year == 0 {
            soc_year1 = soc;
        }
    }
    (worst_unmet, unmet_total, soc_year1, soc)
}

fn verdict(worst_unmet: f64, soc1: f64, soc2: f64, sto: f64, daily_demand: f64) -> bool {
    let tol = UNMET_REL_TOL * daily_demand;
    // the second year must not end below the first, otherwise the store drains over the years
    worst_unmet <= tol && soc2 >= soc1 - UNMET_REL_TOL * sto.max(daily_demand)
}

/// Simulates `gen` kWp and `sto` kWh serving `demand` kW for two years.
///
/// Feasible when no day leaves demand unmet and the store ends the second
/// year at least as full as the first, i.e. the schedule repeats indefinitely.
pub fn simulate_dispatch(series: &InsolationSeries, gen: f64, sto: f64, demand: f64) -> Result<DispatchOutcome> {
    check_capacities(gen, sto, demand)?;
    let daily_demand = demand * 24.0;
    let mut trace = Vec::with_capacity(2 * DAYS_PER_YEAR);
    let (worst, unmet_total, soc1, soc2) = run(series.values(), gen, sto, daily_demand, Some(&mut trace));
    Ok(DispatchOutcome {
        feasible: verdict(worst, soc1, soc2, sto, daily_demand),
        unmet_total,
        soc_end_first_year: soc1,
        soc_end_second_year: soc2,
        trace,
    })
}

/// Feasibility only, without recording a trace.
pub fn is_feasible(series: &InsolationSeries, gen: f64, sto: f64, demand: f64) -> Result<bool> {
    check_capacities(gen, sto, demand)?;
    let daily_demand = demand * 24.0;
    let (worst, _, soc1, soc2) = run(series.values(), gen, sto, daily_demand, None);
    Ok(verdict(worst, soc1, soc2, sto, daily_demand))
}

fn annual_net(series: &InsolationSeries, gen: f64, daily_demand: f64) -> f64 {
    series
        .values()
        .iter()
        .map(|&y| {
            let balance = gen * y - daily_demand;
            if balance >= 0.0 {
                STORAGE_EFFICIENCY * balance
            } else {
                balance
            }
        })
        .sum()
}

/// Smallest storage at or above `floor` that makes `gen` feasible, found by
/// bisection to 1e-6 relative. `None` when no storage size suffices.
pub fn minimal_storage(series: &InsolationSeries, gen: f64, demand: f64, floor: f64) -> Result<Option<f64>> {
    check_capacities(gen, floor, demand)?;
    if is_feasible(series, gen, floor, demand)? {
        return Ok(Some(floor));
    }
    let daily_demand = demand * 24.0;
    if annual_net(series, gen, daily_demand) < -UNMET_REL_TOL * daily_demand {
        return Ok(None);
    }
    let mut lo = floor;
    let mut hi = floor.max(daily_demand);
    let mut doublings = 0;
    while !is_feasible(series, gen, hi, demand)? {
        lo = hi;
        hi *= 2.0;
        doublings += 1;
        if doublings > 64 {
            return Ok(None);
        }
    }
    while hi - lo > STORAGE_REL_TOL * hi {
        let mid = 0.5 * (lo + hi);
        if is_feasible(series, gen, mid, demand)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(Some(hi))
}

/// A point on a generation/storage isoline.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IsolinePoint {
    /// kWp per kW of constant demand.
    pub gen_capacity: f64,
    /// kWh per kW of constant demand.
    pub storage_capacity: f64,
    pub feasible: bool,
    /// Annualized USD per kW of demand.
    pub cost: f64,
}

/// Minimal storage for each generation level, normalized per kW of demand.
pub fn isoline(series: &InsolationSeries, gen_values: &[f64], pv: &PvCostInputs) -> Result<Vec<IsolinePoint>> {
    let aic_gen = pv.aic_gen()?;
    let aic_sto = pv.aic_sto()?;
    gen_values
        .iter()
        .map(|&gen| {
            let sto = minimal_storage(series, gen, 1.0, 0.0)?;
            Ok(match sto {
                Some(s) => IsolinePoint {
                    gen_capacity: gen,
                    storage_capacity: s,
                    feasible: true,
                    cost: aic_gen * gen + aic_sto * s,
                },
                None => IsolinePoint {
                    gen_capacity: gen,
                    storage_capacity: f64::INFINITY,
                    feasible: false,
                    cost: f64::INFINITY,
                },
            })
        })
        .collect()
}

/// Total capacities needed when `interday_gen` kWp and `interday_sto` kWh
/// cover day-to-day balancing: the night cycle adds 5% generation and half a
/// day of average output in storage on top.
pub fn with_diurnal_floors(series: &InsolationSeries, interday_gen: f64, interday_sto: f64) -> (f64, f64) {
    let gen = DIURNAL_MIN_OCF * interday_gen;
    (gen, interday_sto + gen * series.annual_total() / HALF_DAYS_PER_YEAR)
}

/// Whether total capacities `(gen, sto)` serve `demand` once the diurnal
/// floors are set aside for the night cycle.
pub fn system_feasible(series: &InsolationSeries, gen: f64, sto: f64, demand: f64) -> Result<bool> {
    check_capacities(gen, sto, demand)?;
    let interday_gen = gen / DIURNAL_MIN_OCF;
    let interday_sto = sto - gen * series.annual_total() / HALF_DAYS_PER_YEAR;
    if interday_sto < -UNMET_REL_TOL * sto.max(1.0) {
        return Ok(false);
    }
    is_feasible(series, interday_gen, interday_sto.max(0.0), demand)
}

/// Cost-minimal feasible generation/storage pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GsOptimum {
    /// kWp.
    pub gen: f64,
    /// kWh.
    pub sto: f64,
    /// Storage beyond the diurnal floor, kWh.
    pub interday_sto: f64,
    /// Variability-free generation need, kWp.
    pub gen_min: f64,
    pub ocf: f64,
    /// kWh per kWp.
    pub storage_ratio: f64,
    /// Annualized USD.
    pub annual_cost: f64,
    /// USD per MWh of demand served.
    pub unit_cost: f64,
}

/// Searches the feasibility frontier for the cheapest pair.
///
/// Day-to-day balancing is simulated with the diurnal floors set aside (see
/// [`with_diurnal_floors`]), so OCF >= 1.05 and S/G >= E_p / 730 by
/// construction. Total generation runs over 200 log-spaced points from
/// `1.05 gen_min` to `(2 + w) gen_min`; the range is widened while the best
/// point sits on its upper edge, and the best grid cell is refined by
/// golden-section search.
pub fn optimize_gs(series: &InsolationSeries, pv: &PvCostInputs, demand: f64) -> Result<GsOptimum> {
    require(demand.is_finite() && demand > 0.0, "demand", demand, "must be finite and > 0")?;
    let annual = series.annual_total();
    if annual <= 0.0 {
        return Err(ModelError::Infeasible("series has no output".into()));
    }
    let aic_gen = pv.aic_gen()?;
    let aic_sto = pv.aic_sto()?;
    let w = winter_hole_from_series(series)?;
    let gen_min = demand * HOURS_PER_YEAR / annual;

    // interday generation -> (total sto, cost)
    let evaluate = |g: f64| -> Result<Option<(f64, f64, f64)>> {
        Ok(minimal_storage(series, g, demand, 0.0)?.map(|s| {
            let (gen, sto) = with_diurnal_floors(series, g, s);
            (s, sto, aic_gen * gen + aic_sto * sto)
        }))
    };

    let lo = gen_min;
    let mut hi = (2.0 + w) * gen_min / DIURNAL_MIN_OCF;
    let mut extensions = 0;
    let (grid, best_idx, best) = loop {
        let ratio = (hi / lo).powf(1.0 / (GEN_GRID_POINTS - 1) as f64);
        let grid: Vec<f64> = (0..GEN_GRID_POINTS).map(|i| lo * ratio.powi(i as i32)).collect();
        let mut best: Option<(usize, f64)> = None;
        for (i, &g) in grid.iter().enumerate() {
            if let Some((_, _, c)) = evaluate(g)? {
                if best.is_none_or(|(_, bc)| c < bc) {
                    best = Some((i, c));
                }
            }
        }
        match best {
            Some((i, _)) if i == GEN_GRID_POINTS - 1 && extensions < 8 => {
                hi *= 2.0;
                extensions += 1;
            }
            Some((i, c)) => {
                let g = grid[i];
                break (grid, i, (g, c));
            }
            None if extensions < 8 => {
                hi *= 2.0;
                extensions += 1;
            }
            None => {
                return Err(ModelError::Infeasible(format!(
                    "no feasible storage for generation up to {:.3} x gen_min",
                    hi / gen_min
                )))
            }
        }
    };

    let (mut g_best, mut cost) = best;
    let a = grid[best_idx.saturating_sub(1)];
    let b = grid[(best_idx + 1).min(grid.len() - 1)];
    if b > a {
        let phi = 0.5 * (5f64.sqrt() - 1.0);
        let probe = |g: f64| -> Result<f64> { Ok(evaluate(g)?.map_or(f64::INFINITY, |(_, _, c)| c)) };
        let (mut x0, mut x1) = (a, b);
        let mut c1 = x1 - phi * (x1 - x0);
        let mut c2 = x0 + phi * (x1 - x0);
        let mut f1 = probe(c1)?;
        let mut f2 = probe(c2)?;
        for _ in 0..30 {
            if f1 <= f2 {
                x1 = c2;
                c2 = c1;
                f2 = f1;
                c1 = x1 - phi * (x1 - x0);
                f1 = probe(c1)?;
            } else {
                x0 = c1;
                c1 = c2;
                f1 = f2;
                c2 = x0 + phi * (x1 - x0);
                f2 = probe(c2)?;
            }
        }
        let (g, c) = if f1 <= f2 { (c1, f1) } else { (c2, f2) };
        if c < cost {
            g_best = g;
            cost = c;
        }
    }

    let (interday_sto, sto, cost_check) = evaluate(g_best)?.expect("best point is feasible");
    debug_assert!((cost_check - cost).abs() <= 1e-9 * cost);
    let (gen, _) = with_diurnal_floors(series, g_best, interday_sto);
    Ok(GsOptimum {
        gen,
        sto,
        interday_sto,
        gen_min,
        ocf: gen / gen_min,
        storage_ratio: sto / gen,
        annual_cost: cost,
        unit_cost: cost / (demand * HOURS_PER_YEAR) * 1000.0,
    })
}
