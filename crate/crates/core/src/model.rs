//! Closed-form cost model: seasonality algebra, piecewise autarky cost,
//! optimal PV coverage, regime-dependent PV unit cost, willingness to pay and
//! gains from trade.
//!
//! Every cost entering the piecewise autarky cost is expressed in USD per MWh
//! consumed. The baseload/backup fixed cost is carried per MW-year and
//! converted by dividing by 8760 h of full utilization.

use serde::{Deserialize, Serialize};

use crate::error::{require, ModelError, Result};
use crate::finance::capital_recovery_factor;

pub const HOURS_PER_YEAR: f64 = 8760.0;
/// Generation needed to shift half a day's demand through storage with 10% loss.
pub const DIURNAL_MIN_OCF: f64 = 1.05;
/// Half-days per year; storage of `E_p / 730` holds half a day of output.
pub const HALF_DAYS_PER_YEAR: f64 = 730.0;

/// Relative slack used when two costs are compared for a tie.
const TIE_RELATIVE: f64 = 1e-12;

/// Cost structure of the synthetic dispatchable technology.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BaseloadBackupCost {
    /// Annualized fixed cost, USD per MW-year.
    pub fixed_annual: f64,
    /// Variable cost, USD per MWh.
    pub variable_unit: f64,
}

impl BaseloadBackupCost {
    pub fn new(fixed_annual: f64, variable_unit: f64) -> Result<Self> {
        let bb = Self {
            fixed_annual,
            variable_unit,
        };
        bb.validate()?;
        Ok(bb)
    }

    /// Builds the cost from a total unit cost (USD/MWh) and the fixed share `k`.
    pub fn from_unit_total(total_per_mwh: f64, fixed_share: f64) -> Result<Self> {
        require(
            total_per_mwh.is_finite() && total_per_mwh > 0.0,
            "total_per_mwh",
            total_per_mwh,
            "must be finite and > 0",
        )?;
        check_share(fixed_share)?;
        Self::new(
            fixed_share * total_per_mwh * HOURS_PER_YEAR,
            (1.0 - fixed_share) * total_per_mwh,
        )
    }

    pub fn validate(&self) -> Result<()> {
        require(
            self.fixed_annual.is_finite() && self.fixed_annual >= 0.0,
            "fixed_annual",
            self.fixed_annual,
            "must be finite and >= 0",
        )?;
        require(
            self.variable_unit.is_finite() && self.variable_unit >= 0.0,
            "variable_unit",
            self.variable_unit,
            "must be finite and >= 0",
        )?;
        require(
            self.fixed_annual + self.variable_unit > 0.0,
            "total",
            0.0,
            "baseload cost must be positive",
        )
    }

    /// `f_B` in USD/MWh at year-round operation.
    pub fn fixed_per_mwh(&self) -> f64 {
        self.fixed_annual / HOURS_PER_YEAR
    }

    /// `v_B` in USD/MWh.
    pub fn variable_per_mwh(&self) -> f64 {
        self.variable_unit
    }

    /// `C_B = f_B + v_B` in USD/MWh.
    pub fn total_per_mwh(&self) -> f64 {
        self.fixed_per_mwh() + self.variable_unit
    }

    /// Fixed share `k = f_B / C_B`.
    pub fn fixed_share(&self) -> f64 {
        self.fixed_per_mwh() / self.total_per_mwh()
    }
}

/// PV and battery investment inputs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PvCostInputs {
    /// USD per kWp.
    pub capex_gen: f64,
    pub lifetime_gen: f64,
    /// USD per kWh of storage.
    pub capex_sto: f64,
    pub lifetime_sto: f64,
    pub discount_rate: f64,
}

impl Default for PvCostInputs {
    fn default() -> Self {
        Self {
            capex_gen: 500.0,
            lifetime_gen: 30.0,
            capex_sto: 200.0,
            lifetime_sto: 15.0,
            discount_rate: 0.05,
        }
    }
}

impl PvCostInputs {
    pub fn validate(&self) -> Result<()> {
        require(
            self.capex_gen.is_finite() && self.capex_gen > 0.0,
            "capex_gen",
            self.capex_gen,
            "must be > 0",
        )?;
        require(
            self.capex_sto.is_finite() && self.capex_sto > 0.0,
            "capex_sto",
            self.capex_sto,
            "must be > 0",
        )?;
        require(
            self.discount_rate.is_finite() && self.discount_rate >= 0.0,
            "discount_rate",
            self.discount_rate,
            "must be finite and >= 0",
        )?;
        for (name, years) in [("lifetime_gen", self.lifetime_gen), ("lifetime_sto", self.lifetime_sto)] {
            require(years.is_finite() && years >= 1.0, name, years, "must be >= 1 year")?;
        }
        Ok(())
    }

    /// Annualized generation cost, USD per kWp-year.
    pub fn aic_gen(&self) -> Result<f64> {
        self.validate()?;
        Ok(self.capex_gen * capital_recovery_factor(self.discount_rate, self.lifetime_gen)?)
    }

    /// Annualized storage cost, USD per kWh-year.
    pub fn aic_sto(&self) -> Result<f64> {
        self.validate()?;
        Ok(self.capex_sto * capital_recovery_factor(self.discount_rate, self.lifetime_sto)?)
    }
}

/// Inputs describing one location.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SiteParams {
    pub latitude: f64,
    /// PV yield `E_p`, kWh per kWp per year.
    pub yield_ep: f64,
    /// Winter hole coefficient `w`.
    pub winter_hole: f64,
    /// Overcapacity factor.
    pub ocf: f64,
    /// Storage per unit generation capacity, kWh per kWp.
    pub storage_ratio: f64,
    /// Yield at the globally optimal allocation `E*_p`, kWh per kWp per year.
    pub optimal_yield_estar: f64,
}

impl SiteParams {
    pub fn validate(&self) -> Result<()> {
        require(
            self.yield_ep.is_finite() && self.yield_ep > 0.0,
            "yield_ep",
            self.yield_ep,
            "must be > 0",
        )?;
        check_winter_hole(self.winter_hole)?;
        require(
            self.ocf.is_finite() && self.ocf >= 1.0,
            "ocf",
            self.ocf,
            "must be >= 1",
        )?;
        require(
            self.storage_ratio.is_finite() && self.storage_ratio >= 0.0,
            "storage_ratio",
            self.storage_ratio,
            "must be >= 0",
        )?;
        require(
            self.optimal_yield_estar.is_finite() && self.optimal_yield_estar > 0.0,
            "optimal_yield_estar",
            self.optimal_yield_estar,
            "must be > 0",
        )
    }

    pub fn adjustment_factor(&self) -> Result<f64> {
        adjustment_factor(self.winter_hole)
    }

    pub fn excess_threshold(&self) -> Result<f64> {
        excess_threshold(self.winter_hole)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TradeRegime {
    Autarky,
    #[serde(alias = "ns", alias = "north-south")]
    NorthSouth,
    #[serde(alias = "ew", alias = "east-west")]
    EastWest,
    Global,
}

impl TradeRegime {
    pub const ALL: [TradeRegime; 4] = [
        TradeRegime::Autarky,
        TradeRegime::NorthSouth,
        TradeRegime::EastWest,
        TradeRegime::Global,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            TradeRegime::Autarky => "autarky",
            TradeRegime::NorthSouth => "north_south",
            TradeRegime::EastWest => "east_west",
            TradeRegime::Global => "global",
        }
    }

    pub fn is_trade(&self) -> bool {
        !matches!(self, TradeRegime::Autarky)
    }
}

impl std::fmt::Display for TradeRegime {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for TradeRegime {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "autarky" => Ok(TradeRegime::Autarky),
            "north_south" | "ns" => Ok(TradeRegime::NorthSouth),
            "east_west" | "ew" => Ok(TradeRegime::EastWest),
            "global" => Ok(TradeRegime::Global),
            _ => Err(ModelError::Data(format!("unknown trade regime '{s}'"))),
        }
    }
}

/// Outcome of one regime at one site. Costs are USD/MWh.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScenarioResult {
    pub regime: TradeRegime,
    pub beta_star: f64,
    pub unit_cost: f64,
    pub pv_unit_cost: f64,
    /// Autarky unit cost minus this regime's unit cost; `None` for autarky.
    pub wtp: Option<f64>,
    /// `wtp - tc` when a transmission unit cost was supplied.
    pub gains: Option<f64>,
}

fn check_winter_hole(w: f64) -> Result<()> {
    require(w.is_finite() && w >= 0.0, "w", w, "must be finite and >= 0")
}

fn check_share(k: f64) -> Result<()> {
    require(k.is_finite() && (0.0..=1.0).contains(&k), "k", k, "must lie in [0, 1]")
}

fn check_cost(name: &'static str, c: f64) -> Result<()> {
    require(c.is_finite() && c >= 0.0, name, c, "must be finite and >= 0")
}

/// `a = w / (w + 1)`: backup capacity per unit PV needed through the winter hole.
pub fn adjustment_factor(w: f64) -> Result<f64> {
    check_winter_hole(w)?;
    Ok(w / (w + 1.0))
}

/// `e = (w + 2) / (2 (w + 1))`: coverage at which summer output meets demand.
pub fn excess_threshold(w: f64) -> Result<f64> {
    check_winter_hole(w)?;
    Ok((w + 2.0) / (2.0 * (w + 1.0)))
}

/// The two pieces of the autarky cost.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AutarkyBranch {
    /// `beta <= e`: PV plus backup plus baseload.
    BelowExcess,
    /// `beta >= e`: PV with curtailed excess plus part-year backup.
    AboveExcess,
}

/// Evaluates one branch of the autarky cost without choosing it from `beta`.
///
/// The upper branch is undefined at `w = 0` (where `e = 1`).
pub fn autarky_branch_cost(
    branch: AutarkyBranch,
    beta: f64,
    w: f64,
    bb: &BaseloadBackupCost,
    pv_cost: f64,
) -> Result<f64> {
    let a = adjustment_factor(w)?;
    let e = excess_threshold(w)?;
    let fb = bb.fixed_per_mwh();
    let vb = bb.variable_per_mwh();
    match branch {
        AutarkyBranch::BelowExcess => {
            let at_excess = pv_cost + a * (fb + vb / 2.0);
            Ok(beta / e * at_excess + (e - beta) / e * (fb + vb))
        }
        AutarkyBranch::AboveExcess => {
            require(w > 0.0, "w", w, "upper branch needs w > 0")?;
            // share of the [e, 1] span covered so far; drives curtailment
            let x = (beta - e) / (1.0 - e);
            let backup_left = 1.0 - x;
            Ok(pv_cost * (1.0 + x * w) + a * backup_left * fb + a * backup_left * backup_left * vb / 2.0)
        }
    }
}

/// Unit cost of electricity in autarky at coverage `beta`, USD/MWh.
///
/// `pv_cost` is the subseasonally dispatchable PV unit cost of the site.
pub fn autarky_cost(beta: f64, w: f64, bb: &BaseloadBackupCost, pv_cost: f64) -> Result<f64> {
    require(
        beta.is_finite() && (0.0..=1.0).contains(&beta),
        "beta",
        beta,
        "must lie in [0, 1]",
    )?;
    check_cost("pv_cost", pv_cost)?;
    bb.validate()?;
    let e = excess_threshold(w)?;
    let branch = if beta <= e {
        AutarkyBranch::BelowExcess
    } else {
        AutarkyBranch::AboveExcess
    };
    autarky_branch_cost(branch, beta, w, bb, pv_cost)
}

/// PV-to-baseload cost ratio below which optimal coverage jumps from 0 to `e`.
pub fn entry_threshold_ratio(w: f64, k: f64) -> Result<f64> {
    check_winter_hole(w)?;
    check_share(k)?;
    Ok((w + 2.0 - k * w) / (2.0 * (w + 1.0)))
}

/// Unclipped stationary point of the upper branch, in cost form.
///
/// `None` when the upper branch is linear (`v_B = 0` or `w = 0`).
pub fn interior_beta(w: f64, bb: &BaseloadBackupCost, pv_cost: f64) -> Result<Option<f64>> {
    let a = adjustment_factor(w)?;
    let e = excess_threshold(w)?;
    let fb = bb.fixed_per_mwh();
    let vb = bb.variable_per_mwh();
    let curvature = a * vb;
    if curvature == 0.0 {
        return Ok(None);
    }
    Ok(Some(
        (a * vb + a * fb * (1.0 - e) - w * pv_cost * (1.0 - e)) / curvature,
    ))
}

/// Unclipped stationary point of the upper branch written in `(k, C_P/C_B)`.
pub fn interior_beta_from_ratio(w: f64, k: f64, ratio: f64) -> Result<Option<f64>> {
    check_winter_hole(w)?;
    check_share(k)?;
    let denom = 2.0 * (k + k * w - w - 1.0);
    if denom == 0.0 || w == 0.0 {
        return Ok(None);
    }
    Ok(Some(
        ratio * (w * w + w) / denom + (2.0 * (k - w - 1.0) + k * w) / denom,
    ))
}

fn ties_or_below(candidate: f64, reference: f64) -> bool {
    candidate <= reference + TIE_RELATIVE * reference.abs().max(1e-300)
}

/// Global minimizer of the autarky cost over `beta` in `[0, 1]`.
///
/// Exact ties resolve toward more PV.
pub fn optimal_beta(w: f64, bb: &BaseloadBackupCost, pv_cost: f64) -> Result<f64> {
    check_winter_hole(w)?;
    check_cost("pv_cost", pv_cost)?;
    bb.validate()?;
    let baseload = bb.total_per_mwh();
    if w == 0.0 {
        return Ok(if ties_or_below(pv_cost, baseload) { 1.0 } else { 0.0 });
    }
    let a = adjustment_factor(w)?;
    let e = excess_threshold(w)?;
    let fb = bb.fixed_per_mwh();
    let vb = bb.variable_per_mwh();
    let at_excess = pv_cost + a * (fb + vb / 2.0);
    if !ties_or_below(at_excess, baseload) {
        return Ok(0.0);
    }
    match interior_beta(w, bb, pv_cost)? {
        Some(beta) => Ok(beta.clamp(e, 1.0)),
        None => {
            // linear upper branch: all-in, or stop at e when flat (entry boundary)
            let slope = pv_cost * w - a * fb;
            Ok(if slope < -TIE_RELATIVE * a * fb { 1.0 } else { e })
        }
    }
}

/// Unit cost of subseasonally dispatchable PV under `regime`, USD/MWh.
///
/// East-West trade removes the diurnal-minimum generation and storage from
/// the autarky cost while keeping the base generation term `AIC_gen / E_p`.
pub fn pv_unit_cost(site: &SiteParams, pv: &PvCostInputs, regime: TradeRegime) -> Result<f64> {
    site.validate()?;
    let aic_gen = pv.aic_gen()?;
    let aic_sto = pv.aic_sto()?;
    let ep = site.yield_ep;
    // USD per kWh -> USD per MWh
    let per_kwh = match regime {
        TradeRegime::Autarky | TradeRegime::NorthSouth => {
            (site.ocf * aic_gen + site.storage_ratio * aic_sto) / ep
        }
        TradeRegime::EastWest => {
            if site.ocf < DIURNAL_MIN_OCF * (1.0 - TIE_RELATIVE) {
                return Err(ModelError::DiurnalFloor {
                    what: "ocf",
                    value: site.ocf,
                    floor: DIURNAL_MIN_OCF,
                });
            }
            let sg_floor = ep / HALF_DAYS_PER_YEAR;
            if site.storage_ratio < sg_floor * (1.0 - TIE_RELATIVE) {
                return Err(ModelError::DiurnalFloor {
                    what: "storage_ratio",
                    value: site.storage_ratio,
                    floor: sg_floor,
                });
            }
            let variability = (site.ocf - DIURNAL_MIN_OCF) / ep * aic_gen
                + (site.storage_ratio / ep - 1.0 / HALF_DAYS_PER_YEAR) * aic_sto;
            aic_gen / ep + variability.max(0.0)
        }
        TradeRegime::Global => aic_gen / site.optimal_yield_estar,
    };
    Ok(per_kwh * 1000.0)
}

/// Optimal coverage and unit cost for a regime given its PV unit cost.
///
/// North-South and global trade act as if `w = 0`.
pub fn regime_outcome(
    regime: TradeRegime,
    w: f64,
    bb: &BaseloadBackupCost,
    pv_cost: f64,
) -> Result<(f64, f64)> {
    let effective_w = match regime {
        TradeRegime::Autarky | TradeRegime::EastWest => w,
        TradeRegime::NorthSouth | TradeRegime::Global => {
            check_winter_hole(w)?;
            0.0
        }
    };
    let beta = optimal_beta(effective_w, bb, pv_cost)?;
    let cost = autarky_cost(beta, effective_w, bb, pv_cost)?;
    Ok((beta, cost))
}

/// `WTP = c^A - c^T`.
pub fn willingness_to_pay(c_autarky: f64, c_trade: f64) -> Result<f64> {
    check_cost("c_autarky", c_autarky)?;
    check_cost("c_trade", c_trade)?;
    Ok(c_autarky - c_trade)
}

/// `G = c^A - (c^T + TC)`; negative when trade does not pay off.
pub fn gains_from_trade(c_autarky: f64, c_trade: f64, tc: f64) -> Result<f64> {
    check_cost("tc", tc)?;
    Ok(willingness_to_pay(c_autarky, c_trade)? - tc)
}

/// Evaluates `regime` at a site, with WTP measured against autarky.
pub fn regime_unit_cost(
    site: &SiteParams,
    bb: &BaseloadBackupCost,
    pv: &PvCostInputs,
    regime: TradeRegime,
) -> Result<ScenarioResult> {
    let mut results = evaluate_regimes(site, bb, pv, &[regime], None)?;
    Ok(results.remove(0))
}

/// Evaluates several regimes at once; `tc` (USD/MWh) fills in `gains`.
pub fn evaluate_regimes(
    site: &SiteParams,
    bb: &BaseloadBackupCost,
    pv: &PvCostInputs,
    regimes: &[TradeRegime],
    tc: Option<f64>,
) -> Result<Vec<ScenarioResult>> {
    let autarky_pv = pv_unit_cost(site, pv, TradeRegime::Autarky)?;
    let (_, autarky) = regime_outcome(TradeRegime::Autarky, site.winter_hole, bb, autarky_pv)?;
    regimes
        .iter()
        .map(|&regime| {
            let pv_cost = if regime == TradeRegime::Autarky {
                autarky_pv
            } else {
                pv_unit_cost(site, pv, regime)?
            };
            let (beta_star, unit_cost) = regime_outcome(regime, site.winter_hole, bb, pv_cost)?;
            let wtp = if regime.is_trade() {
                Some(willingness_to_pay(autarky, unit_cost)?)
            } else {
                None
            };
            let gains = match (wtp, tc) {
                (Some(_), Some(tc)) => Some(gains_from_trade(autarky, unit_cost, tc)?),
                _ => None,
            };
            Ok(ScenarioResult {
                regime,
                beta_star,
                unit_cost,
                pv_unit_cost: pv_cost,
                wtp,
                gains,
            })
        })
        .collect()
}
