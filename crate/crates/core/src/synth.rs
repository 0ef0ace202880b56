//! Synthetic baseload/backup technology aggregated from a technology table.

use std::io::Read;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{io_err, require, ModelError, Result};
use crate::model::{BaseloadBackupCost, HOURS_PER_YEAR};

const SHARE_TOLERANCE: f64 = 1e-9;

/// Which cost column of the technology table to read.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CostScenario {
    Min,
    Max,
    Mean,
}

impl CostScenario {
    pub const ALL: [CostScenario; 3] = [CostScenario::Min, CostScenario::Max, CostScenario::Mean];

    pub fn as_str(&self) -> &'static str {
        match self {
            CostScenario::Min => "min",
            CostScenario::Max => "max",
            CostScenario::Mean => "mean",
        }
    }
}

impl FromStr for CostScenario {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "min" => Ok(CostScenario::Min),
            "max" => Ok(CostScenario::Max),
            "mean" => Ok(CostScenario::Mean),
            other => Err(ModelError::Table(format!(
                "unknown scenario '{other}', expected min, max or mean"
            ))),
        }
    }
}

impl std::fmt::Display for CostScenario {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One value per cost scenario.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScenarioValues {
    pub min: f64,
    pub max: f64,
    pub mean: f64,
}

impl ScenarioValues {
    pub fn get(&self, scenario: CostScenario) -> f64 {
        match scenario {
            CostScenario::Min => self.min,
            CostScenario::Max => self.max,
            CostScenario::Mean => self.mean,
        }
    }

    fn all(&self) -> [f64; 3] {
        [self.min, self.max, self.mean]
    }
}

/// A dispatchable technology. Capacity factors are paired with the cost
/// scenario of the same column, not treated as extrema.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TechCostSpec {
    pub name: String,
    /// Thousand USD per MW-year.
    pub annualized_fixed: ScenarioValues,
    /// USD per MWh.
    pub variable_unit: ScenarioValues,
    pub capacity_factor: ScenarioValues,
    pub generation_share: f64,
}

impl TechCostSpec {
    pub fn validate(&self) -> Result<()> {
        let fail = |what: &str| Err(ModelError::Table(format!("{}: {what}", self.name)));
        if self.annualized_fixed.all().iter().any(|v| !v.is_finite() || *v < 0.0) {
            return fail("fixed costs must be finite and >= 0");
        }
        if self.variable_unit.all().iter().any(|v| !v.is_finite() || *v < 0.0) {
            return fail("variable costs must be finite and >= 0");
        }
        if self.capacity_factor.all().iter().any(|v| !(*v > 0.0 && *v <= 1.0)) {
            return fail("capacity factors must lie in (0, 1]");
        }
        if !(self.generation_share.is_finite() && (0.0..=1.0).contains(&self.generation_share)) {
            return fail("generation share must lie in [0, 1]");
        }
        Ok(())
    }
}

/// Contribution of one technology to the synthetic mix.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TechContribution {
    pub name: String,
    /// `f_i s_i / CF_i`, thousand USD per MW-year.
    pub fixed: f64,
    /// `v_i s_i`, USD per MWh.
    pub variable: f64,
}

#[derive(Debug, Deserialize)]
struct TableRow {
    name: String,
    f_min: f64,
    f_max: f64,
    f_mean: f64,
    v_min: f64,
    v_max: f64,
    v_mean: f64,
    cf_min: f64,
    cf_max: f64,
    cf_mean: f64,
    share: f64,
}

impl From<TableRow> for TechCostSpec {
    fn from(r: TableRow) -> Self {
        TechCostSpec {
            name: r.name,
            annualized_fixed: ScenarioValues { min: r.f_min, max: r.f_max, mean: r.f_mean },
            variable_unit: ScenarioValues { min: r.v_min, max: r.v_max, mean: r.v_mean },
            capacity_factor: ScenarioValues { min: r.cf_min, max: r.cf_max, mean: r.cf_mean },
            generation_share: r.share,
        }
    }
}

/// Parses a technology table (see `data/technologies.csv` for the layout).
pub fn parse_technology_table<R: Read>(reader: R) -> Result<Vec<TechCostSpec>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).comment(Some(b'#')).from_reader(reader);
    let mut specs = Vec::new();
    for (i, row) in rdr.deserialize::<TableRow>().enumerate() {
        let row = row.map_err(|e| ModelError::Table(format!("row {}: {e}", i + 1)))?;
        let spec = TechCostSpec::from(row);
        spec.validate()?;
        specs.push(spec);
    }
    if specs.is_empty() {
        return Err(ModelError::Table("table has no technologies".into()));
    }
    Ok(specs)
}

pub fn load_technology_table(path: &Path) -> Result<Vec<TechCostSpec>> {
    let file = std::fs::File::open(path).map_err(|e| io_err(path, e))?;
    parse_technology_table(file)
}

fn check_shares(specs: &[TechCostSpec]) -> Result<()> {
    if specs.is_empty() {
        return Err(ModelError::Table("no technologies given".into()));
    }
    for s in specs {
        s.validate()?;
    }
    let total: f64 = specs.iter().map(|s| s.generation_share).sum();
    if (total - 1.0).abs() > SHARE_TOLERANCE {
        return Err(ModelError::Table(format!("generation shares sum to {total}, expected 1")));
    }
    Ok(())
}

/// Per-technology terms of the aggregation under one scenario.
pub fn technology_contributions(specs: &[TechCostSpec], scenario: CostScenario) -> Result<Vec<TechContribution>> {
    specs
        .iter()
        .map(|s| {
            s.validate()?;
            Ok(TechContribution {
                name: s.name.clone(),
                fixed: s.annualized_fixed.get(scenario) * s.generation_share / s.capacity_factor.get(scenario),
                variable: s.variable_unit.get(scenario) * s.generation_share,
            })
        })
        .collect()
}

/// Aggregates `f_b = Σ f_i s_i / CF_i` and `v_b = Σ v_i s_i`.
pub fn build_synthetic(specs: &[TechCostSpec], scenario: CostScenario) -> Result<BaseloadBackupCost> {
    build_synthetic_mixed(specs, scenario, scenario)
}

/// Like [`build_synthetic`] but reads fixed costs (with their paired capacity
/// factors) and variable costs from different scenario columns.
pub fn build_synthetic_mixed(
    specs: &[TechCostSpec],
    fixed_scenario: CostScenario,
    variable_scenario: CostScenario,
) -> Result<BaseloadBackupCost> {
    check_shares(specs)?;
    let fixed_k: f64 = technology_contributions(specs, fixed_scenario)?.iter().map(|c| c.fixed).sum();
    let variable: f64 = technology_contributions(specs, variable_scenario)?.iter().map(|c| c.variable).sum();
    BaseloadBackupCost::new(fixed_k * 1000.0, variable)
}

/// Splits a total gas share between combined-cycle and peaking plants.
pub fn split_gas_shares(gas_total_share: f64, cc_generation_fraction: f64) -> Result<(f64, f64)> {
    require(
        (0.0..=1.0).contains(&gas_total_share),
        "gas_total_share",
        gas_total_share,
        "must lie in [0, 1]",
    )?;
    require(
        (0.0..=1.0).contains(&cc_generation_fraction),
        "cc_generation_fraction",
        cc_generation_fraction,
        "must lie in [0, 1]",
    )?;
    let cc = gas_total_share * cc_generation_fraction;
    Ok((cc, gas_total_share - cc))
}

/// LCOE of the dispatchable mix run at capacity factor `cf`, USD/MWh.
pub fn lcoe_at_capacity_factor(bb: &BaseloadBackupCost, cf: f64) -> Result<f64> {
    require(cf.is_finite() && cf > 0.0 && cf <= 1.0, "cf", cf, "must lie in (0, 1]")?;
    bb.validate()?;
    Ok(bb.fixed_annual / (HOURS_PER_YEAR * cf) + bb.variable_unit)
}

/// LCOE sampled at `points` evenly spaced capacity factors in `[cf_min, 1]`.
pub fn lcoe_curve(bb: &BaseloadBackupCost, cf_min: f64, points: usize) -> Result<Vec<(f64, f64)>> {
    require(cf_min > 0.0 && cf_min <= 1.0, "cf_min", cf_min, "must lie in (0, 1]")?;
    require(points >= 2, "points", points as f64, "need at least two points")?;
    (0..points)
        .map(|i| {
            let cf = cf_min + (1.0 - cf_min) * i as f64 / (points - 1) as f64;
            Ok((cf, lcoe_at_capacity_factor(bb, cf)?))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn flat(v: f64) -> ScenarioValues {
        ScenarioValues { min: v, max: v, mean: v }
    }

    fn single(f: f64, v: f64) -> TechCostSpec {
        TechCostSpec {
            name: "only".into(),
            annualized_fixed: flat(f),
            variable_unit: flat(v),
            capacity_factor: flat(1.0),
            generation_share: 1.0,
        }
    }

    #[test]
    fn single_technology_is_identity() {
        let bb = build_synthetic(&[single(300.0, 12.0)], CostScenario::Max).unwrap();
        assert_relative_eq!(bb.fixed_annual, 300_000.0);
        assert_relative_eq!(bb.variable_unit, 12.0);
    }

    #[test]
    fn shares_must_sum_to_one() {
        let mut s = single(300.0, 12.0);
        s.generation_share = 0.9;
        assert!(matches!(build_synthetic(&[s], CostScenario::Min), Err(ModelError::Table(_))));
    }

    #[test]
    fn gas_split() {
        let (cc, peak) = split_gas_shares(0.326, 0.857).unwrap();
        assert!((cc - 0.2794).abs() < 1e-4);
        assert!((peak - 0.0466).abs() < 1e-4);
        assert!((cc - 0.2791).abs() < 4e-4 && (peak - 0.0465).abs() < 4e-4);
        assert_eq!(split_gas_shares(0.3, 1.0).unwrap(), (0.3, 0.0));
        let (a, b) = split_gas_shares(0.4, 0.5).unwrap();
        assert_relative_eq!(a, 0.2);
        assert_relative_eq!(b, 0.2);
        assert!(split_gas_shares(1.2, 0.5).is_err());
    }

    #[test]
    fn lcoe_examples() {
        let bb = BaseloadBackupCost::new(779_000.0, 23.3).unwrap();
        assert!((lcoe_at_capacity_factor(&bb, 1.0).unwrap() - 112.2).abs() < 0.05);
        let fixed_at_one = lcoe_at_capacity_factor(&bb, 1.0).unwrap() - 23.3;
        assert_relative_eq!(
            lcoe_at_capacity_factor(&bb, 0.5).unwrap(),
            2.0 * fixed_at_one + 23.3,
            max_relative = 1e-12
        );
        let fixed_only = BaseloadBackupCost::new(87_600.0, 0.0).unwrap();
        assert_relative_eq!(lcoe_at_capacity_factor(&fixed_only, 1.0).unwrap(), 10.0);
        assert!(lcoe_at_capacity_factor(&bb, 0.0).is_err());
    }

    #[test]
    fn lcoe_curve_is_decreasing() {
        let bb = BaseloadBackupCost::new(547_000.0, 20.8).unwrap();
        let curve = lcoe_curve(&bb, 0.1, 50).unwrap();
        assert!(curve.windows(2).all(|p| p[1].1 < p[0].1));
        assert!(curve.iter().all(|&(_, c)| c > bb.variable_unit));
    }

    #[test]
    fn parses_and_rejects_tables() {
        let good = "name,f_min,f_max,f_mean,v_min,v_max,v_mean,cf_min,cf_max,cf_mean,share\n\
                    a,1,2,1.5,3,4,3.5,0.5,0.5,0.5,1\n";
        let specs = parse_technology_table(good.as_bytes()).unwrap();
        assert_eq!(specs.len(), 1);
        assert_eq!(specs[0].capacity_factor.get(CostScenario::Mean), 0.5);
        let bad_cf = good.replace("0.5,0.5,0.5", "0.5,1.5,0.5");
        assert!(parse_technology_table(bad_cf.as_bytes()).is_err());
        let missing_col = "name,f_min\nx,1\n";
        assert!(parse_technology_table(missing_col.as_bytes()).is_err());
    }

    #[test]
    fn scenario_names() {
        assert_eq!("max".parse::<CostScenario>().unwrap(), CostScenario::Max);
        assert!("maximum".parse::<CostScenario>().is_err());
    }
}
