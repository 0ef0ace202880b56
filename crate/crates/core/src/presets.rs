//! Named cost presets built from the bundled technology table.

use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{ModelError, Result};
use crate::model::BaseloadBackupCost;
use crate::synth::{build_synthetic, parse_technology_table, CostScenario, TechCostSpec};

/// The technology table shipped in `data/technologies.csv`.
pub const BUNDLED_TECHNOLOGY_CSV: &str = include_str!("../../../data/technologies.csv");

/// Yield at the best-located quartile of sites, kWh/kWp/yr. Used for the
/// global regime when no dataset quantile is available.
pub const REFERENCE_OPTIMAL_YIELD: f64 = 1515.0;

pub fn bundled_technology_table() -> Vec<TechCostSpec> {
    parse_technology_table(BUNDLED_TECHNOLOGY_CSV.as_bytes()).expect("bundled technology table is valid")
}

/// Baseload/backup cost level.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CostPreset {
    High,
    Median,
    Low,
}

impl CostPreset {
    pub const ALL: [CostPreset; 3] = [CostPreset::High, CostPreset::Median, CostPreset::Low];

    pub fn as_str(&self) -> &'static str {
        match self {
            CostPreset::High => "high",
            CostPreset::Median => "median",
            CostPreset::Low => "low",
        }
    }

    /// Technology-table column behind the preset.
    pub fn scenario(&self) -> CostScenario {
        match self {
            CostPreset::High => CostScenario::Max,
            CostPreset::Median => CostScenario::Mean,
            CostPreset::Low => CostScenario::Min,
        }
    }

    pub fn baseload(&self) -> BaseloadBackupCost {
        build_synthetic(&bundled_technology_table(), self.scenario()).expect("bundled table builds")
    }
}

impl FromStr for CostPreset {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "high" | "max" => Ok(CostPreset::High),
            "median" | "mean" => Ok(CostPreset::Median),
            "low" | "min" => Ok(CostPreset::Low),
            _ => Err(ModelError::Data(format!("unknown cost preset '{s}', expected high, median or low"))),
        }
    }
}

impl std::fmt::Display for CostPreset {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn preset_totals() {
        let t = |p: CostPreset| p.baseload().total_per_mwh();
        assert!((t(CostPreset::High) - 112.23).abs() < 0.05);
        assert!((t(CostPreset::Median) - 83.24).abs() < 0.05);
        assert!((t(CostPreset::Low) - 58.61).abs() < 0.05);
        assert_eq!("MAX".parse::<CostPreset>().unwrap(), CostPreset::High);
        assert!("x".parse::<CostPreset>().is_err());
    }
}
