//! Cost model for solar PV with storage and dispatchable backup under
//! autarky and long-distance electricity trade.

pub mod dispatch;
pub mod error;
pub mod finance;
pub mod geo;
pub mod model;
pub mod presets;
pub mod synth;
pub mod transmission;

pub use error::{ModelError, Result};
pub use model::{
    BaseloadBackupCost, PvCostInputs, ScenarioResult, SiteParams, TradeRegime, DIURNAL_MIN_OCF,
    HALF_DAYS_PER_YEAR, HOURS_PER_YEAR,
};
