//! HVDC transmission unit cost from capex, financing, utilization and losses.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{io_err, require, ModelError, Result};
use crate::finance::annuity;
use crate::model::HOURS_PER_YEAR;

/// A line item subtracted from a project total, either as a lump sum or as
/// `quantity * unit_cost`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CapexItem {
    pub label: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub amount: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub quantity: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub unit_cost: Option<f64>,
}

impl CapexItem {
    pub fn value(&self) -> Result<f64> {
        let v = match (self.amount, self.quantity, self.unit_cost) {
            (Some(a), None, None) => a,
            (None, Some(q), Some(c)) => q * c,
            _ => {
                return Err(ModelError::Transmission(format!(
                    "item '{}' needs either amount or quantity and unit_cost",
                    self.label
                )))
            }
        };
        if !(v.is_finite() && v >= 0.0) {
            return Err(ModelError::Transmission(format!("item '{}' has invalid value {v}", self.label)));
        }
        Ok(v)
    }
}

/// Capital cost of the line, USD.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Capex {
    Total { amount: f64 },
    PerKm { per_km: f64 },
    /// What remains of a project budget after removing the other assets.
    Residual { project_total: f64, subtract: Vec<CapexItem> },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Financing {
    /// Constant payment amortizing capex over the lifetime.
    Annuity { rate: f64 },
    /// Yearly charge as fixed percentages of capex.
    FlatRate {
        capital_rate: f64,
        depreciation_rate: f64,
        om_rate: f64,
    },
}

/// Cost-reduction multipliers applied on top of today's unit cost.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Projection {
    pub voltage_factor: f64,
    pub scale_factor: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransmissionSpec {
    #[serde(default)]
    pub name: String,
    pub length_km: f64,
    pub capex: Capex,
    pub delivered_power_gw: f64,
    pub lifetime_years: f64,
    pub financing: Financing,
    /// Fraction of the year the line carries its rated power.
    pub utilization: f64,
    /// Energy lost per 1000 km, fraction of energy sent.
    #[serde(default)]
    pub loss_per_1000km: f64,
    /// Value of lost energy at the sending end, USD/MWh.
    #[serde(default)]
    pub upstream_energy_cost: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub projection: Option<Projection>,
}

/// Itemized result. Money in USD, energy in MWh.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransmissionBreakdown {
    pub name: String,
    pub capex: f64,
    pub yearly_cost: f64,
    pub delivered_mwh_per_year: f64,
    /// Capital charge per MWh at full utilization.
    pub capital_term: f64,
    pub loss_fraction: f64,
    /// Value of losses per MWh delivered.
    pub loss_term: f64,
    pub unit_cost_full_utilization: f64,
    pub utilization: f64,
    pub unit_cost_before_projection: f64,
    pub projection_factor: f64,
    /// USD/MWh.
    pub unit_cost: f64,
}

fn bad(msg: impl Into<String>) -> ModelError {
    ModelError::Transmission(msg.into())
}

impl TransmissionSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        let spec: Self = serde_json::from_str(text).map_err(|e| bad(e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| io_err(path, e))?;
        Self::from_json(&text).map_err(|e| match e {
            ModelError::Transmission(m) => bad(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(bad(format!("{name} must be finite and > 0, got {v}")))
            }
        };
        let non_negative = |name: &str, v: f64| {
            if v.is_finite() && v >= 0.0 {
                Ok(())
            } else {
                Err(bad(format!("{name} must be finite and >= 0, got {v}")))
            }
        };
        positive("length_km", self.length_km)?;
        positive("delivered_power_gw", self.delivered_power_gw)?;
        if !(self.lifetime_years.is_finite() && self.lifetime_years >= 1.0) {
            return Err(bad(format!("lifetime_years must be >= 1, got {}", self.lifetime_years)));
        }
        if !(self.utilization > 0.0 && self.utilization <= 1.0) {
            return Err(bad(format!("utilization must lie in (0, 1], got {}", self.utilization)));
        }
        non_negative("loss_per_1000km", self.loss_per_1000km)?;
        non_negative("upstream_energy_cost", self.upstream_energy_cost)?;
        if self.loss_fraction() >= 1.0 {
            return Err(bad("line loses all of its energy"));
        }
        match self.financing {
            Financing::Annuity { rate } => non_negative("rate", rate)?,
            Financing::FlatRate {
                capital_rate,
                depreciation_rate,
                om_rate,
            } => {
                non_negative("capital_rate", capital_rate)?;
                non_negative("depreciation_rate", depreciation_rate)?;
                non_negative("om_rate", om_rate)?;
            }
        }
        if let Some(p) = self.projection {
            for (name, f) in [("voltage_factor", p.voltage_factor), ("scale_factor", p.scale_factor)] {
                if !(f > 0.0 && f <= 1.0) {
                    return Err(bad(format!("{name} must lie in (0, 1], got {f}")));
                }
            }
        }
        self.capex_amount().map(|_| ())
    }

    pub fn capex_amount(&self) -> Result<f64> {
        let v = match &self.capex {
            Capex::Total { amount } => *amount,
            Capex::PerKm { per_km } => per_km * self.length_km,
            Capex::Residual { project_total, subtract } => {
                let mut rest = *project_total;
                for item in subtract {
                    rest -= item.value()?;
                }
                rest
            }
        };
        if !(v.is_finite() && v > 0.0) {
            return Err(bad(format!("capex must be positive, got {v}")));
        }
        Ok(v)
    }

    pub fn loss_fraction(&self) -> f64 {
        self.loss_per_1000km * self.length_km / 1000.0
    }
}

/// Yearly payment for `capex` under `financing` over `lifetime` years.
pub fn yearly_cost(capex: f64, financing: &Financing, lifetime: f64) -> Result<f64> {
    match *financing {
        Financing::Annuity { rate } => annuity(capex, rate, lifetime),
        Financing::FlatRate {
            capital_rate,
            depreciation_rate,
            om_rate,
        } => {
            require(capex.is_finite() && capex >= 0.0, "capex", capex, "must be finite and >= 0")?;
            Ok(capex * (capital_rate + depreciation_rate + om_rate))
        }
    }
}

/// `current * voltage_factor * scale_factor`.
pub fn future_cost_projection(current: f64, voltage_factor: f64, scale_factor: f64) -> Result<f64> {
    require(
        voltage_factor > 0.0 && voltage_factor <= 1.0,
        "voltage_factor",
        voltage_factor,
        "must lie in (0, 1]",
    )?;
    require(
        scale_factor > 0.0 && scale_factor <= 1.0,
        "scale_factor",
        scale_factor,
        "must lie in (0, 1]",
    )?;
    Ok(current * voltage_factor * scale_factor)
}

/// Unit cost per MWh delivered, with every component itemized.
///
/// The capital charge and the loss valuation are both spread over the energy
/// actually delivered, so utilization scales the whole total.
pub fn transmission_breakdown(spec: &TransmissionSpec) -> Result<TransmissionBreakdown> {
    spec.validate()?;
    let capex = spec.capex_amount()?;
    let yearly = yearly_cost(capex, &spec.financing, spec.lifetime_years)?;
    let full_mwh = spec.delivered_power_gw * 1000.0 * HOURS_PER_YEAR;
    let capital_term = yearly / full_mwh;
    let loss_fraction = spec.loss_fraction();
    let loss_term = loss_fraction * spec.upstream_energy_cost;
    let unit_full = capital_term + loss_term;
    let before_projection = unit_full / spec.utilization;
    let (projection_factor, unit_cost) = match spec.projection {
        Some(p) => (
            p.voltage_factor * p.scale_factor,
            future_cost_projection(before_projection, p.voltage_factor, p.scale_factor)?,
        ),
        None => (1.0, before_projection),
    };
    Ok(TransmissionBreakdown {
        name: spec.name.clone(),
        capex,
        yearly_cost: yearly,
        delivered_mwh_per_year: full_mwh * spec.utilization,
        capital_term,
        loss_fraction,
        loss_term,
        unit_cost_full_utilization: unit_full,
        utilization: spec.utilization,
        unit_cost_before_projection: before_projection,
        projection_factor,
        unit_cost,
    })
}

pub fn unit_transmission_cost(spec: &TransmissionSpec) -> Result<f64> {
    Ok(transmission_breakdown(spec)?.unit_cost)
}
