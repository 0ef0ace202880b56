//! Annuity helpers shared by the PV cost model and the transmission calculators.

use crate::error::{require, Result};

/// Capital recovery factor `r / (1 - (1 + r)^-n)`; `1/n` when `r == 0`.
pub fn capital_recovery_factor(rate: f64, years: f64) -> Result<f64> {
    require(rate.is_finite() && rate >= 0.0, "rate", rate, "must be finite and >= 0")?;
    require(years.is_finite() && years >= 1.0, "years", years, "must be >= 1")?;
    if rate == 0.0 {
        return Ok(1.0 / years);
    }
    // ln_1p and exp_m1 keep precision for very small rates
    let one_minus_discount = -(-years * rate.ln_1p()).exp_m1();
    Ok(rate / one_minus_discount)
}

/// Constant yearly payment that amortizes `principal` over `years` at `rate`.
pub fn annuity(principal: f64, rate: f64, years: f64) -> Result<f64> {
    require(
        principal.is_finite() && principal >= 0.0,
        "principal",
        principal,
        "must be finite and >= 0",
    )?;
    Ok(principal * capital_recovery_factor(rate, years)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    /// Iterative amortization: pay `payment` each year, accrue interest on the balance.
    fn remaining_balance(principal: f64, rate: f64, years: u32, payment: f64) -> f64 {
        let mut balance = principal;
        for _ in 0..years {
            balance = balance * (1.0 + rate) - payment;
        }
        balance
    }

    #[test]
    fn zero_rate_is_straight_line() {
        assert_eq!(annuity(100.0, 0.0, 10.0).unwrap(), 10.0);
    }

    #[test]
    fn pv_capex_annuity_matches_amortization_schedule() {
        let payment = annuity(500.0, 0.05, 30.0).unwrap();
        assert!((payment - 32.53).abs() < 0.005, "{payment}");
        assert!(remaining_balance(500.0, 0.05, 30, payment).abs() < 1e-9);
    }

    #[test]
    fn hvdc_line_annuity() {
        // 6750 M USD over 25 years at 5%
        let payment = annuity(6750.0, 0.05, 25.0).unwrap();
        assert!((payment - 479.0).abs() < 1.0, "{payment}");
        assert!(remaining_balance(6750.0, 0.05, 25, payment).abs() < 1e-7);
    }

    #[test]
    fn crf_tends_to_straight_line() {
        let crf = capital_recovery_factor(1e-12, 20.0).unwrap();
        assert_relative_eq!(crf, 1.0 / 20.0, max_relative = 1e-9);
    }

    #[test]
    fn rejects_bad_domain() {
        assert!(capital_recovery_factor(-0.01, 10.0).is_err());
        assert!(capital_recovery_factor(0.05, 0.5).is_err());
        assert!(annuity(f64::NAN, 0.05, 10.0).is_err());
    }
}
