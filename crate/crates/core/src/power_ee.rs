//! Power consumption and energy efficiency of the amplifying and passive
//! SISO architectures.

use crate::error::{Error, Result};
use crate::units::{dbm_to_w, dbw_to_w};

/// Power-model constants, all powers in watts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerModelParams {
    /// Inverse maximum efficiency of the transmit PA.
    pub alpha: f64,
    /// Inverse maximum efficiency of the PA between the two surfaces.
    pub beta: f64,
    /// Phase-control power per element.
    pub p_element: f64,
    pub p_tx_static: f64,
    pub p_rx_static: f64,
    /// PA efficiency exponent.
    pub epsilon: f64,
}

impl Default for PowerModelParams {
    fn default() -> Self {
        Self {
            alpha: 1.2,
            beta: 1.2,
            p_element: 7.8e-3,
            p_tx_static: dbw_to_w(9.0),
            p_rx_static: dbm_to_w(10.0),
            epsilon: 0.5,
        }
    }
}

impl PowerModelParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha >= 1.0 && self.beta >= 1.0) {
            return Err(Error::InvalidParameter(
                "alpha and beta must be >= 1".into(),
            ));
        }
        if !(self.p_element >= 0.0 && self.p_tx_static >= 0.0 && self.p_rx_static >= 0.0) {
            return Err(Error::InvalidParameter("static powers must be >= 0".into()));
        }
        if !(self.epsilon > 0.0 && self.epsilon <= 1.0) {
            return Err(Error::InvalidParameter("epsilon must lie in (0, 1]".into()));
        }
        Ok(())
    }
}

fn check_drive(p_out: f64, p_max: f64) -> Result<()> {
    if !(p_out >= 0.0) || p_out > p_max * (1.0 + 1e-12) {
        return Err(Error::ConstraintViolation { p_out, p_max });
    }
    Ok(())
}

/// Efficiency `eta_max (P_out / P_max)^epsilon` of a PA driven at `p_out`.
pub fn pa_efficiency(p_out: f64, p_max: f64, eta_max: f64, epsilon: f64) -> Result<f64> {
    check_drive(p_out, p_max)?;
    Ok(eta_max * (p_out / p_max).powf(epsilon))
}

/// Consumed power `P_out / efficiency` for a general efficiency exponent.
pub fn pa_consumed_power_general(
    p_out: f64,
    p_max: f64,
    eta_max: f64,
    epsilon: f64,
) -> Result<f64> {
    check_drive(p_out, p_max)?;
    if p_out == 0.0 {
        return Ok(0.0);
    }
    Ok(p_out.powf(1.0 - epsilon) * p_max.powf(epsilon) / eta_max)
}

/// Consumed power `sqrt(P_out P_max) / eta_max` (square-root efficiency law).
pub fn pa_consumed_power(p_out: f64, p_max: f64, eta_max: f64) -> Result<f64> {
    check_drive(p_out, p_max)?;
    if !(eta_max > 0.0 && eta_max <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "eta_max = {eta_max} must lie in (0, 1]"
        )));
    }
    Ok((p_out * p_max).sqrt() / eta_max)
}

pub fn ris_static_power(n_elements: usize, p_element: f64) -> f64 {
    n_elements as f64 * p_element
}

/// Total consumption without the inter-surface PA. The transmit PA runs at
/// full drive, so it consumes `alpha P_t`.
pub fn total_power_passive(params: &PowerModelParams, p_t: f64, n_elements: usize) -> f64 {
    params.alpha * p_t
        + params.p_tx_static
        + params.p_rx_static
        + ris_static_power(n_elements, params.p_element)
}

pub fn total_power_active(
    params: &PowerModelParams,
    p_t: f64,
    n_elements: usize,
    p_out: f64,
    p_max: f64,
) -> Result<f64> {
    let pa = pa_consumed_power(p_out, p_max, 1.0 / params.beta)?;
    Ok(total_power_passive(params, p_t, n_elements) + pa)
}

/// Bits per joule.
pub fn energy_efficiency(rate: f64, bandwidth: f64, p_total: f64) -> Result<f64> {
    if !(p_total > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "total power {p_total} W must be positive"
        )));
    }
    Ok(rate * bandwidth / p_total)
}
