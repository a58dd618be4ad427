//! Holt's linear-trend method for the annual launch demand.
//!
//! ```text
//! level:    l_t = α y_t + (1 − α)(l_{t−1} + b_{t−1})
//! trend:    b_t = β (l_t − l_{t−1}) + (1 − β) b_{t−1}
//! forecast: ŷ_{t+h} = l_t + h b_t
//! ```
//!
//! The recursion starts from l₁ = y₁, b₁ = y₂ − y₁, which makes the method
//! exact on affine series for every (α, β).

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::Real;

pub const DEFAULT_ALPHA: f64 = 0.6;
pub const DEFAULT_BETA: f64 = 0.05;
pub const DEFAULT_TARGET_YEAR: i32 = 2030;
/// Total annual demand used when no launch history is supplied.
pub const DEFAULT_TOTAL_DEMAND: u32 = 273;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ForecastError {
    #[error("series has {0} points; at least 2 are needed to estimate a trend")]
    TooShort(usize),
    #[error("{name} = {value} outside [0, 1]")]
    Smoothing { name: &'static str, value: f64 },
    #[error("forecast horizon must be at least 1")]
    Horizon,
    #[error("target year {target} is not after the last observed year {last}")]
    TargetYear { target: i32, last: i32 },
    #[error("series value {0} is not finite")]
    NonFinite(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HoltParams<T> {
    pub alpha: T,
    pub beta: T,
    pub horizon: u32,
}

impl<T: Real> HoltParams<T> {
    pub fn new(alpha: T, beta: T, horizon: u32) -> Result<Self, ForecastError> {
        for (name, value) in [("alpha", alpha), ("beta", beta)] {
            if !(value >= T::zero() && value <= T::one()) {
                return Err(ForecastError::Smoothing {
                    name,
                    value: value.as_f64(),
                });
            }
        }
        if horizon == 0 {
            return Err(ForecastError::Horizon);
        }
        Ok(Self { alpha, beta, horizon })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HoltState<T> {
    pub level: T,
    pub trend: T,
}

/// Runs both smoothing recursions over `series` and returns the final state.
pub fn holt_fit<T: Real>(series: &[T], params: &HoltParams<T>) -> Result<HoltState<T>, ForecastError> {
    if series.len() < 2 {
        return Err(ForecastError::TooShort(series.len()));
    }
    if let Some(bad) = series.iter().find(|v| !v.is_finite()) {
        return Err(ForecastError::NonFinite(bad.as_f64()));
    }
    let (a, b) = (params.alpha, params.beta);
    let mut level = series[0];
    let mut trend = series[1] - series[0];
    for &y in &series[1..] {
        let next = a * y + (T::one() - a) * (level + trend);
        trend = b * (next - level) + (T::one() - b) * trend;
        level = next;
    }
    Ok(HoltState { level, trend })
}

/// l_t + h b_t.
pub fn holt_forecast<T: Real>(state: &HoltState<T>, horizon: u32) -> T {
    state.level + T::from_u32(horizon).expect("u32 fits scalar") * state.trend
}

/// Forecast demand for `target_year` from an annual (year, count) series,
/// rounded half-up and clamped at zero.
pub fn demand_total(series: &[(i32, u32)], alpha: f64, beta: f64, target_year: i32) -> Result<u32, ForecastError> {
    let Some(&(last, _)) = series.last() else {
        return Err(ForecastError::TooShort(0));
    };
    if target_year <= last {
        return Err(ForecastError::TargetYear {
            target: target_year,
            last,
        });
    }
    let horizon = (target_year - last) as u32;
    let params = HoltParams::new(alpha, beta, horizon)?;
    let values: Vec<f64> = series.iter().map(|&(_, c)| f64::from(c)).collect();
    let state = holt_fit(&values, &params)?;
    let f = holt_forecast(&state, horizon);
    Ok(round_half_up_nonneg(f))
}

/// Demand from history when a series is supplied, otherwise the configured
/// default total.
pub fn demand_or_default(
    series: Option<&[(i32, u32)]>,
    alpha: f64,
    beta: f64,
    target_year: i32,
    default_total: u32,
) -> Result<u32, ForecastError> {
    match series {
        Some(s) => demand_total(s, alpha, beta, target_year),
        None => Ok(default_total),
    }
}

fn round_half_up_nonneg(v: f64) -> u32 {
    if !(v > 0.0) {
        return 0;
    }
    (v + 0.5).floor().min(f64::from(u32::MAX)) as u32
}
