//! Point and interval accuracy measures.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::num::Real;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ForecastMetrics {
    /// Mean absolute percentage error, in percent.
    pub mape: f64,
    pub rmse: f64,
    /// Fraction of actuals inside their intervals (bounds inclusive).
    pub icp: f64,
}

fn check_len(a: usize, b: usize) -> Result<()> {
    if a != b {
        return Err(Error::LengthMismatch(format!(
            "{a} forecasts for {b} actuals"
        )));
    }
    if a == 0 {
        return Err(Error::EmptyInput("forecast evaluation".into()));
    }
    Ok(())
}

pub fn mape<T: Real>(forecast: &[T], actual: &[T]) -> Result<T> {
    check_len(forecast.len(), actual.len())?;
    if let Some(i) = actual.iter().position(|a| a.is_zero()) {
        return Err(Error::ZeroActual(i));
    }
    let total: T = forecast
        .iter()
        .zip(actual)
        .map(|(&f, &a)| ((a - f) / a).abs())
        .sum();
    Ok(total / T::from_count(actual.len()) * T::lit(100.0))
}

pub fn rmse<T: Real>(forecast: &[T], actual: &[T]) -> Result<T> {
    check_len(forecast.len(), actual.len())?;
    let sq: T = forecast
        .iter()
        .zip(actual)
        .map(|(&f, &a)| (a - f) * (a - f))
        .sum();
    Ok((sq / T::from_count(actual.len())).sqrt())
}

pub fn interval_coverage<T: Real>(lower: &[T], upper: &[T], actual: &[T]) -> Result<T> {
    check_len(lower.len(), actual.len())?;
    check_len(upper.len(), actual.len())?;
    let hits = actual
        .iter()
        .zip(lower.iter().zip(upper))
        .filter(|(&a, (&lo, &hi))| lo <= a && a <= hi)
        .count();
    Ok(T::from_count(hits) / T::from_count(actual.len()))
}

/// Scores a point forecast with its interval bounds.
pub fn evaluate_forecast(
    mean: &[f64],
    lower: &[f64],
    upper: &[f64],
    actual: &[f64],
) -> Result<ForecastMetrics> {
    Ok(ForecastMetrics {
        mape: mape(mean, actual)?,
        rmse: rmse(mean, actual)?,
        icp: interval_coverage(lower, upper, actual)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_forecast_scores_zero() {
        let a = [5.0, 6.0, 7.0];
        let m = evaluate_forecast(&a, &[4.0, 5.0, 6.0], &[6.0, 7.0, 8.0], &a).unwrap();
        assert_eq!(
            m,
            ForecastMetrics {
                mape: 0.0,
                rmse: 0.0,
                icp: 1.0
            }
        );
    }

    #[test]
    fn zero_actual_is_rejected() {
        assert!(matches!(mape(&[1.0], &[0.0]), Err(Error::ZeroActual(0))));
    }

    #[test]
    fn single_precision_metrics() {
        let r = rmse(&[1.0_f32, 2.0], &[1.0, 4.0]).unwrap();
        assert!((r - 2.0_f32.sqrt()).abs() < 1e-6);
    }
}
