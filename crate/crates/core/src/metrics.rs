//! Forecast accuracy metrics.
//!
//! Residuals are `forecast - actual` throughout, so a forecast that sits
//! below the actual values (an underforecast) has negative residuals.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::num::{mean, Scalar};

/// Seasonal period for MASE: 28 days of 15-minute periods.
pub const DEFAULT_SEASON: usize = 2688;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum MetricsError {
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("need at least {needed} observations, got {found}")]
    TooShort { needed: usize, found: usize },
    #[error("in-sample seasonal naive error is zero")]
    ZeroDenominator,
    #[error("zero variance")]
    ZeroVariance,
}

fn same_len<T>(a: &[T], b: &[T]) -> Result<(), MetricsError> {
    if a.len() != b.len() {
        return Err(MetricsError::LengthMismatch(a.len(), b.len()));
    }
    if a.is_empty() {
        return Err(MetricsError::TooShort { needed: 1, found: 0 });
    }
    Ok(())
}

fn abs_error_sum<T: Scalar>(actual: &[T], forecast: &[T]) -> T {
    actual.iter().zip(forecast).map(|(&y, &f)| (y - f).abs()).sum()
}

/// Mean absolute scaled error against the in-sample seasonal naive forecast.
///
/// `((n - s) / h) * sum|y - f| / sum_{t > s} |y_t - y_{t-s}|` with `n` the
/// training length, `s` the season and `h` the forecast horizon.
pub fn mase<T: Scalar>(actual: &[T], forecast: &[T], train: &[T], season: usize) -> Result<T, MetricsError> {
    same_len(actual, forecast)?;
    let n = train.len();
    if season == 0 || n <= season {
        return Err(MetricsError::TooShort { needed: season + 1, found: n });
    }
    let denom: T = train[season..].iter().zip(train).map(|(&a, &b)| (a - b).abs()).sum();
    if denom == T::zero() {
        return Err(MetricsError::ZeroDenominator);
    }
    let h = T::from_usize_lossy(actual.len());
    let scale = T::from_usize_lossy(n - season) / h;
    Ok(scale * abs_error_sum(actual, forecast) / denom)
}

pub fn mae<T: Scalar>(actual: &[T], forecast: &[T]) -> Result<T, MetricsError> {
    same_len(actual, forecast)?;
    Ok(abs_error_sum(actual, forecast) / T::from_usize_lossy(actual.len()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BiasDecomposition<T> {
    /// Mean of `max(actual - forecast, 0)`.
    pub mean_under: T,
    /// Mean of `max(forecast - actual, 0)`.
    pub mean_over: T,
}

/// Splits the MAE into its under- and overforecast parts.
pub fn bias_decomposition<T: Scalar>(actual: &[T], forecast: &[T]) -> Result<BiasDecomposition<T>, MetricsError> {
    same_len(actual, forecast)?;
    let (mut under, mut over) = (T::zero(), T::zero());
    for (&y, &f) in actual.iter().zip(forecast) {
        if y > f {
            under = under + (y - f);
        } else {
            over = over + (f - y);
        }
    }
    let h = T::from_usize_lossy(actual.len());
    Ok(BiasDecomposition { mean_under: under / h, mean_over: over / h })
}

/// `forecast - actual`, elementwise.
pub fn residuals<T: Scalar>(actual: &[T], forecast: &[T]) -> Result<Vec<T>, MetricsError> {
    same_len(actual, forecast)?;
    Ok(actual.iter().zip(forecast).map(|(&y, &f)| f - y).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Moments<T> {
    pub mean: T,
    /// Sample standard deviation, n - 1 denominator.
    pub std: T,
    /// `m3 / m2^1.5` with population central moments.
    pub skewness: T,
    /// Excess kurtosis `m4 / m2^2 - 3`; absent below four observations.
    pub kurtosis: Option<T>,
}

pub fn residual_moments<T: Scalar>(residuals: &[T]) -> Result<Moments<T>, MetricsError> {
    let n = residuals.len();
    if n < 2 {
        return Err(MetricsError::TooShort { needed: 2, found: n });
    }
    let m = mean(residuals).expect("non-empty");
    let nt = T::from_usize_lossy(n);
    let (mut m2, mut m3, mut m4) = (T::zero(), T::zero(), T::zero());
    for &r in residuals {
        let d = r - m;
        let d2 = d * d;
        m2 = m2 + d2;
        m3 = m3 + d2 * d;
        m4 = m4 + d2 * d2;
    }
    let ss = m2;
    let (m2, m3, m4) = (m2 / nt, m3 / nt, m4 / nt);
    if m2 <= T::zero() {
        return Err(MetricsError::ZeroVariance);
    }
    Ok(Moments {
        mean: m,
        std: (ss / T::from_usize_lossy(n - 1)).sqrt(),
        skewness: m3 / m2.powf(T::lit(1.5)),
        kurtosis: (n >= 4).then(|| m4 / (m2 * m2) - T::lit(3.0)),
    })
}

/// Sample Pearson correlation coefficient.
pub fn pearson<T: Scalar>(x: &[T], y: &[T]) -> Result<T, MetricsError> {
    if x.len() != y.len() {
        return Err(MetricsError::LengthMismatch(x.len(), y.len()));
    }
    if x.len() < 2 {
        return Err(MetricsError::TooShort { needed: 2, found: x.len() });
    }
    let mx = mean(x).expect("non-empty");
    let my = mean(y).expect("non-empty");
    let (mut sxy, mut sxx, mut syy) = (T::zero(), T::zero(), T::zero());
    for (&a, &b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy = sxy + dx * dy;
        sxx = sxx + dx * dx;
        syy = syy + dy * dy;
    }
    if sxx <= T::zero() || syy <= T::zero() {
        return Err(MetricsError::ZeroVariance);
    }
    let r = sxy / (sxx.sqrt() * syy.sqrt());
    Ok(r.max(-T::one()).min(T::one()))
}

/// All accuracy figures of one forecast.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorReport<T> {
    /// Absent when no training history was supplied.
    pub mase: Option<T>,
    pub mae: T,
    pub mean_under: T,
    pub mean_over: T,
    pub residual_mean: T,
    pub residual_std: T,
    pub residual_skewness: T,
    pub residual_kurtosis: T,
}

impl<T: Scalar> ErrorReport<T> {
    /// Builds the report. A residual series with zero spread (e.g. a perfect
    /// forecast) reports skewness and kurtosis as zero.
    pub fn compute(actual: &[T], forecast: &[T], train: Option<(&[T], usize)>) -> Result<Self, MetricsError> {
        let mae = mae(actual, forecast)?;
        let bias = bias_decomposition(actual, forecast)?;
        let res = residuals(actual, forecast)?;
        let mase = train.map(|(tr, s)| mase(actual, forecast, tr, s)).transpose()?;
        let (residual_mean, residual_std, residual_skewness, residual_kurtosis) = match residual_moments(&res) {
            Ok(m) => (m.mean, m.std, m.skewness, m.kurtosis.unwrap_or_else(T::zero)),
            Err(MetricsError::ZeroVariance) | Err(MetricsError::TooShort { .. }) => {
                (mean(&res).unwrap_or_else(T::zero), T::zero(), T::zero(), T::zero())
            }
            Err(e) => return Err(e),
        };
        Ok(Self {
            mase,
            mae,
            mean_under: bias.mean_under,
            mean_over: bias.mean_over,
            residual_mean,
            residual_std,
            residual_skewness,
            residual_kurtosis,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn mase_perfect_forecast() {
        let train = [1.0, 5.0, 2.0, 7.0, 3.0];
        assert_eq!(mase(&[4.0, 4.0], &[4.0, 4.0], &train, 2).unwrap(), 0.0);
    }

    #[test]
    fn mase_constant_season_is_degenerate() {
        let train = [1.0, 2.0, 1.0, 2.0, 1.0, 2.0];
        assert_eq!(mase(&[1.0, 2.0], &[2.0, 1.0], &train, 2), Err(MetricsError::ZeroDenominator));
    }

    #[test]
    fn mase_hand_value() {
        // denominator: |3-1|+|4-2|+|5-3|+|6-4| = 8; numerator |7-6|+|8-6| = 3; scale (6-2)/2 = 2
        let v = mase(&[7.0f64, 8.0], &[6.0, 6.0], &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0], 2).unwrap();
        assert!((v - 0.75).abs() < 1e-15);
    }

    #[test]
    fn mase_errors() {
        assert!(matches!(mase(&[1.0], &[1.0, 2.0], &[1.0, 2.0, 3.0], 1), Err(MetricsError::LengthMismatch(1, 2))));
        assert!(matches!(mase(&[1.0], &[1.0], &[1.0, 2.0], 2), Err(MetricsError::TooShort { .. })));
    }

    #[test]
    fn mae_cases() {
        assert_eq!(mae(&[10.0, 20.0], &[10.0, 20.0]).unwrap(), 0.0);
        assert_eq!(mae(&[10.0, 20.0], &[12.0, 16.0]).unwrap(), 3.0);
        assert!(mae::<f64>(&[1.0], &[]).is_err());
    }

    #[test]
    fn mae_of_scaled_forecast() {
        let a = [120.0, 80.0, 45.5, 300.0];
        let f: Vec<f64> = a.iter().map(|x| 1.1 * x).collect();
        let expect = 0.1 * a.iter().sum::<f64>() / 4.0;
        assert!((mae(&a, &f).unwrap() - expect).abs() < 1e-12);
    }

    #[test]
    fn bias_cases() {
        let b = bias_decomposition(&[10.0, 10.0], &[8.0, 13.0]).unwrap();
        assert_eq!((b.mean_under, b.mean_over), (1.0, 1.5));
        assert_eq!(mae(&[10.0, 10.0], &[8.0, 13.0]).unwrap(), 2.5);
        let a = [3.0, 9.0, 12.0];
        let over: Vec<f64> = a.iter().map(|x| 1.1 * x).collect();
        assert_eq!(bias_decomposition(&a, &over).unwrap().mean_under, 0.0);
        let z = bias_decomposition(&a, &a).unwrap();
        assert_eq!((z.mean_under, z.mean_over), (0.0, 0.0));
    }

    #[test]
    fn moments_symmetric() {
        let m = residual_moments(&[-1.0, 0.0, 1.0]).unwrap();
        assert_eq!(m.skewness, 0.0);
        assert_eq!(m.kurtosis, None);
        assert_eq!(residual_moments(&[2.0, 2.0, 2.0, 2.0]), Err(MetricsError::ZeroVariance));
    }

    #[test]
    fn moments_hand_value() {
        // mean 2.5; deviations -2.5 x3, 7.5. m2 = 18.75, m3 = 93.75, m4 = 820.3125
        let m = residual_moments(&[0.0f64, 0.0, 0.0, 10.0]).unwrap();
        let m2: f64 = 18.75;
        let skew = 93.75 / m2.powf(1.5);
        let kurt = 820.3125 / (m2 * m2) - 3.0;
        assert!((m.mean - 2.5).abs() < 1e-15);
        assert!((m.std - 5.0).abs() < 1e-12);
        assert!((m.skewness - skew).abs() < 1e-12 && m.skewness > 0.0);
        assert!((m.kurtosis.unwrap() - kurt).abs() < 1e-12);
        assert!((skew - 2.0 / 3f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn pearson_cases() {
        let x = [1.0, 2.0, 3.0, 4.0];
        let y: Vec<f64> = x.iter().map(|v| 2.0 * v + 1.0).collect();
        assert!((pearson(&x, &y).unwrap() - 1.0).abs() < 1e-15);
        let neg: Vec<f64> = x.iter().map(|v| -v).collect();
        assert!((pearson(&x, &neg).unwrap() + 1.0).abs() < 1e-15);
        assert!((pearson(&[1.0f64, 2.0, 3.0], &[1.0, 3.0, 2.0]).unwrap() - 0.5).abs() < 1e-15);
        assert_eq!(pearson(&[1.0, 1.0], &[1.0, 2.0]), Err(MetricsError::ZeroVariance));
    }

    #[test]
    fn perfect_forecast_report_is_zero() {
        let a = [1.0, 4.0, 2.0, 8.0, 5.0, 7.0];
        let r = ErrorReport::compute(&a, &a, Some((&a[..], 2))).unwrap();
        assert_eq!(r.mase, Some(0.0));
        for v in [r.mae, r.mean_under, r.mean_over, r.residual_mean, r.residual_std, r.residual_skewness, r.residual_kurtosis] {
            assert_eq!(v, 0.0);
        }
    }

    #[test]
    fn f32_metrics() {
        let v = mae(&[1.0f32, 2.0], &[2.0, 2.0]).unwrap();
        assert_eq!(v, 0.5f32);
    }

    proptest! {
        #[test]
        fn mae_splits_into_under_and_over(
            pairs in prop::collection::vec((-1e3f64..1e3, -1e3f64..1e3), 1..50)
        ) {
            let (a, f): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
            let b = bias_decomposition(&a, &f).unwrap();
            prop_assert!((mae(&a, &f).unwrap() - b.mean_under - b.mean_over).abs() < 1e-9);
        }

        #[test]
        fn mase_scale_invariant(
            train in prop::collection::vec(-100.0f64..100.0, 8..30),
            pairs in prop::collection::vec((-100.0f64..100.0, -100.0f64..100.0), 1..10),
            c in prop::sample::select(vec![0.5, 2.0, 10.0, -3.0]),
        ) {
            let (a, f): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
            let base = mase(&a, &f, &train, 3);
            prop_assume!(base.is_ok());
            let s = |v: &[f64]| v.iter().map(|x| c * x).collect::<Vec<_>>();
            let scaled = mase(&s(&a), &s(&f), &s(&train), 3).unwrap();
            let base = base.unwrap();
            prop_assert!((scaled - base).abs() <= 1e-9 * base.abs().max(1.0));
        }

        #[test]
        fn pearson_affine_invariant(
            pairs in prop::collection::vec((-100.0f64..100.0, -100.0f64..100.0), 3..30),
            a in 0.1f64..10.0, b in -50.0f64..50.0,
        ) {
            let (x, y): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
            let r = pearson(&x, &y);
            prop_assume!(r.is_ok());
            let x2: Vec<f64> = x.iter().map(|v| a * v + b).collect();
            prop_assert!((pearson(&x2, &y).unwrap() - r.unwrap()).abs() < 1e-9);
        }

        #[test]
        fn symmetric_samples_have_zero_skew(half in prop::collection::vec(0.1f64..100.0, 2..20), centre in -50.0f64..50.0) {
            let mut xs: Vec<f64> = half.iter().map(|h| centre + h).collect();
            xs.extend(half.iter().map(|h| centre - h));
            let m = residual_moments(&xs).unwrap();
            prop_assert!(m.skewness.abs() < 1e-9);
        }
    }
}
