//! Moving-average seasonal-trend decomposition, additive form.
//!
//! The procedure follows the X-11 outline with differences in place of
//! ratios:
//!
//! 1. rough trend by a centred 2 x period moving average;
//! 2. detrended values `y - T`;
//! 3. rough seasonal by a 3x3 moving average within each phase, centred;
//! 4. irregular estimate `D - S` and extreme-value down-weighting;
//! 5. modified detrended values `S + w e`;
//! 6. seasonal re-estimated from the modified values;
//! 7. preliminary seasonally adjusted series `y - S`;
//! 8. trend by a Henderson filter on the adjusted series;
//! 9. new detrended values `y - T`;
//! 10. steps 3 to 5 again with a 3x5 seasonal filter;
//! 11. step 6 again with 3x5;
//! 12. final seasonally adjusted series `y - S`;
//! 13. irregular `y - T - S`.

use super::filters::{
    composite_ma_weights, henderson_filter, period_filter, truncated_filter, HENDERSON_TERMS,
};
use super::{phase_indices, ComponentSet, Method};
use crate::error::{Error, Result};
use crate::series::SampledSeries;

#[derive(Debug, Clone, PartialEq)]
pub struct StdParams {
    pub period: usize,
    pub henderson_terms: usize,
    /// Irregulars beyond `lower * sigma` get linearly decreasing weight,
    /// reaching zero at `upper * sigma`.
    pub sigma_limits: (f64, f64),
}

impl StdParams {
    pub fn new(period: usize) -> Self {
        Self {
            period,
            henderson_terms: 13,
            sigma_limits: (1.5, 2.5),
        }
    }

    fn validate(&self, len: usize) -> Result<()> {
        if self.period < 2 {
            return Err(Error::InvalidParameter(format!(
                "period must be >= 2, got {}",
                self.period
            )));
        }
        if !HENDERSON_TERMS.contains(&self.henderson_terms) {
            return Err(Error::InvalidParameter(format!(
                "unsupported Henderson length {}",
                self.henderson_terms
            )));
        }
        let (lo, hi) = self.sigma_limits;
        if !(lo > 0.0 && hi > lo) {
            return Err(Error::InvalidParameter(
                "sigma limits must satisfy 0 < lower < upper".into(),
            ));
        }
        if len < 3 * self.period {
            return Err(Error::SeriesTooShort {
                needed: 3 * self.period,
                got: len,
            });
        }
        Ok(())
    }
}

pub fn decompose_std(series: &SampledSeries, period: usize) -> Result<ComponentSet> {
    decompose_std_with(series, &StdParams::new(period))
}

pub fn decompose_std_with(series: &SampledSeries, params: &StdParams) -> Result<ComponentSet> {
    params.validate(series.len())?;
    let y = series.values();
    let p = params.period;

    let trend_kernel = if p.is_multiple_of(2) {
        composite_ma_weights(2, p)?
    } else {
        composite_ma_weights(1, p)?
    };
    let s3x3 = composite_ma_weights(3, 3)?;
    let s3x5 = composite_ma_weights(3, 5)?;

    // steps 1-2
    let rough_trend = period_filter(y, &trend_kernel, p);
    let detrended = diff(y, &rough_trend);
    // steps 3-6
    let seasonal = seasonal_pass(&detrended, p, &s3x3, &trend_kernel, params.sigma_limits);
    // steps 7-8; the Henderson length shrinks for very short series
    let adjusted = diff(y, &seasonal);
    let terms = HENDERSON_TERMS
        .iter()
        .copied()
        .filter(|&t| t < y.len())
        .filter(|&t| t <= params.henderson_terms)
        .max()
        .ok_or(Error::SeriesTooShort {
            needed: HENDERSON_TERMS[0] + 1,
            got: y.len(),
        })?;
    let trend = henderson_filter(&adjusted, terms)?;
    // steps 9-11
    let detrended = diff(y, &trend);
    let mut seasonal = seasonal_pass(&detrended, p, &s3x5, &trend_kernel, params.sigma_limits);
    center_cycles(&mut seasonal, p);
    // steps 12-13: irregular is the residual of the final components
    Ok(ComponentSet::from_parts(
        series,
        trend,
        seasonal,
        p,
        Method::Std,
    ))
}

fn diff(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

/// One seasonal estimation round: per-phase smoothing, centring, extreme
/// value replacement and re-smoothing.
fn seasonal_pass(
    detrended: &[f64],
    period: usize,
    phase_kernel: &[f64],
    centre_kernel: &[f64],
    limits: (f64, f64),
) -> Vec<f64> {
    let rough = centred_seasonal(detrended, period, phase_kernel, centre_kernel);
    let irregular = diff(detrended, &rough);
    let weights = extreme_weights(&irregular, limits);
    let modified: Vec<f64> = rough
        .iter()
        .zip(&irregular)
        .zip(&weights)
        .map(|((s, e), w)| s + w * e)
        .collect();
    centred_seasonal(&modified, period, phase_kernel, centre_kernel)
}

fn centred_seasonal(
    values: &[f64],
    period: usize,
    phase_kernel: &[f64],
    centre_kernel: &[f64],
) -> Vec<f64> {
    let n = values.len();
    let mut seasonal = vec![0.0; n];
    for phase in 0..period.min(n) {
        let idx: Vec<usize> = phase_indices(n, period, phase).collect();
        let sub: Vec<f64> = idx.iter().map(|&i| values[i]).collect();
        for (i, v) in idx.into_iter().zip(truncated_filter(&sub, phase_kernel)) {
            seasonal[i] = v;
        }
    }
    let level = period_filter(&seasonal, centre_kernel, period);
    diff(&seasonal, &level)
}

/// Graduated weights: 1 inside `lower * sigma`, 0 beyond `upper * sigma`.
fn extreme_weights(irregular: &[f64], (lower, upper): (f64, f64)) -> Vec<f64> {
    let n = irregular.len() as f64;
    let sigma = (irregular.iter().map(|e| e * e).sum::<f64>() / n).sqrt();
    irregular
        .iter()
        .map(|e| {
            if sigma == 0.0 {
                return 1.0;
            }
            let z = e.abs() / sigma;
            if z <= lower {
                1.0
            } else if z >= upper {
                0.0
            } else {
                (upper - z) / (upper - lower)
            }
        })
        .collect()
}

/// Removes the mean of every complete cycle (counted from the first sample);
/// a trailing partial cycle takes the adjustment of the last complete one.
fn center_cycles(seasonal: &mut [f64], period: usize) {
    let n = seasonal.len();
    let full = n / period;
    let mut last = 0.0;
    for c in 0..full {
        let block = &mut seasonal[c * period..(c + 1) * period];
        last = block.iter().sum::<f64>() / period as f64;
        block.iter_mut().for_each(|v| *v -= last);
    }
    seasonal[full * period..]
        .iter_mut()
        .for_each(|v| *v -= last);
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::series::Unit;
    use std::f64::consts::PI;

    fn s(values: Vec<f64>) -> SampledSeries {
        SampledSeries::new(0, 300, values, Unit::Dimensionless).unwrap()
    }

    fn rmse(a: &[f64], b: &[f64]) -> f64 {
        (a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>() / a.len() as f64).sqrt()
    }

    #[test]
    fn constant_series() {
        let c = decompose_std(&s(vec![12.5; 96]), 12).unwrap();
        for i in 0..96 {
            assert!((c.trend.values()[i] - 12.5).abs() < 1e-9);
            assert!(c.seasonal.values()[i].abs() < 1e-9);
            assert!(c.irregular.values()[i].abs() < 1e-9);
        }
    }

    #[test]
    fn pure_sine_goes_to_seasonal() {
        let p = 24;
        let x: Vec<f64> = (0..p * 12)
            .map(|t| (2.0 * PI * t as f64 / p as f64).sin())
            .collect();
        let c = decompose_std(&s(x.clone()), p).unwrap();
        assert!(rmse(c.seasonal.values(), &x) <= 0.05);
        let zeros = vec![0.0; x.len()];
        assert!(rmse(c.trend.values(), &zeros) <= 0.05);
        assert!(rmse(c.irregular.values(), &zeros) <= 0.05);
    }

    #[test]
    fn sine_plus_ramp_recovers_slope() {
        let p = 12;
        let n = p * 20;
        let x: Vec<f64> = (0..n)
            .map(|t| 0.05 * t as f64 + (2.0 * PI * t as f64 / p as f64).sin())
            .collect();
        let c = decompose_std(&s(x), p).unwrap();
        let (lo, hi) = (p, n - p);
        let ts: Vec<f64> = (lo..hi).map(|t| t as f64).collect();
        let tr = &c.trend.values()[lo..hi];
        let tm = ts.iter().sum::<f64>() / ts.len() as f64;
        let ym = tr.iter().sum::<f64>() / tr.len() as f64;
        let slope = ts
            .iter()
            .zip(tr)
            .map(|(t, y)| (t - tm) * (y - ym))
            .sum::<f64>()
            / ts.iter().map(|t| (t - tm).powi(2)).sum::<f64>();
        assert!((slope - 0.05).abs() <= 0.05 * 0.05, "slope {slope}");
    }

    #[test]
    fn seasonal_cycles_are_centred() {
        let p = 10;
        let x: Vec<f64> = (0..p * 9 + 4)
            .map(|t| ((t * 7919) % 31) as f64 + 0.1 * t as f64)
            .collect();
        let c = decompose_std(&s(x), p).unwrap();
        for block in c.seasonal.values().chunks_exact(p) {
            assert!((block.iter().sum::<f64>() / p as f64).abs() < 1e-6);
        }
    }

    #[test]
    fn rejects_short_or_bad_period() {
        assert!(matches!(
            decompose_std(&s(vec![1.0; 20]), 12),
            Err(Error::SeriesTooShort { .. })
        ));
        assert!(decompose_std(&s(vec![1.0; 20]), 1).is_err());
    }

    #[test]
    fn odd_period() {
        let p = 7;
        let x: Vec<f64> = (0..p * 8)
            .map(|t| [3.0, 1.0, 0.0, -1.0, -2.0, -1.0, 0.0][t % p])
            .collect();
        let c = decompose_std(&s(x.clone()), p).unwrap();
        let rec = c.reconstruct();
        for (a, b) in rec.iter().zip(&x) {
            assert!((a - b).abs() < 1e-9);
        }
    }
}
