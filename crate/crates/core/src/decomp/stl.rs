use super::loess::{loess_eval, Degeneracy};
use super::{phase_indices, ComponentSet, Method};
use crate::error::{Error, Result};
use crate::series::SampledSeries;

#[derive(Debug, Clone, PartialEq)]
pub struct StlParams {
    pub period: usize,
    /// Loess span, in cycle-subseries points, of the seasonal smoother.
    pub seasonal_span: usize,
    pub trend_span: usize,
    /// Span of the loess step of the low-pass filter.
    pub lowpass_span: usize,
    pub inner_iterations: usize,
    pub outer_iterations: usize,
    pub loess_degree: usize,
}

fn next_odd(x: f64) -> usize {
    let n = x.ceil() as usize;
    if n.is_multiple_of(2) {
        n + 1
    } else {
        n
    }
}

impl StlParams {
    pub fn new(period: usize) -> Self {
        let seasonal_span = 7;
        Self {
            period,
            seasonal_span,
            trend_span: Self::default_trend_span(period, seasonal_span),
            lowpass_span: next_odd(period as f64).max(3),
            inner_iterations: 2,
            outer_iterations: 1,
            loess_degree: 1,
        }
    }

    /// Smallest odd integer >= 1.5 p / (1 - 1.5 / n_s).
    pub fn default_trend_span(period: usize, seasonal_span: usize) -> usize {
        next_odd(1.5 * period as f64 / (1.0 - 1.5 / seasonal_span as f64)).max(3)
    }

    /// Sets the seasonal span and recomputes the dependent trend span.
    pub fn with_seasonal_span(mut self, span: usize) -> Self {
        self.seasonal_span = span;
        self.trend_span = Self::default_trend_span(self.period, span);
        self
    }

    pub fn with_outer_iterations(mut self, n: usize) -> Self {
        self.outer_iterations = n;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.period < 2 {
            return Err(Error::InvalidParameter(format!(
                "period must be >= 2, got {}",
                self.period
            )));
        }
        for (name, span) in [
            ("seasonal_span", self.seasonal_span),
            ("trend_span", self.trend_span),
            ("lowpass_span", self.lowpass_span),
        ] {
            if span < 3 || span % 2 == 0 {
                return Err(Error::InvalidParameter(format!(
                    "{name} must be odd and >= 3, got {span}"
                )));
            }
        }
        if self.inner_iterations == 0 {
            return Err(Error::InvalidParameter(
                "inner_iterations must be >= 1".into(),
            ));
        }
        if !(1..=2).contains(&self.loess_degree) {
            return Err(Error::InvalidParameter(format!(
                "loess_degree must be 1 or 2, got {}",
                self.loess_degree
            )));
        }
        Ok(())
    }
}

/// Seasonal-trend decomposition by loess: an inner loop of cycle-subseries
/// smoothing, low-pass removal and trend smoothing, wrapped in an outer loop
/// that refits with bisquare robustness weights.
pub fn decompose_stl(series: &SampledSeries, params: &StlParams) -> Result<ComponentSet> {
    params.validate()?;
    let y = series.values();
    let n = y.len();
    let p = params.period;
    if n < 2 * p {
        return Err(Error::SeriesTooShort {
            needed: 2 * p,
            got: n,
        });
    }

    let xs: Vec<f64> = (0..n).map(|i| i as f64).collect();
    let mut trend = vec![0.0; n];
    let mut seasonal = vec![0.0; n];
    let mut robustness: Option<Vec<f64>> = None;

    for outer in 0..=params.outer_iterations {
        if outer > 0 {
            robustness = Some(bisquare_weights(y, &trend, &seasonal));
        }
        for _ in 0..params.inner_iterations {
            let detrended: Vec<f64> = y.iter().zip(&trend).map(|(a, b)| a - b).collect();
            let cycles = smooth_cycle_subseries(&detrended, p, params, robustness.as_deref())?;
            let lowpass = low_pass(&cycles, p, n, params)?;
            for i in 0..n {
                seasonal[i] = cycles[p + i] - lowpass[i];
            }
            let deseasonalized: Vec<f64> = y.iter().zip(&seasonal).map(|(a, b)| a - b).collect();
            trend = loess_eval(
                &xs,
                &deseasonalized,
                &xs,
                params.trend_span,
                params.loess_degree,
                robustness.as_deref(),
                Degeneracy::LowerDegree,
            )?;
        }
    }
    Ok(ComponentSet::from_parts(
        series,
        trend,
        seasonal,
        p,
        Method::Stl,
    ))
}

/// Smooths each phase subseries and extends it by one cycle at both ends;
/// the result has `n + 2p` entries, entry `k` standing for time `k - p`.
fn smooth_cycle_subseries(
    detrended: &[f64],
    period: usize,
    params: &StlParams,
    robustness: Option<&[f64]>,
) -> Result<Vec<f64>> {
    let n = detrended.len();
    let mut out = vec![0.0; n + 2 * period];
    for phase in 0..period {
        let idx: Vec<usize> = phase_indices(n, period, phase).collect();
        let m = idx.len();
        let xs: Vec<f64> = (0..m).map(|i| i as f64).collect();
        let ys: Vec<f64> = idx.iter().map(|&i| detrended[i]).collect();
        let rob: Option<Vec<f64>> = robustness.map(|r| idx.iter().map(|&i| r[i]).collect());
        let at: Vec<f64> = (-1..=m as i64).map(|i| i as f64).collect();
        let fitted = loess_eval(
            &xs,
            &ys,
            &at,
            params.seasonal_span,
            params.loess_degree,
            rob.as_deref(),
            Degeneracy::LowerDegree,
        )?;
        for (k, v) in fitted.into_iter().enumerate() {
            out[phase + k * period] = v;
        }
    }
    Ok(out)
}

fn simple_ma(values: &[f64], len: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(values.len() + 1 - len);
    let mut acc: f64 = values[..len].iter().sum();
    out.push(acc / len as f64);
    for i in len..values.len() {
        acc += values[i] - values[i - len];
        out.push(acc / len as f64);
    }
    out
}

/// Moving averages of lengths p, p and 3 followed by a loess smooth.
fn low_pass(cycles: &[f64], period: usize, n: usize, params: &StlParams) -> Result<Vec<f64>> {
    let a = simple_ma(cycles, period);
    let b = simple_ma(&a, period);
    let c = simple_ma(&b, 3);
    debug_assert_eq!(c.len(), n);
    let xs: Vec<f64> = (0..n).map(|i| i as f64).collect();
    loess_eval(
        &xs,
        &c,
        &xs,
        params.lowpass_span,
        params.loess_degree,
        None,
        Degeneracy::LowerDegree,
    )
}

fn bisquare_weights(y: &[f64], trend: &[f64], seasonal: &[f64]) -> Vec<f64> {
    let resid: Vec<f64> = y
        .iter()
        .zip(trend)
        .zip(seasonal)
        .map(|((a, t), s)| (a - t - s).abs())
        .collect();
    let mut sorted = resid.clone();
    sorted.sort_by(f64::total_cmp);
    let m = sorted.len();
    let median = if m % 2 == 1 {
        sorted[m / 2]
    } else {
        0.5 * (sorted[m / 2 - 1] + sorted[m / 2])
    };
    let h = 6.0 * median;
    resid
        .iter()
        .map(|r| {
            if h == 0.0 {
                return 1.0;
            }
            let u = r / h;
            if u >= 1.0 {
                0.0
            } else {
                let t = 1.0 - u * u;
                t * t
            }
        })
        .collect()
}
