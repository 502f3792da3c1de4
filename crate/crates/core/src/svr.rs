//! Linear epsilon-insensitive support vector regression from a window of
//! lagged CO2 samples to occupancy.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::series::{SampledSeries, Unit};

#[derive(Debug, Clone, PartialEq)]
pub struct SvrConfig {
    /// Occupancy at `t` is paired with CO2 at `t + lag` and the
    /// `window - 1` samples before it.
    pub lag: usize,
    pub window: usize,
    pub epsilon: f64,
    pub c: f64,
    pub epochs: usize,
    pub learning_rate: f64,
    pub seed: u64,
}

impl Default for SvrConfig {
    fn default() -> Self {
        Self {
            lag: 0,
            window: 4,
            epsilon: 0.5,
            c: 1.0,
            epochs: 60,
            learning_rate: 0.05,
            seed: 0,
        }
    }
}

impl SvrConfig {
    fn validate(&self) -> Result<()> {
        if self.window == 0 {
            return Err(Error::InvalidParameter("svr window must be >= 1".into()));
        }
        if !(self.epsilon >= 0.0) {
            return Err(Error::InvalidParameter("svr epsilon must be >= 0".into()));
        }
        if !(self.c > 0.0) {
            return Err(Error::InvalidParameter("svr C must be > 0".into()));
        }
        if self.epochs == 0 {
            return Err(Error::InvalidParameter(
                "svr needs at least one epoch".into(),
            ));
        }
        if !(self.learning_rate > 0.0) {
            return Err(Error::InvalidParameter(
                "svr learning rate must be > 0".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SvrModel {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub epsilon: f64,
    pub c: f64,
    pub lag: usize,
    pub window: usize,
    /// Per-feature normalisation constants.
    pub means: Vec<f64>,
    pub stds: Vec<f64>,
    /// Training objective after each accepted epoch.
    pub objective_trace: Vec<f64>,
}

impl SvrModel {
    pub fn raw_output(&self, features: &[f64]) -> f64 {
        self.weights
            .iter()
            .zip(features)
            .zip(self.means.iter().zip(&self.stds))
            .map(|((w, x), (m, s))| w * (x - m) / s)
            .sum::<f64>()
            + self.bias
    }
}

/// `1/2 |w|^2 + C sum max(0, |y - w.x - b| - eps)`.
pub fn svr_objective(w: &[f64], b: f64, xs: &[Vec<f64>], ys: &[f64], epsilon: f64, c: f64) -> f64 {
    let reg = 0.5 * w.iter().map(|v| v * v).sum::<f64>();
    let loss: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| (residual(w, b, x, *y).abs() - epsilon).max(0.0))
        .sum();
    reg + c * loss
}

fn residual(w: &[f64], b: f64, x: &[f64], y: f64) -> f64 {
    y - w.iter().zip(x).map(|(a, b)| a * b).sum::<f64>() - b
}

/// Seeded stochastic subgradient descent on the primal objective. The step
/// size decays as `rate / sqrt(1 + epoch)`; an epoch that would raise the
/// full objective is discarded and the step size halved, so the recorded
/// objective never increases.
pub(crate) fn fit_linear(
    xs: &[Vec<f64>],
    ys: &[f64],
    cfg: &SvrConfig,
) -> (Vec<f64>, f64, Vec<f64>) {
    let n = xs.len();
    let dim = xs[0].len();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut order: Vec<usize> = (0..n).collect();
    let mut w = vec![0.0; dim];
    let mut sorted = ys.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut b = sorted[n / 2];
    let mut best = svr_objective(&w, b, xs, ys, cfg.epsilon, cfg.c);
    let mut trace = vec![best];
    let mut scale = 1.0;
    for epoch in 0..cfg.epochs {
        let eta = scale * cfg.learning_rate / ((1 + epoch) as f64).sqrt();
        order.shuffle(&mut rng);
        let (mut w_new, mut b_new) = (w.clone(), b);
        for &i in &order {
            let r = residual(&w_new, b_new, &xs[i], ys[i]);
            let active = r.abs() > cfg.epsilon;
            let sign = r.signum();
            for (wk, xk) in w_new.iter_mut().zip(&xs[i]) {
                let mut g = *wk / n as f64;
                if active {
                    g -= cfg.c * sign * xk;
                }
                *wk -= eta * g;
            }
            if active {
                b_new += eta * cfg.c * sign;
            }
        }
        let obj = svr_objective(&w_new, b_new, xs, ys, cfg.epsilon, cfg.c);
        if obj <= best {
            w = w_new;
            b = b_new;
            best = obj;
            trace.push(obj);
        } else {
            scale *= 0.5;
        }
    }
    (w, b, trace)
}

fn feature_row(co2: &[f64], end: usize, window: usize) -> Vec<f64> {
    (0..window).map(|k| co2[end - k]).collect()
}

/// Training rows: for each occupancy sample at `t`, the CO2 window ending at
/// `t + lag`.
fn training_rows(
    co2: &SampledSeries,
    occ: &SampledSeries,
    lag: usize,
    window: usize,
) -> (Vec<Vec<f64>>, Vec<f64>) {
    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    for (t, y) in occ.timestamps().zip(occ.values()) {
        let Some(j) = co2.index_of(t) else { continue };
        let end = j + lag;
        if end + 1 < window || end >= co2.len() {
            continue;
        }
        xs.push(feature_row(co2.values(), end, window));
        ys.push(*y);
    }
    (xs, ys)
}

pub fn fit_svr(co2: &SampledSeries, occ: &SampledSeries, cfg: &SvrConfig) -> Result<SvrModel> {
    cfg.validate()?;
    if co2.interval() != occ.interval() {
        return Err(Error::IntervalMismatch {
            left: co2.interval(),
            right: occ.interval(),
        });
    }
    let (mut xs, ys) = training_rows(co2, occ, cfg.lag, cfg.window);
    if xs.len() <= cfg.window {
        return Err(Error::SeriesTooShort {
            needed: cfg.window + 1,
            got: xs.len(),
        });
    }
    let n = xs.len() as f64;
    let mut means = vec![0.0; cfg.window];
    let mut stds = vec![0.0; cfg.window];
    for k in 0..cfg.window {
        let m = xs.iter().map(|x| x[k]).sum::<f64>() / n;
        let v = xs.iter().map(|x| (x[k] - m).powi(2)).sum::<f64>() / n;
        if !(v > 0.0) {
            return Err(Error::ZeroVariance);
        }
        means[k] = m;
        stds[k] = v.sqrt();
    }
    for x in &mut xs {
        for k in 0..cfg.window {
            x[k] = (x[k] - means[k]) / stds[k];
        }
    }
    let (weights, bias, objective_trace) = fit_linear(&xs, &ys, cfg);
    Ok(SvrModel {
        weights,
        bias,
        epsilon: cfg.epsilon,
        c: cfg.c,
        lag: cfg.lag,
        window: cfg.window,
        means,
        stds,
        objective_trace,
    })
}

/// Occupancy for every time whose feature window lies inside `co2`:
/// `w.x + b`, clamped at zero and rounded half to even.
pub fn predict_svr(model: &SvrModel, co2: &SampledSeries) -> Result<SampledSeries> {
    if co2.len() < model.window {
        return Err(Error::InsufficientHistory(format!(
            "svr window needs {} co2 samples, got {}",
            model.window,
            co2.len()
        )));
    }
    let values = (model.window - 1..co2.len())
        .map(|end| {
            let x = feature_row(co2.values(), end, model.window);
            model.raw_output(&x).max(0.0).round_ties_even()
        })
        .collect();
    let shift = model.lag as i64 * co2.interval() as i64;
    Ok(SampledSeries::derived(
        co2.timestamp(model.window - 1) - shift,
        co2.interval(),
        values,
        Unit::Persons,
    ))
}
