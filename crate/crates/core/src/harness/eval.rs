//! Tolerance accuracy and the incremental day-split benchmark.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::decomp::Method;
use crate::error::{Error, Result};
use crate::lag::select_lag;
use crate::models::SECONDS_PER_DAY;
use crate::predictor::{predict, train, LagPolicy, TrainConfig};
use crate::series::{AlignedPair, SampledSeries, Timestamp};
use crate::svr::{fit_svr, predict_svr, SvrConfig};

/// Percentage of samples whose prediction is within `x` persons of the
/// actual value.
pub fn accuracy_with_tolerance(
    pred: &SampledSeries,
    actual: &SampledSeries,
    x: f64,
) -> Result<f64> {
    if pred.len() != actual.len() {
        return Err(Error::InvalidParameter(format!(
            "prediction has {} samples, actual has {}",
            pred.len(),
            actual.len()
        )));
    }
    if pred.is_empty() {
        return Err(Error::EmptySeries);
    }
    if !(x >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "tolerance must be >= 0, got {x}"
        )));
    }
    let hits = pred
        .values()
        .iter()
        .zip(actual.values())
        .filter(|(p, a)| (*p - *a).abs() <= x)
        .count();
    Ok(100.0 * hits as f64 / pred.len() as f64)
}

/// Restricts `pred` and `actual` to the timestamps both cover.
pub fn common_samples(
    pred: &SampledSeries,
    actual: &SampledSeries,
) -> Result<(SampledSeries, SampledSeries)> {
    if pred.interval() != actual.interval() {
        return Err(Error::IntervalMismatch {
            left: pred.interval(),
            right: actual.interval(),
        });
    }
    let step = pred.interval() as i64;
    if (pred.start() - actual.start()).rem_euclid(step) != 0 {
        return Err(Error::InvalidParameter(
            "series are not on the same time grid".into(),
        ));
    }
    let start = pred.start().max(actual.start());
    let end = pred.end().min(actual.end());
    if end <= start {
        return Err(Error::EmptySeries);
    }
    let cut = |s: &SampledSeries| {
        s.slice(
            ((start - s.start()) / step) as usize,
            ((end - s.start()) / step) as usize,
        )
    };
    Ok((cut(pred)?, cut(actual)?))
}

pub fn mean_absolute_error(pred: &SampledSeries, actual: &SampledSeries) -> f64 {
    pred.values()
        .iter()
        .zip(actual.values())
        .map(|(p, a)| (p - a).abs())
        .sum::<f64>()
        / pred.len() as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DaySplit {
    pub train_days: usize,
    pub test_days: usize,
    /// First timestamp of the test span (a local midnight).
    pub boundary: Timestamp,
}

/// First local midnight at or after `t`.
fn next_midnight(t: Timestamp, utc_offset: i64) -> Timestamp {
    let local = t + utc_offset;
    local.div_euclid(SECONDS_PER_DAY) * SECONDS_PER_DAY
        + if local.rem_euclid(SECONDS_PER_DAY) == 0 {
            0
        } else {
            SECONDS_PER_DAY
        }
        - utc_offset
}

/// Splits at local midnights, from half the days (rounded up) for training
/// to all days but one. Days are counted from the first local midnight; a
/// partial leading day joins every training span.
pub fn incremental_splits(data: &AlignedPair, utc_offset: i64) -> Result<Vec<DaySplit>> {
    let first = next_midnight(data.occupancy.start(), utc_offset);
    let end = data.occupancy.end().min(data.co2.end());
    let days = if end > first {
        ((end - first) / SECONDS_PER_DAY) as usize
    } else {
        0
    };
    if days < 2 {
        return Err(Error::InsufficientHistory(format!(
            "incremental splits need 2 whole days, got {days}"
        )));
    }
    Ok((days.div_ceil(2)..days)
        .map(|train_days| DaySplit {
            train_days,
            test_days: days - train_days,
            boundary: first + train_days as i64 * SECONDS_PER_DAY,
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum EvalMethod {
    Std,
    Stl,
    Svr,
}

impl EvalMethod {
    pub const ALL: [EvalMethod; 3] = [EvalMethod::Std, EvalMethod::Stl, EvalMethod::Svr];
}

impl fmt::Display for EvalMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EvalMethod::Std => "CDHOC-STD",
            EvalMethod::Stl => "CDHOC-STL",
            EvalMethod::Svr => "SVR",
        })
    }
}

impl FromStr for EvalMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "STD" | "CDHOC-STD" => Ok(EvalMethod::Std),
            "STL" | "CDHOC-STL" => Ok(EvalMethod::Stl),
            "SVR" => Ok(EvalMethod::Svr),
            _ => Err(Error::InvalidParameter(format!(
                "unknown evaluation method '{s}'"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalConfig {
    pub tolerances: Vec<f64>,
    pub methods: Vec<EvalMethod>,
    pub min_training_days: usize,
    pub train: TrainConfig,
    pub svr: SvrConfig,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            tolerances: vec![0.0, 1.0],
            methods: EvalMethod::ALL.to_vec(),
            min_training_days: 1,
            train: TrainConfig::default(),
            svr: SvrConfig::default(),
        }
    }
}

impl EvalConfig {
    pub fn validate(&self) -> Result<()> {
        if self.tolerances.is_empty() || self.tolerances.iter().any(|x| !(*x >= 0.0)) {
            return Err(Error::InvalidParameter(
                "tolerances must be a non-empty list of values >= 0".into(),
            ));
        }
        if self.methods.is_empty() {
            return Err(Error::InvalidParameter(
                "at least one method is required".into(),
            ));
        }
        if self.min_training_days == 0 {
            return Err(Error::InvalidParameter(
                "min_training_days must be >= 1".into(),
            ));
        }
        self.train.validate()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalRow {
    pub train_days: usize,
    pub test_days: usize,
    pub method: EvalMethod,
    pub tolerance: f64,
    pub accuracy: f64,
    pub mae: f64,
    pub samples: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellFailure {
    pub train_days: usize,
    pub method: EvalMethod,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellPrediction {
    pub train_days: usize,
    pub method: EvalMethod,
    pub lag: usize,
    pub predicted: SampledSeries,
    pub actual: SampledSeries,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct EvalReport {
    pub rows: Vec<EvalRow>,
    pub failures: Vec<CellFailure>,
    pub predictions: Vec<CellPrediction>,
}

impl EvalReport {
    /// Mean accuracy per (method, tolerance), in first-appearance order.
    pub fn averages(&self) -> Vec<(EvalMethod, f64, f64)> {
        let mut keys: Vec<(EvalMethod, f64)> = Vec::new();
        for r in &self.rows {
            if !keys.contains(&(r.method, r.tolerance)) {
                keys.push((r.method, r.tolerance));
            }
        }
        keys.into_iter()
            .map(|(m, x)| {
                let acc: Vec<f64> = self
                    .rows
                    .iter()
                    .filter(|r| r.method == m && r.tolerance == x)
                    .map(|r| r.accuracy)
                    .collect();
                (m, x, acc.iter().sum::<f64>() / acc.len() as f64)
            })
            .collect()
    }

    pub fn average(&self, method: EvalMethod, tolerance: f64) -> Option<f64> {
        self.averages()
            .into_iter()
            .find(|(m, x, _)| *m == method && *x == tolerance)
            .map(|(_, _, a)| a)
    }
}

fn cut_before(s: &SampledSeries, t: Timestamp) -> Result<SampledSeries> {
    let n = s.index_of(t).unwrap_or(s.len());
    s.slice(0, n)
}

fn cut_from(s: &SampledSeries, t: Timestamp) -> Result<SampledSeries> {
    let n = s.index_of(t).ok_or(Error::EmptySeries)?;
    s.slice(n, s.len())
}

/// Trains one method on the data before the split boundary and predicts
/// the rest; returns the applied lag and the predicted occupancy.
fn run_cell(
    data: &AlignedPair,
    split: &DaySplit,
    method: EvalMethod,
    cfg: &EvalConfig,
) -> Result<(usize, SampledSeries)> {
    let co2_train = cut_before(&data.co2, split.boundary)?;
    let occ_train = cut_before(&data.occupancy, split.boundary)?;
    match method {
        EvalMethod::Std | EvalMethod::Stl => {
            let train_cfg = TrainConfig {
                method: if method == EvalMethod::Std {
                    Method::Std
                } else {
                    Method::Stl
                },
                ..cfg.train.clone()
            };
            let model = train(&co2_train, &occ_train, &train_cfg)?;
            let result = predict(&model, &cut_from(&data.co2, split.boundary)?)?;
            Ok((model.lag, result.occupancy))
        }
        EvalMethod::Svr => {
            let lag = match cfg.train.lag {
                LagPolicy::Fixed(k) => k,
                LagPolicy::Search { max } => {
                    select_lag(&co2_train, &occ_train, max)
                        .map_err(Error::at_stage("lag"))?
                        .best_lag
                }
            };
            let svr_cfg = SvrConfig {
                lag,
                ..cfg.svr.clone()
            };
            let model =
                fit_svr(&co2_train, &occ_train, &svr_cfg).map_err(Error::at_stage("svr"))?;
            Ok((lag, predict_svr(&model, &data.co2)?))
        }
    }
}

/// Trains and tests every method on every incremental split. Cells run in
/// parallel; a failing cell is recorded without stopping the others.
pub fn run_benchmark(data: &AlignedPair, cfg: &EvalConfig) -> Result<EvalReport> {
    cfg.validate()?;
    let splits: Vec<DaySplit> = incremental_splits(data, cfg.train.utc_offset)?
        .into_iter()
        .filter(|s| s.train_days >= cfg.min_training_days)
        .collect();
    let cells: Vec<(DaySplit, EvalMethod)> = splits
        .iter()
        .flat_map(|s| cfg.methods.iter().map(move |m| (*s, *m)))
        .collect();
    let outcomes: Vec<_> = cells
        .par_iter()
        .map(|(split, method)| {
            let outcome = run_cell(data, split, *method, cfg).and_then(|(lag, pred)| {
                let actual = cut_from(&data.occupancy, split.boundary)?;
                let (p, a) = common_samples(&pred, &actual)?;
                Ok((lag, p, a))
            });
            (*split, *method, outcome)
        })
        .collect();

    let mut report = EvalReport::default();
    for (split, method, outcome) in outcomes {
        match outcome {
            Ok((lag, predicted, actual)) => {
                let mae = mean_absolute_error(&predicted, &actual);
                for &x in &cfg.tolerances {
                    report.rows.push(EvalRow {
                        train_days: split.train_days,
                        test_days: split.test_days,
                        method,
                        tolerance: x,
                        accuracy: accuracy_with_tolerance(&predicted, &actual, x)?,
                        mae,
                        samples: predicted.len(),
                    });
                }
                report.predictions.push(CellPrediction {
                    train_days: split.train_days,
                    method,
                    lag,
                    predicted,
                    actual,
                });
            }
            Err(e) => {
                log::warn!(
                    "{method} with {} training days failed: {e}",
                    split.train_days
                );
                report.failures.push(CellFailure {
                    train_days: split.train_days,
                    method,
                    error: e.to_string(),
                });
            }
        }
    }
    Ok(report)
}
