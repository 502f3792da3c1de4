//! Uniformly sampled series and the resampling, gap-filling and alignment
//! helpers every other module builds on.
//!
//! Timestamps are UTC epoch seconds. Each sample at `start + i * interval`
//! represents the window `[t, t + interval)`.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

pub type Timestamp = i64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Unit {
    Ppm,
    Persons,
    Dimensionless,
}

impl fmt::Display for Unit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Unit::Ppm => "ppm",
            Unit::Persons => "persons",
            Unit::Dimensionless => "dimensionless",
        })
    }
}

impl FromStr for Unit {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ppm" => Ok(Unit::Ppm),
            "persons" => Ok(Unit::Persons),
            "dimensionless" => Ok(Unit::Dimensionless),
            other => Err(Error::InvalidParameter(format!("unknown unit '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SampledSeries {
    start: Timestamp,
    interval: u32,
    values: Vec<f64>,
    unit: Unit,
}

impl SampledSeries {
    /// Validates the series invariants: positive interval, non-empty, finite
    /// values and non-negative counts for occupancy series.
    pub fn new(start: Timestamp, interval: u32, values: Vec<f64>, unit: Unit) -> Result<Self> {
        if interval == 0 {
            return Err(Error::InvalidInterval(0));
        }
        if values.is_empty() {
            return Err(Error::EmptySeries);
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(i));
        }
        if unit == Unit::Persons {
            if let Some(i) = values.iter().position(|&v| v < 0.0) {
                return Err(Error::NegativeOccupancy {
                    index: i,
                    value: values[i],
                });
            }
        }
        Ok(Self {
            start,
            interval,
            values,
            unit,
        })
    }

    /// Builds a series whose values are known to be valid (derived data).
    pub(crate) fn derived(start: Timestamp, interval: u32, values: Vec<f64>, unit: Unit) -> Self {
        debug_assert!(interval > 0 && !values.is_empty());
        Self {
            start,
            interval,
            values,
            unit,
        }
    }

    pub fn start(&self) -> Timestamp {
        self.start
    }

    pub fn interval(&self) -> u32 {
        self.interval
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn unit(&self) -> Unit {
        self.unit
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn timestamp(&self, i: usize) -> Timestamp {
        self.start + i as i64 * self.interval as i64
    }

    /// Timestamp one interval past the last sample.
    pub fn end(&self) -> Timestamp {
        self.timestamp(self.values.len())
    }

    pub fn timestamps(&self) -> impl Iterator<Item = Timestamp> + '_ {
        (0..self.values.len()).map(move |i| self.timestamp(i))
    }

    /// Same timing and unit, new values.
    pub fn with_values(&self, values: Vec<f64>) -> Self {
        Self::derived(self.start, self.interval, values, self.unit)
    }

    /// Samples `[from, to)` as a new series.
    pub fn slice(&self, from: usize, to: usize) -> Result<Self> {
        if from >= to || to > self.len() {
            return Err(Error::InvalidParameter(format!(
                "slice {from}..{to} out of range for length {}",
                self.len()
            )));
        }
        Ok(Self::derived(
            self.timestamp(from),
            self.interval,
            self.values[from..to].to_vec(),
            self.unit,
        ))
    }

    /// Index of the sample covering `t`, if any.
    pub fn index_of(&self, t: Timestamp) -> Option<usize> {
        if t < self.start {
            return None;
        }
        let i = ((t - self.start) / self.interval as i64) as usize;
        (i < self.len()).then_some(i)
    }
}

/// A series that may contain missing samples, as produced by ingestion.
#[derive(Debug, Clone, PartialEq)]
pub struct GappySeries {
    pub start: Timestamp,
    pub interval: u32,
    pub values: Vec<Option<f64>>,
    pub unit: Unit,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AlignedPair {
    pub co2: SampledSeries,
    pub occupancy: SampledSeries,
    pub lag_applied: usize,
}

impl AlignedPair {
    pub fn len(&self) -> usize {
        self.co2.len()
    }

    pub fn is_empty(&self) -> bool {
        self.co2.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ResampleMode {
    /// Window means when the target is a multiple of the source interval,
    /// linear interpolation when it divides it; anything else is rejected.
    #[default]
    Exact,
    /// Linear interpolation at the new sample instants for any ratio.
    Interpolate,
}

pub fn resample(series: &SampledSeries, target_interval: u32) -> Result<SampledSeries> {
    resample_with(series, target_interval, ResampleMode::Exact)
}

pub fn resample_with(
    series: &SampledSeries,
    target_interval: u32,
    mode: ResampleMode,
) -> Result<SampledSeries> {
    if series.is_empty() {
        return Err(Error::EmptySeries);
    }
    if target_interval == 0 {
        return Err(Error::InvalidInterval(0));
    }
    let src = series.interval;
    if target_interval == src {
        return Ok(series.clone());
    }
    let values = if target_interval.is_multiple_of(src) && mode == ResampleMode::Exact {
        let k = (target_interval / src) as usize;
        series
            .values
            .chunks(k)
            .map(|w| w.iter().sum::<f64>() / w.len() as f64)
            .collect()
    } else if src.is_multiple_of(target_interval) || mode == ResampleMode::Interpolate {
        let span = series.len() as u64 * src as u64;
        let n_out = (span / target_interval as u64).max(1) as usize;
        (0..n_out)
            .map(|j| {
                let pos = (j as u64 * target_interval as u64) as f64 / src as f64;
                interpolate_at(&series.values, pos)
            })
            .collect()
    } else {
        return Err(Error::InvalidParameter(format!(
            "target interval {target_interval} s is neither a multiple nor a divisor of {src} s"
        )));
    };
    Ok(SampledSeries::derived(
        series.start,
        target_interval,
        values,
        series.unit,
    ))
}

/// Linear interpolation at fractional index `pos`, held flat past the ends.
fn interpolate_at(values: &[f64], pos: f64) -> f64 {
    let last = values.len() - 1;
    if pos <= 0.0 {
        return values[0];
    }
    if pos >= last as f64 {
        return values[last];
    }
    let i = pos.floor() as usize;
    let frac = pos - i as f64;
    values[i] + frac * (values[i + 1] - values[i])
}

/// Linearly interpolates interior runs of missing samples no longer than
/// `max_gap`. Present values pass through untouched.
pub fn fill_gaps(series: &GappySeries, max_gap: usize) -> Result<SampledSeries> {
    if series.interval == 0 {
        return Err(Error::InvalidInterval(0));
    }
    let v = &series.values;
    if v.is_empty() {
        return Err(Error::EmptySeries);
    }
    if v[0].is_none() {
        return Err(Error::UnboundedGap("start"));
    }
    if v[v.len() - 1].is_none() {
        return Err(Error::UnboundedGap("end"));
    }
    let mut out = Vec::with_capacity(v.len());
    let mut i = 0;
    while i < v.len() {
        match v[i] {
            Some(x) => {
                out.push(x);
                i += 1;
            }
            None => {
                let gap_start = i;
                while v[i].is_none() {
                    i += 1;
                }
                let len = i - gap_start;
                if len > max_gap {
                    return Err(Error::GapTooLong {
                        start: gap_start,
                        len,
                        max: max_gap,
                    });
                }
                let left = out[gap_start - 1];
                let right = v[i].expect("gap ends on a present value");
                let steps = (len + 1) as f64;
                for k in 1..=len {
                    out.push(left + (right - left) * k as f64 / steps);
                }
            }
        }
    }
    SampledSeries::new(series.start, series.interval, out, series.unit)
}

/// Pairs `occupancy[t]` with `co2[t + lag]` and trims both to the common
/// length `min(len(co2) - lag, len(occupancy))`.
pub fn shift_and_trim(
    co2: &SampledSeries,
    occupancy: &SampledSeries,
    lag: usize,
) -> Result<AlignedPair> {
    if co2.interval != occupancy.interval {
        return Err(Error::IntervalMismatch {
            left: co2.interval,
            right: occupancy.interval,
        });
    }
    if lag >= co2.len() {
        return Err(Error::LagTooLarge {
            lag,
            len: co2.len(),
        });
    }
    let n = (co2.len() - lag).min(occupancy.len());
    Ok(AlignedPair {
        co2: SampledSeries::derived(
            co2.timestamp(lag),
            co2.interval,
            co2.values[lag..lag + n].to_vec(),
            co2.unit,
        ),
        occupancy: SampledSeries::derived(
            occupancy.start,
            occupancy.interval,
            occupancy.values[..n].to_vec(),
            occupancy.unit,
        ),
        lag_applied: lag,
    })
}

pub(crate) fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}
