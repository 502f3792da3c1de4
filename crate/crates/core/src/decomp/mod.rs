//! Additive trend + seasonal + irregular decomposition.
//!
//! Two engines are provided: a moving-average procedure in the X-11 lineage
//! ([`decompose_std`]) and loess-based STL ([`decompose_stl`]). Both return
//! the irregular part as the exact residual, so the three components always
//! add back up to the input.

mod filters;
mod loess;
mod std_ma;
mod stl;

use std::fmt;
use std::str::FromStr;

pub use filters::{
    composite_ma_weights, henderson, henderson_weights, moving_average, HENDERSON_TERMS,
};
pub use loess::loess;
pub use std_ma::{decompose_std, decompose_std_with, StdParams};
pub use stl::{decompose_stl, StlParams};

use crate::error::{Error, Result};
use crate::series::SampledSeries;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    Std,
    Stl,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Std => "STD",
            Method::Stl => "STL",
        })
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "STD" => Ok(Method::Std),
            "STL" => Ok(Method::Stl),
            _ => Err(Error::InvalidParameter(format!(
                "unknown decomposition method '{s}'"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComponentSet {
    pub trend: SampledSeries,
    pub seasonal: SampledSeries,
    pub irregular: SampledSeries,
    pub period: usize,
    pub method: Method,
}

impl ComponentSet {
    pub(crate) fn from_parts(
        source: &SampledSeries,
        trend: Vec<f64>,
        seasonal: Vec<f64>,
        period: usize,
        method: Method,
    ) -> Self {
        let irregular = source
            .values()
            .iter()
            .zip(&trend)
            .zip(&seasonal)
            .map(|((y, t), s)| y - t - s)
            .collect();
        Self {
            trend: source.with_values(trend),
            seasonal: source.with_values(seasonal),
            irregular: source.with_values(irregular),
            period,
            method,
        }
    }

    pub fn len(&self) -> usize {
        self.trend.len()
    }

    pub fn is_empty(&self) -> bool {
        self.trend.is_empty()
    }

    /// trend + seasonal + irregular, sample by sample.
    pub fn reconstruct(&self) -> Vec<f64> {
        self.trend
            .values()
            .iter()
            .zip(self.seasonal.values())
            .zip(self.irregular.values())
            .map(|((t, s), e)| t + s + e)
            .collect()
    }

    /// Components restricted to samples `[from, to)`.
    pub fn slice(&self, from: usize, to: usize) -> Result<Self> {
        Ok(Self {
            trend: self.trend.slice(from, to)?,
            seasonal: self.seasonal.slice(from, to)?,
            irregular: self.irregular.slice(from, to)?,
            period: self.period,
            method: self.method,
        })
    }
}

/// Decomposition settings for either engine.
#[derive(Debug, Clone, PartialEq)]
pub enum DecompConfig {
    Std(StdParams),
    Stl(StlParams),
}

impl DecompConfig {
    /// Default parameters of `method` for the given period.
    pub fn for_method(method: Method, period: usize) -> Self {
        match method {
            Method::Std => DecompConfig::Std(StdParams::new(period)),
            Method::Stl => DecompConfig::Stl(StlParams::new(period)),
        }
    }

    pub fn method(&self) -> Method {
        match self {
            DecompConfig::Std(_) => Method::Std,
            DecompConfig::Stl(_) => Method::Stl,
        }
    }

    pub fn period(&self) -> usize {
        match self {
            DecompConfig::Std(p) => p.period,
            DecompConfig::Stl(p) => p.period,
        }
    }

    pub fn decompose(&self, series: &SampledSeries) -> Result<ComponentSet> {
        match self {
            DecompConfig::Std(p) => decompose_std_with(series, p),
            DecompConfig::Stl(p) => decompose_stl(series, p),
        }
    }
}

/// Values of phase `phase` in a series of period `period`.
pub(crate) fn phase_indices(
    len: usize,
    period: usize,
    phase: usize,
) -> impl Iterator<Item = usize> {
    (phase..len).step_by(period)
}
