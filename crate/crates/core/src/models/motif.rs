//! Repeated-pattern extraction from a seasonal component and the
//! occupancy-seasonal lookup learned from it.

use super::dtw::dtw_similarity;
use crate::error::{Error, Result};
use crate::series::{SampledSeries, Timestamp};

#[derive(Debug, Clone, PartialEq)]
pub struct SeasonalMotif {
    pub values: Vec<f64>,
    /// Index in the source series where the motif starts.
    pub offset: usize,
    pub source_len: usize,
    pub similarity: f64,
}

impl SeasonalMotif {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MotifSearch {
    /// Acceptance threshold on DTW similarity, percent.
    pub threshold: f64,
    /// Equality tolerance for revisiting the start value, as a fraction of
    /// the component's range.
    pub tolerance: f64,
    pub min_len: usize,
    /// Longest candidate considered; `None` means half the series.
    pub max_len: Option<usize>,
    /// After the first accepted length `L`, lengths up to `L (1 + refine)`
    /// are also considered.
    pub refine: f64,
}

impl Default for MotifSearch {
    fn default() -> Self {
        Self {
            threshold: 95.0,
            tolerance: 0.01,
            min_len: 2,
            max_len: None,
            refine: 0.05,
        }
    }
}

impl MotifSearch {
    pub fn with_threshold(threshold: f64) -> Self {
        Self {
            threshold,
            ..Self::default()
        }
    }
}

/// Grows a candidate prefix of the seasonal component. Each time the series
/// returns to its start value at index `i` (within tolerance, or crossing it
/// between `i - 1` and `i`), the prefix
/// `S[0..i]` is compared by DTW similarity with the following `S[i..2i]`.
/// Candidates scoring above the threshold are accepted; from the first
/// accepted length up to the end of the refinement band, the one that also
/// matches all later cycles best sample by sample (without warping) is the
/// motif.
pub fn find_repeated_sequence(
    seasonal: &SampledSeries,
    search: &MotifSearch,
) -> Result<SeasonalMotif> {
    let s = seasonal.values();
    if s.len() < 4 {
        return Err(Error::SeriesTooShort {
            needed: 4,
            got: s.len(),
        });
    }
    let (lo, hi) = s
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });
    let eps = search.tolerance * (hi - lo);
    let start = s[0];
    let max_len = search.max_len.unwrap_or(s.len() / 2).min(s.len() / 2);
    let range = hi - lo;
    // (length, dtw similarity, lock-step similarity)
    let mut best: Option<(usize, f64, f64)> = None;
    let mut stop = max_len;
    for len in search.min_len.max(1)..=max_len {
        if len > stop {
            break;
        }
        let crossed = (s[len - 1] - start) * (s[len] - start) < 0.0;
        if (s[len] - start).abs() > eps && !crossed {
            continue;
        }
        let similarity = dtw_similarity(&s[..len], &s[len..2 * len])?;
        if similarity <= search.threshold {
            continue;
        }
        if best.is_none() {
            stop = ((len as f64 * (1.0 + search.refine)).floor() as usize).min(max_len);
        }
        let aligned = repeat_similarity(s, len, range);
        if best.is_none_or(|(_, _, b)| aligned > b) {
            best = Some((len, similarity, aligned));
        }
    }
    if let Some((len, similarity, _)) = best {
        return Ok(SeasonalMotif {
            values: s[..len].to_vec(),
            offset: 0,
            source_len: s.len(),
            similarity,
        });
    }
    Err(Error::Aperiodic)
}

/// Mean lock-step similarity of the prefix `s[..len]` with every later
/// complete cycle, so that a length off by a sample pays for the drift it
/// accumulates.
fn repeat_similarity(s: &[f64], len: usize, range: f64) -> f64 {
    let cycles = s.len() / len;
    (1..cycles)
        .map(|k| lockstep_similarity(&s[..len], &s[k * len..(k + 1) * len], range))
        .sum::<f64>()
        / (cycles - 1) as f64
}

/// Similarity without warping, on the same percent scale as DTW.
fn lockstep_similarity(a: &[f64], b: &[f64], range: f64) -> f64 {
    if range == 0.0 {
        return 100.0;
    }
    let cost: f64 = a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum();
    100.0 * (1.0 - cost / (a.len() as f64 * range))
}

/// Occupancy seasonal pattern, tiled from an absolute anchor time.
#[derive(Debug, Clone, PartialEq)]
pub struct SeasonalMap {
    pub occupancy_motif: Vec<f64>,
    /// Timestamp at which the motif's first sample applies.
    pub anchor: Timestamp,
    pub interval: u32,
}

impl SeasonalMap {
    pub fn len(&self) -> usize {
        self.occupancy_motif.len()
    }

    pub fn is_empty(&self) -> bool {
        self.occupancy_motif.is_empty()
    }

    /// Motif start as a sample offset into the local day.
    pub fn phase_anchor(&self, utc_offset: i64) -> usize {
        ((self.anchor + utc_offset).rem_euclid(86_400) / self.interval as i64) as usize
    }

    pub fn phase_of(&self, t: Timestamp) -> usize {
        let steps = (t - self.anchor).div_euclid(self.interval as i64);
        steps.rem_euclid(self.occupancy_motif.len() as i64) as usize
    }

    pub fn value_at(&self, t: Timestamp) -> f64 {
        self.occupancy_motif[self.phase_of(t)]
    }
}

fn resize_linear(values: &[f64], target: usize) -> Vec<f64> {
    let n = values.len();
    if n == 1 {
        return vec![values[0]; target];
    }
    (0..target)
        .map(|j| {
            let pos = j as f64 * (n - 1) as f64 / (target - 1).max(1) as f64;
            let i = (pos.floor() as usize).min(n - 2);
            let f = pos - i as f64;
            values[i] + f * (values[i + 1] - values[i])
        })
        .collect()
}

fn reduce_uniform(values: &[f64], target: usize) -> Vec<f64> {
    let n = values.len();
    (0..target).map(|j| values[j * n / target]).collect()
}

/// Brings the occupancy motif to the CO2 motif's length: linear
/// interpolation when shorter, uniform subsampling when longer.
pub fn align_motifs(
    motif_o: &SeasonalMotif,
    motif_c: &SeasonalMotif,
    anchor: Timestamp,
    interval: u32,
) -> Result<SeasonalMap> {
    if motif_o.is_empty() || motif_c.is_empty() {
        return Err(Error::Aperiodic);
    }
    let target = motif_c.len();
    let occupancy_motif = match motif_o.len().cmp(&target) {
        std::cmp::Ordering::Equal => motif_o.values.clone(),
        std::cmp::Ordering::Less => resize_linear(&motif_o.values, target),
        std::cmp::Ordering::Greater => reduce_uniform(&motif_o.values, target),
    };
    Ok(SeasonalMap {
        occupancy_motif,
        anchor,
        interval,
    })
}

/// Mean of each phase over the whole component, used when no repeated
/// pattern passes the similarity threshold.
pub fn phase_mean_motif(seasonal: &SampledSeries, period: usize) -> SeasonalMotif {
    let s = seasonal.values();
    let values = (0..period.min(s.len()))
        .map(|ph| {
            let xs: Vec<f64> = s.iter().skip(ph).step_by(period).copied().collect();
            xs.iter().sum::<f64>() / xs.len() as f64
        })
        .collect();
    SeasonalMotif {
        values,
        offset: 0,
        source_len: s.len(),
        similarity: 0.0,
    }
}
