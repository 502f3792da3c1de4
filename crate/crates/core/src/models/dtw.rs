//! Dynamic time warping with absolute-difference local cost and the
//! symmetric unit step pattern.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DtwAlignment {
    pub cost: f64,
    /// Number of cells on the optimal path; among equal-cost paths the
    /// shortest one is reported.
    pub path_length: usize,
}

pub fn dtw(a: &[f64], b: &[f64]) -> Result<DtwAlignment> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptySeries);
    }
    let m = b.len();
    // two rolling rows of (cost, path length)
    let mut prev = vec![(f64::INFINITY, 0usize); m];
    let mut cur = vec![(f64::INFINITY, 0usize); m];
    for (i, &ai) in a.iter().enumerate() {
        for (j, &bj) in b.iter().enumerate() {
            let local = (ai - bj).abs();
            let best = if i == 0 && j == 0 {
                (0.0, 0)
            } else {
                let mut best = (f64::INFINITY, usize::MAX);
                if i > 0 {
                    best = better(best, prev[j]);
                }
                if j > 0 {
                    best = better(best, cur[j - 1]);
                }
                if i > 0 && j > 0 {
                    best = better(best, prev[j - 1]);
                }
                best
            };
            cur[j] = (best.0 + local, best.1 + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    let (cost, path_length) = prev[m - 1];
    Ok(DtwAlignment { cost, path_length })
}

fn better(a: (f64, usize), b: (f64, usize)) -> (f64, usize) {
    if b.0 < a.0 || (b.0 == a.0 && b.1 < a.1) {
        b
    } else {
        a
    }
}

/// Shape similarity in percent: `100 (1 - cost / (path_length * range))`,
/// with `range` the max - min over both sequences, clamped to [0, 100].
pub fn dtw_similarity(a: &[f64], b: &[f64]) -> Result<f64> {
    let al = dtw(a, b)?;
    let (lo, hi) = a
        .iter()
        .chain(b)
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });
    let range = hi - lo;
    if range == 0.0 {
        return Ok(100.0);
    }
    Ok((100.0 * (1.0 - al.cost / (al.path_length as f64 * range))).clamp(0.0, 100.0))
}
