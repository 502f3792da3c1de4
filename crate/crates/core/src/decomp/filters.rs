//! Symmetric linear filters: composite moving averages and Henderson
//! trend filters.
//!
//! Near the ends, where the full window does not fit, filters shrink
//! symmetrically to the largest half-width available and renormalise, so
//! the output always has the input's length. Period-length trend filters
//! and seasonal subseries filters are the exceptions (see [`period_filter`]
//! and [`truncated_filter`]).

use crate::error::{Error, Result};
use crate::linalg;
use crate::series::SampledSeries;

pub const HENDERSON_TERMS: [usize; 4] = [5, 9, 13, 23];

/// Weights of an `m x n` composite moving average (an n-term simple MA
/// followed by an m-term simple MA).
pub fn composite_ma_weights(m: usize, n: usize) -> Result<Vec<f64>> {
    if m == 0 || n == 0 {
        return Err(Error::InvalidParameter(
            "moving average order must be >= 1".into(),
        ));
    }
    let len = m + n - 1;
    if len.is_multiple_of(2) {
        return Err(Error::InvalidParameter(format!(
            "{m}x{n} moving average has even length {len} and cannot be centred"
        )));
    }
    let mut w = vec![0.0; len];
    for i in 0..m {
        for j in 0..n {
            w[i + j] += 1.0 / (m * n) as f64;
        }
    }
    Ok(w)
}

/// Centred `m x n` moving average of a series.
pub fn moving_average(series: &SampledSeries, m: usize, n: usize) -> Result<SampledSeries> {
    let needed = m + n + 1;
    if series.len() < needed {
        return Err(Error::SeriesTooShort {
            needed,
            got: series.len(),
        });
    }
    let w = composite_ma_weights(m, n)?;
    Ok(series.with_values(symmetric_filter(series.values(), &w)))
}

/// Applies a symmetric kernel of odd length. At position `i` the half-width
/// is `min(H, i, len - 1 - i)`; the kernel is truncated to it and
/// renormalised.
pub(crate) fn symmetric_filter(values: &[f64], kernel: &[f64]) -> Vec<f64> {
    debug_assert!(kernel.len() % 2 == 1);
    let half = kernel.len() / 2;
    let n = values.len();
    (0..n)
        .map(|i| {
            let h = half.min(i).min(n - 1 - i);
            let k = &kernel[half - h..=half + h];
            let norm: f64 = k.iter().sum();
            let acc: f64 = k
                .iter()
                .zip(&values[i - h..=i + h])
                .map(|(w, v)| w * v)
                .sum();
            acc / norm
        })
        .collect()
}

/// Applies a symmetric kernel, dropping the taps that fall outside the
/// series and renormalising the rest. Used on seasonal subseries, where a
/// one-sided average of neighbouring cycles beats no smoothing at all.
pub(crate) fn truncated_filter(values: &[f64], kernel: &[f64]) -> Vec<f64> {
    let half = (kernel.len() / 2) as isize;
    let n = values.len() as isize;
    (0..n)
        .map(|i| {
            let (mut acc, mut norm) = (0.0, 0.0);
            for j in -half..=half {
                let k = i + j;
                if (0..n).contains(&k) {
                    let w = kernel[(j + half) as usize];
                    acc += w * values[k as usize];
                    norm += w;
                }
            }
            acc / norm
        })
        .collect()
}

/// Applies a symmetric kernel that spans a whole seasonal period. Where the
/// full window does not fit, the output continues the least-squares line
/// through the first (last) `period` full-window values, since a shorter
/// window would no longer cancel the seasonal pattern.
pub(crate) fn period_filter(values: &[f64], kernel: &[f64], period: usize) -> Vec<f64> {
    let n = values.len();
    let half = kernel.len() / 2;
    if n < kernel.len() {
        return symmetric_filter(values, kernel);
    }
    let mut out = vec![0.0; n];
    for i in half..n - half {
        out[i] = kernel
            .iter()
            .zip(&values[i - half..=i + half])
            .map(|(w, v)| w * v)
            .sum();
    }
    let (first, last) = (half, n - half - 1);
    let span = period.max(2).min(last - first + 1);
    let left = line_through(&out[first..first + span]);
    let right = line_through(&out[last + 1 - span..=last]);
    for i in 0..first {
        out[i] = left.0 + left.1 * (i as f64 - first as f64);
    }
    for i in last + 1..n {
        out[i] = right.0 + right.1 * (i as f64 - (last + 1 - span) as f64);
    }
    out
}

/// Least-squares line through `ys` at abscissae 0.., as (intercept, slope).
fn line_through(ys: &[f64]) -> (f64, f64) {
    let m = ys.len() as f64;
    if ys.len() < 2 {
        return (ys[0], 0.0);
    }
    let xm = (m - 1.0) / 2.0;
    let ym = ys.iter().sum::<f64>() / m;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (i, y) in ys.iter().enumerate() {
        let dx = i as f64 - xm;
        sxy += dx * (y - ym);
        sxx += dx * dx;
    }
    let slope = sxy / sxx;
    (ym - slope * xm, slope)
}

/// Henderson weights of the given odd length, obtained as the minimiser of
/// the summed squared third differences of the (zero-padded) weight sequence
/// subject to reproducing polynomials up to degree 3.
pub fn henderson_weights(terms: usize) -> Result<Vec<f64>> {
    if terms.is_multiple_of(2) || terms == 0 {
        return Err(Error::InvalidParameter(format!(
            "Henderson length must be odd, got {terms}"
        )));
    }
    let p = terms / 2;
    if p <= 1 {
        // one or three points with zero first and second moments: identity
        let mut w = vec![0.0; terms];
        w[p] = 1.0;
        return Ok(w);
    }
    // third-difference operator over the weights padded with three zeros per side
    let padded = terms + 6;
    let rows = padded - 3;
    let mut d = vec![vec![0.0; terms]; rows];
    let coef = [-1.0, 3.0, -3.0, 1.0];
    for (r, row) in d.iter_mut().enumerate() {
        for (k, c) in coef.iter().enumerate() {
            let idx = r + k;
            if (3..3 + terms).contains(&idx) {
                row[idx - 3] = *c;
            }
        }
    }
    // KKT system [2 DᵀD Aᵀ; A 0] [w; λ] = [0; b] with A = moment rows 1, j, j²
    let n_con = 3;
    let size = terms + n_con;
    let mut kkt = vec![vec![0.0; size]; size];
    for (i, krow) in kkt.iter_mut().enumerate().take(terms) {
        for (j, kv) in krow.iter_mut().enumerate().take(terms) {
            *kv = 2.0 * d.iter().map(|row| row[i] * row[j]).sum::<f64>();
        }
    }
    for j in 0..terms {
        let x = j as f64 - p as f64;
        for (c, pow) in [1.0, x, x * x].into_iter().enumerate() {
            kkt[terms + c][j] = pow;
            kkt[j][terms + c] = pow;
        }
    }
    let mut rhs = vec![0.0; size];
    rhs[terms] = 1.0;
    let columns: Vec<Vec<f64>> = (0..size)
        .map(|c| kkt.iter().map(|row| row[c]).collect())
        .collect();
    let sol = linalg::lstsq(&columns, &rhs)?;
    Ok(sol[..terms].to_vec())
}

fn check_henderson_terms(terms: usize) -> Result<()> {
    if HENDERSON_TERMS.contains(&terms) {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "unsupported Henderson length {terms}; expected one of {HENDERSON_TERMS:?}"
        )))
    }
}

/// Henderson-weighted moving average. Endpoints use shorter symmetric
/// Henderson filters, which keep the cubic-reproducing property.
pub fn henderson(series: &SampledSeries, terms: usize) -> Result<SampledSeries> {
    check_henderson_terms(terms)?;
    if series.len() <= terms {
        return Err(Error::SeriesTooShort {
            needed: terms + 1,
            got: series.len(),
        });
    }
    Ok(series.with_values(henderson_filter(series.values(), terms)?))
}

pub(crate) fn henderson_filter(values: &[f64], terms: usize) -> Result<Vec<f64>> {
    let half = terms / 2;
    let kernels: Vec<Vec<f64>> = (0..=half)
        .map(|h| henderson_weights(2 * h + 1))
        .collect::<Result<_>>()?;
    let n = values.len();
    Ok((0..n)
        .map(|i| {
            let h = half.min(i).min(n - 1 - i);
            kernels[h]
                .iter()
                .zip(&values[i - h..=i + h])
                .map(|(w, v)| w * v)
                .sum()
        })
        .collect())
}
