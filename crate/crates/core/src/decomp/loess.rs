//! Locally weighted polynomial regression with tricube neighbourhood weights.

use crate::error::{Error, Result};

/// Neighbourhood of `x0` among strictly increasing `xs`: index range of the
/// `span` nearest points and the bandwidth `h`. When `span` exceeds the
/// number of points the bandwidth is widened by `(span - n) / 2`.
fn neighbourhood(xs: &[f64], x0: f64, span: usize, hint: usize) -> (usize, usize, f64) {
    let n = xs.len();
    if span >= n {
        let h = (x0 - xs[0]).max(xs[n - 1] - x0) + (span - n) as f64 / 2.0;
        return (0, n, h);
    }
    // slide a window of `span` points so that it is as centred on x0 as possible
    let mut lo = hint.min(n - span);
    while lo > 0 && x0 - xs[lo - 1] < xs[lo + span - 1] - x0 {
        lo -= 1;
    }
    while lo + span < n && xs[lo + span] - x0 < x0 - xs[lo] {
        lo += 1;
    }
    let h = (x0 - xs[lo]).max(xs[lo + span - 1] - x0);
    (lo, lo + span, h)
}

fn tricube(u: f64) -> f64 {
    if u >= 1.0 {
        0.0
    } else {
        let t = 1.0 - u * u * u;
        t * t * t
    }
}

/// Weighted polynomial fit at `x0` on points `xs[lo..hi]`; `None` when the
/// weighted design cannot determine a polynomial of this degree.
fn local_fit(xs: &[f64], ys: &[f64], weights: &[f64], x0: f64, degree: usize) -> Option<f64> {
    let total: f64 = weights.iter().sum();
    if !(total > 0.0) {
        return None;
    }
    // moments about x0 scaled by the neighbourhood radius for conditioning
    let radius = xs
        .iter()
        .map(|x| (x - x0).abs())
        .fold(0.0_f64, f64::max)
        .max(f64::MIN_POSITIVE);
    let dim = degree + 1;
    let mut ata = [[0.0; 3]; 3];
    let mut atb = [0.0; 3];
    for ((x, y), w) in xs.iter().zip(ys).zip(weights) {
        if *w == 0.0 {
            continue;
        }
        let u = (x - x0) / radius;
        let pows = [1.0, u, u * u];
        for i in 0..dim {
            atb[i] += w * pows[i] * y;
            for j in 0..dim {
                ata[i][j] += w * pows[i] * pows[j];
            }
        }
    }
    solve_small(&mut ata, &mut atb, dim).map(|b| b[0])
}

/// Gaussian elimination with partial pivoting on a system of size <= 3.
fn solve_small(a: &mut [[f64; 3]; 3], b: &mut [f64; 3], dim: usize) -> Option<[f64; 3]> {
    let scale = (0..dim).map(|i| a[i][i].abs()).fold(0.0_f64, f64::max);
    for col in 0..dim {
        let piv = (col..dim).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() <= 1e-10 * scale {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for r in col + 1..dim {
            let f = a[r][col] / a[col][col];
            for c in col..dim {
                a[r][c] -= f * a[col][c];
            }
            b[r] -= f * b[col];
        }
    }
    let mut x = [0.0; 3];
    for r in (0..dim).rev() {
        let mut acc = b[r];
        for c in r + 1..dim {
            acc -= a[r][c] * x[c];
        }
        x[r] = acc / a[r][r];
    }
    Some(x)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Degeneracy {
    Error,
    /// Retry with lower degrees down to a weighted mean, then with doubled
    /// neighbourhoods; the nearest observation is kept only when no point
    /// of the whole series carries weight.
    LowerDegree,
}

fn validate(xs: &[f64], ys: &[f64], span: usize, degree: usize) -> Result<()> {
    if xs.len() != ys.len() || xs.is_empty() {
        return Err(Error::InvalidParameter(
            "loess needs equal-length non-empty inputs".into(),
        ));
    }
    if degree > 2 {
        return Err(Error::InvalidParameter(format!(
            "loess degree must be 0, 1 or 2, got {degree}"
        )));
    }
    if span < degree + 2 {
        return Err(Error::InvalidParameter(format!(
            "loess span {span} too small for degree {degree}"
        )));
    }
    if xs.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidParameter(
            "loess abscissae must be strictly increasing".into(),
        ));
    }
    Ok(())
}

/// Evaluates the loess smooth at arbitrary points `at` (which may lie
/// outside the data range).
pub(crate) fn loess_eval(
    xs: &[f64],
    ys: &[f64],
    at: &[f64],
    span: usize,
    degree: usize,
    robustness: Option<&[f64]>,
    on_degenerate: Degeneracy,
) -> Result<Vec<f64>> {
    validate(xs, ys, span, degree)?;
    if let Some(r) = robustness {
        if r.len() != xs.len() {
            return Err(Error::InvalidParameter(
                "robustness weights must match the data length".into(),
            ));
        }
    }
    let mut hint = 0;
    let mut w = Vec::with_capacity(span.min(xs.len()));
    at.iter()
        .map(|&x0| {
            let mut q = span;
            loop {
                let (lo, hi, h) = neighbourhood(xs, x0, q, hint);
                if q == span {
                    hint = lo;
                }
                w.clear();
                w.extend(xs[lo..hi].iter().enumerate().map(|(k, x)| {
                    let base = if h > 0.0 {
                        tricube((x - x0).abs() / h)
                    } else {
                        1.0
                    };
                    base * robustness.map_or(1.0, |r| r[lo + k])
                }));
                for deg in (0..=degree).rev() {
                    if let Some(v) = local_fit(&xs[lo..hi], &ys[lo..hi], &w, x0, deg) {
                        return Ok(v);
                    }
                    if on_degenerate == Degeneracy::Error {
                        return Err(Error::DegenerateNeighborhood(x0));
                    }
                }
                if q > xs.len() {
                    // no point carries weight anywhere: keep the nearest observation
                    let k = xs.partition_point(|x| *x < x0).min(xs.len() - 1);
                    let k = if k > 0 && (x0 - xs[k - 1]).abs() <= (xs[k] - x0).abs() {
                        k - 1
                    } else {
                        k
                    };
                    return Ok(ys[k]);
                }
                q = (2 * q).min(xs.len() + 2);
            }
        })
        .collect()
}

/// Loess fitted values at each `xs`.
pub fn loess(
    xs: &[f64],
    ys: &[f64],
    span: usize,
    degree: usize,
    robustness: Option<&[f64]>,
) -> Result<Vec<f64>> {
    loess_eval(xs, ys, xs, span, degree, robustness, Degeneracy::Error)
}
