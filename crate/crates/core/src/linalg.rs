//! Small dense least-squares solver (Householder QR with column scaling).

use crate::error::{Error, Result};

/// Relative threshold on the R diagonal below which a column is treated as
/// linearly dependent on the ones before it.
const RANK_TOL: f64 = 1e-11;

/// Solves `min ||A b - y||` where `A` is given column by column.
pub fn lstsq(columns: &[Vec<f64>], y: &[f64]) -> Result<Vec<f64>> {
    let p = columns.len();
    let n = y.len();
    if p == 0 {
        return Ok(Vec::new());
    }
    if n < p || columns.iter().any(|c| c.len() != n) {
        return Err(Error::Collinear);
    }

    let scale: Vec<f64> = columns
        .iter()
        .map(|c| c.iter().map(|v| v * v).sum::<f64>().sqrt())
        .collect();
    if scale.iter().any(|&s| s == 0.0 || !s.is_finite()) {
        return Err(Error::Collinear);
    }
    let mut a: Vec<Vec<f64>> = columns
        .iter()
        .zip(&scale)
        .map(|(c, s)| c.iter().map(|v| v / s).collect())
        .collect();
    let mut rhs = y.to_vec();

    let mut diag_max: f64 = 0.0;
    for k in 0..p {
        let norm = a[k][k..].iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(Error::Collinear);
        }
        let alpha = if a[k][k] > 0.0 { -norm } else { norm };
        let mut v: Vec<f64> = a[k][k..].to_vec();
        v[0] -= alpha;
        let vnorm2: f64 = v.iter().map(|x| x * x).sum();
        if vnorm2 > 0.0 {
            for col in a.iter_mut().skip(k) {
                let dot: f64 = v.iter().zip(&col[k..]).map(|(x, y)| x * y).sum();
                let f = 2.0 * dot / vnorm2;
                for (c, vi) in col[k..].iter_mut().zip(&v) {
                    *c -= f * vi;
                }
            }
            let dot: f64 = v.iter().zip(&rhs[k..]).map(|(x, y)| x * y).sum();
            let f = 2.0 * dot / vnorm2;
            for (r, vi) in rhs[k..].iter_mut().zip(&v) {
                *r -= f * vi;
            }
        }
        diag_max = diag_max.max(a[k][k].abs());
        if a[k][k].abs() <= RANK_TOL * diag_max {
            return Err(Error::Collinear);
        }
    }

    let mut b = vec![0.0; p];
    for k in (0..p).rev() {
        let mut acc = rhs[k];
        for j in k + 1..p {
            acc -= a[j][k] * b[j];
        }
        b[k] = acc / a[k][k];
    }
    Ok(b.iter().zip(&scale).map(|(x, s)| x / s).collect())
}
