//! Polynomial regression with AIC-driven backward term elimination, and
//! the correlation-gated trend mapping built on it.

use crate::error::{Error, Result};
use crate::linalg;
use crate::series::mean;

/// Lower bound substituted for a zero residual sum of squares.
pub const RSS_FLOOR: f64 = 1e-12;

/// Pearson product-moment correlation coefficient.
pub fn pearson_r(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(Error::InvalidParameter(format!(
            "pearson_r needs equal lengths >= 2, got {} and {}",
            x.len(),
            y.len()
        )));
    }
    let mx = mean(x);
    let my = mean(y);
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::ZeroVariance);
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// Akaike information criterion of a Gaussian least-squares fit:
/// `n ln(rss / n) + 2k`.
pub fn aic(rss: f64, n: usize, k: usize) -> Result<f64> {
    if k == 0 || n <= k {
        return Err(Error::InvalidParameter(format!(
            "aic needs n > k >= 1, got n = {n}, k = {k}"
        )));
    }
    if !(rss >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "rss must be >= 0, got {rss}"
        )));
    }
    let rss = rss.max(RSS_FLOOR);
    Ok(n as f64 * (rss / n as f64).ln() + 2.0 * k as f64)
}

/// `y = sum(coefficients[i] * x^i) + residual_offset`.
#[derive(Debug, Clone, PartialEq)]
pub struct PolyModel {
    /// One entry per power up to `degree`; eliminated terms hold 0.
    pub coefficients: Vec<f64>,
    /// Which powers survived elimination.
    pub active: Vec<bool>,
    pub residual_offset: f64,
    pub degree: usize,
    pub aic: f64,
}

impl PolyModel {
    pub fn predict(&self, x: f64) -> f64 {
        self.coefficients
            .iter()
            .rev()
            .fold(0.0, |acc, c| acc * x + c)
            + self.residual_offset
    }

    pub fn active_powers(&self) -> Vec<usize> {
        self.active
            .iter()
            .enumerate()
            .filter_map(|(i, &a)| a.then_some(i))
            .collect()
    }

    fn from_fit(powers: &[usize], coef: &[f64], offset: f64, aic: f64) -> Self {
        let degree = powers.iter().copied().max().unwrap_or(0);
        let mut coefficients = vec![0.0; degree + 1];
        let mut active = vec![false; degree + 1];
        for (&p, &c) in powers.iter().zip(coef) {
            coefficients[p] = c;
            active[p] = true;
        }
        Self {
            coefficients,
            active,
            residual_offset: offset,
            degree,
            aic,
        }
    }
}

pub(crate) struct SubsetFit {
    pub coef: Vec<f64>,
    pub rss: f64,
    pub mean_residual: f64,
}

/// Least-squares fit of `y` on the given powers of `x`.
pub(crate) fn fit_powers(x: &[f64], y: &[f64], powers: &[usize]) -> Result<SubsetFit> {
    let columns: Vec<Vec<f64>> = powers
        .iter()
        .map(|&p| x.iter().map(|v| v.powi(p as i32)).collect())
        .collect();
    let coef = linalg::lstsq(&columns, y)?;
    let residuals: Vec<f64> = x
        .iter()
        .zip(y)
        .map(|(xv, yv)| {
            let fit: f64 = powers
                .iter()
                .zip(&coef)
                .map(|(&p, c)| c * xv.powi(p as i32))
                .sum();
            yv - fit
        })
        .collect();
    Ok(SubsetFit {
        rss: residuals.iter().map(|r| r * r).sum(),
        mean_residual: mean(&residuals),
        coef,
    })
}

/// Full polynomial fit of `max_degree`, then repeated removal of the term
/// whose removal lowers AIC the most, while AIC keeps improving.
pub fn fit_poly_m5(x: &[f64], y: &[f64], max_degree: usize) -> Result<PolyModel> {
    if x.len() != y.len() {
        return Err(Error::InvalidParameter("x and y lengths differ".into()));
    }
    if x.len() < max_degree + 2 {
        return Err(Error::SeriesTooShort {
            needed: max_degree + 2,
            got: x.len(),
        });
    }
    let n = x.len();
    let mut powers: Vec<usize> = (0..=max_degree).collect();
    let mut best = fit_powers(x, y, &powers)?;
    let mut best_aic = aic(best.rss, n, powers.len())?;

    while powers.len() > 1 {
        let mut candidate: Option<(usize, SubsetFit, f64)> = None;
        for drop in 0..powers.len() {
            let reduced: Vec<usize> = powers
                .iter()
                .enumerate()
                .filter_map(|(i, &p)| (i != drop).then_some(p))
                .collect();
            let fit = fit_powers(x, y, &reduced)?;
            let a = aic(fit.rss, n, reduced.len())?;
            if candidate.as_ref().is_none_or(|c| a < c.2) {
                candidate = Some((drop, fit, a));
            }
        }
        match candidate {
            Some((drop, fit, a)) if a < best_aic => {
                powers.remove(drop);
                best = fit;
                best_aic = a;
            }
            _ => break,
        }
    }

    let offset = if powers.contains(&0) {
        0.0
    } else {
        best.mean_residual
    };
    Ok(PolyModel::from_fit(&powers, &best.coef, offset, best_aic))
}

/// Trend mapping plus the correlation that validated it.
#[derive(Debug, Clone, PartialEq)]
pub struct TrendModel {
    pub poly: PolyModel,
    pub pcc: f64,
    /// Set when the correlation gate failed and a plain linear fit was used.
    pub weakly_validated: bool,
}

impl TrendModel {
    /// Occupancy trend for a CO2 trend value (applied to its magnitude).
    pub fn predict(&self, co2_trend: f64) -> f64 {
        self.poly.predict(co2_trend.abs())
    }
}

/// Maps |CO2 trend| to |occupancy trend|. Correlation above the threshold
/// enables the AIC-pruned polynomial; otherwise a flagged linear fit.
pub fn correlate_trend(
    t_c: &[f64],
    t_o: &[f64],
    max_degree: usize,
    pcc_threshold: f64,
) -> Result<TrendModel> {
    let pcc = pearson_r(t_c, t_o)?;
    let xa: Vec<f64> = t_c.iter().map(|v| v.abs()).collect();
    let ya: Vec<f64> = t_o.iter().map(|v| v.abs()).collect();
    if pcc > pcc_threshold {
        Ok(TrendModel {
            poly: fit_poly_m5(&xa, &ya, max_degree)?,
            pcc,
            weakly_validated: false,
        })
    } else {
        log::warn!("trend correlation {pcc:.3} <= {pcc_threshold}; using a linear trend map");
        let fit = fit_powers(&xa, &ya, &[0, 1])?;
        let a = aic(fit.rss, xa.len(), 2)?;
        Ok(TrendModel {
            poly: PolyModel::from_fit(&[0, 1], &fit.coef, 0.0, a),
            pcc,
            weakly_validated: true,
        })
    }
}
