//! CO2-to-occupancy lag selection: sweep candidate lags, fit an ordinary
//! least-squares line of occupancy on CO2 at each, and keep the lag with the
//! smallest range-normalised RMSE.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::series::{mean, shift_and_trim, AlignedPair, SampledSeries};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RoomGeometry {
    pub length: f64,
    pub width: f64,
    pub height: f64,
}

impl RoomGeometry {
    pub fn new(length: f64, width: f64, height: f64) -> Result<Self> {
        let g = Self {
            length,
            width,
            height,
        };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("length", self.length),
            ("width", self.width),
            ("height", self.height),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidGeometry(format!(
                    "{name} must be > 0, got {v}"
                )));
            }
        }
        Ok(())
    }

    /// Volume in cubic metres.
    pub fn volume(&self) -> f64 {
        self.length * self.width * self.height
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LagFit {
    pub lag: usize,
    /// Persons per ppm.
    pub slope: f64,
    /// Persons.
    pub intercept: f64,
    pub nrmse: f64,
}

impl LagFit {
    pub fn predict(&self, co2: f64) -> f64 {
        self.slope * co2 + self.intercept
    }
}

/// Upper bound of the lag sweep in minutes: `floor(volume / 100)`.
pub fn upper_bound_lag(geom: &RoomGeometry) -> Result<usize> {
    geom.validate()?;
    let ub = (geom.volume() / 100.0).floor().max(0.0) as usize;
    if ub == 0 {
        log::info!("room volume {:.1} m3 gives a lag bound of 0, so no lag is searched", geom.volume());
    }
    Ok(ub)
}

/// Converts a bound in minutes to whole samples of `interval` seconds,
/// rounding down.
pub fn minutes_to_samples(minutes: usize, interval: u32) -> usize {
    let samples = (minutes as u64 * 60 / interval as u64) as usize;
    log::debug!("lag bound {minutes} min is {samples} samples of {interval} s");
    samples
}

/// Regresses occupancy on CO2 by ordinary least squares.
pub fn fit_line(pair: &AlignedPair) -> Result<LagFit> {
    let c = pair.co2.values();
    let o = pair.occupancy.values();
    if c.len() < 2 || c.len() != o.len() {
        return Err(Error::SeriesTooShort {
            needed: 2,
            got: c.len().min(o.len()),
        });
    }
    let c_mean = mean(c);
    let o_mean = mean(o);
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (ci, oi) in c.iter().zip(o) {
        let dc = ci - c_mean;
        sxy += dc * (oi - o_mean);
        sxx += dc * dc;
    }
    if sxx == 0.0 {
        return Err(Error::NoVariance);
    }
    let slope = sxy / sxx;
    let mut fit = LagFit {
        lag: pair.lag_applied,
        slope,
        intercept: o_mean - slope * c_mean,
        nrmse: 0.0,
    };
    // constant occupancy is fitted exactly by the flat line
    fit.nrmse = nrmse(&fit, pair).unwrap_or(0.0);
    Ok(fit)
}

/// Root-mean-square residual of the fitted line divided by the occupancy range.
pub fn nrmse(fit: &LagFit, pair: &AlignedPair) -> Result<f64> {
    let c = pair.co2.values();
    let o = pair.occupancy.values();
    let (lo, hi) = o
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });
    let range = hi - lo;
    if !(range > 0.0) {
        return Err(Error::ConstantOccupancy);
    }
    let mse = c
        .iter()
        .zip(o)
        .map(|(ci, oi)| (oi - fit.predict(*ci)).powi(2))
        .sum::<f64>()
        / c.len() as f64;
    Ok(mse.sqrt() / range)
}

#[derive(Debug, Clone, PartialEq)]
pub struct LagSweep {
    pub best_lag: usize,
    pub fits: Vec<LagFit>,
}

impl LagSweep {
    pub fn best(&self) -> &LagFit {
        &self.fits[self.best_lag]
    }
}

/// Fits every lag in `0..=ub` samples and returns the one with minimal
/// NRMSE. Ties go to the smaller lag.
pub fn select_lag(co2: &SampledSeries, occ: &SampledSeries, ub: usize) -> Result<LagSweep> {
    let needed = ub + 2;
    if co2.len() < needed || occ.len() < 2 {
        return Err(Error::SeriesTooShort {
            needed,
            got: co2.len().min(occ.len()),
        });
    }
    let fits = (0..=ub)
        .into_par_iter()
        .map(|lag| {
            let wrap = |e| Error::LagFit {
                lag,
                source: Box::new(e),
            };
            let pair = shift_and_trim(co2, occ, lag).map_err(wrap)?;
            let mut fit = fit_line(&pair).map_err(wrap)?;
            fit.nrmse = nrmse(&fit, &pair).map_err(wrap)?;
            Ok(fit)
        })
        .collect::<Result<Vec<_>>>()?;
    let best_lag =
        fits.iter().enumerate().fold(
            0,
            |best, (i, f)| if f.nrmse < fits[best].nrmse { i } else { best },
        );
    log::debug!(
        "lag sweep 0..={ub}: best lag {best_lag} (nrmse {:.4})",
        fits[best_lag].nrmse
    );
    Ok(LagSweep { best_lag, fits })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::series::Unit;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn pair(c: Vec<f64>, o: Vec<f64>) -> AlignedPair {
        AlignedPair {
            co2: SampledSeries::new(0, 60, c, Unit::Ppm).unwrap(),
            occupancy: SampledSeries::new(0, 60, o, Unit::Persons).unwrap(),
            lag_applied: 0,
        }
    }

    #[test]
    fn upper_bound_examples() {
        let cinema = RoomGeometry::new(25.0, 20.0, 12.0).unwrap();
        assert_eq!(upper_bound_lag(&cinema).unwrap(), 60);
        assert_eq!(
            upper_bound_lag(&RoomGeometry::new(10.0, 10.0, 10.0).unwrap()).unwrap(),
            10
        );
        assert_eq!(
            upper_bound_lag(&RoomGeometry::new(3.0, 4.0, 5.0).unwrap()).unwrap(),
            0
        );
        assert!(RoomGeometry::new(0.0, 1.0, 1.0).is_err());
        assert_eq!(minutes_to_samples(60, 180), 20);
        assert_eq!(minutes_to_samples(1, 300), 0);
    }

    #[test]
    fn fit_line_exact_relation() {
        let f = fit_line(&pair(
            vec![400.0, 500.0, 400.0, 500.0],
            vec![0.0, 1.0, 0.0, 1.0],
        ))
        .unwrap();
        assert!((f.slope - 0.01).abs() < 1e-15);
        assert!((f.intercept + 4.0).abs() < 1e-12);
        assert_eq!(f.nrmse, 0.0);
    }

    #[test]
    fn fit_line_flat_occupancy() {
        let f = fit_line(&pair(vec![400.0, 450.0, 520.0], vec![3.0; 3])).unwrap();
        assert_eq!(f.slope, 0.0);
        assert_eq!(f.intercept, 3.0);
    }

    #[test]
    fn fit_line_no_variance() {
        assert!(matches!(
            fit_line(&pair(vec![400.0; 4], vec![0.0, 1.0, 2.0, 1.0])),
            Err(Error::NoVariance)
        ));
    }

    #[test]
    fn fit_line_matches_normal_equations() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let c: Vec<f64> = (0..50).map(|_| rng.random_range(380.0..1200.0)).collect();
        let o: Vec<f64> = (0..50).map(|_| rng.random_range(0.0..6.0)).collect();
        let f = fit_line(&pair(c.clone(), o.clone())).unwrap();
        // [n  Σc; Σc Σc²] [b; m] = [Σo; Σco]
        let n = c.len() as f64;
        let sc: f64 = c.iter().sum();
        let scc: f64 = c.iter().map(|x| x * x).sum();
        let so: f64 = o.iter().sum();
        let sco: f64 = c.iter().zip(&o).map(|(x, y)| x * y).sum();
        let det = n * scc - sc * sc;
        let m = (n * sco - sc * so) / det;
        let b = (scc * so - sc * sco) / det;
        assert!((f.slope - m).abs() < 1e-10);
        assert!((f.intercept - b).abs() < 1e-10);
    }

    #[test]
    fn nrmse_examples() {
        let p = pair(vec![400.0, 500.0, 600.0], vec![0.0, 2.0, 4.0]);
        let exact = fit_line(&p).unwrap();
        assert_eq!(nrmse(&exact, &p).unwrap(), 0.0);
        let shifted = LagFit {
            intercept: exact.intercept + 1.0,
            ..exact
        };
        assert!((nrmse(&shifted, &p).unwrap() - 0.25).abs() < 1e-12);
        let flat = pair(vec![400.0, 500.0], vec![1.0, 1.0]);
        assert!(matches!(
            nrmse(&exact, &flat),
            Err(Error::ConstantOccupancy)
        ));
    }

    #[test]
    fn nrmse_matches_direct_formula() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let c: Vec<f64> = (0..80).map(|_| rng.random_range(380.0..900.0)).collect();
        let o: Vec<f64> = (0..80).map(|_| rng.random_range(0..5) as f64).collect();
        let p = pair(c.clone(), o.clone());
        let f = LagFit {
            lag: 0,
            slope: 0.007,
            intercept: -2.5,
            nrmse: 0.0,
        };
        let range =
            o.iter().cloned().fold(f64::MIN, f64::max) - o.iter().cloned().fold(f64::MAX, f64::min);
        let mut acc = 0.0;
        for i in 0..80 {
            let r = o[i] - (0.007 * c[i] - 2.5);
            acc += r * r;
        }
        let direct = (acc / 80.0).sqrt() / range;
        assert!((nrmse(&f, &p).unwrap() - direct).abs() < 1e-12);
    }

    fn blocky_occupancy(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
        let mut out = Vec::with_capacity(n);
        while out.len() < n {
            let level = rng.random_range(0..6) as f64;
            let run = rng.random_range(3..15);
            out.extend(std::iter::repeat_n(level, run));
        }
        out.truncate(n);
        out
    }

    fn shifted_co2(occ: &[f64], k: usize) -> Vec<f64> {
        (0..occ.len())
            .map(|t| {
                if t >= k {
                    100.0 * occ[t - k] + 400.0
                } else {
                    400.0
                }
            })
            .collect()
    }

    #[test]
    fn select_lag_recovers_injected_shift() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let occ = blocky_occupancy(&mut rng, 300);
        let co2 = shifted_co2(&occ, 5);
        let c = SampledSeries::new(0, 60, co2, Unit::Ppm).unwrap();
        let o = SampledSeries::new(0, 60, occ, Unit::Persons).unwrap();
        let sweep = select_lag(&c, &o, 10).unwrap();
        assert_eq!(sweep.best_lag, 5);
        assert_eq!(sweep.fits.len(), 11);
        assert!(sweep.fits.iter().all(|f| f.nrmse >= sweep.best().nrmse));
    }

    #[test]
    fn select_lag_zero_bound_and_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let occ = blocky_occupancy(&mut rng, 100);
        let co2 = shifted_co2(&occ, 0);
        let c = SampledSeries::new(0, 60, co2, Unit::Ppm).unwrap();
        let o = SampledSeries::new(0, 60, occ, Unit::Persons).unwrap();
        assert_eq!(select_lag(&c, &o, 0).unwrap().best_lag, 0);
        let sweep = select_lag(&c, &o, 8).unwrap();
        assert_eq!(sweep.best_lag, 0);
        assert!(sweep.best().nrmse < 1e-12);
    }

    #[test]
    fn select_lag_reports_failing_lag() {
        let c = SampledSeries::new(0, 60, vec![400.0, 500.0, 600.0, 700.0], Unit::Ppm).unwrap();
        let o = SampledSeries::new(0, 60, vec![0.0; 4], Unit::Persons).unwrap();
        assert!(matches!(
            select_lag(&c, &o, 1),
            Err(Error::LagFit { lag: 0, .. })
        ));
        assert!(matches!(
            select_lag(&c, &o, 3),
            Err(Error::SeriesTooShort { .. })
        ));
    }

    #[test]
    fn noisy_lag_recovery_rate() {
        let mut hits = 0;
        for seed in 0..100 {
            let mut rng = ChaCha8Rng::seed_from_u64(1000 + seed);
            let occ = blocky_occupancy(&mut rng, 400);
            let mut co2 = shifted_co2(&occ, 7);
            let amplitude = 500.0;
            for v in &mut co2 {
                let z: f64 =
                    rand_distr::Distribution::sample(&rand_distr::StandardNormal, &mut rng);
                *v += 0.05 * amplitude * z;
            }
            let c = SampledSeries::new(0, 60, co2, Unit::Ppm).unwrap();
            let o = SampledSeries::new(0, 60, occ, Unit::Persons).unwrap();
            let tl = select_lag(&c, &o, 15).unwrap().best_lag;
            if tl.abs_diff(7) <= 1 {
                hits += 1;
            }
        }
        assert!(hits >= 95, "recovered {hits}/100");
    }

    proptest! {
        #[test]
        fn nrmse_invariant_under_co2_offset(
            seed in 0u64..1000,
            offset in -300.0f64..300.0,
        ) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let c: Vec<f64> = (0..40).map(|_| rng.random_range(400.0..900.0)).collect();
            let o: Vec<f64> = (0..40).map(|i| (i % 5) as f64 + rng.random_range(0.0..1.0)).collect();
            let a = pair(c.clone(), o.clone());
            let b = pair(c.iter().map(|v| v + offset + 400.0).collect(), o);
            let fa = fit_line(&a).unwrap();
            let fb = fit_line(&b).unwrap();
            prop_assert!((fa.nrmse - fb.nrmse).abs() < 1e-9);
        }
    }
}
