//! Acceptance criteria. Each criterion prints one PASS or FAIL line with
//! the measured values; the process exits non-zero if any criterion fails.

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use cdhoc::decomp::{decompose_std_with, decompose_stl, ComponentSet, StdParams, StlParams};
use cdhoc::harness::{
    accuracy_with_tolerance, common_samples, incremental_splits, run_benchmark, EvalConfig,
    EvalMethod,
};
use cdhoc::lag::{fit_line, select_lag};
use cdhoc::models::{dtw, fit_poly_m5, local_time_of_day, RSS_FLOOR};
use cdhoc::predictor::{predict, train, LagPolicy, TrainConfig};
use cdhoc::series::{AlignedPair, SampledSeries, Unit};
use cdhoc::sim::{
    exhalation_rate, preset, simulate, OccupantProfile, RoomModel, Schedule, SimConfig,
};

const RECONSTRUCTION_REL_TOL: f64 = 1e-9;
const RECONSTRUCTION_BUDGET: Duration = Duration::from_secs(10);
const SEASONAL_RMSE_FRACTION: f64 = 0.05;
const TREND_SLOPE_REL_TOL: f64 = 0.05;
const SPIKE_DEVIATION_RATIO: f64 = 3.0;
const LAG_NOISY_MIN_HITS: usize = 95;
const REGRESSION_REL_TOL: f64 = 1e-10;
const OFFICE_TOL1_MIN: f64 = 95.0;
const OFFICE_TOL0_MIN: f64 = 85.0;
const OFFICE_BUDGET_PER_SEED: Duration = Duration::from_secs(60);
const CINEMA_BUDGET: Duration = Duration::from_secs(300);
const STEADY_STATE_REL_TOL: f64 = 1e-3;
const TIME_CONSTANT_REL_TOL: f64 = 0.02;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict {
        pass,
        detail: detail.into(),
    }
}

fn series(values: Vec<f64>) -> SampledSeries {
    SampledSeries::new(0, 300, values, Unit::Ppm).unwrap()
}

fn both(s: &SampledSeries, period: usize, outer: usize) -> (ComponentSet, ComponentSet) {
    let std = decompose_std_with(s, &StdParams::new(period)).unwrap();
    let stl = decompose_stl(s, &StlParams::new(period).with_outer_iterations(outer)).unwrap();
    (std, stl)
}

fn reconstruction_exactness() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let noise = Normal::new(0.0, 5.0).unwrap();
    let started = Instant::now();
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let n = rng.random_range(300..=3000);
        let p = rng.random_range(12..=288.min(n / 3));
        let amp = rng.random_range(1.0..50.0);
        let mut level = 500.0;
        let values: Vec<f64> = (0..n)
            .map(|i| {
                level += rng.random_range(-1.0..1.0);
                level + amp * (2.0 * PI * i as f64 / p as f64).sin() + noise.sample(&mut rng)
            })
            .collect();
        let s = series(values);
        let (std, stl) = both(&s, p, 1);
        for c in [std, stl] {
            for ((t, v), r) in s.values().iter().enumerate().zip(c.reconstruct()) {
                worst = worst.max((r - v).abs() / v.abs().max(1.0));
                let _ = t;
            }
        }
    }
    let elapsed = started.elapsed();
    verdict(
        worst <= RECONSTRUCTION_REL_TOL && elapsed < RECONSTRUCTION_BUDGET,
        format!(
            "max relative error {worst:.2e}, 200 decompositions in {:.2} s",
            elapsed.as_secs_f64()
        ),
    )
}

struct Synthetic {
    values: Vec<f64>,
    seasonal: Vec<f64>,
    trend: Vec<f64>,
    amplitude: f64,
    slope: f64,
}

fn sine_ramp(seed: u64, period: usize, cycles: usize) -> Synthetic {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let amplitude = 10.0;
    let slope = 0.02;
    let noise = Normal::new(0.0, 0.1 * amplitude).unwrap();
    let n = period * cycles;
    let seasonal: Vec<f64> = (0..n)
        .map(|i| amplitude * (2.0 * PI * i as f64 / period as f64).sin())
        .collect();
    let trend: Vec<f64> = (0..n).map(|i| 100.0 + slope * i as f64).collect();
    let values = (0..n)
        .map(|i| trend[i] + seasonal[i] + noise.sample(&mut rng))
        .collect();
    Synthetic {
        values,
        seasonal,
        trend,
        amplitude,
        slope,
    }
}

fn rmse(a: &[f64], b: &[f64]) -> f64 {
    (a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>() / a.len() as f64).sqrt()
}

fn ls_slope(y: &[f64]) -> f64 {
    let n = y.len() as f64;
    let xm = (n - 1.0) / 2.0;
    let ym = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (i, v) in y.iter().enumerate() {
        sxy += (i as f64 - xm) * (v - ym);
        sxx += (i as f64 - xm).powi(2);
    }
    sxy / sxx
}

fn decomposition_fidelity() -> Verdict {
    let mut pass = true;
    let mut notes = Vec::new();
    for (seed, period) in [(2, 24), (3, 48), (4, 96)] {
        let syn = sine_ramp(seed, period, 16);
        let (std, stl) = both(&series(syn.values.clone()), period, 1);
        for (name, c) in [("STD", std), ("STL", stl)] {
            let seasonal_rmse = rmse(c.seasonal.values(), &syn.seasonal) / syn.amplitude;
            let interior = period..syn.values.len() - period;
            let inner_rmse = rmse(
                &c.seasonal.values()[interior.clone()],
                &syn.seasonal[interior.clone()],
            ) / syn.amplitude;
            let slope = ls_slope(&c.trend.values()[interior]);
            let slope_err = (slope - syn.slope).abs() / syn.slope;
            pass &= seasonal_rmse <= SEASONAL_RMSE_FRACTION && slope_err <= TREND_SLOPE_REL_TOL;
            notes.push(format!(
                "{name} p={period}: seasonal {:.1}% (interior {:.1}%), slope {:.1}%",
                100.0 * seasonal_rmse,
                100.0 * inner_rmse,
                100.0 * slope_err
            ));
        }
    }
    verdict(pass, notes.join("; "))
}

fn mean_abs_at(a: &[f64], b: &[f64], at: &[usize]) -> f64 {
    at.iter().map(|&i| (a[i] - b[i]).abs()).sum::<f64>() / at.len() as f64
}

fn stl_robustness() -> Verdict {
    let period = 24;
    let syn = sine_ramp(5, period, 20);
    let n = syn.values.len();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut spikes: Vec<usize> = Vec::new();
    while spikes.len() < n / 100 {
        let i = rng.random_range(period..n - period);
        if !spikes.contains(&i) {
            spikes.push(i);
        }
    }
    let mut spiky = syn.values.clone();
    for &i in &spikes {
        spiky[i] = syn.trend[i] + 10.0 * syn.amplitude;
    }
    let (std_clean, stl_clean) = both(&series(syn.values.clone()), period, 2);
    let (std_spiky, stl_spiky) = both(&series(spiky), period, 2);
    let ratio = |clean: &ComponentSet, dirty: &ComponentSet| {
        mean_abs_at(dirty.trend.values(), &syn.trend, &spikes)
            / mean_abs_at(clean.trend.values(), &syn.trend, &spikes)
    };
    let stl = ratio(&stl_clean, &stl_spiky);
    let std = ratio(&std_clean, &std_spiky);
    verdict(
        stl < SPIKE_DEVIATION_RATIO && std >= SPIKE_DEVIATION_RATIO,
        format!("trend deviation ratio at spikes: STL {stl:.2} (< 3 required), STD {std:.2} (>= 3 expected)"),
    )
}

/// Random occupancy runs and CO2 that echoes them `lag` samples later.
fn lagged_pair(
    rng: &mut ChaCha8Rng,
    lag: usize,
    noise_fraction: f64,
) -> (SampledSeries, SampledSeries) {
    let n = 1500;
    let mut occ = Vec::with_capacity(n);
    while occ.len() < n {
        let count = rng.random_range(0..=10) as f64;
        let run = rng.random_range(5..40);
        occ.extend(std::iter::repeat_n(count, run));
    }
    occ.truncate(n);
    let clean: Vec<f64> = (0..n)
        .map(|t| 420.0 + 25.0 * if t >= lag { occ[t - lag] } else { 0.0 })
        .collect();
    let (lo, hi) = clean
        .iter()
        .fold((f64::MAX, f64::MIN), |(l, h), v| (l.min(*v), h.max(*v)));
    let noise = Normal::new(0.0, noise_fraction * (hi - lo)).unwrap();
    let co2 = clean
        .iter()
        .map(|v| {
            if noise_fraction > 0.0 {
                v + noise.sample(rng)
            } else {
                *v
            }
        })
        .collect();
    (
        SampledSeries::new(0, 60, co2, Unit::Ppm).unwrap(),
        SampledSeries::new(0, 60, occ, Unit::Persons).unwrap(),
    )
}

fn lag_recovery() -> Verdict {
    let lags = [0, 5, 17, 32, 60];
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut exact = Vec::new();
    for &k in &lags {
        let (co2, occ) = lagged_pair(&mut rng, k, 0.0);
        exact.push(select_lag(&co2, &occ, 64).unwrap().best_lag);
    }
    let mut hits = 0;
    for trial in 0..100u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + trial);
        let k = lags[trial as usize % lags.len()];
        let (co2, occ) = lagged_pair(&mut rng, k, 0.05);
        let found = select_lag(&co2, &occ, 64).unwrap().best_lag;
        if found.abs_diff(k) <= 1 {
            hits += 1;
        }
    }
    verdict(
        exact == lags && hits >= LAG_NOISY_MIN_HITS,
        format!("noiseless {exact:?} for {lags:?}; noisy within 1 in {hits}/100"),
    )
}

fn brute_dtw(a: &[f64], b: &[f64]) -> f64 {
    let (n, m) = (a.len(), b.len());
    let mut d = vec![vec![f64::INFINITY; m + 1]; n + 1];
    d[0][0] = 0.0;
    for i in 1..=n {
        for j in 1..=m {
            let best = d[i - 1][j].min(d[i][j - 1]).min(d[i - 1][j - 1]);
            d[i][j] = best + (a[i - 1] - b[j - 1]).abs();
        }
    }
    d[n][m]
}

fn dtw_oracle() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut mismatches = 0;
    for _ in 0..1000 {
        let a: Vec<f64> = (0..rng.random_range(1..=32))
            .map(|_| rng.random_range(-50.0..50.0))
            .collect();
        let b: Vec<f64> = (0..rng.random_range(1..=32))
            .map(|_| rng.random_range(-50.0..50.0))
            .collect();
        if dtw(&a, &b).unwrap().cost != brute_dtw(&a, &b) {
            mismatches += 1;
        }
    }
    verdict(
        mismatches == 0,
        format!("{mismatches} of 1000 costs differ from the brute-force table"),
    )
}

/// Gaussian elimination with partial pivoting on the normal equations.
fn normal_equations(x: &[f64], y: &[f64], powers: &[usize]) -> (Vec<f64>, f64) {
    let k = powers.len();
    let col = |p: usize, v: f64| v.powi(p as i32);
    let mut a = vec![vec![0.0; k + 1]; k];
    for r in 0..k {
        for c in 0..k {
            a[r][c] = x
                .iter()
                .map(|v| col(powers[r], *v) * col(powers[c], *v))
                .sum();
        }
        a[r][k] = x.iter().zip(y).map(|(v, w)| col(powers[r], *v) * w).sum();
    }
    for i in 0..k {
        let pivot = (i..k)
            .max_by(|p, q| a[*p][i].abs().total_cmp(&a[*q][i].abs()))
            .unwrap();
        a.swap(i, pivot);
        for r in i + 1..k {
            let f = a[r][i] / a[i][i];
            for c in i..=k {
                a[r][c] -= f * a[i][c];
            }
        }
    }
    let mut coef = vec![0.0; k];
    for i in (0..k).rev() {
        let s: f64 = (i + 1..k).map(|c| a[i][c] * coef[c]).sum();
        coef[i] = (a[i][k] - s) / a[i][i];
    }
    let rss = x
        .iter()
        .zip(y)
        .map(|(v, w)| {
            (w - powers
                .iter()
                .zip(&coef)
                .map(|(p, c)| c * col(*p, *v))
                .sum::<f64>())
            .powi(2)
        })
        .sum();
    (coef, rss)
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= REGRESSION_REL_TOL * b.abs().max(1.0)
}

fn regression_correctness() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let noise = Normal::new(0.0, 1.0).unwrap();
    let mut line_bad = 0;
    for _ in 0..100 {
        let n = rng.random_range(20..300);
        let (a, b) = (rng.random_range(-5.0..5.0), rng.random_range(-50.0..50.0));
        let x: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..100.0)).collect();
        let y: Vec<f64> = x
            .iter()
            .map(|v| a * v + b + noise.sample(&mut rng))
            .collect();
        let pair = AlignedPair {
            co2: SampledSeries::new(0, 60, x.clone(), Unit::Ppm).unwrap(),
            occupancy: SampledSeries::new(0, 60, y.clone(), Unit::Dimensionless).unwrap(),
            lag_applied: 0,
        };
        let fit = fit_line(&pair).unwrap();
        let (oracle, _) = normal_equations(&x, &y, &[0, 1]);
        if !(close(fit.intercept, oracle[0]) && close(fit.slope, oracle[1])) {
            line_bad += 1;
        }
    }

    let mut poly_bad = 0;
    let mut subset_bad = 0;
    for trial in 0..100 {
        let max_degree = rng.random_range(1..=4);
        let n = rng.random_range(40..200);
        let truth: Vec<f64> = (0..=max_degree)
            .map(|_| {
                if rng.random_bool(0.6) {
                    rng.random_range(-3.0..3.0)
                } else {
                    0.0
                }
            })
            .collect();
        let x: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
        let y: Vec<f64> = x
            .iter()
            .map(|v| {
                truth
                    .iter()
                    .enumerate()
                    .map(|(p, c)| c * v.powi(p as i32))
                    .sum::<f64>()
                    + 0.3 * noise.sample(&mut rng)
            })
            .collect();
        let model = fit_poly_m5(&x, &y, max_degree).unwrap();
        let active = model.active_powers();
        let (oracle, _) = normal_equations(&x, &y, &active);
        if !active
            .iter()
            .zip(&oracle)
            .all(|(p, c)| close(model.coefficients[*p], *c))
        {
            poly_bad += 1;
        }
        if trial < 20 {
            let mut best: Option<(f64, Vec<usize>)> = None;
            for mask in 1u32..1 << (max_degree + 1) {
                let powers: Vec<usize> =
                    (0..=max_degree).filter(|p| mask & (1 << p) != 0).collect();
                let (_, rss) = normal_equations(&x, &y, &powers);
                let aic =
                    n as f64 * (rss.max(RSS_FLOOR) / n as f64).ln() + 2.0 * powers.len() as f64;
                if best.as_ref().is_none_or(|(b, _)| aic < *b) {
                    best = Some((aic, powers));
                }
            }
            if best.unwrap().1 != active {
                subset_bad += 1;
            }
        }
    }
    verdict(
        line_bad == 0 && poly_bad == 0 && subset_bad == 0,
        format!(
            "line mismatches {line_bad}/100, polynomial mismatches {poly_bad}/100, subset disagreements {subset_bad}/20"
        ),
    )
}

fn office_end_to_end() -> Verdict {
    let p = preset("office").unwrap();
    let cfg = EvalConfig {
        tolerances: vec![0.0, 1.0],
        train: TrainConfig {
            lag: LagPolicy::from_geometry(&p.room.geometry, p.interval).unwrap(),
            utc_offset: p.utc_offset,
            ..TrainConfig::default()
        },
        ..EvalConfig::default()
    };
    let mut sums = [[0.0; 2]; 3];
    let mut slowest = Duration::ZERO;
    let mut problems = Vec::new();
    let seeds = 0..5u64;
    for seed in seeds.clone() {
        let started = Instant::now();
        let (co2, occ) = p.generate(seed).unwrap();
        let mut cfg = cfg.clone();
        cfg.svr.seed = seed;
        let pair = AlignedPair {
            co2,
            occupancy: occ,
            lag_applied: 0,
        };
        let report = run_benchmark(&pair, &cfg).unwrap();
        slowest = slowest.max(started.elapsed());
        if !report.failures.is_empty() {
            problems.push(format!(
                "seed {seed}: {} failed cells",
                report.failures.len()
            ));
        }
        if report.rows.len() != 7 * 3 * 2 {
            problems.push(format!("seed {seed}: {} rows", report.rows.len()));
        }
        for (m, method) in EvalMethod::ALL.iter().enumerate() {
            for (t, x) in [0.0, 1.0].iter().enumerate() {
                sums[m][t] += report.average(*method, *x).unwrap_or(f64::NAN);
            }
        }
    }
    let n = seeds.count() as f64;
    let avg = sums.map(|r| r.map(|v| v / n));
    let [std, stl, svr] = avg;
    let pass = problems.is_empty()
        && [std, stl].iter().all(|a| {
            a[1] >= OFFICE_TOL1_MIN && a[0] >= OFFICE_TOL0_MIN && a[0] >= svr[0] && a[1] >= svr[1]
        })
        && slowest < OFFICE_BUDGET_PER_SEED;
    verdict(
        pass,
        format!(
            "x=0: STD {:.2}, STL {:.2}, SVR {:.2}; x=1: STD {:.2}, STL {:.2}, SVR {:.2}; slowest seed {:.1} s{}",
            std[0],
            stl[0],
            svr[0],
            std[1],
            stl[1],
            svr[1],
            slowest.as_secs_f64(),
            if problems.is_empty() { String::new() } else { format!("; {}", problems.join(", ")) }
        ),
    )
}

fn cinema_end_to_end() -> Verdict {
    let p = preset("cinema").unwrap();
    let started = Instant::now();
    let (co2, occ) = p.generate(0).unwrap();
    let cfg = EvalConfig {
        tolerances: vec![10.0],
        train: TrainConfig {
            lag: LagPolicy::from_geometry(&p.room.geometry, p.interval).unwrap(),
            utc_offset: p.utc_offset,
            ..TrainConfig::default()
        },
        ..EvalConfig::default()
    };
    let pair = AlignedPair {
        co2,
        occupancy: occ,
        lag_applied: 0,
    };
    let report = run_benchmark(&pair, &cfg).unwrap();
    let elapsed = started.elapsed();
    let splits = report
        .rows
        .iter()
        .filter(|r| r.method == EvalMethod::Std)
        .count();
    let lags: Vec<usize> = report
        .predictions
        .iter()
        .filter(|c| c.method == EvalMethod::Std)
        .map(|c| c.lag)
        .collect();
    let std = report.average(EvalMethod::Std, 10.0).unwrap_or(f64::NAN);
    let stl = report.average(EvalMethod::Stl, 10.0).unwrap_or(f64::NAN);
    let svr = report.average(EvalMethod::Svr, 10.0).unwrap_or(f64::NAN);
    let pass = report.failures.is_empty()
        && splits == 11
        && std >= svr
        && !lags.is_empty()
        && lags.iter().all(|l| *l > 0)
        && elapsed < CINEMA_BUDGET;
    verdict(
        pass,
        format!(
            "x=10: STD {std:.2}, STL {stl:.2}, SVR {svr:.2} over {splits} splits; lags {lags:?}; {:.1} s",
            elapsed.as_secs_f64()
        ),
    )
}

fn zpa_guarantee() -> Verdict {
    let mut violations = 0;
    let mut windows = 0;
    let (mut with, mut without, mut cells) = (0.0, 0.0, 0);
    for name in ["office", "cinema"] {
        let p = preset(name).unwrap();
        let seeds: &[u64] = if name == "office" {
            &[0, 1, 2, 3, 4]
        } else {
            &[0]
        };
        for &seed in seeds {
            let (co2, occ) = p.generate(seed).unwrap();
            let pair = AlignedPair {
                co2: co2.clone(),
                occupancy: occ.clone(),
                lag_applied: 0,
            };
            let cfg = TrainConfig {
                lag: LagPolicy::from_geometry(&p.room.geometry, p.interval).unwrap(),
                utc_offset: p.utc_offset,
                ..TrainConfig::default()
            };
            for split in incremental_splits(&pair, p.utc_offset).unwrap() {
                let cut = co2.index_of(split.boundary).unwrap();
                let model = match train(
                    &co2.slice(0, cut).unwrap(),
                    &occ.slice(0, cut).unwrap(),
                    &cfg,
                ) {
                    Ok(m) => m,
                    Err(_) => continue,
                };
                let future = co2.slice(cut, co2.len()).unwrap();
                let result = predict(&model, &future).unwrap();
                if let Some(w) = model.zpa.filter(|w| w.duration() > 0) {
                    windows += 1;
                    for (t, v) in result.occupancy.timestamps().zip(result.occupancy.values()) {
                        if w.contains(local_time_of_day(t, p.utc_offset)) && *v != 0.0 {
                            violations += 1;
                        }
                    }
                }
                if name == "office" {
                    let bare = predict(&model.without_zpa(), &future).unwrap();
                    let actual = occ.slice(cut, occ.len()).unwrap();
                    let (a, b) = common_samples(&result.occupancy, &actual).unwrap();
                    with += accuracy_with_tolerance(&a, &b, 0.0).unwrap();
                    let (a, b) = common_samples(&bare.occupancy, &actual).unwrap();
                    without += accuracy_with_tolerance(&a, &b, 0.0).unwrap();
                    cells += 1;
                }
            }
        }
    }
    let (with, without) = (with / cells as f64, without / cells as f64);
    verdict(
        windows > 0 && violations == 0 && with > without,
        format!(
            "{windows} models with a vacant window, {violations} nonzero predictions inside; office x=0 {with:.2} with vs {without:.2} without"
        ),
    )
}

fn simulator_conservation() -> Verdict {
    let profile = OccupantProfile::default();
    let per_person = exhalation_rate(&profile).unwrap() / 60_000.0;
    let grid = [
        (3.0, 4.0, 5.0, 1.0, 1),
        (3.0, 4.0, 5.0, 3.0, 2),
        (5.0, 5.0, 3.0, 6.0, 4),
        (10.0, 8.0, 3.0, 2.0, 10),
        (25.0, 20.0, 12.0, 1.4, 300),
    ];
    let mut worst_ss: f64 = 0.0;
    let mut worst_tau: f64 = 0.0;
    for (l, w, h, ach, people) in grid {
        let room = RoomModel::with_air_changes(
            cdhoc::lag::RoomGeometry::new(l, w, h).unwrap(),
            ach,
            400.0,
        );
        let tau = room.time_constant();
        let onset = 3600;
        let mut schedule = Schedule::default();
        schedule.add(onset, i64::MAX / 2, people);
        let interval = 60;
        let duration = ((onset as f64 + 12.0 * tau) / interval as f64).ceil() as i64 * interval;
        let cfg = SimConfig {
            start: 0,
            interval: interval as u32,
            duration,
            substeps: None,
            noise: None,
        };
        let (co2, _) = simulate(&room, &schedule, &cfg).unwrap();
        let v = co2.values();
        let expected = 400.0 + 1e6 * people as f64 * per_person / room.outflow;
        worst_ss = worst_ss.max((v[v.len() - 1] - expected).abs() / expected);

        // log-linear fit of the approach to steady state over three time constants
        let (mut sx, mut sy, mut sxx, mut sxy, mut n) = (0.0, 0.0, 0.0, 0.0, 0.0);
        let first = (onset / interval) as usize;
        for (i, c) in v.iter().enumerate().skip(first + 1) {
            let t = ((i - first) as i64 * interval) as f64;
            if t > 3.0 * tau {
                break;
            }
            let y = (expected - c).ln();
            sx += t;
            sy += y;
            sxx += t * t;
            sxy += t * y;
            n += 1.0;
        }
        let fitted = -1.0 / ((n * sxy - sx * sy) / (n * sxx - sx * sx));
        worst_tau = worst_tau.max((fitted - tau).abs() / tau);
    }
    verdict(
        worst_ss <= STEADY_STATE_REL_TOL && worst_tau <= TIME_CONSTANT_REL_TOL,
        format!(
            "worst steady-state error {:.4}%, worst time-constant error {:.3}%",
            100.0 * worst_ss,
            100.0 * worst_tau
        ),
    )
}

fn day_pair(days: usize) -> AlignedPair {
    let n = days * 288;
    AlignedPair {
        co2: SampledSeries::new(0, 300, vec![400.0; n], Unit::Ppm).unwrap(),
        occupancy: SampledSeries::new(0, 300, vec![0.0; n], Unit::Persons).unwrap(),
        lag_applied: 0,
    }
}

fn protocol_fidelity() -> Verdict {
    let table = |days| -> Vec<(usize, usize)> {
        incremental_splits(&day_pair(days), 0)
            .unwrap()
            .iter()
            .map(|s| (s.train_days, s.test_days))
            .collect()
    };
    let office: Vec<(usize, usize)> = (7..=13).map(|t| (t, 14 - t)).collect();
    let cinema: Vec<(usize, usize)> = (12..=22).map(|t| (t, 23 - t)).collect();
    let one = |v: f64| SampledSeries::new(0, 60, vec![v], Unit::Persons).unwrap();
    let near = accuracy_with_tolerance(&one(146.0), &one(150.0), 10.0).unwrap();
    let above = accuracy_with_tolerance(&one(155.0), &one(150.0), 10.0).unwrap();
    let (o, c) = (table(14), table(23));
    verdict(
        o == office && c == cinema && near == 100.0 && above == 100.0,
        format!(
            "14 days {:?}..{:?} ({} splits), 23 days {:?}..{:?} ({} splits); 146 and 155 vs 150 at x=10: {near}%, {above}%",
            o[0],
            o[o.len() - 1],
            o.len(),
            c[0],
            c[c.len() - 1],
            c.len()
        ),
    )
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Verdict); 11] = [
        ("reconstruction exactness", reconstruction_exactness),
        ("decomposition fidelity", decomposition_fidelity),
        ("STL robustness to spikes", stl_robustness),
        ("lag recovery", lag_recovery),
        ("DTW oracle equivalence", dtw_oracle),
        ("regression correctness", regression_correctness),
        ("office-scale end-to-end", office_end_to_end),
        ("cinema-scale end-to-end", cinema_end_to_end),
        ("vacancy guarantee", zpa_guarantee),
        ("simulator conservation", simulator_conservation),
        ("protocol fidelity", protocol_fidelity),
    ];
    let only: Vec<usize> = std::env::args()
        .skip(1)
        .filter_map(|a| a.parse().ok())
        .collect();
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let n = i + 1;
        if !only.is_empty() && !only.contains(&n) {
            continue;
        }
        let v = check();
        println!(
            "criterion {n:>2} {}: {name}: {}",
            if v.pass { "PASS" } else { "FAIL" },
            v.detail
        );
        failed += usize::from(!v.pass);
    }
    if failed == 0 {
        println!("acceptance: all criteria passed");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: {failed} criteria failed");
        ExitCode::FAILURE
    }
}
