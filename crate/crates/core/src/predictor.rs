//! Training of the component-wise occupancy model and prediction from a
//! CO2 series.

use crate::decomp::{ComponentSet, DecompConfig, Method};
use crate::error::{Error, Result};
use crate::lag::{minutes_to_samples, select_lag, upper_bound_lag, RoomGeometry};
use crate::models::{
    align_motifs, correlate_trend, find_repeated_sequence, fit_poly_m5, learn_zpa,
    phase_mean_motif, MotifSearch, PolyModel, SeasonalMap, SeasonalMotif, TrendModel, VacantWindow,
    SECONDS_PER_DAY,
};
use crate::series::{shift_and_trim, SampledSeries, Timestamp, Unit};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LagPolicy {
    /// Sweep `0..=max` samples and keep the NRMSE minimiser.
    Search {
        max: usize,
    },
    Fixed(usize),
}

impl LagPolicy {
    /// Sweep bound from the room volume, in samples of `interval` seconds.
    pub fn from_geometry(geom: &RoomGeometry, interval: u32) -> Result<Self> {
        Ok(LagPolicy::Search {
            max: minutes_to_samples(upper_bound_lag(geom)?, interval),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub method: Method,
    /// Seasonal period in samples; `None` means one day.
    pub period: Option<usize>,
    pub lag: LagPolicy,
    pub max_degree: usize,
    pub pcc_threshold: f64,
    pub dtw_threshold: f64,
    /// Motif lengths are searched within these fractions of the period; the
    /// most similar accepted length in that band wins.
    pub motif_bounds: (f64, f64),
    pub stl_seasonal_span: usize,
    pub zpa: bool,
    /// Local time minus UTC, seconds.
    pub utc_offset: i64,
    /// Whole periods of CO2 kept in the model as decomposition context.
    pub history_cycles: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            method: Method::Std,
            period: None,
            lag: LagPolicy::Search { max: 0 },
            max_degree: 3,
            pcc_threshold: 0.7,
            dtw_threshold: 95.0,
            motif_bounds: (0.75, 1.25),
            stl_seasonal_span: 7,
            zpa: true,
            utc_offset: 0,
            history_cycles: 7,
        }
    }
}

impl TrainConfig {
    pub fn period_for(&self, interval: u32) -> usize {
        self.period
            .unwrap_or((SECONDS_PER_DAY / interval as i64).max(2) as usize)
    }

    pub fn decomp_config(&self, period: usize) -> DecompConfig {
        match DecompConfig::for_method(self.method, period) {
            DecompConfig::Stl(p) => DecompConfig::Stl(p.with_seasonal_span(self.stl_seasonal_span)),
            other => other,
        }
    }

    fn motif_search(&self, period: usize) -> MotifSearch {
        let (lo, hi) = self.motif_bounds;
        MotifSearch {
            threshold: self.dtw_threshold,
            min_len: ((period as f64 * lo).ceil() as usize).max(2),
            max_len: Some((period as f64 * hi).floor() as usize),
            refine: f64::INFINITY,
            ..MotifSearch::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidParameter(msg.into()));
        if self.period.is_some_and(|p| p < 2) {
            return bad("period must be >= 2 samples");
        }
        if !(0.0..=1.0).contains(&self.pcc_threshold) {
            return bad("pcc threshold must lie in [0, 1]");
        }
        if !(0.0..=100.0).contains(&self.dtw_threshold) {
            return bad("dtw threshold must lie in [0, 100]");
        }
        let (lo, hi) = self.motif_bounds;
        if !(lo > 0.0 && hi >= lo) {
            return bad("motif bounds must satisfy 0 < lower <= upper");
        }
        if self.history_cycles == 0 {
            return bad("history must keep at least one cycle");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OccupancyModel {
    pub decomp: DecompConfig,
    pub interval: u32,
    pub lag: usize,
    pub trend: TrendModel,
    pub seasonal: SeasonalMap,
    pub irregular: PolyModel,
    pub zpa: Option<VacantWindow>,
    pub utc_offset: i64,
    /// Occupancy time span `[start, end)` seen in training.
    pub training_range: (Timestamp, Timestamp),
    /// Trailing CO2 of the training data, used as decomposition context.
    pub history: SampledSeries,
    pub warnings: Vec<String>,
}

impl OccupancyModel {
    pub fn method(&self) -> Method {
        self.decomp.method()
    }

    pub fn period(&self) -> usize {
        self.decomp.period()
    }

    /// Same model with the vacancy adjustment switched off.
    pub fn without_zpa(&self) -> Self {
        Self {
            zpa: None,
            ..self.clone()
        }
    }
}

/// Restricts both series to their common time range.
fn overlap(co2: &SampledSeries, occ: &SampledSeries) -> Result<(SampledSeries, SampledSeries)> {
    if co2.interval() != occ.interval() {
        return Err(Error::IntervalMismatch {
            left: co2.interval(),
            right: occ.interval(),
        });
    }
    let step = co2.interval() as i64;
    if (co2.start() - occ.start()).rem_euclid(step) != 0 {
        return Err(Error::InvalidParameter(
            "co2 and occupancy timestamps are not on the same grid".into(),
        ));
    }
    let start = co2.start().max(occ.start());
    let end = co2.end().min(occ.end());
    if end <= start {
        return Err(Error::EmptySeries);
    }
    let cut = |s: &SampledSeries| {
        let from = ((start - s.start()) / step) as usize;
        let to = ((end - s.start()) / step) as usize;
        s.slice(from, to)
    };
    Ok((cut(co2)?, cut(occ)?))
}

fn motif_or_fallback(
    seasonal: &SampledSeries,
    search: &MotifSearch,
    period: usize,
    name: &str,
    warnings: &mut Vec<String>,
) -> Result<SeasonalMotif> {
    match find_repeated_sequence(seasonal, search) {
        Ok(m) => Ok(m),
        Err(Error::Aperiodic) => {
            let msg = format!("{name} seasonal has no repeated pattern; using per-phase means");
            log::warn!("{msg}");
            warnings.push(msg);
            Ok(phase_mean_motif(seasonal, period))
        }
        Err(e) => Err(e),
    }
}

pub fn train(
    co2: &SampledSeries,
    occ: &SampledSeries,
    config: &TrainConfig,
) -> Result<OccupancyModel> {
    config.validate()?;
    let (co2, occ) = overlap(co2, occ)?;
    let interval = co2.interval();
    let period = config.period_for(interval);
    let decomp = config.decomp_config(period);
    let mut warnings = Vec::new();

    let lag = match config.lag {
        LagPolicy::Fixed(k) => k,
        LagPolicy::Search { max } => {
            select_lag(&co2, &occ, max)
                .map_err(Error::at_stage("lag"))?
                .best_lag
        }
    };
    let pair = shift_and_trim(&co2, &occ, lag).map_err(Error::at_stage("align"))?;
    let comp_c = decomp
        .decompose(&pair.co2)
        .map_err(Error::at_stage("decompose co2"))?;
    let comp_o = decomp
        .decompose(&pair.occupancy)
        .map_err(Error::at_stage("decompose occupancy"))?;

    let trend = correlate_trend(
        comp_c.trend.values(),
        comp_o.trend.values(),
        config.max_degree,
        config.pcc_threshold,
    )
    .map_err(Error::at_stage("trend"))?;
    if trend.weakly_validated {
        warnings.push(format!(
            "trend correlation {:.3} below {}; linear trend map used",
            trend.pcc, config.pcc_threshold
        ));
    }

    let search = config.motif_search(period);
    let motif_c = motif_or_fallback(&comp_c.seasonal, &search, period, "co2", &mut warnings)
        .map_err(Error::at_stage("seasonal"))?;
    let motif_o = motif_or_fallback(
        &comp_o.seasonal,
        &search,
        period,
        "occupancy",
        &mut warnings,
    )
    .map_err(Error::at_stage("seasonal"))?;
    let anchor = pair.occupancy.timestamp(motif_o.offset);
    let seasonal =
        align_motifs(&motif_o, &motif_c, anchor, interval).map_err(Error::at_stage("seasonal"))?;

    let irregular = fit_poly_m5(
        comp_c.irregular.values(),
        comp_o.irregular.values(),
        config.max_degree,
    )
    .map_err(Error::at_stage("irregular"))?;

    let zpa = if config.zpa {
        match learn_zpa(&pair.occupancy, config.utc_offset) {
            Ok(w) => Some(w),
            Err(e) => {
                let msg = format!("vacancy adjustment disabled: {e}");
                log::warn!("{msg}");
                warnings.push(msg);
                None
            }
        }
    } else {
        None
    };

    let keep = (config.history_cycles * period).min(co2.len());
    let history = co2.slice(co2.len() - keep, co2.len())?;
    Ok(OccupancyModel {
        decomp,
        interval,
        lag,
        trend,
        seasonal,
        irregular,
        zpa,
        utc_offset: config.utc_offset,
        training_range: (pair.occupancy.start(), pair.occupancy.end()),
        history,
        warnings,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct PredictionResult {
    pub occupancy: SampledSeries,
    pub components: ComponentSet,
    pub zpa_mask: Vec<bool>,
    pub warnings: Vec<String>,
}

/// Final occupancy count from the predicted components: the sum, clamped
/// at zero and rounded half to even.
pub fn reconstruct(t: f64, s: f64, e: f64, zpa: f64) -> u32 {
    (t + s + e + zpa).max(0.0).round_ties_even() as u32
}

/// Prepends the stored training CO2 that immediately precedes `future`.
fn with_context(model: &OccupancyModel, future: &SampledSeries) -> Result<(SampledSeries, usize)> {
    let h = &model.history;
    let step = model.interval as i64;
    let on_grid = (future.start() - h.start()).rem_euclid(step) == 0;
    if on_grid && future.start() > h.start() && future.start() <= h.end() {
        let take = ((future.start() - h.start()) / step) as usize;
        let mut values = h.values()[..take].to_vec();
        values.extend_from_slice(future.values());
        let joined = SampledSeries::new(h.start(), model.interval, values, future.unit())?;
        Ok((joined, take))
    } else {
        Ok((future.clone(), 0))
    }
}

pub fn predict(model: &OccupancyModel, co2_future: &SampledSeries) -> Result<PredictionResult> {
    if co2_future.interval() != model.interval {
        return Err(Error::IntervalMismatch {
            left: co2_future.interval(),
            right: model.interval,
        });
    }
    let mut warnings = Vec::new();
    let (context, skip) = with_context(model, co2_future)?;
    if skip == 0 {
        let msg = "co2 window does not continue the training data; decomposed without context"
            .to_string();
        log::info!("{msg}");
        warnings.push(msg);
    }
    let period = model.period();
    if co2_future.len() < period {
        warnings.push(format!(
            "co2 window of {} samples is shorter than one period ({period}); seasonal motif tiled partially",
            co2_future.len()
        ));
    }
    let comp_c = model
        .decomp
        .decompose(&context)
        .map_err(|e| match e {
            Error::SeriesTooShort { needed, got } => Error::InsufficientHistory(format!(
                "decomposition needs {needed} samples of co2, {got} available"
            )),
            e => e,
        })?
        .slice(skip, context.len())?;

    let shift = model.lag as i64 * model.interval as i64;
    let start = co2_future.start() - shift;
    let n = co2_future.len();
    let (mut trend, mut seasonal, mut irregular) = (
        Vec::with_capacity(n),
        Vec::with_capacity(n),
        Vec::with_capacity(n),
    );
    let mut zpa_mask = Vec::with_capacity(n);
    let mut counts = Vec::with_capacity(n);
    for i in 0..n {
        let t = start + i as i64 * model.interval as i64;
        let tv = model.trend.predict(comp_c.trend.values()[i]);
        let sv = model.seasonal.value_at(t);
        let ev = model.irregular.predict(comp_c.irregular.values()[i]);
        let vacant = model
            .zpa
            .is_some_and(|w| w.contains_time(t, model.utc_offset));
        let z = if vacant { -(tv + sv + ev) } else { 0.0 };
        counts.push(reconstruct(tv, sv, ev, z) as f64);
        trend.push(tv);
        seasonal.push(sv);
        irregular.push(ev);
        zpa_mask.push(vacant);
    }
    let series = |v| SampledSeries::derived(start, model.interval, v, Unit::Persons);
    Ok(PredictionResult {
        occupancy: series(counts),
        components: ComponentSet {
            trend: series(trend),
            seasonal: series(seasonal),
            irregular: series(irregular),
            period,
            method: model.method(),
        },
        zpa_mask,
        warnings,
    })
}
