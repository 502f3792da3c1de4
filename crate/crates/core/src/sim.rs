//! Room CO2 mass balance driven by an occupant schedule, used to generate
//! datasets with known occupancy.

use chrono::{FixedOffset, NaiveDate, TimeZone};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::lag::RoomGeometry;
use crate::models::SECONDS_PER_DAY;
use crate::series::{SampledSeries, Timestamp, Unit};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OccupantProfile {
    /// Metabolic rate, W/m².
    pub metabolic_rate: f64,
    pub respiratory_quotient: f64,
    /// Height, cm.
    pub height: f64,
    /// Weight, kg.
    pub weight: f64,
}

impl Default for OccupantProfile {
    /// Seated adult doing light office work.
    fn default() -> Self {
        Self {
            metabolic_rate: 58.2,
            respiratory_quotient: 0.83,
            height: 170.0,
            weight: 70.0,
        }
    }
}

impl OccupantProfile {
    pub fn validate(&self) -> Result<()> {
        let ok = self.metabolic_rate > 0.0
            && self.height > 0.0
            && self.weight > 0.0
            && self.respiratory_quotient > 0.6
            && self.respiratory_quotient < 1.1;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!(
                "invalid occupant profile {self:?}"
            )))
        }
    }
}

/// CO2 exhalation rate of one occupant in litres per minute:
/// `M RQ sqrt(H W) / (21132 (0.23 RQ + 0.77))`.
pub fn exhalation_rate(p: &OccupantProfile) -> Result<f64> {
    p.validate()?;
    let rq = p.respiratory_quotient;
    Ok(p.metabolic_rate * rq * (p.height * p.weight).sqrt() / (21132.0 * (0.23 * rq + 0.77)))
}

/// Exhalation rate as a CO2 volume flow in m³/s.
fn exhalation_m3_per_s(p: &OccupantProfile) -> Result<f64> {
    Ok(exhalation_rate(p)? / 1000.0 / 60.0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RoomModel {
    pub geometry: RoomGeometry,
    /// Supply air flow, m³/s.
    pub inflow: f64,
    /// Exhaust air flow, m³/s.
    pub outflow: f64,
    /// CO2 of the supply air, ppm.
    pub inlet_concentration: f64,
    pub initial_concentration: f64,
}

impl RoomModel {
    /// Balanced ventilation at `ach` air changes per hour.
    pub fn with_air_changes(geometry: RoomGeometry, ach: f64, inlet: f64) -> Self {
        let flow = geometry.volume() * ach / 3600.0;
        Self {
            geometry,
            inflow: flow,
            outflow: flow,
            inlet_concentration: inlet,
            initial_concentration: inlet,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.geometry.validate()?;
        if !(self.inflow >= 0.0 && self.outflow >= 0.0) {
            return Err(Error::InvalidParameter("air flows must be >= 0".into()));
        }
        if !(self.inlet_concentration >= 0.0 && self.initial_concentration >= 0.0) {
            return Err(Error::InvalidParameter(
                "concentrations must be >= 0".into(),
            ));
        }
        Ok(())
    }

    /// Exhaust time constant `V / outflow`, seconds.
    pub fn time_constant(&self) -> f64 {
        self.geometry.volume() / self.outflow
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScheduleEntry {
    pub start: Timestamp,
    pub end: Timestamp,
    pub count: u32,
    /// Index into the schedule's profiles.
    pub profile: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Schedule {
    pub profiles: Vec<OccupantProfile>,
    pub entries: Vec<ScheduleEntry>,
}

impl Default for Schedule {
    fn default() -> Self {
        Self {
            profiles: vec![OccupantProfile::default()],
            entries: Vec::new(),
        }
    }
}

impl Schedule {
    pub fn add(&mut self, start: Timestamp, end: Timestamp, count: u32) {
        if end > start && count > 0 {
            self.entries.push(ScheduleEntry {
                start,
                end,
                count,
                profile: 0,
            });
        }
    }

    pub fn occupancy_at(&self, t: Timestamp) -> u32 {
        self.entries
            .iter()
            .filter(|e| e.start <= t && t < e.end)
            .map(|e| e.count)
            .sum()
    }

    /// CO2 generation at `t`, m³/s.
    fn generation_at(&self, t: f64, rates: &[f64]) -> f64 {
        self.entries
            .iter()
            .filter(|e| (e.start as f64) <= t && t < e.end as f64)
            .map(|e| e.count as f64 * rates[e.profile])
            .sum()
    }

    fn validate(&self) -> Result<()> {
        for e in &self.entries {
            if e.end < e.start {
                return Err(Error::InvalidParameter(format!(
                    "schedule entry ends before it starts: {e:?}"
                )));
            }
            if e.profile >= self.profiles.len() {
                return Err(Error::InvalidParameter(format!(
                    "schedule entry names unknown profile {}",
                    e.profile
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SensorNoise {
    /// Standard deviation of the gaussian error, ppm.
    pub sigma: f64,
    /// Reading resolution, ppm; 0 disables rounding.
    pub quantization: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimConfig {
    pub start: Timestamp,
    pub interval: u32,
    pub duration: i64,
    /// Euler steps per sampling interval; `None` picks enough steps to keep
    /// each step below 1% of the exhaust time constant.
    pub substeps: Option<usize>,
    pub noise: Option<SensorNoise>,
}

const MIN_SUBSTEPS: usize = 10;
const AUTO_STEP_FRACTION: f64 = 0.01;
const MAX_STEP_FRACTION: f64 = 0.1;

fn substeps(cfg: &SimConfig, rate: f64) -> Result<usize> {
    let interval = cfg.interval as f64;
    match cfg.substeps {
        None => Ok(MIN_SUBSTEPS.max((interval * rate / AUTO_STEP_FRACTION).ceil() as usize)),
        Some(k) if k < MIN_SUBSTEPS => Err(Error::InvalidParameter(format!(
            "at least {MIN_SUBSTEPS} integration steps per sample are required, got {k}"
        ))),
        Some(k) => {
            let h = interval / k as f64;
            if h * rate > MAX_STEP_FRACTION {
                Err(Error::UnstableStep { step: h, rate })
            } else {
                Ok(k)
            }
        }
    }
}

/// Integrates `dC/dt = (inflow C_in - outflow C) / V + 1e6 u(t) / V` by
/// forward Euler and samples CO2 and occupancy at every interval.
pub fn simulate(
    room: &RoomModel,
    schedule: &Schedule,
    cfg: &SimConfig,
) -> Result<(SampledSeries, SampledSeries)> {
    room.validate()?;
    schedule.validate()?;
    if cfg.interval == 0 {
        return Err(Error::InvalidInterval(0));
    }
    if cfg.duration <= 0 || cfg.duration % cfg.interval as i64 != 0 {
        return Err(Error::InvalidParameter(format!(
            "duration {} s is not a positive multiple of the interval {} s",
            cfg.duration, cfg.interval
        )));
    }
    let volume = room.geometry.volume();
    let rate = room.outflow / volume;
    let k = substeps(cfg, rate)?;
    let h = cfg.interval as f64 / k as f64;
    let rates: Vec<f64> = schedule
        .profiles
        .iter()
        .map(exhalation_m3_per_s)
        .collect::<Result<_>>()?;

    let n = (cfg.duration / cfg.interval as i64) as usize;
    let mut co2 = Vec::with_capacity(n);
    let mut occ = Vec::with_capacity(n);
    let mut c = room.initial_concentration;
    let supply = room.inflow * room.inlet_concentration / volume;
    for i in 0..n {
        let t0 = cfg.start + i as i64 * cfg.interval as i64;
        co2.push(c);
        occ.push(schedule.occupancy_at(t0) as f64);
        for s in 0..k {
            let t = t0 as f64 + s as f64 * h;
            let source = 1e6 * schedule.generation_at(t, &rates) / volume;
            c += h * (supply - rate * c + source);
        }
    }
    if let Some(noise) = cfg.noise {
        let mut rng = ChaCha8Rng::seed_from_u64(noise.seed);
        let normal = Normal::new(0.0, noise.sigma)
            .map_err(|e| Error::InvalidParameter(format!("sensor noise: {e}")))?;
        for v in &mut co2 {
            let mut x = *v + normal.sample(&mut rng);
            if noise.quantization > 0.0 {
                x = (x / noise.quantization).round() * noise.quantization;
            }
            *v = x.max(0.0);
        }
    }
    Ok((
        SampledSeries::new(cfg.start, cfg.interval, co2, Unit::Ppm)?,
        SampledSeries::new(cfg.start, cfg.interval, occ, Unit::Persons)?,
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScheduleTemplate {
    /// A single resident keeping weekday hours, joined by visitors for
    /// short meetings so that at most `max_occupants` are present; empty
    /// weekends.
    Office { max_occupants: u32 },
    /// Fixed daily screening slots with random audiences.
    Cinema { capacity: u32 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Preset {
    pub name: &'static str,
    pub room: RoomModel,
    pub template: ScheduleTemplate,
    pub interval: u32,
    pub days: usize,
    /// First local midnight of the dataset, as a UTC timestamp.
    pub start: Timestamp,
    pub utc_offset: i64,
    pub noise_sigma: f64,
    pub quantization: f64,
}

const UTC_OFFSET: i64 = 10 * 3600;

fn local_midnight(y: i32, m: u32, d: u32) -> Timestamp {
    let tz = FixedOffset::east_opt(UTC_OFFSET as i32).expect("valid offset");
    let date = NaiveDate::from_ymd_opt(y, m, d).expect("valid date");
    tz.from_local_datetime(&date.and_hms_opt(0, 0, 0).expect("valid time"))
        .single()
        .expect("fixed offsets are unambiguous")
        .timestamp()
}

pub const PRESETS: [&str; 2] = ["office", "cinema"];

pub fn preset(name: &str) -> Result<Preset> {
    match name {
        "office" => {
            let geometry = RoomGeometry::new(3.0, 4.0, 5.0)?;
            Ok(Preset {
                name: "office",
                room: RoomModel::with_air_changes(geometry, 2.5, 410.0),
                template: ScheduleTemplate::Office { max_occupants: 4 },
                interval: 300,
                days: 14,
                start: local_midnight(2015, 5, 18),
                utc_offset: UTC_OFFSET,
                noise_sigma: 25.0,
                quantization: 1.0,
            })
        }
        "cinema" => {
            let geometry = RoomGeometry::new(25.0, 20.0, 12.0)?;
            Ok(Preset {
                name: "cinema",
                room: RoomModel::with_air_changes(geometry, 1.4, 410.0),
                template: ScheduleTemplate::Cinema { capacity: 300 },
                interval: 180,
                days: 23,
                start: local_midnight(2016, 1, 4),
                utc_offset: UTC_OFFSET,
                noise_sigma: 25.0,
                quantization: 1.0,
            })
        }
        other => Err(Error::UnknownPreset(other.to_string())),
    }
}

fn minutes(m: f64) -> i64 {
    (m * 60.0).round() as i64
}

impl ScheduleTemplate {
    /// Draws a schedule of `days` days starting at local midnight `start`.
    pub fn generate(&self, start: Timestamp, days: usize, seed: u64) -> Schedule {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut schedule = Schedule::default();
        for d in 0..days {
            let midnight = start + d as i64 * SECONDS_PER_DAY;
            let at = |m: f64| midnight + minutes(m);
            match *self {
                ScheduleTemplate::Office { max_occupants } => {
                    // datasets start on a Monday
                    if d % 7 >= 5 || rng.random_bool(0.1) {
                        continue;
                    }
                    let leave = rng.random_range(990.0..1080.0);
                    let mut t: f64 = rng.random_range(480.0..570.0);
                    let mut blocks = Vec::new();
                    while t < leave {
                        let end = (t + rng.random_range(30.0..150.0_f64).round()).min(leave);
                        blocks.push((t, end));
                        t = end + rng.random_range(15.0..90.0_f64).round();
                    }
                    for &(from, to) in &blocks {
                        schedule.add(at(from), at(to), 1);
                    }
                    if max_occupants < 2 {
                        continue;
                    }
                    // visitors only meet the resident inside one presence block
                    let mut used = Vec::new();
                    for _ in 0..rng.random_range(0..=2) {
                        let k = rng.random_range(0..blocks.len());
                        if used.contains(&k) {
                            continue;
                        }
                        used.push(k);
                        let (from, to) = blocks[k];
                        let length = rng.random_range(15.0..=60.0_f64).round().min(to - from);
                        if length < 10.0 {
                            continue;
                        }
                        let begin = rng.random_range(from..=to - length).round().max(from);
                        schedule.add(
                            at(begin),
                            at((begin + length).min(to)),
                            rng.random_range(1..max_occupants),
                        );
                    }
                }
                ScheduleTemplate::Cinema { capacity } => {
                    let cap = capacity as f64;
                    let weekend = d % 7 >= 5;
                    for (k, slot) in [540.0, 735.0, 930.0, 1125.0, 1320.0]
                        .into_iter()
                        .enumerate()
                    {
                        let length = rng.random_range(90.0..=180.0_f64).round();
                        // most screenings are sparsely attended; evenings and
                        // weekends draw the large audiences
                        let pull = [0.25, 0.4, 0.55, 1.0, 0.7][k] * if weekend { 1.0 } else { 0.6 };
                        let u: f64 = rng.random_range(0.0..1.0);
                        let audience = if rng.random_bool(0.1) {
                            0
                        } else {
                            (cap * pull * u.powf(2.0)).round() as u32
                        };
                        schedule.add(at(slot), at(slot + length), audience);
                    }
                }
            }
        }
        schedule
    }
}

impl Preset {
    pub fn duration(&self) -> i64 {
        self.days as i64 * SECONDS_PER_DAY
    }

    pub fn sim_config(&self, seed: u64, noise: bool) -> SimConfig {
        SimConfig {
            start: self.start,
            interval: self.interval,
            duration: self.duration(),
            substeps: None,
            noise: noise.then_some(SensorNoise {
                sigma: self.noise_sigma,
                quantization: self.quantization,
                seed: seed.wrapping_add(0x5eed),
            }),
        }
    }

    /// Simulated CO2 and occupancy for this preset, with sensor noise.
    pub fn generate(&self, seed: u64) -> Result<(SampledSeries, SampledSeries)> {
        let schedule = self.template.generate(self.start, self.days, seed);
        simulate(&self.room, &schedule, &self.sim_config(seed, true))
    }
}
