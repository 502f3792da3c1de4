//! `key = value` run configuration. Blank lines and `#` comments are
//! ignored; every key is optional.

use std::path::Path;
use std::str::FromStr;

use crate::decomp::Method;
use crate::error::{Error, Result};
use crate::harness::{EvalConfig, EvalMethod, IngestOptions};
use crate::lag::RoomGeometry;
use crate::predictor::{LagPolicy, TrainConfig};
use crate::svr::SvrConfig;

#[derive(Debug, Clone, PartialEq)]
pub enum LagSetting {
    Fixed(usize),
    /// Sweep bound in samples.
    Max(usize),
    /// Sweep bound derived from the room volume.
    Room(RoomGeometry),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub train: TrainConfig,
    /// `None` keeps the lag of `train.lag`.
    pub lag: Option<LagSetting>,
    pub svr: SvrConfig,
    pub tolerances: Vec<f64>,
    pub seeds: Vec<u64>,
    pub methods: Vec<EvalMethod>,
    pub min_training_days: usize,
    pub ingest: IngestOptions,
    /// Local offset for the vacancy window; `None` takes the dataset's.
    pub utc_offset: Option<i64>,
}

impl Default for RunConfig {
    fn default() -> Self {
        let eval = EvalConfig::default();
        Self {
            train: eval.train,
            lag: None,
            svr: eval.svr,
            tolerances: eval.tolerances,
            seeds: vec![0],
            methods: eval.methods,
            min_training_days: eval.min_training_days,
            ingest: IngestOptions::default(),
            utc_offset: None,
        }
    }
}

fn bad<T>(line: usize, msg: impl Into<String>) -> Result<T> {
    Err(Error::Config {
        line,
        msg: msg.into(),
    })
}

fn value<T: FromStr>(line: usize, key: &str, v: &str) -> Result<T> {
    v.parse()
        .or_else(|_| bad(line, format!("invalid value '{v}' for '{key}'")))
}

fn list<T: FromStr>(line: usize, key: &str, v: &str) -> Result<Vec<T>> {
    v.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| value(line, key, s))
        .collect()
}

fn boolean(line: usize, key: &str, v: &str) -> Result<bool> {
    match v.to_ascii_lowercase().as_str() {
        "true" | "yes" | "on" | "1" => Ok(true),
        "false" | "no" | "off" | "0" => Ok(false),
        _ => bad(line, format!("'{key}' expects true or false, got '{v}'")),
    }
}

/// Seconds east of UTC from `+10:00`, `-03:30` or a plain number of seconds.
pub fn parse_utc_offset(v: &str) -> Option<i64> {
    if let Ok(s) = v.parse::<i64>() {
        return Some(s);
    }
    let (sign, rest) = match v.as_bytes().first()? {
        b'+' => (1, &v[1..]),
        b'-' => (-1, &v[1..]),
        _ => return None,
    };
    let (h, m) = rest.split_once(':').unwrap_or((rest, "0"));
    let (h, m): (i64, i64) = (h.parse().ok()?, m.parse().ok()?);
    (h <= 23 && m < 60).then_some(sign * (h * 3600 + m * 60))
}

fn parse_room(line: usize, v: &str) -> Result<RoomGeometry> {
    let dims: Vec<f64> = v
        .split(['x', 'X', ','])
        .map(|d| value(line, "room", d.trim()))
        .collect::<Result<_>>()?;
    match dims.as_slice() {
        [l, w, h] => RoomGeometry::new(*l, *w, *h).or_else(|e| bad(line, e.to_string())),
        _ => bad(line, format!("'room' expects LxWxH in metres, got '{v}'")),
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = RunConfig::default();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let text = raw.split('#').next().unwrap_or("").trim();
            if text.is_empty() {
                continue;
            }
            let Some((key, v)) = text.split_once('=') else {
                return bad(line, format!("expected 'key = value', got '{text}'"));
            };
            let (key, v) = (key.trim(), v.trim());
            match key {
                "method" => {
                    cfg.train.method = match v.to_ascii_lowercase().as_str() {
                        "std" => Method::Std,
                        "stl" => Method::Stl,
                        _ => return bad(line, format!("method must be std or stl, got '{v}'")),
                    }
                }
                "period" => cfg.train.period = Some(value(line, key, v)?),
                "lag" => {
                    if v != "auto" {
                        cfg.lag = Some(LagSetting::Fixed(value(line, key, v)?));
                    }
                }
                "lag_max" => cfg.lag = Some(LagSetting::Max(value(line, key, v)?)),
                "room" => cfg.lag = Some(LagSetting::Room(parse_room(line, v)?)),
                "max_degree" => cfg.train.max_degree = value(line, key, v)?,
                "pcc_threshold" => cfg.train.pcc_threshold = value(line, key, v)?,
                "dtw_threshold" => cfg.train.dtw_threshold = value(line, key, v)?,
                "motif_bounds" => match list::<f64>(line, key, v)?.as_slice() {
                    [lo, hi] => cfg.train.motif_bounds = (*lo, *hi),
                    _ => return bad(line, "'motif_bounds' expects two fractions"),
                },
                "stl_seasonal_span" => cfg.train.stl_seasonal_span = value(line, key, v)?,
                "zpa" => cfg.train.zpa = boolean(line, key, v)?,
                "utc_offset" => {
                    let o = parse_utc_offset(v)
                        .map_or_else(|| bad(line, format!("invalid utc offset '{v}'")), Ok)?;
                    cfg.utc_offset = Some(o);
                    cfg.ingest.default_offset = o;
                }
                "history_cycles" => cfg.train.history_cycles = value(line, key, v)?,
                "tolerances" | "tolerance" => cfg.tolerances = list(line, key, v)?,
                "seeds" | "seed" => cfg.seeds = list(line, key, v)?,
                "methods" => cfg.methods = list(line, key, v)?,
                "min_training_days" => cfg.min_training_days = value(line, key, v)?,
                "svr_window" => cfg.svr.window = value(line, key, v)?,
                "svr_epsilon" => cfg.svr.epsilon = value(line, key, v)?,
                "svr_c" => cfg.svr.c = value(line, key, v)?,
                "svr_epochs" => cfg.svr.epochs = value(line, key, v)?,
                "svr_learning_rate" => cfg.svr.learning_rate = value(line, key, v)?,
                "interval" => cfg.ingest.interval = Some(value(line, key, v)?),
                "max_gap" => cfg.ingest.max_gap = value(line, key, v)?,
                _ => return bad(line, format!("unknown key '{key}'")),
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        self.train.validate()?;
        self.eval_config(300, 0)?.validate()?;
        if self.seeds.is_empty() {
            return Err(Error::InvalidParameter(
                "at least one seed is required".into(),
            ));
        }
        Ok(())
    }

    /// Lag policy for data sampled every `interval` seconds.
    pub fn lag_policy(&self, interval: u32) -> Result<LagPolicy> {
        Ok(match &self.lag {
            None => self.train.lag,
            Some(LagSetting::Fixed(k)) => LagPolicy::Fixed(*k),
            Some(LagSetting::Max(m)) => LagPolicy::Search { max: *m },
            Some(LagSetting::Room(g)) => LagPolicy::from_geometry(g, interval)?,
        })
    }

    /// Training settings for data sampled every `interval` seconds whose
    /// timestamps carry `data_offset`.
    pub fn train_config(&self, interval: u32, data_offset: i64) -> Result<TrainConfig> {
        Ok(TrainConfig {
            lag: self.lag_policy(interval)?,
            utc_offset: self.utc_offset.unwrap_or(data_offset),
            ..self.train.clone()
        })
    }

    pub fn eval_config(&self, interval: u32, data_offset: i64) -> Result<EvalConfig> {
        Ok(EvalConfig {
            tolerances: self.tolerances.clone(),
            methods: self.methods.clone(),
            min_training_days: self.min_training_days,
            train: self.train_config(interval, data_offset)?,
            svr: self.svr.clone(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_from_empty_text() {
        let cfg = RunConfig::parse("# nothing\n\n").unwrap();
        assert_eq!(cfg, RunConfig::default());
        assert_eq!(cfg.train.dtw_threshold, 95.0);
        assert_eq!(cfg.train.pcc_threshold, 0.7);
    }

    #[test]
    fn parses_every_knob() {
        let text = "method = stl\nperiod = 96\nroom = 25x20x12\nmax_degree = 2\n\
                    pcc_threshold = 0.6\ndtw_threshold = 90 # looser\nmotif_bounds = 0.9, 1.1\n\
                    stl_seasonal_span = 9\nzpa = off\nutc_offset = +10:00\nhistory_cycles = 3\n\
                    tolerances = 0, 1, 10\nseeds = 1,2,3\nmethods = std, svr\nmin_training_days = 2\n\
                    svr_window = 6\nsvr_epsilon = 0.25\nsvr_c = 2\nsvr_epochs = 10\nsvr_learning_rate = 0.1\n\
                    interval = 180\nmax_gap = 4\n";
        let cfg = RunConfig::parse(text).unwrap();
        assert_eq!(cfg.train.method, Method::Stl);
        assert_eq!(cfg.train.period, Some(96));
        assert_eq!(cfg.lag_policy(180).unwrap(), LagPolicy::Search { max: 20 });
        assert_eq!(cfg.train.motif_bounds, (0.9, 1.1));
        assert!(!cfg.train.zpa);
        assert_eq!(cfg.train_config(180, 0).unwrap().utc_offset, 36_000);
        assert_eq!(cfg.ingest.default_offset, 36_000);
        assert_eq!(cfg.tolerances, vec![0.0, 1.0, 10.0]);
        assert_eq!(cfg.seeds, vec![1, 2, 3]);
        assert_eq!(cfg.methods, vec![EvalMethod::Std, EvalMethod::Svr]);
        assert_eq!(cfg.svr.window, 6);
        assert_eq!(cfg.ingest.interval, Some(180));
        assert_eq!(cfg.eval_config(180, 0).unwrap().min_training_days, 2);

        let plain = RunConfig::default();
        assert_eq!(plain.train_config(300, -7200).unwrap().utc_offset, -7200);

        let fixed = RunConfig::parse("lag = 5").unwrap();
        assert_eq!(fixed.lag_policy(300).unwrap(), LagPolicy::Fixed(5));
        let max = RunConfig::parse("lag_max = 7").unwrap();
        assert_eq!(max.lag_policy(300).unwrap(), LagPolicy::Search { max: 7 });
    }

    #[test]
    fn errors_carry_line_numbers() {
        let line = |t: &str| match RunConfig::parse(t) {
            Err(Error::Config { line, .. }) => line,
            other => panic!("expected a config error, got {other:?}"),
        };
        assert_eq!(line("method = std\ncolour = blue\n"), 2);
        assert_eq!(line("\n\nperiod = many\n"), 3);
        assert_eq!(line("just words"), 1);
        assert_eq!(line("method = arima"), 1);
        assert_eq!(line("room = 3x4"), 1);
        assert_eq!(line("utc_offset = +25:00"), 1);
        assert!(RunConfig::parse("tolerances = -1").is_err());
        assert!(RunConfig::parse("pcc_threshold = 2").is_err());
    }

    #[test]
    fn offsets() {
        assert_eq!(parse_utc_offset("+10:00"), Some(36_000));
        assert_eq!(parse_utc_offset("-03:30"), Some(-12_600));
        assert_eq!(parse_utc_offset("3600"), Some(3600));
        assert_eq!(parse_utc_offset("10:00"), None);
    }
}
