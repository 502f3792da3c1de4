//! Plain-text model files. The first line names the format and version,
//! followed by `[section]` blocks of `key = value` lines. Reals are
//! written in shortest round-trip form, so a saved model reloads
//! bit-identically.

use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use crate::decomp::{DecompConfig, StdParams, StlParams};
use crate::error::{Error, Result};
use crate::models::{PolyModel, SeasonalMap, TrendModel, VacantWindow};
use crate::predictor::OccupancyModel;
use crate::series::{SampledSeries, Unit};
use crate::svr::SvrModel;

pub const MAGIC: &str = "cdhoc-model";
pub const FORMAT_VERSION: u32 = 1;

/// Either kind of trained model a file can hold.
#[derive(Debug, Clone, PartialEq)]
pub enum SavedModel {
    Occupancy(Box<OccupancyModel>),
    Svr(SvrModel),
}

fn reals(v: &[f64]) -> String {
    v.iter()
        .map(|x| format!("{x:?}"))
        .collect::<Vec<_>>()
        .join(" ")
}

fn flags(v: &[bool]) -> String {
    v.iter()
        .map(|b| if *b { "1" } else { "0" })
        .collect::<Vec<_>>()
        .join(" ")
}

struct Writer(String);

impl Writer {
    fn section(&mut self, name: &str) {
        let _ = write!(self.0, "\n[{name}]\n");
    }

    fn kv(&mut self, key: &str, value: impl std::fmt::Display) {
        let _ = writeln!(self.0, "{key} = {value}");
    }

    fn real(&mut self, key: &str, value: f64) {
        let _ = writeln!(self.0, "{key} = {value:?}");
    }

    fn poly(&mut self, p: &PolyModel) {
        self.kv("degree", p.degree);
        self.kv("coefficients", reals(&p.coefficients));
        self.kv("active", flags(&p.active));
        self.real("residual_offset", p.residual_offset);
        self.real("aic", p.aic);
    }
}

pub fn occupancy_model_to_string(m: &OccupancyModel) -> String {
    let mut w = Writer(format!("{MAGIC} {FORMAT_VERSION}\nkind = occupancy\n"));
    w.section("model");
    w.kv("interval", m.interval);
    w.kv("lag", m.lag);
    w.kv("utc_offset", m.utc_offset);
    w.kv("training_start", m.training_range.0);
    w.kv("training_end", m.training_range.1);

    w.section("decomposition");
    match &m.decomp {
        DecompConfig::Std(p) => {
            w.kv("method", "std");
            w.kv("period", p.period);
            w.kv("henderson_terms", p.henderson_terms);
            w.real("sigma_lower", p.sigma_limits.0);
            w.real("sigma_upper", p.sigma_limits.1);
        }
        DecompConfig::Stl(p) => {
            w.kv("method", "stl");
            w.kv("period", p.period);
            w.kv("seasonal_span", p.seasonal_span);
            w.kv("trend_span", p.trend_span);
            w.kv("lowpass_span", p.lowpass_span);
            w.kv("inner_iterations", p.inner_iterations);
            w.kv("outer_iterations", p.outer_iterations);
            w.kv("loess_degree", p.loess_degree);
        }
    }

    w.section("trend");
    w.real("pcc", m.trend.pcc);
    w.kv("weakly_validated", m.trend.weakly_validated);
    w.poly(&m.trend.poly);

    w.section("seasonal");
    w.kv("anchor", m.seasonal.anchor);
    w.kv("interval", m.seasonal.interval);
    w.kv("motif", reals(&m.seasonal.occupancy_motif));

    w.section("irregular");
    w.poly(&m.irregular);

    if let Some(z) = &m.zpa {
        w.section("zpa");
        w.kv("start", z.start);
        w.kv("end", z.end);
        w.kv("min_days_observed", z.min_days_observed);
    }

    w.section("history");
    w.kv("start", m.history.start());
    w.kv("interval", m.history.interval());
    w.kv("values", reals(m.history.values()));

    if !m.warnings.is_empty() {
        w.section("warnings");
        for msg in &m.warnings {
            w.kv("warning", msg.replace('\n', " "));
        }
    }
    w.0
}

pub fn svr_model_to_string(m: &SvrModel) -> String {
    let mut w = Writer(format!("{MAGIC} {FORMAT_VERSION}\nkind = svr\n"));
    w.section("svr");
    w.kv("lag", m.lag);
    w.kv("window", m.window);
    w.real("epsilon", m.epsilon);
    w.real("c", m.c);
    w.real("bias", m.bias);
    w.kv("weights", reals(&m.weights));
    w.kv("means", reals(&m.means));
    w.kv("stds", reals(&m.stds));
    w.kv("objective_trace", reals(&m.objective_trace));
    w.0
}

struct Entry {
    key: String,
    value: String,
    line: usize,
}

struct Section {
    name: String,
    line: usize,
    entries: Vec<Entry>,
}

fn fail<T>(line: usize, msg: impl Into<String>) -> Result<T> {
    Err(Error::ModelFormat {
        line,
        msg: msg.into(),
    })
}

impl Section {
    fn entry(&self, key: &str) -> Result<&Entry> {
        self.entries.iter().find(|e| e.key == key).map_or_else(
            || fail(self.line, format!("[{}] is missing '{key}'", self.name)),
            Ok,
        )
    }

    fn get<T: FromStr>(&self, key: &str) -> Result<T> {
        let e = self.entry(key)?;
        e.value
            .parse()
            .or_else(|_| fail(e.line, format!("bad value '{}' for '{key}'", e.value)))
    }

    fn list<T: FromStr>(&self, key: &str) -> Result<Vec<T>> {
        let e = self.entry(key)?;
        e.value
            .split_whitespace()
            .map(|v| {
                v.parse()
                    .or_else(|_| fail(e.line, format!("bad element '{v}' in '{key}'")))
            })
            .collect()
    }

    fn poly(&self) -> Result<PolyModel> {
        let degree: usize = self.get("degree")?;
        let coefficients: Vec<f64> = self.list("coefficients")?;
        let active: Vec<bool> = self
            .list::<u8>("active")?
            .into_iter()
            .map(|f| f == 1)
            .collect();
        if coefficients.len() != degree + 1 || active.len() != degree + 1 {
            return fail(
                self.line,
                format!(
                    "[{}] needs {} coefficients and flags",
                    self.name,
                    degree + 1
                ),
            );
        }
        Ok(PolyModel {
            coefficients,
            active,
            residual_offset: self.get("residual_offset")?,
            degree,
            aic: self.get("aic")?,
        })
    }
}

struct Document {
    kind: String,
    kind_line: usize,
    sections: Vec<Section>,
}

impl Document {
    fn section(&self, name: &str) -> Result<&Section> {
        self.sections
            .iter()
            .find(|s| s.name == name)
            .map_or_else(|| fail(0, format!("missing section [{name}]")), Ok)
    }

    fn optional(&self, name: &str) -> Option<&Section> {
        self.sections.iter().find(|s| s.name == name)
    }
}

fn parse_document(text: &str) -> Result<Document> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim()));
    match lines.next() {
        Some((_, first)) => {
            let mut parts = first.split_whitespace();
            if parts.next() != Some(MAGIC) {
                return fail(1, format!("expected '{MAGIC} <version>' header"));
            }
            match parts.next().map(u32::from_str) {
                Some(Ok(FORMAT_VERSION)) => {}
                Some(Ok(v)) => return fail(1, format!("unsupported format version {v}")),
                _ => return fail(1, "missing format version"),
            }
        }
        None => return fail(1, "empty model file"),
    }
    let mut kind = None;
    let mut sections: Vec<Section> = Vec::new();
    for (line, text) in lines {
        if text.is_empty() || text.starts_with('#') {
            continue;
        }
        if let Some(name) = text.strip_prefix('[').and_then(|t| t.strip_suffix(']')) {
            sections.push(Section {
                name: name.trim().to_string(),
                line,
                entries: Vec::new(),
            });
            continue;
        }
        let Some((key, value)) = text.split_once('=') else {
            return fail(line, format!("expected 'key = value', got '{text}'"));
        };
        let entry = Entry {
            key: key.trim().to_string(),
            value: value.trim().to_string(),
            line,
        };
        match sections.last_mut() {
            Some(s) => s.entries.push(entry),
            None if entry.key == "kind" => kind = Some((entry.value, line)),
            None => return fail(line, format!("'{}' appears before any section", entry.key)),
        }
    }
    let (kind, kind_line) = kind.ok_or(Error::ModelFormat {
        line: 2,
        msg: "missing 'kind'".into(),
    })?;
    Ok(Document {
        kind,
        kind_line,
        sections,
    })
}

fn occupancy_from(doc: &Document) -> Result<OccupancyModel> {
    let model = doc.section("model")?;
    let dec = doc.section("decomposition")?;
    let period: usize = dec.get("period")?;
    let decomp = match dec.get::<String>("method")?.as_str() {
        "std" => DecompConfig::Std(StdParams {
            period,
            henderson_terms: dec.get("henderson_terms")?,
            sigma_limits: (dec.get("sigma_lower")?, dec.get("sigma_upper")?),
        }),
        "stl" => DecompConfig::Stl(StlParams {
            period,
            seasonal_span: dec.get("seasonal_span")?,
            trend_span: dec.get("trend_span")?,
            lowpass_span: dec.get("lowpass_span")?,
            inner_iterations: dec.get("inner_iterations")?,
            outer_iterations: dec.get("outer_iterations")?,
            loess_degree: dec.get("loess_degree")?,
        }),
        other => {
            return fail(
                dec.entry("method")?.line,
                format!("unknown method '{other}'"),
            )
        }
    };

    let trend = doc.section("trend")?;
    let seasonal = doc.section("seasonal")?;
    let motif: Vec<f64> = seasonal.list("motif")?;
    if motif.is_empty() {
        return fail(seasonal.line, "seasonal motif is empty");
    }
    let zpa = match doc.optional("zpa") {
        Some(z) => Some(VacantWindow {
            start: z.get("start")?,
            end: z.get("end")?,
            min_days_observed: z.get("min_days_observed")?,
        }),
        None => None,
    };
    let hist = doc.section("history")?;
    let history = SampledSeries::new(
        hist.get("start")?,
        hist.get("interval")?,
        hist.list("values")?,
        Unit::Ppm,
    )
    .or_else(|e| fail(hist.line, format!("invalid history: {e}")))?;
    let warnings = doc
        .optional("warnings")
        .map(|s| s.entries.iter().map(|e| e.value.clone()).collect())
        .unwrap_or_default();
    Ok(OccupancyModel {
        decomp,
        interval: model.get("interval")?,
        lag: model.get("lag")?,
        trend: TrendModel {
            poly: trend.poly()?,
            pcc: trend.get("pcc")?,
            weakly_validated: trend.get("weakly_validated")?,
        },
        seasonal: SeasonalMap {
            occupancy_motif: motif,
            anchor: seasonal.get("anchor")?,
            interval: seasonal.get("interval")?,
        },
        irregular: doc.section("irregular")?.poly()?,
        zpa,
        utc_offset: model.get("utc_offset")?,
        training_range: (model.get("training_start")?, model.get("training_end")?),
        history,
        warnings,
    })
}

fn svr_from(doc: &Document) -> Result<SvrModel> {
    let s = doc.section("svr")?;
    let m = SvrModel {
        weights: s.list("weights")?,
        bias: s.get("bias")?,
        epsilon: s.get("epsilon")?,
        c: s.get("c")?,
        lag: s.get("lag")?,
        window: s.get("window")?,
        means: s.list("means")?,
        stds: s.list("stds")?,
        objective_trace: s.list("objective_trace")?,
    };
    if m.weights.len() != m.window || m.means.len() != m.window || m.stds.len() != m.window {
        return fail(
            s.line,
            "weights, means and stds must each have 'window' entries",
        );
    }
    Ok(m)
}

pub fn parse_model(text: &str) -> Result<SavedModel> {
    let doc = parse_document(text)?;
    match doc.kind.as_str() {
        "occupancy" => Ok(SavedModel::Occupancy(Box::new(occupancy_from(&doc)?))),
        "svr" => Ok(SavedModel::Svr(svr_from(&doc)?)),
        other => fail(doc.kind_line, format!("unknown model kind '{other}'")),
    }
}

pub fn save_model(path: impl AsRef<Path>, model: &SavedModel) -> Result<()> {
    let text = match model {
        SavedModel::Occupancy(m) => occupancy_model_to_string(m),
        SavedModel::Svr(m) => svr_model_to_string(m),
    };
    std::fs::write(path, text)?;
    Ok(())
}

pub fn load_model(path: impl AsRef<Path>) -> Result<SavedModel> {
    parse_model(&std::fs::read_to_string(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decomp::Method;

    fn poly(coefficients: Vec<f64>) -> PolyModel {
        PolyModel {
            active: coefficients.iter().map(|c| *c != 0.0).collect(),
            degree: coefficients.len() - 1,
            coefficients,
            residual_offset: 1e-17,
            aic: -123.456_789_012_345_67,
        }
    }

    fn model(method: Method) -> OccupancyModel {
        OccupancyModel {
            decomp: DecompConfig::for_method(method, 4),
            interval: 300,
            lag: 2,
            trend: TrendModel {
                poly: poly(vec![0.1 + 0.2, 0.0, 3.0e-7]),
                pcc: 0.912_345_678_901_234_5,
                weakly_validated: false,
            },
            seasonal: SeasonalMap {
                occupancy_motif: vec![-0.5, 1.0 / 3.0, 2.0, f64::MIN_POSITIVE],
                anchor: 1_431_871_200,
                interval: 300,
            },
            irregular: poly(vec![0.0, 0.017]),
            zpa: Some(VacantWindow {
                start: 72_000,
                end: 28_800,
                min_days_observed: 7,
            }),
            utc_offset: 36_000,
            training_range: (1_431_871_200, 1_432_476_000),
            history: SampledSeries::new(
                1_432_474_800,
                300,
                vec![410.0, 415.5, 1e-3, 2.0f64.sqrt()],
                Unit::Ppm,
            )
            .unwrap(),
            warnings: vec!["trend correlation low".into()],
        }
    }

    #[test]
    fn occupancy_round_trip_is_exact() {
        for method in [Method::Std, Method::Stl] {
            let m = model(method);
            let text = occupancy_model_to_string(&m);
            assert!(text.starts_with("cdhoc-model 1\nkind = occupancy\n"));
            match parse_model(&text).unwrap() {
                SavedModel::Occupancy(back) => assert_eq!(*back, m),
                other => panic!("wrong kind {other:?}"),
            }
        }
        let mut no_zpa = model(Method::Std);
        no_zpa.zpa = None;
        no_zpa.warnings.clear();
        let text = occupancy_model_to_string(&no_zpa);
        assert!(!text.contains("[zpa]"));
        assert_eq!(
            parse_model(&text).unwrap(),
            SavedModel::Occupancy(Box::new(no_zpa))
        );
    }

    #[test]
    fn svr_round_trip_is_exact() {
        let m = SvrModel {
            weights: vec![0.1, -2.5e-9, 3.0, 1.0 / 7.0],
            bias: 0.7,
            epsilon: 0.5,
            c: 1.0,
            lag: 3,
            window: 4,
            means: vec![400.0; 4],
            stds: vec![12.25; 4],
            objective_trace: vec![10.0, 9.5],
        };
        let text = svr_model_to_string(&m);
        assert_eq!(parse_model(&text).unwrap(), SavedModel::Svr(m));
    }

    #[test]
    fn rejects_bad_files() {
        let line = |r: Result<SavedModel>| match r {
            Err(Error::ModelFormat { line, .. }) => line,
            other => panic!("expected a format error, got {other:?}"),
        };
        assert_eq!(line(parse_model("")), 1);
        assert_eq!(line(parse_model("cdhoc-model 2\nkind = svr\n")), 1);
        assert_eq!(line(parse_model("something else\n")), 1);
        assert_eq!(line(parse_model("cdhoc-model 1\nkind = forest\n[x]\n")), 2);
        let good = occupancy_model_to_string(&model(Method::Std));
        let broken = good.replace("lag = 2", "lag = two");
        let n = broken.lines().position(|l| l == "lag = two").unwrap() + 1;
        assert_eq!(line(parse_model(&broken)), n);
        let cut = good.replace("[history]", "[past]");
        assert!(matches!(parse_model(&cut), Err(Error::ModelFormat { .. })));
    }
}
