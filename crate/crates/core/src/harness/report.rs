//! CSV exports for components, lag sweeps, predictions and benchmark
//! reports, plus the aligned text table printed by the command line.

use std::fmt::Write as _;
use std::io::Write;

use crate::decomp::ComponentSet;
use crate::error::{Error, Result};
use crate::harness::dataset::format_timestamp;
use crate::harness::{CellPrediction, EvalReport};
use crate::lag::LagSweep;
use crate::predictor::PredictionResult;
use crate::series::SampledSeries;

pub fn write_components<W: Write>(
    writer: W,
    observed: &SampledSeries,
    components: &ComponentSet,
    utc_offset: i64,
) -> Result<()> {
    if components.len() != observed.len() {
        return Err(Error::InvalidParameter(
            "components and observed series differ in length".into(),
        ));
    }
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["timestamp", "observed", "trend", "seasonal", "irregular"])?;
    for (i, t) in observed.timestamps().enumerate() {
        w.write_record([
            format_timestamp(t, utc_offset),
            observed.values()[i].to_string(),
            components.trend.values()[i].to_string(),
            components.seasonal.values()[i].to_string(),
            components.irregular.values()[i].to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_lag_sweep<W: Write>(writer: W, sweep: &LagSweep, interval: u32) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record([
        "lag",
        "lag_minutes",
        "slope",
        "intercept",
        "nrmse",
        "selected",
    ])?;
    for fit in &sweep.fits {
        w.write_record([
            fit.lag.to_string(),
            (fit.lag as f64 * interval as f64 / 60.0).to_string(),
            fit.slope.to_string(),
            fit.intercept.to_string(),
            fit.nrmse.to_string(),
            (fit.lag == sweep.best_lag).to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_prediction<W: Write>(
    writer: W,
    result: &PredictionResult,
    utc_offset: i64,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record([
        "timestamp",
        "occupancy",
        "trend",
        "seasonal",
        "irregular",
        "vacant",
    ])?;
    let c = &result.components;
    for (i, t) in result.occupancy.timestamps().enumerate() {
        w.write_record([
            format_timestamp(t, utc_offset),
            result.occupancy.values()[i].to_string(),
            c.trend.values()[i].to_string(),
            c.seasonal.values()[i].to_string(),
            c.irregular.values()[i].to_string(),
            result.zpa_mask[i].to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// One timestamped column; with `actual`, a second column of observed
/// values on the same timestamps.
pub fn write_series<W: Write>(
    writer: W,
    name: &str,
    series: &SampledSeries,
    actual: Option<&SampledSeries>,
    utc_offset: i64,
) -> Result<()> {
    if actual.is_some_and(|a| a.len() != series.len() || a.start() != series.start()) {
        return Err(Error::InvalidParameter(
            "actual series must cover the same timestamps".into(),
        ));
    }
    let mut w = csv::Writer::from_writer(writer);
    match actual {
        Some(_) => w.write_record(["timestamp", name, "actual"])?,
        None => w.write_record(["timestamp", name])?,
    }
    for (i, t) in series.timestamps().enumerate() {
        let ts = format_timestamp(t, utc_offset);
        let v = series.values()[i].to_string();
        match actual {
            Some(a) => w.write_record([ts, v, a.values()[i].to_string()])?,
            None => w.write_record([ts, v])?,
        }
    }
    w.flush()?;
    Ok(())
}

impl CellPrediction {
    pub fn write_csv<W: Write>(&self, writer: W, utc_offset: i64) -> Result<()> {
        write_series(
            writer,
            "predicted",
            &self.predicted,
            Some(&self.actual),
            utc_offset,
        )
    }

    pub fn file_name(&self) -> String {
        format!(
            "{}_train{:02}.csv",
            self.method.to_string().to_ascii_lowercase(),
            self.train_days
        )
    }
}

/// Per-split rows followed by one `average` row per method and tolerance.
pub fn write_report<W: Write>(writer: W, report: &EvalReport) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record([
        "train_days",
        "test_days",
        "method",
        "tolerance",
        "accuracy",
        "mae",
        "samples",
    ])?;
    for r in &report.rows {
        w.write_record([
            r.train_days.to_string(),
            r.test_days.to_string(),
            r.method.to_string(),
            r.tolerance.to_string(),
            format!("{:.4}", r.accuracy),
            format!("{:.4}", r.mae),
            r.samples.to_string(),
        ])?;
    }
    for (m, x, avg) in report.averages() {
        w.write_record([
            "average".to_string(),
            String::new(),
            m.to_string(),
            x.to_string(),
            format!("{avg:.4}"),
            String::new(),
            String::new(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Splits down the side, one accuracy column per method and tolerance.
pub fn format_report_table(report: &EvalReport) -> String {
    let columns: Vec<_> = report
        .averages()
        .into_iter()
        .map(|(m, x, _)| (m, x))
        .collect();
    let mut splits: Vec<(usize, usize)> = report
        .rows
        .iter()
        .map(|r| (r.train_days, r.test_days))
        .collect();
    splits.sort_unstable();
    splits.dedup();

    let mut header = vec!["train".to_string(), "test".to_string()];
    header.extend(columns.iter().map(|(m, x)| format!("{m} x={x}")));
    let mut lines = vec![header];
    for (train, test) in &splits {
        let mut line = vec![train.to_string(), test.to_string()];
        for (m, x) in &columns {
            let cell = report
                .rows
                .iter()
                .find(|r| r.train_days == *train && r.method == *m && r.tolerance == *x)
                .map_or("failed".to_string(), |r| format!("{:.2}", r.accuracy));
            line.push(cell);
        }
        lines.push(line);
    }
    let mut avg = vec!["average".to_string(), String::new()];
    avg.extend(
        report
            .averages()
            .into_iter()
            .map(|(_, _, a)| format!("{a:.2}")),
    );
    lines.push(avg);

    let widths: Vec<usize> = (0..lines[0].len())
        .map(|c| lines.iter().map(|l| l[c].len()).max().unwrap_or(0))
        .collect();
    let mut out = String::new();
    for l in &lines {
        let cells: Vec<String> = l
            .iter()
            .zip(&widths)
            .enumerate()
            .map(|(i, (cell, w))| {
                if i < 2 {
                    format!("{cell:<w$}")
                } else {
                    format!("{cell:>w$}")
                }
            })
            .collect();
        let _ = writeln!(out, "{}", cells.join("  ").trim_end());
    }
    for f in &report.failures {
        let _ = writeln!(
            out,
            "failed: {} with {} training days: {}",
            f.method, f.train_days, f.error
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::{EvalMethod, EvalRow};

    fn report() -> EvalReport {
        let row = |t, m, x, a| EvalRow {
            train_days: t,
            test_days: 3 - t,
            method: m,
            tolerance: x,
            accuracy: a,
            mae: 0.5,
            samples: 288,
        };
        EvalReport {
            rows: vec![
                row(1, EvalMethod::Std, 0.0, 90.0),
                row(1, EvalMethod::Svr, 0.0, 80.0),
                row(2, EvalMethod::Std, 0.0, 95.5),
                row(2, EvalMethod::Svr, 0.0, 70.0),
            ],
            ..EvalReport::default()
        }
    }

    #[test]
    fn report_csv_has_rows_and_averages() {
        let mut buf = Vec::new();
        write_report(&mut buf, &report()).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 1 + 4 + 2);
        assert_eq!(lines[1], "1,2,CDHOC-STD,0,90.0000,0.5000,288");
        assert_eq!(lines[5], "average,,CDHOC-STD,0,92.7500,,");
        assert_eq!(lines[6], "average,,SVR,0,75.0000,,");
    }

    #[test]
    fn table_is_aligned() {
        let table = format_report_table(&report());
        let lines: Vec<&str> = table.lines().collect();
        assert_eq!(lines.len(), 4);
        assert!(lines[0].starts_with("train"));
        assert!(lines[3].starts_with("average"));
        assert!(lines[3].ends_with("75.00"));
        assert_eq!(lines[1].len(), lines[2].len());
    }
}
