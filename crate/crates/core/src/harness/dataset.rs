//! Dataset CSV files: `timestamp,co2_ppm,occupancy`, the occupancy column
//! being optional for prediction-only data.

use std::io::{Read, Write};
use std::path::Path;

use chrono::{DateTime, FixedOffset, NaiveDateTime, TimeZone};

use crate::error::{Error, Result};
use crate::series::{fill_gaps, AlignedPair, GappySeries, SampledSeries, Timestamp, Unit};

pub const HEADER_CO2: &str = "co2_ppm";
pub const HEADER_OCCUPANCY: &str = "occupancy";

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub co2: SampledSeries,
    pub occupancy: Option<SampledSeries>,
    /// Offset of the first timestamp in the file, seconds east of UTC.
    pub utc_offset: i64,
}

impl Dataset {
    pub fn into_pair(self) -> Result<AlignedPair> {
        let occupancy = self.occupancy.ok_or_else(|| Error::Schema {
            line: 1,
            msg: format!("dataset has no '{HEADER_OCCUPANCY}' column"),
        })?;
        Ok(AlignedPair {
            co2: self.co2,
            occupancy,
            lag_applied: 0,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IngestOptions {
    /// Grid interval in seconds; `None` infers the median spacing.
    pub interval: Option<u32>,
    /// Longest run of empty grid slots that is interpolated.
    pub max_gap: usize,
    /// Offset applied to timestamps written without one.
    pub default_offset: i64,
}

impl Default for IngestOptions {
    fn default() -> Self {
        Self {
            interval: None,
            max_gap: 12,
            default_offset: 0,
        }
    }
}

/// Parses RFC 3339 timestamps, or day-first local times such as
/// `18/05/2015 09:36:53 AM` in the default offset.
pub fn parse_timestamp(text: &str, default_offset: i64) -> Option<(Timestamp, i64)> {
    let text = text.trim();
    if let Ok(t) = DateTime::parse_from_rfc3339(text) {
        return Some((t.timestamp(), t.offset().local_minus_utc() as i64));
    }
    let tz = FixedOffset::east_opt(default_offset as i32)?;
    for fmt in [
        "%d/%m/%Y %I:%M:%S %p",
        "%d/%m/%Y %H:%M:%S",
        "%Y-%m-%dT%H:%M:%S",
        "%Y-%m-%d %H:%M:%S",
    ] {
        if let Ok(naive) = NaiveDateTime::parse_from_str(text, fmt) {
            let t = tz.from_local_datetime(&naive).single()?;
            return Some((t.timestamp(), default_offset));
        }
    }
    None
}

pub fn format_timestamp(t: Timestamp, utc_offset: i64) -> String {
    let tz = FixedOffset::east_opt(utc_offset as i32)
        .unwrap_or(FixedOffset::east_opt(0).expect("zero offset"));
    tz.timestamp_opt(t, 0)
        .single()
        .map(|d| d.format("%Y-%m-%dT%H:%M:%S%:z").to_string())
        .unwrap_or_else(|| t.to_string())
}

struct Row {
    line: usize,
    time: Timestamp,
    co2: f64,
    occupancy: Option<f64>,
}

fn parse_value(field: &str, line: usize, name: &str) -> Result<f64> {
    let v: f64 = field.trim().parse().map_err(|_| Error::Schema {
        line,
        msg: format!("{name} value '{}' is not a number", field.trim()),
    })?;
    if !v.is_finite() {
        return Err(Error::Schema {
            line,
            msg: format!("{name} value is not finite"),
        });
    }
    Ok(v)
}

fn bin(
    rows: &[Row],
    start: Timestamp,
    interval: u32,
    pick: impl Fn(&Row) -> f64,
) -> Vec<Option<f64>> {
    let step = interval as i64;
    let slots = ((rows[rows.len() - 1].time - start) / step + 1) as usize;
    let mut sums = vec![(0.0, 0usize); slots];
    for r in rows {
        let s = &mut sums[((r.time - start) / step) as usize];
        s.0 += pick(r);
        s.1 += 1;
    }
    sums.into_iter()
        .map(|(sum, n)| (n > 0).then(|| sum / n as f64))
        .collect()
}

/// Reads a dataset, bins readings onto a regular grid aligned to the local
/// day (window means) and interpolates short gaps.
pub fn read_dataset<R: Read>(reader: R, opts: &IngestOptions) -> Result<Dataset> {
    let mut csv = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(reader);
    let mut records = csv.records();
    let header = match records.next() {
        Some(h) => h?,
        None => {
            return Err(Error::Schema {
                line: 1,
                msg: "empty file, expected a header".into(),
            })
        }
    };
    let names: Vec<&str> = header.iter().collect();
    let has_occupancy = match names.as_slice() {
        ["timestamp", HEADER_CO2] => false,
        ["timestamp", HEADER_CO2, HEADER_OCCUPANCY] => true,
        _ => {
            return Err(Error::Schema {
                line: 1,
                msg: format!(
                    "header must be 'timestamp,{HEADER_CO2}' or 'timestamp,{HEADER_CO2},{HEADER_OCCUPANCY}', got '{}'",
                    names.join(",")
                ),
            })
        }
    };
    let width = names.len();

    let mut rows: Vec<Row> = Vec::new();
    let mut utc_offset = None;
    for record in records {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        if record.iter().all(|f| f.is_empty()) {
            continue;
        }
        if record.len() != width {
            return Err(Error::Schema {
                line,
                msg: format!("expected {width} fields, found {}", record.len()),
            });
        }
        let (time, offset) =
            parse_timestamp(&record[0], opts.default_offset).ok_or_else(|| Error::Schema {
                line,
                msg: format!("unparseable timestamp '{}'", &record[0]),
            })?;
        utc_offset.get_or_insert(offset);
        let co2 = parse_value(&record[1], line, HEADER_CO2)?;
        let occupancy = if has_occupancy {
            let o = parse_value(&record[2], line, HEADER_OCCUPANCY)?;
            if o < 0.0 {
                return Err(Error::Schema {
                    line,
                    msg: format!("negative occupancy {o}"),
                });
            }
            Some(o)
        } else {
            None
        };
        if let Some(prev) = rows.last() {
            if time == prev.time {
                return Err(Error::Schema {
                    line,
                    msg: format!(
                        "duplicate timestamp '{}' (first seen on line {})",
                        &record[0], prev.line
                    ),
                });
            }
            if time < prev.time {
                return Err(Error::NonMonotone { line });
            }
        }
        rows.push(Row {
            line,
            time,
            co2,
            occupancy,
        });
    }
    if rows.is_empty() {
        return Err(Error::Schema {
            line: 2,
            msg: "no data rows".into(),
        });
    }
    let utc_offset = utc_offset.unwrap_or(opts.default_offset);

    let interval = match opts.interval {
        Some(0) => return Err(Error::InvalidInterval(0)),
        Some(i) => i,
        None => {
            let mut diffs: Vec<i64> = rows.windows(2).map(|w| w[1].time - w[0].time).collect();
            if diffs.is_empty() {
                return Err(Error::InvalidParameter(
                    "a single row cannot determine the sampling interval".into(),
                ));
            }
            diffs.sort_unstable();
            let median = diffs[(diffs.len() - 1) / 2];
            // sensors jitter by a few seconds; snap to whole minutes when possible
            let snapped = if median >= 60 {
                (median as f64 / 60.0).round() as i64 * 60
            } else {
                median
            };
            snapped as u32
        }
    };
    let step = interval as i64;
    let start = (rows[0].time + utc_offset).div_euclid(step) * step - utc_offset;

    let co2 = fill_gaps(
        &GappySeries {
            start,
            interval,
            values: bin(&rows, start, interval, |r| r.co2),
            unit: Unit::Ppm,
        },
        opts.max_gap,
    )?;
    let occupancy = if has_occupancy {
        Some(fill_gaps(
            &GappySeries {
                start,
                interval,
                values: bin(&rows, start, interval, |r| r.occupancy.unwrap_or(0.0)),
                unit: Unit::Persons,
            },
            opts.max_gap,
        )?)
    } else {
        None
    };
    Ok(Dataset {
        co2,
        occupancy,
        utc_offset,
    })
}

pub fn load_dataset(path: impl AsRef<Path>, opts: &IngestOptions) -> Result<Dataset> {
    read_dataset(std::fs::File::open(path)?, opts)
}

pub fn write_dataset<W: Write>(
    writer: W,
    co2: &SampledSeries,
    occupancy: Option<&SampledSeries>,
    utc_offset: i64,
) -> Result<()> {
    if let Some(o) = occupancy {
        if o.interval() != co2.interval() || o.start() != co2.start() || o.len() != co2.len() {
            return Err(Error::InvalidParameter(
                "co2 and occupancy must share start, interval and length".into(),
            ));
        }
    }
    let mut w = csv::Writer::from_writer(writer);
    match occupancy {
        Some(_) => w.write_record(["timestamp", HEADER_CO2, HEADER_OCCUPANCY])?,
        None => w.write_record(["timestamp", HEADER_CO2])?,
    }
    for (i, t) in co2.timestamps().enumerate() {
        let ts = format_timestamp(t, utc_offset);
        let c = co2.values()[i].to_string();
        match occupancy {
            Some(o) => w.write_record([ts, c, o.values()[i].to_string()])?,
            None => w.write_record([ts, c])?,
        }
    }
    w.flush()?;
    Ok(())
}

pub fn save_dataset(
    path: impl AsRef<Path>,
    co2: &SampledSeries,
    occupancy: Option<&SampledSeries>,
    utc_offset: i64,
) -> Result<()> {
    write_dataset(std::fs::File::create(path)?, co2, occupancy, utc_offset)
}
