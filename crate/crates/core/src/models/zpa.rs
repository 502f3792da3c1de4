//! Zero pattern adjustment: the nightly interval during which the room was
//! empty on every observed day.

use crate::error::{Error, Result};
use crate::series::{SampledSeries, Timestamp};

pub const SECONDS_PER_DAY: i64 = 86_400;
const NIGHT_START: i64 = 20 * 3600;
const NIGHT_END: i64 = 8 * 3600;

/// Daily interval `[start, end)` in seconds since local midnight. The
/// interval wraps past midnight when `end <= start`; `start == end` covers
/// the whole day.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VacantWindow {
    pub start: i64,
    pub end: i64,
    pub min_days_observed: usize,
}

impl VacantWindow {
    pub fn is_full_day(&self) -> bool {
        self.start == self.end
    }

    pub fn duration(&self) -> i64 {
        if self.is_full_day() {
            SECONDS_PER_DAY
        } else {
            (self.end - self.start).rem_euclid(SECONDS_PER_DAY)
        }
    }

    /// Whether a time of day (seconds since local midnight) is inside.
    pub fn contains(&self, tod: i64) -> bool {
        let tod = tod.rem_euclid(SECONDS_PER_DAY);
        if self.is_full_day() {
            true
        } else if self.start < self.end {
            (self.start..self.end).contains(&tod)
        } else {
            tod >= self.start || tod < self.end
        }
    }

    pub fn contains_time(&self, t: Timestamp, utc_offset: i64) -> bool {
        self.contains(local_time_of_day(t, utc_offset))
    }
}

pub fn local_time_of_day(t: Timestamp, utc_offset: i64) -> i64 {
    (t + utc_offset).rem_euclid(SECONDS_PER_DAY)
}

fn intersects_night(start_slot: usize, len: usize, slot_secs: i64, n_slots: usize) -> bool {
    (0..len).any(|k| {
        let tod = ((start_slot + k) % n_slots) as i64 * slot_secs;
        !(NIGHT_END..NIGHT_START).contains(&tod)
    })
}

/// Overlays every day of the history on one time-of-day axis (slots of one
/// sampling interval) and returns the longest circular run of slots that
/// were empty on every observed day and that reaches into the night
/// (20:00 to 08:00).
pub fn learn_zpa(occupancy: &SampledSeries, utc_offset: i64) -> Result<VacantWindow> {
    let interval = occupancy.interval() as i64;
    let span = occupancy.len() as i64 * interval;
    if span < 2 * SECONDS_PER_DAY {
        return Err(Error::InsufficientHistory(format!(
            "vacancy learning needs 2 days of occupancy, got {:.2}",
            span as f64 / SECONDS_PER_DAY as f64
        )));
    }
    let n_slots = (SECONDS_PER_DAY / interval).max(1) as usize;
    let slot_secs = SECONDS_PER_DAY / n_slots as i64;
    let mut observed = vec![0usize; n_slots];
    let mut vacant = vec![true; n_slots];
    for (t, v) in occupancy.timestamps().zip(occupancy.values()) {
        let slot = (local_time_of_day(t, utc_offset) / slot_secs).min(n_slots as i64 - 1) as usize;
        observed[slot] += 1;
        if *v != 0.0 {
            vacant[slot] = false;
        }
    }
    for (v, n) in vacant.iter_mut().zip(&observed) {
        if *n == 0 {
            *v = false;
        }
    }
    let min_days =
        |slots: &mut dyn Iterator<Item = usize>| slots.map(|s| observed[s]).min().unwrap_or(0);
    if vacant.iter().all(|&v| v) {
        return Ok(VacantWindow {
            start: 0,
            end: 0,
            min_days_observed: min_days(&mut (0..n_slots)),
        });
    }
    // runs start right after an occupied slot, so none is split at midnight
    let mut best: Option<(usize, usize)> = None;
    for s in 0..n_slots {
        let prev = (s + n_slots - 1) % n_slots;
        if !vacant[s] || vacant[prev] {
            continue;
        }
        let len = (0..n_slots)
            .take_while(|k| vacant[(s + k) % n_slots])
            .count();
        if intersects_night(s, len, slot_secs, n_slots) && best.is_none_or(|(_, l)| len > l) {
            best = Some((s, len));
        }
    }
    let (s, len) = best.ok_or(Error::NoVacantWindow)?;
    Ok(VacantWindow {
        start: s as i64 * slot_secs,
        end: ((s + len) % n_slots) as i64 * slot_secs,
        min_days_observed: min_days(&mut (0..len).map(|k| (s + k) % n_slots)),
    })
}
