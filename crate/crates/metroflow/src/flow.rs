//! Binned transfer-flow series.
//!
//! A [`FlowSeries`] holds one station's transfer counts on a fixed grid:
//! the same clock-time window each service day, divided into equal bins
//! (default 5 minutes over 05:00-24:00, 228 bins per day). Days are stored
//! concatenated in date order; there are no overnight bins.

use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::Path;

use chrono::{NaiveDate, NaiveDateTime};
use serde::{Deserialize, Serialize};

use crate::calendar::{Calendar, DayWindow, Scenario};
use crate::error::{Error, Result};
use crate::network::TransferEvent;

pub const DEFAULT_INTERVAL_SECS: u32 = 300;

pub fn default_day_window() -> DayWindow {
    "05:00-24:00".parse().expect("static window")
}

/// Evenly binned per-day counts for one station.
///
/// `counts.len() == dates.len() * samples_per_day()` always holds; dates are
/// strictly increasing but need not be contiguous (scenario subsets are not).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowSeries {
    pub station: String,
    pub interval_secs: u32,
    pub day_window: DayWindow,
    pub scenario: Scenario,
    pub dates: Vec<NaiveDate>,
    pub counts: Vec<u64>,
}

impl FlowSeries {
    pub fn new(
        station: String,
        interval_secs: u32,
        day_window: DayWindow,
        scenario: Scenario,
        dates: Vec<NaiveDate>,
        counts: Vec<u64>,
    ) -> Result<Self> {
        let s = FlowSeries {
            station,
            interval_secs,
            day_window,
            scenario,
            dates,
            counts,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        let spd = self.day_window.bins(self.interval_secs)?;
        if !self.dates.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::Input("series dates are not strictly increasing".into()));
        }
        if self.counts.len() != self.dates.len() * spd {
            return Err(Error::Input(format!(
                "series has {} values, expected {} ({} days x {} bins)",
                self.counts.len(),
                self.dates.len() * spd,
                self.dates.len(),
                spd
            )));
        }
        Ok(())
    }

    /// Bins per day; the day window divides exactly by construction.
    pub fn samples_per_day(&self) -> usize {
        self.day_window
            .bins(self.interval_secs)
            .expect("validated series")
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    /// Timestamp of the start of bin `i`.
    pub fn timestamp_at(&self, i: usize) -> NaiveDateTime {
        let spd = self.samples_per_day();
        let (day, slot) = (i / spd, i % spd);
        self.day_window
            .slot_start(self.dates[day], slot, self.interval_secs)
    }

    pub fn timestamps(&self) -> Vec<NaiveDateTime> {
        (0..self.len()).map(|i| self.timestamp_at(i)).collect()
    }

    pub fn values_f64(&self) -> Vec<f64> {
        self.counts.iter().map(|&c| c as f64).collect()
    }

    /// The same series on a full 00:00–24:00 grid, with zero-count bins
    /// filling the closed overnight span of each day. An alternative to
    /// plain day concatenation when a decomposition should see the daily
    /// gap explicitly; a full-day series comes back unchanged.
    ///
    /// The overnight spans on both sides of the window must be whole
    /// multiples of the bin width.
    pub fn pad_overnight(&self) -> Result<FlowSeries> {
        let start = self.day_window.start_sec();
        let end = self.day_window.end_sec();
        if start == 0 && end == 86_400 {
            return Ok(self.clone());
        }
        if start % self.interval_secs != 0 || (86_400 - end) % self.interval_secs != 0 {
            return Err(Error::Config(format!(
                "cannot pad: the overnight spans around {} are not whole {}s bins",
                self.day_window, self.interval_secs
            )));
        }
        let pre = (start / self.interval_secs) as usize;
        let post = ((86_400 - end) / self.interval_secs) as usize;
        let spd = self.samples_per_day();
        let mut counts = Vec::with_capacity(self.dates.len() * (pre + spd + post));
        for day in 0..self.dates.len() {
            counts.extend(std::iter::repeat(0).take(pre));
            counts.extend_from_slice(&self.counts[day * spd..(day + 1) * spd]);
            counts.extend(std::iter::repeat(0).take(post));
        }
        FlowSeries::new(
            self.station.clone(),
            self.interval_secs,
            DayWindow::new(0, 86_400)?,
            self.scenario,
            self.dates.clone(),
            counts,
        )
    }

    /// Sub-series covering `day_range` (day indices, not bin indices).
    pub fn slice_days(&self, day_range: std::ops::Range<usize>) -> FlowSeries {
        let spd = self.samples_per_day();
        FlowSeries {
            station: self.station.clone(),
            interval_secs: self.interval_secs,
            day_window: self.day_window,
            scenario: self.scenario,
            dates: self.dates[day_range.clone()].to_vec(),
            counts: self.counts[day_range.start * spd..day_range.end * spd].to_vec(),
        }
    }

    /// Two-column output: bin start timestamp and count.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(writer);
        wtr.write_record(["timestamp", "count"])?;
        for (i, &c) in self.counts.iter().enumerate() {
            wtr.write_record([
                self.timestamp_at(i).format("%Y-%m-%d %H:%M:%S").to_string(),
                c.to_string(),
            ])?;
        }
        wtr.flush()?;
        Ok(())
    }

    /// Reads the two-column form back, validating against `meta`.
    pub fn read_csv<R: Read>(reader: R, meta: &FlowSeriesMeta) -> Result<FlowSeries> {
        let mut rdr = csv::Reader::from_reader(reader);
        let mut counts = Vec::new();
        for rec in rdr.records() {
            let rec = rec?;
            if rec.len() != 2 {
                return Err(Error::Input(format!(
                    "series row has {} fields, expected 2",
                    rec.len()
                )));
            }
            let c: u64 = rec[1]
                .trim()
                .parse()
                .map_err(|_| Error::Input(format!("bad count `{}`", &rec[1])))?;
            counts.push(c);
        }
        FlowSeries::new(
            meta.station.clone(),
            meta.interval_secs,
            meta.day_window,
            meta.scenario,
            meta.dates.clone(),
            counts,
        )
    }

    pub fn meta(&self) -> FlowSeriesMeta {
        FlowSeriesMeta {
            station: self.station.clone(),
            interval_secs: self.interval_secs,
            day_window: self.day_window,
            scenario: self.scenario,
            dates: self.dates.clone(),
        }
    }

    /// Writes `<path>` (CSV) and `<path>.meta.json` (sidecar).
    pub fn save(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path)?;
        self.write_csv(file)?;
        let meta = std::fs::File::create(sidecar_path(path))?;
        serde_json::to_writer_pretty(meta, &self.meta())?;
        Ok(())
    }

    /// Loads a CSV plus its `.meta.json` sidecar.
    pub fn load(path: &Path) -> Result<FlowSeries> {
        let meta_file = std::fs::File::open(sidecar_path(path)).map_err(|e| {
            Error::Input(format!(
                "cannot open series sidecar {}: {e}",
                sidecar_path(path).display()
            ))
        })?;
        let meta: FlowSeriesMeta = serde_json::from_reader(meta_file)?;
        let file = std::fs::File::open(path)?;
        FlowSeries::read_csv(file, &meta)
    }
}

pub fn sidecar_path(path: &Path) -> std::path::PathBuf {
    let mut s = path.as_os_str().to_os_string();
    s.push(".meta.json");
    std::path::PathBuf::from(s)
}

/// Sidecar metadata stored next to a series CSV.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlowSeriesMeta {
    pub station: String,
    pub interval_secs: u32,
    pub day_window: DayWindow,
    pub scenario: Scenario,
    pub dates: Vec<NaiveDate>,
}

/// Where aggregated events landed: in a bin, at another station, or outside
/// the date/window grid.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AggregationReport {
    pub binned: usize,
    pub other_station: usize,
    pub out_of_window: usize,
}

/// Buckets `station`'s transfer events into left-closed right-open bins over
/// the given dates. Every event is either binned, at another station, or
/// tallied out-of-window; nothing is silently dropped. No events at all
/// still produce the full-length all-zero grid.
pub fn aggregate(
    events: &[TransferEvent],
    station: &str,
    interval_secs: u32,
    day_window: DayWindow,
    dates: &[NaiveDate],
) -> Result<(FlowSeries, AggregationReport)> {
    let spd = day_window.bins(interval_secs)?;
    if dates.is_empty() {
        return Err(Error::Parameter("aggregate needs at least one date".into()));
    }
    if !dates.windows(2).all(|w| w[0] < w[1]) {
        return Err(Error::Parameter("aggregate dates must be strictly increasing".into()));
    }
    let day_index: BTreeMap<NaiveDate, usize> =
        dates.iter().enumerate().map(|(i, &d)| (d, i)).collect();
    let mut counts = vec![0u64; dates.len() * spd];
    let mut report = AggregationReport::default();
    for ev in events {
        if ev.station != station {
            report.other_station += 1;
            continue;
        }
        let day = day_index.get(&ev.time.date());
        let slot = day_window.slot_of(ev.time.time(), interval_secs);
        match (day, slot) {
            (Some(&d), Some(s)) => {
                counts[d * spd + s] += 1;
                report.binned += 1;
            }
            _ => report.out_of_window += 1,
        }
    }
    let series = FlowSeries::new(
        station.to_string(),
        interval_secs,
        day_window,
        Scenario::All,
        dates.to_vec(),
        counts,
    )?;
    Ok((series, report))
}

/// Splits a series into the three day-class scenarios. Every input day goes
/// to exactly one output; bin values are moved, never recomputed.
pub fn split_scenarios(
    series: &FlowSeries,
    calendar: &Calendar,
) -> Result<BTreeMap<Scenario, FlowSeries>> {
    let spd = series.samples_per_day();
    let mut dates: BTreeMap<Scenario, Vec<NaiveDate>> =
        Scenario::SPLIT.iter().map(|&s| (s, Vec::new())).collect();
    let mut counts: BTreeMap<Scenario, Vec<u64>> =
        Scenario::SPLIT.iter().map(|&s| (s, Vec::new())).collect();
    for (i, &date) in series.dates.iter().enumerate() {
        let scenario = Scenario::of_class(calendar.classify(date)?);
        dates.get_mut(&scenario).unwrap().push(date);
        counts
            .get_mut(&scenario)
            .unwrap()
            .extend_from_slice(&series.counts[i * spd..(i + 1) * spd]);
    }
    let mut out = BTreeMap::new();
    for scenario in Scenario::SPLIT {
        let series = FlowSeries::new(
            series.station.clone(),
            series.interval_secs,
            series.day_window,
            scenario,
            dates.remove(&scenario).unwrap(),
            counts.remove(&scenario).unwrap(),
        )?;
        out.insert(scenario, series);
    }
    Ok(out)
}

/// Bin-wise mean over the same clock-time range on up to `lookback_weeks`
/// most recent same-weekday dates strictly before `target_date`.
///
/// Works on any value slice laid out like a series (used for decomposition
/// components as well as raw counts).
pub fn same_period_average_values(
    dates: &[NaiveDate],
    samples_per_day: usize,
    values: &[f64],
    day_window: DayWindow,
    interval_secs: u32,
    target_date: NaiveDate,
    range: DayWindow,
    lookback_weeks: usize,
) -> Result<Vec<f64>> {
    use chrono::Datelike;
    if lookback_weeks == 0 {
        return Err(Error::Parameter("lookback_weeks must be at least 1".into()));
    }
    if range.start_sec() < day_window.start_sec()
        || range.end_sec() > day_window.end_sec()
        || (range.start_sec() - day_window.start_sec()) % interval_secs != 0
        || range.len_secs() % interval_secs != 0
    {
        return Err(Error::Parameter(format!(
            "range {range} does not align to {interval_secs}s bins inside window {day_window}"
        )));
    }
    let first = ((range.start_sec() - day_window.start_sec()) / interval_secs) as usize;
    let nbins = (range.len_secs() / interval_secs) as usize;
    let mut prior: Vec<usize> = dates
        .iter()
        .enumerate()
        .filter(|(_, &d)| d < target_date && d.weekday() == target_date.weekday())
        .map(|(i, _)| i)
        .collect();
    if prior.is_empty() {
        return Err(Error::InsufficientData(format!(
            "no {:?} before {target_date} in the series",
            target_date.weekday()
        )));
    }
    prior = prior.split_off(prior.len().saturating_sub(lookback_weeks));
    let mut sums = vec![0.0f64; nbins];
    for &day in &prior {
        let base = day * samples_per_day + first;
        for (k, s) in sums.iter_mut().enumerate() {
            *s += values[base + k];
        }
    }
    let n = prior.len() as f64;
    Ok(sums.into_iter().map(|s| s / n).collect())
}

/// [`same_period_average_values`] on a series' own counts.
pub fn same_period_average(
    history: &FlowSeries,
    target_date: NaiveDate,
    range: DayWindow,
    lookback_weeks: usize,
) -> Result<Vec<f64>> {
    same_period_average_values(
        &history.dates,
        history.samples_per_day(),
        &history.values_f64(),
        history.day_window,
        history.interval_secs,
        target_date,
        range,
        lookback_weeks,
    )
}
