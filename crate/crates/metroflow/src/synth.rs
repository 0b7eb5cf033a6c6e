//! Seeded synthetic data with exact ground truth.
//!
//! Two generators share one configuration. [`generate_series`] produces a
//! flow series directly, returning the trend/seasonal/noise components and
//! spike positions it used, so every downstream stage has an oracle.
//! [`generate_afc`] produces passenger-level fare-gate records over a small
//! fixture network, returning the true per-station per-bin transfer counts
//! implied by the routes it chose for each passenger.
//!
//! ## Generating model
//!
//! Per bin, with `k` the bin-of-day, `d` the day index and `class` the
//! day's class:
//!
//! - `base(k)`: the hourly `base_rate` profile, linearly interpolated at
//!   the bin's centre and scaled to trips per bin; `s̄` is its mean.
//! - `trend = s̄ · (1 + trend_slope · d)`
//! - `seasonal = base(k) · weekday_multipliers[class] − s̄`
//! - `noise ~ Normal(0, sqrt(max(0, trend + seasonal) · (1 + noise_level)))`
//!   (count-like dispersion: the variance tracks the mean, `noise_level`
//!   adding overdispersion on top)
//! - with probability `outlier_rate` the bin is spiked by a factor drawn
//!   uniformly from [5, 15)
//! - `value = round(max(0, trend + seasonal + noise) · factor)`
//!
//! Each day draws from its own generator stream of the one seed, in a fixed
//! per-bin order (noise, spike test, factor), so generation is deterministic
//! and could proceed day-parallel.

use std::collections::{BTreeMap, BTreeSet};

use chrono::{Duration, NaiveDate, NaiveTime};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::afc::AfcRecord;
use crate::calendar::{Calendar, DayClass, DayWindow, Scenario};
use crate::error::{Error, Result};
use crate::flow::{split_scenarios, FlowSeries};
use crate::network::{
    enumerate_routes, Edge, Itinerary, MetroNetwork, NetworkFile, RouteQuery, Station,
};

/// Stream index of day `d` for series generation.
const SERIES_STREAM_BASE: u64 = 1;
/// Stream index of day `d` for record generation (disjoint from series).
const AFC_STREAM_BASE: u64 = 1_000_000;

// ---------------------------------------------------------------------------
// Fixture network
// ---------------------------------------------------------------------------

/// On-disk form of the bundled fixture network: 3 lines, 15 stations, and
/// exactly 2 transfer hubs (S05 joins L1/L2, S06 joins L1/L3).
///
/// The union of the lines is a tree, so every station pair has exactly one
/// simple route — transfer ground truth is unambiguous by construction.
pub fn fixture_network_file() -> NetworkFile {
    let station = |code: &str, lines: &[&str]| Station {
        code: code.into(),
        name: format!("Station {}", &code[1..]),
        lines: lines.iter().map(|s| s.to_string()).collect(),
    };
    let stations = vec![
        station("S01", &["L1"]),
        station("S02", &["L1"]),
        station("S03", &["L1"]),
        station("S04", &["L1"]),
        station("S05", &["L1", "L2"]),
        station("S06", &["L1", "L3"]),
        station("S07", &["L1"]),
        station("S08", &["L2"]),
        station("S09", &["L2"]),
        station("S10", &["L2"]),
        station("S11", &["L2"]),
        station("S12", &["L2"]),
        station("S13", &["L3"]),
        station("S14", &["L3"]),
        station("S15", &["L3"]),
    ];
    let spans: [(&str, &[&str]); 3] = [
        ("L1", &["S01", "S02", "S03", "S04", "S05", "S06", "S07"]),
        ("L2", &["S08", "S09", "S05", "S10", "S11", "S12"]),
        ("L3", &["S13", "S14", "S06", "S15"]),
    ];
    let distances = [
        1100.0, 950.0, 1200.0, 800.0, 1050.0, 900.0, // L1
        1250.0, 1000.0, 850.0, 1150.0, 950.0, // L2
        1300.0, 1050.0, 900.0, // L3
    ];
    let mut edges = Vec::new();
    let mut di = 0;
    for (line, codes) in spans {
        for w in codes.windows(2) {
            edges.push(Edge {
                a: w[0].into(),
                b: w[1].into(),
                line: line.into(),
                distance_m: distances[di],
            });
            di += 1;
        }
    }
    NetworkFile { stations, edges }
}

/// The validated fixture network.
pub fn fixture_network() -> MetroNetwork {
    let file = fixture_network_file();
    MetroNetwork::new(file.stations, file.edges).expect("static fixture network")
}

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

/// Per-day-class demand scale.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ClassMultipliers {
    pub weekday_excl_fri: f64,
    pub friday: f64,
    pub rest_day: f64,
}

impl Default for ClassMultipliers {
    fn default() -> Self {
        ClassMultipliers {
            weekday_excl_fri: 1.0,
            friday: 1.15,
            rest_day: 0.7,
        }
    }
}

impl ClassMultipliers {
    pub fn get(&self, class: DayClass) -> f64 {
        match class {
            DayClass::WeekdayExclFri => self.weekday_excl_fri,
            DayClass::Friday => self.friday,
            DayClass::RestDay => self.rest_day,
        }
    }

    fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("weekday_excl_fri", self.weekday_excl_fri),
            ("friday", self.friday),
            ("rest_day", self.rest_day),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::Parameter(format!(
                    "weekday multiplier {name} must be finite and non-negative, got {v}"
                )));
            }
        }
        Ok(())
    }
}

/// Everything both generators need. All fields have defaults; the defaults
/// are the bundled benchmark: four weeks from a Monday on the full-day
/// 5-minute grid over the fixture network, a bimodal commuter profile with
/// a higher morning than evening peak, mild drift, moderate overdispersion
/// and 1% spiked bins.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SynthConfig {
    pub network: NetworkFile,
    pub days: usize,
    pub start_date: NaiveDate,
    pub day_window: DayWindow,
    pub interval_secs: u32,
    /// Trips per hour at each hour of day (24 entries), linearly
    /// interpolated between hourly points.
    pub base_rate: Vec<f64>,
    pub weekday_multipliers: ClassMultipliers,
    /// Fractional demand drift per day (0.004 ≈ +11% over four weeks).
    pub trend_slope: f64,
    /// Overdispersion on top of count-like noise: per-bin noise variance is
    /// `mean × (1 + noise_level)`.
    pub noise_level: f64,
    /// Fraction of bins spiked by a 5–15× factor; at most 0.05.
    pub outlier_rate: f64,
    pub seed: u64,
    /// Dates treated as rest days regardless of weekday.
    pub holidays: BTreeSet<NaiveDate>,
    /// Origin/destination pairs passengers may travel; empty means every
    /// ordered station pair.
    pub od_whitelist: Vec<(String, String)>,
    /// Stress flag: probability a passenger takes a randomly chosen route
    /// from the candidate set instead of the best one. Zero (the default)
    /// keeps extraction exactness measurable and makes generation refuse
    /// ambiguous shortest routes.
    pub route_choice_noise: f64,
    /// Seconds per hop when synthesizing ride durations.
    pub hop_secs: u32,
    /// Station label on directly generated series.
    pub series_station: String,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            network: fixture_network_file(),
            days: 28,
            start_date: NaiveDate::from_ymd_opt(2024, 3, 4).expect("static date"),
            day_window: crate::flow::default_day_window(),
            interval_secs: crate::flow::DEFAULT_INTERVAL_SECS,
            base_rate: vec![
                0.0, 0.0, 0.0, 0.0, 0.0, 40.0, 150.0, 420.0, 520.0, 300.0, 160.0, 140.0, 150.0,
                140.0, 130.0, 150.0, 220.0, 400.0, 430.0, 260.0, 150.0, 110.0, 80.0, 40.0,
            ],
            weekday_multipliers: ClassMultipliers::default(),
            trend_slope: 0.004,
            noise_level: 0.6,
            outlier_rate: 0.01,
            seed: 7,
            holidays: BTreeSet::new(),
            od_whitelist: Vec::new(),
            route_choice_noise: 0.0,
            hop_secs: 150,
            series_station: "S05".into(),
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        if self.days == 0 {
            return Err(Error::Parameter("days must be at least 1".into()));
        }
        self.day_window.bins(self.interval_secs)?;
        if self.base_rate.len() != 24 {
            return Err(Error::Parameter(format!(
                "base_rate must have one entry per hour of day (24), got {}",
                self.base_rate.len()
            )));
        }
        if self.base_rate.iter().any(|r| !(r.is_finite() && *r >= 0.0)) {
            return Err(Error::Parameter(
                "base_rate entries must be finite and non-negative".into(),
            ));
        }
        self.weekday_multipliers.validate()?;
        if !self.trend_slope.is_finite() {
            return Err(Error::Parameter("trend_slope must be finite".into()));
        }
        if !(self.noise_level.is_finite() && self.noise_level >= 0.0) {
            return Err(Error::Parameter(format!(
                "noise_level must be finite and non-negative, got {}",
                self.noise_level
            )));
        }
        if !(self.outlier_rate >= 0.0 && self.outlier_rate <= 0.05) {
            return Err(Error::Parameter(format!(
                "outlier_rate must lie in [0, 0.05], got {}",
                self.outlier_rate
            )));
        }
        if !(self.route_choice_noise >= 0.0 && self.route_choice_noise < 1.0) {
            return Err(Error::Parameter(format!(
                "route_choice_noise must lie in [0, 1), got {}",
                self.route_choice_noise
            )));
        }
        if self.hop_secs == 0 {
            return Err(Error::Parameter("hop_secs must be at least 1".into()));
        }
        if self.series_station.is_empty() {
            return Err(Error::Parameter("series_station must be nonempty".into()));
        }
        Ok(())
    }

    fn dates(&self) -> Vec<NaiveDate> {
        (0..self.days)
            .map(|d| self.start_date + Duration::days(d as i64))
            .collect()
    }

    /// The day-class calendar this config generates under.
    pub fn calendar(&self) -> Calendar {
        Calendar::with_holidays(self.holidays.iter().copied())
    }
}

/// Per-bin base means (trips per bin, before multipliers and drift):
/// the hourly profile interpolated at each bin centre.
fn per_bin_base_means(cfg: &SynthConfig) -> Result<Vec<f64>> {
    let spd = cfg.day_window.bins(cfg.interval_secs)?;
    let per_hour_to_per_bin = cfg.interval_secs as f64 / 3600.0;
    let mut out = Vec::with_capacity(spd);
    for k in 0..spd {
        let centre_sec =
            cfg.day_window.start_sec() as f64 + (k as f64 + 0.5) * cfg.interval_secs as f64;
        let h = centre_sec / 3600.0;
        let i = (h.floor() as usize) % 24;
        let frac = h - h.floor();
        let rate = cfg.base_rate[i] * (1.0 - frac) + cfg.base_rate[(i + 1) % 24] * frac;
        out.push(rate * per_hour_to_per_bin);
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Direct series generation
// ---------------------------------------------------------------------------

/// The components a generated series was built from. `reconstruct` replays
/// the generator's arithmetic exactly, so it always reproduces the series
/// bit for bit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesGroundTruth {
    pub trend: Vec<f64>,
    pub seasonal: Vec<f64>,
    pub noise: Vec<f64>,
    /// Bin indices that were spiked, in increasing order.
    pub spike_indices: Vec<usize>,
    /// Spike factor per spiked bin, parallel to `spike_indices`.
    pub spike_factors: Vec<f64>,
}

impl SeriesGroundTruth {
    pub fn len(&self) -> usize {
        self.trend.len()
    }

    pub fn is_empty(&self) -> bool {
        self.trend.is_empty()
    }

    /// `round(max(0, trend + seasonal + noise) · factor)` per bin.
    pub fn reconstruct(&self) -> Vec<u64> {
        let factors: BTreeMap<usize, f64> = self
            .spike_indices
            .iter()
            .copied()
            .zip(self.spike_factors.iter().copied())
            .collect();
        (0..self.len())
            .map(|i| {
                let base = (self.trend[i] + self.seasonal[i] + self.noise[i]).max(0.0);
                let factor = factors.get(&i).copied().unwrap_or(1.0);
                (base * factor).round() as u64
            })
            .collect()
    }
}

/// Generates one flow series plus the components it was built from.
pub fn generate_series(cfg: &SynthConfig) -> Result<(FlowSeries, SeriesGroundTruth)> {
    cfg.validate()?;
    let spd = cfg.day_window.bins(cfg.interval_secs)?;
    let base = per_bin_base_means(cfg)?;
    let s_bar = base.iter().sum::<f64>() / spd as f64;
    let calendar = cfg.calendar();
    let dates = cfg.dates();

    let n = cfg.days * spd;
    let mut truth = SeriesGroundTruth {
        trend: Vec::with_capacity(n),
        seasonal: Vec::with_capacity(n),
        noise: Vec::with_capacity(n),
        spike_indices: Vec::new(),
        spike_factors: Vec::new(),
    };
    let mut counts = Vec::with_capacity(n);
    for (d, &date) in dates.iter().enumerate() {
        let mult = cfg.weekday_multipliers.get(calendar.classify(date)?);
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(SERIES_STREAM_BASE + d as u64);
        for (k, &base_k) in base.iter().enumerate() {
            let trend_v = s_bar * (1.0 + cfg.trend_slope * d as f64);
            let seasonal_v = base_k * mult - s_bar;
            let mean = (trend_v + seasonal_v).max(0.0);
            let std = (mean * (1.0 + cfg.noise_level)).sqrt();
            let noise_v = Normal::new(0.0, std)
                .map_err(|e| Error::Numeric(format!("noise distribution: {e}")))?
                .sample(&mut rng);
            let spiked = rng.gen::<f64>() < cfg.outlier_rate;
            let factor = if spiked { rng.gen_range(5.0..15.0) } else { 1.0 };
            if spiked {
                truth.spike_indices.push(d * spd + k);
                truth.spike_factors.push(factor);
            }
            truth.trend.push(trend_v);
            truth.seasonal.push(seasonal_v);
            truth.noise.push(noise_v);
            let value = ((trend_v + seasonal_v + noise_v).max(0.0) * factor).round() as u64;
            counts.push(value);
        }
    }
    let series = FlowSeries::new(
        cfg.series_station.clone(),
        cfg.interval_secs,
        cfg.day_window,
        Scenario::All,
        dates,
        counts,
    )?;
    Ok((series, truth))
}

// ---------------------------------------------------------------------------
// Passenger-level generation
// ---------------------------------------------------------------------------

/// True per-station per-bin transfer counts behind a generated record
/// stream, computed from the route each passenger actually took.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AfcGroundTruth {
    /// Station code → one count per (day × bin); stations with no transfer
    /// events are absent.
    pub station_counts: BTreeMap<String, Vec<u64>>,
    pub dates: Vec<NaiveDate>,
    pub day_window: DayWindow,
    pub interval_secs: u32,
    /// Total transfer events across all stations and bins.
    pub total_events: u64,
    /// Transfer moments that fell outside the service window (zero by
    /// construction: swipe times are drawn so trips complete in-window).
    pub out_of_window: u64,
}

impl AfcGroundTruth {
    /// The truth counts for one station as a flow series (all zero when the
    /// station saw no transfers).
    pub fn series_for(&self, station: &str) -> Result<FlowSeries> {
        let spd = self.day_window.bins(self.interval_secs)?;
        let counts = self
            .station_counts
            .get(station)
            .cloned()
            .unwrap_or_else(|| vec![0; self.dates.len() * spd]);
        FlowSeries::new(
            station.to_string(),
            self.interval_secs,
            self.day_window,
            Scenario::All,
            self.dates.clone(),
            counts,
        )
    }
}

/// Routes available per origin/destination pair, with ambiguity checked
/// up front so the oracle stays exact.
fn route_pool(
    net: &MetroNetwork,
    cfg: &SynthConfig,
) -> Result<(Vec<(String, String)>, BTreeMap<(String, String), Vec<Itinerary>>)> {
    let pairs: Vec<(String, String)> = if cfg.od_whitelist.is_empty() {
        let codes: Vec<&str> = net.station_codes().collect();
        codes
            .iter()
            .flat_map(|o| {
                codes
                    .iter()
                    .filter(move |d| d != &o)
                    .map(move |d| (o.to_string(), d.to_string()))
            })
            .collect()
    } else {
        cfg.od_whitelist.clone()
    };
    let query = RouteQuery {
        max_transfers: 3,
        distance_slack: 0.5,
    };
    let max_duration = cfg.day_window.len_secs().saturating_sub(1);
    let mut routes = BTreeMap::new();
    for (o, d) in &pairs {
        let found = enumerate_routes(net, o, d, query)?;
        if found.is_empty() {
            return Err(Error::NoRoute {
                origin: o.clone(),
                destination: d.clone(),
            });
        }
        if cfg.route_choice_noise == 0.0 {
            let best = found[0].total_distance;
            let tied = found
                .iter()
                .filter(|r| r.total_distance <= best * (1.0 + 1e-9))
                .count();
            if tied > 1 {
                return Err(Error::Input(format!(
                    "ambiguous shortest route between `{o}` and `{d}` ({tied} routes tie at \
                     {best} m); refusing to generate records whose transfer ground truth \
                     would not be unique"
                )));
            }
        }
        for r in &found {
            let duration = r.hops() as u32 * cfg.hop_secs;
            if duration > max_duration {
                return Err(Error::Config(format!(
                    "a trip from `{o}` to `{d}` takes {duration}s at {} s/hop and cannot \
                     complete inside the {} service window",
                    cfg.hop_secs, cfg.day_window
                )));
            }
        }
        routes.insert((o.clone(), d.clone()), found);
    }
    Ok((pairs, routes))
}

/// Generates raw fare-gate records plus their exact transfer ground truth.
///
/// Per bin, the passenger count follows the same generating model as
/// [`generate_series`] (on independent generator streams). Each passenger
/// draws an origin/destination pair uniformly from the pool, rides the
/// unique best route (or, under `route_choice_noise`, sometimes a random
/// candidate route), taps in at a uniform second within the bin — shifted
/// earlier if needed so the trip finishes strictly inside the service
/// window — and taps out after `hops × hop_secs` seconds. Ground truth
/// counts every route transfer point at its estimated passing moment,
/// binned exactly like the extraction pipeline bins it.
pub fn generate_afc(cfg: &SynthConfig) -> Result<(Vec<AfcRecord>, AfcGroundTruth)> {
    cfg.validate()?;
    let net = MetroNetwork::new(cfg.network.stations.clone(), cfg.network.edges.clone())?;
    let spd = cfg.day_window.bins(cfg.interval_secs)?;
    let base = per_bin_base_means(cfg)?;
    let s_bar = base.iter().sum::<f64>() / spd as f64;
    let calendar = cfg.calendar();
    let dates = cfg.dates();
    let (pairs, routes) = route_pool(&net, cfg)?;

    let mut records = Vec::new();
    let mut station_counts: BTreeMap<String, Vec<u64>> = BTreeMap::new();
    let mut total_events = 0u64;
    let mut out_of_window = 0u64;
    for (d, &date) in dates.iter().enumerate() {
        let mult = cfg.weekday_multipliers.get(calendar.classify(date)?);
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(AFC_STREAM_BASE + d as u64);
        let mut seq = 0usize;
        for (k, &base_k) in base.iter().enumerate() {
            let trend_v = s_bar * (1.0 + cfg.trend_slope * d as f64);
            let seasonal_v = base_k * mult - s_bar;
            let mean = (trend_v + seasonal_v).max(0.0);
            let std = (mean * (1.0 + cfg.noise_level)).sqrt();
            let noise_v = Normal::new(0.0, std)
                .map_err(|e| Error::Numeric(format!("noise distribution: {e}")))?
                .sample(&mut rng);
            let spiked = rng.gen::<f64>() < cfg.outlier_rate;
            let factor = if spiked { rng.gen_range(5.0..15.0) } else { 1.0 };
            let trips = ((trend_v + seasonal_v + noise_v).max(0.0) * factor).round() as usize;
            for _ in 0..trips {
                let od = &pairs[rng.gen_range(0..pairs.len())];
                let candidates = &routes[od];
                let route = if cfg.route_choice_noise > 0.0
                    && rng.gen::<f64>() < cfg.route_choice_noise
                {
                    &candidates[rng.gen_range(0..candidates.len())]
                } else {
                    &candidates[0]
                };
                let duration = route.hops() as u32 * cfg.hop_secs;
                let bin_start = cfg.day_window.start_sec() + k as u32 * cfg.interval_secs;
                let drawn = bin_start + rng.gen_range(0..cfg.interval_secs);
                let latest = cfg.day_window.end_sec() - 1 - duration;
                let t_in = drawn.min(latest).max(cfg.day_window.start_sec());
                let in_time = date.and_time(
                    NaiveTime::from_num_seconds_from_midnight_opt(t_in, 0)
                        .expect("in-window second"),
                );
                let out_time = in_time + Duration::seconds(duration as i64);
                for (station, moment) in route.transfer_times(in_time, out_time)? {
                    let slot = (moment.date() == date)
                        .then(|| cfg.day_window.slot_of(moment.time(), cfg.interval_secs))
                        .flatten();
                    match slot {
                        Some(slot) => {
                            let counts = station_counts
                                .entry(station)
                                .or_insert_with(|| vec![0; dates.len() * spd]);
                            counts[d * spd + slot] += 1;
                            total_events += 1;
                        }
                        None => out_of_window += 1,
                    }
                }
                records.push(AfcRecord {
                    card_id: format!("D{d:03}C{seq:05}"),
                    in_line: route.legs[0].line.clone(),
                    in_station: od.0.clone(),
                    in_time,
                    out_line: route.legs.last().expect("nonempty route").line.clone(),
                    out_station: od.1.clone(),
                    out_time,
                    card_type: "adult".into(),
                });
                seq += 1;
            }
        }
    }
    let truth = AfcGroundTruth {
        station_counts,
        dates,
        day_window: cfg.day_window,
        interval_secs: cfg.interval_secs,
        total_events,
        out_of_window,
    };
    Ok((records, truth))
}

// ---------------------------------------------------------------------------
// The bundled benchmark
// ---------------------------------------------------------------------------

/// Configuration of the bundled comparison benchmark: the defaults.
pub fn benchmark_config() -> SynthConfig {
    SynthConfig::default()
}

/// The bundled benchmark: one four-week series generated from the default
/// configuration and split into the three day-class scenarios (16 ordinary
/// weekdays, 4 Fridays, 8 rest days).
pub fn scenario_benchmark() -> Result<(BTreeMap<Scenario, FlowSeries>, SeriesGroundTruth)> {
    let cfg = benchmark_config();
    let (series, truth) = generate_series(&cfg)?;
    let by_scenario = split_scenarios(&series, &cfg.calendar())?;
    Ok((by_scenario, truth))
}
