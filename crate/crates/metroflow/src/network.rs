//! Metro network model and route search.
//!
//! The network is an undirected graph of stations joined by line-labelled
//! edges with positive distances. Route enumeration walks all simple paths
//! depth-first, pruning on transfer count and on accumulated distance, and
//! ranks itineraries by total distance, then transfer count, then path order.
//!
//! A passenger record only carries entry and exit swipes; the moment the
//! passenger passed a transfer station is estimated by splitting the ride
//! time proportionally to the hop counts before and after the transfer:
//!
//! `t_transfer = t_on + (hops_before / total_hops) * (t_off - t_on)`
//!
//! which always lands strictly between the two swipes.

use std::collections::{BTreeMap, BTreeSet};
use std::io::{Read, Write};

use chrono::{Duration, NaiveDateTime};
use serde::{Deserialize, Serialize};

use crate::afc::AfcRecord;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Station {
    pub code: String,
    pub name: String,
    pub lines: BTreeSet<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Edge {
    pub a: String,
    pub b: String,
    pub line: String,
    pub distance_m: f64,
}

/// On-disk JSON shape of a network.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkFile {
    pub stations: Vec<Station>,
    pub edges: Vec<Edge>,
}

/// Validated metro network.
///
/// Invariants established at construction: every edge endpoint is a known
/// station, both endpoints list the edge's line, and every distance is
/// positive and finite. Adjacency is kept in ordered maps so traversal
/// order (and therefore route enumeration) is deterministic.
#[derive(Debug, Clone)]
pub struct MetroNetwork {
    stations: BTreeMap<String, Station>,
    edges: Vec<Edge>,
    /// station -> neighbour -> line -> distance
    adjacency: BTreeMap<String, BTreeMap<String, BTreeMap<String, f64>>>,
}

impl MetroNetwork {
    pub fn new(stations: Vec<Station>, edges: Vec<Edge>) -> Result<Self> {
        let mut map = BTreeMap::new();
        for s in stations {
            if map.insert(s.code.clone(), s).is_some() {
                return Err(Error::Input("duplicate station code in network".into()));
            }
        }
        let mut adjacency: BTreeMap<String, BTreeMap<String, BTreeMap<String, f64>>> =
            map.keys().map(|c| (c.clone(), BTreeMap::new())).collect();
        for e in &edges {
            if !(e.distance_m.is_finite() && e.distance_m > 0.0) {
                return Err(Error::Input(format!(
                    "edge {}-{} on line {} has non-positive distance",
                    e.a, e.b, e.line
                )));
            }
            if e.a == e.b {
                return Err(Error::Input(format!("self-loop edge at {}", e.a)));
            }
            for end in [&e.a, &e.b] {
                let st = map
                    .get(end.as_str())
                    .ok_or_else(|| Error::UnknownStation(end.clone()))?;
                if !st.lines.contains(&e.line) {
                    return Err(Error::Input(format!(
                        "station {} does not list line {} of edge {}-{}",
                        end, e.line, e.a, e.b
                    )));
                }
            }
            adjacency
                .get_mut(&e.a)
                .unwrap()
                .entry(e.b.clone())
                .or_default()
                .insert(e.line.clone(), e.distance_m);
            adjacency
                .get_mut(&e.b)
                .unwrap()
                .entry(e.a.clone())
                .or_default()
                .insert(e.line.clone(), e.distance_m);
        }
        Ok(MetroNetwork {
            stations: map,
            edges,
            adjacency,
        })
    }

    pub fn from_json<R: Read>(reader: R) -> Result<Self> {
        let file: NetworkFile = serde_json::from_reader(reader)?;
        Self::new(file.stations, file.edges)
    }

    pub fn to_json<W: Write>(&self, writer: W) -> Result<()> {
        let file = NetworkFile {
            stations: self.stations.values().cloned().collect(),
            edges: self.edges.clone(),
        };
        serde_json::to_writer_pretty(writer, &file)?;
        Ok(())
    }

    pub fn contains_station(&self, code: &str) -> bool {
        self.stations.contains_key(code)
    }

    pub fn station(&self, code: &str) -> Option<&Station> {
        self.stations.get(code)
    }

    pub fn station_codes(&self) -> impl Iterator<Item = &str> {
        self.stations.keys().map(|s| s.as_str())
    }

    pub fn station_count(&self) -> usize {
        self.stations.len()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    /// A transfer station serves at least two lines.
    pub fn is_transfer_station(&self, code: &str) -> bool {
        self.stations
            .get(code)
            .map(|s| s.lines.len() >= 2)
            .unwrap_or(false)
    }

    fn neighbours(&self, code: &str) -> &BTreeMap<String, BTreeMap<String, f64>> {
        &self.adjacency[code]
    }

    /// Smallest distance over the lines serving a station pair.
    fn hop_distance(lines: &BTreeMap<String, f64>) -> f64 {
        lines.values().cloned().fold(f64::INFINITY, f64::min)
    }
}

/// One same-line stretch of an itinerary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Leg {
    pub line: String,
    pub stations: Vec<String>,
}

/// A transfer point with its position along the path, counted in
/// inter-station hops from each end.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransferPoint {
    pub station: String,
    pub hops_before: usize,
    pub hops_after: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Itinerary {
    pub origin: String,
    pub destination: String,
    /// Station codes from origin to destination inclusive.
    pub path: Vec<String>,
    pub legs: Vec<Leg>,
    pub transfers: Vec<TransferPoint>,
    pub total_distance: f64,
}

impl Itinerary {
    pub fn transfer_count(&self) -> usize {
        self.legs.len().saturating_sub(1)
    }

    pub fn hops(&self) -> usize {
        self.path.len() - 1
    }

    /// Estimated transfer timestamps for a ride between `t_on` and `t_off`,
    /// splitting the ride proportionally to cumulative hop counts.
    pub fn transfer_times(
        &self,
        t_on: NaiveDateTime,
        t_off: NaiveDateTime,
    ) -> Result<Vec<(String, NaiveDateTime)>> {
        self.transfers
            .iter()
            .map(|tp| {
                transfer_timestamp(tp.hops_before, tp.hops_after, t_on, t_off)
                    .map(|t| (tp.station.clone(), t))
            })
            .collect()
    }
}

/// Route search bounds.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct RouteQuery {
    /// Maximum number of transfers allowed on a route.
    pub max_transfers: usize,
    /// Routes longer than `(1 + slack)` times the shortest are discarded.
    pub distance_slack: f64,
}

impl Default for RouteQuery {
    fn default() -> Self {
        RouteQuery {
            max_transfers: 3,
            distance_slack: 0.5,
        }
    }
}

struct RouteSearch<'a> {
    net: &'a MetroNetwork,
    destination: String,
    query: RouteQuery,
    path: Vec<String>,
    on_path: BTreeSet<String>,
    best_distance: f64,
    found: Vec<(Vec<String>, f64)>,
}

impl<'a> RouteSearch<'a> {
    /// Depth-first over simple paths. `line_set` is the set of lines that can
    /// serve the current (still open) leg; `transfers` counts closed legs.
    /// Distance pruning against the best complete route found so far can
    /// never cut a prefix of the true shortest route, so the final filter
    /// threshold is exact.
    fn dfs(&mut self, at: &str, dist: f64, transfers: usize, line_set: &BTreeSet<String>) {
        if self.best_distance.is_finite()
            && dist > (1.0 + self.query.distance_slack) * self.best_distance
        {
            return;
        }
        if at == self.destination {
            self.best_distance = self.best_distance.min(dist);
            self.found.push((self.path.clone(), dist));
            return;
        }
        let neighbours = self.net.neighbours(at).clone();
        for (next, lines) in neighbours {
            if self.on_path.contains(&next) {
                continue;
            }
            let hop_lines: BTreeSet<String> = lines.keys().cloned().collect();
            let (next_transfers, next_set) = if self.path.len() == 1 {
                (0, hop_lines)
            } else {
                let joint: BTreeSet<String> = line_set.intersection(&hop_lines).cloned().collect();
                if joint.is_empty() {
                    (transfers + 1, hop_lines)
                } else {
                    (transfers, joint)
                }
            };
            if next_transfers > self.query.max_transfers {
                continue;
            }
            let d = MetroNetwork::hop_distance(&lines);
            self.path.push(next.clone());
            self.on_path.insert(next.clone());
            self.dfs(&next, dist + d, next_transfers, &next_set);
            self.on_path.remove(&next);
            self.path.pop();
        }
    }
}

/// Splits a station path into the minimal number of same-line legs.
///
/// Greedy scan: keep intersecting the running line set with each hop's lines;
/// when the intersection empties, close the leg (choosing the smallest line
/// code) and start a new one. The greedy split is minimal for interval
/// partitioning, so `legs - 1` is the minimum transfer count for the path.
fn legs_for_path(net: &MetroNetwork, path: &[String]) -> Vec<Leg> {
    let mut legs = Vec::new();
    let mut leg_start = 0usize;
    let mut running: Option<BTreeSet<String>> = None;
    for i in 0..path.len() - 1 {
        let hop_lines: BTreeSet<String> = net.neighbours(&path[i])[&path[i + 1]]
            .keys()
            .cloned()
            .collect();
        running = match running {
            None => Some(hop_lines),
            Some(set) => {
                let joint: BTreeSet<String> = set.intersection(&hop_lines).cloned().collect();
                if joint.is_empty() {
                    legs.push(Leg {
                        line: set.iter().next().unwrap().clone(),
                        stations: path[leg_start..=i].to_vec(),
                    });
                    leg_start = i;
                    Some(hop_lines)
                } else {
                    Some(joint)
                }
            }
        };
    }
    if let Some(set) = running {
        legs.push(Leg {
            line: set.iter().next().unwrap().clone(),
            stations: path[leg_start..].to_vec(),
        });
    }
    legs
}

fn build_itinerary(net: &MetroNetwork, path: Vec<String>, total_distance: f64) -> Itinerary {
    let legs = legs_for_path(net, &path);
    let total_hops = path.len() - 1;
    let mut transfers = Vec::new();
    let mut hops = 0usize;
    for leg in legs.iter().take(legs.len() - 1) {
        hops += leg.stations.len() - 1;
        transfers.push(TransferPoint {
            station: leg.stations.last().unwrap().clone(),
            hops_before: hops,
            hops_after: total_hops - hops,
        });
    }
    Itinerary {
        origin: path.first().unwrap().clone(),
        destination: path.last().unwrap().clone(),
        path,
        legs,
        transfers,
        total_distance,
    }
}

/// Enumerates simple-path routes between two stations, bounded by the
/// query's transfer cap and distance slack, ranked by total distance, then
/// transfer count, then path order. An unreachable destination yields an
/// empty list.
pub fn enumerate_routes(
    net: &MetroNetwork,
    origin: &str,
    destination: &str,
    query: RouteQuery,
) -> Result<Vec<Itinerary>> {
    for code in [origin, destination] {
        if !net.contains_station(code) {
            return Err(Error::UnknownStation(code.to_string()));
        }
    }
    if origin == destination {
        return Err(Error::Input(format!(
            "origin and destination are both `{origin}`"
        )));
    }
    let mut search = RouteSearch {
        net,
        destination: destination.to_string(),
        query,
        path: vec![origin.to_string()],
        on_path: BTreeSet::from([origin.to_string()]),
        best_distance: f64::INFINITY,
        found: Vec::new(),
    };
    search.dfs(origin, 0.0, 0, &BTreeSet::new());
    let best = search.best_distance;
    let keep = (1.0 + query.distance_slack) * best;
    let mut routes: Vec<Itinerary> = search
        .found
        .into_iter()
        .filter(|(_, d)| *d <= keep)
        .map(|(path, d)| build_itinerary(net, path, d))
        .collect();
    routes.sort_by(|x, y| {
        x.total_distance
            .total_cmp(&y.total_distance)
            .then_with(|| x.transfer_count().cmp(&y.transfer_count()))
            .then_with(|| x.path.cmp(&y.path))
    });
    Ok(routes)
}

/// The top-ranked route under default query bounds.
pub fn best_route(net: &MetroNetwork, origin: &str, destination: &str) -> Result<Itinerary> {
    enumerate_routes(net, origin, destination, RouteQuery::default())?
        .into_iter()
        .next()
        .ok_or_else(|| Error::NoRoute {
            origin: origin.to_string(),
            destination: destination.to_string(),
        })
}

/// Estimated moment a ride passes its transfer station: the ride time split
/// proportionally to hop counts. Requires `n_before >= 1`, `n_after >= 1`
/// and `t_off > t_on`; the result is strictly inside `(t_on, t_off)`.
pub fn transfer_timestamp(
    n_before: usize,
    n_after: usize,
    t_on: NaiveDateTime,
    t_off: NaiveDateTime,
) -> Result<NaiveDateTime> {
    if n_before == 0 || n_after == 0 {
        return Err(Error::Parameter(
            "transfer must have at least one hop on each side".into(),
        ));
    }
    if t_off <= t_on {
        return Err(Error::Input(format!(
            "exit time {t_off} is not after entry time {t_on}"
        )));
    }
    let total_ns = (t_off - t_on)
        .num_nanoseconds()
        .ok_or_else(|| Error::Numeric("ride duration overflows".into()))?;
    let frac = n_before as f64 / (n_before + n_after) as f64;
    let mut offset_ns = (frac * total_ns as f64).round() as i64;
    // Rounding may only touch the bounds; the estimate itself is interior.
    offset_ns = offset_ns.clamp(1, total_ns - 1);
    Ok(t_on + Duration::nanoseconds(offset_ns))
}

/// A passenger passing through a transfer station at an estimated time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransferEvent {
    pub station: String,
    pub time: NaiveDateTime,
    pub card_id: String,
}

/// Result of turning cross-line records into transfer events. Records whose
/// origin/destination pair has no route are reported, not silently dropped.
#[derive(Debug, Clone, Default)]
pub struct TransferExtraction {
    pub events: Vec<TransferEvent>,
    pub unroutable: Vec<AfcRecord>,
}

/// Derives transfer events from records by routing each origin/destination
/// pair on its best route and splitting ride time across the route's
/// transfer points. Routes are memoised per pair.
pub fn extract_transfers(records: &[AfcRecord], net: &MetroNetwork) -> TransferExtraction {
    let mut cache: BTreeMap<(String, String), Option<Itinerary>> = BTreeMap::new();
    let mut out = TransferExtraction::default();
    for rec in records {
        let key = (rec.in_station.clone(), rec.out_station.clone());
        let route = cache
            .entry(key)
            .or_insert_with(|| best_route(net, &rec.in_station, &rec.out_station).ok());
        let Some(route) = route else {
            out.unroutable.push(rec.clone());
            continue;
        };
        match route.transfer_times(rec.in_time, rec.out_time) {
            Ok(times) => {
                for (station, time) in times {
                    out.events.push(TransferEvent {
                        station,
                        time,
                        card_id: rec.card_id.clone(),
                    });
                }
            }
            Err(_) => out.unroutable.push(rec.clone()),
        }
    }
    out
}
