//! AFC (automatic fare collection) record parsing and cleaning.
//!
//! Records arrive as delimiter-separated text with a header row; a
//! [`CsvSchema`] maps header names onto record fields, so column order in
//! the file is free. Cleaning applies five rules in a fixed order and a
//! record is charged to the first rule it violates:
//!
//! 1. exit not after entry
//! 2. identical entry/exit station codes
//! 3. a swipe outside operating hours
//! 4. unknown station code
//! 5. trip duration above the maximum
//!
//! Station and line codes are opaque strings; nothing is inferred from them.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use chrono::NaiveDateTime;
use serde::{Deserialize, Serialize};

use crate::calendar::DayWindow;
use crate::error::{Error, Result};
use crate::network::MetroNetwork;

/// One ride: paired entry and exit swipes of a card.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AfcRecord {
    pub card_id: String,
    pub in_line: String,
    pub in_station: String,
    pub in_time: NaiveDateTime,
    pub out_line: String,
    pub out_station: String,
    pub out_time: NaiveDateTime,
    pub card_type: String,
}

/// Header names for each record field.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ColumnMap {
    pub card_id: String,
    pub in_line: String,
    pub in_station: String,
    pub in_time: String,
    pub out_line: String,
    pub out_station: String,
    pub out_time: String,
    pub card_type: String,
}

impl Default for ColumnMap {
    fn default() -> Self {
        ColumnMap {
            card_id: "card_id".into(),
            in_line: "in_line".into(),
            in_station: "in_station".into(),
            in_time: "in_time".into(),
            out_line: "out_line".into(),
            out_station: "out_station".into(),
            out_time: "out_time".into(),
            card_type: "card_type".into(),
        }
    }
}

/// Input file description: delimiter, timestamp format, column mapping.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CsvSchema {
    /// Single-byte field delimiter, default comma.
    pub delimiter: char,
    /// `chrono` format string for both swipe timestamps.
    pub timestamp_format: String,
    pub columns: ColumnMap,
}

impl Default for CsvSchema {
    fn default() -> Self {
        CsvSchema {
            delimiter: ',',
            timestamp_format: "%Y-%m-%d %H:%M:%S".into(),
            columns: ColumnMap::default(),
        }
    }
}

impl CsvSchema {
    fn delimiter_byte(&self) -> Result<u8> {
        if self.delimiter.is_ascii() {
            Ok(self.delimiter as u8)
        } else {
            Err(Error::Config(format!(
                "delimiter `{}` is not a single-byte character",
                self.delimiter
            )))
        }
    }
}

/// A rejected input row: 1-based line number and what was wrong with it.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MalformedRow {
    pub line: u64,
    pub message: String,
}

/// Parse result: well-formed records plus malformed rows, in file order.
#[derive(Debug, Clone, Default)]
pub struct ParsedBatch {
    pub records: Vec<AfcRecord>,
    pub malformed: Vec<MalformedRow>,
}

/// Reads records under a schema. A missing mapped column is a configuration
/// error; malformed rows (wrong field count, unparseable timestamp) are
/// collected per row and do not abort the parse.
pub fn parse_afc_csv<R: Read>(reader: R, schema: &CsvSchema) -> Result<ParsedBatch> {
    let mut rdr = csv::ReaderBuilder::new()
        .delimiter(schema.delimiter_byte()?)
        .flexible(true)
        .from_reader(reader);

    let headers = rdr
        .headers()
        .map_err(|e| Error::Input(format!("cannot read header row: {e}")))?
        .clone();
    let find = |name: &str| -> Result<usize> {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Config(format!("input is missing mapped column `{name}`")))
    };
    let cols = &schema.columns;
    let idx = [
        find(&cols.card_id)?,
        find(&cols.in_line)?,
        find(&cols.in_station)?,
        find(&cols.in_time)?,
        find(&cols.out_line)?,
        find(&cols.out_station)?,
        find(&cols.out_time)?,
        find(&cols.card_type)?,
    ];
    let needed = idx.iter().max().copied().unwrap_or(0);

    let mut out = ParsedBatch::default();
    for rec in rdr.records() {
        let rec = match rec {
            Ok(r) => r,
            Err(e) => {
                let line = e
                    .position()
                    .map(|p| p.line())
                    .unwrap_or(out.records.len() as u64 + out.malformed.len() as u64 + 2);
                out.malformed.push(MalformedRow {
                    line,
                    message: format!("unreadable row: {e}"),
                });
                continue;
            }
        };
        let line = rec.position().map(|p| p.line()).unwrap_or(0);
        if rec.len() <= needed {
            out.malformed.push(MalformedRow {
                line,
                message: format!("expected at least {} fields, found {}", needed + 1, rec.len()),
            });
            continue;
        }
        let time = |i: usize| -> std::result::Result<NaiveDateTime, String> {
            NaiveDateTime::parse_from_str(&rec[idx[i]], &schema.timestamp_format)
                .map_err(|e| format!("bad timestamp `{}`: {e}", &rec[idx[i]]))
        };
        match (time(3), time(6)) {
            (Ok(in_time), Ok(out_time)) => out.records.push(AfcRecord {
                card_id: rec[idx[0]].trim().to_string(),
                in_line: rec[idx[1]].trim().to_string(),
                in_station: rec[idx[2]].trim().to_string(),
                in_time,
                out_line: rec[idx[4]].trim().to_string(),
                out_station: rec[idx[5]].trim().to_string(),
                out_time,
                card_type: rec[idx[7]].trim().to_string(),
            }),
            (Err(m), _) | (_, Err(m)) => out.malformed.push(MalformedRow { line, message: m }),
        }
    }
    Ok(out)
}

/// Writes records in the schema's format (canonical column order, schema
/// header names), so cleaned output round-trips through [`parse_afc_csv`].
pub fn write_afc_csv<W: Write>(writer: W, records: &[AfcRecord], schema: &CsvSchema) -> Result<()> {
    let mut wtr = csv::WriterBuilder::new()
        .delimiter(schema.delimiter_byte()?)
        .from_writer(writer);
    let c = &schema.columns;
    wtr.write_record([
        &c.card_id, &c.in_line, &c.in_station, &c.in_time, &c.out_line, &c.out_station,
        &c.out_time, &c.card_type,
    ])?;
    for r in records {
        wtr.write_record([
            &r.card_id,
            &r.in_line,
            &r.in_station,
            &r.in_time.format(&schema.timestamp_format).to_string(),
            &r.out_line,
            &r.out_station,
            &r.out_time.format(&schema.timestamp_format).to_string(),
            &r.card_type,
        ])?;
    }
    wtr.flush()?;
    Ok(())
}

/// The five cleaning rules, in evaluation order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum CleaningRule {
    ExitNotAfterEntry,
    SameStation,
    OutsideOperatingHours,
    UnknownStation,
    ExcessiveDuration,
}

impl CleaningRule {
    pub const ALL: [CleaningRule; 5] = [
        CleaningRule::ExitNotAfterEntry,
        CleaningRule::SameStation,
        CleaningRule::OutsideOperatingHours,
        CleaningRule::UnknownStation,
        CleaningRule::ExcessiveDuration,
    ];

    /// Stable 1-based rule id used in reports.
    pub fn id(self) -> u8 {
        match self {
            CleaningRule::ExitNotAfterEntry => 1,
            CleaningRule::SameStation => 2,
            CleaningRule::OutsideOperatingHours => 3,
            CleaningRule::UnknownStation => 4,
            CleaningRule::ExcessiveDuration => 5,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            CleaningRule::ExitNotAfterEntry => "exit not after entry",
            CleaningRule::SameStation => "same entry and exit station",
            CleaningRule::OutsideOperatingHours => "swipe outside operating hours",
            CleaningRule::UnknownStation => "unknown station code",
            CleaningRule::ExcessiveDuration => "trip duration above maximum",
        }
    }
}

/// Cleaning parameters: operating hours and the longest credible trip.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CleaningConfig {
    pub operating_hours: DayWindow,
    pub max_trip_secs: i64,
}

impl Default for CleaningConfig {
    fn default() -> Self {
        CleaningConfig {
            operating_hours: "05:30-22:30".parse().expect("static window"),
            max_trip_secs: 4 * 3600,
        }
    }
}

/// Counts per rule id plus totals. `validity_rate` is absent (not zero)
/// when there was no input at all.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CleaningReport {
    pub total_in: usize,
    pub valid_out: usize,
    pub rejected_per_rule: BTreeMap<u8, usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub validity_rate: Option<f64>,
}

/// First rule the record violates, if any.
pub fn violation(
    rec: &AfcRecord,
    network: &MetroNetwork,
    cfg: &CleaningConfig,
) -> Option<CleaningRule> {
    if rec.out_time <= rec.in_time {
        return Some(CleaningRule::ExitNotAfterEntry);
    }
    if rec.in_station == rec.out_station {
        return Some(CleaningRule::SameStation);
    }
    if !cfg.operating_hours.contains_swipe(rec.in_time.time())
        || !cfg.operating_hours.contains_swipe(rec.out_time.time())
    {
        return Some(CleaningRule::OutsideOperatingHours);
    }
    if !network.contains_station(&rec.in_station) || !network.contains_station(&rec.out_station) {
        return Some(CleaningRule::UnknownStation);
    }
    if (rec.out_time - rec.in_time).num_seconds() > cfg.max_trip_secs {
        return Some(CleaningRule::ExcessiveDuration);
    }
    None
}

/// Applies the five rules in order, keeping survivors in input order.
/// `total_in = valid_out + sum(rejected_per_rule)` always holds.
pub fn clean_records(
    records: Vec<AfcRecord>,
    network: &MetroNetwork,
    cfg: &CleaningConfig,
) -> (Vec<AfcRecord>, CleaningReport) {
    let total_in = records.len();
    let mut rejected: BTreeMap<u8, usize> = CleaningRule::ALL.iter().map(|r| (r.id(), 0)).collect();
    let mut valid = Vec::with_capacity(records.len());
    for rec in records {
        match violation(&rec, network, cfg) {
            Some(rule) => *rejected.get_mut(&rule.id()).unwrap() += 1,
            None => valid.push(rec),
        }
    }
    let report = CleaningReport {
        total_in,
        valid_out: valid.len(),
        rejected_per_rule: rejected,
        validity_rate: if total_in == 0 {
            None
        } else {
            Some(valid.len() as f64 / total_in as f64)
        },
    };
    (valid, report)
}

/// Partitions records into (single-line, cross-line) by comparing entry and
/// exit line codes. Only cross-line records can contain transfers.
pub fn split_by_line_consistency(records: Vec<AfcRecord>) -> (Vec<AfcRecord>, Vec<AfcRecord>) {
    records.into_iter().partition(|r| r.in_line == r.out_line)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::{Edge, Station};

    fn net() -> MetroNetwork {
        let mk = |code: &str, lines: &[&str]| Station {
            code: code.into(),
            name: code.into(),
            lines: lines.iter().map(|s| s.to_string()).collect(),
        };
        MetroNetwork::new(
            vec![
                mk("15", &["2"]),
                mk("34", &["2"]),
                mk("75", &["85"]),
                mk("99", &["2", "85"]),
            ],
            vec![
                Edge { a: "15".into(), b: "34".into(), line: "2".into(), distance_m: 900.0 },
                Edge { a: "34".into(), b: "99".into(), line: "2".into(), distance_m: 1100.0 },
                Edge { a: "99".into(), b: "75".into(), line: "85".into(), distance_m: 1000.0 },
            ],
        )
        .unwrap()
    }

    fn dt(s: &str) -> NaiveDateTime {
        NaiveDateTime::parse_from_str(s, "%Y-%m-%d %H:%M:%S").unwrap()
    }

    fn record() -> AfcRecord {
        AfcRecord {
            card_id: "15633478".into(),
            in_line: "2".into(),
            in_station: "15".into(),
            in_time: dt("2023-05-02 08:05:00"),
            out_line: "85".into(),
            out_station: "75".into(),
            out_time: dt("2023-05-02 08:47:00"),
            card_type: "adult".into(),
        }
    }

    #[test]
    fn parses_mapped_columns() {
        let text = "card_id,in_line,in_station,in_time,out_line,out_station,out_time,card_type\n\
                    15633478,2,15,2023-05-02 08:05:00,85,75,2023-05-02 08:47:00,adult\n";
        let batch = parse_afc_csv(text.as_bytes(), &CsvSchema::default()).unwrap();
        assert_eq!(batch.records.len(), 1);
        assert!(batch.malformed.is_empty());
        assert_eq!(batch.records[0], record());
    }

    #[test]
    fn header_only_gives_empty_batch() {
        let text = "card_id,in_line,in_station,in_time,out_line,out_station,out_time,card_type\n";
        let batch = parse_afc_csv(text.as_bytes(), &CsvSchema::default()).unwrap();
        assert!(batch.records.is_empty());
        assert!(batch.malformed.is_empty());
    }

    #[test]
    fn missing_mapped_column_is_config_error() {
        let text = "card_id,in_line,in_station,in_time\n1,2,15,2023-05-02 08:05:00\n";
        let err = parse_afc_csv(text.as_bytes(), &CsvSchema::default()).unwrap_err();
        assert!(err.to_string().contains("out_line"), "{err}");
    }

    #[test]
    fn malformed_rows_are_collected_with_line_numbers() {
        let text = "card_id,in_line,in_station,in_time,out_line,out_station,out_time,card_type\n\
                    1,2,15,not-a-time,85,75,2023-05-02 08:47:00,adult\n\
                    2,2,15,2023-05-02 08:05:00,85,75,2023-05-02 08:47:00,adult\n\
                    3,2,15\n";
        let batch = parse_afc_csv(text.as_bytes(), &CsvSchema::default()).unwrap();
        assert_eq!(batch.records.len(), 1);
        assert_eq!(batch.records[0].card_id, "2");
        assert_eq!(batch.malformed.len(), 2);
        assert_eq!(batch.malformed[0].line, 2);
        assert!(batch.malformed[0].message.contains("not-a-time"));
        assert_eq!(batch.malformed[1].line, 4);
    }

    #[test]
    fn custom_delimiter_and_columns() {
        let schema = CsvSchema {
            delimiter: ';',
            timestamp_format: "%d/%m/%Y %H:%M".into(),
            columns: ColumnMap {
                card_id: "card".into(),
                in_time: "entry".into(),
                out_time: "exit".into(),
                ..ColumnMap::default()
            },
        };
        let text = "card;in_line;in_station;entry;out_line;out_station;exit;card_type\n\
                    77;2;15;02/05/2023 08:05;85;75;02/05/2023 08:47;adult\n";
        let batch = parse_afc_csv(text.as_bytes(), &schema).unwrap();
        assert_eq!(batch.records.len(), 1);
        assert_eq!(batch.records[0].in_time, dt("2023-05-02 08:05:00"));
    }

    #[test]
    fn write_then_parse_preserves_fields() {
        let schema = CsvSchema::default();
        let records = vec![record()];
        let mut buf = Vec::new();
        write_afc_csv(&mut buf, &records, &schema).unwrap();
        let back = parse_afc_csv(buf.as_slice(), &schema).unwrap();
        assert_eq!(back.records, records);
    }

    #[test]
    fn clean_keeps_valid_record() {
        let (valid, report) = clean_records(vec![record()], &net(), &CleaningConfig::default());
        assert_eq!(valid.len(), 1);
        assert_eq!(report.total_in, 1);
        assert_eq!(report.valid_out, 1);
        assert_eq!(report.validity_rate, Some(1.0));
        assert!(report.rejected_per_rule.values().all(|&c| c == 0));
    }

    #[test]
    fn rules_fire_in_fixed_order() {
        let cfg = CleaningConfig::default();
        let network = net();

        let mut r1 = record();
        r1.out_time = r1.in_time;
        // Also violates rule 2; rule 1 must win.
        r1.out_station = r1.in_station.clone();
        assert_eq!(violation(&r1, &network, &cfg), Some(CleaningRule::ExitNotAfterEntry));

        let mut r2 = record();
        r2.out_station = r2.in_station.clone();
        assert_eq!(violation(&r2, &network, &cfg), Some(CleaningRule::SameStation));

        let mut r3 = record();
        r3.in_time = dt("2023-05-02 04:00:00");
        assert_eq!(
            violation(&r3, &network, &cfg),
            Some(CleaningRule::OutsideOperatingHours)
        );

        let mut r4 = record();
        r4.out_station = "777".into();
        assert_eq!(violation(&r4, &network, &cfg), Some(CleaningRule::UnknownStation));

        let mut r5 = record();
        r5.out_time = dt("2023-05-02 12:06:00"); // 4h01m
        assert_eq!(violation(&r5, &network, &cfg), Some(CleaningRule::ExcessiveDuration));

        // Exactly the maximum duration is acceptable.
        let mut ok = record();
        ok.out_time = dt("2023-05-02 12:05:00");
        assert_eq!(violation(&ok, &network, &cfg), None);
    }

    #[test]
    fn swipe_at_window_edge_is_in_service() {
        let cfg = CleaningConfig::default();
        let mut r = record();
        r.in_time = dt("2023-05-02 05:30:00");
        r.out_time = dt("2023-05-02 05:40:00");
        assert_eq!(violation(&r, &net(), &cfg), None);
        r.in_time = dt("2023-05-02 22:00:00");
        r.out_time = dt("2023-05-02 22:30:00");
        assert_eq!(violation(&r, &net(), &cfg), None);
    }

    #[test]
    fn report_counts_one_rejection_per_record() {
        let cfg = CleaningConfig::default();
        let mut bad_time = record();
        bad_time.out_time = bad_time.in_time - chrono::Duration::minutes(5);
        let mut bad_station = record();
        bad_station.out_station = "777".into();
        let (valid, report) =
            clean_records(vec![record(), bad_time, bad_station], &net(), &cfg);
        assert_eq!(valid.len(), 1);
        assert_eq!(report.total_in, 3);
        assert_eq!(report.rejected_per_rule[&1], 1);
        assert_eq!(report.rejected_per_rule[&4], 1);
        let rejected: usize = report.rejected_per_rule.values().sum();
        assert_eq!(report.total_in, report.valid_out + rejected);
        assert!((report.validity_rate.unwrap() - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn empty_input_has_no_validity_rate() {
        let (valid, report) = clean_records(Vec::new(), &net(), &CleaningConfig::default());
        assert!(valid.is_empty());
        assert_eq!(report.total_in, 0);
        assert_eq!(report.validity_rate, None);
        let json = serde_json::to_string(&report).unwrap();
        assert!(!json.contains("validity_rate"));
    }

    #[test]
    fn split_partitions_by_line_codes() {
        let same = record_with_lines("2", "2");
        let cross = record_with_lines("2", "85");
        let (single, multi) = split_by_line_consistency(vec![same.clone(), cross.clone()]);
        assert_eq!(single, vec![same]);
        assert_eq!(multi, vec![cross]);
    }

    fn record_with_lines(in_line: &str, out_line: &str) -> AfcRecord {
        let mut r = record();
        r.in_line = in_line.into();
        r.out_line = out_line.into();
        r
    }
}
