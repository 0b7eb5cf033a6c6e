//! Parsing and rule-based cleaning of raw fare-gate records.
//!
//! Feeds a small in-memory CSV through the ingestion chain: one well-formed
//! valid trip, one record per cleaning rule violation, and one row the
//! parser itself rejects. Shows what survives and why the rest fell.
//!
//! ```text
//! cargo run -p metroflow --example ingest_clean
//! ```

use metroflow::afc::{clean_records, parse_afc_csv, CleaningConfig, CleaningRule, CsvSchema};
use metroflow::synth::fixture_network;

fn main() -> metroflow::Result<()> {
    let csv = "\
card_id,in_line,in_station,in_time,out_line,out_station,out_time,card_type
C0001,L2,S08,2024-03-04 08:00:00,L1,S07,2024-03-04 08:40:00,adult
C0002,L2,S08,2024-03-04 08:30:00,L1,S07,2024-03-04 08:10:00,adult
C0003,L1,S03,2024-03-04 09:00:00,L1,S03,2024-03-04 09:20:00,adult
C0004,L2,S08,2024-03-04 04:00:00,L1,S07,2024-03-04 04:40:00,adult
C0005,L9,S99,2024-03-04 10:00:00,L1,S07,2024-03-04 10:40:00,adult
C0006,L2,S08,2024-03-04 08:00:00,L1,S07,2024-03-04 13:30:00,adult
C0007,L2,S08,not a timestamp,L1,S07,2024-03-04 08:40:00,adult
";

    let schema = CsvSchema::default();
    let batch = parse_afc_csv(csv.as_bytes(), &schema)?;
    println!(
        "parsed {} records; {} malformed row(s):",
        batch.records.len(),
        batch.malformed.len()
    );
    for row in &batch.malformed {
        println!("  line {}: {}", row.line, row.message);
    }

    let net = fixture_network();
    let cfg = CleaningConfig::default();
    let (valid, report) = clean_records(batch.records, &net, &cfg);

    println!("\ncleaning with hours {} / max trip {}s:", cfg.operating_hours, cfg.max_trip_secs);
    for rule in CleaningRule::ALL {
        let n = report.rejected_per_rule.get(&rule.id()).copied().unwrap_or(0);
        println!("  rule {} ({}): rejected {n}", rule.id(), rule.label());
    }
    println!(
        "  {} of {} valid ({:.1}%)",
        report.valid_out,
        report.total_in,
        report.validity_rate.unwrap_or(0.0) * 100.0
    );

    assert_eq!(valid.len(), 1);
    println!("\nsurvivor: {} ({} -> {})", valid[0].card_id, valid[0].in_station, valid[0].out_station);
    Ok(())
}
