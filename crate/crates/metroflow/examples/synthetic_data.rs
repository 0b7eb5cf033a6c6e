//! Seeded synthetic data and the ground truth that comes with it.
//!
//! Generates a flow series and a passenger-level record stream from one
//! config, then demonstrates the two oracle guarantees: the series rebuilds
//! bit-for-bit from its stored components, and the record stream's transfer
//! counts match what the extraction pipeline recovers.
//!
//! ```text
//! cargo run -p metroflow --example synthetic_data
//! ```

use metroflow::flow::aggregate;
use metroflow::network::extract_transfers;
use metroflow::synth::{fixture_network, generate_afc, generate_series, SynthConfig};

fn main() -> metroflow::Result<()> {
    // A small week so the output stays readable.
    let cfg = SynthConfig {
        days: 7,
        day_window: "06:30-09:30".parse()?,
        od_whitelist: vec![("S08".into(), "S07".into()), ("S12".into(), "S13".into())],
        ..SynthConfig::default()
    };

    let (series, truth) = generate_series(&cfg)?;
    println!(
        "series: {} bins over {} days at station {} (seed {})",
        series.len(),
        series.dates.len(),
        series.station,
        cfg.seed
    );
    println!(
        "  spiked bins: {:?} (factors {:?})",
        truth.spike_indices,
        truth
            .spike_factors
            .iter()
            .map(|f| (f * 100.0).round() / 100.0)
            .collect::<Vec<_>>()
    );
    assert_eq!(series.counts, truth.reconstruct());
    println!("  reconstruction from trend+seasonal+noise+spikes: exact\n");

    let (records, afc_truth) = generate_afc(&cfg)?;
    println!(
        "records: {} trips, {} transfer events at {} station(s)",
        records.len(),
        afc_truth.total_events,
        afc_truth.station_counts.len()
    );
    let sample = &records[0];
    println!(
        "  first record: card {} {} {} -> {} {} ({} -> {})",
        sample.card_id,
        sample.in_line,
        sample.in_station,
        sample.out_line,
        sample.out_station,
        sample.in_time.format("%m-%d %H:%M:%S"),
        sample.out_time.format("%H:%M:%S"),
    );

    // The oracle check: extraction recovers the generator's counts exactly.
    let net = fixture_network();
    let extraction = extract_transfers(&records, &net);
    for station in afc_truth.station_counts.keys() {
        let (recovered, _) = aggregate(
            &extraction.events,
            station,
            cfg.interval_secs,
            cfg.day_window,
            &afc_truth.dates,
        )?;
        let expected = afc_truth.series_for(station)?;
        assert_eq!(recovered.counts, expected.counts);
        println!(
            "  {station}: {} transfer events recovered exactly",
            recovered.counts.iter().sum::<u64>()
        );
    }
    Ok(())
}
