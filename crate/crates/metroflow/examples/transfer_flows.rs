//! From raw records to binned transfer-flow series.
//!
//! Generates two weeks of passenger records, extracts per-passenger
//! transfer events, bins them into a 5-minute series at the hub, splits the
//! series by day class, and computes a same-period historical average — the
//! quantity the forecast pipeline uses to seed each test day's first hour.
//!
//! ```text
//! cargo run -p metroflow --example transfer_flows
//! ```

use metroflow::calendar::DayWindow;
use metroflow::flow::{aggregate, same_period_average, split_scenarios};
use metroflow::network::extract_transfers;
use metroflow::synth::{fixture_network, generate_afc, SynthConfig};

fn main() -> metroflow::Result<()> {
    let cfg = SynthConfig {
        days: 14,
        day_window: "07:00-10:00".parse()?,
        od_whitelist: vec![
            ("S08".into(), "S07".into()),
            ("S01".into(), "S12".into()),
            ("S13".into(), "S04".into()),
        ],
        ..SynthConfig::default()
    };
    let (records, truth) = generate_afc(&cfg)?;
    let net = fixture_network();
    let extraction = extract_transfers(&records, &net);
    println!(
        "{} trips -> {} transfer events ({} unroutable records)",
        records.len(),
        extraction.events.len(),
        extraction.unroutable.len()
    );

    let (series, report) = aggregate(
        &extraction.events,
        "S05",
        cfg.interval_secs,
        cfg.day_window,
        &truth.dates,
    )?;
    println!(
        "S05 series: {} bins over {} days ({} events binned, {} at other stations)",
        series.len(),
        series.dates.len(),
        report.binned,
        report.other_station
    );

    let by_class = split_scenarios(&series, &cfg.calendar())?;
    println!("\nday-class split:");
    for (scenario, sub) in &by_class {
        let mean =
            sub.counts.iter().sum::<u64>() as f64 / sub.counts.len().max(1) as f64;
        println!(
            "  {scenario}: {} days, mean {mean:.2} transfers per 5-minute bin",
            sub.dates.len()
        );
    }

    // Average of the last two same-weekday mornings before the final day.
    let target = *series.dates.last().unwrap();
    let first_hour = DayWindow::new(7 * 3600, 8 * 3600)?;
    let avg = same_period_average(&series, target, first_hour, 2)?;
    println!(
        "\nsame-weekday 07:00-08:00 average before {target}: {:?}",
        avg.iter().map(|v| (v * 100.0).round() / 100.0).collect::<Vec<_>>()
    );
    Ok(())
}
