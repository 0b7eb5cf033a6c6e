//! Decompose-then-forecast versus forecasting the raw series.
//!
//! Runs the full pipeline twice on the same scenario data — once training
//! one GRU per STL component (trend, seasonal, repaired residual), once
//! training a single GRU on the raw series — and compares the errors. This
//! is one cell pair of the full comparison grid.
//!
//! ```text
//! cargo run -p metroflow --example forecast_stl_gru
//! ```

use metroflow::neural::{CellKind, ModelConfig, TrainingConfig};
use metroflow::pipeline::{run_raw_pipeline, run_stl_pipeline, PipelineOptions};
use metroflow::stl::StlParams;
use metroflow::synth::{generate_series, SynthConfig};

fn main() -> metroflow::Result<()> {
    // Two weeks on a 15-minute grid: big enough to learn from, small
    // enough to train in seconds.
    let synth = SynthConfig {
        days: 14,
        interval_secs: 900,
        day_window: "06:00-23:00".parse()?,
        noise_level: 0.3,
        ..SynthConfig::default()
    };
    let (series, _) = generate_series(&synth)?;
    let spd = series.samples_per_day();

    let model = ModelConfig {
        cell: CellKind::Gru,
        layer_sizes: vec![16],
        seed: 1,
        ..ModelConfig::default()
    };
    let training = TrainingConfig {
        epochs: 20,
        batch_size: 64,
        ..TrainingConfig::default()
    };
    let options = PipelineOptions::default();
    let stl = StlParams {
        period: spd,
        ..StlParams::default()
    };

    println!("train/test split: last day of 14 held out; lookback {} bins\n", options.lookback);

    let stl_run = run_stl_pipeline(&series, &stl, &model, &training, &options)?;
    let raw_run = run_raw_pipeline(&series, &model, &training, &options)?;

    for (name, run) in [("STL-GRU", &stl_run), ("GRU", &raw_run)] {
        let e = &run.evaluation;
        println!(
            "{name:8} E1 = {:>6.2}%  E2 = {:>7.2}  ({} components, decompose+predict {:.3}s)",
            e.mape.unwrap_or(f64::NAN),
            e.rmse,
            run.components.len(),
            e.prediction_time_secs
        );
        for c in &run.components {
            println!("          component `{}` trained with seed {}", c.name, c.seed);
        }
    }

    let (stl_e1, raw_e1) = (
        stl_run.evaluation.mape.unwrap_or(f64::NAN),
        raw_run.evaluation.mape.unwrap_or(f64::NAN),
    );
    println!(
        "\ndecomposing first {} on this data ({:.2} vs {:.2} E1)",
        if stl_e1 < raw_e1 { "wins" } else { "does not win" },
        stl_e1,
        raw_e1
    );

    println!("\nfirst test-day hour is seeded by same-weekday history, then the model takes over:");
    for t in 0..4 {
        println!(
            "  bin {t}: actual {:6.1}  predicted {:7.2}",
            stl_run.actual[t], stl_run.predictions[t]
        );
    }
    Ok(())
}
