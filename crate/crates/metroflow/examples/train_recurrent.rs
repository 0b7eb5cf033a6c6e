//! Training a recurrent forecaster from scratch.
//!
//! Fits a small GRU to one synthetic week with the built-in Adam/MAE
//! trainer, then runs sliding single-step predictions and scores them.
//! Swap `CellKind::Gru` for `CellKind::Lstm` to compare cells.
//!
//! ```text
//! cargo run -p metroflow --example train_recurrent
//! ```

use metroflow::neural::{
    train, CellKind, MinMaxScaler, ModelConfig, RecurrentModel, TrainingConfig, WindowedDataset,
};
use metroflow::pipeline::evaluate;
use metroflow::synth::{generate_series, SynthConfig};

fn main() -> metroflow::Result<()> {
    let synth = SynthConfig {
        days: 7,
        interval_secs: 1800,
        day_window: "06:00-22:00".parse()?,
        noise_level: 0.2,
        outlier_rate: 0.0,
        ..SynthConfig::default()
    };
    let (series, _) = generate_series(&synth)?;
    let values = series.values_f64();

    let lookback = 6;
    let scaler = MinMaxScaler::fit(&values)?;
    let data = WindowedDataset::with_scaler(&values, lookback, scaler.clone())?;

    let model_cfg = ModelConfig {
        cell: CellKind::Gru,
        layer_sizes: vec![8],
        seed: 3,
        ..ModelConfig::default()
    };
    let train_cfg = TrainingConfig {
        epochs: 15,
        batch_size: 32,
        shuffle_seed: 503,
        ..TrainingConfig::default()
    };

    let mut model = RecurrentModel::new(model_cfg)?;
    println!(
        "training a 1-layer GRU ({} parameters) on {} windows of {lookback}",
        model.parameter_count(),
        data.len()
    );
    let trace = train(&mut model, &data, &train_cfg)?;
    for (epoch, loss) in trace.iter().enumerate() {
        if epoch % 3 == 0 || epoch + 1 == trace.len() {
            println!("  epoch {:>2}: mean |error| = {loss:.5} (scaled units)", epoch + 1);
        }
    }

    let predictions = model.predict_series(&values, lookback, &scaler)?;
    let result = evaluate(&values[lookback..], &predictions)?;
    match result.mape {
        Some(mape) => println!(
            "\nsingle-step predictions over {} bins: MAPE {mape:.2}% (over {} nonzero actuals), RMSE {:.2}",
            result.n,
            result.n - result.zero_actual_excluded,
            result.rmse
        ),
        None => println!("\nall actuals zero; RMSE {:.2}", result.rmse),
    }

    println!("\nlast three predictions vs actuals:");
    let offset = values.len() - 3;
    for t in offset..values.len() {
        println!(
            "  {}  actual {:5.0}  predicted {:7.1}",
            series.timestamp_at(t).format("%a %H:%M"),
            values[t],
            predictions[t - lookback]
        );
    }
    Ok(())
}
