//! End-to-end forecasting runs and the four-model comparison grid.
//!
//! A run takes one [`FlowSeries`], splits it chronologically into whole
//! train/test days, optionally decomposes it into trend + seasonal +
//! residual (with the residual's outliers repaired), trains one recurrent
//! model per component, predicts the test span single step at a time with
//! true observed history, sums the component predictions back together, and
//! scores the result with the two error measures below.
//!
//! The comparison grid runs every model variant (plain and decomposed, GRU
//! and LSTM cells) on every scenario series and collects one report row per
//! cell with errors, timings and the seed the cell used.
//!
//! ## Seed derivation
//!
//! Every random stream is pinned by offsets from one master seed so adding
//! or removing a cell never perturbs the others:
//!
//! | level     | offset                                                    |
//! |-----------|-----------------------------------------------------------|
//! | model     | LSTM +10_000, GRU +20_000, STL-LSTM +30_000, STL-GRU +40_000 |
//! | scenario  | weekday_excl_fri +1_000, friday +2_000, rest_day +3_000   |
//! | component | raw series +0, trend +100, seasonal +200, residual +300   |
//! | shuffling | component seed +500 (weight init uses the component seed) |

use std::collections::BTreeMap;
use std::time::Instant;

use chrono::NaiveDateTime;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::calendar::{DayWindow, Scenario};
use crate::error::{Error, Result};
use crate::flow::{same_period_average_values, FlowSeries};
use crate::neural::train::{train, TrainingConfig};
use crate::neural::{CellKind, MinMaxScaler, ModelConfig, RecurrentModel, WindowedDataset};
use crate::stl::{sigma3_repair, stl_decompose, StlDecomposition, StlParams};

/// Seed offset for the trend component's model.
pub const COMPONENT_SEED_TREND: u64 = 100;
/// Seed offset for the seasonal component's model.
pub const COMPONENT_SEED_SEASONAL: u64 = 200;
/// Seed offset for the residual component's model.
pub const COMPONENT_SEED_RESIDUAL: u64 = 300;
/// Offset from a component's model seed to its shuffle/dropout seed.
pub const SHUFFLE_SEED_OFFSET: u64 = 500;

// ---------------------------------------------------------------------------
// Metrics
// ---------------------------------------------------------------------------

/// Forecast error summary for one prediction span.
///
/// `mape` is the mean absolute percentage error in percent, averaged over
/// the points whose actual value is nonzero; points with a zero actual are
/// excluded from it (division by zero) and counted in
/// `zero_actual_excluded` instead. It is `None` when every actual is zero.
/// `rmse` is the root-mean-square error over all `n` points, in the
/// series' original units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationResult {
    pub mape: Option<f64>,
    pub rmse: f64,
    /// Number of evaluated points (all of them enter the RMSE).
    pub n: usize,
    /// Points excluded from the MAPE because the actual value is zero.
    pub zero_actual_excluded: usize,
    /// Wall-clock seconds spent producing the predictions (inference plus,
    /// for decomposed runs, the decomposition itself). Informational only;
    /// zeroed by [`ComparisonReport::normalized_for_comparison`].
    pub prediction_time_secs: f64,
}

/// Scores `predicted` against `actual` (equal nonzero lengths).
///
/// Each percentage term is computed as `100·|y−ŷ| / |y|` so that exactly
/// representable inputs give exactly representable percentages.
pub fn evaluate(actual: &[f64], predicted: &[f64]) -> Result<EvaluationResult> {
    if actual.len() != predicted.len() {
        return Err(Error::Input(format!(
            "evaluate needs equal lengths, got {} actual vs {} predicted",
            actual.len(),
            predicted.len()
        )));
    }
    if actual.is_empty() {
        return Err(Error::Input("evaluate needs at least one point".into()));
    }
    if actual.iter().chain(predicted).any(|v| !v.is_finite()) {
        return Err(Error::Numeric(
            "evaluate called with a non-finite value".into(),
        ));
    }
    let mut pct_sum = 0.0;
    let mut included = 0usize;
    let mut excluded = 0usize;
    let mut sq_sum = 0.0;
    for (&y, &p) in actual.iter().zip(predicted) {
        let err = y - p;
        sq_sum += err * err;
        if y == 0.0 {
            excluded += 1;
        } else {
            pct_sum += (100.0 * err.abs()) / y.abs();
            included += 1;
        }
    }
    let mape = (included > 0).then(|| pct_sum / included as f64);
    let rmse = (sq_sum / actual.len() as f64).sqrt();
    Ok(EvaluationResult {
        mape,
        rmse,
        n: actual.len(),
        zero_actual_excluded: excluded,
        prediction_time_secs: 0.0,
    })
}

// ---------------------------------------------------------------------------
// Train/test split
// ---------------------------------------------------------------------------

/// Number of training days for a chronological day-aligned split:
/// `round(ratio × days)`, clamped so both sides keep at least one day.
pub fn train_day_count(days: usize, ratio: f64) -> Result<usize> {
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(Error::Parameter(format!(
            "train ratio must be in (0, 1), got {ratio}"
        )));
    }
    if days < 2 {
        return Err(Error::InsufficientData(format!(
            "need at least two days to split, got {days}"
        )));
    }
    let t = (ratio * days as f64).round() as usize;
    Ok(t.clamp(1, days - 1))
}

/// Splits a series chronologically into whole train and test days.
pub fn split_train_test(series: &FlowSeries, ratio: f64) -> Result<(FlowSeries, FlowSeries)> {
    series.validate()?;
    let days = series.dates.len();
    let t = train_day_count(days, ratio)?;
    Ok((series.slice_days(0..t), series.slice_days(t..days)))
}

// ---------------------------------------------------------------------------
// Run configuration
// ---------------------------------------------------------------------------

/// How to produce the first `lookback` predictions of each test day, where
/// no same-day history exists yet.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FirstHourPolicy {
    /// Seed those bins with the bin-wise average of the same clock-time
    /// range on the most recent `lookback_weeks` same-weekday dates.
    SamePeriodAverage { lookback_weeks: usize },
    /// Let the model's window run across the day boundary (uses the tail of
    /// the previous day in the series, which may be a week away in
    /// scenario-filtered series).
    CrossDay,
}

impl Default for FirstHourPolicy {
    fn default() -> Self {
        FirstHourPolicy::SamePeriodAverage { lookback_weeks: 5 }
    }
}

/// Options shared by every pipeline run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PipelineOptions {
    /// Fraction of days used for training.
    pub train_ratio: f64,
    /// Window length in bins fed to the models (one hour on the 5-minute
    /// grid).
    pub lookback: usize,
    pub first_hour: FirstHourPolicy,
}

impl Default for PipelineOptions {
    fn default() -> Self {
        PipelineOptions {
            train_ratio: 0.8,
            lookback: 12,
            first_hour: FirstHourPolicy::default(),
        }
    }
}

impl PipelineOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.train_ratio > 0.0 && self.train_ratio < 1.0) {
            return Err(Error::Parameter(format!(
                "train ratio must be in (0, 1), got {}",
                self.train_ratio
            )));
        }
        if self.lookback == 0 {
            return Err(Error::Parameter("lookback must be at least 1".into()));
        }
        if let FirstHourPolicy::SamePeriodAverage { lookback_weeks } = self.first_hour {
            if lookback_weeks == 0 {
                return Err(Error::Parameter(
                    "same-period averaging needs lookback_weeks of at least 1".into(),
                ));
            }
        }
        Ok(())
    }
}

/// What the run trains on.
#[derive(Debug, Clone)]
pub enum PipelineMode {
    /// One model on the raw series.
    Raw,
    /// Decompose, repair residual outliers, one model per component.
    Stl(StlParams),
    /// Degenerate decomposition (trend = 0, seasonal = 0, residual = the
    /// raw series) exercising the decomposed code path. It replaces the
    /// whole decomposition stage — including outlier repair — so its output
    /// reproduces [`PipelineMode::Raw`] bit for bit.
    StubDecomposition,
}

// ---------------------------------------------------------------------------
// Run results
// ---------------------------------------------------------------------------

/// One trained component inside a run.
#[derive(Debug, Clone)]
pub struct ComponentRun {
    pub name: &'static str,
    /// Weight-init seed this component's model used.
    pub seed: u64,
    /// Mean training loss per epoch (scaled units).
    pub loss_trace: Vec<f64>,
    /// Test-span predictions in this component's units.
    pub predictions: Vec<f64>,
}

/// Everything a pipeline run produces.
#[derive(Debug, Clone)]
pub struct PipelineArtifacts {
    /// Final test-span predictions (sum of the component predictions).
    pub predictions: Vec<f64>,
    /// Held-out actual values over the same span.
    pub actual: Vec<f64>,
    pub evaluation: EvaluationResult,
    pub components: Vec<ComponentRun>,
    pub train_days: usize,
    pub test_days: usize,
    /// The decomposition, when the run performed one.
    pub decomposition: Option<StlDecomposition>,
    /// Residual indices the outlier repair replaced (empty unless decomposed).
    pub repaired_indices: Vec<usize>,
    pub decompose_secs: f64,
    pub train_secs: f64,
    pub predict_secs: f64,
}

// ---------------------------------------------------------------------------
// The run itself
// ---------------------------------------------------------------------------

fn predict_component(
    model: &RecurrentModel,
    scaler: &MinMaxScaler,
    series: &FlowSeries,
    values: &[f64],
    train_days: usize,
    lookback: usize,
    first_hour: FirstHourPolicy,
) -> Result<Vec<f64>> {
    let spd = series.samples_per_day();
    let t_bins = train_days * spd;
    // Window ending at the first test bin starts `lookback` bins before the
    // boundary; every later test bin's window is a suffix of this tail.
    let tail = &values[t_bins - lookback..];
    let mut preds = model.predict_series(tail, lookback, scaler)?;
    if let FirstHourPolicy::SamePeriodAverage { lookback_weeks } = first_hour {
        let w = series.day_window;
        let first_range = DayWindow::new(
            w.start_sec(),
            w.start_sec() + lookback as u32 * series.interval_secs,
        )?;
        for day in train_days..series.dates.len() {
            let seed_values = same_period_average_values(
                &series.dates,
                spd,
                values,
                w,
                series.interval_secs,
                series.dates[day],
                first_range,
                lookback_weeks,
            )?;
            let base = day * spd - t_bins;
            preds[base..base + lookback].copy_from_slice(&seed_values);
        }
    }
    Ok(preds)
}

/// Runs one forecasting pipeline on one series.
///
/// Steps: chronological day-aligned split; per `mode`, either the raw
/// series or its decomposition components; per component, fit a min-max
/// scaler on the training span, train a model seeded
/// `model_cfg.seed + component offset` (shuffling seeded a further
/// [`SHUFFLE_SEED_OFFSET`] above that — `train_cfg.shuffle_seed` is
/// ignored here); predict the test span single step at a time from true
/// history, with each day's first `lookback` bins handled by
/// `options.first_hour`; sum the component predictions; evaluate against
/// the held-out actuals. Any stage error propagates wrapped with the stage
/// name (`decompose`, `repair`, `train`, `predict`, `evaluate`).
pub fn run_pipeline(
    series: &FlowSeries,
    mode: &PipelineMode,
    model_cfg: &ModelConfig,
    train_cfg: &TrainingConfig,
    options: &PipelineOptions,
) -> Result<PipelineArtifacts> {
    options.validate()?;
    series.validate()?;
    let spd = series.samples_per_day();
    let days = series.dates.len();
    let lookback = options.lookback;
    if spd <= lookback {
        return Err(Error::InsufficientData(format!(
            "a day has {spd} bins; within-day prediction needs more than the lookback of {lookback}"
        )));
    }
    let train_days = train_day_count(days, options.train_ratio)?;
    let t_bins = train_days * spd;
    let values = series.values_f64();

    // Component series, in summation order.
    let mut decomposition = None;
    let mut repaired_indices = Vec::new();
    let mut decompose_secs = 0.0;
    let components_in: Vec<(&'static str, u64, Vec<f64>)> = match mode {
        PipelineMode::Raw => vec![("series", 0, values.clone())],
        PipelineMode::Stl(params) => {
            let started = Instant::now();
            let decomp = stl_decompose(&values, params).map_err(|e| e.in_stage("decompose"))?;
            let repair =
                sigma3_repair(&decomp.residual, spd).map_err(|e| e.in_stage("repair"))?;
            decompose_secs = started.elapsed().as_secs_f64();
            let out = vec![
                ("trend", COMPONENT_SEED_TREND, decomp.trend.clone()),
                ("seasonal", COMPONENT_SEED_SEASONAL, decomp.seasonal.clone()),
                ("residual", COMPONENT_SEED_RESIDUAL, repair.repaired),
            ];
            repaired_indices = repair.flagged;
            decomposition = Some(decomp);
            out
        }
        PipelineMode::StubDecomposition => vec![
            ("trend", COMPONENT_SEED_TREND, vec![0.0; values.len()]),
            ("seasonal", COMPONENT_SEED_SEASONAL, vec![0.0; values.len()]),
            ("series", 0, values.clone()),
        ],
    };

    let mut components = Vec::with_capacity(components_in.len());
    let mut train_secs = 0.0;
    let mut predict_secs = 0.0;
    for (name, offset, comp_values) in components_in {
        let mut comp_model_cfg = model_cfg.clone();
        comp_model_cfg.seed = model_cfg.seed.wrapping_add(offset);
        let mut comp_train_cfg = *train_cfg;
        comp_train_cfg.shuffle_seed = comp_model_cfg.seed.wrapping_add(SHUFFLE_SEED_OFFSET);
        let seed = comp_model_cfg.seed;

        let train_values = &comp_values[..t_bins];
        let scaler = MinMaxScaler::fit(train_values).map_err(|e| e.in_stage("train"))?;
        let data = WindowedDataset::with_scaler(train_values, lookback, scaler.clone())
            .map_err(|e| e.in_stage("train"))?;
        let mut model = RecurrentModel::new(comp_model_cfg).map_err(|e| e.in_stage("train"))?;
        let started = Instant::now();
        let loss_trace =
            train(&mut model, &data, &comp_train_cfg).map_err(|e| e.in_stage("train"))?;
        train_secs += started.elapsed().as_secs_f64();

        let started = Instant::now();
        let predictions = predict_component(
            &model,
            &scaler,
            series,
            &comp_values,
            train_days,
            lookback,
            options.first_hour,
        )
        .map_err(|e| e.in_stage("predict"))?;
        predict_secs += started.elapsed().as_secs_f64();

        components.push(ComponentRun {
            name,
            seed,
            loss_trace,
            predictions,
        });
    }

    // Final prediction: elementwise sum of the component predictions.
    let n_test = values.len() - t_bins;
    let mut predictions = vec![0.0; n_test];
    for component in &components {
        for (p, v) in predictions.iter_mut().zip(&component.predictions) {
            *p += v;
        }
    }
    let actual = values[t_bins..].to_vec();
    let mut evaluation = evaluate(&actual, &predictions).map_err(|e| e.in_stage("evaluate"))?;
    evaluation.prediction_time_secs = decompose_secs + predict_secs;

    Ok(PipelineArtifacts {
        predictions,
        actual,
        evaluation,
        components,
        train_days,
        test_days: days - train_days,
        decomposition,
        repaired_indices,
        decompose_secs,
        train_secs,
        predict_secs,
    })
}

/// Decomposed run: decompose, repair, train a model per component, sum.
pub fn run_stl_pipeline(
    series: &FlowSeries,
    stl: &StlParams,
    model_cfg: &ModelConfig,
    train_cfg: &TrainingConfig,
    options: &PipelineOptions,
) -> Result<PipelineArtifacts> {
    run_pipeline(
        series,
        &PipelineMode::Stl(stl.clone()),
        model_cfg,
        train_cfg,
        options,
    )
}

/// Baseline run: one model on the raw series, same split and evaluation.
pub fn run_raw_pipeline(
    series: &FlowSeries,
    model_cfg: &ModelConfig,
    train_cfg: &TrainingConfig,
    options: &PipelineOptions,
) -> Result<PipelineArtifacts> {
    run_pipeline(series, &PipelineMode::Raw, model_cfg, train_cfg, options)
}

// ---------------------------------------------------------------------------
// The comparison grid
// ---------------------------------------------------------------------------

/// One of the four compared model variants.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelVariant {
    Lstm,
    Gru,
    StlLstm,
    StlGru,
}

impl ModelVariant {
    /// Report row order: plain baselines first, decomposed variants after.
    pub const ALL: [ModelVariant; 4] = [
        ModelVariant::Lstm,
        ModelVariant::Gru,
        ModelVariant::StlLstm,
        ModelVariant::StlGru,
    ];

    pub fn label(self) -> &'static str {
        match self {
            ModelVariant::Lstm => "LSTM",
            ModelVariant::Gru => "GRU",
            ModelVariant::StlLstm => "STL-LSTM",
            ModelVariant::StlGru => "STL-GRU",
        }
    }

    pub fn cell(self) -> CellKind {
        match self {
            ModelVariant::Lstm | ModelVariant::StlLstm => CellKind::Lstm,
            ModelVariant::Gru | ModelVariant::StlGru => CellKind::Gru,
        }
    }

    /// Whether the variant decomposes the series before training.
    pub fn decomposed(self) -> bool {
        matches!(self, ModelVariant::StlLstm | ModelVariant::StlGru)
    }

    /// Master-seed offset (see the module docs).
    pub fn seed_offset(self) -> u64 {
        match self {
            ModelVariant::Lstm => 10_000,
            ModelVariant::Gru => 20_000,
            ModelVariant::StlLstm => 30_000,
            ModelVariant::StlGru => 40_000,
        }
    }
}

impl std::fmt::Display for ModelVariant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

impl std::str::FromStr for ModelVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<ModelVariant> {
        match s.to_ascii_lowercase().as_str() {
            "lstm" => Ok(ModelVariant::Lstm),
            "gru" => Ok(ModelVariant::Gru),
            "stl-lstm" | "stl_lstm" => Ok(ModelVariant::StlLstm),
            "stl-gru" | "stl_gru" => Ok(ModelVariant::StlGru),
            other => Err(Error::Parameter(format!(
                "unknown model `{other}` (expected lstm, gru, stl-lstm or stl-gru)"
            ))),
        }
    }
}

/// Master-seed offset per scenario (see the module docs).
pub fn scenario_seed_offset(scenario: Scenario) -> u64 {
    match scenario {
        Scenario::WeekdayExclFri => 1_000,
        Scenario::Friday => 2_000,
        Scenario::RestDay => 3_000,
        // Not part of the comparison grid; kept total for standalone runs.
        Scenario::All => 4_000,
    }
}

/// Everything the comparison grid needs besides the data and the master seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CompareConfig {
    pub stl: StlParams,
    /// When true (the default), each cell's decomposition period is the
    /// scenario series' own samples-per-day count; `stl.period` is then
    /// only a fallback for `auto_period = false`.
    pub auto_period: bool,
    /// Architecture shared by every cell; the seed field is overridden per
    /// cell, and the cell kind per model variant.
    pub model: ModelConfig,
    /// Training settings shared by every cell; the shuffle seed is derived
    /// per component.
    pub training: TrainingConfig,
    pub options: PipelineOptions,
}

impl Default for CompareConfig {
    fn default() -> Self {
        CompareConfig {
            stl: StlParams::default(),
            auto_period: true,
            model: ModelConfig::default(),
            training: TrainingConfig::default(),
            options: PipelineOptions::default(),
        }
    }
}

/// One row of the comparison report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonCell {
    pub model: String,
    pub scenario: String,
    /// Cell seed (master + model offset + scenario offset).
    pub seed: u64,
    /// Present when the cell ran to completion.
    pub evaluation: Option<EvaluationResult>,
    /// Wall-clock seconds spent training this cell's models.
    pub train_secs: f64,
    /// Present when the cell failed; the grid keeps going either way.
    pub error: Option<String>,
}

/// The full grid: one cell per model variant per scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub master_seed: u64,
    /// SHA-256 of the canonical JSON form of the [`CompareConfig`] used.
    pub config_fingerprint: String,
    /// Rows in model-major order ([`ModelVariant::ALL`] × [`Scenario::SPLIT`]).
    pub cells: Vec<ComparisonCell>,
    pub wall_clock_secs: f64,
}

impl ComparisonReport {
    pub fn cell(&self, model: ModelVariant, scenario: Scenario) -> Option<&ComparisonCell> {
        let (m, s) = (model.label(), scenario.to_string());
        self.cells
            .iter()
            .find(|c| c.model == m && c.scenario == s)
    }

    /// Copy with every wall-clock field zeroed, so two runs of the same
    /// seeded configuration compare equal byte for byte.
    pub fn normalized_for_comparison(&self) -> ComparisonReport {
        let mut out = self.clone();
        out.wall_clock_secs = 0.0;
        for cell in &mut out.cells {
            cell.train_secs = 0.0;
            if let Some(ev) = &mut cell.evaluation {
                ev.prediction_time_secs = 0.0;
            }
        }
        out
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<ComparisonReport> {
        Ok(serde_json::from_str(text)?)
    }

    /// Aligned plain-text table with the columns
    /// `Model | Scenario | E1 (%) | E2 | Prediction Time`, plus one note
    /// line per failed cell.
    pub fn render_table(&self) -> String {
        let headers = ["Model", "Scenario", "E1 (%)", "E2", "Prediction Time"];
        let rows: Vec<[String; 5]> = self
            .cells
            .iter()
            .map(|c| {
                let (e1, e2, t) = match &c.evaluation {
                    Some(ev) => (
                        ev.mape.map_or_else(|| "n/a".into(), |m| format!("{m:.2}")),
                        format!("{:.3}", ev.rmse),
                        format!("{:.3} s", ev.prediction_time_secs),
                    ),
                    None => ("failed".into(), "-".into(), "-".into()),
                };
                [c.model.clone(), c.scenario.clone(), e1, e2, t]
            })
            .collect();
        let mut widths = headers.map(str::len);
        for row in &rows {
            for (w, cell) in widths.iter_mut().zip(row) {
                *w = (*w).max(cell.len());
            }
        }
        let mut out = String::new();
        let fmt_row = |cols: [&str; 5]| -> String {
            // Text columns left-aligned, numeric columns right-aligned.
            format!(
                "{:<w0$} | {:<w1$} | {:>w2$} | {:>w3$} | {:>w4$}\n",
                cols[0],
                cols[1],
                cols[2],
                cols[3],
                cols[4],
                w0 = widths[0],
                w1 = widths[1],
                w2 = widths[2],
                w3 = widths[3],
                w4 = widths[4],
            )
        };
        out.push_str(&fmt_row(headers));
        let rule: Vec<String> = widths.iter().map(|w| "-".repeat(*w)).collect();
        out.push_str(&format!(
            "{}-+-{}-+-{}-+-{}-+-{}\n",
            rule[0], rule[1], rule[2], rule[3], rule[4]
        ));
        for row in &rows {
            out.push_str(&fmt_row([&row[0], &row[1], &row[2], &row[3], &row[4]]));
        }
        for cell in &self.cells {
            if let Some(err) = &cell.error {
                out.push_str(&format!(
                    "note: {} / {} failed: {err}\n",
                    cell.model, cell.scenario
                ));
            }
        }
        out
    }
}

/// Test-span series of one successful cell, for plotting or inspection.
#[derive(Debug, Clone)]
pub struct CellSeries {
    pub model: String,
    pub scenario: String,
    pub timestamps: Vec<NaiveDateTime>,
    pub actual: Vec<f64>,
    pub predicted: Vec<f64>,
}

impl CellSeries {
    /// `lstm_weekday_excl_fri`-style stem for file names.
    pub fn file_stem(&self) -> String {
        format!(
            "{}_{}",
            self.model.to_ascii_lowercase().replace('-', "_"),
            self.scenario
        )
    }

    /// Three columns: bin timestamp, actual count, predicted value.
    pub fn write_csv<W: std::io::Write>(&self, writer: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(writer);
        wtr.write_record(["timestamp", "actual", "predicted"])?;
        for ((ts, a), p) in self.timestamps.iter().zip(&self.actual).zip(&self.predicted) {
            wtr.write_record([
                ts.format("%Y-%m-%d %H:%M:%S").to_string(),
                format!("{a}"),
                format!("{p}"),
            ])?;
        }
        wtr.flush()?;
        Ok(())
    }
}

/// A finished comparison: the report plus per-cell prediction series.
#[derive(Debug, Clone)]
pub struct ComparisonRun {
    pub report: ComparisonReport,
    /// One entry per successful cell, in report row order.
    pub cell_series: Vec<CellSeries>,
}

fn fingerprint(cfg: &CompareConfig) -> Result<String> {
    let bytes = serde_json::to_vec(cfg)?;
    let mut hasher = Sha256::new();
    hasher.update(&bytes);
    Ok(format!("{:x}", hasher.finalize()))
}

fn run_cell(
    series: &FlowSeries,
    variant: ModelVariant,
    scenario: Scenario,
    cfg: &CompareConfig,
    master_seed: u64,
) -> (ComparisonCell, Option<CellSeries>) {
    let seed = master_seed
        .wrapping_add(variant.seed_offset())
        .wrapping_add(scenario_seed_offset(scenario));
    let mut model_cfg = cfg.model.clone();
    model_cfg.cell = variant.cell();
    model_cfg.seed = seed;
    let mode = if variant.decomposed() {
        let mut stl = cfg.stl.clone();
        if cfg.auto_period {
            stl.period = series.samples_per_day();
        }
        PipelineMode::Stl(stl)
    } else {
        PipelineMode::Raw
    };
    match run_pipeline(series, &mode, &model_cfg, &cfg.training, &cfg.options) {
        Ok(artifacts) => {
            let spd = series.samples_per_day();
            let start = artifacts.train_days * spd;
            let timestamps = (0..artifacts.predictions.len())
                .map(|i| series.timestamp_at(start + i))
                .collect();
            let cell = ComparisonCell {
                model: variant.label().into(),
                scenario: scenario.to_string(),
                seed,
                evaluation: Some(artifacts.evaluation),
                train_secs: artifacts.train_secs,
                error: None,
            };
            let series_out = CellSeries {
                model: variant.label().into(),
                scenario: scenario.to_string(),
                timestamps,
                actual: artifacts.actual,
                predicted: artifacts.predictions,
            };
            (cell, Some(series_out))
        }
        Err(e) => (
            ComparisonCell {
                model: variant.label().into(),
                scenario: scenario.to_string(),
                seed,
                evaluation: None,
                train_secs: 0.0,
                error: Some(e.to_string()),
            },
            None,
        ),
    }
}

/// Runs the full grid: every model variant on every scenario series.
///
/// Needs one series per scenario in [`Scenario::SPLIT`]. Cells are
/// independent; `jobs` > 1 runs them on that many threads (0 means one per
/// available core), and results are merged in deterministic row order
/// either way. A failed cell is recorded in place without stopping the
/// rest.
pub fn compare_models(
    series_by_scenario: &BTreeMap<Scenario, FlowSeries>,
    cfg: &CompareConfig,
    master_seed: u64,
    jobs: usize,
) -> Result<ComparisonRun> {
    for scenario in Scenario::SPLIT {
        if !series_by_scenario.contains_key(&scenario) {
            return Err(Error::Input(format!(
                "missing series for scenario {scenario}"
            )));
        }
    }
    let started = Instant::now();
    let grid: Vec<(ModelVariant, Scenario)> = ModelVariant::ALL
        .into_iter()
        .flat_map(|m| Scenario::SPLIT.into_iter().map(move |s| (m, s)))
        .collect();
    let run_one = |&(variant, scenario): &(ModelVariant, Scenario)| {
        run_cell(
            &series_by_scenario[&scenario],
            variant,
            scenario,
            cfg,
            master_seed,
        )
    };
    let outcomes: Vec<(ComparisonCell, Option<CellSeries>)> = if jobs == 1 {
        grid.iter().map(run_one).collect()
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build()
            .map_err(|e| Error::Config(format!("cannot build a {jobs}-thread pool: {e}")))?;
        pool.install(|| {
            use rayon::prelude::*;
            grid.par_iter().map(run_one).collect()
        })
    };
    let mut cells = Vec::with_capacity(outcomes.len());
    let mut cell_series = Vec::new();
    for (cell, series) in outcomes {
        cells.push(cell);
        cell_series.extend(series);
    }
    let report = ComparisonReport {
        master_seed,
        config_fingerprint: fingerprint(cfg)?,
        cells,
        wall_clock_secs: started.elapsed().as_secs_f64(),
    };
    Ok(ComparisonRun {
        report,
        cell_series,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calendar::Scenario;
    use crate::neural::HeadActivation;
    use chrono::{Datelike, NaiveDate, Weekday};

    fn d(s: &str) -> NaiveDate {
        NaiveDate::parse_from_str(s, "%Y-%m-%d").unwrap()
    }

    /// Tiny series: `days` dates starting at `start` spaced `step_days`
    /// apart, 6 bins per day (30-minute window at 5-minute intervals),
    /// counts from a closure over (day, bin).
    fn tiny_series(
        start: &str,
        days: usize,
        step_days: u64,
        scenario: Scenario,
        f: impl Fn(usize, usize) -> u64,
    ) -> FlowSeries {
        let start = d(start);
        let dates: Vec<NaiveDate> = (0..days)
            .map(|i| start + chrono::Duration::days((i as u64 * step_days) as i64))
            .collect();
        let f = &f;
        let counts: Vec<u64> = (0..days)
            .flat_map(|day| (0..6).map(move |bin| f(day, bin)))
            .collect();
        FlowSeries::new(
            "XFER".into(),
            300,
            "08:00-08:30".parse().unwrap(),
            scenario,
            dates,
            counts,
        )
        .unwrap()
    }

    fn tiny_model_cfg(seed: u64) -> ModelConfig {
        ModelConfig {
            cell: CellKind::Gru,
            layer_sizes: vec![3],
            input_dim: 1,
            head_activation: HeadActivation::Identity,
            dropout: 0.1,
            seed,
        }
    }

    fn tiny_train_cfg(epochs: usize) -> TrainingConfig {
        TrainingConfig {
            epochs,
            batch_size: 8,
            ..TrainingConfig::default()
        }
    }

    fn tiny_options() -> PipelineOptions {
        PipelineOptions {
            train_ratio: 0.8,
            lookback: 2,
            first_hour: FirstHourPolicy::SamePeriodAverage { lookback_weeks: 5 },
        }
    }

    // -- split ---------------------------------------------------------

    #[test]
    fn split_day_counts() {
        assert_eq!(train_day_count(10, 0.8).unwrap(), 8);
        assert_eq!(train_day_count(5, 0.8).unwrap(), 4);
        assert_eq!(train_day_count(2, 0.5).unwrap(), 1);
        // Clamping keeps at least one day on each side.
        assert_eq!(train_day_count(2, 0.95).unwrap(), 1);
        assert_eq!(train_day_count(2, 0.05).unwrap(), 1);
        assert!(train_day_count(1, 0.8).is_err());
        assert!(train_day_count(10, 0.0).is_err());
        assert!(train_day_count(10, 1.0).is_err());
    }

    #[test]
    fn split_is_day_aligned_and_chronological() {
        let s = tiny_series("2024-01-01", 10, 1, Scenario::All, |day, bin| {
            (day * 10 + bin) as u64
        });
        let (train, test) = split_train_test(&s, 0.8).unwrap();
        assert_eq!(train.dates.len(), 8);
        assert_eq!(test.dates.len(), 2);
        assert_eq!(train.len(), 48);
        assert_eq!(test.len(), 12);
        let last_train = train.timestamp_at(train.len() - 1);
        let first_test = test.timestamp_at(0);
        assert!(last_train < first_test);
        // Concatenation restores the original.
        let mut all = train.counts.clone();
        all.extend(&test.counts);
        assert_eq!(all, s.counts);
    }

    // -- metrics -------------------------------------------------------

    #[test]
    fn evaluate_hand_fixtures() {
        let r = evaluate(&[100.0], &[100.0]).unwrap();
        assert_eq!(r.mape, Some(0.0));
        assert_eq!(r.rmse, 0.0);

        let r = evaluate(&[100.0, 200.0], &[110.0, 180.0]).unwrap();
        assert_eq!(r.mape, Some(10.0));
        assert!((r.rmse - 250.0f64.sqrt()).abs() < 1e-9);
        assert_eq!(r.n, 2);
        assert_eq!(r.zero_actual_excluded, 0);

        let r = evaluate(&[100.0], &[90.0]).unwrap();
        assert_eq!(r.mape, Some(10.0));
        assert_eq!(r.rmse, 10.0);
    }

    #[test]
    fn evaluate_zero_actual_policy() {
        // The zero-actual point is excluded from the MAPE but kept in the RMSE.
        let r = evaluate(&[0.0, 100.0], &[5.0, 110.0]).unwrap();
        assert_eq!(r.mape, Some(10.0));
        assert_eq!(r.zero_actual_excluded, 1);
        assert!((r.rmse - (125.0f64 / 2.0).sqrt()).abs() < 1e-12);

        let r = evaluate(&[0.0, 0.0], &[1.0, 2.0]).unwrap();
        assert_eq!(r.mape, None);
        assert_eq!(r.zero_actual_excluded, 2);
        assert!(r.rmse > 0.0);
    }

    #[test]
    fn evaluate_rejects_bad_input() {
        assert!(evaluate(&[1.0], &[1.0, 2.0]).is_err());
        assert!(evaluate(&[], &[]).is_err());
        assert!(evaluate(&[f64::NAN], &[1.0]).is_err());
    }

    #[test]
    fn metric_symmetry_breaking() {
        // Swapping actual and predicted leaves the RMSE alone but changes
        // the MAPE (its denominator follows the actuals).
        let y = [100.0, 250.0];
        let p = [110.0, 200.0];
        let fwd = evaluate(&y, &p).unwrap();
        let rev = evaluate(&p, &y).unwrap();
        assert_eq!(fwd.rmse, rev.rmse);
        assert_ne!(fwd.mape, rev.mape);
    }

    // -- pipeline runs ---------------------------------------------------

    /// Weekly Mondays so every test day has same-weekday history.
    fn weekly_series(days: usize, f: impl Fn(usize, usize) -> u64) -> FlowSeries {
        tiny_series("2024-01-01", days, 7, Scenario::WeekdayExclFri, f)
    }

    #[test]
    fn first_hour_same_period_average_values() {
        // 4 weekly days, split 3/1; bins 0 and 1 of the test day must be
        // the mean over the 3 prior same-weekday days.
        let s = weekly_series(4, |day, bin| ((day + 1) * 10 + bin) as u64);
        let arts = run_raw_pipeline(
            &s,
            &tiny_model_cfg(7),
            &tiny_train_cfg(1),
            &PipelineOptions {
                train_ratio: 0.75,
                ..tiny_options()
            },
        )
        .unwrap();
        assert_eq!(arts.train_days, 3);
        assert_eq!(arts.predictions.len(), 6);
        // mean(10, 20, 30) and mean(11, 21, 31)
        assert_eq!(arts.predictions[0], 20.0);
        assert_eq!(arts.predictions[1], 21.0);
        // Remaining bins come from the model, not the seeding rule.
        assert_eq!(arts.actual, vec![40.0, 41.0, 42.0, 43.0, 44.0, 45.0]);
    }

    #[test]
    fn cross_day_policy_uses_model_everywhere() {
        let s = weekly_series(4, |day, bin| ((day + 1) * 10 + bin) as u64);
        let arts = run_raw_pipeline(
            &s,
            &tiny_model_cfg(7),
            &tiny_train_cfg(1),
            &PipelineOptions {
                train_ratio: 0.75,
                first_hour: FirstHourPolicy::CrossDay,
                ..tiny_options()
            },
        )
        .unwrap();
        // An untrained-ish tiny model will not hit the same-period means.
        assert_ne!(arts.predictions[0], 20.0);
    }

    #[test]
    fn stub_decomposition_equals_raw_bit_for_bit() {
        // Includes a large spike: the stub must not repair it, or the
        // identity with the raw run would break.
        let s = weekly_series(5, |day, bin| {
            if day == 1 && bin == 3 {
                900
            } else {
                (20 + day * 3 + bin) as u64
            }
        });
        let model_cfg = tiny_model_cfg(42);
        let train_cfg = tiny_train_cfg(2);
        let opts = tiny_options();
        let raw = run_raw_pipeline(&s, &model_cfg, &train_cfg, &opts).unwrap();
        let stub = run_pipeline(
            &s,
            &PipelineMode::StubDecomposition,
            &model_cfg,
            &train_cfg,
            &opts,
        )
        .unwrap();
        assert_eq!(raw.predictions.len(), stub.predictions.len());
        for (a, b) in raw.predictions.iter().zip(&stub.predictions) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
        assert_eq!(raw.evaluation.mape, stub.evaluation.mape);
        assert_eq!(raw.evaluation.rmse, stub.evaluation.rmse);
    }

    #[test]
    fn runs_are_reproducible_and_seed_sensitive() {
        let s = weekly_series(5, |day, bin| (30 + day * 2 + bin * bin) as u64);
        let run = |seed: u64| {
            run_raw_pipeline(&s, &tiny_model_cfg(seed), &tiny_train_cfg(2), &tiny_options())
                .unwrap()
        };
        let a = run(1);
        let b = run(1);
        let c = run(2);
        for (x, y) in a.predictions.iter().zip(&b.predictions) {
            assert_eq!(x.to_bits(), y.to_bits());
        }
        assert!(
            a.predictions
                .iter()
                .zip(&c.predictions)
                .any(|(x, y)| x != y),
            "different seeds produced identical predictions"
        );
    }

    #[test]
    fn constant_series_has_near_zero_error() {
        let s = weekly_series(5, |_, _| 50);
        let stl = StlParams::with_period(6);
        let arts = run_stl_pipeline(
            &s,
            &stl,
            &tiny_model_cfg(3),
            &tiny_train_cfg(2),
            &tiny_options(),
        )
        .unwrap();
        let mape = arts.evaluation.mape.unwrap();
        assert!(
            mape <= 0.1,
            "constant series should predict within scaler round-off, got {mape}%"
        );
        for p in &arts.predictions {
            assert!((p - 50.0).abs() < 0.1);
        }
    }

    #[test]
    fn reconstruction_is_exact_component_sum() {
        let s = weekly_series(5, |day, bin| (40 + (day * 7 + bin * 13) % 25) as u64);
        let arts = run_stl_pipeline(
            &s,
            &StlParams::with_period(6),
            &tiny_model_cfg(9),
            &tiny_train_cfg(2),
            &tiny_options(),
        )
        .unwrap();
        assert_eq!(arts.components.len(), 3);
        for i in 0..arts.predictions.len() {
            let sum = arts
                .components
                .iter()
                .fold(0.0, |acc, c| acc + c.predictions[i]);
            assert_eq!(sum.to_bits(), arts.predictions[i].to_bits());
        }
    }

    #[test]
    fn component_seeds_follow_the_offset_table() {
        let s = weekly_series(5, |day, bin| (40 + day + bin) as u64);
        let arts = run_stl_pipeline(
            &s,
            &StlParams::with_period(6),
            &tiny_model_cfg(1_000),
            &tiny_train_cfg(1),
            &tiny_options(),
        )
        .unwrap();
        let seeds: Vec<(&str, u64)> = arts.components.iter().map(|c| (c.name, c.seed)).collect();
        assert_eq!(
            seeds,
            vec![
                ("trend", 1_100),
                ("seasonal", 1_200),
                ("residual", 1_300)
            ]
        );
    }

    #[test]
    fn stage_errors_are_named() {
        // Period longer than half the series: the decomposition rejects it.
        let s = weekly_series(2, |_, _| 10);
        let err = run_stl_pipeline(
            &s,
            &StlParams::with_period(100),
            &tiny_model_cfg(1),
            &tiny_train_cfg(1),
            &tiny_options(),
        )
        .unwrap_err();
        assert!(
            err.to_string().contains("decompose"),
            "expected a decompose-stage error, got: {err}"
        );
    }

    #[test]
    fn lookback_must_fit_inside_a_day() {
        let s = weekly_series(4, |_, _| 10);
        let err = run_raw_pipeline(
            &s,
            &tiny_model_cfg(1),
            &tiny_train_cfg(1),
            &PipelineOptions {
                lookback: 6,
                ..tiny_options()
            },
        )
        .unwrap_err();
        assert!(err.to_string().contains("lookback"));
    }

    // -- comparison grid -----------------------------------------------

    fn micro_benchmark() -> BTreeMap<Scenario, FlowSeries> {
        // Weekly-spaced dates with the right weekday per scenario.
        let mk = |start: &str, scenario: Scenario, base: u64| {
            tiny_series(start, 4, 7, scenario, move |day, bin| {
                base + (day as u64) * 2 + (bin as u64) * 3
            })
        };
        let mut m = BTreeMap::new();
        let wd = mk("2024-01-01", Scenario::WeekdayExclFri, 40); // Mondays
        assert_eq!(wd.dates[0].weekday(), Weekday::Mon);
        m.insert(Scenario::WeekdayExclFri, wd);
        let fr = mk("2024-01-05", Scenario::Friday, 60); // Fridays
        assert_eq!(fr.dates[0].weekday(), Weekday::Fri);
        m.insert(Scenario::Friday, fr);
        let rd = mk("2024-01-06", Scenario::RestDay, 20); // Saturdays
        assert_eq!(rd.dates[0].weekday(), Weekday::Sat);
        m.insert(Scenario::RestDay, rd);
        m
    }

    fn micro_compare_cfg() -> CompareConfig {
        CompareConfig {
            stl: StlParams::with_period(6),
            auto_period: true,
            model: ModelConfig {
                layer_sizes: vec![2],
                ..tiny_model_cfg(0)
            },
            training: tiny_train_cfg(1),
            options: PipelineOptions {
                train_ratio: 0.75,
                ..tiny_options()
            },
        }
    }

    #[test]
    fn comparison_grid_shape_and_determinism() {
        let data = micro_benchmark();
        let cfg = micro_compare_cfg();
        let run1 = compare_models(&data, &cfg, 7, 1).unwrap();
        assert_eq!(run1.report.cells.len(), 12);
        assert_eq!(run1.cell_series.len(), 12);
        for cell in &run1.report.cells {
            assert!(cell.error.is_none(), "{:?}", cell.error);
            let ev = cell.evaluation.as_ref().unwrap();
            assert_eq!(ev.n, 6, "test span is one 6-bin day");
        }
        // Row order is model-major.
        assert_eq!(run1.report.cells[0].model, "LSTM");
        assert_eq!(run1.report.cells[0].scenario, "weekday_excl_fri");
        assert_eq!(run1.report.cells[11].model, "STL-GRU");
        assert_eq!(run1.report.cells[11].scenario, "rest_day");

        // Same seed, same bytes once wall-clock fields are zeroed.
        let run2 = compare_models(&data, &cfg, 7, 1).unwrap();
        assert_eq!(
            run1.report.normalized_for_comparison().to_json().unwrap(),
            run2.report.normalized_for_comparison().to_json().unwrap()
        );
        // Different master seed changes at least one cell.
        let run3 = compare_models(&data, &cfg, 8, 1).unwrap();
        assert_ne!(
            run1.report.normalized_for_comparison().to_json().unwrap(),
            run3.report.normalized_for_comparison().to_json().unwrap()
        );
        // Cell seeds follow the documented offsets.
        let cell = run1
            .report
            .cell(ModelVariant::StlGru, Scenario::Friday)
            .unwrap();
        assert_eq!(cell.seed, 7 + 40_000 + 2_000);
    }

    #[test]
    fn comparison_survives_a_failing_cell() {
        let mut data = micro_benchmark();
        // Sabotage one scenario: a single-day series cannot be split into
        // train and test days, so all four of its cells must fail.
        let short = data[&Scenario::Friday].slice_days(0..1);
        data.insert(Scenario::Friday, short);
        let cfg = micro_compare_cfg();
        let run = compare_models(&data, &cfg, 7, 1).unwrap();
        assert_eq!(run.report.cells.len(), 12);
        let failed: Vec<&ComparisonCell> = run
            .report
            .cells
            .iter()
            .filter(|c| c.error.is_some())
            .collect();
        assert_eq!(failed.len(), 4);
        for cell in &failed {
            assert_eq!(cell.scenario, "friday");
            assert!(cell.evaluation.is_none());
        }
        // Non-sabotaged cells still succeeded.
        assert!(run
            .report
            .cells
            .iter()
            .any(|c| c.scenario == "weekday_excl_fri" && c.evaluation.is_some()));
        // The table renders the failure as a note.
        let table = run.report.render_table();
        assert!(table.contains("failed"));
        assert!(table.contains("note:"));
    }

    #[test]
    fn report_table_layout() {
        let data = micro_benchmark();
        let run = compare_models(&data, &micro_compare_cfg(), 7, 1).unwrap();
        let table = run.report.render_table();
        let mut lines = table.lines();
        let header = lines.next().unwrap();
        for col in ["Model", "Scenario", "E1 (%)", "E2", "Prediction Time"] {
            assert!(header.contains(col), "missing column {col}: {header}");
        }
        assert!(lines.next().unwrap().contains("-+-"));
        assert_eq!(table.lines().count(), 14, "header + rule + 12 rows");
        assert!(table.contains("STL-GRU"));
        // Every data row has the five pipe-separated columns.
        for line in table.lines().skip(2) {
            assert_eq!(line.matches(" | ").count(), 4, "bad row: {line}");
        }
    }

    #[test]
    fn report_round_trips_and_cell_csv_is_stable() {
        let data = micro_benchmark();
        let run = compare_models(&data, &micro_compare_cfg(), 7, 1).unwrap();
        let json = run.report.to_json().unwrap();
        let back = ComparisonReport::from_json(&json).unwrap();
        assert_eq!(back, run.report);

        let cs = &run.cell_series[0];
        assert_eq!(cs.file_stem(), "lstm_weekday_excl_fri");
        let mut buf1 = Vec::new();
        let mut buf2 = Vec::new();
        cs.write_csv(&mut buf1).unwrap();
        cs.write_csv(&mut buf2).unwrap();
        assert_eq!(buf1, buf2);
        let text = String::from_utf8(buf1).unwrap();
        assert!(text.starts_with("timestamp,actual,predicted\n"));
        assert_eq!(text.lines().count(), 1 + cs.actual.len());
    }

    #[test]
    fn parallel_jobs_match_sequential() {
        let data = micro_benchmark();
        let cfg = micro_compare_cfg();
        let seq = compare_models(&data, &cfg, 5, 1).unwrap();
        let par = compare_models(&data, &cfg, 5, 2).unwrap();
        assert_eq!(
            seq.report.normalized_for_comparison().to_json().unwrap(),
            par.report.normalized_for_comparison().to_json().unwrap()
        );
    }

    #[test]
    fn compare_requires_all_scenarios() {
        let mut data = micro_benchmark();
        data.remove(&Scenario::RestDay);
        let err = compare_models(&data, &micro_compare_cfg(), 7, 1).unwrap_err();
        assert!(err.to_string().contains("rest_day"));
    }

    #[test]
    fn model_variant_labels_and_parsing() {
        for v in ModelVariant::ALL {
            let label = v.label();
            assert_eq!(label.parse::<ModelVariant>().unwrap(), v);
            assert_eq!(label.to_ascii_lowercase().parse::<ModelVariant>().unwrap(), v);
        }
        assert!("transformer".parse::<ModelVariant>().is_err());
        assert!(ModelVariant::StlGru.decomposed());
        assert!(!ModelVariant::Gru.decomposed());
        assert_eq!(ModelVariant::StlGru.cell(), CellKind::Gru);
        assert_eq!(ModelVariant::StlLstm.cell(), CellKind::Lstm);
    }

    #[test]
    fn options_validation() {
        assert!(tiny_options().validate().is_ok());
        assert!(PipelineOptions {
            train_ratio: 1.0,
            ..tiny_options()
        }
        .validate()
        .is_err());
        assert!(PipelineOptions {
            lookback: 0,
            ..tiny_options()
        }
        .validate()
        .is_err());
        assert!(PipelineOptions {
            first_hour: FirstHourPolicy::SamePeriodAverage { lookback_weeks: 0 },
            ..tiny_options()
        }
        .validate()
        .is_err());
    }
}
