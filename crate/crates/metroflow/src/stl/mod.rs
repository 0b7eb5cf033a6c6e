//! Seasonal-trend decomposition by repeated local regression.
//!
//! A series is split additively into trend + seasonal + residual. Each
//! inner iteration detrends, smooths every cycle sub-series (extending one
//! full period past both ends), removes the low-frequency part of that
//! smooth with a moving-average cascade plus a final local fit, and
//! re-estimates the trend from the deseasonalised series. Outer passes
//! recompute bisquare robustness weights from the residual so outliers stop
//! influencing the fits.
//!
//! The residual is always `y - trend - seasonal` by construction, so the
//! three components reconstruct the input exactly.

mod loess;

pub use loess::{loess_smooth, loess_smooth_detailed, LoessOutput};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which moving-average cascade the low-pass stage uses: the standard
/// `period, period, 3` cascade, or a short literal `5, 3` variant kept
/// behind this switch for comparison runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum LowPassKind {
    #[default]
    Standard,
    Short53,
}

/// Decomposition parameters. Spans are counts of neighbouring points for
/// the local fits; even values are rounded up to the next odd number at use,
/// and spans are clamped to the available points of whatever they smooth.
///
/// When deserialized (config files, `--set` overrides), each field also
/// accepts its conventional short name: `n_p`, `n_s`, `n_l`, `n_t`, `n_i`,
/// `n_o`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StlParams {
    /// Samples per seasonal cycle (one service day on the default grid).
    #[serde(alias = "n_p")]
    pub period: usize,
    /// Span for smoothing each cycle sub-series.
    #[serde(alias = "n_s")]
    pub seasonal_span: usize,
    /// Span for the final local fit inside the low-pass stage.
    #[serde(alias = "n_l")]
    pub low_pass_span: usize,
    /// Span for the trend fit.
    #[serde(alias = "n_t")]
    pub trend_span: usize,
    /// Maximum inner iterations per pass.
    #[serde(alias = "n_i")]
    pub inner_iterations: usize,
    /// Robustness passes after the first (0 disables robustness).
    #[serde(alias = "n_o")]
    pub outer_iterations: usize,
    /// Inner loop stops when the trend's max change, relative to the range
    /// of the input, drops below this.
    pub convergence_tol: f64,
    /// Local fit degree (0, 1 or 2).
    pub degree: usize,
    pub low_pass: LowPassKind,
}

impl Default for StlParams {
    fn default() -> Self {
        StlParams {
            period: 228,
            seasonal_span: 15,
            low_pass_span: 10,
            trend_span: 20,
            inner_iterations: 15,
            outer_iterations: 3,
            convergence_tol: 0.001,
            degree: 1,
            low_pass: LowPassKind::Standard,
        }
    }
}

impl StlParams {
    pub fn with_period(period: usize) -> Self {
        StlParams {
            period,
            ..StlParams::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.period < 2 {
            return Err(Error::Parameter(format!(
                "period {} is too small, need at least 2",
                self.period
            )));
        }
        for (name, span) in [
            ("seasonal_span", self.seasonal_span),
            ("low_pass_span", self.low_pass_span),
            ("trend_span", self.trend_span),
        ] {
            if span < 2 {
                return Err(Error::Parameter(format!("{name} {span} is below 2")));
            }
        }
        if self.inner_iterations == 0 {
            return Err(Error::Parameter("inner_iterations must be at least 1".into()));
        }
        if !(self.convergence_tol > 0.0 && self.convergence_tol < 1.0) {
            return Err(Error::Parameter(format!(
                "convergence_tol {} must be in (0, 1)",
                self.convergence_tol
            )));
        }
        if self.degree > 2 {
            return Err(Error::Parameter(format!(
                "degree {} unsupported, maximum is 2",
                self.degree
            )));
        }
        if self.low_pass == LowPassKind::Short53 && self.period < 3 {
            return Err(Error::Parameter(
                "short low-pass cascade needs period >= 3".into(),
            ));
        }
        Ok(())
    }
}

/// Round up to the next odd number.
fn odd(span: usize) -> usize {
    if span % 2 == 0 {
        span + 1
    } else {
        span
    }
}

/// Effective span for a fit over `available` points: odd, at most
/// `available`, at least `degree + 1`.
fn effective_span(span: usize, available: usize, degree: usize) -> usize {
    let mut s = odd(span).min(available);
    if s < degree + 1 {
        s = (degree + 1).min(available);
    }
    s
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StlDecomposition {
    pub trend: Vec<f64>,
    pub seasonal: Vec<f64>,
    pub residual: Vec<f64>,
    pub params: StlParams,
    /// Inner iterations the final pass used.
    pub inner_iterations_used: usize,
    /// Whether the final pass met the tolerance before running out of
    /// iterations.
    pub converged: bool,
    /// Local fits that hit an all-zero weight neighbourhood and fell back
    /// to an unweighted fit.
    pub zero_weight_fallbacks: usize,
}

/// Bisquare robustness weights from a residual: `h` is six times the median
/// absolute residual, and each weight is `(1 - (|r|/h)^2)^2`, zero beyond
/// `h`. An all-zero residual (h = 0) yields unit weights.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RobustnessWeights {
    pub delta: Vec<f64>,
    pub h: f64,
}

pub fn robustness_weights(residual: &[f64]) -> Result<RobustnessWeights> {
    if residual.is_empty() {
        return Err(Error::Parameter("robustness weights need a non-empty residual".into()));
    }
    if residual.iter().any(|r| !r.is_finite()) {
        return Err(Error::Input("residual contains a non-finite value".into()));
    }
    let mut abs: Vec<f64> = residual.iter().map(|r| r.abs()).collect();
    abs.sort_by(f64::total_cmp);
    let n = abs.len();
    let median = if n % 2 == 1 {
        abs[n / 2]
    } else {
        (abs[n / 2 - 1] + abs[n / 2]) / 2.0
    };
    let h = 6.0 * median;
    let delta = if h == 0.0 {
        vec![1.0; n]
    } else {
        residual
            .iter()
            .map(|r| {
                let z = r.abs() / h;
                if z <= 1.0 {
                    let t = 1.0 - z * z;
                    t * t
                } else {
                    0.0
                }
            })
            .collect()
    };
    Ok(RobustnessWeights { delta, h })
}

/// Mean over each window of `w` consecutive points; output is
/// `x.len() - w + 1` long.
fn moving_average(x: &[f64], w: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(x.len() + 1 - w);
    let mut sum: f64 = x[..w].iter().sum();
    out.push(sum / w as f64);
    for i in w..x.len() {
        sum += x[i] - x[i - w];
        out.push(sum / w as f64);
    }
    out
}

/// Low-pass filter of a period-extended series.
///
/// Input is the cycle-subseries smooth, one period longer than the data at
/// both ends; output is aligned to the original `input_len - 2 * period`
/// central positions. The standard cascade averages over `period`, `period`,
/// then 3 before the local linear fit, whose combined kernel spans exactly
/// the two added periods.
pub fn low_pass(
    extended: &[f64],
    period: usize,
    low_pass_span: usize,
    kind: LowPassKind,
) -> Result<Vec<f64>> {
    if period < 2 {
        return Err(Error::Parameter("low-pass period must be at least 2".into()));
    }
    let min_len = 2 * period + 3;
    if extended.len() < min_len {
        return Err(Error::Parameter(format!(
            "low-pass input of {} points is shorter than {min_len}",
            extended.len()
        )));
    }
    let n = extended.len() - 2 * period;
    let filtered = match kind {
        LowPassKind::Standard => {
            let a = moving_average(extended, period);
            let b = moving_average(&a, period);
            moving_average(&b, 3) // length n, centred on the original range
        }
        LowPassKind::Short53 => {
            if period < 3 {
                return Err(Error::Parameter("short low-pass cascade needs period >= 3".into()));
            }
            let a = moving_average(extended, 5);
            let b = moving_average(&a, 3);
            // Cascade kernel spans 7 points centred 3 in; keep the central n.
            b[period - 3..period - 3 + n].to_vec()
        }
    };
    debug_assert_eq!(filtered.len(), n);
    let xs: Vec<f64> = (0..n).map(|i| i as f64).collect();
    let span = effective_span(low_pass_span, n, 1);
    loess_smooth(&xs, &filtered, &xs, span, 1, None)
}

/// Decomposes `series` into trend, seasonal and residual parts.
///
/// Requires at least two full periods of finite data. The number of passes
/// is `outer_iterations + 1`; all passes after the first weight every local
/// fit by the robustness weights of the previous pass' residual.
pub fn stl_decompose(series: &[f64], params: &StlParams) -> Result<StlDecomposition> {
    params.validate()?;
    let n = series.len();
    let p = params.period;
    if n < 2 * p {
        return Err(Error::InsufficientData(format!(
            "series of {n} points is shorter than two periods ({})",
            2 * p
        )));
    }
    if series.iter().any(|v| !v.is_finite()) {
        return Err(Error::Input("series contains a non-finite value".into()));
    }

    // Convergence normalizer: the data range, or for a constant series its
    // magnitude (round-off in the fits keeps the change from being exactly
    // zero, so a strictly relative test would never trigger).
    let norm = {
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for &v in series {
            lo = lo.min(v);
            hi = hi.max(v);
        }
        if hi > lo {
            hi - lo
        } else {
            lo.abs().max(1.0)
        }
    };

    let mut trend = vec![0.0f64; n];
    let mut seasonal = vec![0.0f64; n];
    let mut weights: Option<Vec<f64>> = None;
    let mut fallbacks = 0usize;
    let mut last_pass_iterations = 0usize;
    let mut last_pass_converged = false;

    let trend_xs: Vec<f64> = (0..n).map(|i| i as f64).collect();
    let trend_span = effective_span(params.trend_span, n, params.degree);

    for pass in 0..=params.outer_iterations {
        last_pass_iterations = 0;
        last_pass_converged = false;
        for _ in 0..params.inner_iterations {
            last_pass_iterations += 1;

            // 1. detrend
            let detrended: Vec<f64> = series.iter().zip(&trend).map(|(y, t)| y - t).collect();

            // 2. smooth each cycle sub-series, extended one period each way
            let mut extended = vec![0.0f64; n + 2 * p];
            for k in 0..p {
                let m = (n - 1 - k) / p + 1; // points in this phase
                let sub_x: Vec<f64> = (0..m).map(|j| j as f64).collect();
                let sub_y: Vec<f64> = (0..m).map(|j| detrended[k + j * p]).collect();
                let sub_w: Option<Vec<f64>> = weights
                    .as_ref()
                    .map(|w| (0..m).map(|j| w[k + j * p]).collect());
                let eval: Vec<f64> = (-1..=m as i64).map(|j| j as f64).collect();
                let span = effective_span(params.seasonal_span, m, params.degree);
                let out = loess_smooth_detailed(
                    &sub_x,
                    &sub_y,
                    &eval,
                    span,
                    params.degree,
                    sub_w.as_deref(),
                )?;
                fallbacks += out.zero_weight_fallbacks;
                for (j, v) in out.values.into_iter().enumerate() {
                    extended[k + j * p] = v;
                }
            }

            // 3. low-pass the smoothed sub-series
            let low = low_pass(&extended, p, params.low_pass_span, params.low_pass)?;

            // 4. seasonal = smoothed centre - low-pass
            for i in 0..n {
                seasonal[i] = extended[p + i] - low[i];
            }

            // 5. deseasonalise
            let deseason: Vec<f64> = series.iter().zip(&seasonal).map(|(y, s)| y - s).collect();

            // 6. re-fit the trend
            let out = loess_smooth_detailed(
                &trend_xs,
                &deseason,
                &trend_xs,
                trend_span,
                params.degree,
                weights.as_deref(),
            )?;
            fallbacks += out.zero_weight_fallbacks;
            let new_trend = out.values;

            let change = trend
                .iter()
                .zip(&new_trend)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0f64, f64::max);
            trend = new_trend;
            if change / norm < params.convergence_tol {
                last_pass_converged = true;
                break;
            }
        }

        if pass < params.outer_iterations {
            let residual: Vec<f64> = (0..n)
                .map(|i| series[i] - trend[i] - seasonal[i])
                .collect();
            weights = Some(robustness_weights(&residual)?.delta);
        }
    }

    let residual: Vec<f64> = (0..n)
        .map(|i| series[i] - trend[i] - seasonal[i])
        .collect();
    Ok(StlDecomposition {
        trend,
        seasonal,
        residual,
        params: params.clone(),
        inner_iterations_used: last_pass_iterations,
        converged: last_pass_converged,
        zero_weight_fallbacks: fallbacks,
    })
}

/// Result of the day-aligned outlier repair.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Sigma3Repair {
    pub repaired: Vec<f64>,
    /// Indices whose absolute deviation from the mean exceeded three
    /// standard deviations, in ascending order.
    pub flagged: Vec<usize>,
}

/// Flags residual points more than three standard deviations from the mean
/// (both moments computed once over the whole input) and replaces each with
/// the mean of the same intra-day slot on the previous and next day.
/// Neighbours that do not exist or are themselves flagged are skipped; with
/// one usable neighbour its value is taken, with none the global mean.
/// Unflagged points are returned bit-for-bit unchanged.
pub fn sigma3_repair(residual: &[f64], samples_per_day: usize) -> Result<Sigma3Repair> {
    let n = residual.len();
    if samples_per_day == 0 {
        return Err(Error::Parameter("samples_per_day must be positive".into()));
    }
    if n == 0 || n % samples_per_day != 0 {
        return Err(Error::Parameter(format!(
            "residual of {n} points is not whole days of {samples_per_day}"
        )));
    }
    if n < 2 * samples_per_day {
        return Err(Error::Parameter(
            "outlier repair needs at least two days of data".into(),
        ));
    }
    if residual.iter().any(|r| !r.is_finite()) {
        return Err(Error::Input("residual contains a non-finite value".into()));
    }
    let mean = residual.iter().sum::<f64>() / n as f64;
    let var = residual.iter().map(|r| (r - mean) * (r - mean)).sum::<f64>() / n as f64;
    let sigma = var.sqrt();
    if sigma == 0.0 {
        return Ok(Sigma3Repair {
            repaired: residual.to_vec(),
            flagged: Vec::new(),
        });
    }
    let is_flagged: Vec<bool> = residual.iter().map(|r| (r - mean).abs() > 3.0 * sigma).collect();
    let mut repaired = residual.to_vec();
    let mut flagged = Vec::new();
    for t in 0..n {
        if !is_flagged[t] {
            continue;
        }
        flagged.push(t);
        let mut sum = 0.0;
        let mut cnt = 0usize;
        if t >= samples_per_day && !is_flagged[t - samples_per_day] {
            sum += residual[t - samples_per_day];
            cnt += 1;
        }
        if t + samples_per_day < n && !is_flagged[t + samples_per_day] {
            sum += residual[t + samples_per_day];
            cnt += 1;
        }
        repaired[t] = if cnt > 0 { sum / cnt as f64 } else { mean };
    }
    Ok(Sigma3Repair { repaired, flagged })
}
