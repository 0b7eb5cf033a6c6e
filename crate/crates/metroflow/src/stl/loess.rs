//! Locally weighted polynomial regression.
//!
//! For each evaluation position the `span` nearest data points are fitted
//! with a weighted polynomial, weights being tricube in scaled distance,
//! optionally multiplied by per-point robustness weights. Evaluation
//! positions may lie outside the data range; the nearest-span fit then
//! extrapolates, which is how seasonal sub-series are extended.

use crate::error::{Error, Result};

/// Fitted values plus the count of neighbourhoods where every combined
/// weight vanished and the fit fell back to an unweighted one.
#[derive(Debug, Clone)]
pub struct LoessOutput {
    pub values: Vec<f64>,
    pub zero_weight_fallbacks: usize,
}

fn tricube(u: f64) -> f64 {
    if u >= 1.0 {
        0.0
    } else {
        let t = 1.0 - u * u * u;
        t * t * t
    }
}

/// Indices `[lo, lo+span)` of the span nearest points to `x0`, given
/// strictly increasing `xs`. Ties prefer the left point, matching a
/// two-pointer scan from the insertion position.
fn neighbourhood(xs: &[f64], x0: f64, span: usize) -> usize {
    let n = xs.len();
    if span >= n {
        return 0;
    }
    let mut hi = xs.partition_point(|&x| x < x0); // first index with xs[i] >= x0
    let mut lo = hi;
    while hi - lo < span {
        if lo == 0 {
            break; // window is [0, span)
        }
        if hi == n {
            lo = n - span;
            break;
        }
        if x0 - xs[lo - 1] <= xs[hi] - x0 {
            lo -= 1;
        } else {
            hi += 1;
        }
    }
    lo
}

/// Weighted polynomial fit evaluated at the centre (u = x - x0 = 0).
/// Solves the normal equations over centred monomials by Gaussian
/// elimination; a singular system degrades the degree until it is solvable
/// (degree 0 with positive total weight always is).
fn fit_at(u: &[f64], y: &[f64], w: &[f64], degree: usize) -> f64 {
    for d in (0..=degree).rev() {
        if let Some(v) = try_fit(u, y, w, d) {
            return v;
        }
    }
    // Total weight zero is excluded by the caller; unreachable in practice.
    0.0
}

fn try_fit(u: &[f64], y: &[f64], w: &[f64], degree: usize) -> Option<f64> {
    let k = degree + 1;
    // moments[j] = sum w * u^j, j in 0..2*degree; rhs[j] = sum w * u^j * y
    let mut moments = [0.0f64; 5];
    let mut rhs = [0.0f64; 3];
    for i in 0..u.len() {
        if w[i] == 0.0 {
            continue;
        }
        let mut upow = 1.0;
        for j in 0..=2 * degree {
            moments[j] += w[i] * upow;
            if j <= degree {
                rhs[j] += w[i] * upow * y[i];
            }
            upow *= u[i];
        }
    }
    if moments[0] <= 0.0 {
        return None;
    }
    // Dense (k x k) system a * beta = rhs, a[r][c] = moments[r + c].
    let mut a = [[0.0f64; 3]; 3];
    let mut b = [0.0f64; 3];
    for r in 0..k {
        for c in 0..k {
            a[r][c] = moments[r + c];
        }
        b[r] = rhs[r];
    }
    // Gaussian elimination with partial pivoting.
    for col in 0..k {
        let mut piv = col;
        for r in col + 1..k {
            if a[r][col].abs() > a[piv][col].abs() {
                piv = r;
            }
        }
        if a[piv][col].abs() < 1e-300 {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for r in col + 1..k {
            let f = a[r][col] / a[col][col];
            for c in col..k {
                a[r][c] -= f * a[col][c];
            }
            b[r] -= f * b[col];
        }
    }
    let mut beta = [0.0f64; 3];
    for r in (0..k).rev() {
        let mut s = b[r];
        for c in r + 1..k {
            s -= a[r][c] * beta[c];
        }
        beta[r] = s / a[r][r];
    }
    // Centred basis: the value at x0 is the constant coefficient.
    Some(beta[0])
}

/// Smooths `(xs, ys)` at each position in `eval_at`.
///
/// Requirements: `xs` strictly increasing and finite, `ys` finite and the
/// same length, `degree <= 2`, `degree + 1 <= span <= xs.len()`, and the
/// robustness slice (when given) the same length as `xs`.
pub fn loess_smooth_detailed(
    xs: &[f64],
    ys: &[f64],
    eval_at: &[f64],
    span: usize,
    degree: usize,
    robustness: Option<&[f64]>,
) -> Result<LoessOutput> {
    let n = xs.len();
    if n == 0 || ys.len() != n {
        return Err(Error::Parameter(format!(
            "loess needs equally sized non-empty inputs, got {} xs and {} ys",
            n,
            ys.len()
        )));
    }
    if degree > 2 {
        return Err(Error::Parameter(format!(
            "loess degree {degree} unsupported, maximum is 2"
        )));
    }
    if span < degree + 1 {
        return Err(Error::Parameter(format!(
            "loess span {span} is below degree {degree} + 1"
        )));
    }
    if span > n {
        return Err(Error::Parameter(format!(
            "loess span {span} exceeds {n} data points"
        )));
    }
    if let Some(r) = robustness {
        if r.len() != n {
            return Err(Error::Parameter(
                "robustness weights must match the data length".into(),
            ));
        }
    }
    if !xs.windows(2).all(|w| w[0] < w[1]) {
        return Err(Error::Parameter("loess xs must be strictly increasing".into()));
    }
    if xs.iter().chain(ys).any(|v| !v.is_finite()) {
        return Err(Error::Input("loess input contains a non-finite value".into()));
    }

    let mut values = Vec::with_capacity(eval_at.len());
    let mut fallbacks = 0usize;
    let mut u = vec![0.0f64; span];
    let mut w = vec![0.0f64; span];
    let mut yy = vec![0.0f64; span];
    for &x0 in eval_at {
        let lo = neighbourhood(xs, x0, span);
        let pts = &xs[lo..lo + span];
        let mut d_max = 0.0f64;
        for &x in pts {
            d_max = d_max.max((x - x0).abs());
        }
        let mut total = 0.0;
        for (i, &x) in pts.iter().enumerate() {
            u[i] = x - x0;
            yy[i] = ys[lo + i];
            let dist_w = if d_max == 0.0 {
                1.0
            } else {
                tricube((x - x0).abs() / d_max)
            };
            let rob = robustness.map(|r| r[lo + i]).unwrap_or(1.0);
            w[i] = dist_w * rob;
            total += w[i];
        }
        if total == 0.0 {
            // Every combined weight vanished (e.g. robustness zeroed the
            // whole neighbourhood): fall back to an unweighted fit.
            fallbacks += 1;
            w.iter_mut().for_each(|wi| *wi = 1.0);
        }
        values.push(fit_at(&u, &yy, &w, degree));
    }
    Ok(LoessOutput {
        values,
        zero_weight_fallbacks: fallbacks,
    })
}

/// [`loess_smooth_detailed`] without the diagnostics.
pub fn loess_smooth(
    xs: &[f64],
    ys: &[f64],
    eval_at: &[f64],
    span: usize,
    degree: usize,
    robustness: Option<&[f64]>,
) -> Result<Vec<f64>> {
    loess_smooth_detailed(xs, ys, eval_at, span, degree, robustness).map(|o| o.values)
}
