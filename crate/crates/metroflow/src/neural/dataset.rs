//! Sliding-window dataset over a scalar series, with min–max scaling into
//! [0, 1] fit on training data only.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Affine map `v ↦ (v − min) / range`. A constant series has `range = 0`;
/// it maps every value to 0 and the inverse returns `min` exactly, so a
/// constant component round-trips bit-for-bit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MinMaxScaler {
    pub min: f64,
    pub range: f64,
}

impl MinMaxScaler {
    pub fn fit(values: &[f64]) -> Result<MinMaxScaler> {
        if values.is_empty() {
            return Err(Error::InsufficientData("cannot fit a scaler on no data".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Input("scaler input contains a non-finite value".into()));
        }
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for &v in values {
            lo = lo.min(v);
            hi = hi.max(v);
        }
        Ok(MinMaxScaler {
            min: lo,
            range: hi - lo,
        })
    }

    #[inline]
    pub fn transform(&self, v: f64) -> f64 {
        if self.range == 0.0 {
            0.0
        } else {
            (v - self.min) / self.range
        }
    }

    #[inline]
    pub fn inverse(&self, u: f64) -> f64 {
        u * self.range + self.min
    }

    pub fn transform_slice(&self, values: &[f64]) -> Vec<f64> {
        values.iter().map(|&v| self.transform(v)).collect()
    }

    pub fn inverse_slice(&self, values: &[f64]) -> Vec<f64> {
        values.iter().map(|&u| self.inverse(u)).collect()
    }
}

/// Windows of `lookback` consecutive scaled values, each paired with the
/// value that immediately follows it.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WindowedDataset {
    /// Scaled window values, row-major: window i occupies
    /// `[i * lookback, (i + 1) * lookback)`.
    windows: Vec<f64>,
    targets: Vec<f64>,
    pub lookback: usize,
    pub scaler: MinMaxScaler,
}

impl WindowedDataset {
    /// Builds windows from an unscaled series, fitting the scaler on that
    /// same series (callers pass training data only).
    pub fn from_series(values: &[f64], lookback: usize) -> Result<WindowedDataset> {
        let scaler = MinMaxScaler::fit(values)?;
        WindowedDataset::with_scaler(values, lookback, scaler)
    }

    /// Builds windows from an unscaled series using an existing scaler.
    pub fn with_scaler(
        values: &[f64],
        lookback: usize,
        scaler: MinMaxScaler,
    ) -> Result<WindowedDataset> {
        if lookback == 0 {
            return Err(Error::Parameter("lookback must be at least 1".into()));
        }
        if values.len() <= lookback {
            return Err(Error::InsufficientData(format!(
                "series of {} points cannot form windows of {} plus a target",
                values.len(),
                lookback
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Input("series contains a non-finite value".into()));
        }
        let scaled = scaler.transform_slice(values);
        let count = scaled.len() - lookback;
        let mut windows = Vec::with_capacity(count * lookback);
        let mut targets = Vec::with_capacity(count);
        for i in 0..count {
            windows.extend_from_slice(&scaled[i..i + lookback]);
            targets.push(scaled[i + lookback]);
        }
        Ok(WindowedDataset {
            windows,
            targets,
            lookback,
            scaler,
        })
    }

    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    pub fn window(&self, i: usize) -> &[f64] {
        &self.windows[i * self.lookback..(i + 1) * self.lookback]
    }

    pub fn target(&self, i: usize) -> f64 {
        self.targets[i]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scaler_maps_training_data_into_unit_interval() {
        let values = [3.0, 9.0, 6.0, 12.0];
        let s = MinMaxScaler::fit(&values).unwrap();
        assert_eq!(s.min, 3.0);
        assert_eq!(s.range, 9.0);
        let scaled = s.transform_slice(&values);
        assert_eq!(scaled, vec![0.0, 2.0 / 3.0, 1.0 / 3.0, 1.0]);
        for (orig, round) in values.iter().zip(s.inverse_slice(&scaled)) {
            assert!((orig - round).abs() < 1e-12);
        }
    }

    #[test]
    fn constant_series_scaler_is_exact() {
        let s = MinMaxScaler::fit(&[7.25; 5]).unwrap();
        assert_eq!(s.range, 0.0);
        assert_eq!(s.transform(7.25), 0.0);
        assert_eq!(s.transform(100.0), 0.0);
        // The inverse of any prediction is the constant itself, bit-exact.
        assert_eq!(s.inverse(0.0).to_bits(), 7.25f64.to_bits());
        assert_eq!(s.inverse(0.3).to_bits(), 7.25f64.to_bits());
    }

    #[test]
    fn windows_pair_with_the_next_value() {
        let values = [0.0, 1.0, 2.0, 3.0, 4.0, 5.0];
        let d = WindowedDataset::from_series(&values, 3).unwrap();
        assert_eq!(d.len(), 3); // 6 - 3
        assert_eq!(d.window(0), &[0.0, 0.2, 0.4]);
        assert_eq!(d.target(0), 0.6);
        assert_eq!(d.window(2), &[0.4, 0.6, 0.8]);
        assert_eq!(d.target(2), 1.0);
    }

    #[test]
    fn rejects_degenerate_inputs() {
        assert!(WindowedDataset::from_series(&[1.0, 2.0, 3.0], 3).is_err());
        assert!(WindowedDataset::from_series(&[1.0, 2.0, 3.0], 0).is_err());
        assert!(WindowedDataset::from_series(&[1.0, f64::NAN, 3.0, 4.0], 2).is_err());
        assert!(MinMaxScaler::fit(&[]).is_err());
    }
}
