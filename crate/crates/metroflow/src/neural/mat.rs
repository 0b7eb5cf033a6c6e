//! Minimal row-major f64 matrix with the three product kernels the
//! recurrent layers need. Inner loops are written in accumulate-row form so
//! they vectorize on a single core; no kernel reorders additions between
//! runs, keeping results bit-reproducible.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mat {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Mat {
    pub fn zeros(rows: usize, cols: usize) -> Mat {
        Mat {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Mat> {
        let r = rows.len();
        if r == 0 {
            return Err(Error::Parameter("matrix needs at least one row".into()));
        }
        let c = rows[0].len();
        if rows.iter().any(|row| row.len() != c) {
            return Err(Error::Parameter("matrix rows have unequal lengths".into()));
        }
        Ok(Mat {
            rows: r,
            cols: c,
            data: rows.concat(),
        })
    }

    /// Shape and storage agree; entries finite.
    pub fn validate(&self) -> Result<()> {
        if self.data.len() != self.rows * self.cols {
            return Err(Error::Parameter(format!(
                "matrix storage of {} values does not match {}x{}",
                self.data.len(),
                self.rows,
                self.cols
            )));
        }
        if self.data.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numeric("matrix contains a non-finite value".into()));
        }
        Ok(())
    }

    #[inline]
    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, r: usize) -> &mut [f64] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn transpose(&self) -> Mat {
        let mut out = Mat::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                out.data[c * self.rows + r] = self.data[r * self.cols + c];
            }
        }
        out
    }

    /// `self · b`, accumulated into `out` (which must be zeroed by the
    /// caller if accumulation is not wanted).
    pub fn matmul_into(&self, b: &Mat, out: &mut Mat) {
        assert_eq!(self.cols, b.rows, "inner dimensions differ");
        assert_eq!(out.rows, self.rows);
        assert_eq!(out.cols, b.cols);
        for i in 0..self.rows {
            let a_row = self.row(i);
            let out_row = out.row_mut(i);
            for (k, &a_ik) in a_row.iter().enumerate() {
                let b_row = b.row(k);
                for (o, &bv) in out_row.iter_mut().zip(b_row) {
                    *o += a_ik * bv;
                }
            }
        }
    }

    pub fn matmul(&self, b: &Mat) -> Mat {
        let mut out = Mat::zeros(self.rows, b.cols);
        self.matmul_into(b, &mut out);
        out
    }

    /// `selfᵀ · b` for self (k×m), b (k×n) → m×n, accumulated into `out`.
    /// Used for weight gradients (inputsᵀ · upstream).
    pub fn matmul_transpose_self_into(&self, b: &Mat, out: &mut Mat) {
        assert_eq!(self.rows, b.rows, "outer dimensions differ");
        assert_eq!(out.rows, self.cols);
        assert_eq!(out.cols, b.cols);
        for k in 0..self.rows {
            let a_row = self.row(k);
            let b_row = b.row(k);
            for (i, &a_ki) in a_row.iter().enumerate() {
                let out_row = out.row_mut(i);
                for (o, &bv) in out_row.iter_mut().zip(b_row) {
                    *o += a_ki * bv;
                }
            }
        }
    }

    /// Adds `bias` to every row.
    pub fn add_row_bias(&mut self, bias: &[f64]) {
        assert_eq!(bias.len(), self.cols);
        for r in 0..self.rows {
            for (v, b) in self.row_mut(r).iter_mut().zip(bias) {
                *v += b;
            }
        }
    }

    /// Column sums (used for bias gradients).
    pub fn column_sums(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.cols];
        for r in 0..self.rows {
            for (o, v) in out.iter_mut().zip(self.row(r)) {
                *o += v;
            }
        }
        out
    }

    pub fn map_in_place(&mut self, f: impl Fn(f64) -> f64) {
        for v in &mut self.data {
            *v = f(*v);
        }
    }

    /// Horizontal concatenation `[self | right]`.
    pub fn hconcat(&self, right: &Mat) -> Mat {
        assert_eq!(self.rows, right.rows);
        let mut out = Mat::zeros(self.rows, self.cols + right.cols);
        for r in 0..self.rows {
            let row = out.row_mut(r);
            row[..self.cols].copy_from_slice(self.row(r));
            row[self.cols..].copy_from_slice(right.row(r));
        }
        out
    }

    /// Copies a contiguous column block `[from, to)` into a new matrix.
    pub fn columns(&self, from: usize, to: usize) -> Mat {
        assert!(from <= to && to <= self.cols);
        let mut out = Mat::zeros(self.rows, to - from);
        for r in 0..self.rows {
            out.row_mut(r).copy_from_slice(&self.row(r)[from..to]);
        }
        out
    }
}

#[inline]
pub fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(rows: &[Vec<f64>]) -> Mat {
        Mat::from_rows(rows).unwrap()
    }

    #[test]
    fn matmul_matches_hand_product() {
        let a = m(&[vec![1.0, 2.0], vec![3.0, 4.0], vec![5.0, 6.0]]);
        let b = m(&[vec![7.0, 8.0, 9.0], vec![10.0, 11.0, 12.0]]);
        let c = a.matmul(&b);
        assert_eq!(c.rows, 3);
        assert_eq!(c.cols, 3);
        assert_eq!(c.row(0), &[27.0, 30.0, 33.0]);
        assert_eq!(c.row(2), &[95.0, 106.0, 117.0]);
    }

    #[test]
    fn transpose_products_agree_with_explicit_transpose() {
        let a = m(&[vec![1.0, 2.0, 3.0], vec![4.0, 5.0, 6.0]]); // 2x3
        let b = m(&[vec![1.0, -1.0], vec![0.5, 2.0]]); // 2x2
        // aᵀ·b via the fused kernel vs. materialized transpose.
        let mut fused = Mat::zeros(3, 2);
        a.matmul_transpose_self_into(&b, &mut fused);
        let direct = a.transpose().matmul(&b);
        assert_eq!(fused, direct);
    }

    #[test]
    fn concat_and_split_round_trip() {
        let a = m(&[vec![1.0, 2.0], vec![3.0, 4.0]]);
        let b = m(&[vec![5.0], vec![6.0]]);
        let cat = a.hconcat(&b);
        assert_eq!(cat.cols, 3);
        assert_eq!(cat.columns(0, 2), a);
        assert_eq!(cat.columns(2, 3), b);
    }

    #[test]
    fn bias_and_column_sums() {
        let mut a = m(&[vec![1.0, 2.0], vec![3.0, 4.0]]);
        a.add_row_bias(&[10.0, 20.0]);
        assert_eq!(a.row(0), &[11.0, 22.0]);
        assert_eq!(a.column_sums(), vec![24.0, 46.0]);
    }

    #[test]
    fn validation_catches_bad_shape_and_nan() {
        let bad = Mat {
            rows: 2,
            cols: 2,
            data: vec![0.0; 3],
        };
        assert!(bad.validate().is_err());
        let mut nan = Mat::zeros(1, 2);
        nan.data[1] = f64::NAN;
        assert!(nan.validate().is_err());
    }
}
