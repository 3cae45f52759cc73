//! Dense row-major matrices and the handful of vector helpers the solvers
//! need. Reductions run in a fixed index order so that distributed and
//! centralized code paths can be compared bit for bit.

use std::ops::Range;

#[derive(Debug, Clone, PartialEq)]
pub struct Mat {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Mat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Mat { rows, cols, data }
    }

    /// Wrap row-major data without copying.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), rows * cols, "from_vec: wrong element count");
        Mat { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    /// `A x` over all rows.
    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        self.matvec_rows(0..self.rows, x)
    }

    /// `a^p x` for the row block `range`.
    pub fn matvec_rows(&self, range: Range<usize>, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.cols, "matvec: x length != cols");
        range.map(|i| dot(self.row(i), x)).collect()
    }

    /// `Aᵀ z` over all rows.
    pub fn t_matvec(&self, z: &[f64]) -> Vec<f64> {
        self.t_matvec_rows(0..self.rows, z)
    }

    /// `(a^p)ᵀ z_p` for the row block `range`; `z_local[k]` pairs with row
    /// `range.start + k`. Accumulates rows in increasing order.
    pub fn t_matvec_rows(&self, range: Range<usize>, z_local: &[f64]) -> Vec<f64> {
        assert_eq!(z_local.len(), range.len(), "t_matvec_rows: z length != rows in range");
        let mut acc = vec![0.0; self.cols];
        for (k, i) in range.enumerate() {
            let zi = z_local[k];
            let row = self.row(i);
            for (a, &aij) in acc.iter_mut().zip(row) {
                *a += aij * zi;
            }
        }
        acc
    }

    /// `A^p x_p` for the column block `range`; result has length `rows`.
    pub fn matvec_cols(&self, range: Range<usize>, x_local: &[f64]) -> Vec<f64> {
        assert_eq!(x_local.len(), range.len(), "matvec_cols: x length != cols in range");
        (0..self.rows)
            .map(|i| dot(&self.row(i)[range.clone()], x_local))
            .collect()
    }

    /// `(A^p)ᵀ z` for the column block `range`; `z` has length `rows`.
    pub fn t_matvec_cols(&self, range: Range<usize>, z: &[f64]) -> Vec<f64> {
        assert_eq!(z.len(), self.rows, "t_matvec_cols: z length != rows");
        let mut acc = vec![0.0; range.len()];
        for (i, &zi) in z.iter().enumerate() {
            let row = &self.row(i)[range.clone()];
            for (a, &aij) in acc.iter_mut().zip(row) {
                *a += aij * zi;
            }
        }
        acc
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Sum of squares.
pub fn norm_sq(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum()
}

pub fn mean(v: &[f64]) -> f64 {
    if v.is_empty() {
        return 0.0;
    }
    v.iter().sum::<f64>() / v.len() as f64
}

/// Mean squared difference between two equal-length vectors.
pub fn mse(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    if a.is_empty() {
        return 0.0;
    }
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>() / a.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> Mat {
        Mat::from_fn(3, 2, |i, j| (i * 2 + j) as f64)
    }

    #[test]
    fn matvec_and_transpose_agree_with_hand_values() {
        let a = small();
        assert_eq!(a.matvec(&[1.0, -1.0]), vec![-1.0, -1.0, -1.0]);
        assert_eq!(a.t_matvec(&[1.0, 1.0, 1.0]), vec![6.0, 9.0]);
    }

    #[test]
    fn row_blocks_sum_to_full_transpose_product() {
        let a = small();
        let z = [0.5, -2.0, 1.0];
        let full = a.t_matvec(&z);
        let p1 = a.t_matvec_rows(0..2, &z[0..2]);
        let p2 = a.t_matvec_rows(2..3, &z[2..3]);
        let sum: Vec<f64> = p1.iter().zip(&p2).map(|(x, y)| x + y).collect();
        for (f, s) in full.iter().zip(&sum) {
            assert!((f - s).abs() < 1e-12);
        }
    }

    #[test]
    fn col_blocks_sum_to_full_product() {
        let a = small();
        let x = [2.0, -3.0];
        let full = a.matvec(&x);
        let p1 = a.matvec_cols(0..1, &x[0..1]);
        let p2 = a.matvec_cols(1..2, &x[1..2]);
        for i in 0..3 {
            assert!((full[i] - (p1[i] + p2[i])).abs() < 1e-12);
        }
    }
}
