use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dense row-major real matrix.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::invalid(format!(
                "matrix data has {} entries, expected {rows}x{cols}",
                data.len()
            )));
        }
        Ok(Matrix { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::invalid("ragged matrix rows"));
        }
        Ok(Matrix {
            rows: rows.len(),
            cols,
            data: rows.concat(),
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.cols + c] = v;
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        crate::hyperbolic::ops::matvec(&self.data, self.rows, self.cols, x)
    }

    pub fn transpose(&self) -> Matrix {
        let mut t = Matrix::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                t.data[c * self.rows + r] = self.data[r * self.cols + c];
            }
        }
        t
    }

    pub fn matmul(&self, other: &Matrix) -> Result<Matrix> {
        if self.cols != other.rows {
            return Err(Error::invalid(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.data[i * self.cols + k];
                if a == 0.0 {
                    continue;
                }
                for j in 0..other.cols {
                    out.data[i * other.cols + j] += a * other.data[k * other.cols + j];
                }
            }
        }
        Ok(out)
    }

    /// Largest singular value by power iteration on `MᵀM`, iterated until the
    /// relative change of the estimate drops below `tol`.
    ///
    /// The start vector is fixed (all ones), so the result is a deterministic
    /// function of the entries.
    pub fn spectral_norm(&self, tol: f64) -> f64 {
        if self.data.iter().all(|&v| v == 0.0) || self.cols == 0 {
            return 0.0;
        }
        let mt = self.transpose();
        let mut v = vec![1.0 / (self.cols as f64).sqrt(); self.cols];
        let mut sigma2 = 0.0;
        for _ in 0..100_000 {
            let w = mt.matvec(&self.matvec(&v));
            let n = w.iter().map(|x| x * x).sum::<f64>().sqrt();
            if n == 0.0 {
                // Start vector in the null space; fall back to a basis sweep.
                return (0..self.cols)
                    .map(|j| {
                        let mut e = vec![0.0; self.cols];
                        e[j] = 1.0;
                        self.matvec(&e).iter().map(|x| x * x).sum::<f64>().sqrt()
                    })
                    .fold(0.0, f64::max);
            }
            // Rayleigh quotient vᵀ(MᵀM)v of the current unit iterate.
            let next: f64 = v.iter().zip(&w).map(|(a, b)| a * b).sum();
            v = w.iter().map(|x| x / n).collect();
            if (next - sigma2).abs() <= tol * next {
                sigma2 = next;
                break;
            }
            sigma2 = next;
        }
        sigma2.sqrt()
    }
}
