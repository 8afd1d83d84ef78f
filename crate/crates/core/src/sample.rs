//! Row-major `n x d` sample matrices.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    d: usize,
    data: Vec<f64>,
}

impl Sample {
    pub fn with_capacity(d: usize, n: usize) -> Self {
        Self {
            d,
            data: Vec::with_capacity(n * d),
        }
    }

    pub fn from_flat(d: usize, data: Vec<f64>) -> Result<Self> {
        if d == 0 || data.len() % d != 0 {
            return Err(Error::Data(format!(
                "{} values do not form rows of length {d}",
                data.len()
            )));
        }
        Ok(Self { d, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let d = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != d) {
            return Err(Error::Data("rows of unequal length".into()));
        }
        Self::from_flat(d, rows.concat())
    }

    pub fn push(&mut self, row: &[f64]) {
        debug_assert_eq!(row.len(), self.d);
        self.data.extend_from_slice(row);
    }

    pub fn n(&self) -> usize {
        if self.d == 0 {
            0
        } else {
            self.data.len() / self.d
        }
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.d..(i + 1) * self.d]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.d)
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.rows().map(|r| r[j]).collect()
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.data
    }

    pub fn map_rows(&self, f: impl Fn(&[f64], &mut [f64])) -> Sample {
        let mut data = self.data.clone();
        for (src, dst) in self.data.chunks_exact(self.d).zip(data.chunks_exact_mut(self.d)) {
            f(src, dst);
        }
        Sample { d: self.d, data }
    }

    /// Columns swapped (bivariate only).
    pub fn swapped(&self) -> Sample {
        self.map_rows(|s, d| {
            d[0] = s[1];
            d[1] = s[0];
        })
    }

    /// Empirical distribution function at `u`: share of rows `<= u` componentwise.
    pub fn ecdf(&self, u: &[f64]) -> f64 {
        let hits = self
            .rows()
            .filter(|r| r.iter().zip(u).all(|(x, y)| x <= y))
            .count();
        hits as f64 / self.n() as f64
    }
}
