use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::density::check_unit_cube;
use crate::error::{Error, Result};

/// `n` points of `[0,1]^d`, stored row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleMatrix {
    d: usize,
    data: Vec<f64>,
    /// Seed of the stream that produced the points, when known.
    pub seed: Option<u64>,
}

impl SampleMatrix {
    pub fn new(d: usize, data: Vec<f64>) -> Result<Self> {
        if d == 0 {
            return Err(Error::invalid("sample dimension must be positive"));
        }
        if data.len() % d != 0 {
            return Err(Error::invalid("sample buffer length is not a multiple of d"));
        }
        for row in data.chunks_exact(d) {
            check_unit_cube(row)?;
        }
        Ok(Self {
            d,
            data,
            seed: None,
        })
    }

    pub fn from_rows<R: AsRef<[f64]>>(d: usize, rows: &[R]) -> Result<Self> {
        let mut data = Vec::with_capacity(rows.len() * d);
        for row in rows {
            let row = row.as_ref();
            if row.len() != d {
                return Err(Error::invalid("sample row has the wrong dimension"));
            }
            data.extend_from_slice(row);
        }
        Self::new(d, data)
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.d
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.d..(i + 1) * self.d]
    }

    pub fn rows(&self) -> core::slice::ChunksExact<'_, f64> {
        self.data.chunks_exact(self.d)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    /// Values of coordinate `j` (0-based) across all rows.
    pub fn column(&self, j: usize) -> Vec<f64> {
        self.rows().map(|r| r[j]).collect()
    }

    /// The first `n` rows.
    pub fn head(&self, n: usize) -> Self {
        let n = n.min(self.len());
        Self {
            d: self.d,
            data: self.data[..n * self.d].to_vec(),
            seed: self.seed,
        }
    }
}
