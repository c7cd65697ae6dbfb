//! The `MELF` binary matrix format used for features and frame probabilities.
//!
//! Layout: the four bytes `MELF`, rows and cols as little-endian `u32`,
//! then `rows * cols` little-endian `f32` values in row-major order.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::wav::write_atomic;

pub const MAGIC: &[u8; 4] = b"MELF";
const HEADER_LEN: usize = 12;

#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    pub rows: usize,
    pub cols: usize,
    /// Row-major values.
    pub data: Vec<f32>,
}

impl Matrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f32>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Format(format!(
                "matrix data has {} values, expected {rows}x{cols}",
                data.len()
            )));
        }
        Ok(Matrix { rows, cols, data })
    }

    pub fn row(&self, i: usize) -> &[f32] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(HEADER_LEN + 4 * self.data.len());
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&(self.rows as u32).to_le_bytes());
        out.extend_from_slice(&(self.cols as u32).to_le_bytes());
        for v in &self.data {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < HEADER_LEN || &bytes[..4] != MAGIC {
            return Err(Error::Format("missing MELF header".into()));
        }
        let word = |at: usize| u32::from_le_bytes(bytes[at..at + 4].try_into().unwrap()) as usize;
        let (rows, cols) = (word(4), word(8));
        let body = &bytes[HEADER_LEN..];
        if body.len() != rows * cols * 4 {
            return Err(Error::Format(format!(
                "MELF body has {} bytes, header declares {rows}x{cols}",
                body.len()
            )));
        }
        let data = body
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
            .collect();
        Matrix::new(rows, cols, data)
    }
}

pub fn write(path: &Path, matrix: &Matrix) -> Result<()> {
    let bytes = matrix.to_bytes();
    write_atomic(path, |tmp| fs::write(tmp, &bytes).map_err(|e| Error::io(tmp, e)))
}

pub fn read(path: &Path) -> Result<Matrix> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    Matrix::from_bytes(&bytes).map_err(|e| Error::Format(format!("{}: {e}", path.display())))
}
