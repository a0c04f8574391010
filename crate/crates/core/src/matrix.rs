//! `PSEMB001` / `PSCRD001` binary matrices and their companion id files.
//!
//! Layout: 8-byte magic, little-endian `u32` row count, little-endian `u32`
//! column count, then `rows * cols` little-endian `f32` values, row-major.
//! The id file is JSON Lines of `{"row": i, "id": "..."}` in row order.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub const EMBEDDING_MAGIC: &[u8; 8] = b"PSEMB001";
pub const COORDS_MAGIC: &[u8; 8] = b"PSCRD001";

/// Dense row-major `f32` matrix with one article id per row.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingMatrix {
    ids: Vec<String>,
    dim: usize,
    values: Vec<f32>,
}

impl EmbeddingMatrix {
    pub fn new(ids: Vec<String>, dim: usize, values: Vec<f32>) -> Result<Self> {
        if ids.is_empty() {
            return Err(Error::Format("empty embedding file".into()));
        }
        if dim == 0 {
            return Err(Error::Format("dimension must be positive".into()));
        }
        if values.len() != ids.len() * dim {
            return Err(Error::Format(format!(
                "expected {} values for {}x{}, got {}",
                ids.len() * dim,
                ids.len(),
                dim,
                values.len()
            )));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Format(format!(
                "non-finite value at row {}, column {}",
                pos / dim,
                pos % dim
            )));
        }
        Ok(EmbeddingMatrix { ids, dim, values })
    }

    pub fn from_rows(ids: Vec<String>, rows: &[Vec<f32>]) -> Result<Self> {
        let dim = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().find(|r| r.len() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: bad.len(),
            });
        }
        Self::new(ids, dim, rows.concat())
    }

    pub fn n(&self) -> usize {
        self.ids.len()
    }

    pub fn d(&self) -> usize {
        self.dim
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn values(&self) -> &[f32] {
        &self.values
    }

    pub fn row(&self, i: usize) -> &[f32] {
        &self.values[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f32]> {
        self.values.chunks_exact(self.dim)
    }

    /// Row position of every id.
    pub fn index(&self) -> std::collections::HashMap<&str, usize> {
        self.ids.iter().enumerate().map(|(i, id)| (id.as_str(), i)).collect()
    }

    /// Sub-matrix of the given rows, in the given order.
    pub fn select(&self, rows: &[usize]) -> Result<Self> {
        let ids = rows.iter().map(|&r| self.ids[r].clone()).collect();
        let mut values = Vec::with_capacity(rows.len() * self.dim);
        for &r in rows {
            values.extend_from_slice(self.row(r));
        }
        Self::new(ids, self.dim, values)
    }

    /// Row-wise concatenation; ids must stay unique.
    pub fn concat(&self, other: &Self) -> Result<Self> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: other.dim,
            });
        }
        let mut ids = self.ids.clone();
        ids.extend(other.ids.iter().cloned());
        let mut values = self.values.clone();
        values.extend_from_slice(&other.values);
        Self::new(ids, self.dim, values)
    }

    pub fn save(&self, path: impl AsRef<Path>, ids_path: impl AsRef<Path>) -> Result<()> {
        write_matrix(path, EMBEDDING_MAGIC, self.n(), self.dim, &self.values)?;
        write_ids(ids_path, &self.ids)
    }
}

pub fn load_embeddings(path: impl AsRef<Path>, ids_path: impl AsRef<Path>) -> Result<EmbeddingMatrix> {
    let (n, d, values) = read_matrix(path, EMBEDDING_MAGIC)?;
    let ids = read_ids(ids_path)?;
    if ids.len() != n {
        return Err(Error::Format(format!(
            "id file has {} rows, matrix has {n}",
            ids.len()
        )));
    }
    EmbeddingMatrix::new(ids, d, values)
}

/// Decodes a matrix payload after checking `magic`.
pub fn decode_matrix(bytes: &[u8], magic: &[u8; 8]) -> Result<(usize, usize, Vec<f32>)> {
    if bytes.len() < 16 {
        return Err(Error::Format("truncated header".into()));
    }
    if &bytes[..8] != magic {
        return Err(Error::Format(format!(
            "magic mismatch: expected {:?}, found {:?}",
            String::from_utf8_lossy(magic),
            String::from_utf8_lossy(&bytes[..8])
        )));
    }
    let n = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
    let d = u32::from_le_bytes(bytes[12..16].try_into().unwrap()) as usize;
    if n == 0 {
        return Err(Error::Format("empty embedding file".into()));
    }
    if d == 0 {
        return Err(Error::Format("dimension must be positive".into()));
    }
    let want = n
        .checked_mul(d)
        .and_then(|c| c.checked_mul(4))
        .ok_or_else(|| Error::Format("header overflow".into()))?;
    let payload = &bytes[16..];
    if payload.len() < want {
        return Err(Error::Format(format!(
            "truncated payload: expected {want} bytes, found {}",
            payload.len()
        )));
    }
    if payload.len() > want {
        return Err(Error::Format(format!(
            "trailing bytes: expected {want}, found {}",
            payload.len()
        )));
    }
    let values = payload
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Ok((n, d, values))
}

pub fn encode_matrix(magic: &[u8; 8], n: usize, d: usize, values: &[f32]) -> Vec<u8> {
    assert_eq!(values.len(), n * d);
    let mut out = Vec::with_capacity(16 + values.len() * 4);
    out.extend_from_slice(magic);
    out.extend_from_slice(&(n as u32).to_le_bytes());
    out.extend_from_slice(&(d as u32).to_le_bytes());
    for v in values {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn read_matrix(path: impl AsRef<Path>, magic: &[u8; 8]) -> Result<(usize, usize, Vec<f32>)> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_matrix(&bytes, magic)
}

pub fn write_matrix(
    path: impl AsRef<Path>,
    magic: &[u8; 8],
    n: usize,
    d: usize,
    values: &[f32],
) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, encode_matrix(magic, n, d, values)).map_err(|e| Error::io(path, e))
}

#[derive(Serialize, Deserialize)]
struct IdRow {
    row: usize,
    id: String,
}

pub fn read_ids(path: impl AsRef<Path>) -> Result<Vec<String>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut ids = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let row: IdRow = serde_json::from_str(&line).map_err(|e| Error::MalformedLine {
            line: i + 1,
            message: e.to_string(),
        })?;
        if row.row != ids.len() {
            return Err(Error::Format(format!(
                "id file line {}: row {} out of order (expected {})",
                i + 1,
                row.row,
                ids.len()
            )));
        }
        ids.push(row.id);
    }
    Ok(ids)
}

pub fn write_ids(path: impl AsRef<Path>, ids: &[String]) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    for (row, id) in ids.iter().enumerate() {
        serde_json::to_writer(&mut w, &IdRow { row, id: id.clone() })?;
        w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}
