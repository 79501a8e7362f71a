//! Embedding-based diversity and uniqueness ratios.
//!
//! Embeddings are produced elsewhere and read from a binary store (see
//! [`EmbeddingStore`]); this module only measures distances between rows.
//!
//! Store layout, all integers little-endian `u32`, floats little-endian
//! IEEE-754 `f32`:
//!
//! ```text
//! magic        4 bytes  "DVEM"
//! version      u32      1
//! dims         u32      embedding width shared by every entry
//! count        u32      number of entries
//! entry * count:
//!   key_len    u32
//!   key        key_len bytes, UTF-8
//!   rows       u32
//!   data       rows * dims f32, row-major
//! ```

use std::collections::{BTreeMap, HashSet};
use std::fs::File;
use std::io::{self, BufReader, BufWriter, Read, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};

use thiserror::Error;

pub const STORE_MAGIC: &[u8; 4] = b"DVEM";
pub const STORE_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum SemdivError {
    #[error("need at least {needed} rows, got {got}")]
    TooFewRows { needed: usize, got: usize },
    #[error("row {row} has zero norm")]
    ZeroNormRow { row: usize },
    #[error("row {row} has a non-finite entry")]
    NonFinite { row: usize },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimMismatch { expected: usize, got: usize },
    #[error("empty list")]
    EmptyList,
    #[error("embedding key `{0}` not found in store")]
    MissingKey(String),
    #[error("malformed embedding store {}: {reason}", path.display())]
    Format { path: PathBuf, reason: String },
    #[error("i/o error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
}

/// An `rows x dims` matrix of embeddings for one text.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingMatrix {
    pub key: String,
    rows: usize,
    dims: usize,
    data: Vec<f64>,
}

impl EmbeddingMatrix {
    /// Builds a matrix from row-major data, checking shape, finiteness and
    /// non-zero row norms.
    pub fn new(
        key: impl Into<String>,
        rows: usize,
        dims: usize,
        data: Vec<f64>,
    ) -> Result<Self, SemdivError> {
        if rows == 0 {
            return Err(SemdivError::TooFewRows { needed: 1, got: 0 });
        }
        if dims == 0 || data.len() != rows * dims {
            return Err(SemdivError::DimMismatch {
                expected: rows * dims.max(1),
                got: data.len(),
            });
        }
        let m = Self {
            key: key.into(),
            rows,
            dims,
            data,
        };
        for row in 0..rows {
            let r = m.row(row);
            if r.iter().any(|x| !x.is_finite()) {
                return Err(SemdivError::NonFinite { row });
            }
            if norm(r) == 0.0 {
                return Err(SemdivError::ZeroNormRow { row });
            }
        }
        Ok(m)
    }

    pub fn from_rows(key: impl Into<String>, rows: &[Vec<f64>]) -> Result<Self, SemdivError> {
        let dims = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().find(|r| r.len() != dims) {
            return Err(SemdivError::DimMismatch {
                expected: dims,
                got: bad.len(),
            });
        }
        Self::new(key, rows.len(), dims, rows.concat())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn dims(&self) -> usize {
        self.dims
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dims..(i + 1) * self.dims]
    }

    pub fn iter_rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.dims)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// `1 - cos(u, v)`. Zero vectors are an error, never clamped.
pub fn cosine_distance(u: &[f64], v: &[f64]) -> Result<f64, SemdivError> {
    if u.len() != v.len() {
        return Err(SemdivError::DimMismatch {
            expected: u.len(),
            got: v.len(),
        });
    }
    let (nu, nv) = (norm(u), norm(v));
    if nu == 0.0 {
        return Err(SemdivError::ZeroNormRow { row: 0 });
    }
    if nv == 0.0 {
        return Err(SemdivError::ZeroNormRow { row: 1 });
    }
    Ok(1.0 - dot(u, v) / (nu * nv))
}

/// Divergent semantic integration: mean cosine distance over all unordered
/// row pairs.
pub fn dsi(m: &EmbeddingMatrix) -> Result<f64, SemdivError> {
    let n = m.rows();
    if n < 2 {
        return Err(SemdivError::TooFewRows { needed: 2, got: n });
    }
    let norms: Vec<f64> = m.iter_rows().map(norm).collect();
    let mut total = 0.0;
    for i in 0..n {
        let a = m.row(i);
        for j in i + 1..n {
            total += 1.0 - dot(a, m.row(j)) / (norms[i] * norms[j]);
        }
    }
    Ok(total / (n * (n - 1) / 2) as f64)
}

/// Mean cosine distance between an object embedding and each use row.
pub fn aut_distance(object_vec: &[f64], uses: &EmbeddingMatrix) -> Result<f64, SemdivError> {
    if object_vec.len() != uses.dims() {
        return Err(SemdivError::DimMismatch {
            expected: uses.dims(),
            got: object_vec.len(),
        });
    }
    let object_norm = norm(object_vec);
    if object_norm == 0.0 {
        return Err(SemdivError::ZeroNormRow { row: 0 });
    }
    let total: f64 = uses
        .iter_rows()
        .map(|u| 1.0 - dot(object_vec, u) / (object_norm * norm(u)))
        .sum();
    Ok(total / uses.rows() as f64)
}

/// Distinct values over total values. With `normalize`, values are trimmed
/// and lowercased before comparison.
pub fn unique_ratio<S: AsRef<str>>(values: &[S], normalize: bool) -> Result<f64, SemdivError> {
    if values.is_empty() {
        return Err(SemdivError::EmptyList);
    }
    let distinct: HashSet<String> = values
        .iter()
        .map(|v| {
            let v = v.as_ref();
            if normalize {
                v.trim().to_lowercase()
            } else {
                v.to_string()
            }
        })
        .collect();
    Ok(distinct.len() as f64 / values.len() as f64)
}

/// Read-only index over an embedding store file. Matrices are read from disk
/// on each [`EmbeddingStore::load`], so the index can be shared across
/// threads.
#[derive(Debug, Clone)]
pub struct EmbeddingStore {
    path: PathBuf,
    dims: usize,
    /// key -> (byte offset of the row data, row count)
    index: BTreeMap<String, (u64, usize)>,
}

fn read_u32(r: &mut impl Read) -> io::Result<u32> {
    let mut buf = [0u8; 4];
    r.read_exact(&mut buf)?;
    Ok(u32::from_le_bytes(buf))
}

impl EmbeddingStore {
    pub fn open(path: impl AsRef<Path>) -> Result<Self, SemdivError> {
        let path = path.as_ref().to_path_buf();
        let io_err = |source| SemdivError::Io {
            path: path.clone(),
            source,
        };
        let format = |reason: String| SemdivError::Format {
            path: path.clone(),
            reason,
        };
        let mut file = BufReader::new(File::open(&path).map_err(io_err)?);
        let mut magic = [0u8; 4];
        file.read_exact(&mut magic).map_err(io_err)?;
        if &magic != STORE_MAGIC {
            return Err(format("bad magic".into()));
        }
        let version = read_u32(&mut file).map_err(io_err)?;
        if version != STORE_VERSION {
            return Err(format(format!("unsupported version {version}")));
        }
        let dims = read_u32(&mut file).map_err(io_err)? as usize;
        if dims == 0 {
            return Err(format("dims is zero".into()));
        }
        let count = read_u32(&mut file).map_err(io_err)?;
        let mut index = BTreeMap::new();
        let mut offset = 16u64;
        for _ in 0..count {
            let key_len = read_u32(&mut file).map_err(io_err)? as usize;
            let mut key = vec![0u8; key_len];
            file.read_exact(&mut key).map_err(io_err)?;
            let key = String::from_utf8(key).map_err(|_| format("key is not UTF-8".into()))?;
            let rows = read_u32(&mut file).map_err(io_err)? as usize;
            offset += 8 + key_len as u64;
            let bytes = (rows * dims * 4) as u64;
            if index.insert(key.clone(), (offset, rows)).is_some() {
                return Err(format(format!("duplicate key `{key}`")));
            }
            offset += bytes;
            file.seek(SeekFrom::Start(offset)).map_err(io_err)?;
        }
        let len = std::fs::metadata(&path).map_err(io_err)?.len();
        if offset != len {
            return Err(format(format!("expected {offset} bytes, file has {len}")));
        }
        Ok(Self { path, dims, index })
    }

    pub fn dims(&self) -> usize {
        self.dims
    }

    pub fn len(&self) -> usize {
        self.index.len()
    }

    pub fn is_empty(&self) -> bool {
        self.index.is_empty()
    }

    pub fn contains(&self, key: &str) -> bool {
        self.index.contains_key(key)
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.index.keys().map(String::as_str)
    }

    pub fn load(&self, key: &str) -> Result<EmbeddingMatrix, SemdivError> {
        let &(offset, rows) = self
            .index
            .get(key)
            .ok_or_else(|| SemdivError::MissingKey(key.to_string()))?;
        let io_err = |source| SemdivError::Io {
            path: self.path.clone(),
            source,
        };
        let mut file = File::open(&self.path).map_err(io_err)?;
        file.seek(SeekFrom::Start(offset)).map_err(io_err)?;
        let mut raw = vec![0u8; rows * self.dims * 4];
        file.read_exact(&mut raw).map_err(io_err)?;
        let data = raw
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64)
            .collect();
        EmbeddingMatrix::new(key, rows, self.dims, data)
    }
}

/// Writes matrices to a store file. All matrices must share one width.
/// Values are narrowed to `f32`.
pub fn write_store(path: impl AsRef<Path>, matrices: &[EmbeddingMatrix]) -> Result<(), SemdivError> {
    let path = path.as_ref();
    let dims = matrices.first().map_or(1, EmbeddingMatrix::dims);
    if let Some(m) = matrices.iter().find(|m| m.dims() != dims) {
        return Err(SemdivError::DimMismatch {
            expected: dims,
            got: m.dims(),
        });
    }
    let io_err = |source| SemdivError::Io {
        path: path.to_path_buf(),
        source,
    };
    let mut out = BufWriter::new(File::create(path).map_err(io_err)?);
    let mut write = |bytes: &[u8]| out.write_all(bytes).map_err(io_err);
    write(STORE_MAGIC)?;
    write(&STORE_VERSION.to_le_bytes())?;
    write(&(dims as u32).to_le_bytes())?;
    write(&(matrices.len() as u32).to_le_bytes())?;
    for m in matrices {
        write(&(m.key.len() as u32).to_le_bytes())?;
        write(m.key.as_bytes())?;
        write(&(m.rows() as u32).to_le_bytes())?;
        for x in &m.data {
            write(&(*x as f32).to_le_bytes())?;
        }
    }
    out.flush().map_err(io_err)
}
