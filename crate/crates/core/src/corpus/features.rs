use thiserror::Error;

/// Magic bytes opening every `.abft` feature file.
pub const ABFT_MAGIC: &[u8; 4] = b"ABFT";
const HEADER_LEN: usize = 12;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum FeatureError {
    #[error("bad magic at byte 0: expected \"ABFT\"")]
    BadMagic { offset: usize },
    #[error("truncated payload at byte {offset}: expected {expected} bytes, got {actual}")]
    TruncatedPayload {
        offset: usize,
        expected: usize,
        actual: usize,
    },
    #[error("non-finite value at byte {offset}")]
    NonFiniteValue { offset: usize },
    #[error("invalid shape {pixels}x{dim} at byte 4: both dimensions must be positive")]
    EmptyShape { pixels: usize, dim: usize },
    #[error("{extra} trailing bytes after payload at byte {offset}")]
    TrailingBytes { offset: usize, extra: usize },
    #[error("grid of {pixels}x{dim} needs {expected} values, got {actual}")]
    ShapeMismatch {
        pixels: usize,
        dim: usize,
        expected: usize,
        actual: usize,
    },
}

/// A `pixels x dim` row-major grid of encoded image features.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureGrid {
    pixels: usize,
    dim: usize,
    values: Vec<f32>,
}

impl FeatureGrid {
    pub fn new(pixels: usize, dim: usize, values: Vec<f32>) -> Result<Self, FeatureError> {
        if pixels == 0 || dim == 0 {
            return Err(FeatureError::EmptyShape { pixels, dim });
        }
        if values.len() != pixels * dim {
            return Err(FeatureError::ShapeMismatch {
                pixels,
                dim,
                expected: pixels * dim,
                actual: values.len(),
            });
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(FeatureError::NonFiniteValue {
                offset: HEADER_LEN + 4 * i,
            });
        }
        Ok(Self {
            pixels,
            dim,
            values,
        })
    }

    pub fn pixels(&self) -> usize {
        self.pixels
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn values(&self) -> &[f32] {
        &self.values
    }

    pub fn row(&self, p: usize) -> &[f32] {
        &self.values[p * self.dim..(p + 1) * self.dim]
    }

    /// Values widened to `f64`, row-major.
    pub fn to_f64(&self) -> Vec<f64> {
        self.values.iter().map(|&v| f64::from(v)).collect()
    }
}

/// Serializes a grid in the `.abft` layout: magic, `u32` pixels, `u32` dim,
/// then little-endian `f32` values row by row.
pub fn save_features(grid: &FeatureGrid) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_LEN + 4 * grid.values.len());
    out.extend_from_slice(ABFT_MAGIC);
    out.extend_from_slice(&(grid.pixels as u32).to_le_bytes());
    out.extend_from_slice(&(grid.dim as u32).to_le_bytes());
    for v in &grid.values {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn load_features(bytes: &[u8]) -> Result<FeatureGrid, FeatureError> {
    if bytes.len() < ABFT_MAGIC.len() || &bytes[..4] != ABFT_MAGIC {
        return Err(FeatureError::BadMagic { offset: 0 });
    }
    if bytes.len() < HEADER_LEN {
        return Err(FeatureError::TruncatedPayload {
            offset: bytes.len(),
            expected: HEADER_LEN,
            actual: bytes.len(),
        });
    }
    let read_u32 = |at: usize| u32::from_le_bytes(bytes[at..at + 4].try_into().unwrap()) as usize;
    let pixels = read_u32(4);
    let dim = read_u32(8);
    if pixels == 0 || dim == 0 {
        return Err(FeatureError::EmptyShape { pixels, dim });
    }
    let expected = pixels
        .checked_mul(dim)
        .and_then(|n| n.checked_mul(4))
        .and_then(|n| n.checked_add(HEADER_LEN))
        .unwrap_or(usize::MAX);
    if bytes.len() < expected {
        return Err(FeatureError::TruncatedPayload {
            offset: bytes.len(),
            expected,
            actual: bytes.len(),
        });
    }
    if bytes.len() > expected {
        return Err(FeatureError::TrailingBytes {
            offset: expected,
            extra: bytes.len() - expected,
        });
    }
    let mut values = Vec::with_capacity(pixels * dim);
    for (i, chunk) in bytes[HEADER_LEN..].chunks_exact(4).enumerate() {
        let v = f32::from_le_bytes(chunk.try_into().unwrap());
        if !v.is_finite() {
            return Err(FeatureError::NonFiniteValue {
                offset: HEADER_LEN + 4 * i,
            });
        }
        values.push(v);
    }
    Ok(FeatureGrid {
        pixels,
        dim,
        values,
    })
}
