//! IDX tensors of unsigned bytes, the format MNIST ships in.
//!
//! Layout: two zero bytes, a type byte (`0x08` = u8), a dimension count,
//! one big-endian `u32` per dimension, then the row-major payload. Image
//! files carry magic `0x00000803`, label files `0x00000801`.

use std::path::Path;

use super::Matrix;
use crate::error::{Error, Result};

pub const IMAGES_MAGIC: u32 = 0x0000_0803;
pub const LABELS_MAGIC: u32 = 0x0000_0801;
const TYPE_U8: u8 = 0x08;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IdxTensor {
    pub dims: Vec<usize>,
    pub data: Vec<u8>,
}

impl IdxTensor {
    pub fn new(dims: Vec<usize>, data: Vec<u8>) -> Result<Self> {
        let expected: usize = dims.iter().product();
        if dims.is_empty() || dims.len() > 255 || expected != data.len() {
            return Err(Error::InvalidArgument(format!(
                "idx tensor with dims {dims:?} cannot hold {} bytes",
                data.len()
            )));
        }
        Ok(Self { dims, data })
    }

    pub fn magic(&self) -> u32 {
        (u32::from(TYPE_U8) << 8) | self.dims.len() as u32
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(4 + 4 * self.dims.len() + self.data.len());
        out.extend_from_slice(&self.magic().to_be_bytes());
        for &d in &self.dims {
            out.extend_from_slice(&(d as u32).to_be_bytes());
        }
        out.extend_from_slice(&self.data);
        out
    }
}

fn err(offset: usize, reason: impl Into<String>) -> Error {
    Error::Idx {
        offset,
        reason: reason.into(),
    }
}

/// Parses an unsigned-byte IDX tensor. `expected_magic` pins the rank.
pub fn parse_idx(bytes: &[u8], expected_magic: Option<u32>) -> Result<IdxTensor> {
    if bytes.len() < 4 {
        return Err(err(bytes.len(), "truncated magic number"));
    }
    let magic = u32::from_be_bytes([bytes[0], bytes[1], bytes[2], bytes[3]]);
    if bytes[0] != 0 || bytes[1] != 0 || bytes[2] != TYPE_U8 || bytes[3] == 0 {
        return Err(err(0, format!("bad magic number 0x{magic:08x}")));
    }
    if let Some(want) = expected_magic {
        if magic != want {
            return Err(err(0, format!("magic 0x{magic:08x}, expected 0x{want:08x}")));
        }
    }
    let ndims = usize::from(bytes[3]);
    let header = 4 + 4 * ndims;
    if bytes.len() < header {
        return Err(err(
            bytes.len(),
            format!("truncated header: {ndims} dimensions need {header} bytes"),
        ));
    }
    let dims: Vec<usize> = bytes[4..header]
        .chunks_exact(4)
        .map(|c| u32::from_be_bytes([c[0], c[1], c[2], c[3]]) as usize)
        .collect();
    let payload = dims
        .iter()
        .try_fold(1usize, |acc, &d| acc.checked_mul(d))
        .ok_or_else(|| err(4, "dimension product overflows"))?;
    let available = bytes.len() - header;
    if available < payload {
        return Err(err(
            bytes.len(),
            format!("truncated payload: {payload} bytes expected, {available} present"),
        ));
    }
    if available > payload {
        return Err(err(header + payload, format!("{} trailing bytes", available - payload)));
    }
    Ok(IdxTensor {
        dims,
        data: bytes[header..].to_vec(),
    })
}

pub fn read_idx(path: impl AsRef<Path>, expected_magic: Option<u32>) -> Result<IdxTensor> {
    parse_idx(&std::fs::read(path)?, expected_magic)
}

pub fn write_idx(path: impl AsRef<Path>, tensor: &IdxTensor) -> Result<()> {
    std::fs::write(path, tensor.to_bytes())?;
    Ok(())
}

/// `n x rows x cols` image file as an `n x (rows*cols)` matrix scaled to `[0, 1]`.
pub fn images_to_matrix(t: &IdxTensor) -> Result<Matrix> {
    let n = t.dims[0];
    let per: usize = t.dims[1..].iter().product();
    Matrix::new(n, per, t.data.iter().map(|&b| f64::from(b) / 255.0).collect())
}

pub fn read_images(path: impl AsRef<Path>) -> Result<Matrix> {
    images_to_matrix(&read_idx(path, Some(IMAGES_MAGIC))?)
}

pub fn read_labels(path: impl AsRef<Path>) -> Result<Vec<usize>> {
    Ok(read_idx(path, Some(LABELS_MAGIC))?
        .data
        .into_iter()
        .map(usize::from)
        .collect())
}
