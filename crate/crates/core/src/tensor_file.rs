//! `EHT1` tensor files.
//!
//! Layout (all integers little-endian):
//!
//! | offset | size      | field                         |
//! |--------|-----------|-------------------------------|
//! | 0      | 4         | magic `b"EHT1"`               |
//! | 4      | 1         | dtype code, `0` = f32         |
//! | 5      | 1         | `ndim`                        |
//! | 6      | 2         | zero padding                  |
//! | 8      | 4 × ndim  | dims, u32 each                |
//! | …      | 4 × Πdims | row-major f32 payload         |

use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::heatmap::HeatmapStack;

pub const MAGIC: [u8; 4] = *b"EHT1";
pub const DTYPE_F32: u8 = 0;

/// A dense f32 tensor of arbitrary rank.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    pub dims: Vec<usize>,
    pub data: Vec<f32>,
}

impl Tensor {
    pub fn new(dims: Vec<usize>, data: Vec<f32>) -> Result<Self> {
        let expected: usize = dims.iter().product();
        if expected != data.len() {
            return Err(Error::ShapeMismatch {
                expected: dims,
                actual: vec![data.len()],
            });
        }
        Ok(Self { dims, data })
    }

    pub fn into_heatmaps(self) -> Result<HeatmapStack> {
        HeatmapStack::from_dims(&self.dims, self.data)
    }
}

impl From<HeatmapStack> for Tensor {
    fn from(stack: HeatmapStack) -> Self {
        let dims = stack.dims().to_vec();
        Tensor {
            dims,
            data: stack.into_data(),
        }
    }
}

fn format_err(msg: impl Into<String>) -> Error {
    Error::TensorFormat(msg.into())
}

/// Serializes a tensor to bytes.
pub fn encode(dims: &[usize], data: &[f32]) -> Result<Vec<u8>> {
    if dims.len() > u8::MAX as usize {
        return Err(format_err(format!("rank {} exceeds 255", dims.len())));
    }
    if dims.iter().product::<usize>() != data.len() {
        return Err(Error::ShapeMismatch {
            expected: dims.to_vec(),
            actual: vec![data.len()],
        });
    }
    let mut out = Vec::with_capacity(8 + 4 * dims.len() + 4 * data.len());
    out.extend_from_slice(&MAGIC);
    out.push(DTYPE_F32);
    out.push(dims.len() as u8);
    out.extend_from_slice(&[0, 0]);
    for &d in dims {
        let d = u32::try_from(d).map_err(|_| format_err(format!("dimension {d} exceeds u32")))?;
        out.extend_from_slice(&d.to_le_bytes());
    }
    for v in data {
        out.extend_from_slice(&v.to_le_bytes());
    }
    Ok(out)
}

/// Parses a complete tensor file image; trailing bytes are an error.
pub fn decode(bytes: &[u8]) -> Result<Tensor> {
    if bytes.len() < 8 {
        return Err(format_err("truncated header"));
    }
    if bytes[..4] != MAGIC {
        return Err(format_err(format!("bad magic {:?}", &bytes[..4])));
    }
    if bytes[4] != DTYPE_F32 {
        return Err(format_err(format!("unsupported dtype code {}", bytes[4])));
    }
    if bytes[6..8] != [0, 0] {
        return Err(format_err("nonzero header padding"));
    }
    let ndim = bytes[5] as usize;
    let header = 8 + 4 * ndim;
    if bytes.len() < header {
        return Err(format_err("truncated dims"));
    }
    let dims: Vec<usize> = bytes[8..header]
        .chunks_exact(4)
        .map(|c| u32::from_le_bytes(c.try_into().expect("4-byte chunk")) as usize)
        .collect();
    let count = dims
        .iter()
        .try_fold(1usize, |acc, &d| acc.checked_mul(d))
        .ok_or_else(|| format_err("element count overflows"))?;
    let payload = &bytes[header..];
    if Some(payload.len()) != count.checked_mul(4) {
        return Err(format_err(format!(
            "payload is {} bytes, dims {:?} need {}",
            payload.len(),
            dims,
            count.saturating_mul(4)
        )));
    }
    let data = payload
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().expect("4-byte chunk")))
        .collect();
    Ok(Tensor { dims, data })
}

pub fn write_tensor<W: Write>(mut w: W, dims: &[usize], data: &[f32]) -> Result<()> {
    w.write_all(&encode(dims, data)?)?;
    Ok(())
}

pub fn read_tensor<R: Read>(mut r: R) -> Result<Tensor> {
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;
    decode(&bytes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn header_layout() {
        let bytes = encode(&[2, 3], &[1.0, 2.0, 3.0, 4.0, 5.0, -0.5]).unwrap();
        assert_eq!(&bytes[..8], b"EHT1\x00\x02\x00\x00");
        assert_eq!(&bytes[8..16], &[2, 0, 0, 0, 3, 0, 0, 0]);
        assert_eq!(&bytes[16..20], &1.0f32.to_le_bytes());
        assert_eq!(&bytes[36..40], &[0x00, 0x00, 0x00, 0xbf]);
        assert_eq!(bytes.len(), 8 + 8 + 24);
    }

    #[test]
    fn rejects_malformed_files() {
        let good = encode(&[1, 4, 1, 1], &[0.0, 0.5, 1.0, 0.25]).unwrap();
        assert!(decode(&good).is_ok());

        let mut bad_magic = good.clone();
        bad_magic[3] = b'2';
        assert!(matches!(decode(&bad_magic), Err(Error::TensorFormat(_))));

        let mut bad_dtype = good.clone();
        bad_dtype[4] = 1;
        assert!(decode(&bad_dtype).is_err());

        let mut bad_pad = good.clone();
        bad_pad[7] = 1;
        assert!(decode(&bad_pad).is_err());

        assert!(decode(&good[..good.len() - 1]).is_err());
        let mut trailing = good.clone();
        trailing.push(0);
        assert!(decode(&trailing).is_err());
        assert!(decode(&good[..6]).is_err());
        assert!(encode(&[2, 2], &[0.0; 3]).is_err());
    }

    #[test]
    fn heatmap_dims_are_enforced() {
        let t = decode(&encode(&[1, 3, 1, 1], &[0.0; 3]).unwrap()).unwrap();
        assert!(t.into_heatmaps().is_err());
        let t = decode(&encode(&[2, 4, 2, 1], &[0.0; 16]).unwrap()).unwrap();
        assert_eq!(t.into_heatmaps().unwrap().dims(), [2, 4, 2, 1]);
    }

    proptest! {
        #[test]
        fn round_trip(dims in prop::collection::vec(1usize..5, 0..5), seed in any::<u32>()) {
            let n: usize = dims.iter().product();
            let data: Vec<f32> = (0..n)
                .map(|i| f32::from_bits(seed.wrapping_mul(2654435761).wrapping_add(i as u32 * 7919) & 0x7f7f_ffff))
                .collect();
            let bytes = encode(&dims, &data).unwrap();
            let back = decode(&bytes).unwrap();
            prop_assert_eq!(&back.dims, &dims);
            prop_assert_eq!(back.data.iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
                            data.iter().map(|v| v.to_bits()).collect::<Vec<_>>());
            prop_assert_eq!(encode(&back.dims, &back.data).unwrap(), bytes);
        }
    }
}
