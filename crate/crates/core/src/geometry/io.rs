//! Flat binary point-cloud format.
//!
//! Layout (all little-endian): magic `PPC1`, `dim: u8`, `alpha: f64`,
//! `box_side: f64`, `seed: u64`, `count: u64`, then `count * dim` f64
//! coordinates. The same container with `dim = 1` carries plain value
//! vectors (eigenvector dumps).

use std::io::{Read, Write};

use super::cloud::PointCloud;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

const MAGIC: &[u8; 4] = b"PPC1";

fn write_header<W: Write>(
    w: &mut W,
    dim: u8,
    alpha: f64,
    box_side: f64,
    seed: u64,
    count: u64,
) -> Result<()> {
    w.write_all(MAGIC)?;
    w.write_all(&[dim])?;
    w.write_all(&alpha.to_le_bytes())?;
    w.write_all(&box_side.to_le_bytes())?;
    w.write_all(&seed.to_le_bytes())?;
    w.write_all(&count.to_le_bytes())?;
    Ok(())
}

struct Header {
    dim: u8,
    alpha: f64,
    box_side: f64,
    seed: u64,
    count: u64,
}

fn read_header<R: Read>(r: &mut R) -> Result<Header> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)
        .map_err(|_| Error::MalformedCloudFile("truncated header".into()))?;
    if &magic != MAGIC {
        return Err(Error::MalformedCloudFile(format!(
            "bad magic {:?}, expected {:?}",
            magic, MAGIC
        )));
    }
    let mut b1 = [0u8; 1];
    let mut b8 = [0u8; 8];
    r.read_exact(&mut b1)
        .map_err(|_| Error::MalformedCloudFile("truncated header".into()))?;
    let dim = b1[0];
    let mut next_f64 = |r: &mut R| -> Result<f64> {
        r.read_exact(&mut b8)
            .map_err(|_| Error::MalformedCloudFile("truncated header".into()))?;
        Ok(f64::from_le_bytes(b8))
    };
    let alpha = next_f64(r)?;
    let box_side = next_f64(r)?;
    let mut next_u64 = |r: &mut R| -> Result<u64> {
        r.read_exact(&mut b8)
            .map_err(|_| Error::MalformedCloudFile("truncated header".into()))?;
        Ok(u64::from_le_bytes(b8))
    };
    let seed = next_u64(r)?;
    let count = next_u64(r)?;
    Ok(Header {
        dim,
        alpha,
        box_side,
        seed,
        count,
    })
}

fn read_f64s<R: Read>(r: &mut R, n: usize) -> Result<Vec<f64>> {
    let mut buf = vec![0u8; n * 8];
    r.read_exact(&mut buf)
        .map_err(|_| Error::MalformedCloudFile("truncated coordinate block".into()))?;
    Ok(buf
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect())
}

/// Serialize a point cloud.
pub fn write_cloud<T: Scalar, W: Write>(cloud: &PointCloud<T>, w: &mut W) -> Result<()> {
    write_header(
        w,
        cloud.dim() as u8,
        cloud.alpha().as_f64(),
        cloud.box_side().as_f64(),
        cloud.seed(),
        cloud.len() as u64,
    )?;
    for &x in cloud.coords() {
        w.write_all(&x.as_f64().to_le_bytes())?;
    }
    Ok(())
}

/// Deserialize a point cloud, validating magic and dimension.
pub fn read_cloud<T: Scalar, R: Read>(r: &mut R) -> Result<PointCloud<T>> {
    let h = read_header(r)?;
    if !(h.dim == 2 || h.dim == 3) {
        return Err(Error::MalformedCloudFile(format!(
            "point cloud dimension must be 2 or 3, got {}",
            h.dim
        )));
    }
    let coords = read_f64s(r, h.count as usize * h.dim as usize)?;
    Ok(PointCloud::from_parts(
        h.dim as usize,
        T::cast(h.box_side),
        T::cast(h.alpha),
        h.seed,
        coords.into_iter().map(T::cast).collect(),
    ))
}

/// Write a plain value vector in the same container (`dim = 1`, zeroed
/// cloud metadata).
pub fn write_values<T: Scalar, W: Write>(values: &[T], w: &mut W) -> Result<()> {
    write_header(w, 1, 0.0, 0.0, 0, values.len() as u64)?;
    for &v in values {
        w.write_all(&v.as_f64().to_le_bytes())?;
    }
    Ok(())
}

/// Read back a plain value vector written by [`write_values`].
pub fn read_values<T: Scalar, R: Read>(r: &mut R) -> Result<Vec<T>> {
    let h = read_header(r)?;
    if h.dim != 1 {
        return Err(Error::MalformedCloudFile(format!(
            "value vector must have dim 1, got {}",
            h.dim
        )));
    }
    Ok(read_f64s(r, h.count as usize)?.into_iter().map(T::cast).collect())
}
