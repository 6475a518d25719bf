//! On-disk formats: binary matrix dumps and the view-factor cache.
//!
//! Square matrices (the view-factor cache) use the layout
//! `u64 N, then N² little-endian f64` in row-major order. Rectangular
//! matrices (basis exports) prepend both dimensions:
//! `u64 rows, u64 cols, then rows·cols little-endian f64`.

use crate::error::{Error, Result};
use crate::mesh::CavityGeometry;
use ndarray::Array2;
use sha2::{Digest, Sha256};
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

fn write_f64_slice<W: Write>(out: &mut W, data: &[f64]) -> Result<()> {
    let mut buf = Vec::with_capacity(8 * 8192);
    for chunk in data.chunks(8192) {
        buf.clear();
        for &v in chunk {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        out.write_all(&buf)?;
    }
    Ok(())
}

fn read_f64_vec<R: Read>(input: &mut R, len: usize) -> Result<Vec<f64>> {
    let mut data = Vec::new();
    data.try_reserve_exact(len)
        .map_err(|_| Error::Capacity { rows: len, cols: 1 })?;
    let mut buf = vec![0u8; 8 * 8192];
    let mut remaining = len;
    while remaining > 0 {
        let take = remaining.min(8192);
        let bytes = &mut buf[..8 * take];
        input.read_exact(bytes)?;
        for c in bytes.chunks_exact(8) {
            data.push(f64::from_le_bytes(c.try_into().unwrap()));
        }
        remaining -= take;
    }
    Ok(data)
}

/// Writes a square matrix as `u64 N` followed by `N²` little-endian f64.
pub fn write_square_matrix(path: &Path, m: &Array2<f64>) -> Result<()> {
    let (rows, cols) = m.dim();
    if rows != cols {
        return Err(Error::Dimension(format!(
            "square matrix format requires rows == cols, got {rows}x{cols}"
        )));
    }
    let mut out = BufWriter::new(File::create(path)?);
    out.write_all(&(rows as u64).to_le_bytes())?;
    write_f64_slice(&mut out, m.as_slice().expect("row-major layout"))?;
    out.flush()?;
    Ok(())
}

/// Reads a square matrix written by [`write_square_matrix`].
pub fn read_square_matrix(path: &Path) -> Result<Array2<f64>> {
    let mut input = BufReader::new(File::open(path)?);
    let mut hdr = [0u8; 8];
    input.read_exact(&mut hdr)?;
    let n = u64::from_le_bytes(hdr) as usize;
    let len = n
        .checked_mul(n)
        .ok_or(Error::Capacity { rows: n, cols: n })?;
    let data = read_f64_vec(&mut input, len)?;
    Array2::from_shape_vec((n, n), data).map_err(|e| Error::Parse(e.to_string()))
}

/// Writes a rectangular matrix as `u64 rows, u64 cols` followed by the data.
pub fn write_matrix(path: &Path, m: &Array2<f64>) -> Result<()> {
    let (rows, cols) = m.dim();
    let mut out = BufWriter::new(File::create(path)?);
    out.write_all(&(rows as u64).to_le_bytes())?;
    out.write_all(&(cols as u64).to_le_bytes())?;
    write_f64_slice(&mut out, m.as_slice().expect("row-major layout"))?;
    out.flush()?;
    Ok(())
}

/// Reads a rectangular matrix written by [`write_matrix`].
pub fn read_matrix(path: &Path) -> Result<Array2<f64>> {
    let mut input = BufReader::new(File::open(path)?);
    let mut hdr = [0u8; 16];
    input.read_exact(&mut hdr)?;
    let rows = u64::from_le_bytes(hdr[..8].try_into().unwrap()) as usize;
    let cols = u64::from_le_bytes(hdr[8..].try_into().unwrap()) as usize;
    let len = rows
        .checked_mul(cols)
        .ok_or(Error::Capacity { rows, cols })?;
    let data = read_f64_vec(&mut input, len)?;
    Array2::from_shape_vec((rows, cols), data).map_err(|e| Error::Parse(e.to_string()))
}

/// Cache key for a view-factor matrix: SHA-256 over the geometry fields that
/// determine the mesh, truncated to 16 hex digits.
pub fn view_factor_cache_key(geometry: &CavityGeometry) -> String {
    let r = &geometry.resolutions;
    let repr = format!(
        "vf1|{:.17e}|{:.17e}|{:.17e}|{:.17e}|{:.17e}|{:.17e}|{:.17e}|{:.17e}|{:.17e}|{:.17e}|{:?}",
        geometry.cavity_radius,
        geometry.cavity_half_height,
        geometry.capsule_radius,
        geometry.leh_radius,
        r.dtheta_s,
        r.dphi_s,
        r.dr,
        r.dphi_u,
        r.dz,
        r.dphi_w,
        r.wall_counts,
    );
    let digest = Sha256::digest(repr.as_bytes());
    digest[..8].iter().map(|b| format!("{b:02x}")).collect()
}

/// Path of the cached view-factor matrix for `geometry` under `dir`.
pub fn view_factor_cache_path(dir: &Path, geometry: &CavityGeometry) -> PathBuf {
    dir.join(format!("vf_{}.vfbin", view_factor_cache_key(geometry)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::arr2;

    #[test]
    fn square_matrix_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.vfbin");
        let m = arr2(&[[1.0, 2.5], [-3.0, 1e-300]]);
        write_square_matrix(&path, &m).unwrap();
        let back = read_square_matrix(&path).unwrap();
        assert_eq!(m, back);
    }

    #[test]
    fn rectangular_matrix_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.bin");
        let m = arr2(&[[1.0, 2.0, 3.0], [4.0, 5.0, 6.0]]);
        write_matrix(&path, &m).unwrap();
        assert_eq!(read_matrix(&path).unwrap(), m);
    }

    #[test]
    fn square_format_rejects_rectangular() {
        let dir = tempfile::tempdir().unwrap();
        let m = arr2(&[[1.0, 2.0, 3.0], [4.0, 5.0, 6.0]]);
        assert!(write_square_matrix(&dir.path().join("x"), &m).is_err());
    }
}
