//! Binary snapshots: `"MHD0"`, version (u32), `n` (u32), `L` and `t` (f64),
//! then `ρ, u¹, u², u³, H¹, H², H³` as `n³` row-major f64 arrays, all
//! little-endian.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::dynamics::FluidState;
use crate::error::{Error, Result};
use crate::fields::{GridSpec, ScalarField, VectorField};

pub const MAGIC: &[u8; 4] = b"MHD0";
pub const VERSION: u32 = 1;
const HEADER_LEN: usize = 4 + 4 + 4 + 8 + 8;

pub fn write_snapshot(state: &FluidState, path: impl AsRef<Path>) -> Result<()> {
    let grid = state.grid();
    let n = u32::try_from(grid.n())
        .map_err(|_| Error::InvalidGrid("grid too large for snapshot".into()))?;
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&n.to_le_bytes())?;
    w.write_all(&grid.length().to_le_bytes())?;
    w.write_all(&state.t.to_le_bytes())?;
    let arrays = std::iter::once(&state.rho)
        .chain(state.u.components())
        .chain(state.h.components());
    for f in arrays {
        for v in f.values() {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn read_snapshot(path: impl AsRef<Path>) -> Result<FluidState> {
    let mut bytes = Vec::new();
    BufReader::new(File::open(path)?).read_to_end(&mut bytes)?;
    decode(&bytes)
}

/// Reads a snapshot and requires it to live on `grid`.
pub fn read_snapshot_on(path: impl AsRef<Path>, grid: &GridSpec) -> Result<FluidState> {
    let state = read_snapshot(path)?;
    grid.ensure_compatible(state.grid())?;
    Ok(state)
}

fn decode(bytes: &[u8]) -> Result<FluidState> {
    let mismatch = |m: String| Err(Error::HeaderMismatch(m));
    if bytes.len() < HEADER_LEN {
        return mismatch(format!(
            "file has {} bytes, header needs {HEADER_LEN}",
            bytes.len()
        ));
    }
    if &bytes[0..4] != MAGIC {
        return mismatch("bad magic bytes".into());
    }
    let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().expect("4 bytes"));
    let f64_at = |o: usize| f64::from_le_bytes(bytes[o..o + 8].try_into().expect("8 bytes"));
    let version = u32_at(4);
    if version != VERSION {
        return mismatch(format!("unsupported version {version}"));
    }
    let n = u32_at(8) as usize;
    let (length, t) = (f64_at(12), f64_at(20));
    let grid = GridSpec::new(n, length).map_err(|e| Error::HeaderMismatch(e.to_string()))?;
    let points = grid.points();
    let expected = HEADER_LEN + 7 * 8 * points;
    if bytes.len() != expected {
        return mismatch(format!(
            "expected {expected} bytes for n = {n}, found {}",
            bytes.len()
        ));
    }
    let mut arrays = (0..7).map(|a| {
        let start = HEADER_LEN + 8 * a * points;
        let values = (0..points).map(|i| f64_at(start + 8 * i)).collect();
        ScalarField::from_values(grid, values)
    });
    let mut next = || arrays.next().expect("seven arrays");
    let rho = next()?;
    let u = VectorField::new([next()?, next()?, next()?])?;
    let h = VectorField::new([next()?, next()?, next()?])?;
    FluidState::new(t, rho, u, h)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testing::{grid, params, smooth_state};

    #[test]
    fn round_trip_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.bin");
        let mut s = smooth_state(grid(8), &params(), 0.1);
        s.t = 0.125;
        write_snapshot(&s, &path).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        assert_eq!(bytes.len(), HEADER_LEN + 7 * 8 * 512);
        assert_eq!(&bytes[..4], b"MHD0");
        let r = read_snapshot(&path).unwrap();
        assert_eq!(r.t.to_bits(), s.t.to_bits());
        assert_eq!(r.rho, s.rho);
        assert_eq!(r.u, s.u);
        assert_eq!(r.h, s.h);
    }

    #[test]
    fn truncated_and_foreign_files_fail() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.bin");
        write_snapshot(&smooth_state(grid(8), &params(), 0.1), &path).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        for cut in [0, 10, HEADER_LEN, bytes.len() - 1] {
            std::fs::write(&path, &bytes[..cut]).unwrap();
            assert!(
                matches!(read_snapshot(&path), Err(Error::HeaderMismatch(_))),
                "{cut}"
            );
        }
        let mut bad = bytes.clone();
        bad[0] = b'X';
        std::fs::write(&path, &bad).unwrap();
        assert!(matches!(
            read_snapshot(&path),
            Err(Error::HeaderMismatch(_))
        ));
    }

    #[test]
    fn grid_mismatch_is_reported() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.bin");
        write_snapshot(&smooth_state(grid(8), &params(), 0.1), &path).unwrap();
        assert!(matches!(
            read_snapshot_on(&path, &grid(16)),
            Err(Error::GridMismatch(_))
        ));
        assert!(read_snapshot_on(&path, &grid(8)).is_ok());
    }
}
