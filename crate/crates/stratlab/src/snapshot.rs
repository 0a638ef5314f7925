//! Binary field snapshots.
//!
//! Layout (little-endian throughout):
//!
//! | offset | size | content                         |
//! |--------|------|---------------------------------|
//! | 0      | 8    | magic `b"STRATFLD"`             |
//! | 8      | 4    | format version (u32), currently 1 |
//! | 12     | 4    | fd_order of the writing grid (u32) |
//! | 16     | 8    | n1 (u64)                        |
//! | 24     | 8    | n2 (u64)                        |
//! | 32     | 8*n1*n2 | doubles, row-major (i outer, j inner) |

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::grid::{Grid, ScalarField};

pub const MAGIC: [u8; 8] = *b"STRATFLD";
pub const VERSION: u32 = 1;

pub fn write_snapshot(path: &Path, field: &ScalarField) -> Result<()> {
    let grid = field.grid();
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(&MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&(grid.fd_order() as u32).to_le_bytes())?;
    w.write_all(&(grid.n1() as u64).to_le_bytes())?;
    w.write_all(&(grid.n2() as u64).to_le_bytes())?;
    for v in field.values() {
        w.write_all(&v.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_snapshot(path: &Path) -> Result<ScalarField> {
    let mut r = BufReader::new(File::open(path)?);
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if magic != MAGIC {
        return Err(Error::SnapshotFormat("bad magic".into()));
    }
    let mut u32buf = [0u8; 4];
    r.read_exact(&mut u32buf)?;
    let version = u32::from_le_bytes(u32buf);
    if version != VERSION {
        return Err(Error::SnapshotFormat(format!("unsupported version {version}")));
    }
    r.read_exact(&mut u32buf)?;
    let fd_order = u32::from_le_bytes(u32buf) as usize;
    let mut u64buf = [0u8; 8];
    r.read_exact(&mut u64buf)?;
    let n1 = u64::from_le_bytes(u64buf) as usize;
    r.read_exact(&mut u64buf)?;
    let n2 = u64::from_le_bytes(u64buf) as usize;
    let grid = Grid::new(n1, n2, fd_order)
        .map_err(|e| Error::SnapshotFormat(format!("bad grid in header: {e}")))?;
    let mut values = vec![0.0f64; grid.len()];
    let mut fbuf = [0u8; 8];
    for v in values.iter_mut() {
        r.read_exact(&mut fbuf)?;
        *v = f64::from_le_bytes(fbuf);
    }
    let mut tail = [0u8; 1];
    if r.read(&mut tail)? != 0 {
        return Err(Error::SnapshotFormat("trailing bytes".into()));
    }
    ScalarField::from_values(grid, values)
}
