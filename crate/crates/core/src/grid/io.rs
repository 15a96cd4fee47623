//! Binary snapshots and CSV export.
//!
//! Snapshot layout, little-endian: `b"BDMF"`, `u32` version, `u32` dim,
//! three `u32` node counts (1 for unused axes), `u64` frame count, then the
//! `f64` nodal values frame by frame.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::{FieldSeries, Grid, ScalarField};
use crate::error::{Error, Result};

pub const SNAPSHOT_MAGIC: &[u8; 4] = b"BDMF";
pub const SNAPSHOT_VERSION: u32 = 1;

pub fn write_series(path: &Path, series: &FieldSeries) -> Result<()> {
    let g = series.grid();
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(SNAPSHOT_MAGIC)?;
    w.write_all(&SNAPSHOT_VERSION.to_le_bytes())?;
    w.write_all(&(g.dim() as u32).to_le_bytes())?;
    for n in g.nodes3() {
        w.write_all(&(n as u32).to_le_bytes())?;
    }
    w.write_all(&(series.n_frames() as u64).to_le_bytes())?;
    for f in series.frames() {
        for v in f.values() {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

fn read_u32(r: &mut impl Read) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)
        .map_err(|_| Error::Format("truncated header".into()))?;
    Ok(u32::from_le_bytes(b))
}

/// Reads a snapshot whose layout must match `grid` (node counts and frame
/// count); lengths and the time horizon come from `grid`.
pub fn read_series(path: &Path, grid: &Grid) -> Result<FieldSeries> {
    let mut r = BufReader::new(File::open(path)?);
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)
        .map_err(|_| Error::Format("file shorter than the magic".into()))?;
    if &magic != SNAPSHOT_MAGIC {
        return Err(Error::Format("bad magic".into()));
    }
    let version = read_u32(&mut r)?;
    if version != SNAPSHOT_VERSION {
        return Err(Error::Format(format!("unsupported version {version}")));
    }
    let dim = read_u32(&mut r)? as usize;
    let mut nodes = [0usize; 3];
    for n in nodes.iter_mut() {
        *n = read_u32(&mut r)? as usize;
    }
    let mut fc = [0u8; 8];
    r.read_exact(&mut fc)
        .map_err(|_| Error::Format("truncated header".into()))?;
    let frames = u64::from_le_bytes(fc) as usize;
    if dim != grid.dim() || nodes != grid.nodes3() {
        return Err(Error::Format(format!(
            "layout {dim}-D {nodes:?} does not match the configured grid {:?}",
            grid.nodes3()
        )));
    }
    if frames != grid.n_frames() {
        return Err(Error::Format(format!(
            "{frames} frames, expected {}",
            grid.n_frames()
        )));
    }
    let n = grid.n_nodes();
    let mut buf = vec![0u8; 8 * n];
    let mut out = Vec::with_capacity(frames);
    for k in 0..frames {
        r.read_exact(&mut buf)
            .map_err(|_| Error::Format(format!("truncated at frame {k}")))?;
        let values = buf
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        out.push(ScalarField::new(*grid, values)?);
    }
    let mut rest = [0u8; 1];
    if r.read(&mut rest)? != 0 {
        return Err(Error::Format("trailing bytes after the last frame".into()));
    }
    FieldSeries::new(*grid, out)
}

/// One row per node: `x,y,z,value`.
pub fn write_csv(path: &Path, field: &ScalarField) -> Result<()> {
    let g = field.grid();
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "x,y,z,value")?;
    for (i, v) in field.values().iter().enumerate() {
        let x = g.node_coords(i);
        writeln!(w, "{},{},{},{}", x[0], x[1], x[2], v)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn snapshot_roundtrip_and_rejections() {
        let dir = tempfile::tempdir().unwrap();
        let g = Grid::new(&[4, 3], &[1.0, 2.0], 1.0, 2).unwrap();
        let s = FieldSeries::from_fn(g, |x, t| x[0] - 3.0 * x[1] * t);
        let p = dir.path().join("s.bin");
        write_series(&p, &s).unwrap();
        assert_eq!(read_series(&p, &g).unwrap(), s);

        let other = Grid::new(&[4, 3], &[1.0, 2.0], 1.0, 3).unwrap();
        assert!(matches!(read_series(&p, &other), Err(Error::Format(_))));

        let mut bytes = std::fs::read(&p).unwrap();
        bytes.truncate(bytes.len() - 3);
        std::fs::write(&p, &bytes).unwrap();
        assert!(matches!(read_series(&p, &g), Err(Error::Format(_))));
        bytes[0] = b'X';
        std::fs::write(&p, &bytes).unwrap();
        assert!(matches!(read_series(&p, &g), Err(Error::Format(_))));
    }

    #[test]
    fn csv_has_one_row_per_node() {
        let dir = tempfile::tempdir().unwrap();
        let g = Grid::unit_square(3, 1.0, 1).unwrap();
        let p = dir.path().join("f.csv");
        write_csv(&p, &ScalarField::constant(g, 2.0)).unwrap();
        let text = std::fs::read_to_string(&p).unwrap();
        assert_eq!(text.lines().count(), 1 + 9);
        assert!(text.lines().nth(2).unwrap().starts_with("0.5,0,0,2"));
    }
}
