//! Binary field snapshots: a text header line `FRACPHASE1 ny nx bc` followed
//! by `ny * nx` little-endian `f64` values in row-major order.

use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::spectral::{BoundaryCondition, Field, SpatialGrid};

const MAGIC: &str = "FRACPHASE1";

pub fn write_snapshot_to<W: Write>(field: &Field, mut out: W) -> std::io::Result<()> {
    let g = field.grid();
    writeln!(out, "{MAGIC} {} {} {}", g.ny(), g.nx(), g.bc())?;
    for v in field.values() {
        out.write_all(&v.to_le_bytes())?;
    }
    out.flush()
}

pub fn write_snapshot(field: &Field, path: &Path) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write_snapshot_to(field, std::io::BufWriter::new(file)).map_err(|e| Error::io(path, e))
}

/// Header of a snapshot: `(ny, nx, bc)`.
pub fn parse_header(line: &str) -> Result<(usize, usize, BoundaryCondition)> {
    let parts: Vec<&str> = line.split_whitespace().collect();
    match parts.as_slice() {
        [magic, ny, nx, bc] if *magic == MAGIC => {
            let num = |s: &str| {
                s.parse::<usize>()
                    .map_err(|_| Error::Format(format!("bad dimension '{s}' in header")))
            };
            let bc = bc
                .parse::<BoundaryCondition>()
                .map_err(|_| Error::Format(format!("bad boundary condition '{bc}' in header")))?;
            Ok((num(ny)?, num(nx)?, bc))
        }
        _ => Err(Error::Format(format!("unrecognised header '{}'", line.trim_end()))),
    }
}

/// Read a snapshot onto `grid`, whose size and boundary condition must match the header.
pub fn read_snapshot_from<R: Read>(input: R, grid: &Arc<SpatialGrid>) -> Result<Field> {
    let mut reader = BufReader::new(input);
    let mut header = Vec::new();
    reader
        .read_until(b'\n', &mut header)
        .map_err(|e| Error::Format(format!("unreadable header: {e}")))?;
    let header = String::from_utf8(header).map_err(|_| Error::Format("header is not text".into()))?;
    let (ny, nx, bc) = parse_header(&header)?;
    if ny != grid.ny() || nx != grid.nx() || bc != grid.bc() {
        return Err(Error::Format(format!(
            "snapshot is {ny}x{nx} {bc}, grid is {}x{} {}",
            grid.ny(),
            grid.nx(),
            grid.bc()
        )));
    }
    let mut payload = Vec::new();
    reader
        .read_to_end(&mut payload)
        .map_err(|e| Error::Format(format!("unreadable payload: {e}")))?;
    if payload.len() != 8 * nx * ny {
        return Err(Error::Format(format!(
            "payload holds {} bytes, header announces {} values",
            payload.len(),
            nx * ny
        )));
    }
    let values = payload
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8 bytes")))
        .collect();
    Field::new(grid, values).map_err(|e| Error::Format(e.to_string()))
}

pub fn read_snapshot(path: &Path, grid: &Arc<SpatialGrid>) -> Result<Field> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_snapshot_from(file, grid)
}
