use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::{Grid, PdeError};
use crate::thermo::HydroSite;

const MAGIC: &[u8; 8] = b"HYDROSNP";
const VERSION: u32 = 1;
pub const FIELDS: [&str; 10] = ["x", "y", "z", "rho", "e", "u_x", "u_y", "u_z", "theta", "pressure"];

/// Primitive fields on a grid at one instant.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub grid: Grid,
    pub time: f64,
    pub sites: Vec<HydroSite>,
}

#[derive(Serialize, Deserialize)]
struct Header {
    fields: Vec<String>,
    dims: usize,
    counts: [usize; 3],
    spacing: f64,
    boundary: super::GridBoundary,
    dtype: String,
    time: f64,
    cells: usize,
}

fn row(grid: &Grid, i: usize, s: &HydroSite) -> [f64; 10] {
    let x = grid.center(i);
    [x[0], x[1], x[2], s.rho, s.e, s.u[0], s.u[1], s.u[2], s.theta, s.pressure]
}

/// One row per cell: centre coordinates then `rho, e, u, Theta, P`.
pub fn write_csv<W: Write>(snap: &Snapshot, mut w: W) -> Result<(), PdeError> {
    writeln!(w, "{}", FIELDS.join(","))?;
    for (i, s) in snap.sites.iter().enumerate() {
        let r = row(&snap.grid, i, s);
        let line: Vec<String> = r.iter().map(|v| format!("{v:e}")).collect();
        writeln!(w, "{}", line.join(","))?;
    }
    Ok(())
}

/// `HYDROSNP`, a little-endian `u32` version, a `u32` header length, a JSON
/// header, then the fields one after the other as little-endian `f64`.
pub fn write_binary<W: Write>(snap: &Snapshot, mut w: W) -> Result<(), PdeError> {
    let header = Header {
        fields: FIELDS.iter().map(|s| s.to_string()).collect(),
        dims: snap.grid.dims,
        counts: snap.grid.counts,
        spacing: snap.grid.spacing,
        boundary: snap.grid.boundary,
        dtype: "f64le".into(),
        time: snap.time,
        cells: snap.sites.len(),
    };
    let json = serde_json::to_vec(&header).map_err(|e| PdeError::Snapshot(e.to_string()))?;
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&(json.len() as u32).to_le_bytes())?;
    w.write_all(&json)?;
    let rows: Vec<[f64; 10]> = snap.sites.iter().enumerate().map(|(i, s)| row(&snap.grid, i, s)).collect();
    for f in 0..FIELDS.len() {
        for r in &rows {
            w.write_all(&r[f].to_le_bytes())?;
        }
    }
    Ok(())
}

pub fn read_binary<R: Read>(mut r: R) -> Result<Snapshot, PdeError> {
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(PdeError::Snapshot("bad magic".into()));
    }
    let mut word = [0u8; 4];
    r.read_exact(&mut word)?;
    let version = u32::from_le_bytes(word);
    if version != VERSION {
        return Err(PdeError::Snapshot(format!("unsupported version {version}")));
    }
    r.read_exact(&mut word)?;
    let mut json = vec![0u8; u32::from_le_bytes(word) as usize];
    r.read_exact(&mut json)?;
    let h: Header = serde_json::from_slice(&json).map_err(|e| PdeError::Snapshot(e.to_string()))?;
    if h.dtype != "f64le" || h.fields.len() != FIELDS.len() {
        return Err(PdeError::Snapshot("unexpected field layout".into()));
    }
    let grid = Grid::new(&h.counts[..h.dims], h.spacing, h.boundary)?;
    if grid.len() != h.cells {
        return Err(PdeError::Snapshot("cell count does not match grid".into()));
    }
    let mut cols = vec![vec![0.0; h.cells]; FIELDS.len()];
    let mut buf = [0u8; 8];
    for col in &mut cols {
        for v in col.iter_mut() {
            r.read_exact(&mut buf)?;
            *v = f64::from_le_bytes(buf);
        }
    }
    let sites = (0..h.cells)
        .map(|i| HydroSite {
            rho: cols[3][i],
            e: cols[4][i],
            u: [cols[5][i], cols[6][i], cols[7][i]],
            theta: cols[8][i],
            pressure: cols[9][i],
        })
        .collect();
    Ok(Snapshot {
        grid,
        time: h.time,
        sites,
    })
}
