//! Flat binary and CSV encodings of a [`Field`].
//!
//! Binary layout, all little-endian 64-bit: `n`, `N`, `cells[n]` (u64), `extent[n]` (f64),
//! `time` (f64), then node-major, component-minor samples. The boundary kind is
//! recovered from the payload length (`cells` vs `cells + 1` nodes per axis).

use std::fmt::Write as _;
use std::io::{Read, Write};
use std::path::Path;
use std::sync::Arc;

use crate::error::{Error, Result};

use super::{Boundary, Field, Grid};

pub fn encode(f: &Field) -> Vec<u8> {
    let g = f.grid();
    let mut out = Vec::with_capacity(8 * (3 + 2 * g.dim() + f.values().len()));
    out.extend_from_slice(&(g.dim() as u64).to_le_bytes());
    out.extend_from_slice(&(f.components() as u64).to_le_bytes());
    for &c in g.cells() {
        out.extend_from_slice(&(c as u64).to_le_bytes());
    }
    for &e in g.extent() {
        out.extend_from_slice(&e.to_le_bytes());
    }
    out.extend_from_slice(&f.time().to_le_bytes());
    for v in f.values() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn decode(bytes: &[u8]) -> Result<Field> {
    let bad = |m: &str| Error::InvalidField(format!("binary field: {m}"));
    if bytes.len() % 8 != 0 {
        return Err(bad("length is not a multiple of 8"));
    }
    let words: Vec<[u8; 8]> = bytes.chunks_exact(8).map(|c| c.try_into().unwrap()).collect();
    let uint = |i: usize| words.get(i).map(|w| u64::from_le_bytes(*w));
    let real = |i: usize| words.get(i).map(|w| f64::from_le_bytes(*w));
    let dim = uint(0).ok_or_else(|| bad("truncated header"))? as usize;
    let comps = uint(1).ok_or_else(|| bad("truncated header"))? as usize;
    if !(2..=3).contains(&dim) || comps == 0 || words.len() < 3 + 2 * dim {
        return Err(bad("malformed header"));
    }
    let cells: Vec<usize> = (0..dim).map(|a| uint(2 + a).unwrap() as usize).collect();
    let extent: Vec<f64> = (0..dim).map(|a| real(2 + dim + a).unwrap()).collect();
    let time = real(2 + 2 * dim).unwrap();
    let payload: Vec<f64> = words[3 + 2 * dim..].iter().map(|w| f64::from_le_bytes(*w)).collect();
    let count = |extra: usize| -> Option<usize> {
        cells
            .iter()
            .try_fold(comps, |acc, &c| acc.checked_mul(c.checked_add(extra)?))
    };
    let boundary = if count(0) == Some(payload.len()) {
        Boundary::Periodic
    } else if count(1) == Some(payload.len()) {
        Boundary::Dirichlet
    } else {
        return Err(bad("payload length does not match header"));
    };
    let grid = Arc::new(Grid::new(dim, cells, extent, boundary)?);
    Field::from_values(grid, comps, payload, time)
}

pub fn write_binary(path: &Path, f: &Field) -> Result<()> {
    std::fs::File::create(path)
        .and_then(|mut file| file.write_all(&encode(f)))
        .map_err(|e| Error::io(path, e))
}

pub fn read_binary(path: &Path) -> Result<Field> {
    let mut bytes = Vec::new();
    std::fs::File::open(path)
        .and_then(|mut file| file.read_to_end(&mut bytes))
        .map_err(|e| Error::io(path, e))?;
    decode(&bytes)
}

/// One row per node: coordinates, then components.
pub fn to_csv(f: &Field) -> String {
    let g = f.grid();
    let axes = ["x", "y", "z"];
    let mut s = String::new();
    let mut head: Vec<String> = axes[..g.dim()].iter().map(|a| a.to_string()).collect();
    head.extend((0..f.components()).map(|i| format!("u{i}")));
    s.push_str(&head.join(","));
    s.push('\n');
    for node in 0..g.node_count() {
        let x = g.position(node);
        let row: Vec<String> = x[..g.dim()]
            .iter()
            .chain(f.node(node))
            .map(|v| format!("{v}"))
            .collect();
        let _ = writeln!(s, "{}", row.join(","));
    }
    s
}

pub fn write_csv(path: &Path, f: &Field) -> Result<()> {
    std::fs::write(path, to_csv(f)).map_err(|e| Error::io(path, e))
}
