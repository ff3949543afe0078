//! Binary field snapshots.
//!
//! Layout: a little-endian u32 header length, a JSON header (grid shape,
//! periods, time, field names and parities), then one f64 little-endian
//! payload per field in header order.

use super::{Field, Parity, SpectralGrid};
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;
use std::sync::Arc;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SnapshotHeader {
    pub n: [usize; 3],
    pub period: [f64; 3],
    pub time: f64,
    pub fields: Vec<(String, Parity)>,
}

#[derive(Debug)]
pub struct Snapshot {
    pub header: SnapshotHeader,
    pub fields: Vec<Field>,
}

impl Snapshot {
    pub fn field(&self, name: &str) -> Option<&Field> {
        self.header
            .fields
            .iter()
            .position(|(f, _)| f == name)
            .map(|i| &self.fields[i])
    }
}

pub fn write_snapshot(path: &Path, time: f64, fields: &[(&str, &Field)]) -> Result<()> {
    if fields.is_empty() {
        return Err(Error::Config("snapshot needs at least one field".into()));
    }
    let grid = &fields[0].1.grid;
    for (name, f) in fields {
        if f.grid.n != grid.n {
            return Err(Error::Grid(format!("field {name} sits on a different grid")));
        }
        if f.data.iter().any(|v| !v.is_finite()) {
            return Err(Error::Invariant(format!("field {name} holds non-finite values")));
        }
    }
    let header = SnapshotHeader {
        n: grid.n,
        period: grid.period,
        time,
        fields: fields.iter().map(|(n, f)| (n.to_string(), f.parity)).collect(),
    };
    let hjson = serde_json::to_vec(&header).map_err(|e| Error::Io(e.into()))?;
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(&(hjson.len() as u32).to_le_bytes())?;
    w.write_all(&hjson)?;
    let mut buf = Vec::with_capacity(grid.len() * 8);
    for (_, f) in fields {
        buf.clear();
        for v in &f.data {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        w.write_all(&buf)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_snapshot(path: &Path) -> Result<Snapshot> {
    let mut r = BufReader::new(File::open(path)?);
    let mut len4 = [0u8; 4];
    r.read_exact(&mut len4)?;
    let hlen = u32::from_le_bytes(len4) as usize;
    let mut hbuf = vec![0u8; hlen];
    r.read_exact(&mut hbuf)?;
    let header: SnapshotHeader = serde_json::from_slice(&hbuf)
        .map_err(|e| Error::Config(format!("snapshot header does not parse: {e}")))?;
    let grid = SpectralGrid::new(header.n, header.period)?;
    let mut fields = Vec::with_capacity(header.fields.len());
    for (_, parity) in &header.fields {
        let mut data = vec![0.0f64; grid.len()];
        let mut chunk = vec![0u8; grid.len() * 8];
        r.read_exact(&mut chunk)?;
        for (v, b) in data.iter_mut().zip(chunk.chunks_exact(8)) {
            *v = f64::from_le_bytes(b.try_into().unwrap());
        }
        fields.push(Field {
            grid: Arc::clone(&grid),
            data,
            parity: *parity,
        });
    }
    Ok(Snapshot { header, fields })
}
