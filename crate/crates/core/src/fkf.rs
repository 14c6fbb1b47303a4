//! `FKF1` field files: one JSON header line, then raw little-endian `f64`
//! samples in row-major order with frames concatenated.
//!
//! ```text
//! {"format":"FKF1","dim":1,"resolution":64,"extent":1.0,"boundary":"periodic","components":1,"count":10}\n
//! <count * components * points * 8 bytes>
//! ```

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{BoundaryKind, Field, Grid};

pub const MAGIC: &str = "FKF1";

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub(crate) enum PerAxis<T> {
    Uniform(T),
    Axes([T; 2]),
}

impl<T: Copy + PartialEq> PerAxis<T> {
    fn from_axes(dim: usize, v: [T; 2]) -> Self {
        if dim == 1 || v[0] == v[1] {
            PerAxis::Uniform(v[0])
        } else {
            PerAxis::Axes(v)
        }
    }

    fn axes(self, dim: usize, fill: T) -> [T; 2] {
        match self {
            PerAxis::Uniform(v) if dim == 1 => [v, fill],
            PerAxis::Uniform(v) => [v, v],
            PerAxis::Axes(v) => v,
        }
    }
}

/// Grid description shared by the field, operator and protocol headers.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridHeader {
    pub dim: usize,
    resolution: PerAxis<usize>,
    extent: PerAxis<f64>,
    pub boundary: BoundaryKind,
}

impl GridHeader {
    pub fn from_grid(g: &Grid) -> Self {
        GridHeader {
            dim: g.dim(),
            resolution: PerAxis::from_axes(g.dim(), [g.resolution(0), g.resolution(1)]),
            extent: PerAxis::from_axes(g.dim(), [g.extent(0), g.extent(1)]),
            boundary: g.boundary(),
        }
    }

    pub fn to_grid(&self) -> Result<Grid> {
        Grid::with_axes(
            self.dim,
            self.resolution.axes(self.dim, 1),
            self.extent.axes(self.dim, 1.0),
            self.boundary,
        )
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct FieldHeader {
    format: String,
    #[serde(flatten)]
    grid: GridHeader,
    components: usize,
    count: usize,
}

pub fn write_fkf<W: Write>(mut w: W, frames: &[Field]) -> Result<()> {
    let first = frames
        .first()
        .ok_or_else(|| Error::Format("cannot write an empty frame list".into()))?;
    for f in frames {
        if f.grid() != first.grid() || f.components() != first.components() {
            return Err(Error::Format(
                "all frames must share one grid and component count".into(),
            ));
        }
    }
    let header = FieldHeader {
        format: MAGIC.to_string(),
        grid: GridHeader::from_grid(first.grid()),
        components: first.components(),
        count: frames.len(),
    };
    serde_json::to_writer(&mut w, &header)?;
    w.write_all(b"\n")?;
    for f in frames {
        write_f64s(&mut w, f.values())?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_fkf<R: BufRead>(mut r: R) -> Result<Vec<Field>> {
    let mut line = String::new();
    r.read_line(&mut line)?;
    let header: FieldHeader = serde_json::from_str(line.trim_end())
        .map_err(|e| Error::Format(format!("bad FKF1 header: {e}")))?;
    if header.format != MAGIC {
        return Err(Error::Format(format!(
            "expected format {MAGIC}, found {}",
            header.format
        )));
    }
    let grid = header.grid.to_grid()?;
    let per_frame = grid.len() * header.components;
    let mut frames = Vec::with_capacity(header.count);
    for k in 0..header.count {
        let values = read_f64s(&mut r, per_frame)
            .map_err(|e| Error::Format(format!("frame {k} truncated: {e}")))?;
        frames.push(Field::with_components(grid, header.components, values)?);
    }
    Ok(frames)
}

pub fn save_fkf(path: impl AsRef<Path>, frames: &[Field]) -> Result<()> {
    write_fkf(BufWriter::new(File::create(path)?), frames)
}

pub fn load_fkf(path: impl AsRef<Path>) -> Result<Vec<Field>> {
    read_fkf(BufReader::new(File::open(path)?))
}

pub(crate) fn write_f64s<W: Write>(w: &mut W, xs: &[f64]) -> std::io::Result<()> {
    let mut buf = Vec::with_capacity(xs.len() * 8);
    for x in xs {
        buf.extend_from_slice(&x.to_le_bytes());
    }
    w.write_all(&buf)
}

pub(crate) fn read_f64s<R: Read>(r: &mut R, n: usize) -> std::io::Result<Vec<f64>> {
    let mut buf = vec![0u8; n * 8];
    r.read_exact(&mut buf)?;
    Ok(decode_f64s(&buf))
}

pub(crate) fn decode_f64s(bytes: &[u8]) -> Vec<f64> {
    bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
        .collect()
}
