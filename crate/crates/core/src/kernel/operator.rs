//! Assembled linear propagators and the `FKW1` operator file.
//!
//! ```text
//! {"format":"FKW1","rows":64,"cols":64,"nnz":..,"dt":0.2,"pde":{..}}\n
//! nnz x (row: u32, col: u32, weight: f64)   little-endian
//! rows x f64                                 forcing vector g
//! ```

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fkf::{read_f64s, write_f64s};
use crate::grid::Field;
use crate::pde::{drift, PdeSpec};
use crate::spectral::spectral_interpolate_capped;

use super::propagate::{Propagator, PropagatorConfig};

pub const MAGIC: &str = "FKW1";

/// CSR matrix `W` plus forcing `g`: one propagation step is `W u + g`.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseOperator {
    pub rows: usize,
    pub cols: usize,
    pub row_ptr: Vec<usize>,
    pub col_idx: Vec<u32>,
    pub weights: Vec<f64>,
    pub forcing: Vec<f64>,
    pub dt: f64,
    pub pde: PdeSpec,
    pub(crate) max_factor: usize,
    pub(crate) max_deviation: f64,
}

impl SparseOperator {
    pub fn nnz(&self) -> usize {
        self.weights.len()
    }

    pub fn row(&self, r: usize) -> (&[u32], &[f64]) {
        let (a, b) = (self.row_ptr[r], self.row_ptr[r + 1]);
        (&self.col_idx[a..b], &self.weights[a..b])
    }

    /// `W u + g`, summing each row in ascending column order.
    pub fn apply(&self, u: &[f64]) -> Result<Vec<f64>> {
        if u.len() != self.cols {
            return Err(Error::ShapeMismatch(format!(
                "operator has {} columns, field has {}",
                self.cols,
                u.len()
            )));
        }
        Ok((0..self.rows)
            .map(|r| {
                let (cols, w) = self.row(r);
                let acc = cols
                    .iter()
                    .zip(w)
                    .fold(0.0, |acc, (&c, &w)| acc + w * u[c as usize]);
                acc + self.forcing[r]
            })
            .collect())
    }

    pub fn apply_field(&self, u: &Field) -> Result<Field> {
        if u.grid() != &self.pde.grid {
            return Err(Error::ShapeMismatch(
                "field grid differs from the operator grid".into(),
            ));
        }
        Field::new(self.pde.grid, self.apply(u.values())?)
    }

    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.rows).map(|r| self.row(r).1.iter().sum()).collect()
    }
}

/// Columns of the up-sampling matrix `U` (fine x coarse, row-major), or
/// `None` for the identity.
fn upsampling_matrix(
    pde: &PdeSpec,
    factor: usize,
    cap: usize,
) -> Result<Option<(usize, Vec<f64>)>> {
    if factor == 1 {
        return Ok(None);
    }
    let g = pde.grid;
    let n = g.len();
    let fine_n = g.refined(factor)?.len();
    let mut u = vec![0.0; fine_n * n];
    for j in 0..n {
        let mut e = vec![0.0; n];
        e[j] = 1.0;
        let col = spectral_interpolate_capped(&Field::new(g, e)?, factor, cap)?;
        for (i, v) in col.values().iter().enumerate() {
            u[i * n + j] = *v;
        }
    }
    Ok(Some((n, u)))
}

/// Assemble `W = K U` and `g` for a problem with state-independent drift
/// and forcing, using the same kernels as the propagator.
pub fn assemble_linear_operator(
    pde: &PdeSpec,
    config: &PropagatorConfig,
) -> Result<SparseOperator> {
    if !pde.is_linear() {
        return Err(Error::NonlinearPde(format!(
            "{} has state-dependent drift or forcing; use the propagation service (`fk serve`) for per-field targets",
            pde.name()
        )));
    }
    config.validate()?;
    let shell = Propagator::bare(pde.clone(), *config)?;
    let g = pde.grid;
    let n = g.len();
    let beta = drift(pde, &Field::zeros(g))?;
    let stencils = shell.stencils(&beta, &beta)?;
    let mut mats = std::collections::BTreeMap::new();
    for s in &stencils {
        if !mats.contains_key(&s.factor) {
            mats.insert(
                s.factor,
                upsampling_matrix(pde, s.factor, config.upsample_cap)?,
            );
        }
    }
    let forcing_kind = pde.forcing();
    let mut fine_forcing = std::collections::BTreeMap::new();
    for &f in mats.keys() {
        let fg = g.refined(f)?;
        fine_forcing.insert(f, forcing_kind.on_grid(&fg, None)?);
    }
    let end_forcing = forcing_kind.on_grid(&g, None)?;
    let half = 0.5 * config.dt;

    let mut row_ptr = Vec::with_capacity(n + 1);
    row_ptr.push(0);
    let (mut col_idx, mut weights) = (Vec::new(), Vec::new());
    let mut forcing = vec![0.0; n];
    let (mut max_factor, mut max_deviation) = (1, 0.0f64);
    let mut acc = vec![0.0; n];
    let mut touched = vec![false; n];
    for (p, s) in stencils.iter().enumerate() {
        max_factor = max_factor.max(s.factor);
        max_deviation = max_deviation.max(s.deviation);
        match &mats[&s.factor] {
            None => {
                for (&i, &w) in s.indices.iter().zip(&s.weights) {
                    acc[i] += w;
                    touched[i] = true;
                }
            }
            Some((cols, u)) => {
                for (&i, &w) in s.indices.iter().zip(&s.weights) {
                    let row = &u[i * cols..(i + 1) * cols];
                    for (j, &uij) in row.iter().enumerate() {
                        acc[j] += w * uij;
                    }
                }
                touched.iter_mut().for_each(|t| *t = true);
            }
        }
        for j in 0..n {
            if touched[j] {
                col_idx.push(j as u32);
                weights.push(acc[j]);
            }
            acc[j] = 0.0;
            touched[j] = false;
        }
        row_ptr.push(col_idx.len());
        if let (Some(fe), Some(ff)) = (&end_forcing, &fine_forcing[&s.factor]) {
            forcing[p] = half * (fe[p] + s.apply(ff));
        }
    }
    Ok(SparseOperator {
        rows: n,
        cols: n,
        row_ptr,
        col_idx,
        weights,
        forcing,
        dt: config.dt,
        pde: pde.clone(),
        max_factor,
        max_deviation,
    })
}

#[derive(Debug, Serialize, Deserialize)]
struct Header {
    format: String,
    rows: usize,
    cols: usize,
    nnz: usize,
    dt: f64,
    pde: serde_json::Value,
}

pub fn write_operator<W: Write>(mut w: W, op: &SparseOperator) -> Result<()> {
    let header = Header {
        format: MAGIC.into(),
        rows: op.rows,
        cols: op.cols,
        nnz: op.nnz(),
        dt: op.dt,
        pde: op.pde.descriptor(),
    };
    serde_json::to_writer(&mut w, &header)?;
    w.write_all(b"\n")?;
    let mut buf = Vec::with_capacity(op.nnz() * 16);
    for r in 0..op.rows {
        let (cols, ws) = op.row(r);
        for (&c, &v) in cols.iter().zip(ws) {
            buf.extend_from_slice(&(r as u32).to_le_bytes());
            buf.extend_from_slice(&c.to_le_bytes());
            buf.extend_from_slice(&v.to_le_bytes());
        }
    }
    w.write_all(&buf)?;
    write_f64s(&mut w, &op.forcing)?;
    w.flush()?;
    Ok(())
}

/// Read an operator; `expected_dt`, when given, must match the header exactly.
pub fn read_operator<R: BufRead>(mut r: R, expected_dt: Option<f64>) -> Result<SparseOperator> {
    let mut line = String::new();
    r.read_line(&mut line)?;
    let h: Header = serde_json::from_str(line.trim_end())
        .map_err(|e| Error::Format(format!("bad FKW1 header: {e}")))?;
    if h.format != MAGIC {
        return Err(Error::Format(format!(
            "expected format {MAGIC}, found {}",
            h.format
        )));
    }
    if let Some(dt) = expected_dt {
        if dt != h.dt {
            return Err(Error::Format(format!(
                "operator dt {} does not match requested dt {dt}",
                h.dt
            )));
        }
    }
    let pde = PdeSpec::from_descriptor(&h.pde)?;
    if h.rows != pde.grid.len() || h.cols != pde.grid.len() {
        return Err(Error::Format(format!(
            "operator shape {}x{} does not match the {}-point grid",
            h.rows,
            h.cols,
            pde.grid.len()
        )));
    }
    let mut raw = vec![0u8; h.nnz * 16];
    r.read_exact(&mut raw)
        .map_err(|e| Error::Format(format!("truncated triples: {e}")))?;
    let mut row_ptr = vec![0usize; h.rows + 1];
    let mut col_idx = Vec::with_capacity(h.nnz);
    let mut weights = Vec::with_capacity(h.nnz);
    let mut last = (0usize, -1i64);
    for t in raw.chunks_exact(16) {
        let row = u32::from_le_bytes(t[0..4].try_into().expect("4 bytes")) as usize;
        let col = u32::from_le_bytes(t[4..8].try_into().expect("4 bytes"));
        let w = f64::from_le_bytes(t[8..16].try_into().expect("8 bytes"));
        if row >= h.rows || col as usize >= h.cols {
            return Err(Error::Format(format!(
                "triple ({row}, {col}) outside {}x{}",
                h.rows, h.cols
            )));
        }
        if row < last.0 || (row == last.0 && col as i64 <= last.1) {
            return Err(Error::Format(
                "triples must be sorted by row, then column".into(),
            ));
        }
        last = (row, col as i64);
        row_ptr[row + 1] += 1;
        col_idx.push(col);
        weights.push(w);
    }
    for i in 0..h.rows {
        row_ptr[i + 1] += row_ptr[i];
    }
    let forcing = read_f64s(&mut r, h.rows)
        .map_err(|e| Error::Format(format!("truncated forcing vector: {e}")))?;
    let mut rest = Vec::new();
    r.read_to_end(&mut rest)?;
    if !rest.is_empty() {
        return Err(Error::Format(format!(
            "{} trailing bytes after the forcing vector",
            rest.len()
        )));
    }
    Ok(SparseOperator {
        rows: h.rows,
        cols: h.cols,
        row_ptr,
        col_idx,
        weights,
        forcing,
        dt: h.dt,
        pde,
        max_factor: 0,
        max_deviation: f64::NAN,
    })
}

pub fn load_operator(path: impl AsRef<Path>, expected_dt: Option<f64>) -> Result<SparseOperator> {
    read_operator(BufReader::new(File::open(path)?), expected_dt)
}

/// Assemble and write the operator of a linear problem.
pub fn export_operator(
    pde: &PdeSpec,
    config: &PropagatorConfig,
    path: impl AsRef<Path>,
) -> Result<SparseOperator> {
    let op = assemble_linear_operator(pde, config)?;
    write_operator(BufWriter::new(File::create(path)?), &op)?;
    Ok(op)
}
