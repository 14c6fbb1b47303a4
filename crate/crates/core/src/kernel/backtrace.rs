use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Field, Grid};
use crate::spectral::axis_weights;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DriftScheme {
    #[default]
    Heun,
    Euler,
}

impl DriftScheme {
    pub fn parse(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "heun" => Ok(DriftScheme::Heun),
            "euler" => Ok(DriftScheme::Euler),
            other => Err(Error::Config(format!("unknown drift scheme `{other}`"))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            DriftScheme::Heun => "heun",
            DriftScheme::Euler => "euler",
        }
    }
}

/// All components of a vector field at an arbitrary point, sharing one set of
/// interpolation weights.
pub(crate) fn eval_vector(field: &Field, x: [f64; 2]) -> [f64; 2] {
    let g = field.grid();
    let mut out = [0.0; 2];
    let w0 = axis_weights(g, 0, x[0]);
    if g.dim() == 1 {
        for (c, o) in out.iter_mut().enumerate().take(field.components().min(2)) {
            let v = field.component(c);
            *o = w0.iter().fold(0.0, |acc, &(i, w)| acc + w * v[i]);
        }
        return out;
    }
    let w1 = axis_weights(g, 1, x[1]);
    let n1 = g.resolution(1);
    for (c, o) in out.iter_mut().enumerate().take(field.components().min(2)) {
        let v = field.component(c);
        let mut acc = 0.0;
        for &(i, a) in &w0 {
            let row = &v[i * n1..(i + 1) * n1];
            acc += a * w1.iter().fold(0.0, |s, &(j, b)| s + b * row[j]);
        }
        *o = acc;
    }
    out
}

fn check_drift(field: &Field, grid: &Grid) -> Result<()> {
    if field.grid() != grid || field.components() != grid.dim() {
        return Err(Error::ShapeMismatch(
            "drift must have one component per axis on the base grid".into(),
        ));
    }
    Ok(())
}

/// Start of the characteristic through `x` over one step:
///
/// * Heun: `b1 = beta_end(x) dt`, `b2 = beta_start(x + b1) dt`, `x + (b1 + b2) / 2`
/// * Euler: `x + beta_end(x) dt`
///
/// Periodic results are wrapped; on bounded grids leaving the domain is an error.
pub fn heun_backtrace(
    x: [f64; 2],
    beta_end: &Field,
    beta_start: &Field,
    dt: f64,
    scheme: DriftScheme,
) -> Result<[f64; 2]> {
    let grid = *beta_end.grid();
    check_drift(beta_end, &grid)?;
    check_drift(beta_start, &grid)?;
    let dim = grid.dim();
    let b1 = eval_vector(beta_end, x);
    let mut xi = x;
    match scheme {
        DriftScheme::Euler => {
            for a in 0..dim {
                xi[a] += b1[a] * dt;
            }
        }
        DriftScheme::Heun => {
            let mut mid = x;
            for a in 0..dim {
                mid[a] += b1[a] * dt;
            }
            let b2 = eval_vector(beta_start, grid.wrap(mid));
            for a in 0..dim {
                xi[a] += 0.5 * (b1[a] * dt + b2[a] * dt);
            }
        }
    }
    if grid.boundary().is_periodic() {
        Ok(grid.wrap(xi))
    } else if grid.contains(xi) {
        Ok(xi)
    } else {
        Err(Error::DriftOutOfDomain { position: xi })
    }
}
