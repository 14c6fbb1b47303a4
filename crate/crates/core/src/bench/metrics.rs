use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Field;

/// Relative errors of one frame.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrameError {
    /// `||pred - ref||_2 / ||ref||_2`
    pub e_l2: f64,
    /// `max |pred - ref| / max |ref|`
    pub e_linf: f64,
}

/// Frame-averaged relative errors together with the per-frame values.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorSummary {
    pub e_l2: f64,
    pub e_linf: f64,
    pub per_frame: Vec<FrameError>,
}

/// Relative errors of a single frame; a zero reference is rejected.
pub fn frame_error(pred: &Field, reference: &Field, frame: usize) -> Result<FrameError> {
    if pred.grid() != reference.grid() || pred.components() != reference.components() {
        return Err(Error::ShapeMismatch(format!(
            "frame {frame}: prediction and reference grids differ"
        )));
    }
    let (mut d2, mut r2, mut dmax, mut rmax) = (0.0_f64, 0.0_f64, 0.0_f64, 0.0_f64);
    for (&p, &r) in pred.values().iter().zip(reference.values()) {
        let d = p - r;
        d2 += d * d;
        r2 += r * r;
        dmax = dmax.max(d.abs());
        rmax = rmax.max(r.abs());
    }
    if r2 == 0.0 || rmax == 0.0 {
        return Err(Error::ZeroReference { frame });
    }
    Ok(FrameError {
        e_l2: (d2 / r2).sqrt(),
        e_linf: dmax / rmax,
    })
}

/// Per-frame relative l2 and l-infinity errors and their means over frames.
pub fn relative_errors(pred: &[Field], reference: &[Field]) -> Result<ErrorSummary> {
    if pred.len() != reference.len() || pred.is_empty() {
        return Err(Error::ShapeMismatch(format!(
            "{} predicted frames against {} reference frames",
            pred.len(),
            reference.len()
        )));
    }
    let per_frame = pred
        .iter()
        .zip(reference)
        .enumerate()
        .map(|(k, (p, r))| frame_error(p, r, k))
        .collect::<Result<Vec<_>>>()?;
    let n = per_frame.len() as f64;
    Ok(ErrorSummary {
        e_l2: per_frame.iter().map(|e| e.e_l2).sum::<f64>() / n,
        e_linf: per_frame.iter().map(|e| e.e_linf).sum::<f64>() / n,
        per_frame,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{BoundaryKind, Grid};
    use std::f64::consts::PI;

    fn sine() -> Field {
        let g = Grid::line(64, 1.0, BoundaryKind::Periodic).unwrap();
        Field::from_fn(g, |x| (2.0 * PI * x[0]).sin())
    }

    #[test]
    fn identical_frames_have_zero_error() {
        let r = vec![sine(); 3];
        let e = relative_errors(&r, &r).unwrap();
        assert_eq!((e.e_l2, e.e_linf), (0.0, 0.0));
    }

    #[test]
    fn scaling_gives_the_scale_error() {
        let r = vec![sine()];
        let p = vec![sine().map(|v| 1.01 * v)];
        let e = relative_errors(&p, &r).unwrap();
        assert!((e.e_l2 - 0.01).abs() < 1e-12 && (e.e_linf - 0.01).abs() < 1e-12);
    }

    #[test]
    fn single_point_offset() {
        let r = sine();
        let mut v = r.values().to_vec();
        v[5] += 0.1;
        let p = Field::new(*r.grid(), v).unwrap();
        let e = relative_errors(&[p], &[r]).unwrap();
        // the 64-point sine has l2 norm sqrt(32) and max 1
        assert!((e.e_linf - 0.1).abs() < 1e-12);
        assert!((e.e_l2 - 0.1 / 32f64.sqrt()).abs() < 1e-12);
        assert!((e.e_l2 - 0.0177).abs() < 1e-4);
    }

    #[test]
    fn zero_reference_is_rejected() {
        let z = Field::zeros(*sine().grid());
        let err = relative_errors(&[sine(), sine()], &[sine(), z]).unwrap_err();
        assert!(matches!(err, Error::ZeroReference { frame: 1 }));
        assert!(relative_errors(&[sine()], &[]).is_err());
    }
}
