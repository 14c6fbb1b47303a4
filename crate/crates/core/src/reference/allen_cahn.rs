use crate::error::{Error, Result};
use crate::grid::{BoundaryKind, Field};
use crate::pde::{PdeKind, PdeSpec};

use super::{frame_times, internal_grid, lift_ic, steps_per_frame, Scheme, SolverRun, Trajectory};

/// `kappa Laplacian(u) + u - u^3` with ghost points: Dirichlet nodes are
/// pinned at zero, Neumann ghosts mirror the first interior node.
fn rhs(u: &[f64], out: &mut [f64], kappa_h2: f64, boundary: BoundaryKind) {
    let n = u.len();
    for i in 1..n - 1 {
        out[i] = kappa_h2 * (u[i - 1] - 2.0 * u[i] + u[i + 1]) + u[i] - u[i].powi(3);
    }
    match boundary {
        BoundaryKind::DirichletZero => {
            out[0] = 0.0;
            out[n - 1] = 0.0;
        }
        _ => {
            out[0] = kappa_h2 * 2.0 * (u[1] - u[0]) + u[0] - u[0].powi(3);
            out[n - 1] = kappa_h2 * 2.0 * (u[n - 2] - u[n - 1]) + u[n - 1] - u[n - 1].powi(3);
        }
    }
}

/// Second-order central differences in space, two-stage Runge-Kutta (Heun)
/// in time, on a bounded line.
///
/// A step with `kappa dt / h^2 > 0.5` is outside the explicit stability
/// region; the run proceeds and records a warning.
pub fn fd_allen_cahn_solve(ic: &Field, pde: &PdeSpec, run: &SolverRun) -> Result<Trajectory> {
    let PdeKind::AllenCahn { kappa } = pde.kind else {
        return Err(Error::arg(
            "pde",
            "the finite-difference solver handles Allen-Cahn only",
        ));
    };
    pde.validate()?;
    if run.scheme != Scheme::FiniteDifferenceRk2 {
        return Err(Error::arg(
            "scheme",
            format!("{} is not the finite-difference scheme", run.scheme.name()),
        ));
    }
    let per_frame = steps_per_frame(pde, run.steps)?;
    let (fine, stride) = internal_grid(pde, run.internal_resolution)?;
    let boundary = fine.boundary();
    let mut u = lift_ic(ic, pde, &fine, stride)?.into_values();
    if boundary == BoundaryKind::DirichletZero {
        let n = u.len();
        u[0] = 0.0;
        u[n - 1] = 0.0;
    }
    let h = fine.spacing(0);
    let dt = pde.horizon / run.steps as f64;
    let mut warnings = Vec::new();
    let number = kappa * dt / (h * h);
    if number > 0.5 {
        warnings.push(format!(
            "kappa dt / h^2 = {number:.3} exceeds the explicit stability limit 0.5"
        ));
    }
    let kappa_h2 = kappa / (h * h);
    let n = u.len();
    let mut k1 = vec![0.0; n];
    let mut k2 = vec![0.0; n];
    let mut stage = vec![0.0; n];
    let mut frames = Vec::with_capacity(pde.frames);
    for step in 1..=run.steps {
        rhs(&u, &mut k1, kappa_h2, boundary);
        for i in 0..n {
            stage[i] = u[i] + dt * k1[i];
        }
        rhs(&stage, &mut k2, kappa_h2, boundary);
        for i in 0..n {
            u[i] += 0.5 * dt * (k1[i] + k2[i]);
        }
        if step % per_frame == 0 {
            let max_abs = u.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
            if !max_abs.is_finite() {
                return Err(Error::Blowup { step, max_abs });
            }
            frames.push(Field::new(fine, u.clone())?.subsample(stride)?);
        }
    }
    Ok(Trajectory {
        frames,
        times: frame_times(pde),
        warnings,
    })
}
