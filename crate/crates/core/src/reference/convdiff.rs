use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::Field;
use crate::pde::{PdeKind, PdeSpec};
use crate::spectral::{wavenumber, Fft1};

use super::{frame_times, internal_grid, lift_ic, steps_per_frame, Scheme, SolverRun, Trajectory};

/// Pseudo-spectral solution of `u_t = beta u_x + kappa u_xx` on a periodic line.
///
/// The equation is diagonal in Fourier space, so `k` RK2 steps of mode `q`
/// collapse to multiplication by `R(z)^k` with `R(z) = 1 + z + z^2/2` and
/// `z = dt (2 pi i q beta - 4 pi^2 q^2 kappa)`. [`Scheme::SpectralExact`]
/// uses `exp(lambda t)` instead.
pub fn spectral_convdiff_solve(ic: &Field, pde: &PdeSpec, run: &SolverRun) -> Result<Trajectory> {
    let PdeKind::ConvectionDiffusion { beta, kappa } = pde.kind else {
        return Err(Error::arg(
            "pde",
            "the spectral solver handles convection-diffusion only",
        ));
    };
    pde.validate()?;
    if !pde.grid.boundary().is_periodic() {
        return Err(Error::InvalidGrid(
            "the spectral solver needs a periodic line".into(),
        ));
    }
    if !matches!(run.scheme, Scheme::SpectralRk2 | Scheme::SpectralExact) {
        return Err(Error::arg(
            "scheme",
            format!("{} is not a spectral line scheme", run.scheme.name()),
        ));
    }
    if run.steps < pde.frames.max(10) {
        return Err(Error::arg("steps", "need at least 10 steps"));
    }
    let per_frame = steps_per_frame(pde, run.steps)?;
    let (fine, stride) = internal_grid(pde, run.internal_resolution)?;
    let u0 = lift_ic(ic, pde, &fine, stride)?;
    let n = fine.resolution(0);
    let extent = fine.extent(0);
    let fft = Fft1::new(n);
    let c0 = fft.forward(u0.values());
    let dt = pde.horizon / run.steps as f64;
    let lambda: Vec<Complex64> = (0..n)
        .map(|i| {
            let q = 2.0 * PI * wavenumber(i, n) as f64 / extent;
            Complex64::new(-kappa * q * q, beta * q)
        })
        .collect();
    let mut warnings = Vec::new();
    if run.scheme == Scheme::SpectralRk2 {
        let worst = lambda.iter().map(|&l| {
            let z = l * dt;
            (1.0 + z + 0.5 * z * z).norm()
        });
        let worst = worst.fold(0.0_f64, f64::max);
        if worst.powf(run.steps as f64) > 1e3 {
            warnings.push(format!(
                "RK2 amplification {worst:.6} per step exceeds the stable region for dt = {dt:e}"
            ));
        }
    }
    let mut frames = Vec::with_capacity(pde.frames);
    let times = frame_times(pde);
    for (k, &t) in times.iter().enumerate() {
        let steps = ((k + 1) * per_frame) as u32;
        let spec: Vec<Complex64> = c0
            .iter()
            .zip(&lambda)
            .map(|(&c, &l)| {
                let g = match run.scheme {
                    Scheme::SpectralExact => (l * t).exp(),
                    _ => {
                        let z = l * dt;
                        (1.0 + z + 0.5 * z * z).powu(steps)
                    }
                };
                c * g
            })
            .collect();
        let values = fft.inverse_real(spec);
        let max_abs = values.iter().fold(0.0_f64, |m, v| {
            if v.is_finite() {
                m.max(v.abs())
            } else {
                f64::INFINITY
            }
        });
        if !max_abs.is_finite() {
            return Err(Error::Blowup {
                step: steps as usize,
                max_abs,
            });
        }
        frames.push(Field::new(fine, values)?.subsample(stride)?);
    }
    Ok(Trajectory {
        frames,
        times,
        warnings,
    })
}
