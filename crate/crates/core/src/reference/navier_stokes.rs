use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{Field, Grid};
use crate::pde::{PdeKind, PdeSpec};
use crate::spectral::{wavenumber, Fft2};

use super::{frame_times, internal_grid, lift_ic, steps_per_frame, Scheme, SolverRun, Trajectory};

/// Vorticity magnitude treated as a blow-up.
pub const BLOWUP_THRESHOLD: f64 = 1e6;

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Spectral operators of one periodic square grid.
struct Operators {
    n: usize,
    fft: Fft2,
    /// Angular wavenumbers per axis, with the Nyquist entry zeroed for derivatives.
    q: Vec<f64>,
    /// `|q|^2` per bin.
    q2: Vec<f64>,
    /// Two-thirds dealiasing mask per bin.
    keep: Vec<bool>,
}

impl Operators {
    fn new(grid: &Grid) -> Self {
        let n = grid.resolution(0);
        let extent = grid.extent(0);
        let q: Vec<f64> = (0..n)
            .map(|i| {
                if n % 2 == 0 && i == n / 2 {
                    0.0
                } else {
                    2.0 * PI * wavenumber(i, n) as f64 / extent
                }
            })
            .collect();
        let cut = n as f64 / 3.0;
        let mut q2 = vec![0.0; n * n];
        let mut keep = vec![false; n * n];
        for i in 0..n {
            for j in 0..n {
                let (ki, kj) = (wavenumber(i, n) as f64, wavenumber(j, n) as f64);
                let s = 2.0 * PI / extent;
                q2[i * n + j] = s * s * (ki * ki + kj * kj);
                keep[i * n + j] = ki.abs() < cut && kj.abs() < cut;
            }
        }
        Operators {
            n,
            fft: Fft2::new(n, n),
            q,
            q2,
            keep,
        }
    }

    /// Dealiased transform of `-u . grad(omega)`.
    fn advection(&self, w: &[Complex64], a: &mut [Complex64], b: &mut [Complex64]) {
        let n = self.n;
        // a = u1 + i u2, b = w_x1 + i w_x2; each pair is real in physical space
        for i in 0..n {
            for j in 0..n {
                let p = i * n + j;
                let psi = if self.q2[p] > 0.0 {
                    w[p] / self.q2[p]
                } else {
                    Complex64::new(0.0, 0.0)
                };
                let u1 = I * self.q[j] * psi;
                let u2 = -I * self.q[i] * psi;
                let w1 = I * self.q[i] * w[p];
                let w2 = I * self.q[j] * w[p];
                a[p] = u1 + I * u2;
                b[p] = w1 + I * w2;
            }
        }
        self.fft.inverse_in_place(a);
        self.fft.inverse_in_place(b);
        for (x, y) in a.iter_mut().zip(b.iter()) {
            *x = Complex64::new(-(x.re * y.re + x.im * y.im), 0.0);
        }
        self.fft.forward_in_place(a);
        for (x, &k) in a.iter_mut().zip(&self.keep) {
            if !k {
                *x = Complex64::new(0.0, 0.0);
            }
        }
    }
}

/// Pseudo-spectral vorticity solver on the periodic square:
/// `omega_t = -u . grad(omega) + nu Laplacian(omega) + f`.
///
/// Diffusion is Crank-Nicolson per mode; advection and forcing are explicit,
/// Adams-Bashforth 2 after an Euler first step. The advection product is
/// dealiased with the two-thirds rule. A step whose vorticity exceeds
/// [`BLOWUP_THRESHOLD`] in magnitude, or is not finite, returns
/// [`Error::Blowup`].
pub fn crank_nicolson_ns_solve(
    omega0: &Field,
    pde: &PdeSpec,
    run: &SolverRun,
) -> Result<Trajectory> {
    let PdeKind::NavierStokesVorticity { nu, .. } = pde.kind else {
        return Err(Error::arg(
            "pde",
            "the Crank-Nicolson solver handles Navier-Stokes only",
        ));
    };
    pde.validate()?;
    if run.scheme != Scheme::SpectralCrankNicolson {
        return Err(Error::arg(
            "scheme",
            format!("{} is not the vorticity scheme", run.scheme.name()),
        ));
    }
    let per_frame = steps_per_frame(pde, run.steps)?;
    let (fine, stride) = internal_grid(pde, run.internal_resolution)?;
    let w0 = lift_ic(omega0, pde, &fine, stride)?;
    let ops = Operators::new(&fine);
    let n = ops.n;
    let len = n * n;
    let dt = pde.horizon / run.steps as f64;
    let forcing = pde.forcing();
    let f_hat = match forcing.on_grid(&fine, None)? {
        Some(f) => ops.fft.forward(&f),
        None => vec![Complex64::new(0.0, 0.0); len],
    };
    let half = 0.5 * nu * dt;
    let lhs: Vec<f64> = ops.q2.iter().map(|&q2| 1.0 / (1.0 + half * q2)).collect();
    let rhs: Vec<f64> = ops.q2.iter().map(|&q2| 1.0 - half * q2).collect();

    let mut w = ops.fft.forward(w0.values());
    let mut a = vec![Complex64::new(0.0, 0.0); len];
    let mut b = vec![Complex64::new(0.0, 0.0); len];
    let mut prev: Option<Vec<Complex64>> = None;
    let mut frames = Vec::with_capacity(pde.frames);
    let scale = 1.0 / len as f64;
    for step in 1..=run.steps {
        ops.advection(&w, &mut a, &mut b);
        for (x, f) in a.iter_mut().zip(&f_hat) {
            *x += f;
        }
        let mut bound = 0.0;
        for p in 0..len {
            let explicit = match &prev {
                Some(old) => 1.5 * a[p] - 0.5 * old[p],
                None => a[p],
            };
            w[p] = (rhs[p] * w[p] + dt * explicit) * lhs[p];
            bound += w[p].norm();
        }
        // sum |w_k| / n^2 bounds max |omega| from above
        let bound = bound * scale;
        if !bound.is_finite() || bound > BLOWUP_THRESHOLD {
            let values = ops.fft.inverse_real(w.clone());
            let max_abs = values.iter().fold(0.0_f64, |m, v| {
                if v.is_finite() {
                    m.max(v.abs())
                } else {
                    f64::INFINITY
                }
            });
            if !max_abs.is_finite() || max_abs > BLOWUP_THRESHOLD {
                return Err(Error::Blowup { step, max_abs });
            }
        }
        match &mut prev {
            Some(old) => old.copy_from_slice(&a),
            None => prev = Some(a.clone()),
        }
        if step % per_frame == 0 {
            let values = ops.fft.inverse_real(w.clone());
            frames.push(Field::new(fine, values)?.subsample(stride)?);
        }
    }
    Ok(Trajectory {
        frames,
        times: frame_times(pde),
        warnings: Vec::new(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::BoundaryKind;
    use crate::init::{sample_grf, GrfSpec};
    use crate::pde::NsForcing;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn small(nu: f64, forcing: NsForcing, horizon: f64) -> PdeSpec {
        let mut pde = PdeSpec::navier_stokes(nu, forcing)
            .unwrap()
            .with_grid(Grid::square(32, 1.0, BoundaryKind::Periodic).unwrap())
            .unwrap();
        pde.horizon = horizon;
        pde
    }

    #[test]
    fn shear_mode_decays_exactly() {
        let pde = small(0.1, NsForcing::None, 1.0);
        let w0 = Field::from_fn(pde.grid, |x| (2.0 * PI * x[0]).sin());
        let traj = crank_nicolson_ns_solve(
            &w0,
            &pde,
            &SolverRun::new(Scheme::SpectralCrankNicolson, 1000, 32),
        )
        .unwrap();
        for (f, &t) in traj.frames.iter().zip(&traj.times) {
            let decay = (-4.0 * PI * PI * 0.1 * t).exp();
            let exact = w0.map(|v| v * decay);
            let d: f64 = f
                .values()
                .iter()
                .zip(exact.values())
                .map(|(a, b)| (a - b).powi(2))
                .sum();
            assert!(d.sqrt() / exact.l2_norm() < 1e-4);
        }
    }

    #[test]
    fn mean_vorticity_stays_zero_under_forcing() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for forcing in [NsForcing::Li, NsForcing::Kolmogorov] {
            let pde = small(1e-3, forcing, 1.0);
            let w0 = sample_grf(&GrfSpec::li_convention(), &pde.grid, &mut rng).unwrap();
            let traj = crank_nicolson_ns_solve(
                &w0,
                &pde,
                &SolverRun::new(Scheme::SpectralCrankNicolson, 100, 32),
            )
            .unwrap();
            for f in &traj.frames {
                assert!(f.mean().abs() < 1e-10);
            }
        }
    }

    #[test]
    fn refined_internal_grid_agrees_with_output_grid() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let pde = small(1e-3, NsForcing::Li, 0.5);
        let w0 = sample_grf(&GrfSpec::li_convention(), &pde.grid, &mut rng).unwrap();
        let coarse = crank_nicolson_ns_solve(
            &w0,
            &pde,
            &SolverRun::new(Scheme::SpectralCrankNicolson, 100, 32),
        )
        .unwrap();
        let fine = crank_nicolson_ns_solve(
            &w0,
            &pde,
            &SolverRun::new(Scheme::SpectralCrankNicolson, 100, 64),
        )
        .unwrap();
        let (a, b) = (&coarse.frames[9], &fine.frames[9]);
        let d: f64 = a
            .values()
            .iter()
            .zip(b.values())
            .map(|(x, y)| (x - y).powi(2))
            .sum();
        assert!(d.sqrt() / b.l2_norm() < 1e-2);
    }

    #[test]
    fn huge_initial_vorticity_blows_up() {
        let pde = small(1e-5, NsForcing::Li, 1.0);
        let w0 = Field::from_fn(pde.grid, |x| {
            1e4 * ((2.0 * PI * x[0]).sin() + (4.0 * PI * x[1]).cos())
        });
        let err = crank_nicolson_ns_solve(
            &w0,
            &pde,
            &SolverRun::new(Scheme::SpectralCrankNicolson, 10, 32),
        )
        .unwrap_err();
        assert!(matches!(err, Error::Blowup { .. }), "{err:?}");
    }
}
