use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::Field;
use crate::pde::{PdeKind, PdeSpec};
use crate::spectral::TrigInterpolant;

use super::{frame_times, steps_per_frame, Trajectory};

/// Euler-Maruyama particles released from one point of a periodic line.
#[derive(Clone, Debug)]
pub struct ParticleEnsemble {
    positions: Vec<f64>,
    extent: f64,
}

impl ParticleEnsemble {
    pub fn new(origin: f64, m: usize, extent: f64) -> Self {
        ParticleEnsemble {
            positions: vec![origin; m],
            extent,
        }
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn positions(&self) -> &[f64] {
        &self.positions
    }

    /// One step `x <- x + beta dt + sigma Z`, wrapped into `[0, extent)`.
    pub fn advance<R: Rng + ?Sized>(&mut self, shift: f64, sigma: f64, rng: &mut R) {
        for x in &mut self.positions {
            let z: f64 = if sigma > 0.0 {
                rng.sample(StandardNormal)
            } else {
                0.0
            };
            *x = (*x + shift + sigma * z).rem_euclid(self.extent);
        }
    }

    pub fn mean_of(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.positions.iter().map(|&x| f(x)).sum::<f64>() / self.positions.len() as f64
    }
}

/// Full particle Monte Carlo solution of a convection-diffusion problem.
///
/// From every output point, `m` Euler-Maruyama paths of
/// `dX = beta ds + sqrt(2 kappa) dB` are run for `steps` uniform steps over
/// the horizon; the estimate at each frame time is the mean of the initial
/// condition (trigonometric interpolant of `ic`) at the path positions
/// reached at that time. Frames share paths; each point draws from its own
/// ChaCha8 stream of `seed`.
pub fn mc_solve_full(
    ic: &Field,
    pde: &PdeSpec,
    m: usize,
    steps: usize,
    seed: u64,
) -> Result<Trajectory> {
    let PdeKind::ConvectionDiffusion { beta, kappa } = pde.kind else {
        return Err(Error::arg(
            "pde",
            "the particle solver handles convection-diffusion only",
        ));
    };
    pde.validate()?;
    if !pde.grid.boundary().is_periodic() {
        return Err(Error::InvalidGrid(
            "the particle solver needs a periodic line".into(),
        ));
    }
    if m == 0 {
        return Err(Error::arg("M", "need at least one particle"));
    }
    if ic.components() != 1 || ic.grid().dim() != 1 || !ic.grid().boundary().is_periodic() {
        return Err(Error::ShapeMismatch(
            "initial condition must be a scalar periodic line".into(),
        ));
    }
    let per_frame = steps_per_frame(pde, steps)?;
    let extent = pde.grid.extent(0);
    let u0 = TrigInterpolant::new(ic.values(), ic.grid().extent(0));
    let dt = pde.horizon / steps as f64;
    let sigma = (2.0 * kappa * dt).sqrt();
    let frames = pde.frames;
    // per point: the estimate at every frame
    let columns: Vec<Vec<f64>> = (0..pde.grid.len())
        .into_par_iter()
        .map(|p| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(p as u64);
            let mut ens = ParticleEnsemble::new(pde.grid.point(p)[0], m, extent);
            let mut out = Vec::with_capacity(frames);
            for _ in 0..frames {
                for _ in 0..per_frame {
                    ens.advance(beta * dt, sigma, &mut rng);
                }
                out.push(ens.mean_of(|x| u0.eval(x)));
            }
            out
        })
        .collect();
    let frames = (0..frames)
        .map(|k| Field::new(pde.grid, columns.iter().map(|c| c[k]).collect()))
        .collect::<Result<Vec<_>>>()?;
    Ok(Trajectory {
        frames,
        times: frame_times(pde),
        warnings: Vec::new(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::init::FourierSeriesIC;
    use crate::reference::{spectral_convdiff_solve, Scheme, SolverRun};

    fn mean_rel_l2(a: &Trajectory, b: &Trajectory) -> f64 {
        a.frames
            .iter()
            .zip(&b.frames)
            .map(|(x, y)| {
                let d: f64 = x
                    .values()
                    .iter()
                    .zip(y.values())
                    .map(|(p, q)| (p - q).powi(2))
                    .sum();
                d.sqrt() / y.l2_norm()
            })
            .sum::<f64>()
            / a.len() as f64
    }

    #[test]
    fn zero_diffusion_is_exact_translation() {
        let pde = PdeSpec::convection_diffusion(0.1, 0.0, 5).unwrap();
        let ic = FourierSeriesIC::with_coefficients(vec![0.5, 0.2, 0.9, 0.4, 0.1])
            .unwrap()
            .on_grid(&pde.grid)
            .unwrap();
        let exact =
            spectral_convdiff_solve(&ic, &pde, &SolverRun::new(Scheme::SpectralExact, 10, 64))
                .unwrap();
        for m in [1, 10] {
            let mc = mc_solve_full(&ic, &pde, m, 200, 0).unwrap();
            assert!(mean_rel_l2(&mc, &exact) < 1e-10);
        }
    }

    #[test]
    fn error_shrinks_with_particles() {
        let pde = PdeSpec::convection_diffusion(0.1, 0.005, 10).unwrap();
        let ic = FourierSeriesIC::with_coefficients((1..=10).map(|k| 1.0 / k as f64).collect())
            .unwrap()
            .on_grid(&pde.grid)
            .unwrap();
        let exact =
            spectral_convdiff_solve(&ic, &pde, &SolverRun::new(Scheme::SpectralExact, 10, 64))
                .unwrap();
        let small = mean_rel_l2(&mc_solve_full(&ic, &pde, 50, 200, 1).unwrap(), &exact);
        let large = mean_rel_l2(&mc_solve_full(&ic, &pde, 800, 200, 1).unwrap(), &exact);
        let ratio = small / large;
        assert!((2.8..=5.6).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn runs_are_reproducible() {
        let pde = PdeSpec::convection_diffusion(0.1, 0.01, 5).unwrap();
        let ic = Field::from_fn(pde.grid, |x| (2.0 * std::f64::consts::PI * x[0]).sin());
        let a = mc_solve_full(&ic, &pde, 20, 20, 4).unwrap();
        let b = mc_solve_full(&ic, &pde, 20, 20, 4).unwrap();
        assert_eq!(a, b);
    }
}
