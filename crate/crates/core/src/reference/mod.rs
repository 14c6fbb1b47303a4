//! Ground-truth and baseline solvers.
//!
//! Every solver returns a [`Trajectory`] with exactly `pde.frames` snapshots
//! on the PDE's output grid at times `T k / frames`, `k = 1..=frames`.
//! Internal grids are exact refinements of the output grid and the output is
//! taken by strided sampling.

mod allen_cahn;
mod convdiff;
mod navier_stokes;
mod particle;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Field, Grid};
use crate::pde::{PdeKind, PdeSpec};
use crate::spectral::spectral_interpolate_capped;

pub use allen_cahn::fd_allen_cahn_solve;
pub use convdiff::spectral_convdiff_solve;
pub use navier_stokes::crank_nicolson_ns_solve;
pub use particle::{mc_solve_full, ParticleEnsemble};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    SpectralRk2,
    /// Integrating-factor evaluation of a linear problem; oracle use only.
    SpectralExact,
    SpectralCrankNicolson,
    FiniteDifferenceRk2,
    ParticleMc,
}

impl Scheme {
    pub fn parse(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "spectral_rk2" | "rk2" => Ok(Scheme::SpectralRk2),
            "spectral_exact" | "exact" => Ok(Scheme::SpectralExact),
            "spectral_crank_nicolson" | "crank_nicolson" | "cn" => {
                Ok(Scheme::SpectralCrankNicolson)
            }
            "finite_difference_rk2" | "fd_rk2" | "fd" => Ok(Scheme::FiniteDifferenceRk2),
            "particle_mc" | "mc" => Ok(Scheme::ParticleMc),
            other => Err(Error::Config(format!("unknown solver scheme `{other}`"))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Scheme::SpectralRk2 => "spectral_rk2",
            Scheme::SpectralExact => "spectral_exact",
            Scheme::SpectralCrankNicolson => "spectral_crank_nicolson",
            Scheme::FiniteDifferenceRk2 => "finite_difference_rk2",
            Scheme::ParticleMc => "particle_mc",
        }
    }
}

/// How a reference trajectory is produced.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverRun {
    pub scheme: Scheme,
    /// Time steps over the whole horizon; a multiple of the frame count.
    pub steps: usize,
    /// Points per axis of the internal grid.
    pub internal_resolution: usize,
    /// Particles per point (particle runs only).
    pub particles: Option<usize>,
    pub seed: Option<u64>,
}

impl SolverRun {
    pub fn new(scheme: Scheme, steps: usize, internal_resolution: usize) -> Self {
        SolverRun {
            scheme,
            steps,
            internal_resolution,
            particles: None,
            seed: None,
        }
    }

    /// Settings used to generate test data for `pde`. The desk-scale variant
    /// keeps runtimes short; `paper_scale` restores the published settings.
    pub fn reference_for(pde: &PdeSpec, paper_scale: bool) -> Self {
        match pde.kind {
            // per-mode amplification makes the fine step free at both scales
            PdeKind::ConvectionDiffusion { .. } => {
                SolverRun::new(Scheme::SpectralRk2, 200_000, 1024)
            }
            PdeKind::AllenCahn { .. } => {
                let steps = if paper_scale { 1_000_000 } else { 50_000 };
                SolverRun::new(Scheme::FiniteDifferenceRk2, steps, 1025)
            }
            PdeKind::NavierStokesVorticity { .. } => {
                let (steps, res) = if paper_scale {
                    (100_000, 256)
                } else {
                    (4_000, 128)
                };
                SolverRun::new(Scheme::SpectralCrankNicolson, steps, res)
            }
        }
    }

    pub fn with_particles(mut self, m: usize, seed: u64) -> Self {
        self.particles = Some(m);
        self.seed = Some(seed);
        self
    }
}

/// Snapshots of a solution at uniform output times.
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub frames: Vec<Field>,
    pub times: Vec<f64>,
    pub warnings: Vec<String>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }
}

/// Dispatch on the scheme of `run`.
pub fn solve_reference(ic: &Field, pde: &PdeSpec, run: &SolverRun) -> Result<Trajectory> {
    match run.scheme {
        Scheme::SpectralRk2 | Scheme::SpectralExact => spectral_convdiff_solve(ic, pde, run),
        Scheme::SpectralCrankNicolson => crank_nicolson_ns_solve(ic, pde, run),
        Scheme::FiniteDifferenceRk2 => fd_allen_cahn_solve(ic, pde, run),
        Scheme::ParticleMc => {
            let m = run
                .particles
                .ok_or_else(|| Error::arg("particles", "particle runs need M"))?;
            mc_solve_full(ic, pde, m, run.steps, run.seed.unwrap_or(0))
        }
    }
}

pub(crate) fn frame_times(pde: &PdeSpec) -> Vec<f64> {
    let dt = pde.frame_dt();
    (1..=pde.frames).map(|k| k as f64 * dt).collect()
}

/// Steps per output frame; `steps` must be a positive multiple of `frames`.
pub(crate) fn steps_per_frame(pde: &PdeSpec, steps: usize) -> Result<usize> {
    if steps == 0 || steps % pde.frames != 0 {
        return Err(Error::arg(
            "steps",
            format!(
                "{steps} is not a positive multiple of the frame count {}",
                pde.frames
            ),
        ));
    }
    Ok(steps / pde.frames)
}

/// Internal grid and stride for `resolution` points per axis.
pub fn internal_grid(pde: &PdeSpec, resolution: usize) -> Result<(Grid, usize)> {
    let out = pde.grid;
    let n = out.resolution(0);
    let (span_out, span_in) = if out.boundary().is_periodic() {
        (n, resolution)
    } else {
        (n - 1, resolution.saturating_sub(1))
    };
    if span_in < span_out || span_in % span_out != 0 || !(span_in / span_out).is_power_of_two() {
        return Err(Error::arg(
            "internal_resolution",
            format!("{resolution} is not a power-of-two refinement of {n}"),
        ));
    }
    let stride = span_in / span_out;
    Ok((out.refined(stride)?, stride))
}

/// The initial condition on the internal grid: accepted as is, or spectrally
/// refined from the output grid.
pub(crate) fn lift_ic(ic: &Field, pde: &PdeSpec, fine: &Grid, stride: usize) -> Result<Field> {
    if ic.components() != 1 {
        return Err(Error::ShapeMismatch(
            "initial condition must be scalar".into(),
        ));
    }
    if ic.grid() == fine {
        Ok(ic.clone())
    } else if ic.grid() == &pde.grid {
        spectral_interpolate_capped(ic, stride, usize::MAX)
    } else {
        Err(Error::ShapeMismatch(
            "initial condition is on neither the output nor the internal grid".into(),
        ))
    }
}
