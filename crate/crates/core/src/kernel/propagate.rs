use std::collections::BTreeMap;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Field, Grid};
use crate::pde::{drift, ForcingEval, PdeSpec};
use crate::spectral::{point_weights, spectral_interpolate_capped, DEFAULT_UPSAMPLE_CAP};

use super::backtrace::{heun_backtrace, DriftScheme};
use super::operator::{assemble_linear_operator, SparseOperator};
use super::transition::transition_kernel;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Interpolation {
    #[default]
    Auto,
    Off,
}

impl Interpolation {
    pub fn parse(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "auto" | "on" => Ok(Interpolation::Auto),
            "off" => Ok(Interpolation::Off),
            other => Err(Error::Config(format!(
                "unknown interpolation mode `{other}`"
            ))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Interpolation::Auto => "auto",
            Interpolation::Off => "off",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PropagatorConfig {
    pub dt: f64,
    /// Tail mass left outside the kernel radius.
    pub eps: f64,
    pub drift_scheme: DriftScheme,
    pub interpolation: Interpolation,
    pub upsample_cap: usize,
    /// Images per side in the bounded and periodic image sums.
    pub image_terms: usize,
    /// Bound on `|sum w + absorbed - 1|` before the working grid is refined.
    pub normalization_tolerance: f64,
}

impl PropagatorConfig {
    /// Defaults: `eps = 1e-4`, Heun, automatic refinement up to x16, 8 images,
    /// tolerance `2 eps`.
    pub fn new(dt: f64) -> Self {
        PropagatorConfig {
            dt,
            eps: 1e-4,
            drift_scheme: DriftScheme::Heun,
            interpolation: Interpolation::Auto,
            upsample_cap: DEFAULT_UPSAMPLE_CAP,
            image_terms: 8,
            normalization_tolerance: 2e-4,
        }
    }

    /// Sets `eps` and the tolerance `2 eps` together.
    pub fn with_eps(mut self, eps: f64) -> Self {
        self.eps = eps;
        self.normalization_tolerance = 2.0 * eps;
        self
    }

    pub fn with_drift_scheme(mut self, scheme: DriftScheme) -> Self {
        self.drift_scheme = scheme;
        self
    }

    pub fn with_interpolation(mut self, mode: Interpolation) -> Self {
        self.interpolation = mode;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::arg(
                "dt",
                format!("must be positive, got {}", self.dt),
            ));
        }
        if !(self.eps > 0.0 && self.eps < 0.5) {
            return Err(Error::arg(
                "eps",
                format!("must lie in (0, 0.5), got {}", self.eps),
            ));
        }
        if self.image_terms == 0 {
            return Err(Error::arg(
                "image_terms",
                "need at least one image per side",
            ));
        }
        if self.upsample_cap == 0 || !self.upsample_cap.is_power_of_two() {
            return Err(Error::arg("upsample_cap", "must be a power of two"));
        }
        if !(self.normalization_tolerance > 0.0) {
            return Err(Error::arg("normalization_tolerance", "must be positive"));
        }
        Ok(())
    }
}

/// Non-fatal facts about one propagation step.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct StepDiagnostics {
    /// Largest working-grid refinement used by any kernel.
    pub max_factor: usize,
    pub max_deviation: f64,
    /// `max |beta| dt`.
    pub max_displacement: f64,
    /// Set when `max |beta| dt` exceeds a quarter of the domain.
    pub cfl_advisory: bool,
}

/// Weights of one output point against a working grid refined by `factor`.
#[derive(Clone, Debug)]
pub(crate) struct Stencil {
    pub factor: usize,
    pub indices: Vec<usize>,
    pub weights: Vec<f64>,
    pub deviation: f64,
}

impl Stencil {
    pub fn apply(&self, values: &[f64]) -> f64 {
        self.indices
            .iter()
            .zip(&self.weights)
            .fold(0.0, |acc, (&i, &w)| acc + w * values[i])
    }
}

/// The one-step map `u_t -> u_{t+dt}` for a fixed PDE and configuration.
///
/// Linear problems are served by a pre-assembled sparse operator; problems
/// with state-independent drift reuse their kernels across steps.
#[derive(Clone, Debug)]
pub struct Propagator {
    pde: PdeSpec,
    config: PropagatorConfig,
    sigma: f64,
    operator: Option<Arc<SparseOperator>>,
    fixed: Option<Arc<Vec<Stencil>>>,
}

impl Propagator {
    pub fn new(pde: PdeSpec, config: PropagatorConfig) -> Result<Self> {
        let mut p = Self::bare(pde, config)?;
        if p.pde.is_linear() {
            p.operator = Some(Arc::new(assemble_linear_operator(&p.pde, &p.config)?));
        } else if !p.pde.has_state_drift() {
            let beta = drift(&p.pde, &Field::zeros(p.pde.grid))?;
            p.fixed = Some(Arc::new(p.stencils(&beta, &beta)?));
        }
        Ok(p)
    }

    /// Validated propagator without cached operator or kernels.
    pub(crate) fn bare(pde: PdeSpec, config: PropagatorConfig) -> Result<Self> {
        config.validate()?;
        pde.validate()?;
        let sigma = (2.0 * pde.diffusivity() * config.dt).sqrt();
        Ok(Propagator {
            pde,
            config,
            sigma,
            operator: None,
            fixed: None,
        })
    }

    pub fn pde(&self) -> &PdeSpec {
        &self.pde
    }

    pub fn config(&self) -> &PropagatorConfig {
        &self.config
    }

    /// `sqrt(2 kappa dt)`.
    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    /// The assembled operator of a linear problem.
    pub fn operator(&self) -> Option<&SparseOperator> {
        self.operator.as_deref()
    }

    pub fn step(&self, u: &Field, t: f64) -> Result<Field> {
        self.step_with_diagnostics(u, t).map(|(f, _)| f)
    }

    pub fn step_with_diagnostics(&self, u: &Field, t: f64) -> Result<(Field, StepDiagnostics)> {
        let _ = t; // all benchmark drifts and forcings are autonomous
        let grid = self.pde.grid;
        if u.grid() != &grid || u.components() != 1 {
            return Err(Error::ShapeMismatch(
                "state must be a scalar field on the PDE grid".into(),
            ));
        }
        let beta0 = drift(&self.pde, u)?;
        let mut diag = StepDiagnostics {
            max_displacement: max_norm(&beta0) * self.config.dt,
            ..Default::default()
        };
        if let Some(op) = &self.operator {
            diag.max_factor = op.max_factor;
            diag.max_deviation = op.max_deviation;
            diag.cfl_advisory = diag.max_displacement > 0.25 * min_extent(&grid);
            return Ok((finite(grid, op.apply(u.values())?)?, diag));
        }
        let forcing = self.pde.forcing();
        let stencils1 = match &self.fixed {
            Some(s) => Arc::clone(s),
            None => Arc::new(self.stencils(&beta0, &beta0)?),
        };
        let fine1 = self.fine_fields(u, &stencils1, forcing)?;
        let f_end = forcing.on_grid(&grid, Some(u.values()))?;
        let pred = self.combine(&stencils1, &fine1, f_end.as_deref());
        record(&mut diag, &stencils1);
        let pred = finite(grid, pred)?;
        let corrected = if self.pde.has_state_drift() {
            let beta1 = drift(&self.pde, &pred)?;
            diag.max_displacement = diag.max_displacement.max(max_norm(&beta1) * self.config.dt);
            let stencils2 = self.stencils(&beta1, &beta0)?;
            let fine2 = self.fine_fields(u, &stencils2, forcing)?;
            let f_end = forcing.on_grid(&grid, Some(pred.values()))?;
            record(&mut diag, &stencils2);
            self.combine(&stencils2, &fine2, f_end.as_deref())
        } else if forcing.is_state_dependent() {
            let f_end = forcing.on_grid(&grid, Some(pred.values()))?;
            self.combine(&stencils1, &fine1, f_end.as_deref())
        } else {
            return Ok((pred, finish(diag, &grid)));
        };
        Ok((finite(grid, corrected)?, finish(diag, &grid)))
    }

    /// Apply `n` steps starting at time `t0`.
    pub fn iterate(&self, u: &Field, t0: f64, n: usize) -> Result<Field> {
        let mut cur = u.clone();
        for k in 0..n {
            cur = self.step(&cur, t0 + k as f64 * self.config.dt)?;
        }
        Ok(cur)
    }

    /// Snapshots after every `steps_per_frame` steps, `frames` of them.
    pub fn trajectory(
        &self,
        u0: &Field,
        steps_per_frame: usize,
        frames: usize,
    ) -> Result<Vec<Field>> {
        let mut out = Vec::with_capacity(frames);
        let mut cur = u0.clone();
        for k in 0..frames {
            cur = self.iterate(
                &cur,
                (k * steps_per_frame) as f64 * self.config.dt,
                steps_per_frame,
            )?;
            out.push(cur.clone());
        }
        Ok(out)
    }

    pub(crate) fn stencil_at(&self, center: [f64; 2]) -> Result<Stencil> {
        let grid = &self.pde.grid;
        if self.sigma == 0.0 {
            let (indices, weights): (Vec<usize>, Vec<f64>) =
                point_weights(grid, center).into_iter().unzip();
            let deviation = (weights.iter().sum::<f64>() - 1.0).abs();
            return Ok(Stencil {
                factor: 1,
                indices,
                weights,
                deviation,
            });
        }
        let k = transition_kernel(grid, center, self.sigma, &self.config)?;
        let deviation = k.deviation();
        Ok(Stencil {
            factor: k.factor,
            indices: k.indices,
            weights: k.weights,
            deviation,
        })
    }

    pub(crate) fn stencils(&self, beta_end: &Field, beta_start: &Field) -> Result<Vec<Stencil>> {
        let grid = self.pde.grid;
        let (dt, scheme) = (self.config.dt, self.config.drift_scheme);
        (0..grid.len())
            .into_par_iter()
            .map(|p| {
                let c = heun_backtrace(grid.point(p), beta_end, beta_start, dt, scheme)?;
                self.stencil_at(c)
            })
            .collect()
    }

    /// State and forcing on every working grid used by `stencils`.
    fn fine_fields(
        &self,
        u: &Field,
        stencils: &[Stencil],
        forcing: ForcingEval,
    ) -> Result<BTreeMap<usize, FineData>> {
        let mut out = BTreeMap::new();
        for s in stencils {
            if out.contains_key(&s.factor) {
                continue;
            }
            let fine_u = spectral_interpolate_capped(u, s.factor, self.config.upsample_cap)?;
            let fine_grid: Grid = *fine_u.grid();
            let fine_u = fine_u.into_values();
            let fine_f = forcing.on_grid(&fine_grid, Some(&fine_u))?;
            out.insert(
                s.factor,
                FineData {
                    u: fine_u,
                    f: fine_f,
                },
            );
        }
        Ok(out)
    }

    fn combine(
        &self,
        stencils: &[Stencil],
        fine: &BTreeMap<usize, FineData>,
        f_end: Option<&[f64]>,
    ) -> Vec<f64> {
        let half = 0.5 * self.config.dt;
        stencils
            .par_iter()
            .enumerate()
            .map(|(p, s)| {
                let data = &fine[&s.factor];
                let mut v = s.apply(&data.u);
                if let (Some(fe), Some(ff)) = (f_end, data.f.as_deref()) {
                    v += half * (fe[p] + s.apply(ff));
                }
                v
            })
            .collect()
    }
}

struct FineData {
    u: Vec<f64>,
    f: Option<Vec<f64>>,
}

fn record(diag: &mut StepDiagnostics, stencils: &[Stencil]) {
    for s in stencils {
        diag.max_factor = diag.max_factor.max(s.factor);
        diag.max_deviation = diag.max_deviation.max(s.deviation);
    }
}

fn finish(mut diag: StepDiagnostics, grid: &Grid) -> StepDiagnostics {
    diag.cfl_advisory = diag.max_displacement > 0.25 * min_extent(grid);
    diag
}

fn min_extent(grid: &Grid) -> f64 {
    (0..grid.dim())
        .map(|a| grid.extent(a))
        .fold(f64::INFINITY, f64::min)
}

fn max_norm(v: &Field) -> f64 {
    let n = v.grid().len();
    (0..n)
        .map(|p| {
            (0..v.components())
                .map(|c| v.component(c)[p].powi(2))
                .sum::<f64>()
                .sqrt()
        })
        .fold(0.0, f64::max)
}

fn finite(grid: Grid, values: Vec<f64>) -> Result<Field> {
    if let Some(v) = values.iter().find(|v| !v.is_finite()) {
        return Err(Error::Blowup {
            step: 0,
            max_abs: v.abs(),
        });
    }
    Field::new(grid, values)
}

/// One Feynman-Kac step of `pde` from `u` at time `t`.
pub fn propagate(u: &Field, pde: &PdeSpec, t: f64, config: &PropagatorConfig) -> Result<Field> {
    Propagator::new(pde.clone(), *config)?.step(u, t)
}
