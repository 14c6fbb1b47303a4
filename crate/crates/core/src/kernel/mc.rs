use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::{BoundaryKind, Field, Grid};
use crate::pde::{drift, forcing_value, PdeSpec};
use crate::spectral::{eval_at, TrigInterpolant};

use super::backtrace::eval_vector;
use super::propagate::PropagatorConfig;

/// Off-grid reader of the state.
enum Reader<'a> {
    Trig(TrigInterpolant),
    Generic(&'a Field),
}

impl Reader<'_> {
    fn new(u: &Field) -> Reader<'_> {
        let g = u.grid();
        if g.dim() == 1 && g.boundary().is_periodic() {
            Reader::Trig(TrigInterpolant::new(u.values(), g.extent(0)))
        } else {
            Reader::Generic(u)
        }
    }

    fn eval(&self, x: [f64; 2]) -> f64 {
        match self {
            Reader::Trig(t) => t.eval(x[0]),
            Reader::Generic(f) => eval_at(f.grid(), f.values(), x),
        }
    }
}

/// Fold `x` into `[0, l]` by mirror reflection.
fn reflect(x: f64, l: f64) -> f64 {
    let y = x.rem_euclid(2.0 * l);
    if y > l {
        2.0 * l - y
    } else {
        y
    }
}

/// Apply the boundary rule to an Euler-Maruyama endpoint; `None` when the
/// path is absorbed. Dirichlet absorption includes the Brownian-bridge
/// probability of touching a wall between two interior endpoints.
fn process<R: Rng>(
    grid: &Grid,
    start: [f64; 2],
    end: [f64; 2],
    sigma: f64,
    rng: &mut R,
) -> Option<[f64; 2]> {
    match grid.boundary() {
        BoundaryKind::Periodic => Some(grid.wrap(end)),
        BoundaryKind::NeumannZero => {
            let mut y = end;
            for (a, ya) in y.iter_mut().enumerate().take(grid.dim()) {
                *ya = reflect(*ya, grid.extent(a));
            }
            Some(y)
        }
        BoundaryKind::DirichletZero => {
            if !grid.contains(end) {
                return None;
            }
            if sigma > 0.0 {
                let s2 = sigma * sigma;
                for a in 0..grid.dim() {
                    let l = grid.extent(a);
                    for (d0, d1) in [(start[a], end[a]), (l - start[a], l - end[a])] {
                        let p = (-2.0 * d0.max(0.0) * d1.max(0.0) / s2).exp();
                        if rng.random::<f64>() < p {
                            return None;
                        }
                    }
                }
            }
            Some(end)
        }
    }
}

/// Monte Carlo estimate of one step with `m` Euler-Maruyama samples per
/// point. The base seed is drawn from `rng`; see [`mc_propagate_seeded`].
pub fn mc_propagate<R: Rng + ?Sized>(
    u: &Field,
    pde: &PdeSpec,
    t: f64,
    m: usize,
    rng: &mut R,
    config: &PropagatorConfig,
) -> Result<Field> {
    let seed: u64 = rng.random();
    mc_propagate_seeded(u, pde, t, m, seed, config)
}

/// Per point `p`: mean of `u(xi_m)` over `xi_m = x_p + beta(x_p) dt + sigma b_m`
/// after boundary processing (absorbed paths count 0), plus `f(x_p) dt`.
///
/// Point `p` draws from ChaCha8 stream `p` of `seed`, so the result does
/// not depend on thread scheduling. With `sigma = 0` a single deterministic
/// evaluation is returned.
pub fn mc_propagate_seeded(
    u: &Field,
    pde: &PdeSpec,
    t: f64,
    m: usize,
    seed: u64,
    config: &PropagatorConfig,
) -> Result<Field> {
    config.validate()?;
    if m == 0 {
        return Err(Error::arg("M", "need at least one sample"));
    }
    let grid = pde.grid;
    if u.grid() != &grid || u.components() != 1 {
        return Err(Error::ShapeMismatch(
            "state must be a scalar field on the PDE grid".into(),
        ));
    }
    let dt = config.dt;
    let sigma = (2.0 * pde.diffusivity() * dt).sqrt();
    let beta = drift(pde, u)?;
    let reader = Reader::new(u);
    let dim = grid.dim();
    let state_forcing = pde.forcing().is_state_dependent();
    let values: Result<Vec<f64>> = (0..grid.len())
        .into_par_iter()
        .map(|p| {
            let x = grid.point(p);
            let b = eval_vector(&beta, x);
            let mut mean = x;
            for a in 0..dim {
                mean[a] += b[a] * dt;
            }
            let f = forcing_value(pde, x, t + dt, if state_forcing { Some(u) } else { None })?;
            let force = if f == 0.0 { 0.0 } else { f * dt };
            if sigma == 0.0 {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let v = match process(&grid, x, mean, 0.0, &mut rng) {
                    Some(y) => eval_at(&grid, u.values(), y),
                    None => 0.0,
                };
                return Ok(v + force);
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(p as u64);
            let mut acc = 0.0;
            for _ in 0..m {
                let mut end = mean;
                for e in end.iter_mut().take(dim) {
                    let z: f64 = rng.sample(StandardNormal);
                    *e += sigma * z;
                }
                if let Some(y) = process(&grid, x, end, sigma, &mut rng) {
                    acc += reader.eval(y);
                }
            }
            Ok(acc / m as f64 + force)
        })
        .collect();
    Field::new(grid, values?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::{propagate, DriftScheme};
    use std::f64::consts::PI;

    #[test]
    fn reflection_folds_into_domain() {
        assert!((reflect(-0.1, 1.0) - 0.1).abs() < 1e-15);
        assert!((reflect(1.25, 1.0) - 0.75).abs() < 1e-15);
        assert!((reflect(2.3, 1.0) - 0.3).abs() < 1e-12);
    }

    #[test]
    fn zero_diffusion_equals_euler_propagate() {
        let pde = PdeSpec::convection_diffusion(0.1, 0.0, 5).unwrap();
        let u = Field::from_fn(pde.grid, |x| {
            (2.0 * PI * x[0]).sin() + 0.3 * (10.0 * PI * x[0]).cos()
        });
        let cfg = PropagatorConfig::new(0.13).with_drift_scheme(DriftScheme::Euler);
        let det = propagate(&u, &pde, 0.0, &cfg).unwrap();
        for m in [1, 7] {
            let mc = mc_propagate_seeded(&u, &pde, 0.0, m, 3, &cfg).unwrap();
            assert_eq!(mc, det);
        }
    }

    #[test]
    fn single_mode_within_three_standard_errors() {
        let kappa = 0.005;
        let pde = PdeSpec::convection_diffusion(0.1, kappa, 5).unwrap();
        let u = Field::from_fn(pde.grid, |x| (2.0 * PI * x[0]).sin());
        let cfg = PropagatorConfig::new(0.2);
        let m = 20_000;
        let est = mc_propagate_seeded(&u, &pde, 0.0, m, 42, &cfg).unwrap();
        let decay = (-4.0 * PI * PI * kappa * 0.2).exp();
        // Var sin(2 pi (y + s Z)) = (1 - e^{-8 pi^2 s^2} cos(4 pi y)) / 2 - mean^2
        let s2 = 2.0 * kappa * 0.2;
        let mut outside = 0;
        for (p, x) in pde.grid.points().enumerate() {
            let y = x[0] + 0.02;
            let mean = decay * (2.0 * PI * y).sin();
            let var =
                0.5 * (1.0 - (-8.0 * PI * PI * s2).exp() * (4.0 * PI * y).cos()) - mean * mean;
            let se = (var / m as f64).sqrt();
            if (est.get(p) - mean).abs() > 3.0 * se {
                outside += 1;
            }
        }
        // 3 sigma band: expect ~0.2 of 64 outside
        assert!(outside <= 2, "{outside} points outside 3 SE");
    }

    #[test]
    fn variance_scales_inversely_with_samples() {
        let pde = PdeSpec::convection_diffusion(0.1, 0.005, 5).unwrap();
        let u = Field::from_fn(pde.grid, |x| (2.0 * PI * x[0]).sin());
        let cfg = PropagatorConfig::new(0.2);
        // sample variance pooled over all points, each an independent stream
        let var_at = |m: usize| {
            let runs: Vec<Field> = (0..100)
                .map(|s| mc_propagate_seeded(&u, &pde, 0.0, m, s, &cfg).unwrap())
                .collect();
            let n = pde.grid.len();
            (0..n)
                .map(|p| {
                    let mean = runs.iter().map(|r| r.get(p)).sum::<f64>() / runs.len() as f64;
                    runs.iter().map(|r| (r.get(p) - mean).powi(2)).sum::<f64>()
                        / (runs.len() - 1) as f64
                })
                .sum::<f64>()
                / n as f64
        };
        let ratio = var_at(200) / var_at(2000);
        assert!((9.0..=11.0).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn dirichlet_paths_are_absorbed_near_walls() {
        let pde = PdeSpec::allen_cahn(BoundaryKind::DirichletZero, 5).unwrap();
        let one = Field::constant(pde.grid, 1.0);
        let cfg = PropagatorConfig::new(0.01);
        let est = mc_propagate_seeded(&one, &pde, 0.0, 4000, 0, &cfg).unwrap();
        // at the wall every path is absorbed; f(1) = 0
        assert_eq!(est.get(0), 0.0);
        // next node: survival 1 - erfc(h / (sigma sqrt 2))
        let sigma = (2.0f64 * 0.01 * 0.01).sqrt();
        let h = pde.grid.spacing(0);
        let survive = 1.0 - statrs::function::erf::erfc(h / (sigma * std::f64::consts::SQRT_2));
        assert!(
            (est.get(1) - survive).abs() < 0.03,
            "{} vs {survive}",
            est.get(1)
        );
        assert!((est.get(32) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn seeded_results_are_reproducible() {
        let pde = PdeSpec::convection_diffusion(0.1, 0.01, 5).unwrap();
        let u = Field::from_fn(pde.grid, |x| (2.0 * PI * x[0]).cos());
        let cfg = PropagatorConfig::new(0.2);
        let a = mc_propagate_seeded(&u, &pde, 0.0, 50, 9, &cfg).unwrap();
        let b = mc_propagate_seeded(&u, &pde, 0.0, 50, 9, &cfg).unwrap();
        assert_eq!(a, b);
        let c = mc_propagate_seeded(&u, &pde, 0.0, 50, 10, &cfg).unwrap();
        assert_ne!(a, c);
    }
}
