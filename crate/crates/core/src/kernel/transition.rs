use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::grid::{BoundaryKind, Grid};

use super::propagate::{Interpolation, PropagatorConfig};
use super::radius::select_radius;

/// Beyond this many standard deviations a Gaussian factor underflows to 0.
const UNDERFLOW_SIGMAS: f64 = 40.0;

/// Discrete transition weights of one backtraced point.
#[derive(Clone, Debug, PartialEq)]
pub struct TransitionKernel {
    pub center: [f64; 2],
    pub sigma: f64,
    pub radius: f64,
    /// Refinement factor of the working grid relative to the base grid.
    pub factor: usize,
    pub working_grid: Grid,
    /// Ascending indices into `working_grid`.
    pub indices: Vec<usize>,
    /// `p(x_i) * node volume`, one per index.
    pub weights: Vec<f64>,
    /// Probability of having hit a Dirichlet wall; 0 otherwise.
    pub absorbed_mass: f64,
}

impl TransitionKernel {
    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// `|sum w + absorbed - 1|`.
    pub fn deviation(&self) -> f64 {
        (self.total_weight() + self.absorbed_mass - 1.0).abs()
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    /// `sum_i w_i v_i` for samples `v` on the working grid.
    pub fn apply(&self, values: &[f64]) -> f64 {
        self.indices
            .iter()
            .zip(&self.weights)
            .fold(0.0, |acc, (&i, &w)| acc + w * values[i])
    }
}

/// Largest Gaussian factor dropped by truncating the image series at `k`
/// images per side, relative to the peak.
pub fn image_tail_bound(sigma: f64, extent: f64, k: usize, boundary: BoundaryKind) -> f64 {
    // nearest omitted image: (k + 1/2) L away on a torus, 2 k L for walls
    let d = match boundary {
        BoundaryKind::Periodic => (k as f64 + 0.5) * extent,
        _ => 2.0 * k as f64 * extent,
    };
    (-0.5 * (d / sigma).powi(2)).exp()
}

fn gauss(x: f64, sigma: f64) -> f64 {
    (-0.5 * (x / sigma).powi(2)).exp() / ((2.0 * PI).sqrt() * sigma)
}

/// One-axis transition density at `y` (displacement `d = y - c` on tori).
struct AxisDensity {
    boundary: BoundaryKind,
    extent: f64,
    sigma: f64,
    k: i64,
}

impl AxisDensity {
    fn periodic(&self, d: f64) -> f64 {
        let cut = UNDERFLOW_SIGMAS * self.sigma;
        let mut s = 0.0;
        for n in -self.k..=self.k {
            let x = d + n as f64 * self.extent;
            if x.abs() <= cut {
                s += gauss(x, self.sigma);
            }
        }
        s
    }

    fn bounded(&self, y: f64, c: f64) -> f64 {
        let cut = UNDERFLOW_SIGMAS * self.sigma;
        let sign = if self.boundary == BoundaryKind::DirichletZero {
            -1.0
        } else {
            1.0
        };
        let mut s = 0.0;
        for n in -self.k..=self.k {
            let shift = 2.0 * n as f64 * self.extent;
            let direct = y - c + shift;
            if direct.abs() <= cut {
                s += gauss(direct, self.sigma);
            }
            let image = y + c + shift;
            if image.abs() <= cut {
                s += sign * gauss(image, self.sigma);
            }
        }
        s
    }

    fn eval(&self, c: f64, d: f64) -> f64 {
        if self.boundary.is_periodic() {
            self.periodic(d)
        } else {
            self.bounded(c + d, c)
        }
    }
}

/// Kernel on a fixed working grid, with no escalation.
pub(crate) fn kernel_on(
    grid: &Grid,
    center: [f64; 2],
    sigma: f64,
    radius: f64,
    factor: usize,
    images: usize,
) -> TransitionKernel {
    let dim = grid.dim();
    let b = grid.boundary();
    let dens: Vec<AxisDensity> = (0..dim)
        .map(|a| AxisDensity {
            boundary: b,
            extent: grid.extent(a),
            sigma,
            k: images as i64,
        })
        .collect();
    // per-axis candidates with density times quadrature weight
    let axes: Vec<Vec<(usize, f64, f64)>> = (0..dim)
        .map(|a| {
            grid.axis_candidates(a, center[a], radius)
                .into_iter()
                .map(|(i, d)| {
                    (
                        i,
                        d,
                        dens[a].eval(center[a], d) * grid.axis_node_weight(a, i),
                    )
                })
                .collect()
        })
        .collect();
    let r2 = radius * radius;
    let mut pairs: Vec<(usize, f64)> = Vec::new();
    if dim == 1 {
        for &(i, d, w) in &axes[0] {
            if d * d <= r2 {
                pairs.push((i, w));
            }
        }
    } else {
        let n1 = grid.resolution(1);
        for &(i, d0, w0) in &axes[0] {
            for &(j, d1, w1) in &axes[1] {
                if d0 * d0 + d1 * d1 <= r2 {
                    pairs.push((i * n1 + j, w0 * w1));
                }
            }
        }
    }
    pairs.sort_unstable_by_key(|p| p.0);
    let absorbed_mass = if b == BoundaryKind::DirichletZero {
        let survive: f64 = (0..dim)
            .map(|a| {
                (0..grid.resolution(a))
                    .map(|i| {
                        dens[a].bounded(grid.coord(a, i), center[a]) * grid.axis_node_weight(a, i)
                    })
                    .sum::<f64>()
            })
            .product();
        (1.0 - survive).max(0.0)
    } else {
        0.0
    };
    let (indices, weights) = pairs.into_iter().map(|(i, w)| (i, w.max(0.0))).unzip();
    TransitionKernel {
        center,
        sigma,
        radius,
        factor,
        working_grid: *grid,
        indices,
        weights,
        absorbed_mass,
    }
}

/// Smallest power-of-two refinement (at most `cap`) with spacing `<= sigma / 2`.
pub(crate) fn initial_factor(grid: &Grid, sigma: f64, cap: usize) -> usize {
    let h = (0..grid.dim()).map(|a| grid.spacing(a)).fold(0.0, f64::max);
    let mut f = 1;
    while h / f as f64 > 0.5 * sigma && f * 2 <= cap {
        f *= 2;
    }
    f
}

/// Transition kernel of the Brownian step of standard deviation `sigma`
/// started at `center`, for the boundary kind of `grid`.
///
/// With [`Interpolation::Auto`] the working grid is refined by powers of two
/// until its spacing is at most `sigma / 2` and the kernel mass is within the
/// normalization tolerance; failure at the cap is an error. With
/// [`Interpolation::Off`] the kernel is built on `grid` as is.
pub fn transition_kernel(
    grid: &Grid,
    center: [f64; 2],
    sigma: f64,
    config: &PropagatorConfig,
) -> Result<TransitionKernel> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::arg(
            "sigma",
            format!("must be positive, got {sigma}"),
        ));
    }
    if !grid.contains(center) {
        return Err(Error::DriftOutOfDomain { position: center });
    }
    let center = grid.wrap(center);
    let radius = select_radius(sigma, grid.dim(), config.eps)?;
    for a in 0..grid.dim() {
        let tail = image_tail_bound(sigma, grid.extent(a), config.image_terms, grid.boundary());
        if tail > 1e-3 * config.normalization_tolerance {
            return Err(Error::arg(
                "sigma",
                format!(
                    "image series with {} terms leaves a tail of {tail:.2e}",
                    config.image_terms
                ),
            ));
        }
    }
    let mut factor = match config.interpolation {
        Interpolation::Off => 1,
        Interpolation::Auto => initial_factor(grid, sigma, config.upsample_cap),
    };
    loop {
        let wg = grid.refined(factor)?;
        let k = kernel_on(&wg, center, sigma, radius, factor, config.image_terms);
        let dev = k.deviation();
        if config.interpolation == Interpolation::Off || dev <= config.normalization_tolerance {
            return Ok(k);
        }
        if factor * 2 > config.upsample_cap {
            return Err(Error::NormalizationFailure {
                deviation: dev,
                tolerance: config.normalization_tolerance,
                factor,
            });
        }
        factor *= 2;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn cfg() -> PropagatorConfig {
        PropagatorConfig::new(0.1)
    }

    #[test]
    fn periodic_kernel_is_normalized() {
        let g = Grid::line(64, 1.0, BoundaryKind::Periodic).unwrap();
        let h = g.spacing(0);
        for c in [0.0, 0.3, 0.999, 17.3 * h] {
            let k = transition_kernel(&g, [c, 0.0], 3.0 * h, &cfg()).unwrap();
            assert!(
                (k.total_weight() - 1.0).abs() <= 2e-4,
                "{}",
                k.total_weight()
            );
            assert_eq!(k.factor, 1);
            assert!(k.weights.iter().all(|&w| w >= 0.0));
        }
    }

    #[test]
    fn dirichlet_interior_matches_free_gaussian() {
        let g = Grid::line(65, 1.0, BoundaryKind::DirichletZero).unwrap();
        let sigma = 0.01;
        let k = transition_kernel(&g, [0.5, 0.0], sigma, &cfg()).unwrap();
        assert!(k.absorbed_mass < 1e-12);
        let wg = k.working_grid;
        for (&i, &w) in k.indices.iter().zip(&k.weights) {
            let free = gauss(wg.coord(0, i) - 0.5, sigma) * wg.spacing(0);
            assert!((w - free).abs() < 1e-12);
        }
    }

    #[test]
    fn neumann_wall_conserves_mass() {
        let g = Grid::line(65, 1.0, BoundaryKind::NeumannZero).unwrap();
        for sigma in [0.004, 0.01, 0.05] {
            let k = transition_kernel(&g, [0.0, 0.0], sigma, &cfg()).unwrap();
            assert!((k.total_weight() - 1.0).abs() <= 2e-4);
        }
    }

    #[test]
    fn dirichlet_wall_absorbs_half() {
        let g = Grid::line(65, 1.0, BoundaryKind::DirichletZero).unwrap();
        let k = transition_kernel(&g, [0.0, 0.0], 0.02, &cfg()).unwrap();
        assert!(k.total_weight() < 1e-12);
        assert!((k.absorbed_mass - 1.0).abs() < 1e-12);
        // point mass near the wall: absorption is P(hit 0) = 2 P(Z < -c / sigma)
        let k = transition_kernel(&g, [0.03, 0.0], 0.02, &cfg()).unwrap();
        let expect = statrs::function::erf::erfc(0.03 / 0.02 / std::f64::consts::SQRT_2);
        // trapezoid error at the wall is O(h^2 p'(0))
        assert!(
            (k.absorbed_mass - expect).abs() < 1e-2,
            "{} vs {expect}",
            k.absorbed_mass
        );
        assert!(k.deviation() <= 2e-4);
    }

    #[test]
    fn two_dimensional_kernels_are_normalized() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for b in [
            BoundaryKind::Periodic,
            BoundaryKind::NeumannZero,
            BoundaryKind::DirichletZero,
        ] {
            let g = Grid::square(32, 1.0, b).unwrap();
            for _ in 0..20 {
                let c = [rng.random::<f64>(), rng.random::<f64>()];
                let sigma = 0.01 + 0.05 * rng.random::<f64>();
                let k = transition_kernel(&g, c, sigma, &cfg()).unwrap();
                assert!(k.deviation() <= 2e-4, "{b:?} {}", k.deviation());
            }
        }
    }

    #[test]
    fn kernel_indices_match_neighborhood() {
        let g = Grid::square(16, 1.0, BoundaryKind::Periodic).unwrap();
        let k = transition_kernel(&g, [0.01, 0.97], 0.1, &cfg()).unwrap();
        let n = crate::grid::neighborhood(&k.working_grid, [0.01, 0.97], k.radius);
        assert_eq!(k.indices, n);
    }

    #[test]
    fn escalation_refines_small_sigma() {
        let g = Grid::line(64, 1.0, BoundaryKind::Periodic).unwrap();
        let h = g.spacing(0);
        let k = transition_kernel(&g, [0.3, 0.0], 0.3 * h, &cfg()).unwrap();
        assert!(k.factor >= 4);
        assert!(k.deviation() <= 2e-4);
        let off = PropagatorConfig {
            interpolation: Interpolation::Off,
            ..cfg()
        };
        let k = transition_kernel(&g, [0.5 * h, 0.0], 0.2 * h, &off).unwrap();
        assert_eq!(k.factor, 1);
        assert!(k.deviation() > 0.5);
    }

    #[test]
    fn cap_exhaustion_is_reported() {
        let g = Grid::line(64, 1.0, BoundaryKind::Periodic).unwrap();
        let c = PropagatorConfig {
            upsample_cap: 2,
            ..cfg()
        };
        let err = transition_kernel(&g, [0.5 / 64.0, 0.0], 1e-4, &c).unwrap_err();
        assert!(matches!(err, Error::NormalizationFailure { factor: 2, .. }));
    }

    #[test]
    fn wide_kernels_trip_the_image_tail_check() {
        assert!(image_tail_bound(0.01, 1.0, 8, BoundaryKind::Periodic) < 1e-300);
        let g = Grid::line(64, 1.0, BoundaryKind::Periodic).unwrap();
        let c = PropagatorConfig {
            image_terms: 1,
            ..cfg()
        };
        assert!(transition_kernel(&g, [0.0, 0.0], 1.0, &c).is_err());
    }
}
