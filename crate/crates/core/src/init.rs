//! Initial-condition distributions: random sine series in 1D and a periodic
//! Gaussian random field in 2D.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::grid::{Field, Grid};
use crate::pde::PdeSpec;
use crate::spectral::{wavenumber, Fft2};

/// `u(x) = sum_{n=1..N} a_n sin(2 pi n x)`.
#[derive(Clone, Debug, PartialEq)]
pub struct FourierSeriesIC {
    coefficients: Vec<f64>,
}

impl FourierSeriesIC {
    /// Draw `a_n ~ U(0, 1)` for `n = 1..=max_frequency`.
    pub fn sample<R: Rng + ?Sized>(max_frequency: usize, rng: &mut R) -> Result<Self> {
        if max_frequency == 0 {
            return Err(Error::arg("N", "maximum frequency must be at least 1"));
        }
        let coefficients = (0..max_frequency).map(|_| draw_open_unit(rng)).collect();
        Ok(FourierSeriesIC { coefficients })
    }

    /// Fixed coefficients, mostly for tests.
    pub fn with_coefficients(coefficients: Vec<f64>) -> Result<Self> {
        if coefficients.is_empty() {
            return Err(Error::arg("coefficients", "need at least one term"));
        }
        Ok(FourierSeriesIC { coefficients })
    }

    pub fn max_frequency(&self) -> usize {
        self.coefficients.len()
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.coefficients
            .iter()
            .enumerate()
            .map(|(i, a)| a * (2.0 * PI * (i + 1) as f64 * x).sin())
            .sum()
    }

    pub fn on_grid(&self, grid: &Grid) -> Result<Field> {
        if grid.dim() != 1 {
            return Err(Error::InvalidGrid(
                "sine-series initial conditions are 1D".into(),
            ));
        }
        Ok(Field::from_fn(*grid, |x| self.eval(x[0])))
    }
}

/// Uniform draw on the open interval (0, 1).
fn draw_open_unit<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    loop {
        let v: f64 = rng.random();
        if v > 0.0 {
            return v;
        }
    }
}

/// Sample a random sine-series field on a 1D grid.
pub fn sample_fourier_ic<R: Rng + ?Sized>(
    max_frequency: usize,
    grid: &Grid,
    rng: &mut R,
) -> Result<Field> {
    if grid.dim() != 1 {
        return Err(Error::InvalidGrid(
            "sine-series initial conditions are 1D".into(),
        ));
    }
    FourierSeriesIC::sample(max_frequency, rng)?.on_grid(grid)
}

/// `count` initial conditions of `pde` on its grid, drawn in order from one
/// generator: sine series of order `ic_frequency` on 1D problems, random
/// fields from `grf` on 2D problems.
pub fn sample_ic_batch<R: Rng + ?Sized>(
    pde: &PdeSpec,
    count: usize,
    grf: &GrfSpec,
    rng: &mut R,
) -> Result<Vec<Field>> {
    (0..count)
        .map(|_| match pde.grid.dim() {
            1 => {
                let n = pde
                    .ic_frequency
                    .ok_or_else(|| Error::arg("pde", "a 1D problem needs an IC frequency"))?;
                sample_fourier_ic(n, &pde.grid, rng)
            }
            _ => sample_grf(grf, &pde.grid, rng),
        })
        .collect()
}

/// Covariance `amplitude * (-Laplacian + tau^2)^(-alpha)` on the unit torus,
/// where `-Laplacian` has eigenvalue `4 pi^2 |k|^2` on the mode `k`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GrfSpec {
    pub tau: f64,
    pub alpha: f64,
    pub amplitude: f64,
}

impl Default for GrfSpec {
    fn default() -> Self {
        GrfSpec {
            tau: 7.0,
            alpha: 2.5,
            amplitude: 7f64.powf(1.5),
        }
    }
}

impl GrfSpec {
    /// Covariance `2 * 7^3 * (-Laplacian + 49)^(-2.5)`: the scaling of the
    /// widely used vorticity datasets, where a real part is taken of a
    /// non-Hermitian draw with unit-variance real and imaginary parts and
    /// square-root weight `sqrt(2) * 7^1.5`.
    pub fn li_convention() -> Self {
        GrfSpec {
            tau: 7.0,
            alpha: 2.5,
            amplitude: 2.0 * 7f64.powi(3),
        }
    }

    /// Expected `|c_k|^2` of the Fourier coefficient of wavevector `k`
    /// (on a domain of side `extent`). The mean mode carries no weight.
    pub fn weight(&self, k: [i64; 2], extent: f64) -> f64 {
        if k == [0, 0] {
            return 0.0;
        }
        let k2 = ((k[0] * k[0] + k[1] * k[1]) as f64) / (extent * extent);
        self.amplitude * (4.0 * PI * PI * k2 + self.tau * self.tau).powf(-self.alpha)
    }
}

/// Hermitian-symmetric random Fourier coefficients on the FFT bins of `grid`,
/// normalized so that `u(x) = sum_k c_k exp(2 pi i k.x)`.
pub fn sample_grf_coefficients<R: Rng + ?Sized>(
    spec: &GrfSpec,
    grid: &Grid,
    rng: &mut R,
) -> Result<Vec<Complex64>> {
    if grid.dim() != 2 || !grid.boundary().is_periodic() {
        return Err(Error::InvalidGrid(
            "the random field sampler needs a 2D periodic grid".into(),
        ));
    }
    let (n0, n1) = (grid.resolution(0), grid.resolution(1));
    let extent = grid.extent(0);
    let mut c = vec![Complex64::new(0.0, 0.0); n0 * n1];
    for i in 0..n0 {
        for j in 0..n1 {
            let (ci, cj) = ((n0 - i) % n0, (n1 - j) % n1);
            let here = i * n1 + j;
            let partner = ci * n1 + cj;
            if partner < here {
                continue;
            }
            let w = spec.weight([wavenumber(i, n0), wavenumber(j, n1)], extent);
            let a: f64 = rng.sample(StandardNormal);
            if partner == here {
                c[here] = Complex64::new(w.sqrt() * a, 0.0);
            } else {
                let b: f64 = rng.sample(StandardNormal);
                let z = Complex64::new(a, b) * (0.5 * w).sqrt();
                c[here] = z;
                c[partner] = z.conj();
            }
        }
    }
    Ok(c)
}

/// Sample a real periodic Gaussian random field on a 2D periodic grid.
pub fn sample_grf<R: Rng + ?Sized>(spec: &GrfSpec, grid: &Grid, rng: &mut R) -> Result<Field> {
    let coeffs = sample_grf_coefficients(spec, grid, rng)?;
    let (field, _) = synthesize(grid, coeffs);
    Field::new(*grid, field)
}

/// Inverse transform of coefficients; returns the real part and the largest
/// imaginary residue.
pub(crate) fn synthesize(grid: &Grid, coeffs: Vec<Complex64>) -> (Vec<f64>, f64) {
    let (n0, n1) = (grid.resolution(0), grid.resolution(1));
    let fft = Fft2::new(n0, n1);
    let scale = (n0 * n1) as f64;
    let mut buf: Vec<Complex64> = coeffs.into_iter().map(|z| z * scale).collect();
    fft.inverse_in_place(&mut buf);
    let residue = buf.iter().fold(0.0_f64, |m, z| m.max(z.im.abs()));
    (buf.into_iter().map(|z| z.re).collect(), residue)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::BoundaryKind;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn single_term_is_a_sine() {
        let g = Grid::line(64, 1.0, BoundaryKind::Periodic).unwrap();
        let f = FourierSeriesIC::with_coefficients(vec![1.0])
            .unwrap()
            .on_grid(&g)
            .unwrap();
        for (p, v) in f.values().iter().enumerate() {
            assert!((v - (2.0 * PI * g.point(p)[0]).sin()).abs() < 1e-15);
        }
    }

    #[test]
    fn sine_series_vanishes_at_origin() {
        let g = Grid::line(64, 1.0, BoundaryKind::Periodic).unwrap();
        for seed in 0..20 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let f = sample_fourier_ic(7, &g, &mut rng).unwrap();
            assert_eq!(f.get(0), 0.0);
        }
    }

    #[test]
    fn sine_series_energy_matches_uniform_law() {
        let g = Grid::line(64, 1.0, BoundaryKind::Periodic).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let trials = 10_000;
        let mut energy = 0.0;
        for _ in 0..trials {
            let f = sample_fourier_ic(5, &g, &mut rng).unwrap();
            energy += f.values().iter().map(|v| v * v).sum::<f64>() / 64.0;
        }
        energy /= trials as f64;
        assert!((energy / (5.0 / 6.0) - 1.0).abs() < 0.03, "energy {energy}");
    }

    #[test]
    fn sine_series_rejects_2d() {
        let g = Grid::square(8, 1.0, BoundaryKind::Periodic).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(sample_fourier_ic(3, &g, &mut rng).is_err());
    }

    #[test]
    fn coefficients_lie_in_open_unit_interval() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let ic = FourierSeriesIC::sample(1000, &mut rng).unwrap();
        assert!(ic.coefficients().iter().all(|&a| a > 0.0 && a < 1.0));
    }

    #[test]
    fn grf_is_real_mean_free_and_deterministic() {
        let g = Grid::square(32, 1.0, BoundaryKind::Periodic).unwrap();
        let spec = GrfSpec::default();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let coeffs = sample_grf_coefficients(&spec, &g, &mut rng).unwrap();
        let (vals, residue) = synthesize(&g, coeffs);
        assert!(residue < 1e-10);
        let mean = vals.iter().sum::<f64>() / vals.len() as f64;
        assert!(mean.abs() < 1e-10);
        let a = sample_grf(&spec, &g, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        let b = sample_grf(&spec, &g, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn grf_weight_ratio() {
        let spec = GrfSpec::default();
        let ratio = spec.weight([1, 0], 1.0) / spec.weight([2, 0], 1.0);
        let expect = ((4.0 * PI * PI + 49.0) / (16.0 * PI * PI + 49.0)).powf(-2.5);
        assert!((ratio / expect - 1.0).abs() < 1e-12);
        assert!(spec.weight([1, 1], 1.0) < spec.weight([1, 0], 1.0));
    }

    #[test]
    fn grf_rejects_bounded_grids() {
        let g = Grid::square(8, 1.0, BoundaryKind::NeumannZero).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(sample_grf(&GrfSpec::default(), &g, &mut rng).is_err());
        let line = Grid::line(8, 1.0, BoundaryKind::Periodic).unwrap();
        assert!(sample_grf(&GrfSpec::default(), &line, &mut rng).is_err());
    }

    fn mode_power(n: usize, samples: usize, k: [usize; 2], seed: u64) -> f64 {
        let g = Grid::square(n, 1.0, BoundaryKind::Periodic).unwrap();
        let spec = GrfSpec::default();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut acc = 0.0;
        for _ in 0..samples {
            let c = sample_grf_coefficients(&spec, &g, &mut rng).unwrap();
            acc += c[k[0] * n + k[1]].norm_sqr();
        }
        acc / samples as f64
    }

    #[test]
    fn grf_shell_variance_matches_weights_and_is_resolution_independent() {
        let spec = GrfSpec::default();
        let samples = 2000;
        for (k, kk) in [([1usize, 0usize], [1i64, 0i64]), ([2, 1], [2, 1])] {
            let expect = spec.weight(kk, 1.0);
            let coarse = mode_power(16, samples, k, 1);
            let fine = mode_power(32, samples, k, 2);
            // |c|^2 is exponential with mean w: relative sd 1/sqrt(samples)
            let tol = 5.0 / (samples as f64).sqrt();
            assert!(
                (coarse / expect - 1.0).abs() < tol,
                "coarse {coarse} vs {expect}"
            );
            assert!((fine / expect - 1.0).abs() < tol, "fine {fine} vs {expect}");
        }
    }
}
