//! FFT plumbing, band-limited up-sampling and off-grid evaluation.
//!
//! Periodic fields are interpolated with the truncated Fourier series (the
//! Nyquist mode of an even-length grid is split evenly between `+n/2` and
//! `-n/2`, so the interpolant is real and reproduces the samples). Bounded
//! fields are up-sampled through an odd (Dirichlet) or even (Neumann)
//! extension and evaluated off-grid by linear interpolation.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::grid::{BoundaryKind, Field, Grid};

/// Largest refinement factor accepted by [`spectral_interpolate`].
pub const DEFAULT_UPSAMPLE_CAP: usize = 16;

/// Signed wavenumber of FFT bin `i` on an `n`-point transform. The Nyquist bin
/// of an even transform maps to `+n/2`.
#[inline]
pub fn wavenumber(i: usize, n: usize) -> i64 {
    if i <= n / 2 {
        i as i64
    } else {
        i as i64 - n as i64
    }
}

/// Forward/inverse plans for one transform length.
#[derive(Clone)]
pub struct Fft1 {
    n: usize,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl Fft1 {
    pub fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        Fft1 {
            n,
            fwd: planner.plan_fft_forward(n),
            inv: planner.plan_fft_inverse(n),
        }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Unnormalized forward transform of real samples.
    pub fn forward(&self, x: &[f64]) -> Vec<Complex64> {
        let mut buf: Vec<Complex64> = x.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.fwd.process(&mut buf);
        buf
    }

    pub fn forward_in_place(&self, buf: &mut [Complex64]) {
        self.fwd.process(buf);
    }

    /// Inverse transform including the `1/n` factor.
    pub fn inverse_in_place(&self, buf: &mut [Complex64]) {
        self.inv.process(buf);
        let s = 1.0 / self.n as f64;
        for v in buf.iter_mut() {
            *v *= s;
        }
    }

    pub fn inverse_real(&self, mut spec: Vec<Complex64>) -> Vec<f64> {
        self.inverse_in_place(&mut spec);
        spec.into_iter().map(|c| c.re).collect()
    }
}

/// Row-major 2D transforms on an `n0 x n1` array.
#[derive(Clone)]
pub struct Fft2 {
    n0: usize,
    n1: usize,
    ax0: Fft1,
    ax1: Fft1,
}

impl Fft2 {
    pub fn new(n0: usize, n1: usize) -> Self {
        Fft2 {
            n0,
            n1,
            ax0: Fft1::new(n0),
            ax1: Fft1::new(n1),
        }
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.n0, self.n1)
    }

    pub fn forward(&self, x: &[f64]) -> Vec<Complex64> {
        let mut buf: Vec<Complex64> = x.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.forward_in_place(&mut buf);
        buf
    }

    pub fn forward_in_place(&self, buf: &mut [Complex64]) {
        for row in buf.chunks_exact_mut(self.n1) {
            self.ax1.fwd.process(row);
        }
        let mut col = vec![Complex64::new(0.0, 0.0); self.n0];
        for j in 0..self.n1 {
            for i in 0..self.n0 {
                col[i] = buf[i * self.n1 + j];
            }
            self.ax0.fwd.process(&mut col);
            for i in 0..self.n0 {
                buf[i * self.n1 + j] = col[i];
            }
        }
    }

    /// Inverse transform including the `1/(n0 n1)` factor.
    pub fn inverse_in_place(&self, buf: &mut [Complex64]) {
        for row in buf.chunks_exact_mut(self.n1) {
            self.ax1.inv.process(row);
        }
        let mut col = vec![Complex64::new(0.0, 0.0); self.n0];
        for j in 0..self.n1 {
            for i in 0..self.n0 {
                col[i] = buf[i * self.n1 + j];
            }
            self.ax0.inv.process(&mut col);
            for i in 0..self.n0 {
                buf[i * self.n1 + j] = col[i];
            }
        }
        let s = 1.0 / (self.n0 * self.n1) as f64;
        for v in buf.iter_mut() {
            *v *= s;
        }
    }

    pub fn inverse_real(&self, mut spec: Vec<Complex64>) -> Vec<f64> {
        self.inverse_in_place(&mut spec);
        spec.into_iter().map(|c| c.re).collect()
    }
}

/// Fourier zero-padding of one periodic line from `n` to `n * factor` samples.
fn upsample_periodic_line(x: &[f64], factor: usize, small: &Fft1, large: &Fft1) -> Vec<f64> {
    let n = x.len();
    let m = n * factor;
    let spec = small.forward(x);
    let mut padded = vec![Complex64::new(0.0, 0.0); m];
    for (i, &c) in spec.iter().enumerate() {
        if n % 2 == 0 && i == n / 2 {
            padded[n / 2] += 0.5 * c;
            padded[m - n / 2] += 0.5 * c;
        } else {
            let k = wavenumber(i, n);
            padded[k.rem_euclid(m as i64) as usize] = c;
        }
    }
    large.inv.process(&mut padded);
    let s = 1.0 / n as f64;
    padded.into_iter().map(|c| c.re * s).collect()
}

/// Up-sample one bounded line through its odd/even extension.
fn upsample_bounded_line(
    x: &[f64],
    factor: usize,
    odd: bool,
    small: &Fft1,
    large: &Fft1,
) -> Vec<f64> {
    let n = x.len();
    let period = 2 * (n - 1);
    let mut ext = Vec::with_capacity(period);
    ext.extend_from_slice(x);
    for j in (1..n - 1).rev() {
        ext.push(if odd { -x[j] } else { x[j] });
    }
    let mut fine = upsample_periodic_line(&ext, factor, small, large);
    fine.truncate((n - 1) * factor + 1);
    fine
}

struct LineUpsampler {
    boundary: BoundaryKind,
    factor: usize,
    small: Fft1,
    large: Fft1,
}

impl LineUpsampler {
    fn new(n: usize, factor: usize, boundary: BoundaryKind) -> Self {
        let period = if boundary.is_periodic() {
            n
        } else {
            2 * (n - 1)
        };
        LineUpsampler {
            boundary,
            factor,
            small: Fft1::new(period),
            large: Fft1::new(period * factor),
        }
    }

    fn apply(&self, x: &[f64]) -> Vec<f64> {
        match self.boundary {
            BoundaryKind::Periodic => {
                upsample_periodic_line(x, self.factor, &self.small, &self.large)
            }
            BoundaryKind::DirichletZero => {
                upsample_bounded_line(x, self.factor, true, &self.small, &self.large)
            }
            BoundaryKind::NeumannZero => {
                upsample_bounded_line(x, self.factor, false, &self.small, &self.large)
            }
        }
    }
}

/// Band-limited refinement by `factor` (a power of two, at most
/// [`DEFAULT_UPSAMPLE_CAP`]).
pub fn spectral_interpolate(field: &Field, factor: usize) -> Result<Field> {
    spectral_interpolate_capped(field, factor, DEFAULT_UPSAMPLE_CAP)
}

/// [`spectral_interpolate`] with an explicit cap on the factor.
pub fn spectral_interpolate_capped(field: &Field, factor: usize, cap: usize) -> Result<Field> {
    if factor == 0 || !factor.is_power_of_two() {
        return Err(Error::arg(
            "factor",
            format!("{factor} is not a power of two"),
        ));
    }
    if factor > cap {
        return Err(Error::arg(
            "factor",
            format!("{factor} exceeds the up-sample cap {cap}"),
        ));
    }
    let grid = *field.grid();
    let fine = grid.refined(factor)?;
    if factor == 1 {
        return Ok(field.clone());
    }
    let mut values = Vec::with_capacity(fine.len() * field.components());
    for c in 0..field.components() {
        values.extend(upsample_component(field.component(c), &grid, &fine, factor));
    }
    Ok(Field::from_parts_unchecked(
        fine,
        field.components(),
        values,
    ))
}

fn upsample_component(x: &[f64], grid: &Grid, fine: &Grid, factor: usize) -> Vec<f64> {
    let b = grid.boundary();
    if grid.dim() == 1 {
        let up = LineUpsampler::new(grid.resolution(0), factor, b);
        return up.apply(x);
    }
    let (n0, n1) = (grid.resolution(0), grid.resolution(1));
    let (m0, m1) = (fine.resolution(0), fine.resolution(1));
    let up1 = LineUpsampler::new(n1, factor, b);
    let mut stage = vec![0.0; n0 * m1];
    for i in 0..n0 {
        let row = up1.apply(&x[i * n1..(i + 1) * n1]);
        stage[i * m1..(i + 1) * m1].copy_from_slice(&row);
    }
    let up0 = LineUpsampler::new(n0, factor, b);
    let mut out = vec![0.0; m0 * m1];
    let mut col = vec![0.0; n0];
    for j in 0..m1 {
        for i in 0..n0 {
            col[i] = stage[i * m1 + j];
        }
        let fine_col = up0.apply(&col);
        for (i, v) in fine_col.into_iter().enumerate() {
            out[i * m1 + j] = v;
        }
    }
    out
}

/// Interpolation weights along one axis for the off-grid coordinate `x`, as
/// `(index, weight)` pairs in ascending index order.
///
/// Periodic axes use the band-limited (periodic sinc) kernel, so the weights
/// are dense; bounded axes use linear interpolation. A coordinate within
/// `1e-12` cells of a node collapses to that node exactly.
pub fn axis_weights(grid: &Grid, axis: usize, x: f64) -> Vec<(usize, f64)> {
    let n = grid.resolution(axis);
    let h = grid.spacing(axis);
    let t = x / h;
    let nearest = t.round();
    if grid.boundary().is_periodic() {
        if (t - nearest).abs() < 1e-12 {
            let i = (nearest as i64).rem_euclid(n as i64) as usize;
            return vec![(i, 1.0)];
        }
        let nf = n as f64;
        let t = t.rem_euclid(nf);
        let fl = t.floor();
        let s = (std::f64::consts::PI * (t - fl)).sin();
        let parity = fl as usize % 2;
        (0..n)
            .map(|q| {
                // sin(pi (q - t)) = -(-1)^(q - floor t) sin(pi frac t)
                let sign = if (q + parity) % 2 == 0 { -1.0 } else { 1.0 };
                let arg = std::f64::consts::PI * (q as f64 - t) / nf;
                let den = if n % 2 == 0 {
                    nf * arg.tan()
                } else {
                    nf * arg.sin()
                };
                (q, sign * s / den)
            })
            .collect()
    } else {
        if (t - nearest).abs() < 1e-12 && nearest >= 0.0 && nearest <= (n - 1) as f64 {
            return vec![(nearest as usize, 1.0)];
        }
        let i = (t.floor().max(0.0) as usize).min(n - 2);
        let frac = (t - i as f64).clamp(0.0, 1.0);
        vec![(i, 1.0 - frac), (i + 1, frac)]
    }
}

/// Weights of the off-grid evaluation at `x`, as a list of
/// `(point index, weight)` in ascending index order.
pub fn point_weights(grid: &Grid, x: [f64; 2]) -> Vec<(usize, f64)> {
    let w0 = axis_weights(grid, 0, x[0]);
    if grid.dim() == 1 {
        return w0;
    }
    let w1 = axis_weights(grid, 1, x[1]);
    let mut out = Vec::with_capacity(w0.len() * w1.len());
    for &(i, a) in &w0 {
        for &(j, b) in &w1 {
            out.push((grid.ravel([i, j]), a * b));
        }
    }
    out
}

/// Evaluate samples `values` (one component on `grid`) at an arbitrary point.
pub fn eval_at(grid: &Grid, values: &[f64], x: [f64; 2]) -> f64 {
    let w0 = axis_weights(grid, 0, x[0]);
    if grid.dim() == 1 {
        return w0.iter().fold(0.0, |acc, &(i, w)| acc + w * values[i]);
    }
    let w1 = axis_weights(grid, 1, x[1]);
    let n1 = grid.resolution(1);
    let mut acc = 0.0;
    for &(i, a) in &w0 {
        let row = &values[i * n1..(i + 1) * n1];
        let inner = w1.iter().fold(0.0, |s, &(j, b)| s + b * row[j]);
        acc += a * inner;
    }
    acc
}

/// Fourier coefficients `c_k` (normalized by `1/n`) of a periodic 1D field,
/// indexed by FFT bin.
pub fn fourier_coefficients_1d(values: &[f64]) -> Vec<Complex64> {
    let fft = Fft1::new(values.len());
    let s = 1.0 / values.len() as f64;
    fft.forward(values).into_iter().map(|c| c * s).collect()
}

/// Trigonometric interpolant of a periodic 1D field, evaluated by recurrence.
///
/// Agrees with [`eval_at`] on periodic lines up to rounding, at `O(n)` cost
/// without transcendental calls per term.
#[derive(Clone, Debug)]
pub struct TrigInterpolant {
    mean: f64,
    /// `2 c_k` for `k = 1..n/2` (the Nyquist entry halved back to `c_{n/2}`).
    coefficients: Vec<Complex64>,
    extent: f64,
}

impl TrigInterpolant {
    pub fn new(values: &[f64], extent: f64) -> Self {
        let n = values.len();
        let c = fourier_coefficients_1d(values);
        let coefficients = (1..=n / 2)
            .map(|k| {
                if 2 * k == n {
                    Complex64::new(c[k].re, 0.0)
                } else {
                    2.0 * c[k]
                }
            })
            .collect();
        TrigInterpolant {
            mean: c[0].re,
            coefficients,
            extent,
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        let theta = 2.0 * std::f64::consts::PI * x / self.extent;
        let z = Complex64::new(theta.cos(), theta.sin());
        let mut zk = z;
        let mut acc = self.mean;
        for c in &self.coefficients {
            acc += c.re * zk.re - c.im * zk.im;
            zk *= z;
        }
        acc
    }
}
