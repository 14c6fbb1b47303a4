//! Uniform 1D/2D sample grids, fields living on them, and closed-ball
//! neighborhood queries under the boundary-appropriate metric.
//!
//! Point indices are row-major: in 2D the linear index of `(i, j)` is
//! `i * n1 + j`, where `i` runs along the first coordinate `x1`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Smallest admissible resolution per axis.
pub const MIN_RESOLUTION: usize = 4;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryKind {
    /// Torus; the duplicated right endpoint is omitted.
    Periodic,
    /// Homogeneous Dirichlet (absorbing walls).
    DirichletZero,
    /// Homogeneous Neumann (reflecting walls).
    NeumannZero,
}

impl BoundaryKind {
    pub fn is_periodic(self) -> bool {
        matches!(self, BoundaryKind::Periodic)
    }

    pub fn name(self) -> &'static str {
        match self {
            BoundaryKind::Periodic => "periodic",
            BoundaryKind::DirichletZero => "dirichlet_zero",
            BoundaryKind::NeumannZero => "neumann_zero",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "periodic" => Ok(BoundaryKind::Periodic),
            "dirichlet" | "dirichlet_zero" | "dirichletzero" => Ok(BoundaryKind::DirichletZero),
            "neumann" | "neumann_zero" | "neumannzero" => Ok(BoundaryKind::NeumannZero),
            other => Err(Error::Config(format!("unknown boundary kind `{other}`"))),
        }
    }
}

/// A uniform rectangular grid. Axis data beyond `dim` is unused.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    dim: usize,
    resolution: [usize; 2],
    extent: [f64; 2],
    boundary: BoundaryKind,
}

/// Build a grid with the same resolution and extent on every axis.
pub fn make_grid(
    dim: usize,
    resolution: usize,
    extent: f64,
    boundary: BoundaryKind,
) -> Result<Grid> {
    Grid::new(dim, resolution, extent, boundary)
}

impl Grid {
    pub fn new(dim: usize, resolution: usize, extent: f64, boundary: BoundaryKind) -> Result<Self> {
        if !(1..=2).contains(&dim) {
            return Err(Error::InvalidGrid(format!(
                "dimension must be 1 or 2, got {dim}"
            )));
        }
        let res = if dim == 1 {
            [resolution, 1]
        } else {
            [resolution, resolution]
        };
        let ext = if dim == 1 {
            [extent, 1.0]
        } else {
            [extent, extent]
        };
        Self::with_axes(dim, res, ext, boundary)
    }

    pub fn line(resolution: usize, extent: f64, boundary: BoundaryKind) -> Result<Self> {
        Self::new(1, resolution, extent, boundary)
    }

    pub fn square(resolution: usize, extent: f64, boundary: BoundaryKind) -> Result<Self> {
        Self::new(2, resolution, extent, boundary)
    }

    pub fn with_axes(
        dim: usize,
        resolution: [usize; 2],
        extent: [f64; 2],
        boundary: BoundaryKind,
    ) -> Result<Self> {
        for axis in 0..dim {
            if resolution[axis] < MIN_RESOLUTION {
                return Err(Error::InvalidGrid(format!(
                    "resolution {} on axis {axis} is below {MIN_RESOLUTION}",
                    resolution[axis]
                )));
            }
            if !(extent[axis] > 0.0 && extent[axis].is_finite()) {
                return Err(Error::InvalidGrid(format!(
                    "extent {} on axis {axis} must be positive",
                    extent[axis]
                )));
            }
        }
        Ok(Grid {
            dim,
            resolution,
            extent,
            boundary,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn boundary(&self) -> BoundaryKind {
        self.boundary
    }

    pub fn resolution(&self, axis: usize) -> usize {
        self.resolution[axis]
    }

    pub fn extent(&self, axis: usize) -> f64 {
        self.extent[axis]
    }

    /// Number of grid points.
    pub fn len(&self) -> usize {
        self.resolution[..self.dim].iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn spacing(&self, axis: usize) -> f64 {
        let n = self.resolution[axis] as f64;
        if self.boundary.is_periodic() {
            self.extent[axis] / n
        } else {
            self.extent[axis] / (n - 1.0)
        }
    }

    /// Nominal cell volume: product of the per-axis spacings.
    pub fn cell_volume(&self) -> f64 {
        (0..self.dim).map(|a| self.spacing(a)).product()
    }

    /// Quadrature weight of a point. Equal to [`Grid::cell_volume`] on periodic
    /// grids; bounded grids halve the weight per axis on the walls
    /// (trapezoidal rule), so the half-cells outside the domain are not counted.
    pub fn node_volume(&self, index: usize) -> f64 {
        let idx = self.unravel(index);
        (0..self.dim)
            .map(|a| self.axis_node_weight(a, idx[a]))
            .product()
    }

    pub(crate) fn axis_node_weight(&self, axis: usize, i: usize) -> f64 {
        let h = self.spacing(axis);
        if !self.boundary.is_periodic() && (i == 0 || i + 1 == self.resolution[axis]) {
            0.5 * h
        } else {
            h
        }
    }

    pub fn coord(&self, axis: usize, i: usize) -> f64 {
        i as f64 * self.spacing(axis)
    }

    pub fn unravel(&self, index: usize) -> [usize; 2] {
        if self.dim == 1 {
            [index, 0]
        } else {
            [index / self.resolution[1], index % self.resolution[1]]
        }
    }

    pub fn ravel(&self, idx: [usize; 2]) -> usize {
        if self.dim == 1 {
            idx[0]
        } else {
            idx[0] * self.resolution[1] + idx[1]
        }
    }

    /// Coordinates of a point; the second entry is 0 in 1D.
    pub fn point(&self, index: usize) -> [f64; 2] {
        let idx = self.unravel(index);
        let mut x = [0.0; 2];
        for (a, xa) in x.iter_mut().enumerate().take(self.dim) {
            *xa = self.coord(a, idx[a]);
        }
        x
    }

    pub fn points(&self) -> impl Iterator<Item = [f64; 2]> + '_ {
        (0..self.len()).map(move |p| self.point(p))
    }

    /// The grid with the same extent and `factor` times finer spacing.
    pub fn refined(&self, factor: usize) -> Result<Grid> {
        if factor == 0 {
            return Err(Error::arg("factor", "must be positive"));
        }
        let mut res = self.resolution;
        for r in res.iter_mut().take(self.dim) {
            *r = if self.boundary.is_periodic() {
                *r * factor
            } else {
                (*r - 1) * factor + 1
            };
        }
        Grid::with_axes(self.dim, res, self.extent, self.boundary)
    }

    /// Whether `x` lies in the closed domain (periodic grids accept anything).
    pub fn contains(&self, x: [f64; 2]) -> bool {
        if self.boundary.is_periodic() {
            return x[..self.dim].iter().all(|v| v.is_finite());
        }
        (0..self.dim).all(|a| x[a] >= 0.0 && x[a] <= self.extent[a])
    }

    /// Map a periodic coordinate into `[0, extent)`. Identity on bounded grids.
    pub fn wrap(&self, mut x: [f64; 2]) -> [f64; 2] {
        if self.boundary.is_periodic() {
            for (a, xa) in x.iter_mut().enumerate().take(self.dim) {
                let l = self.extent[a];
                let mut w = xa.rem_euclid(l);
                if w >= l {
                    w = 0.0;
                }
                *xa = w;
            }
        }
        x
    }

    /// Candidate points along one axis within distance `r` of `c`, as
    /// `(index, x_i - c)`; the displacement is the minimal image on tori.
    pub(crate) fn axis_candidates(&self, axis: usize, c: f64, r: f64) -> Vec<(usize, f64)> {
        let n = self.resolution[axis];
        let h = self.spacing(axis);
        let lo = ((c - r) / h).floor() as i64;
        let hi = ((c + r) / h).ceil() as i64;
        let mut out = Vec::new();
        if self.boundary.is_periodic() {
            let l = self.extent[axis];
            if (hi - lo + 1) as usize >= n {
                for i in 0..n {
                    let mut d = (i as f64 * h - c).rem_euclid(l);
                    if d >= 0.5 * l {
                        d -= l;
                    }
                    if d.abs() <= r {
                        out.push((i, d));
                    }
                }
            } else {
                for k in lo..=hi {
                    let d = k as f64 * h - c;
                    if d.abs() <= r {
                        out.push((k.rem_euclid(n as i64) as usize, d));
                    }
                }
            }
        } else {
            let lo = lo.max(0);
            let hi = hi.min(n as i64 - 1);
            for k in lo..=hi {
                let d = k as f64 * h - c;
                if d.abs() <= r {
                    out.push((k as usize, d));
                }
            }
        }
        out
    }

    /// Visit every point within the closed ball of radius `r` around `center`,
    /// passing its index and displacement `x_p - center`.
    pub(crate) fn for_each_in_ball(
        &self,
        center: [f64; 2],
        r: f64,
        mut f: impl FnMut(usize, [f64; 2]),
    ) {
        let r2 = r * r;
        let c0 = self.axis_candidates(0, center[0], r);
        if self.dim == 1 {
            for &(i, d) in &c0 {
                if d * d <= r2 {
                    f(i, [d, 0.0]);
                }
            }
            return;
        }
        let c1 = self.axis_candidates(1, center[1], r);
        let n1 = self.resolution[1];
        for &(i, d0) in &c0 {
            for &(j, d1) in &c1 {
                if d0 * d0 + d1 * d1 <= r2 {
                    f(i * n1 + j, [d0, d1]);
                }
            }
        }
    }
}

/// Indices `p` with `|x_p - center| <= r`, ascending. Ties are included.
pub fn neighborhood(grid: &Grid, center: [f64; 2], r: f64) -> Vec<usize> {
    let mut out = Vec::new();
    if r.is_nan() || r < 0.0 {
        return out;
    }
    grid.for_each_in_ball(center, r, |p, _| out.push(p));
    out.sort_unstable();
    out
}

/// Samples on a grid. Vector fields store one contiguous slab per component.
#[derive(Clone, Debug, PartialEq)]
pub struct Field {
    grid: Grid,
    components: usize,
    values: Vec<f64>,
}

impl Field {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        Self::with_components(grid, 1, values)
    }

    pub fn with_components(grid: Grid, components: usize, values: Vec<f64>) -> Result<Self> {
        if components == 0 {
            return Err(Error::ShapeMismatch(
                "a field needs at least one component".into(),
            ));
        }
        if values.len() != grid.len() * components {
            return Err(Error::ShapeMismatch(format!(
                "expected {} values ({} points x {components}), got {}",
                grid.len() * components,
                grid.len(),
                values.len()
            )));
        }
        if let Some(p) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::ShapeMismatch(format!(
                "non-finite sample at position {p}"
            )));
        }
        Ok(Field {
            grid,
            components,
            values,
        })
    }

    pub fn zeros(grid: Grid) -> Self {
        Field {
            grid,
            components: 1,
            values: vec![0.0; grid.len()],
        }
    }

    pub fn constant(grid: Grid, value: f64) -> Self {
        Field {
            grid,
            components: 1,
            values: vec![value; grid.len()],
        }
    }

    pub fn from_fn(grid: Grid, f: impl Fn([f64; 2]) -> f64) -> Self {
        let values = grid.points().map(f).collect();
        Field {
            grid,
            components: 1,
            values,
        }
    }

    /// Stack scalar fields on the same grid into a vector field.
    pub fn stack(parts: &[Field]) -> Result<Self> {
        let first = parts
            .first()
            .ok_or_else(|| Error::ShapeMismatch("cannot stack zero fields".into()))?;
        let mut values = Vec::with_capacity(first.grid.len() * parts.len());
        for p in parts {
            if p.grid != first.grid || p.components != 1 {
                return Err(Error::ShapeMismatch(
                    "stacked fields must be scalar on one grid".into(),
                ));
            }
            values.extend_from_slice(&p.values);
        }
        Ok(Field {
            grid: first.grid,
            components: parts.len(),
            values,
        })
    }

    pub(crate) fn from_parts_unchecked(grid: Grid, components: usize, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.len() * components);
        Field {
            grid,
            components,
            values,
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn components(&self) -> usize {
        self.components
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn component(&self, c: usize) -> &[f64] {
        let n = self.grid.len();
        &self.values[c * n..(c + 1) * n]
    }

    pub fn component_field(&self, c: usize) -> Field {
        Field {
            grid: self.grid,
            components: 1,
            values: self.component(c).to_vec(),
        }
    }

    pub fn get(&self, index: usize) -> f64 {
        self.values[index]
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    pub fn l2_norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Field {
        Field {
            grid: self.grid,
            components: self.components,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Every `stride`-th sample per axis, for grids that are exact refinements.
    pub fn subsample(&self, stride: usize) -> Result<Field> {
        if stride == 0 {
            return Err(Error::arg("stride", "must be positive"));
        }
        let g = &self.grid;
        let mut res = [1usize; 2];
        for (a, r) in res.iter_mut().enumerate().take(g.dim()) {
            let n = g.resolution(a);
            *r = if g.boundary().is_periodic() {
                if n % stride != 0 {
                    return Err(Error::arg(
                        "stride",
                        format!("{stride} does not divide {n}"),
                    ));
                }
                n / stride
            } else {
                if (n - 1) % stride != 0 {
                    return Err(Error::arg(
                        "stride",
                        format!("{stride} does not divide {}", n - 1),
                    ));
                }
                (n - 1) / stride + 1
            };
        }
        let coarse = Grid::with_axes(g.dim(), res, [g.extent(0), g.extent(1)], g.boundary())?;
        let mut values = Vec::with_capacity(coarse.len() * self.components);
        for c in 0..self.components {
            let src = self.component(c);
            for p in 0..coarse.len() {
                let idx = coarse.unravel(p);
                let fine = g.ravel([idx[0] * stride, idx[1] * stride]);
                values.push(src[fine]);
            }
        }
        Ok(Field::from_parts_unchecked(coarse, self.components, values))
    }
}
