//! Benchmark PDEs written in the template
//! `du/dt = beta[u] . grad u + kappa * Laplacian u + f`.
//!
//! | problem | drift `beta` | diffusivity | forcing |
//! |---|---|---|---|
//! | convection-diffusion | constant `beta` | `kappa` | none |
//! | Allen-Cahn | 0 | `kappa` (0.01) | `u - u^3` |
//! | Navier-Stokes (vorticity) | `-velocity(omega)` | `nu` | Li or Kolmogorov |

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{BoundaryKind, Field, Grid};
use crate::kv::{self, KvMap};
use crate::spectral::{eval_at, wavenumber, Fft2};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NsForcing {
    /// `0.1 sin(2 pi (x1 + x2)) + 0.1 cos(2 pi (x1 + x2))`
    Li,
    /// `0.1 cos(8 pi x1)`
    Kolmogorov,
    None,
}

impl NsForcing {
    pub fn parse(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "li" => Ok(NsForcing::Li),
            "kolmogorov" => Ok(NsForcing::Kolmogorov),
            "none" => Ok(NsForcing::None),
            other => Err(Error::Config(format!("unknown forcing `{other}`"))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            NsForcing::Li => "li",
            NsForcing::Kolmogorov => "kolmogorov",
            NsForcing::None => "none",
        }
    }

    pub fn eval(self, x: [f64; 2]) -> f64 {
        match self {
            NsForcing::Li => {
                let s = 2.0 * PI * (x[0] + x[1]);
                0.1 * s.sin() + 0.1 * s.cos()
            }
            NsForcing::Kolmogorov => 0.1 * (8.0 * PI * x[0]).cos(),
            NsForcing::None => 0.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum PdeKind {
    ConvectionDiffusion { beta: f64, kappa: f64 },
    AllenCahn { kappa: f64 },
    NavierStokesVorticity { nu: f64, forcing: NsForcing },
}

/// How the source term `f` is evaluated.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ForcingEval {
    None,
    Li,
    Kolmogorov,
    /// `u - u^3`, needs the state.
    Reaction,
}

impl ForcingEval {
    pub fn is_state_dependent(self) -> bool {
        matches!(self, ForcingEval::Reaction)
    }

    /// Value at `x` for time-independent forcings, or from the state sample
    /// `u` for the reaction term.
    pub fn value(self, x: [f64; 2], u: Option<f64>) -> Result<f64> {
        Ok(match self {
            ForcingEval::None => 0.0,
            ForcingEval::Li => NsForcing::Li.eval(x),
            ForcingEval::Kolmogorov => NsForcing::Kolmogorov.eval(x),
            ForcingEval::Reaction => {
                let u = u.ok_or(Error::MissingState)?;
                u - u * u * u
            }
        })
    }

    /// Forcing sampled on every point of `grid`; `None` when identically zero.
    pub fn on_grid(self, grid: &Grid, state: Option<&[f64]>) -> Result<Option<Vec<f64>>> {
        match self {
            ForcingEval::None => Ok(None),
            ForcingEval::Reaction => {
                let s = state.ok_or(Error::MissingState)?;
                Ok(Some(s.iter().map(|&u| u - u * u * u).collect()))
            }
            other => Ok(Some(
                grid.points()
                    .map(|x| other.value(x, None).unwrap_or(0.0))
                    .collect(),
            )),
        }
    }
}

/// A benchmark problem: equation, grid, horizon and number of output frames.
#[derive(Clone, Debug, PartialEq)]
pub struct PdeSpec {
    pub kind: PdeKind,
    pub grid: Grid,
    pub horizon: f64,
    pub frames: usize,
    /// Maximum frequency of the sine-series initial conditions (1D problems).
    pub ic_frequency: Option<usize>,
}

impl PdeSpec {
    /// Periodic convection-diffusion on 64 points of `[0, 1)`, `T = 2`.
    pub fn convection_diffusion(beta: f64, kappa: f64, ic_frequency: usize) -> Result<Self> {
        let spec = PdeSpec {
            kind: PdeKind::ConvectionDiffusion { beta, kappa },
            grid: Grid::line(64, 1.0, BoundaryKind::Periodic)?,
            horizon: 2.0,
            frames: 10,
            ic_frequency: Some(ic_frequency),
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Allen-Cahn with `kappa = 0.01` on 65 points of `[0, 1]`, `T = 1`.
    pub fn allen_cahn(boundary: BoundaryKind, ic_frequency: usize) -> Result<Self> {
        let spec = PdeSpec {
            kind: PdeKind::AllenCahn { kappa: 0.01 },
            grid: Grid::line(65, 1.0, boundary)?,
            horizon: 1.0,
            frames: 10,
            ic_frequency: Some(ic_frequency),
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Vorticity Navier-Stokes on the 64x64 unit torus, `T = 10`.
    pub fn navier_stokes(nu: f64, forcing: NsForcing) -> Result<Self> {
        let spec = PdeSpec {
            kind: PdeKind::NavierStokesVorticity { nu, forcing },
            grid: Grid::square(64, 1.0, BoundaryKind::Periodic)?,
            horizon: 10.0,
            frames: 10,
            ic_frequency: None,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn with_grid(mut self, grid: Grid) -> Result<Self> {
        self.grid = grid;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |name: &'static str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::arg(name, format!("must be positive, got {v}")))
            }
        };
        match self.kind {
            PdeKind::ConvectionDiffusion { beta, kappa } => {
                // kappa = 0 (pure transport) is allowed here
                if !(kappa >= 0.0 && kappa.is_finite()) {
                    return Err(Error::arg(
                        "kappa",
                        format!("must be non-negative, got {kappa}"),
                    ));
                }
                if !beta.is_finite() {
                    return Err(Error::arg("beta", "must be finite"));
                }
                if self.grid.dim() != 1 {
                    return Err(Error::InvalidGrid(
                        "convection-diffusion runs on a line".into(),
                    ));
                }
                // bounded lines carry pure diffusion
                if !self.grid.boundary().is_periodic() && beta != 0.0 {
                    return Err(Error::InvalidGrid(
                        "convection on a bounded line needs beta = 0".into(),
                    ));
                }
            }
            PdeKind::AllenCahn { kappa } => {
                positive("kappa", kappa)?;
                if self.grid.dim() != 1 || self.grid.boundary().is_periodic() {
                    return Err(Error::InvalidGrid(
                        "Allen-Cahn runs on a bounded line".into(),
                    ));
                }
            }
            PdeKind::NavierStokesVorticity { nu, .. } => {
                positive("nu", nu)?;
                if self.grid.dim() != 2 || !self.grid.boundary().is_periodic() {
                    return Err(Error::InvalidGrid(
                        "Navier-Stokes runs on a periodic square".into(),
                    ));
                }
            }
        }
        positive("T", self.horizon)?;
        if self.frames == 0 {
            return Err(Error::arg("frames", "must be positive"));
        }
        Ok(())
    }

    pub fn diffusivity(&self) -> f64 {
        match self.kind {
            PdeKind::ConvectionDiffusion { kappa, .. } | PdeKind::AllenCahn { kappa } => kappa,
            PdeKind::NavierStokesVorticity { nu, .. } => nu,
        }
    }

    pub fn forcing(&self) -> ForcingEval {
        match self.kind {
            PdeKind::ConvectionDiffusion { .. } => ForcingEval::None,
            PdeKind::AllenCahn { .. } => ForcingEval::Reaction,
            PdeKind::NavierStokesVorticity { forcing, .. } => match forcing {
                NsForcing::Li => ForcingEval::Li,
                NsForcing::Kolmogorov => ForcingEval::Kolmogorov,
                NsForcing::None => ForcingEval::None,
            },
        }
    }

    /// Linear in the state with state-independent drift and forcing.
    pub fn is_linear(&self) -> bool {
        matches!(self.kind, PdeKind::ConvectionDiffusion { .. })
    }

    /// Whether the drift depends on the state.
    pub fn has_state_drift(&self) -> bool {
        matches!(self.kind, PdeKind::NavierStokesVorticity { .. })
    }

    /// Output frame spacing `T / frames`.
    pub fn frame_dt(&self) -> f64 {
        self.horizon / self.frames as f64
    }

    pub fn name(&self) -> &'static str {
        match self.kind {
            PdeKind::ConvectionDiffusion { .. } => "convdiff",
            PdeKind::AllenCahn { .. } => "allen_cahn",
            PdeKind::NavierStokesVorticity { .. } => "navier_stokes",
        }
    }

    pub fn to_kv(&self) -> KvMap {
        let mut m = KvMap::new();
        m.insert("pde".into(), self.name().into());
        match self.kind {
            PdeKind::ConvectionDiffusion { beta, kappa } => {
                m.insert("beta".into(), beta.to_string());
                m.insert("kappa".into(), kappa.to_string());
            }
            PdeKind::AllenCahn { kappa } => {
                m.insert("kappa".into(), kappa.to_string());
            }
            PdeKind::NavierStokesVorticity { nu, forcing } => {
                m.insert("nu".into(), nu.to_string());
                m.insert("forcing".into(), forcing.name().into());
            }
        }
        m.insert("boundary".into(), self.grid.boundary().name().into());
        m.insert("grid".into(), self.grid.resolution(0).to_string());
        m.insert("extent".into(), self.grid.extent(0).to_string());
        m.insert("T".into(), self.horizon.to_string());
        m.insert("frames".into(), self.frames.to_string());
        if let Some(n) = self.ic_frequency {
            m.insert("N".into(), n.to_string());
        }
        m
    }

    pub fn from_kv(m: &KvMap) -> Result<Self> {
        let name: String = kv::require(m, "pde")?;
        let (kind, dim, res, boundary, horizon, n) = match name.to_ascii_lowercase().as_str() {
            "convdiff" | "convection_diffusion" => (
                PdeKind::ConvectionDiffusion {
                    beta: kv::get_or(m, "beta", 0.1)?,
                    kappa: kv::require(m, "kappa")?,
                },
                1,
                64,
                BoundaryKind::Periodic,
                2.0,
                Some(5),
            ),
            "allen_cahn" | "allencahn" => {
                let b: String = kv::require(m, "boundary")?;
                (
                    PdeKind::AllenCahn {
                        kappa: kv::get_or(m, "kappa", 0.01)?,
                    },
                    1,
                    65,
                    BoundaryKind::parse(&b)?,
                    1.0,
                    Some(5),
                )
            }
            "navier_stokes" | "ns" => {
                let f: String = kv::get_or(m, "forcing", "li".to_string())?;
                (
                    PdeKind::NavierStokesVorticity {
                        nu: kv::require(m, "nu")?,
                        forcing: NsForcing::parse(&f)?,
                    },
                    2,
                    64,
                    BoundaryKind::Periodic,
                    10.0,
                    None,
                )
            }
            other => return Err(Error::Config(format!("unknown pde `{other}`"))),
        };
        let boundary = match m.get("boundary") {
            Some(b) => BoundaryKind::parse(b)?,
            None => boundary,
        };
        let grid = Grid::new(
            dim,
            kv::get_or(m, "grid", res)?,
            kv::get_or(m, "extent", 1.0)?,
            boundary,
        )?;
        let spec = PdeSpec {
            kind,
            grid,
            horizon: kv::get_or(m, "T", horizon)?,
            frames: kv::get_or(m, "frames", 10)?,
            ic_frequency: kv::get_parsed(m, "N")?.or(n),
        };
        spec.validate()?;
        Ok(spec)
    }

    /// JSON object form of [`PdeSpec::to_kv`], used in file and frame headers.
    pub fn descriptor(&self) -> serde_json::Value {
        let map = self
            .to_kv()
            .into_iter()
            .map(|(k, v)| {
                let val = if let Ok(i) = v.parse::<u64>() {
                    serde_json::json!(i)
                } else {
                    match v.parse::<f64>() {
                        Ok(x) if x.is_finite() => serde_json::json!(x),
                        _ => serde_json::Value::String(v),
                    }
                };
                (k, val)
            })
            .collect();
        serde_json::Value::Object(map)
    }

    pub fn from_descriptor(v: &serde_json::Value) -> Result<Self> {
        let obj = v
            .as_object()
            .ok_or_else(|| Error::Format("pde descriptor must be a JSON object".into()))?;
        let mut m = KvMap::new();
        for (k, val) in obj {
            let s = match val {
                serde_json::Value::String(s) => s.clone(),
                serde_json::Value::Number(n) => {
                    if let Some(i) = n.as_u64() {
                        i.to_string()
                    } else {
                        n.as_f64().unwrap_or(f64::NAN).to_string()
                    }
                }
                other => {
                    return Err(Error::Format(format!(
                        "unsupported descriptor value for `{k}`: {other}"
                    )))
                }
            };
            m.insert(k.clone(), s);
        }
        // integer-valued floats such as `64.0` serialize back as `64`
        for key in ["grid", "frames", "N"] {
            if let Some(v) = m.get_mut(key) {
                if let Ok(x) = v.parse::<f64>() {
                    if x.fract() == 0.0 {
                        *v = (x as u64).to_string();
                    }
                }
            }
        }
        Self::from_kv(&m)
    }
}

/// The drift field `beta[u]` sampled on the grid, one component per axis.
pub fn drift(pde: &PdeSpec, state: &Field) -> Result<Field> {
    check_state(pde, state)?;
    let g = pde.grid;
    let n = g.len();
    match pde.kind {
        PdeKind::ConvectionDiffusion { beta, .. } => Ok(Field::from_parts_unchecked(
            g,
            g.dim(),
            vec![beta; n * g.dim()],
        )),
        PdeKind::AllenCahn { .. } => Ok(Field::from_parts_unchecked(
            g,
            g.dim(),
            vec![0.0; n * g.dim()],
        )),
        PdeKind::NavierStokesVorticity { .. } => Ok(velocity_from_vorticity(state)?.map(|v| -v)),
    }
}

fn check_state(pde: &PdeSpec, state: &Field) -> Result<()> {
    if state.grid() != &pde.grid || state.components() != 1 {
        return Err(Error::ShapeMismatch(
            "state must be a scalar field on the PDE grid".into(),
        ));
    }
    Ok(())
}

/// Recover the divergence-free velocity `u = (d psi/dx2, -d psi/dx1)` from the
/// vorticity through `Laplacian psi = -omega`; the mean of `omega` is dropped.
pub fn velocity_from_vorticity(omega: &Field) -> Result<Field> {
    let g = *omega.grid();
    if g.dim() != 2 || !g.boundary().is_periodic() || omega.components() != 1 {
        return Err(Error::InvalidGrid(
            "vorticity must be a scalar field on a periodic square".into(),
        ));
    }
    let (n0, n1) = (g.resolution(0), g.resolution(1));
    let fft = Fft2::new(n0, n1);
    let w = fft.forward(omega.values());
    let mut u1 = vec![Complex64::new(0.0, 0.0); n0 * n1];
    let mut u2 = vec![Complex64::new(0.0, 0.0); n0 * n1];
    let (l0, l1) = (g.extent(0), g.extent(1));
    for i in 0..n0 {
        let k0 = wavenumber(i, n0);
        let nyq0 = n0 % 2 == 0 && i == n0 / 2;
        let q0 = 2.0 * PI * k0 as f64 / l0;
        for j in 0..n1 {
            let k1 = wavenumber(j, n1);
            if k0 == 0 && k1 == 0 {
                continue;
            }
            let nyq1 = n1 % 2 == 0 && j == n1 / 2;
            let q1 = 2.0 * PI * k1 as f64 / l1;
            let psi = w[i * n1 + j] / (q0 * q0 + q1 * q1);
            let idx = i * n1 + j;
            if !nyq1 {
                u1[idx] = Complex64::new(0.0, q1) * psi;
            }
            if !nyq0 {
                u2[idx] = -Complex64::new(0.0, q0) * psi;
            }
        }
    }
    let mut values = fft.inverse_real(u1);
    values.extend(fft.inverse_real(u2));
    Ok(Field::from_parts_unchecked(g, 2, values))
}

/// Value of the source term at `x`; the reaction term reads the state
/// off-grid with the usual interpolation rule.
pub fn forcing_value(pde: &PdeSpec, x: [f64; 2], _t: f64, state: Option<&Field>) -> Result<f64> {
    let f = pde.forcing();
    if f.is_state_dependent() {
        let s = state.ok_or(Error::MissingState)?;
        let u = eval_at(s.grid(), s.values(), s.grid().wrap(x));
        f.value(x, Some(u))
    } else {
        f.value(x, None)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::init::{sample_grf, GrfSpec};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn ns() -> PdeSpec {
        PdeSpec::navier_stokes(1e-4, NsForcing::Li).unwrap()
    }

    /// Spectral curl and divergence of a 2-component field, used as oracles.
    fn curl_and_div(u: &Field) -> (Vec<f64>, Vec<f64>) {
        let g = *u.grid();
        let n = g.resolution(0);
        let fft = Fft2::new(n, n);
        let a = fft.forward(u.component(0));
        let b = fft.forward(u.component(1));
        let mut curl = vec![Complex64::new(0.0, 0.0); n * n];
        let mut div = vec![Complex64::new(0.0, 0.0); n * n];
        for i in 0..n {
            for j in 0..n {
                let q0 = Complex64::new(0.0, 2.0 * PI * wavenumber(i, n) as f64);
                let q1 = Complex64::new(0.0, 2.0 * PI * wavenumber(j, n) as f64);
                let idx = i * n + j;
                curl[idx] = q0 * b[idx] - q1 * a[idx];
                div[idx] = q0 * a[idx] + q1 * b[idx];
            }
        }
        (fft.inverse_real(curl), fft.inverse_real(div))
    }

    #[test]
    fn convdiff_drift_is_constant_beta() {
        let p = PdeSpec::convection_diffusion(0.1, 0.005, 5).unwrap();
        let d = drift(&p, &Field::zeros(p.grid)).unwrap();
        assert!(d.values().iter().all(|&v| v == 0.1));
    }

    #[test]
    fn allen_cahn_drift_is_zero() {
        let p = PdeSpec::allen_cahn(BoundaryKind::NeumannZero, 5).unwrap();
        let d = drift(&p, &Field::constant(p.grid, 0.7)).unwrap();
        assert!(d.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn shear_mode_velocity_and_drift() {
        let p = ns();
        let w = Field::from_fn(p.grid, |x| (2.0 * PI * x[0]).sin());
        let u = velocity_from_vorticity(&w).unwrap();
        let b = drift(&p, &w).unwrap();
        for (idx, x) in p.grid.points().enumerate() {
            let expect = -(2.0 * PI * x[0]).cos() / (2.0 * PI);
            assert!(u.component(0)[idx].abs() < 1e-10);
            assert!((u.component(1)[idx] - expect).abs() < 1e-10);
            assert!((b.component(1)[idx] + expect).abs() < 1e-10);
        }
    }

    #[test]
    fn velocity_is_divergence_free_and_curl_roundtrips() {
        let g = Grid::square(32, 1.0, BoundaryKind::Periodic).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        // band-limit below Nyquist so the curl oracle sees every mode
        let raw = sample_grf(&GrfSpec::default(), &g, &mut rng).unwrap();
        let fft = Fft2::new(32, 32);
        let mut c = fft.forward(raw.values());
        for i in 0..32 {
            for j in 0..32 {
                if i == 16 || j == 16 {
                    c[i * 32 + j] = Complex64::new(0.0, 0.0);
                }
            }
        }
        let vals: Vec<f64> = fft.inverse_real(c).into_iter().map(|v| v + 0.3).collect();
        let w = Field::new(g, vals).unwrap();
        let u = velocity_from_vorticity(&w).unwrap();
        let (curl, div) = curl_and_div(&u);
        let mean = w.mean();
        let num: f64 = curl
            .iter()
            .zip(w.values())
            .map(|(c, w)| (c - (w - mean)).powi(2))
            .sum();
        let den: f64 = w.values().iter().map(|w| (w - mean).powi(2)).sum();
        assert!((num / den).sqrt() < 1e-10);
        assert!(div.iter().all(|d| d.abs() < 1e-10));
    }

    #[test]
    fn velocity_ignores_mean_vorticity() {
        let g = Grid::square(16, 1.0, BoundaryKind::Periodic).unwrap();
        let w = Field::from_fn(g, |x| (2.0 * PI * x[1]).cos() + (4.0 * PI * x[0]).sin());
        let a = velocity_from_vorticity(&w).unwrap();
        let b = velocity_from_vorticity(&w.map(|v| v + 2.5)).unwrap();
        for (x, y) in a.values().iter().zip(b.values()) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn forcing_examples() {
        let p = ns();
        assert!((forcing_value(&p, [0.0, 0.0], 0.0, None).unwrap() - 0.1).abs() < 1e-15);
        let k = PdeSpec::navier_stokes(1e-4, NsForcing::Kolmogorov).unwrap();
        assert!(
            forcing_value(&k, [1.0 / 16.0, 0.3], 0.0, None)
                .unwrap()
                .abs()
                < 1e-15
        );
        let ac = PdeSpec::allen_cahn(BoundaryKind::DirichletZero, 5).unwrap();
        let ones = Field::constant(ac.grid, 1.0);
        assert_eq!(
            forcing_value(&ac, [0.37, 0.0], 0.0, Some(&ones)).unwrap(),
            0.0
        );
        assert!(matches!(
            forcing_value(&ac, [0.3, 0.0], 0.0, None),
            Err(Error::MissingState)
        ));
    }

    #[test]
    fn forcings_have_zero_mean_on_torus() {
        let g = Grid::square(64, 1.0, BoundaryKind::Periodic).unwrap();
        for f in [ForcingEval::Li, ForcingEval::Kolmogorov] {
            let v = f.on_grid(&g, None).unwrap().unwrap();
            let mean = v.iter().sum::<f64>() / v.len() as f64;
            assert!(mean.abs() < 1e-12);
        }
    }

    #[test]
    fn kv_and_descriptor_roundtrip() {
        let specs = [
            PdeSpec::convection_diffusion(0.1, 0.01, 10).unwrap(),
            PdeSpec::allen_cahn(BoundaryKind::NeumannZero, 5).unwrap(),
            PdeSpec::navier_stokes(1e-5, NsForcing::Kolmogorov).unwrap(),
        ];
        for s in specs {
            assert_eq!(PdeSpec::from_kv(&s.to_kv()).unwrap(), s);
            assert_eq!(PdeSpec::from_descriptor(&s.descriptor()).unwrap(), s);
        }
    }

    #[test]
    fn invalid_specs_are_rejected() {
        assert!(PdeSpec::convection_diffusion(0.1, -0.1, 5).is_err());
        assert!(PdeSpec::convection_diffusion(0.1, 0.0, 5).is_ok());
        assert!(PdeSpec::navier_stokes(-1.0, NsForcing::Li).is_err());
        let mut m = KvMap::new();
        m.insert("pde".into(), "allen_cahn".into());
        assert!(PdeSpec::from_kv(&m).is_err(), "boundary is required");
        m.insert("boundary".into(), "periodic".into());
        assert!(PdeSpec::from_kv(&m).is_err());
    }
}
