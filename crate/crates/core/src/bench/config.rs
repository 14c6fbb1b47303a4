use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::BoundaryKind;
use crate::init::GrfSpec;
use crate::kernel::{DriftScheme, Interpolation, PropagatorConfig};
use crate::kv::{self, KvMap};
use crate::pde::{NsForcing, PdeSpec};
use crate::reference::{Scheme, SolverRun};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    ConvDiff,
    AllenCahn,
    NavierStokes,
}

impl Suite {
    pub fn parse(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "convdiff" | "conv_diff" | "convection_diffusion" => Ok(Suite::ConvDiff),
            "allen_cahn" | "allencahn" | "ac" => Ok(Suite::AllenCahn),
            "navier_stokes" | "navierstokes" | "ns" => Ok(Suite::NavierStokes),
            other => Err(Error::Config(format!("unknown suite `{other}`"))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Suite::ConvDiff => "convdiff",
            Suite::AllenCahn => "allen_cahn",
            Suite::NavierStokes => "navier_stokes",
        }
    }

    /// Seed of the test-set generator.
    pub fn test_seed(self) -> u64 {
        match self {
            Suite::NavierStokes => 0,
            _ => 1,
        }
    }

    /// The PDE of case `E1`..`E4`.
    ///
    /// * convdiff: `(kappa, N)` = (0.005, 5), (0.01, 5), (0.005, 10), (0.01, 10), `beta = 0.1`
    /// * allen_cahn: `(N, boundary)` = (5, D), (10, D), (5, N), (10, N)
    /// * navier_stokes: `(nu, forcing)` = (1e-4, Li), (1e-5, Li), (1e-4, Kolmogorov), (1e-5, Kolmogorov)
    pub fn case(self, case: CaseId) -> Result<PdeSpec> {
        let i = case.index();
        match self {
            Suite::ConvDiff => {
                let (kappa, n) = [(0.005, 5), (0.01, 5), (0.005, 10), (0.01, 10)][i];
                PdeSpec::convection_diffusion(0.1, kappa, n)
            }
            Suite::AllenCahn => {
                let d = BoundaryKind::DirichletZero;
                let nm = BoundaryKind::NeumannZero;
                let (n, b) = [(5, d), (10, d), (5, nm), (10, nm)][i];
                PdeSpec::allen_cahn(b, n)
            }
            Suite::NavierStokes => {
                let (nu, f) = [
                    (1e-4, NsForcing::Li),
                    (1e-5, NsForcing::Li),
                    (1e-4, NsForcing::Kolmogorov),
                    (1e-5, NsForcing::Kolmogorov),
                ][i];
                PdeSpec::navier_stokes(nu, f)
            }
        }
    }

    /// The PDE named by `suite:case`, e.g. `convdiff:E1`.
    pub fn parse_case_spec(s: &str) -> Result<PdeSpec> {
        let (suite, case) = s
            .split_once(':')
            .ok_or_else(|| Error::Config(format!("expected `suite:case`, got `{s}`")))?;
        Suite::parse(suite)?.case(CaseId::parse(case)?)
    }

    /// The classical scheme of this suite.
    pub fn classical_scheme(self) -> Scheme {
        match self {
            Suite::ConvDiff => Scheme::SpectralRk2,
            Suite::AllenCahn => Scheme::FiniteDifferenceRk2,
            Suite::NavierStokes => Scheme::SpectralCrankNicolson,
        }
    }
}

/// One of the four cases `E1`..`E4` of a suite.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CaseId(u8);

impl CaseId {
    pub fn new(n: u8) -> Result<Self> {
        if (1..=4).contains(&n) {
            Ok(CaseId(n))
        } else {
            Err(Error::Config(format!("case E{n} does not exist (E1..E4)")))
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        let t = s.trim();
        let digits = t
            .strip_prefix('E')
            .or_else(|| t.strip_prefix('e'))
            .unwrap_or(t);
        let n: u8 = digits
            .parse()
            .map_err(|_| Error::Config(format!("bad case id `{t}`")))?;
        CaseId::new(n)
    }

    pub fn index(self) -> usize {
        self.0 as usize - 1
    }

    pub fn label(self) -> String {
        format!("E{}", self.0)
    }
}

/// The solver whose output is compared against the reference.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SolverUnderTest {
    /// The propagator iterated with `steps` uniform steps over the horizon.
    IteratedPropagator { steps: usize },
    /// Full particle Monte Carlo with `particles` paths per point.
    ParticleMc { particles: usize, steps: usize },
    /// The suite's classical scheme with `steps` steps on `resolution` points per axis.
    Spectral {
        steps: usize,
        resolution: Option<usize>,
    },
}

impl SolverUnderTest {
    pub fn name(&self) -> &'static str {
        match self {
            SolverUnderTest::IteratedPropagator { .. } => "propagator",
            SolverUnderTest::ParticleMc { .. } => "particle_mc",
            SolverUnderTest::Spectral { .. } => "spectral",
        }
    }

    pub fn is_stochastic(&self) -> bool {
        matches!(self, SolverUnderTest::ParticleMc { .. })
    }
}

/// A benchmark run: one suite, one or more cases, one solver.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub suite: Suite,
    pub cases: Vec<CaseId>,
    pub solver: SolverUnderTest,
    pub test_size: usize,
    pub seeds: Vec<u64>,
    pub drift_scheme: DriftScheme,
    pub interpolation: Interpolation,
    pub eps: Option<f64>,
    pub paper_scale: bool,
    /// Amplitude of the vorticity random field (navier_stokes only).
    pub grf_amplitude: f64,
    pub test_seed: u64,
    /// Overrides of the reference solver settings.
    pub reference_steps: Option<usize>,
    pub reference_resolution: Option<usize>,
}

/// Test-set size at desk scale.
pub const DESK_TEST_SIZE: usize = 50;
/// Test-set size at full scale (`paper_scale = true`).
pub const PAPER_TEST_SIZE: usize = 200;

impl ExperimentConfig {
    pub fn new(suite: Suite, case: CaseId, solver: SolverUnderTest) -> Self {
        ExperimentConfig {
            suite,
            cases: vec![case],
            solver,
            test_size: DESK_TEST_SIZE,
            seeds: vec![0, 1, 2],
            drift_scheme: DriftScheme::Heun,
            interpolation: Interpolation::Auto,
            eps: None,
            paper_scale: false,
            grf_amplitude: GrfSpec::li_convention().amplitude,
            test_seed: suite.test_seed(),
            reference_steps: None,
            reference_resolution: None,
        }
    }

    /// Parse the flat `key = value` form. Keys: `suite`, `case` (list),
    /// `solver` (`propagator` | `particle_mc` | `spectral`), `steps`,
    /// `particles`, `resolution`, `test_size`, `seeds` (list), `drift_scheme`,
    /// `interpolation`, `eps`, `paper_scale`, `grf_amplitude`, `test_seed`,
    /// `reference_steps`, `reference_resolution`.
    pub fn from_kv(m: &KvMap) -> Result<Self> {
        const KEYS: [&str; 16] = [
            "suite",
            "case",
            "solver",
            "steps",
            "particles",
            "resolution",
            "test_size",
            "seeds",
            "drift_scheme",
            "interpolation",
            "eps",
            "paper_scale",
            "grf_amplitude",
            "test_seed",
            "reference_steps",
            "reference_resolution",
        ];
        if let Some(k) = m.keys().find(|k| !KEYS.contains(&k.as_str())) {
            return Err(Error::Config(format!("unknown key `{k}`")));
        }
        let suite = Suite::parse(&kv::require::<String>(m, "suite")?)?;
        let cases = match m.get("case") {
            Some(v) => v
                .split(',')
                .map(CaseId::parse)
                .collect::<Result<Vec<_>>>()?,
            None => vec![CaseId(1)],
        };
        let solver_name: String = kv::get_or(m, "solver", "propagator".to_string())?;
        let solver = match solver_name.trim().to_ascii_lowercase().as_str() {
            "propagator" | "iterated_propagator" | "mcnp" => SolverUnderTest::IteratedPropagator {
                steps: kv::get_or(m, "steps", 10)?,
            },
            "particle_mc" | "mc" | "mcm" => SolverUnderTest::ParticleMc {
                particles: kv::require(m, "particles")?,
                steps: kv::get_or(m, "steps", 200)?,
            },
            "spectral" | "psm" | "classical" => SolverUnderTest::Spectral {
                steps: kv::require(m, "steps")?,
                resolution: kv::get_parsed(m, "resolution")?,
            },
            other => return Err(Error::Config(format!("unknown solver `{other}`"))),
        };
        let paper_scale: bool = kv::get_or(m, "paper_scale", false)?;
        let mut cfg = ExperimentConfig::new(suite, cases[0], solver);
        cfg.cases = cases;
        cfg.paper_scale = paper_scale;
        cfg.test_size = kv::get_or(
            m,
            "test_size",
            if paper_scale {
                PAPER_TEST_SIZE
            } else {
                DESK_TEST_SIZE
            },
        )?;
        if let Some(seeds) = kv::get_list(m, "seeds")? {
            cfg.seeds = seeds;
        }
        if let Some(s) = m.get("drift_scheme") {
            cfg.drift_scheme = DriftScheme::parse(s)?;
        }
        if let Some(s) = m.get("interpolation") {
            cfg.interpolation = Interpolation::parse(s)?;
        }
        cfg.eps = kv::get_parsed(m, "eps")?;
        cfg.grf_amplitude = kv::get_or(m, "grf_amplitude", cfg.grf_amplitude)?;
        cfg.test_seed = kv::get_or(m, "test_seed", cfg.test_seed)?;
        cfg.reference_steps = kv::get_parsed(m, "reference_steps")?;
        cfg.reference_resolution = kv::get_parsed(m, "reference_resolution")?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn parse(text: &str) -> Result<Self> {
        Self::from_kv(&kv::parse_kv(text)?)
    }

    pub fn to_kv(&self) -> KvMap {
        let mut m = KvMap::new();
        let mut put = |k: &str, v: String| {
            m.insert(k.to_string(), v);
        };
        put("suite", self.suite.name().into());
        put(
            "case",
            self.cases
                .iter()
                .map(|c| c.label())
                .collect::<Vec<_>>()
                .join(","),
        );
        put("solver", self.solver.name().into());
        match self.solver {
            SolverUnderTest::IteratedPropagator { steps } => put("steps", steps.to_string()),
            SolverUnderTest::ParticleMc { particles, steps } => {
                put("particles", particles.to_string());
                put("steps", steps.to_string());
            }
            SolverUnderTest::Spectral { steps, resolution } => {
                put("steps", steps.to_string());
                if let Some(r) = resolution {
                    put("resolution", r.to_string());
                }
            }
        }
        put("test_size", self.test_size.to_string());
        put(
            "seeds",
            self.seeds
                .iter()
                .map(|s| s.to_string())
                .collect::<Vec<_>>()
                .join(","),
        );
        put("drift_scheme", self.drift_scheme.name().into());
        put("interpolation", self.interpolation.name().into());
        if let Some(e) = self.eps {
            put("eps", e.to_string());
        }
        put("paper_scale", self.paper_scale.to_string());
        put("grf_amplitude", self.grf_amplitude.to_string());
        put("test_seed", self.test_seed.to_string());
        if let Some(s) = self.reference_steps {
            put("reference_steps", s.to_string());
        }
        if let Some(r) = self.reference_resolution {
            put("reference_resolution", r.to_string());
        }
        m
    }

    pub fn validate(&self) -> Result<()> {
        if self.cases.is_empty() {
            return Err(Error::Config("at least one case is required".into()));
        }
        if self.seeds.is_empty() {
            return Err(Error::Config("seeds must be nonempty".into()));
        }
        if self.test_size == 0 {
            return Err(Error::Config("test_size must be positive".into()));
        }
        if !(self.grf_amplitude > 0.0 && self.grf_amplitude.is_finite()) {
            return Err(Error::Config("grf_amplitude must be positive".into()));
        }
        let steps = match self.solver {
            SolverUnderTest::IteratedPropagator { steps } => steps,
            SolverUnderTest::ParticleMc { particles, steps } => {
                if self.suite != Suite::ConvDiff {
                    return Err(Error::Config(
                        "particle_mc runs on the convdiff suite only".into(),
                    ));
                }
                if particles == 0 {
                    return Err(Error::Config("particles must be positive".into()));
                }
                steps
            }
            SolverUnderTest::Spectral { steps, .. } => steps,
        };
        for &case in &self.cases {
            let pde = self.suite.case(case)?;
            if steps == 0 || steps % pde.frames != 0 {
                return Err(Error::Config(format!(
                    "steps = {steps} must be a positive multiple of the {} frames",
                    pde.frames
                )));
            }
        }
        if let Some(e) = self.eps {
            self.propagator_config(1.0, Some(e)).validate()?;
        }
        Ok(())
    }

    pub(crate) fn propagator_config(&self, dt: f64, eps: Option<f64>) -> PropagatorConfig {
        let mut cfg = PropagatorConfig::new(dt)
            .with_drift_scheme(self.drift_scheme)
            .with_interpolation(self.interpolation);
        if let Some(e) = eps {
            cfg = cfg.with_eps(e);
        }
        cfg
    }

    /// Reference settings for one case, with overrides applied.
    pub fn reference_run(&self, pde: &PdeSpec) -> SolverRun {
        let mut run = SolverRun::reference_for(pde, self.paper_scale);
        if let Some(s) = self.reference_steps {
            run.steps = s;
        }
        if let Some(r) = self.reference_resolution {
            run.internal_resolution = r;
        }
        run
    }

    pub fn grf(&self) -> GrfSpec {
        GrfSpec {
            amplitude: self.grf_amplitude,
            ..GrfSpec::default()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn case_parameters_follow_the_tables() {
        let e2 = Suite::ConvDiff.case(CaseId::new(2).unwrap()).unwrap();
        assert_eq!(e2.diffusivity(), 0.01);
        assert_eq!(e2.ic_frequency, Some(5));
        let e3 = Suite::AllenCahn.case(CaseId::parse("E3").unwrap()).unwrap();
        assert_eq!(e3.grid.boundary(), BoundaryKind::NeumannZero);
        assert_eq!(e3.ic_frequency, Some(5));
        let e4 = Suite::NavierStokes
            .case(CaseId::parse("e4").unwrap())
            .unwrap();
        assert_eq!(e4.diffusivity(), 1e-5);
        assert!(CaseId::parse("E5").is_err());
    }

    #[test]
    fn kv_round_trip() {
        let text = "suite = convdiff\ncase = E1,E3\nsolver = particle_mc\nparticles = 200\nseeds = 4,5\ninterpolation = off\n";
        let cfg = ExperimentConfig::parse(text).unwrap();
        assert_eq!(cfg.cases.len(), 2);
        assert_eq!(
            cfg.solver,
            SolverUnderTest::ParticleMc {
                particles: 200,
                steps: 200
            }
        );
        assert_eq!(cfg.test_size, DESK_TEST_SIZE);
        let back = ExperimentConfig::from_kv(&cfg.to_kv()).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn paper_scale_restores_test_size() {
        let cfg = ExperimentConfig::parse("suite = ns\npaper_scale = true\n").unwrap();
        assert_eq!(cfg.test_size, PAPER_TEST_SIZE);
        assert_eq!(cfg.test_seed, 0);
        let pde = cfg.suite.case(cfg.cases[0]).unwrap();
        assert_eq!(cfg.reference_run(&pde).internal_resolution, 256);
    }

    #[test]
    fn invalid_configs_are_rejected() {
        for text in [
            "case = E1\n",
            "suite = convdiff\nseeds =\n",
            "suite = convdiff\nsteps = 15\n",
            "suite = allen_cahn\nsolver = particle_mc\nparticles = 10\n",
            "suite = convdiff\ncolour = blue\n",
            "suite = convdiff\neps = 0.7\n",
        ] {
            assert!(
                matches!(
                    ExperimentConfig::parse(text),
                    Err(Error::Config(_)) | Err(Error::InvalidArgument { .. })
                ),
                "{text}"
            );
        }
    }
}
