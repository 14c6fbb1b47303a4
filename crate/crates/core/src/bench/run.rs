use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::Field;
use crate::init::{sample_grf, FourierSeriesIC};
use crate::kernel::Propagator;
use crate::pde::PdeSpec;
use crate::reference::{internal_grid, mc_solve_full, solve_reference, SolverRun};

use super::config::{ExperimentConfig, SolverUnderTest, Suite};
use super::metrics::{relative_errors, ErrorSummary, FrameError};
use super::report::{CaseReport, Report, SeedRow, Timings};

/// One test initial condition, sampled on the solver grid and on the
/// reference grid.
#[derive(Clone, Debug)]
pub struct TestInstance {
    pub solver_ic: Field,
    pub reference_ic: Field,
}

/// The test set of `pde`: `size` draws from the suite's initial-condition law
/// with the generator seeded by `test_seed`. Sine series are evaluated
/// directly on both grids; random fields are sampled on the output grid.
pub fn test_set(
    cfg: &ExperimentConfig,
    pde: &PdeSpec,
    reference: &SolverRun,
    size: usize,
) -> Result<Vec<TestInstance>> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.test_seed);
    let (fine, _) = internal_grid(pde, reference.internal_resolution)?;
    (0..size)
        .map(|_| match cfg.suite {
            Suite::NavierStokes => {
                let w = sample_grf(&cfg.grf(), &pde.grid, &mut rng)?;
                Ok(TestInstance {
                    solver_ic: w.clone(),
                    reference_ic: w,
                })
            }
            _ => {
                let n = pde
                    .ic_frequency
                    .ok_or_else(|| Error::Config("the case has no IC frequency".into()))?;
                let s = FourierSeriesIC::sample(n, &mut rng)?;
                Ok(TestInstance {
                    solver_ic: s.on_grid(&pde.grid)?,
                    reference_ic: s.on_grid(&fine)?,
                })
            }
        })
        .collect()
}

/// Seed of test instance `i` under experiment seed `seed`.
pub fn instance_seed(seed: u64, i: usize) -> u64 {
    seed.wrapping_mul(1_000_003).wrapping_add(i as u64)
}

/// Output of the solver under test; `Ok(None)` marks a blow-up.
fn run_solver(
    cfg: &ExperimentConfig,
    pde: &PdeSpec,
    reference: &SolverRun,
    inst: &TestInstance,
    prop: Option<&Propagator>,
    seed: u64,
    index: usize,
) -> Result<Option<Vec<Field>>> {
    let out = match cfg.solver {
        SolverUnderTest::IteratedPropagator { steps } => {
            let prop = prop.expect("propagator built for propagator runs");
            prop.trajectory(&inst.solver_ic, steps / pde.frames, pde.frames)
        }
        SolverUnderTest::ParticleMc { particles, steps } => mc_solve_full(
            &inst.solver_ic,
            pde,
            particles,
            steps,
            instance_seed(seed, index),
        )
        .map(|t| t.frames),
        SolverUnderTest::Spectral { steps, resolution } => {
            let res = resolution.unwrap_or(reference.internal_resolution);
            let run = SolverRun::new(cfg.suite.classical_scheme(), steps, res);
            let ic = if res == reference.internal_resolution {
                &inst.reference_ic
            } else {
                &inst.solver_ic
            };
            solve_reference(ic, pde, &run).map(|t| t.frames)
        }
    };
    match out {
        Ok(frames) => Ok(Some(frames)),
        Err(Error::Blowup { .. }) => Ok(None),
        Err(e) => Err(e),
    }
}

fn seed_row(seed: u64, results: &[Option<ErrorSummary>]) -> SeedRow {
    let blowups = results.iter().filter(|r| r.is_none()).count();
    let ok: Vec<&ErrorSummary> = results.iter().flatten().collect();
    if blowups > 0 || ok.is_empty() {
        return SeedRow {
            seed,
            instances: results.len(),
            blowups,
            e_l2: None,
            e_linf: None,
            per_frame: Vec::new(),
        };
    }
    let n = ok.len() as f64;
    let frames = ok[0].per_frame.len();
    SeedRow {
        seed,
        instances: results.len(),
        blowups,
        e_l2: Some(ok.iter().map(|e| e.e_l2).sum::<f64>() / n),
        e_linf: Some(ok.iter().map(|e| e.e_linf).sum::<f64>() / n),
        per_frame: (0..frames)
            .map(|k| FrameError {
                e_l2: ok.iter().map(|e| e.per_frame[k].e_l2).sum::<f64>() / n,
                e_linf: ok.iter().map(|e| e.per_frame[k].e_linf).sum::<f64>() / n,
            })
            .collect(),
    }
}

/// Run every case of `cfg` against on-demand reference trajectories.
///
/// Deterministic solvers run once and their errors are repeated for every
/// seed; particle runs draw instance `i` of seed `s` from
/// [`instance_seed`]`(s, i)`. A solver blow-up flags its row instead of
/// failing the run.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Report> {
    cfg.validate()?;
    let start = Instant::now();
    let mut timings = Timings::default();
    let mut cases = Vec::with_capacity(cfg.cases.len());
    for &case in &cfg.cases {
        let pde = cfg.suite.case(case)?;
        let reference_run = cfg.reference_run(&pde);
        let tests = test_set(cfg, &pde, &reference_run, cfg.test_size)?;

        let t0 = Instant::now();
        let refs = tests
            .par_iter()
            .map(|inst| solve_reference(&inst.reference_ic, &pde, &reference_run))
            .collect::<Result<Vec<_>>>()?;
        timings.reference_seconds += t0.elapsed().as_secs_f64();
        let mut warnings: Vec<String> = refs
            .iter()
            .flat_map(|r| r.warnings.iter().cloned())
            .collect();
        warnings.sort();
        warnings.dedup();

        let t0 = Instant::now();
        let prop = match cfg.solver {
            SolverUnderTest::IteratedPropagator { steps } => {
                let pc = cfg.propagator_config(pde.horizon / steps as f64, cfg.eps);
                Some(Propagator::new(pde.clone(), pc)?)
            }
            _ => None,
        };
        let evaluate = |seed: u64| -> Result<Vec<Option<ErrorSummary>>> {
            tests
                .par_iter()
                .zip(refs.par_iter())
                .enumerate()
                .map(|(i, (inst, r))| {
                    match run_solver(cfg, &pde, &reference_run, inst, prop.as_ref(), seed, i)? {
                        Some(frames) => relative_errors(&frames, &r.frames).map(Some),
                        None => Ok(None),
                    }
                })
                .collect()
        };
        let rows = if cfg.solver.is_stochastic() {
            cfg.seeds
                .iter()
                .map(|&s| Ok(seed_row(s, &evaluate(s)?)))
                .collect::<Result<Vec<_>>>()?
        } else {
            let once = evaluate(cfg.seeds[0])?;
            cfg.seeds.iter().map(|&s| seed_row(s, &once)).collect()
        };
        timings.solver_seconds += t0.elapsed().as_secs_f64();

        let mut report = CaseReport {
            case: case.label(),
            pde: pde.descriptor(),
            reference: reference_run,
            desk_scale: !cfg.paper_scale,
            rows,
            e_l2: None,
            e_linf: None,
            per_frame: Vec::new(),
            warnings,
        };
        report.aggregate();
        cases.push(report);
    }
    timings.total_seconds = start.elapsed().as_secs_f64();
    Ok(Report {
        config: cfg.clone(),
        cases,
        timings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bench::config::CaseId;
    use crate::bench::report::Stat;

    fn small(solver: SolverUnderTest) -> ExperimentConfig {
        let mut cfg = ExperimentConfig::new(Suite::ConvDiff, CaseId::new(1).unwrap(), solver);
        cfg.test_size = 4;
        cfg
    }

    #[test]
    fn propagator_rows_repeat_across_seeds() {
        let report =
            run_experiment(&small(SolverUnderTest::IteratedPropagator { steps: 10 })).unwrap();
        let case = &report.cases[0];
        assert_eq!(case.rows.len(), 3);
        assert!(case.rows.windows(2).all(|w| w[0].e_l2 == w[1].e_l2));
        let s = case.e_l2.unwrap();
        assert!(s.mean < 0.01 && s.std == 0.0, "{s:?}");
        assert_eq!(case.per_frame.len(), 10);
    }

    #[test]
    fn reports_are_deterministic_and_round_trip() {
        let cfg = small(SolverUnderTest::ParticleMc {
            particles: 20,
            steps: 20,
        });
        let a = run_experiment(&cfg).unwrap();
        let b = run_experiment(&cfg).unwrap();
        assert_eq!(a.payload_json().unwrap(), b.payload_json().unwrap());
        let back = Report::from_json(&a.to_json().unwrap()).unwrap();
        assert_eq!(back.cases, a.cases);
        // aggregates are recomputable from the rows
        let case = &back.cases[0];
        let l2: Vec<f64> = case.rows.iter().map(|r| r.e_l2.unwrap()).collect();
        assert_eq!(Stat::of(&l2), case.e_l2);
        assert!(case.rows[0].e_l2 != case.rows[1].e_l2);
    }

    #[test]
    fn batch_sampler_reproduces_the_test_set() {
        for suite in [Suite::ConvDiff, Suite::NavierStokes] {
            let cfg = ExperimentConfig::new(
                suite,
                CaseId::new(2).unwrap(),
                SolverUnderTest::IteratedPropagator { steps: 10 },
            );
            let pde = suite.case(CaseId::new(2).unwrap()).unwrap();
            let tests = test_set(&cfg, &pde, &cfg.reference_run(&pde), 3).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.test_seed);
            let batch = crate::init::sample_ic_batch(&pde, 3, &cfg.grf(), &mut rng).unwrap();
            for (t, b) in tests.iter().zip(&batch) {
                assert_eq!(&t.solver_ic, b);
            }
        }
    }

    #[test]
    fn blowups_are_flagged_not_fatal() {
        let mut cfg = small(SolverUnderTest::Spectral {
            steps: 1000,
            resolution: None,
        });
        cfg.test_size = 2;
        let report = run_experiment(&cfg).unwrap();
        assert!(report.has_blowup());
        let case = &report.cases[0];
        assert!(case.e_l2.is_none() && case.per_frame.is_empty());
        assert_eq!(case.rows[0].blowups, 2);
    }

    #[test]
    fn csv_has_one_line_per_frame() {
        let report =
            run_experiment(&small(SolverUnderTest::IteratedPropagator { steps: 10 })).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let csvs = report.write(dir.path().join("out.json")).unwrap();
        let text = std::fs::read_to_string(&csvs[0]).unwrap();
        assert!(csvs[0].ends_with("out_E1.csv"));
        assert_eq!(text.lines().count(), 11);
        assert!(text.starts_with("frame,e_l2,e_linf\n1,"));
    }
}
