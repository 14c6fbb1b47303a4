//! Classical reference trajectories for each suite.

use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use fkpde::bench::{relative_errors, Suite};
use fkpde::init::{sample_ic_batch, GrfSpec};
use fkpde::reference::{solve_reference, Scheme, SolverRun};

fn main() -> fkpde::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    for spec in ["convdiff:E1", "allen_cahn:E3"] {
        let pde = Suite::parse_case_spec(spec)?;
        let ic = sample_ic_batch(&pde, 1, &GrfSpec::li_convention(), &mut rng)?.remove(0);
        let run = SolverRun::reference_for(&pde, false);
        let t0 = Instant::now();
        let traj = solve_reference(&ic, &pde, &run)?;
        println!(
            "{spec}: {} x {} steps on {} points, {} frames, final max |u| {:.4} ({:.2?})",
            run.scheme.name(),
            run.steps,
            run.internal_resolution,
            traj.len(),
            traj.frames[traj.len() - 1].max_abs(),
            t0.elapsed()
        );
    }

    // Crank-Nicolson/AB2 on a small vorticity problem: coarse vs fine steps
    let pde = Suite::parse_case_spec("navier_stokes:E1")?;
    let w0 = sample_ic_batch(&pde, 1, &GrfSpec::li_convention(), &mut rng)?.remove(0);
    let fine = solve_reference(
        &w0,
        &pde,
        &SolverRun::new(Scheme::SpectralCrankNicolson, 4000, 64),
    )?;
    let coarse = solve_reference(
        &w0,
        &pde,
        &SolverRun::new(Scheme::SpectralCrankNicolson, 1000, 64),
    )?;
    println!(
        "navier_stokes:E1 1000 vs 4000 CN steps: E_l2 {:.3}%",
        100.0 * relative_errors(&coarse.frames, &fine.frames)?.e_l2
    );
    Ok(())
}
