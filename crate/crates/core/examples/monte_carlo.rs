//! Particle estimates of one step and of a whole trajectory.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use fkpde::bench::relative_errors;
use fkpde::init::FourierSeriesIC;
use fkpde::kernel::{mc_propagate_seeded, propagate};
use fkpde::reference::{mc_solve_full, solve_reference, SolverRun};
use fkpde::{PdeSpec, PropagatorConfig};

fn main() -> fkpde::Result<()> {
    let pde = PdeSpec::convection_diffusion(0.1, 0.005, 10)?;
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let u = FourierSeriesIC::sample(10, &mut rng)?.on_grid(&pde.grid)?;

    let cfg = PropagatorConfig::new(0.2);
    let target = propagate(&u, &pde, 0.0, &cfg)?;
    for m in [16, 256, 4096] {
        let mc = mc_propagate_seeded(&u, &pde, 0.0, m, 0, &cfg)?;
        let sq: f64 = mc
            .values()
            .iter()
            .zip(target.values())
            .map(|(a, b)| (a - b).powi(2))
            .sum();
        println!(
            "one step, M = {m:5}: RMS gap to the propagator {:.2e}",
            (sq / 64.0).sqrt()
        );
    }

    let reference = solve_reference(&u, &pde, &SolverRun::reference_for(&pde, false))?;
    for m in [200, 2000] {
        let traj = mc_solve_full(&u, &pde, m, 200, 0)?;
        println!(
            "trajectory, M = {m:4}: E_l2 {:.3}%",
            100.0 * relative_errors(&traj.frames, &reference.frames)?.e_l2
        );
    }
    Ok(())
}
