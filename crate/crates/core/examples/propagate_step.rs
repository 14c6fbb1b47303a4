//! One Feynman-Kac step against the closed-form mode solution, and the
//! transition kernel behind it.

use std::f64::consts::PI;

use fkpde::{propagate, transition_kernel, Field, PdeSpec, Propagator, PropagatorConfig};

fn main() -> fkpde::Result<()> {
    let (beta, kappa, dt) = (0.1, 0.01, 0.2);
    let pde = PdeSpec::convection_diffusion(beta, kappa, 5)?;
    let cfg = PropagatorConfig::new(dt);
    for n in [1, 3, 5] {
        let k = 2.0 * PI * n as f64;
        let u = Field::from_fn(pde.grid, |x| (k * x[0]).sin());
        let v = propagate(&u, &pde, 0.0, &cfg)?;
        let decay = (-k * k * kappa * dt).exp();
        let exact = Field::from_fn(pde.grid, |x| decay * (k * (x[0] + beta * dt)).sin());
        let err: f64 = v
            .values()
            .iter()
            .zip(exact.values())
            .map(|(a, b)| (a - b).powi(2))
            .sum();
        println!(
            "mode {n}: relative l2 error {:.2e}",
            err.sqrt() / exact.l2_norm()
        );
    }

    let prop = Propagator::new(pde.clone(), cfg)?;
    let u = Field::from_fn(pde.grid, |x| (2.0 * PI * x[0]).cos());
    let (_, diag) = prop.step_with_diagnostics(&u, 0.0)?;
    println!(
        "sigma = {:.4}, refinement x{}, worst mass deviation {:.1e}",
        prop.sigma(),
        diag.max_factor,
        diag.max_deviation
    );

    let k = transition_kernel(&pde.grid, [0.5, 0.0], prop.sigma(), &cfg)?;
    println!(
        "kernel at x = 0.5: radius {:.4}, {} nodes on a x{} grid, total weight {:.6}",
        k.radius,
        k.len(),
        k.factor,
        k.total_weight()
    );
    Ok(())
}
