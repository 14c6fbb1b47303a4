//! The three benchmark equations, their drift and forcing.

use std::f64::consts::PI;

use fkpde::bench::{CaseId, Suite};
use fkpde::pde::drift;
use fkpde::Field;

fn main() -> fkpde::Result<()> {
    for suite in [Suite::ConvDiff, Suite::AllenCahn, Suite::NavierStokes] {
        for n in 1..=4 {
            let pde = suite.case(CaseId::new(n)?)?;
            println!(
                "{} E{n}: {:?} on {} points ({}), T = {}, linear = {}",
                suite.name(),
                pde.kind,
                pde.grid.len(),
                pde.grid.boundary().name(),
                pde.horizon,
                pde.is_linear()
            );
        }
    }

    // the Navier-Stokes drift is minus the velocity of the vorticity
    let ns = Suite::parse_case_spec("navier_stokes:E1")?;
    let omega = Field::from_fn(ns.grid, |x| (2.0 * PI * x[0]).sin());
    let b = drift(&ns, &omega)?;
    let (b1, b2) = (b.component(0), b.component(1));
    let peak = b2.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    println!(
        "shear mode: max |b1| = {:.1e}, max |b2| = {peak:.4} (1 / 2 pi = {:.4})",
        b1.iter().fold(0.0f64, |m, v| m.max(v.abs())),
        1.0 / (2.0 * PI)
    );
    println!("descriptor: {}", ns.descriptor());
    Ok(())
}
