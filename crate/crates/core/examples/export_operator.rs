//! Export the one-step operator of a linear problem and apply it offline.

use fkpde::bench::Suite;
use fkpde::kernel::{export_operator, load_operator};
use fkpde::{propagate, Field, PropagatorConfig};

fn main() -> fkpde::Result<()> {
    let pde = Suite::parse_case_spec("convdiff:E1")?;
    let cfg = PropagatorConfig::new(pde.frame_dt());
    let path = std::env::temp_dir().join("fkpde-e1.fkw");
    let op = export_operator(&pde, &cfg, &path)?;
    println!(
        "{}: {}x{} with {} nonzeros, dt = {}",
        path.display(),
        op.rows,
        op.cols,
        op.nnz(),
        op.dt
    );

    let loaded = load_operator(&path, Some(cfg.dt))?;
    let u = Field::from_fn(pde.grid, |x| {
        (2.0 * std::f64::consts::PI * x[0]).sin() + 0.5
    });
    let a = loaded.apply(u.values())?;
    let b = propagate(&u, &pde, 0.0, &cfg)?;
    println!("reloaded operator equals propagate: {}", a == b.values());
    let sums = loaded.row_sums();
    println!(
        "row sums in [{:.6}, {:.6}]",
        sums.iter().cloned().fold(f64::INFINITY, f64::min),
        sums.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    );

    let nonlinear = Suite::parse_case_spec("allen_cahn:E1")?;
    if let Err(e) = export_operator(&nonlinear, &PropagatorConfig::new(0.01), &path) {
        println!("allen_cahn: {e}");
    }
    Ok(())
}
