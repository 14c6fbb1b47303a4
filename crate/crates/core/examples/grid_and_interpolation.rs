//! Grids, neighbourhoods and band-limited refinement.

use fkpde::{make_grid, neighborhood, spectral_interpolate, BoundaryKind, Field};

fn main() -> fkpde::Result<()> {
    let line = make_grid(1, 16, 1.0, BoundaryKind::Periodic)?;
    println!(
        "periodic line: {} points, spacing {}",
        line.len(),
        line.spacing(0)
    );
    // the ball wraps around the torus
    let near = neighborhood(&line, [0.02, 0.0], 0.1);
    println!("points within 0.1 of x = 0.02: {near:?}");

    let walls = make_grid(1, 17, 1.0, BoundaryKind::NeumannZero)?;
    println!(
        "bounded line: first node volume {}, interior {}",
        walls.node_volume(0),
        walls.node_volume(1)
    );

    let u = Field::from_fn(line, |x| (2.0 * std::f64::consts::PI * 3.0 * x[0]).sin());
    let fine = spectral_interpolate(&u, 4)?;
    let exact = Field::from_fn(*fine.grid(), |x| {
        (2.0 * std::f64::consts::PI * 3.0 * x[0]).sin()
    });
    let err = fine
        .values()
        .iter()
        .zip(exact.values())
        .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    println!(
        "x4 refinement of a 3-mode sine on {} points: max error {err:.1e}",
        fine.grid().len()
    );

    let square = make_grid(2, 8, 1.0, BoundaryKind::Periodic)?;
    println!(
        "periodic square: {} points, point 9 at {:?}",
        square.len(),
        square.point(9)
    );
    Ok(())
}
