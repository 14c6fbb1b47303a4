use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use fkpde::bench::Suite;
use fkpde::kernel::{export_operator, load_operator, propagate, read_operator, write_operator};
use fkpde::{Error, Field, PropagatorConfig};

#[test]
fn reloaded_operator_reproduces_propagate_exactly() {
    let pde = Suite::parse_case_spec("convdiff:E1").unwrap();
    let cfg = PropagatorConfig::new(pde.frame_dt());
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("e1.fkw");
    let exported = export_operator(&pde, &cfg, &path).unwrap();
    let op = load_operator(&path, Some(cfg.dt)).unwrap();
    assert_eq!(op.rows, 64);
    assert_eq!(op.cols, 64);
    assert_eq!(op.nnz(), exported.nnz());
    assert_eq!(op.pde, pde);

    let mut rng = ChaCha8Rng::seed_from_u64(100);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let u = Field::new(
            pde.grid,
            (0..64).map(|_| rng.random_range(-2.0..2.0)).collect(),
        )
        .unwrap();
        let a = op.apply(u.values()).unwrap();
        let b = propagate(&u, &pde, 0.0, &cfg).unwrap();
        for (x, y) in a.iter().zip(b.values()) {
            worst = worst.max((x - y).abs());
        }
    }
    assert_eq!(worst, 0.0);
}

#[test]
fn dt_mismatch_is_a_load_error() {
    let pde = Suite::parse_case_spec("convdiff:E2").unwrap();
    let cfg = PropagatorConfig::new(0.2);
    let mut buf = Vec::new();
    write_operator(
        &mut buf,
        &fkpde::assemble_linear_operator(&pde, &cfg).unwrap(),
    )
    .unwrap();
    assert!(read_operator(&buf[..], Some(0.2)).is_ok());
    assert!(matches!(
        read_operator(&buf[..], Some(0.1)),
        Err(Error::Format(_))
    ));
}

#[test]
fn nonlinear_export_points_to_the_service() {
    let pde = Suite::parse_case_spec("allen_cahn:E1").unwrap();
    let dir = tempfile::tempdir().unwrap();
    let err = export_operator(
        &pde,
        &PropagatorConfig::new(0.01),
        dir.path().join("ac.fkw"),
    )
    .unwrap_err();
    assert!(matches!(err, Error::NonlinearPde(_)));
    assert!(err.to_string().contains("fk serve"), "{err}");
}
