//! Sampling the benchmark initial conditions and writing them as FKF1.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use fkpde::bench::Suite;
use fkpde::fkf::{read_fkf, write_fkf};
use fkpde::init::{sample_grf, sample_ic_batch, FourierSeriesIC, GrfSpec};

fn main() -> fkpde::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let s = FourierSeriesIC::sample(5, &mut rng)?;
    println!("sine series coefficients: {:?}", s.coefficients());
    println!("u(0) = {}, u(0.1) = {:.4}", s.eval(0.0), s.eval(0.1));

    let ns = Suite::parse_case_spec("navier_stokes:E1")?;
    let grf = GrfSpec::li_convention();
    let w = sample_grf(&grf, &ns.grid, &mut rng)?;
    println!(
        "vorticity sample on {} points: mean {:.1e}, max |w| {:.3}",
        w.grid().len(),
        w.mean(),
        w.max_abs()
    );

    let cd = Suite::parse_case_spec("convdiff:E3")?;
    let batch = sample_ic_batch(&cd, 4, &grf, &mut ChaCha8Rng::seed_from_u64(1))?;
    let mut bytes = Vec::new();
    write_fkf(&mut bytes, &batch)?;
    let header = bytes.split(|&b| b == b'\n').next().unwrap_or_default();
    println!("FKF1 header: {}", String::from_utf8_lossy(header));
    assert_eq!(read_fkf(&bytes[..])?, batch);
    println!("{} bytes, read back identically", bytes.len());
    Ok(())
}
