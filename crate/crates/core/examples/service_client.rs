//! A TCP propagation service and a client; checks bit-identity against the
//! library and measures throughput against batch size.

use std::thread;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use fkpde::service::{Client, Flags, Service, ServiceConfig, TcpService};
use fkpde::{propagate, Field};

fn main() -> fkpde::Result<()> {
    let cfg = ServiceConfig::parse("suite = allen_cahn\ncase = E1\ndt = 0.01\n")?;
    let pde = cfg.pde.clone();
    let server = TcpService::bind(Service::new(cfg.clone())?, "127.0.0.1:0")?;
    let addr = server.local_addr()?;
    let handle = thread::spawn(move || server.run());
    let mut client = Client::connect(addr)?;
    println!("serving {} on {addr}", pde.descriptor());

    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut field = || {
        Field::new(
            pde.grid,
            (0..pde.grid.len())
                .map(|_| rng.random_range(-1.0..1.0))
                .collect(),
        )
    };
    let u = field()?;
    let served = client.propagate(&u, 0.0)?;
    let local = propagate(&u, &pde, 0.0, &cfg.propagator)?;
    println!("bit-identical to the library: {}", served == local);

    for batch in [1, 4, 16, 64] {
        let fields = (0..batch)
            .map(|_| field())
            .collect::<fkpde::Result<Vec<_>>>()?;
        let t0 = Instant::now();
        client.propagate_batch(&fields, 0.0, None, Flags::default())?;
        let s = t0.elapsed().as_secs_f64();
        println!(
            "batch {batch:3}: {:.1} ms, {:.2} ms per field",
            1e3 * s,
            1e3 * s / batch as f64
        );
    }
    client.shutdown()?;
    handle.join().expect("server thread")?;
    Ok(())
}
