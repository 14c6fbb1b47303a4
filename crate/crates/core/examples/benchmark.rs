//! A small benchmark run: iterated propagator against the reference on
//! convection-diffusion, written as JSON plus per-frame CSV.

use fkpde::bench::{run_experiment, ExperimentConfig};

fn main() -> fkpde::Result<()> {
    let cfg = ExperimentConfig::parse(
        "suite = convdiff\n\
         case = E1,E3\n\
         solver = propagator\n\
         steps = 10\n\
         test_size = 10\n",
    )?;
    let report = run_experiment(&cfg)?;
    for case in &report.cases {
        let l2 = case.e_l2.expect("no blow-up");
        println!(
            "{}: E_l2 {:.4}% (std {:.1e} over {} seeds)",
            case.case,
            100.0 * l2.mean,
            l2.std,
            case.rows.len()
        );
        println!(
            "{}",
            case.frame_csv()
                .lines()
                .take(3)
                .collect::<Vec<_>>()
                .join(" | ")
        );
    }
    let dir = std::env::temp_dir().join("fkpde-benchmark-example");
    std::fs::create_dir_all(&dir)?;
    let csvs = report.write(dir.join("report.json"))?;
    println!("wrote {} and {:?}", dir.join("report.json").display(), csvs);
    println!(
        "reference {:.2}s, solver {:.2}s",
        report.timings.reference_seconds, report.timings.solver_seconds
    );
    Ok(())
}
