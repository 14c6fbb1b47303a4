use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use fkpde::bench::{run_experiment, ExperimentConfig, Suite};
use fkpde::fkf::{load_fkf, save_fkf};
use fkpde::init::{sample_ic_batch, GrfSpec};
use fkpde::kernel::{export_operator, DriftScheme, Interpolation, PropagatorConfig};
use fkpde::kv;
use fkpde::reference::{mc_solve_full, solve_reference, Scheme, SolverRun};
use fkpde::service::{serve, ServiceConfig, Transport};
use fkpde::{Error, Field, PdeSpec, Result};

#[derive(Parser)]
#[command(
    name = "fk",
    version,
    about = "Feynman-Kac propagation, reference solvers and benchmarks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample initial conditions into an FKF1 file.
    GenIc(GenIc),
    /// Solve a batch of initial conditions with a classical scheme.
    SolveRef(SolveRef),
    /// Solve a batch of initial conditions with particle Monte Carlo.
    SolveMc(SolveMc),
    /// Run a benchmark experiment and write its report.
    Bench(Bench),
    /// Serve propagation requests over stdio or TCP.
    Serve(Serve),
    /// Export the one-step operator of a linear problem as an FKW1 file.
    ExportOp(ExportOp),
}

/// The problem: `suite:case` (e.g. `convdiff:E1`, `navier_stokes:E2`) or a
/// key=value config file.
#[derive(Args)]
struct PdeArg {
    #[arg(long)]
    pde: String,
}

impl PdeArg {
    fn resolve(&self) -> Result<PdeSpec> {
        if Path::new(&self.pde).is_file() {
            Ok(ServiceConfig::parse(&std::fs::read_to_string(&self.pde)?)?.pde)
        } else {
            Suite::parse_case_spec(&self.pde)
        }
    }
}

#[derive(Args)]
struct GenIc {
    #[command(flatten)]
    pde: PdeArg,
    #[arg(long, default_value_t = 1)]
    count: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Spectral amplitude of 2-D random fields.
    #[arg(long)]
    grf_amplitude: Option<f64>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SolveRef {
    #[command(flatten)]
    pde: PdeArg,
    /// FKF1 file of initial conditions on the output or internal grid.
    #[arg(long)]
    ic: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    scheme: Option<String>,
    #[arg(long)]
    steps: Option<usize>,
    /// Points per axis of the internal grid.
    #[arg(long)]
    resolution: Option<usize>,
    /// Particles per point for `--scheme particle_mc`.
    #[arg(long)]
    particles: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Reference settings of the published experiments.
    #[arg(long)]
    paper_scale: bool,
}

#[derive(Args)]
struct SolveMc {
    #[command(flatten)]
    pde: PdeArg,
    #[arg(long)]
    ic: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    particles: usize,
    #[arg(long, default_value_t = 200)]
    steps: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct Bench {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Overrides `paper_scale` in the config.
    #[arg(long)]
    paper_scale: bool,
}

#[derive(Args)]
struct Serve {
    #[arg(long)]
    pde_config: PathBuf,
    /// `stdio` or `tcp:PORT`.
    #[arg(long, default_value = "stdio")]
    transport: String,
}

#[derive(Args)]
struct ExportOp {
    #[command(flatten)]
    pde: PdeArg,
    #[arg(long)]
    out: PathBuf,
    /// Step size; defaults to the frame interval `T / frames`.
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long)]
    drift_scheme: Option<String>,
    #[arg(long)]
    interpolation: Option<String>,
}

fn gen_ic(a: GenIc) -> Result<()> {
    let pde = a.pde.resolve()?;
    let mut grf = GrfSpec::li_convention();
    if let Some(amp) = a.grf_amplitude {
        grf.amplitude = amp;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
    let ics = sample_ic_batch(&pde, a.count, &grf, &mut rng)?;
    save_fkf(&a.out, &ics)?;
    eprintln!(
        "wrote {} initial conditions on {} points to {}",
        ics.len(),
        pde.grid.len(),
        a.out.display()
    );
    Ok(())
}

fn solve_batch(
    ics: &[Field],
    out: &Path,
    solve: impl Fn(&Field) -> Result<fkpde::reference::Trajectory>,
) -> Result<()> {
    let mut frames = Vec::new();
    for (i, ic) in ics.iter().enumerate() {
        let traj = solve(ic)?;
        for w in &traj.warnings {
            eprintln!("ic {i}: warning: {w}");
        }
        frames.extend(traj.frames);
    }
    save_fkf(out, &frames)?;
    eprintln!(
        "wrote {} frames ({} trajectories) to {}",
        frames.len(),
        ics.len(),
        out.display()
    );
    Ok(())
}

fn solve_ref(a: SolveRef) -> Result<()> {
    let pde = a.pde.resolve()?;
    let mut run = SolverRun::reference_for(&pde, a.paper_scale);
    if let Some(s) = &a.scheme {
        run.scheme = Scheme::parse(s)?;
    }
    if let Some(s) = a.steps {
        run.steps = s;
    }
    if let Some(r) = a.resolution {
        run.internal_resolution = r;
    }
    if let Some(m) = a.particles {
        run = run.with_particles(m, a.seed);
    }
    let ics = load_fkf(&a.ic)?;
    solve_batch(&ics, &a.out, |ic| solve_reference(ic, &pde, &run))
}

fn solve_mc(a: SolveMc) -> Result<()> {
    let pde = a.pde.resolve()?;
    let ics = load_fkf(&a.ic)?;
    solve_batch(&ics, &a.out, |ic| {
        mc_solve_full(ic, &pde, a.particles, a.steps, a.seed)
    })
}

/// Returns true when any row blew up.
fn bench(a: Bench) -> Result<bool> {
    let mut m = kv::parse_kv(&std::fs::read_to_string(&a.config)?)?;
    if a.paper_scale {
        m.insert("paper_scale".into(), "true".into());
    }
    let cfg = ExperimentConfig::from_kv(&m)?;
    let report = run_experiment(&cfg)?;
    let csvs = report.write(&a.out)?;
    for case in &report.cases {
        match (case.e_l2, case.e_linf) {
            (Some(l2), Some(linf)) => println!(
                "{} {}: E_l2 = {:.4e} +- {:.2e}, E_linf = {:.4e} +- {:.2e}",
                cfg.suite.name(),
                case.case,
                l2.mean,
                l2.std,
                linf.mean,
                linf.std
            ),
            _ => println!("{} {}: blow-up", cfg.suite.name(), case.case),
        }
        for w in &case.warnings {
            eprintln!("{}: warning: {w}", case.case);
        }
    }
    eprintln!("wrote {} and {} CSV file(s)", a.out.display(), csvs.len());
    Ok(report.has_blowup())
}

fn serve_cmd(a: Serve) -> Result<()> {
    let cfg = ServiceConfig::parse(&std::fs::read_to_string(&a.pde_config)?)?;
    serve(cfg, &Transport::parse(&a.transport)?)
}

fn export_op(a: ExportOp) -> Result<()> {
    let pde = a.pde.resolve()?;
    let mut cfg = PropagatorConfig::new(a.dt.unwrap_or_else(|| pde.frame_dt()));
    if let Some(eps) = a.eps {
        cfg = cfg.with_eps(eps);
    }
    if let Some(s) = &a.drift_scheme {
        cfg.drift_scheme = DriftScheme::parse(s)?;
    }
    if let Some(s) = &a.interpolation {
        cfg.interpolation = Interpolation::parse(s)?;
    }
    let op = export_operator(&pde, &cfg, &a.out)?;
    eprintln!(
        "wrote {}x{} operator ({} nonzeros, dt = {}) to {}",
        op.rows,
        op.cols,
        op.nnz(),
        op.dt,
        a.out.display()
    );
    Ok(())
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Blowup { .. } => 2,
        Error::Config(_)
        | Error::InvalidArgument { .. }
        | Error::InvalidGrid(_)
        | Error::NonlinearPde(_) => 3,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::GenIc(a) => gen_ic(a).map(|_| false),
        Command::SolveRef(a) => solve_ref(a).map(|_| false),
        Command::SolveMc(a) => solve_mc(a).map(|_| false),
        Command::Bench(a) => bench(a),
        Command::Serve(a) => serve_cmd(a).map(|_| false),
        Command::ExportOp(a) => export_op(a).map(|_| false),
    };
    match outcome {
        Ok(false) => ExitCode::SUCCESS,
        Ok(true) => ExitCode::from(2),
        Err(e) => {
            eprintln!("fk: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
