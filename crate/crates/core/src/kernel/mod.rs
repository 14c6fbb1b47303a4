//! The Feynman-Kac one-step propagator and its building blocks.

mod backtrace;
mod mc;
mod operator;
mod propagate;
mod radius;
mod transition;

pub use backtrace::{heun_backtrace, DriftScheme};
pub use mc::{mc_propagate, mc_propagate_seeded};
pub use operator::{
    assemble_linear_operator, export_operator, load_operator, read_operator, write_operator,
    SparseOperator,
};
pub use propagate::{propagate, Interpolation, Propagator, PropagatorConfig, StepDiagnostics};
pub use radius::select_radius;
pub use transition::{image_tail_bound, transition_kernel, TransitionKernel};
