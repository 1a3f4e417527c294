//! Independent random walks ξ° as a comparison system for the exclusion process: exact
//! kernels, exact exponential moments for both systems on tiny windows, the domination
//! sweep, and the first-moment and boundary-path checks.

pub mod checks;
pub mod exact;
pub mod kernel;
pub mod system;

pub use checks::{
    boundary_path_check, boundary_paths, boundary_probability, moment_bound_check, srw_facts_check, BoundaryEstimate,
    BoundaryReport, CheckVerdict, MomentReport, SrwFactsReport, SrwFactsRow,
};
pub use exact::{
    domination_check, exp_moment_isrw_bound, exp_moment_isrw_exact, mean_count_isrw, ssep_distribution,
    ssep_exp_moment_exact, DominationInstance, DominationReport, MAX_EXACT_SITES,
};
pub use kernel::{poisson_weights, srw_kernel, KernelDomain, SrwKernel, DEFAULT_TOL, JUMP_RATE};
pub use system::{simulate_isrw, IsrwSystem, WalkerPath};
