//! Block percolation: open/closed fields on Δ-blocks of ℝ^d, path–block intersection counts,
//! a small-domain sup oracle and the tail bounds used for percolative systems.

pub mod animals;
pub mod bounds;
pub mod oracle;
pub mod system;
pub mod traversal;

pub use bounds::{
    bernstein_bound, binomial_upper_tail, fit_geom_constants, pps_seq_diagnostic, tail_psi_rhs, GeomConstants,
    PpsLevel, PpsReport, TailPsi,
};
pub use oracle::{psi_sup_oracle, OracleResult, SupOracle};
pub use system::{psi, HashedBernoulli, OpenField, PercSystem};
pub use traversal::{blocks_intersected, BlockIndex, Polyline};
