//! Multiscale blocks: the parameter schedule, block geometry, and block classification
//! (rarefied, turbulent, bad, locally spoiled, stuck, rough) against an environment.

pub mod analysis;
pub mod geometry;
pub mod schedule;

pub use analysis::{
    blocks_in, blocks_on_path, path_counts, predicate, predicates, recursion_check, restrict_to_superblock, theta_star,
    verdicts_csv, verdicts_svg, window_sum, BlockAnalyzer, BlockPredicate, BlockVerdict, HatSigma, Kind, PathCheck,
    RecursionReport, ThetaReport,
};
pub use geometry::{geometry, BlockId, BlockKind, Region, TimeSpan};
pub use schedule::{make_schedule, rho_bar_infinity, ProductBounds, ScaleLevel, ScaleSchedule, DEFAULT_EXPONENT};
