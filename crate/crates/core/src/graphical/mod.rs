//! Graphical construction of the exclusion process on a finite closed window.

mod arrows;
mod config;
pub mod export;
mod grid;
mod trajectory;
mod window;

pub use arrows::{ArrowField, PathExtent};
pub use config::Configuration;
pub use grid::SpaceTimeGrid;
pub use trajectory::Trajectory;
pub use window::Window;
