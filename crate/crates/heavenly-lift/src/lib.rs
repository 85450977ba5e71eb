pub mod catalog;
pub mod cli;
pub mod curvature;
pub mod error;
pub mod funcspace;
pub mod geometry;
pub mod jets;
pub mod noninv;
pub mod pde;
pub mod sampling;
pub mod solutions;

pub use error::{Error, Result};
pub use jets::{Jet, Point4, Wirt};
