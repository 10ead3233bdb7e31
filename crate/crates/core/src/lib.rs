//! Characteristic initial-boundary value problems for linear waves near null infinity.

pub mod energy;
pub mod expansion;
pub mod error;
pub mod field;
pub mod grid;
pub mod metric;
pub mod numerics;
pub mod operator;
pub mod oracle;
pub mod solver;

pub use error::{Assumption, Error, Result};
