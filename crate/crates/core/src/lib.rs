pub mod diagnostics;
pub mod dynamics;
pub mod error;
pub mod fields;
pub mod io;
pub mod lagrangian;
pub mod model;

#[cfg(test)]
mod testing;

pub use error::{Error, Result};
