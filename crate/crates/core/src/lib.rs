pub mod cli;
pub mod curves;
pub mod error;
pub mod experiments;
pub mod io;
pub mod manifolds;
pub mod matfun;
pub mod sampling;
pub mod subgroups;

pub use error::{GeoError, Result};
