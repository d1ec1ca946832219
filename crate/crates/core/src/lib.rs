pub mod cli;
pub mod constructions;
pub mod error;
pub mod io;
pub mod kernel;
pub mod limit;
pub mod linalg;
pub mod maps;
pub mod random;
pub mod systems;

pub use error::{Error, Result};
pub use kernel::{AlgebraShape, Element, Tolerances};
pub use maps::CpMap;
pub use systems::InductiveSystem;
