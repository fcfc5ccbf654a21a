pub mod discrete;
pub mod error;
pub mod gcnot;
pub mod linalg;
pub mod modesplit;
pub mod random;
pub mod symmetric;

pub use error::{Error, Result};
pub mod witness;
pub mod io;
pub mod verify;
