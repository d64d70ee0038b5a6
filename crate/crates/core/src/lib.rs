pub mod cli;
pub mod error;
pub mod linalg;
pub mod nondisturb;
pub mod protocol;
pub mod random;
pub mod states;
pub mod tol;
pub mod upb;

pub use error::{Error, Result};
