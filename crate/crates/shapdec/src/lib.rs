//! File formats, the external model bridge, experiments and the command
//! line around `shapdec-core`.

pub mod bridge;
pub mod cli;
pub mod error;
pub mod experiments;
pub mod io;
pub mod synthetic;

pub use error::{AppError, AppResult};
pub use shapdec_core;
