//! Files, formats, caching and the command line around `songsim-core`.

pub mod cli;
pub mod config;
pub mod error;
pub mod eval;
pub mod formats;
pub mod io;
pub mod pipeline;
pub mod synth;

pub use error::{AppError, AppResult};
