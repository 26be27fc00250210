pub mod annotate;
pub mod cli;
pub mod corpus;
pub mod error;
pub mod eval;
pub mod features;
pub mod models;
pub mod preprocess;
pub mod signal;
pub mod synth;

pub use error::{Error, Result};
