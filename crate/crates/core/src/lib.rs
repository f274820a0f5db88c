pub mod digest;
pub mod embed;
pub mod error;
pub mod eval;
pub mod index;
pub mod ingest;
pub mod rag;
pub mod retrieval;
pub mod retry;
pub mod service;
pub mod synth;
pub mod tokens;

pub use error::{Error, Result};
