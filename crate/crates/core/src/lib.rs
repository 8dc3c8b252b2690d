//! Clinical trial duration regression.
//!
//! Registry records are parsed and filtered ([`ingest`]), turned into numeric
//! features ([`embed`]), and fed to a sentence-level transformer with a
//! regression head ([`encoder`], [`train`]). Classical reference models live
//! in [`baselines`]; [`eval`] scores and compares them and [`explain`]
//! attributes predictions to criteria sentences and words.

pub mod baselines;
pub mod embed;
pub mod encoder;
pub mod error;
pub mod eval;
pub mod explain;
pub mod ingest;
pub mod synth;
pub mod train;

pub use error::{Error, ErrorClass, Result};
