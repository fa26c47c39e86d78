//! Cell search for 5G NR synchronization signal blocks.
//!
//! The crate covers the whole chain used to compare a full-rate exhaustive
//! PSS search against a two-step, dual-rate search: SSB synthesis
//! ([`waveform`]), a seeded impairment model and dual-rate front end
//! ([`channel`]), the PSS searches with exact multiply-accumulate accounting
//! ([`detector`]), SSS detection and PBCH decoding ([`postsync`]), and a
//! Monte Carlo harness producing failure-rate curves and timing tables
//! ([`harness`]).

pub mod channel;
pub mod detector;
mod error;
pub mod harness;
pub mod postsync;
pub mod waveform;

pub use error::{Error, Result};

/// Complex baseband sample type used throughout the signal chain.
pub type Cf64 = num_complex::Complex<f64>;
