//! Oblivious-transfer capacity lower bounds for the binary symmetric channel.
//!
//! * [`gf2`]: Kronecker generator matrices and the subgroup chain they induce.
//! * [`channels`]: DMCs, GEC decompositions, erasure emulation.
//! * [`bounds`]: closed-form and enumerated rate bounds, curve sweeps.
//! * [`protocol`]: a finite-length simulator for the GEC OT protocol.
//! * [`cli`]: the `otcap` command-line front end.

pub mod bounds;
pub mod channels;
pub mod cli;
pub mod entropy;
pub mod error;
pub mod gf2;
pub mod protocol;

pub use error::{Error, Result};
