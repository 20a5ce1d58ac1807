//! Matched and mismatched achievable rates for the two-hop oblivious-relay
//! channel, where a relay that does not know the transmitter's codebook
//! compresses its observation into a rate-limited link of `B` bits per symbol.
//!
//! The crate is organised by problem family:
//!
//! - [`prob`]: finite probability objects and information measures.
//! - [`ib`]: the information-bottleneck capacity `C(B)` and the remote
//!   rate-distortion function under log-loss, plus a brute-force oracle.
//! - [`mismatch`]: LM and GMI rates, mismatched relay bounds, compound and
//!   side-information variants.
//! - [`fading`]: GMI of a Gaussian fast-fading channel with imperfect CSI.
//! - [`sim`]: a Monte Carlo random-coding simulator.
//!
//! All public rates are in bits.

pub mod error;
pub mod fading;
pub mod ib;
pub mod mismatch;
pub(crate) mod ot;
pub mod prob;
pub mod rate;
pub(crate) mod roots;
pub mod sim;
pub mod simplex;

pub use error::{Error, Result};
pub use rate::{ConstraintLedger, InputSpec, RateResult, SolverOptions};
