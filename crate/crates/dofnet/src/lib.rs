//! Analysis toolkit for layered two-unicast Gaussian relay networks.
//!
//! The crate models directed layered networks carrying two independent
//! unicast flows (s1 → d1 and s2 → d2) over real-gain AWGN links and
//! provides:
//!
//! - graph machinery: validation, reachability, vertex-disjoint path
//!   finding, induced subnetworks, and the layer-doubling transform
//!   ([`netmodel`]);
//! - interference bookkeeping: interferer counts and witnesses, manageable
//!   subset search, and key-node extraction ([`interference`]);
//! - a structural classifier that decides the sum degrees-of-freedom
//!   (1, 3/2, or 2) and the full DoF region, with machine-checkable
//!   witnesses ([`classifier`]);
//! - condensed effective-gain networks with exact noise covariance
//!   propagation ([`condense`]);
//! - synthesis and verification of achievability schemes: amplify-and-forward
//!   diagonalization, two-mode buffering, and real interference alignment
//!   ([`schemes`]);
//! - an AWGN simulator for rate measurement, DoF-slope estimation, and
//!   alignment symbol-error Monte Carlo ([`simulator`]);
//! - brute-force reference oracles used to cross-check every search
//!   ([`oracle`]) and a command-line front end ([`cli`]).

pub mod classifier;
pub mod cli;
pub mod condense;
mod error;
pub mod fixtures;
pub mod interference;
pub mod netmodel;
pub mod oracle;
pub mod schemes;
pub mod simulator;

pub use error::{Error, Result};
