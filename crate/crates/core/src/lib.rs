//! Numerical toolkit for continuous-variable quantum-data-locking key
//! distribution over lossy bosonic channels.
//!
//! The crate is organized around three layers:
//!
//! - exact closed forms: [`gaussian`] (covariance-matrix algebra for the
//!   protocol states) and [`rates`] (locked-key rates, capacity-style bounds,
//!   noise thresholds);
//! - brute-force oracles: [`fock`] (truncated photon-number-space
//!   reconstruction of every state and spectrum, Monte Carlo codeword
//!   ensembles) and [`chernoff`] (operator concentration for the receiver's
//!   sliced coherent-state POVM);
//! - protocol accounting: [`locking`] (typical subspaces, type classes,
//!   moment/key-consumption bounds) and [`scheduler`] (key-recycling ledger
//!   with memory-time constraints).
//!
//! All floating point entropies and rates are in bits; covariance matrices
//! use the vacuum-variance-1/2 convention with quadrature ordering
//! (q1, p1, ..., qn, pn).

pub mod chernoff;
pub mod error;
pub mod fock;
pub mod gaussian;
pub mod locking;
pub mod rates;
pub mod report;
pub mod scheduler;

pub use error::{Error, Result};
pub use gaussian::{ChannelParams, GaussianState};
pub use rates::{BoundSet, RateBreakdown};
pub use report::CheckRecord;
