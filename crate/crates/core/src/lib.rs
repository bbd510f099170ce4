//! Finite-alphabet iterative decoders (FAIDs) for LDPC codes on the binary
//! symmetric channel, and the tooling to design them.
//!
//! A FAID passes messages from a small signed alphabet along the edges of a
//! Tanner graph. Check nodes use the usual sign-times-minimum rule; variable
//! nodes are lookup tables, or equivalently a quantized weighted sum in which
//! the channel weight depends on the incoming message values. That second
//! form has one real coefficient per unordered message tuple, which makes the
//! decoder differentiable-after-relaxation and therefore trainable.
//!
//! The crate covers the full workflow:
//!
//! * [`graph`]: Tanner graphs, alist files, quasi-cyclic constructions.
//! * [`alphabet`]: message alphabets and the threshold quantizer.
//! * [`lut`]: variable-node lookup tables, coefficient sets, and the exact
//!   interval arithmetic connecting the two representations.
//! * [`decoder`]: the hard message-passing decoder.
//! * [`landscape`]: low-weight error patterns, short cycles, trapping sets,
//!   and exhaustive failure enumeration.
//! * [`trainer`]: the unrolled decoder, surrogate gradients, and Adam.
//! * [`diversity`]: sequential decoder schedules and the design loop that
//!   grows them round by round.
//! * [`sim`]: Monte-Carlo simulation and analytic error-floor bounds.

pub mod alphabet;
pub mod decoder;
pub mod diversity;
mod error;
pub mod graph;
pub mod landscape;
pub mod lut;
pub mod sim;
pub mod trainer;

pub use error::{Error, Result};
