//! Finite-field substrate and protocol state machines for dropout-resilient
//! secure aggregation.
//!
//! The crate is `no_std` (with `alloc`) and performs no IO. Every protocol
//! participant is a plain state machine that consumes and produces
//! [`wire::Message`] values; transports, clocks and threads live in the
//! companion `lightsecagg-lab` crate.
//!
//! Layout:
//!
//! - [`field`]: prime-field elements, vectors and the [`field::Meter`] op counter.
//! - [`stream`]: seed derivation and ChaCha20 counter-mode field streams.
//! - [`quant`]: fixed-point encoding of real vectors into the field.
//! - [`coding`]: T-private MDS mask encoding/decoding and Shamir sharing.
//! - [`lightsecagg`]: one-shot aggregate-mask recovery protocol.
//! - [`baseline`]: pairwise-masking SecAgg and its sparse-graph variant.
//! - [`wire`]: the message envelope shared by all three protocols.

#![cfg_attr(not(any(feature = "std", test)), no_std)]
#![forbid(unsafe_code)]

extern crate alloc;

pub mod baseline;
pub mod coding;
pub mod config;
pub mod error;
pub mod field;
pub mod lightsecagg;
pub mod quant;
pub mod stream;
pub mod wire;

pub use config::ProtocolConfig;
pub use error::{Error, Result};
pub use field::{FieldElement, FieldVector, Meter, PrimeField};
