//! Hybrid quantum-classical classifier for identifying which generator
//! family produced an 8-qubit W-like state.
//!
//! The crate is `no_std` (with `alloc`) so the numerical core can be reused
//! without an operating system. File formats, timing and the command line
//! live in the companion `paraquannet` crate.
//!
//! Qubit 0 is always the most significant bit of a basis index, so the ket
//! `|10000000⟩` is basis index 128.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod datagen;
mod error;
pub mod ingest;
pub mod measure;
pub mod model;
pub mod noise;
pub mod rng;
pub mod simcore;

pub use error::{Error, Result};
pub use measure::{MeasureConfig, MubSchedule, Shots, Strategy};
pub use noise::NoiseConfig;
pub use simcore::{Angle, Axis, Circuit, GateKind, GateOp, StateBatch, Statevector};
