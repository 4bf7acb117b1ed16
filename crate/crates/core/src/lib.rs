//! Entanglement-assisted tomography of single-qubit devices.
//!
//! One half of an entangled photon pair passes through the device, the other
//! half does not, and joint Pauli measurements on both beams determine the
//! device's Jones matrix. The crate simulates the coincidence counts of such an
//! experiment and reconstructs the device from them.

pub mod entangled;
pub mod error;
pub mod linalg;
pub mod measurement;
pub mod pauli;
pub mod rng;
pub mod tomography;

pub use error::{Error, Result};
pub use linalg::{ComplexMatrix2, RotationMatrix3};

pub mod config;
pub mod pipeline;
pub mod report;
pub mod selftest;
