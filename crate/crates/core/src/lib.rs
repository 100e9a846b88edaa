// Copyright 2026 Compulse Contributors
// SPDX-License-Identifier: Apache-2.0

//! Robust composite-pulse control of two-level spin sensors.
//!
//! The crate is `no_std` with `alloc`. It covers:
//!
//! * [`su2`]: closed-form 2×2 propagators for detuned, amplitude-scaled
//!   rectangular drive segments and their composition.
//! * [`pulse`] and [`quadrature`]: pulse-sequence construction and the
//!   discretized detuning/amplitude error ensemble.
//! * [`fidelity`]: average gate fidelity against a π rotation, pointwise and
//!   ensemble-averaged, plus fidelity maps with level contours.
//! * [`optimizer`]: momentum gradient ascent over composite-pulse parameters.
//! * [`sensing`]: spin-echo / CPMG AC-magnetometry over the detuning ensemble
//!   and the resulting shot-noise sensitivity.
//!
//! Time is measured in units of `1/Ω₀` inside [`su2`] and [`pulse`], so a
//! resonant segment of "angle" θ lasts θ/Ω₀. Only [`sensing`] works in
//! physical units (MHz, μs, μT).
//!
//! Enable the `parallel` feature (requires `std`) to spread grid and ensemble
//! evaluations over a rayon pool. Results do not depend on the partitioning.

#![no_std]
// Whenever std is anywhere in the build graph its inherent float methods
// shadow `num_traits::Float`, so that import is unused in those builds.
#![allow(unused_imports)]

extern crate alloc;
#[cfg(feature = "std")]
extern crate std;

pub mod contour;
mod error;
pub mod fidelity;
pub mod optimizer;
mod par;
pub mod pulse;
pub mod quadrature;
pub mod sensing;
pub mod su2;

pub use error::{Error, Result};
pub use fidelity::{FidelityMap, TargetGate};
pub use pulse::{PulseSegment, PulseSequence};
pub use quadrature::{ErrorModel, NodeSet, QuadratureSet};
pub use su2::{ErrorPoint, Su2Decomposition, Unitary2};
