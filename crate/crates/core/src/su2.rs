// Copyright 2026 Compulse Contributors
// SPDX-License-Identifier: Apache-2.0

//! Exact 2×2 unitary algebra for a driven two-level system.
//!
//! In the rotating frame a rectangular drive segment is governed by
//!
//! ```text
//! H = (Ω₀ε/2)(cos φ σx + sin φ σy) + (δ/2) σz
//! ```
//!
//! so a resonant segment of duration `t` rotates the Bloch vector by `Ω₀t`.
//! Time is measured in units of `1/Ω₀` and detuning in units of `Ω₀`; the
//! propagator of each segment is evaluated in closed form.

use core::ops::Mul;

use num_complex::Complex64;
use num_traits::Float;

use crate::pulse::{PulseSegment, PulseSequence};
use crate::{Error, Result};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

/// Default tolerance for accepting a matrix as unitary at API boundaries.
pub const UNITARITY_TOL: f64 = 1e-9;

/// A 2×2 complex matrix stored row-major, used for propagators and gates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Unitary2 {
    m: [Complex64; 4],
}

impl Unitary2 {
    pub const IDENTITY: Unitary2 = Unitary2 { m: [ONE, ZERO, ZERO, ONE] };

    /// Builds a matrix from row-major entries, rejecting non-unitary input.
    pub fn new(entries: [Complex64; 4]) -> Result<Self> {
        let u = Unitary2 { m: entries };
        let deviation = u.unitarity_deviation();
        if !(deviation <= UNITARITY_TOL) {
            return Err(Error::NonUnitary { deviation });
        }
        Ok(u)
    }

    /// Builds a matrix without checking unitarity.
    pub const fn from_entries_unchecked(entries: [Complex64; 4]) -> Self {
        Unitary2 { m: entries }
    }

    pub fn entries(&self) -> [Complex64; 4] {
        self.m
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.m[2 * row + col]
    }

    pub fn pauli_x() -> Self {
        Unitary2 { m: [ZERO, ONE, ONE, ZERO] }
    }

    pub fn pauli_y() -> Self {
        Unitary2 { m: [ZERO, -I, I, ZERO] }
    }

    pub fn pauli_z() -> Self {
        Unitary2 { m: [ONE, ZERO, ZERO, -ONE] }
    }

    /// `u0·I − i(u·σ)`.
    pub fn from_quaternion(u0: f64, u: [f64; 3]) -> Self {
        let [ux, uy, uz] = u;
        Unitary2 {
            m: [
                Complex64::new(u0, -uz),
                Complex64::new(-uy, -ux),
                Complex64::new(uy, -ux),
                Complex64::new(u0, uz),
            ],
        }
    }

    /// `exp(−i angle σz / 2)`.
    pub fn z_rotation(angle: f64) -> Self {
        let (s, c) = (angle / 2.0).sin_cos();
        Unitary2 {
            m: [Complex64::new(c, -s), ZERO, ZERO, Complex64::new(c, s)],
        }
    }

    pub fn adjoint(&self) -> Self {
        let [a, b, c, d] = self.m;
        Unitary2 { m: [a.conj(), c.conj(), b.conj(), d.conj()] }
    }

    pub fn trace(&self) -> Complex64 {
        self.m[0] + self.m[3]
    }

    pub fn det(&self) -> Complex64 {
        self.m[0] * self.m[3] - self.m[1] * self.m[2]
    }

    pub fn scale(&self, factor: Complex64) -> Self {
        let [a, b, c, d] = self.m;
        Unitary2 { m: [a * factor, b * factor, c * factor, d * factor] }
    }

    /// Applies the matrix to a column state vector.
    pub fn apply(&self, psi: [Complex64; 2]) -> [Complex64; 2] {
        let [a, b, c, d] = self.m;
        [a * psi[0] + b * psi[1], c * psi[0] + d * psi[1]]
    }

    /// Max absolute entry of `U†U − I`.
    pub fn unitarity_deviation(&self) -> f64 {
        let p = self.adjoint() * *self;
        let id = Self::IDENTITY;
        p.m.iter()
            .zip(id.m.iter())
            .map(|(x, y)| (x - y).norm())
            .fold(0.0, f64::max)
    }

    pub fn is_unitary(&self, tol: f64) -> bool {
        self.unitarity_deviation() <= tol
    }

    /// Max absolute entry difference.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.m
            .iter()
            .zip(other.m.iter())
            .map(|(x, y)| (x - y).norm())
            .fold(0.0, f64::max)
    }

    /// Distance after optimally aligning the global phase of `other` to `self`.
    pub fn phase_insensitive_diff(&self, other: &Self) -> f64 {
        let overlap = (other.adjoint() * *self).trace();
        let phase = if overlap.norm() > 0.0 { overlap / overlap.norm() } else { ONE };
        self.max_abs_diff(&other.scale(phase))
    }
}

impl Mul for Unitary2 {
    type Output = Unitary2;

    fn mul(self, rhs: Unitary2) -> Unitary2 {
        let [a, b, c, d] = self.m;
        let [e, f, g, h] = rhs.m;
        Unitary2 {
            m: [a * e + b * g, a * f + b * h, c * e + d * g, c * f + d * h],
        }
    }
}

/// SU(2) coordinates: `U = e^{iα}(u0·I − i u·σ)` with the global phase removed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Su2Decomposition {
    pub u0: f64,
    pub u: [f64; 3],
}

impl Su2Decomposition {
    pub fn reconstruct(&self) -> Unitary2 {
        Unitary2::from_quaternion(self.u0, self.u)
    }

    /// Squared norm of the equatorial (x, y) part of the rotation axis vector.
    pub fn equatorial_weight(&self) -> f64 {
        self.u[0] * self.u[0] + self.u[1] * self.u[1]
    }
}

/// A single draw from the control-error ensemble.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorPoint {
    /// Detuning in units of the nominal Rabi frequency, δ/Ω₀.
    pub delta_norm: f64,
    /// Relative drive amplitude, nominal 1.
    pub eps: f64,
}

impl ErrorPoint {
    pub const NOMINAL: ErrorPoint = ErrorPoint { delta_norm: 0.0, eps: 1.0 };

    pub fn new(delta_norm: f64, eps: f64) -> Result<Self> {
        if !delta_norm.is_finite() || !eps.is_finite() || eps < 0.0 {
            return Err(Error::invalid("error point needs finite delta and eps >= 0"));
        }
        Ok(ErrorPoint { delta_norm, eps })
    }
}

impl Default for ErrorPoint {
    fn default() -> Self {
        Self::NOMINAL
    }
}

/// `cos(θ/2)I − i sin(θ/2)(n·σ)` for a unit axis `n`.
pub fn rotation_unitary(theta: f64, axis: [f64; 3]) -> Result<Unitary2> {
    let norm = (axis[0] * axis[0] + axis[1] * axis[1] + axis[2] * axis[2]).sqrt();
    if !((norm - 1.0).abs() <= 1e-9) || !theta.is_finite() {
        return Err(Error::invalid("rotation axis must be a unit vector"));
    }
    let (s, c) = (theta / 2.0).sin_cos();
    Ok(Unitary2::from_quaternion(c, [s * axis[0], s * axis[1], s * axis[2]]))
}

/// Closed-form (Rabi formula) propagator of one rectangular segment.
pub fn segment_propagator(seg: &PulseSegment, err: ErrorPoint) -> Unitary2 {
    let omega = seg.amp * err.eps;
    let delta = err.delta_norm;
    let rate = omega.hypot(delta);
    if rate == 0.0 || seg.angle == 0.0 {
        return Unitary2::IDENTITY;
    }
    let half = 0.5 * seg.angle * rate;
    let (s, c) = half.sin_cos();
    let (sp, cp) = seg.phase.sin_cos();
    let k = s / rate;
    Unitary2::from_quaternion(c, [k * omega * cp, k * omega * sp, k * delta])
}

/// Time-ordered product of a sequence; the first segment acts first.
pub fn sequence_propagator(seq: &PulseSequence, err: ErrorPoint) -> Result<Unitary2> {
    if seq.segments().is_empty() {
        return Err(Error::invalid("pulse sequence is empty"));
    }
    Ok(seq
        .segments()
        .iter()
        .fold(Unitary2::IDENTITY, |acc, seg| segment_propagator(seg, err) * acc))
}

/// Splits a unitary into SU(2) coordinates, fixing the global-phase gauge so
/// that `u0 ≥ 0`, or the first non-negligible component of `u` is `≥ 0` when
/// `u0 ≈ 0`.
pub fn decompose(u: &Unitary2) -> Result<Su2Decomposition> {
    let deviation = u.unitarity_deviation();
    if !(deviation <= UNITARITY_TOL) {
        return Err(Error::NonUnitary { deviation });
    }
    let [a, b, c, d] = u.entries();
    // e^{iα}·(u0, ux, uy, uz)
    let comps = [
        (a + d) * 0.5,
        (b + c) * I * 0.5,
        (c - b) * 0.5,
        (a - d) * I * 0.5,
    ];
    let pivot = comps
        .iter()
        .copied()
        .fold(ZERO, |best, z| if z.norm() > best.norm() { z } else { best });
    let phase = pivot / pivot.norm();
    let mut re = [0.0f64; 4];
    for (r, z) in re.iter_mut().zip(comps.iter()) {
        *r = (z / phase).re;
    }
    const GAUGE_EPS: f64 = 1e-12;
    let lead = re.iter().copied().find(|x| x.abs() > GAUGE_EPS).unwrap_or(1.0);
    if lead < 0.0 {
        re.iter_mut().for_each(|x| *x = -*x);
    }
    let n = (re.iter().map(|x| x * x).sum::<f64>()).sqrt();
    Ok(Su2Decomposition { u0: re[0] / n, u: [re[1] / n, re[2] / n, re[3] / n] })
}

#[cfg(test)]
mod tests {
    use super::*;
    use core::f64::consts::{FRAC_1_SQRT_2, PI};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn rotation_identity_and_pi() {
        let u = rotation_unitary(0.0, [0.0, 0.6, 0.8]).unwrap();
        assert!(u.max_abs_diff(&Unitary2::IDENTITY) < 1e-15);
        let u = rotation_unitary(PI, [1.0, 0.0, 0.0]).unwrap();
        let expect = Unitary2::from_entries_unchecked([ZERO, c(0.0, -1.0), c(0.0, -1.0), ZERO]);
        assert!(u.max_abs_diff(&expect) < 1e-15);
    }

    #[test]
    fn half_rotation_excites_half() {
        let u = rotation_unitary(PI / 2.0, [1.0, 0.0, 0.0]).unwrap();
        let psi = u.apply([ONE, ZERO]);
        assert!((psi[1].norm() - FRAC_1_SQRT_2).abs() < 1e-15);
    }

    #[test]
    fn rotation_rejects_non_unit_axis() {
        assert!(matches!(
            rotation_unitary(1.0, [1.0, 1.0, 0.0]),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn resonant_pi_and_two_pi() {
        let seg = PulseSegment::new(PI, 0.0, 1.0).unwrap();
        let u = segment_propagator(&seg, ErrorPoint::NOMINAL);
        let minus_i_x = Unitary2::pauli_x().scale(-I);
        assert!(u.max_abs_diff(&minus_i_x) < 1e-15);

        let seg = PulseSegment::new(2.0 * PI, 1.234, 1.0).unwrap();
        let u = segment_propagator(&seg, ErrorPoint::NOMINAL);
        assert!(u.max_abs_diff(&Unitary2::IDENTITY.scale(-ONE)) < 1e-15);
    }

    #[test]
    fn zero_drive_zero_detuning_is_identity() {
        let seg = PulseSegment::new(PI, 0.3, 1.0).unwrap();
        let u = segment_propagator(&seg, ErrorPoint { delta_norm: 0.0, eps: 0.0 });
        assert_eq!(u, Unitary2::IDENTITY);
    }

    #[test]
    fn empty_sequence_rejected() {
        let seq = PulseSequence::from_segments_unchecked("empty", alloc::vec![]);
        assert!(sequence_propagator(&seq, ErrorPoint::NOMINAL).is_err());
    }

    #[test]
    fn two_full_turns_compose_to_identity() {
        let seg = PulseSegment::new(2.0 * PI, 0.0, 1.0).unwrap();
        let seq = PulseSequence::new("2x2pi", alloc::vec![seg, seg]).unwrap();
        let u = sequence_propagator(&seq, ErrorPoint::NOMINAL).unwrap();
        assert!(u.max_abs_diff(&Unitary2::IDENTITY) < 1e-14);
    }

    #[test]
    fn decompose_examples() {
        let d = decompose(&Unitary2::IDENTITY).unwrap();
        assert!((d.u0 - 1.0).abs() < 1e-15 && d.u.iter().all(|x| x.abs() < 1e-15));

        let d = decompose(&Unitary2::pauli_x().scale(-I)).unwrap();
        assert!(d.u0.abs() < 1e-15);
        assert!((d.u[0] - 1.0).abs() < 1e-15 && d.u[1].abs() < 1e-15 && d.u[2].abs() < 1e-15);

        let phase = Complex64::from_polar(1.0, PI / 7.0);
        let d = decompose(&Unitary2::pauli_y().scale(-I * phase)).unwrap();
        assert!(d.u0.abs() < 1e-12);
        assert!(d.u[0].abs() < 1e-12 && (d.u[1] - 1.0).abs() < 1e-12 && d.u[2].abs() < 1e-12);

        // −1 gauge flips to +1
        let d = decompose(&Unitary2::IDENTITY.scale(-ONE)).unwrap();
        assert!((d.u0 - 1.0).abs() < 1e-15);
    }

    #[test]
    fn decompose_rejects_non_unitary() {
        let m = Unitary2::from_entries_unchecked([c(2.0, 0.0), ZERO, ZERO, ONE]);
        assert!(matches!(decompose(&m), Err(Error::NonUnitary { .. })));
        assert!(Unitary2::new(m.entries()).is_err());
    }

    #[test]
    fn z_rotation_matches_rotation_unitary() {
        let a = Unitary2::z_rotation(0.77);
        let b = rotation_unitary(0.77, [0.0, 0.0, 1.0]).unwrap();
        assert!(a.max_abs_diff(&b) < 1e-15);
    }
}
