// Copyright 2026 Compulse Contributors
// SPDX-License-Identifier: Apache-2.0

//! Piecewise-constant drive sequences.

use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::f64::consts::{FRAC_PI_2, PI};

use crate::{Error, Result};

/// One rectangular drive segment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PulseSegment {
    /// Resonant rotation angle Ω₀t in radians; also the duration in units of 1/Ω₀.
    pub angle: f64,
    /// Drive phase φ in radians.
    pub phase: f64,
    /// Relative drive amplitude.
    pub amp: f64,
}

impl PulseSegment {
    pub fn new(angle: f64, phase: f64, amp: f64) -> Result<Self> {
        if !angle.is_finite() || angle < 0.0 {
            return Err(Error::invalid("segment angle must be finite and >= 0"));
        }
        if !amp.is_finite() || amp < 0.0 {
            return Err(Error::invalid("segment amplitude must be finite and >= 0"));
        }
        if !phase.is_finite() {
            return Err(Error::invalid("segment phase must be finite"));
        }
        Ok(PulseSegment { angle, phase, amp })
    }

    /// A unit-amplitude segment. Panics on a negative or non-finite angle.
    pub fn rotation(angle: f64, phase: f64) -> Self {
        Self::new(angle, phase, 1.0).expect("rotation angle must be finite and >= 0")
    }
}

/// An ordered, non-empty list of segments; the first segment is applied first.
#[derive(Debug, Clone, PartialEq)]
pub struct PulseSequence {
    label: String,
    segments: Vec<PulseSegment>,
}

impl PulseSequence {
    pub fn new(label: impl Into<String>, segments: Vec<PulseSegment>) -> Result<Self> {
        if segments.is_empty() {
            return Err(Error::invalid("pulse sequence must contain at least one segment"));
        }
        for s in &segments {
            PulseSegment::new(s.angle, s.phase, s.amp)?;
        }
        Ok(PulseSequence { label: label.into(), segments })
    }

    #[cfg(test)]
    pub(crate) fn from_segments_unchecked(label: &str, segments: Vec<PulseSegment>) -> Self {
        PulseSequence { label: label.to_string(), segments }
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn segments(&self) -> &[PulseSegment] {
        &self.segments
    }

    /// Σ angle; equals the duration in units of 1/Ω₀.
    pub fn total_angle(&self) -> f64 {
        self.segments.iter().map(|s| s.angle).sum()
    }

    /// The same sequence with every drive phase advanced by `offset`.
    pub fn with_phase_offset(&self, offset: f64) -> Self {
        let segments = self
            .segments
            .iter()
            .map(|s| PulseSegment { phase: s.phase + offset, ..*s })
            .collect();
        PulseSequence { label: self.label.clone(), segments }
    }
}

/// A single resonant π segment.
pub fn build_rectangular_pi(phase: f64) -> PulseSequence {
    PulseSequence {
        label: "rectangular".to_string(),
        segments: alloc::vec![PulseSegment::rotation(PI, phase)],
    }
}

/// A single resonant π/2 segment.
pub fn build_rectangular_pi_half(phase: f64) -> PulseSequence {
    PulseSequence {
        label: "rectangular-pi-half".to_string(),
        segments: alloc::vec![PulseSegment::rotation(FRAC_PI_2, phase)],
    }
}

/// Angles of the symmetric five-piece half of the composite π pulse.
pub const FIVE_PIECE_ANGLES: [f64; 5] = [FRAC_PI_2, 2.0 * PI, PI, 2.0 * PI, FRAC_PI_2];

/// Relative channel phases of the reference composite π pulse, in degrees.
pub const REFERENCE_DPHI21_DEG: f64 = 97.08;
pub const REFERENCE_DPHI31_DEG: f64 = -47.88;

/// Twice-repeated five-piece composite π pulse
/// `[π/2 @φ₁, 2π @φ₂, π @φ₃, 2π @φ₂, π/2 @φ₁]²` with `φ₂ = φ₁ + dphi21` and
/// `φ₃ = φ₁ + dphi31`. Stored as ten explicit segments.
pub fn build_composite_pi(dphi21: f64, dphi31: f64, phi1: f64) -> PulseSequence {
    composite_with_angles(dphi21, dphi31, phi1, FIVE_PIECE_ANGLES)
}

/// Composite π pulse with free five-piece angles; negative angles clip to 0.
pub fn composite_with_angles(
    dphi21: f64,
    dphi31: f64,
    phi1: f64,
    angles: [f64; 5],
) -> PulseSequence {
    let phi2 = phi1 + dphi21;
    let phi3 = phi1 + dphi31;
    let phases = [phi1, phi2, phi3, phi2, phi1];
    let segments: Vec<PulseSegment> = (0..2)
        .flat_map(|_| angles.iter().zip(phases.iter()))
        .map(|(&angle, &phase)| PulseSegment { angle: angle.max(0.0), phase, amp: 1.0 })
        .collect();
    PulseSequence { label: "composite".to_string(), segments }
}

/// The reference composite π pulse (φ₂−φ₁ = 97.08°, φ₃−φ₁ = −47.88°).
pub fn reference_composite_pi() -> PulseSequence {
    build_composite_pi(REFERENCE_DPHI21_DEG.to_radians(), REFERENCE_DPHI31_DEG.to_radians(), 0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::su2::{sequence_propagator, ErrorPoint, Unitary2};
    use num_complex::Complex64;

    const MINUS_I: Complex64 = Complex64::new(0.0, -1.0);

    #[test]
    fn rectangular_pi_examples() {
        let p = build_rectangular_pi(0.0);
        assert_eq!(p.segments().len(), 1);
        assert_eq!(p.total_angle(), PI);
        let u = sequence_propagator(&p, ErrorPoint::NOMINAL).unwrap();
        assert!(u.max_abs_diff(&Unitary2::pauli_x().scale(MINUS_I)) < 1e-15);
        let u = sequence_propagator(&build_rectangular_pi(FRAC_PI_2), ErrorPoint::NOMINAL).unwrap();
        assert!(u.max_abs_diff(&Unitary2::pauli_y().scale(MINUS_I)) < 1e-15);
    }

    #[test]
    fn composite_structure() {
        let p = build_composite_pi(0.3, -1.1, 0.5);
        assert_eq!(p.segments().len(), 10);
        assert!((p.total_angle() - 12.0 * PI).abs() < 1e-12);
        let s = p.segments();
        for k in 0..5 {
            assert_eq!(s[k], s[k + 5]);
        }
        assert_eq!(s[0].phase, 0.5);
        assert_eq!(s[1].phase, 0.5 + 0.3);
        assert_eq!(s[2].phase, 0.5 - 1.1);
        assert_eq!(s[3], s[1]);
        assert_eq!(s[4], s[0]);
    }

    #[test]
    fn collinear_composite_is_identity() {
        let p = build_composite_pi(0.0, 0.0, 0.0);
        let u = sequence_propagator(&p, ErrorPoint::NOMINAL).unwrap();
        assert!(u.max_abs_diff(&Unitary2::IDENTITY) < 1e-13);
    }

    #[test]
    fn validation() {
        assert!(PulseSegment::new(-1.0, 0.0, 1.0).is_err());
        assert!(PulseSegment::new(1.0, 0.0, -1.0).is_err());
        assert!(PulseSequence::new("x", Vec::new()).is_err());
    }

    #[test]
    fn phase_offset_shifts_all_segments() {
        let p = reference_composite_pi().with_phase_offset(1.0);
        let q = reference_composite_pi();
        for (a, b) in p.segments().iter().zip(q.segments()) {
            assert!((a.phase - b.phase - 1.0).abs() < 1e-15);
        }
    }
}
