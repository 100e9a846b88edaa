// Copyright 2026 Compulse Contributors
// SPDX-License-Identifier: Apache-2.0

mod common;

use std::f64::consts::{FRAC_PI_2, PI};

use common::{from_entries, max_diff, mul, segment_oracle, M2};
use compulse_core::pulse::{build_rectangular_pi, reference_composite_pi, FIVE_PIECE_ANGLES};
use compulse_core::su2::{decompose, segment_propagator, sequence_propagator};
use compulse_core::{ErrorPoint, PulseSegment, PulseSequence, Unitary2};
use num_complex::Complex64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn as_m2(u: &Unitary2) -> M2 {
    from_entries(u.entries())
}

fn random_segment(rng: &mut ChaCha8Rng) -> (PulseSegment, ErrorPoint) {
    let seg = PulseSegment::new(rng.gen_range(0.0..4.0 * PI), rng.gen_range(-PI..PI), rng.gen_range(0.0..1.5))
        .unwrap();
    let err = ErrorPoint::new(rng.gen_range(-3.0..3.0), rng.gen_range(0.0..2.0)).unwrap();
    (seg, err)
}

#[test]
fn segments_match_dense_exponential() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let start = std::time::Instant::now();
    for _ in 0..1000 {
        let (seg, err) = random_segment(&mut rng);
        let u = segment_propagator(&seg, err);
        let oracle = segment_oracle(seg.angle, seg.phase, seg.amp, err.delta_norm, err.eps);
        assert!(max_diff(&as_m2(&u), &oracle) < 1e-10, "{seg:?} {err:?}");
        assert!(u.unitarity_deviation() < 1e-12);
        assert!((u.det().norm() - 1.0).abs() < 1e-12);
    }
    assert!(start.elapsed().as_secs_f64() < 1.0);
}

#[test]
fn off_resonant_pi_matches_oracle() {
    let u = sequence_propagator(&build_rectangular_pi(0.0), ErrorPoint { delta_norm: 1.0, eps: 1.0 }).unwrap();
    let oracle = segment_oracle(PI, 0.0, 1.0, 1.0, 1.0);
    assert!(max_diff(&as_m2(&u), &oracle) < 1e-12);
    // Rotation by √2·π about (1, 0, 1)/√2.
    let a = PI / std::f64::consts::SQRT_2;
    let n = 1.0 / std::f64::consts::SQRT_2;
    let expected = Unitary2::from_quaternion(a.cos(), [a.sin() * n, 0.0, a.sin() * n]);
    assert!(u.max_abs_diff(&expected) < 1e-14);
}

#[test]
fn rabi_transition_probability() {
    // P(1) = Ω²/(Ω²+δ²) · sin²(θ√(Ω²+δ²)/2Ω₀)
    for k in 0..81 {
        let delta = -2.0 + 0.05 * k as f64;
        let u = sequence_propagator(&build_rectangular_pi(0.3), ErrorPoint { delta_norm: delta, eps: 1.0 }).unwrap();
        let r2 = 1.0 + delta * delta;
        let expected = (PI * r2.sqrt() / 2.0).sin().powi(2) / r2;
        assert!((u.get(1, 0).norm_sqr() - expected).abs() < 1e-13);
    }
}

#[test]
fn splitting_segments_is_exact() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..200 {
        let (seg, err) = random_segment(&mut rng);
        let k = rng.gen_range(2..9usize);
        let piece = PulseSegment { angle: seg.angle / k as f64, ..seg };
        let split = PulseSequence::new("split", vec![piece; k]).unwrap();
        let whole = segment_propagator(&seg, err);
        assert!(sequence_propagator(&split, err).unwrap().max_abs_diff(&whole) < 1e-10);
    }
}

#[test]
fn long_chains_stay_unitary() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut u = Unitary2::IDENTITY;
    for _ in 0..10_000 {
        let (seg, err) = random_segment(&mut rng);
        u = segment_propagator(&seg, err) * u;
    }
    assert!(u.unitarity_deviation() < 1e-9);
}

#[test]
fn sequence_is_time_ordered_product() {
    let seq = reference_composite_pi();
    let err = ErrorPoint { delta_norm: 0.4, eps: 0.93 };
    let mut oracle = common::eye();
    for s in seq.segments() {
        oracle = mul(&segment_oracle(s.angle, s.phase, s.amp, err.delta_norm, err.eps), &oracle);
    }
    let u = sequence_propagator(&seq, err).unwrap();
    assert!(max_diff(&as_m2(&u), &oracle) < 1e-10);
}

// Frozen from the dense-exponential oracle product of the five segments.
const FIVE_PIECE_ABS_TRACE: f64 = 1.341_371_153_073_446;

#[test]
fn five_piece_trace_regression() {
    let (d21, d31) = (97.08f64.to_radians(), (-47.88f64).to_radians());
    let phases = [0.0, d21, d31, d21, 0.0];
    let mut oracle = common::eye();
    for (a, p) in FIVE_PIECE_ANGLES.iter().zip(phases) {
        oracle = mul(&segment_oracle(*a, p, 1.0, 0.0, 1.0), &oracle);
    }
    let segs: Vec<PulseSegment> =
        FIVE_PIECE_ANGLES.iter().zip(phases).map(|(a, p)| PulseSegment::rotation(*a, p)).collect();
    let u = sequence_propagator(&PulseSequence::new("half", segs).unwrap(), ErrorPoint::NOMINAL).unwrap();
    let tr = u.trace().norm();
    assert!((tr - common::trace(&oracle).norm()).abs() < 1e-12);
    assert!((tr - FIVE_PIECE_ABS_TRACE).abs() < 1e-12);
}

#[test]
fn decompose_gauge_examples() {
    let d = decompose(&Unitary2::IDENTITY).unwrap();
    assert_eq!((d.u0, d.u), (1.0, [0.0; 3]));
    let phase = Complex64::from_polar(1.0, PI / 7.0);
    let d = decompose(&Unitary2::from_quaternion(0.0, [0.0, 1.0, 0.0]).scale(phase)).unwrap();
    assert!(d.u0.abs() < 1e-15);
    assert!((d.u[1] - 1.0).abs() < 1e-15);
    // half rotation leaves |excited amplitude| = 1/√2
    let half = segment_propagator(&PulseSegment::rotation(FRAC_PI_2, 0.0), ErrorPoint::NOMINAL);
    let psi = half.apply([Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)]);
    assert!((psi[1].norm() - 0.5f64.sqrt()).abs() < 1e-15);
}

proptest! {
    #[test]
    fn decompose_reconstruct_roundtrip(
        theta in 0.0..(4.0 * PI),
        polar in 0.0..PI,
        azimuth in -PI..PI,
        global in -PI..PI,
    ) {
        let axis = [polar.sin() * azimuth.cos(), polar.sin() * azimuth.sin(), polar.cos()];
        let u = compulse_core::su2::rotation_unitary(theta, axis).unwrap()
            .scale(Complex64::from_polar(1.0, global));
        let d = decompose(&u).unwrap();
        let norm = d.u0 * d.u0 + d.u.iter().map(|x| x * x).sum::<f64>();
        prop_assert!((norm - 1.0).abs() < 1e-12);
        prop_assert!(d.u0 >= 0.0);
        prop_assert!(d.reconstruct().phase_insensitive_diff(&u) < 1e-12);
    }

    #[test]
    fn rectangular_fidelity_is_symmetric_in_detuning(delta in 0.0..2.0f64, phase in -PI..PI) {
        let seq = build_rectangular_pi(phase);
        let a = sequence_propagator(&seq, ErrorPoint { delta_norm: delta, eps: 1.0 }).unwrap();
        let b = sequence_propagator(&seq, ErrorPoint { delta_norm: -delta, eps: 1.0 }).unwrap();
        prop_assert!((a.trace().norm() - b.trace().norm()).abs() < 1e-12);
    }
}
