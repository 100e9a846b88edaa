// Copyright 2026 Compulse Contributors
// SPDX-License-Identifier: Apache-2.0

//! Average gate fidelity of a pulse against a target π rotation.
//!
//! For unitary operations the state-averaged fidelity reduces to
//! `F = (|Tr(V†U)|² + 2)/6`. Ensemble fidelity is the probability-weighted
//! mean of this quantity over the error quadrature, which equals the average
//! gate fidelity of the mixed channel because F is linear in the channel.

use alloc::vec::Vec;

use num_complex::Complex64;
use num_traits::Float;

use crate::contour::{contour_lines, Polyline};
use crate::pulse::PulseSequence;
use crate::quadrature::QuadratureSet;
use crate::su2::{decompose, sequence_propagator, ErrorPoint, Unitary2, UNITARITY_TOL};
use crate::{par, Error, Result};

/// Target π rotation about an equatorial axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TargetGate {
    /// `−i(cos φ σx + sin φ σy)`.
    FixedAxis(f64),
    /// The best equatorial π rotation for each realization.
    BestEquatorial,
}

impl TargetGate {
    /// Unitary of a fixed-axis target; `None` for [`TargetGate::BestEquatorial`].
    pub fn unitary(&self) -> Option<Unitary2> {
        match *self {
            TargetGate::FixedAxis(phi) => {
                let (s, c) = phi.sin_cos();
                Some(Unitary2::from_quaternion(0.0, [c, s, 0.0]))
            }
            TargetGate::BestEquatorial => None,
        }
    }
}

/// `(|Tr(target† U)|² + 2)/6` for unitary arguments.
pub fn unitary_avg_fidelity(u: &Unitary2, target: &Unitary2) -> Result<f64> {
    for m in [u, target] {
        let deviation = m.unitarity_deviation();
        if !(deviation <= UNITARITY_TOL) {
            return Err(Error::NonUnitary { deviation });
        }
    }
    Ok(trace_fidelity(u, target))
}

fn trace_fidelity(u: &Unitary2, target: &Unitary2) -> f64 {
    let tr: Complex64 = (target.adjoint() * *u).trace();
    ((tr.norm_sqr() + 2.0) / 6.0).clamp(0.0, 1.0)
}

/// Fidelity of one realization against the target gate.
pub fn pointwise_fidelity(u: &Unitary2, target: TargetGate) -> Result<f64> {
    match target.unitary() {
        Some(v) => unitary_avg_fidelity(u, &v),
        None => {
            let d = decompose(u)?;
            Ok(((4.0 * d.equatorial_weight() + 2.0) / 6.0).clamp(0.0, 1.0))
        }
    }
}

/// Fidelity of `seq` at one error point.
pub fn point_fidelity(seq: &PulseSequence, target: TargetGate, err: ErrorPoint) -> Result<f64> {
    pointwise_fidelity(&sequence_propagator(seq, err)?, target)
}

/// Σₖ wₖ F(U_seq(errₖ), target).
pub fn channel_avg_fidelity(
    seq: &PulseSequence,
    target: TargetGate,
    quad: &QuadratureSet,
) -> Result<f64> {
    if quad.is_empty() || quad.points.len() != quad.weights.len() {
        return Err(Error::invalid("quadrature needs matching, non-empty points and weights"));
    }
    let mut total = 0.0;
    for (p, w) in quad.points.iter().zip(&quad.weights) {
        total += w * point_fidelity(seq, target, *p)?;
    }
    Ok(total)
}

/// Pointwise fidelity over a (δ/Ω₀, Ω/Ω₀) grid.
#[derive(Debug, Clone, PartialEq)]
pub struct FidelityMap {
    pub delta_axis: Vec<f64>,
    pub omega_axis: Vec<f64>,
    /// `values[i_omega][i_delta]`.
    pub values: Vec<Vec<f64>>,
}

impl FidelityMap {
    /// Level contour in (δ/Ω₀, Ω/Ω₀) coordinates.
    pub fn contour(&self, level: f64) -> Vec<Polyline> {
        contour_lines(&self.delta_axis, &self.omega_axis, &self.values, level)
    }

    /// Row at the omega-axis sample nearest to `omega`.
    pub fn row_near(&self, omega: f64) -> Option<&[f64]> {
        let i = self
            .omega_axis
            .iter()
            .enumerate()
            .min_by(|a, b| (a.1 - omega).abs().total_cmp(&(b.1 - omega).abs()))?
            .0;
        Some(&self.values[i])
    }
}

/// `n` evenly spaced samples covering `[lo, hi]` inclusive.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => alloc::vec![lo],
        _ => (0..n).map(|i| lo + (hi - lo) * (i as f64) / ((n - 1) as f64)).collect(),
    }
}

/// Evaluates the noise-free fidelity on the grid `delta_range × omega_range`
/// with `grid_shape = (n_delta, n_omega)` samples.
pub fn fidelity_map(
    seq: &PulseSequence,
    target: TargetGate,
    delta_range: (f64, f64),
    omega_range: (f64, f64),
    grid_shape: (usize, usize),
) -> Result<FidelityMap> {
    let (nd, no) = grid_shape;
    if nd < 2 || no < 2 {
        return Err(Error::invalid("fidelity map grid must be at least 2x2"));
    }
    let finite = [delta_range.0, delta_range.1, omega_range.0, omega_range.1];
    if finite.iter().any(|x| !x.is_finite()) {
        return Err(Error::invalid("fidelity map ranges must be finite"));
    }
    if omega_range.0 < 0.0 || omega_range.1 < 0.0 {
        return Err(Error::invalid("relative drive amplitude must be >= 0"));
    }
    let delta_axis = linspace(delta_range.0, delta_range.1, nd);
    let omega_axis = linspace(omega_range.0, omega_range.1, no);
    let rows: Vec<Result<Vec<f64>>> = par::map(&omega_axis, |&eps| {
        delta_axis
            .iter()
            .map(|&d| point_fidelity(seq, target, ErrorPoint { delta_norm: d, eps }))
            .collect()
    });
    let values = rows.into_iter().collect::<Result<Vec<_>>>()?;
    Ok(FidelityMap { delta_axis, omega_axis, values })
}

/// Fidelity along δ at fixed ε. With `quad`, each sample is the ensemble
/// average over `quad` shifted to `(δ + δₖ, ε·εₖ)`.
pub fn fidelity_slice(
    seq: &PulseSequence,
    target: TargetGate,
    delta_points: &[f64],
    eps: f64,
    quad: Option<&QuadratureSet>,
) -> Result<Vec<(f64, f64)>> {
    if !(eps >= 0.0) {
        return Err(Error::invalid("relative drive amplitude must be >= 0"));
    }
    delta_points
        .iter()
        .map(|&d| {
            let f = match quad {
                None => point_fidelity(seq, target, ErrorPoint { delta_norm: d, eps })?,
                Some(q) => {
                    let shifted = QuadratureSet {
                        points: q
                            .points
                            .iter()
                            .map(|p| ErrorPoint { delta_norm: d + p.delta_norm, eps: eps * p.eps })
                            .collect(),
                        weights: q.weights.clone(),
                    };
                    channel_avg_fidelity(seq, target, &shifted)?
                }
            };
            Ok((d, f))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pulse::{build_rectangular_pi, reference_composite_pi};
    use core::f64::consts::PI;

    #[test]
    fn basic_values() {
        let x = TargetGate::FixedAxis(0.0).unitary().unwrap();
        assert!((unitary_avg_fidelity(&x, &x).unwrap() - 1.0).abs() < 1e-15);
        let f = unitary_avg_fidelity(&Unitary2::IDENTITY, &x).unwrap();
        assert!((f - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn rejects_non_unitary() {
        let m = Unitary2::IDENTITY.scale(Complex64::new(1.5, 0.0));
        assert!(unitary_avg_fidelity(&m, &Unitary2::IDENTITY).is_err());
    }

    #[test]
    fn rectangular_nominal_is_perfect() {
        let q = QuadratureSet::single(ErrorPoint::NOMINAL);
        let f = channel_avg_fidelity(&build_rectangular_pi(0.0), TargetGate::FixedAxis(0.0), &q).unwrap();
        assert!((f - 1.0).abs() < 1e-15);
    }

    #[test]
    fn mixture_is_linear() {
        let seq = reference_composite_pi();
        let a = ErrorPoint { delta_norm: 0.3, eps: 1.02 };
        let b = ErrorPoint { delta_norm: -0.8, eps: 0.97 };
        let q = QuadratureSet { points: alloc::vec![a, b], weights: alloc::vec![0.25, 0.75] };
        let t = TargetGate::BestEquatorial;
        let mixed = channel_avg_fidelity(&seq, t, &q).unwrap();
        let manual =
            0.25 * point_fidelity(&seq, t, a).unwrap() + 0.75 * point_fidelity(&seq, t, b).unwrap();
        assert!((mixed - manual).abs() < 1e-15);
    }

    #[test]
    fn best_axis_dominates_fixed_axis() {
        let seq = reference_composite_pi();
        for k in 0..40 {
            let err = ErrorPoint { delta_norm: -2.0 + 0.1 * k as f64, eps: 0.9 + 0.005 * k as f64 };
            let best = point_fidelity(&seq, TargetGate::BestEquatorial, err).unwrap();
            for j in 0..12 {
                let fixed = point_fidelity(&seq, TargetGate::FixedAxis(j as f64 * PI / 6.0), err).unwrap();
                assert!(best >= fixed - 1e-12);
            }
        }
    }

    #[test]
    fn map_validation_and_symmetry() {
        let seq = build_rectangular_pi(0.0);
        assert!(fidelity_map(&seq, TargetGate::FixedAxis(0.0), (-1.0, 1.0), (0.5, 1.5), (1, 5)).is_err());
        let m = fidelity_map(&seq, TargetGate::FixedAxis(0.0), (-2.0, 2.0), (0.5, 1.5), (41, 11)).unwrap();
        for row in &m.values {
            for i in 0..row.len() {
                assert!((row[i] - row[row.len() - 1 - i]).abs() < 1e-10);
                assert!((-1e-9..=1.0 + 1e-9).contains(&row[i]));
            }
        }
        let center = m.row_near(1.0).unwrap()[20];
        assert!((center - 1.0).abs() < 1e-15);
    }

    #[test]
    fn slice_matches_map_row() {
        let seq = reference_composite_pi();
        let t = TargetGate::BestEquatorial;
        let m = fidelity_map(&seq, t, (-1.5, 1.5), (0.8, 1.2), (31, 5)).unwrap();
        let s = fidelity_slice(&seq, t, &m.delta_axis, 1.0, None).unwrap();
        let row = m.row_near(1.0).unwrap();
        for ((_, f), g) in s.iter().zip(row) {
            assert_eq!(f, g);
        }
    }

    #[test]
    fn slice_with_single_node_quad_equals_plain() {
        let seq = reference_composite_pi();
        let t = TargetGate::BestEquatorial;
        let pts = [-0.5, 0.0, 0.7];
        let q = QuadratureSet::single(ErrorPoint::NOMINAL);
        let a = fidelity_slice(&seq, t, &pts, 1.0, Some(&q)).unwrap();
        let b = fidelity_slice(&seq, t, &pts, 1.0, None).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!((x.1 - y.1).abs() < 1e-15);
        }
    }
}
