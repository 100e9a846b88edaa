// Copyright 2026 Compulse Contributors
// SPDX-License-Identifier: Apache-2.0

//! Momentum gradient ascent over composite-pulse parameters.
//!
//! The objective is the ensemble-averaged gate fidelity of the composite π
//! pulse. Gradients come from central finite differences; with at most seven
//! parameters the 2m extra objective calls per step are cheap.

use alloc::vec::Vec;
use core::f64::consts::{PI, TAU};

use num_traits::Euclid;
use rand::Rng;

use crate::fidelity::{channel_avg_fidelity, TargetGate};
use crate::pulse::{composite_with_angles, PulseSequence, FIVE_PIECE_ANGLES};
use crate::quadrature::{ErrorModel, QuadratureSet};
use crate::{par, Error, Result};

/// Which composite-pulse parameters are free.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Layout {
    /// `(dphi21, dphi31)` with the five-piece angles fixed at (π/2, 2π, π, 2π, π/2).
    PhasesOnly,
    /// `(dphi21, dphi31, a1..a5)` with free five-piece angles.
    PhasesAndAngles,
}

impl Layout {
    pub fn dim(self) -> usize {
        match self {
            Layout::PhasesOnly => 2,
            Layout::PhasesAndAngles => 7,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParamVector {
    pub values: Vec<f64>,
    pub layout: Layout,
}

impl ParamVector {
    pub fn phases(dphi21: f64, dphi31: f64) -> Self {
        ParamVector { values: alloc::vec![dphi21, dphi31], layout: Layout::PhasesOnly }
    }

    pub fn with_angles(dphi21: f64, dphi31: f64, angles: [f64; 5]) -> Self {
        let mut values = alloc::vec![dphi21, dphi31];
        values.extend_from_slice(&angles);
        ParamVector { values, layout: Layout::PhasesAndAngles }
    }

    pub fn validate(&self) -> Result<()> {
        if self.values.len() != self.layout.dim() {
            return Err(Error::invalid("parameter count does not match layout"));
        }
        if self.values.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("parameters must be finite"));
        }
        Ok(())
    }

    /// Clips pulse angles at zero; phases stay unconstrained.
    pub fn project(&mut self) {
        project_values(self.layout, &mut self.values);
    }

    fn angles(&self) -> [f64; 5] {
        match self.layout {
            Layout::PhasesOnly => FIVE_PIECE_ANGLES,
            Layout::PhasesAndAngles => {
                let mut a = [0.0; 5];
                a.copy_from_slice(&self.values[2..7]);
                a
            }
        }
    }

    /// The composite π pulse these parameters describe, with φ₁ = `phi1`.
    pub fn to_sequence(&self, phi1: f64) -> PulseSequence {
        composite_with_angles(self.values[0], self.values[1], phi1, self.angles())
    }

    /// `(dphi21, dphi31)` wrapped into `[0, 2π)`.
    pub fn wrapped_phases(&self) -> (f64, f64) {
        (wrap_phase(self.values[0]), wrap_phase(self.values[1]))
    }
}

pub fn wrap_phase(x: f64) -> f64 {
    let r = Euclid::rem_euclid(&x, &TAU);
    if r >= TAU {
        0.0
    } else {
        r
    }
}

fn project_values(layout: Layout, values: &mut [f64]) {
    if layout == Layout::PhasesAndAngles {
        values[2..].iter_mut().for_each(|a| *a = a.max(0.0));
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimizerConfig {
    pub learning_rate: f64,
    /// Velocity decay μ in `[0, 1)`.
    pub momentum: f64,
    /// Finite-difference step in radians.
    pub fd_step: f64,
    pub max_iters: usize,
    /// An iteration is stalled when both the best objective and the iterate's
    /// objective change by less than this.
    pub tol: f64,
    /// Consecutive stalled iterations before stopping.
    pub patience: usize,
    /// Seeds random initial points in [`multi_start`].
    pub seed: u64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        OptimizerConfig {
            learning_rate: 0.05,
            momentum: 0.9,
            fd_step: 1e-5,
            max_iters: 400,
            tol: 1e-10,
            patience: 20,
            seed: 0,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0) || !self.learning_rate.is_finite() {
            return Err(Error::invalid("learning_rate must be > 0"));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return Err(Error::invalid("momentum must lie in [0, 1)"));
        }
        if !(self.fd_step > 0.0) || !self.fd_step.is_finite() {
            return Err(Error::invalid("fd_step must be > 0"));
        }
        if !(self.tol > 0.0) {
            return Err(Error::invalid("tol must be > 0"));
        }
        if self.max_iters == 0 || self.patience == 0 {
            return Err(Error::invalid("max_iters and patience must be >= 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunStatus {
    /// Best objective stalled for `patience` iterations.
    Converged,
    MaxIters,
    /// The objective became NaN; the trajectory up to that point is kept.
    Diverged,
}

/// Raw result of an ascent over an arbitrary objective.
#[derive(Debug, Clone, PartialEq)]
pub struct AscentTrace {
    /// `(iteration, objective at the iterate)`; iteration 0 is the start point.
    pub trajectory: Vec<(usize, f64)>,
    pub best_point: Vec<f64>,
    pub best_objective: f64,
    pub final_point: Vec<f64>,
    pub status: RunStatus,
}

impl AscentTrace {
    /// Running maximum of the trajectory.
    pub fn best_so_far(&self) -> Vec<f64> {
        let mut best = f64::NEG_INFINITY;
        self.trajectory
            .iter()
            .map(|&(_, j)| {
                if j > best {
                    best = j;
                }
                best
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptRun {
    pub config: OptimizerConfig,
    pub init: ParamVector,
    pub trajectory: Vec<(usize, f64)>,
    pub best_params: ParamVector,
    pub best_objective: f64,
    pub status: RunStatus,
}

/// Central-difference gradient `(J(p + h eᵢ) − J(p − h eᵢ)) / 2h`.
pub fn fd_gradient<F>(f: &F, p: &[f64], h: f64) -> Result<Vec<f64>>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    if !(h > 0.0) || !h.is_finite() {
        return Err(Error::invalid("finite-difference step must be > 0"));
    }
    let coords: Vec<usize> = (0..p.len()).collect();
    Ok(par::map(&coords, |&i| {
        let mut plus = p.to_vec();
        let mut minus = p.to_vec();
        plus[i] += h;
        minus[i] -= h;
        (f(&plus) - f(&minus)) / (2.0 * h)
    }))
}

/// Heavy-ball ascent `v ← μv + η∇J; p ← p + v`, followed by `project`.
pub fn ascend<F, P>(f: &F, init: &[f64], cfg: &OptimizerConfig, project: P) -> Result<AscentTrace>
where
    F: Fn(&[f64]) -> f64 + Sync,
    P: Fn(&mut [f64]),
{
    cfg.validate()?;
    let mut p = init.to_vec();
    project(&mut p);
    let mut v = alloc::vec![0.0; p.len()];
    let mut j = f(&p);
    let mut trajectory = alloc::vec![(0usize, j)];
    if j.is_nan() {
        return Ok(AscentTrace {
            trajectory,
            best_point: p.clone(),
            best_objective: j,
            final_point: p,
            status: RunStatus::Diverged,
        });
    }
    let mut best_point = p.clone();
    let mut best = j;
    let mut stalled = 0usize;
    let mut last = j;
    let mut status = RunStatus::MaxIters;
    for iter in 1..=cfg.max_iters {
        let g = fd_gradient(f, &p, cfg.fd_step)?;
        for ((vi, gi), pi) in v.iter_mut().zip(&g).zip(p.iter_mut()) {
            *vi = cfg.momentum * *vi + cfg.learning_rate * gi;
            *pi += *vi;
        }
        project(&mut p);
        j = f(&p);
        trajectory.push((iter, j));
        if j.is_nan() {
            status = RunStatus::Diverged;
            break;
        }
        let gain = if j > best { j - best } else { 0.0 };
        let change = (j - last).abs();
        last = j;
        if j > best {
            best = j;
            best_point.clone_from(&p);
        }
        // Heavy-ball iterates can wander far past the optimum before the best
        // value improves again, so a stall also requires the iterate to settle.
        if gain < cfg.tol && change < cfg.tol {
            stalled += 1;
            if stalled >= cfg.patience {
                status = RunStatus::Converged;
                break;
            }
        } else {
            stalled = 0;
        }
    }
    Ok(AscentTrace { trajectory, best_point, best_objective: best, final_point: p, status })
}

/// Ensemble fidelity of the composite described by `params` over `quad`.
pub fn objective_with_quad(params: &ParamVector, quad: &QuadratureSet, target: TargetGate) -> Result<f64> {
    params.validate()?;
    channel_avg_fidelity(&params.to_sequence(0.0), target, quad)
}

/// Ensemble fidelity of the composite described by `params` under `model`.
pub fn objective(params: &ParamVector, model: &ErrorModel, target: TargetGate) -> Result<f64> {
    objective_with_quad(params, &model.quadrature()?, target)
}

/// Runs [`ascend`] on the composite-pulse objective from `init`.
pub fn momentum_ascent(
    init: &ParamVector,
    model: &ErrorModel,
    target: TargetGate,
    cfg: &OptimizerConfig,
) -> Result<OptRun> {
    init.validate()?;
    let quad = model.quadrature()?;
    let layout = init.layout;
    let f = |x: &[f64]| {
        let p = ParamVector { values: x.to_vec(), layout };
        objective_with_quad(&p, &quad, target).unwrap_or(f64::NAN)
    };
    let trace = ascend(&f, &init.values, cfg, |x: &mut [f64]| project_values(layout, x))?;
    Ok(OptRun {
        config: *cfg,
        init: init.clone(),
        trajectory: trace.trajectory,
        best_params: ParamVector { values: trace.best_point, layout },
        best_objective: trace.best_objective,
        status: trace.status,
    })
}

/// A random start: phases uniform in `[−π, π)`, angles at the five-piece template.
pub fn random_init<R: Rng + ?Sized>(layout: Layout, rng: &mut R) -> ParamVector {
    let d21 = rng.gen_range(-PI..PI);
    let d31 = rng.gen_range(-PI..PI);
    match layout {
        Layout::PhasesOnly => ParamVector::phases(d21, d31),
        Layout::PhasesAndAngles => ParamVector::with_angles(d21, d31, FIVE_PIECE_ANGLES),
    }
}

/// Independent ascents from `inits`; runs may execute in parallel.
pub fn multi_start(
    inits: &[ParamVector],
    model: &ErrorModel,
    target: TargetGate,
    cfg: &OptimizerConfig,
) -> Result<Vec<OptRun>> {
    par::map(inits, |init| momentum_ascent(init, model, target, cfg))
        .into_iter()
        .collect()
}

/// Index of the run with the highest best objective (NaN runs lose).
pub fn best_run(runs: &[OptRun]) -> Option<usize> {
    runs.iter()
        .enumerate()
        .filter(|(_, r)| !r.best_objective.is_nan())
        .max_by(|a, b| a.1.best_objective.total_cmp(&b.1.best_objective))
        .map(|(i, _)| i)
}
