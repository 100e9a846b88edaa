// Copyright 2026 Compulse Contributors
// SPDX-License-Identifier: Apache-2.0

//! Discretization of the control-error ensemble: a Gaussian detuning line
//! P(δ) and a truncated Lorentzian amplitude distribution G(ε).

use alloc::vec::Vec;
use core::f64::consts::PI;

use num_traits::Float;

use crate::su2::ErrorPoint;
use crate::{Error, Result};

/// One-dimensional nodes with probability weights summing to 1.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeSet {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl NodeSet {
    pub fn single(node: f64) -> Self {
        NodeSet { nodes: alloc::vec![node], weights: alloc::vec![1.0] }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn mean(&self) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(x, w)| x * w).sum()
    }

    /// Shifts every node by `offset`.
    pub fn shifted(&self, offset: f64) -> Self {
        NodeSet {
            nodes: self.nodes.iter().map(|x| x + offset).collect(),
            weights: self.weights.clone(),
        }
    }

    fn normalized(nodes: Vec<f64>, mut weights: Vec<f64>) -> Self {
        let total: f64 = weights.iter().sum();
        weights.iter_mut().for_each(|w| *w /= total);
        NodeSet { nodes, weights }
    }
}

/// Weighted ensemble of error points.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureSet {
    pub points: Vec<ErrorPoint>,
    pub weights: Vec<f64>,
}

impl QuadratureSet {
    pub fn single(point: ErrorPoint) -> Self {
        QuadratureSet { points: alloc::vec![point], weights: alloc::vec![1.0] }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn weight_sum(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn validate(&self) -> Result<()> {
        if self.points.is_empty() || self.points.len() != self.weights.len() {
            return Err(Error::invalid("quadrature needs matching, non-empty points and weights"));
        }
        if self.weights.iter().any(|w| !(*w >= 0.0)) {
            return Err(Error::invalid("quadrature weights must be nonnegative"));
        }
        if (self.weight_sum() - 1.0).abs() > 1e-12 {
            return Err(Error::invalid("quadrature weights must sum to 1"));
        }
        Ok(())
    }
}

/// Standard deviation of a Gaussian line with the given full width at half maximum.
pub fn fwhm_to_sigma(fwhm: f64) -> f64 {
    fwhm / (2.0 * (2.0 * 2.0f64.ln()).sqrt())
}

/// Physicists' Gauss–Hermite rule for weight `exp(−x²)`, ascending nodes.
///
/// Nodes and weights come from the eigen-decomposition of the Jacobi matrix
/// (implicit QL, tracking only the first eigenvector row); nodes are then
/// polished by Newton steps on the orthonormal recurrence where it is finite.
fn gauss_hermite(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut d = alloc::vec![0.0; n];
    // e[i] couples i and i + 1; e[n − 1] is scratch.
    let mut e: Vec<f64> = (0..n).map(|i| ((i + 1) as f64 / 2.0).sqrt()).collect();
    e[n - 1] = 0.0;
    let mut z = alloc::vec![0.0; n];
    z[0] = 1.0;
    for l in 0..n {
        for _ in 0..100 {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0f64, 1.0f64, 0.0f64);
            let mut deflated = false;
            for i in (l..m).rev() {
                let f = s * e[i];
                let b = c * e[i];
                let r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    deflated = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                let r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                let zf = z[i + 1];
                z[i + 1] = s * z[i] + c * zf;
                z[i] = c * z[i] - s * zf;
            }
            if deflated {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    let mut pairs: Vec<(f64, f64)> = d.into_iter().zip(z).map(|(x, v)| (x, v * v)).collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let (mut x, w): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
    for xi in x.iter_mut() {
        for _ in 0..3 {
            let (p, dp) = hermite_orthonormal(n, *xi);
            let step = p / dp;
            if !step.is_finite() {
                break;
            }
            *xi -= step;
        }
    }
    // Exact symmetry about 0.
    for i in 0..n / 2 {
        let a = 0.5 * (x[n - 1 - i] - x[i]);
        x[i] = -a;
        x[n - 1 - i] = a;
    }
    if n % 2 == 1 {
        x[n / 2] = 0.0;
    }
    let w = (0..n).map(|i| 0.5 * (w[i] + w[n - 1 - i])).collect();
    (x, w)
}

/// Orthonormal Hermite polynomial `h_n(x)` (up to a constant) and its derivative.
fn hermite_orthonormal(n: usize, x: f64) -> (f64, f64) {
    let (mut p1, mut p2) = (1.0f64, 0.0f64);
    for j in 0..n {
        let p3 = p2;
        p2 = p1;
        let jf = j as f64;
        p1 = x * (2.0 / (jf + 1.0)).sqrt() * p2 - (jf / (jf + 1.0)).sqrt() * p3;
    }
    (p1, (2.0 * n as f64).sqrt() * p2)
}

/// Gauss–Hermite nodes and probability weights for δ/Ω₀ ~ N(0, σ²).
///
/// A zero width collapses to the single node `{0}`.
pub fn gaussian_nodes(sigma: f64, k: usize) -> Result<NodeSet> {
    if k == 0 {
        return Err(Error::invalid("gaussian_nodes needs k >= 1"));
    }
    if !sigma.is_finite() || sigma < 0.0 {
        return Err(Error::invalid("gaussian width must be finite and >= 0"));
    }
    if sigma == 0.0 || k == 1 {
        return Ok(NodeSet::single(0.0));
    }
    let (x, w) = gauss_hermite(k);
    let scale = 2.0f64.sqrt() * sigma;
    Ok(NodeSet::normalized(x.into_iter().map(|x| x * scale).collect(), w))
}

/// Node spacing margin: the first alias of a component at the highest
/// frequency sits this many units of `1/σ` above it.
const ALIAS_MARGIN: f64 = 9.0;
/// The grid spans ±`GRID_HALF_WIDTH`·σ.
const GRID_HALF_WIDTH: f64 = 8.5;

/// Uniform-grid rule for N(0, σ²) that integrates `exp(i ω x)` components up to
/// `|ω| ≤ max_frequency` without aliasing.
///
/// Gauss–Hermite rules cannot resolve integrands that oscillate many times
/// across the line width (free precession over long sensing times); the
/// trapezoidal rule on a Gaussian is spectrally accurate once its node spacing
/// `h` satisfies `(2π/h − ω)·σ ≫ 1`.
pub fn gaussian_grid_nodes(sigma: f64, max_frequency: f64) -> Result<NodeSet> {
    if !sigma.is_finite() || sigma < 0.0 {
        return Err(Error::invalid("gaussian width must be finite and >= 0"));
    }
    if !max_frequency.is_finite() || max_frequency < 0.0 {
        return Err(Error::invalid("max_frequency must be finite and >= 0"));
    }
    if sigma == 0.0 {
        return Ok(NodeSet::single(0.0));
    }
    let h = 2.0 * PI / (max_frequency + ALIAS_MARGIN / sigma);
    let half = (GRID_HALF_WIDTH * sigma / h).ceil() as i64;
    let nodes: Vec<f64> = (-half..=half).map(|j| j as f64 * h).collect();
    let weights = nodes.iter().map(|x| (-0.5 * (x / sigma).powi(2)).exp()).collect();
    Ok(NodeSet::normalized(nodes, weights))
}

/// Equal-probability-mass nodes of a Lorentzian centred at ε = 1 with half
/// width `gamma`, truncated to `[1 − cutoff, 1 + cutoff]`.
///
/// Node `i` (of `k`) is the `(i + ½)/k` quantile of the truncated distribution.
pub fn lorentzian_nodes(gamma: f64, k: usize, cutoff: f64) -> Result<NodeSet> {
    if k == 0 {
        return Err(Error::invalid("lorentzian_nodes needs k >= 1"));
    }
    if !(cutoff > 0.0) || !cutoff.is_finite() {
        return Err(Error::invalid("lorentzian cutoff must be > 0"));
    }
    if cutoff > 1.0 {
        return Err(Error::invalid("lorentzian cutoff above 1 admits negative amplitudes"));
    }
    if !gamma.is_finite() || gamma < 0.0 {
        return Err(Error::invalid("lorentzian width must be finite and >= 0"));
    }
    if gamma == 0.0 || k == 1 {
        return Ok(NodeSet::single(1.0));
    }
    let reach = (cutoff / gamma).atan();
    let kf = k as f64;
    let nodes = (0..k)
        .map(|i| {
            let q = (i as f64 + 0.5) / kf;
            let s = 2.0 * q - 1.0;
            if s == 0.0 {
                1.0
            } else {
                1.0 + gamma * (s * reach).tan()
            }
        })
        .collect();
    Ok(NodeSet::normalized(nodes, alloc::vec![1.0; k]))
}

/// Cartesian product of detuning and amplitude nodes with product weights.
pub fn tensor_quadrature(delta: &NodeSet, eps: &NodeSet) -> QuadratureSet {
    let mut points = Vec::with_capacity(delta.len() * eps.len());
    let mut weights = Vec::with_capacity(delta.len() * eps.len());
    for (&d, &wd) in delta.nodes.iter().zip(&delta.weights) {
        for (&e, &we) in eps.nodes.iter().zip(&eps.weights) {
            points.push(ErrorPoint { delta_norm: d, eps: e });
            weights.push(wd * we);
        }
    }
    QuadratureSet { points, weights }
}

/// Gaussian detuning plus Lorentzian amplitude error model, in units of Ω₀.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorModel {
    /// Standard deviation of δ/Ω₀.
    pub sigma_delta: f64,
    /// Half width of ε about 1.
    pub gamma_eps: f64,
    pub n_delta_nodes: usize,
    pub n_eps_nodes: usize,
    pub eps_truncation: f64,
}

/// Default Rabi frequency (MHz) and inhomogeneous linewidth (MHz, FWHM).
pub const DEFAULT_OMEGA0_MHZ: f64 = 10.0;
pub const DEFAULT_LINEWIDTH_FWHM_MHZ: f64 = 2.0;

impl Default for ErrorModel {
    fn default() -> Self {
        ErrorModel {
            sigma_delta: fwhm_to_sigma(DEFAULT_LINEWIDTH_FWHM_MHZ) / DEFAULT_OMEGA0_MHZ,
            gamma_eps: 0.01,
            n_delta_nodes: 16,
            n_eps_nodes: 11,
            eps_truncation: 0.3,
        }
    }
}

impl ErrorModel {
    /// Noise-free model: a single node at (δ = 0, ε = 1).
    pub fn noiseless() -> Self {
        ErrorModel { sigma_delta: 0.0, gamma_eps: 0.0, n_delta_nodes: 1, n_eps_nodes: 1, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma_delta >= 0.0) || !self.sigma_delta.is_finite() {
            return Err(Error::invalid("sigma_delta must be finite and >= 0"));
        }
        if !(self.gamma_eps >= 0.0) || !self.gamma_eps.is_finite() {
            return Err(Error::invalid("gamma_eps must be finite and >= 0"));
        }
        if self.n_delta_nodes == 0 || self.n_eps_nodes == 0 {
            return Err(Error::invalid("node counts must be >= 1"));
        }
        Ok(())
    }

    pub fn delta_nodes(&self) -> Result<NodeSet> {
        gaussian_nodes(self.sigma_delta, self.n_delta_nodes)
    }

    pub fn eps_nodes(&self) -> Result<NodeSet> {
        lorentzian_nodes(self.gamma_eps, self.n_eps_nodes, self.eps_truncation)
    }

    /// Gauss–Hermite × Lorentzian product quadrature.
    pub fn quadrature(&self) -> Result<QuadratureSet> {
        self.validate()?;
        Ok(tensor_quadrature(&self.delta_nodes()?, &self.eps_nodes()?))
    }
}
