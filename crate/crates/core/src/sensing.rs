// Copyright 2026 Compulse Contributors
// SPDX-License-Identifier: Apache-2.0

//! Spin-echo and CPMG AC magnetometry over an inhomogeneously broadened
//! ensemble.
//!
//! A run is `π/2 – t₀ – π – t₁ – π – … – t_N – π/2(φ_r)` starting from `|0⟩`.
//! Free intervals follow the CPMG layout `T/2N, T/N, …, T/N, T/2N` for a total
//! free precession time `T = 2·tau_half` (spin echo is `N = 1`). A square-wave
//! field of amplitude `B` flips sign at every π pulse and is gated off while
//! pulses play. Pulses take real time and see the same detuning as the free
//! precession.
//!
//! Units: MHz for frequencies, μs for times, μT for fields. Angles from
//! frequencies carry the explicit 2π, e.g. a free interval rotates about z by
//! `2π(δ t + γ_e B t)`.
//!
//! The detuning average uses a uniform grid fine enough to resolve the fastest
//! free-precession oscillation (see [`gaussian_grid_nodes`]); the T₂*-scale
//! decay of the detuning-modulation terms comes out of that average. Pure
//! dephasing under decoupling enters as the envelope `exp(−(T/T₂(N))^p)` with
//! `T₂(N) = T₂·N^κ`.

use alloc::vec::Vec;
use core::f64::consts::{PI, TAU};

use num_complex::Complex64;
use num_traits::Float;

use crate::contour::{contour_lines, Polyline};
use crate::pulse::{build_rectangular_pi_half, PulseSequence};
use crate::quadrature::{
    fwhm_to_sigma, gaussian_grid_nodes, ErrorModel, NodeSet, DEFAULT_LINEWIDTH_FWHM_MHZ,
    DEFAULT_OMEGA0_MHZ,
};
use crate::su2::{sequence_propagator, ErrorPoint, Unitary2};
use crate::{par, Error, Result};

/// Electron gyromagnetic ratio in MHz/mT.
pub const GAMMA_E_MHZ_PER_MT: f64 = 28.03;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SensorParams {
    /// Nominal Rabi frequency Ω₀ (MHz).
    pub omega0_mhz: f64,
    /// Gyromagnetic ratio (MHz/mT).
    pub gamma_e_mhz_per_mt: f64,
    /// Free-induction dephasing time (μs). Informational; the detuning width
    /// of the [`ErrorModel`] is what the simulation uses.
    pub t2star_us: f64,
    /// Echo coherence time (μs).
    pub t2_us: f64,
    /// Stretch exponent p of the coherence envelope.
    pub stretch: f64,
    /// Deliberate carrier detuning (MHz) added to every ensemble member.
    pub detuning_offset_mhz: f64,
    /// κ in `T₂(N) = T₂·N^κ`.
    pub dd_scaling: f64,
    /// Initialization plus readout time per shot (μs).
    pub overhead_us: f64,
    /// Multiplies η from nT·Hz⁻¹ᐟ² into the reported unit.
    pub eta_calibration: f64,
}

/// T₂* of a Gaussian line with standard deviation `sigma_mhz`:
/// the free-induction decay is `exp(−(t/T₂*)²)` with `T₂* = √2/(2πσ)`.
pub fn t2star_from_sigma(sigma_mhz: f64) -> f64 {
    2.0f64.sqrt() / (TAU * sigma_mhz)
}

impl Default for SensorParams {
    fn default() -> Self {
        SensorParams {
            omega0_mhz: DEFAULT_OMEGA0_MHZ,
            gamma_e_mhz_per_mt: GAMMA_E_MHZ_PER_MT,
            t2star_us: t2star_from_sigma(fwhm_to_sigma(DEFAULT_LINEWIDTH_FWHM_MHZ)),
            t2_us: 104.0,
            stretch: 1.5,
            detuning_offset_mhz: 0.0,
            dd_scaling: 2.0 / 3.0,
            overhead_us: 5.0,
            eta_calibration: 1.0,
        }
    }
}

impl SensorParams {
    pub fn validate(&self) -> Result<()> {
        let pos = [self.omega0_mhz, self.t2star_us, self.stretch];
        if pos.iter().any(|x| !(*x > 0.0) || !x.is_finite()) {
            return Err(Error::invalid("omega0, t2star and stretch must be finite and > 0"));
        }
        if !(self.t2_us >= self.t2star_us) {
            return Err(Error::invalid("t2 must be >= t2star"));
        }
        if !self.detuning_offset_mhz.is_finite() || !self.gamma_e_mhz_per_mt.is_finite() {
            return Err(Error::invalid("detuning offset and gamma_e must be finite"));
        }
        if !(self.dd_scaling >= 0.0) || !(self.overhead_us >= 0.0) || !(self.eta_calibration > 0.0) {
            return Err(Error::invalid("dd_scaling, overhead must be >= 0 and calibration > 0"));
        }
        Ok(())
    }

    /// γ_e in MHz per μT.
    pub fn gamma_mhz_per_ut(&self) -> f64 {
        self.gamma_e_mhz_per_mt * 1e-3
    }

    pub fn detuning_offset_norm(&self) -> f64 {
        self.detuning_offset_mhz / self.omega0_mhz
    }

    /// Coherence time under N-pulse decoupling.
    pub fn t2_for(&self, n_pi: u32) -> f64 {
        self.t2_us * (n_pi.max(1) as f64).powf(self.dd_scaling)
    }

    pub fn with_detuning_norm(&self, detuning_norm: f64) -> Self {
        SensorParams { detuning_offset_mhz: detuning_norm * self.omega0_mhz, ..*self }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProtocolKind {
    SpinEcho,
    Cpmg { n_pi: u32 },
}

impl ProtocolKind {
    pub fn n_pi(self) -> u32 {
        match self {
            ProtocolKind::SpinEcho => 1,
            ProtocolKind::Cpmg { n_pi } => n_pi,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProtocolSpec {
    pub kind: ProtocolKind,
    /// Half the total free precession time (μs).
    pub tau_half_us: f64,
    /// Square-wave amplitude (μT).
    pub b_amp_ut: f64,
    pub pi_pulse: PulseSequence,
    pub pi_half_pulse: PulseSequence,
    /// Phase offset of the closing π/2 pulse (rad).
    pub readout_phase: f64,
    /// Replace pulses by their error-free, zero-duration action.
    pub ideal_pulses: bool,
}

impl ProtocolSpec {
    /// Spin echo with rectangular π/2 pulses and the given π pulse.
    pub fn spin_echo(pi_pulse: PulseSequence, tau_half_us: f64) -> Self {
        ProtocolSpec {
            kind: ProtocolKind::SpinEcho,
            tau_half_us,
            b_amp_ut: 0.0,
            pi_pulse,
            pi_half_pulse: build_rectangular_pi_half(0.0),
            readout_phase: 0.0,
            ideal_pulses: false,
        }
    }

    /// CPMG-N with total free precession time `total_time_us`.
    pub fn cpmg(pi_pulse: PulseSequence, n_pi: u32, total_time_us: f64) -> Self {
        let kind = if n_pi == 1 { ProtocolKind::SpinEcho } else { ProtocolKind::Cpmg { n_pi } };
        ProtocolSpec { kind, ..Self::spin_echo(pi_pulse, 0.5 * total_time_us) }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tau_half_us > 0.0) || !self.tau_half_us.is_finite() {
            return Err(Error::invalid("tau_half must be finite and > 0"));
        }
        if self.kind.n_pi() == 0 {
            return Err(Error::invalid("CPMG needs at least one pi pulse"));
        }
        if !self.b_amp_ut.is_finite() || !self.readout_phase.is_finite() {
            return Err(Error::invalid("b_amp and readout_phase must be finite"));
        }
        if self.pi_pulse.segments().is_empty() || self.pi_half_pulse.segments().is_empty() {
            return Err(Error::invalid("pulse sequences must be non-empty"));
        }
        Ok(())
    }

    pub fn total_free_time(&self) -> f64 {
        2.0 * self.tau_half_us
    }

    pub fn free_intervals(&self) -> Vec<f64> {
        free_intervals(self.total_free_time(), self.kind.n_pi())
    }

    /// Summed drive angle of all pulses in one run (rad, i.e. units of 1/Ω₀).
    pub fn total_pulse_angle(&self) -> f64 {
        if self.ideal_pulses {
            return 0.0;
        }
        2.0 * self.pi_half_pulse.total_angle() + self.kind.n_pi() as f64 * self.pi_pulse.total_angle()
    }

    /// Time spent in pulses (μs).
    pub fn pulse_time(&self, s: &SensorParams) -> f64 {
        self.total_pulse_angle() / (TAU * s.omega0_mhz)
    }

    /// Duration of one shot including overhead (μs).
    pub fn sequence_duration(&self, s: &SensorParams) -> f64 {
        self.total_free_time() + self.pulse_time(s) + s.overhead_us
    }

    fn with_b(&self, b_amp_ut: f64) -> Self {
        ProtocolSpec { b_amp_ut, ..self.clone() }
    }
}

/// `T/2N, T/N, …, T/N, T/2N` (N + 1 intervals); `T/2, T/2` for N = 1.
pub fn free_intervals(total_us: f64, n_pi: u32) -> Vec<f64> {
    let n = n_pi.max(1) as usize;
    let unit = total_us / n as f64;
    let mut v = alloc::vec![unit; n + 1];
    v[0] = 0.5 * unit;
    v[n] = 0.5 * unit;
    v
}

/// `exp(−i(2π δ t + φ_B) σz / 2)`.
pub fn free_evolution(delta_mhz: f64, phase_b: f64, t_us: f64) -> Unitary2 {
    Unitary2::z_rotation(TAU * delta_mhz * t_us + phase_b)
}

/// Field phase `2π γ_e ∫B dt` over free interval `segment_index` of an
/// `n_pi`-pulse run with total free time `2·tau_half_us`. The square wave is
/// positive in the first interval and flips at every π pulse.
pub fn square_wave_phase(
    b_amp_ut: f64,
    tau_half_us: f64,
    segment_index: usize,
    n_pi: u32,
    gamma_mhz_per_ut: f64,
) -> f64 {
    let intervals = free_intervals(2.0 * tau_half_us, n_pi);
    let Some(&t) = intervals.get(segment_index) else {
        return 0.0;
    };
    let sign = if segment_index % 2 == 0 { 1.0 } else { -1.0 };
    sign * TAU * gamma_mhz_per_ut * b_amp_ut * t
}

/// Population of `|0⟩` as a function of readout phase φ:
/// `p0(φ) = a + 2 Re(z e^{iφ})`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Fringe {
    pub a: f64,
    pub z: Complex64,
}

impl Fringe {
    pub fn p0(&self, readout_phase: f64) -> f64 {
        self.a + 2.0 * (self.z * Complex64::from_polar(1.0, readout_phase)).re
    }
}

/// Ensemble fringe with its coherence envelope.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnsembleFringe {
    pub fringe: Fringe,
    pub envelope: f64,
}

impl EnsembleFringe {
    /// `1/2 + envelope·(⟨p0(φ)⟩ − 1/2)`.
    pub fn signal(&self, readout_phase: f64) -> f64 {
        (0.5 + self.envelope * (self.fringe.p0(readout_phase) - 0.5)).clamp(0.0, 1.0)
    }
}

struct PulsePropagators {
    prep: Unitary2,
    pi: Unitary2,
    readout: Unitary2,
}

impl PulsePropagators {
    fn new(p: &ProtocolSpec, err: ErrorPoint) -> Result<Self> {
        let at = if p.ideal_pulses { ErrorPoint::NOMINAL } else { err };
        Ok(PulsePropagators {
            prep: sequence_propagator(&p.pi_half_pulse, at)?,
            pi: sequence_propagator(&p.pi_pulse, at)?,
            readout: sequence_propagator(&p.pi_half_pulse, at)?,
        })
    }
}

/// Free-evolution z-rotation angles of every interval at detuning `delta_mhz`.
fn interval_angles<'a>(
    intervals: &'a [f64],
    field_phases: &'a [f64],
    delta_mhz: f64,
) -> impl Iterator<Item = f64> + 'a {
    intervals.iter().zip(field_phases).map(move |(t, fb)| TAU * delta_mhz * t + fb)
}

fn field_phases(p: &ProtocolSpec, s: &SensorParams) -> Vec<f64> {
    let n = p.kind.n_pi();
    let g = s.gamma_mhz_per_ut();
    (0..=n as usize)
        .map(|k| square_wave_phase(p.b_amp_ut, p.tau_half_us, k, n, g))
        .collect()
}

fn node_fringe(props: &PulsePropagators, intervals: &[f64], phases: &[f64], delta_mhz: f64) -> Fringe {
    let mut psi = props.prep.apply([Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)]);
    let n = intervals.len() - 1;
    for (k, angle) in interval_angles(intervals, phases, delta_mhz).enumerate() {
        let (s, c) = (0.5 * angle).sin_cos();
        psi = [psi[0] * Complex64::new(c, -s), psi[1] * Complex64::new(c, s)];
        if k < n {
            psi = props.pi.apply(psi);
        }
    }
    let r = props.readout;
    let x = r.get(0, 0) * psi[0];
    let y = r.get(0, 1) * psi[1];
    Fringe { a: x.norm_sqr() + y.norm_sqr(), z: x * y.conj() }
}

/// Pure-state run at one error point; `err.delta_norm` is the total detuning
/// (random part plus carrier offset) in units of Ω₀.
pub fn simulate_fringe(p: &ProtocolSpec, err: ErrorPoint, s: &SensorParams) -> Result<Fringe> {
    p.validate()?;
    s.validate()?;
    let props = PulsePropagators::new(p, err)?;
    let intervals = p.free_intervals();
    let phases = field_phases(p, s);
    Ok(node_fringe(&props, &intervals, &phases, err.delta_norm * s.omega0_mhz))
}

/// `|⟨0|ψ⟩|²` after one pure-state run, without decoherence.
pub fn simulate_run(p: &ProtocolSpec, err: ErrorPoint, s: &SensorParams) -> Result<f64> {
    Ok(simulate_fringe(p, err, s)?.p0(p.readout_phase).clamp(0.0, 1.0))
}

/// Highest angular frequency (rad per unit δ/Ω₀) of a run's δ-dependence.
fn detuning_bandwidth(p: &ProtocolSpec, s: &SensorParams) -> f64 {
    TAU * s.omega0_mhz * p.total_free_time() + p.total_pulse_angle()
}

/// Detuning nodes (δ/Ω₀, carrier offset included) used for one protocol.
pub fn sensing_delta_nodes(p: &ProtocolSpec, s: &SensorParams, model: &ErrorModel) -> Result<NodeSet> {
    let grid = gaussian_grid_nodes(model.sigma_delta, detuning_bandwidth(p, s))?;
    Ok(grid.shifted(s.detuning_offset_norm()))
}

/// Ensemble-averaged fringe and coherence envelope.
pub fn ensemble_fringe(p: &ProtocolSpec, s: &SensorParams, model: &ErrorModel) -> Result<EnsembleFringe> {
    p.validate()?;
    s.validate()?;
    model.validate()?;
    let deltas = sensing_delta_nodes(p, s, model)?;
    let eps = if p.ideal_pulses { NodeSet::single(1.0) } else { model.eps_nodes()? };
    let intervals = p.free_intervals();
    let phases = field_phases(p, s);
    let nodes: Vec<(f64, f64)> = deltas.nodes.iter().copied().zip(deltas.weights.iter().copied()).collect();
    let parts: Vec<Result<Fringe>> = par::map(&nodes, |&(d, wd)| {
        let mut acc = Fringe { a: 0.0, z: Complex64::new(0.0, 0.0) };
        for (&e, &we) in eps.nodes.iter().zip(&eps.weights) {
            let props = PulsePropagators::new(p, ErrorPoint { delta_norm: d, eps: e })?;
            let f = node_fringe(&props, &intervals, &phases, d * s.omega0_mhz);
            acc.a += we * f.a;
            acc.z += f.z * we;
        }
        Ok(Fringe { a: wd * acc.a, z: acc.z * wd })
    });
    let mut total = Fringe { a: 0.0, z: Complex64::new(0.0, 0.0) };
    for f in parts {
        let f = f?;
        total.a += f.a;
        total.z += f.z;
    }
    let t2 = s.t2_for(p.kind.n_pi());
    let envelope = (-(p.total_free_time() / t2).powf(s.stretch)).exp();
    Ok(EnsembleFringe { fringe: total, envelope })
}

/// `S = 1/2 + exp(−(T/T₂(N))^p)·Σₖ wₖ(p0(errₖ) − 1/2)` at the protocol's readout phase.
pub fn ensemble_signal(p: &ProtocolSpec, s: &SensorParams, model: &ErrorModel) -> Result<f64> {
    Ok(ensemble_fringe(p, s, model)?.signal(p.readout_phase))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepAxis {
    /// Sweeps `tau_half_us`.
    Tau,
    /// Sweeps `b_amp_ut`.
    BAmp,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SignalTrace {
    pub axis: SweepAxis,
    pub x: Vec<f64>,
    pub signal: Vec<f64>,
}

fn with_axis(p: &ProtocolSpec, axis: SweepAxis, x: f64) -> ProtocolSpec {
    match axis {
        SweepAxis::Tau => ProtocolSpec { tau_half_us: x, ..p.clone() },
        SweepAxis::BAmp => p.with_b(x),
    }
}

/// Ensemble signal along one axis.
pub fn sweep_signal(
    p: &ProtocolSpec,
    s: &SensorParams,
    model: &ErrorModel,
    axis: SweepAxis,
    points: &[f64],
) -> Result<SignalTrace> {
    if points.is_empty() {
        return Err(Error::invalid("sweep needs at least one point"));
    }
    let signal = points
        .iter()
        .map(|&x| ensemble_signal(&with_axis(p, axis, x), s, model))
        .collect::<Result<Vec<_>>>()?;
    Ok(SignalTrace { axis, x: points.to_vec(), signal })
}

/// Ensemble signal over `tau_points × b_points`; `values[i_tau][i_b]`.
pub fn sweep_signal_2d(
    p: &ProtocolSpec,
    s: &SensorParams,
    model: &ErrorModel,
    tau_points: &[f64],
    b_points: &[f64],
) -> Result<Vec<Vec<f64>>> {
    if tau_points.is_empty() || b_points.is_empty() {
        return Err(Error::invalid("sweep grid must be non-empty"));
    }
    tau_points
        .iter()
        .map(|&tau| {
            let pt = with_axis(p, SweepAxis::Tau, tau);
            Ok(sweep_signal(&pt, s, model, SweepAxis::BAmp, b_points)?.signal)
        })
        .collect()
}

/// Shot-noise readout model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReadoutModel {
    pub photons_per_shot: f64,
    /// Fluorescence contrast C in (0, 1].
    pub contrast: f64,
    pub shots: u64,
}

impl Default for ReadoutModel {
    fn default() -> Self {
        ReadoutModel { photons_per_shot: 1000.0, contrast: 0.1, shots: 1 }
    }
}

impl ReadoutModel {
    pub fn validate(&self) -> Result<()> {
        if !(self.photons_per_shot >= 1.0) || !self.photons_per_shot.is_finite() {
            return Err(Error::invalid("photons_per_shot must be >= 1"));
        }
        if !(self.contrast > 0.0 && self.contrast <= 1.0) {
            return Err(Error::invalid("contrast must lie in (0, 1]"));
        }
        if self.shots == 0 {
            return Err(Error::invalid("shots must be >= 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SensitivityResult {
    /// Sensitivity (nT·Hz⁻¹ᐟ², times the calibration factor).
    pub eta: f64,
    /// dS/dB at the working point (per μT).
    pub slope: f64,
    /// Per-shot signal standard deviation.
    pub noise_sigma: f64,
    /// Standard deviation of the mean over `shots` repetitions.
    pub measurement_sigma: f64,
    /// Signal at the working point.
    pub signal: f64,
    /// Readout phase that maximizes |dS/dB|.
    pub readout_phase: f64,
    pub tau_used: f64,
    pub b_working_point: f64,
    pub sequence_duration_us: f64,
    pub n_pi: u32,
    pub detuning_offset_mhz: f64,
}

/// η = σ/|dS/dB|·√T_seq at the steepest readout phase.
///
/// The slope is a central difference in B around `p.b_amp_ut`. Because the
/// signal is `a + 2Re(z e^{iφ})` in the readout phase φ, the phase of maximal
/// |slope| is found in closed form; for ideal pulses it is the closing phase
/// offset by π/2.
pub fn estimate_sensitivity(
    p: &ProtocolSpec,
    s: &SensorParams,
    model: &ErrorModel,
    r: &ReadoutModel,
) -> Result<SensitivityResult> {
    r.validate()?;
    p.validate()?;
    let b0 = p.b_amp_ut;
    // 1e-4 of a fringe period in B
    let h = 1e-4 / (s.gamma_mhz_per_ut().abs() * p.total_free_time()).max(1e-300);
    let plus = ensemble_fringe(&p.with_b(b0 + h), s, model)?;
    let minus = ensemble_fringe(&p.with_b(b0 - h), s, model)?;
    let center = ensemble_fringe(p, s, model)?;
    let env = center.envelope;
    let da = env * (plus.fringe.a - minus.fringe.a) / (2.0 * h);
    let dz = (plus.fringe.z - minus.fringe.z) * (env / (2.0 * h));
    let arg = dz.arg();
    let phi_hi = -arg;
    let phi_lo = PI - arg;
    let s_hi = da + 2.0 * dz.norm();
    let s_lo = da - 2.0 * dz.norm();
    let (phase, slope) = if s_hi.abs() >= s_lo.abs() { (phi_hi, s_hi) } else { (phi_lo, s_lo) };
    if !(slope.abs() > 1e-12) {
        return Err(Error::DegenerateWorkingPoint { slope });
    }
    let signal = center.signal(phase);
    let sigma = (signal * (1.0 - signal) / r.photons_per_shot).sqrt() / r.contrast;
    let duration = p.sequence_duration(s);
    let eta = sigma / slope.abs() * duration.sqrt() * s.eta_calibration;
    Ok(SensitivityResult {
        eta,
        slope,
        noise_sigma: sigma,
        measurement_sigma: sigma / (r.shots as f64).sqrt(),
        signal,
        readout_phase: crate::optimizer::wrap_phase(phase),
        tau_used: p.tau_half_us,
        b_working_point: b0,
        sequence_duration_us: duration,
        n_pi: p.kind.n_pi(),
        detuning_offset_mhz: s.detuning_offset_mhz,
    })
}

/// One detuning sample; failures are kept per point.
#[derive(Debug, Clone, PartialEq)]
pub struct DetuningPoint {
    pub detuning_norm: f64,
    pub result: Result<SensitivityResult>,
}

/// [`estimate_sensitivity`] with the carrier offset set to each `δ/Ω₀` in turn.
pub fn sensitivity_vs_detuning(
    p: &ProtocolSpec,
    s: &SensorParams,
    model: &ErrorModel,
    r: &ReadoutModel,
    detuning_points: &[f64],
) -> Vec<DetuningPoint> {
    detuning_points
        .iter()
        .map(|&d| DetuningPoint {
            detuning_norm: d,
            result: estimate_sensitivity(p, &s.with_detuning_norm(d), model, r),
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnhancementPoint {
    pub detuning_norm: f64,
    pub eta_rect: Option<f64>,
    pub eta_comp: Option<f64>,
}

impl EnhancementPoint {
    /// η(rect)/η(composite).
    pub fn enhancement(&self) -> Option<f64> {
        Some(self.eta_rect? / self.eta_comp?)
    }
}

/// Rectangular-vs-composite sensitivity sweep over detuning.
pub fn compare_vs_detuning(
    rect: &ProtocolSpec,
    comp: &ProtocolSpec,
    s: &SensorParams,
    model: &ErrorModel,
    r: &ReadoutModel,
    detuning_points: &[f64],
) -> Vec<EnhancementPoint> {
    let rows: Vec<(Option<f64>, Option<f64>)> = par::map(detuning_points, |&d| {
        let sd = s.with_detuning_norm(d);
        let er = estimate_sensitivity(rect, &sd, model, r).ok().map(|x| x.eta);
        let ec = estimate_sensitivity(comp, &sd, model, r).ok().map(|x| x.eta);
        (er, ec)
    });
    detuning_points
        .iter()
        .zip(rows)
        .map(|(&d, (eta_rect, eta_comp))| EnhancementPoint { detuning_norm: d, eta_rect, eta_comp })
        .collect()
}

/// π pulses (and the shared π/2 pulse) compared in a CPMG map.
#[derive(Debug, Clone, PartialEq)]
pub struct PulsePair {
    pub composite: PulseSequence,
    pub rectangular: PulseSequence,
    pub pi_half: PulseSequence,
}

/// Sensitivity over (number of π pulses, total free precession time).
#[derive(Debug, Clone, PartialEq)]
pub struct CpmgMap {
    pub n_pi: Vec<u32>,
    pub total_time_us: Vec<f64>,
    /// `eta_composite[i_n][i_t]`; `None` where the working point was degenerate.
    pub eta_composite: Vec<Vec<Option<f64>>>,
    pub eta_rectangular: Vec<Vec<Option<f64>>>,
}

impl CpmgMap {
    pub fn enhancement(&self, i_n: usize, i_t: usize) -> Option<f64> {
        Some(self.eta_rectangular[i_n][i_t]? / self.eta_composite[i_n][i_t]?)
    }

    fn best(row: &[Option<f64>], times: &[f64]) -> Option<(f64, f64)> {
        row.iter()
            .zip(times)
            .filter_map(|(e, t)| e.map(|e| (*t, e)))
            .min_by(|a, b| a.1.total_cmp(&b.1))
    }

    /// `(time, η)` of the best composite sensitivity for row `i_n`.
    pub fn best_composite(&self, i_n: usize) -> Option<(f64, f64)> {
        Self::best(&self.eta_composite[i_n], &self.total_time_us)
    }

    pub fn best_rectangular(&self, i_n: usize) -> Option<(f64, f64)> {
        Self::best(&self.eta_rectangular[i_n], &self.total_time_us)
    }

    /// Best-over-time rectangular η divided by best-over-time composite η.
    pub fn best_enhancement(&self, i_n: usize) -> Option<f64> {
        Some(self.best_rectangular(i_n)?.1 / self.best_composite(i_n)?.1)
    }

    /// Level contour of the composite map in (time, N) coordinates.
    pub fn composite_contour(&self, level: f64) -> Vec<Polyline> {
        let ys: Vec<f64> = self.n_pi.iter().map(|&n| n as f64).collect();
        let values: Vec<Vec<f64>> = self
            .eta_composite
            .iter()
            .map(|row| row.iter().map(|e| e.unwrap_or(f64::INFINITY)).collect())
            .collect();
        contour_lines(&self.total_time_us, &ys, &values, level)
    }
}

/// Composite and rectangular CPMG-N sensitivities over `n_pi_values × total_times_us`.
pub fn cpmg_sensitivity_map(
    s: &SensorParams,
    model: &ErrorModel,
    r: &ReadoutModel,
    pulses: &PulsePair,
    n_pi_values: &[u32],
    total_times_us: &[f64],
) -> Result<CpmgMap> {
    if n_pi_values.is_empty() || total_times_us.is_empty() {
        return Err(Error::invalid("CPMG map needs at least one N and one time"));
    }
    if n_pi_values.contains(&0) {
        return Err(Error::invalid("CPMG needs at least one pi pulse"));
    }
    s.validate()?;
    model.validate()?;
    r.validate()?;
    let cells: Vec<(u32, f64)> = n_pi_values
        .iter()
        .flat_map(|&n| total_times_us.iter().map(move |&t| (n, t)))
        .collect();
    let eta = |pi: &PulseSequence, n: u32, t: f64| {
        let p = ProtocolSpec {
            pi_half_pulse: pulses.pi_half.clone(),
            ..ProtocolSpec::cpmg(pi.clone(), n, t)
        };
        estimate_sensitivity(&p, s, model, r).ok().map(|x| x.eta)
    };
    let results: Vec<(Option<f64>, Option<f64>)> = par::map(&cells, |&(n, t)| {
        (eta(&pulses.composite, n, t), eta(&pulses.rectangular, n, t))
    });
    let nt = total_times_us.len();
    let mut eta_composite = Vec::with_capacity(n_pi_values.len());
    let mut eta_rectangular = Vec::with_capacity(n_pi_values.len());
    for row in results.chunks(nt) {
        eta_composite.push(row.iter().map(|x| x.0).collect());
        eta_rectangular.push(row.iter().map(|x| x.1).collect());
    }
    Ok(CpmgMap {
        n_pi: n_pi_values.to_vec(),
        total_time_us: total_times_us.to_vec(),
        eta_composite,
        eta_rectangular,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pulse::{build_rectangular_pi, reference_composite_pi};

    fn ideal_echo(tau: f64) -> ProtocolSpec {
        ProtocolSpec { ideal_pulses: true, ..ProtocolSpec::spin_echo(build_rectangular_pi(0.0), tau) }
    }

    fn no_decay() -> SensorParams {
        SensorParams { t2_us: 1e12, ..Default::default() }
    }

    #[test]
    fn free_evolution_examples() {
        assert!(free_evolution(0.0, 0.0, 3.0).max_abs_diff(&Unitary2::IDENTITY) < 1e-15);
        let u = free_evolution(0.5, 0.0, 1.0);
        assert!(u.max_abs_diff(&Unitary2::z_rotation(PI)) < 1e-15);
        let split = free_evolution(0.37, 0.1, 0.4) * free_evolution(0.37, 0.2, 0.6);
        assert!(split.max_abs_diff(&free_evolution(0.37, 0.3, 1.0)) < 1e-14);
    }

    #[test]
    fn intervals_layout() {
        assert_eq!(free_intervals(10.0, 1), alloc::vec![5.0, 5.0]);
        assert_eq!(free_intervals(8.0, 4), alloc::vec![1.0, 2.0, 2.0, 2.0, 1.0]);
    }

    #[test]
    fn square_wave_accumulates_constructively() {
        let g = 0.028;
        assert_eq!(square_wave_phase(0.0, 3.0, 0, 1, g), 0.0);
        let b = 1.7;
        let tau = 3.0;
        let echo: f64 = (0..2).map(|k| square_wave_phase(b, tau, k, 1, g) * if k % 2 == 0 { 1.0 } else { -1.0 }).sum();
        assert!((echo - TAU * 2.0 * g * b * tau).abs() < 1e-12);
        let cpmg: f64 = (0..9).map(|k| square_wave_phase(b, tau, k, 8, g) * if k % 2 == 0 { 1.0 } else { -1.0 }).sum();
        assert!((cpmg - echo).abs() < 1e-12);
    }

    #[test]
    fn ideal_echo_closes_and_follows_fringe() {
        let s = no_decay();
        let p = ideal_echo(2.0);
        assert!((simulate_run(&p, ErrorPoint::NOMINAL, &s).unwrap() - 1.0).abs() < 1e-14);
        // Φ = 2π·2γBτ = π
        let g = s.gamma_mhz_per_ut();
        let b = 0.5 / (2.0 * g * 2.0);
        let p = ProtocolSpec { b_amp_ut: b, ..p };
        assert!(simulate_run(&p, ErrorPoint::NOMINAL, &s).unwrap().abs() < 1e-14);
        let b = 0.13;
        let p = ProtocolSpec { b_amp_ut: b, ..p };
        let phi = TAU * 2.0 * g * b * 2.0;
        let p0 = simulate_run(&p, ErrorPoint::NOMINAL, &s).unwrap();
        assert!((p0 - 0.5 * (1.0 + phi.cos())).abs() < 1e-13);
    }

    #[test]
    fn fringe_linear_in_readout_phase() {
        let s = SensorParams::default();
        let mut p = ProtocolSpec::spin_echo(reference_composite_pi(), 1.3);
        p.b_amp_ut = 3.0;
        let err = ErrorPoint { delta_norm: 0.4, eps: 1.01 };
        let f = simulate_fringe(&p, err, &s).unwrap();
        for k in 0..7 {
            let ph = 0.9 * k as f64;
            p.readout_phase = ph;
            let direct = simulate_run(&p, err, &s).unwrap();
            assert!((direct - f.p0(ph)).abs() < 1e-13);
        }
    }

    #[test]
    fn envelope_only_signal() {
        let s = SensorParams::default();
        let model = ErrorModel::default();
        let mut last = 1.0;
        for tau in [1.0, 10.0, 30.0, 60.0] {
            let v = ensemble_signal(&ideal_echo(tau), &s, &model).unwrap();
            let exact = 0.5 + 0.5 * (-(2.0 * tau / s.t2_us).powf(s.stretch)).exp();
            assert!((v - exact).abs() < 1e-12);
            assert!(v < last);
            last = v;
        }
    }

    #[test]
    fn ideal_echo_refocuses_any_width() {
        let s = SensorParams::default();
        let p = ideal_echo(7.0);
        let vals: Vec<f64> = [0.0, 0.5, 1.0]
            .iter()
            .map(|&w| ensemble_signal(&p, &s, &ErrorModel { sigma_delta: w, ..Default::default() }).unwrap())
            .collect();
        assert!((vals[0] - vals[1]).abs() < 1e-10 && (vals[0] - vals[2]).abs() < 1e-10);
    }

    #[test]
    fn single_node_ensemble_matches_run() {
        let s = no_decay();
        let mut p = ProtocolSpec::spin_echo(reference_composite_pi(), 0.8);
        p.b_amp_ut = 2.0;
        p.readout_phase = 0.3;
        let v = ensemble_signal(&p, &s, &ErrorModel::noiseless()).unwrap();
        let r = simulate_run(&p, ErrorPoint::NOMINAL, &s).unwrap();
        assert!((v - r).abs() < 1e-12);
    }

    #[test]
    fn empty_sweep_rejected() {
        let s = SensorParams::default();
        let r = sweep_signal(&ideal_echo(1.0), &s, &ErrorModel::default(), SweepAxis::Tau, &[]);
        assert!(r.is_err());
    }

    #[test]
    fn b_sweep_is_fringe() {
        let s = no_decay();
        let tau = 2.0;
        let bs: Vec<f64> = (0..9).map(|i| i as f64 * 0.5).collect();
        let tr = sweep_signal(&ideal_echo(tau), &s, &ErrorModel::default(), SweepAxis::BAmp, &bs).unwrap();
        let w = TAU * 2.0 * s.gamma_mhz_per_ut() * tau;
        for (b, v) in tr.x.iter().zip(&tr.signal) {
            assert!((v - 0.5 * (1.0 + (w * b).cos())).abs() < 1e-12);
        }
    }

    #[test]
    fn shot_noise_scaling_and_sign_symmetry() {
        let s = SensorParams::default();
        let model = ErrorModel { n_eps_nodes: 3, ..Default::default() };
        let p = ProtocolSpec::spin_echo(build_rectangular_pi(0.0), 5.0);
        let r1 = ReadoutModel::default();
        let r2 = ReadoutModel { photons_per_shot: 2.0 * r1.photons_per_shot, ..r1 };
        let a = estimate_sensitivity(&p, &s, &model, &r1).unwrap();
        let b = estimate_sensitivity(&p, &s, &model, &r2).unwrap();
        assert!((a.eta / b.eta - 2.0f64.sqrt()).abs() < 1e-9);
        let pb = ProtocolSpec { b_amp_ut: 0.4, ..p.clone() };
        let nb = ProtocolSpec { b_amp_ut: -0.4, ..p };
        let x = estimate_sensitivity(&pb, &s, &model, &r1).unwrap();
        let y = estimate_sensitivity(&nb, &s, &model, &r1).unwrap();
        assert!((x.eta / y.eta - 1.0).abs() < 1e-6);
    }

    #[test]
    fn ideal_sensitivity_closed_form() {
        // Ideal echo at B = 0: |dS/dB| = env·π·2γT_half·... with S = 1/2 at the bias.
        let s = SensorParams::default();
        let tau = 20.0;
        let p = ideal_echo(tau);
        let r = ReadoutModel::default();
        let res = estimate_sensitivity(&p, &s, &ErrorModel::default(), &r).unwrap();
        let env = (-(2.0 * tau / s.t2_us).powf(s.stretch)).exp();
        let slope = env * 0.5 * TAU * 2.0 * s.gamma_mhz_per_ut() * tau;
        assert!((res.slope.abs() / slope - 1.0).abs() < 1e-6);
        assert!((res.signal - 0.5).abs() < 1e-9);
        let eta = (0.25f64 / r.photons_per_shot).sqrt() / r.contrast / slope * (2.0 * tau + s.overhead_us).sqrt();
        assert!((res.eta / eta - 1.0).abs() < 1e-6);
    }

    #[test]
    fn validation_errors() {
        let s = SensorParams { t2_us: 0.1, t2star_us: 1.0, ..Default::default() };
        assert!(s.validate().is_err());
        let mut p = ideal_echo(1.0);
        p.tau_half_us = 0.0;
        assert!(p.validate().is_err());
        let r = ReadoutModel { contrast: 0.0, ..Default::default() };
        assert!(r.validate().is_err());
    }
}
