// Copyright 2026 Compulse Contributors
// SPDX-License-Identifier: Apache-2.0

//! Run configuration. Every field has a default, unknown fields are
//! rejected, and the fully materialized config is echoed into each manifest.
//! Phases and angles that a person types are in degrees.

use std::path::{Path, PathBuf};

use compulse_core::optimizer::{Layout, OptimizerConfig};
use compulse_core::pulse::{
    build_rectangular_pi, composite_with_angles, FIVE_PIECE_ANGLES, REFERENCE_DPHI21_DEG,
    REFERENCE_DPHI31_DEG,
};
use compulse_core::sensing::{ReadoutModel, SensorParams};
use compulse_core::{ErrorModel, PulseSequence, TargetGate};
use serde::{Deserialize, Serialize};

use crate::output::{read_pulse_file, Manifest};
use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub output_dir: PathBuf,
    pub pulse: PulseConfig,
    pub error_model: ErrorModelConfig,
    pub fidelity_map: FidelityMapConfig,
    pub optimizer: OptimizerBlock,
    pub sensor: SensorConfig,
    pub protocol: ProtocolConfig,
    pub sense: SenseConfig,
    pub readout: ReadoutConfig,
    pub detuning_sweep: DetuningSweepConfig,
    pub cpmg: CpmgConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 0,
            output_dir: PathBuf::from("out"),
            pulse: PulseConfig::default(),
            error_model: ErrorModelConfig::default(),
            fidelity_map: FidelityMapConfig::default(),
            optimizer: OptimizerBlock::default(),
            sensor: SensorConfig::default(),
            protocol: ProtocolConfig::default(),
            sense: SenseConfig::default(),
            readout: ReadoutConfig::default(),
            detuning_sweep: DetuningSweepConfig::default(),
            cpmg: CpmgConfig::default(),
        }
    }
}

impl RunConfig {
    /// Reads a config file, or the config embedded in a manifest.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        let value: serde_json::Value = serde_json::from_str(&text)
            .map_err(|e| CliError::Usage(format!("config {} is not valid JSON: {e}", path.display())))?;
        let parsed = if value.get("manifest_version").is_some() {
            serde_json::from_value::<Manifest>(value).map(|m| m.config)
        } else {
            serde_json::from_value::<RunConfig>(value)
        };
        parsed.map_err(|e| CliError::Usage(format!("invalid config {}: {e}", path.display())))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum PulseKind {
    Rectangular,
    Composite,
    /// A pulse JSON as written by `optimize`.
    File,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PulseConfig {
    pub kind: PulseKind,
    pub dphi21_deg: f64,
    pub dphi31_deg: f64,
    pub phi1_deg: f64,
    /// Five-piece angles in degrees.
    pub angles_deg: [f64; 5],
    pub file: Option<PathBuf>,
}

impl Default for PulseConfig {
    fn default() -> Self {
        PulseConfig {
            kind: PulseKind::Composite,
            dphi21_deg: REFERENCE_DPHI21_DEG,
            dphi31_deg: REFERENCE_DPHI31_DEG,
            phi1_deg: 0.0,
            angles_deg: FIVE_PIECE_ANGLES.map(f64::to_degrees),
            file: None,
        }
    }
}

impl PulseConfig {
    pub fn build(&self) -> Result<PulseSequence, CliError> {
        match self.kind {
            PulseKind::Rectangular => Ok(build_rectangular_pi(self.phi1_deg.to_radians())),
            PulseKind::Composite => {
                if self.angles_deg.iter().any(|a| !(*a >= 0.0) || !a.is_finite()) {
                    return Err(CliError::Usage("pulse.angles_deg must be finite and >= 0".into()));
                }
                Ok(composite_with_angles(
                    self.dphi21_deg.to_radians(),
                    self.dphi31_deg.to_radians(),
                    self.phi1_deg.to_radians(),
                    self.angles_deg.map(angle_to_radians),
                ))
            }
            PulseKind::File => {
                let path = self
                    .file
                    .as_ref()
                    .ok_or_else(|| CliError::Usage("pulse.kind = file needs pulse.file".into()))?;
                read_pulse_file(path)
            }
        }
    }

    /// The composite side of a rectangular-vs-composite comparison.
    pub fn build_composite(&self) -> Result<PulseSequence, CliError> {
        if self.kind == PulseKind::Rectangular {
            return Err(CliError::Usage(
                "this command compares against a composite; set pulse.kind to composite or file".into(),
            ));
        }
        self.build()
    }
}

/// Degrees to radians, exact for multiples of 90°.
fn angle_to_radians(deg: f64) -> f64 {
    let quarters = deg / 90.0;
    if quarters == quarters.round() && quarters.abs() < 1e6 {
        quarters * std::f64::consts::FRAC_PI_2
    } else {
        deg.to_radians()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum TargetKind {
    BestEquatorial,
    FixedAxis,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TargetConfig {
    pub kind: TargetKind,
    /// Axis of a fixed-axis target.
    pub axis_deg: f64,
}

impl Default for TargetConfig {
    fn default() -> Self {
        TargetConfig { kind: TargetKind::BestEquatorial, axis_deg: 0.0 }
    }
}

impl TargetConfig {
    pub fn gate(&self) -> TargetGate {
        match self.kind {
            TargetKind::BestEquatorial => TargetGate::BestEquatorial,
            TargetKind::FixedAxis => TargetGate::FixedAxis(self.axis_deg.to_radians()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ErrorModelConfig {
    /// Standard deviation of δ/Ω₀.
    pub sigma_delta: f64,
    pub gamma_eps: f64,
    pub n_delta_nodes: usize,
    pub n_eps_nodes: usize,
    pub eps_truncation: f64,
}

impl Default for ErrorModelConfig {
    fn default() -> Self {
        ErrorModelConfig::from(ErrorModel::default())
    }
}

impl From<ErrorModel> for ErrorModelConfig {
    fn from(m: ErrorModel) -> Self {
        ErrorModelConfig {
            sigma_delta: m.sigma_delta,
            gamma_eps: m.gamma_eps,
            n_delta_nodes: m.n_delta_nodes,
            n_eps_nodes: m.n_eps_nodes,
            eps_truncation: m.eps_truncation,
        }
    }
}

impl ErrorModelConfig {
    pub fn model(&self) -> Result<ErrorModel, CliError> {
        let m = ErrorModel {
            sigma_delta: self.sigma_delta,
            gamma_eps: self.gamma_eps,
            n_delta_nodes: self.n_delta_nodes,
            n_eps_nodes: self.n_eps_nodes,
            eps_truncation: self.eps_truncation,
        };
        m.validate().map_err(CliError::config)?;
        m.eps_nodes().map_err(CliError::config)?;
        Ok(m)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FidelityMapConfig {
    pub target: TargetConfig,
    pub delta_min: f64,
    pub delta_max: f64,
    pub omega_min: f64,
    pub omega_max: f64,
    pub n_delta: usize,
    pub n_omega: usize,
    pub contour_level: f64,
}

impl Default for FidelityMapConfig {
    fn default() -> Self {
        FidelityMapConfig {
            target: TargetConfig::default(),
            delta_min: -2.0,
            delta_max: 2.0,
            omega_min: 0.5,
            omega_max: 1.5,
            n_delta: 201,
            n_omega: 101,
            contour_level: 0.9,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum LayoutKind {
    Phases,
    PhasesAndAngles,
}

impl LayoutKind {
    pub fn layout(self) -> Layout {
        match self {
            LayoutKind::Phases => Layout::PhasesOnly,
            LayoutKind::PhasesAndAngles => Layout::PhasesAndAngles,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimizerBlock {
    pub target: TargetConfig,
    pub layout: LayoutKind,
    pub restarts: usize,
    /// Adds the reference phases as an extra start.
    pub include_reference: bool,
    pub learning_rate: f64,
    pub momentum: f64,
    /// Finite-difference step in radians.
    pub fd_step: f64,
    pub max_iters: usize,
    pub tol: f64,
    pub patience: usize,
}

impl Default for OptimizerBlock {
    fn default() -> Self {
        let c = OptimizerConfig::default();
        OptimizerBlock {
            target: TargetConfig::default(),
            layout: LayoutKind::Phases,
            restarts: 16,
            include_reference: true,
            learning_rate: c.learning_rate,
            momentum: c.momentum,
            fd_step: c.fd_step,
            max_iters: c.max_iters,
            tol: c.tol,
            patience: c.patience,
        }
    }
}

impl OptimizerBlock {
    pub fn config(&self, seed: u64) -> Result<OptimizerConfig, CliError> {
        let c = OptimizerConfig {
            learning_rate: self.learning_rate,
            momentum: self.momentum,
            fd_step: self.fd_step,
            max_iters: self.max_iters,
            tol: self.tol,
            patience: self.patience,
            seed,
        };
        c.validate().map_err(CliError::config)?;
        if self.restarts == 0 && !self.include_reference {
            return Err(CliError::Usage("optimizer needs at least one start".into()));
        }
        Ok(c)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SensorConfig {
    pub omega0_mhz: f64,
    pub gamma_e_mhz_per_mt: f64,
    pub t2star_us: f64,
    pub t2_us: f64,
    pub stretch: f64,
    pub dd_scaling: f64,
    pub overhead_us: f64,
    pub eta_calibration: f64,
}

impl Default for SensorConfig {
    fn default() -> Self {
        let s = SensorParams::default();
        SensorConfig {
            omega0_mhz: s.omega0_mhz,
            gamma_e_mhz_per_mt: s.gamma_e_mhz_per_mt,
            t2star_us: s.t2star_us,
            t2_us: s.t2_us,
            stretch: s.stretch,
            dd_scaling: s.dd_scaling,
            overhead_us: s.overhead_us,
            eta_calibration: s.eta_calibration,
        }
    }
}

impl SensorConfig {
    /// Sensor at carrier detuning `detuning_norm` (units of Ω₀).
    pub fn params(&self, detuning_norm: f64) -> Result<SensorParams, CliError> {
        let s = SensorParams {
            omega0_mhz: self.omega0_mhz,
            gamma_e_mhz_per_mt: self.gamma_e_mhz_per_mt,
            t2star_us: self.t2star_us,
            t2_us: self.t2_us,
            stretch: self.stretch,
            detuning_offset_mhz: 0.0,
            dd_scaling: self.dd_scaling,
            overhead_us: self.overhead_us,
            eta_calibration: self.eta_calibration,
        }
        .with_detuning_norm(detuning_norm);
        s.validate().map_err(CliError::config)?;
        Ok(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProtocolConfig {
    /// 1 is the spin echo.
    pub n_pi: u32,
    pub tau_half_us: f64,
    pub b_amp_ut: f64,
    pub readout_phase_deg: f64,
    pub ideal_pulses: bool,
}

impl Default for ProtocolConfig {
    fn default() -> Self {
        ProtocolConfig { n_pi: 1, tau_half_us: 30.0, b_amp_ut: 0.0, readout_phase_deg: 0.0, ideal_pulses: false }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum AxisKind {
    Tau,
    BAmp,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SenseConfig {
    pub axis: AxisKind,
    pub start: f64,
    pub stop: f64,
    pub points: usize,
    pub detuning_norm: f64,
}

impl Default for SenseConfig {
    fn default() -> Self {
        SenseConfig { axis: AxisKind::Tau, start: 0.05, stop: 10.0, points: 200, detuning_norm: 0.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReadoutConfig {
    pub photons_per_shot: f64,
    pub contrast: f64,
    pub shots: u64,
}

impl Default for ReadoutConfig {
    fn default() -> Self {
        let r = ReadoutModel::default();
        ReadoutConfig { photons_per_shot: r.photons_per_shot, contrast: r.contrast, shots: r.shots }
    }
}

impl ReadoutConfig {
    pub fn model(&self) -> Result<ReadoutModel, CliError> {
        let r = ReadoutModel { photons_per_shot: self.photons_per_shot, contrast: self.contrast, shots: self.shots };
        r.validate().map_err(CliError::config)?;
        Ok(r)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DetuningSweepConfig {
    pub min: f64,
    pub max: f64,
    pub points: usize,
}

impl Default for DetuningSweepConfig {
    fn default() -> Self {
        DetuningSweepConfig { min: -1.2, max: 1.2, points: 25 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CpmgConfig {
    pub n_pi: Vec<u32>,
    pub time_min_us: f64,
    pub time_max_us: f64,
    pub n_times: usize,
    pub detuning_norm: f64,
}

impl Default for CpmgConfig {
    fn default() -> Self {
        CpmgConfig { n_pi: vec![1, 2, 4, 8, 16], time_min_us: 10.0, time_max_us: 400.0, n_times: 40, detuning_norm: 1.1 }
    }
}
