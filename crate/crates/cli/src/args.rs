// Copyright 2026 Compulse Contributors
// SPDX-License-Identifier: Apache-2.0

//! Flags. Each flag overrides the matching config field after `--config` is
//! loaded; phases are in degrees.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::config::{AxisKind, LayoutKind, PulseKind, RunConfig, TargetKind};
use crate::CliError;

/// Environment variable holding the worker thread count.
pub const THREADS_ENV: &str = "COMPULSE_THREADS";

#[derive(Debug, Parser)]
#[command(name = "compulse", version, about = "Robust composite-pulse control and spin-sensor simulation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Pointwise fidelity over (δ/Ω₀, Ω/Ω₀) plus its level contour.
    FidelityMap(FidelityMapArgs),
    /// Multi-start momentum ascent over composite-pulse phases.
    Optimize(OptimizeArgs),
    /// Ensemble signal trace of an echo or CPMG run.
    Sense(SenseArgs),
    /// Sensitivity of rectangular and composite pulses versus detuning.
    Sensitivity(SensitivityArgs),
    /// Sensitivity over (number of π pulses, free precession time).
    CpmgMap(CpmgArgs),
    /// Ascent on a concave quadratic with a known maximum.
    SelfTest(CommonArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::FidelityMap(_) => "fidelity-map",
            Command::Optimize(_) => "optimize",
            Command::Sense(_) => "sense",
            Command::Sensitivity(a) if a.cpmg => "cpmg-map",
            Command::Sensitivity(_) => "sensitivity",
            Command::CpmgMap(_) => "cpmg-map",
            Command::SelfTest(_) => "self-test",
        }
    }

    pub fn common(&self) -> &CommonArgs {
        match self {
            Command::FidelityMap(a) => &a.common,
            Command::Optimize(a) => &a.common,
            Command::Sense(a) => &a.common,
            Command::Sensitivity(a) => &a.common,
            Command::CpmgMap(a) => &a.common,
            Command::SelfTest(a) => a,
        }
    }

    /// Loads `--config` (or defaults) and applies every flag on top.
    pub fn resolve_config(&self) -> Result<RunConfig, CliError> {
        let common = self.common();
        let mut cfg = match &common.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        common.apply(&mut cfg);
        match self {
            Command::FidelityMap(a) => a.apply(&mut cfg),
            Command::Optimize(a) => a.apply(&mut cfg),
            Command::Sense(a) => a.apply(&mut cfg),
            Command::Sensitivity(a) => a.apply(&mut cfg),
            Command::CpmgMap(a) => a.apply(&mut cfg),
            Command::SelfTest(_) => {}
        }
        Ok(cfg)
    }
}

fn set<T: Copy>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    /// JSON run config or a previously written manifest.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub output_dir: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
}

impl CommonArgs {
    fn apply(&self, cfg: &mut RunConfig) {
        if let Some(dir) = &self.output_dir {
            cfg.output_dir = dir.clone();
        }
        set(&mut cfg.seed, self.seed);
    }
}

#[derive(Debug, Clone, Args)]
pub struct PulseArgs {
    /// φ₂ − φ₁ in degrees.
    #[arg(long, allow_hyphen_values = true)]
    pub dphi21: Option<f64>,
    /// φ₃ − φ₁ in degrees.
    #[arg(long, allow_hyphen_values = true)]
    pub dphi31: Option<f64>,
    /// Global drive phase φ₁ in degrees.
    #[arg(long, allow_hyphen_values = true)]
    pub phi1: Option<f64>,
    /// Pulse JSON written by `optimize`.
    #[arg(long)]
    pub pulse_file: Option<PathBuf>,
}

impl PulseArgs {
    fn apply(&self, kind: Option<PulseKind>, cfg: &mut RunConfig) {
        set(&mut cfg.pulse.kind, kind);
        set(&mut cfg.pulse.dphi21_deg, self.dphi21);
        set(&mut cfg.pulse.dphi31_deg, self.dphi31);
        set(&mut cfg.pulse.phi1_deg, self.phi1);
        if let Some(f) = &self.pulse_file {
            cfg.pulse.file = Some(f.clone());
            if kind.is_none() {
                cfg.pulse.kind = PulseKind::File;
            }
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct ModelArgs {
    /// Standard deviation of δ/Ω₀.
    #[arg(long)]
    pub sigma_delta: Option<f64>,
    #[arg(long)]
    pub gamma_eps: Option<f64>,
    #[arg(long)]
    pub n_delta_nodes: Option<usize>,
    #[arg(long)]
    pub n_eps_nodes: Option<usize>,
}

impl ModelArgs {
    fn apply(&self, cfg: &mut RunConfig) {
        let m = &mut cfg.error_model;
        set(&mut m.sigma_delta, self.sigma_delta);
        set(&mut m.gamma_eps, self.gamma_eps);
        set(&mut m.n_delta_nodes, self.n_delta_nodes);
        set(&mut m.n_eps_nodes, self.n_eps_nodes);
    }
}

#[derive(Debug, Clone, Args)]
pub struct FidelityMapArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Pulse to map; required unless a config is given.
    #[arg(long, value_enum, required_unless_present = "config")]
    pub pulse: Option<PulseKind>,
    #[command(flatten)]
    pub pulse_args: PulseArgs,
    #[arg(long, value_enum)]
    pub target: Option<TargetKind>,
    /// Fixed target axis in degrees.
    #[arg(long, allow_hyphen_values = true)]
    pub target_axis: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub delta_min: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub delta_max: Option<f64>,
    #[arg(long)]
    pub omega_min: Option<f64>,
    #[arg(long)]
    pub omega_max: Option<f64>,
    #[arg(long)]
    pub n_delta: Option<usize>,
    #[arg(long)]
    pub n_omega: Option<usize>,
    #[arg(long)]
    pub contour_level: Option<f64>,
}

impl FidelityMapArgs {
    fn apply(&self, cfg: &mut RunConfig) {
        self.pulse_args.apply(self.pulse, cfg);
        let f = &mut cfg.fidelity_map;
        set(&mut f.target.kind, self.target);
        set(&mut f.target.axis_deg, self.target_axis);
        set(&mut f.delta_min, self.delta_min);
        set(&mut f.delta_max, self.delta_max);
        set(&mut f.omega_min, self.omega_min);
        set(&mut f.omega_max, self.omega_max);
        set(&mut f.n_delta, self.n_delta);
        set(&mut f.n_omega, self.n_omega);
        set(&mut f.contour_level, self.contour_level);
    }
}

#[derive(Debug, Clone, Args)]
pub struct OptimizeArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub model: ModelArgs,
    /// Run the toy quadratic instead of the pulse objective.
    #[arg(long)]
    pub self_test: bool,
    #[arg(long)]
    pub restarts: Option<usize>,
    #[arg(long)]
    pub max_iters: Option<usize>,
    #[arg(long)]
    pub learning_rate: Option<f64>,
    #[arg(long)]
    pub momentum: Option<f64>,
    #[arg(long, value_enum)]
    pub layout: Option<LayoutKind>,
    #[arg(long, value_enum)]
    pub target: Option<TargetKind>,
}

impl OptimizeArgs {
    fn apply(&self, cfg: &mut RunConfig) {
        self.model.apply(cfg);
        let o = &mut cfg.optimizer;
        set(&mut o.restarts, self.restarts);
        set(&mut o.max_iters, self.max_iters);
        set(&mut o.learning_rate, self.learning_rate);
        set(&mut o.momentum, self.momentum);
        set(&mut o.layout, self.layout);
        set(&mut o.target.kind, self.target);
    }
}

#[derive(Debug, Clone, Args)]
pub struct ProtocolArgs {
    /// Number of π pulses; 1 is the spin echo.
    #[arg(long)]
    pub n_pi: Option<u32>,
    #[arg(long)]
    pub tau_half: Option<f64>,
    /// Square-wave field amplitude in μT.
    #[arg(long, allow_hyphen_values = true)]
    pub b_amp: Option<f64>,
    /// Closing π/2 phase offset in degrees.
    #[arg(long, allow_hyphen_values = true)]
    pub readout_phase: Option<f64>,
    #[arg(long)]
    pub ideal_pulses: bool,
}

impl ProtocolArgs {
    fn apply(&self, cfg: &mut RunConfig) {
        let p = &mut cfg.protocol;
        set(&mut p.n_pi, self.n_pi);
        set(&mut p.tau_half_us, self.tau_half);
        set(&mut p.b_amp_ut, self.b_amp);
        set(&mut p.readout_phase_deg, self.readout_phase);
        if self.ideal_pulses {
            p.ideal_pulses = true;
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct SenseArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long, value_enum)]
    pub pulse: Option<PulseKind>,
    #[command(flatten)]
    pub pulse_args: PulseArgs,
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub protocol: ProtocolArgs,
    /// Carrier detuning in units of Ω₀.
    #[arg(long, allow_hyphen_values = true)]
    pub detuning_norm: Option<f64>,
    #[arg(long, value_enum)]
    pub axis: Option<AxisKind>,
    #[arg(long, allow_hyphen_values = true)]
    pub start: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub stop: Option<f64>,
    #[arg(long)]
    pub points: Option<usize>,
}

impl SenseArgs {
    fn apply(&self, cfg: &mut RunConfig) {
        self.pulse_args.apply(self.pulse, cfg);
        self.model.apply(cfg);
        self.protocol.apply(cfg);
        let s = &mut cfg.sense;
        set(&mut s.detuning_norm, self.detuning_norm);
        set(&mut s.axis, self.axis);
        set(&mut s.start, self.start);
        set(&mut s.stop, self.stop);
        set(&mut s.points, self.points);
    }
}

#[derive(Debug, Clone, Args)]
pub struct SensitivityArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Composite side of the comparison.
    #[arg(long, value_enum)]
    pub pulse: Option<PulseKind>,
    #[command(flatten)]
    pub pulse_args: PulseArgs,
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub protocol: ProtocolArgs,
    /// Produce the CPMG map instead of the detuning sweep.
    #[arg(long)]
    pub cpmg: bool,
    #[arg(long, allow_hyphen_values = true)]
    pub detuning_min: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub detuning_max: Option<f64>,
    #[arg(long)]
    pub detuning_points: Option<usize>,
}

impl SensitivityArgs {
    fn apply(&self, cfg: &mut RunConfig) {
        self.pulse_args.apply(self.pulse, cfg);
        self.model.apply(cfg);
        self.protocol.apply(cfg);
        let d = &mut cfg.detuning_sweep;
        set(&mut d.min, self.detuning_min);
        set(&mut d.max, self.detuning_max);
        set(&mut d.points, self.detuning_points);
    }
}

#[derive(Debug, Clone, Args)]
pub struct CpmgArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long, value_enum)]
    pub pulse: Option<PulseKind>,
    #[command(flatten)]
    pub pulse_args: PulseArgs,
    #[command(flatten)]
    pub model: ModelArgs,
    /// Comma-separated π-pulse counts.
    #[arg(long, value_delimiter = ',')]
    pub n_pi: Option<Vec<u32>>,
    #[arg(long)]
    pub time_min: Option<f64>,
    #[arg(long)]
    pub time_max: Option<f64>,
    #[arg(long)]
    pub n_times: Option<usize>,
    #[arg(long, allow_hyphen_values = true)]
    pub detuning_norm: Option<f64>,
}

impl CpmgArgs {
    fn apply(&self, cfg: &mut RunConfig) {
        self.pulse_args.apply(self.pulse, cfg);
        self.model.apply(cfg);
        let c = &mut cfg.cpmg;
        if let Some(n) = &self.n_pi {
            c.n_pi = n.clone();
        }
        set(&mut c.time_min_us, self.time_min);
        set(&mut c.time_max_us, self.time_max);
        set(&mut c.n_times, self.n_times);
        set(&mut c.detuning_norm, self.detuning_norm);
    }
}
