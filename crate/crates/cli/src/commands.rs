// Copyright 2026 Compulse Contributors
// SPDX-License-Identifier: Apache-2.0

//! Experiment workflows. Each returns the files it produced; nothing is
//! written outside `output_dir`.

use std::path::PathBuf;

use compulse_core::contour::Polyline;
use compulse_core::fidelity::{fidelity_map, linspace};
use compulse_core::optimizer::{
    ascend, best_run, multi_start, objective, random_init, Layout, OptRun, ParamVector,
    RunStatus,
};
use compulse_core::pulse::{
    build_rectangular_pi, build_rectangular_pi_half, FIVE_PIECE_ANGLES, REFERENCE_DPHI21_DEG,
    REFERENCE_DPHI31_DEG,
};
use compulse_core::sensing::{
    compare_vs_detuning, cpmg_sensitivity_map, sweep_signal, ProtocolSpec, PulsePair, SweepAxis,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::args::Command;
use crate::config::{AxisKind, RunConfig};
use crate::output::{Cell, Csv, OutputSet, PulseJson};
use crate::CliError;

/// Runs `command` with its resolved config and writes its outputs.
pub fn run(command: &Command, cfg: &RunConfig) -> Result<Vec<PathBuf>, CliError> {
    let name = command.name();
    let mut out = OutputSet::new(&cfg.output_dir);
    let result = match command {
        Command::FidelityMap(_) => fidelity_map_cmd(cfg, &mut out),
        Command::Optimize(a) if a.self_test => self_test(&mut out),
        Command::Optimize(_) => optimize(cfg, &mut out),
        Command::Sense(_) => sense(cfg, &mut out),
        Command::Sensitivity(a) if a.cpmg => cpmg_map(cfg, &mut out),
        Command::Sensitivity(_) => sensitivity(cfg, &mut out),
        Command::CpmgMap(_) => cpmg_map(cfg, &mut out),
        Command::SelfTest(_) => self_test(&mut out),
    };
    // Partial results are kept when a workflow fails after producing them.
    match result {
        Ok(()) => out.write(name, cfg),
        Err(e @ CliError::Runtime(_)) => {
            out.write(name, cfg)?;
            Err(e)
        }
        Err(e) => Err(e),
    }
}

fn polylines_csv(lines: &[Polyline]) -> Csv {
    let mut csv = Csv::new(&["delta_norm", "omega_norm"]);
    for (i, line) in lines.iter().enumerate() {
        if i > 0 {
            csv.row(vec![Cell::Missing, Cell::Missing]);
        }
        for &(x, y) in line {
            csv.row(vec![x.into(), y.into()]);
        }
    }
    csv
}

fn fidelity_map_cmd(cfg: &RunConfig, out: &mut OutputSet) -> Result<(), CliError> {
    let seq = cfg.pulse.build()?;
    let f = &cfg.fidelity_map;
    let map = fidelity_map(
        &seq,
        f.target.gate(),
        (f.delta_min, f.delta_max),
        (f.omega_min, f.omega_max),
        (f.n_delta, f.n_omega),
    )
    .map_err(CliError::config)?;
    let mut csv = Csv::new(&["delta_norm", "omega_norm", "fidelity"]);
    for (omega, row) in map.omega_axis.iter().zip(&map.values) {
        for (delta, v) in map.delta_axis.iter().zip(row) {
            csv.row(vec![(*delta).into(), (*omega).into(), (*v).into()]);
        }
    }
    out.add("fidelity_map.csv", csv.into_bytes());
    out.add("fidelity_contour.csv", polylines_csv(&map.contour(f.contour_level)).into_bytes());
    out.add_json("pulse.json", &PulseJson::from(&seq))?;
    Ok(())
}

#[derive(Serialize)]
struct ParamsJson {
    layout: &'static str,
    dphi21_deg: f64,
    dphi31_deg: f64,
    angles_rad: Option<Vec<f64>>,
    values: Vec<f64>,
}

impl From<&ParamVector> for ParamsJson {
    fn from(p: &ParamVector) -> Self {
        let (d21, d31) = p.wrapped_phases();
        ParamsJson {
            layout: match p.layout {
                Layout::PhasesOnly => "phases",
                Layout::PhasesAndAngles => "phases_and_angles",
            },
            dphi21_deg: d21.to_degrees(),
            dphi31_deg: d31.to_degrees(),
            angles_rad: (p.layout == Layout::PhasesAndAngles).then(|| p.values[2..].to_vec()),
            values: p.values.clone(),
        }
    }
}

#[derive(Serialize)]
struct IterJson {
    iter: usize,
    objective: f64,
}

#[derive(Serialize)]
struct BestJson {
    params: ParamsJson,
    objective: f64,
}

#[derive(Serialize)]
struct RunConfigJson {
    learning_rate: f64,
    momentum: f64,
    fd_step: f64,
    max_iters: usize,
    tol: f64,
    patience: usize,
    seed: u64,
}

#[derive(Serialize)]
struct OptRunJson {
    config: RunConfigJson,
    init: ParamsJson,
    status: &'static str,
    trajectory: Vec<IterJson>,
    best: BestJson,
}

fn status_name(s: RunStatus) -> &'static str {
    match s {
        RunStatus::Converged => "converged",
        RunStatus::MaxIters => "max_iters",
        RunStatus::Diverged => "diverged",
    }
}

impl From<&OptRun> for OptRunJson {
    fn from(r: &OptRun) -> Self {
        let c = &r.config;
        OptRunJson {
            config: RunConfigJson {
                learning_rate: c.learning_rate,
                momentum: c.momentum,
                fd_step: c.fd_step,
                max_iters: c.max_iters,
                tol: c.tol,
                patience: c.patience,
                seed: c.seed,
            },
            init: ParamsJson::from(&r.init),
            status: status_name(r.status),
            trajectory: r.trajectory.iter().map(|&(iter, objective)| IterJson { iter, objective }).collect(),
            best: BestJson { params: ParamsJson::from(&r.best_params), objective: r.best_objective },
        }
    }
}

#[derive(Serialize)]
struct OptimizeReport {
    reference_objective: f64,
    best_index: Option<usize>,
    runs: Vec<OptRunJson>,
}

fn reference_params(layout: Layout) -> ParamVector {
    let (d21, d31) = (REFERENCE_DPHI21_DEG.to_radians(), REFERENCE_DPHI31_DEG.to_radians());
    match layout {
        Layout::PhasesOnly => ParamVector::phases(d21, d31),
        Layout::PhasesAndAngles => ParamVector::with_angles(d21, d31, FIVE_PIECE_ANGLES),
    }
}

fn optimize(cfg: &RunConfig, out: &mut OutputSet) -> Result<(), CliError> {
    let model = cfg.error_model.model()?;
    let o = &cfg.optimizer;
    let oc = o.config(cfg.seed)?;
    let layout = o.layout.layout();
    let target = o.target.gate();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut inits = Vec::with_capacity(o.restarts + 1);
    if o.include_reference {
        inits.push(reference_params(layout));
    }
    inits.extend((0..o.restarts).map(|_| random_init(layout, &mut rng)));
    let reference_objective = objective(&reference_params(layout), &model, target)?;
    let runs = multi_start(&inits, &model, target, &oc)?;
    let best = best_run(&runs);
    let report = OptimizeReport {
        reference_objective,
        best_index: best,
        runs: runs.iter().map(OptRunJson::from).collect(),
    };
    out.add_json("optimize_runs.json", &report)?;
    let Some(i) = best else {
        return Err(CliError::runtime("every restart diverged"));
    };
    let pulse = runs[i].best_params.to_sequence(0.0);
    out.add_json("best_pulse.json", &PulseJson::from(&pulse))?;
    let (d21, d31) = runs[i].best_params.wrapped_phases();
    println!(
        "best objective {:.6} (reference {:.6}) at dphi21 = {:.3} deg, dphi31 = {:.3} deg",
        runs[i].best_objective,
        reference_objective,
        d21.to_degrees(),
        d31.to_degrees()
    );
    Ok(())
}

/// Maximum of the toy objective `−|p − p*|²`.
pub const SELF_TEST_OPTIMUM: [f64; 2] = [0.7, -1.3];

#[derive(Serialize)]
struct SelfTestReport {
    expected: [f64; 2],
    found: Vec<f64>,
    max_abs_error: f64,
    iterations: usize,
    status: &'static str,
    passed: bool,
}

fn self_test(out: &mut OutputSet) -> Result<(), CliError> {
    let [a, b] = SELF_TEST_OPTIMUM;
    let f = |x: &[f64]| -((x[0] - a).powi(2) + (x[1] - b).powi(2));
    let cfg = compulse_core::optimizer::OptimizerConfig {
        learning_rate: 0.1,
        momentum: 0.9,
        max_iters: 500,
        tol: 1e-14,
        ..Default::default()
    };
    let trace = ascend(&f, &[3.0, 3.0], &cfg, |_: &mut [f64]| {})?;
    let err = trace.best_point.iter().zip(SELF_TEST_OPTIMUM).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    let passed = err < 1e-6;
    out.add_json(
        "self_test.json",
        &SelfTestReport {
            expected: SELF_TEST_OPTIMUM,
            found: trace.best_point.clone(),
            max_abs_error: err,
            iterations: trace.trajectory.len() - 1,
            status: status_name(trace.status),
            passed,
        },
    )?;
    println!(
        "self-test: optimum ({a}, {b}), found ({:.9}, {:.9}), error {err:.3e}: {}",
        trace.best_point[0],
        trace.best_point[1],
        if passed { "pass" } else { "FAIL" }
    );
    if passed {
        Ok(())
    } else {
        Err(CliError::runtime("self-test did not reach the analytic optimum"))
    }
}

fn protocol(cfg: &RunConfig, pi: compulse_core::PulseSequence) -> ProtocolSpec {
    let p = &cfg.protocol;
    ProtocolSpec {
        b_amp_ut: p.b_amp_ut,
        readout_phase: p.readout_phase_deg.to_radians(),
        ideal_pulses: p.ideal_pulses,
        pi_half_pulse: build_rectangular_pi_half(0.0),
        ..ProtocolSpec::cpmg(pi, p.n_pi, 2.0 * p.tau_half_us)
    }
}

fn sense(cfg: &RunConfig, out: &mut OutputSet) -> Result<(), CliError> {
    let s = &cfg.sense;
    if s.points == 0 {
        return Err(CliError::Usage("sense.points must be >= 1".into()));
    }
    let p = protocol(cfg, cfg.pulse.build()?);
    p.validate().map_err(CliError::config)?;
    let sensor = cfg.sensor.params(s.detuning_norm)?;
    let model = cfg.error_model.model()?;
    let axis = match s.axis {
        AxisKind::Tau => SweepAxis::Tau,
        AxisKind::BAmp => SweepAxis::BAmp,
    };
    let points = linspace(s.start, s.stop, s.points);
    let trace = sweep_signal(&p, &sensor, &model, axis, &points).map_err(CliError::config)?;
    let mut csv = Csv::new(&["x", "signal"]);
    for (x, y) in trace.x.iter().zip(&trace.signal) {
        csv.row(vec![(*x).into(), (*y).into()]);
    }
    out.add("sense_trace.csv", csv.into_bytes());
    Ok(())
}

fn sensitivity(cfg: &RunConfig, out: &mut OutputSet) -> Result<(), CliError> {
    let comp = protocol(cfg, cfg.pulse.build_composite()?);
    let rect = protocol(cfg, build_rectangular_pi(0.0));
    comp.validate().map_err(CliError::config)?;
    let d = &cfg.detuning_sweep;
    if d.points == 0 {
        return Err(CliError::Usage("detuning_sweep.points must be >= 1".into()));
    }
    let sensor = cfg.sensor.params(0.0)?;
    let model = cfg.error_model.model()?;
    let readout = cfg.readout.model()?;
    let points = linspace(d.min, d.max, d.points);
    let rows = compare_vs_detuning(&rect, &comp, &sensor, &model, &readout, &points);
    let mut etas = Csv::new(&["detuning_norm", "eta_rect", "eta_comp"]);
    let mut enh = Csv::new(&["detuning_norm", "enhancement"]);
    for r in &rows {
        etas.row(vec![r.detuning_norm.into(), r.eta_rect.into(), r.eta_comp.into()]);
        enh.row(vec![r.detuning_norm.into(), r.enhancement().into()]);
    }
    out.add("fig3e.csv", etas.into_bytes());
    out.add("fig3f.csv", enh.into_bytes());
    Ok(())
}

fn cpmg_map(cfg: &RunConfig, out: &mut OutputSet) -> Result<(), CliError> {
    let c = &cfg.cpmg;
    if c.n_times == 0 {
        return Err(CliError::Usage("cpmg.n_times must be >= 1".into()));
    }
    let pulses = PulsePair {
        composite: cfg.pulse.build_composite()?,
        rectangular: build_rectangular_pi(0.0),
        pi_half: build_rectangular_pi_half(0.0),
    };
    let sensor = cfg.sensor.params(c.detuning_norm)?;
    let model = cfg.error_model.model()?;
    let readout = cfg.readout.model()?;
    let times = linspace(c.time_min_us, c.time_max_us, c.n_times);
    let map = cpmg_sensitivity_map(&sensor, &model, &readout, &pulses, &c.n_pi, &times).map_err(CliError::config)?;
    let mut etas = Csv::new(&["n_pi", "total_time_us", "eta_comp", "eta_rect"]);
    let mut enh = Csv::new(&["n_pi", "total_time_us", "enhancement"]);
    let mut best = Csv::new(&["n_pi", "best_time_comp_us", "best_eta_comp", "best_time_rect_us", "best_eta_rect", "enhancement"]);
    for (i, &n) in map.n_pi.iter().enumerate() {
        for (j, &t) in map.total_time_us.iter().enumerate() {
            etas.row(vec![n.into(), t.into(), map.eta_composite[i][j].into(), map.eta_rectangular[i][j].into()]);
            enh.row(vec![n.into(), t.into(), map.enhancement(i, j).into()]);
        }
        let bc = map.best_composite(i);
        let br = map.best_rectangular(i);
        best.row(vec![
            n.into(),
            bc.map(|x| x.0).into(),
            bc.map(|x| x.1).into(),
            br.map(|x| x.0).into(),
            br.map(|x| x.1).into(),
            map.best_enhancement(i).into(),
        ]);
    }
    out.add("fig5a.csv", etas.into_bytes());
    out.add("fig5b.csv", enh.into_bytes());
    out.add("fig5_best.csv", best.into_bytes());
    Ok(())
}
