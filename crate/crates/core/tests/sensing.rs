// Copyright 2026 Compulse Contributors
// SPDX-License-Identifier: Apache-2.0

use compulse_core::fidelity::linspace;
use compulse_core::pulse::{build_rectangular_pi, reference_composite_pi};
use compulse_core::sensing::{
    cpmg_sensitivity_map, ensemble_fringe, estimate_sensitivity, sweep_signal, PulsePair, ProtocolSpec,
    ReadoutModel, SensorParams, SweepAxis,
};
use compulse_core::pulse::build_rectangular_pi_half;
use compulse_core::ErrorModel;

#[test]
fn cpmg_single_pulse_is_spin_echo() {
    let s = SensorParams::default().with_detuning_norm(0.6);
    let m = ErrorModel::default();
    let r = ReadoutModel::default();
    let pulses = PulsePair {
        composite: reference_composite_pi(),
        rectangular: build_rectangular_pi(0.0),
        pi_half: build_rectangular_pi_half(0.0),
    };
    let times = [10.0, 40.0];
    let map = cpmg_sensitivity_map(&s, &m, &r, &pulses, &[1, 2], &times).unwrap();
    for (i, &t) in times.iter().enumerate() {
        let echo = ProtocolSpec::spin_echo(reference_composite_pi(), t / 2.0);
        let e = estimate_sensitivity(&echo, &s, &m, &r).unwrap().eta;
        assert_eq!(map.eta_composite[0][i], Some(e));
        let echo = ProtocolSpec::spin_echo(build_rectangular_pi(0.0), t / 2.0);
        let e = estimate_sensitivity(&echo, &s, &m, &r).unwrap().eta;
        assert_eq!(map.eta_rectangular[0][i], Some(e));
    }
}

#[test]
fn zero_field_tau_sweep_decays_monotonically() {
    let s = SensorParams::default();
    let m = ErrorModel::default();
    let taus = linspace(1.0, 100.0, 34);
    let ideal = ProtocolSpec { ideal_pulses: true, ..ProtocolSpec::spin_echo(build_rectangular_pi(0.0), 1.0) };
    let trace = sweep_signal(&ideal, &s, &m, SweepAxis::Tau, &taus).unwrap();
    assert!(trace.signal.windows(2).all(|w| w[1] <= w[0]));
    let real = ProtocolSpec::spin_echo(reference_composite_pi(), 1.0);
    let env: Vec<f64> = taus
        .iter()
        .map(|&t| ensemble_fringe(&ProtocolSpec { tau_half_us: t, ..real.clone() }, &s, &m).unwrap().envelope)
        .collect();
    assert!(env.windows(2).all(|w| w[1] < w[0]));
}

#[test]
fn field_fringe_period() {
    // Echo phase 2π·γ·B·T accumulates constructively over both halves.
    let s = SensorParams::default();
    let m = ErrorModel::default();
    let tau_half = 5.0;
    let period = 1.0 / (2.0 * s.gamma_mhz_per_ut() * tau_half);
    let p = ProtocolSpec { ideal_pulses: true, ..ProtocolSpec::spin_echo(build_rectangular_pi(0.0), tau_half) };
    let b = [0.13, 0.13 + period, 0.13 + 2.0 * period];
    let t = sweep_signal(&p, &s, &m, SweepAxis::BAmp, &b).unwrap();
    assert!((t.signal[0] - t.signal[1]).abs() < 1e-9);
    assert!((t.signal[0] - t.signal[2]).abs() < 1e-9);
    let half = sweep_signal(&p, &s, &m, SweepAxis::BAmp, &[0.13 + 0.5 * period]).unwrap();
    assert!((half.signal[0] - t.signal[0]).abs() > 1e-3);
}
