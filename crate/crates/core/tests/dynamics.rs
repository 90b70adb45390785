// SPDX-License-Identifier: Apache-2.0

use std::f64::consts::TAU;

use rabispec::bloch::{integrate, uniform_times, BlochState, DriveWaveform, IntegratorConfig, Trajectory};
use rabispec::lockin::{measure_probe_response, ProbeRunConfig};
use rabispec::params::{rabi_frequency, TlsParams};
use rabispec::units::{ghz, mhz};

/// Frequency of the largest DFT magnitude of `x` on a fine grid in [lo, hi].
fn dominant_frequency(t: &[f64], x: &[f64], lo: f64, hi: f64) -> f64 {
    let mean = x.iter().sum::<f64>() / x.len() as f64;
    let power = |w: f64| {
        let (mut c, mut s) = (0.0, 0.0);
        for (ti, xi) in t.iter().zip(x) {
            c += (xi - mean) * (w * ti).cos();
            s += (xi - mean) * (w * ti).sin();
        }
        c * c + s * s
    };
    (0..=4000)
        .map(|i| lo + (hi - lo) * i as f64 / 4000.0)
        .max_by(|a, b| power(*a).total_cmp(&power(*b)))
        .unwrap()
}

#[test]
fn population_oscillates_at_the_rabi_frequency() {
    let tls = TlsParams::new(ghz(1.0), 0.0, 0.0, 0.0, 0.0).unwrap();
    let f = mhz(20.0);
    for delta in [0.0, mhz(15.0), mhz(-25.0)] {
        let omega_r = rabi_frequency(delta, f);
        let drive = DriveWaveform::carrier_only(f, tls.gap() + delta);
        let t_end = 20.0 * TAU / omega_r;
        let times = uniform_times(0.0, t_end, 4001);
        let traj = integrate(
            BlochState::new(0.0, 0.0, -1.0),
            &tls,
            &drive,
            (0.0, t_end),
            &times,
            &IntegratorConfig::default(),
        )
        .unwrap();
        let w = dominant_frequency(&traj.t, &traj.component(|s| s.sz), 0.5 * omega_r, 1.5 * omega_r);
        assert!((w / omega_r - 1.0).abs() < 0.02, "delta {delta}: {w} vs {omega_r}");
    }
}

#[test]
fn damped_trajectories_contract() {
    let tls = TlsParams::new(ghz(1.0), ghz(0.2), 0.05, mhz(8.0), mhz(3.0)).unwrap();
    let drive = DriveWaveform::with_cosine_probe(mhz(10.0), tls.gap(), mhz(0.5), mhz(6.0));
    let t_end = 0.2e-6;
    let times = uniform_times(0.0, t_end, 201);
    let cfg = IntegratorConfig::default();
    let run = |s0| integrate(s0, &tls, &drive, (0.0, t_end), &times, &cfg).unwrap();
    let (a, b) = (run(BlochState::new(0.6, 0.0, -0.8)), run(BlochState::new(-0.3, 0.5, 0.4)));
    let dist: Vec<f64> = a
        .states
        .iter()
        .zip(&b.states)
        .map(|(p, q)| ((p.sx - q.sx).powi(2) + (p.sy - q.sy).powi(2) + (p.sz - q.sz).powi(2)).sqrt())
        .collect();
    // Rotation keeps distances; damping shrinks them at least as fast as the slowest rate.
    assert!(dist.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-9)));
    let slowest = tls.gamma_z.min(tls.gamma_phi);
    assert!(dist[dist.len() - 1] <= dist[0] * (-slowest * t_end).exp() * (1.0 + 1e-6));
}

#[test]
fn refining_the_step_cap_converges() {
    let tls = TlsParams::new(ghz(1.0), ghz(0.3), 0.02, mhz(4.0), mhz(0.5)).unwrap();
    let drive = DriveWaveform::with_cosine_probe(mhz(15.0), tls.gap() + mhz(5.0), mhz(0.2), mhz(7.0));
    let t_end = 0.3e-6;
    let period = TAU / (tls.gap() + mhz(5.0));
    // Loose tolerance so the step cap, not the error controller, sets the step.
    let run = |per_period: f64, rtol: f64| {
        let cfg = IntegratorConfig {
            max_step: Some(period / per_period),
            ..IntegratorConfig::new(rtol, 1e-12)
        };
        integrate(BlochState::new(0.0, 0.0, -1.0), &tls, &drive, (0.0, t_end), &[t_end], &cfg)
            .unwrap()
            .states[0]
    };
    let reference = run(80.0, 1e-12);
    let err = |per_period: f64| {
        let s = run(per_period, 1e-3);
        (s.sx - reference.sx)
            .abs()
            .max((s.sy - reference.sy).abs())
            .max((s.sz - reference.sz).abs())
    };
    let errs: Vec<f64> = [20.0, 24.0, 32.0].into_iter().map(err).collect();
    assert!(errs.windows(2).all(|w| w[1] < w[0]), "{errs:?}");
    assert!(errs[2] < 1e-8, "{errs:?}");
}

#[test]
fn slow_response_is_linear_in_the_probe() {
    let tls = TlsParams::new(ghz(1.0), ghz(0.3), 0.0, ghz(4e-3), ghz(2e-3)).unwrap();
    let (f, delta) = (ghz(8e-3), ghz(4e-3));
    let omega0 = tls.gap() + delta;
    let omega = omega0 / 160.0;
    let cfg = ProbeRunConfig::default();
    let per_g = |g0: f64| measure_probe_response(&tls, f, omega0, g0, omega, &cfg).unwrap().per_unit_g(g0);
    let (a, b) = (per_g(1e-3 * f), per_g(2e-3 * f));
    for (name, x, y) in [("Z", a.z, b.z), ("Y", a.y, b.y), ("X", a.x, b.x)] {
        assert!((x - y).norm() <= 0.01 * x.norm(), "{name}: {x} vs {y}");
    }
}

#[test]
fn trajectory_csv_round_trips_exactly() {
    let tls = TlsParams::new(ghz(1.0), ghz(0.1), 0.02, mhz(4.0), mhz(0.1)).unwrap();
    let drive = DriveWaveform::with_cosine_probe(mhz(5.0), tls.gap(), mhz(0.1), mhz(6.0));
    let times = uniform_times(0.0, 50e-9, 101);
    let traj = integrate(
        BlochState::equilibrium(&tls),
        &tls,
        &drive,
        (0.0, 50e-9),
        &times,
        &IntegratorConfig::default(),
    )
    .unwrap();
    let mut buf = Vec::new();
    traj.write_csv(&mut buf).unwrap();
    let back = Trajectory::read_csv(buf.as_slice(), tls).unwrap();
    assert_eq!(back.t, traj.t);
    assert_eq!(back.states, traj.states);
    assert!(String::from_utf8(buf).unwrap().starts_with("t,sx,sy,sz\n"));
}

// At δ = 0 the rotating-wave Z response vanishes. The full dynamics keep a
// carrier-mediated Z of relative size ~ (ε/Δ_ε)(f/Δ_ε) per unit probe that only
// the biased qubit shows.
#[test]
fn resonant_z_response_needs_bias_beyond_rotating_wave() {
    let f = mhz(2.0);
    let ratio = |epsilon: f64| {
        let tls = TlsParams::new(ghz(1.0), epsilon, 0.01, mhz(4.0), mhz(0.1)).unwrap();
        let omega0 = tls.gap();
        let omega = omega0 / (omega0 / mhz(6.0)).round();
        let g0 = f / 100.0;
        let r = measure_probe_response(&tls, f, omega0, g0, omega, &ProbeRunConfig::default())
            .unwrap()
            .per_unit_g(g0);
        r.z.norm() / r.x.norm()
    };
    assert!(ratio(0.0) < 1e-6);
    assert!(ratio(ghz(-0.8)) > 1e-3);
}
