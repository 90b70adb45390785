// SPDX-License-Identifier: Apache-2.0

//! Resonant carrier on an unbiased qubit: ⟨σ_Z⟩ oscillates at the Rabi
//! frequency and decays towards the driven steady state.
//!
//!     cargo run --release --example rabi_flopping

use std::f64::consts::TAU;

use rabispec::bloch::{integrate, uniform_times, BlochState, DriveWaveform, IntegratorConfig};
use rabispec::params::TlsParams;
use rabispec::units::{ghz, mhz};

fn main() -> rabispec::Result<()> {
    let tls = TlsParams::new(ghz(1.0), 0.0, 0.0, mhz(0.5), mhz(0.05))?;
    let f = mhz(20.0);
    let drive = DriveWaveform::carrier_only(f, tls.gap());
    let t_end = 4.0 * TAU / f;
    let times = uniform_times(0.0, t_end, 17);
    let traj = integrate(
        BlochState::new(0.0, 0.0, -1.0),
        &tls,
        &drive,
        (0.0, t_end),
        &times,
        &IntegratorConfig::default(),
    )?;

    println!("{:>10} {:>10} {:>10}", "t (ns)", "sz", "|s|");
    for (t, s) in traj.t.iter().zip(&traj.states) {
        println!("{:>10.3} {:>10.5} {:>10.6}", t * 1e9, s.sz, s.norm_sq().sqrt());
    }
    println!("{} accepted steps, {} rejected", traj.meta.accepted_steps, traj.meta.rejected_steps);
    Ok(())
}
