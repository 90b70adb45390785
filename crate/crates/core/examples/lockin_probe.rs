// SPDX-License-Identifier: Apache-2.0

//! Time-domain measurement of the slow response: integrate with carrier and
//! probe, demodulate, and compare with the rotating-wave closed form.
//!
//!     cargo run --release --example lockin_probe

use rabispec::lockin::{measure_probe_response, ProbeRunConfig};
use rabispec::params::TlsParams;
use rabispec::rwa::{slow_response, RwaInputs};
use rabispec::units::ghz;

fn main() -> rabispec::Result<()> {
    let tls = TlsParams::new(ghz(1.0), ghz(0.3), 0.0, ghz(4e-3), ghz(2e-3))?;
    let (f, delta) = (ghz(8e-3), ghz(4e-3));
    let omega0 = tls.gap() + delta;
    // Integer carrier/probe ratio keeps carrier products out of the probe channel.
    let omega = omega0 / 160.0;
    let g0 = 1e-3 * f;

    let split = measure_probe_response(&tls, f, omega0, g0, omega, &ProbeRunConfig::default())?;
    let measured = split.per_unit_g(g0);
    let rwa = slow_response(&RwaInputs { tls, f, delta, omega })?;
    for w in &split.warnings {
        eprintln!("warning: {w}");
    }

    println!("{:>3} {:>26} {:>26}", "", "lock-in", "rotating wave");
    for (name, m, r) in [("Z", measured.z, rwa.z), ("Y", measured.y, rwa.y), ("X", measured.x, rwa.x)] {
        println!("{name:>3} {:>12.5e} {:>+12.5e}i {:>12.5e} {:>+12.5e}i", m.re, m.im, r.re, r.im);
    }
    println!("envelope drift {:.2e}, window {} periods", split.drift, split.window.periods);
    Ok(())
}
