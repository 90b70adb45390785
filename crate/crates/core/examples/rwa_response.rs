// SPDX-License-Identifier: Apache-2.0

//! Slow response of the driven qubit to a weak probe, swept through the
//! Rabi resonance ω = Ω_R. Responses are per unit probe, scaled by Ω_R.
//!
//!     cargo run --release --example rwa_response

use num_complex::Complex64;
use rabispec::params::{rabi_frequency, TlsParams};
use rabispec::rwa::{response_table, validity_warnings, RwaInputs};
use rabispec::units::{ghz, mhz, over_2pi};

fn main() -> rabispec::Result<()> {
    let tls = TlsParams::new(ghz(1.0), ghz(0.3), 0.02, mhz(2.0), mhz(0.1))?;
    let (f, delta) = (mhz(8.0), mhz(6.0));
    let omega_r = rabi_frequency(delta, f);
    for w in validity_warnings(&RwaInputs {
        tls,
        f,
        delta,
        omega: omega_r,
    }) {
        eprintln!("warning: {w}");
    }

    let omegas: Vec<f64> = (1..=12).map(|i| omega_r * i as f64 / 8.0).collect();
    println!("Omega_R/2pi = {:.3} MHz", over_2pi(omega_r) / 1e6);
    println!("{:>10} {:>12} {:>12} {:>12}", "w/Omega_R", "W_R |Z|", "W_R |Y|", "W_R |X|");
    for (omega, r) in response_table(&tls, f, delta, &omegas) {
        let r = r?;
        let m = |c: Complex64| omega_r * c.norm();
        println!("{:>10.3} {:>12.5e} {:>12.5e} {:>12.5e}", omega / omega_r, m(r.z), m(r.y), m(r.x));
    }
    Ok(())
}
