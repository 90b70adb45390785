// SPDX-License-Identifier: Apache-2.0

//! Tank amplitude and phase at a few flux biases and drive strengths, with
//! the evaluation path chosen per point.
//!
//!     cargo run --release --example tank_readout

use rabispec::config::Config;
use rabispec::params::{flux_to_bias, FluxSpec};
use rabispec::readout::{readout_point, RegimeThresholds};
use rabispec::units::mhz;

fn main() -> rabispec::Result<()> {
    let cfg = Config::fig1_preset();
    let (tls, tank) = (cfg.resolve_tls()?, cfg.resolve_tank()?);
    let e_j = cfg.e_j()?.expect("preset carries E_J");
    let omega = tank.omega_t;
    let thresholds = RegimeThresholds::default();

    println!(
        "{:>8} {:>8} {:>8} {:>12} {:>10} {:>10}  path",
        "f_X", "f MHz", "d MHz", "xi", "Gamma_T", "chi"
    );
    for &f_x in &[0.0, 2e-3, 5e-3] {
        let eps = flux_to_bias(&FluxSpec::new(f_x, e_j, tank.i_q)?);
        let tls = tls.with_epsilon(eps);
        for &(f, delta) in &[(0.0, 0.0), (5.0, 0.0), (5.0, 40.0), (5.0, 1.0)] {
            let p = readout_point(&tls, &tank, mhz(f), mhz(delta), omega, &thresholds)?;
            println!(
                "{:>8.1e} {:>8.1} {:>8.1} {:>12.4e} {:>10.4e} {:>10.5}  {}",
                f_x,
                f,
                delta,
                p.xi,
                p.gamma_t_eff,
                p.chi,
                p.regime.as_str()
            );
        }
    }
    Ok(())
}
