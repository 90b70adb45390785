// SPDX-License-Identifier: Apache-2.0

//! Two-axis sweep (drive amplitude × flux) through the closed forms, written
//! as CSV to stdout.
//!
//!     cargo run --release --example flux_sweep > sweep.csv

use rabispec::config::Config;
use rabispec::readout::RegimeThresholds;
use rabispec::sweep::{run_sweep, write_sweep_csv, Axis, Engine, Spacing, SweepSpec, Variable};
use rabispec::units::mhz;

fn main() -> rabispec::Result<()> {
    let cfg = Config::fig1_preset();
    let tank = cfg.resolve_tank()?;
    let spec = SweepSpec {
        tls: cfg.resolve_tls()?,
        tank,
        e_j: cfg.e_j()?,
        f_x: Some(0.0),
        f: 0.0,
        delta: 0.0,
        omega: tank.omega_t,
        axes: vec![
            Axis::new(Variable::F, mhz(0.1), mhz(20.0), 5, Spacing::Log)?,
            Axis::new(Variable::FX, -8e-3, 8e-3, 33, Spacing::Linear)?,
        ],
        engine: Engine::Analytic,
        thresholds: RegimeThresholds::default(),
        rwa_components: false,
    };
    let rows = run_sweep(&spec)?;
    let failed = rows.iter().filter(|r| r.outcome.is_err()).count();
    eprintln!("{} points, {failed} failed", rows.len());
    write_sweep_csv(&rows, false, std::io::stdout().lock())
}
