// SPDX-License-Identifier: Apache-2.0

//! Acceptance criteria 1–8, full versions, one PASS/FAIL line each.
//! Exits non-zero if any criterion fails or overruns its time budget.

use std::process::ExitCode;

use rabispec::readout::resonance_functions;
use rabispec::validate::{
    dynamics_invariants, fit_round_trip, flux_figure_shape, ode_rwa_equivalence, rabi_resonance_peak, resonance_nulls, two_path_agreement,
    zero_drive_limit, CriterionReport,
};

fn main() -> ExitCode {
    // (criterion, budget in seconds)
    let checks: [(fn() -> CriterionReport, f64); 8] = [
        (|| resonance_nulls(true), 60.0),
        (ode_rwa_equivalence, 600.0),
        (|| two_path_agreement(1000, 2024, resonance_functions), 60.0),
        (|| zero_drive_limit(true), 300.0),
        (flux_figure_shape, 60.0),
        (dynamics_invariants, 300.0),
        (|| fit_round_trip(20), 300.0),
        (rabi_resonance_peak, 60.0),
    ];
    let mut all = true;
    for (check, budget) in checks {
        let r = check();
        let in_time = r.seconds <= budget;
        all &= r.passed && in_time;
        println!("{}", r.summary_line());
        if !in_time {
            println!("    over budget: {:.1} s > {budget} s", r.seconds);
        }
        for m in &r.metrics {
            println!(
                "    {} {}: {:.3e} (limit {:.3e})",
                if m.passed { "ok  " } else { "FAIL" },
                m.name,
                m.value,
                m.limit
            );
        }
        for n in &r.notes {
            println!("    {n}");
        }
    }
    println!("acceptance: {}", if all { "PASS" } else { "FAIL" });
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
