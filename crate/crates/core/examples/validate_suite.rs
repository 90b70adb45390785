// SPDX-License-Identifier: Apache-2.0

//! Run the acceptance checks and print one line per criterion.
//!
//!     cargo run --release --example validate_suite -- [fast|full]

use rabispec::validate::{run, Suite};

fn main() {
    let suite = match std::env::args().nth(1).as_deref() {
        Some("full") => Suite::Full,
        _ => Suite::Fast,
    };
    let report = run(suite);
    for c in &report.criteria {
        println!("{}", c.summary_line());
        for n in &c.notes {
            println!("    {n}");
        }
    }
    std::process::exit(if report.passed { 0 } else { 1 });
}
