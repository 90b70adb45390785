// SPDX-License-Identifier: Apache-2.0

//! Recover Γ_φ, Γ_Z and f from a noisy χ(f_X) curve. With a path argument the
//! synthetic curve is also written as fit input CSV.
//!
//!     cargo run --release --example fit_rates -- [data.csv]

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use rabispec::config::Config;
use rabispec::fit::{fit_rates, forward_model, Abscissa, Bounds, FitOptions, ForwardContext, MeasuredCurve, Rates};
use rabispec::sweep::{Axis, Spacing, Variable};
use rabispec::units::mhz;

fn main() -> rabispec::Result<()> {
    let cfg = Config::fig1_preset();
    let tls = cfg.resolve_tls()?;
    let tank = cfg.resolve_tank()?;
    let ctx = ForwardContext {
        tls,
        e_j: cfg.e_j()?.expect("preset carries E_J"),
        tank,
        detuning: 0.0,
        omega: tank.omega_t,
        thresholds: cfg.thresholds,
    };
    let truth = Rates {
        gamma_phi: tls.gamma_phi,
        gamma_z: tls.gamma_z,
        f: mhz(3.0),
    };

    let x = Axis::new(Variable::FX, -8e-3, 8e-3, 81, Spacing::Linear)?.values;
    let clean = forward_model(&truth, &ctx, Abscissa::Flux, &x)?;
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let unit = Normal::new(0.0, 1.0).expect("unit normal");
    let sigma: Vec<f64> = clean.iter().map(|p| 1e-3 * p.chi.abs()).collect();
    let chi: Vec<f64> = clean.iter().zip(&sigma).map(|(p, s)| p.chi + s * unit.sample(&mut rng)).collect();

    if let Some(path) = std::env::args().nth(1) {
        let mut w = csv::Writer::from_path(&path)?;
        w.write_record(["x", "chi", "sigma"])?;
        for i in 0..x.len() {
            w.write_record([x[i].to_string(), chi[i].to_string(), sigma[i].to_string()])?;
        }
        w.flush()?;
        eprintln!("wrote {path}");
    }

    let data = MeasuredCurve {
        kind: Abscissa::Flux,
        x,
        chi: Some(chi),
        v_t: None,
        sigma: Some(sigma),
    };
    let init = Rates {
        gamma_phi: 1.2 * truth.gamma_phi,
        gamma_z: 0.7 * truth.gamma_z,
        f: 0.8 * truth.f,
    };
    let scale = |r: Rates, k: f64| Rates {
        gamma_phi: r.gamma_phi * k,
        gamma_z: r.gamma_z * k,
        f: r.f * k,
    };
    let bounds = Bounds {
        lower: scale(truth, 0.01),
        upper: scale(truth, 100.0),
    };
    let fit = fit_rates(&data, init, &bounds, &ctx, &FitOptions::default())?;

    let mhz_of = |w: f64| w / std::f64::consts::TAU / 1e6;
    for (name, t, e, s) in [
        ("Gamma_phi", truth.gamma_phi, fit.estimates.gamma_phi, fit.std_errors.gamma_phi),
        ("Gamma_Z", truth.gamma_z, fit.estimates.gamma_z, fit.std_errors.gamma_z),
        ("f", truth.f, fit.estimates.f, fit.std_errors.f),
    ] {
        println!("{name:>10}: true {:.5} MHz, fit {:.5} ± {:.5} MHz", mhz_of(t), mhz_of(e), mhz_of(s));
    }
    println!(
        "{} iterations, stopped by {}, condition {:.2e}",
        fit.iterations, fit.converged_by, fit.condition
    );
    Ok(())
}
