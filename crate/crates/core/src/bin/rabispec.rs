// SPDX-License-Identifier: Apache-2.0

//! Command-line front end. Every command reads one JSON config, writes its
//! outputs plus `manifest.json` into `--out`, and exits 0 (ok), 2 (config),
//! 3 (numerical) or 4 (validation failed).

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use rabispec::bloch::{integrate, integrate_coupled, uniform_times, BlochState, DriveWaveform, TankState};
use rabispec::config::Config;
use rabispec::fit::{fit_rates, forward_model, Abscissa, ForwardContext, MeasuredCurve};
use rabispec::params::DriveParams;
use rabispec::readout::general_regime_warning;
use rabispec::rwa::{response_table, write_response_csv};
use rabispec::sweep::{fig1_recipe, gnuplot_script, run_sweep, write_family_csv, write_sweep_csv, FailedRow, RunManifest};
use rabispec::validate::{self, Suite};
use rabispec::Error;

const EXIT_VALIDATION: u8 = 4;

#[derive(Parser)]
#[command(
    name = "rabispec",
    version,
    about = "Bichromatic Rabi spectroscopy of a dissipative two-level system"
)]
struct Cli {
    /// JSON run configuration (or a previous manifest.json).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory; created if missing.
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,
    /// Worker threads for sweeps and fits; defaults to all cores.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Reserved; every command is deterministic.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate the Bloch equations (optionally with the tank) to trajectory.csv.
    Simulate,
    /// Slow RWA response components over the `response` ω grid to response.csv.
    Response,
    /// One- or two-axis sweep of the readout to sweep.csv.
    Sweep,
    /// Low- and high-power χ(f_X) families to fig1_low.csv, fig1_high.csv, fig1.gp.
    Fig1,
    /// Fit Γ_φ, Γ_Z and f to the `fit` data; writes fit.json and fit_model.csv.
    Fit,
    /// Run the acceptance checks; writes validation.json.
    Validate {
        #[arg(long, value_enum, default_value_t = SuiteArg::Fast)]
        suite: SuiteArg,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum SuiteArg {
    Fast,
    Full,
}

enum Failure {
    Run(Error),
    Validation,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Run(e)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Validation) => ExitCode::from(EXIT_VALIDATION),
        Err(Failure::Run(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn run(cli: &Cli) -> Result<(), Failure> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(config_error("--threads", "must be at least 1").into());
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| config_error("--threads", &e.to_string()))?;
    }
    fs::create_dir_all(&cli.out).map_err(Error::from)?;
    let cfg = match &cli.config {
        Some(p) => Config::load(p)?,
        None => match cli.command {
            Command::Fig1 | Command::Validate { .. } => Config::fig1_preset(),
            _ => return Err(config_error("--config", "this command needs a configuration file").into()),
        },
    };
    match &cli.command {
        Command::Simulate => simulate(&cfg, &cli.out)?,
        Command::Response => response(&cfg, &cli.out)?,
        Command::Sweep => sweep(&cfg, &cli.out)?,
        Command::Fig1 => fig1(&cfg, &cli.out)?,
        Command::Fit => fit(&cfg, cli.config.as_deref(), &cli.out)?,
        Command::Validate { suite } => return validate_cmd(&cfg, *suite, &cli.out),
    }
    Ok(())
}

fn config_error(pointer: &str, reason: &str) -> Error {
    Error::Config {
        pointer: pointer.into(),
        reason: reason.into(),
    }
}

fn create(dir: &Path, name: &str, manifest: &mut RunManifest) -> Result<BufWriter<File>, Error> {
    manifest.outputs.push(name.to_string());
    Ok(BufWriter::new(File::create(dir.join(name))?))
}

fn finish(manifest: &RunManifest, dir: &Path) -> Result<(), Error> {
    manifest.write(&dir.join("manifest.json"))?;
    if !manifest.failed.is_empty() {
        eprintln!(
            "warning: {} of {} points failed; see manifest.json",
            manifest.failed.len(),
            manifest.points
        );
    }
    Ok(())
}

fn simulate(cfg: &Config, out: &Path) -> Result<(), Error> {
    let sim = cfg
        .simulate
        .as_ref()
        .ok_or_else(|| config_error("/simulate", "missing simulate section"))?;
    let tls = cfg.resolve_tls()?;
    let d = cfg.resolve_drive()?;
    if let Some(w) = (DriveParams {
        f: d.f,
        omega0: d.omega0,
        g0: d.g0,
        omega: d.omega,
    })
    .weak_drive_warning(&tls)
    {
        eprintln!("warning: {w}");
    }
    let s0 = match sim.initial {
        Some([x, y, z]) => BlochState::new(x, y, z),
        None => BlochState::equilibrium(&tls),
    };
    let span = (0.0, sim.duration_s);
    let times = uniform_times(0.0, sim.duration_s, sim.samples);
    let traj = if sim.coupled {
        let tank = cfg.resolve_tank()?;
        let t0 = TankState::bare_steady_state(&tank, d.omega);
        integrate_coupled((s0, t0), &tls, &tank, (d.f, d.omega0), d.omega, span, &times, &cfg.integrator)?
    } else {
        let drive = DriveWaveform::with_cosine_probe(d.f, d.omega0, d.g0, d.omega);
        integrate(s0, &tls, &drive, span, &times, &cfg.integrator)?
    };
    let mut m = RunManifest::new("simulate", cfg);
    traj.write_csv(create(out, "trajectory.csv", &mut m)?)?;
    m.points = traj.len();
    finish(&m, out)
}

fn response(cfg: &Config, out: &Path) -> Result<(), Error> {
    let tls = cfg.resolve_tls()?;
    let d = cfg.resolve_drive()?;
    let rows = response_table(&tls, d.f, d.delta, &cfg.response_grid()?);
    let mut m = RunManifest::new("response", cfg);
    write_response_csv(&rows, create(out, "response.csv", &mut m)?)?;
    m.points = rows.len();
    m.failed = rows
        .iter()
        .enumerate()
        .filter_map(|(index, (_, r))| {
            r.as_ref().err().map(|e| FailedRow {
                index,
                error: e.to_string(),
            })
        })
        .collect();
    finish(&m, out)
}

fn sweep(cfg: &Config, out: &Path) -> Result<(), Error> {
    let spec = cfg.sweep_spec()?;
    if spec.delta != 0.0 {
        if let Some(w) = general_regime_warning(&spec.tls, spec.f, spec.delta) {
            eprintln!("warning: {w}");
        }
    }
    let rows = run_sweep(&spec)?;
    let mut m = RunManifest::new("sweep", cfg);
    write_sweep_csv(&rows, spec.rwa_components, create(out, "sweep.csv", &mut m)?)?;
    m.record_rows(&rows);
    finish(&m, out)
}

fn fig1(cfg: &Config, out: &Path) -> Result<(), Error> {
    let data = fig1_recipe(cfg)?;
    let mut m = RunManifest::new("fig1", cfg);
    write_family_csv(&data.low, create(out, "fig1_low.csv", &mut m)?)?;
    write_family_csv(&data.high, create(out, "fig1_high.csv", &mut m)?)?;
    fs::write(
        out.join("fig1.gp"),
        gnuplot_script(&[(&data.low, "fig1_low.csv"), (&data.high, "fig1_high.csv")]),
    )?;
    m.outputs.push("fig1.gp".into());
    m.points = data.low.f_x.len() * (data.low.powers.len() + data.high.powers.len());
    finish(&m, out)
}

fn fit(cfg: &Config, config_path: Option<&Path>, out: &Path) -> Result<(), Error> {
    let sec = cfg.fit.as_ref().ok_or_else(|| config_error("/fit", "missing fit section"))?;
    // Relative data paths are taken from the config file's directory.
    let data_path = match config_path.and_then(Path::parent) {
        Some(dir) if sec.data.is_relative() => dir.join(&sec.data),
        _ => sec.data.clone(),
    };
    let file = File::open(&data_path).map_err(|e| config_error("/fit/data", &format!("{}: {e}", data_path.display())))?;
    let mut data = MeasuredCurve::read_csv(file, sec.abscissa).map_err(|e| config_error("/fit/data", &e.to_string()))?;
    if let (Abscissa::Probe, Some(u)) = (sec.abscissa, sec.x_unit) {
        data.x.iter_mut().for_each(|x| *x = u.to_internal(*x));
    }
    let d = cfg.resolve_drive()?;
    let ctx = ForwardContext {
        tls: cfg.resolve_tls()?,
        e_j: cfg.e_j()?.unwrap_or(0.0),
        tank: cfg.resolve_tank()?,
        detuning: d.delta,
        omega: d.omega,
        thresholds: cfg.thresholds,
    };
    let (init, bounds) = cfg.fit_start()?;
    let result = fit_rates(&data, init, &bounds, &ctx, &sec.options)?;
    if let Some(w) = &result.weak_direction {
        eprintln!("warning: weakly constrained direction {w} (condition {:.3e})", result.condition);
    }
    let mut m = RunManifest::new("fit", cfg);
    serde_json::to_writer_pretty(create(out, "fit.json", &mut m)?, &result)?;
    let model = forward_model(&result.estimates, &ctx, data.kind, &data.x)?;
    let mut w = csv::Writer::from_writer(create(out, "fit_model.csv", &mut m)?);
    w.write_record(["x", "chi", "v_t"])?;
    for (x, p) in data.x.iter().zip(&model) {
        w.write_record([format!("{x:.16e}"), format!("{:.16e}", p.chi), format!("{:.16e}", p.v_t)])?;
    }
    w.flush()?;
    m.points = data.x.len();
    finish(&m, out)
}

fn validate_cmd(cfg: &Config, suite: SuiteArg, out: &Path) -> Result<(), Failure> {
    let suite = match suite {
        SuiteArg::Fast => Suite::Fast,
        SuiteArg::Full => Suite::Full,
    };
    let report = validate::run(suite);
    for c in &report.criteria {
        println!("{}", c.summary_line());
    }
    let mut m = RunManifest::new("validate", cfg);
    serde_json::to_writer_pretty(create(out, "validation.json", &mut m)?, &report).map_err(Error::from)?;
    m.points = report.criteria.len();
    finish(&m, out)?;
    if report.passed {
        Ok(())
    } else {
        Err(Failure::Validation)
    }
}
