// SPDX-License-Identifier: Apache-2.0

//! Parameter sweeps over f_X, f, ω and δ, the figure recipe for χ(f_X)
//! curve families, and the run manifest written next to every output.
//!
//! Grid points are evaluated on the rayon pool and emitted in lexicographic
//! grid order (first axis slowest). A failing point poisons only its row.

use std::f64::consts::TAU;
use std::io::Write;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::Config;
use crate::error::{Error, Result};
use crate::lockin::{measure_tank_response, TankRunConfig};
use crate::params::{flux_to_bias, FluxSpec, TankParams, TlsParams};
use crate::readout::{amplitude_phase, p0, readout_point, xi_gamma_resonant, RegimeThresholds};
use crate::rwa::{slow_response, RwaInputs};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Variable {
    #[serde(rename = "f_x")]
    FX,
    #[serde(rename = "f")]
    F,
    #[serde(rename = "omega")]
    Omega,
    #[serde(rename = "delta")]
    Delta,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Spacing {
    #[default]
    Linear,
    Log,
}

/// One swept variable with its grid in internal units.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Axis {
    pub variable: Variable,
    pub values: Vec<f64>,
}

impl Axis {
    pub fn new(variable: Variable, min: f64, max: f64, count: usize, spacing: Spacing) -> Result<Self> {
        if count < 2 {
            return Err(Error::invalid("count", "need at least 2 points per axis"));
        }
        if !min.is_finite() || !max.is_finite() || !(min < max) {
            return Err(Error::invalid("min", "need finite min < max"));
        }
        let n = (count - 1) as f64;
        let values = match spacing {
            Spacing::Linear => (0..count)
                .map(|i| if i + 1 == count { max } else { min + (max - min) * i as f64 / n })
                .collect(),
            Spacing::Log => {
                if min <= 0.0 {
                    return Err(Error::invalid("min", "log spacing needs positive bounds"));
                }
                let (a, b) = (min.ln(), max.ln());
                (0..count)
                    .map(|i| if i + 1 == count { max } else { (a + (b - a) * i as f64 / n).exp() })
                    .collect()
            }
        };
        Ok(Axis { variable, values })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Engine {
    /// Closed forms or the self-consistent solve, chosen per point by regime.
    #[default]
    Analytic,
    /// Coupled qubit-tank integration with numeric lock-in of the voltage.
    OdeLockin {
        #[serde(default)]
        run: TankRunConfig,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepSpec {
    pub tls: TlsParams,
    pub tank: TankParams,
    /// Needed when f_X is swept.
    pub e_j: Option<f64>,
    /// f_X of the base point, when the bias was given as flux.
    pub f_x: Option<f64>,
    pub f: f64,
    pub delta: f64,
    pub omega: f64,
    pub axes: Vec<Axis>,
    pub engine: Engine,
    pub thresholds: RegimeThresholds,
    pub rwa_components: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridPoint {
    pub f_x: Option<f64>,
    pub epsilon: f64,
    pub f: f64,
    pub delta: f64,
    pub omega: f64,
}

/// Slow components per unit probe at a grid point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RwaColumns {
    pub z: Complex64,
    pub y: Complex64,
    pub x: Complex64,
    pub p_z: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PointResult {
    pub xi: f64,
    pub gamma_t: f64,
    pub v_t: f64,
    pub chi: f64,
    pub regime: &'static str,
    pub rwa: Option<RwaColumns>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub point: GridPoint,
    pub outcome: std::result::Result<PointResult, String>,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        self.tls.validate()?;
        self.tank.validate()?;
        if !(self.f >= 0.0) || !(self.omega > 0.0) || !self.delta.is_finite() {
            return Err(Error::invalid("sweep", "need f >= 0, omega > 0 and finite delta"));
        }
        if self.axes.is_empty() || self.axes.len() > 2 {
            return Err(Error::invalid("axes", "need one or two axes"));
        }
        for a in &self.axes {
            if a.values.len() < 2 {
                return Err(Error::invalid("axes", "need at least 2 points per axis"));
            }
            match a.variable {
                Variable::FX if self.e_j.is_none() => return Err(Error::invalid("e_j", "a flux axis needs E_J")),
                Variable::F if a.values.iter().any(|v| *v < 0.0) => {
                    return Err(Error::invalid("f", "drive amplitude must be non-negative"))
                }
                Variable::Omega if a.values.iter().any(|v| *v <= 0.0) => {
                    return Err(Error::invalid("omega", "probe frequency must be positive"))
                }
                _ => {}
            }
        }
        if let Engine::OdeLockin { run } = &self.engine {
            run.integrator.validate()?;
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.axes.iter().map(|a| a.values.len()).product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Grid point `index` in lexicographic order, first axis slowest.
    pub fn point(&self, index: usize) -> GridPoint {
        let mut p = GridPoint {
            f_x: self.f_x,
            epsilon: self.tls.epsilon,
            f: self.f,
            delta: self.delta,
            omega: self.omega,
        };
        let mut rest = index;
        let mut picks = vec![0; self.axes.len()];
        for (k, a) in self.axes.iter().enumerate().rev() {
            picks[k] = rest % a.values.len();
            rest /= a.values.len();
        }
        for (a, &i) in self.axes.iter().zip(&picks) {
            let v = a.values[i];
            match a.variable {
                Variable::FX => {
                    p.f_x = Some(v);
                    p.epsilon = flux_to_bias(&FluxSpec {
                        f_x: v,
                        e_j: self.e_j.unwrap_or(0.0),
                        i_q: self.tank.i_q,
                    });
                }
                Variable::F => p.f = v,
                Variable::Omega => p.omega = v,
                Variable::Delta => p.delta = v,
            }
        }
        p
    }

    pub fn evaluate(&self, p: &GridPoint) -> Result<PointResult> {
        let tls = self.tls.with_epsilon(p.epsilon);
        let (xi, gamma_t, v_t, chi, regime) = match &self.engine {
            Engine::Analytic => {
                let r = readout_point(&tls, &self.tank, p.f, p.delta, p.omega, &self.thresholds)?;
                (r.xi, r.gamma_t_eff, r.v_t, r.chi, r.regime.as_str())
            }
            Engine::OdeLockin { run } => {
                let m = measure_tank_response(&tls, &self.tank, p.f, p.delta, p.omega, run)?;
                let t = &self.tank;
                let v = Complex64::from_polar(m.v_t, m.chi);
                let d = Complex64::new(0.0, p.omega * t.omega_t * t.omega_t * t.l_t * t.i0) / v;
                (d.re, d.im / p.omega, m.v_t, m.chi, "ode_lockin")
            }
        };
        let rwa = if self.rwa_components {
            let r = slow_response(&RwaInputs {
                tls,
                f: p.f,
                delta: p.delta,
                omega: p.omega,
            })?;
            Some(RwaColumns {
                z: r.z,
                y: r.y,
                x: r.x,
                p_z: r.p_z,
            })
        } else {
            None
        };
        Ok(PointResult {
            xi,
            gamma_t,
            v_t,
            chi,
            regime,
            rwa,
        })
    }
}

/// Evaluate every grid point on the current rayon pool.
pub fn run_sweep(spec: &SweepSpec) -> Result<Vec<SweepRow>> {
    spec.validate()?;
    Ok((0..spec.len())
        .into_par_iter()
        .map(|i| {
            let point = spec.point(i);
            SweepRow {
                point,
                outcome: spec.evaluate(&point).map_err(|e| e.to_string()),
            }
        })
        .collect())
}

fn num(x: f64) -> String {
    format!("{x:e}")
}

pub fn write_sweep_csv<W: Write>(rows: &[SweepRow], rwa_components: bool, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec![
        "f_x",
        "epsilon",
        "f_drive",
        "omega",
        "delta",
        "epsilon_over_2pi",
        "f_drive_over_2pi",
        "omega_over_2pi",
        "delta_over_2pi",
        "xi",
        "gamma_t",
        "gamma_t_over_2pi",
        "v_t",
        "chi",
        "regime",
        "status",
    ];
    if rwa_components {
        header.extend(["z_re", "z_im", "y_re", "y_im", "x_re", "x_im", "p_z"]);
    }
    w.write_record(&header)?;
    for row in rows {
        let p = &row.point;
        let mut rec = vec![
            p.f_x.map(num).unwrap_or_default(),
            num(p.epsilon),
            num(p.f),
            num(p.omega),
            num(p.delta),
            num(p.epsilon / TAU),
            num(p.f / TAU),
            num(p.omega / TAU),
            num(p.delta / TAU),
        ];
        match &row.outcome {
            Ok(r) => {
                rec.extend([
                    num(r.xi),
                    num(r.gamma_t),
                    num(r.gamma_t / TAU),
                    num(r.v_t),
                    num(r.chi),
                    r.regime.to_string(),
                    "ok".to_string(),
                ]);
                if rwa_components {
                    let c = r.rwa.unwrap_or(RwaColumns {
                        z: f64::NAN.into(),
                        y: f64::NAN.into(),
                        x: f64::NAN.into(),
                        p_z: f64::NAN,
                    });
                    rec.extend([c.z.re, c.z.im, c.y.re, c.y.im, c.x.re, c.x.im, c.p_z].map(num));
                }
            }
            Err(e) => {
                rec.extend(["NaN", "NaN", "NaN", "NaN", "NaN", ""].map(String::from));
                rec.push(e.clone());
                if rwa_components {
                    rec.extend(std::iter::repeat_n("NaN".to_string(), 7));
                }
            }
        }
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FailedRow {
    pub index: usize,
    pub error: String,
}

/// Everything needed to reproduce an output; `config` re-runs as-is.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub manifest_version: u32,
    pub tool: String,
    pub version: String,
    pub timestamp_unix: u64,
    pub command: String,
    pub threads: usize,
    pub config: Config,
    pub outputs: Vec<String>,
    pub points: usize,
    pub failed: Vec<FailedRow>,
}

impl RunManifest {
    pub fn new(command: &str, config: &Config) -> Self {
        RunManifest {
            manifest_version: 1,
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            timestamp_unix: std::time::SystemTime::now()
                .duration_since(std::time::UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
            command: command.to_string(),
            threads: rayon::current_num_threads(),
            config: config.clone(),
            outputs: Vec::new(),
            points: 0,
            failed: Vec::new(),
        }
    }

    pub fn record_rows(&mut self, rows: &[SweepRow]) {
        self.points += rows.len();
        self.failed.extend(
            rows.iter()
                .enumerate()
                .filter_map(|(index, r)| r.outcome.as_ref().err().map(|e| FailedRow { index, error: e.clone() })),
        );
    }

    pub fn write(&self, path: &std::path::Path) -> Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(self)?)?;
        Ok(())
    }
}

/// χ(f_X) and V_T(f_X) for a set of drive amplitudes at zero carrier detuning.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurveFamily {
    pub name: String,
    pub f_x: Vec<f64>,
    /// Drive amplitudes, rad/s.
    pub powers: Vec<f64>,
    /// chi[i][j] at powers[i], f_x[j].
    pub chi: Vec<Vec<f64>>,
    pub v_t: Vec<Vec<f64>>,
    pub p0: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Fig1Data {
    pub low: CurveFamily,
    pub high: CurveFamily,
}

/// Resonant closed form over an f_X grid, one curve per drive amplitude.
pub fn flux_curves(
    name: &str,
    tls: &TlsParams,
    tank: &TankParams,
    e_j: f64,
    omega: f64,
    f_x: &[f64],
    powers: &[f64],
) -> Result<CurveFamily> {
    let mut chi = Vec::with_capacity(powers.len());
    let mut v_t = Vec::with_capacity(powers.len());
    for &f in powers {
        let pts = f_x
            .par_iter()
            .map(|&x| {
                let eps = flux_to_bias(&FluxSpec {
                    f_x: x,
                    e_j,
                    i_q: tank.i_q,
                });
                let (xi, gt) = xi_gamma_resonant(&tls.with_epsilon(eps), tank, f, omega)?;
                amplitude_phase(xi, gt, tank, omega)
            })
            .collect::<Result<Vec<_>>>()?;
        v_t.push(pts.iter().map(|p| p.0).collect());
        chi.push(pts.iter().map(|p| p.1).collect());
    }
    Ok(CurveFamily {
        name: name.to_string(),
        f_x: f_x.to_vec(),
        powers: powers.to_vec(),
        chi,
        v_t,
        p0: powers.iter().map(|&f| p0(f, tls.gamma_phi, tls.gamma_z)).collect(),
    })
}

/// Low- and high-power χ(f_X) families from the `fig1` section.
pub fn fig1_recipe(cfg: &Config) -> Result<Fig1Data> {
    let tls = cfg.resolve_tls()?;
    let tank = cfg.resolve_tank()?;
    let omega = cfg.resolve_drive()?.omega;
    let e_j = cfg.e_j()?.ok_or_else(|| Error::Config {
        pointer: "/tls/e_j".into(),
        reason: "the figure recipe sweeps flux and needs E_J".into(),
    })?;
    let sec = cfg.fig1.clone().unwrap_or_default();
    let f_x = Axis::new(Variable::FX, sec.f_x_min, sec.f_x_max, sec.f_x_count, Spacing::Linear)?.values;
    let powers = |list: &[crate::units::Frequency]| list.iter().map(|p| p.angular()).collect::<Result<Vec<_>>>();
    Ok(Fig1Data {
        low: flux_curves("low_power", &tls, &tank, e_j, omega, &f_x, &powers(&sec.low_power)?)?,
        high: flux_curves("high_power", &tls, &tank, e_j, omega, &f_x, &powers(&sec.high_power)?)?,
    })
}

/// Wide CSV: f_x, then one chi column per drive amplitude, then the V_T columns.
pub fn write_family_csv<W: Write>(fam: &CurveFamily, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let label = |p: f64| format!("{}MHz", p / TAU / 1e6);
    let mut header = vec!["f_x".to_string()];
    header.extend(fam.powers.iter().map(|&p| format!("chi_f={}", label(p))));
    header.extend(fam.powers.iter().map(|&p| format!("v_t_f={}", label(p))));
    w.write_record(&header)?;
    for j in 0..fam.f_x.len() {
        let mut rec = vec![num(fam.f_x[j])];
        rec.extend(fam.chi.iter().map(|c| num(c[j])));
        rec.extend(fam.v_t.iter().map(|c| num(c[j])));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// gnuplot script plotting the phase columns of each family file.
pub fn gnuplot_script(families: &[(&CurveFamily, &str)]) -> String {
    let mut s = String::from("set datafile separator ','\nset key autotitle columnhead\nset xlabel 'f_X'\nset ylabel 'chi (rad)'\n");
    for (fam, file) in families {
        let n = fam.powers.len();
        s.push_str(&format!(
            "set title '{}'\nplot for [i=2:{}] '{}' using 1:i with lines\npause -1\n",
            fam.name,
            n + 1,
            file
        ));
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec() -> SweepSpec {
        let cfg = Config::fig1_preset();
        SweepSpec {
            tls: cfg.resolve_tls().unwrap(),
            tank: cfg.resolve_tank().unwrap(),
            e_j: cfg.e_j().unwrap(),
            f_x: Some(0.0),
            f: crate::units::mhz(0.5),
            delta: 0.0,
            omega: crate::units::mhz(6.0),
            axes: vec![Axis::new(Variable::FX, -4e-3, 4e-3, 9, Spacing::Linear).unwrap()],
            engine: Engine::Analytic,
            thresholds: RegimeThresholds::default(),
            rwa_components: false,
        }
    }

    #[test]
    fn axes_validate_and_space() {
        assert!(Axis::new(Variable::F, 1.0, 1.0, 3, Spacing::Linear).is_err());
        assert!(Axis::new(Variable::F, 0.0, 1.0, 1, Spacing::Linear).is_err());
        assert!(Axis::new(Variable::F, 0.0, 1.0, 3, Spacing::Log).is_err());
        let a = Axis::new(Variable::F, 1.0, 100.0, 3, Spacing::Log).unwrap();
        assert!((a.values[1] - 10.0).abs() < 1e-12);
        assert_eq!(a.values[2], 100.0);
    }

    #[test]
    fn lexicographic_order() {
        let mut s = spec();
        s.axes.push(Axis::new(Variable::Omega, 1.0, 3.0, 3, Spacing::Linear).unwrap());
        assert_eq!(s.len(), 27);
        assert_eq!(s.point(0).omega, 1.0);
        assert_eq!(s.point(1).omega, 2.0);
        assert_eq!(s.point(3).f_x, Some(-3e-3));
    }

    #[test]
    fn one_point_matches_direct_call() {
        let mut s = spec();
        s.axes = vec![Axis::new(Variable::Omega, crate::units::mhz(5.0), crate::units::mhz(7.0), 2, Spacing::Linear).unwrap()];
        let rows = run_sweep(&s).unwrap();
        let direct = readout_point(&s.tls, &s.tank, s.f, s.delta, crate::units::mhz(5.0), &s.thresholds).unwrap();
        let r = rows[0].outcome.as_ref().unwrap();
        assert_eq!((r.xi, r.gamma_t, r.chi), (direct.xi, direct.gamma_t_eff, direct.chi));
    }

    #[test]
    fn decoupled_sweep_is_flat() {
        let mut s = spec();
        s.tank.k = 0.0;
        let rows = run_sweep(&s).unwrap();
        let first = rows[0].outcome.as_ref().unwrap().chi;
        assert!(rows.iter().all(|r| r.outcome.as_ref().unwrap().chi == first));
    }

    #[test]
    fn failure_poisons_only_its_row() {
        let mut s = spec();
        s.tls.gamma_phi = 0.0;
        s.f = 0.0;
        s.axes = vec![Axis::new(Variable::F, 0.0, 1e6, 3, Spacing::Linear).unwrap()];
        let rows = run_sweep(&s).unwrap();
        assert!(rows[0].outcome.is_ok());
        assert!(rows[1].outcome.is_err());
        let mut buf = Vec::new();
        write_sweep_csv(&rows, false, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 4);
        assert!(text.lines().nth(2).unwrap().contains("NaN"));
    }

    #[test]
    fn csv_is_deterministic() {
        let s = spec();
        let mut a = Vec::new();
        let mut b = Vec::new();
        write_sweep_csv(&run_sweep(&s).unwrap(), true, &mut a).unwrap();
        write_sweep_csv(&run_sweep(&s).unwrap(), true, &mut b).unwrap();
        assert_eq!(a, b);
    }
}
