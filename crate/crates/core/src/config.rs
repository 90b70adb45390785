// SPDX-License-Identifier: Apache-2.0

//! JSON run configuration with unit-tagged quantities.
//!
//! Every physical input is `{"value": .., "unit": ..}`; unknown fields are
//! rejected and every failure names a JSON pointer into the document.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::bloch::IntegratorConfig;
use crate::error::{Error, Result};
use crate::fit::{Abscissa, Bounds, FitOptions, Rates};
use crate::lockin::{ProbeRunConfig, TankRunConfig};
use crate::params::{flux_to_bias, Conventions, FluxSpec, TankParams, TlsParams};
use crate::readout::RegimeThresholds;
use crate::sweep::{Axis, Engine, Spacing, SweepSpec, Variable};
use crate::units::{Current, CurrentUnit, Energy, FreqUnit, Frequency, Inductance, InductanceUnit, Tagged, Temperature, TemperatureUnit};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TlsSection {
    pub delta: Frequency,
    /// Either ε directly or a flux bias f_X with E_J.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<Frequency>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f_x: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub e_j: Option<Energy>,
    /// Charging energy; recorded, not used by the two-level model.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub e_c: Option<Energy>,
    pub temperature: Temperature,
    pub gamma_phi: Frequency,
    pub gamma_z: Frequency,
    #[serde(default)]
    pub conventions: Conventions,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TankSection {
    pub omega_t: Frequency,
    pub q_t: f64,
    pub l_t: Inductance,
    pub k: f64,
    pub l_q: Inductance,
    pub i_q: Current,
    pub i0: Current,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DriveSection {
    pub f: Frequency,
    /// Carrier detuning δ = ω₀ − Δ_ε; exclusive with `omega0`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detuning: Option<Frequency>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega0: Option<Frequency>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub g0: Option<Frequency>,
    pub omega: Frequency,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateSection {
    pub duration_s: f64,
    pub samples: usize,
    #[serde(default)]
    pub coupled: bool,
    /// Initial (sx, sy, sz); defaults to thermal equilibrium.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial: Option<[f64; 3]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AxisSection {
    pub variable: Variable,
    pub min: f64,
    pub max: f64,
    pub count: usize,
    #[serde(default)]
    pub spacing: Spacing,
    /// Required for frequency-valued variables.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub unit: Option<FreqUnit>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResponseSection {
    pub omega: AxisSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub axes: Vec<AxisSection>,
    #[serde(default)]
    pub engine: Engine,
    /// Append the slow RWA components per unit probe.
    #[serde(default)]
    pub rwa_components: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Fig1Section {
    pub low_power: Vec<Frequency>,
    pub high_power: Vec<Frequency>,
    pub f_x_min: f64,
    pub f_x_max: f64,
    pub f_x_count: usize,
}

impl Default for Fig1Section {
    fn default() -> Self {
        let mhz = |v: f64| Frequency::tagged(v, FreqUnit::MHz);
        Fig1Section {
            low_power: [0.0, 0.1, 0.2, 0.3, 0.5].into_iter().map(mhz).collect(),
            high_power: [2.0, 5.0, 10.0, 20.0].into_iter().map(mhz).collect(),
            f_x_min: -2e-2,
            f_x_max: 2e-2,
            f_x_count: 801,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RatesSection {
    pub gamma_phi: Frequency,
    pub gamma_z: Frequency,
    pub f: Frequency,
}

impl RatesSection {
    fn resolve(&self, pointer: &str) -> Result<Rates> {
        Ok(Rates {
            gamma_phi: at(&format!("{pointer}/gamma_phi"), self.gamma_phi.angular())?,
            gamma_z: at(&format!("{pointer}/gamma_z"), self.gamma_z.angular())?,
            f: at(&format!("{pointer}/f"), self.f.angular())?,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitSection {
    /// CSV with columns x, chi and/or v_t, optional sigma.
    pub data: PathBuf,
    pub abscissa: Abscissa,
    /// Unit of x for a probe-frequency abscissa.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x_unit: Option<FreqUnit>,
    pub init: RatesSection,
    pub lower: RatesSection,
    pub upper: RatesSection,
    #[serde(default)]
    pub options: FitOptions,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub tls: TlsSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tank: Option<TankSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub drive: Option<DriveSection>,
    #[serde(default)]
    pub integrator: IntegratorConfig,
    #[serde(default)]
    pub thresholds: RegimeThresholds,
    #[serde(default)]
    pub probe_run: ProbeRunConfig,
    #[serde(default)]
    pub tank_run: TankRunConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub simulate: Option<SimulateSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub response: Option<ResponseSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fig1: Option<Fig1Section>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fit: Option<FitSection>,
}

/// Drive with every frequency in rad/s.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ResolvedDrive {
    pub f: f64,
    pub delta: f64,
    pub omega0: f64,
    pub g0: f64,
    pub omega: f64,
}

fn at<T>(pointer: &str, r: Result<T>) -> Result<T> {
    r.map_err(|e| match e {
        Error::Config { .. } => e,
        other => Error::Config {
            pointer: pointer.to_string(),
            reason: other.to_string(),
        },
    })
}

fn config_err(pointer: &str, reason: impl Into<String>) -> Error {
    Error::Config {
        pointer: pointer.to_string(),
        reason: reason.into(),
    }
}

fn escape(seg: &str) -> String {
    seg.replace('~', "~0").replace('/', "~1")
}

fn pointer_of(path: &serde_path_to_error::Path) -> String {
    use serde_path_to_error::Segment;
    let mut out = String::new();
    for seg in path.iter() {
        match seg {
            Segment::Seq { index } => out.push_str(&format!("/{index}")),
            Segment::Map { key } => out.push_str(&format!("/{}", escape(key))),
            Segment::Enum { variant } => out.push_str(&format!("/{}", escape(variant))),
            Segment::Unknown => {}
        }
    }
    if out.is_empty() {
        "/".into()
    } else {
        out
    }
}

impl Config {
    /// Parse a configuration, or the `config` member of a run manifest.
    pub fn from_json(text: &str) -> Result<Self> {
        let value: serde_json::Value = serde_json::from_str(text).map_err(|e| config_err("/", e.to_string()))?;
        let (value, prefix) = match value.get("manifest_version") {
            Some(_) => (
                value
                    .get("config")
                    .cloned()
                    .ok_or_else(|| config_err("/config", "manifest has no config"))?,
                "/config",
            ),
            None => (value, ""),
        };
        let cfg: Config = serde_path_to_error::deserialize(value).map_err(|e| {
            let pointer = pointer_of(e.path());
            let pointer = if pointer == "/" && !prefix.is_empty() {
                prefix.to_string()
            } else {
                format!("{prefix}{pointer}")
            };
            config_err(&pointer, e.into_inner().to_string())
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| config_err("/", format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Resolve every section present, so errors surface before any work starts.
    pub fn validate(&self) -> Result<()> {
        self.resolve_tls()?;
        if self.tank.is_some() {
            self.resolve_tank()?;
        }
        if self.drive.is_some() {
            self.resolve_drive()?;
        }
        at("/integrator", self.integrator.validate())?;
        at("/probe_run/integrator", self.probe_run.integrator.validate())?;
        at("/tank_run/integrator", self.tank_run.integrator.validate())?;
        if let Some(s) = &self.simulate {
            if !(s.duration_s > 0.0) || !s.duration_s.is_finite() {
                return Err(config_err("/simulate/duration_s", "must be positive"));
            }
            if s.samples < 2 {
                return Err(config_err("/simulate/samples", "need at least 2"));
            }
            if s.coupled && self.tank.is_none() {
                return Err(config_err("/tank", "coupled simulation needs a tank section"));
            }
        }
        if let Some(r) = &self.response {
            if r.omega.variable != Variable::Omega {
                return Err(config_err("/response/omega/variable", "must be omega"));
            }
            resolve_axis(&r.omega, "/response/omega", None)?;
        }
        if self.sweep.is_some() {
            self.sweep_spec()?;
        }
        if let Some(f) = &self.fig1 {
            if f.f_x_count < 2 || !(f.f_x_min < f.f_x_max) {
                return Err(config_err("/fig1", "need f_x_min < f_x_max and at least 2 points"));
            }
            for (name, list) in [("low_power", &f.low_power), ("high_power", &f.high_power)] {
                for (i, p) in list.iter().enumerate() {
                    let v = at(&format!("/fig1/{name}/{i}"), p.angular())?;
                    if v < 0.0 {
                        return Err(config_err(&format!("/fig1/{name}/{i}"), "drive amplitude must be non-negative"));
                    }
                }
            }
        }
        if let Some(f) = &self.fit {
            f.init.resolve("/fit/init")?;
            f.lower.resolve("/fit/lower")?;
            f.upper.resolve("/fit/upper")?;
            if f.abscissa == Abscissa::Flux && self.tls.e_j.is_none() {
                return Err(config_err("/tls/e_j", "flux abscissa needs E_J"));
            }
            if self.tank.is_none() || self.drive.is_none() {
                return Err(config_err("/fit", "fitting needs tank and drive sections"));
            }
        }
        Ok(())
    }

    pub fn e_j(&self) -> Result<Option<f64>> {
        self.tls.e_j.map(|e| at("/tls/e_j", e.joules())).transpose()
    }

    pub fn resolve_tls(&self) -> Result<TlsParams> {
        let s = &self.tls;
        let delta = at("/tls/delta", s.delta.angular())?;
        let epsilon = match (&s.epsilon, s.f_x) {
            (Some(e), None) => at("/tls/epsilon", e.angular())?,
            (None, Some(fx)) => {
                let e_j = self.e_j()?.ok_or_else(|| config_err("/tls/e_j", "f_x needs E_J"))?;
                let i_q = match &self.tank {
                    Some(t) => at("/tank/i_q", t.i_q.ampere())?,
                    None => 1.0,
                };
                flux_to_bias(&at("/tls/f_x", FluxSpec::new(fx, e_j, i_q))?)
            }
            (Some(_), Some(_)) => return Err(config_err("/tls/epsilon", "give either epsilon or f_x, not both")),
            (None, None) => return Err(config_err("/tls", "missing epsilon or f_x")),
        };
        let temperature = at("/tls/temperature", s.temperature.kelvin())?;
        let gamma_phi = at("/tls/gamma_phi", s.gamma_phi.angular())?;
        let gamma_z = at("/tls/gamma_z", s.gamma_z.angular())?;
        if let Some(ec) = &s.e_c {
            at("/tls/e_c", ec.joules())?;
        }
        let tls = at("/tls", TlsParams::new(delta, epsilon, temperature, gamma_phi, gamma_z))?;
        Ok(tls.with_conventions(s.conventions))
    }

    pub fn resolve_tank(&self) -> Result<TankParams> {
        let s = self.tank.as_ref().ok_or_else(|| config_err("/tank", "missing tank section"))?;
        let tank = TankParams {
            omega_t: at("/tank/omega_t", s.omega_t.angular())?,
            q_t: s.q_t,
            l_t: at("/tank/l_t", s.l_t.henry())?,
            k: s.k,
            l_q: at("/tank/l_q", s.l_q.henry())?,
            i_q: at("/tank/i_q", s.i_q.ampere())?,
            i0: at("/tank/i0", s.i0.ampere())?,
        };
        at("/tank", tank.validate())?;
        Ok(tank)
    }

    pub fn resolve_drive(&self) -> Result<ResolvedDrive> {
        let s = self.drive.as_ref().ok_or_else(|| config_err("/drive", "missing drive section"))?;
        let gap = self.resolve_tls()?.gap();
        let f = at("/drive/f", s.f.angular())?;
        if f < 0.0 {
            return Err(config_err("/drive/f", "must be non-negative"));
        }
        let (delta, omega0) = match (&s.detuning, &s.omega0) {
            (Some(d), None) => {
                let d = at("/drive/detuning", d.angular())?;
                (d, gap + d)
            }
            (None, Some(w)) => {
                let w = at("/drive/omega0", w.angular())?;
                (w - gap, w)
            }
            (None, None) => (0.0, gap),
            (Some(_), Some(_)) => return Err(config_err("/drive/detuning", "give either detuning or omega0, not both")),
        };
        let g0 = match &s.g0 {
            Some(g) => at("/drive/g0", g.angular())?,
            None => 0.0,
        };
        let omega = at("/drive/omega", s.omega.angular())?;
        if !(omega > 0.0) {
            return Err(config_err("/drive/omega", "must be positive"));
        }
        Ok(ResolvedDrive {
            f,
            delta,
            omega0,
            g0,
            omega,
        })
    }

    /// f_X of the base point when the bias is given as flux.
    pub fn base_flux(&self) -> Option<f64> {
        self.tls.f_x
    }

    pub fn sweep_spec(&self) -> Result<SweepSpec> {
        let s = self.sweep.as_ref().ok_or_else(|| config_err("/sweep", "missing sweep section"))?;
        if s.axes.is_empty() || s.axes.len() > 2 {
            return Err(config_err("/sweep/axes", "need one or two axes"));
        }
        if s.axes.len() == 2 && s.axes[0].variable == s.axes[1].variable {
            return Err(config_err("/sweep/axes/1/variable", "axes must sweep different variables"));
        }
        let e_j = self.e_j()?;
        let axes = s
            .axes
            .iter()
            .enumerate()
            .map(|(i, a)| resolve_axis(a, &format!("/sweep/axes/{i}"), e_j))
            .collect::<Result<Vec<_>>>()?;
        let drive = self.resolve_drive()?;
        let spec = SweepSpec {
            tls: self.resolve_tls()?,
            tank: self.resolve_tank()?,
            e_j,
            f_x: self.base_flux(),
            f: drive.f,
            delta: drive.delta,
            omega: drive.omega,
            axes,
            engine: s.engine,
            thresholds: self.thresholds,
            rwa_components: s.rwa_components,
        };
        at("/sweep", spec.validate())?;
        Ok(spec)
    }

    /// Initial guess and bounds of the `fit` section, rad/s.
    pub fn fit_start(&self) -> Result<(Rates, Bounds)> {
        let f = self.fit.as_ref().ok_or_else(|| config_err("/fit", "missing fit section"))?;
        let bounds = Bounds {
            lower: f.lower.resolve("/fit/lower")?,
            upper: f.upper.resolve("/fit/upper")?,
        };
        Ok((f.init.resolve("/fit/init")?, bounds))
    }

    /// Omega grid of the `response` section, rad/s.
    pub fn response_grid(&self) -> Result<Vec<f64>> {
        let r = self
            .response
            .as_ref()
            .ok_or_else(|| config_err("/response", "missing response section"))?;
        Ok(resolve_axis(&r.omega, "/response/omega", None)?.values)
    }

    /// Reference parameter set of the flux-dependence figure, with default
    /// drive families and a 6 MHz probe at zero carrier detuning.
    pub fn fig1_preset() -> Self {
        let mhz = |v: f64| Frequency::tagged(v, FreqUnit::MHz);
        Config {
            tls: TlsSection {
                delta: Frequency::tagged(1.0, FreqUnit::GHz),
                epsilon: None,
                f_x: Some(0.0),
                e_j: Some(Energy::joule(1.32e-22)),
                e_c: Some(Energy::joule(2.14e-24)),
                temperature: Tagged {
                    value: 10.0,
                    unit: TemperatureUnit::MilliK,
                },
                gamma_phi: mhz(4.0),
                gamma_z: mhz(0.1),
                conventions: Conventions::default(),
            },
            tank: Some(TankSection {
                omega_t: mhz(6.0),
                q_t: 2000.0,
                l_t: Tagged {
                    value: 100.0,
                    unit: InductanceUnit::NanoH,
                },
                k: 0.03,
                l_q: Tagged {
                    value: 40.0,
                    unit: InductanceUnit::PicoH,
                },
                i_q: Tagged {
                    value: 280.0,
                    unit: CurrentUnit::NanoA,
                },
                i0: Tagged {
                    value: 1e-6,
                    unit: CurrentUnit::NanoA,
                },
            }),
            drive: Some(DriveSection {
                f: mhz(0.0),
                detuning: Some(mhz(0.0)),
                omega0: None,
                g0: None,
                omega: mhz(6.0),
            }),
            integrator: IntegratorConfig::default(),
            thresholds: RegimeThresholds::default(),
            probe_run: ProbeRunConfig::default(),
            tank_run: TankRunConfig::default(),
            simulate: None,
            response: None,
            sweep: None,
            fig1: Some(Fig1Section::default()),
            fit: None,
        }
    }
}

/// Axis grid in internal units; frequency variables need a unit tag.
pub fn resolve_axis(a: &AxisSection, pointer: &str, e_j: Option<f64>) -> Result<Axis> {
    let scale = match a.variable {
        Variable::FX => {
            if a.unit.is_some() {
                return Err(config_err(&format!("{pointer}/unit"), "f_x is dimensionless"));
            }
            if e_j.is_none() && pointer.starts_with("/sweep") {
                return Err(config_err("/tls/e_j", "a flux axis needs E_J"));
            }
            1.0
        }
        _ => a
            .unit
            .ok_or_else(|| config_err(&format!("{pointer}/unit"), "frequency axes need a unit"))?
            .to_internal(1.0),
    };
    at(pointer, Axis::new(a.variable, a.min * scale, a.max * scale, a.count, a.spacing))
}
