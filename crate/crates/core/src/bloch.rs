// SPDX-License-Identifier: Apache-2.0

//! Driven dissipative Bloch equations, alone or coupled to the readout tank.
//!
//! With ħ = 1 the level splitting Δ_ε enters the equations directly as an
//! angular frequency; do not divide by ħ again.

use std::f64::consts::TAU;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ode::{self, OdeSystem, SolverOptions, Stats, Tolerances};
use crate::params::{TankParams, TlsParams};
use crate::units::HBAR;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct BlochState {
    pub sx: f64,
    pub sy: f64,
    pub sz: f64,
}

impl BlochState {
    pub const fn new(sx: f64, sy: f64, sz: f64) -> Self {
        BlochState { sx, sy, sz }
    }

    /// Thermal equilibrium (0, 0, Z₀).
    pub fn equilibrium(tls: &TlsParams) -> Self {
        BlochState::new(0.0, 0.0, tls.z0())
    }

    pub fn norm_sq(&self) -> f64 {
        self.sx * self.sx + self.sy * self.sy + self.sz * self.sz
    }

    fn to_array(self) -> [f64; 3] {
        [self.sx, self.sy, self.sz]
    }

    fn from_slice(y: &[f64]) -> Self {
        BlochState::new(y[0], y[1], y[2])
    }
}

/// Tank voltage, its derivative and the coil current, SI units.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct TankState {
    pub v: f64,
    pub dv_dt: f64,
    pub i_t: f64,
}

impl TankState {
    /// Steady state of the uncoupled tank under I_b = I₀ cos ωt, at t = 0.
    pub fn bare_steady_state(tank: &TankParams, omega: f64) -> Self {
        let wt2 = tank.omega_t * tank.omega_t;
        let den = num_complex::Complex64::new(wt2 - omega * omega, omega * tank.gamma_t());
        let v = num_complex::Complex64::new(0.0, omega * wt2 * tank.l_t * tank.i0) / den;
        let i_t = num_complex::Complex64::new(0.0, -1.0) * v / (omega * tank.l_t);
        TankState {
            v: v.re,
            dv_dt: (num_complex::Complex64::new(0.0, omega) * v).re,
            i_t: i_t.re,
        }
    }
}

/// Low-frequency probe g(t).
#[derive(Debug, Clone, PartialEq)]
pub enum Probe {
    None,
    /// g(t) = g₀ cos ωt.
    Cosine {
        g0: f64,
        omega: f64,
    },
    /// Uniformly sampled g(t), linearly interpolated.
    External(ExternalProbe),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExternalProbe {
    pub t0: f64,
    pub dt: f64,
    pub values: Vec<f64>,
}

impl ExternalProbe {
    pub fn new(t0: f64, dt: f64, values: Vec<f64>) -> Result<Self> {
        if !(dt > 0.0) || !t0.is_finite() {
            return Err(Error::invalid("probe", "external samples need finite t0 and dt > 0"));
        }
        if values.len() < 2 || values.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("probe", "external samples must be finite, at least two"));
        }
        Ok(ExternalProbe { t0, dt, values })
    }

    pub fn t_end(&self) -> f64 {
        self.t0 + self.dt * (self.values.len() - 1) as f64
    }

    fn at(&self, t: f64) -> f64 {
        let x = ((t - self.t0) / self.dt).max(0.0);
        let i = (x.floor() as usize).min(self.values.len() - 2);
        let frac = (x - i as f64).min(1.0);
        self.values[i] + frac * (self.values[i + 1] - self.values[i])
    }
}

/// Carrier 2f cos ω₀t plus probe 2g(t) entering as the bias modulation.
#[derive(Debug, Clone, PartialEq)]
pub struct DriveWaveform {
    pub f: f64,
    pub omega0: f64,
    pub probe: Probe,
}

impl DriveWaveform {
    pub fn carrier_only(f: f64, omega0: f64) -> Self {
        DriveWaveform {
            f,
            omega0,
            probe: Probe::None,
        }
    }

    pub fn with_cosine_probe(f: f64, omega0: f64, g0: f64, omega: f64) -> Self {
        DriveWaveform {
            f,
            omega0,
            probe: Probe::Cosine { g0, omega },
        }
    }

    pub fn g(&self, t: f64) -> f64 {
        match &self.probe {
            Probe::None => 0.0,
            Probe::Cosine { g0, omega } => g0 * (omega * t).cos(),
            Probe::External(p) => p.at(t),
        }
    }

    fn validate(&self, t0: f64, t1: f64) -> Result<()> {
        if !(self.f >= 0.0) || !self.f.is_finite() {
            return Err(Error::invalid("f", "must be finite and non-negative"));
        }
        if !(self.omega0 > 0.0) || !self.omega0.is_finite() {
            return Err(Error::invalid("omega0", "must be positive"));
        }
        match &self.probe {
            Probe::None => {}
            Probe::Cosine { g0, omega } => {
                if !g0.is_finite() || !(*omega > 0.0) || !omega.is_finite() {
                    return Err(Error::invalid("probe", "cosine probe needs finite g0 and omega > 0"));
                }
            }
            Probe::External(p) => {
                if p.t0 > t0 || p.t_end() < t1 {
                    return Err(Error::invalid("probe", "external samples do not cover the integration window"));
                }
            }
        }
        Ok(())
    }
}

/// Time derivative of the Bloch vector.
pub fn bloch_rhs(state: &BlochState, t: f64, tls: &TlsParams, drive: &DriveWaveform) -> BlochState {
    let h = 2.0 * drive.f * (drive.omega0 * t).cos() + 2.0 * drive.g(t);
    derivative(state, h, tls.gap(), tls.eps_over_delta(), tls)
}

#[inline]
fn derivative(s: &BlochState, h: f64, gap: f64, r: f64, tls: &TlsParams) -> BlochState {
    let big_omega = gap - r * h;
    BlochState {
        sx: -big_omega * s.sy - tls.gamma_phi * s.sx,
        sy: -h * s.sz + big_omega * s.sx - tls.gamma_phi * s.sy,
        sz: h * s.sy - tls.gamma_z * (s.sz - tls.z0()),
    }
}

/// ⟨Î_q⟩ = (I_q/Δ_ε)(ε⟨σ_Z⟩ − Δ⟨σ_X⟩).
pub fn qubit_current(state: &BlochState, tls: &TlsParams, i_q: f64) -> f64 {
    i_q / tls.gap() * (tls.epsilon * state.sz - tls.delta * state.sx)
}

/// d⟨Î_q⟩/dt along the Bloch flow; the drive terms cancel identically.
pub fn qubit_current_rate(state: &BlochState, tls: &TlsParams, i_q: f64) -> f64 {
    let gap = tls.gap();
    i_q / gap * (-tls.epsilon * tls.gamma_z * (state.sz - tls.z0()) + tls.delta * tls.gamma_phi * state.sx + gap * tls.delta * state.sy)
}

/// At 20 steps per period DOP853 drifts ~1.5e-13 per step on a pure
/// rotation; 32 keeps 10³ periods inside 1e-9 at rtol 1e-10.
pub const DEFAULT_STEPS_PER_PERIOD: f64 = 32.0;
pub const MIN_STEPS_PER_PERIOD: f64 = 20.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegratorConfig {
    pub rtol: f64,
    pub atol: f64,
    /// Defaults to 1/32 of the fastest of the carrier period and 2π/Δ_ε;
    /// never allowed above 1/20 of it.
    #[serde(default)]
    pub max_step: Option<f64>,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        IntegratorConfig {
            rtol: 1e-10,
            atol: 1e-12,
            max_step: None,
        }
    }
}

impl IntegratorConfig {
    pub fn new(rtol: f64, atol: f64) -> Self {
        IntegratorConfig {
            rtol,
            atol,
            max_step: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("rtol", self.rtol), ("atol", self.atol)] {
            if !(1e-12..=1e-3).contains(&v) {
                return Err(Error::invalid(name, "tolerance must lie in [1e-12, 1e-3]"));
            }
        }
        if let Some(h) = self.max_step {
            if !(h > 0.0) || !h.is_finite() {
                return Err(Error::invalid("max_step", "must be positive"));
            }
        }
        Ok(())
    }

    fn max_step_for(&self, omega_fast: f64) -> f64 {
        let period = TAU / omega_fast;
        self.max_step
            .map_or(period / DEFAULT_STEPS_PER_PERIOD, |h| h.min(period / MIN_STEPS_PER_PERIOD))
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct TrajectoryMeta {
    pub tls: TlsParams,
    pub tank: Option<TankParams>,
    pub rtol: f64,
    pub atol: f64,
    pub max_step: f64,
    pub accepted_steps: usize,
    pub rejected_steps: usize,
    pub evaluations: usize,
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub t: Vec<f64>,
    pub states: Vec<BlochState>,
    /// Present for coupled runs.
    pub tank: Option<Vec<TankState>>,
    pub meta: TrajectoryMeta,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    pub fn component(&self, pick: impl Fn(&BlochState) -> f64) -> Vec<f64> {
        self.states.iter().map(pick).collect()
    }

    pub fn voltage(&self) -> Option<Vec<f64>> {
        self.tank.as_ref().map(|ts| ts.iter().map(|s| s.v).collect())
    }

    /// `t,sx,sy,sz[,v,i_t]`, 17 significant digits.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let coupled = self.tank.is_some();
        if coupled {
            w.write_record(["t", "sx", "sy", "sz", "v", "i_t"])?;
        } else {
            w.write_record(["t", "sx", "sy", "sz"])?;
        }
        for (i, (t, s)) in self.t.iter().zip(&self.states).enumerate() {
            let mut row = vec![fmt17(*t), fmt17(s.sx), fmt17(s.sy), fmt17(s.sz)];
            if let Some(tank) = &self.tank {
                row.push(fmt17(tank[i].v));
                row.push(fmt17(tank[i].i_t));
            }
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: std::io::Read>(input: R, tls: TlsParams) -> Result<Trajectory> {
        let mut r = csv::Reader::from_reader(input);
        let headers = r.headers()?.clone();
        let coupled = match headers.iter().collect::<Vec<_>>().as_slice() {
            ["t", "sx", "sy", "sz"] => false,
            ["t", "sx", "sy", "sz", "v", "i_t"] => true,
            _ => return Err(Error::Window("unrecognized trajectory header".into())),
        };
        let mut t = Vec::new();
        let mut states = Vec::new();
        let mut tank = Vec::new();
        for rec in r.records() {
            let rec = rec?;
            let num = |i: usize| -> Result<f64> {
                rec[i]
                    .trim()
                    .parse::<f64>()
                    .map_err(|_| Error::Window(format!("bad number {:?}", &rec[i])))
            };
            t.push(num(0)?);
            states.push(BlochState::new(num(1)?, num(2)?, num(3)?));
            if coupled {
                tank.push(TankState {
                    v: num(4)?,
                    dv_dt: f64::NAN,
                    i_t: num(5)?,
                });
            }
        }
        if t.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Window("time stamps must be strictly increasing".into()));
        }
        Ok(Trajectory {
            t,
            states,
            tank: coupled.then_some(tank),
            meta: TrajectoryMeta {
                tls,
                tank: None,
                rtol: f64::NAN,
                atol: f64::NAN,
                max_step: f64::NAN,
                accepted_steps: 0,
                rejected_steps: 0,
                evaluations: 0,
            },
        })
    }
}

fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}

/// `n` evenly spaced times covering `[t0, t1]` inclusive.
pub fn uniform_times(t0: f64, t1: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![t0],
        _ => {
            let dt = (t1 - t0) / (n - 1) as f64;
            (0..n).map(|i| if i + 1 == n { t1 } else { t0 + dt * i as f64 }).collect()
        }
    }
}

struct BareSystem<'a> {
    tls: &'a TlsParams,
    drive: &'a DriveWaveform,
    gap: f64,
    ratio: f64,
}

impl OdeSystem<3> for BareSystem<'_> {
    #[inline]
    fn rhs(&self, t: f64, y: &[f64; 3]) -> [f64; 3] {
        let h = 2.0 * self.drive.f * (self.drive.omega0 * t).cos() + 2.0 * self.drive.g(t);
        derivative(&BlochState::from_slice(y), h, self.gap, self.ratio, self.tls).to_array()
    }
}

fn check_span(t_span: (f64, f64)) -> Result<()> {
    if !(t_span.1 > t_span.0) || !t_span.0.is_finite() || !t_span.1.is_finite() {
        return Err(Error::invalid("t_span", "end must be finite and later than start"));
    }
    Ok(())
}

/// Integrate the Bloch equations, reporting states at `samples`.
pub fn integrate(
    initial: BlochState,
    tls: &TlsParams,
    drive: &DriveWaveform,
    t_span: (f64, f64),
    samples: &[f64],
    cfg: &IntegratorConfig,
) -> Result<Trajectory> {
    tls.validate()?;
    cfg.validate()?;
    check_span(t_span)?;
    drive.validate(t_span.0, t_span.1)?;

    let sys = BareSystem {
        tls,
        drive,
        gap: tls.gap(),
        ratio: tls.eps_over_delta(),
    };
    let max_step = cfg.max_step_for(drive.omega0.max(tls.gap()));
    let opts = SolverOptions::new(Tolerances::uniform(cfg.rtol, cfg.atol)).max_step(max_step);
    let sol = ode::solve(&sys, t_span.0, initial.to_array(), t_span.1, samples, &opts)?;
    Ok(Trajectory {
        t: sol.t,
        states: sol.y.iter().map(|y| BlochState::from_slice(y)).collect(),
        tank: None,
        meta: meta(tls, None, cfg, max_step, sol.stats),
    })
}

fn meta(tls: &TlsParams, tank: Option<TankParams>, cfg: &IntegratorConfig, max_step: f64, s: Stats) -> TrajectoryMeta {
    TrajectoryMeta {
        tls: *tls,
        tank,
        rtol: cfg.rtol,
        atol: cfg.atol,
        max_step,
        accepted_steps: s.accepted,
        rejected_steps: s.rejected,
        evaluations: s.evaluations,
    }
}

// Tank variables are scaled by V_s = ω_T L_T I₀ (voltage), V_s ω_T (its
// derivative) and I₀ (coil current) so all six states are O(1)–O(Q_T).
struct CoupledSystem<'a> {
    tls: &'a TlsParams,
    f: f64,
    omega0: f64,
    omega: f64,
    gap: f64,
    ratio: f64,
    omega_t: f64,
    gamma_t: f64,
    /// M/(L_T I₀), multiplies dI_q/dt.
    back: f64,
    /// g per unit scaled coil current.
    g_per_j: f64,
    i_q: f64,
}

impl OdeSystem<6> for CoupledSystem<'_> {
    #[inline]
    fn rhs(&self, t: f64, y: &[f64; 6]) -> [f64; 6] {
        let s = BlochState::from_slice(y);
        let g = self.g_per_j * y[5];
        let h = 2.0 * self.f * (self.omega0 * t).cos() + 2.0 * g;
        let ds = derivative(&s, h, self.gap, self.ratio, self.tls);
        let di_q = qubit_current_rate(&s, self.tls, self.i_q);
        [
            ds.sx,
            ds.sy,
            ds.sz,
            self.omega_t * y[4],
            -self.gamma_t * y[4] - self.omega_t * y[3] + self.back * di_q - self.omega * (self.omega * t).sin(),
            self.omega_t * y[3],
        ]
    }
}

/// Qubit and tank integrated together, with back-action
/// g(t) = Δ M I_q I_T(t) / ħΔ_ε and bias current I₀ cos ωt.
#[allow(clippy::too_many_arguments)]
pub fn integrate_coupled(
    initial: (BlochState, TankState),
    tls: &TlsParams,
    tank: &TankParams,
    carrier: (f64, f64),
    omega: f64,
    t_span: (f64, f64),
    samples: &[f64],
    cfg: &IntegratorConfig,
) -> Result<Trajectory> {
    tls.validate()?;
    tank.validate()?;
    cfg.validate()?;
    check_span(t_span)?;
    let (f, omega0) = carrier;
    DriveWaveform::carrier_only(f, omega0).validate(t_span.0, t_span.1)?;
    if !(tank.i0 > 0.0) {
        return Err(Error::invalid("i0", "coupled simulation needs a positive bias current"));
    }
    if !(omega > 0.0) || !omega.is_finite() {
        return Err(Error::invalid("omega", "must be positive"));
    }

    let gap = tls.gap();
    let v_scale = tank.omega_t * tank.l_t * tank.i0;
    let m = tank.mutual();
    let sys = CoupledSystem {
        tls,
        f,
        omega0,
        omega,
        gap,
        ratio: tls.eps_over_delta(),
        omega_t: tank.omega_t,
        gamma_t: tank.gamma_t(),
        back: m / (tank.l_t * tank.i0),
        g_per_j: tls.delta / gap * m * tank.i_q / HBAR * tank.i0,
        i_q: tank.i_q,
    };
    let (b, ts) = initial;
    let y0 = [
        b.sx,
        b.sy,
        b.sz,
        ts.v / v_scale,
        ts.dv_dt / (v_scale * tank.omega_t),
        ts.i_t / tank.i0,
    ];
    let max_step = cfg.max_step_for(omega0.max(gap));
    let mut tol = Tolerances::uniform(cfg.rtol, cfg.atol);
    // Tank states are O(1) or larger; the qubit atol would be needlessly tight.
    for a in &mut tol.atol[3..] {
        *a = cfg.atol.max(cfg.rtol * 1e-3);
    }
    let opts = SolverOptions::new(tol).max_step(max_step);
    let sol = ode::solve(&sys, t_span.0, y0, t_span.1, samples, &opts)?;
    let states = sol.y.iter().map(|y| BlochState::from_slice(y)).collect();
    let tank_states = sol
        .y
        .iter()
        .map(|y| TankState {
            v: y[3] * v_scale,
            dv_dt: y[4] * v_scale * tank.omega_t,
            i_t: y[5] * tank.i0,
        })
        .collect();
    Ok(Trajectory {
        t: sol.t,
        states,
        tank: Some(tank_states),
        meta: meta(tls, Some(*tank), cfg, max_step, sol.stats),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::units::{ghz, mhz};

    fn tls(eps_ratio: f64, gamma: f64, gamma_z: f64) -> TlsParams {
        let d = ghz(1.0);
        TlsParams::new(d, eps_ratio * d, 0.0, gamma, gamma_z).unwrap()
    }

    #[test]
    fn equilibrium_is_fixed_point() {
        let p = tls(0.5, mhz(4.0), mhz(0.1));
        let d = bloch_rhs(&BlochState::equilibrium(&p), 0.3, &p, &DriveWaveform::carrier_only(0.0, ghz(1.0)));
        assert_eq!(d, BlochState::default());
    }

    #[test]
    fn relaxation_closed_form() {
        let gz = mhz(10.0);
        let p = tls(0.0, mhz(20.0), gz);
        let t1 = 5.0 / gz;
        let ts = uniform_times(0.0, t1, 50);
        let drive = DriveWaveform::carrier_only(0.0, ghz(1.0));
        let traj = integrate(
            BlochState::new(0.0, 0.0, 1.0),
            &p,
            &drive,
            (0.0, t1),
            &ts,
            &IntegratorConfig::default(),
        )
        .unwrap();
        let z0 = p.z0();
        for (t, s) in traj.t.iter().zip(&traj.states) {
            let exact = z0 + (1.0 - z0) * (-gz * t).exp();
            assert!((s.sz - exact).abs() < 1e-8, "t={t}");
        }
    }

    #[test]
    fn resolves_carrier() {
        let p = tls(0.3, 0.0, 0.0);
        let drive = DriveWaveform::carrier_only(mhz(1.0), p.gap());
        let periods = 50.0;
        let t1 = periods * TAU / drive.omega0;
        let traj = integrate(
            BlochState::new(0.0, 0.0, -1.0),
            &p,
            &drive,
            (0.0, t1),
            &[t1],
            &IntegratorConfig::new(1e-6, 1e-6),
        )
        .unwrap();
        assert!(traj.meta.accepted_steps as f64 >= 20.0 * periods);
    }

    #[test]
    fn current_limits() {
        let p = tls(0.0, 0.0, 0.0);
        let s = BlochState::new(0.4, 0.1, -0.2);
        assert!((qubit_current(&s, &p, 2.0) + 0.8).abs() < 1e-15);
    }

    #[test]
    fn current_rate_matches_finite_difference() {
        let p = tls(0.7, mhz(3.0), mhz(0.5));
        let s = BlochState::new(0.2, -0.3, 0.5);
        let drive = DriveWaveform::with_cosine_probe(mhz(2.0), ghz(1.1), mhz(0.3), mhz(5.0));
        let t = 1.234e-8;
        let ds = bloch_rhs(&s, t, &p, &drive);
        let direct = p.gap().recip() * (p.epsilon * ds.sz - p.delta * ds.sx);
        let rate = qubit_current_rate(&s, &p, 1.0);
        assert!((direct - rate).abs() <= 1e-9 * rate.abs());
    }

    #[test]
    fn external_probe_interpolates_and_must_cover() {
        let e = ExternalProbe::new(0.0, 1.0, vec![0.0, 2.0, 4.0]).unwrap();
        let d = DriveWaveform {
            f: 0.0,
            omega0: 1.0,
            probe: Probe::External(e),
        };
        assert!((d.g(1.5) - 3.0).abs() < 1e-15);
        assert!(d.validate(0.0, 2.0).is_ok());
        assert!(d.validate(0.0, 2.5).is_err());
    }

    #[test]
    fn bare_tank_state_has_expected_amplitude() {
        let tank = TankParams {
            omega_t: mhz(6.0),
            q_t: 100.0,
            l_t: 1e-7,
            k: 0.0,
            l_q: 4e-11,
            i_q: 2.8e-7,
            i0: 1e-9,
        };
        let s = TankState::bare_steady_state(&tank, tank.omega_t);
        // On resonance V is in phase with the bias current: V(0) = Q ω_T L_T I₀.
        let expect = tank.q_t * tank.omega_t * tank.l_t * tank.i0;
        assert!((s.v - expect).abs() < 1e-9 * expect);
        assert!(s.i_t.abs() < 1e-9 * expect);
    }

    #[test]
    fn csv_round_trip() {
        let p = tls(0.5, mhz(4.0), mhz(0.1));
        let traj = Trajectory {
            t: vec![0.0, 1e-9],
            states: vec![BlochState::new(0.1, 0.2, -0.3), BlochState::new(1.0 / 3.0, 0.0, -1.0)],
            tank: None,
            meta: meta(&p, None, &IntegratorConfig::default(), 1.0, Stats::default()),
        };
        let mut buf = Vec::new();
        traj.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("t,sx,sy,sz\n"));
        let back = Trajectory::read_csv(buf.as_slice(), p).unwrap();
        assert_eq!(back.states, traj.states);
        assert_eq!(back.t, traj.t);
    }

    #[test]
    fn rejects_bad_inputs() {
        let p = tls(0.5, mhz(4.0), mhz(0.1));
        let drive = DriveWaveform::carrier_only(0.0, ghz(1.0));
        let eq = BlochState::equilibrium(&p);
        assert!(integrate(eq, &p, &drive, (1.0, 0.0), &[], &IntegratorConfig::default()).is_err());
        assert!(integrate(eq, &p, &drive, (0.0, 1e-9), &[], &IntegratorConfig::new(1e-2, 1e-9)).is_err());
    }
}
