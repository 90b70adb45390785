// SPDX-License-Identifier: Apache-2.0

//! Numeric lock-in demodulation over integer-period rectangular windows.
//!
//! Tone amplitudes follow c = (2/T)∫ s(t) e^{−iωt} dt, so s ≈ Re[c e^{iωt}];
//! the DC channel is (1/T)∫ s(t) dt. Integrals are trapezoidal, with the
//! window edges linearly interpolated when they fall between samples.

use std::f64::consts::TAU;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::bloch::{integrate, integrate_coupled, uniform_times, BlochState, DriveWaveform, IntegratorConfig, TankState, Trajectory};
use crate::error::{Error, Result};
use crate::params::{TankParams, TlsParams};

pub const MIN_POINTS_PER_PERIOD: usize = 20;
pub const MIN_WINDOW_PERIODS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WindowInfo {
    pub start: f64,
    pub periods: usize,
    pub length: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Demodulated {
    pub omega_ref: f64,
    pub amplitude: Complex64,
    pub dc: f64,
    pub window: WindowInfo,
    /// RMS of s − dc − Re[c e^{iωt}] over the window.
    pub residual: f64,
}

/// Single-tone demodulation over `periods` reference periods from `start`.
pub fn demodulate(t: &[f64], s: &[f64], omega_ref: f64, start: f64, periods: usize) -> Result<Demodulated> {
    if !(omega_ref > 0.0) {
        return Err(Error::invalid("omega_ref", "must be positive"));
    }
    if periods < MIN_WINDOW_PERIODS {
        return Err(Error::Window(format!(
            "{periods} periods requested, need at least {MIN_WINDOW_PERIODS}"
        )));
    }
    let length = periods as f64 * TAU / omega_ref;
    let seg = Segment::new(t, s, start, start + length)?;
    seg.check_sampling(omega_ref)?;
    let dc = seg.mean(|_| 1.0);
    let c = seg.tone(omega_ref);
    let residual = seg.rms_after(dc, &[(omega_ref, c)]);
    Ok(Demodulated {
        omega_ref,
        amplitude: c,
        dc,
        window: WindowInfo { start, periods, length },
        residual,
    })
}

/// Window-restricted view of a sampled signal.
struct Segment {
    t: Vec<f64>,
    s: Vec<f64>,
    length: f64,
}

impl Segment {
    fn new(t: &[f64], s: &[f64], start: f64, end: f64) -> Result<Self> {
        if t.len() != s.len() {
            return Err(Error::Window("time and signal lengths differ".into()));
        }
        if t.len() < 2 || t.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Window("time stamps must be strictly increasing".into()));
        }
        let span = end - start;
        let slack = 1e-9 * span;
        if start < t[0] - slack || end > t[t.len() - 1] + slack {
            return Err(Error::Window(format!(
                "window [{start:e}, {end:e}] s exceeds the data range [{:e}, {:e}] s",
                t[0],
                t[t.len() - 1]
            )));
        }
        let start = start.max(t[0]);
        let end = end.min(t[t.len() - 1]);
        let interp = |x: f64| -> f64 {
            let j = t.partition_point(|&v| v < x).clamp(1, t.len() - 1);
            let (t0, t1) = (t[j - 1], t[j]);
            s[j - 1] + (x - t0) / (t1 - t0) * (s[j] - s[j - 1])
        };
        let mut tt = Vec::new();
        let mut ss = Vec::new();
        // Snap to a sample within 1e-9 of the window length to avoid slivers.
        let lo = t.partition_point(|&v| v < start - slack);
        let hi = t.partition_point(|&v| v <= end + slack);
        let first_inside = lo < hi && (t[lo] - start).abs() <= slack;
        if !first_inside {
            tt.push(start);
            ss.push(interp(start));
        }
        for i in lo..hi {
            if t[i] >= start - slack && t[i] <= end + slack {
                tt.push(t[i]);
                ss.push(s[i]);
            }
        }
        if (tt[tt.len() - 1] - end).abs() > slack {
            tt.push(end);
            ss.push(interp(end));
        }
        Ok(Segment {
            t: tt,
            s: ss,
            length: end - start,
        })
    }

    fn check_sampling(&self, omega: f64) -> Result<()> {
        let have = (self.t.len() - 1) as f64 * (TAU / omega) / self.length;
        if have < MIN_POINTS_PER_PERIOD as f64 - 1e-9 {
            return Err(Error::InsufficientSampling {
                have,
                need: MIN_POINTS_PER_PERIOD,
            });
        }
        Ok(())
    }

    /// (1/T)∫ w(t) s(t) dt.
    fn mean(&self, w: impl Fn(f64) -> f64) -> f64 {
        let mut acc = 0.0;
        for i in 1..self.t.len() {
            let dt = self.t[i] - self.t[i - 1];
            acc += 0.5 * dt * (w(self.t[i - 1]) * self.s[i - 1] + w(self.t[i]) * self.s[i]);
        }
        acc / self.length
    }

    fn tone(&self, omega: f64) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        let mut prev = self.s[0] * Complex64::from_polar(1.0, -omega * self.t[0]);
        for i in 1..self.t.len() {
            let cur = self.s[i] * Complex64::from_polar(1.0, -omega * self.t[i]);
            acc += 0.5 * (self.t[i] - self.t[i - 1]) * (prev + cur);
            prev = cur;
        }
        2.0 * acc / self.length
    }

    fn rms_after(&self, dc: f64, tones: &[(f64, Complex64)]) -> f64 {
        let resid = |i: usize| -> f64 {
            let t = self.t[i];
            let recon: f64 = tones.iter().map(|(w, c)| (c * Complex64::from_polar(1.0, w * t)).re).sum();
            self.s[i] - dc - recon
        };
        let mut acc = 0.0;
        let mut prev = resid(0).powi(2);
        for i in 1..self.t.len() {
            let cur = resid(i).powi(2);
            acc += 0.5 * (self.t[i] - self.t[i - 1]) * (prev + cur);
            prev = cur;
        }
        (acc / self.length).sqrt()
    }

    fn variance(&self) -> f64 {
        let m = self.mean(|_| 1.0);
        let mut acc = 0.0;
        let mut prev = (self.s[0] - m).powi(2);
        for i in 1..self.t.len() {
            let cur = (self.s[i] - m).powi(2);
            acc += 0.5 * (self.t[i] - self.t[i - 1]) * (prev + cur);
            prev = cur;
        }
        acc / self.length
    }

    fn modulated(&self, f: impl Fn(f64) -> f64) -> Segment {
        Segment {
            t: self.t.clone(),
            s: self.t.iter().zip(&self.s).map(|(t, s)| f(*t) * s).collect(),
            length: self.length,
        }
    }
}

/// The seven slow envelopes at one frequency.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct Envelopes {
    pub x: Complex64,
    pub y: Complex64,
    pub z: Complex64,
    pub a: Complex64,
    pub b: Complex64,
    pub c: Complex64,
    pub d: Complex64,
}

impl Envelopes {
    pub fn scaled(&self, k: f64) -> Envelopes {
        Envelopes {
            x: self.x * k,
            y: self.y * k,
            z: self.z * k,
            a: self.a * k,
            b: self.b * k,
            c: self.c * k,
            d: self.d * k,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Tone {
    pub component: &'static str,
    pub label: &'static str,
    pub omega: f64,
    pub amplitude: Complex64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplitConfig {
    /// Analysis window in probe periods, ending at the last sample.
    pub periods: usize,
    /// Largest tolerated relative envelope change between the last two thirds.
    pub drift_limit: f64,
}

impl Default for SplitConfig {
    fn default() -> Self {
        SplitConfig {
            periods: 12,
            drift_limit: 0.01,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SlowFastSplit {
    pub omega0: f64,
    pub omega: f64,
    pub window: WindowInfo,
    /// Envelope means over the window (the driven steady state).
    pub dc: Envelopes,
    /// Raw envelope amplitudes at ω; divide by g₀ for transfer values.
    pub at_omega: Envelopes,
    /// Carrier, sideband and harmonic tones of σ_X, σ_Y, σ_Z.
    pub tones: Vec<Tone>,
    /// Fraction of each of σ_X, σ_Y, σ_Z variance explained by the measured channels.
    pub explained_variance: [f64; 3],
    pub residual_rms: [f64; 3],
    pub drift: f64,
    pub warnings: Vec<String>,
}

impl SlowFastSplit {
    pub fn per_unit_g(&self, g0: f64) -> Envelopes {
        self.at_omega.scaled(1.0 / g0)
    }
}

/// Demodulate σ_Y, σ_X at the carrier and every envelope at the probe.
pub fn slow_fast_split(traj: &Trajectory, omega0: f64, omega: f64, cfg: &SplitConfig) -> Result<SlowFastSplit> {
    if !(omega0 > 0.0) || !(omega > 0.0) {
        return Err(Error::invalid("omega", "reference frequencies must be positive"));
    }
    if cfg.periods < MIN_WINDOW_PERIODS {
        return Err(Error::Window(format!(
            "{} periods requested, need at least {MIN_WINDOW_PERIODS}",
            cfg.periods
        )));
    }
    let t = &traj.t;
    if t.len() < 2 {
        return Err(Error::Window("trajectory too short".into()));
    }
    let length = cfg.periods as f64 * TAU / omega;
    let end = t[t.len() - 1];
    let start = end - length;
    let sx: Vec<f64> = traj.component(|s| s.sx);
    let sy: Vec<f64> = traj.component(|s| s.sy);
    let sz: Vec<f64> = traj.component(|s| s.sz);
    let seg_x = Segment::new(t, &sx, start, end)?;
    let seg_y = Segment::new(t, &sy, start, end)?;
    let seg_z = Segment::new(t, &sz, start, end)?;
    seg_z.check_sampling(omega0)?;

    let mut warnings = Vec::new();
    let ratio = omega0 / omega;
    if (ratio - ratio.round()).abs() > 1e-9 * ratio {
        warnings.push(format!(
            "omega0/omega = {ratio:.6} is not an integer; carrier products leak into the probe channel"
        ));
    }

    let cos2 = |t: f64| 2.0 * (omega0 * t).cos();
    let sin2 = |t: f64| 2.0 * (omega0 * t).sin();
    let yc = seg_y.modulated(cos2);
    let ys = seg_y.modulated(sin2);
    let xc = seg_x.modulated(cos2);
    let xs = seg_x.modulated(sin2);

    let dc = Envelopes {
        x: seg_x.mean(|_| 1.0).into(),
        y: seg_y.mean(|_| 1.0).into(),
        z: seg_z.mean(|_| 1.0).into(),
        a: yc.mean(|_| 1.0).into(),
        b: ys.mean(|_| 1.0).into(),
        c: xc.mean(|_| 1.0).into(),
        d: xs.mean(|_| 1.0).into(),
    };
    let at_omega = Envelopes {
        x: seg_x.tone(omega),
        y: seg_y.tone(omega),
        z: seg_z.tone(omega),
        a: yc.tone(omega),
        b: ys.tone(omega),
        c: xc.tone(omega),
        d: xs.tone(omega),
    };

    let labelled = [
        ("omega", omega),
        ("2omega", 2.0 * omega),
        ("omega0", omega0),
        ("omega0-omega", omega0 - omega),
        ("omega0+omega", omega0 + omega),
        ("2omega0", 2.0 * omega0),
    ];
    let mut tones = Vec::new();
    let mut explained_variance = [0.0; 3];
    let mut residual_rms = [0.0; 3];
    for (k, (name, seg)) in [("sx", &seg_x), ("sy", &seg_y), ("sz", &seg_z)].into_iter().enumerate() {
        let mut recon = Vec::new();
        for (label, w) in labelled {
            if w <= 0.0 {
                continue;
            }
            let c = seg.tone(w);
            recon.push((w, c));
            if label != "omega" && label != "2omega" {
                tones.push(Tone {
                    component: name,
                    label,
                    omega: w,
                    amplitude: c,
                });
            }
        }
        let rms = seg.rms_after(seg.mean(|_| 1.0), &recon);
        let var = seg.variance();
        residual_rms[k] = rms;
        explained_variance[k] = if var > 0.0 { 1.0 - rms * rms / var } else { 1.0 };
    }

    let drift = envelope_drift(t, &sx, &sy, &sz, omega0, omega, end, cfg.periods)?;
    if drift > cfg.drift_limit {
        return Err(Error::NotConverged {
            drift,
            limit: cfg.drift_limit,
        });
    }

    Ok(SlowFastSplit {
        omega0,
        omega,
        window: WindowInfo {
            start,
            periods: cfg.periods,
            length,
        },
        dc,
        at_omega,
        tones,
        explained_variance,
        residual_rms,
        drift,
        warnings,
    })
}

/// Settle-then-measure recipe for a driven, probed qubit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProbeRunConfig {
    /// Transient length in units of 1/Γ_Z, rounded up to whole probe periods.
    pub settle: f64,
    pub window_periods: usize,
    pub samples_per_carrier_period: usize,
    pub drift_limit: f64,
    pub integrator: IntegratorConfig,
}

impl Default for ProbeRunConfig {
    fn default() -> Self {
        ProbeRunConfig {
            settle: 10.0,
            window_periods: 12,
            samples_per_carrier_period: 24,
            drift_limit: 0.01,
            integrator: IntegratorConfig::new(1e-11, 1e-12),
        }
    }
}

/// Integrate from equilibrium under f cos ω₀t + 2g₀ cos ωt and split the
/// steady-state window into slow envelopes.
pub fn measure_probe_response(tls: &TlsParams, f: f64, omega0: f64, g0: f64, omega: f64, cfg: &ProbeRunConfig) -> Result<SlowFastSplit> {
    if !(cfg.settle >= 0.0) || cfg.samples_per_carrier_period < MIN_POINTS_PER_PERIOD {
        return Err(Error::invalid(
            "probe run",
            "settle must be non-negative and sampling at least 20 per carrier period",
        ));
    }
    let period = TAU / omega;
    let t0 = (cfg.settle / tls.gamma_z / period).ceil() * period;
    let t1 = t0 + cfg.window_periods as f64 * period;
    let carriers = cfg.window_periods as f64 * omega0.max(omega) / omega;
    let n = (carriers * cfg.samples_per_carrier_period as f64).ceil() as usize + 1;
    let samples = uniform_times(t0, t1, n);
    let drive = DriveWaveform::with_cosine_probe(f, omega0, g0, omega);
    let traj = integrate(BlochState::equilibrium(tls), tls, &drive, (0.0, t1), &samples, &cfg.integrator)?;
    slow_fast_split(
        &traj,
        omega0,
        omega,
        &SplitConfig {
            periods: cfg.window_periods,
            drift_limit: cfg.drift_limit,
        },
    )
}

/// Settle-then-measure recipe for the coupled qubit and tank.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TankRunConfig {
    /// Transient length in units of 1/γ_T, rounded up to whole probe periods.
    pub settle: f64,
    pub window_periods: usize,
    pub samples_per_period: usize,
    pub integrator: IntegratorConfig,
}

impl Default for TankRunConfig {
    fn default() -> Self {
        TankRunConfig {
            settle: 20.0,
            window_periods: 60,
            samples_per_period: 40,
            integrator: IntegratorConfig::new(1e-10, 1e-12),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TankMeasurement {
    /// V_T and χ of V = V_T cos(ωt + χ).
    pub v_t: f64,
    pub chi: f64,
    pub residual: f64,
    pub window: WindowInfo,
    pub accepted_steps: usize,
}

/// Coupled simulation at carrier ω₀ = Δ_ε + δ, demodulating V against I₀cos ωt.
pub fn measure_tank_response(
    tls: &TlsParams,
    tank: &TankParams,
    f: f64,
    delta: f64,
    omega: f64,
    cfg: &TankRunConfig,
) -> Result<TankMeasurement> {
    if !(cfg.settle >= 0.0) {
        return Err(Error::invalid("settle", "must be non-negative"));
    }
    let omega0 = tls.gap() + delta;
    let period = TAU / omega;
    let t0 = (cfg.settle / tank.gamma_t() / period).ceil() * period;
    let t1 = t0 + cfg.window_periods as f64 * period;
    let samples = uniform_times(t0, t1, cfg.window_periods * cfg.samples_per_period + 1);
    let initial = (BlochState::equilibrium(tls), TankState::bare_steady_state(tank, omega));
    let traj = integrate_coupled(initial, tls, tank, (f, omega0), omega, (0.0, t1), &samples, &cfg.integrator)?;
    let v = traj.voltage().ok_or(Error::NonFinite("tank voltage"))?;
    let d = demodulate(&traj.t, &v, omega, t0, cfg.window_periods)?;
    Ok(TankMeasurement {
        v_t: d.amplitude.norm(),
        chi: d.amplitude.arg(),
        residual: d.residual,
        window: d.window,
        accepted_steps: traj.meta.accepted_steps,
    })
}

/// Relative change of the mean ⟨σ_Z⟩ and the carrier envelope magnitude
/// between the second-to-last and last thirds of the window.
#[allow(clippy::too_many_arguments)]
fn envelope_drift(t: &[f64], sx: &[f64], sy: &[f64], sz: &[f64], omega0: f64, omega: f64, end: f64, periods: usize) -> Result<f64> {
    let third = (periods / 3).max(1) as f64 * TAU / omega;
    let stats = |from: f64, to: f64| -> Result<(f64, f64)> {
        let z = Segment::new(t, sz, from, to)?.mean(|_| 1.0);
        let y = Segment::new(t, sy, from, to)?;
        let x = Segment::new(t, sx, from, to)?;
        let cos2 = |t: f64| 2.0 * (omega0 * t).cos();
        let sin2 = |t: f64| 2.0 * (omega0 * t).sin();
        let env = [y.mean(cos2), y.mean(sin2), x.mean(cos2), x.mean(sin2)]
            .iter()
            .map(|v| v * v)
            .sum::<f64>()
            .sqrt();
        Ok((z, env))
    };
    let (z_prev, e_prev) = stats(end - 2.0 * third, end - third)?;
    let (z_last, e_last) = stats(end - third, end)?;
    let dz = (z_last - z_prev).abs() / z_last.abs().max(1e-12);
    let de = if e_last.max(e_prev) > 1e-9 {
        (e_last - e_prev).abs() / e_last.max(e_prev)
    } else {
        0.0
    };
    Ok(dz.max(de))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(n_periods: usize, per_period: usize, omega: f64) -> Vec<f64> {
        let n = n_periods * per_period;
        let dt = TAU / omega / per_period as f64;
        (0..=n).map(|i| i as f64 * dt).collect()
    }

    #[test]
    fn single_tone() {
        let w = 3.0;
        let t = grid(20, 64, w);
        let (amp, phi) = (1.7, 0.4);
        let s: Vec<f64> = t.iter().map(|t| amp * (w * t + phi).cos()).collect();
        let d = demodulate(&t, &s, w, 0.0, 20).unwrap();
        let expect = Complex64::from_polar(amp, phi);
        assert!((d.amplitude - expect).norm() <= 1e-6 * amp);
        assert!(d.residual < 1e-6);
    }

    #[test]
    fn constant_signal() {
        let t = grid(12, 32, 1.0);
        let s = vec![0.25; t.len()];
        let d = demodulate(&t, &s, 1.0, 0.0, 12).unwrap();
        assert!(d.amplitude.norm() < 1e-12);
        assert!((d.dc - 0.25).abs() < 1e-14);
    }

    #[test]
    fn two_tones_are_orthogonal() {
        let w = 2.0;
        let t = grid(35, 7 * 24, w);
        let s: Vec<f64> = t.iter().map(|t| 0.8 * (w * t).cos() + 0.3 * (7.0 * w * t - 1.0).cos()).collect();
        let lo = demodulate(&t, &s, w, 0.0, 35).unwrap();
        let hi = demodulate(&t, &s, 7.0 * w, 0.0, 245).unwrap();
        assert!((lo.amplitude - Complex64::new(0.8, 0.0)).norm() <= 1e-4 * 0.8);
        assert!((hi.amplitude - Complex64::from_polar(0.3, -1.0)).norm() <= 1e-4 * 0.3);
    }

    #[test]
    fn off_grid_window_is_interpolated() {
        let w = 1.0;
        let t = grid(30, 400, w);
        let s: Vec<f64> = t.iter().map(|t| (w * t + 0.2).cos()).collect();
        let d = demodulate(&t, &s, w, 1.2345, 20).unwrap();
        assert!((d.amplitude - Complex64::from_polar(1.0, 0.2)).norm() < 1e-4);
    }

    #[test]
    fn rejects_sparse_or_short() {
        let t = grid(20, 10, 1.0);
        let s = vec![0.0; t.len()];
        assert!(matches!(demodulate(&t, &s, 1.0, 0.0, 20), Err(Error::InsufficientSampling { .. })));
        let t = grid(20, 40, 1.0);
        let s = vec![0.0; t.len()];
        assert!(matches!(demodulate(&t, &s, 1.0, 0.0, 5), Err(Error::Window(_))));
        assert!(matches!(demodulate(&t, &s, 1.0, 0.0, 25), Err(Error::Window(_))));
    }
}
