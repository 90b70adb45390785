// SPDX-License-Identifier: Apache-2.0

//! Least-squares recovery of (Γ, Γ_Z, f) from tank phase and amplitude curves.
//!
//! Levenberg–Marquardt in log-parameters with central-difference Jacobians.
//! Phase residuals are (model − data)/σ; amplitude residuals are
//! (ln model − ln data)/σ, so one σ column can weight both.

use nalgebra::{Matrix3, SymmetricEigen, Vector3};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::{flux_to_bias, FluxSpec, TankParams, TlsParams};
use crate::readout::{readout_point, ReadoutPoint, RegimeThresholds};

pub const MIN_POINTS: usize = 8;
const FD_STEP: f64 = 1e-6;
const NAMES: [&str; 3] = ["ln Gamma", "ln Gamma_Z", "ln f"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Abscissa {
    /// Dimensionless flux bias f_X.
    Flux,
    /// Probe frequency ω, rad/s.
    Probe,
    /// Relative drive amplitude; the point's drive is f·x.
    Power,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeasuredCurve {
    pub kind: Abscissa,
    pub x: Vec<f64>,
    pub chi: Option<Vec<f64>>,
    pub v_t: Option<Vec<f64>>,
    pub sigma: Option<Vec<f64>>,
}

impl MeasuredCurve {
    pub fn validate(&self) -> Result<()> {
        let n = self.x.len();
        if n < MIN_POINTS {
            return Err(Error::invalid("data", format!("{n} points, need at least {MIN_POINTS}")));
        }
        if self.chi.is_none() && self.v_t.is_none() {
            return Err(Error::invalid("data", "need a chi or v_t column"));
        }
        for (name, col) in [("chi", &self.chi), ("v_t", &self.v_t), ("sigma", &self.sigma)] {
            if let Some(c) = col {
                if c.len() != n {
                    return Err(Error::invalid("data", format!("column {name} has {} rows, x has {n}", c.len())));
                }
                if c.iter().any(|v| !v.is_finite()) {
                    return Err(Error::invalid("data", format!("column {name} has non-finite values")));
                }
            }
        }
        if self.x.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("data", "abscissa has non-finite values"));
        }
        let inc = self.x.windows(2).all(|w| w[1] > w[0]);
        let dec = self.x.windows(2).all(|w| w[1] < w[0]);
        if !(inc || dec) {
            return Err(Error::invalid("data", "abscissa must be strictly monotone"));
        }
        if let Some(v) = &self.v_t {
            if v.iter().any(|v| *v <= 0.0) {
                return Err(Error::invalid("data", "v_t must be positive"));
            }
        }
        if let Some(s) = &self.sigma {
            if s.iter().any(|v| *v <= 0.0) {
                return Err(Error::invalid("data", "sigma must be positive"));
            }
        }
        Ok(())
    }

    /// CSV with header `x,chi[,v_t][,sigma]` (chi may be omitted if v_t is present).
    pub fn read_csv<R: std::io::Read>(input: R, kind: Abscissa) -> Result<Self> {
        let mut r = csv::Reader::from_reader(input);
        let headers: Vec<String> = r.headers()?.iter().map(|h| h.trim().to_string()).collect();
        let col = |name: &str| headers.iter().position(|h| h == name);
        let ix = col("x").ok_or_else(|| Error::invalid("data", "missing x column"))?;
        for h in &headers {
            if !["x", "chi", "v_t", "sigma"].contains(&h.as_str()) {
                return Err(Error::invalid("data", format!("unknown column {h:?}")));
            }
        }
        let (ic, iv, is) = (col("chi"), col("v_t"), col("sigma"));
        let mut x = Vec::new();
        let (mut chi, mut v_t, mut sigma) = (Vec::new(), Vec::new(), Vec::new());
        for rec in r.records() {
            let rec = rec?;
            let num = |i: usize| -> Result<f64> {
                rec.get(i)
                    .and_then(|s| s.trim().parse::<f64>().ok())
                    .ok_or_else(|| Error::invalid("data", format!("bad number in row {:?}", rec)))
            };
            x.push(num(ix)?);
            if let Some(i) = ic {
                chi.push(num(i)?);
            }
            if let Some(i) = iv {
                v_t.push(num(i)?);
            }
            if let Some(i) = is {
                sigma.push(num(i)?);
            }
        }
        let curve = MeasuredCurve {
            kind,
            x,
            chi: ic.map(|_| chi),
            v_t: iv.map(|_| v_t),
            sigma: is.map(|_| sigma),
        };
        curve.validate()?;
        Ok(curve)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Rates {
    pub gamma_phi: f64,
    pub gamma_z: f64,
    pub f: f64,
}

impl Rates {
    fn to_log(self) -> Vector3<f64> {
        Vector3::new(self.gamma_phi.ln(), self.gamma_z.ln(), self.f.ln())
    }

    fn from_log(p: &Vector3<f64>) -> Self {
        Rates {
            gamma_phi: p[0].exp(),
            gamma_z: p[1].exp(),
            f: p[2].exp(),
        }
    }

    fn all_positive(&self) -> bool {
        [self.gamma_phi, self.gamma_z, self.f].iter().all(|v| *v > 0.0 && v.is_finite())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Bounds {
    pub lower: Rates,
    pub upper: Rates,
}

/// Everything held fixed while the rates vary.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ForwardContext {
    /// Δ, temperature, conventions; ε is used unless the abscissa is flux.
    pub tls: TlsParams,
    /// Josephson energy for flux abscissae, J.
    pub e_j: f64,
    pub tank: TankParams,
    /// Carrier detuning δ.
    pub detuning: f64,
    /// Probe frequency ω, unless the abscissa is the probe.
    pub omega: f64,
    pub thresholds: RegimeThresholds,
}

pub fn forward_model(rates: &Rates, ctx: &ForwardContext, kind: Abscissa, xs: &[f64]) -> Result<Vec<ReadoutPoint>> {
    let mut tls = ctx.tls;
    tls.gamma_phi = rates.gamma_phi;
    tls.gamma_z = rates.gamma_z;
    xs.iter()
        .map(|&x| {
            let (mut p, mut f, mut omega) = (tls, rates.f, ctx.omega);
            match kind {
                Abscissa::Flux => {
                    p.epsilon = flux_to_bias(&FluxSpec {
                        f_x: x,
                        e_j: ctx.e_j,
                        i_q: ctx.tank.i_q,
                    })
                }
                Abscissa::Probe => omega = x,
                Abscissa::Power => f *= x,
            }
            readout_point(&p, &ctx.tank, f, ctx.detuning, omega, &ctx.thresholds)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitOptions {
    pub max_iterations: usize,
    pub rel_cost_tol: f64,
    pub gradient_tol: f64,
    /// Condition number above which a direction is reported as weak.
    pub flag_condition: f64,
    /// Condition number above which the fit is rejected as rank deficient.
    pub reject_condition: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            max_iterations: 500,
            rel_cost_tol: 1e-10,
            gradient_tol: 1e-8,
            flag_condition: 1e8,
            reject_condition: 1e12,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct FitResult {
    pub estimates: Rates,
    pub std_errors: Rates,
    /// sqrt(Σ r²).
    pub residual_norm: f64,
    pub iterations: usize,
    pub accepted_steps: usize,
    pub gradient_norm: f64,
    pub converged_by: &'static str,
    /// Eigenvalues of JᵀJ in log-parameters, ascending.
    pub hessian_eigenvalues: [f64; 3],
    pub condition: f64,
    pub weak_direction: Option<String>,
    /// Cost after each accepted step; non-increasing.
    pub cost_history: Vec<f64>,
}

fn residuals(rates: &Rates, ctx: &ForwardContext, data: &MeasuredCurve) -> Result<Vec<f64>> {
    let model = forward_model(rates, ctx, data.kind, &data.x)?;
    let sigma = |i: usize| data.sigma.as_ref().map_or(1.0, |s| s[i]);
    let mut r = Vec::with_capacity(2 * model.len());
    if let Some(chi) = &data.chi {
        r.extend(model.iter().zip(chi).enumerate().map(|(i, (m, d))| (m.chi - d) / sigma(i)));
    }
    if let Some(v) = &data.v_t {
        r.extend(model.iter().zip(v).enumerate().map(|(i, (m, d))| (m.v_t.ln() - d.ln()) / sigma(i)));
    }
    if r.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("model residual"));
    }
    Ok(r)
}

fn cost_of(r: &[f64]) -> f64 {
    0.5 * r.iter().map(|v| v * v).sum::<f64>()
}

/// Central-difference Jacobian in log-parameters, one column per rayon task.
fn jacobian(p: &Vector3<f64>, ctx: &ForwardContext, data: &MeasuredCurve, step: f64) -> Result<Vec<[f64; 3]>> {
    let cols: Vec<Result<Vec<f64>>> = (0..3)
        .into_par_iter()
        .map(|j| {
            let mut up = *p;
            let mut dn = *p;
            up[j] += step;
            dn[j] -= step;
            let ru = residuals(&Rates::from_log(&up), ctx, data)?;
            let rd = residuals(&Rates::from_log(&dn), ctx, data)?;
            Ok(ru.iter().zip(&rd).map(|(a, b)| (a - b) / (2.0 * step)).collect())
        })
        .collect();
    let cols = cols.into_iter().collect::<Result<Vec<_>>>()?;
    Ok((0..cols[0].len()).map(|i| [cols[0][i], cols[1][i], cols[2][i]]).collect())
}

/// Gradient of ½Σr² from the central-difference Jacobian.
pub fn gradient(rates: &Rates, ctx: &ForwardContext, data: &MeasuredCurve) -> Result<[f64; 3]> {
    let p = rates.to_log();
    let r = residuals(rates, ctx, data)?;
    let j = jacobian(&p, ctx, data, FD_STEP)?;
    let g = normal_equations(&j, &r).1;
    Ok([g[0], g[1], g[2]])
}

/// Same gradient from a five-point stencil, for cross-checking.
pub fn gradient_five_point(rates: &Rates, ctx: &ForwardContext, data: &MeasuredCurve, step: f64) -> Result<[f64; 3]> {
    let p = rates.to_log();
    let mut g = [0.0; 3];
    for (j, gj) in g.iter_mut().enumerate() {
        let at = |k: f64| -> Result<f64> {
            let mut q = p;
            q[j] += k * step;
            Ok(cost_of(&residuals(&Rates::from_log(&q), ctx, data)?))
        };
        *gj = (-at(2.0)? + 8.0 * at(1.0)? - 8.0 * at(-1.0)? + at(-2.0)?) / (12.0 * step);
    }
    Ok(g)
}

fn normal_equations(j: &[[f64; 3]], r: &[f64]) -> (Matrix3<f64>, Vector3<f64>) {
    let mut a = Matrix3::zeros();
    let mut g = Vector3::zeros();
    for (row, ri) in j.iter().zip(r) {
        for u in 0..3 {
            g[u] += row[u] * ri;
            for v in 0..3 {
                a[(u, v)] += row[u] * row[v];
            }
        }
    }
    (a, g)
}

fn clamp_to(p: &Vector3<f64>, lo: &Vector3<f64>, hi: &Vector3<f64>) -> Vector3<f64> {
    Vector3::from_fn(|i, _| p[i].clamp(lo[i], hi[i]))
}

fn describe_direction(v: &Vector3<f64>) -> String {
    let terms: Vec<String> = (0..3)
        .filter(|&i| v[i].abs() > 1e-3)
        .map(|i| format!("{:+.3}*{}", v[i], NAMES[i]))
        .collect();
    terms.join(" ")
}

pub fn fit_rates(data: &MeasuredCurve, init: Rates, bounds: &Bounds, ctx: &ForwardContext, opts: &FitOptions) -> Result<FitResult> {
    data.validate()?;
    for (name, r) in [("init", init), ("lower bound", bounds.lower), ("upper bound", bounds.upper)] {
        if !r.all_positive() {
            return Err(Error::invalid("fit", format!("{name} must be positive and finite")));
        }
    }
    let lo = bounds.lower.to_log();
    let hi = bounds.upper.to_log();
    if (0..3).any(|i| lo[i] > hi[i]) {
        return Err(Error::invalid("bounds", "lower bound exceeds upper bound"));
    }
    let mut p = init.to_log();
    if p != clamp_to(&p, &lo, &hi) {
        return Err(Error::invalid("init", "initial guess lies outside the bounds"));
    }

    let mut r = residuals(&Rates::from_log(&p), ctx, data)?;
    let mut cost = cost_of(&r);
    let mut j = jacobian(&p, ctx, data, FD_STEP)?;
    let (mut a, mut g) = normal_equations(&j, &r);
    let mut lambda = 1e-3;
    let mut history = vec![cost];
    let mut accepted = 0;
    let mut iterations = 0;
    let converged_by;

    loop {
        if cost == 0.0 {
            converged_by = "exact fit";
            break;
        }
        if g.norm() < opts.gradient_tol {
            converged_by = "gradient";
            break;
        }
        if iterations >= opts.max_iterations {
            return Err(Error::FitNotConverged {
                iterations,
                best_cost: cost,
            });
        }
        iterations += 1;

        let mut damped = a;
        for i in 0..3 {
            damped[(i, i)] += lambda * a[(i, i)].max(1e-12 * a.diagonal().max());
        }
        let step = damped.cholesky().map(|c| c.solve(&(-g)));
        let trial = step.map(|s| clamp_to(&(p + s), &lo, &hi));
        let outcome = match trial {
            Some(q) if q != p => residuals(&Rates::from_log(&q), ctx, data).ok().map(|rq| (q, rq)),
            _ => None,
        };
        match outcome {
            Some((q, rq)) if cost_of(&rq) < cost => {
                let new_cost = cost_of(&rq);
                let rel = (cost - new_cost) / cost;
                p = q;
                r = rq;
                cost = new_cost;
                history.push(cost);
                accepted += 1;
                lambda = (lambda / 3.0).max(1e-12);
                j = jacobian(&p, ctx, data, FD_STEP)?;
                (a, g) = normal_equations(&j, &r);
                if rel < opts.rel_cost_tol {
                    converged_by = "relative cost decrease";
                    break;
                }
            }
            _ => {
                lambda *= 4.0;
                if lambda > 1e16 {
                    converged_by = "no further decrease";
                    break;
                }
            }
        }
    }

    let eig = SymmetricEigen::new(a);
    let mut order = [0usize, 1, 2];
    order.sort_by(|&x, &y| eig.eigenvalues[x].total_cmp(&eig.eigenvalues[y]));
    let vals = [eig.eigenvalues[order[0]], eig.eigenvalues[order[1]], eig.eigenvalues[order[2]]];
    let weakest = eig.eigenvectors.column(order[0]).into_owned();
    let condition = if vals[0] > 0.0 { vals[2] / vals[0] } else { f64::INFINITY };
    if vals[2] <= 0.0 || condition > opts.reject_condition {
        return Err(Error::RankDeficient {
            direction: describe_direction(&weakest),
            condition,
        });
    }
    let weak_direction = (condition > opts.flag_condition).then(|| describe_direction(&weakest));

    let n = r.len();
    let dof = n.saturating_sub(3).max(1) as f64;
    let s2 = 2.0 * cost / dof;
    let mut cov = Matrix3::zeros();
    for (k, lam) in eig.eigenvalues.iter().enumerate() {
        let v = eig.eigenvectors.column(k);
        cov += v * v.transpose() / *lam;
    }
    let est = Rates::from_log(&p);
    let se = |i: usize, val: f64| val * (s2 * cov[(i, i)]).max(0.0).sqrt();
    Ok(FitResult {
        estimates: est,
        std_errors: Rates {
            gamma_phi: se(0, est.gamma_phi),
            gamma_z: se(1, est.gamma_z),
            f: se(2, est.f),
        },
        residual_norm: (2.0 * cost).sqrt(),
        iterations,
        accepted_steps: accepted,
        gradient_norm: g.norm(),
        converged_by,
        hessian_eigenvalues: vals,
        condition,
        weak_direction,
        cost_history: history,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::units::{ghz, mhz};

    fn ctx(k: f64) -> ForwardContext {
        ForwardContext {
            tls: TlsParams::new(ghz(1.0), 0.0, 0.01, mhz(4.0), mhz(0.1)).unwrap(),
            e_j: 1.32e-22,
            tank: TankParams {
                omega_t: mhz(6.0),
                q_t: 2000.0,
                l_t: 100e-9,
                k,
                l_q: 40e-12,
                i_q: 280e-9,
                i0: 1e-15,
            },
            detuning: 0.0,
            omega: mhz(6.0),
            thresholds: RegimeThresholds::default(),
        }
    }

    fn truth() -> Rates {
        Rates {
            gamma_phi: mhz(4.0),
            gamma_z: mhz(0.1),
            f: mhz(1.0),
        }
    }

    fn bounds() -> Bounds {
        let t = truth();
        Bounds {
            lower: Rates {
                gamma_phi: t.gamma_phi / 100.0,
                gamma_z: t.gamma_z / 100.0,
                f: t.f / 100.0,
            },
            upper: Rates {
                gamma_phi: t.gamma_phi * 100.0,
                gamma_z: t.gamma_z * 100.0,
                f: t.f * 100.0,
            },
        }
    }

    fn synthetic(c: &ForwardContext) -> MeasuredCurve {
        let x: Vec<f64> = (0..25).map(|i| -3e-3 + 6e-3 * i as f64 / 24.0).collect();
        let chi = forward_model(&truth(), c, Abscissa::Flux, &x)
            .unwrap()
            .iter()
            .map(|p| p.chi)
            .collect();
        MeasuredCurve {
            kind: Abscissa::Flux,
            x,
            chi: Some(chi),
            v_t: None,
            sigma: None,
        }
    }

    #[test]
    fn forward_is_deterministic_and_flat_when_decoupled() {
        let c = ctx(0.0);
        let x: Vec<f64> = (0..10).map(|i| i as f64 * 1e-4).collect();
        let a = forward_model(&truth(), &c, Abscissa::Flux, &x).unwrap();
        let b = forward_model(&truth(), &c, Abscissa::Flux, &x).unwrap();
        assert_eq!(a, b);
        assert!(a.iter().all(|p| p.chi == a[0].chi));
    }

    #[test]
    fn noiseless_round_trip_from_truth() {
        let c = ctx(0.03);
        let data = synthetic(&c);
        let res = fit_rates(&data, truth(), &bounds(), &c, &FitOptions::default()).unwrap();
        assert!(res.accepted_steps <= 1, "{res:?}");
        assert!(res.residual_norm < 1e-10);
    }

    #[test]
    fn recovers_from_offset_start() {
        let c = ctx(0.03);
        let data = synthetic(&c);
        let init = Rates {
            gamma_phi: mhz(5.0),
            gamma_z: mhz(0.07),
            f: mhz(0.8),
        };
        let res = fit_rates(&data, init, &bounds(), &c, &FitOptions::default()).unwrap();
        let t = truth();
        assert!((res.estimates.gamma_phi / t.gamma_phi - 1.0).abs() < 1e-6, "{res:?}");
        assert!((res.estimates.gamma_z / t.gamma_z - 1.0).abs() < 1e-6);
        assert!((res.estimates.f / t.f - 1.0).abs() < 1e-6);
        assert!(res.cost_history.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn flat_data_is_rank_deficient() {
        let c = ctx(0.0);
        let data = synthetic(&c);
        let e = fit_rates(&data, truth(), &bounds(), &c, &FitOptions::default()).unwrap_err();
        assert!(matches!(e, Error::RankDeficient { .. }));
    }

    #[test]
    fn zero_bias_probe_sweep_is_rank_deficient() {
        let c = ctx(0.03);
        let x: Vec<f64> = (0..12).map(|i| mhz(5.0 + 0.2 * i as f64)).collect();
        let chi = forward_model(&truth(), &c, Abscissa::Probe, &x)
            .unwrap()
            .iter()
            .map(|p| p.chi)
            .collect();
        let data = MeasuredCurve {
            kind: Abscissa::Probe,
            x,
            chi: Some(chi),
            v_t: None,
            sigma: None,
        };
        let init = Rates {
            gamma_phi: mhz(5.0),
            gamma_z: mhz(0.07),
            f: mhz(0.8),
        };
        match fit_rates(&data, init, &bounds(), &c, &FitOptions::default()) {
            Err(Error::RankDeficient { direction, .. }) => assert!(direction.contains("ln Gamma_Z")),
            other => panic!("expected rank deficiency, got {other:?}"),
        }
    }

    #[test]
    fn rejects_bad_curves() {
        let mut d = synthetic(&ctx(0.03));
        d.x.swap(2, 3);
        assert!(d.validate().is_err());
        let short = MeasuredCurve {
            kind: Abscissa::Flux,
            x: vec![0.0, 1.0],
            chi: Some(vec![0.0, 0.0]),
            v_t: None,
            sigma: None,
        };
        assert!(short.validate().is_err());
    }

    #[test]
    fn csv_columns() {
        let text = "x,chi,sigma\n0,0.1,0.01\n1,0.2,0.01\n2,0.3,0.01\n3,0.4,0.01\n4,0.5,0.01\n5,0.6,0.01\n6,0.7,0.01\n7,0.8,0.01\n";
        let c = MeasuredCurve::read_csv(text.as_bytes(), Abscissa::Flux).unwrap();
        assert_eq!(c.x.len(), 8);
        assert!(c.v_t.is_none());
        assert!(MeasuredCurve::read_csv("x,phase\n0,1\n".as_bytes(), Abscissa::Flux).is_err());
    }
}
