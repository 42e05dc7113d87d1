use std::f64::consts::PI;

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::linalg::{eigh, hermiticity_defect, inf_norm, CMat};
use crate::spectrum::format_sig;
use crate::{Error, Result, C64};

/// Collapse operator A with rate κ in 1/ns, entering as κ D[A].
#[derive(Debug, Clone, PartialEq)]
pub struct Collapse {
    pub op: CMat,
    pub rate: f64,
}

/// Classical drive amplitude cos(ω t + phase) op, amplitude in GHz, ω in rad/ns.
#[derive(Debug, Clone, PartialEq)]
pub struct Drive {
    pub op: CMat,
    pub amplitude: f64,
    pub omega: f64,
    pub phase: f64,
}

/// H/h in GHz plus dissipators; time in ns.
#[derive(Debug, Clone, PartialEq)]
pub struct LindbladModel {
    pub h: CMat,
    pub collapse: Vec<Collapse>,
    pub drives: Vec<Drive>,
}

impl LindbladModel {
    pub fn new(h: CMat) -> Self {
        LindbladModel { h, collapse: Vec::new(), drives: Vec::new() }
    }

    pub fn with_collapse(mut self, op: CMat, rate: f64) -> Self {
        self.collapse.push(Collapse { op, rate });
        self
    }

    pub fn with_drive(mut self, d: Drive) -> Self {
        self.drives.push(d);
        self
    }

    pub fn dim(&self) -> usize {
        self.h.nrows()
    }

    /// Bound on the generator norm used for step control, 1/ns.
    pub fn rate_bound(&self) -> f64 {
        let h = inf_norm(&self.h) + self.drives.iter().map(|d| d.amplitude.abs() * inf_norm(&d.op)).sum::<f64>();
        let d: f64 = self.collapse.iter().map(|c| c.rate * inf_norm(&(c.op.adjoint() * &c.op))).sum();
        2.0 * PI * h + d
    }

    fn hamiltonian_at(&self, t: f64) -> CMat {
        let mut h = self.h.clone();
        for d in &self.drives {
            h += &d.op * C64::new(d.amplitude * (d.omega * t + d.phase).cos(), 0.0);
        }
        h
    }

    /// dρ/dt at time t.
    pub fn generator(&self, t: f64, rho: &CMat) -> CMat {
        let h = self.hamiltonian_at(t);
        let mut out = (&h * rho - rho * &h) * C64::new(0.0, -2.0 * PI);
        for c in &self.collapse {
            let a = &c.op;
            let ad = a.adjoint();
            let ada = &ad * a;
            out += (a * rho * &ad - (&ada * rho + rho * &ada) * C64::new(0.5, 0.0)) * C64::new(c.rate, 0.0);
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<CMat>,
    /// Largest |Tr ρ - 1| seen at recorded times.
    pub trace_drift: f64,
    /// Most negative eigenvalue seen at recorded times.
    pub min_eigenvalue: f64,
}

impl Trajectory {
    pub fn population(&self, level: usize) -> Vec<f64> {
        self.states.iter().map(|r| r[(level, level)].re).collect()
    }

    pub fn coherence(&self, i: usize, j: usize) -> Vec<C64> {
        self.states.iter().map(|r| r[(i, j)]).collect()
    }

    pub fn expectation(&self, op: &CMat) -> Vec<f64> {
        self.states.iter().map(|r| (op * r).trace().re).collect()
    }

    /// `t_ns, P0.., re_coh, im_coh` with coh = ρ_01.
    pub fn to_csv(&self, levels: usize) -> String {
        let mut out = String::from("t_ns");
        for k in 0..levels {
            out.push_str(&format!(",P{k}"));
        }
        out.push_str(",re_coh,im_coh\n");
        for (t, r) in self.times.iter().zip(&self.states) {
            let mut f = vec![format_sig(*t)];
            f.extend((0..levels).map(|k| format_sig(r[(k, k)].re)));
            let c = if r.nrows() > 1 { r[(0, 1)] } else { C64::new(0.0, 0.0) };
            f.push(format_sig(c.re));
            f.push(format_sig(c.im));
            out.push_str(&f.join(","));
            out.push('\n');
        }
        out
    }
}

/// Density matrix checks: square, Hermitian and unit trace to 1e-10.
pub fn check_state(rho: &CMat, dim: usize) -> Result<()> {
    if rho.nrows() != dim || rho.ncols() != dim {
        return Err(Error::DimensionMismatch(format!("state is {}x{}, model is {dim}", rho.nrows(), rho.ncols())));
    }
    if hermiticity_defect(rho) > 1e-10 || (rho.trace().re - 1.0).abs() > 1e-10 {
        return Err(Error::DimensionMismatch("state must be Hermitian with unit trace".into()));
    }
    Ok(())
}

/// Fixed-step RK4 from `times[0]`, recording ρ at every entry of `times`.
/// Intervals are split into equal substeps no longer than `dt` ns.
pub fn evolve(m: &LindbladModel, rho0: &CMat, times: &[f64], dt: f64) -> Result<Trajectory> {
    check_state(rho0, m.dim())?;
    if m.collapse.iter().any(|c| c.rate < 0.0) {
        return Err(Error::Unsupported("collapse rates must be non-negative".into()));
    }
    if times.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::DimensionMismatch("time grid must be ascending".into()));
    }
    let stiff = dt * m.rate_bound();
    if !(dt > 0.0) || stiff >= 0.1 {
        return Err(Error::StepTooLarge(stiff));
    }
    let mut rho = rho0.clone();
    let mut states = Vec::with_capacity(times.len());
    let mut t = times.first().copied().unwrap_or(0.0);
    let (mut drift, mut min_eig) = (0.0f64, 0.0f64);
    for &target in times {
        let span = target - t;
        let n = (span / dt).ceil() as usize;
        if n > 0 {
            let h = span / n as f64;
            let hc = C64::new(h, 0.0);
            for _ in 0..n {
                let k1 = m.generator(t, &rho);
                let k2 = m.generator(t + h / 2.0, &(&rho + &k1 * (hc / 2.0)));
                let k3 = m.generator(t + h / 2.0, &(&rho + &k2 * (hc / 2.0)));
                let k4 = m.generator(t + h, &(&rho + &k3 * hc));
                rho += (k1 + (k2 + k3) * C64::new(2.0, 0.0) + k4) * (hc / 6.0);
                t += h;
            }
        }
        t = target;
        drift = drift.max((rho.trace().re - 1.0).abs());
        let herm = (&rho + rho.adjoint()) * C64::new(0.5, 0.0);
        min_eig = min_eig.min(eigh(&herm).0[0]);
        states.push(rho.clone());
    }
    Ok(Trajectory { times: times.to_vec(), states, trace_drift: drift, min_eigenvalue: min_eig })
}

/// y = amplitude e^{-rate t} + offset.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub rate: f64,
    pub amplitude: f64,
    pub offset: f64,
    pub r2: f64,
}

/// Least-squares exponential fit (Levenberg-Marquardt on amplitude, rate,
/// offset). Rejects fits with R² below 0.999.
pub fn fit_decay(times: &[f64], values: &[f64]) -> Result<DecayFit> {
    let n = times.len();
    if n < 4 || values.len() != n {
        return Err(Error::DimensionMismatch("need at least 4 matching samples".into()));
    }
    let t0 = times[0];
    let ts: Vec<f64> = times.iter().map(|t| t - t0).collect();
    let mut b = values[n - 1];
    let mut a = values[0] - b;
    // first crossing of 1/e of the initial excursion
    let target = a.abs() / std::f64::consts::E;
    let te = ts.iter().zip(values).find(|(_, &y)| (y - b).abs() <= target).map_or(ts[n - 1] / 3.0, |(t, _)| *t);
    let mut g = 1.0 / te.max(1e-300);

    let sse = |a: f64, g: f64, b: f64| -> f64 {
        ts.iter().zip(values).map(|(t, y)| (a * (-g * t).exp() + b - y).powi(2)).sum()
    };
    let mut cost = sse(a, g, b);
    let mut mu = 1e-3;
    for _ in 0..500 {
        let mut jtj = Matrix3::zeros();
        let mut jtr = Vector3::zeros();
        for (t, y) in ts.iter().zip(values) {
            let e = (-g * t).exp();
            let r = a * e + b - y;
            let j = Vector3::new(e, -a * t * e, 1.0);
            jtj += j * j.transpose();
            jtr += j * r;
        }
        let mut improved = false;
        for _ in 0..30 {
            let mut damped = jtj;
            for i in 0..3 {
                damped[(i, i)] *= 1.0 + mu;
            }
            let Some(step) = damped.lu().solve(&(-jtr)) else {
                mu *= 10.0;
                continue;
            };
            let (na, ng, nb) = (a + step[0], g + step[1], b + step[2]);
            let c = sse(na, ng, nb);
            if c.is_finite() && c <= cost {
                let rel = (cost - c) / cost.max(1e-300);
                a = na;
                g = ng;
                b = nb;
                cost = c;
                mu = (mu / 10.0).max(1e-12);
                improved = rel > 1e-15;
                break;
            }
            mu *= 10.0;
        }
        if !improved {
            break;
        }
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    let tot: f64 = values.iter().map(|y| (y - mean).powi(2)).sum();
    let r2 = if tot > 0.0 { 1.0 - cost / tot } else { 0.0 };
    if !(r2 >= 0.999) || !(g > 0.0) {
        return Err(Error::PoorFit(r2));
    }
    Ok(DecayFit { rate: g, amplitude: a * (g * t0).exp(), offset: b, r2 })
}
