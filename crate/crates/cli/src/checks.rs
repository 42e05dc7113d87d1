//! Invariant suites behind `--check` and `qcirc check`.

use std::f64::consts::PI;

use qcirc::builder::{hamiltonian_frequencies, kinetic_form, lagrangian_frequencies, potential_form, HamiltonianSpec};
use qcirc::dynamics::{AmpReport, LinearIoModel, Trajectory};
use qcirc::linalg::{commutator, max_abs, CMat};
use qcirc::netlist::{decompose, parse_netlist, to_text, CircuitGraph};
use qcirc::network::{cauer_impedance, convert_matrix, CauerModel, MatrixKind};
use qcirc::perturb::parity_classify;
use qcirc::spectrum::{assemble, parity_operator, BasisSpec, SpectrumResult};
use qcirc::C64;
use serde::Serialize;

#[derive(Debug, Clone, Serialize)]
pub struct CheckLine {
    pub suite: String,
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

#[derive(Default)]
pub struct Suite {
    pub lines: Vec<CheckLine>,
}

impl Suite {
    fn push(&mut self, suite: &str, name: &str, pass: bool, detail: String) {
        self.lines.push(CheckLine { suite: suite.into(), name: name.into(), pass, detail });
    }

    fn below(&mut self, suite: &str, name: &str, value: f64, tol: f64) {
        self.push(suite, name, value < tol, format!("{value:.3e} < {tol:.0e}"));
    }

    pub fn failures(&self) -> Vec<String> {
        self.lines.iter().filter(|l| !l.pass).map(|l| format!("{}.{}", l.suite, l.name)).collect()
    }

    pub fn print(&self) {
        for l in &self.lines {
            println!("{} {}.{} {}", if l.pass { "PASS" } else { "FAIL" }, l.suite, l.name, l.detail);
        }
    }
}

pub fn netlist(s: &mut Suite, g: &CircuitGraph) {
    let t = match decompose(g, true) {
        Ok(t) => t,
        Err(e) => return s.push("netlist", "decompose", false, e.to_string()),
    };
    let mut worst = 0i64;
    for row in &t.incidence {
        for l in &t.loop_matrix {
            worst = worst.max(row.iter().zip(l).map(|(a, b)| a * b).sum::<i64>().abs());
        }
    }
    s.push("netlist", "kcl_kvl_orthogonal", worst == 0, format!("max |A.B^T| = {worst}"));
    let loops = t.loop_matrix.len();
    let want = g.branches.len() - g.live_nodes();
    s.push("netlist", "loop_count", loops == want, format!("{loops} loops, M - N = {want}"));
    let same = parse_netlist(&to_text(g)).map(|h| &h == g).unwrap_or(false);
    s.push("netlist", "text_roundtrip", same, String::new());
}

pub fn builder(s: &mut Suite, g: &CircuitGraph, spec: &HamiltonianSpec) {
    let Ok(t) = decompose(g, true) else { return };
    let (Ok(k), Ok(u)) = (kinetic_form(g, &t), potential_form(g, &t)) else { return };
    if k.cap_matrix.nrows() == spec.dim() {
        let id = &spec.inv_cap * &k.cap_matrix;
        let n = spec.dim();
        let err = (id - nalgebra::DMatrix::<f64>::identity(n, n)).abs().max();
        s.below("builder", "inverse_capacitance", err, 1e-12);
    }
    if u.cosines.is_empty() {
        match (lagrangian_frequencies(&k, &u), hamiltonian_frequencies(spec)) {
            (Ok(a), Ok(b)) => {
                let err = a.iter().zip(&b).map(|(x, y)| (x - y).abs() / y.abs()).fold(0.0, f64::max);
                s.below("builder", "legendre_frequencies", err, 1e-10);
            }
            (Err(e), _) | (_, Err(e)) => s.push("builder", "legendre_frequencies", false, e.to_string()),
        }
    }
}

pub fn spectrum(s: &mut Suite, spec: &HamiltonianSpec, basis: &BasisSpec, result: &SpectrumResult, tol: f64) {
    let h = match assemble(spec, basis) {
        Ok(h) => h,
        Err(e) => return s.push("spectrum", "assemble", false, e.to_string()),
    };
    let scale = h.norm_bound().max(1.0);
    s.below("spectrum", "hermiticity", h.hermiticity_defect() / scale, 1e-13);
    let sorted = result.eigenvalues.windows(2).all(|w| w[0] <= w[1]);
    s.push("spectrum", "sorted", sorted, String::new());
    if result.truncation_error.is_finite() {
        s.push(
            "spectrum",
            "truncation",
            result.truncation_error <= tol,
            format!("{:.3e} GHz <= {tol:.0e}", result.truncation_error),
        );
    }
    if spec.has_even_potential() && !h.is_sparse() {
        if let Ok(p) = parity_operator(basis) {
            let hd = h.to_dense();
            s.below("spectrum", "parity_commutes", max_abs(&commutator(&p, &hd)) / scale, 1e-12);
            match parity_classify(spec, basis, result) {
                Ok(rep) => s.below("spectrum", "parity_selection", rep.max_forbidden, 1e-9),
                Err(e) => s.push("spectrum", "parity_selection", false, e.to_string()),
            }
        }
    }
}

pub fn network(s: &mut Suite, model: &CauerModel, window: (f64, f64)) {
    let ascending = model.modes.windows(2).all(|w| w[0].omega < w[1].omega);
    s.push("network", "modes_ascending", ascending, String::new());
    let kmin = model.modes.iter().map(|m| m.kappa).fold(f64::INFINITY, f64::min);
    s.push("network", "kappa_nonnegative", model.modes.is_empty() || kmin >= 0.0, format!("min {kmin:.3e}"));
    let zerr = model
        .modes
        .iter()
        .map(|m| (m.z * model.c0_ff * 1e-15 * m.omega - 1.0).abs())
        .fold(0.0, f64::max);
    s.below("network", "mode_impedance", zerr, 1e-12);
    let mut recip = 0.0f64;
    let mut unitary = 0.0f64;
    let lossless = model.modes.iter().all(|m| m.kappa == 0.0);
    let n = model.num_ports();
    for i in 0..10 {
        let w = window.0 + (window.1 - window.0) * (i as f64 + 0.37) / 10.0;
        let sj = C64::new(0.0, w);
        let z = cauer_impedance(model, sj);
        recip = recip.max(max_abs(&(&z - z.transpose())) / max_abs(&z).max(1e-300));
        if lossless {
            if let Ok(sm) = convert_matrix(&z, MatrixKind::Z, MatrixKind::S, 50.0, sj) {
                unitary = unitary.max(max_abs(&(sm.adjoint() * &sm - CMat::identity(n, n))));
            }
        }
    }
    s.below("network", "reciprocity", recip, 1e-10);
    if lossless {
        s.below("network", "lossless_unitary", unitary, 1e-10);
    }
}

pub fn dynamics(s: &mut Suite, traj: &Trajectory) {
    s.below("dynamics", "trace", traj.trace_drift, 1e-8);
    s.push("dynamics", "positivity", traj.min_eigenvalue >= -1e-10, format!("min eigenvalue {:.3e}", traj.min_eigenvalue));
    let herm = traj.states.iter().map(|r| max_abs(&(r - r.adjoint()))).fold(0.0, f64::max);
    s.below("dynamics", "hermiticity", herm, 1e-8);
}

pub fn amplifier(s: &mut Suite, name: &str, report: &AmpReport, linear: &LinearIoModel) {
    s.below("amp", &format!("{name}_symplectic"), report.symplectic_defect(), 1e-12);
    match linear.scattering() {
        Ok(m) => {
            let err = ((m[(0, 0)] - report.u).norm() + (m[(0, 1)] - report.v).norm()) / report.u.norm();
            s.below("amp", &format!("{name}_linear_solve"), err, 1e-12);
        }
        Err(e) => s.push("amp", &format!("{name}_linear_solve"), false, e.to_string()),
    }
}

/// Closed-form network identities that do not depend on user input.
pub fn network_reference(s: &mut Suite) {
    use qcirc::network::{circulator_admittance, gyrator_admittance, tl_two_port};
    let c = |x: f64| C64::new(x, 0.0);
    let sj = C64::new(0.0, 1.0);
    let g = convert_matrix(&gyrator_admittance(0.02), MatrixKind::Y, MatrixKind::S, 50.0, sj);
    let want = CMat::from_row_slice(2, 2, &[c(0.0), c(1.0), c(-1.0), c(0.0)]);
    s.below("network", "matched_gyrator", g.map(|m| max_abs(&(m - want))).unwrap_or(f64::INFINITY), 1e-15);
    let circ = convert_matrix(&circulator_admittance(0.02), MatrixKind::Y, MatrixKind::S, 50.0, sj);
    let perm = CMat::from_row_slice(3, 3, &[c(0.0), c(0.0), c(1.0), c(1.0), c(0.0), c(0.0), c(0.0), c(1.0), c(0.0)]);
    s.below("network", "matched_circulator", circ.map(|m| max_abs(&(m - perm))).unwrap_or(f64::INFINITY), 1e-15);
    let mut worst = 0.0f64;
    for i in 0..100 {
        let w = 2.0 * PI * (0.013 + 0.0371 * i as f64) * 1e9;
        if let Ok((_, sm)) = tl_two_port(50.0, 1e-9, C64::new(0.0, w)) {
            worst = worst.max(max_abs(&(sm.adjoint() * &sm - CMat::identity(2, 2))));
        }
    }
    s.below("network", "tl_unitary", worst, 1e-10);
}

pub fn perturb_reference(s: &mut Suite) {
    use qcirc::perturb::{jc_dispersive, schrieffer_wolff2, BlockStructure};
    let c = |x: f64| C64::new(x, 0.0);
    for delta in [1.0, -1.0] {
        let g = 0.05;
        let v = CMat::from_row_slice(2, 2, &[c(0.0), c(g), c(g), c(0.0)]);
        let Ok(b) = BlockStructure::new(vec![delta / 2.0, -delta / 2.0], vec![0, 1], v) else { continue };
        let Ok(r) = schrieffer_wolff2(&b) else { continue };
        let chi = jc_dispersive(&[g], &[delta]).map(|d| d.chi[0]).unwrap_or(f64::NAN);
        let shift = r.h_eff[(0, 0)].re - delta / 2.0;
        let name = if delta > 0.0 { "dispersive_shift_pos" } else { "dispersive_shift_neg" };
        s.push("perturb", name, (shift - chi).abs() < 1e-14 && shift.signum() == delta.signum(), format!("{shift:.6e}"));
    }
}
