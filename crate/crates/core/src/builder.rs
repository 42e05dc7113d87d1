//! From a decomposed circuit graph to a Hamiltonian specification.
//!
//! Variables are the fluxes of live (non-ground, non-driven) nodes in
//! reduced form phi = 2 pi Phi / Phi0, with conjugate charges q = Q / 2e.
//! The Hamiltonian is
//!
//! ```text
//! H/h = 4 (q - A phi + n)^T E_C (q - A phi + n) + 1/2 phi^T K phi + b^T phi + U0
//!       - sum_k E_Jk cos(c_k . phi + theta_k)
//! ```
//!
//! with `E_C = e^2/(2h) C^-1` (GHz), `K` in GHz/rad^2, `n` the charge offset
//! from voltage sources and `A` the dimensionless gyrator coupling.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::linalg::{eigh, inverse_real, op_norm, to_complex};
use crate::netlist::{
    assign_chord_fluxes, decompose, BranchKind, CircuitGraph, Coupling, TreeDecomposition,
};
use crate::units::{current_ghz_per_rad, ec_ghz, el_ghz, E_CHARGE, FF, PHI0, PLANCK, R_Q};
use crate::{Error, Result, C64};

pub(crate) mod mat_serde {
    use nalgebra::DMatrix;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(m: &DMatrix<f64>, s: S) -> Result<S::Ok, S::Error> {
        let rows: Vec<Vec<f64>> = (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect();
        rows.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<DMatrix<f64>, D::Error> {
        let rows: Vec<Vec<f64>> = Vec::deserialize(d)?;
        let n = rows.len();
        let m = rows.first().map_or(0, |r| r.len());
        if rows.iter().any(|r| r.len() != m) {
            return Err(serde::de::Error::custom("ragged matrix"));
        }
        Ok(DMatrix::from_fn(n, m, |i, j| rows[i][j]))
    }
}

pub(crate) mod vec_serde {
    use nalgebra::DVector;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(v: &DVector<f64>, s: S) -> Result<S::Ok, S::Error> {
        v.iter().copied().collect::<Vec<f64>>().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<DVector<f64>, D::Error> {
        Ok(DVector::from_vec(Vec::deserialize(d)?))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KineticForm {
    pub labels: Vec<String>,
    /// Graph node index of each variable.
    pub nodes: Vec<usize>,
    /// fF.
    #[serde(with = "mat_serde")]
    pub cap_matrix: DMatrix<f64>,
    /// Charge offsets C_g v / 2e.
    #[serde(with = "vec_serde")]
    pub source_offset: DVector<f64>,
    /// Antisymmetric gyrator matrix in siemens (entries +-G/2).
    #[serde(with = "mat_serde")]
    pub vec_potential: DMatrix<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CosineTerm {
    pub label: String,
    /// GHz.
    pub ej: f64,
    pub coeffs: Vec<f64>,
    /// Static phase offset in radians.
    pub phase: f64,
    /// Weight with which a time-dependent loop flux (in Phi0) enters the
    /// phase, i.e. phase(t) = phase + 2 pi * weight * delta_flux(t).
    pub flux_weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PotentialForm {
    /// GHz per rad^2.
    #[serde(with = "mat_serde")]
    pub quadratic: DMatrix<f64>,
    pub cosines: Vec<CosineTerm>,
    /// GHz per rad.
    #[serde(with = "vec_serde")]
    pub linear: DVector<f64>,
    /// GHz.
    pub constant: f64,
}

impl PotentialForm {
    pub fn zeros(n: usize) -> Self {
        PotentialForm {
            quadratic: DMatrix::zeros(n, n),
            cosines: vec![],
            linear: DVector::zeros(n),
            constant: 0.0,
        }
    }

    /// Classical potential energy in GHz at reduced fluxes `phi`.
    pub fn energy(&self, phi: &[f64]) -> f64 {
        let p = DVector::from_column_slice(phi);
        let mut u = 0.5 * p.dot(&(&self.quadratic * &p)) + self.linear.dot(&p) + self.constant;
        for c in &self.cosines {
            let arg: f64 = c.coeffs.iter().zip(phi).map(|(a, b)| a * b).sum::<f64>() + c.phase;
            u -= c.ej * arg.cos();
        }
        u
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum VarKind {
    Compact,
    Extended,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VarScale {
    /// Diagonal charging energy 4 E_C prefactor's E_C, GHz.
    pub ec: f64,
    /// Confinement energy used for the oscillator frame, GHz per rad^2.
    pub el: f64,
    pub phi_zpf: f64,
    pub q_zpf: f64,
    /// sqrt(8 E_C E_L) in GHz.
    pub plasma: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HamiltonianSpec {
    pub labels: Vec<String>,
    /// 1/fF.
    #[serde(with = "mat_serde")]
    pub inv_cap: DMatrix<f64>,
    /// GHz; kinetic term is 4 q^T ec q.
    #[serde(with = "mat_serde")]
    pub ec: DMatrix<f64>,
    #[serde(with = "vec_serde")]
    pub offset: DVector<f64>,
    /// Dimensionless gyrator coupling: q -> q - gyro phi.
    #[serde(with = "mat_serde")]
    pub gyro: DMatrix<f64>,
    pub potential: PotentialForm,
    pub kinds: Vec<VarKind>,
    pub scales: Vec<VarScale>,
}

impl HamiltonianSpec {
    pub fn dim(&self) -> usize {
        self.labels.len()
    }

    /// Assemble a spec directly from energies. `ec` in GHz.
    pub fn from_energies(
        labels: Vec<String>,
        ec: DMatrix<f64>,
        offset: DVector<f64>,
        gyro: DMatrix<f64>,
        potential: PotentialForm,
    ) -> Result<Self> {
        let n = labels.len();
        if ec.nrows() != n || ec.ncols() != n || offset.len() != n || gyro.nrows() != n || potential.quadratic.nrows() != n {
            return Err(Error::DimensionMismatch("spec parts disagree on the number of variables".into()));
        }
        if potential.cosines.iter().any(|c| c.coeffs.len() != n) {
            return Err(Error::DimensionMismatch("cosine coefficient row length".into()));
        }
        let inv_cap = &ec / ec_ghz(1.0);
        let (kinds, scales) = classify(&ec, &gyro, &potential);
        Ok(HamiltonianSpec { labels, inv_cap, ec, offset, gyro, potential, kinds, scales })
    }

    /// Cooper pair box: 4 E_C (q + n_g)^2 - E_J cos phi.
    pub fn cpb(ec: f64, ej: f64, ng: f64) -> Self {
        let mut u = PotentialForm::zeros(1);
        u.cosines.push(CosineTerm { label: "J".into(), ej, coeffs: vec![1.0], phase: 0.0, flux_weight: 1.0 });
        HamiltonianSpec::from_energies(
            vec!["phi".into()],
            DMatrix::from_element(1, 1, ec),
            DVector::from_element(1, ng),
            DMatrix::zeros(1, 1),
            u,
        )
        .expect("cpb spec")
    }

    /// Inductively shunted junction: 4 E_C q^2 + E_L phi^2 / 2 - E_J cos(phi + phi_ext).
    /// Covers the fluxonium and rf-SQUID flux qubit.
    pub fn shunted_junction(ec: f64, ej: f64, el: f64, phi_ext: f64) -> Self {
        let mut u = PotentialForm::zeros(1);
        u.quadratic[(0, 0)] = el;
        u.cosines.push(CosineTerm { label: "J".into(), ej, coeffs: vec![1.0], phase: phi_ext, flux_weight: 1.0 });
        HamiltonianSpec::from_energies(
            vec!["phi".into()],
            DMatrix::from_element(1, 1, ec),
            DVector::zeros(1),
            DMatrix::zeros(1, 1),
            u,
        )
        .expect("shunted junction spec")
    }

    /// Harmonic oscillator 4 E_C q^2 + E_L phi^2 / 2.
    pub fn harmonic(ec: f64, el: f64) -> Self {
        let mut u = PotentialForm::zeros(1);
        u.quadratic[(0, 0)] = el;
        HamiltonianSpec::from_energies(
            vec!["phi".into()],
            DMatrix::from_element(1, 1, ec),
            DVector::zeros(1),
            DMatrix::zeros(1, 1),
            u,
        )
        .expect("harmonic spec")
    }

    /// Same spec with every static cosine phase shifted by 2 pi w delta for
    /// an extra loop flux `delta` (Phi0).
    pub fn with_flux_shift(&self, delta: f64) -> Self {
        let mut s = self.clone();
        for c in &mut s.potential.cosines {
            c.phase += 2.0 * PI * c.flux_weight * delta;
        }
        s
    }

    pub fn has_even_potential(&self) -> bool {
        self.potential.linear.iter().all(|&x| x == 0.0)
            && self.offset.iter().all(|&x| x == 0.0)
            && self.gyro.iter().all(|&x| x == 0.0)
            && self.potential.cosines.iter().all(|c| {
                let s = c.phase.sin();
                s.abs() < 1e-12
            })
    }
}

fn is_integer(x: f64) -> bool {
    (x - x.round()).abs() < 1e-12
}

fn classify(ec: &DMatrix<f64>, gyro: &DMatrix<f64>, u: &PotentialForm) -> (Vec<VarKind>, Vec<VarScale>) {
    let n = ec.nrows();
    let mut kinds = Vec::with_capacity(n);
    let mut scales = Vec::with_capacity(n);
    for i in 0..n {
        let quad = (0..n).any(|j| u.quadratic[(i, j)] != 0.0);
        let lin = u.linear[i] != 0.0;
        let gyr = (0..n).any(|j| gyro[(i, j)] != 0.0 || gyro[(j, i)] != 0.0);
        let non_int = u.cosines.iter().any(|c| !is_integer(c.coeffs[i]));
        let kind = if quad || lin || gyr || non_int { VarKind::Extended } else { VarKind::Compact };
        kinds.push(kind);
        let e_c = ec[(i, i)];
        let mut el = u.quadratic[(i, i)];
        if el <= 0.0 {
            // no inductive confinement: take the junction curvature for the frame
            el = u.cosines.iter().map(|c| c.ej * c.coeffs[i] * c.coeffs[i]).sum();
        }
        if el <= 0.0 {
            el = e_c;
        }
        let phi_zpf = (2.0 * e_c / el).powf(0.25);
        scales.push(VarScale { ec: e_c, el, phi_zpf, q_zpf: 0.5 / phi_zpf, plasma: (8.0 * e_c * el).sqrt() });
    }
    (kinds, scales)
}

// ------------------------------------------------------------------ kinetic

struct Variables {
    /// graph node -> variable index
    var_of: Vec<Option<usize>>,
    /// graph node -> drive voltage
    driven: Vec<Option<f64>>,
    nodes: Vec<usize>,
}

fn variables(g: &CircuitGraph) -> Result<Variables> {
    let nn = g.nodes.len();
    let mut driven: Vec<Option<f64>> = vec![None; nn];
    for b in g.branches.iter().filter(|b| b.kind == BranchKind::VoltageSource) {
        let (node, v) = match (b.plus, b.minus) {
            (p, 0) => (p, b.value),
            (0, m) => (m, -b.value),
            _ => {
                return Err(Error::Unsupported(format!(
                    "voltage source {} must connect a node to ground",
                    b.id
                )))
            }
        };
        if driven[node].is_some() {
            return Err(Error::Unsupported(format!("node {} has two voltage sources", g.nodes[node])));
        }
        driven[node] = Some(v);
    }
    let mut var_of = vec![None; nn];
    let mut nodes = Vec::new();
    for n in 1..nn {
        if driven[n].is_none() {
            var_of[n] = Some(nodes.len());
            nodes.push(n);
        }
    }
    Ok(Variables { var_of, driven, nodes })
}

/// Capacitance matrix, source offsets and gyrator vector potential.
pub fn kinetic_form(g: &CircuitGraph, _t: &TreeDecomposition) -> Result<KineticForm> {
    let vars = variables(g)?;
    let n = vars.nodes.len();
    let mut cap = DMatrix::zeros(n, n);
    let mut offset = DVector::zeros(n);
    for b in g.branches.iter().filter(|b| b.kind == BranchKind::Capacitor) {
        let (vp, vm) = (vars.var_of[b.plus], vars.var_of[b.minus]);
        for (v, other) in [(vp, b.minus), (vm, b.plus)] {
            if let Some(i) = v {
                cap[(i, i)] += b.value;
                if let Some(volts) = vars.driven[other] {
                    offset[i] += b.value * FF * volts / (2.0 * E_CHARGE);
                }
            }
        }
        if let (Some(i), Some(j)) = (vp, vm) {
            cap[(i, j)] -= b.value;
            cap[(j, i)] -= b.value;
        }
    }
    for b in &g.branches {
        let touches_driven = vars.driven[b.plus].is_some() || vars.driven[b.minus].is_some();
        if touches_driven && (b.kind.is_inductive() || b.kind == BranchKind::CurrentSource) {
            return Err(Error::Unsupported(format!(
                "branch {} connects a voltage-driven node inductively",
                b.id
            )));
        }
    }
    let mut vec_potential = DMatrix::zeros(n, n);
    for c in &g.couplings {
        if let Coupling::Gyrator { id, port1, port2, g_siemens } = c {
            let mut u: DVector<f64> = DVector::zeros(n);
            let mut w: DVector<f64> = DVector::zeros(n);
            for (vec, (p, m)) in [(&mut u, port1), (&mut w, port2)] {
                for (node, sign) in [(*p, 1.0), (*m, -1.0)] {
                    if vars.driven[node].is_some() {
                        return Err(Error::Unsupported(format!("gyrator {id} touches a driven node")));
                    }
                    if let Some(i) = vars.var_of[node] {
                        vec[i] += sign;
                    }
                }
            }
            vec_potential += (&w * u.transpose() - &u * w.transpose()) * (g_siemens / 2.0);
        }
    }
    // the capacitive part must be positive definite on nodes that carry capacitance
    let live: Vec<usize> = (0..n).filter(|&i| cap[(i, i)] != 0.0).collect();
    let sub = DMatrix::from_fn(live.len(), live.len(), |a, b| cap[(live[a], live[b])]);
    if !live.is_empty() && sub.clone().cholesky().is_none() {
        return Err(Error::SingularCapacitance(
            "a capacitive island has no capacitive path to the reference node".into(),
        ));
    }
    Ok(KineticForm {
        labels: vars.nodes.iter().map(|&i| g.nodes[i].clone()).collect(),
        nodes: vars.nodes,
        cap_matrix: cap,
        source_offset: offset,
        vec_potential,
    })
}

// ---------------------------------------------------------------- potential

/// Inductive, Josephson and current-source energies over the node variables.
pub fn potential_form(g: &CircuitGraph, t: &TreeDecomposition) -> Result<PotentialForm> {
    let vars = variables(g)?;
    let n = vars.nodes.len();
    let chord_phase = |id: &str| 2.0 * PI * t.chord_flux.get(id).copied().unwrap_or(0.0);
    let row = |plus: usize, minus: usize| {
        let mut r: DVector<f64> = DVector::zeros(n);
        if let Some(i) = vars.var_of[plus] {
            r[i] += 1.0;
        }
        if let Some(i) = vars.var_of[minus] {
            r[i] -= 1.0;
        }
        r
    };

    let mut u = PotentialForm::zeros(n);

    // inductors, with mutual couplings folded into the inverse inductance matrix
    let inds: Vec<usize> =
        (0..g.branches.len()).filter(|&i| g.branches[i].kind == BranchKind::Inductor).collect();
    let mut lmat = DMatrix::from_fn(inds.len(), inds.len(), |a, b| {
        if a == b {
            g.branches[inds[a]].value
        } else {
            0.0
        }
    });
    for c in &g.couplings {
        if let Coupling::Mutual { id, a, b, m_nh } = c {
            let pos = |name: &str| -> Result<usize> {
                inds.iter().position(|&i| g.branches[i].id == name).ok_or_else(|| {
                    Error::Unsupported(format!("mutual {id} must couple two linear inductors"))
                })
            };
            let (ia, ib) = (pos(a)?, pos(b)?);
            let k = m_nh / (lmat[(ia, ia)] * lmat[(ib, ib)]).sqrt();
            if k.abs() >= 1.0 - 1e-12 {
                return Err(Error::PerfectCouplingSingular(id.clone()));
            }
            lmat[(ia, ib)] += m_nh;
            lmat[(ib, ia)] += m_nh;
        }
    }
    if !inds.is_empty() {
        if lmat.clone().cholesky().is_none() {
            return Err(Error::PerfectCouplingSingular("inductance matrix not positive definite".into()));
        }
        let gamma = lmat.try_inverse().ok_or_else(|| Error::PerfectCouplingSingular("inductance matrix".into()))?;
        let e = gamma * el_ghz(1.0);
        let d = DMatrix::from_fn(inds.len(), n, |a, j| {
            let b = &g.branches[inds[a]];
            row(b.plus, b.minus)[j]
        });
        let s = DVector::from_iterator(inds.len(), inds.iter().map(|&i| chord_phase(&g.branches[i].id)));
        u.quadratic += d.transpose() * &e * &d;
        u.linear += d.transpose() * (&e * &s);
        u.constant += 0.5 * s.dot(&(&e * &s));
    }

    for b in &g.branches {
        match b.kind {
            BranchKind::Josephson => {
                let r = row(b.plus, b.minus);
                let is_chord = t.chords.iter().any(|&c| g.branches[c].id == b.id);
                u.cosines.push(CosineTerm {
                    label: b.id.clone(),
                    ej: b.value,
                    coeffs: r.iter().copied().collect(),
                    phase: chord_phase(&b.id),
                    flux_weight: if is_chord && b.flux.is_some() { 1.0 } else { 0.0 },
                });
            }
            BranchKind::CurrentSource => {
                u.linear += row(b.plus, b.minus) * current_ghz_per_rad(b.value);
            }
            _ => {}
        }
    }
    Ok(u)
}

// -------------------------------------------------------------- hamiltonian

/// Legendre transform. Variables without capacitance are eliminated when the
/// potential is quadratic in them; otherwise the build is refused.
pub fn hamiltonian_spec(k: &KineticForm, u: &PotentialForm) -> Result<HamiltonianSpec> {
    let n = k.labels.len();
    let zero: Vec<usize> = (0..n).filter(|&i| k.cap_matrix[(i, i)] == 0.0).collect();
    let keep: Vec<usize> = (0..n).filter(|&i| k.cap_matrix[(i, i)] != 0.0).collect();
    for &z in &zero {
        let nonlinear = u.cosines.iter().any(|c| c.coeffs[z] != 0.0);
        let gyr = (0..n).any(|j| k.vec_potential[(z, j)] != 0.0);
        if nonlinear || gyr {
            return Err(Error::SingularCapacitance(format!(
                "node {} has no capacitance and enters a nonlinear or gyrator term; add a junction capacitance",
                k.labels[z]
            )));
        }
    }
    let pick = |m: &DMatrix<f64>, r: &[usize], c: &[usize]| DMatrix::from_fn(r.len(), c.len(), |a, b| m[(r[a], c[b])]);
    let pickv = |v: &DVector<f64>, r: &[usize]| DVector::from_iterator(r.len(), r.iter().map(|&i| v[i]));

    let mut quad = pick(&u.quadratic, &keep, &keep);
    let mut lin = pickv(&u.linear, &keep);
    let mut constant = u.constant;
    if !zero.is_empty() {
        let kzz = pick(&u.quadratic, &zero, &zero);
        let kzy = pick(&u.quadratic, &zero, &keep);
        let bz = pickv(&u.linear, &zero);
        let kzz_inv = kzz.clone().try_inverse().filter(|_| kzz.clone().cholesky().is_some()).ok_or_else(|| {
            Error::SingularCapacitance("zero-capacitance nodes are not confined by the potential".into())
        })?;
        quad -= kzy.transpose() * &kzz_inv * &kzy;
        lin -= kzy.transpose() * (&kzz_inv * &bz);
        constant -= 0.5 * bz.dot(&(&kzz_inv * &bz));
    }
    let cap = pick(&k.cap_matrix, &keep, &keep);
    if cap.clone().cholesky().is_none() {
        return Err(Error::SingularCapacitance("capacitance matrix is not positive definite".into()));
    }
    let inv_cap = inverse_real(&cap, "capacitance matrix")?;
    let ec = &inv_cap * ec_ghz(1.0);
    let gyro = pick(&k.vec_potential, &keep, &keep) * (R_Q / (2.0 * PI));
    let cosines = u
        .cosines
        .iter()
        .map(|c| CosineTerm { coeffs: keep.iter().map(|&i| c.coeffs[i]).collect(), ..c.clone() })
        .collect();
    let potential = PotentialForm { quadratic: quad, cosines, linear: lin, constant };
    let labels: Vec<String> = keep.iter().map(|&i| k.labels[i].clone()).collect();
    let offset = pickv(&k.source_offset, &keep);
    let mut spec = HamiltonianSpec::from_energies(labels, ec, offset, gyro, potential)?;
    spec.inv_cap = inv_cap;
    Ok(spec)
}

/// Parse-free convenience: decompose, attach fluxes and build the spec.
pub fn build(g: &CircuitGraph) -> Result<HamiltonianSpec> {
    let t = assign_chord_fluxes(&decompose(g, true)?, g)?;
    let k = kinetic_form(g, &t)?;
    let u = potential_form(g, &t)?;
    hamiltonian_spec(&k, &u)
}

/// Frequencies of x' = A x when a positive-definite quadratic form S is
/// conserved: S^1/2 A S^-1/2 is then antisymmetric and i times it is Hermitian.
fn conserved_form_frequencies(a: &DMatrix<f64>, s: &DMatrix<f64>, what: &str) -> Result<Vec<f64>> {
    let eig = s.clone().symmetric_eigen();
    if eig.eigenvalues.iter().any(|&l| l <= 0.0) {
        return Err(Error::Unsupported(format!("{what} is not positive definite")));
    }
    let root = |p: f64| {
        let d = DMatrix::from_diagonal(&eig.eigenvalues.map(|l| l.powf(p)));
        &eig.eigenvectors * d * eig.eigenvectors.transpose()
    };
    let x = root(0.5) * a * root(-0.5);
    let h = to_complex(&x) * C64::new(0.0, 1.0);
    let (vals, _) = eigh(&h);
    let n = vals.len() / 2;
    Ok(vals[vals.len() - n..].to_vec())
}

/// Normal-mode frequencies (GHz) of the harmonic part straight from the
/// Lagrangian in SI units, C Phi'' + 2 M Phi' + K Phi = 0. The conserved
/// energy 1/2 Phi'^T C Phi' + 1/2 Phi^T K Phi symmetrizes the first-order
/// system. Cosines are ignored.
pub fn lagrangian_frequencies(k: &KineticForm, u: &PotentialForm) -> Result<Vec<f64>> {
    let n = k.labels.len();
    // SI divided through to fF, 1/nH, mS and picoseconds to keep the pencil well scaled
    let c = k.cap_matrix.clone();
    let k_inv_nh = &u.quadratic * (PLANCK * 1e9 * (2.0 * PI / PHI0).powi(2) * 1e-9);
    let m = &k.vec_potential * 1e3;
    let cinv = inverse_real(&c, "capacitance matrix")?;
    let mut a = DMatrix::zeros(2 * n, 2 * n);
    a.view_mut((0, 0), (n, n)).copy_from(&(-(&cinv * &m) * 2.0));
    a.view_mut((0, n), (n, n)).copy_from(&(-(&cinv * &k_inv_nh)));
    a.view_mut((n, 0), (n, n)).copy_from(&DMatrix::identity(n, n));
    let mut s = DMatrix::zeros(2 * n, 2 * n);
    s.view_mut((0, 0), (n, n)).copy_from(&c);
    s.view_mut((n, n), (n, n)).copy_from(&k_inv_nh);
    let w = conserved_form_frequencies(&a, &s, "Lagrangian energy")?;
    Ok(w.iter().map(|x| x / (2.0 * PI) * 1e3).collect())
}

/// Normal-mode frequencies (GHz) from the quadratic Hamiltonian of a spec,
/// from J * Hessian in (phi, q) phase space. Cosines are ignored.
pub fn hamiltonian_frequencies(spec: &HamiltonianSpec) -> Result<Vec<f64>> {
    let n = spec.dim();
    // H = 4 (q - A phi)^T E (q - A phi) + 1/2 phi^T K phi
    let e8 = &spec.ec * 8.0;
    let a = &spec.gyro;
    let h_pp = a.transpose() * &e8 * a + &spec.potential.quadratic;
    let h_pq = -(a.transpose() * &e8);
    let mut hess = DMatrix::zeros(2 * n, 2 * n);
    hess.view_mut((0, 0), (n, n)).copy_from(&h_pp);
    hess.view_mut((0, n), (n, n)).copy_from(&h_pq);
    hess.view_mut((n, 0), (n, n)).copy_from(&h_pq.transpose());
    hess.view_mut((n, n), (n, n)).copy_from(&e8);
    let mut j = DMatrix::zeros(2 * n, 2 * n);
    j.view_mut((0, n), (n, n)).copy_from(&DMatrix::identity(n, n));
    j.view_mut((n, 0), (n, n)).copy_from(&(-DMatrix::<f64>::identity(n, n)));
    conserved_form_frequencies(&(j * &hess), &hess, "Hamiltonian")
}

// ---------------------------------------------------------- irrotational gauge

/// A loop flux Phi_ext(t) = dc + amplitude cos(omega t + phase), in Phi0 and rad/ns.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FluxDrive {
    pub dc: f64,
    pub amplitude: f64,
    pub omega: f64,
    pub phase: f64,
}

impl FluxDrive {
    pub fn constant(dc: f64) -> Self {
        FluxDrive { dc, amplitude: 0.0, omega: 0.0, phase: 0.0 }
    }

    pub fn at(&self, t: f64) -> f64 {
        self.dc + self.amplitude * (self.omega * t + self.phase).cos()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaugedSquid {
    pub spec: HamiltonianSpec,
    /// Fraction of the loop flux carried by each junction branch.
    pub weights: [f64; 2],
    /// Coefficient of phi_dot * Phi_ext_dot left in the kinetic energy (fF).
    pub kinetic_cross: f64,
    pub drive: FluxDrive,
}

/// Coefficient of the Phi_dot Phi_ext_dot cross term for a two-junction loop
/// whose branch fluxes are Phi + w_k Phi_ext.
pub fn kinetic_flux_cross(c1: f64, c2: f64, weights: [f64; 2]) -> f64 {
    c1 * weights[0] + c2 * weights[1]
}

/// Two capacitively shunted junctions in a loop to ground, with the whole loop
/// flux on the second branch (standard chord assignment).
pub fn squid_chord_spec(c1: f64, c2: f64, ej1: f64, ej2: f64, drive: FluxDrive) -> GaugedSquid {
    squid_with_weights(c1, c2, ej1, ej2, drive, [0.0, 1.0])
}

/// Split the loop flux so that the kinetic energy has no Phi_ext_dot term.
/// Weights are -C2/(C1+C2) and C1/(C1+C2); their difference is one loop flux.
pub fn irrotational_gauge(c1: f64, c2: f64, ej1: f64, ej2: f64, drive: FluxDrive) -> Result<GaugedSquid> {
    if !(c1 + c2 > 0.0) || c1 < 0.0 || c2 < 0.0 {
        return Err(Error::DegenerateGauge);
    }
    let w = [-c2 / (c1 + c2), c1 / (c1 + c2)];
    Ok(squid_with_weights(c1, c2, ej1, ej2, drive, w))
}

fn squid_with_weights(c1: f64, c2: f64, ej1: f64, ej2: f64, drive: FluxDrive, w: [f64; 2]) -> GaugedSquid {
    let mut u = PotentialForm::zeros(1);
    for (k, ej) in [ej1, ej2].into_iter().enumerate() {
        u.cosines.push(CosineTerm {
            label: format!("J{}", k + 1),
            ej,
            coeffs: vec![1.0],
            phase: 2.0 * PI * w[k] * drive.dc,
            flux_weight: w[k],
        });
    }
    let spec = HamiltonianSpec::from_energies(
        vec!["phi".into()],
        DMatrix::from_element(1, 1, ec_ghz(c1 + c2)),
        DVector::zeros(1),
        DMatrix::zeros(1, 1),
        u,
    )
    .expect("squid spec");
    GaugedSquid { spec, weights: w, kinetic_cross: kinetic_flux_cross(c1, c2, w), drive }
}

// ------------------------------------------------------ perturbative inverse

#[derive(Debug, Clone, PartialEq)]
pub struct PerturbativeInverse {
    pub approx: DMatrix<f64>,
    /// ||E|| * ||C0^-1|| in spectral norm.
    pub ratio: f64,
    /// ||C0^-1|| r^(k+1) / (1 - r).
    pub error_bound: f64,
    /// Spectral-norm distance to the exact inverse (when it exists).
    pub actual_error: Option<f64>,
}

/// Neumann-series inverse around the block-diagonal part of `c`.
pub fn perturbative_inverse(c: &DMatrix<f64>, blocks: &[Vec<usize>], order: usize) -> Result<PerturbativeInverse> {
    let n = c.nrows();
    if !(1..=2).contains(&order) {
        return Err(Error::Unsupported(format!("order {order}; only 1 and 2 are available")));
    }
    let mut block_of = vec![usize::MAX; n];
    for (b, idx) in blocks.iter().enumerate() {
        for &i in idx {
            if i >= n || block_of[i] != usize::MAX {
                return Err(Error::DimensionMismatch("partition must cover each index once".into()));
            }
            block_of[i] = b;
        }
    }
    if block_of.iter().any(|&b| b == usize::MAX) {
        return Err(Error::DimensionMismatch("partition does not cover every index".into()));
    }
    let c0 = DMatrix::from_fn(n, n, |i, j| if block_of[i] == block_of[j] { c[(i, j)] } else { 0.0 });
    let e = c - &c0;
    let c0i = inverse_real(&c0, "block-diagonal part")?;
    let nrm_c0i = op_norm(&c0i);
    let r = op_norm(&e) * nrm_c0i;
    if r >= 1.0 {
        return Err(Error::DominantPerturbation(r));
    }
    let first = &c0i * &e * &c0i;
    let mut approx = &c0i - &first;
    if order == 2 {
        approx += &first * &e * &c0i;
    }
    let actual_error = c.clone().try_inverse().map(|exact| op_norm(&(exact - &approx)));
    Ok(PerturbativeInverse {
        approx,
        ratio: r,
        error_bound: nrm_c0i * r.powi(order as i32 + 1) / (1.0 - r),
        actual_error,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netlist::parse_netlist;

    fn forms(src: &str) -> (KineticForm, PotentialForm) {
        let g = parse_netlist(src).unwrap();
        let t = assign_chord_fluxes(&decompose(&g, true).unwrap(), &g).unwrap();
        (kinetic_form(&g, &t).unwrap(), potential_form(&g, &t).unwrap())
    }

    #[test]
    fn driven_lc_capacitance_matrix() {
        // source node s behind C_s is itself a variable here; C_g couples it to the resonator
        let (k, _) = forms("C Cs 1 0 10fF\nC Cg 1 2 2fF\nC C 2 0 80fF\nL L 2 0 10nH\n");
        assert_eq!(k.cap_matrix, DMatrix::from_row_slice(2, 2, &[12.0, -2.0, -2.0, 82.0]));
    }

    #[test]
    fn transmon_resonator_matrix() {
        let (k, _) = forms("C Ct 1 0 70fF\nJ J 1 0 15GHz\nC Cc 1 2 5fF\nC Cr 2 0 400fF\nL Lr 2 0 2nH\n");
        assert_eq!(k.cap_matrix, DMatrix::from_row_slice(2, 2, &[75.0, -5.0, -5.0, 405.0]));
    }

    #[test]
    fn single_grounded_capacitor() {
        let (k, _) = forms("C C 1 0 42fF\n");
        assert_eq!(k.cap_matrix, DMatrix::from_element(1, 1, 42.0));
    }

    #[test]
    fn voltage_source_becomes_offset() {
        let (k, _) = forms("V V1 2 0 1e-4V\nC Cg 2 1 1fF\nC C 1 0 50fF\nJ J 1 0 10GHz\n");
        assert_eq!(k.labels, vec!["1".to_string()]);
        assert_eq!(k.cap_matrix[(0, 0)], 51.0);
        let expect = 1e-15 * 1e-4 / (2.0 * E_CHARGE);
        assert!((k.source_offset[0] - expect).abs() < 1e-15);
    }

    #[test]
    fn current_biased_junction_is_washboard() {
        let (_, u) = forms("C C 1 0 50fF\nJ J 1 0 10GHz\nI Is 1 0 10nA\n");
        assert_eq!(u.cosines.len(), 1);
        assert_eq!(u.cosines[0].phase, 0.0);
        assert!((u.linear[0] - current_ghz_per_rad(10e-9)).abs() < 1e-12);
    }

    #[test]
    fn mutual_pair_inverts_inductance_block() {
        let (_, u) = forms("C C1 1 0 10fF\nC C2 2 0 10fF\nL L1 1 0 2nH\nL L2 2 0 3nH\nMUT M L1 L2 1nH\n");
        let l = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 3.0]);
        let want = l.try_inverse().unwrap() * el_ghz(1.0);
        assert!((u.quadratic - want).amax() < 1e-12);
    }

    #[test]
    fn perfect_coupling_refused() {
        let g = parse_netlist("C C1 1 0 10fF\nC C2 2 0 10fF\nL L1 1 0 2nH\nL L2 2 0 2nH\nMUT M L1 L2 2nH\n").unwrap();
        let t = decompose(&g, true).unwrap();
        assert_eq!(potential_form(&g, &t).unwrap_err(), Error::PerfectCouplingSingular("M".into()));
    }

    #[test]
    fn inductive_chord_flux_shifts_argument() {
        let (_, u) = forms("FLUX f 0.25\nC C 1 0 10fF\nJ J 1 0 10GHz\nL L 1 0 5nH flux=f\n");
        let el = el_ghz(5.0);
        assert!((u.linear[0] - el * PI / 2.0).abs() < 1e-9);
        assert!((u.constant - 0.5 * el * (PI / 2.0).powi(2)).abs() < 1e-9);
    }

    #[test]
    fn lc_spec_frequency() {
        let (k, u) = forms("C C 1 0 80fF\nL L 1 0 10nH\n");
        let s = hamiltonian_spec(&k, &u).unwrap();
        let f = 1.0 / (2.0 * PI * (80e-15f64 * 10e-9).sqrt()) / 1e9;
        assert!((s.scales[0].plasma - f).abs() / f < 1e-12);
        assert!((f - 5.627).abs() < 1e-3);
        assert_eq!(s.kinds, vec![VarKind::Extended]);
    }

    #[test]
    fn cpb_is_compact() {
        let (k, u) = forms("C C 1 0 77fF\nJ J 1 0 12GHz\n");
        let s = hamiltonian_spec(&k, &u).unwrap();
        assert_eq!(s.kinds, vec![VarKind::Compact]);
        assert!((s.ec[(0, 0)] - ec_ghz(77.0)).abs() < 1e-12);
        assert!(((&s.inv_cap * &k.cap_matrix)[(0, 0)] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn quadratic_zero_capacitance_node_is_eliminated() {
        // two inductors in series through an uncapacitated middle node
        let (k, u) = forms("C C 1 0 80fF\nL La 1 2 4nH\nL Lb 2 0 6nH\n");
        let s = hamiltonian_spec(&k, &u).unwrap();
        assert_eq!(s.dim(), 1);
        assert!((s.potential.quadratic[(0, 0)] - el_ghz(10.0)).abs() < 1e-9);
    }

    #[test]
    fn nonlinear_zero_capacitance_node_is_refused() {
        let (k, u) = forms("C C 1 0 80fF\nL L 1 2 4nH\nJ J 2 0 10GHz\n");
        assert!(matches!(hamiltonian_spec(&k, &u), Err(Error::SingularCapacitance(_))));
    }

    #[test]
    fn gyrator_vector_potential_matches_two_port_form() {
        let (k, _) = forms("C C1 1 0 10fF\nC C2 2 0 10fF\nL L1 1 0 1nH\nL L2 2 0 1nH\nGYR G 1 0 2 0 0.02\n");
        // Q1 = C dPhi1 - G/2 Phi2, Q2 = C dPhi2 + G/2 Phi1
        assert_eq!(k.vec_potential[(0, 1)], -0.01);
        assert_eq!(k.vec_potential[(1, 0)], 0.01);
    }

    #[test]
    fn irrotational_weights() {
        let g = irrotational_gauge(2.0, 0.0, 1.0, 1.0, FluxDrive::constant(0.3)).unwrap();
        assert_eq!(g.weights, [0.0, 1.0]);
        let g = irrotational_gauge(2.0, 1.0, 1.0, 1.0, FluxDrive::constant(0.3)).unwrap();
        assert!(g.kinetic_cross.abs() < 1e-15);
        assert!((g.weights[1] - g.weights[0] - 1.0).abs() < 1e-15);
        assert!(squid_chord_spec(2.0, 1.0, 1.0, 1.0, FluxDrive::constant(0.3)).kinetic_cross != 0.0);
        assert_eq!(irrotational_gauge(0.0, 0.0, 1.0, 1.0, FluxDrive::constant(0.0)).unwrap_err(), Error::DegenerateGauge);
    }

    #[test]
    fn perturbative_inverse_exact_without_coupling() {
        let c = DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 4.0]);
        let p = perturbative_inverse(&c, &[vec![0], vec![1]], 1).unwrap();
        assert!(p.actual_error.unwrap() < 1e-15);
    }

    #[test]
    fn perturbative_inverse_refuses_dominant_coupling() {
        let c = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert!(matches!(
            perturbative_inverse(&c, &[vec![0], vec![1]], 1),
            Err(Error::DominantPerturbation(_))
        ));
    }

    #[test]
    fn legendre_routes_agree_for_coupled_oscillators() {
        let (k, u) = forms("C C1 1 0 60fF\nC C2 2 0 90fF\nC Cc 1 2 7fF\nL L1 1 0 8nH\nL L2 2 0 11nH\n");
        let s = hamiltonian_spec(&k, &u).unwrap();
        let a = lagrangian_frequencies(&k, &u).unwrap();
        let b = hamiltonian_frequencies(&s).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() / y < 1e-10, "{a:?} {b:?}");
        }
    }

    #[test]
    fn legendre_routes_agree_with_gyrator() {
        let (k, u) = forms("C C1 1 0 60fF\nC C2 2 0 90fF\nL L1 1 0 8nH\nL L2 2 0 11nH\nGYR G 1 0 2 0 0.01\n");
        let s = hamiltonian_spec(&k, &u).unwrap();
        let a = lagrangian_frequencies(&k, &u).unwrap();
        let b = hamiltonian_frequencies(&s).unwrap();
        // the gyrator must actually move the modes
        let (k0, u0) = forms("C C1 1 0 60fF\nC C2 2 0 90fF\nL L1 1 0 8nH\nL L2 2 0 11nH\n");
        let c = lagrangian_frequencies(&k0, &u0).unwrap();
        assert!((a[0] - c[0]).abs() > 1e-3);
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() / y < 1e-10, "{a:?} {b:?}");
        }
    }
}
