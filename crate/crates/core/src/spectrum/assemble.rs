use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::builder::HamiltonianSpec;
use crate::linalg::{eigh, hermitian_fn, kron, lanczos_lowest, CMat, CVec, Csr};
use crate::{Error, Result, C64};

use super::ops::{charge_diag, charge_shift, oscillator_ops};
use super::{BasisSpec, HermitianOperator, SpectrumResult, Storage, VarBasis, DENSE_LIMIT};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum CosineMode {
    /// cos of the truncated flux operator by spectral calculus.
    #[default]
    Spectral,
    /// Taylor series of cos through the given even order (4 or 6).
    Taylor(u32),
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct AssembleOptions {
    pub cosine: CosineMode,
    /// Force CSR storage regardless of size.
    pub force_sparse: bool,
}

/// A scaled tensor product; `None` factors are identities.
#[derive(Clone)]
struct Term {
    coeff: C64,
    factors: Vec<Option<CMat>>,
}

impl Term {
    fn scalar(n: usize, coeff: C64) -> Self {
        Term { coeff, factors: vec![None; n] }
    }

    fn local(n: usize, var: usize, op: CMat, coeff: C64) -> Self {
        let mut t = Term::scalar(n, coeff);
        t.factors[var] = Some(op);
        t
    }

    fn mul(&self, other: &Term) -> Term {
        let factors = self
            .factors
            .iter()
            .zip(&other.factors)
            .map(|(a, b)| match (a, b) {
                (None, None) => None,
                (Some(x), None) | (None, Some(x)) => Some(x.clone()),
                (Some(x), Some(y)) => Some(x * y),
            })
            .collect();
        Term { coeff: self.coeff * other.coeff, factors }
    }

    fn adjoint(&self) -> Term {
        Term { coeff: self.coeff.conj(), factors: self.factors.iter().map(|f| f.as_ref().map(|m| m.adjoint())).collect() }
    }

    fn dense(&self, dims: &[usize]) -> CMat {
        let mut out = CMat::from_element(1, 1, self.coeff);
        for (f, &d) in self.factors.iter().zip(dims) {
            let m = f.clone().unwrap_or_else(|| CMat::identity(d, d));
            out = kron(&out, &m);
        }
        out
    }

    fn triplets(&self, dims: &[usize], out: &mut Vec<(usize, usize, C64)>) {
        // sparse entries of each factor, then their Kronecker combination
        let mut acc: Vec<(usize, usize, C64)> = vec![(0, 0, self.coeff)];
        for (f, &d) in self.factors.iter().zip(dims) {
            let local: Vec<(usize, usize, C64)> = match f {
                None => (0..d).map(|i| (i, i, C64::new(1.0, 0.0))).collect(),
                Some(m) => {
                    let scale = m.iter().fold(0.0f64, |s, z| s.max(z.norm()));
                    let mut v = Vec::new();
                    for j in 0..d {
                        for i in 0..d {
                            let z = m[(i, j)];
                            if z.norm() > 1e-15 * scale {
                                v.push((i, j, z));
                            }
                        }
                    }
                    v
                }
            };
            let mut next = Vec::with_capacity(acc.len() * local.len());
            for &(i, j, a) in &acc {
                for &(k, l, b) in &local {
                    next.push((i * d + k, j * d + l, a * b));
                }
            }
            acc = next;
        }
        out.extend(acc);
    }
}

struct LocalOps {
    /// Charge operator (integer n for charge bases, q_zpf p for Fock).
    q: CMat,
    /// Flux operator for Fock bases.
    phi: Option<CMat>,
    basis: VarBasis,
    cache: HashMap<u64, CMat>,
}

impl LocalOps {
    fn new(b: &VarBasis) -> Result<Self> {
        match *b {
            VarBasis::Charge { n_max, n_g } => Ok(LocalOps {
                q: charge_diag(n_max, VarBasis::charge_center(n_g)),
                phi: None,
                basis: b.clone(),
                cache: HashMap::new(),
            }),
            VarBasis::Fock { dim, phi_zpf } => {
                let o = oscillator_ops(dim)?;
                Ok(LocalOps {
                    q: o.p * C64::new(0.5 / phi_zpf, 0.0),
                    phi: Some(o.x * C64::new(phi_zpf, 0.0)),
                    basis: b.clone(),
                    cache: HashMap::new(),
                })
            }
        }
    }

    fn phi(&self, label: &str) -> Result<&CMat> {
        self.phi.as_ref().ok_or_else(|| {
            Error::DimensionMismatch(format!("variable {label} appears in a flux term and needs a Fock basis"))
        })
    }

    /// e^{i c phi}.
    fn exp_i(&mut self, c: f64, label: &str) -> Result<CMat> {
        let key = c.to_bits();
        if let Some(m) = self.cache.get(&key) {
            return Ok(m.clone());
        }
        let m = match self.basis {
            VarBasis::Charge { n_max, .. } => {
                if (c - c.round()).abs() > 1e-12 {
                    return Err(Error::DimensionMismatch(format!(
                        "non-integer cosine coefficient on charge-basis variable {label}"
                    )));
                }
                charge_shift(n_max, c.round() as i64)
            }
            VarBasis::Fock { .. } => {
                let phi = self.phi(label)?.clone();
                hermitian_fn(&phi, |x| C64::from_polar(1.0, c * x))
            }
        };
        self.cache.insert(key, m.clone());
        Ok(m)
    }
}

pub fn assemble(spec: &HamiltonianSpec, basis: &BasisSpec) -> Result<HermitianOperator> {
    assemble_with(spec, basis, AssembleOptions::default())
}

pub fn assemble_with(spec: &HamiltonianSpec, basis: &BasisSpec, opts: AssembleOptions) -> Result<HermitianOperator> {
    let n = spec.dim();
    if basis.vars.len() != n {
        return Err(Error::DimensionMismatch(format!("spec has {n} variables, basis has {}", basis.vars.len())));
    }
    let dims = basis.dims();
    let mut locals: Vec<LocalOps> = basis.vars.iter().map(LocalOps::new).collect::<Result<_>>()?;
    let mut terms: Vec<Term> = Vec::new();
    let r = |x: f64| C64::new(x, 0.0);

    // shifted charges Q_i = q_i + n_i - sum_k A_ik phi_k
    let mut charges: Vec<Vec<Term>> = Vec::with_capacity(n);
    for i in 0..n {
        let mut qi = vec![Term::local(n, i, locals[i].q.clone(), r(1.0))];
        let ni = match basis.vars[i] {
            VarBasis::Charge { n_g, .. } => n_g,
            VarBasis::Fock { .. } => spec.offset[i],
        };
        if ni != 0.0 {
            qi.push(Term::scalar(n, r(ni)));
        }
        for k in 0..n {
            let a = spec.gyro[(i, k)];
            if a != 0.0 {
                let phi = locals[k].phi(&spec.labels[k])?.clone();
                qi.push(Term::local(n, k, phi, r(-a)));
            }
        }
        charges.push(qi);
    }
    for i in 0..n {
        for j in 0..n {
            let e = spec.ec[(i, j)];
            if e == 0.0 {
                continue;
            }
            for a in &charges[i] {
                for b in &charges[j] {
                    let mut t = a.mul(b);
                    t.coeff *= 4.0 * e;
                    terms.push(t);
                }
            }
        }
    }

    let u = &spec.potential;
    for i in 0..n {
        for j in 0..n {
            let k = u.quadratic[(i, j)];
            if k == 0.0 {
                continue;
            }
            let pi = Term::local(n, i, locals[i].phi(&spec.labels[i])?.clone(), r(1.0));
            let pj = Term::local(n, j, locals[j].phi(&spec.labels[j])?.clone(), r(0.5 * k));
            terms.push(pi.mul(&pj));
        }
        if u.linear[i] != 0.0 {
            terms.push(Term::local(n, i, locals[i].phi(&spec.labels[i])?.clone(), r(u.linear[i])));
        }
    }
    if u.constant != 0.0 {
        terms.push(Term::scalar(n, r(u.constant)));
    }

    let mut taylor_dense: Vec<CMat> = Vec::new();
    for c in &u.cosines {
        match opts.cosine {
            CosineMode::Spectral => {
                // cos(x + theta) = (E + E^dag)/2 with E = e^{i theta} prod_k e^{i c_k phi_k}
                let mut e = Term::scalar(n, C64::from_polar(1.0, c.phase));
                for (k, &ck) in c.coeffs.iter().enumerate() {
                    if ck != 0.0 {
                        e.factors[k] = Some(locals[k].exp_i(ck, &spec.labels[k])?);
                    }
                }
                let mut e1 = e.clone();
                e1.coeff *= -0.5 * c.ej;
                let mut e2 = e.adjoint();
                e2.coeff *= -0.5 * c.ej;
                terms.push(e1);
                terms.push(e2);
            }
            CosineMode::Taylor(order) => {
                if order != 4 && order != 6 {
                    return Err(Error::Unsupported(format!("Taylor order {order}; use 4 or 6")));
                }
                let total: usize = dims.iter().product();
                let mut x = CMat::zeros(total, total);
                for (k, &ck) in c.coeffs.iter().enumerate() {
                    if ck != 0.0 {
                        let phi = locals[k].phi(&spec.labels[k])?.clone();
                        x += Term::local(n, k, phi, r(ck)).dense(&dims);
                    }
                }
                taylor_dense.push(taylor_cos(&x, c.phase, order) * r(-c.ej));
            }
        }
    }

    let total: usize = dims.iter().product();
    let storage = if !opts.force_sparse && total <= DENSE_LIMIT || !taylor_dense.is_empty() {
        let mut h = CMat::zeros(total, total);
        for t in &terms {
            h += t.dense(&dims);
        }
        for m in taylor_dense {
            h += m;
        }
        // remove rounding asymmetry from products of non-commuting factors
        let h = (&h + h.adjoint()) * r(0.5);
        Storage::Dense(h)
    } else {
        let mut trip = Vec::new();
        for t in &terms {
            t.triplets(&dims, &mut trip);
        }
        let csr = Csr::from_triplets(total, trip);
        // symmetrize the same way as the dense path
        let adj: Vec<(usize, usize, C64)> = (0..total)
            .flat_map(|i| {
                let csr = &csr;
                (csr.indptr[i]..csr.indptr[i + 1]).map(move |p| (csr.indices[p], i, csr.values[p].conj()))
            })
            .chain((0..total).flat_map(|i| {
                let csr = &csr;
                (csr.indptr[i]..csr.indptr[i + 1]).map(move |p| (i, csr.indices[p], csr.values[p]))
            }))
            .map(|(i, j, z)| (i, j, z * 0.5))
            .collect();
        Storage::Sparse(Csr::from_triplets(total, adj))
    };
    Ok(HermitianOperator { dim: total, labels: spec.labels.clone(), dims, storage })
}

fn taylor_cos(x: &CMat, theta: f64, order: u32) -> CMat {
    let n = x.nrows();
    let id = CMat::identity(n, n);
    let x2 = x * x;
    let x3 = &x2 * x;
    let x4 = &x2 * &x2;
    let r = |v: f64| C64::new(v, 0.0);
    let mut cos = &id - &x2 * r(0.5) + &x4 * r(1.0 / 24.0);
    let mut sin = x - &x3 * r(1.0 / 6.0);
    if order >= 6 {
        let x5 = &x4 * x;
        let x6 = &x4 * &x2;
        cos -= x6 * r(1.0 / 720.0);
        sin += x5 * r(1.0 / 120.0);
    }
    cos * r(theta.cos()) - sin * r(theta.sin())
}

/// Lowest `k` eigenpairs; every residual must satisfy ||Hv - lv|| < 1e-9 ||H||.
pub fn diagonalize(h: &HermitianOperator, k: usize) -> Result<SpectrumResult> {
    if k > h.dim {
        return Err(Error::DimensionMismatch(format!("asked for {k} levels of a {}-dimensional operator", h.dim)));
    }
    let (vals, vecs) = match &h.storage {
        Storage::Dense(m) => {
            let (v, u) = eigh(m);
            (v[..k].to_vec(), u.columns(0, k).into_owned())
        }
        Storage::Sparse(s) => lanczos_lowest(s, k, 1e-11)?,
    };
    let norm = h.norm_bound().max(1e-300);
    for i in 0..k {
        let v: CVec = vecs.column(i).into_owned();
        let res = (h.matvec(&v) - &v * C64::new(vals[i], 0.0)).norm();
        if res > 1e-9 * norm {
            return Err(Error::NoConvergence(format!("level {i}: residual {res:.3e} against norm {norm:.3e}")));
        }
    }
    Ok(SpectrumResult {
        eigenvalues: vals,
        eigenvectors: Some(vecs),
        dims: h.dims.clone(),
        truncation_error: f64::NAN,
        escalations: 0,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveOptions {
    /// Allowed shift (GHz) of the returned levels when truncations grow by 4.
    pub tol: f64,
    pub max_escalations: usize,
    /// Escalation stops with `NoConvergence` once the grown basis would exceed this many states.
    pub max_total_dim: usize,
    pub assemble: AssembleOptions,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions { tol: 1e-6, max_escalations: 3, max_total_dim: 1 << 14, assemble: AssembleOptions::default() }
    }
}

/// Assemble and diagonalize with a truncation check: the run is repeated with
/// every local dimension grown by 4, and on a failed check all truncations
/// are doubled (at most `max_escalations` times).
pub fn solve(spec: &HamiltonianSpec, basis: &BasisSpec, k: usize, opts: SolveOptions) -> Result<SpectrumResult> {
    let mut b = basis.clone();
    let mut last_err = f64::NAN;
    for esc in 0..=opts.max_escalations {
        let h = assemble_with(spec, &b, opts.assemble)?;
        let mut r = diagonalize(&h, k)?;
        let big = assemble_with(spec, &b.grown(4), opts.assemble)?;
        let rb = diagonalize(&big, k)?;
        let err = r.eigenvalues.iter().zip(&rb.eigenvalues).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        r.truncation_error = err;
        r.escalations = esc;
        if err <= opts.tol {
            return Ok(r);
        }
        last_err = err;
        if esc == opts.max_escalations {
            break;
        }
        b = b.doubled();
        let total: usize = b.grown(4).dims().iter().product();
        if total > opts.max_total_dim {
            return Err(Error::NoConvergence(format!(
                "truncation shift {err:.3e} GHz above {:.3e}; the next escalation needs {total} states (limit {}), set the truncation explicitly",
                opts.tol, opts.max_total_dim
            )));
        }
    }
    Err(Error::NoConvergence(format!(
        "truncation shift {last_err:.3e} GHz above {:.3e} after {} escalations",
        opts.tol, opts.max_escalations
    )))
}

fn embed(basis: &BasisSpec, var: usize, op: CMat) -> CMat {
    let dims = basis.dims();
    let mut t = Term::scalar(dims.len(), C64::new(1.0, 0.0));
    t.factors[var] = Some(op);
    t.dense(&dims)
}

/// Charge operator of one variable on the full space (integer n on charge bases).
pub fn charge_operator(basis: &BasisSpec, var: usize) -> Result<CMat> {
    let l = LocalOps::new(&basis.vars[var])?;
    Ok(embed(basis, var, l.q))
}

/// Flux operator of one variable on the full space; needs a Fock basis.
pub fn flux_operator(basis: &BasisSpec, var: usize) -> Result<CMat> {
    let l = LocalOps::new(&basis.vars[var])?;
    let phi = l.phi(&format!("#{var}"))?.clone();
    Ok(embed(basis, var, phi))
}

/// phi -> -phi, q -> -q: (-1)^n on Fock factors and |n> -> |-n> on charge
/// factors (which must be centered on n = 0).
pub fn parity_operator(basis: &BasisSpec) -> Result<CMat> {
    let mut out = CMat::from_element(1, 1, C64::new(1.0, 0.0));
    for v in &basis.vars {
        let local = match *v {
            VarBasis::Fock { dim, .. } => CMat::from_fn(dim, dim, |i, j| {
                if i == j {
                    C64::new(if i % 2 == 0 { 1.0 } else { -1.0 }, 0.0)
                } else {
                    C64::new(0.0, 0.0)
                }
            }),
            VarBasis::Charge { n_max, n_g } => {
                if VarBasis::charge_center(n_g) != 0 {
                    return Err(Error::DimensionMismatch("charge parity needs a basis centered on n = 0".into()));
                }
                let d = 2 * n_max + 1;
                CMat::from_fn(d, d, |i, j| if i + j == d - 1 { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) })
            }
        };
        out = kron(&out, &local);
    }
    Ok(out)
}
