//! Dense and sparse complex linear algebra used across the crate.

mod jacobi;
mod lanczos;
mod sparse;
mod tridiag;

pub use jacobi::jacobi_eigh;
pub use lanczos::lanczos_lowest;
pub use sparse::Csr;
pub use tridiag::{solve_cyclic, solve_tridiagonal};

use nalgebra::{DMatrix, DVector};

use crate::{Error, Result, C64};

pub type CMat = DMatrix<C64>;
pub type CVec = DVector<C64>;

pub fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

pub fn to_complex(m: &DMatrix<f64>) -> CMat {
    m.map(c)
}

pub fn kron(a: &CMat, b: &CMat) -> CMat {
    a.kronecker(b)
}

pub fn dagger(a: &CMat) -> CMat {
    a.adjoint()
}

pub fn commutator(a: &CMat, b: &CMat) -> CMat {
    a * b - b * a
}

pub fn max_abs(a: &CMat) -> f64 {
    a.iter().fold(0.0, |m, z| m.max(z.norm()))
}

pub fn hermiticity_defect(a: &CMat) -> f64 {
    max_abs(&(a - a.adjoint()))
}

/// Induced infinity norm (max absolute row sum); bounds the spectral radius.
pub fn inf_norm(a: &CMat) -> f64 {
    (0..a.nrows())
        .map(|i| a.row(i).iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Eigen-decomposition of a Hermitian matrix with ascending eigenvalues.
/// Real-symmetric input takes the cheaper real path.
pub fn eigh(a: &CMat) -> (Vec<f64>, CMat) {
    let n = a.nrows();
    let real = a.iter().all(|z| z.im == 0.0);
    let (vals, vecs): (Vec<f64>, CMat) = if real {
        let m = a.map(|z| z.re);
        let m = (&m + m.transpose()) * 0.5;
        let se = m.symmetric_eigen();
        (se.eigenvalues.iter().copied().collect(), se.eigenvectors.map(c))
    } else {
        let h = (a + a.adjoint()) * c(0.5);
        let se = h.symmetric_eigen();
        (se.eigenvalues.iter().copied().collect(), se.eigenvectors)
    };
    sort_eigen(vals, vecs, n)
}

pub(crate) fn sort_eigen(vals: Vec<f64>, vecs: CMat, n: usize) -> (Vec<f64>, CMat) {
    let mut idx: Vec<usize> = (0..vals.len()).collect();
    idx.sort_by(|&i, &j| vals[i].total_cmp(&vals[j]).then(i.cmp(&j)));
    let sorted: Vec<f64> = idx.iter().map(|&i| vals[i]).collect();
    let mut v = CMat::zeros(n, idx.len());
    for (k, &i) in idx.iter().enumerate() {
        let mut col = vecs.column(i).clone_owned();
        fix_phase(&mut col);
        v.set_column(k, &col);
    }
    (sorted, v)
}

/// Make the largest-magnitude component real and positive.
pub fn fix_phase(v: &mut CVec) {
    let mut best = 0;
    let mut bm = -1.0;
    for (i, z) in v.iter().enumerate() {
        // strict comparison with a tiny margin keeps ties on the first index
        if z.norm() > bm * (1.0 + 1e-9) {
            bm = z.norm();
            best = i;
        }
    }
    if bm > 0.0 {
        let ph = v[best] / bm;
        let conj = ph.conj();
        for z in v.iter_mut() {
            *z *= conj;
        }
    }
}

/// Hermitian matrix function: V f(Λ) V†.
pub fn hermitian_fn(a: &CMat, f: impl Fn(f64) -> C64) -> CMat {
    let (vals, vecs) = eigh(a);
    let d = CMat::from_diagonal(&CVec::from_iterator(vals.len(), vals.iter().map(|&x| f(x))));
    &vecs * d * vecs.adjoint()
}

/// Inverse of a real matrix, failing on numerical singularity.
pub fn inverse_real(m: &DMatrix<f64>, what: &str) -> Result<DMatrix<f64>> {
    let n = m.nrows();
    if n == 0 {
        return Ok(DMatrix::zeros(0, 0));
    }
    let lu = m.clone().lu();
    let inv = lu
        .try_inverse()
        .ok_or_else(|| Error::SingularCapacitance(what.to_string()))?;
    let scale = m.amax().max(1e-300) * inv.amax();
    if !scale.is_finite() || scale > 1e14 {
        return Err(Error::SingularCapacitance(what.to_string()));
    }
    Ok(inv)
}

/// Spectral norm of a real symmetric matrix.
pub fn sym_norm(m: &DMatrix<f64>) -> f64 {
    if m.nrows() == 0 {
        return 0.0;
    }
    m.clone()
        .symmetric_eigen()
        .eigenvalues
        .iter()
        .fold(0.0, |a: f64, &b| a.max(b.abs()))
}

/// Spectral norm of a general real matrix via singular values.
pub fn op_norm(m: &DMatrix<f64>) -> f64 {
    if m.nrows() == 0 {
        return 0.0;
    }
    m.clone().singular_values().iter().fold(0.0, |a: f64, &b| a.max(b))
}
