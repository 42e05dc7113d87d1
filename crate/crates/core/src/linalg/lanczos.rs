use super::{eigh, CMat, CVec, Csr};
use crate::{Error, Result, C64};

/// Lowest `k` eigenpairs of a sparse Hermitian matrix by Lanczos with full
/// reorthogonalization. The Krylov space grows until the Ritz residual bound
/// of every wanted pair falls below `tol * ||H||`.
pub fn lanczos_lowest(h: &Csr, k: usize, tol: f64) -> Result<(Vec<f64>, CMat)> {
    let n = h.n;
    if k == 0 {
        return Ok((vec![], CMat::zeros(n, 0)));
    }
    let hnorm = h.inf_norm().max(1e-300);
    let max_m = n.min(3000);
    let mut basis: Vec<CVec> = Vec::new();
    let mut alpha: Vec<f64> = Vec::new();
    let mut beta: Vec<f64> = Vec::new();
    // deterministic, non-symmetric start vector
    let mut q = CVec::from_iterator(
        n,
        (0..n).map(|i| C64::new(1.0 + 0.37 * ((i * 7919) % 101) as f64 / 101.0, 0.0)),
    );
    q /= C64::new(q.norm(), 0.0);
    let check_every = 10;
    loop {
        let m = basis.len();
        basis.push(q.clone());
        let mut w = h.matvec(&q);
        let a = q.dotc(&w).re;
        alpha.push(a);
        w -= &q * C64::new(a, 0.0);
        if m > 0 {
            w -= &basis[m - 1] * C64::new(beta[m - 1], 0.0);
        }
        for _ in 0..2 {
            for v in &basis {
                let proj = v.dotc(&w);
                w -= v * proj;
            }
        }
        let b = w.norm();
        let size = basis.len();
        let invariant = b <= 1e-14 * hnorm;
        if size >= k && (size % check_every == 0 || invariant || size == max_m) {
            let t = tridiag(&alpha, &beta);
            let (theta, s) = eigh(&t);
            let conv = (0..k.min(size)).all(|i| (b * s[(size - 1, i)].norm()) <= tol * hnorm);
            if conv || invariant || size == max_m {
                if !(conv || invariant) {
                    return Err(Error::NoConvergence(format!("lanczos stalled at {size} vectors")));
                }
                let kk = k.min(size);
                let mut vecs = CMat::zeros(n, kk);
                for i in 0..kk {
                    let mut col = CVec::zeros(n);
                    for (j, v) in basis.iter().enumerate() {
                        col += v * s[(j, i)];
                    }
                    let nrm = col.norm();
                    col /= C64::new(nrm, 0.0);
                    super::fix_phase(&mut col);
                    vecs.set_column(i, &col);
                }
                return Ok((theta[..kk].to_vec(), vecs));
            }
        }
        if invariant {
            return Err(Error::NoConvergence("krylov space exhausted".into()));
        }
        beta.push(b);
        q = w / C64::new(b, 0.0);
    }
}

fn tridiag(alpha: &[f64], beta: &[f64]) -> CMat {
    let m = alpha.len();
    let mut t = CMat::zeros(m, m);
    for i in 0..m {
        t[(i, i)] = C64::new(alpha[i], 0.0);
        if i + 1 < m {
            t[(i, i + 1)] = C64::new(beta[i], 0.0);
            t[(i + 1, i)] = C64::new(beta[i], 0.0);
        }
    }
    t
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lowest_of_diagonal_chain() {
        let n = 300;
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, C64::new(2.0, 0.0)));
            if i + 1 < n {
                t.push((i, i + 1, C64::new(-1.0, 0.0)));
                t.push((i + 1, i, C64::new(-1.0, 0.0)));
            }
        }
        let h = Csr::from_triplets(n, t);
        let (vals, _) = lanczos_lowest(&h, 3, 1e-10).unwrap();
        for (k, v) in vals.iter().enumerate() {
            let exact = 2.0 - 2.0 * (std::f64::consts::PI * (k + 1) as f64 / (n + 1) as f64).cos();
            assert!((v - exact).abs() < 1e-9, "{v} {exact}");
        }
    }
}
