use super::{sort_eigen, CMat};
use crate::C64;

/// Cyclic Jacobi diagonalization of a Hermitian matrix.
///
/// Slow (O(n^3) per sweep) but written from scratch, so it serves as an
/// independent cross-check of the LAPACK-style route in [`super::eigh`].
pub fn jacobi_eigh(a: &CMat) -> (Vec<f64>, CMat) {
    let n = a.nrows();
    let mut m = (a + a.adjoint()) * C64::new(0.5, 0.0);
    let mut v = CMat::identity(n, n);
    let scale = m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt().max(1e-300);
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| m[(i, j)].norm_sqr())
            .sum::<f64>()
            .sqrt();
        if off <= 1e-15 * scale {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = m[(p, q)];
                let r = apq.norm();
                if r <= 1e-300 {
                    continue;
                }
                let phase = apq / r;
                let app = m[(p, p)].re;
                let aqq = m[(q, q)].re;
                let theta = (aqq - app) / (2.0 * r);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let cs = 1.0 / (1.0 + t * t).sqrt();
                let sn = t * cs;
                // G = D R with D = diag(1, conj(phase)) on (p, q)
                let g_pp = C64::new(cs, 0.0);
                let g_pq = C64::new(sn, 0.0);
                let g_qp = -phase.conj() * sn;
                let g_qq = phase.conj() * cs;
                for k in 0..n {
                    let mkp = m[(k, p)];
                    let mkq = m[(k, q)];
                    m[(k, p)] = mkp * g_pp + mkq * g_qp;
                    m[(k, q)] = mkp * g_pq + mkq * g_qq;
                }
                for k in 0..n {
                    let mpk = m[(p, k)];
                    let mqk = m[(q, k)];
                    m[(p, k)] = g_pp.conj() * mpk + g_qp.conj() * mqk;
                    m[(q, k)] = g_pq.conj() * mpk + g_qq.conj() * mqk;
                }
                m[(p, q)] = C64::new(0.0, 0.0);
                m[(q, p)] = C64::new(0.0, 0.0);
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = vkp * g_pp + vkq * g_qp;
                    v[(k, q)] = vkp * g_pq + vkq * g_qq;
                }
            }
        }
    }
    let vals: Vec<f64> = (0..n).map(|i| m[(i, i)].re).collect();
    sort_eigen(vals, v, n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{eigh, max_abs};

    #[test]
    fn matches_dense_route_on_fixed_matrix() {
        let n = 6;
        let mut a = CMat::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                let x = ((i * 7 + j * 3) % 5) as f64 - 2.0;
                let y = ((i * 2 + j * 5) % 3) as f64 - 1.0;
                a[(i, j)] = C64::new(x, y);
            }
        }
        let a = &a + a.adjoint();
        let (l1, v1) = jacobi_eigh(&a);
        let (l2, _) = eigh(&a);
        for (x, y) in l1.iter().zip(&l2) {
            assert!((x - y).abs() < 1e-12);
        }
        let d = CMat::from_diagonal(&nalgebra::DVector::from_iterator(
            n,
            l1.iter().map(|&x| C64::new(x, 0.0)),
        ));
        assert!(max_abs(&(&a * &v1 - &v1 * d)) < 1e-11);
    }
}
