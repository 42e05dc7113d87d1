use crate::linalg::CMat;
use crate::{Result, C64};

use super::check_dim;

/// Truncated ladder operators. `x = a + a†`, `p = i(a† - a)`.
#[derive(Debug, Clone, PartialEq)]
pub struct OscillatorOps {
    pub a: CMat,
    pub adag: CMat,
    pub n: CMat,
    pub x: CMat,
    pub p: CMat,
}

pub fn oscillator_ops(dim: usize) -> Result<OscillatorOps> {
    check_dim(dim, 2)?;
    let a = CMat::from_fn(dim, dim, |i, j| if j == i + 1 { C64::new((j as f64).sqrt(), 0.0) } else { C64::new(0.0, 0.0) });
    let adag = a.adjoint();
    let n = CMat::from_fn(dim, dim, |i, j| if i == j { C64::new(i as f64, 0.0) } else { C64::new(0.0, 0.0) });
    let x = &a + &adag;
    let p = (&adag - &a) * C64::new(0.0, 1.0);
    Ok(OscillatorOps { a, adag, n, x, p })
}

/// Diagonal operator n over charge states `center - n_max ..= center + n_max`.
pub(crate) fn charge_diag(n_max: usize, center: i64) -> CMat {
    let d = 2 * n_max + 1;
    CMat::from_fn(d, d, |i, j| {
        if i == j {
            C64::new((center - n_max as i64 + i as i64) as f64, 0.0)
        } else {
            C64::new(0.0, 0.0)
        }
    })
}

/// e^{i c phi} on a charge basis: |n> -> |n + c>.
pub(crate) fn charge_shift(n_max: usize, c: i64) -> CMat {
    let d = 2 * n_max + 1;
    CMat::from_fn(d, d, |i, j| if i as i64 == j as i64 + c { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::commutator;

    #[test]
    fn dim_two_lowering() {
        let o = oscillator_ops(2).unwrap();
        assert_eq!(o.a[(0, 1)], C64::new(1.0, 0.0));
        assert_eq!(o.a[(0, 0)] + o.a[(1, 0)] + o.a[(1, 1)], C64::new(0.0, 0.0));
    }

    #[test]
    fn vacuum_flux_variance() {
        let o = oscillator_ops(10).unwrap();
        let x2 = &o.x * &o.x;
        assert!((x2[(0, 0)].re - 1.0).abs() < 1e-15);
    }

    #[test]
    fn commutator_truncation_corner() {
        for dim in [2, 5, 17] {
            let o = oscillator_ops(dim).unwrap();
            let c = commutator(&o.a, &o.adag);
            for i in 0..dim - 1 {
                assert!((c[(i, i)].re - 1.0).abs() < 1e-12);
            }
            assert!((c[(dim - 1, dim - 1)].re - (1.0 - dim as f64)).abs() < 1e-12);
        }
    }

    #[test]
    fn too_small() {
        assert!(oscillator_ops(1).is_err());
    }
}
