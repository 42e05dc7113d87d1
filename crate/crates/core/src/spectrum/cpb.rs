use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::linalg::{eigh, jacobi_eigh, solve_cyclic, CMat, CVec};
use crate::{Error, Result, C64};

use super::{HermitianOperator, VarBasis};

/// Charge-basis Cooper pair box, diagonal 4 E_C (n + n_g)^2 and hopping -E_J/2.
pub fn cpb_matrix(ec: f64, ej: f64, ng: f64, n_max: usize) -> Result<HermitianOperator> {
    if n_max < 10 {
        return Err(Error::TruncationTooSmall(n_max));
    }
    let d = 2 * n_max + 1;
    let n0 = VarBasis::charge_center(ng) - n_max as i64;
    let m = CMat::from_fn(d, d, |i, j| {
        if i == j {
            let n = (n0 + i as i64) as f64;
            C64::new(4.0 * ec * (n + ng) * (n + ng), 0.0)
        } else if i.abs_diff(j) == 1 {
            C64::new(-ej / 2.0, 0.0)
        } else {
            C64::new(0.0, 0.0)
        }
    });
    Ok(HermitianOperator::dense(vec!["phi".into()], vec![d], m))
}

pub fn cpb_levels(ec: f64, ej: f64, ng: f64, n_max: usize) -> Result<Vec<f64>> {
    let h = cpb_matrix(ec, ej, ng, n_max)?;
    Ok(eigh(&h.to_dense()).0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DuffingParams {
    /// GHz.
    pub omega: f64,
    /// GHz.
    pub delta: f64,
    /// Set when E_J/E_C < 10, where the expansion is unreliable.
    pub advisory: bool,
}

pub fn duffing_params(ec: f64, ej: f64) -> DuffingParams {
    DuffingParams { omega: (8.0 * ej * ec).sqrt() - ec, delta: -ec, advisory: ej / ec < 10.0 }
}

/// Lowest `k` levels of 4 E_C (-i d/dphi + n_g)^2 - E_J cos phi on a periodic
/// grid of `grid` points. The offset charge enters as a Peierls phase on the
/// hopping, which is the gauge image of the twisted boundary condition.
pub fn phi_grid_levels(ec: f64, ej: f64, ng: f64, k: usize, grid: usize) -> Result<Vec<f64>> {
    if grid < 8 || k == 0 || k > grid {
        return Err(Error::DimensionMismatch(format!("grid {grid} for {k} levels")));
    }
    let h = 2.0 * PI / grid as f64;
    let t = 4.0 * ec / (h * h);
    let hop = C64::from_polar(-t, ng * h);
    // shift below the spectrum: H >= -E_J because the discrete kinetic part is PSD
    let sigma = -ej.abs() - ec.abs() - 1.0;
    let diag: Vec<f64> = (0..grid).map(|j| 2.0 * t - ej * (j as f64 * h).cos()).collect();
    let apply = |x: &CVec| -> CVec {
        CVec::from_fn(grid, |j, _| {
            let jp = (j + 1) % grid;
            let jm = (j + grid - 1) % grid;
            x[j] * diag[j] + hop * x[jp] + hop.conj() * x[jm]
        })
    };
    let sub = vec![hop.conj(); grid - 1];
    let sup = vec![hop; grid - 1];
    let dshift: Vec<C64> = diag.iter().map(|&d| C64::new(d - sigma, 0.0)).collect();
    let solve = |x: &CVec| -> CVec {
        let r: Vec<C64> = x.iter().copied().collect();
        CVec::from_vec(solve_cyclic(&sub, &dshift, &sup, hop.conj(), hop, &r))
    };

    // shift-invert subspace iteration; low plane waves are a good start
    let b = (k + 4).min(grid);
    let mut x = CMat::from_fn(grid, b, |j, c| {
        let m = ((c + 1) / 2) as f64 * if c % 2 == 0 { 1.0 } else { -1.0 };
        let base = C64::from_polar(1.0, m * j as f64 * h);
        // tiny deterministic perturbation breaks exact symmetry
        base + C64::new(1e-3 * ((j * (c + 3) * 2654435761usize) % 1000) as f64 / 1000.0, 0.0)
    });
    // eigenvalues cannot be resolved below roundoff on the operator norm
    let floor = 1e-14 * (4.0 * t + ej.abs());
    let mut prev = vec![f64::INFINITY; k];
    for _ in 0..2000 {
        let mut y = CMat::zeros(grid, b);
        for c in 0..b {
            y.set_column(c, &solve(&x.column(c).clone_owned()));
        }
        let q = y.qr().q();
        let mut hq = CMat::zeros(grid, b);
        for c in 0..b {
            hq.set_column(c, &apply(&q.column(c).clone_owned()));
        }
        let small = q.adjoint() * &hq;
        let small = (&small + small.adjoint()) * C64::new(0.5, 0.0);
        let (vals, vecs) = jacobi_eigh(&small);
        x = &q * vecs;
        let done = (0..k).all(|i| (vals[i] - prev[i]).abs() <= floor);
        prev = vals[..k].to_vec();
        if done {
            return Ok(prev);
        }
    }
    Err(Error::NoConvergence("phi-grid subspace iteration".into()))
}

/// Level `m` from the grid oracle, Richardson-extrapolated between `grid` and
/// `grid / 2` to cancel the leading h^2 discretization error.
pub fn phi_grid_oracle(ec: f64, ej: f64, ng: f64, m: usize, grid: usize) -> Result<f64> {
    if grid < 256 {
        return Err(Error::TruncationTooSmall(grid));
    }
    let fine = phi_grid_levels(ec, ej, ng, m + 1, grid)?;
    let coarse = phi_grid_levels(ec, ej, ng, m + 1, grid / 2)?;
    Ok((4.0 * fine[m] - coarse[m]) / 3.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn free_rotor_is_diagonal() {
        let e = cpb_levels(1.0, 0.0, 0.2, 10).unwrap();
        let mut want: Vec<f64> = (-10..=10).map(|n| 4.0 * (n as f64 + 0.2).powi(2)).collect();
        want.sort_by(f64::total_cmp);
        for (a, b) in e.iter().zip(&want) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn truncation_guard() {
        assert_eq!(cpb_matrix(1.0, 1.0, 0.0, 9).unwrap_err(), Error::TruncationTooSmall(9));
    }

    #[test]
    fn duffing_closed_form() {
        let d = duffing_params(0.25, 12.5);
        assert!((d.omega - 4.75).abs() < 1e-12);
        assert_eq!(d.delta, -0.25);
        assert!(!d.advisory);
    }

    #[test]
    fn grid_oracle_free_rotor_ground() {
        assert!(phi_grid_oracle(1.0, 0.0, 0.0, 0, 256).unwrap().abs() < 1e-9);
    }

    #[test]
    fn grid_oracle_matches_charge_basis() {
        for &(ec, ej, ng) in &[(1.0, 1.0, 0.5), (1.0, 50.0, 0.25), (0.3, 4.0, 0.1)] {
            let e = cpb_levels(ec, ej, ng, 15).unwrap();
            for m in 0..3 {
                let g = phi_grid_oracle(ec, ej, ng, m, 2048).unwrap();
                let rel = (g - e[m]).abs() / e[m].abs().max(ec);
                assert!(rel < 1e-8, "{ec} {ej} {ng} level {m}: {g} vs {}", e[m]);
            }
        }
    }
}
