use crate::C64;

/// Thomas algorithm for a tridiagonal system. `sub[i]` couples row i+1 to
/// column i, `sup[i]` couples row i to column i+1.
pub fn solve_tridiagonal(sub: &[C64], diag: &[C64], sup: &[C64], rhs: &[C64]) -> Vec<C64> {
    let n = diag.len();
    let mut cp = vec![C64::new(0.0, 0.0); n];
    let mut dp = vec![C64::new(0.0, 0.0); n];
    cp[0] = if n > 1 { sup[0] / diag[0] } else { C64::new(0.0, 0.0) };
    dp[0] = rhs[0] / diag[0];
    for i in 1..n {
        let den = diag[i] - sub[i - 1] * cp[i - 1];
        if i + 1 < n {
            cp[i] = sup[i] / den;
        }
        dp[i] = (rhs[i] - sub[i - 1] * dp[i - 1]) / den;
    }
    let mut x = vec![C64::new(0.0, 0.0); n];
    x[n - 1] = dp[n - 1];
    for i in (0..n - 1).rev() {
        x[i] = dp[i] - cp[i] * x[i + 1];
    }
    x
}

/// Periodic tridiagonal system with corner entries `top_right` (row 0, column
/// n-1) and `bottom_left` (row n-1, column 0), via Sherman-Morrison.
pub fn solve_cyclic(
    sub: &[C64],
    diag: &[C64],
    sup: &[C64],
    top_right: C64,
    bottom_left: C64,
    rhs: &[C64],
) -> Vec<C64> {
    let n = diag.len();
    let gamma = -diag[0];
    let mut bb = diag.to_vec();
    bb[0] = diag[0] - gamma;
    bb[n - 1] = diag[n - 1] - bottom_left * top_right / gamma;
    let x = solve_tridiagonal(sub, &bb, sup, rhs);
    let mut u = vec![C64::new(0.0, 0.0); n];
    u[0] = gamma;
    u[n - 1] = bottom_left;
    let z = solve_tridiagonal(sub, &bb, sup, &u);
    let fact = (x[0] + top_right * x[n - 1] / gamma) / (C64::new(1.0, 0.0) + z[0] + top_right * z[n - 1] / gamma);
    x.iter().zip(&z).map(|(a, b)| a - fact * b).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cyclic_solve_residual() {
        let n = 9;
        let sub: Vec<C64> = (0..n - 1).map(|i| C64::new(-1.0, 0.1 * i as f64)).collect();
        let sup: Vec<C64> = (0..n - 1).map(|i| C64::new(-1.0, -0.2 * i as f64)).collect();
        let diag: Vec<C64> = (0..n).map(|i| C64::new(5.0 + i as f64, 0.0)).collect();
        let tr = C64::new(-0.5, 0.3);
        let bl = C64::new(-0.7, -0.1);
        let rhs: Vec<C64> = (0..n).map(|i| C64::new(i as f64, 1.0)).collect();
        let x = solve_cyclic(&sub, &diag, &sup, tr, bl, &rhs);
        for i in 0..n {
            let mut r = diag[i] * x[i];
            if i > 0 {
                r += sub[i - 1] * x[i - 1];
            }
            if i + 1 < n {
                r += sup[i] * x[i + 1];
            }
            if i == 0 {
                r += tr * x[n - 1];
            }
            if i == n - 1 {
                r += bl * x[0];
            }
            assert!((r - rhs[i]).norm() < 1e-12);
        }
    }
}
