use serde::{Deserialize, Serialize};

use crate::linalg::CMat;
use crate::{Error, Result, C64};

/// Reflection off a dispersively shifted cavity, ω_{e/g} = ω_r ± χ:
/// (κ/2 + i(ω - ω_q))/(κ/2 - i(ω - ω_q)). Any consistent frequency unit.
pub fn dispersive_reflection(omega: f64, omega_r: f64, chi: f64, kappa: f64, excited: bool) -> Result<C64> {
    if !(kappa > 0.0) {
        return Err(Error::Unsupported("cavity linewidth must be positive".into()));
    }
    let wq = if excited { omega_r + chi } else { omega_r - chi };
    let d = omega - wq;
    Ok(C64::new(kappa / 2.0, d) / C64::new(kappa / 2.0, -d))
}

/// Steady intracavity photon number for a coherent tone at `omega_c`.
pub fn dispersive_photons(alpha: f64, omega_c: f64, omega_r: f64, chi: f64, kappa: f64, excited: bool) -> f64 {
    let wq = if excited { omega_r + chi } else { omega_r - chi };
    kappa * alpha * alpha / (kappa * kappa / 4.0 + (wq - omega_c).powi(2))
}

/// Output b_out = u b_in + v b_in† (or idler b_I,in† for the JRM).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AmpReport {
    pub u: C64,
    pub v: C64,
    /// Power gain 10 log10 |u|².
    pub gain_db: f64,
    /// Added noise number referred to the input; zero for the phase-sensitive DPA.
    pub added_noise: f64,
    /// Squeezing parameter arccosh |u|.
    pub squeezing: f64,
}

impl AmpReport {
    fn new(u: C64, v: C64, added_noise: f64) -> Self {
        AmpReport { u, v, gain_db: 10.0 * u.norm_sqr().log10(), added_noise, squeezing: u.norm().max(1.0).acosh() }
    }

    pub fn symplectic_defect(&self) -> f64 {
        (self.u.norm_sqr() - self.v.norm_sqr() - 1.0).abs()
    }
}

/// Degenerate parametric amplifier with pump ε and decay κ (same units).
pub fn dpa_steady_state(eps: f64, kappa: f64) -> Result<AmpReport> {
    let den = kappa * kappa - 4.0 * eps * eps;
    if den.abs() <= 1e-14 * (kappa * kappa + 4.0 * eps * eps) {
        return Err(Error::ThresholdSingularity);
    }
    let u = C64::new((kappa * kappa + 4.0 * eps * eps) / den, 0.0);
    let v = C64::new(0.0, -4.0 * eps * kappa / den);
    Ok(AmpReport::new(u, v, 0.0))
}

/// Josephson ring modulator signal output with pump λ, signal and idler
/// decay κ_S, κ_I and idler occupation `idler_nbar`.
pub fn jrm_steady_state(lambda: f64, kappa_s: f64, kappa_i: f64, idler_nbar: f64) -> Result<AmpReport> {
    let q = 2.0 * lambda / (kappa_s * kappa_i).sqrt();
    let den = 1.0 - q * q;
    if den.abs() <= 1e-14 {
        return Err(Error::ThresholdSingularity);
    }
    let u = C64::new((1.0 + q * q) / den, 0.0);
    let v = C64::new(2.0 * q / den, 0.0);
    Ok(AmpReport::new(u, v, added_noise(u, v, idler_nbar)))
}

/// Quadrature noise added by the idler, referred to the input:
/// |v/u|² (2n̄ + 1)/4. Equals (1 - |u|⁻²)/4 for a vacuum idler.
pub fn added_noise(u: C64, v: C64, nbar: f64) -> f64 {
    (v / u).norm_sqr() * (2.0 * nbar + 1.0) / 4.0
}

/// Linear Heisenberg-Langevin model dx/dt = M x + √κ b_in, b_out = √κ x - b_in,
/// over mode operators and their conjugates.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearIoModel {
    pub dynamics: CMat,
    /// √κ per component of x.
    pub coupling: Vec<f64>,
}

impl LinearIoModel {
    /// (a, a†) with squeezing Hamiltonian pump ε.
    pub fn dpa(eps: f64, kappa: f64) -> Self {
        let k = C64::new(-kappa / 2.0, 0.0);
        let dynamics = CMat::from_row_slice(2, 2, &[k, C64::new(0.0, -eps), C64::new(0.0, eps), k]);
        LinearIoModel { dynamics, coupling: vec![kappa.sqrt(); 2] }
    }

    /// (a_S, a_I†) under the three-wave-mixing pump λ.
    pub fn jrm(lambda: f64, kappa_s: f64, kappa_i: f64) -> Self {
        let l = C64::new(lambda, 0.0);
        let dynamics = CMat::from_row_slice(2, 2, &[C64::new(-kappa_s / 2.0, 0.0), l, l, C64::new(-kappa_i / 2.0, 0.0)]);
        LinearIoModel { dynamics, coupling: vec![kappa_s.sqrt(), kappa_i.sqrt()] }
    }

    /// Steady-state scattering matrix from inputs to outputs.
    pub fn scattering(&self) -> Result<CMat> {
        let n = self.dynamics.nrows();
        let k = CMat::from_diagonal(&nalgebra::DVector::from_iterator(n, self.coupling.iter().map(|&c| C64::new(c, 0.0))));
        let minv = self.dynamics.clone().try_inverse().ok_or(Error::ThresholdSingularity)?;
        Ok(-(&k * minv * &k) - CMat::identity(n, n))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reflection_on_resonance_is_one() {
        let r = dispersive_reflection(7.001, 7.0, 0.001, 0.002, true).unwrap();
        assert!((r - C64::new(1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn reflection_is_unimodular() {
        for i in 0..50 {
            let w = 6.99 + 0.0004 * i as f64;
            for e in [true, false] {
                assert!((dispersive_reflection(w, 7.0, 0.001, 0.002, e).unwrap().norm() - 1.0).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn bare_amplifiers() {
        let d = dpa_steady_state(0.0, 1.0).unwrap();
        assert_eq!((d.u, d.v), (C64::new(1.0, 0.0), C64::new(0.0, 0.0)));
        let j = jrm_steady_state(0.0, 1.0, 2.0, 0.0).unwrap();
        assert_eq!((j.u, j.v), (C64::new(1.0, 0.0), C64::new(0.0, 0.0)));
        assert_eq!(dpa_steady_state(0.5, 1.0).unwrap_err(), Error::ThresholdSingularity);
    }

    #[test]
    fn closed_forms_match_linear_solve() {
        for &(e, k) in &[(0.1, 1.0), (0.3, 0.9), (0.45, 1.0)] {
            let d = dpa_steady_state(e, k).unwrap();
            let s = LinearIoModel::dpa(e, k).scattering().unwrap();
            assert!((s[(0, 0)] - d.u).norm() < 1e-12 * d.u.norm());
            assert!((s[(0, 1)] - d.v).norm() < 1e-12 * d.u.norm());
        }
        let j = jrm_steady_state(0.2, 1.0, 0.5, 0.0).unwrap();
        let s = LinearIoModel::jrm(0.2, 1.0, 0.5).scattering().unwrap();
        assert!((s[(0, 0)] - j.u).norm() < 1e-12 * j.u.norm());
        assert!((s[(0, 1)] - j.v).norm() < 1e-12 * j.u.norm());
    }

    #[test]
    fn gain_grows_toward_threshold() {
        let g: Vec<f64> = [0.3, 0.45, 0.49, 0.499].iter().map(|&e| dpa_steady_state(e, 1.0).unwrap().gain_db).collect();
        assert!(g.windows(2).all(|w| w[1] > w[0]));
    }
}
