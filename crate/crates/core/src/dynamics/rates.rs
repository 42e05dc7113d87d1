use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::linalg::{eigh, hermitian_fn, CMat};
use crate::units::{bose, c_from_ec, kt_ghz, l_from_el, UnitMode, FF, NH, R_Q};
use crate::C64;

/// Loss and gain rates κ(1 + n̄), κ n̄ for a transition at `nu` GHz.
pub fn thermal_rates(kappa: f64, nu: f64, t_mk: f64, mode: UnitMode) -> (f64, f64) {
    let n = bose(nu, t_mk, mode);
    (kappa * (1.0 + n), kappa * n)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ThermalModel {
    TwoLevel,
    Oscillator,
}

/// Ground-state probability of a Gibbs state with level spacing `gap` GHz.
pub fn thermal_population(gap: f64, t_mk: f64, model: ThermalModel, mode: UnitMode) -> f64 {
    if t_mk <= 0.0 {
        return 1.0;
    }
    let x = (-gap / kt_ghz(t_mk, mode)).exp();
    match model {
        ThermalModel::TwoLevel => 1.0 / (1.0 + x),
        ThermalModel::Oscillator => 1.0 - x,
    }
}

/// e^{-H/kT}/Z for H in GHz.
pub fn gibbs_state(h: &CMat, t_mk: f64, mode: UnitMode) -> CMat {
    let (e, _) = eigh(h);
    let kt = kt_ghz(t_mk, mode);
    let e0 = e[0];
    let g = hermitian_fn(h, |x| C64::new((-(x - e0) / kt).exp(), 0.0));
    let z = g.trace();
    g / z
}

/// Fermi-rule relaxation rate in 1/s from |<0|φ_i - φ_j|1>|², the qubit
/// frequency in GHz and Re Y in S:
/// |M|² (Ω/2π) R_Q Re Y (coth(hν/2kT) + 1).
pub fn t1_from_admittance(m2: f64, nu: f64, re_y: f64, t_mk: f64, mode: UnitMode) -> f64 {
    let thermal = 2.0 * bose(nu, t_mk, mode) + 2.0;
    m2 * nu * 1e9 * R_Q * re_y * thermal
}

/// Admittance of a series R-C branch at angular frequency `omega` rad/s.
pub fn series_rc_admittance(r: f64, c_farad: f64, omega: f64) -> C64 {
    let jwc = C64::new(0.0, omega * c_farad);
    jwc / (C64::new(1.0, 0.0) + jwc * r)
}

/// Relaxation rate in 1/s of an LC oscillator (E_C, E_L in GHz) loaded by a
/// resistor `z0` through a coupling capacitance `cg_over_c` C.
pub fn capacitively_loaded_lc_rate(z0: f64, ec: f64, el: f64, cg_over_c: f64, t_mk: f64, mode: UnitMode) -> f64 {
    let c = c_from_ec(ec) * FF;
    let l = l_from_el(el) * NH;
    let omega = 1.0 / (l * c).sqrt();
    let re_y = series_rc_admittance(z0, cg_over_c * c, omega).re;
    let m2 = (2.0 * ec / el).sqrt();
    t1_from_admittance(m2, omega / (2.0 * PI) / 1e9, re_y, t_mk, mode)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_temperature_has_no_gain() {
        assert_eq!(thermal_rates(1.0, 5.0, 0.0, UnitMode::Exact).1, 0.0);
    }

    #[test]
    fn detailed_balance() {
        for &(nu, t) in &[(5.0, 20.0), (0.3, 50.0), (1.0, 100.0)] {
            let (km, kp) = thermal_rates(0.7, nu, t, UnitMode::Exact);
            let want = (-nu / kt_ghz(t, UnitMode::Exact)).exp();
            assert!((kp / km - want).abs() < 1e-14 * want.max(1e-300));
        }
    }

    #[test]
    fn occupation_at_20mk() {
        let n = bose(5.0, 20.0, UnitMode::Exact);
        let x: f64 = 6.626_070_15e-34 * 5e9 / (1.380_649e-23 * 0.02);
        assert!((n - 1.0 / (x.exp() - 1.0)).abs() < 1e-12 * n);
        assert!((n - 6.3e-6).abs() < 0.05 * 6.3e-6, "{n}");
    }

    #[test]
    fn rc_decay_limit() {
        let (r, c, l): (f64, f64, f64) = (1e4, 300e-15, 10e-9);
        let z = (l / c).sqrt();
        let m2 = PI * z / R_Q;
        let nu = 1.0 / (l * c).sqrt() / (2.0 * PI) / 1e9;
        let rate = t1_from_admittance(m2, nu, 1.0 / r, 0.0, UnitMode::Exact);
        assert!((rate * r * c - 1.0).abs() < 1e-12);
    }

    #[test]
    fn gibbs_populations() {
        let h = CMat::from_diagonal(&nalgebra::DVector::from_vec(vec![C64::new(0.0, 0.0), C64::new(0.3, 0.0)]));
        let g = gibbs_state(&h, 20.0, UnitMode::Paper);
        let p = thermal_population(0.3, 20.0, ThermalModel::TwoLevel, UnitMode::Paper);
        assert!((g[(0, 0)].re - p).abs() < 1e-14);
    }
}
