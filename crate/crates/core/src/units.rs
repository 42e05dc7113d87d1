//! Physical constants (exact SI values) and the reduced energy scales.

use std::f64::consts::PI;

pub const PLANCK: f64 = 6.626_070_15e-34;
pub const HBAR: f64 = PLANCK / (2.0 * PI);
pub const E_CHARGE: f64 = 1.602_176_634e-19;
pub const K_B: f64 = 1.380_649e-23;
/// Superconducting flux quantum h/2e in Wb.
pub const PHI0: f64 = PLANCK / (2.0 * E_CHARGE);
/// Resistance quantum h/(2e)^2 in ohm.
pub const R_Q: f64 = PLANCK / (4.0 * E_CHARGE * E_CHARGE);

pub const FF: f64 = 1e-15;
pub const NH: f64 = 1e-9;
pub const GHZ: f64 = 1e9;

/// Charging energy e^2/2C in GHz for a capacitance in fF.
pub fn ec_ghz(c_ff: f64) -> f64 {
    E_CHARGE * E_CHARGE / (2.0 * c_ff * FF * PLANCK) / GHZ
}

/// Capacitance in fF with charging energy `ec` GHz.
pub fn c_from_ec(ec: f64) -> f64 {
    E_CHARGE * E_CHARGE / (2.0 * ec * GHZ * PLANCK) / FF
}

/// Inductive energy (Phi0/2pi)^2/L in GHz for an inductance in nH.
pub fn el_ghz(l_nh: f64) -> f64 {
    let r = PHI0 / (2.0 * PI);
    r * r / (l_nh * NH * PLANCK) / GHZ
}

/// Inductance in nH with inductive energy `el` GHz.
pub fn l_from_el(el: f64) -> f64 {
    let r = PHI0 / (2.0 * PI);
    r * r / (el * GHZ * PLANCK) / NH
}

/// Josephson energy in GHz from a critical current in A.
pub fn ej_from_ic(ic: f64) -> f64 {
    PHI0 * ic / (2.0 * PI * PLANCK) / GHZ
}

/// Josephson inductance in nH for E_J in GHz (same map as an inductor).
pub fn lj_from_ej(ej: f64) -> f64 {
    l_from_el(ej)
}

/// Energy in GHz of a current source term per radian of reduced flux.
pub fn current_ghz_per_rad(i_amp: f64) -> f64 {
    i_amp * PHI0 / (2.0 * PI * PLANCK) / GHZ
}

/// Reduced flux zero-point amplitude for a mode of impedance `z` ohm.
pub fn phi_zpf_from_impedance(z: f64) -> f64 {
    (PI * z / R_Q).sqrt()
}

/// How temperatures are turned into thermal energies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
pub enum UnitMode {
    /// CODATA h and k_B.
    #[default]
    Exact,
    /// Rounded conversion kT/h = T/25 GHz per mK (0.8 GHz at 20 mK).
    Paper,
}

/// k_B T / h in GHz for a temperature in mK.
pub fn kt_ghz(t_mk: f64, mode: UnitMode) -> f64 {
    match mode {
        UnitMode::Exact => K_B * t_mk * 1e-3 / PLANCK / GHZ,
        UnitMode::Paper => t_mk / 25.0,
    }
}

/// Bose occupation for a mode at `nu` GHz.
pub fn bose(nu: f64, t_mk: f64, mode: UnitMode) -> f64 {
    if t_mk <= 0.0 {
        return 0.0;
    }
    let x = nu / kt_ghz(t_mk, mode);
    1.0 / x.exp_m1()
}
