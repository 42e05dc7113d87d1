use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::linalg::CMat;
use crate::spectrum::oscillator_ops;
use crate::units::{E_CHARGE, FF};
use crate::{Error, Result, C64};

use super::lindblad::{evolve, Drive, LindbladModel, Trajectory};

/// Voltage-driven Duffing transmon, frequencies in GHz, C_d in fF, volts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DriveParams {
    /// Ω/2π.
    pub omega: f64,
    /// δ/2π, negative for a transmon.
    pub delta: f64,
    pub cd_ff: f64,
    pub v_max: f64,
    /// Drive carrier Ω_d/2π.
    pub drive: f64,
}

/// Drive strength ℰ/2π in GHz: 4 E_C (E_J/2E_C)^{1/4} C_d v/2e with E_C = -δ
/// and E_J fixed by Ω = √(8 E_J E_C) - E_C.
pub fn transmon_drive_amplitude(omega: f64, delta: f64, cd_ff: f64, v: f64) -> Result<f64> {
    let ec = -delta;
    if !(ec > 0.0) || !(omega > 0.0) {
        return Err(Error::Unsupported("drive needs Ω > 0 and a negative anharmonicity".into()));
    }
    let ej = (omega + ec).powi(2) / (8.0 * ec);
    Ok(4.0 * ec * (ej / (2.0 * ec)).powf(0.25) * cd_ff * FF * v / (2.0 * E_CHARGE))
}

/// Duffing model with the lab-frame drive ℰ cos(Ω_d t) i(b† - b).
pub fn driven_duffing(p: &DriveParams, dim: usize) -> Result<LindbladModel> {
    let o = oscillator_ops(dim)?;
    let id = CMat::identity(dim, dim);
    let h = &o.n * C64::new(p.omega, 0.0) + &o.n * (&o.n - &id) * C64::new(p.delta / 2.0, 0.0);
    let amp = transmon_drive_amplitude(p.omega, p.delta, p.cd_ff, p.v_max)?;
    let op = (&o.adag - &o.a) * C64::new(0.0, 1.0);
    Ok(LindbladModel::new(h).with_drive(Drive { op, amplitude: amp, omega: 2.0 * PI * p.drive, phase: 0.0 }))
}

/// Level populations from the ground state under the drive; rows of the
/// result follow `times`, columns are P0..P_{dim-1}.
pub fn drive_leakage(p: &DriveParams, dim: usize, times: &[f64], dt: f64) -> Result<(Trajectory, Vec<Vec<f64>>)> {
    if dim < 2 {
        return Err(Error::TruncationTooSmall(dim));
    }
    let m = driven_duffing(p, dim)?;
    let mut rho0 = CMat::zeros(dim, dim);
    rho0[(0, 0)] = C64::new(1.0, 0.0);
    let traj = evolve(&m, &rho0, times, dt)?;
    let pops = traj.states.iter().map(|r| (0..dim).map(|k| r[(k, k)].re).collect()).collect();
    Ok((traj, pops))
}
