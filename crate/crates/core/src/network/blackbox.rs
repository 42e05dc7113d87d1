use std::f64::consts::PI;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::linalg::{hermitian_fn, kron, CMat};
use crate::spectrum::{oscillator_ops, HermitianOperator, DENSE_LIMIT};
use crate::units::phi_zpf_from_impedance;
use crate::{Error, Result, C64};

use super::CauerModel;

/// How the junction nonlinearity beyond the quadratic part is represented.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Expansion {
    /// cos evaluated on the truncated flux operator.
    Spectral,
    Taylor4,
    Taylor6,
}

/// Reduced-flux zero-point amplitudes φ_mn (modes × ports).
pub fn zpf_matrix(model: &CauerModel) -> DMatrix<f64> {
    let (nm, np) = (model.modes.len(), model.num_ports());
    DMatrix::from_fn(nm, np, |m, n| model.modes[m].t[n] * phi_zpf_from_impedance(model.modes[m].z))
}

fn mode_freq_ghz(omega: f64) -> f64 {
    omega / (2.0 * PI) / 1e9
}

/// Normal-mode ladder plus, per junction port, -E_J (cos x - 1 + x²/2) with
/// x = Σ_m φ_mn (a_m + a_m†). Tensor order follows the mode order.
pub fn blackbox_hamiltonian(model: &CauerModel, expansion: Expansion, dims: &[usize]) -> Result<HermitianOperator> {
    let nm = model.modes.len();
    if dims.len() != nm || nm == 0 {
        return Err(Error::DimensionMismatch(format!("{} dims for {nm} modes", dims.len())));
    }
    if let Some(&d) = dims.iter().find(|&&d| d < 6) {
        return Err(Error::DimensionMismatch(format!("mode dimension {d} is below 6")));
    }
    let total: usize = dims.iter().product();
    if total > DENSE_LIMIT {
        return Err(Error::DimensionMismatch(format!("black-box space of {total} states exceeds {DENSE_LIMIT}")));
    }
    // embed a single-mode operator into the product space
    let embed = |m: usize, op: &CMat| -> CMat {
        let mut out = CMat::identity(1, 1);
        for (j, &d) in dims.iter().enumerate() {
            out = if j == m { kron(&out, op) } else { kron(&out, &CMat::identity(d, d)) };
        }
        out
    };
    let ops: Vec<_> = dims.iter().map(|&d| oscillator_ops(d)).collect::<Result<_>>()?;
    let mut h = CMat::zeros(total, total);
    for (m, o) in ops.iter().enumerate() {
        h += embed(m, &o.n) * C64::new(mode_freq_ghz(model.modes[m].omega), 0.0);
    }
    let phi = zpf_matrix(model);
    for (n, port) in model.ports.iter().enumerate() {
        if port.ej_ghz == 0.0 {
            continue;
        }
        let mut x = CMat::zeros(total, total);
        for (m, o) in ops.iter().enumerate() {
            if phi[(m, n)] != 0.0 {
                x += embed(m, &o.x) * C64::new(phi[(m, n)], 0.0);
            }
        }
        let ej = port.ej_ghz;
        let spider = match expansion {
            Expansion::Spectral => {
                let x2 = &x * &x;
                (hermitian_fn(&x, |v| C64::new(v.cos(), 0.0)) - CMat::identity(total, total) + x2 * C64::new(0.5, 0.0))
                    * C64::new(-ej, 0.0)
            }
            Expansion::Taylor4 | Expansion::Taylor6 => {
                let x2 = &x * &x;
                let x4 = &x2 * &x2;
                let mut s = x4.clone() * C64::new(-ej / 24.0, 0.0);
                if expansion == Expansion::Taylor6 {
                    s += &x4 * &x2 * C64::new(ej / 720.0, 0.0);
                }
                s
            }
        };
        h += spider;
    }
    let h = (&h + h.adjoint()) * C64::new(0.5, 0.0);
    let labels = (0..nm).map(|m| format!("mode{m}")).collect();
    Ok(HermitianOperator::dense(labels, dims.to_vec(), h))
}

/// First-order Kerr parameters, all in GHz.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KerrParams {
    /// Bare mode frequencies.
    pub freq: Vec<f64>,
    /// Dressed frequencies f + δ + ½ Σ_{m'≠m} χ.
    pub dressed: Vec<f64>,
    /// Self-Kerr (anharmonicity) per mode.
    pub delta: Vec<f64>,
    #[serde(with = "crate::builder::mat_serde")]
    pub chi: DMatrix<f64>,
}

/// Default minimum separation between mode frequencies, GHz.
pub const DEFAULT_MIN_GAP_GHZ: f64 = 1e-3;

pub fn kerr_parameters(model: &CauerModel, min_gap_ghz: f64) -> Result<KerrParams> {
    let nm = model.modes.len();
    let freq: Vec<f64> = model.modes.iter().map(|m| mode_freq_ghz(m.omega)).collect();
    for i in 0..nm {
        for j in i + 1..nm {
            if (freq[i] - freq[j]).abs() < min_gap_ghz {
                return Err(Error::NearDegenerateModes(format!("modes {i} and {j}: {} / {} GHz", freq[i], freq[j])));
            }
        }
    }
    let phi = zpf_matrix(model);
    let mut delta = vec![0.0; nm];
    let mut chi = DMatrix::zeros(nm, nm);
    for (n, port) in model.ports.iter().enumerate() {
        let ej = port.ej_ghz;
        for m in 0..nm {
            delta[m] -= ej * phi[(m, n)].powi(4) / 2.0;
            for k in 0..nm {
                if k != m {
                    chi[(m, k)] -= ej * phi[(m, n)].powi(2) * phi[(k, n)].powi(2);
                }
            }
        }
    }
    let dressed = (0..nm).map(|m| freq[m] + delta[m] + 0.5 * chi.row(m).sum()).collect();
    Ok(KerrParams { freq, dressed, delta, chi })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::eigh;
    use crate::units::FF;

    fn single(ej: f64) -> CauerModel {
        // 1.0 turn ratio, C0 = C̃ and the linear inductance in the mode
        let w = 2.0 * PI * 5e9;
        CauerModel::new(100.0, vec![(w, vec![1.0], 0.0)]).with_junctions(&[Some(ej)])
    }

    #[test]
    fn zero_junction_gives_bare_ladder() {
        let m = single(1.0).with_junctions(&[None]);
        let (e, _) = eigh(&blackbox_hamiltonian(&m, Expansion::Spectral, &[8]).unwrap().to_dense());
        for (n, v) in e.iter().enumerate() {
            assert!((v - 5.0 * n as f64).abs() < 1e-12);
        }
    }

    #[test]
    fn small_dims_rejected() {
        assert!(matches!(blackbox_hamiltonian(&single(1.0), Expansion::Taylor4, &[5]), Err(Error::DimensionMismatch(_))));
    }

    #[test]
    fn no_coupling_no_kerr() {
        let mut m = single(10.0);
        m.modes[0].t[0] = 0.0;
        let k = kerr_parameters(&m, DEFAULT_MIN_GAP_GHZ).unwrap();
        assert_eq!(k.delta[0], 0.0);
        assert_eq!(k.dressed[0], k.freq[0]);
    }

    #[test]
    fn self_kerr_matches_charging_energy() {
        // with t = 1 the mode capacitance is C0 and δ = -E_C(C0) L_m/L_J exactly
        // at first order, where L_m = 1/(C0 ω²)
        let ej = 20.0;
        let m = single(ej);
        let k = kerr_parameters(&m, DEFAULT_MIN_GAP_GHZ).unwrap();
        let w = m.modes[0].omega;
        let lm = 1.0 / (m.c0_ff * FF * w * w) / 1e-9;
        let lj = m.ports[0].lj_nh.unwrap();
        let want = -crate::units::ec_ghz(m.c0_ff) * lm / lj;
        assert!((k.delta[0] - want).abs() < 1e-12 * want.abs());
    }

    #[test]
    fn cross_kerr_matches_diagonalization() {
        let (w1, w2) = (2.0 * PI * 5e9, 2.0 * PI * 6.5e9);
        let m = CauerModel::new(100.0, vec![(w1, vec![0.6], 0.0), (w2, vec![0.5], 0.0)]).with_junctions(&[Some(30.0)]);
        let k = kerr_parameters(&m, DEFAULT_MIN_GAP_GHZ).unwrap();
        let dims = [8, 8];
        let (e, v) = eigh(&blackbox_hamiltonian(&m, Expansion::Spectral, &dims).unwrap().to_dense());
        let level = |a: usize, b: usize| -> f64 {
            let idx = a * dims[1] + b;
            let best = (0..e.len()).max_by(|&i, &j| v[(idx, i)].norm().total_cmp(&v[(idx, j)].norm())).unwrap();
            e[best]
        };
        let chi = level(1, 1) - level(1, 0) - level(0, 1) + level(0, 0);
        assert!((chi - k.chi[(0, 1)]).abs() < 0.05 * k.chi[(0, 1)].abs(), "{chi} vs {}", k.chi[(0, 1)]);
    }

    #[test]
    fn degenerate_modes_rejected() {
        let w = 2.0 * PI * 5e9;
        let m = CauerModel::new(100.0, vec![(w, vec![1.0], 0.0), (w * (1.0 + 1e-9), vec![1.0], 0.0)]);
        assert!(matches!(kerr_parameters(&m, DEFAULT_MIN_GAP_GHZ), Err(Error::NearDegenerateModes(_))));
    }
}
