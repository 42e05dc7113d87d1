//! Linear multiport algebra, Foster/Cauer extraction and black-box
//! Hamiltonians. Frequencies here are angular and in rad/s, impedances in
//! ohm; the resulting Hamiltonians are in GHz like everywhere else.

mod blackbox;
mod data;
mod foster;
mod nodal;

pub use blackbox::{blackbox_hamiltonian, kerr_parameters, zpf_matrix, Expansion, KerrParams, DEFAULT_MIN_GAP_GHZ};
pub use data::{read_sampled_csv, sampled_csv_header, write_sampled_csv};
pub use foster::{
    cauer_impedance, epr_turn_ratios, foster_fit, thevenin_capacitance, CauerMode, CauerModel, CauerPort,
    FosterOptions,
};
pub use nodal::{netlist_ports, NodalNetwork};

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::linalg::CMat;
use crate::{Error, Result, C64};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MatrixKind {
    Z,
    Y,
    S,
}

type Closed = Arc<dyn Fn(C64) -> Result<CMat> + Send + Sync>;

#[derive(Clone)]
enum Evaluator {
    Closed(Closed),
    /// Samples on the imaginary axis, ascending in omega.
    Sampled { omegas: Arc<Vec<f64>>, mats: Arc<Vec<CMat>> },
}

/// A port matrix as a function of complex frequency s.
#[derive(Clone)]
pub struct PortMatrixFunction {
    pub kind: MatrixKind,
    pub ports: usize,
    /// Reference impedance for S, ohm.
    pub z0: f64,
    eval: Evaluator,
}

impl std::fmt::Debug for PortMatrixFunction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let src = match &self.eval {
            Evaluator::Closed(_) => "closed-form".to_string(),
            Evaluator::Sampled { omegas, .. } => format!("{} samples", omegas.len()),
        };
        write!(f, "PortMatrixFunction({:?}, {} ports, z0={}, {src})", self.kind, self.ports, self.z0)
    }
}

impl PortMatrixFunction {
    pub fn closed(kind: MatrixKind, ports: usize, z0: f64, f: impl Fn(C64) -> Result<CMat> + Send + Sync + 'static) -> Self {
        PortMatrixFunction { kind, ports, z0, eval: Evaluator::Closed(Arc::new(f)) }
    }

    pub fn sampled(kind: MatrixKind, z0: f64, omegas: Vec<f64>, mats: Vec<CMat>) -> Result<Self> {
        if omegas.len() != mats.len() || omegas.len() < 4 {
            return Err(Error::DimensionMismatch("sampled data needs at least 4 matching rows".into()));
        }
        if omegas.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::DimensionMismatch("sample frequencies must be strictly ascending".into()));
        }
        let ports = mats[0].nrows();
        if mats.iter().any(|m| m.nrows() != ports || m.ncols() != ports) {
            return Err(Error::DimensionMismatch("sample matrices differ in size".into()));
        }
        Ok(PortMatrixFunction { kind, ports, z0, eval: Evaluator::Sampled { omegas: Arc::new(omegas), mats: Arc::new(mats) } })
    }

    pub fn is_sampled(&self) -> bool {
        matches!(self.eval, Evaluator::Sampled { .. })
    }

    /// Sample frequencies for sampled data.
    pub fn sample_omegas(&self) -> Option<&[f64]> {
        match &self.eval {
            Evaluator::Sampled { omegas, .. } => Some(omegas.as_slice()),
            Evaluator::Closed(_) => None,
        }
    }

    pub fn samples(&self) -> Option<(&[f64], &[CMat])> {
        match &self.eval {
            Evaluator::Sampled { omegas, mats } => Some((omegas.as_slice(), mats.as_slice())),
            Evaluator::Closed(_) => None,
        }
    }

    /// Sampled data is only defined on the imaginary axis, where it is
    /// interpolated entrywise with a local cubic through the 4 nearest samples.
    pub fn eval(&self, s: C64) -> Result<CMat> {
        match &self.eval {
            Evaluator::Closed(f) => f(s),
            Evaluator::Sampled { omegas, mats } => {
                if s.re != 0.0 {
                    return Err(Error::Unsupported("sampled data can only be evaluated at s = i omega".into()));
                }
                interpolate(omegas, mats, s.im)
            }
        }
    }

    pub fn eval_omega(&self, omega: f64) -> Result<CMat> {
        self.eval(C64::new(0.0, omega))
    }
}

pub(crate) fn lagrange4(xs: &[f64], x: f64) -> (usize, [f64; 4]) {
    let n = xs.len();
    let pos = xs.partition_point(|&v| v < x);
    let start = pos.saturating_sub(2).min(n - 4);
    let mut w = [0.0; 4];
    for (i, wi) in w.iter_mut().enumerate() {
        let mut p = 1.0;
        for j in 0..4 {
            if j != i {
                p *= (x - xs[start + j]) / (xs[start + i] - xs[start + j]);
            }
        }
        *wi = p;
    }
    (start, w)
}

fn interpolate(omegas: &[f64], mats: &[CMat], omega: f64) -> Result<CMat> {
    let (lo, hi) = (omegas[0], omegas[omegas.len() - 1]);
    if omega < lo || omega > hi {
        return Err(Error::SingularAtSample(format!("omega {omega:e} outside sampled range [{lo:e}, {hi:e}]")));
    }
    let (start, w) = lagrange4(omegas, omega);
    let mut out = &mats[start] * C64::new(w[0], 0.0);
    for i in 1..4 {
        out += &mats[start + i] * C64::new(w[i], 0.0);
    }
    Ok(out)
}

fn inv(m: &CMat, s: C64) -> Result<CMat> {
    let scale = m.iter().fold(0.0f64, |a, z| a.max(z.norm()));
    let out = m.clone().try_inverse().ok_or_else(|| Error::SingularAtSample(format!("s = {s}")))?;
    let cond = scale * out.iter().fold(0.0f64, |a, z| a.max(z.norm()));
    if !cond.is_finite() || cond > 1e15 {
        return Err(Error::SingularAtSample(format!("s = {s}")));
    }
    Ok(out)
}

/// Convert one matrix between Z, Y and S representations.
pub fn convert_matrix(m: &CMat, from: MatrixKind, to: MatrixKind, z0: f64, s: C64) -> Result<CMat> {
    use MatrixKind::*;
    let n = m.nrows();
    let id = CMat::identity(n, n);
    let z0c = C64::new(z0, 0.0);
    Ok(match (from, to) {
        (a, b) if a == b => m.clone(),
        (Z, Y) | (Y, Z) => inv(m, s)?,
        (Z, S) => inv(&(m + &id * z0c), s)? * (m - &id * z0c),
        (Y, S) => inv(&(&id + m * z0c), s)? * (&id - m * z0c),
        (S, Z) => (&id + m) * inv(&(&id - m), s)? * z0c,
        (S, Y) => (&id - m) * inv(&(&id + m), s)? / z0c,
        _ => unreachable!(),
    })
}

/// Pointwise conversion; S targets use reference impedance `z0`.
pub fn convert(f: &PortMatrixFunction, target: MatrixKind, z0: f64) -> Result<PortMatrixFunction> {
    let from = f.kind;
    match &f.eval {
        Evaluator::Closed(g) => {
            let g = g.clone();
            let src_z0 = f.z0;
            let z0_used = if target == MatrixKind::S { z0 } else { src_z0 };
            Ok(PortMatrixFunction::closed(target, f.ports, z0_used, move |s| {
                // S input is tied to its own reference impedance
                let m = g(s)?;
                if from == MatrixKind::S && target == MatrixKind::S && (src_z0 - z0).abs() > 0.0 {
                    let z = convert_matrix(&m, MatrixKind::S, MatrixKind::Z, src_z0, s)?;
                    return convert_matrix(&z, MatrixKind::Z, MatrixKind::S, z0, s);
                }
                let zref = if from == MatrixKind::S { src_z0 } else { z0 };
                let m = if from == MatrixKind::S && target != MatrixKind::S {
                    convert_matrix(&m, from, target, zref, s)?
                } else {
                    convert_matrix(&m, from, target, z0, s)?
                };
                Ok(m)
            }))
        }
        Evaluator::Sampled { omegas, mats } => {
            let mut out = Vec::with_capacity(mats.len());
            for (w, m) in omegas.iter().zip(mats.iter()) {
                let s = C64::new(0.0, *w);
                let zref = if from == MatrixKind::S { f.z0 } else { z0 };
                let conv = if from == MatrixKind::S && target == MatrixKind::S {
                    let z = convert_matrix(m, MatrixKind::S, MatrixKind::Z, f.z0, s)?;
                    convert_matrix(&z, MatrixKind::Z, MatrixKind::S, z0, s)?
                } else {
                    convert_matrix(m, from, target, zref, s)?
                };
                out.push(conv);
            }
            PortMatrixFunction::sampled(target, if target == MatrixKind::S { z0 } else { f.z0 }, omegas.to_vec(), out)
        }
    }
}

/// Reflection coefficient (Z_load - Z0)/(Z_load + Z0).
pub fn reflection(z_load: C64, z0: f64) -> Result<C64> {
    let den = z_load + z0;
    if den.norm() <= 1e-15 * z0.abs().max(z_load.norm()) {
        return Err(Error::PoleAtInput);
    }
    Ok((z_load - z0) / den)
}

/// Lossless transmission line of delay tau (s) as a two-port: Z and its S
/// matrix referenced to the line impedance.
pub fn tl_two_port(z0: f64, tau: f64, s: C64) -> Result<(CMat, CMat)> {
    let x = s * tau;
    let sh = x.sinh();
    if sh.norm() < 1e-12 {
        return Err(Error::EvaluatedAtPole(format!("s = {s}")));
    }
    let coth = x.cosh() / sh;
    let csch = C64::new(1.0, 0.0) / sh;
    let z = CMat::from_row_slice(2, 2, &[coth, csch, csch, coth]) * C64::new(z0, 0.0);
    let sm = convert_matrix(&z, MatrixKind::Z, MatrixKind::S, z0, s)?;
    Ok((z, sm))
}

/// Input impedance i Z0 tan(omega tau) of a grounded quarter-wave line.
pub fn quarter_wave_impedance(z0: f64, tau: f64, omega: f64) -> C64 {
    C64::new(0.0, z0 * (omega * tau).tan())
}

/// Angular resonances v_p pi/(2d) + n v_p pi/d of a quarter-wave line.
pub fn quarter_wave_frequencies(v_p: f64, d: f64, count: usize) -> Vec<f64> {
    (0..count).map(|n| v_p * std::f64::consts::PI / (2.0 * d) + n as f64 * v_p * std::f64::consts::PI / d).collect()
}

/// Ideal gyrator admittance G [[0, -1], [1, 0]].
pub fn gyrator_admittance(g: f64) -> CMat {
    let r = |x: f64| C64::new(x, 0.0);
    CMat::from_row_slice(2, 2, &[r(0.0), r(-g), r(g), r(0.0)])
}

/// Three-port circulator admittance G [[0,1,-1],[-1,0,1],[1,-1,0]].
pub fn circulator_admittance(g: f64) -> CMat {
    let r = |x: f64| C64::new(x * g, 0.0);
    CMat::from_row_slice(3, 3, &[r(0.0), r(1.0), r(-1.0), r(-1.0), r(0.0), r(1.0), r(1.0), r(-1.0), r(0.0)])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::max_abs;

    fn c(x: f64) -> C64 {
        C64::new(x, 0.0)
    }

    #[test]
    fn matched_load_gives_zero_s() {
        let z = CMat::identity(3, 3) * c(50.0);
        let s = convert_matrix(&z, MatrixKind::Z, MatrixKind::S, 50.0, C64::new(0.0, 1.0)).unwrap();
        assert!(max_abs(&s) < 1e-15);
    }

    #[test]
    fn matched_gyrator_and_circulator() {
        let s = convert_matrix(&gyrator_admittance(1.0 / 50.0), MatrixKind::Y, MatrixKind::S, 50.0, C64::new(0.0, 1.0)).unwrap();
        let want = CMat::from_row_slice(2, 2, &[c(0.0), c(1.0), c(-1.0), c(0.0)]);
        assert!(max_abs(&(s - want)) < 1e-15);
        let s = convert_matrix(&circulator_admittance(1.0 / 50.0), MatrixKind::Y, MatrixKind::S, 50.0, C64::new(0.0, 1.0)).unwrap();
        let want = CMat::from_row_slice(3, 3, &[c(0.0), c(0.0), c(1.0), c(1.0), c(0.0), c(0.0), c(0.0), c(1.0), c(0.0)]);
        assert!(max_abs(&(s - want)) < 1e-15);
    }

    #[test]
    fn reflection_cases() {
        assert_eq!(reflection(c(50.0), 50.0).unwrap(), c(0.0));
        assert_eq!(reflection(c(0.0), 50.0).unwrap(), c(-1.0));
        for x in -100..=100 {
            let g = reflection(C64::new(0.0, x as f64), 50.0).unwrap();
            assert!((g.norm_sqr() - 1.0).abs() < 1e-14);
        }
        assert_eq!(reflection(c(-50.0), 50.0).unwrap_err(), Error::PoleAtInput);
    }

    #[test]
    fn quarter_wave_short_transform() {
        let tau = 1e-10;
        let w = std::f64::consts::FRAC_PI_2 / tau;
        let (z, s) = tl_two_port(50.0, tau, C64::new(0.0, w)).unwrap();
        assert!(z[(0, 0)].norm() < 1e-12 * 50.0);
        let uu = s.adjoint() * &s;
        assert!(max_abs(&(uu - CMat::identity(2, 2))) < 1e-12);
        let e = C64::new(0.0, -w * tau).exp();
        assert!((s[(1, 0)] - e).norm() < 1e-12 && s[(0, 0)].norm() < 1e-12);
        assert!(tl_two_port(50.0, tau, C64::new(0.0, 0.0)).is_err());
    }

    #[test]
    fn sampled_interpolation_is_exact_for_cubics() {
        let om: Vec<f64> = (0..10).map(|i| 1.0 + i as f64 * 0.5).collect();
        let f = |w: f64| CMat::from_element(1, 1, C64::new(w * w * w - 2.0 * w, w));
        let p = PortMatrixFunction::sampled(MatrixKind::Z, 50.0, om.clone(), om.iter().map(|&w| f(w)).collect()).unwrap();
        for w in [1.1, 2.37, 5.49] {
            assert!((p.eval_omega(w).unwrap()[(0, 0)] - f(w)[(0, 0)]).norm() < 1e-12);
        }
        assert!(p.eval_omega(0.5).is_err());
    }

    fn qucat(lossy: bool) -> CauerModel {
        let mut src = String::from("L L1 1 2 10nH\nJ J1 0 2 16.346151GHz\nC C1 1 0 300fF\n");
        if lossy {
            src.push_str("C Cc 2 3 1fF\nR R1 3 0 50Ohm\n");
        }
        let g = crate::netlist::parse_netlist(&src).unwrap();
        let net = NodalNetwork::new(&g, netlist_ports(&g, &["J1"]).unwrap()).unwrap();
        let w = 2.0 * std::f64::consts::PI * 1e9;
        foster_fit(&net.impedance_function(50.0), (w, 3.0 * w), &FosterOptions::default()).unwrap()
    }

    #[test]
    fn exercise_circuit_mode_and_capacitance() {
        let m = qucat(false);
        assert_eq!(m.modes.len(), 1);
        assert!((m.modes[0].omega / (2e9 * std::f64::consts::PI) - 2.0547).abs() < 1e-3);
        let ct = m.c0_ff / m.modes[0].t[0].powi(2);
        assert!((ct - 1200.0).abs() < 1e-3 * 1200.0, "{ct}");
    }

    #[test]
    fn exercise_circuit_loss_rate() {
        let m = qucat(true);
        let k = m.modes[0].kappa / (2.0 * std::f64::consts::PI);
        assert!((k - 1.11e3).abs() < 0.02 * 1.11e3, "{k}");
    }
}
