use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::linalg::CMat;
use crate::units::{lj_from_ej, FF, NH};
use crate::{Error, Result, C64};

use super::{convert_matrix, lagrange4, MatrixKind, PortMatrixFunction};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CauerMode {
    /// rad/s.
    pub omega: f64,
    /// Turn ratios, one per port.
    pub t: Vec<f64>,
    /// Mode impedance 1/(C0 omega), ohm.
    pub z: f64,
    /// Energy decay rate, rad/s.
    pub kappa: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct CauerPort {
    /// Josephson energy at this port, GHz; zero for a linear port.
    pub ej_ghz: f64,
    pub lj_nh: Option<f64>,
}

impl CauerPort {
    pub fn junction(ej_ghz: f64) -> Self {
        CauerPort { ej_ghz, lj_nh: Some(lj_from_ej(ej_ghz)) }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CauerModel {
    /// Reference capacitance, fF.
    #[serde(rename = "C0")]
    pub c0_ff: f64,
    pub modes: Vec<CauerMode>,
    pub ports: Vec<CauerPort>,
}

impl CauerModel {
    pub fn new(c0_ff: f64, modes: Vec<(f64, Vec<f64>, f64)>) -> Self {
        let nports = modes.first().map_or(0, |m| m.1.len());
        let modes = modes
            .into_iter()
            .map(|(omega, t, kappa)| CauerMode { omega, t, z: 1.0 / (c0_ff * FF * omega), kappa })
            .collect();
        CauerModel { c0_ff, modes, ports: vec![CauerPort::default(); nports] }
    }

    pub fn num_ports(&self) -> usize {
        self.ports.len()
    }

    /// Attach junctions; `None` leaves a port linear.
    pub fn with_junctions(mut self, ej_ghz: &[Option<f64>]) -> Self {
        for (p, e) in self.ports.iter_mut().zip(ej_ghz) {
            *p = e.map_or_else(CauerPort::default, CauerPort::junction);
        }
        self
    }

    /// Residue matrix t tᵀ of a mode.
    pub fn residue(&self, m: usize) -> DMatrix<f64> {
        let t = &self.modes[m].t;
        DMatrix::from_fn(t.len(), t.len(), |i, j| t[i] * t[j])
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let m: CauerModel = serde_json::from_str(text).map_err(|e| Error::Io(e.to_string()))?;
        if m.modes.iter().any(|md| md.t.len() != m.ports.len()) {
            return Err(Error::DimensionMismatch("turn-ratio length differs from port count".into()));
        }
        Ok(m)
    }
}

/// Pole-pair sum Σ t tᵀ/(2C0) [1/(s + κ/2 - iω) + 1/(s + κ/2 + iω)], ohm.
pub fn cauer_impedance(model: &CauerModel, s: C64) -> CMat {
    let n = model.num_ports();
    let c0 = model.c0_ff * FF;
    let mut z = CMat::zeros(n, n);
    for m in &model.modes {
        let h = C64::new(m.kappa / 2.0, 0.0);
        let f = (C64::new(1.0, 0.0) / (s + h - C64::new(0.0, m.omega))
            + C64::new(1.0, 0.0) / (s + h + C64::new(0.0, m.omega)))
            / (2.0 * c0);
        for i in 0..n {
            for j in 0..n {
                z[(i, j)] += f * (m.t[i] * m.t[j]);
            }
        }
    }
    z
}

/// Series combination of the mode capacitances C0/t² seen by a port, fF.
pub fn thevenin_capacitance(model: &CauerModel, port: usize) -> Result<f64> {
    let mut inv = 0.0;
    for (i, m) in model.modes.iter().enumerate() {
        let t = m.t[port];
        if t == 0.0 {
            return Err(Error::ZeroTurnRatio { mode: i, port });
        }
        inv += t * t / model.c0_ff;
    }
    if inv == 0.0 {
        return Err(Error::DimensionMismatch("model has no modes".into()));
    }
    Ok(1.0 / inv)
}

/// Turn ratios from energy participations: t = s ω √(C0 L_J p).
/// `p` is modes × ports, `omega` in rad/s, `lj_nh` per port.
pub fn epr_turn_ratios(
    p: &DMatrix<f64>,
    omega: &[f64],
    lj_nh: &[f64],
    c0_ff: f64,
    signs: Option<&DMatrix<f64>>,
) -> Result<DMatrix<f64>> {
    if p.nrows() != omega.len() || p.ncols() != lj_nh.len() {
        return Err(Error::DimensionMismatch("participation matrix shape".into()));
    }
    if let Some(&bad) = p.iter().find(|&&x| x < 0.0 || x.is_nan()) {
        return Err(Error::NegativeParticipation(bad));
    }
    Ok(DMatrix::from_fn(p.nrows(), p.ncols(), |m, n| {
        let s = signs.map_or(1.0, |s| s[(m, n)].signum());
        s * omega[m] * (c0_ff * FF * lj_nh[n] * NH * p[(m, n)]).sqrt()
    }))
}

#[derive(Debug, Clone, PartialEq)]
pub struct FosterOptions {
    pub c0_ff: f64,
    /// Scan points across the window for closed-form evaluators.
    pub scan_points: usize,
}

impl Default for FosterOptions {
    fn default() -> Self {
        FosterOptions { c0_ff: 100.0, scan_points: 4000 }
    }
}

/// What the fit needs from the network: the port-diagonal inverse impedance
/// Ỹ_kk = 1/Z_kk and impedance ratios Z_kr/Z_rr near a mode.
trait Probe {
    fn ports(&self) -> usize;
    fn ytilde(&self, k: usize, omega: f64) -> Result<C64>;
    fn ratio(&self, k: usize, r: usize, omega: f64) -> Result<f64>;
    fn scan_grid(&self, lo: f64, hi: f64) -> Vec<f64>;
}

fn z_at(f: &PortMatrixFunction, omega: f64) -> Result<CMat> {
    let s = C64::new(0.0, omega);
    let m = f.eval(s)?;
    convert_matrix(&m, f.kind, MatrixKind::Z, f.z0, s)
}

struct ClosedProbe<'a> {
    f: &'a PortMatrixFunction,
    points: usize,
}

impl Probe for ClosedProbe<'_> {
    fn ports(&self) -> usize {
        self.f.ports
    }

    fn ytilde(&self, k: usize, omega: f64) -> Result<C64> {
        if self.f.ports == 1 && self.f.kind == MatrixKind::Y {
            return Ok(self.f.eval_omega(omega)?[(0, 0)]);
        }
        Ok(C64::new(1.0, 0.0) / z_at(self.f, omega)?[(k, k)])
    }

    fn ratio(&self, k: usize, r: usize, omega: f64) -> Result<f64> {
        // symmetric offsets cancel the smooth background to first order
        let d = omega * 1e-6;
        let a = z_at(self.f, omega - d)?;
        let b = z_at(self.f, omega + d)?;
        Ok(0.5 * ((a[(k, r)] / a[(r, r)]).re + (b[(k, r)] / b[(r, r)]).re))
    }

    fn scan_grid(&self, lo: f64, hi: f64) -> Vec<f64> {
        let n = self.points.max(8);
        (0..=n).map(|i| lo + (hi - lo) * i as f64 / n as f64).collect()
    }
}

/// Sampled data: Ỹ and impedance ratios are smooth through resonances, so
/// they are tabulated per sample and interpolated instead of Z itself.
struct SampledProbe {
    omegas: Vec<f64>,
    ytilde: Vec<Vec<C64>>,
    ratios: Vec<DMatrix<f64>>,
    ports: usize,
}

impl SampledProbe {
    fn new(f: &PortMatrixFunction) -> Result<Self> {
        let (om, _) = f.samples().expect("sampled evaluator");
        let n = f.ports;
        let mut ytilde = vec![Vec::with_capacity(om.len()); n];
        let mut ratios = Vec::with_capacity(om.len());
        for &w in om {
            let z = z_at(f, w)?;
            for (k, col) in ytilde.iter_mut().enumerate() {
                col.push(C64::new(1.0, 0.0) / z[(k, k)]);
            }
            ratios.push(DMatrix::from_fn(n, n, |k, r| (z[(k, r)] / z[(r, r)]).re));
        }
        Ok(SampledProbe { omegas: om.to_vec(), ytilde, ratios, ports: n })
    }

    fn check(&self, omega: f64) -> Result<()> {
        let (lo, hi) = (self.omegas[0], self.omegas[self.omegas.len() - 1]);
        if omega < lo || omega > hi {
            return Err(Error::SingularAtSample(format!("omega {omega:e} outside sampled range")));
        }
        Ok(())
    }
}

impl Probe for SampledProbe {
    fn ports(&self) -> usize {
        self.ports
    }

    fn ytilde(&self, k: usize, omega: f64) -> Result<C64> {
        self.check(omega)?;
        let (st, w) = lagrange4(&self.omegas, omega);
        Ok((0..4).map(|i| self.ytilde[k][st + i] * w[i]).sum())
    }

    fn ratio(&self, k: usize, r: usize, omega: f64) -> Result<f64> {
        self.check(omega)?;
        let (st, w) = lagrange4(&self.omegas, omega);
        Ok((0..4).map(|i| self.ratios[st + i][(k, r)] * w[i]).sum())
    }

    fn scan_grid(&self, lo: f64, hi: f64) -> Vec<f64> {
        self.omegas.iter().copied().filter(|&w| w >= lo && w <= hi).collect()
    }
}

struct Root {
    omega: f64,
    port: usize,
    slope: f64,
    re_y: f64,
}

fn bisect(p: &dyn Probe, k: usize, mut a: f64, mut b: f64) -> Result<f64> {
    let mut fa = p.ytilde(k, a)?.im;
    while (b - a) > 1e-12 * b.abs() {
        let m = 0.5 * (a + b);
        let fm = p.ytilde(k, m)?.im;
        if fm == 0.0 {
            return Ok(m);
        }
        if (fm < 0.0) == (fa < 0.0) {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    Ok(0.5 * (a + b))
}

/// d Im Ỹ/dω by central differences with one Richardson step.
fn slope(p: &dyn Probe, k: usize, w: f64) -> Result<f64> {
    let d = |h: f64| -> Result<f64> { Ok((p.ytilde(k, w + h)?.im - p.ytilde(k, w - h)?.im) / (2.0 * h)) };
    let h = w * 1e-6;
    Ok((4.0 * d(h / 2.0)? - d(h)?) / 3.0)
}

/// Extract a Foster/Cauer model from port data in the window [lo, hi] rad/s.
pub fn foster_fit(f: &PortMatrixFunction, window: (f64, f64), opts: &FosterOptions) -> Result<CauerModel> {
    let (lo, hi) = window;
    if !(lo > 0.0 && hi > lo) {
        return Err(Error::DimensionMismatch(format!("window [{lo}, {hi}]")));
    }
    let closed;
    let sampled;
    let probe: &dyn Probe = if f.is_sampled() {
        sampled = SampledProbe::new(f)?;
        &sampled
    } else {
        closed = ClosedProbe { f, points: opts.scan_points };
        &closed
    };
    let grid = probe.scan_grid(lo, hi);
    if grid.len() < 2 {
        return Err(Error::NoResonanceInWindow(lo, hi));
    }

    let mut roots: Vec<Root> = Vec::new();
    for k in 0..probe.ports() {
        let vals: Vec<f64> = grid.iter().map(|&w| probe.ytilde(k, w).map(|y| y.im)).collect::<Result<_>>()?;
        let mut port_roots: Vec<(f64, f64)> = Vec::new();
        for i in 0..grid.len() - 1 {
            // resonances are upward crossings; poles of Ỹ cross downward
            if vals[i] < 0.0 && vals[i + 1] >= 0.0 {
                let w = bisect(probe, k, grid[i], grid[i + 1])?;
                port_roots.push((w, grid[i + 1] - grid[i]));
            }
        }
        for pair in port_roots.windows(2) {
            if pair[1].0 - pair[0].0 < 2.0 * pair[0].1.max(pair[1].1) {
                return Err(Error::NearDegenerateModes(format!(
                    "{:e} and {:e} rad/s at port {k}",
                    pair[0].0, pair[1].0
                )));
            }
        }
        for (w, _) in port_roots {
            let s = slope(probe, k, w)?;
            if s <= 0.0 {
                return Err(Error::NegativeEffectiveCapacitance(w));
            }
            roots.push(Root { omega: w, port: k, slope: s, re_y: probe.ytilde(k, w)?.re });
        }
    }
    if roots.is_empty() {
        return Err(Error::NoResonanceInWindow(lo, hi));
    }

    // one mode may show up at several ports
    roots.sort_by(|a, b| a.omega.total_cmp(&b.omega));
    let mut groups: Vec<Vec<Root>> = Vec::new();
    for r in roots {
        match groups.last_mut() {
            Some(g) if (r.omega - g[0].omega).abs() <= 1e-7 * r.omega => g.push(r),
            _ => groups.push(vec![r]),
        }
    }

    let c0 = opts.c0_ff * FF;
    let mut modes = Vec::with_capacity(groups.len());
    for g in groups {
        // reference port: strongest coupling, i.e. smallest slope
        let best = g.iter().min_by(|a, b| a.slope.total_cmp(&b.slope)).expect("non-empty group");
        let omega = best.omega;
        let tr = (2.0 * c0 / best.slope).sqrt();
        let mut t = vec![0.0; probe.ports()];
        for (k, tk) in t.iter_mut().enumerate() {
            *tk = if k == best.port { tr } else { tr * probe.ratio(k, best.port, omega)? };
        }
        let big = t.iter().copied().fold(0.0f64, |a, x| if x.abs() > a.abs() { x } else { a });
        if big < 0.0 {
            t.iter_mut().for_each(|x| *x = -*x);
        }
        let kappa = (2.0 * best.re_y / best.slope).max(0.0);
        modes.push(CauerMode { omega, t, z: 1.0 / (c0 * omega), kappa });
    }
    Ok(CauerModel { c0_ff: opts.c0_ff, modes, ports: vec![CauerPort::default(); probe.ports()] })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::max_abs;
    use rand::{Rng, SeedableRng};
    use std::f64::consts::PI;

    fn lc_y(c: f64, l: f64) -> PortMatrixFunction {
        PortMatrixFunction::closed(MatrixKind::Y, 1, 50.0, move |s| {
            Ok(CMat::from_element(1, 1, s * c + C64::new(1.0, 0.0) / (s * l)))
        })
    }

    #[test]
    fn ideal_lc_root_and_capacitance() {
        let (c, l) = (300e-15, 20e-9);
        let m = foster_fit(&lc_y(c, l), (2.0 * PI * 1e9, 2.0 * PI * 3e9), &FosterOptions::default()).unwrap();
        assert_eq!(m.modes.len(), 1);
        let w0 = 1.0 / (l * c).sqrt();
        assert!((m.modes[0].omega - w0).abs() < 1e-11 * w0);
        assert!((m.modes[0].omega / (2.0 * PI * 1e9) - 2.055).abs() < 1e-3);
        // C̃ = C0/t²
        let ct = m.c0_ff / (m.modes[0].t[0] * m.modes[0].t[0]);
        assert!((ct - 300.0).abs() < 1e-6);
        assert_eq!(m.modes[0].kappa, 0.0);
    }

    #[test]
    fn no_resonance() {
        let e = foster_fit(&lc_y(300e-15, 20e-9), (1e9, 2e9), &FosterOptions::default()).unwrap_err();
        assert_eq!(e, Error::NoResonanceInWindow(1e9, 2e9));
    }

    fn random_model(seed: u64, c0: f64) -> CauerModel {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut w = 2.0 * PI * 3e9;
        let modes = (0..3)
            .map(|_| {
                w += 2.0 * PI * rng.gen_range(0.5e9..1.5e9);
                let t: Vec<f64> = (0..2).map(|_| rng.gen_range(-1.0..1.0) * (c0 / 100.0).sqrt()).collect();
                (w, t, 0.0)
            })
            .collect();
        CauerModel::new(c0, modes)
    }

    #[test]
    fn synthesis_then_fit_roundtrip() {
        for seed in 0..4 {
            let model = random_model(seed, 100.0);
            let mm = model.clone();
            let z = PortMatrixFunction::closed(MatrixKind::Z, 2, 50.0, move |s| Ok(cauer_impedance(&mm, s)));
            let fit = foster_fit(&z, (2.0 * PI * 3e9, 2.0 * PI * 9e9), &FosterOptions::default()).unwrap();
            assert_eq!(fit.modes.len(), 3);
            for (a, b) in model.modes.iter().zip(&fit.modes) {
                assert!((a.omega - b.omega).abs() < 1e-9 * a.omega);
                let sign = if a.t[0] * b.t[0] < 0.0 { -1.0 } else { 1.0 };
                for (x, y) in a.t.iter().zip(&b.t) {
                    assert!((sign * x - y).abs() < 1e-7, "seed {seed}: {:?} vs {:?}", a.t, b.t);
                }
            }
        }
    }

    #[test]
    fn lossless_cauer_is_symmetric_and_imaginary() {
        let m = random_model(9, 100.0);
        let z = cauer_impedance(&m, C64::new(0.0, 2.0 * PI * 4.1e9));
        assert!(max_abs(&(&z - z.transpose())) < 1e-12 * max_abs(&z));
        assert!(z.iter().all(|x| x.re.abs() < 1e-12 * x.norm().max(1e-300)));
    }

    #[test]
    fn thevenin_series_rule() {
        let one = CauerModel::new(100.0, vec![(1e10, vec![1.0], 0.0)]);
        assert!((thevenin_capacitance(&one, 0).unwrap() - 100.0).abs() < 1e-12);
        let two = CauerModel::new(100.0, vec![(1e10, vec![1.0], 0.0), (2e10, vec![1.0], 0.0)]);
        assert!((thevenin_capacitance(&two, 0).unwrap() - 50.0).abs() < 1e-12);
        let zero = CauerModel::new(100.0, vec![(1e10, vec![0.0], 0.0)]);
        assert_eq!(thevenin_capacitance(&zero, 0).unwrap_err(), Error::ZeroTurnRatio { mode: 0, port: 0 });
    }

    #[test]
    fn epr_inverse_and_signs() {
        let p = DMatrix::from_element(1, 1, 1.0);
        let (w, lj, c0) = (2.0 * PI * 5e9, 10.0, 100.0);
        let t = epr_turn_ratios(&p, &[w], &[lj], c0, None).unwrap();
        // L_m = 1/(C0 ω²), p = L_m t²/L_J
        let lm = 1.0 / (c0 * FF * w * w);
        let back = lm * t[(0, 0)].powi(2) / (lj * NH);
        assert!((back - 1.0).abs() < 1e-12);
        let z = epr_turn_ratios(&DMatrix::zeros(2, 2), &[w, w], &[lj, lj], c0, None).unwrap();
        assert!(z.iter().all(|&x| x == 0.0));
        let s = DMatrix::from_element(1, 1, -1.0);
        let tn = epr_turn_ratios(&p, &[w], &[lj], c0, Some(&s)).unwrap();
        assert_eq!(tn[(0, 0)] * tn[(0, 0)], t[(0, 0)] * t[(0, 0)]);
        assert!(matches!(
            epr_turn_ratios(&DMatrix::from_element(1, 1, -0.1), &[w], &[lj], c0, None),
            Err(Error::NegativeParticipation(_))
        ));
    }

    #[test]
    fn qcm_json_roundtrip() {
        let m = random_model(3, 100.0).with_junctions(&[Some(16.0), None]);
        let text = m.to_json();
        assert!(text.contains("\"C0\""));
        assert_eq!(CauerModel::from_json(&text).unwrap(), m);
    }
}
