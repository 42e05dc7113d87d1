//! Second-order Schrieffer-Wolff reduction, dispersive parameters, flux
//! sweet-spot diagnostics and parity selection rules.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::builder::HamiltonianSpec;
use crate::linalg::{commutator, eigh, fix_phase, hermiticity_defect, CMat, CVec};
use crate::spectrum::{assemble, charge_operator, flux_operator, parity_operator, BasisSpec, SpectrumResult, VarBasis};
use crate::{Error, Result, C64};

/// Smallest allowed energy difference between states of different blocks, GHz.
pub const MIN_BLOCK_GAP: f64 = 1e-6;

/// Diagonal H0 with a block label per basis state, and a Hermitian perturbation.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockStructure {
    pub energies: Vec<f64>,
    pub blocks: Vec<usize>,
    pub v: CMat,
}

impl BlockStructure {
    pub fn new(energies: Vec<f64>, blocks: Vec<usize>, v: CMat) -> Result<Self> {
        let n = energies.len();
        if blocks.len() != n || v.nrows() != n || v.ncols() != n {
            return Err(Error::DimensionMismatch("block structure sizes differ".into()));
        }
        if hermiticity_defect(&v) > 1e-12 * v.iter().fold(1.0f64, |a, z| a.max(z.norm())) {
            return Err(Error::DimensionMismatch("perturbation is not Hermitian".into()));
        }
        Ok(BlockStructure { energies, blocks, v })
    }

    fn same(&self, i: usize, j: usize) -> bool {
        self.blocks[i] == self.blocks[j]
    }

    fn split(&self, m: &CMat, diagonal: bool) -> CMat {
        CMat::from_fn(m.nrows(), m.ncols(), |i, j| if self.same(i, j) == diagonal { m[(i, j)] } else { C64::new(0.0, 0.0) })
    }

    pub fn v_diag(&self) -> CMat {
        self.split(&self.v, true)
    }

    pub fn v_off(&self) -> CMat {
        self.split(&self.v, false)
    }

    pub fn h0(&self) -> CMat {
        CMat::from_diagonal(&CVec::from_iterator(self.energies.len(), self.energies.iter().map(|&e| C64::new(e, 0.0))))
    }

    /// Solve [H0, S] = X for block-off-diagonal S.
    fn solve_off(&self, x: &CMat) -> CMat {
        let e = &self.energies;
        CMat::from_fn(x.nrows(), x.ncols(), |k, l| {
            if self.same(k, l) {
                C64::new(0.0, 0.0)
            } else {
                x[(k, l)] / (e[k] - e[l])
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SwResult {
    /// Block-diagonal effective Hamiltonian H0 + V_D + ½[S1, V_OD]_D.
    pub h_eff: CMat,
    pub s1: CMat,
    /// Second-order generator; it enters H_eff only from third order on.
    pub s2: CMat,
    /// max |V_OD,kl| / |E_k - E_l|, the expansion parameter.
    pub ratio: f64,
}

pub fn schrieffer_wolff2(b: &BlockStructure) -> Result<SwResult> {
    let n = b.energies.len();
    let mut ratio = 0.0f64;
    for k in 0..n {
        for l in k + 1..n {
            if b.same(k, l) {
                continue;
            }
            let gap = (b.energies[k] - b.energies[l]).abs();
            if gap < MIN_BLOCK_GAP {
                return Err(Error::DegenerateAcrossBlocks(k, l));
            }
            ratio = ratio.max(b.v[(k, l)].norm() / gap);
        }
    }
    let vd = b.v_diag();
    let vod = b.v_off();
    let s1 = b.solve_off(&vod);
    let second = commutator(&s1, &vod) * C64::new(0.5, 0.0);
    let h_eff = b.h0() + &vd + b.split(&second, true);
    // [H0, S2] = [S1, V_D] + OD part of ½[S1, V_OD]
    let rhs = commutator(&s1, &vd) + b.split(&second, false);
    let s2 = b.solve_off(&rhs);
    Ok(SwResult { h_eff: (&h_eff + h_eff.adjoint()) * C64::new(0.5, 0.0), s1, s2, ratio })
}

/// Closed-form dispersive parameters for qubits coupled to one resonator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dispersive {
    /// χ_k = g_k²/Δ_k: Lamb shift of qubit k and the qubit-state-dependent
    /// resonator pull (AC-Stark shift per photon).
    pub chi: Vec<f64>,
    /// Resonator-mediated exchange (g1 g2/2)(1/Δ1 + 1/Δ2) for two qubits.
    pub exchange: Option<f64>,
    /// Largest |g/Δ|; the expansion wants this below about 0.3.
    pub max_ratio: f64,
}

pub fn jc_dispersive(g: &[f64], delta: &[f64]) -> Result<Dispersive> {
    if g.len() != delta.len() || g.is_empty() {
        return Err(Error::DimensionMismatch("one detuning per coupling".into()));
    }
    if let Some(i) = delta.iter().position(|d| d.abs() < MIN_BLOCK_GAP) {
        return Err(Error::DegenerateAcrossBlocks(i, i));
    }
    let chi = g.iter().zip(delta).map(|(g, d)| g * g / d).collect();
    let exchange = (g.len() == 2).then(|| g[0] * g[1] / 2.0 * (1.0 / delta[0] + 1.0 / delta[1]));
    let max_ratio = g.iter().zip(delta).map(|(g, d)| (g / d).abs()).fold(0.0, f64::max);
    Ok(Dispersive { chi, exchange, max_ratio })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweetSpotReport {
    pub phi_ext: f64,
    /// Lowest levels at the bias point, GHz.
    pub levels: Vec<f64>,
    /// ⟨i|∂U/∂φ_ext|j⟩ magnitudes, GHz/rad.
    #[serde(with = "crate::builder::mat_serde")]
    pub elements: DMatrix<f64>,
    /// ⟨0|∂U|0⟩ - ⟨1|∂U|1⟩, the first derivative of the 0-1 splitting up to sign.
    pub diagonal_difference: f64,
    /// |⟨0|∂U|1⟩|.
    pub off_diagonal: f64,
}

/// Step in φ_ext for the derivative, radians.
pub const SWEET_SPOT_STEP: f64 = 1e-4;

/// Flux-derivative matrix elements at `phi_ext` for a spec family built by
/// `make`, all assembled on the same `basis`. The derivative is a central
/// difference with one Richardson step.
pub fn sweet_spot_test(
    make: impl Fn(f64) -> Result<HamiltonianSpec>,
    basis: &BasisSpec,
    phi_ext: f64,
    k: usize,
) -> Result<SweetSpotReport> {
    if k < 2 {
        return Err(Error::DimensionMismatch("need at least two levels".into()));
    }
    let h = |x: f64| -> Result<CMat> { Ok(assemble(&make(x)?, basis)?.to_dense()) };
    let d = |step: f64| -> Result<CMat> {
        Ok((h(phi_ext + step)? - h(phi_ext - step)?) / C64::new(2.0 * step, 0.0))
    };
    let du = (d(SWEET_SPOT_STEP / 2.0)? * C64::new(4.0, 0.0) - d(SWEET_SPOT_STEP)?) / C64::new(3.0, 0.0);
    let (vals, vecs) = eigh(&h(phi_ext)?);
    let k = k.min(vals.len());
    let vk = vecs.columns(0, k).clone_owned();
    let m = vk.adjoint() * &du * &vk;
    let elements = DMatrix::from_fn(k, k, |i, j| m[(i, j)].norm());
    Ok(SweetSpotReport {
        phi_ext,
        levels: vals[..k].to_vec(),
        elements,
        diagonal_difference: (m[(0, 0)] - m[(1, 1)]).re,
        off_diagonal: m[(0, 1)].norm(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParityReport {
    /// ±1 per eigenstate.
    pub parity: Vec<i8>,
    /// |⟨i|q_v|j⟩| per variable.
    pub charge: Vec<Vec<Vec<f64>>>,
    /// |⟨i|φ_v|j⟩| per variable; empty for charge-basis variables.
    pub flux: Vec<Vec<Vec<f64>>>,
    /// Largest same-parity matrix element of any q or φ; should vanish.
    pub max_forbidden: f64,
    /// Eigenvectors after the parity-fixing rotation, columns.
    #[serde(skip)]
    pub states: CMat,
}

/// Tolerance for calling two levels degenerate, relative to the level scale.
const DEGENERACY_TOL: f64 = 1e-9;

/// Label eigenstates by U_π and tabulate q/φ matrix elements. Degenerate
/// levels are rotated to diagonalize U_π inside their subspace.
pub fn parity_classify(spec: &HamiltonianSpec, basis: &BasisSpec, result: &SpectrumResult) -> Result<ParityReport> {
    if !spec.has_even_potential() {
        return Err(Error::Unsupported("parity needs an even potential without offsets".into()));
    }
    let vecs = result.eigenvectors.as_ref().ok_or_else(|| Error::DimensionMismatch("eigenvectors required".into()))?;
    let p = parity_operator(basis)?;
    let k = vecs.ncols();
    let e = &result.eigenvalues;
    let scale = e.iter().fold(1.0f64, |a, x| a.max(x.abs()));
    let mut states = vecs.clone();
    let mut parity = vec![0i8; k];
    let mut i = 0;
    while i < k {
        let mut j = i + 1;
        while j < k && (e[j] - e[i]).abs() <= DEGENERACY_TOL * scale {
            j += 1;
        }
        let block = vecs.columns(i, j - i).clone_owned();
        let pb = block.adjoint() * &p * &block;
        let (pv, pvec) = eigh(&((&pb + pb.adjoint()) * C64::new(0.5, 0.0)));
        let rotated = &block * pvec;
        for (c, &val) in pv.iter().enumerate() {
            if (val.abs() - 1.0).abs() > 1e-6 {
                return Err(Error::MixedParity(format!("levels {i}..{j} give U_pi eigenvalue {val}")));
            }
            parity[i + c] = if val > 0.0 { 1 } else { -1 };
            let mut col = rotated.column(c).clone_owned();
            fix_phase(&mut col);
            states.set_column(i + c, &col);
        }
        i = j;
    }

    let table = |op: &CMat| -> Vec<Vec<f64>> {
        let m = states.adjoint() * op * &states;
        (0..k).map(|a| (0..k).map(|b| m[(a, b)].norm()).collect()).collect()
    };
    let mut charge = Vec::new();
    let mut flux = Vec::new();
    for (v, var) in basis.vars.iter().enumerate() {
        charge.push(table(&charge_operator(basis, v)?));
        flux.push(match var {
            VarBasis::Fock { .. } => table(&flux_operator(basis, v)?),
            VarBasis::Charge { .. } => Vec::new(),
        });
    }
    let mut max_forbidden = 0.0f64;
    for t in charge.iter().chain(flux.iter()).filter(|t| !t.is_empty()) {
        for a in 0..k {
            for b in 0..k {
                if parity[a] == parity[b] {
                    max_forbidden = max_forbidden.max(t[a][b]);
                }
            }
        }
    }
    Ok(ParityReport { parity, charge, flux, max_forbidden, states })
}

/// ⟨+|op|-⟩ with |±⟩ = (|a⟩ ± |b⟩)/√2 built from two state vectors.
pub fn plus_minus_element(op: &CMat, a: &CVec, b: &CVec) -> C64 {
    let s = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    let plus = (a + b) * s;
    let minus = (a - b) * s;
    plus.dotc(&(op * minus))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::max_abs;
    use crate::spectrum::{solve, SolveOptions};
    use rand::{Rng, SeedableRng};

    fn c(x: f64) -> C64 {
        C64::new(x, 0.0)
    }

    #[test]
    fn no_off_diagonal_is_exact() {
        let v = CMat::from_row_slice(3, 3, &[c(0.1), c(0.2), c(0.0), c(0.2), c(-0.1), c(0.0), c(0.0), c(0.0), c(0.3)]);
        let b = BlockStructure::new(vec![0.0, 0.5, 3.0], vec![0, 0, 1], v.clone()).unwrap();
        let r = schrieffer_wolff2(&b).unwrap();
        assert!(max_abs(&(r.h_eff - b.h0() - v)) < 1e-15);
    }

    #[test]
    fn degenerate_blocks_refused() {
        let v = CMat::from_row_slice(2, 2, &[c(0.0), c(0.1), c(0.1), c(0.0)]);
        let b = BlockStructure::new(vec![1.0, 1.0], vec![0, 1], v).unwrap();
        assert_eq!(schrieffer_wolff2(&b).unwrap_err(), Error::DegenerateAcrossBlocks(0, 1));
    }

    fn jc_single_excitation(g: f64, delta: f64) -> BlockStructure {
        // |e,0>, |g,1> with H0 = Ω/2 σz + ω_r a†a, Ω - ω_r = Δ
        let (om, wr) = (5.0 + delta, 5.0);
        let v = CMat::from_row_slice(2, 2, &[c(0.0), c(g), c(g), c(0.0)]);
        BlockStructure::new(vec![om / 2.0, -om / 2.0 + wr], vec![0, 1], v).unwrap()
    }

    #[test]
    fn dispersive_shift_cross_route() {
        let (g, d) = (0.1, 1.0);
        let r = schrieffer_wolff2(&jc_single_excitation(g, d)).unwrap();
        let shift = r.h_eff[(0, 0)].re - (5.0 + d) / 2.0;
        let chi = jc_dispersive(&[g], &[d]).unwrap().chi[0];
        assert!((shift - chi).abs() < 1e-12 * chi);
        assert!((chi - 0.01).abs() < 1e-15);
        assert!(jc_dispersive(&[g], &[-d]).unwrap().chi[0] < 0.0);
        assert_eq!(jc_dispersive(&[0.0], &[d]).unwrap().chi[0], 0.0);
    }

    #[test]
    fn exchange_coupling_two_qubits() {
        // |e g 0>, |g e 0>, |g g 1>
        let (o1, o2, wr, g1, g2) = (6.0, 6.3, 5.0, 0.05, 0.07);
        let h0 = vec![(o1 - o2) / 2.0, (o2 - o1) / 2.0, -(o1 + o2) / 2.0 + wr];
        let v = CMat::from_row_slice(3, 3, &[c(0.0), c(0.0), c(g1), c(0.0), c(0.0), c(g2), c(g1), c(g2), c(0.0)]);
        let r = schrieffer_wolff2(&BlockStructure::new(h0, vec![0, 0, 1], v).unwrap()).unwrap();
        let j = jc_dispersive(&[g1, g2], &[o1 - wr, o2 - wr]).unwrap().exchange.unwrap();
        assert!((r.h_eff[(0, 1)].re - j).abs() < 1e-14);
    }

    fn random_instance(seed: u64) -> (Vec<f64>, Vec<usize>, CMat) {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let n = 6;
        let e: Vec<f64> = (0..n).map(|i| if i < 3 { rng.gen_range(0.0..0.3) } else { rng.gen_range(2.0..2.5) }).collect();
        let blocks = (0..n).map(|i| usize::from(i >= 3)).collect();
        let mut v = CMat::from_fn(n, n, |_, _| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
        v = (&v + v.adjoint()) * c(0.5);
        (e, blocks, v)
    }

    fn sw_error(e: &[f64], blocks: &[usize], v: &CMat, eps: f64) -> f64 {
        let b = BlockStructure::new(e.to_vec(), blocks.to_vec(), v * c(eps)).unwrap();
        let r = schrieffer_wolff2(&b).unwrap();
        let (approx, _) = eigh(&r.h_eff);
        let (exact, _) = eigh(&(b.h0() + &b.v));
        approx.iter().zip(&exact).map(|(a, x)| (a - x).abs()).fold(0.0, f64::max)
    }

    #[test]
    fn error_is_third_order() {
        for seed in 0..5 {
            let (e, b, v) = random_instance(seed);
            let r = sw_error(&e, &b, &v, 0.02) / sw_error(&e, &b, &v, 0.01);
            assert!(r > 6.0 && r < 10.0, "seed {seed}: ratio {r}");
        }
    }

    #[test]
    fn second_order_generator_only_acts_at_third_order() {
        let (e, b, v) = random_instance(11);
        let diff = |eps: f64| -> f64 {
            let bs = BlockStructure::new(e.clone(), b.clone(), &v * c(eps)).unwrap();
            let r = schrieffer_wolff2(&bs).unwrap();
            let h = bs.h0() + &bs.v;
            let rot = |s: &CMat| {
                let u = s.clone().exp();
                let ui = (-s).exp();
                bs.split(&(u * &h * ui), true)
            };
            max_abs(&(rot(&(&r.s1 + &r.s2)) - rot(&r.s1)))
        };
        let ratio = diff(0.02) / diff(0.01);
        assert!(ratio > 6.0, "{ratio}");
    }

    #[test]
    fn fluxonium_half_flux_is_sweet() {
        let (ec, ej, el) = (1.0, 4.0, 1.0);
        let spec = HamiltonianSpec::shunted_junction(ec, ej, el, std::f64::consts::PI);
        let basis = BasisSpec::with_sizes(&spec, &[Some(60)]);
        let r = sweet_spot_test(
            |x| Ok(HamiltonianSpec::shunted_junction(ec, ej, el, x)),
            &basis,
            std::f64::consts::PI,
            3,
        )
        .unwrap();
        assert!(r.diagonal_difference.abs() < 1e-8);
        assert!(r.off_diagonal > 1e-3);
        // away from the sweet spot the slope matches finite differences of levels
        let x = 2.5;
        let r = sweet_spot_test(|x| Ok(HamiltonianSpec::shunted_junction(ec, ej, el, x)), &basis, x, 2).unwrap();
        let split = |x: f64| {
            let (v, _) = eigh(&assemble(&HamiltonianSpec::shunted_junction(ec, ej, el, x), &basis).unwrap().to_dense());
            v[1] - v[0]
        };
        let fd = (split(x + 1e-5) - split(x - 1e-5)) / 2e-5;
        assert!((fd + r.diagonal_difference).abs() < 1e-6 * fd.abs().max(1.0));
    }

    #[test]
    fn harmonic_has_no_flux_dependence() {
        let basis = BasisSpec::with_sizes(&HamiltonianSpec::harmonic(1.0, 2.0), &[Some(20)]);
        let r = sweet_spot_test(|_| Ok(HamiltonianSpec::harmonic(1.0, 2.0)), &basis, 0.3, 3).unwrap();
        assert!(r.elements.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn oscillator_parity_alternates() {
        let spec = HamiltonianSpec::harmonic(1.0, 2.0);
        let basis = BasisSpec::with_sizes(&spec, &[Some(30)]);
        let res = solve(&spec, &basis, 6, SolveOptions::default()).unwrap();
        let rep = parity_classify(&spec, &basis, &res).unwrap();
        assert_eq!(rep.parity, vec![1, -1, 1, -1, 1, -1]);
        assert!(rep.max_forbidden < 1e-9);
    }

    #[test]
    fn transmon_selection_rules() {
        let spec = HamiltonianSpec::cpb(0.25, 12.5, 0.0);
        let basis = BasisSpec::default_for(&spec);
        let res = solve(&spec, &basis, 4, SolveOptions::default()).unwrap();
        let rep = parity_classify(&spec, &basis, &res).unwrap();
        assert!(rep.charge[0][0][2] < 1e-9);
        assert!(rep.charge[0][0][1] > 0.1);
        assert!(parity_classify(&HamiltonianSpec::cpb(0.25, 12.5, 0.2), &basis, &res).is_err());
    }
}
