use nalgebra::DMatrix;

use crate::linalg::CMat;
use crate::netlist::{BranchKind, CircuitGraph, Coupling};
use crate::units::{lj_from_ej, FF, NH};
use crate::{Error, Result, C64};

use super::{MatrixKind, PortMatrixFunction};

/// Linear response of a netlist seen from a set of ports. Junctions are
/// linearized to L_J, current sources are open and resistors are real.
#[derive(Debug, Clone)]
pub struct NodalNetwork {
    graph: CircuitGraph,
    /// (plus, minus) node indices per port.
    pub ports: Vec<(usize, usize)>,
    gamma: DMatrix<f64>,
    inductive: Vec<usize>,
}

/// Port terminals of the named branches.
pub fn netlist_ports(g: &CircuitGraph, ids: &[&str]) -> Result<Vec<(usize, usize)>> {
    ids.iter()
        .map(|id| {
            g.branch(id)
                .map(|(_, b)| (b.plus, b.minus))
                .ok_or_else(|| Error::UnknownBranch { line: 0, id: id.to_string() })
        })
        .collect()
}

impl NodalNetwork {
    pub fn new(g: &CircuitGraph, ports: Vec<(usize, usize)>) -> Result<Self> {
        if ports.is_empty() {
            return Err(Error::DimensionMismatch("at least one port is required".into()));
        }
        if let Some(b) = g.branches.iter().find(|b| b.kind == BranchKind::VoltageSource) {
            return Err(Error::Unsupported(format!("voltage source {} in a linear network", b.id)));
        }
        let inductive: Vec<usize> = (0..g.branches.len()).filter(|&i| g.branches[i].kind.is_inductive()).collect();
        let mut lmat = DMatrix::from_fn(inductive.len(), inductive.len(), |a, b| {
            if a != b {
                return 0.0;
            }
            let br = &g.branches[inductive[a]];
            match br.kind {
                BranchKind::Josephson => lj_from_ej(br.value),
                _ => br.value,
            }
        });
        for c in &g.couplings {
            if let Coupling::Mutual { id, a, b, m_nh } = c {
                let pos = |name: &str| -> Result<usize> {
                    inductive
                        .iter()
                        .position(|&i| g.branches[i].id == name && g.branches[i].kind == BranchKind::Inductor)
                        .ok_or_else(|| Error::Unsupported(format!("mutual {id} must couple two linear inductors")))
                };
                let (ia, ib) = (pos(a)?, pos(b)?);
                lmat[(ia, ib)] += m_nh;
                lmat[(ib, ia)] += m_nh;
            }
        }
        if !inductive.is_empty() && lmat.clone().cholesky().is_none() {
            return Err(Error::PerfectCouplingSingular("inductance matrix not positive definite".into()));
        }
        let gamma = (lmat * NH).try_inverse().unwrap_or_else(|| DMatrix::zeros(0, 0));
        Ok(NodalNetwork { graph: g.clone(), ports, gamma, inductive })
    }

    /// Nodal admittance over non-ground nodes, SI.
    pub fn node_admittance(&self, s: C64) -> CMat {
        let n = self.graph.live_nodes();
        let mut y = CMat::zeros(n, n);
        let stamp = |y: &mut CMat, p: usize, m: usize, q: usize, r: usize, val: C64| {
            // current into (p, m) driven by voltage across (q, r)
            for (a, sa) in [(p, 1.0), (m, -1.0)] {
                for (b, sb) in [(q, 1.0), (r, -1.0)] {
                    if a > 0 && b > 0 {
                        y[(a - 1, b - 1)] += val * (sa * sb);
                    }
                }
            }
        };
        for b in &self.graph.branches {
            let val = match b.kind {
                BranchKind::Capacitor => s * (b.value * FF),
                BranchKind::Resistor => C64::new(1.0 / b.value, 0.0),
                _ => continue,
            };
            stamp(&mut y, b.plus, b.minus, b.plus, b.minus, val);
        }
        for (a, &ia) in self.inductive.iter().enumerate() {
            for (c, &ic) in self.inductive.iter().enumerate() {
                let g = self.gamma[(a, c)];
                if g != 0.0 {
                    let (ba, bc) = (&self.graph.branches[ia], &self.graph.branches[ic]);
                    stamp(&mut y, ba.plus, ba.minus, bc.plus, bc.minus, C64::new(g, 0.0) / s);
                }
            }
        }
        for c in &self.graph.couplings {
            if let Coupling::Gyrator { port1, port2, g_siemens, .. } = c {
                let g = C64::new(*g_siemens, 0.0);
                stamp(&mut y, port2.0, port2.1, port1.0, port1.1, g);
                stamp(&mut y, port1.0, port1.1, port2.0, port2.1, -g);
            }
        }
        y
    }

    /// Port impedance Pᵀ Y⁻¹ P.
    pub fn port_impedance(&self, s: C64) -> Result<CMat> {
        let y = self.node_admittance(s);
        let n = y.nrows();
        let np = self.ports.len();
        let p = CMat::from_fn(n, np, |i, k| {
            let (a, b) = self.ports[k];
            let mut v = 0.0;
            if a == i + 1 {
                v += 1.0;
            }
            if b == i + 1 {
                v -= 1.0;
            }
            C64::new(v, 0.0)
        });
        let lu = y.lu();
        let x = lu.solve(&p).ok_or_else(|| Error::SingularAtSample(format!("{s}")))?;
        if x.iter().any(|z| !z.is_finite()) {
            return Err(Error::SingularAtSample(format!("{s}")));
        }
        Ok(p.adjoint() * x)
    }

    pub fn impedance_function(&self, z0: f64) -> PortMatrixFunction {
        let me = self.clone();
        PortMatrixFunction::closed(MatrixKind::Z, self.ports.len(), z0, move |s| me.port_impedance(s))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netlist::parse_netlist;
    use std::f64::consts::PI;

    #[test]
    fn parallel_lc_impedance() {
        let g = parse_netlist("C C1 1 0 300fF\nL L1 1 0 20nH").unwrap();
        let net = NodalNetwork::new(&g, netlist_ports(&g, &["C1"]).unwrap()).unwrap();
        let w = 2.0 * PI * 1e9;
        let z = net.port_impedance(C64::new(0.0, w)).unwrap()[(0, 0)];
        let want = C64::new(1.0, 0.0) / (C64::new(0.0, w * 300e-15) + C64::new(0.0, -1.0 / (w * 20e-9)));
        assert!((z - want).norm() < 1e-10 * want.norm());
    }

    #[test]
    fn matched_gyrator_from_netlist() {
        let g = parse_netlist("R R1 1 0 1GOhm\nR R2 2 0 1GOhm\nGYR G 1 0 2 0 0.02").unwrap();
        let net = NodalNetwork::new(&g, netlist_ports(&g, &["R1", "R2"]).unwrap()).unwrap();
        let z = net.port_impedance(C64::new(0.0, 1e9)).unwrap();
        // the gyrator Z is antisymmetric with magnitude 1/G
        assert!((z[(0, 1)] + z[(1, 0)]).norm() < 1e-9);
        assert!((z[(1, 0)].re.abs() - 50.0).abs() < 1e-4);
    }

    #[test]
    fn voltage_source_refused() {
        let g = parse_netlist("C C1 1 0 1fF\nV V1 2 0 1V\nC C2 1 2 1fF").unwrap();
        assert!(matches!(NodalNetwork::new(&g, vec![(1, 0)]), Err(Error::Unsupported(_))));
    }
}
