//! Finite-dimensional Hamiltonians in mixed charge/Fock bases and their spectra.

mod assemble;
mod cpb;
mod jc;
mod ops;
mod sweep;

pub use assemble::{
    assemble, assemble_with, charge_operator, diagonalize, flux_operator, parity_operator, solve, AssembleOptions,
    CosineMode, SolveOptions,
};
pub use cpb::{cpb_levels, cpb_matrix, duffing_params, phi_grid_levels, phi_grid_oracle, DuffingParams};
pub use jc::{jc_model, jc_number_operator};
pub use ops::{oscillator_ops, OscillatorOps};
pub use sweep::{format_sig, sweep, sweep_csv, thread_count, SweepRow};

use serde::{Deserialize, Serialize};

use crate::builder::{HamiltonianSpec, VarKind};
use crate::linalg::{CMat, CVec, Csr};
use crate::{Error, Result};

pub const DEFAULT_N_MAX: usize = 15;
pub const DEFAULT_FOCK_DIM: usize = 40;
/// Largest total dimension handled by the dense solver.
pub const DENSE_LIMIT: usize = 4096;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum VarBasis {
    /// Charge states n0 - n_max ..= n0 + n_max with n0 = round(-n_g).
    Charge { n_max: usize, n_g: f64 },
    /// Oscillator states 0..dim of a frame with flux zero-point spread `phi_zpf`
    /// (equivalently frame impedance Z = phi_zpf^2 R_Q / pi).
    Fock { dim: usize, phi_zpf: f64 },
}

impl VarBasis {
    pub fn size(&self) -> usize {
        match *self {
            VarBasis::Charge { n_max, .. } => 2 * n_max + 1,
            VarBasis::Fock { dim, .. } => dim,
        }
    }

    pub fn charge_center(n_g: f64) -> i64 {
        (-n_g).round() as i64
    }

    /// Same basis with `extra` more states (charge bases grow symmetrically).
    pub fn grown(&self, extra: usize) -> Self {
        match *self {
            VarBasis::Charge { n_max, n_g } => VarBasis::Charge { n_max: n_max + extra.div_ceil(2), n_g },
            VarBasis::Fock { dim, phi_zpf } => VarBasis::Fock { dim: dim + extra, phi_zpf },
        }
    }

    pub fn doubled(&self) -> Self {
        match *self {
            VarBasis::Charge { n_max, n_g } => VarBasis::Charge { n_max: 2 * n_max, n_g },
            VarBasis::Fock { dim, phi_zpf } => VarBasis::Fock { dim: 2 * dim, phi_zpf },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BasisSpec {
    pub vars: Vec<VarBasis>,
}

impl BasisSpec {
    /// Charge bases for compact variables (offset taken from the spec), Fock
    /// bases in the harmonic frame of each extended variable.
    pub fn default_for(spec: &HamiltonianSpec) -> Self {
        Self::with_sizes(spec, &vec![None; spec.dim()])
    }

    /// Per-variable override of n_max (compact) or dim (extended).
    pub fn with_sizes(spec: &HamiltonianSpec, sizes: &[Option<usize>]) -> Self {
        let vars = (0..spec.dim())
            .map(|i| match spec.kinds[i] {
                VarKind::Compact => VarBasis::Charge {
                    n_max: sizes.get(i).copied().flatten().unwrap_or(DEFAULT_N_MAX),
                    n_g: spec.offset[i],
                },
                VarKind::Extended => VarBasis::Fock {
                    dim: sizes.get(i).copied().flatten().unwrap_or(DEFAULT_FOCK_DIM),
                    phi_zpf: spec.scales[i].phi_zpf,
                },
            })
            .collect();
        BasisSpec { vars }
    }

    pub fn dims(&self) -> Vec<usize> {
        self.vars.iter().map(VarBasis::size).collect()
    }

    pub fn total_dim(&self) -> usize {
        self.dims().iter().product()
    }

    pub fn grown(&self, extra: usize) -> Self {
        BasisSpec { vars: self.vars.iter().map(|v| v.grown(extra)).collect() }
    }

    pub fn doubled(&self) -> Self {
        BasisSpec { vars: self.vars.iter().map(VarBasis::doubled).collect() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Storage {
    Dense(CMat),
    Sparse(Csr),
}

#[derive(Debug, Clone, PartialEq)]
pub struct HermitianOperator {
    pub dim: usize,
    /// Variable labels in tensor-product order.
    pub labels: Vec<String>,
    /// Local dimension of each tensor factor.
    pub dims: Vec<usize>,
    pub storage: Storage,
}

impl HermitianOperator {
    pub fn dense(labels: Vec<String>, dims: Vec<usize>, m: CMat) -> Self {
        HermitianOperator { dim: m.nrows(), labels, dims, storage: Storage::Dense(m) }
    }

    pub fn to_dense(&self) -> CMat {
        match &self.storage {
            Storage::Dense(m) => m.clone(),
            Storage::Sparse(s) => s.to_dense(),
        }
    }

    pub fn to_sparse(&self) -> Csr {
        match &self.storage {
            Storage::Dense(m) => Csr::from_dense(m),
            Storage::Sparse(s) => s.clone(),
        }
    }

    pub fn is_sparse(&self) -> bool {
        matches!(self.storage, Storage::Sparse(_))
    }

    pub fn matvec(&self, v: &CVec) -> CVec {
        match &self.storage {
            Storage::Dense(m) => m * v,
            Storage::Sparse(s) => s.matvec(v),
        }
    }

    pub fn hermiticity_defect(&self) -> f64 {
        match &self.storage {
            Storage::Dense(m) => crate::linalg::hermiticity_defect(m),
            Storage::Sparse(s) => s.hermiticity_defect(),
        }
    }

    /// Max-row-sum norm, an upper bound on the spectral norm.
    pub fn norm_bound(&self) -> f64 {
        match &self.storage {
            Storage::Dense(m) => crate::linalg::inf_norm(m),
            Storage::Sparse(s) => s.inf_norm(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumResult {
    /// Ascending, GHz.
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: Option<CMat>,
    /// Local dimensions used.
    pub dims: Vec<usize>,
    /// Largest shift of the returned levels when every truncation grows by 4
    /// states; NaN when no check was run.
    pub truncation_error: f64,
    /// Number of x2 escalations that were needed.
    pub escalations: usize,
}

impl SpectrumResult {
    pub fn transition(&self, i: usize, j: usize) -> f64 {
        self.eigenvalues[j] - self.eigenvalues[i]
    }
}

pub(crate) fn check_dim(dim: usize, min: usize) -> Result<()> {
    if dim < min {
        return Err(Error::TruncationTooSmall(dim));
    }
    Ok(())
}
