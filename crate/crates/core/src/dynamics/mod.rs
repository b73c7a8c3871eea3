//! Lindblad dynamics on the emitter ⊗ Fock space.
//!
//! Vectorization is column-stacking: `vec(ρ)[i + j·D] = ρ[i, j]`, so that
//! `vec(AXB) = (Bᵀ ⊗ A) vec(X)`.
//!
//! Every Hamiltonian and jump operator of the model changes the excitation
//! number `N + σ_z/2 + 1/2` of the ket and the bra by the same amount, so the
//! Liouvillian preserves `Δ = N(i) − N(j)` of a matrix unit `|i⟩⟨j|`. The
//! steady state lives in the `Δ = 0` sector and the regression vector `aρ`
//! in `Δ = −1`. A [`VecBasis`] is either the full column-stacked basis or
//! one such sector, listed in column-stacking order.

mod liouvillian;
mod propagate;
mod steady;

pub use liouvillian::{
    bose_einstein, lindblad_term, liouvillian, sector_liouvillian, thermal_liouvillian,
};
pub use propagate::{
    integrate, propagate, Eigenmodes, IntegratorOptions, PropagationMethod, Trajectory,
    DEFAULT_CONDITION_LIMIT,
};
pub use steady::{
    dissipative_params, solve_steady_state, steady_state, top_fock_population, CutoffPolicy,
    SteadyState, CRITICAL_LAMBDA_OFFSET, DEGENERACY_PIVOT_RATIO,
};

use faer::{c64, Col, Mat, Side};

use crate::algebra::FockCutoff;
use crate::error::{Error, Result};
use crate::linalg::{dagger, max_abs, re, trace, trace_product, CCol, CMat, ZERO};
use crate::model::excitation_numbers;

const ABSENT: u32 = u32::MAX;

/// Ordered set of matrix units `|i⟩⟨j|` spanning a Liouvillian-invariant
/// subspace.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VecBasis {
    dim: usize,
    pairs: Vec<(usize, usize)>,
    lookup: Vec<u32>,
    full: bool,
}

impl VecBasis {
    /// Column-stacked basis of all `dim²` matrix units.
    pub fn full(dim: usize) -> Self {
        let pairs = (0..dim).flat_map(|j| (0..dim).map(move |i| (i, j))).collect();
        Self::from_pairs(dim, pairs, true)
    }

    /// Matrix units with `N(i) − N(j) = shift`.
    pub fn excitation_sector(cutoff: FockCutoff, shift: i64) -> Self {
        let nexc = excitation_numbers(cutoff);
        let dim = nexc.len();
        let pairs = (0..dim)
            .flat_map(|j| (0..dim).map(move |i| (i, j)))
            .filter(|&(i, j)| nexc[i] as i64 - nexc[j] as i64 == shift)
            .collect();
        Self::from_pairs(dim, pairs, false)
    }

    fn from_pairs(dim: usize, pairs: Vec<(usize, usize)>, full: bool) -> Self {
        let mut lookup = vec![ABSENT; dim * dim];
        for (k, &(i, j)) in pairs.iter().enumerate() {
            lookup[i + j * dim] = k as u32;
        }
        VecBasis {
            dim,
            pairs,
            lookup,
            full,
        }
    }

    /// Hilbert-space dimension.
    pub fn hilbert_dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn is_full(&self) -> bool {
        self.full
    }

    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    #[inline]
    pub fn position(&self, i: usize, j: usize) -> Option<usize> {
        match self.lookup[i + j * self.dim] {
            ABSENT => None,
            k => Some(k as usize),
        }
    }

    /// Positions of the diagonal units, i.e. the support of the trace functional.
    pub fn diagonal_positions(&self) -> Vec<usize> {
        (0..self.dim).filter_map(|i| self.position(i, i)).collect()
    }

    /// Restrict `m` to the basis. Entries outside it are dropped; use
    /// [`VecBasis::leakage`] to check that nothing was lost.
    pub fn vectorize(&self, m: &CMat) -> CCol {
        Col::from_fn(self.len(), |k| {
            let (i, j) = self.pairs[k];
            m[(i, j)]
        })
    }

    pub fn unvectorize(&self, v: &CCol) -> CMat {
        let mut m = Mat::zeros(self.dim, self.dim);
        for (k, &(i, j)) in self.pairs.iter().enumerate() {
            m[(i, j)] = v[k];
        }
        m
    }

    /// Largest modulus of `m` outside the basis.
    pub fn leakage(&self, m: &CMat) -> f64 {
        let mut worst = 0.0f64;
        for j in 0..self.dim {
            for i in 0..self.dim {
                if self.position(i, j).is_none() {
                    worst = worst.max(m[(i, j)].norm());
                }
            }
        }
        worst
    }

    /// Row vector `t` with `t · vec(X) = Tr[op X]`.
    pub fn trace_against(&self, op: &CMat) -> CCol {
        // Tr[op X] = Σ_ij op[j,i] X[i,j]
        Col::from_fn(self.len(), |k| {
            let (i, j) = self.pairs[k];
            op[(j, i)]
        })
    }
}

/// Linear map on vectorized operators, `d vec(ρ)/dt = L vec(ρ)`.
#[derive(Clone, Debug)]
pub struct Superoperator {
    basis: VecBasis,
    matrix: CMat,
}

impl Superoperator {
    pub fn new(basis: VecBasis, matrix: CMat) -> Result<Self> {
        if matrix.nrows() != basis.len() || matrix.ncols() != basis.len() {
            return Err(Error::Dimension(format!(
                "superoperator matrix is {}x{} but the basis has {} elements",
                matrix.nrows(),
                matrix.ncols(),
                basis.len()
            )));
        }
        Ok(Superoperator { basis, matrix })
    }

    pub fn basis(&self) -> &VecBasis {
        &self.basis
    }

    pub fn matrix(&self) -> &CMat {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMat {
        self.matrix
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn apply(&self, v: &CCol) -> CCol {
        &self.matrix * v
    }

    /// `L(X)` for an operator `X` whose support lies inside the basis.
    pub fn apply_to_operator(&self, x: &CMat) -> CMat {
        self.basis.unvectorize(&self.apply(&self.basis.vectorize(x)))
    }
}

impl std::ops::Add for &Superoperator {
    type Output = Superoperator;

    fn add(self, rhs: &Superoperator) -> Superoperator {
        assert_eq!(self.basis.pairs, rhs.basis.pairs, "superoperators act on different bases");
        Superoperator {
            basis: self.basis.clone(),
            matrix: &self.matrix + &rhs.matrix,
        }
    }
}

/// Hermitian, unit-trace, positive-semidefinite operator.
#[derive(Clone, Debug)]
pub struct DensityMatrix {
    matrix: CMat,
    min_eigenvalue: f64,
}

impl DensityMatrix {
    pub const HERMITICITY_TOL: f64 = 1e-12;
    pub const TRACE_TOL: f64 = 1e-12;
    pub const PSD_TOL: f64 = 1e-10;

    /// Validate `matrix` against the density-matrix invariants.
    pub fn new(matrix: CMat) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() {
            return Err(Error::Dimension("density matrix must be square".into()));
        }
        let herm = max_abs(&(&matrix - dagger(&matrix)));
        let tr = trace(&matrix);
        let min_eigenvalue = min_eigenvalue(&matrix)?;
        let fail = |reason: String| Error::InvalidSteadyState {
            reason,
            min_eigenvalue,
            top_population: f64::NAN,
            residual: f64::NAN,
        };
        if herm > Self::HERMITICITY_TOL {
            return Err(fail(format!("not Hermitian (deviation {herm:.3e})")));
        }
        if (tr - c64::new(1.0, 0.0)).norm() > Self::TRACE_TOL {
            return Err(fail(format!("trace {tr} differs from 1")));
        }
        if min_eigenvalue < -Self::PSD_TOL {
            return Err(fail("negative eigenvalue".into()));
        }
        Ok(DensityMatrix {
            matrix,
            min_eigenvalue,
        })
    }

    pub fn matrix(&self) -> &CMat {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.min_eigenvalue
    }

    pub fn trace(&self) -> c64 {
        trace(&self.matrix)
    }

    /// `Tr[op ρ]`.
    pub fn expectation(&self, op: &CMat) -> c64 {
        trace_product(op, &self.matrix)
    }

    pub fn population(&self, index: usize) -> f64 {
        self.matrix[(index, index)].re
    }
}

pub(crate) fn min_eigenvalue(m: &CMat) -> Result<f64> {
    let herm = (m + dagger(m)) * faer::Scale(re(0.5));
    let evals = herm
        .self_adjoint_eigenvalues(Side::Lower)
        .map_err(|e| Error::Numerical(format!("Hermitian eigensolver failed: {e:?}")))?;
    Ok(evals.first().copied().unwrap_or(0.0))
}

/// Pure state `|i⟩⟨i|` on a `dim`-dimensional space.
pub fn projector(dim: usize, index: usize) -> CMat {
    Mat::from_fn(dim, dim, |i, j| {
        if i == index && j == index {
            crate::linalg::ONE
        } else {
            ZERO
        }
    })
}
