//! Two-qubit pure states stored as coefficient matrices.
//!
//! `|Ψ⟩⟩ = Σ_nm Ψ_nm |n⟩⊗|m⟩`; the row index belongs to beam 1 (the one that
//! passes through the device), the column index to beam 2.

use std::f64::consts::FRAC_1_SQRT_2;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{ComplexMatrix2, DEFAULT_TOLERANCE};
use crate::pauli::PAULI_MATRICES;

/// Threshold on `|det Ψ|` below which a state counts as rank deficient.
pub const RANK_TOLERANCE: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ComplexMatrix2", into = "ComplexMatrix2")]
pub struct TwoQubitPureState {
    psi: ComplexMatrix2,
}

impl TwoQubitPureState {
    /// Wraps a coefficient matrix that is already normalized within 1e-12.
    pub fn new(psi: ComplexMatrix2) -> Result<Self> {
        let norm_sqr = psi.frobenius_norm_sqr();
        if (norm_sqr - 1.0).abs() > DEFAULT_TOLERANCE {
            return Err(Error::NotNormalized { norm_sqr });
        }
        Ok(Self { psi })
    }

    /// Rescales `psi` to unit norm.
    pub fn normalized(psi: ComplexMatrix2) -> Result<Self> {
        let norm = psi.frobenius_norm();
        if norm == 0.0 {
            return Err(Error::ZeroState);
        }
        Ok(Self {
            psi: psi.scale_real(norm.recip()),
        })
    }

    /// Product state `|n⟩⊗|m⟩`.
    pub fn basis(n: usize, m: usize) -> Result<Self> {
        for idx in [n, m] {
            if idx > 1 {
                return Err(Error::BasisIndex(idx));
            }
        }
        let mut psi = [[num_complex::Complex64::new(0.0, 0.0); 2]; 2];
        psi[n][m] = num_complex::Complex64::new(1.0, 0.0);
        Ok(Self {
            psi: ComplexMatrix2::from_entries(psi),
        })
    }

    pub fn matrix(&self) -> &ComplexMatrix2 {
        &self.psi
    }

    pub fn is_full_rank(&self) -> bool {
        self.is_full_rank_with(RANK_TOLERANCE)
    }

    pub fn is_full_rank_with(&self, tolerance: f64) -> bool {
        self.psi.det().norm() > tolerance
    }

    /// Errors unless the state is full rank.
    pub fn ensure_full_rank(&self) -> Result<()> {
        let det = self.psi.det().norm();
        if det > RANK_TOLERANCE {
            Ok(())
        } else {
            Err(Error::NotFullRank { det })
        }
    }
}

impl TryFrom<ComplexMatrix2> for TwoQubitPureState {
    type Error = Error;

    fn try_from(psi: ComplexMatrix2) -> Result<Self> {
        Self::new(psi)
    }
}

impl From<TwoQubitPureState> for ComplexMatrix2 {
    fn from(s: TwoQubitPureState) -> Self {
        s.psi
    }
}

/// Index of one of the four Bell states `σ_k/√2`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "usize", into = "usize")]
pub struct BellIndex(usize);

impl BellIndex {
    pub fn new(k: usize) -> Result<Self> {
        if k <= 3 {
            Ok(Self(k))
        } else {
            Err(Error::BellIndex(k))
        }
    }

    pub fn get(self) -> usize {
        self.0
    }

    pub fn all() -> [BellIndex; 4] {
        [Self(0), Self(1), Self(2), Self(3)]
    }
}

impl TryFrom<usize> for BellIndex {
    type Error = Error;

    fn try_from(k: usize) -> Result<Self> {
        Self::new(k)
    }
}

impl From<BellIndex> for usize {
    fn from(k: BellIndex) -> Self {
        k.0
    }
}

/// Bell state with coefficient matrix `σ_k/√2`. `k = 1` is `(|01⟩+|10⟩)/√2`,
/// `k = 2` the singlet up to a global phase.
pub fn bell_state(k: BellIndex) -> TwoQubitPureState {
    TwoQubitPureState {
        psi: PAULI_MATRICES[k.0].scale_real(FRAC_1_SQRT_2),
    }
}

/// `(U ⊗ I)|Ψ⟩⟩`, whose coefficient matrix is `U·Ψ`.
pub fn apply_local(u: &ComplexMatrix2, state: &TwoQubitPureState) -> Result<TwoQubitPureState> {
    u.ensure_unitary(DEFAULT_TOLERANCE)?;
    Ok(TwoQubitPureState {
        psi: *u * state.psi,
    })
}

/// Two-beam Pauli expectation values `Δ_ij = ⟨σ_i ⊗ σ_j⟩`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorrelationTensor {
    values: [[f64; 4]; 4],
}

impl CorrelationTensor {
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i][j]
    }

    pub fn values(&self) -> &[[f64; 4]; 4] {
        &self.values
    }

    pub fn diagonal(&self) -> [f64; 4] {
        [0, 1, 2, 3].map(|i| self.values[i][i])
    }
}

/// `Δ_ij = Tr[Ψ† σ_i Ψ σ_j*]`, with `σ_j*` the entrywise conjugate.
pub fn correlation_tensor(state: &TwoQubitPureState) -> CorrelationTensor {
    correlation_tensor_with(&PAULI_MATRICES, state.matrix())
}

/// Same trace formula with an arbitrary operator table; `psi` need not be
/// normalized.
pub(crate) fn correlation_tensor_with(
    table: &[ComplexMatrix2; 4],
    psi: &ComplexMatrix2,
) -> CorrelationTensor {
    let psi_adj = psi.adjoint();
    let mut values = [[0.0; 4]; 4];
    for (i, row) in values.iter_mut().enumerate() {
        let left = psi_adj * table[i] * *psi;
        for (j, cell) in row.iter_mut().enumerate() {
            *cell = (left * table[j].conj()).trace().re;
        }
    }
    // exact by normalization; avoid 1 - 1e-16 leaking into estimators
    if (values[0][0] - 1.0).abs() <= DEFAULT_TOLERANCE {
        values[0][0] = 1.0;
    }
    CorrelationTensor { values }
}
