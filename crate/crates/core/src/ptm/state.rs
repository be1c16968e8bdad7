use nalgebra::{DMatrix, DVector};

use super::{PauliBasis, PauliTransferMatrix, MAX_QUBITS, PSD_TOL};
use crate::error::{check_dim, Error, Result};
use crate::linalg::{c, min_hermitian_eigenvalue, CMatrix};

/// A density operator stored as its real Pauli coefficient vector.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityState {
    n_qubits: usize,
    coeffs: DVector<f64>,
}

impl DensityState {
    /// From Pauli coefficients. The identity coefficient must equal `1/sqrt(d)`.
    pub fn from_coefficients(n_qubits: usize, coeffs: DVector<f64>) -> Result<Self> {
        if !(1..=MAX_QUBITS).contains(&n_qubits) {
            return Err(Error::validation(format!("unsupported qubit count {n_qubits}")));
        }
        check_dim(1 << (2 * n_qubits), coeffs.len())?;
        let d = (1usize << n_qubits) as f64;
        if (coeffs[0] - 1.0 / d.sqrt()).abs() > 1e-9 {
            return Err(Error::validation("state does not have unit trace"));
        }
        Ok(Self { n_qubits, coeffs })
    }

    /// From a Hermitian matrix with unit trace.
    pub fn from_matrix(rho: &CMatrix) -> Result<Self> {
        let n_qubits = super::qubits_for_dim(rho.nrows())?;
        check_dim(rho.nrows(), rho.ncols())?;
        if (rho - rho.adjoint()).norm() > 1e-9 {
            return Err(Error::validation("density matrix is not Hermitian"));
        }
        let basis = PauliBasis::get(n_qubits);
        let coeffs = DVector::from_iterator(basis.len(), basis.coefficients(rho).into_iter().map(|z| z.re));
        Self::from_coefficients(n_qubits, coeffs)
    }

    /// Computational basis state `|index>` (qubit 1 most significant, `|0>` = spin up).
    pub fn basis_state(n_qubits: usize, index: usize) -> Self {
        let d = 1usize << n_qubits;
        assert!(index < d, "basis index {index} out of range for {n_qubits} qubits");
        let mut rho = CMatrix::zeros(d, d);
        rho[(index, index)] = c(1.0, 0.0);
        Self::from_matrix(&rho).expect("basis state is valid")
    }

    pub fn pure(psi: &CMatrix) -> Result<Self> {
        let norm = psi.norm();
        if norm == 0.0 {
            return Err(Error::validation("zero state vector"));
        }
        let v = psi / c(norm, 0.0);
        Self::from_matrix(&(&v * v.adjoint()))
    }

    pub fn maximally_mixed(n_qubits: usize) -> Self {
        let d = 1usize << n_qubits;
        let mut coeffs = DVector::zeros(d * d);
        coeffs[0] = 1.0 / (d as f64).sqrt();
        Self { n_qubits, coeffs }
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn coefficients(&self) -> &DVector<f64> {
        &self.coeffs
    }

    pub fn matrix(&self) -> CMatrix {
        let basis = PauliBasis::get(self.n_qubits);
        let coeffs: Vec<_> = self.coeffs.iter().map(|&x| c(x, 0.0)).collect();
        basis.operator(&coeffs)
    }

    pub fn evolve(&self, channel: &PauliTransferMatrix) -> Result<Self> {
        check_dim(self.coeffs.len(), channel.size())?;
        Ok(Self { n_qubits: self.n_qubits, coeffs: channel.entries() * &self.coeffs })
    }

    pub fn trace(&self) -> f64 {
        self.coeffs[0] * ((1usize << self.n_qubits) as f64).sqrt()
    }

    pub fn purity(&self) -> f64 {
        self.coeffs.norm_squared()
    }
}

/// A measurement given by `M` effects; row `m` of [`Povm::effects`] holds `Tr(P_i E_m)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Povm {
    n_qubits: usize,
    labels: Vec<String>,
    effects: DMatrix<f64>,
}

impl Povm {
    /// Build from effect operators; they must be PSD and sum to the identity.
    pub fn from_operators(labels: Vec<String>, operators: &[CMatrix]) -> Result<Self> {
        let first = operators.first().ok_or_else(|| Error::validation("POVM has no effects"))?;
        let n_qubits = super::qubits_for_dim(first.nrows())?;
        check_dim(operators.len(), labels.len())?;
        let d = first.nrows();
        let mut total = CMatrix::zeros(d, d);
        for e in operators {
            check_dim(d, e.nrows())?;
            check_dim(d, e.ncols())?;
            if (e - e.adjoint()).norm() > 1e-9 {
                return Err(Error::validation("POVM effect is not Hermitian"));
            }
            if min_hermitian_eigenvalue(e) < -PSD_TOL {
                return Err(Error::validation("POVM effect is not positive semidefinite"));
            }
            total += e;
        }
        if (total - CMatrix::identity(d, d)).norm() > 1e-9 {
            return Err(Error::validation("POVM effects do not sum to the identity"));
        }
        let basis = PauliBasis::get(n_qubits);
        let mut effects = DMatrix::zeros(operators.len(), basis.len());
        for (m, e) in operators.iter().enumerate() {
            for (i, z) in basis.coefficients(e).into_iter().enumerate() {
                effects[(m, i)] = z.re;
            }
        }
        Ok(Self { n_qubits, labels, effects })
    }

    /// Projective measurement in the computational basis. Labels use `0`/`1`
    /// per qubit, qubit 1 first.
    pub fn computational(n_qubits: usize) -> Self {
        let d = 1usize << n_qubits;
        let ops: Vec<CMatrix> = (0..d)
            .map(|k| {
                let mut m = CMatrix::zeros(d, d);
                m[(k, k)] = c(1.0, 0.0);
                m
            })
            .collect();
        let labels = (0..d).map(|k| format!("{:0width$b}", k, width = n_qubits)).collect();
        Self::from_operators(labels, &ops).expect("computational POVM is valid")
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn effects(&self) -> &DMatrix<f64> {
        &self.effects
    }

    /// Born probabilities `Tr(E_m ρ)`.
    pub fn probabilities(&self, state: &DensityState) -> DVector<f64> {
        &self.effects * state.coefficients()
    }
}
