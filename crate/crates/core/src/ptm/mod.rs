//! Channels and states in the Pauli transfer matrix picture.

mod basis;
pub mod metrics;
mod state;

use nalgebra::DMatrix;
use rand::Rng;
use serde::{Deserialize, Serialize};

pub use basis::{PauliBasis, MAX_QUBITS};
pub use metrics::{
    average_gate_fidelity, gate_fidelity, pauli_trace_fidelity, state_fidelity_and_concurrence,
    unitarity_and_incoherence, FidelityConvention, GateFidelity,
};
pub use state::{DensityState, Povm};

use crate::error::{check_dim, Error, Result};
use crate::linalg::{c, ginibre, hermitian_eigen, is_unitary, CMatrix};

/// Tolerance used for algebraic identities such as unitarity checks.
pub const ALGEBRA_TOL: f64 = 1e-10;
/// Tolerance used for positive-semidefiniteness checks.
pub const PSD_TOL: f64 = 1e-8;

/// Real `d² × d²` superoperator, entry `(i, j) = Tr(P_i Λ(P_j))`.
#[derive(Debug, Clone, PartialEq)]
pub struct PauliTransferMatrix {
    n_qubits: usize,
    entries: DMatrix<f64>,
}

impl PauliTransferMatrix {
    pub fn new(n_qubits: usize, entries: DMatrix<f64>) -> Result<Self> {
        if !(1..=MAX_QUBITS).contains(&n_qubits) {
            return Err(Error::validation(format!("unsupported qubit count {n_qubits}")));
        }
        let dd = 1usize << (2 * n_qubits);
        check_dim(dd, entries.nrows())?;
        check_dim(dd, entries.ncols())?;
        Ok(Self { n_qubits, entries })
    }

    pub fn identity(n_qubits: usize) -> Self {
        let dd = 1usize << (2 * n_qubits);
        Self { n_qubits, entries: DMatrix::identity(dd, dd) }
    }

    /// The channel that maps every state to the maximally mixed state.
    pub fn completely_depolarizing(n_qubits: usize) -> Self {
        let dd = 1usize << (2 * n_qubits);
        let mut entries = DMatrix::zeros(dd, dd);
        entries[(0, 0)] = 1.0;
        Self { n_qubits, entries }
    }

    /// `diag(1, 1-p, ..., 1-p)`.
    pub fn depolarizing(n_qubits: usize, p: f64) -> Self {
        let dd = 1usize << (2 * n_qubits);
        let mut entries = DMatrix::identity(dd, dd) * (1.0 - p);
        entries[(0, 0)] = 1.0;
        Self { n_qubits, entries }
    }

    /// PTM of the unitary channel `ρ ↦ U ρ U†`.
    pub fn from_unitary(u: &CMatrix) -> Result<Self> {
        let n_qubits = qubits_for_dim(u.nrows())?;
        if !is_unitary(u, ALGEBRA_TOL) {
            return Err(Error::validation("matrix is not unitary to 1e-10"));
        }
        Ok(Self::from_kraus_unchecked(n_qubits, std::slice::from_ref(u)))
    }

    /// PTM of the channel `ρ ↦ Σ_k K_k ρ K_k†`. Completeness is not checked.
    pub fn from_kraus(kraus: &[CMatrix]) -> Result<Self> {
        let first = kraus.first().ok_or_else(|| Error::validation("empty Kraus set"))?;
        let n_qubits = qubits_for_dim(first.nrows())?;
        for k in kraus {
            check_dim(first.nrows(), k.nrows())?;
            check_dim(first.nrows(), k.ncols())?;
        }
        Ok(Self::from_kraus_unchecked(n_qubits, kraus))
    }

    fn from_kraus_unchecked(n_qubits: usize, kraus: &[CMatrix]) -> Self {
        let basis = PauliBasis::get(n_qubits);
        let dd = basis.len();
        let mut entries = DMatrix::zeros(dd, dd);
        for j in 0..dd {
            let pj = basis.element(j);
            let mut image = CMatrix::zeros(pj.nrows(), pj.ncols());
            for k in kraus {
                image += k * pj * k.adjoint();
            }
            for (i, p) in basis.sparse.iter().enumerate() {
                entries[(i, j)] = p.trace_with(&image).re;
            }
        }
        Self { n_qubits, entries }
    }

    /// Haar-random unitary channel.
    pub fn random_unitary<R: Rng + ?Sized>(n_qubits: usize, rng: &mut R) -> Self {
        let u = crate::linalg::haar_unitary(1 << n_qubits, rng);
        Self::from_kraus_unchecked(n_qubits, std::slice::from_ref(&u))
    }

    /// Random CPTP map with `rank` Kraus operators taken from a random isometry.
    pub fn random_cptp<R: Rng + ?Sized>(n_qubits: usize, rank: usize, rng: &mut R) -> Self {
        let d = 1usize << n_qubits;
        let rank = rank.max(1);
        let g = ginibre(d * rank, d, rng);
        let v = g.qr().q();
        let kraus: Vec<CMatrix> = (0..rank).map(|k| v.rows(k * d, d).into_owned()).collect();
        Self::from_kraus_unchecked(n_qubits, &kraus)
    }

    /// Random CPTP channel close to the identity: a mixture `(1-w)·U + w·random`
    /// where `U` is a small random unitary rotation.
    pub fn random_near_identity<R: Rng + ?Sized>(n_qubits: usize, strength: f64, rng: &mut R) -> Self {
        let d = 1usize << n_qubits;
        let h = ginibre(d, d, rng);
        let h = (&h + h.adjoint()) * c(0.5 * strength, 0.0);
        let u = (h * c(0.0, -1.0)).exp();
        let coherent = Self::from_kraus_unchecked(n_qubits, std::slice::from_ref(&u));
        let noise = Self::random_cptp(n_qubits, 2, rng);
        let w = strength.clamp(0.0, 1.0) * 0.5;
        let entries = coherent.entries * (1.0 - w) + noise.entries * w;
        Self { n_qubits, entries }
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        1 << self.n_qubits
    }

    /// Side length `d²` of the matrix.
    pub fn size(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn entries_mut(&mut self) -> &mut DMatrix<f64> {
        &mut self.entries
    }

    pub fn into_entries(self) -> DMatrix<f64> {
        self.entries
    }

    /// `self ∘ other`: apply `other` first.
    pub fn compose(&self, other: &Self) -> Result<Self> {
        check_dim(self.size(), other.size())?;
        Ok(Self { n_qubits: self.n_qubits, entries: &self.entries * &other.entries })
    }

    pub fn trace(&self) -> f64 {
        self.entries.trace()
    }

    /// Largest deviation of the top row from `[1, 0, ..., 0]`.
    pub fn tp_violation(&self) -> f64 {
        self.entries
            .row(0)
            .iter()
            .enumerate()
            .map(|(j, &v)| (v - if j == 0 { 1.0 } else { 0.0 }).abs())
            .fold(0.0, f64::max)
    }

    pub fn is_trace_preserving(&self, tol: f64) -> bool {
        self.tp_violation() <= tol
    }

    /// Overwrite the top row with `[1, 0, ..., 0]`.
    pub fn enforce_tp(&mut self) {
        let n = self.size();
        for j in 0..n {
            self.entries[(0, j)] = if j == 0 { 1.0 } else { 0.0 };
        }
    }

    /// Lower-right `(d²-1) × (d²-1)` block acting on traceless operators.
    pub fn unital_block(&self) -> DMatrix<f64> {
        let n = self.size();
        self.entries.view((1, 1), (n - 1, n - 1)).into_owned()
    }

    pub fn distance(&self, other: &Self) -> f64 {
        (&self.entries - &other.entries).norm()
    }

    pub fn choi(&self) -> ChoiMatrix {
        ChoiMatrix::from_ptm(self)
    }

    /// Minimum eigenvalue of the Choi matrix; non-negative iff the map is CP.
    pub fn min_choi_eigenvalue(&self) -> f64 {
        self.choi().min_eigenvalue()
    }

    pub fn is_cptp(&self, tol: f64) -> bool {
        self.is_trace_preserving(tol) && self.min_choi_eigenvalue() >= -tol
    }

    pub fn to_json(&self) -> PtmJson {
        PtmJson {
            n_qubits: self.n_qubits,
            entries: self.entries.transpose().iter().copied().collect(),
        }
    }

    pub fn from_json(json: &PtmJson) -> Result<Self> {
        let dd = 1usize << (2 * json.n_qubits);
        check_dim(dd * dd, json.entries.len())?;
        Self::new(json.n_qubits, DMatrix::from_row_slice(dd, dd, &json.entries))
    }
}

/// Serialised PTM: `{ "n_qubits": n, "entries": [row-major d⁴ reals] }`.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct PtmJson {
    pub n_qubits: usize,
    pub entries: Vec<f64>,
}

impl Serialize for PauliTransferMatrix {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_json().serialize(s)
    }
}

impl<'de> Deserialize<'de> for PauliTransferMatrix {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let json = PtmJson::deserialize(d)?;
        Self::from_json(&json).map_err(serde::de::Error::custom)
    }
}

/// Choi matrix `J = (1/d) Σ_ij R_ij P_i ⊗ P_jᵀ`, normalised to unit trace for
/// trace-preserving maps. The map `R ↦ J` scales Frobenius norms by exactly `1/d`.
#[derive(Debug, Clone)]
pub struct ChoiMatrix {
    n_qubits: usize,
    matrix: CMatrix,
}

impl ChoiMatrix {
    pub fn from_ptm(ptm: &PauliTransferMatrix) -> Self {
        let basis = PauliBasis::get(ptm.n_qubits);
        let dd = basis.len();
        let scale = 1.0 / basis.dim() as f64;
        let mut matrix = CMatrix::zeros(dd, dd);
        for i in 0..dd {
            for j in 0..dd {
                let r = ptm.entries[(i, j)];
                if r == 0.0 {
                    continue;
                }
                let w = r * scale;
                for &(row, col, v) in &basis.choi_terms[i * dd + j] {
                    matrix[(row, col)] += v * w;
                }
            }
        }
        Self { n_qubits: ptm.n_qubits, matrix }
    }

    pub fn new(n_qubits: usize, matrix: CMatrix) -> Result<Self> {
        let dd = 1usize << (2 * n_qubits);
        check_dim(dd, matrix.nrows())?;
        check_dim(dd, matrix.ncols())?;
        Ok(Self { n_qubits, matrix })
    }

    /// Inverse of [`ChoiMatrix::from_ptm`]; the imaginary part (zero for
    /// Hermitian input) is dropped.
    pub fn to_ptm(&self) -> PauliTransferMatrix {
        let basis = PauliBasis::get(self.n_qubits);
        let dd = basis.len();
        let d = basis.dim() as f64;
        let mut entries = DMatrix::zeros(dd, dd);
        for i in 0..dd {
            for j in 0..dd {
                let mut acc = c(0.0, 0.0);
                for &(row, col, v) in &basis.choi_terms[i * dd + j] {
                    acc += v.conj() * self.matrix[(row, col)];
                }
                entries[(i, j)] = d * acc.re;
            }
        }
        PauliTransferMatrix { n_qubits: self.n_qubits, entries }
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        hermitian_eigen(&self.matrix).0
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues().first().copied().unwrap_or(0.0)
    }

    /// Project onto the PSD cone by clipping negative eigenvalues.
    pub fn clip_negative(&self) -> Self {
        let (vals, vecs) = hermitian_eigen(&self.matrix);
        let mut scaled = vecs.clone();
        for (k, &v) in vals.iter().enumerate() {
            let w = c(v.max(0.0), 0.0);
            for r in 0..scaled.nrows() {
                scaled[(r, k)] *= w;
            }
        }
        Self { n_qubits: self.n_qubits, matrix: scaled * vecs.adjoint() }
    }
}

pub(crate) fn qubits_for_dim(d: usize) -> Result<usize> {
    (1..=MAX_QUBITS)
        .find(|&n| 1usize << n == d)
        .ok_or_else(|| Error::validation(format!("dimension {d} is not 2ⁿ for n in 1..={MAX_QUBITS}")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{haar_unitary, min_hermitian_eigenvalue};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn pauli_x() -> CMatrix {
        CMatrix::from_row_slice(2, 2, &[c(0., 0.), c(1., 0.), c(1., 0.), c(0., 0.)])
    }

    /// Oracle: conjugate each normalised Pauli by `u` with dense matrices.
    fn brute_force_ptm(u: &CMatrix) -> DMatrix<f64> {
        let n = qubits_for_dim(u.nrows()).unwrap();
        let b = PauliBasis::get(n);
        DMatrix::from_fn(b.len(), b.len(), |i, j| {
            (b.element(i) * u * b.element(j) * u.adjoint()).trace().re
        })
    }

    fn cnot() -> CMatrix {
        let mut m = CMatrix::zeros(4, 4);
        m[(0, 0)] = c(1., 0.);
        m[(1, 1)] = c(1., 0.);
        m[(2, 3)] = c(1., 0.);
        m[(3, 2)] = c(1., 0.);
        m
    }

    #[test]
    fn identity_and_x() {
        let id = PauliTransferMatrix::from_unitary(&CMatrix::identity(2, 2)).unwrap();
        assert!((id.entries() - DMatrix::<f64>::identity(4, 4)).norm() < 1e-14);
        let x = PauliTransferMatrix::from_unitary(&pauli_x()).unwrap();
        let expect = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![1.0, 1.0, -1.0, -1.0]));
        assert!((x.entries() - &expect).norm() < 1e-14);
        assert!((x.entries() - brute_force_ptm(&pauli_x())).norm() < 1e-14);
    }

    #[test]
    fn cnot_is_signed_permutation_and_involution() {
        let p = PauliTransferMatrix::from_unitary(&cnot()).unwrap();
        assert!((p.entries() - brute_force_ptm(&cnot())).norm() < 1e-12);
        for row in p.entries().row_iter() {
            let nonzero: Vec<f64> = row.iter().copied().filter(|v| v.abs() > 1e-12).collect();
            assert_eq!(nonzero.len(), 1);
            assert!((nonzero[0].abs() - 1.0).abs() < 1e-12);
        }
        let sq = p.compose(&p).unwrap();
        assert!((sq.entries() - DMatrix::<f64>::identity(16, 16)).norm() < 1e-12);
    }

    #[test]
    fn non_unitary_rejected() {
        let m = CMatrix::identity(2, 2) * c(2.0, 0.0);
        assert!(matches!(PauliTransferMatrix::from_unitary(&m), Err(Error::Validation(_))));
    }

    #[test]
    fn composition_matches_product() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..5 {
            let u = haar_unitary(4, &mut rng);
            let v = haar_unitary(4, &mut rng);
            let puv = PauliTransferMatrix::from_unitary(&(&u * &v)).unwrap();
            let pu = PauliTransferMatrix::from_unitary(&u).unwrap();
            let pv = PauliTransferMatrix::from_unitary(&v).unwrap();
            assert!(puv.distance(&pu.compose(&pv).unwrap()) < 1e-10);
            // orthogonal
            let e = pu.entries();
            assert!((e.transpose() * e - DMatrix::<f64>::identity(16, 16)).norm() < 1e-10);
        }
    }

    #[test]
    fn choi_of_identity_is_bell_projector() {
        for n in 1..=2 {
            let d = 1usize << n;
            let j = PauliTransferMatrix::identity(n).choi();
            let mut omega = CMatrix::zeros(d * d, 1);
            for a in 0..d {
                omega[(a * d + a, 0)] = c(1.0 / (d as f64).sqrt(), 0.0);
            }
            let proj = &omega * omega.adjoint();
            assert!((j.matrix() - proj).norm() < 1e-12);
        }
    }

    #[test]
    fn choi_of_completely_depolarizing_is_maximally_mixed() {
        let j = PauliTransferMatrix::completely_depolarizing(2).choi();
        let expect = CMatrix::identity(16, 16) * c(1.0 / 16.0, 0.0);
        assert!((j.matrix() - expect).norm() < 1e-12);
    }

    #[test]
    fn choi_agrees_with_kraus_definition() {
        // J = (1/d) Σ_ab Λ(|a><b|) ⊗ |a><b|
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let d = 2;
        let g = ginibre(d * 2, d, &mut rng).qr().q();
        let kraus: Vec<CMatrix> = (0..2).map(|k| g.rows(k * d, d).into_owned()).collect();
        let ptm = PauliTransferMatrix::from_kraus(&kraus).unwrap();
        let mut direct = CMatrix::zeros(d * d, d * d);
        for a in 0..d {
            for b in 0..d {
                let mut eab = CMatrix::zeros(d, d);
                eab[(a, b)] = c(1.0, 0.0);
                let mut img = CMatrix::zeros(d, d);
                for k in &kraus {
                    img += k * &eab * k.adjoint();
                }
                direct += img.kronecker(&eab);
            }
        }
        direct *= c(1.0 / d as f64, 0.0);
        assert!((ptm.choi().matrix() - direct).norm() < 1e-12);
    }

    #[test]
    fn random_cptp_is_physical() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for n in 1..=2 {
            for rank in 1..4 {
                let ch = PauliTransferMatrix::random_cptp(n, rank, &mut rng);
                assert!(ch.tp_violation() < 1e-12);
                assert!(ch.min_choi_eigenvalue() >= -1e-10);
                assert!(min_hermitian_eigenvalue(ch.choi().matrix()) >= -1e-10);
            }
        }
    }

    #[test]
    fn json_roundtrip() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let ch = PauliTransferMatrix::random_cptp(2, 2, &mut rng);
        let s = serde_json::to_string(&ch).unwrap();
        let back: PauliTransferMatrix = serde_json::from_str(&s).unwrap();
        assert!(ch.distance(&back) < 1e-12);
        let v: serde_json::Value = serde_json::from_str(&s).unwrap();
        assert_eq!(v["n_qubits"], 2);
        assert_eq!(v["entries"].as_array().unwrap().len(), 256);
        // row-major: entry index 1 is (0, 1)
        assert_eq!(v["entries"][16].as_f64().unwrap(), ch.entries()[(1, 0)]);
    }
}
