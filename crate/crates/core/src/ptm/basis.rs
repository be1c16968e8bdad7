//! Normalised n-qubit Pauli basis.
//!
//! Ordering is lexicographic over `I, X, Y, Z` per qubit with qubit 1 as the
//! slowest index, so for two qubits the order is `II, IX, IY, IZ, XI, ...`.
//! Every element is scaled by `1/sqrt(d)` so that `Tr(P_i P_j) = δ_ij`.
//! Computational basis states use the same convention: qubit 1 is the most
//! significant bit and `|0>` is spin up.

use std::sync::OnceLock;

use nalgebra::Complex;

use crate::linalg::{c, CMatrix, C64};

pub const MAX_QUBITS: usize = 3;

const LETTERS: [char; 4] = ['I', 'X', 'Y', 'Z'];

/// A Pauli operator stored as a monomial matrix: row `r` has a single
/// non-zero entry `values[r]` at column `cols[r]`.
#[derive(Debug, Clone)]
pub(crate) struct SparsePauli {
    pub cols: Vec<usize>,
    pub values: Vec<C64>,
}

impl SparsePauli {
    fn single(letter: usize) -> Self {
        let (cols, values) = match letter {
            0 => (vec![0, 1], vec![c(1.0, 0.0), c(1.0, 0.0)]),
            1 => (vec![1, 0], vec![c(1.0, 0.0), c(1.0, 0.0)]),
            2 => (vec![1, 0], vec![c(0.0, -1.0), c(0.0, 1.0)]),
            3 => (vec![0, 1], vec![c(1.0, 0.0), c(-1.0, 0.0)]),
            _ => unreachable!("pauli letter out of range"),
        };
        Self { cols, values }
    }

    fn kron(&self, other: &Self) -> Self {
        let db = other.cols.len();
        let n = self.cols.len() * db;
        let mut cols = vec![0; n];
        let mut values = vec![c(0.0, 0.0); n];
        for (ra, (&ca, &va)) in self.cols.iter().zip(&self.values).enumerate() {
            for (rb, (&cb, &vb)) in other.cols.iter().zip(&other.values).enumerate() {
                cols[ra * db + rb] = ca * db + cb;
                values[ra * db + rb] = va * vb;
            }
        }
        Self { cols, values }
    }

    pub fn dense(&self) -> CMatrix {
        let d = self.cols.len();
        let mut m = CMatrix::zeros(d, d);
        for (r, (&col, &v)) in self.cols.iter().zip(&self.values).enumerate() {
            m[(r, col)] = v;
        }
        m
    }

    /// `Tr(P M)` for a dense `M`.
    pub fn trace_with(&self, m: &CMatrix) -> C64 {
        self.cols
            .iter()
            .zip(&self.values)
            .enumerate()
            .map(|(r, (&col, &v))| v * m[(col, r)])
            .sum()
    }
}

/// The `d²` normalised Pauli operators on `n_qubits` qubits.
#[derive(Debug)]
pub struct PauliBasis {
    n_qubits: usize,
    pub(crate) sparse: Vec<SparsePauli>,
    elements: Vec<CMatrix>,
    /// Sparse entries of `P_i ⊗ P_jᵀ` for every pair, indexed `i * d² + j`.
    pub(crate) choi_terms: Vec<Vec<(usize, usize, C64)>>,
}

impl PauliBasis {
    /// Shared basis for `n_qubits` (1 to 3).
    pub fn get(n_qubits: usize) -> &'static PauliBasis {
        static CACHE: [OnceLock<PauliBasis>; MAX_QUBITS] = [OnceLock::new(), OnceLock::new(), OnceLock::new()];
        assert!(
            (1..=MAX_QUBITS).contains(&n_qubits),
            "supported qubit counts are 1..={MAX_QUBITS}, got {n_qubits}"
        );
        CACHE[n_qubits - 1].get_or_init(|| PauliBasis::build(n_qubits))
    }

    fn build(n_qubits: usize) -> Self {
        let d = 1usize << n_qubits;
        let norm = 1.0 / (d as f64).sqrt();
        let mut sparse = Vec::with_capacity(d * d);
        for index in 0..d * d {
            let mut p = SparsePauli::single(Self::letter_at(index, n_qubits, 0));
            for q in 1..n_qubits {
                p = p.kron(&SparsePauli::single(Self::letter_at(index, n_qubits, q)));
            }
            for v in p.values.iter_mut() {
                *v *= norm;
            }
            sparse.push(p);
        }
        let elements = sparse.iter().map(SparsePauli::dense).collect();

        let mut choi_terms = Vec::with_capacity(d * d * d * d);
        for pi in &sparse {
            for pj in &sparse {
                // (P_jᵀ)[cols_j[r], r] = values_j[r]
                let mut inv = vec![(0usize, c(0.0, 0.0)); d];
                for (r, (&col, &v)) in pj.cols.iter().zip(&pj.values).enumerate() {
                    inv[col] = (r, v);
                }
                let mut terms = Vec::with_capacity(d * d);
                for a1 in 0..d {
                    let a2 = pi.cols[a1];
                    let va = pi.values[a1];
                    for (b1, &(b2, vb)) in inv.iter().enumerate() {
                        terms.push((a1 * d + b1, a2 * d + b2, va * vb));
                    }
                }
                choi_terms.push(terms);
            }
        }
        Self { n_qubits, sparse, elements, choi_terms }
    }

    fn letter_at(index: usize, n_qubits: usize, qubit: usize) -> usize {
        (index >> (2 * (n_qubits - 1 - qubit))) & 3
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    /// Hilbert-space dimension `d = 2ⁿ`.
    pub fn dim(&self) -> usize {
        1 << self.n_qubits
    }

    /// Number of basis elements, `d²`.
    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn elements(&self) -> &[CMatrix] {
        &self.elements
    }

    pub fn element(&self, i: usize) -> &CMatrix {
        &self.elements[i]
    }

    /// Label such as `"XZ"` for element `i`.
    pub fn label(&self, i: usize) -> String {
        (0..self.n_qubits).map(|q| LETTERS[Self::letter_at(i, self.n_qubits, q)]).collect()
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        if label.len() != self.n_qubits {
            return None;
        }
        label.chars().try_fold(0usize, |acc, ch| {
            LETTERS.iter().position(|&l| l == ch).map(|k| acc * 4 + k)
        })
    }

    /// Coefficients `Tr(P_i M)` of an operator in this basis.
    pub fn coefficients(&self, m: &CMatrix) -> Vec<C64> {
        self.sparse.iter().map(|p| p.trace_with(m)).collect()
    }

    /// Rebuild an operator from (possibly complex) basis coefficients.
    pub fn operator(&self, coeffs: &[C64]) -> CMatrix {
        let d = self.dim();
        let mut m = CMatrix::zeros(d, d);
        for (p, &w) in self.sparse.iter().zip(coeffs) {
            if w == Complex::new(0.0, 0.0) {
                continue;
            }
            for (r, (&col, &v)) in p.cols.iter().zip(&p.values).enumerate() {
                m[(r, col)] += w * v;
            }
        }
        m
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn orthonormal_and_ordered() {
        for n in 1..=2 {
            let b = PauliBasis::get(n);
            assert_eq!(b.len(), 1 << (2 * n));
            let d = b.dim() as f64;
            let id = CMatrix::identity(b.dim(), b.dim()) * c(1.0 / d.sqrt(), 0.0);
            assert!((b.element(0) - id).norm() < 1e-14);
            for i in 0..b.len() {
                for j in 0..b.len() {
                    let ip = (b.element(i) * b.element(j)).trace();
                    let expect = if i == j { 1.0 } else { 0.0 };
                    assert!((ip - c(expect, 0.0)).norm() < 1e-12);
                }
            }
        }
        let b2 = PauliBasis::get(2);
        assert_eq!(b2.label(1), "IX");
        assert_eq!(b2.label(4), "XI");
        assert_eq!(b2.index_of("ZY"), Some(14));
    }

    #[test]
    fn coefficients_roundtrip() {
        let b = PauliBasis::get(2);
        let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(1);
        let m = crate::linalg::ginibre(4, 4, &mut rng);
        let back = b.operator(&b.coefficients(&m));
        assert!((back - m).norm() < 1e-12);
    }
}
