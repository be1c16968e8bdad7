//! Small dense linear-algebra helpers shared across modules.

use nalgebra::{Complex, DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

pub type C64 = Complex<f64>;
pub type CMatrix = DMatrix<C64>;

pub fn c(re: f64, im: f64) -> C64 {
    Complex::new(re, im)
}

pub fn to_complex(m: &DMatrix<f64>) -> CMatrix {
    m.map(|x| c(x, 0.0))
}

/// Eigen-decomposition of a Hermitian matrix; eigenvalues ascending.
pub fn hermitian_eigen(m: &CMatrix) -> (Vec<f64>, CMatrix) {
    let h = (m + m.adjoint()) * c(0.5, 0.0);
    let eig = h.symmetric_eigen();
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = CMatrix::from_fn(m.nrows(), m.ncols(), |r, k| eig.eigenvectors[(r, order[k])]);
    (values, vectors)
}

pub fn min_hermitian_eigenvalue(m: &CMatrix) -> f64 {
    hermitian_eigen(m).0.first().copied().unwrap_or(0.0)
}

/// Principal square root of a Hermitian PSD matrix, negative eigenvalues clipped to zero.
pub fn psd_sqrt(m: &CMatrix) -> CMatrix {
    let (vals, vecs) = hermitian_eigen(m);
    let diag = CMatrix::from_diagonal(&DVector::from_iterator(
        vals.len(),
        vals.iter().map(|&v| c(v.max(0.0).sqrt(), 0.0)),
    ));
    &vecs * diag * vecs.adjoint()
}

pub fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// Lower Cholesky factor of a symmetric matrix, retrying with diagonal jitter
/// `1e-10 * tr(m) / n` (growing tenfold) if the plain factorisation fails.
pub fn cholesky_with_jitter(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let sym = symmetrize(m);
    if let Some(ch) = sym.clone().cholesky() {
        return Ok(ch.l());
    }
    let n = sym.nrows().max(1);
    let base = (sym.trace().abs() / n as f64).max(f64::MIN_POSITIVE) * 1e-10;
    let mut jitter = base;
    for _ in 0..8 {
        let mut shifted = sym.clone();
        for i in 0..shifted.nrows() {
            shifted[(i, i)] += jitter;
        }
        if let Some(ch) = shifted.cholesky() {
            return Ok(ch.l());
        }
        jitter *= 10.0;
    }
    Err(Error::numerical("matrix is not positive definite even after jitter"))
}

/// Symmetric inverse via Cholesky (with jitter fallback).
pub fn spd_inverse(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let l = cholesky_with_jitter(m)?;
    let l_inv = l
        .solve_lower_triangular(&DMatrix::identity(m.nrows(), m.nrows()))
        .ok_or_else(|| Error::numerical("singular Cholesky factor"))?;
    Ok(l_inv.transpose() * l_inv)
}

/// Smallest eigenvalue of a real symmetric matrix.
pub fn min_sym_eigenvalue(m: &DMatrix<f64>) -> f64 {
    if m.nrows() == 0 {
        return 0.0;
    }
    symmetrize(m).symmetric_eigen().eigenvalues.min()
}

pub fn standard_normal_vector<R: Rng + ?Sized>(n: usize, rng: &mut R) -> DVector<f64> {
    DVector::from_iterator(n, (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)))
}

pub fn standard_normal_matrix<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> DMatrix<f64> {
    // Column-major fill so that a column equals what `standard_normal_vector` would draw.
    DMatrix::from_iterator(rows, cols, (0..rows * cols).map(|_| rng.sample::<f64, _>(StandardNormal)))
}

/// Ginibre matrix with i.i.d. complex standard normal entries.
pub fn ginibre<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| {
        c(rng.sample::<f64, _>(StandardNormal), rng.sample::<f64, _>(StandardNormal)) * std::f64::consts::FRAC_1_SQRT_2
    })
}

/// Haar-random unitary of dimension `d` (QR of a Ginibre matrix with phase fix).
pub fn haar_unitary<R: Rng + ?Sized>(d: usize, rng: &mut R) -> CMatrix {
    let qr = ginibre(d, d, rng).qr();
    let mut q = qr.q();
    let r = qr.r();
    for k in 0..d {
        let rkk = r[(k, k)];
        let phase = if rkk.norm() > 0.0 { rkk / rkk.norm() } else { c(1.0, 0.0) };
        for row in 0..d {
            q[(row, k)] *= phase;
        }
    }
    q
}

pub fn is_unitary(u: &CMatrix, tol: f64) -> bool {
    if u.nrows() != u.ncols() {
        return false;
    }
    let prod = u.adjoint() * u;
    let id = CMatrix::identity(u.nrows(), u.ncols());
    (prod - id).iter().all(|z| z.norm() <= tol)
}

pub fn frobenius(m: &DMatrix<f64>) -> f64 {
    m.norm()
}
