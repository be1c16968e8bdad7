//! Channel and state figures of merit.

use serde::{Deserialize, Serialize};

use super::{DensityState, PauliTransferMatrix, PSD_TOL};
use crate::error::{check_dim, Error, Result};
use crate::linalg::{c, hermitian_eigen, psd_sqrt, CMatrix};

/// Which normalisation of the per-gate fidelity to use.
///
/// `Standard` is the average gate fidelity `(Tr Λ + d) / (d² + d)`, which is 1
/// for the identity channel. `PauliTrace` is `(Tr Λ - 1) / d²`, which is not.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FidelityConvention {
    #[default]
    Standard,
    PauliTrace,
}

impl FidelityConvention {
    pub fn fidelity(self, noise: &PauliTransferMatrix) -> f64 {
        match self {
            Self::Standard => average_gate_fidelity(noise),
            Self::PauliTrace => pauli_trace_fidelity(noise),
        }
    }

    /// Trace of the PTM that yields fidelity `f` for dimension `d`.
    pub fn trace_for_fidelity(self, f: f64, d: usize) -> f64 {
        let d = d as f64;
        match self {
            Self::Standard => f * (d * d + d) - d,
            Self::PauliTrace => f * d * d + 1.0,
        }
    }

    /// Fidelity of the completely depolarizing channel.
    pub fn floor(self, d: usize) -> f64 {
        let d = d as f64;
        match self {
            Self::Standard => 1.0 / d,
            Self::PauliTrace => 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GateFidelity {
    /// Average gate fidelity, 1 for the identity channel.
    pub standard: f64,
    /// `(Tr Λ - 1) / d²`.
    pub pauli_trace: f64,
}

pub fn average_gate_fidelity(noise: &PauliTransferMatrix) -> f64 {
    let d = noise.dim() as f64;
    (noise.trace() + d) / (d * d + d)
}

pub fn pauli_trace_fidelity(noise: &PauliTransferMatrix) -> f64 {
    let d = noise.dim() as f64;
    (noise.trace() - 1.0) / (d * d)
}

pub fn gate_fidelity(noise: &PauliTransferMatrix) -> GateFidelity {
    GateFidelity { standard: average_gate_fidelity(noise), pauli_trace: pauli_trace_fidelity(noise) }
}

/// Unitarity `u = Tr(MᵀM)/(d²-1)` of the unital block `M`, and the
/// incoherence `ω = (d-1)/d · (1 - sqrt(u))`.
pub fn unitarity_and_incoherence(noise: &PauliTransferMatrix) -> (f64, f64) {
    let block = noise.unital_block();
    let n = block.nrows() as f64;
    let u = block.norm_squared() / n;
    let d = noise.dim() as f64;
    let omega = (d - 1.0) / d * (1.0 - u.max(0.0).sqrt());
    (u, omega)
}

/// Fidelity of `rho` to `target` and the Wootters concurrence of `rho`.
///
/// A pure target uses `<ψ|ρ|ψ>`; otherwise the Uhlmann fidelity
/// `(Tr sqrt(sqrt(ρ) σ sqrt(ρ)))²` is used.
pub fn state_fidelity_and_concurrence(rho: &DensityState, target: &DensityState) -> Result<(f64, f64)> {
    check_dim(rho.coefficients().len(), target.coefficients().len())?;
    if rho.n_qubits() != 2 {
        return Err(Error::validation("concurrence is defined for two-qubit states"));
    }
    let rho_m = rho.matrix();
    let (vals, _) = hermitian_eigen(&rho_m);
    if vals.first().copied().unwrap_or(0.0) < -PSD_TOL {
        return Err(Error::validation("state is not positive semidefinite"));
    }
    let fidelity = state_fidelity(&rho_m, &target.matrix(), target.purity()).clamp(0.0, 1.0);
    Ok((fidelity, concurrence(&rho_m)))
}

fn state_fidelity(rho: &CMatrix, sigma: &CMatrix, sigma_purity: f64) -> f64 {
    if (sigma_purity - 1.0).abs() < 1e-9 {
        return (rho * sigma).trace().re;
    }
    let sr = psd_sqrt(rho);
    let inner = &sr * sigma * &sr;
    let root_trace: f64 = hermitian_eigen(&inner).0.iter().map(|&v| v.max(0.0).sqrt()).sum();
    root_trace * root_trace
}

fn concurrence(rho: &CMatrix) -> f64 {
    let y = CMatrix::from_row_slice(2, 2, &[c(0., 0.), c(0., -1.), c(0., 1.), c(0., 0.)]);
    let yy = y.kronecker(&y);
    // Square roots of round-off eigenvalues would cost ~1e-8 on pure states.
    let (vals, vecs) = hermitian_eigen(rho);
    if vals[vals.len() - 1] > 1.0 - 1e-12 {
        let psi = vecs.column(vals.len() - 1);
        return (psi.transpose() * &yy * psi)[(0, 0)].norm();
    }
    let tilde = &yy * rho.conjugate() * &yy;
    let sr = psd_sqrt(rho);
    let r = &sr * tilde * &sr;
    let mut roots: Vec<f64> = hermitian_eigen(&r).0.iter().map(|&v| v.max(0.0).sqrt()).collect();
    roots.sort_by(|a, b| b.total_cmp(a));
    (roots[0] - roots[1] - roots[2] - roots[3]).max(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn bell_phi_plus() -> DensityState {
        let mut psi = CMatrix::zeros(4, 1);
        psi[(0, 0)] = c(1.0, 0.0);
        psi[(3, 0)] = c(1.0, 0.0);
        DensityState::pure(&psi).unwrap()
    }

    #[test]
    fn fidelity_conventions() {
        let id1 = PauliTransferMatrix::identity(1);
        let f = gate_fidelity(&id1);
        assert!((f.standard - 1.0).abs() < 1e-14);
        assert!((f.pauli_trace - 0.75).abs() < 1e-14);
        assert!((average_gate_fidelity(&PauliTransferMatrix::identity(2)) - 1.0).abs() < 1e-14);
    }

    /// Oracle: average of <ψ|Λ(|ψ><ψ|)|ψ> over Haar-random pure states.
    #[test]
    fn depolarizing_fidelity_matches_haar_average() {
        let p = 0.1;
        let ch = PauliTransferMatrix::depolarizing(1, p);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 20000;
        let mut acc = 0.0;
        for _ in 0..n {
            let u = crate::linalg::haar_unitary(2, &mut rng);
            let psi = CMatrix::from_column_slice(2, 1, u.column(0).as_slice());
            let s = DensityState::pure(&psi).unwrap();
            let out = s.evolve(&ch).unwrap();
            acc += (out.matrix() * s.matrix()).trace().re;
        }
        let haar = acc / n as f64;
        // Depolarizing output fidelity is state independent, so the average is exact.
        assert!((haar - (1.0 - p / 2.0)).abs() < 1e-10);
        assert!((average_gate_fidelity(&ch) - (1.0 - p / 2.0)).abs() < 1e-14);
    }

    #[test]
    fn unitarity_limits() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let u = PauliTransferMatrix::random_unitary(2, &mut rng);
        let (un, om) = unitarity_and_incoherence(&u);
        assert!((un - 1.0).abs() < 1e-10);
        assert!(om.abs() < 1e-10);

        let p = 0.04;
        let (un, om) = unitarity_and_incoherence(&PauliTransferMatrix::depolarizing(1, p));
        assert!((un - (1.0 - p).powi(2)).abs() < 1e-14);
        assert!((om - p / 2.0).abs() < 1e-14);
        assert!((om - (1.0 - average_gate_fidelity(&PauliTransferMatrix::depolarizing(1, p)))).abs() < 1e-14);

        for n in 1..=2 {
            let (un, om) = unitarity_and_incoherence(&PauliTransferMatrix::completely_depolarizing(n));
            let d = (1 << n) as f64;
            assert_eq!(un, 0.0);
            assert!((om - (d - 1.0) / d).abs() < 1e-14);
        }
    }

    #[test]
    fn bell_state_metrics() {
        let phi = bell_phi_plus();
        let (f, cc) = state_fidelity_and_concurrence(&phi, &phi).unwrap();
        assert!((f - 1.0).abs() < 1e-10 && (cc - 1.0).abs() < 1e-10);

        let mixed = DensityState::maximally_mixed(2);
        let (f, cc) = state_fidelity_and_concurrence(&mixed, &phi).unwrap();
        assert!((f - 0.25).abs() < 1e-12 && cc.abs() < 1e-10);
    }

    #[test]
    fn werner_concurrence() {
        let w = 0.8;
        let phi = bell_phi_plus();
        let coeffs = phi.coefficients() * w + DensityState::maximally_mixed(2).coefficients() * (1.0 - w);
        let werner = DensityState::from_coefficients(2, coeffs).unwrap();
        let (_, cc) = state_fidelity_and_concurrence(&werner, &phi).unwrap();
        assert!((cc - 0.7).abs() < 1e-10);
    }

    #[test]
    fn uhlmann_fidelity_for_mixed_target() {
        let mixed = DensityState::maximally_mixed(2);
        let (f, _) = state_fidelity_and_concurrence(&mixed, &mixed).unwrap();
        assert!((f - 1.0).abs() < 1e-10);
    }

    #[test]
    fn non_psd_state_rejected() {
        let mut coeffs = nalgebra::DVector::zeros(16);
        coeffs[0] = 0.5;
        coeffs[3] = 2.0;
        let bad = DensityState::from_coefficients(2, coeffs).unwrap();
        let phi = bell_phi_plus();
        assert!(state_fidelity_and_concurrence(&bad, &phi).is_err());
    }
}
