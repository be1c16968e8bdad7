//! Projections onto CPTP channels and onto gate sets with a prescribed average
//! fidelity, via Dykstra's alternating projections.
//!
//! Distances are Frobenius norms of PTM differences. The Choi map scales them
//! by a constant `1/d`, so the nearest point is the same in either picture.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::bayes::GaussianBelief;
use crate::error::{Error, Result};
use crate::gateset::{ChannelId, GateSet};
use crate::ptm::metrics::FidelityConvention;
use crate::ptm::{ChoiMatrix, PauliTransferMatrix};

pub const DEFAULT_MAX_ITER: usize = 5000;
pub const DEFAULT_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProjectionReport {
    pub iterations: usize,
    /// Distance from the input to the output.
    pub final_distance: f64,
    pub min_choi_eig: f64,
    pub converged: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ProjectionOptions {
    pub max_iter: usize,
    pub tolerance: f64,
}

impl Default for ProjectionOptions {
    fn default() -> Self {
        Self { max_iter: DEFAULT_MAX_ITER, tolerance: DEFAULT_TOLERANCE }
    }
}

/// Nearest CP map: clip the negative Choi eigenvalues.
fn project_cp(n_qubits: usize, m: &DMatrix<f64>) -> DMatrix<f64> {
    let ptm = PauliTransferMatrix::new(n_qubits, m.clone()).expect("square PTM");
    ChoiMatrix::from_ptm(&ptm).clip_negative().to_ptm().into_entries()
}

fn project_tp(m: &mut DMatrix<f64>) {
    m.row_mut(0).fill(0.0);
    m[(0, 0)] = 1.0;
}

/// Frobenius-nearest CPTP channel.
pub fn project_cptp(channel: &PauliTransferMatrix) -> (PauliTransferMatrix, ProjectionReport) {
    project_cptp_with(channel, &ProjectionOptions::default())
}

pub fn project_cptp_with(channel: &PauliTransferMatrix, opts: &ProjectionOptions) -> (PauliTransferMatrix, ProjectionReport) {
    let n = channel.n_qubits();
    let input = channel.entries();
    let mut x = input.clone();
    let dd = x.nrows();
    let mut p = DMatrix::zeros(dd, dd);
    let mut q = DMatrix::zeros(dd, dd);
    let mut iterations = 0;
    let mut converged = false;
    while iterations < opts.max_iter {
        iterations += 1;
        let y = project_cp(n, &(&x + &p));
        p = &x + &p - &y;
        let mut next = &y + &q;
        project_tp(&mut next);
        q = &y + &q - &next;
        let step = (&next - &x).norm();
        x = next;
        if step < opts.tolerance {
            converged = true;
            break;
        }
    }
    let out = PauliTransferMatrix::new(n, x).expect("square PTM");
    let report = ProjectionReport {
        iterations,
        final_distance: out.distance(channel),
        min_choi_eig: out.min_choi_eigenvalue(),
        converged,
    };
    (out, report)
}

fn check_fidelity_target(f: f64, d: usize, convention: FidelityConvention) -> Result<()> {
    let lo = convention.floor(d);
    let hi = convention.fidelity(&PauliTransferMatrix::identity(qubits(d)));
    if !(f > lo && f <= hi + 1e-12) {
        return Err(Error::validation(format!("fidelity target {f} outside ({lo}, {hi}]")));
    }
    Ok(())
}

fn qubits(d: usize) -> usize {
    d.trailing_zeros() as usize
}

/// Nearest gate set (summed squared Frobenius distance over channels) whose
/// channels are all CPTP and whose gate noise channels have mean fidelity `f`.
///
/// SPAM channels are only made CPTP. Gate channels alternate between the CP
/// cone and the affine set fixing each top row and the total trace.
pub fn project_gateset_with_fidelity(
    gs_sample: &GateSet,
    f: f64,
    convention: FidelityConvention,
    opts: &ProjectionOptions,
) -> Result<(GateSet, ProjectionReport)> {
    let d = gs_sample.dim();
    check_fidelity_target(f, d, convention)?;
    let n = gs_sample.n_qubits();
    let n_gates = gs_sample.len();
    if n_gates == 0 {
        return Err(Error::validation("gate set has no gates"));
    }
    let dd = d * d;
    let target_trace = n_gates as f64 * convention.trace_for_fidelity(f, d);

    let inputs: Vec<DMatrix<f64>> = gs_sample.gates.iter().map(|g| g.noise.entries().clone()).collect();
    let mut x = inputs.clone();
    let mut p = vec![DMatrix::zeros(dd, dd); n_gates];
    let mut q = vec![DMatrix::zeros(dd, dd); n_gates];
    let mut iterations = 0;
    let mut converged = false;
    while iterations < opts.max_iter {
        iterations += 1;
        let y: Vec<DMatrix<f64>> = x.iter().zip(&p).map(|(xi, pi)| project_cp(n, &(xi + pi))).collect();
        for i in 0..n_gates {
            p[i] = &x[i] + &p[i] - &y[i];
        }
        let mut next: Vec<DMatrix<f64>> = y.iter().zip(&q).map(|(yi, qi)| yi + qi).collect();
        for m in next.iter_mut() {
            project_tp(m);
        }
        let current: f64 = next.iter().map(|m| m.trace()).sum();
        let shift = (target_trace - current) / (n_gates * (dd - 1)) as f64;
        for m in next.iter_mut() {
            for k in 1..dd {
                m[(k, k)] += shift;
            }
        }
        for i in 0..n_gates {
            q[i] = &y[i] + &q[i] - &next[i];
        }
        let step: f64 = next.iter().zip(&x).map(|(a, b)| (a - b).norm_squared()).sum::<f64>().sqrt();
        x = next;
        if step < opts.tolerance {
            converged = true;
            break;
        }
    }

    let mut out = gs_sample.clone();
    let mut dist2 = 0.0;
    let mut min_eig = f64::INFINITY;
    for (i, m) in x.into_iter().enumerate() {
        dist2 += (&m - &inputs[i]).norm_squared();
        let ch = PauliTransferMatrix::new(n, m).expect("square PTM");
        min_eig = min_eig.min(ch.min_choi_eigenvalue());
        out.gates[i].noise = ch;
    }
    let mut all_converged = converged;
    for id in [ChannelId::Measurement, ChannelId::Preparation] {
        let (ch, rep) = project_cptp_with(gs_sample.channel(id), opts);
        dist2 += rep.final_distance.powi(2);
        min_eig = min_eig.min(rep.min_choi_eig);
        all_converged &= rep.converged;
        *out.channel_mut(id) = ch;
    }
    let report = ProjectionReport { iterations, final_distance: dist2.sqrt(), min_choi_eig: min_eig, converged: all_converged };
    Ok((out, report))
}

/// Mean fidelity of the gate noise channels.
pub fn mean_gate_fidelity(gs: &GateSet, convention: FidelityConvention) -> f64 {
    gs.gates.iter().map(|g| convention.fidelity(&g.noise)).sum::<f64>() / gs.len() as f64
}

/// Projected posterior mean: unpack `λ̄` and make every free channel CPTP.
pub fn pmap_estimate(belief: &GaussianBelief, template: &GateSet) -> Result<(GateSet, Vec<(ChannelId, ProjectionReport)>)> {
    let mut gs = belief.mean_gateset(template)?;
    let mut reports = Vec::new();
    for id in gs.free_channel_ids() {
        let (ch, rep) = project_cptp(gs.channel(id));
        *gs.channel_mut(id) = ch;
        reports.push((id, rep));
    }
    Ok((gs, reports))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gateset::{native_two_qubit_gate_set, single_qubit_xy_gate_set};
    use crate::linalg::standard_normal_matrix;
    use nalgebra::DVector;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn perturb(ch: &PauliTransferMatrix, scale: f64, rng: &mut ChaCha8Rng) -> PauliTransferMatrix {
        let dd = ch.size();
        let mut m = ch.entries() + standard_normal_matrix(dd, dd, rng) * scale;
        project_tp(&mut m);
        PauliTransferMatrix::new(ch.n_qubits(), m).unwrap()
    }

    #[test]
    fn cptp_input_is_fixed_point() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for n in 1..=2 {
            let ch = PauliTransferMatrix::random_cptp(n, 3, &mut rng);
            let (out, rep) = project_cptp(&ch);
            assert!(out.distance(&ch) <= 1e-10);
            assert_eq!(rep.iterations, 1);
            assert!(rep.converged);
        }
    }

    #[test]
    fn overshrunk_unital_block_is_clipped() {
        let m = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 1.2, 1.2, 1.2]));
        let ch = PauliTransferMatrix::new(1, m).unwrap();
        assert!(ch.min_choi_eigenvalue() < 0.0);
        let (out, rep) = project_cptp(&ch);
        assert!(out.distance(&PauliTransferMatrix::identity(1)) < 1e-8, "{:?}", out.entries());
        assert!(rep.converged);
    }

    #[test]
    fn output_is_cptp_and_idempotent() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for n in 1..=2 {
            for _ in 0..5 {
                let ch = perturb(&PauliTransferMatrix::random_near_identity(n, 0.1, &mut rng), 0.1, &mut rng);
                let (out, rep) = project_cptp(&ch);
                assert!(rep.converged);
                assert!(rep.min_choi_eig >= -1e-8);
                assert_eq!(out.entries().row(0)[0], 1.0);
                assert!(out.entries().row(0).iter().skip(1).all(|&v| v == 0.0));
                let (again, _) = project_cptp(&out);
                assert!(again.distance(&out) <= 1e-9);
            }
        }
    }

    #[test]
    fn non_expansive() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..10 {
            let base = PauliTransferMatrix::random_near_identity(1, 0.2, &mut rng);
            let a = perturb(&base, 0.2, &mut rng);
            let b = perturb(&base, 0.2, &mut rng);
            let pa = project_cptp(&a).0;
            let pb = project_cptp(&b).0;
            assert!(pa.distance(&pb) <= a.distance(&b) + 1e-8);
        }
    }

    #[test]
    fn beats_random_cptp_probes() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let ch = perturb(&PauliTransferMatrix::depolarizing(1, 0.1), 0.15, &mut rng);
        let (out, _) = project_cptp(&ch);
        let best = out.distance(&ch);
        for k in 0..1000 {
            let probe = PauliTransferMatrix::random_cptp(1, 1 + k % 4, &mut rng);
            assert!(best <= probe.distance(&ch) + 1e-12);
        }
    }

    #[test]
    fn ideal_set_at_unit_fidelity_unchanged() {
        let gs = single_qubit_xy_gate_set();
        let (out, rep) = project_gateset_with_fidelity(&gs, 1.0, FidelityConvention::Standard, &ProjectionOptions::default()).unwrap();
        assert!(rep.converged);
        for (a, b) in out.gates.iter().zip(&gs.gates) {
            assert!(a.noise.distance(&b.noise) < 1e-9);
        }
    }

    #[test]
    fn fidelity_constraint_met() {
        let opts = ProjectionOptions::default();
        for gs in [single_qubit_xy_gate_set(), native_two_qubit_gate_set()] {
            for convention in [FidelityConvention::Standard, FidelityConvention::PauliTrace] {
                let f = convention.fidelity(&PauliTransferMatrix::depolarizing(gs.n_qubits(), 0.04));
                let (out, rep) = project_gateset_with_fidelity(&gs, f, convention, &opts).unwrap();
                assert!(rep.converged);
                assert!((mean_gate_fidelity(&out, convention) - f).abs() < 1e-6);
                assert!(rep.min_choi_eig >= -1e-8);
                for g in &out.gates {
                    assert!(g.noise.trace() < gs.gates[0].noise.trace());
                }
                let (again, _) = project_gateset_with_fidelity(&out, f, convention, &opts).unwrap();
                for (a, b) in again.gates.iter().zip(&out.gates) {
                    assert!(a.noise.distance(&b.noise) <= 1e-8);
                }
            }
        }
    }

    #[test]
    fn infeasible_fidelity_rejected() {
        let gs = single_qubit_xy_gate_set();
        let opts = ProjectionOptions::default();
        assert!(project_gateset_with_fidelity(&gs, 0.4, FidelityConvention::Standard, &opts).is_err());
        assert!(project_gateset_with_fidelity(&gs, 1.1, FidelityConvention::Standard, &opts).is_err());
    }

    #[test]
    fn pmap_changes_only_non_cp_channels() {
        let gs = single_qubit_xy_gate_set();
        let mut mean_gs = gs.clone();
        mean_gs.gates[1].noise = PauliTransferMatrix::new(1, DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 1.1, 1.0, 1.0]))).unwrap();
        let belief = GaussianBelief::delta(mean_gs.pack(), gs.packing()).unwrap();
        let (est, reports) = pmap_estimate(&belief, &gs).unwrap();
        assert!(est.gates[0].noise.distance(&gs.gates[0].noise) < 1e-12);
        assert!(est.gates[1].noise.distance(&mean_gs.gates[1].noise) > 1e-3);
        assert!(reports.iter().all(|(_, r)| r.min_choi_eig >= -1e-8));
    }
}
