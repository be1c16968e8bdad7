//! Bell-state fidelity and concurrence, per-gate metrics with posterior
//! intervals, and the readout assignment matrix.

use fbt::analysis::{bell_state_tomography, gate_metrics_with_intervals, readout_assignment_matrix};
use fbt::bayes::GaussianBelief;
use fbt::gateset::native_two_qubit_gate_set;
use fbt::simulator::default_two_qubit_truth;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> fbt::Result<()> {
    let gs = native_two_qubit_gate_set().with_measurement_noise(true);
    let truth = default_two_qubit_truth().apply(&gs)?;
    for b in bell_state_tomography(&truth)? {
        println!("{:>10}: fidelity {:.4}, concurrence {:.4}", b.state, b.fidelity, b.concurrence);
    }

    // A narrow belief around the truth stands in for a posterior.
    let mut belief = GaussianBelief::default_prior(&gs);
    belief = GaussianBelief::from_factor(truth.pack(), belief.factor() * 0.05, belief.packing().clone())?;
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let report = gate_metrics_with_intervals(&belief, &gs, 100, &mut rng)?;
    for g in &report.gates {
        println!(
            "{:>8}: infidelity {:.4} [{:.4}, {:.4}]  incoherence {:.4}",
            g.name, g.infidelity.mean, g.infidelity.lower, g.infidelity.upper, g.incoherence.mean
        );
    }
    let a = readout_assignment_matrix(&truth.measurement_noise, &gs.povm)?;
    println!("assignment matrix (column = prepared state):\n{a:.4}");
    Ok(())
}
