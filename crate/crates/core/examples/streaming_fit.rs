//! Fold a single-qubit dataset into the belief one record at a time and watch
//! the diagnostics: posterior trace, shot noise, approximation error.

use fbt::bayes::{GaussianBelief, OnlineEstimator, OnlineOptions};
use fbt::gateset::single_qubit_xy_gate_set;
use fbt::ptm::PauliTransferMatrix;
use fbt::simulator::{generate_tomography_settings, TrueDevice};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> fbt::Result<()> {
    let gs = single_qubit_xy_gate_set().with_measurement_noise(true);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut truth = gs.clone();
    truth.gates[0].noise = PauliTransferMatrix::random_near_identity(1, 0.05, &mut rng);
    truth.gates[1].noise = PauliTransferMatrix::depolarizing(1, 0.02);
    let device = TrueDevice::new(truth.clone(), 11)?;
    let seqs = generate_tomography_settings(10, 2000, gs.len(), &mut rng);

    let mut est = OnlineEstimator::new(GaussianBelief::default_prior(&gs), gs.clone(), OnlineOptions::default())?;
    let mut diags = Vec::new();
    for (k, seq) in seqs.iter().enumerate() {
        let record = device.measure(seq.gates(), 200, k as u64)?;
        let d = est.update(&record, &mut rng)?;
        if k % 250 == 0 || k + 1 == seqs.len() {
            println!(
                "setting {k:>4}: Tr Γ = {:.3e}  Tr Γ_ε = {:.2e}  approx err = {:>9}  fast path {}",
                d.trace_post,
                d.trace_eps,
                d.approx_err.map_or("-".into(), |v| format!("{v:.2e}")),
                est.fast_path_active()
            );
        }
        diags.push(d);
    }
    let result = est.finish(diags);
    let mean = result.belief.mean_gateset(&gs)?;
    for (g, t) in mean.gates.iter().zip(&truth.gates) {
        println!("{}: |mean - truth|_F = {:.4}", g.name, g.noise.distance(&t.noise));
    }
    Ok(())
}
