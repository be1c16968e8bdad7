//! Full two-qubit run: simulate the native gate set with planted noise, fit
//! online, project, and compare with the truth.

use std::time::Instant;

use fbt::bayes::{final_decade_slope, run_online, GaussianBelief, OnlineOptions};
use fbt::gateset::native_two_qubit_gate_set;
use fbt::physicality::pmap_estimate;
use fbt::simulator::{default_two_qubit_truth, generate_tomography_settings, TrueDevice};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> fbt::Result<()> {
    let n_settings: usize = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(7140);
    let gs = native_two_qubit_gate_set().with_measurement_noise(true);
    let truth = default_two_qubit_truth().apply(&gs)?;
    let device = TrueDevice::new(truth.clone(), 2024)?;
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let seqs = generate_tomography_settings(14, n_settings, gs.len(), &mut rng);
    let records = device.measure_all(&seqs, 125, false)?;

    let start = Instant::now();
    let prior = GaussianBelief::default_prior(&gs);
    let result = run_online(prior, &records, &gs, &OnlineOptions::default(), &mut rng, |d| {
        if d.step % 500 == 0 {
            eprintln!("{}", serde_json::to_string(d).unwrap());
        }
    })?;
    println!("fit took {:.1} s, fast path from step {:?}", start.elapsed().as_secs_f64(), result.dominance_step);
    println!("final-decade slope {:?}", final_decade_slope(&result.diagnostics));

    let (estimate, _) = pmap_estimate(&result.belief, &gs)?;
    for id in gs.free_channel_ids() {
        let err = estimate.channel(id).distance(truth.channel(id));
        let raw = result.belief.mean_gateset(&gs)?.channel(id).distance(truth.channel(id));
        println!("{:>18}  |pmap - truth| = {err:.4}   |mean - truth| = {raw:.4}", gs.channel_name(id));
    }
    Ok(())
}
