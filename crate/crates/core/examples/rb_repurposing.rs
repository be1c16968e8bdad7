//! Reuse RB sequences as tomography settings: every Clifford word becomes one
//! FBT record.

use fbt::bayes::{run_online, GaussianBelief, OnlineOptions};
use fbt::gateset::native_two_qubit_gate_set;
use fbt::physicality::pmap_estimate;
use fbt::rb::{rb_to_fbt_records, sample_rb_sequences, CliffordTable, RbDataset};
use fbt::simulator::{default_two_qubit_truth, TrueDevice};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> fbt::Result<()> {
    let n_seq: usize = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(40);
    let gs = native_two_qubit_gate_set().with_measurement_noise(true);
    let table = CliffordTable::native(&gs)?;
    let truth = default_two_qubit_truth().apply(&gs)?;
    let device = TrueDevice::new(truth.clone(), 9)?;
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let seqs = sample_rb_sequences(&table, n_seq, &[1, 2, 4, 8, 16, 32, 64], &mut rng)?;
    let data = RbDataset::measure(&device, &seqs, 125, 0, table.mean_pulses())?;
    let mut records = rb_to_fbt_records(&data);
    records.shuffle(&mut rng);

    let result = run_online(GaussianBelief::default_prior(&gs), &records, &gs, &OnlineOptions::default(), &mut rng, |d| {
        if d.step % 50 == 0 {
            println!(
                "setting {:>4}: Tr Γ = {:.3}  Tr Γ_η = {:>9}  Tr Γ_ε = {:.2e}",
                d.step,
                d.trace_post,
                d.trace_eta.map_or("-".into(), |v| format!("{v:.2e}")),
                d.trace_eps
            );
        }
    })?;
    let (est, _) = pmap_estimate(&result.belief, &gs)?;
    for id in gs.free_channel_ids() {
        println!("{:>18}: |Λ̂ - Λ|_F = {:.3}", gs.channel_name(id), est.channel(id).distance(truth.channel(id)));
    }
    Ok(())
}
