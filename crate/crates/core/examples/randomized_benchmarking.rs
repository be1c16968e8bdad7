//! Two-qubit Clifford RB on the native gate set: compile, simulate, fit, and
//! turn the result into an FBT prior.

use fbt::bayes::GaussianBelief;
use fbt::gateset::native_two_qubit_gate_set;
use fbt::physicality::mean_gate_fidelity;
use fbt::ptm::metrics::FidelityConvention;
use fbt::rb::{fit_rb_decay, rb_prior_update, sample_rb_sequences, CliffordTable, RbDataset, RbPriorOptions};
use fbt::simulator::{default_two_qubit_truth, TrueDevice};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> fbt::Result<()> {
    let gs = native_two_qubit_gate_set().with_measurement_noise(true);
    let table = CliffordTable::native(&gs)?;
    println!(
        "{} Cliffords, classes by CROT pairs {:?}, {:.2} pulses and {:.2} primitives per Clifford",
        table.len(),
        table.class_sizes(),
        table.mean_pulses(),
        table.mean_word_length()
    );

    let device = TrueDevice::new(default_two_qubit_truth().apply(&gs)?, 5)?;
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let seqs = sample_rb_sequences(&table, 25, &[1, 2, 4, 7, 11, 16, 23, 32], &mut rng)?;
    let data = RbDataset::measure(&device, &seqs, 125, 0, table.mean_pulses())?;
    for (l, s) in data.mean_survival() {
        println!("  L = {l:>2}: survival {s:.3}");
    }
    let fit = fit_rb_decay(&data)?;
    println!(
        "r_C = {:.4} ± {:.4}, primitive fidelity {:.4} ± {:.4}",
        fit.r_c, fit.r_c_stderr, fit.primitive_fidelity, fit.sigma_f
    );

    let prior = rb_prior_update(
        &GaussianBelief::default_prior(&gs),
        &gs,
        fit.primitive_fidelity,
        fit.sigma_f.max(1e-3),
        &RbPriorOptions { n_samples: 60, ..RbPriorOptions::default() },
        &mut rng,
    )?;
    let f = mean_gate_fidelity(&prior.mean_gateset(&gs)?, FidelityConvention::Standard);
    println!("RB-informed prior: mean gate fidelity {f:.4}, Tr Γ = {:.3}", prior.trace());
    Ok(())
}
