//! Exact sequence probabilities against the linearisation about a prior
//! mean, and how the approximation error grows with sequence length.

use fbt::bayes::GaussianBelief;
use fbt::forward::{approximation_error, exact_forward, linearize, Sequence};
use fbt::gateset::native_two_qubit_gate_set;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> fbt::Result<()> {
    let gs = native_two_qubit_gate_set();
    let prior = GaussianBelief::default_prior(&gs);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for len in [1, 2, 6, 14, 40] {
        let seq = Sequence::new((0..len).map(|_| rng.random_range(0..gs.len())).collect());
        let lin = linearize(&gs, &seq)?;
        let mut norms: Vec<f64> = (0..200)
            .map(|_| approximation_error(&prior.sample(&mut rng), &lin, &gs).map(|e| e.norm()))
            .collect::<fbt::Result<_>>()?;
        norms.sort_by(f64::total_cmp);
        let p = exact_forward(prior.mean(), seq.gates(), &gs)?;
        println!("length {len:>2}: p(mean) = {:.3?}, median |η| over prior draws = {:.2e}", p.as_slice(), norms[100]);
    }
    Ok(())
}
