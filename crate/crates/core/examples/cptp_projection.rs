//! Project unphysical estimates onto CPTP channels, and a whole gate set onto
//! a target average fidelity.

use fbt::gateset::native_two_qubit_gate_set;
use fbt::physicality::{mean_gate_fidelity, project_cptp, project_gateset_with_fidelity, ProjectionOptions};
use fbt::ptm::metrics::FidelityConvention;
use fbt::ptm::PauliTransferMatrix;
use nalgebra::{DMatrix, DVector};

fn main() -> fbt::Result<()> {
    // A "super-unital" estimate that no channel can produce.
    let bad = PauliTransferMatrix::new(1, DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 1.05, 0.98, 1.02])))?;
    let (fixed, rep) = project_cptp(&bad);
    println!("min Choi eig {:.3e} -> {:.3e} after {} iterations", bad.min_choi_eigenvalue(), rep.min_choi_eig, rep.iterations);
    println!("projected diagonal {:.4}", fixed.entries().diagonal().transpose());

    let gs = native_two_qubit_gate_set();
    for conv in [FidelityConvention::Standard, FidelityConvention::PauliTrace] {
        let target = conv.fidelity(&PauliTransferMatrix::depolarizing(2, 0.024));
        let (out, rep) = project_gateset_with_fidelity(&gs, target, conv, &ProjectionOptions::default())?;
        println!(
            "{conv:?}: target {target:.4}, achieved {:.6}, converged {} in {} iterations",
            mean_gate_fidelity(&out, conv),
            rep.converged,
            rep.iterations
        );
    }
    Ok(())
}
