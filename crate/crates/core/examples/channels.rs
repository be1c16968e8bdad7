//! Pauli transfer matrices: build channels, inspect their Choi matrices and
//! figures of merit.

use fbt::gateset::sqrt_x;
use fbt::ptm::metrics::{gate_fidelity, unitarity_and_incoherence};
use fbt::ptm::PauliTransferMatrix;
use fbt::simulator::{make_noise_model, NoiseSpec};

fn main() -> fbt::Result<()> {
    let x90 = PauliTransferMatrix::from_unitary(&sqrt_x())?;
    println!("sqrt(X) PTM:\n{:.3}", x90.entries());

    let dep = PauliTransferMatrix::depolarizing(1, 0.05);
    let rot = make_noise_model(&NoiseSpec::CoherentOverrotation { axis: "X".into(), theta: 0.2 }, 1)?;
    for (name, ch) in [("depolarizing", &dep), ("over-rotation", &rot), ("both", &dep.compose(&rot)?)] {
        let f = gate_fidelity(ch);
        let (u, w) = unitarity_and_incoherence(ch);
        println!(
            "{name:>14}: F = {:.5} ((TrΛ-1)/d² = {:.5}), u = {u:.5}, ω = {w:.5}, min Choi eig = {:.2e}",
            f.standard,
            f.pauli_trace,
            ch.min_choi_eigenvalue()
        );
    }
    println!("Choi eigenvalues of the composite: {:?}", dep.compose(&rot)?.choi().eigenvalues());
    Ok(())
}
