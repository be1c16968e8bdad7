//! Describe a gate set in JSON, build it, and look at the parameter layout.

use fbt::gateset::GateSetConfig;

fn main() -> fbt::Result<()> {
    let json = r#"{
        "gates": [
            {"name": "X90", "builtin": "X90"},
            {"name": "Y90", "builtin": "Y90", "prior_sigma": 0.02},
            {"name": "H", "unitary": [[[0.7071067811865476, 0], [0.7071067811865476, 0]],
                                      [[0.7071067811865476, 0], [-0.7071067811865476, 0]]]}
        ],
        "include_measurement_noise": true,
        "prior": {"spam_sigma": 0.03}
    }"#;
    let cfg: GateSetConfig = serde_json::from_str(json)?;
    let gs = cfg.build()?;
    println!("{} gates on {} qubit(s)", gs.len(), gs.n_qubits());
    let packing = gs.packing();
    for (id, name, range) in packing.slots() {
        println!("  {name:<18} params {:>3}..{:<3} prior σ = {}", range.start, range.end, gs.prior_sigma(id));
    }
    println!("{} free parameters", packing.len());

    let native = GateSetConfig::default().build()?;
    println!("default native set: {} gates, {} parameters", native.len(), native.packing().len());
    Ok(())
}
