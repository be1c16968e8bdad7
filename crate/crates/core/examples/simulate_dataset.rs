//! Simulate a tomography dataset from a noisy device and write it as a
//! JSON-lines file with a header.

use fbt::gateset::native_two_qubit_gate_set;
use fbt::io::{config_hash, read_records_file, write_records_file, FileHeader, RECORDS_TYPE};
use fbt::simulator::{default_two_qubit_truth, generate_tomography_settings, TrueDevice};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> fbt::Result<()> {
    let out = std::env::args().nth(1).unwrap_or_else(|| std::env::temp_dir().join("dataset.jsonl").display().to_string());
    let spec = default_two_qubit_truth();
    let gs = native_two_qubit_gate_set().with_measurement_noise(true);
    let device = TrueDevice::new(spec.apply(&gs)?, 42)?;
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let seqs = generate_tomography_settings(14, 500, gs.len(), &mut rng);
    let records = device.measure_all(&seqs, 125, false)?;
    let header = FileHeader::new(RECORDS_TYPE, Some(42), Some(config_hash(&spec)?));
    write_records_file(out.as_ref(), Some(&header), &records)?;
    let back = read_records_file(out.as_ref())?;
    println!("wrote {} records to {out}; first: {}", back.records.len(), serde_json::to_string(&back.records[0])?);
    Ok(())
}
