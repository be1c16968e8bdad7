//! Synthetic device with a hidden noisy gate set, and the measurement record format.

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forward::{CompiledModel, Sequence};
use crate::gateset::GateSet;
use crate::linalg::{c, CMatrix};
use crate::ptm::{PauliBasis, PauliTransferMatrix};

/// One measurement setting: a gate sequence, a shot count and outcome counts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentRecord {
    pub seq: Sequence,
    pub shots: u64,
    pub counts: Vec<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub true_probs: Option<Vec<f64>>,
}

impl ExperimentRecord {
    pub fn new(seq: Sequence, shots: u64, counts: Vec<u64>) -> Self {
        Self { seq, shots, counts, true_probs: None }
    }

    /// Counts must match the outcome count and sum to the shot count.
    pub fn validate(&self, n_outcomes: usize) -> Result<()> {
        if self.shots == 0 {
            return Err(Error::validation("record has zero shots"));
        }
        if self.counts.len() != n_outcomes {
            return Err(Error::validation(format!(
                "record has {} counts but the POVM has {n_outcomes} outcomes",
                self.counts.len()
            )));
        }
        if self.counts.iter().sum::<u64>() != self.shots {
            return Err(Error::validation("counts do not sum to the shot count"));
        }
        Ok(())
    }

    pub fn frequencies(&self) -> DVector<f64> {
        let n = self.shots as f64;
        DVector::from_iterator(self.counts.len(), self.counts.iter().map(|&k| k as f64 / n))
    }
}

/// Multinomial draw via sequential conditional binomials.
pub fn sample_multinomial<R: Rng + ?Sized>(n: u64, p: &[f64], rng: &mut R) -> Vec<u64> {
    let mut counts = vec![0; p.len()];
    let mut remaining = n;
    let mut mass = 1.0;
    for (i, &pi) in p.iter().enumerate() {
        if remaining == 0 {
            break;
        }
        if i == p.len() - 1 {
            counts[i] = remaining;
            break;
        }
        let q = if mass > 0.0 { (pi / mass).clamp(0.0, 1.0) } else { 0.0 };
        let k = Binomial::new(remaining, q).expect("valid binomial").sample(rng);
        counts[i] = k;
        remaining -= k;
        mass -= pi;
    }
    counts
}

/// Rounding of `N p` to integers summing to `N` (largest remainder).
pub fn expected_counts(n: u64, p: &[f64]) -> Vec<u64> {
    let scaled: Vec<f64> = p.iter().map(|&v| v * n as f64).collect();
    let mut counts: Vec<u64> = scaled.iter().map(|v| v.floor() as u64).collect();
    let mut short = n.saturating_sub(counts.iter().sum());
    let mut order: Vec<usize> = (0..p.len()).collect();
    order.sort_by(|&a, &b| (scaled[b] - scaled[b].floor()).total_cmp(&(scaled[a] - scaled[a].floor())));
    for &i in order.iter().cycle() {
        if short == 0 {
            break;
        }
        counts[i] += 1;
        short -= 1;
    }
    counts
}

/// Noise channel families for building synthetic truths.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum NoiseSpec {
    Identity,
    Depolarizing { p: f64 },
    /// `exp(-iθP/2)` for a Pauli string such as `"X"` or `"ZI"`.
    CoherentOverrotation { axis: String, theta: f64 },
    /// Amplitude damping toward `|0>` on one qubit, or on every qubit when `qubit` is absent.
    AmplitudeDamping {
        gamma: f64,
        #[serde(default)]
        qubit: Option<usize>,
    },
    /// Classical assignment errors: column `j` of `matrix` is the outcome
    /// distribution for basis state `j`. Coherences are kept as large as
    /// complete positivity allows.
    Confusion { matrix: Vec<Vec<f64>> },
    /// Applied in list order.
    Composite { parts: Vec<NoiseSpec> },
}

/// Build the CPTP PTM of a noise family on `n_qubits`.
pub fn make_noise_model(spec: &NoiseSpec, n_qubits: usize) -> Result<PauliTransferMatrix> {
    let d = 1usize << n_qubits;
    let bad = |msg: &str| Err(Error::validation(msg.to_string()));
    match spec {
        NoiseSpec::Identity => Ok(PauliTransferMatrix::identity(n_qubits)),
        NoiseSpec::Depolarizing { p } => {
            // CP requires 0 ≤ p ≤ d²/(d²-1).
            let dd = (d * d) as f64;
            if !(0.0..=dd / (dd - 1.0)).contains(p) {
                return bad("depolarizing probability out of range");
            }
            Ok(PauliTransferMatrix::depolarizing(n_qubits, *p))
        }
        NoiseSpec::CoherentOverrotation { axis, theta } => {
            let basis = PauliBasis::get(n_qubits);
            let idx = basis
                .index_of(axis)
                .filter(|&i| i != 0)
                .ok_or_else(|| Error::validation(format!("invalid rotation axis {axis:?}")))?;
            if !theta.is_finite() {
                return bad("rotation angle must be finite");
            }
            let p = basis.element(idx) * c((d as f64).sqrt(), 0.0);
            let u = CMatrix::identity(d, d) * c((theta / 2.0).cos(), 0.0) - p * c(0.0, (theta / 2.0).sin());
            PauliTransferMatrix::from_unitary(&u)
        }
        NoiseSpec::AmplitudeDamping { gamma, qubit } => {
            if !(0.0..=1.0).contains(gamma) {
                return bad("damping rate must lie in [0, 1]");
            }
            let k0 = CMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c((1.0 - gamma).sqrt(), 0.0)]);
            let k1 = CMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(gamma.sqrt(), 0.0), c(0.0, 0.0), c(0.0, 0.0)]);
            let single = PauliTransferMatrix::from_kraus(&[k0, k1])?;
            let targets: Vec<usize> = match qubit {
                Some(q) if *q < n_qubits => vec![*q],
                Some(_) => return bad("damped qubit out of range"),
                None => (0..n_qubits).collect(),
            };
            let id1 = DMatrix::<f64>::identity(4, 4);
            let mut entries = DMatrix::from_element(1, 1, 1.0);
            for q in 0..n_qubits {
                let factor = if targets.contains(&q) { single.entries() } else { &id1 };
                entries = entries.kronecker(factor);
            }
            PauliTransferMatrix::new(n_qubits, entries)
        }
        NoiseSpec::Confusion { matrix } => {
            if matrix.len() != d || matrix.iter().any(|r| r.len() != d) {
                return bad("confusion matrix must be d×d");
            }
            for j in 0..d {
                let col: f64 = (0..d).map(|i| matrix[i][j]).sum();
                if (col - 1.0).abs() > 1e-9 || (0..d).any(|i| matrix[i][j] < 0.0) {
                    return bad("confusion matrix columns must be probability distributions");
                }
            }
            let mut kraus = Vec::new();
            let mut diag = CMatrix::zeros(d, d);
            for i in 0..d {
                diag[(i, i)] = c(matrix[i][i].sqrt(), 0.0);
                for j in 0..d {
                    if i != j && matrix[i][j] > 0.0 {
                        let mut k = CMatrix::zeros(d, d);
                        k[(i, j)] = c(matrix[i][j].sqrt(), 0.0);
                        kraus.push(k);
                    }
                }
            }
            kraus.push(diag);
            PauliTransferMatrix::from_kraus(&kraus)
        }
        NoiseSpec::Composite { parts } => parts.iter().try_fold(PauliTransferMatrix::identity(n_qubits), |acc, part| {
            make_noise_model(part, n_qubits)?.compose(&acc)
        }),
    }
}

/// Per-qubit assignment errors `p(1|0)` and `p(0|1)` as a tensor-product confusion matrix.
pub fn product_confusion(flips: &[(f64, f64)]) -> Vec<Vec<f64>> {
    let mut q = DMatrix::from_element(1, 1, 1.0);
    for &(p10, p01) in flips {
        let single = DMatrix::from_row_slice(2, 2, &[1.0 - p10, p01, p10, 1.0 - p01]);
        q = q.kronecker(&single);
    }
    (0..q.nrows()).map(|i| q.row(i).iter().copied().collect()).collect()
}

fn splitmix(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Seed for a per-call stream from the device seed, a stream index and the sequence.
pub fn derive_seed(seed: u64, stream: u64, seq: &[usize]) -> u64 {
    let mut h = splitmix(seed ^ splitmix(stream));
    for &g in seq {
        h = splitmix(h ^ g as u64);
    }
    splitmix(h ^ seq.len() as u64)
}

/// A hidden noisy gate set that answers measurement requests.
#[derive(Debug, Clone)]
pub struct TrueDevice {
    truth: GateSet,
    model: CompiledModel,
    pub seed: u64,
    pub default_shots: u64,
    /// Attach the exact probabilities to each record.
    pub record_true_probs: bool,
}

impl TrueDevice {
    /// Every truth channel must be CPTP.
    pub fn new(truth: GateSet, seed: u64) -> Result<Self> {
        for id in truth.all_channel_ids() {
            let ch = truth.channel(id);
            if !ch.is_trace_preserving(1e-10) || ch.min_choi_eigenvalue() < -1e-9 {
                return Err(Error::validation(format!("truth channel {} is not CPTP", truth.channel_name(id))));
            }
        }
        let model = CompiledModel::new(&truth);
        Ok(Self { truth, model, seed, default_shots: 125, record_true_probs: false })
    }

    pub fn truth(&self) -> &GateSet {
        &self.truth
    }

    /// Born probabilities, with tiny negatives clipped and the result renormalised.
    pub fn probabilities(&self, seq: &[usize]) -> Result<DVector<f64>> {
        self.truth.check_sequence(seq)?;
        let p = self.model.probabilities(seq);
        if p.iter().any(|&v| v < -1e-12) {
            return Err(Error::numerical("negative outcome probability; truth is not CPTP"));
        }
        let p = p.map(|v| v.max(0.0));
        let s = p.sum();
        Ok(p / s)
    }

    fn record(&self, seq: &[usize], shots: u64, counts: Vec<u64>, p: &DVector<f64>) -> ExperimentRecord {
        ExperimentRecord {
            seq: Sequence::new(seq.to_vec()),
            shots,
            counts,
            true_probs: self.record_true_probs.then(|| p.iter().copied().collect()),
        }
    }

    /// Multinomial counts drawn from a stream derived from `(seed, stream, seq)`.
    pub fn measure(&self, seq: &[usize], shots: u64, stream: u64) -> Result<ExperimentRecord> {
        if shots == 0 {
            return Err(Error::validation("shot count must be at least 1"));
        }
        let p = self.probabilities(seq)?;
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(self.seed, stream, seq));
        let counts = sample_multinomial(shots, p.as_slice(), &mut rng);
        Ok(self.record(seq, shots, counts, &p))
    }

    /// Counts equal to `N p` rounded, with no sampling noise.
    pub fn measure_exact(&self, seq: &[usize], shots: u64) -> Result<ExperimentRecord> {
        if shots == 0 {
            return Err(Error::validation("shot count must be at least 1"));
        }
        let p = self.probabilities(seq)?;
        Ok(self.record(seq, shots, expected_counts(shots, p.as_slice()), &p))
    }

    /// Measure a batch; record `k` uses stream `k`.
    pub fn measure_all(&self, seqs: &[Sequence], shots: u64, exact: bool) -> Result<Vec<ExperimentRecord>> {
        seqs.iter()
            .enumerate()
            .map(|(k, s)| if exact { self.measure_exact(s, shots) } else { self.measure(s, shots, k as u64) })
            .collect()
    }
}

/// Uniformly random words over `n_gates` gates, with lengths cycling through
/// `0..=l_max` so every length is equally represented, in shuffled order.
pub fn generate_tomography_settings<R: Rng + ?Sized>(
    l_max: usize,
    n_settings: usize,
    n_gates: usize,
    rng: &mut R,
) -> Vec<Sequence> {
    let mut lengths: Vec<usize> = (0..n_settings).map(|k| k % (l_max + 1)).collect();
    lengths.shuffle(rng);
    lengths
        .into_iter()
        .map(|len| Sequence::new((0..len).map(|_| rng.random_range(0..n_gates)).collect()))
        .collect()
}

/// Truth description: noise per gate (by name), SPAM noise.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TruthSpec {
    #[serde(default)]
    pub gates: std::collections::BTreeMap<String, NoiseSpec>,
    #[serde(default)]
    pub measurement: Option<NoiseSpec>,
    #[serde(default)]
    pub preparation: Option<NoiseSpec>,
}

impl TruthSpec {
    pub fn apply(&self, gs: &GateSet) -> Result<GateSet> {
        let mut out = gs.ideal();
        let n = gs.n_qubits();
        for (name, spec) in &self.gates {
            let idx = gs
                .gate_index(name)
                .ok_or_else(|| Error::Config(format!("truth refers to unknown gate {name:?}")))?;
            out.gates[idx].noise = make_noise_model(spec, n)?;
        }
        if let Some(spec) = &self.measurement {
            out.measurement_noise = make_noise_model(spec, n)?;
        }
        if let Some(spec) = &self.preparation {
            out.preparation_noise = make_noise_model(spec, n)?;
        }
        Ok(out)
    }
}

/// Noise planted in the stock two-qubit scenario: depolarizing plus a small
/// coherent over-rotation on each pulsed gate, near-ideal virtual gates, and
/// asymmetric readout errors.
pub fn default_two_qubit_truth() -> TruthSpec {
    let mut gates = std::collections::BTreeMap::new();
    let pulsed = [("U1_down", "XI", 0.06), ("U1_up", "XI", -0.08), ("U2_down", "IX", 0.05), ("U2_up", "IX", 0.07)];
    for (name, axis, theta) in pulsed {
        gates.insert(
            name.to_string(),
            NoiseSpec::Composite {
                parts: vec![
                    NoiseSpec::Depolarizing { p: 0.02 },
                    NoiseSpec::CoherentOverrotation { axis: axis.into(), theta },
                ],
            },
        );
    }
    for name in ["Z1", "Z2"] {
        gates.insert(name.to_string(), NoiseSpec::Depolarizing { p: 0.002 });
    }
    TruthSpec {
        gates,
        measurement: Some(NoiseSpec::Confusion { matrix: product_confusion(&[(0.02, 0.04), (0.015, 0.03)]) }),
        preparation: None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gateset::native_two_qubit_gate_set;
    use crate::ptm::metrics::unitarity_and_incoherence;

    #[test]
    fn noise_model_examples() {
        for n in 1..=2 {
            let id = make_noise_model(&NoiseSpec::Depolarizing { p: 0.0 }, n).unwrap();
            assert!(id.distance(&PauliTransferMatrix::identity(n)) < 1e-15);
        }
        // Kraus-sum oracle for the single-qubit depolarizing channel.
        let p: f64 = 0.1;
        let paulis = [
            CMatrix::identity(2, 2),
            CMatrix::from_row_slice(2, 2, &[c(0., 0.), c(1., 0.), c(1., 0.), c(0., 0.)]),
            CMatrix::from_row_slice(2, 2, &[c(0., 0.), c(0., -1.), c(0., 1.), c(0., 0.)]),
            CMatrix::from_row_slice(2, 2, &[c(1., 0.), c(0., 0.), c(0., 0.), c(-1., 0.)]),
        ];
        let weights = [1.0 - 3.0 * p / 4.0, p / 4.0, p / 4.0, p / 4.0];
        let kraus: Vec<CMatrix> = paulis.iter().zip(weights).map(|(m, w)| m * c(w.sqrt(), 0.0)).collect();
        let oracle = PauliTransferMatrix::from_kraus(&kraus).unwrap();
        let model = make_noise_model(&NoiseSpec::Depolarizing { p }, 1).unwrap();
        assert!(model.distance(&oracle) < 1e-12);
        let expect = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 0.9, 0.9, 0.9]));
        assert!((model.entries() - expect).amax() < 1e-15);

        let rot = make_noise_model(&NoiseSpec::CoherentOverrotation { axis: "X".into(), theta: 0.3 }, 1).unwrap();
        let u = CMatrix::identity(2, 2) * c(0.15f64.cos(), 0.0) - &paulis[1] * c(0.0, 0.15f64.sin());
        assert!(rot.distance(&PauliTransferMatrix::from_unitary(&u).unwrap()) < 1e-12);
        assert!((unitarity_and_incoherence(&rot).0 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn noise_models_are_cptp() {
        let specs = vec![
            NoiseSpec::AmplitudeDamping { gamma: 0.1, qubit: None },
            NoiseSpec::AmplitudeDamping { gamma: 0.3, qubit: Some(1) },
            NoiseSpec::Confusion { matrix: product_confusion(&[(0.02, 0.05), (0.01, 0.03)]) },
            NoiseSpec::Composite {
                parts: vec![NoiseSpec::Depolarizing { p: 0.05 }, NoiseSpec::CoherentOverrotation { axis: "ZX".into(), theta: 0.1 }],
            },
        ];
        for s in &specs {
            let ch = make_noise_model(s, 2).unwrap();
            assert!(ch.is_cptp(1e-10), "{s:?}");
        }
        assert!(make_noise_model(&NoiseSpec::Depolarizing { p: -0.1 }, 1).is_err());
        assert!(make_noise_model(&NoiseSpec::CoherentOverrotation { axis: "II".into(), theta: 0.1 }, 2).is_err());
        assert!(make_noise_model(&NoiseSpec::AmplitudeDamping { gamma: 1.5, qubit: None }, 1).is_err());
    }

    #[test]
    fn ideal_device_empty_sequence() {
        let dev = TrueDevice::new(native_two_qubit_gate_set(), 1).unwrap();
        let rec = dev.measure(&[], 500, 0).unwrap();
        assert_eq!(rec.counts, vec![500, 0, 0, 0]);
    }

    #[test]
    fn frequencies_within_three_sigma() {
        let truth = default_two_qubit_truth().apply(&native_two_qubit_gate_set()).unwrap();
        let dev = TrueDevice::new(truth, 99).unwrap();
        let seq = [0, 3, 1, 4];
        let p = dev.probabilities(&seq).unwrap();
        let n = 100_000u64;
        let rec = dev.measure(&seq, n, 5).unwrap();
        for (k, &cnt) in rec.counts.iter().enumerate() {
            let sigma = (n as f64 * p[k] * (1.0 - p[k])).sqrt();
            assert!((cnt as f64 - n as f64 * p[k]).abs() <= 3.0 * sigma + 1e-9);
        }
    }

    #[test]
    fn seeded_measurements_repeat() {
        let truth = default_two_qubit_truth().apply(&native_two_qubit_gate_set()).unwrap();
        let a = TrueDevice::new(truth.clone(), 42).unwrap();
        let b = TrueDevice::new(truth, 42).unwrap();
        assert_eq!(a.measure(&[0, 1, 2], 125, 3).unwrap(), b.measure(&[0, 1, 2], 125, 3).unwrap());
    }

    #[test]
    fn non_cptp_truth_rejected() {
        let mut gs = native_two_qubit_gate_set();
        gs.gates[0].noise = PauliTransferMatrix::depolarizing(2, -0.1);
        assert!(TrueDevice::new(gs, 0).is_err());
    }

    #[test]
    fn settings_design_shape() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let seqs = generate_tomography_settings(14, 7140, 6, &mut rng);
        assert_eq!(seqs.len(), 7140);
        for len in 0..=14 {
            assert_eq!(seqs.iter().filter(|s| s.len() == len).count(), 476);
        }
        let seqs = generate_tomography_settings(14, 10_000, 6, &mut rng);
        let mut freq = [0usize; 6];
        let mut total = 0;
        for s in &seqs {
            for &g in s.iter() {
                freq[g] += 1;
                total += 1;
            }
        }
        let p = 1.0 / 6.0;
        let sigma = (total as f64 * p * (1.0 - p)).sqrt();
        for f in freq {
            assert!((f as f64 - total as f64 * p).abs() <= 3.0 * sigma);
        }
    }

    #[test]
    fn expected_counts_sum() {
        assert_eq!(expected_counts(10, &[1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0]).iter().sum::<u64>(), 10);
        assert_eq!(expected_counts(1000, &[0.5, 0.25, 0.25, 0.0]), vec![500, 250, 250, 0]);
    }

    #[test]
    fn record_json_shape() {
        let rec = ExperimentRecord::new(Sequence::new(vec![0, 2]), 10, vec![3, 7]);
        let s = serde_json::to_string(&rec).unwrap();
        assert_eq!(s, r#"{"seq":[0,2],"shots":10,"counts":[3,7]}"#);
        assert!(rec.validate(2).is_ok());
        assert!(ExperimentRecord::new(Sequence::new(vec![]), 10, vec![3, 6]).validate(2).is_err());
    }
}
