use fbt::analysis::readout_assignment_matrix;
use fbt::bayes::shot_noise_covariance;
use fbt::gateset::{native_two_qubit_gate_set, single_qubit_xy_gate_set};
use fbt::io::{read_records, write_records};
use fbt::linalg::haar_unitary;
use fbt::physicality::project_cptp;
use fbt::ptm::PauliTransferMatrix;
use fbt::rb::{fit_decay_points, CliffordTable};
use fbt::simulator::{sample_multinomial, ExperimentRecord};
use fbt::forward::Sequence;
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::sync::OnceLock;

fn table() -> &'static CliffordTable {
    static T: OnceLock<CliffordTable> = OnceLock::new();
    T.get_or_init(|| CliffordTable::native(&native_two_qubit_gate_set()).unwrap())
}

fn tp_perturbed(n: usize, scale: f64, rng: &mut ChaCha8Rng) -> PauliTransferMatrix {
    let base = PauliTransferMatrix::random_near_identity(n, 0.1, rng);
    let dd = base.size();
    let mut m = base.entries() + DMatrix::from_fn(dd, dd, |_, _| rng.random_range(-scale..scale));
    m.row_mut(0).fill(0.0);
    m[(0, 0)] = 1.0;
    PauliTransferMatrix::new(n, m).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn pack_unpack_roundtrip(seed in any::<u64>(), spam in any::<bool>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let gs = single_qubit_xy_gate_set().with_measurement_noise(spam).with_preparation_noise(spam);
        let packing = gs.packing();
        let lambda = DVector::from_fn(packing.len(), |_, _| rng.random_range(-1.0..1.0));
        let back = packing.unpack(&lambda, &gs).unwrap().pack();
        prop_assert!((back - lambda).amax() < 1e-15);
    }

    #[test]
    fn ptm_of_product_is_product_of_ptms(seed in any::<u64>(), n in 1usize..=2) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d = 1 << n;
        let u = haar_unitary(d, &mut rng);
        let v = haar_unitary(d, &mut rng);
        let pu = PauliTransferMatrix::from_unitary(&u).unwrap();
        let pv = PauliTransferMatrix::from_unitary(&v).unwrap();
        let puv = PauliTransferMatrix::from_unitary(&(&u * &v)).unwrap();
        prop_assert!(pu.compose(&pv).unwrap().distance(&puv) < 1e-12);
        // Unitary channels are orthogonal in the normalised basis.
        let o = pu.entries().transpose() * pu.entries();
        prop_assert!((o - DMatrix::identity(d * d, d * d)).amax() < 1e-12);
    }

    #[test]
    fn projection_is_cptp_and_idempotent(seed in any::<u64>(), scale in 0.0f64..0.3) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let ch = tp_perturbed(1, scale, &mut rng);
        let (p, rep) = project_cptp(&ch);
        prop_assert!(rep.converged);
        prop_assert!(p.min_choi_eigenvalue() >= -1e-8);
        prop_assert!(p.is_trace_preserving(1e-12));
        prop_assert!(project_cptp(&p).0.distance(&p) <= 1e-9);
    }

    #[test]
    fn projection_is_non_expansive(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = tp_perturbed(1, 0.2, &mut rng);
        let b = tp_perturbed(1, 0.2, &mut rng);
        let (pa, pb) = (project_cptp(&a).0, project_cptp(&b).0);
        prop_assert!(pa.distance(&pb) <= a.distance(&b) + 1e-8);
    }

    #[test]
    fn assignment_columns_are_distributions(seed in any::<u64>(), rank in 1usize..4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let gs = native_two_qubit_gate_set();
        let lambda_e = PauliTransferMatrix::random_cptp(2, rank, &mut rng);
        let a = readout_assignment_matrix(&lambda_e, &gs.povm).unwrap();
        for j in 0..a.ncols() {
            prop_assert!((a.column(j).sum() - 1.0).abs() < 1e-10);
            prop_assert!(a.column(j).iter().all(|&v| v >= -1e-10));
        }
    }

    #[test]
    fn shot_noise_covariance_is_psd_with_zero_row_sums(seed in any::<u64>(), m in 2usize..6, shots in 1u64..10_000) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let raw: Vec<f64> = (0..m).map(|_| rng.random_range(0.0..1.0)).collect();
        let total: f64 = raw.iter().sum();
        let p = DVector::from_iterator(m, raw.iter().map(|v| v / total));
        let c = shot_noise_covariance(&p, shots).unwrap();
        for i in 0..m {
            prop_assert!(c.row(i).sum().abs() < 1e-14);
        }
        prop_assert!(c.symmetric_eigen().eigenvalues.min() > -1e-14);
    }

    #[test]
    fn multinomial_counts_sum_to_shots(seed in any::<u64>(), shots in 0u64..5000) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let counts = sample_multinomial(shots, &[0.1, 0.2, 0.3, 0.4], &mut rng);
        prop_assert_eq!(counts.iter().sum::<u64>(), shots);
    }

    #[test]
    fn clifford_table_is_closed(i in 0usize..11520, j in 0usize..11520) {
        let t = table();
        let prod = t.unitary(i) * t.unitary(j);
        prop_assert!(t.index_of(&prod).is_some());
        prop_assert!(t.compile(&prod).is_ok());
    }

    #[test]
    fn noiseless_decay_is_recovered(a in 0.3f64..0.8, b in 0.1f64..0.3, p in 0.5f64..0.99) {
        let pts: Vec<(f64, f64)> = [1.0, 2.0, 4.0, 7.0, 12.0, 20.0, 35.0]
            .iter()
            .map(|&l| (l, a * p.powf(l) + b))
            .collect();
        let fit = fit_decay_points(&pts, 6.0).unwrap();
        prop_assert!((fit.r_c - 0.75 * (1.0 - p)).abs() < 1e-6);
    }

    #[test]
    fn record_stream_roundtrip(seqs in proptest::collection::vec((proptest::collection::vec(0usize..6, 0..20), 0u64..50, 0u64..50), 0..20)) {
        let records: Vec<ExperimentRecord> = seqs
            .into_iter()
            .map(|(s, a, b)| ExperimentRecord::new(Sequence::new(s), a + b, vec![a, b]))
            .collect();
        let mut buf = Vec::new();
        write_records(&mut buf, None, &records).unwrap();
        let back = read_records(&buf[..]).unwrap();
        prop_assert_eq!(back.records, records);
    }
}
