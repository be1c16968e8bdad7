//! End-to-end acceptance checks. Every test prints one
//! `criterion N: PASS|FAIL ...` line to stdout, bypassing output capture.

use std::io::Write;
use std::sync::OnceLock;
use std::time::Instant;

use fbt::analysis::{bell_state_tomography, gate_metrics_with_intervals, readout_assignment_matrix};
use fbt::bayes::{
    final_decade_slope_of, posterior_update, run_online, square_root_update, GaussianBelief, NoiseStats,
    OnlineOptions, OnlineResult, UpdateOptions,
};
use fbt::forward::{exact_forward, LinearizedSetting, Sequence};
use fbt::gateset::{native_two_qubit_gate_set, single_qubit_xy_gate_set, ChannelId, GateSet};
use fbt::physicality::{mean_gate_fidelity, pmap_estimate, project_cptp, project_gateset_with_fidelity, ProjectionOptions};
use fbt::ptm::metrics::{average_gate_fidelity, unitarity_and_incoherence, FidelityConvention};
use fbt::ptm::PauliTransferMatrix;
use fbt::rb::{
    equal_up_to_phase, fit_decay_points, fit_rb_decay, rb_prior_update, rb_to_fbt_records, sample_rb_sequences,
    CliffordTable, RbDataset, RbPriorOptions,
};
use fbt::simulator::{
    default_two_qubit_truth, generate_tomography_settings, make_noise_model, product_confusion, NoiseSpec, TrueDevice,
    TruthSpec,
};
use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn verdict(n: u32, pass: bool, detail: &str) {
    let mut out = std::io::stdout().lock();
    let _ = writeln!(out, "criterion {n}: {} {detail}", if pass { "PASS" } else { "FAIL" });
}

fn normal_matrix(r: usize, c: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    use rand_distr::{Distribution, StandardNormal};
    DMatrix::from_fn(r, c, |_, _| StandardNormal.sample(rng))
}

// ---------------------------------------------------------------------------
// Shared two-qubit run

struct FullRun {
    gs: GateSet,
    truth: GateSet,
    records: Vec<fbt::simulator::ExperimentRecord>,
    result: OnlineResult,
    seconds: f64,
}

const N_SETTINGS: usize = 7140;

fn full_run() -> &'static FullRun {
    static RUN: OnceLock<FullRun> = OnceLock::new();
    RUN.get_or_init(|| {
        let gs = native_two_qubit_gate_set().with_measurement_noise(true);
        let truth = default_two_qubit_truth().apply(&gs).unwrap();
        let device = TrueDevice::new(truth.clone(), 2024).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let seqs = generate_tomography_settings(14, N_SETTINGS, gs.len(), &mut rng);
        let records = device.measure_all(&seqs, 125, false).unwrap();
        let start = Instant::now();
        let result =
            run_online(GaussianBelief::default_prior(&gs), &records, &gs, &OnlineOptions::default(), &mut rng, |_| {})
                .unwrap();
        FullRun { gs, truth, records, result, seconds: start.elapsed().as_secs_f64() }
    })
}

/// Rows of `Λ_E` that a Z-diagonal POVM can see: Pauli strings over {I, Z}.
fn z_rows(n_qubits: usize) -> Vec<usize> {
    (0..1usize << (2 * n_qubits))
        .filter(|&i| (0..n_qubits).all(|q| matches!((i >> (2 * q)) & 3, 0 | 3)))
        .collect()
}

#[test]
fn criterion_1_recovery() {
    let run = full_run();
    let (est, _) = pmap_estimate(&run.result.belief, &run.gs).unwrap();
    let mut worst = 0.0f64;
    let mut parts = Vec::new();
    for id in run.gs.free_channel_ids() {
        let err = if id == ChannelId::Measurement {
            let rows = z_rows(2);
            let a = est.channel(id).entries().select_rows(&rows);
            let b = run.truth.channel(id).entries().select_rows(&rows);
            (a - b).norm()
        } else {
            est.channel(id).distance(run.truth.channel(id))
        };
        worst = worst.max(err);
        parts.push(format!("{}={err:.3}", run.gs.channel_name(id)));
    }

    // Planted residual entries above 0.02 must agree in sign.
    let mut planted = 0;
    let mut sign_ok = 0;
    for (g_est, g_true) in est.gates.iter().zip(&run.truth.gates) {
        let dd = g_true.noise.size();
        let r_true = DMatrix::identity(dd, dd) - g_true.noise.entries();
        let r_est = DMatrix::identity(dd, dd) - g_est.noise.entries();
        for (k, &t) in r_true.iter().enumerate() {
            if t.abs() > 0.02 {
                planted += 1;
                sign_ok += usize::from(r_est[k].signum() == t.signum());
            }
        }
    }
    let pass = worst <= 0.05 && sign_ok == planted && run.seconds <= 1800.0;
    verdict(
        1,
        pass,
        &format!(
            "max |Λ̂-Λ|_F = {worst:.4} (bound 0.05) [{}]; residual signs {sign_ok}/{planted}; fit {:.0} s",
            parts.join(" "),
            run.seconds
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_2_convergence_rate() {
    let run = full_run();
    let gates = final_decade_slope_of(&run.result.diagnostics, |d| d.trace_gates).unwrap();
    let total = final_decade_slope_of(&run.result.diagnostics, |d| d.trace_post).unwrap();
    let pass = (-1.3..=-0.7).contains(&gates);
    verdict(2, pass, &format!("gate-block slope {gates:.3} in [-1.3, -0.7]; full-trace slope {total:.3}"));
    assert!(pass);
}

#[test]
fn criterion_3_dominance_crossing() {
    let run = full_run();
    let Some(cross) = run.result.dominance_step else {
        verdict(3, false, "dominance never reached");
        panic!("no dominance crossing");
    };
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let opts = OnlineOptions { fast_path: false, ..OnlineOptions::default() };
    let slow = run_online(GaussianBelief::default_prior(&run.gs), &run.records, &run.gs, &opts, &mut rng, |_| {}).unwrap();

    let mean_time = |r: &OnlineResult| {
        let tail = &r.diagnostics[cross + 1..];
        tail.iter().map(|d| d.wall_time).sum::<f64>() / tail.len() as f64
    };
    let speedup = mean_time(&slow) / mean_time(&run.result);
    let sd = run.result.belief.std_devs();
    let worst_z = (run.result.belief.mean() - slow.belief.mean())
        .iter()
        .zip(sd.iter())
        .map(|(d, s)| d.abs() / s)
        .fold(0.0, f64::max);
    let pass = cross < N_SETTINGS && speedup >= 2.0 && worst_z <= 2.0;
    verdict(
        3,
        pass,
        &format!("crossing at setting {cross}; fast-path speedup {speedup:.1}x; max |Δμ|/σ = {worst_z:.2}"),
    );
    assert!(pass);
}

// ---------------------------------------------------------------------------

/// Brute-force MAP: Gauss-Newton with finite-difference Jacobians of the
/// exact forward model, whitened by the binomial variance of each record and
/// regularised by the prior.
fn nls_oracle(
    gs: &GateSet,
    records: &[fbt::simulator::ExperimentRecord],
    prior: &GaussianBelief,
) -> DVector<f64> {
    let sd0 = prior.std_devs();
    let mu0 = prior.mean().clone();
    let p = mu0.len();
    let weights: Vec<f64> = records
        .iter()
        .map(|r| {
            let m = r.frequencies()[0];
            let n = r.shots as f64;
            (n / (m * (1.0 - m)).max(1.0 / n)).sqrt()
        })
        .collect();
    let residuals = |lam: &DVector<f64>| -> DVector<f64> {
        let mut out = DVector::zeros(records.len() + p);
        for (k, r) in records.iter().enumerate() {
            let pr = exact_forward(lam, &r.seq, gs).unwrap();
            out[k] = (r.frequencies()[0] - pr[0]) * weights[k];
        }
        for i in 0..p {
            out[records.len() + i] = (mu0[i] - lam[i]) / sd0[i];
        }
        out
    };
    let mut lam = mu0.clone();
    for _ in 0..50 {
        let r0 = residuals(&lam);
        let h = 1e-6;
        let mut jac = DMatrix::zeros(r0.len(), p);
        for i in 0..p {
            let mut a = lam.clone();
            a[i] += h;
            let mut b = lam.clone();
            b[i] -= h;
            jac.set_column(i, &((residuals(&a) - residuals(&b)) / (2.0 * h)));
        }
        let step = (jac.transpose() * &jac).cholesky().unwrap().solve(&(-jac.transpose() * &r0));
        lam += &step;
        if step.amax() < 1e-12 {
            break;
        }
    }
    lam
}

#[test]
fn criterion_4_oracle_equivalence() {
    let gs = single_qubit_xy_gate_set();
    let mut rng = ChaCha8Rng::seed_from_u64(41);
    let mut truth = gs.clone();
    for g in &mut truth.gates {
        g.noise = PauliTransferMatrix::random_near_identity(1, 0.03, &mut rng);
    }
    let device = TrueDevice::new(truth, 5).unwrap();
    let seqs = generate_tomography_settings(2, 300, gs.len(), &mut rng);
    let records = device.measure_all(&seqs, 1_000_000, true).unwrap();
    let prior = GaussianBelief::default_prior(&gs);
    let fbt = run_online(prior.clone(), &records, &gs, &OnlineOptions::default(), &mut rng, |_| {}).unwrap();
    let oracle = nls_oracle(&gs, &records, &prior);
    let diff = (fbt.belief.mean() - &oracle).amax();
    // Same stream without approximation-error modelling, for the record.
    let plain = OnlineOptions { sampling: false, ..OnlineOptions::default() };
    let ekf = run_online(prior.clone(), &records, &gs, &plain, &mut rng, |_| {}).unwrap();
    let diff_plain = (ekf.belief.mean() - &oracle).amax();
    let pass = diff <= 1e-3;
    verdict(
        4,
        pass,
        &format!("|Δλ|∞ = {diff:.2e} (bound 1e-3) against Gauss-Newton MAP; {diff_plain:.2e} with η sampling off"),
    );
    assert!(pass);
}

#[test]
fn criterion_5_posterior_correctness() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let gs = single_qubit_xy_gate_set();
    let packing = gs.packing();
    let p = packing.len();
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let m_out = 2;
        let factor = DMatrix::identity(p, p) * 0.3 + normal_matrix(p, p, &mut rng) * 0.03;
        let mean = normal_matrix(p, 1, &mut rng).column(0) * 0.1;
        let belief = GaussianBelief::from_factor(mean.clone(), factor.clone(), packing.clone()).unwrap();
        let a = normal_matrix(m_out, p, &mut rng);
        let setting = LinearizedSetting {
            sequence: Sequence::new(vec![0, 1]),
            m_bar: DVector::from_vec(vec![0.4, 0.6]),
            a_bar: a.clone(),
            lambda_bar: mean.clone(),
        };
        let le = normal_matrix(m_out, m_out, &mut rng) * 0.1 + DMatrix::identity(m_out, m_out) * 0.3;
        let lh = normal_matrix(m_out, m_out, &mut rng) * 0.1;
        let stats = NoiseStats {
            eta_bar: normal_matrix(m_out, 1, &mut rng).column(0) * 0.01,
            gamma_eta: &lh * lh.transpose(),
            gamma_eta_x: DMatrix::zeros(m_out, p),
            gamma_eps: &le * le.transpose(),
            sample_count: 0,
            whitened_cross: None,
        };
        let m = DVector::from_vec(vec![0.3, 0.7]);
        let (post, _) =
            posterior_update(&belief, &setting, &m, &stats, &UpdateOptions { ridge: 0.0, cross_covariance: false })
                .unwrap();

        // Gradient descent on ½(x-μ)ᵀΓ⁻¹(x-μ) + ½(y - A(x-μ))ᵀR⁻¹(y - A(x-μ)).
        let gx_inv = (&factor * factor.transpose()).try_inverse().unwrap();
        let r_inv = (&stats.gamma_eta + &stats.gamma_eps).try_inverse().unwrap();
        let y = &m - &setting.m_bar - &stats.eta_bar;
        let hess = &gx_inv + a.transpose() * &r_inv * &a;
        let lmax = hess.clone().symmetric_eigen().eigenvalues.max();
        let mut x = mean.clone();
        for _ in 0..2_000_000 {
            let d = &x - &mean;
            let grad = &gx_inv * &d - a.transpose() * &r_inv * (&y - &a * &d);
            if grad.amax() < 1e-12 {
                break;
            }
            x -= grad / lmax;
        }
        worst = worst.max((post.mean() - x).amax());
    }
    let f = DMatrix::from_element(1, 1, 1.0);
    let (shift, nf) =
        square_root_update(&f, &f, &DMatrix::from_element(1, 1, 1.0), &DVector::from_element(1, 1.0)).unwrap();
    let scalar = (shift[0], (&nf * nf.transpose())[(0, 0)]);
    // Exact up to round-off of √2 in the Cholesky factor.
    let ulps = 4.0 * f64::EPSILON;
    let pass = worst <= 1e-8 && (scalar.0 - 0.5).abs() <= ulps && (scalar.1 - 0.5).abs() <= ulps;
    verdict(5, pass, &format!("max |Δμ| = {worst:.1e} over 50 instances; scalar posterior N({}, {})", scalar.0, scalar.1));
    assert!(pass);
}

#[test]
fn criterion_6_projection_suite() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut inputs = Vec::new();
    for n in 1..=2 {
        for k in 0..5 {
            let base = PauliTransferMatrix::random_near_identity(n, 0.05 + 0.05 * k as f64, &mut rng);
            let dd = base.size();
            let mut m = base.entries() + normal_matrix(dd, dd, &mut rng) * 0.08;
            m.row_mut(0).fill(0.0);
            m[(0, 0)] = 1.0;
            inputs.push(PauliTransferMatrix::new(n, m).unwrap());
        }
    }
    let mut worst_idem = 0.0f64;
    let mut worst_expand = f64::NEG_INFINITY;
    let mut worst_eig = f64::INFINITY;
    let mut probes_lost = 0;
    let projected: Vec<_> = inputs.iter().map(|c| project_cptp(c).0).collect();
    for (ch, pr) in inputs.iter().zip(&projected) {
        worst_idem = worst_idem.max(project_cptp(pr).0.distance(pr));
        worst_eig = worst_eig.min(pr.min_choi_eigenvalue());
        let best = pr.distance(ch);
        for k in 0..1000 {
            let c = PauliTransferMatrix::random_cptp(ch.n_qubits(), 1 + k % 4, &mut rng);
            // Half the probes are small CPTP moves away from the projection.
            let probe = if k % 2 == 0 {
                c
            } else {
                let t = 0.1 * (k as f64 / 1000.0);
                PauliTransferMatrix::new(ch.n_qubits(), pr.entries() * (1.0 - t) + c.entries() * t).unwrap()
            };
            probes_lost += usize::from(probe.distance(ch) < best - 1e-12);
        }
    }
    for i in 0..inputs.len() {
        for j in 0..inputs.len() {
            if i != j && inputs[i].n_qubits() == inputs[j].n_qubits() {
                worst_expand = worst_expand.max(projected[i].distance(&projected[j]) - inputs[i].distance(&inputs[j]));
            }
        }
    }
    let mut worst_fid = 0.0f64;
    let opts = ProjectionOptions::default();
    for gs in [single_qubit_xy_gate_set(), native_two_qubit_gate_set()] {
        for conv in [FidelityConvention::Standard, FidelityConvention::PauliTrace] {
            let target = conv.fidelity(&PauliTransferMatrix::depolarizing(gs.n_qubits(), 0.03));
            let (out, _) = project_gateset_with_fidelity(&gs, target, conv, &opts).unwrap();
            worst_fid = worst_fid.max((mean_gate_fidelity(&out, conv) - target).abs());
        }
    }
    let pass = worst_idem <= 1e-9 && worst_expand <= 1e-8 && worst_eig >= -1e-8 && probes_lost == 0 && worst_fid <= 1e-6;
    verdict(
        6,
        pass,
        &format!(
            "idempotence {worst_idem:.1e}; expansion {worst_expand:.1e}; min Choi eig {worst_eig:.1e}; \
             probes closer {probes_lost}/10000; fidelity constraint {worst_fid:.1e}"
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_7_rb_suite() {
    let gs = native_two_qubit_gate_set();
    let table = CliffordTable::native(&gs).unwrap();
    let mut worst_phase = 0usize;
    for i in 0..table.len() {
        let u = gs.ideal_unitary(table.word(i));
        worst_phase += usize::from(!equal_up_to_phase(&u, table.unitary(i), 1e-8));
    }

    // Per-pulse depolarizing strength that gives r_C = 0.095.
    let r_of = |p: f64| {
        let mean: f64 = (0..table.len()).map(|i| (1.0 - p).powi(table.pulse_count(i) as i32)).sum::<f64>();
        0.75 * (1.0 - mean / table.len() as f64)
    };
    let (mut lo, mut hi) = (0.0, 0.2);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if r_of(mid) < 0.095 { lo = mid } else { hi = mid }
    }
    let p_dep = 0.5 * (lo + hi);
    let mut spec = TruthSpec::default();
    for name in ["U1_down", "U1_up", "U2_down", "U2_up"] {
        spec.gates.insert(name.into(), NoiseSpec::Depolarizing { p: p_dep });
    }
    let device = TrueDevice::new(spec.apply(&gs).unwrap(), 70).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(71);
    let lengths = [1, 2, 3, 4, 6, 8, 11, 15, 20, 27, 36];
    let seqs = sample_rb_sequences(&table, 40, &lengths, &mut rng).unwrap();
    let data = RbDataset::measure(&device, &seqs, 125, 0, table.mean_pulses()).unwrap();
    let fit = fit_rb_decay(&data).unwrap();
    let rel = (fit.r_c - 0.095).abs() / 0.095;

    let pc: f64 = 0.87;
    let pts: Vec<(f64, f64)> = lengths.iter().map(|&l| (l as f64, 0.7 * pc.powi(l as i32) + 0.25)).collect();
    let clean = fit_decay_points(&pts, table.mean_pulses()).unwrap();
    let clean_err = (clean.r_c - 0.75 * (1.0 - pc)).abs();

    let template = gs.clone().with_measurement_noise(true);
    let (f_bar, sigma_f) = (0.982, 0.002);
    let post = rb_prior_update(
        &GaussianBelief::default_prior(&template),
        &template,
        f_bar,
        sigma_f,
        &RbPriorOptions::default(),
        &mut rng,
    )
    .unwrap();
    let f_prior = mean_gate_fidelity(&post.mean_gateset(&template).unwrap(), FidelityConvention::Standard);

    let pass = rel <= 0.1 && clean_err <= 1e-6 && worst_phase == 0 && (f_prior - f_bar).abs() <= sigma_f;
    verdict(
        7,
        pass,
        &format!(
            "r_C {:.4} vs 0.095 ({:.1}%); noiseless error {clean_err:.1e}; phase-test failures {worst_phase}/{}; \
             prior F {f_prior:.4} vs {f_bar} ± {sigma_f}",
            fit.r_c,
            100.0 * rel,
            table.len()
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_8_rb_repurposing() {
    // The stock scenario: coherent errors on every pulsed gate and asymmetric
    // readout. The check is on U1_up, the largest planted over-rotation.
    let gs = native_two_qubit_gate_set().with_measurement_noise(true);
    let table = CliffordTable::native(&gs).unwrap();
    let truth = default_two_qubit_truth().apply(&gs).unwrap();
    let device = TrueDevice::new(truth.clone(), 80).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(81);
    let lengths = [1, 2, 3, 5, 8, 13, 21, 34, 55, 100];
    let seqs = sample_rb_sequences(&table, 300, &lengths, &mut rng).unwrap();
    let data = RbDataset::measure(&device, &seqs, 125, 0, table.mean_pulses()).unwrap();
    let mut records = rb_to_fbt_records(&data);
    records.shuffle(&mut rng);
    let longest = records.iter().map(|r| r.seq.len()).max().unwrap();
    let result =
        run_online(GaussianBelief::default_prior(&gs), &records, &gs, &OnlineOptions::default(), &mut rng, |_| {})
            .unwrap();

    let early: Vec<_> = records
        .iter()
        .zip(&result.diagnostics)
        .take(100)
        .filter(|(r, _)| r.seq.len() >= 300)
        .collect();
    let early_ok = early.iter().filter(|(_, d)| d.trace_eta.is_some_and(|e| e > d.trace_eps)).count();

    let (est, _) = pmap_estimate(&result.belief, &gs).unwrap();
    let dd = 16;
    let dominant_signs = |k: usize| {
        let r_true = DMatrix::identity(dd, dd) - truth.gates[k].noise.entries();
        let r_est = DMatrix::identity(dd, dd) - est.gates[k].noise.entries();
        let top = r_true.amax();
        let idx: Vec<usize> = (0..r_true.len()).filter(|&i| r_true[i].abs() > top - 1e-9).collect();
        let ok = idx.iter().filter(|&&i| r_est[i].signum() == r_true[i].signum()).count();
        (ok, idx.len())
    };
    let k = gs.gate_index("U1_up").unwrap();
    let (signs, n_dominant) = dominant_signs(k);
    let others: Vec<String> = ["U1_down", "U2_down", "U2_up"]
        .iter()
        .map(|name| {
            let (ok, n) = dominant_signs(gs.gate_index(name).unwrap());
            format!("{name} {ok}/{n}")
        })
        .collect();
    let pass = signs == n_dominant && !early.is_empty() && early_ok == early.len();
    verdict(
        8,
        pass,
        &format!(
            "{} settings, words up to {longest} primitives; U1_up dominant residual signs {signs}/{n_dominant} \
             (others: {}); U1_up |Λ̂-Λ|_F = {:.3}; Tr Γ_η > Tr Γ_ε on {early_ok}/{} early long settings",
            records.len(),
            others.join(", "),
            est.gates[k].noise.distance(&truth.gates[k].noise),
            early.len()
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_9_metrics() {
    let gs = native_two_qubit_gate_set();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut ratios = Vec::new();
    for spec in [
        NoiseSpec::Depolarizing { p: 0.02 },
        NoiseSpec::CoherentOverrotation { axis: "XI".into(), theta: 0.15 },
    ] {
        let mut truth = gs.clone();
        for g in truth.gates.iter_mut().filter(|g| !g.is_virtual) {
            g.noise = make_noise_model(&spec, 2).unwrap();
        }
        let belief = GaussianBelief::delta(truth.pack(), gs.packing()).unwrap();
        let rep = gate_metrics_with_intervals(&belief, &gs, 2, &mut rng).unwrap();
        let g = &rep.gates[0];
        let (_, w) = unitarity_and_incoherence(&truth.gates[0].noise);
        let r = 1.0 - average_gate_fidelity(&truth.gates[0].noise);
        assert!((g.incoherence.mean - w).abs() < 1e-12 && (g.infidelity.mean - r).abs() < 1e-12);
        ratios.push(w / r);
    }
    let bell = bell_state_tomography(&gs).unwrap();
    let bell_err = bell.iter().map(|b| (b.fidelity - 1.0).abs().max((b.concurrence - 1.0).abs())).fold(0.0, f64::max);

    let confusion = product_confusion(&[(0.02, 0.04), (0.015, 0.03)]);
    let lambda_e = make_noise_model(&NoiseSpec::Confusion { matrix: confusion.clone() }, 2).unwrap();
    let a = readout_assignment_matrix(&lambda_e, &gs.povm).unwrap();
    let conf_err = (0..4).flat_map(|i| (0..4).map(move |j| (i, j))).map(|(i, j)| (a[(i, j)] - confusion[i][j]).abs()).fold(0.0, f64::max);

    let pass = (0.8..=1.0 + 1e-12).contains(&ratios[0]) && ratios[1] <= 0.2 && bell_err <= 1e-10 && conf_err <= 1e-10;
    verdict(
        9,
        pass,
        &format!(
            "ω/r depolarizing {:.3}, coherent {:.3}; Bell error {bell_err:.1e}; assignment error {conf_err:.1e}",
            ratios[0], ratios[1]
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_10_performance() {
    let run = full_run();
    let cross = run.result.dominance_step.unwrap_or(N_SETTINGS);
    let diags = &run.result.diagnostics;
    let avg = |s: &[fbt::bayes::UpdateDiagnostics]| s.iter().map(|d| d.wall_time).sum::<f64>() / s.len().max(1) as f64;
    let sampling = avg(&diags[..cross.min(diags.len())]);
    let fast = avg(&diags[(cross + 1).min(diags.len())..]);
    let soft = sampling <= 5.0 && fast <= 1.0;
    let pass = sampling <= 25.0 && fast <= 5.0;
    verdict(
        10,
        pass,
        &format!(
            "mean update {sampling:.3} s sampling (soft 5 s), {fast:.3} s fast path (soft 1 s); soft bounds {}",
            if soft { "met" } else { "exceeded" }
        ),
    );
    assert!(pass);
}
