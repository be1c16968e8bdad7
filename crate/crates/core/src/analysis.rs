//! Derived results: gate metrics with credible intervals, Bell-state
//! tomography, the readout assignment matrix, and the report bundle.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use nalgebra::DMatrix;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::bayes::{final_decade_slope, final_decade_slope_of, GaussianBelief, UpdateDiagnostics};
use crate::error::{Error, Result};
use crate::gateset::{ChannelId, GateSet};
use crate::linalg::{c, CMatrix};
use crate::physicality::{pmap_estimate, project_cptp};
use crate::ptm::metrics::{average_gate_fidelity, state_fidelity_and_concurrence, unitarity_and_incoherence};
use crate::ptm::{DensityState, PauliTransferMatrix, Povm};
use crate::io::FileHeader;
use crate::rb::RbFit;

/// Mean with a ±2σ band from posterior samples.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub mean: f64,
    pub std: f64,
    pub lower: f64,
    pub upper: f64,
}

impl Interval {
    pub fn from_samples(xs: &[f64]) -> Self {
        let n = xs.len().max(1) as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let var = if xs.len() > 1 { xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0) } else { 0.0 };
        let std = var.sqrt();
        Self { mean, std, lower: mean - 2.0 * std, upper: mean + 2.0 * std }
    }

    pub fn contains(&self, x: f64) -> bool {
        (self.lower..=self.upper).contains(&x)
    }

    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GateMetrics {
    pub name: String,
    pub infidelity: Interval,
    pub incoherence: Interval,
    pub unitarity: Interval,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GateMetricsReport {
    pub gates: Vec<GateMetrics>,
    pub n_samples: usize,
    /// Per-sample projections that hit the iteration cap.
    pub projection_failures: usize,
}

/// Sample gate sets from the posterior, project each gate channel to CPTP and
/// summarise infidelity, incoherence and unitarity per gate.
pub fn gate_metrics_with_intervals<R: Rng + ?Sized>(
    belief: &GaussianBelief,
    template: &GateSet,
    n_samples: usize,
    rng: &mut R,
) -> Result<GateMetricsReport> {
    if n_samples < 2 {
        return Err(Error::validation("metric intervals need at least two samples"));
    }
    let n_gates = template.len();
    let mut infid = vec![Vec::with_capacity(n_samples); n_gates];
    let mut incoh = vec![Vec::with_capacity(n_samples); n_gates];
    let mut unit = vec![Vec::with_capacity(n_samples); n_gates];
    let mut failures = 0;
    let packing = belief.packing();
    for _ in 0..n_samples {
        let gs = packing.unpack(&belief.sample(rng), template)?;
        for (i, g) in gs.gates.iter().enumerate() {
            let (ch, rep) = project_cptp(&g.noise);
            failures += usize::from(!rep.converged);
            let (u, w) = unitarity_and_incoherence(&ch);
            infid[i].push(1.0 - average_gate_fidelity(&ch));
            incoh[i].push(w);
            unit[i].push(u);
        }
    }
    let gates = template
        .gates
        .iter()
        .enumerate()
        .map(|(i, g)| GateMetrics {
            name: g.name.clone(),
            infidelity: Interval::from_samples(&infid[i]),
            incoherence: Interval::from_samples(&incoh[i]),
            unitarity: Interval::from_samples(&unit[i]),
        })
        .collect();
    Ok(GateMetricsReport { gates, n_samples, projection_failures: failures })
}

/// Native words preparing the Bell states from `|↑↑⟩`, first gate first.
///
/// `Φ±`: X90 on qubit 1, then X on qubit 2 conditioned on qubit 1 down, then
/// virtual-Z fix-ups. `Ψ±` use the up-conditioned rotation instead.
pub const BELL_WORDS: [(&str, &[&str]); 4] = [
    ("phi_plus", &["U1_down", "U1_up", "U2_down", "U2_down", "Z1"]),
    ("phi_minus", &["U1_down", "U1_up", "U2_down", "U2_down", "Z1", "Z1", "Z1"]),
    ("psi_plus", &["U1_down", "U1_up", "U2_up", "U2_up", "Z1"]),
    ("psi_minus", &["U1_down", "U1_up", "U2_up", "U2_up", "Z2"]),
];

/// Ideal Bell state vector by name.
pub fn bell_target(name: &str) -> Option<CMatrix> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let amps = match name {
        "phi_plus" => [s, 0.0, 0.0, s],
        "phi_minus" => [s, 0.0, 0.0, -s],
        "psi_plus" => [0.0, s, s, 0.0],
        "psi_minus" => [0.0, s, -s, 0.0],
        _ => return None,
    };
    Some(CMatrix::from_iterator(4, 1, amps.iter().map(|&a| c(a, 0.0))))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BellResult {
    pub state: String,
    pub word: Vec<String>,
    pub fidelity: f64,
    pub concurrence: f64,
}

/// Gate indices of a Bell word in `gs`.
pub fn bell_word(gs: &GateSet, name: &str) -> Result<Vec<usize>> {
    let (_, names) = BELL_WORDS
        .iter()
        .find(|(n, _)| *n == name)
        .ok_or_else(|| Error::validation(format!("unknown Bell state {name}")))?;
    names
        .iter()
        .map(|g| gs.gate_index(g).ok_or_else(|| Error::Config(format!("gate set has no gate named {g}"))))
        .collect()
}

/// State produced by running `word` with the noisy gates only, from `ρ₀`.
pub fn gate_only_state(gs: &GateSet, word: &[usize]) -> Result<DensityState> {
    gs.check_sequence(word)?;
    word.iter().try_fold(gs.rho0.clone(), |rho, &g| rho.evolve(&gs.gates[g].noisy()))
}

/// Fidelity and concurrence of the four Bell states prepared by the
/// estimated gates. SPAM channels are left out.
pub fn bell_state_tomography(gs: &GateSet) -> Result<Vec<BellResult>> {
    if gs.n_qubits() != 2 {
        return Err(Error::Config("Bell tomography needs a two-qubit gate set".into()));
    }
    BELL_WORDS
        .iter()
        .map(|(name, names)| {
            let word = bell_word(gs, name)?;
            let rho = gate_only_state(gs, &word)?;
            let target = DensityState::pure(&bell_target(name).expect("known Bell state"))?;
            let (fidelity, concurrence) = state_fidelity_and_concurrence(&rho, &target)?;
            Ok(BellResult { state: name.to_string(), word: names.iter().map(|s| s.to_string()).collect(), fidelity, concurrence })
        })
        .collect()
}

/// `M[i][j]`: probability of reading outcome `i` after ideally preparing
/// computational basis state `j` and applying `Λ_E`.
pub fn readout_assignment_matrix(lambda_e: &PauliTransferMatrix, povm: &Povm) -> Result<DMatrix<f64>> {
    if lambda_e.n_qubits() != povm.n_qubits() {
        return Err(Error::DimensionMismatch { expected: povm.n_qubits(), found: lambda_e.n_qubits() });
    }
    let n = povm.n_qubits();
    let d = 1usize << n;
    let mut m = DMatrix::zeros(povm.len(), d);
    for j in 0..d {
        let rho = DensityState::basis_state(n, j).evolve(lambda_e)?;
        m.set_column(j, &povm.probabilities(&rho));
    }
    Ok(m)
}

/// One channel of the report: PMAP estimate, residual and posterior width.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelReport {
    pub name: String,
    pub estimate: PauliTransferMatrix,
    /// `I − Λ̂` of the PMAP estimate.
    pub residual: PauliTransferMatrix,
    pub posterior_trace: f64,
    pub fidelity: f64,
    pub unitarity: f64,
    pub incoherence: f64,
    pub min_choi_eigenvalue: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub settings: usize,
    pub initial_trace: f64,
    pub final_trace: f64,
    pub final_gate_trace: f64,
    pub final_decade_slope: Option<f64>,
    pub final_decade_gate_slope: Option<f64>,
    pub dominance_step: Option<usize>,
    pub total_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub header: Option<FileHeader>,
    pub version: String,
    pub n_qubits: usize,
    pub channels: Vec<ChannelReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gate_metrics: Option<GateMetricsReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bell: Option<Vec<BellResult>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub assignment_matrix: Option<Vec<Vec<f64>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rb_fit: Option<RbFit>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub summary: Option<RunSummary>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ReportOptions {
    /// Posterior samples for metric intervals; 0 skips them.
    pub metric_samples: usize,
}

impl Default for ReportOptions {
    fn default() -> Self {
        Self { metric_samples: 200 }
    }
}

pub fn summarize_run(diagnostics: &[UpdateDiagnostics], initial_trace: f64, dominance_step: Option<usize>) -> RunSummary {
    let last = diagnostics.last();
    RunSummary {
        settings: diagnostics.len(),
        initial_trace,
        final_trace: last.map_or(initial_trace, |d| d.trace_post),
        final_gate_trace: last.map_or(0.0, |d| d.trace_gates),
        final_decade_slope: final_decade_slope(diagnostics),
        final_decade_gate_slope: final_decade_slope_of(diagnostics, |d| d.trace_gates),
        dominance_step,
        total_seconds: diagnostics.iter().map(|d| d.wall_time).sum(),
    }
}

/// Assemble the report for a posterior.
pub fn build_report<R: Rng + ?Sized>(
    belief: &GaussianBelief,
    template: &GateSet,
    opts: &ReportOptions,
    rng: &mut R,
) -> Result<Report> {
    let (pmap, _) = pmap_estimate(belief, template)?;
    let cov_diag: Vec<f64> = {
        let f = belief.factor();
        (0..f.nrows()).map(|i| f.row(i).norm_squared()).collect()
    };
    let n = template.n_qubits();
    let identity = PauliTransferMatrix::identity(n);
    let mut channels = Vec::new();
    for id in template.all_channel_ids() {
        let est = pmap.channel(id).clone();
        let trace = belief.packing().range(id).map_or(0.0, |r| cov_diag[r].iter().sum());
        let (u, w) = unitarity_and_incoherence(&est);
        channels.push(ChannelReport {
            name: template.channel_name(id),
            residual: PauliTransferMatrix::new(n, identity.entries() - est.entries())?,
            posterior_trace: trace,
            fidelity: average_gate_fidelity(&est),
            unitarity: u,
            incoherence: w,
            min_choi_eigenvalue: est.min_choi_eigenvalue(),
            estimate: est,
        });
    }
    let gate_metrics = if opts.metric_samples > 0 {
        Some(gate_metrics_with_intervals(belief, template, opts.metric_samples, rng)?)
    } else {
        None
    };
    let bell = if n == 2 && BELL_WORDS.iter().all(|(name, _)| bell_word(template, name).is_ok()) {
        Some(bell_state_tomography(&pmap)?)
    } else {
        None
    };
    let assignment = readout_assignment_matrix(pmap.channel(ChannelId::Measurement), &pmap.povm)?;
    Ok(Report {
        header: None,
        version: env!("CARGO_PKG_VERSION").to_string(),
        n_qubits: n,
        channels,
        gate_metrics,
        bell,
        assignment_matrix: Some(matrix_rows(&assignment)),
        rb_fit: None,
        summary: None,
    })
}

pub fn matrix_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

/// Write `report.json` plus CSVs: `convergence.csv`, `benchmarks.csv`,
/// `residuals.csv`, `bell.csv` and `assignment.csv` where available.
pub fn write_report_bundle(dir: &Path, report: &Report, diagnostics: &[UpdateDiagnostics]) -> Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join("report.json"), serde_json::to_string_pretty(report)?)?;
    let comment = report.header.as_ref().map(FileHeader::csv_comment).unwrap_or_default();

    if !diagnostics.is_empty() {
        let mut s = comment.clone() + "step,trace_post,trace_gates,trace_eps,approx_err,trace_eta,dominance,wall_time\n";
        for d in diagnostics {
            let approx = d.approx_err.map(|v| v.to_string()).unwrap_or_default();
            let eta = d.trace_eta.map(|v| v.to_string()).unwrap_or_default();
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{},{}",
                d.step, d.trace_post, d.trace_gates, d.trace_eps, approx, eta, d.dominance, d.wall_time
            );
        }
        fs::write(dir.join("convergence.csv"), s)?;
    }

    let mut s = comment.clone() + "channel,fidelity,unitarity,incoherence,posterior_trace";
    if report.gate_metrics.is_some() {
        s.push_str(",infidelity_mean,infidelity_lower,infidelity_upper,incoherence_mean,incoherence_lower,incoherence_upper");
    }
    s.push('\n');
    for ch in &report.channels {
        let _ = write!(s, "{},{},{},{},{}", ch.name, ch.fidelity, ch.unitarity, ch.incoherence, ch.posterior_trace);
        if let Some(gm) = report.gate_metrics.as_ref() {
            match gm.gates.iter().find(|g| g.name == ch.name) {
                Some(g) => {
                    let (a, b) = (&g.infidelity, &g.incoherence);
                    let _ = write!(s, ",{},{},{},{},{},{}", a.mean, a.lower, a.upper, b.mean, b.lower, b.upper);
                }
                None => s.push_str(",,,,,,"),
            }
        }
        s.push('\n');
    }
    fs::write(dir.join("benchmarks.csv"), s)?;

    let mut s = comment.clone() + "channel,row,col,estimate,residual\n";
    for ch in &report.channels {
        let (e, r) = (ch.estimate.entries(), ch.residual.entries());
        for i in 0..e.nrows() {
            for j in 0..e.ncols() {
                let _ = writeln!(s, "{},{i},{j},{},{}", ch.name, e[(i, j)], r[(i, j)]);
            }
        }
    }
    fs::write(dir.join("residuals.csv"), s)?;

    if let Some(bell) = &report.bell {
        let mut s = comment.clone() + "state,fidelity,concurrence,word\n";
        for b in bell {
            let _ = writeln!(s, "{},{},{},{}", b.state, b.fidelity, b.concurrence, b.word.join(" "));
        }
        fs::write(dir.join("bell.csv"), s)?;
    }
    if let Some(m) = &report.assignment_matrix {
        let s: String = comment.clone()
            + &m.iter()
                .map(|row| row.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(",") + "\n")
                .collect::<String>();
        fs::write(dir.join("assignment.csv"), s)?;
    }
    Ok(())
}
