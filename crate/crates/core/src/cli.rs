//! Command-line front end: `simulate | fit | rb | metrics | project`.
//!
//! Configs are single JSON documents; flags override their fields. Reports go
//! to files and a summary to stdout; per-step diagnostics go to stderr as
//! JSON lines.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::analysis::{
    bell_state_tomography, bell_word, build_report, readout_assignment_matrix, summarize_run, write_report_bundle,
    BellResult, Report, ReportOptions, BELL_WORDS,
};
use crate::bayes::{run_online, GaussianBelief, OnlineOptions, OnlineResult};
use crate::error::{Error, Result};
use crate::gateset::{ChannelId, GateSet, GateSetConfig, NATIVE_GATE_NAMES};
use crate::io::{
    config_hash, read_json_config, read_rb_file, read_records_file, write_rb_file, write_records_file, FileHeader,
    RB_TYPE, RECORDS_TYPE,
};
use crate::physicality::{project_cptp, project_gateset_with_fidelity, ProjectionOptions, ProjectionReport};
use crate::ptm::metrics::{average_gate_fidelity, unitarity_and_incoherence, FidelityConvention};
use crate::ptm::{PauliTransferMatrix, PtmJson};
use crate::rb::{fit_rb_decay, rb_prior_update, rb_to_fbt_records, sample_rb_sequences, CliffordTable, RbDataset, RbFit, RbPriorOptions};
use crate::simulator::{default_two_qubit_truth, generate_tomography_settings, TrueDevice, TruthSpec};

#[derive(Debug, Parser)]
#[command(name = "fbt", version, about = "Online Bayesian gate set tomography")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate a tomography dataset from a planted truth.
    Simulate(SimulateArgs),
    /// Fit a dataset online and write a report bundle.
    Fit(FitArgs),
    /// Randomized benchmarking: simulate or ingest, fit, optionally repurpose.
    Rb(RbArgs),
    /// Metrics of a stored gate set (report or truth file).
    Metrics(MetricsArgs),
    /// Project a PTM or a stored gate set onto CPTP maps.
    Project(ProjectArgs),
}

// ---------------------------------------------------------------------------
// simulate

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulateConfig {
    pub gateset: GateSetConfig,
    /// Planted noise; the stock two-qubit truth when absent and the gate set is native.
    pub truth: Option<TruthSpec>,
    pub n_settings: usize,
    pub l_max: usize,
    pub shots: u64,
    pub seed: u64,
    /// Round `N p` instead of sampling.
    pub exact: bool,
    pub record_true_probs: bool,
}

impl Default for SimulateConfig {
    fn default() -> Self {
        Self {
            gateset: GateSetConfig::default(),
            truth: None,
            n_settings: 7140,
            l_max: 14,
            shots: 125,
            seed: 0,
            exact: false,
            record_true_probs: false,
        }
    }
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output JSON-lines file; the truth goes next to it as `<out>.truth.json`.
    #[arg(long, short)]
    pub out: PathBuf,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub settings: Option<usize>,
    #[arg(long)]
    pub l_max: Option<usize>,
    #[arg(long)]
    pub shots: Option<u64>,
    #[arg(long)]
    pub exact: bool,
}

/// Named channels as stored in truth files and reports.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GateSetFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub header: Option<FileHeader>,
    pub channels: Vec<NamedChannel>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NamedChannel {
    pub name: String,
    #[serde(alias = "ptm")]
    pub estimate: PauliTransferMatrix,
}

impl GateSetFile {
    pub fn from_gateset(gs: &GateSet, header: Option<FileHeader>) -> Self {
        let channels = gs
            .all_channel_ids()
            .into_iter()
            .map(|id| NamedChannel { name: gs.channel_name(id), estimate: gs.channel(id).clone() })
            .collect();
        Self { header, channels }
    }

    /// Copy of `template` with the named channels replaced.
    pub fn apply(&self, template: &GateSet) -> Result<GateSet> {
        let mut gs = template.clone();
        let ids = gs.all_channel_ids();
        for ch in &self.channels {
            let id = ids
                .iter()
                .copied()
                .find(|&id| template.channel_name(id) == ch.name)
                .ok_or_else(|| Error::Config(format!("gate set has no channel named {:?}", ch.name)))?;
            if ch.estimate.n_qubits() != template.n_qubits() {
                return Err(Error::DimensionMismatch { expected: template.n_qubits(), found: ch.estimate.n_qubits() });
            }
            *gs.channel_mut(id) = ch.estimate.clone();
        }
        Ok(gs)
    }
}

fn is_native(gs: &GateSet) -> bool {
    NATIVE_GATE_NAMES.iter().all(|n| gs.gate_index(n).is_some())
}

fn truth_for(spec: Option<&TruthSpec>, gs: &GateSet) -> Result<GateSet> {
    match spec {
        Some(t) => t.apply(gs),
        None if is_native(gs) => default_two_qubit_truth().apply(gs),
        None => Ok(gs.ideal()),
    }
}

fn load_config<T: Default + for<'de> Deserialize<'de>>(path: Option<&Path>) -> Result<T> {
    path.map_or_else(|| Ok(T::default()), read_json_config)
}

/// Gate-set config, either bare or under the `gateset` key of a larger config.
fn load_gateset_config(path: Option<&Path>) -> Result<GateSetConfig> {
    let Some(path) = path else { return Ok(GateSetConfig::default()) };
    let mut value: serde_json::Value = read_json_config(path)?;
    if let Some(inner) = value.get_mut("gateset") {
        value = inner.take();
    }
    serde_json::from_value(value).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

pub struct SimulateOutput {
    pub records: usize,
    pub data_path: PathBuf,
    pub truth_path: PathBuf,
}

pub fn truth_path_for(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".truth.json");
    PathBuf::from(s)
}

pub fn cmd_simulate(args: &SimulateArgs) -> Result<SimulateOutput> {
    let mut cfg: SimulateConfig = load_config(args.config.as_deref())?;
    if let Some(v) = args.seed {
        cfg.seed = v;
    }
    if let Some(v) = args.settings {
        cfg.n_settings = v;
    }
    if let Some(v) = args.l_max {
        cfg.l_max = v;
    }
    if let Some(v) = args.shots {
        cfg.shots = v;
    }
    cfg.exact |= args.exact;
    if cfg.shots == 0 {
        return Err(Error::Config("shots must be at least 1".into()));
    }
    let gs = cfg.gateset.build()?;
    let truth = truth_for(cfg.truth.as_ref(), &gs)?;
    let mut device = TrueDevice::new(truth, cfg.seed)?;
    device.record_true_probs = cfg.record_true_probs;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let seqs = generate_tomography_settings(cfg.l_max, cfg.n_settings, gs.len(), &mut rng);
    let records = device.measure_all(&seqs, cfg.shots, cfg.exact)?;

    let header = FileHeader::new(RECORDS_TYPE, Some(cfg.seed), Some(config_hash(&cfg)?));
    write_records_file(&args.out, Some(&header), &records)?;
    let truth_path = truth_path_for(&args.out);
    let truth_file = GateSetFile::from_gateset(device.truth(), Some(header));
    std::fs::write(&truth_path, serde_json::to_string_pretty(&truth_file)?)?;
    Ok(SimulateOutput { records: records.len(), data_path: args.out.clone(), truth_path })
}

// ---------------------------------------------------------------------------
// fit

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RbPriorConfig {
    pub f_bar: f64,
    pub sigma_f: f64,
    #[serde(default)]
    pub options: RbPriorOptions,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FitConfig {
    pub gateset: GateSetConfig,
    pub online: OnlineOptions,
    pub rb_prior: Option<RbPriorConfig>,
    pub report: ReportOptions,
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    /// JSON-lines record file.
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Report directory.
    #[arg(long, short)]
    pub out: PathBuf,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Bootstrap the prior from an RB fidelity: `--rb-prior F_BAR SIGMA_F`.
    #[arg(long, num_args = 2, value_names = ["F_BAR", "SIGMA_F"])]
    pub rb_prior: Option<Vec<f64>>,
    #[arg(long)]
    pub dominance_ratio: Option<f64>,
    #[arg(long)]
    pub n_samples: Option<usize>,
    /// Stream per-step diagnostics to stderr as JSON lines.
    #[arg(long)]
    pub emit_diagnostics: bool,
    #[arg(long)]
    pub metric_samples: Option<usize>,
}

pub struct FitOutput {
    pub report: Report,
    pub result: OnlineResult,
    pub initial_belief: GaussianBelief,
}

fn online_fit(
    gs: &GateSet,
    belief0: GaussianBelief,
    records: &[crate::simulator::ExperimentRecord],
    opts: &OnlineOptions,
    emit: bool,
    rng: &mut ChaCha8Rng,
) -> Result<OnlineResult> {
    let stderr = std::io::stderr();
    run_online(belief0, records, gs, opts, rng, |d| {
        if emit {
            let mut h = stderr.lock();
            let _ = serde_json::to_writer(&mut h, d);
            let _ = h.write_all(b"\n");
        }
    })
}

pub fn cmd_fit(args: &FitArgs) -> Result<FitOutput> {
    let mut cfg: FitConfig = load_config(args.config.as_deref())?;
    if let Some(v) = args.seed {
        cfg.seed = v;
    }
    if let Some(v) = &args.rb_prior {
        cfg.rb_prior = Some(RbPriorConfig { f_bar: v[0], sigma_f: v[1], options: RbPriorOptions::default() });
    }
    if let Some(v) = args.dominance_ratio {
        cfg.online.dominance_ratio = v;
    }
    if let Some(v) = args.n_samples {
        cfg.online.n_samples = v;
    }
    if let Some(v) = args.metric_samples {
        cfg.report.metric_samples = v;
    }
    let gs = cfg.gateset.build()?;
    let file = read_records_file(&args.data)?;
    file.validate(gs.povm.len(), gs.len())?;

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut belief0 = GaussianBelief::default_prior(&gs);
    if let Some(rb) = &cfg.rb_prior {
        belief0 = rb_prior_update(&belief0, &gs, rb.f_bar, rb.sigma_f, &rb.options, &mut rng)?;
    }
    let initial_trace = belief0.trace();
    let result = online_fit(&gs, belief0.clone(), &file.records, &cfg.online, args.emit_diagnostics, &mut rng)?;
    let mut report = build_report(&result.belief, &gs, &cfg.report, &mut rng)?;
    report.summary = Some(summarize_run(&result.diagnostics, initial_trace, result.dominance_step));
    report.header = Some(FileHeader::new("fbt_report", Some(cfg.seed), Some(config_hash(&cfg)?)));
    write_report_bundle(&args.out, &report, &result.diagnostics)?;
    Ok(FitOutput { report, result, initial_belief: belief0 })
}

// ---------------------------------------------------------------------------
// rb

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RbConfig {
    pub gateset: GateSetConfig,
    pub truth: Option<TruthSpec>,
    pub lengths: Vec<usize>,
    pub sequences_per_length: usize,
    pub shots: u64,
    pub seed: u64,
    /// Also fit the gate set from the RB sequences.
    pub repurpose: bool,
    pub online: OnlineOptions,
    pub report: ReportOptions,
}

impl Default for RbConfig {
    fn default() -> Self {
        Self {
            gateset: GateSetConfig::default(),
            truth: None,
            lengths: vec![1, 2, 3, 5, 8, 12, 17, 24, 32, 45],
            sequences_per_length: 20,
            shots: 125,
            seed: 0,
            repurpose: false,
            online: OnlineOptions::default(),
            report: ReportOptions::default(),
        }
    }
}

#[derive(Debug, Args)]
pub struct RbArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, short)]
    pub out: PathBuf,
    /// Ingest an existing RB file instead of simulating.
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_delimiter = ',')]
    pub lengths: Option<Vec<usize>>,
    #[arg(long)]
    pub sequences: Option<usize>,
    #[arg(long)]
    pub shots: Option<u64>,
    /// Fit the gate set from the RB data and write a report bundle.
    #[arg(long)]
    pub repurpose: bool,
    #[arg(long)]
    pub emit_diagnostics: bool,
}

pub struct RbOutput {
    pub dataset: RbDataset,
    pub fit: RbFit,
    pub repurposed: Option<FitOutput>,
}

pub fn cmd_rb(args: &RbArgs) -> Result<RbOutput> {
    let mut cfg: RbConfig = load_config(args.config.as_deref())?;
    if let Some(v) = args.seed {
        cfg.seed = v;
    }
    if let Some(v) = &args.lengths {
        cfg.lengths = v.clone();
    }
    if let Some(v) = args.sequences {
        cfg.sequences_per_length = v;
    }
    if let Some(v) = args.shots {
        cfg.shots = v;
    }
    cfg.repurpose |= args.repurpose;
    let gs = cfg.gateset.build()?;
    let table = CliffordTable::native(&gs)?;
    let hash = config_hash(&cfg)?;
    std::fs::create_dir_all(&args.out)?;

    let dataset = match &args.data {
        Some(path) => read_rb_file(path, table.mean_pulses())?.1,
        None => {
            let mut distinct = cfg.lengths.clone();
            distinct.sort_unstable();
            distinct.dedup();
            if distinct.len() < 3 {
                return Err(Error::validation("RB needs at least three distinct lengths"));
            }
            let truth = truth_for(cfg.truth.as_ref(), &gs)?;
            let device = TrueDevice::new(truth, cfg.seed)?;
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            let seqs = sample_rb_sequences(&table, cfg.sequences_per_length, &cfg.lengths, &mut rng)?;
            let data = RbDataset::measure(&device, &seqs, cfg.shots, 0, table.mean_pulses())?;
            let header = FileHeader::new(RB_TYPE, Some(cfg.seed), Some(hash.clone()));
            write_rb_file(&args.out.join("rb.jsonl"), header, &data)?;
            let truth_file = GateSetFile::from_gateset(device.truth(), Some(FileHeader::new("truth", Some(cfg.seed), Some(hash.clone()))));
            std::fs::write(args.out.join("rb.jsonl.truth.json"), serde_json::to_string_pretty(&truth_file)?)?;
            data
        }
    };
    dataset.validate_outcomes(gs.povm.len(), gs.len())?;
    let fit = fit_rb_decay(&dataset)?;
    #[derive(Serialize)]
    struct FitFile<'a> {
        header: FileHeader,
        fit: &'a RbFit,
    }
    let fit_file = FitFile { header: FileHeader::new("rb_fit", Some(cfg.seed), Some(hash.clone())), fit: &fit };
    std::fs::write(args.out.join("rb_fit.json"), serde_json::to_string_pretty(&fit_file)?)?;

    let repurposed = if cfg.repurpose {
        let records = rb_to_fbt_records(&dataset);
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(1));
        let belief0 = GaussianBelief::default_prior(&gs);
        let initial_trace = belief0.trace();
        let result = online_fit(&gs, belief0.clone(), &records, &cfg.online, args.emit_diagnostics, &mut rng)?;
        let mut report = build_report(&result.belief, &gs, &cfg.report, &mut rng)?;
        report.summary = Some(summarize_run(&result.diagnostics, initial_trace, result.dominance_step));
        report.rb_fit = Some(fit.clone());
        report.header = Some(FileHeader::new("fbt_report", Some(cfg.seed), Some(hash)));
        write_report_bundle(&args.out.join("repurposed"), &report, &result.diagnostics)?;
        Some(FitOutput { report, result, initial_belief: belief0 })
    } else {
        None
    };
    Ok(RbOutput { dataset, fit, repurposed })
}

impl RbDataset {
    fn validate_outcomes(&self, n_outcomes: usize, n_gates: usize) -> Result<()> {
        for (k, e) in self.entries.iter().enumerate() {
            e.record.validate(n_outcomes).map_err(|err| Error::Data { line: k + 2, message: err.to_string() })?;
            if e.record.seq.iter().any(|&g| g >= n_gates) {
                return Err(Error::Data { line: k + 2, message: "gate index out of range".into() });
            }
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// metrics

#[derive(Debug, Args)]
pub struct MetricsArgs {
    /// A report (`report.json`) or truth file (`*.truth.json`).
    #[arg(long)]
    pub input: PathBuf,
    /// Gate set config matching the stored channels.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ChannelMetrics {
    pub name: String,
    pub fidelity: f64,
    pub infidelity: f64,
    pub unitarity: f64,
    pub incoherence: f64,
    pub min_choi_eigenvalue: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MetricsOutput {
    pub channels: Vec<ChannelMetrics>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bell: Option<Vec<BellResult>>,
    pub assignment_matrix: Vec<Vec<f64>>,
}

fn load_gateset_file(path: &Path) -> Result<GateSetFile> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Data { line: 0, message: format!("{}: {e}", path.display()) })?;
    serde_json::from_str(&text).map_err(|e| Error::Data { line: e.line(), message: e.to_string() })
}

pub fn cmd_metrics(args: &MetricsArgs) -> Result<MetricsOutput> {
    let cfg = load_gateset_config(args.config.as_deref())?;
    let template = cfg.build()?;
    let gs = load_gateset_file(&args.input)?.apply(&template)?;
    let channels = gs
        .all_channel_ids()
        .into_iter()
        .map(|id| {
            let ch = gs.channel(id);
            let (u, w) = unitarity_and_incoherence(ch);
            let f = average_gate_fidelity(ch);
            ChannelMetrics {
                name: gs.channel_name(id),
                fidelity: f,
                infidelity: 1.0 - f,
                unitarity: u,
                incoherence: w,
                min_choi_eigenvalue: ch.min_choi_eigenvalue(),
            }
        })
        .collect();
    let bell = if gs.n_qubits() == 2 && BELL_WORDS.iter().all(|(n, _)| bell_word(&gs, n).is_ok()) {
        Some(bell_state_tomography(&gs)?)
    } else {
        None
    };
    let m = readout_assignment_matrix(gs.channel(ChannelId::Measurement), &gs.povm)?;
    Ok(MetricsOutput { channels, bell, assignment_matrix: crate::analysis::matrix_rows(&m) })
}

// ---------------------------------------------------------------------------
// project

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ConventionArg {
    Standard,
    PauliTrace,
}

impl From<ConventionArg> for FidelityConvention {
    fn from(c: ConventionArg) -> Self {
        match c {
            ConventionArg::Standard => FidelityConvention::Standard,
            ConventionArg::PauliTrace => FidelityConvention::PauliTrace,
        }
    }
}

#[derive(Debug, Args)]
pub struct ProjectArgs {
    /// A PTM (`{"n_qubits", "entries"}`) or a stored gate set.
    #[arg(long)]
    pub input: PathBuf,
    /// Also constrain the mean gate fidelity (gate sets only).
    #[arg(long)]
    pub fidelity: Option<f64>,
    #[arg(long, value_enum, default_value = "standard")]
    pub convention: ConventionArg,
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ProjectOutput {
    Channel { projected: PauliTransferMatrix, report: ProjectionReport },
    GateSet { projected: GateSetFile, report: ProjectionReport },
}

pub fn cmd_project(args: &ProjectArgs) -> Result<ProjectOutput> {
    let text = std::fs::read_to_string(&args.input)
        .map_err(|e| Error::Data { line: 0, message: format!("{}: {e}", args.input.display()) })?;
    let value: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| Error::Data { line: e.line(), message: e.to_string() })?;
    let out = if value.get("entries").is_some() {
        if args.fidelity.is_some() {
            return Err(Error::Config("--fidelity applies to gate sets, not single channels".into()));
        }
        let json: PtmJson = serde_json::from_value(value).map_err(|e| Error::Data { line: 0, message: e.to_string() })?;
        let ch = PauliTransferMatrix::from_json(&json)?;
        let (projected, report) = project_cptp(&ch);
        ProjectOutput::Channel { projected, report }
    } else {
        let file: GateSetFile = serde_json::from_value(value).map_err(|e| Error::Data { line: 0, message: e.to_string() })?;
        let cfg = load_gateset_config(args.config.as_deref())?;
        let gs = file.apply(&cfg.build()?)?;
        let (projected, report) = match args.fidelity {
            Some(f) => project_gateset_with_fidelity(&gs, f, args.convention.into(), &ProjectionOptions::default())?,
            None => {
                let mut out = gs.clone();
                let mut dist2 = 0.0;
                let mut min_eig = f64::INFINITY;
                let mut converged = true;
                let mut iterations = 0;
                for id in gs.all_channel_ids() {
                    let (ch, rep) = project_cptp(gs.channel(id));
                    dist2 += rep.final_distance.powi(2);
                    min_eig = min_eig.min(rep.min_choi_eig);
                    converged &= rep.converged;
                    iterations = iterations.max(rep.iterations);
                    *out.channel_mut(id) = ch;
                }
                (out, ProjectionReport { iterations, final_distance: dist2.sqrt(), min_choi_eig: min_eig, converged })
            }
        };
        ProjectOutput::GateSet { projected: GateSetFile::from_gateset(&projected, None), report }
    };
    if let Some(path) = &args.out {
        std::fs::write(path, serde_json::to_string_pretty(&out)?)?;
    }
    Ok(out)
}

// ---------------------------------------------------------------------------

/// Run a parsed command, printing its summary to stdout.
pub fn run(cli: &Cli) -> Result<()> {
    let mut stdout = std::io::stdout().lock();
    match &cli.command {
        Command::Simulate(a) => {
            let out = cmd_simulate(a)?;
            let summary = serde_json::json!({
                "records": out.records,
                "data": out.data_path,
                "truth": out.truth_path,
            });
            writeln!(stdout, "{summary}")?;
        }
        Command::Fit(a) => {
            let out = cmd_fit(a)?;
            writeln!(stdout, "{}", serde_json::to_string(&out.report.summary)?)?;
        }
        Command::Rb(a) => {
            let out = cmd_rb(a)?;
            writeln!(stdout, "{}", serde_json::to_string(&out.fit)?)?;
        }
        Command::Metrics(a) => {
            let out = cmd_metrics(a)?;
            writeln!(stdout, "{}", serde_json::to_string_pretty(&out)?)?;
        }
        Command::Project(a) => {
            let out = cmd_project(a)?;
            if a.out.is_none() {
                writeln!(stdout, "{}", serde_json::to_string_pretty(&out)?)?;
            }
        }
    }
    Ok(())
}

/// Parse arguments, run, and map the outcome to an exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
