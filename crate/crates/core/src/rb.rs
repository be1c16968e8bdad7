//! Two-qubit randomized benchmarking: Clifford compilation onto the native
//! gate set, sequence sampling, decay fitting, the fidelity-prior bootstrap
//! and conversion of RB data into tomography records.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap};

use nalgebra::{DMatrix, DVector, Matrix3, Vector3};
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::bayes::GaussianBelief;
use crate::error::{Error, Result};
use crate::forward::Sequence;
use crate::gateset::{GateSet, NATIVE_GATE_NAMES};
use crate::linalg::{c, CMatrix};
use crate::physicality::{project_gateset_with_fidelity, ProjectionOptions};
use crate::ptm::PauliBasis;
use crate::ptm::metrics::FidelityConvention;
use crate::simulator::{ExperimentRecord, TrueDevice};

/// Order of the two-qubit Clifford group modulo global phase.
pub const TWO_QUBIT_CLIFFORD_COUNT: usize = 11520;

/// Outcome index of `|↑↑⟩`, the RB survival outcome.
pub const SURVIVAL_OUTCOME: usize = 0;

const GENERATORS: [&str; 4] = ["XI", "ZI", "IX", "IZ"];

/// Signed images of `XI, ZI, IX, IZ` under conjugation, five bits each
/// (Pauli index then sign). Two Cliffords share a key iff they agree up to
/// global phase.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CliffordKey(u32);

impl CliffordKey {
    /// Key of `u`, or `None` if `u` is not a two-qubit Clifford.
    pub fn from_unitary(u: &CMatrix) -> Option<Self> {
        if u.shape() != (4, 4) {
            return None;
        }
        let basis = PauliBasis::get(2);
        let ud = u.adjoint();
        let mut key = 0u32;
        for (slot, label) in GENERATORS.iter().enumerate() {
            let g = basis.element(basis.index_of(label)?);
            let image = u * g * &ud;
            let coeffs = basis.coefficients(&image);
            let k = (0..coeffs.len()).max_by(|&a, &b| coeffs[a].norm().total_cmp(&coeffs[b].norm()))?;
            let ck = coeffs[k];
            let rest: f64 = coeffs.iter().enumerate().filter(|&(j, _)| j != k).map(|(_, v)| v.norm_sqr()).sum();
            if (ck.norm() - 1.0).abs() > 1e-6 || ck.im.abs() > 1e-6 || rest > 1e-10 {
                return None;
            }
            let bits = ((k as u32) << 1) | u32::from(ck.re < 0.0);
            key |= bits << (5 * slot);
        }
        Some(Self(key))
    }

    /// `(Pauli label, sign)` images of `XI, ZI, IX, IZ`.
    pub fn images(&self) -> [(String, i8); 4] {
        let basis = PauliBasis::get(2);
        std::array::from_fn(|slot| {
            let bits = (self.0 >> (5 * slot)) & 31;
            let sign = if bits & 1 == 1 { -1 } else { 1 };
            (basis.label((bits >> 1) as usize), sign)
        })
    }
}

/// A Clifford with its primitive decomposition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompiledClifford {
    #[serde(with = "complex_rows_serde")]
    pub target_unitary: CMatrix,
    pub primitive_word: Sequence,
}

mod complex_rows_serde {
    use super::CMatrix;
    use crate::gateset::{complex_from_rows, complex_to_rows, ComplexRows};
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(m: &CMatrix, s: S) -> Result<S::Ok, S::Error> {
        complex_to_rows(m).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<CMatrix, D::Error> {
        let rows = ComplexRows::deserialize(d)?;
        complex_from_rows(&rows).map_err(serde::de::Error::custom)
    }
}

/// `|Tr(U_word† U_target)| = d` up to `tol`.
pub fn equal_up_to_phase(a: &CMatrix, b: &CMatrix, tol: f64) -> bool {
    a.shape() == b.shape() && ((a.adjoint() * b).trace().norm() - a.nrows() as f64).abs() <= tol
}

#[derive(Debug, Clone)]
struct Element {
    key: CliffordKey,
    unitary: CMatrix,
    word: Vec<usize>,
    entangling: usize,
    pulses: usize,
}

/// Every two-qubit Clifford with a shortest native word.
///
/// Words are built from X90 on a qubit (`U_q↓ U_q↑`), virtual Z90, and
/// `CROT_π` (two identical conditional rotations). Entangling moves are
/// penalised first, so an element's `entangling_count` is its class: 0 for
/// local Cliffords, 1 CNOT-like, 2 iSWAP-like, 3 SWAP-like.
#[derive(Debug, Clone)]
pub struct CliffordTable {
    elements: Vec<Element>,
    index: HashMap<CliffordKey, usize>,
}

impl CliffordTable {
    /// Table over a gate set containing the six native gates by name.
    pub fn native(gs: &GateSet) -> Result<Self> {
        if gs.n_qubits() != 2 {
            return Err(Error::Config("Clifford compilation needs a two-qubit gate set".into()));
        }
        let idx = |name: &str| {
            gs.gate_index(name)
                .ok_or_else(|| Error::Config(format!("gate set has no native gate named {name}")))
        };
        let ids: Vec<usize> = NATIVE_GATE_NAMES.iter().map(|n| idx(n)).collect::<Result<_>>()?;
        let [u1d, u1u, z1, u2d, u2u, z2] = ids[..] else { unreachable!() };

        // (word, pulsed primitive count, entangling)
        let moves: Vec<(Vec<usize>, usize, bool)> = vec![
            (vec![u1d, u1u], 2, false),
            (vec![u2d, u2u], 2, false),
            (vec![z1], 0, false),
            (vec![z2], 0, false),
            (vec![u1d, u1d], 2, true),
            (vec![u1u, u1u], 2, true),
            (vec![u2d, u2d], 2, true),
            (vec![u2u, u2u], 2, true),
        ];
        let move_unitaries: Vec<CMatrix> = moves.iter().map(|(w, _, _)| gs.ideal_unitary(w)).collect();
        let cost = |m: &(Vec<usize>, usize, bool)| -> u64 {
            let virt = (m.0.len() - m.1) as u64;
            10 * m.1 as u64 + virt + if m.2 { 100_000 } else { 0 }
        };

        let id = CMatrix::identity(4, 4);
        let id_key = CliffordKey::from_unitary(&id).expect("identity is Clifford");
        let mut elements = vec![Element { key: id_key, unitary: id, word: vec![], entangling: 0, pulses: 0 }];
        let mut dist = vec![0u64];
        let mut index = HashMap::from([(id_key, 0usize)]);
        let mut settled = vec![false];
        let mut heap = BinaryHeap::from([Reverse((0u64, 0usize))]);
        while let Some(Reverse((d, i))) = heap.pop() {
            if settled[i] || d > dist[i] {
                continue;
            }
            settled[i] = true;
            for (m, mu) in moves.iter().zip(&move_unitaries) {
                let u = mu * &elements[i].unitary;
                let key = CliffordKey::from_unitary(&u)
                    .ok_or_else(|| Error::numerical("native move left the Clifford group"))?;
                let nd = d + cost(m);
                let candidate = |from: &Element| Element {
                    key,
                    unitary: u.clone(),
                    word: from.word.iter().chain(&m.0).copied().collect(),
                    entangling: from.entangling + usize::from(m.2),
                    pulses: from.pulses + m.1,
                };
                match index.get(&key) {
                    Some(&j) => {
                        if nd < dist[j] && !settled[j] {
                            elements[j] = candidate(&elements[i]);
                            dist[j] = nd;
                            heap.push(Reverse((nd, j)));
                        }
                    }
                    None => {
                        let j = elements.len();
                        elements.push(candidate(&elements[i]));
                        dist.push(nd);
                        settled.push(false);
                        index.insert(key, j);
                        heap.push(Reverse((nd, j)));
                    }
                }
            }
        }
        if elements.len() != TWO_QUBIT_CLIFFORD_COUNT {
            return Err(Error::numerical(format!(
                "native moves generated {} Cliffords, expected {TWO_QUBIT_CLIFFORD_COUNT}",
                elements.len()
            )));
        }
        Ok(Self { elements, index })
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn unitary(&self, i: usize) -> &CMatrix {
        &self.elements[i].unitary
    }

    pub fn word(&self, i: usize) -> &[usize] {
        &self.elements[i].word
    }

    pub fn key(&self, i: usize) -> CliffordKey {
        self.elements[i].key
    }

    /// Number of `CROT_π` moves in the word of element `i`, which is minimal.
    pub fn entangling_count(&self, i: usize) -> usize {
        self.elements[i].entangling
    }

    pub fn pulse_count(&self, i: usize) -> usize {
        self.elements[i].pulses
    }

    /// Mean number of pulsed primitives per uniformly random Clifford.
    pub fn mean_pulses(&self) -> f64 {
        self.elements.iter().map(|e| e.pulses as f64).sum::<f64>() / self.len() as f64
    }

    pub fn mean_word_length(&self) -> f64 {
        self.elements.iter().map(|e| e.word.len() as f64).sum::<f64>() / self.len() as f64
    }

    pub fn index_of(&self, u: &CMatrix) -> Option<usize> {
        CliffordKey::from_unitary(u).and_then(|k| self.index.get(&k).copied())
    }

    /// Compile a Clifford given by any unitary representative.
    pub fn compile(&self, u: &CMatrix) -> Result<CompiledClifford> {
        let i = self.index_of(u).ok_or_else(|| Error::validation("unitary is not a two-qubit Clifford"))?;
        let compiled = CompiledClifford { target_unitary: u.clone(), primitive_word: Sequence::new(self.word(i).to_vec()) };
        if !equal_up_to_phase(&self.elements[i].unitary, u, 1e-8) {
            return Err(Error::numerical("compiled word failed the trace test"));
        }
        Ok(compiled)
    }

    /// Sizes of the four entangling classes.
    pub fn class_sizes(&self) -> [usize; 4] {
        let mut sizes = [0; 4];
        for e in &self.elements {
            sizes[e.entangling.min(3)] += 1;
        }
        sizes
    }
}

/// Compile with the table of the native two-qubit gate set.
pub fn compile_clifford(table: &CliffordTable, u: &CMatrix) -> Result<CompiledClifford> {
    table.compile(u)
}

/// One RB sequence: `length` Clifford indices and the concatenated word.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RbSequence {
    pub length: usize,
    pub cliffords: Vec<usize>,
    pub word: Sequence,
}

/// `n_seq` sequences per length. Each has `L − 1` uniform Cliffords and a
/// final uniform Clifford among those that return the ideal state to `|↑↑⟩`,
/// found by rejection.
pub fn sample_rb_sequences<R: Rng + ?Sized>(
    table: &CliffordTable,
    n_seq: usize,
    lengths: &[usize],
    rng: &mut R,
) -> Result<Vec<RbSequence>> {
    if lengths.contains(&0) {
        return Err(Error::validation("RB lengths must be at least 1"));
    }
    let mut out = Vec::with_capacity(n_seq * lengths.len());
    for &l in lengths {
        for _ in 0..n_seq {
            let mut psi = DVector::from_element(4, c(0.0, 0.0));
            psi[0] = c(1.0, 0.0);
            let mut cliffords = Vec::with_capacity(l);
            for _ in 0..l - 1 {
                let i = rng.random_range(0..table.len());
                psi = table.unitary(i) * psi;
                cliffords.push(i);
            }
            let last = loop {
                let i = rng.random_range(0..table.len());
                let amp = (table.unitary(i).row(0) * &psi)[0];
                if amp.norm_sqr() > 1.0 - 1e-9 {
                    break i;
                }
            };
            cliffords.push(last);
            let word = cliffords.iter().flat_map(|&i| table.word(i).iter().copied()).collect();
            out.push(RbSequence { length: l, cliffords, word: Sequence::new(word) });
        }
    }
    Ok(out)
}

/// One measured RB sequence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RbEntry {
    pub clifford_length: usize,
    pub record: ExperimentRecord,
}

impl RbEntry {
    pub fn survival(&self) -> f64 {
        self.record.counts[SURVIVAL_OUTCOME] as f64 / self.record.shots as f64
    }
}

/// Measured RB data. Survival is the `|↑↑⟩` outcome.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RbDataset {
    pub entries: Vec<RbEntry>,
    /// Mean pulsed primitives per Clifford of the compiler that built the words.
    pub pulses_per_clifford: f64,
}

impl RbDataset {
    pub fn new(entries: Vec<RbEntry>, pulses_per_clifford: f64) -> Result<Self> {
        for (k, e) in entries.iter().enumerate() {
            if e.clifford_length == 0 {
                return Err(Error::validation(format!("RB entry {k} has Clifford length 0")));
            }
            if e.record.counts.iter().sum::<u64>() != e.record.shots || e.record.counts.get(SURVIVAL_OUTCOME).is_none() {
                return Err(Error::validation(format!("RB entry {k} counts do not sum to its shots")));
            }
        }
        Ok(Self { entries, pulses_per_clifford })
    }

    /// Measure sequences on a device; sequence `k` uses stream `stream_offset + k`.
    pub fn measure(
        device: &TrueDevice,
        sequences: &[RbSequence],
        shots: u64,
        stream_offset: u64,
        pulses_per_clifford: f64,
    ) -> Result<Self> {
        let entries = sequences
            .iter()
            .enumerate()
            .map(|(k, s)| {
                Ok(RbEntry { clifford_length: s.length, record: device.measure(&s.word, shots, stream_offset + k as u64)? })
            })
            .collect::<Result<_>>()?;
        Self::new(entries, pulses_per_clifford)
    }

    pub fn clifford_lengths(&self) -> Vec<usize> {
        self.entries.iter().map(|e| e.clifford_length).collect()
    }

    /// Mean survival per distinct length, ascending.
    pub fn mean_survival(&self) -> Vec<(usize, f64)> {
        let mut by_len: std::collections::BTreeMap<usize, (f64, usize)> = Default::default();
        for e in &self.entries {
            let s = by_len.entry(e.clifford_length).or_default();
            s.0 += e.survival();
            s.1 += 1;
        }
        by_len.into_iter().map(|(l, (s, n))| (l, s / n as f64)).collect()
    }
}

/// Result of fitting `P = A p^L + B` with `p = 1 − 4 r_C / 3`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RbFit {
    pub r_c: f64,
    pub r_c_stderr: f64,
    pub a: f64,
    pub b: f64,
    pub a_stderr: f64,
    pub b_stderr: f64,
    pub residual_rms: f64,
    pub iterations: usize,
    pub pulses_per_clifford: f64,
    /// `1 − r_C / n̄` with `n̄` pulsed primitives per Clifford.
    pub primitive_fidelity: f64,
    /// Standard error of `primitive_fidelity`; the default `σ_f` for the prior update.
    pub sigma_f: f64,
}

impl RbFit {
    pub fn clifford_fidelity(&self) -> f64 {
        1.0 - self.r_c
    }
}

fn decay_model(theta: &Vector3<f64>, l: f64) -> f64 {
    theta[0] * theta[2].powf(l) + theta[1]
}

/// Levenberg–Marquardt fit of the RB decay over per-sequence survivals.
pub fn fit_rb_decay(dataset: &RbDataset) -> Result<RbFit> {
    let points: Vec<(f64, f64)> = dataset.entries.iter().map(|e| (e.clifford_length as f64, e.survival())).collect();
    fit_decay_points(&points, dataset.pulses_per_clifford)
}

/// Fit `(L, survival)` points directly.
pub fn fit_decay_points(points: &[(f64, f64)], pulses_per_clifford: f64) -> Result<RbFit> {
    let mut lengths: Vec<f64> = points.iter().map(|p| p.0).collect();
    lengths.sort_by(f64::total_cmp);
    lengths.dedup();
    if lengths.len() < 3 {
        return Err(Error::validation("RB decay fit needs at least three distinct lengths"));
    }
    let n = points.len();

    // Start from B = 1/4 and a log-linear fit of the shifted means.
    let b0 = 0.25;
    let (mut sx, mut sy, mut sxx, mut sxy, mut m) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for &l in &lengths {
        let ys: Vec<f64> = points.iter().filter(|p| p.0 == l).map(|p| p.1).collect();
        let y = ys.iter().sum::<f64>() / ys.len() as f64 - b0;
        if y > 1e-6 {
            let ly = y.ln();
            sx += l;
            sy += ly;
            sxx += l * l;
            sxy += l * ly;
            m += 1.0;
        }
    }
    let (a0, p0) = if m >= 2.0 && (m * sxx - sx * sx).abs() > 0.0 {
        let slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
        let icpt = (sy - slope * sx) / m;
        (icpt.exp(), slope.exp().clamp(0.05, 0.9999))
    } else {
        (0.7, 0.9)
    };
    let mut theta = Vector3::new(a0, b0, p0);

    let ssr = |t: &Vector3<f64>| points.iter().map(|&(l, y)| (y - decay_model(t, l)).powi(2)).sum::<f64>();
    let jac_row = |t: &Vector3<f64>, l: f64| {
        let pl = t[2].powf(l);
        let dp = if l == 0.0 { 0.0 } else { t[0] * l * t[2].powf(l - 1.0) };
        Vector3::new(pl, 1.0, dp)
    };
    let mut cost = ssr(&theta);
    let mut mu = 1e-3;
    let mut iterations = 0;
    for _ in 0..2000 {
        iterations += 1;
        let mut jtj = Matrix3::zeros();
        let mut jtr = Vector3::zeros();
        for &(l, y) in points {
            let j = jac_row(&theta, l);
            jtj += j * j.transpose();
            jtr += j * (y - decay_model(&theta, l));
        }
        let mut improved = false;
        for _ in 0..50 {
            let mut damped = jtj;
            for k in 0..3 {
                damped[(k, k)] += mu * jtj[(k, k)].max(1e-12);
            }
            let Some(step) = damped.try_inverse().map(|inv| inv * jtr) else {
                mu *= 10.0;
                continue;
            };
            let mut next = theta + step;
            next[2] = next[2].clamp(1e-9, 1.0 + 1e-9);
            let c_next = ssr(&next);
            if c_next <= cost {
                let rel = (cost - c_next) / cost.max(1e-300);
                let small_step = (next - theta).amax() < 1e-14;
                theta = next;
                cost = c_next;
                mu = (mu * 0.3).max(1e-15);
                improved = true;
                if rel < 1e-15 || small_step || cost < 1e-28 {
                    mu = f64::NAN;
                }
                break;
            }
            mu *= 10.0;
        }
        if !improved || mu.is_nan() {
            break;
        }
    }
    if !theta.iter().all(|v| v.is_finite()) {
        let resid: Vec<f64> = points.iter().map(|&(l, y)| y - decay_model(&theta, l)).collect();
        return Err(Error::numerical(format!("RB decay fit diverged; residuals {resid:?}")));
    }

    let dof = n.saturating_sub(3).max(1) as f64;
    let s2 = cost / dof;
    let mut jtj = Matrix3::zeros();
    for &(l, _) in points {
        let j = jac_row(&theta, l);
        jtj += j * j.transpose();
    }
    let cov = jtj.try_inverse().map(|m| m * s2).unwrap_or_else(|| Matrix3::from_element(f64::NAN));
    let r_c = 0.75 * (1.0 - theta[2]);
    let r_c_stderr = 0.75 * cov[(2, 2)].max(0.0).sqrt();
    let nbar = if pulses_per_clifford > 0.0 { pulses_per_clifford } else { 1.0 };
    Ok(RbFit {
        r_c,
        r_c_stderr,
        a: theta[0],
        b: theta[1],
        a_stderr: cov[(0, 0)].max(0.0).sqrt(),
        b_stderr: cov[(1, 1)].max(0.0).sqrt(),
        residual_rms: (cost / n as f64).sqrt(),
        iterations,
        pulses_per_clifford,
        primitive_fidelity: 1.0 - r_c / nbar,
        sigma_f: r_c_stderr / nbar,
    })
}

/// Settings for the RB prior bootstrap.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct RbPriorOptions {
    pub n_samples: usize,
    /// Standard deviation added on the diagonal of the sample covariance, so
    /// directions the samples do not span keep some prior width.
    pub covariance_floor: f64,
    pub convention: FidelityConvention,
    /// Redraws allowed when a sampled fidelity is infeasible.
    pub max_redraws: usize,
    pub projection: ProjectionOptions,
}

impl Default for RbPriorOptions {
    fn default() -> Self {
        Self {
            n_samples: 200,
            covariance_floor: 1e-3,
            convention: FidelityConvention::Standard,
            max_redraws: 100,
            projection: ProjectionOptions::default(),
        }
    }
}

/// Prior consistent with an RB fidelity: project belief samples onto gate
/// sets of sampled mean fidelity `f ~ N(f̄, σ_f²)` and refit a Gaussian.
pub fn rb_prior_update<R: Rng + ?Sized>(
    belief: &GaussianBelief,
    template: &GateSet,
    f_bar: f64,
    sigma_f: f64,
    opts: &RbPriorOptions,
    rng: &mut R,
) -> Result<GaussianBelief> {
    if sigma_f.is_nan() || sigma_f <= 0.0 {
        return Err(Error::validation("sigma_f must be positive"));
    }
    if opts.n_samples < 10 {
        return Err(Error::validation("the RB prior update needs at least 10 samples"));
    }
    let d = template.dim();
    let floor = opts.convention.floor(d);
    let normal = Normal::new(f_bar, sigma_f).map_err(|e| Error::validation(e.to_string()))?;
    let packing = belief.packing().clone();
    let mut samples = DMatrix::zeros(belief.len(), opts.n_samples);
    for s in 0..opts.n_samples {
        let mut redraws = 0;
        let f = loop {
            let f = normal.sample(rng);
            if f > floor && f <= 1.0 {
                break f;
            }
            if f > 1.0 && f_bar >= 1.0 - 1e-12 {
                break 1.0;
            }
            redraws += 1;
            if redraws > opts.max_redraws {
                return Err(Error::numerical(format!(
                    "fidelity samples keep falling outside ({floor}, 1]; f̄ = {f_bar}, σ_f = {sigma_f}"
                )));
            }
        };
        let gs = packing.unpack(&belief.sample(rng), template)?;
        let (projected, _) = project_gateset_with_fidelity(&gs, f, opts.convention, &opts.projection)?;
        samples.set_column(s, &projected.pack());
    }
    GaussianBelief::from_samples(&samples, opts.covariance_floor, packing)
}

/// Each RB sequence becomes one tomography record.
pub fn rb_to_fbt_records(dataset: &RbDataset) -> Vec<ExperimentRecord> {
    dataset.entries.iter().map(|e| e.record.clone()).collect()
}
