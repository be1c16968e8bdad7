//! Exact sequence model and its linearisation about a mean gate set.
//!
//! A sequence is stored in time order: index 0 is applied first. The outcome
//! probabilities are `E Λ_E Λ_{s_{L-1}} G_{s_{L-1}} ⋯ Λ_{s_0} G_{s_0} Λ_ρ ρ₀`.

use std::ops::Deref;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::gateset::{ChannelId, GateSet, ParameterPacking};
use crate::ptm::PauliTransferMatrix;

/// Gate indices in the order they are applied.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Sequence(pub Vec<usize>);

impl Sequence {
    pub fn new(gates: Vec<usize>) -> Self {
        Self(gates)
    }

    pub fn empty() -> Self {
        Self(Vec::new())
    }

    pub fn gates(&self) -> &[usize] {
        &self.0
    }
}

impl Deref for Sequence {
    type Target = [usize];
    fn deref(&self) -> &[usize] {
        &self.0
    }
}

impl From<Vec<usize>> for Sequence {
    fn from(v: Vec<usize>) -> Self {
        Self(v)
    }
}

/// Precomputed noisy gate products for repeated evaluation.
#[derive(Debug, Clone)]
pub struct CompiledModel {
    /// `Λ_i G_i` per gate.
    pub noisy: Vec<DMatrix<f64>>,
    /// `E Λ_E`, one row per outcome.
    pub readout: DMatrix<f64>,
    /// `Λ_ρ ρ₀`.
    pub prepared: DVector<f64>,
}

impl CompiledModel {
    pub fn new(gs: &GateSet) -> Self {
        Self {
            noisy: gs.gates.iter().map(|g| g.noise.entries() * g.ideal.entries()).collect(),
            readout: gs.povm.effects() * gs.measurement_noise.entries(),
            prepared: gs.preparation_noise.entries() * gs.rho0.coefficients(),
        }
    }

    /// State just before readout.
    pub fn final_state(&self, seq: &[usize]) -> DVector<f64> {
        let mut s = self.prepared.clone();
        for &g in seq {
            s = &self.noisy[g] * s;
        }
        s
    }

    pub fn probabilities(&self, seq: &[usize]) -> DVector<f64> {
        &self.readout * self.final_state(seq)
    }
}

/// Outcome probabilities of `seq` on the gate set with every free channel
/// replaced from `lambda`.
pub fn exact_forward(lambda: &DVector<f64>, seq: &[usize], gs: &GateSet) -> Result<DVector<f64>> {
    gs.check_sequence(seq)?;
    let packing = gs.packing();
    check_dim(packing.len(), lambda.len())?;
    Ok(probabilities_packed(gs, &packing, lambda.as_slice(), seq))
}

/// Forward evaluation that only unpacks the channels `seq` touches.
pub(crate) fn probabilities_packed(gs: &GateSet, packing: &ParameterPacking, lambda: &[f64], seq: &[usize]) -> DVector<f64> {
    let channel = |id: ChannelId| -> DMatrix<f64> {
        match packing.range(id) {
            Some(r) => packing.unpack_slice(&lambda[r]).into_entries(),
            None => gs.channel(id).entries().clone(),
        }
    };
    let mut noisy: Vec<Option<DMatrix<f64>>> = vec![None; gs.len()];
    let mut s = channel(ChannelId::Preparation) * gs.rho0.coefficients();
    for &g in seq {
        let op = noisy[g].get_or_insert_with(|| channel(ChannelId::Gate(g)) * gs.gates[g].ideal.entries());
        s = &*op * s;
    }
    gs.povm.effects() * (channel(ChannelId::Measurement) * s)
}

/// Outcome probabilities of `seq` on `gs` as it stands.
pub fn probabilities(gs: &GateSet, seq: &[usize]) -> Result<DVector<f64>> {
    gs.check_sequence(seq)?;
    Ok(CompiledModel::new(gs).probabilities(seq))
}

/// First-order model of one setting: `m ≈ m̄ + Ā (λ - λ̄)`.
#[derive(Debug, Clone)]
pub struct LinearizedSetting {
    pub sequence: Sequence,
    pub m_bar: DVector<f64>,
    pub a_bar: DMatrix<f64>,
    /// Expansion point.
    pub lambda_bar: DVector<f64>,
}

/// Linearise the sequence model about the channels currently held in `gs_mean`.
///
/// Each occurrence of a gate contributes one first-order insertion; repeated
/// gates accumulate into the same column block. SPAM blocks are included for
/// whichever SPAM channels are free.
pub fn linearize(gs_mean: &GateSet, seq: &Sequence) -> Result<LinearizedSetting> {
    gs_mean.check_sequence(seq)?;
    let packing = gs_mean.packing();
    let model = CompiledModel::new(gs_mean);
    let (m_bar, a_bar) = linearize_compiled(&model, gs_mean, &packing, seq);
    Ok(LinearizedSetting { sequence: seq.clone(), m_bar, a_bar, lambda_bar: gs_mean.pack() })
}

pub(crate) fn linearize_compiled(
    model: &CompiledModel,
    gs: &GateSet,
    packing: &ParameterPacking,
    seq: &[usize],
) -> (DVector<f64>, DMatrix<f64>) {
    let dd = packing.ptm_size();
    let m = model.readout.nrows();
    let len = seq.len();

    // states[t] is the state entering position t; states[len] is the final state.
    let mut states = Vec::with_capacity(len + 1);
    states.push(model.prepared.clone());
    for &g in seq {
        let next = &model.noisy[g] * states.last().expect("non-empty");
        states.push(next);
    }
    let m_bar = &model.readout * &states[len];

    let mut a_bar = DMatrix::zeros(m, packing.len());
    let add_block = |a_bar: &mut DMatrix<f64>, start: usize, left: &DMatrix<f64>, right: &DVector<f64>| {
        for a in 1..dd {
            for b in 0..dd {
                let rb = right[b];
                if rb == 0.0 {
                    continue;
                }
                let col = start + (a - 1) * dd + b;
                for r in 0..m {
                    a_bar[(r, col)] += left[(r, a)] * rb;
                }
            }
        }
    };

    if let Some(range) = packing.range(ChannelId::Measurement) {
        add_block(&mut a_bar, range.start, gs.povm.effects(), &states[len]);
    }

    // Walk backwards, carrying back = E Λ_E Π_{i>t} Λ_i G_i.
    let mut back = model.readout.clone();
    for t in (0..len).rev() {
        let g = seq[t];
        if let Some(range) = packing.range(ChannelId::Gate(g)) {
            let entering = gs.gates[g].ideal.entries() * &states[t];
            add_block(&mut a_bar, range.start, &back, &entering);
        }
        back = &back * &model.noisy[g];
    }

    if let Some(range) = packing.range(ChannelId::Preparation) {
        add_block(&mut a_bar, range.start, &back, gs.rho0.coefficients());
    }
    (m_bar, a_bar)
}

/// `η = A(λ_sample) - (m̄ + Ā (λ_sample - λ̄))`.
pub fn approximation_error(lambda_sample: &DVector<f64>, setting: &LinearizedSetting, gs: &GateSet) -> Result<DVector<f64>> {
    check_dim(setting.lambda_bar.len(), lambda_sample.len())?;
    let exact = exact_forward(lambda_sample, &setting.sequence, gs)?;
    Ok(exact - (&setting.m_bar + &setting.a_bar * (lambda_sample - &setting.lambda_bar)))
}

/// Linearisation about the identity noise channel on every gate: the ideal
/// output plus one insertion of each perturbation, built term by term.
pub fn merkel_model(gs: &GateSet, seq: &Sequence) -> Result<LinearizedSetting> {
    gs.check_sequence(seq)?;
    let ideal = gs.ideal();
    let packing = ideal.packing();
    let dd = packing.ptm_size();
    let ideals: Vec<&DMatrix<f64>> = gs.gates.iter().map(|g| g.ideal.entries()).collect();
    let e = gs.povm.effects();
    let rho = gs.rho0.coefficients();

    let product = |gates: &[usize]| {
        gates.iter().fold(DMatrix::<f64>::identity(dd, dd), |acc, &g| ideals[g] * acc)
    };
    let m_ideal = e * product(seq) * rho;
    let mut a = DMatrix::zeros(e.nrows(), packing.len());
    for (id, _, range) in packing.slots() {
        for row in 1..dd {
            for col in 0..dd {
                let mut unit = DMatrix::zeros(dd, dd);
                unit[(row, col)] = 1.0;
                let column = match id {
                    ChannelId::Gate(j) => seq
                        .iter()
                        .enumerate()
                        .filter(|&(_, &g)| g == j)
                        .map(|(t, _)| e * product(&seq[t + 1..]) * &unit * ideals[j] * product(&seq[..t]) * rho)
                        .fold(DVector::zeros(e.nrows()), |acc, v| acc + v),
                    ChannelId::Measurement => e * &unit * product(seq) * rho,
                    ChannelId::Preparation => e * product(seq) * &unit * rho,
                };
                a.set_column(range.start + (row - 1) * dd + col, &column);
            }
        }
    }
    Ok(LinearizedSetting { sequence: seq.clone(), m_bar: m_ideal, a_bar: a, lambda_bar: ideal.pack() })
}

/// One standard process-tomography setting: prepare `state`, apply the
/// unknown channel, measure an effect with Pauli coefficients `effect`.
#[derive(Debug, Clone)]
pub struct QptSetting {
    pub state: DVector<f64>,
    pub effect: DVector<f64>,
    pub probability: f64,
}

/// Least-squares channel estimate `(AᵀA)⁻¹Aᵀm` by pseudoinverse, where each
/// row of `A` is `effect ⊗ state` acting on the row-major PTM.
pub fn linear_qpt(n_qubits: usize, settings: &[QptSetting]) -> Result<PauliTransferMatrix> {
    let dd = 1usize << (2 * n_qubits);
    let mut a = DMatrix::zeros(settings.len(), dd * dd);
    let mut m = DVector::zeros(settings.len());
    for (k, s) in settings.iter().enumerate() {
        check_dim(dd, s.state.len())?;
        check_dim(dd, s.effect.len())?;
        for i in 0..dd {
            for j in 0..dd {
                a[(k, i * dd + j)] = s.effect[i] * s.state[j];
            }
        }
        m[k] = s.probability;
    }
    let pinv = a
        .pseudo_inverse(1e-10)
        .map_err(|e| Error::numerical(format!("pseudoinverse failed: {e}")))?;
    let x = pinv * m;
    PauliTransferMatrix::new(n_qubits, DMatrix::from_row_slice(dd, dd, x.as_slice()))
}
