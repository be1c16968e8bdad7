//! Online linear-Gaussian recursion over the packed noise parameters.
//!
//! The belief keeps a covariance square-root `F` (`Γ = F Fᵀ`) rather than `Γ`
//! itself. Each setting has only a handful of outcomes, so the update is a
//! rank-`M` downdate of `F` and never needs a `P×P` factorisation.

use std::collections::VecDeque;
use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::forward::{linearize_compiled, probabilities_packed, CompiledModel, LinearizedSetting};
use crate::gateset::{GateSet, ParameterPacking};
use crate::linalg::{cholesky_with_jitter, min_sym_eigenvalue, spd_inverse, standard_normal_matrix, standard_normal_vector, symmetrize};
use crate::simulator::ExperimentRecord;

/// Gaussian over λ with covariance `F Fᵀ`.
#[derive(Debug, Clone)]
pub struct GaussianBelief {
    mean: DVector<f64>,
    factor: DMatrix<f64>,
    packing: ParameterPacking,
}

impl GaussianBelief {
    pub fn from_factor(mean: DVector<f64>, factor: DMatrix<f64>, packing: ParameterPacking) -> Result<Self> {
        check_dim(packing.len(), mean.len())?;
        check_dim(packing.len(), factor.nrows())?;
        Ok(Self { mean, factor, packing })
    }

    /// From a dense covariance, which must be PSD within `1e-9` relative to its scale.
    pub fn from_covariance(mean: DVector<f64>, covariance: &DMatrix<f64>, packing: ParameterPacking) -> Result<Self> {
        check_dim(packing.len(), covariance.nrows())?;
        check_dim(packing.len(), covariance.ncols())?;
        let sym = symmetrize(covariance);
        if (&sym - covariance).amax() > 1e-10 * covariance.amax().max(1.0) {
            return Err(Error::validation("covariance is not symmetric"));
        }
        let eig = sym.symmetric_eigen();
        let scale = eig.eigenvalues.amax().max(f64::MIN_POSITIVE);
        if eig.eigenvalues.min() < -1e-9 * scale.max(1.0) {
            return Err(Error::validation("covariance is not positive semidefinite"));
        }
        let mut factor = eig.eigenvectors;
        for (j, &v) in eig.eigenvalues.iter().enumerate() {
            factor.column_mut(j).scale_mut(v.max(0.0).sqrt());
        }
        Self::from_factor(mean, factor, packing)
    }

    /// Identity noise mean, independent entries with per-channel `σ` from the gate set.
    pub fn default_prior(gs: &GateSet) -> Self {
        let packing = gs.packing();
        let mut diag = DVector::zeros(packing.len());
        for (id, _, range) in packing.slots() {
            let sigma = gs.prior_sigma(id);
            for k in range {
                diag[k] = sigma;
            }
        }
        Self { mean: gs.ideal().pack(), factor: DMatrix::from_diagonal(&diag), packing }
    }

    /// A point mass at `mean`.
    pub fn delta(mean: DVector<f64>, packing: ParameterPacking) -> Result<Self> {
        let p = packing.len();
        Self::from_factor(mean, DMatrix::zeros(p, p), packing)
    }

    pub fn len(&self) -> usize {
        self.mean.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mean.is_empty()
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    pub fn factor(&self) -> &DMatrix<f64> {
        &self.factor
    }

    pub fn packing(&self) -> &ParameterPacking {
        &self.packing
    }

    pub fn covariance(&self) -> DMatrix<f64> {
        &self.factor * self.factor.transpose()
    }

    pub fn trace(&self) -> f64 {
        self.factor.norm_squared()
    }

    /// Marginal standard deviations.
    /// Covariance trace restricted to the gate channels.
    pub fn gate_trace(&self) -> f64 {
        let end = self.packing.gate_block_end();
        self.factor.rows(0, end).norm_squared()
    }

    pub fn std_devs(&self) -> DVector<f64> {
        DVector::from_iterator(self.len(), self.factor.row_iter().map(|r| r.norm()))
    }

    /// `λ ~ N(λ̄, Γ)`.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> DVector<f64> {
        &self.mean + &self.factor * standard_normal_vector(self.factor.ncols(), rng)
    }

    /// The template gate set with its free channels set to the mean.
    pub fn mean_gateset(&self, template: &GateSet) -> Result<GateSet> {
        template.with_parameters(&self.mean)
    }

    /// Replace a wide factor by an equivalent square one.
    pub fn compress(&mut self) {
        if self.factor.ncols() > self.factor.nrows() {
            let r = self.factor.transpose().qr().r();
            self.factor = r.transpose();
        }
    }

    /// Belief from the sample mean and covariance of `samples` (one per column),
    /// plus `floor²·I` on the covariance.
    pub fn from_samples(samples: &DMatrix<f64>, floor: f64, packing: ParameterPacking) -> Result<Self> {
        let n = samples.ncols();
        if n < 2 {
            return Err(Error::validation("need at least two samples"));
        }
        check_dim(packing.len(), samples.nrows())?;
        let mean = samples.column_mean();
        let p = samples.nrows();
        let mut factor = DMatrix::zeros(p, n + if floor > 0.0 { p } else { 0 });
        let scale = 1.0 / ((n - 1) as f64).sqrt();
        for j in 0..n {
            factor.set_column(j, &((samples.column(j) - &mean) * scale));
        }
        if floor > 0.0 {
            for i in 0..p {
                factor[(i, n + i)] = floor;
            }
        }
        let mut belief = Self::from_factor(mean, factor, packing)?;
        belief.compress();
        Ok(belief)
    }
}

/// Second-order statistics of the approximation error and shot noise for one setting.
#[derive(Debug, Clone)]
pub struct NoiseStats {
    pub eta_bar: DVector<f64>,
    pub gamma_eta: DMatrix<f64>,
    /// `Cov(η, x)`, `M×P`.
    pub gamma_eta_x: DMatrix<f64>,
    pub gamma_eps: DMatrix<f64>,
    pub sample_count: usize,
    /// `Cov(η, z)` where `x = F z`; present when cross terms were sampled.
    pub whitened_cross: Option<DMatrix<f64>>,
}

impl NoiseStats {
    /// Shot noise only, with no approximation error.
    pub fn shot_noise_only(gamma_eps: DMatrix<f64>, n_params: usize) -> Self {
        let m = gamma_eps.nrows();
        Self {
            eta_bar: DVector::zeros(m),
            gamma_eta: DMatrix::zeros(m, m),
            gamma_eta_x: DMatrix::zeros(m, n_params),
            gamma_eps,
            sample_count: 0,
            whitened_cross: None,
        }
    }

    /// `Tr Γ_η + ‖η̄‖²`.
    pub fn approx_error_magnitude(&self) -> f64 {
        self.gamma_eta.trace() + self.eta_bar.norm_squared()
    }

    pub fn trace_eps(&self) -> f64 {
        self.gamma_eps.trace()
    }
}

fn check_shots(p: &DVector<f64>, shots: u64) -> Result<()> {
    if shots == 0 {
        return Err(Error::validation("shot count must be at least 1"));
    }
    if p.iter().any(|&v| !v.is_finite() || v < -1e-9) || p.sum() > 1.0 + 1e-9 {
        return Err(Error::validation("frequencies must be non-negative and sum to at most 1"));
    }
    Ok(())
}

/// Covariance of the empirical frequency vector of `shots` multinomial draws
/// with probabilities `p`: `(diag p - p pᵀ) / N`.
pub fn shot_noise_covariance(p: &DVector<f64>, shots: u64) -> Result<DMatrix<f64>> {
    check_shots(p, shots)?;
    let p = p.map(|v| v.max(0.0));
    let n = shots as f64;
    Ok((DMatrix::from_diagonal(&p) - &p * p.transpose()) / n)
}

/// [`shot_noise_covariance`] with each diagonal entry raised to at least `1/N²`.
pub fn regularized_shot_noise_covariance(p: &DVector<f64>, shots: u64) -> Result<DMatrix<f64>> {
    let mut cov = shot_noise_covariance(p, shots)?;
    floor_diagonal(&mut cov, shots);
    Ok(cov)
}

fn floor_diagonal(cov: &mut DMatrix<f64>, shots: u64) {
    let n = shots as f64;
    for i in 0..cov.nrows() {
        cov[(i, i)] = cov[(i, i)].max(1.0 / (n * n));
    }
}

/// Probabilities clipped into `[0, 1]` and renormalised, for use as shot-noise weights.
fn clip_probabilities(p: &DVector<f64>) -> DVector<f64> {
    let clipped = p.map(|v| v.clamp(0.0, 1.0));
    let s = clipped.sum();
    if s > 0.0 {
        clipped / s
    } else {
        DVector::from_element(p.len(), 1.0 / p.len() as f64)
    }
}

/// Monte-Carlo noise statistics for one setting.
///
/// Draws `x_s = F z_s`, evaluates the exact model at `λ̄ + x_s`, and collects
/// `η_s`. The shot-noise covariance is the sample average of the multinomial
/// covariance at each `p_s`, floored as in [`regularized_shot_noise_covariance`].
pub fn sample_noise_stats<R: Rng + ?Sized>(
    belief: &GaussianBelief,
    setting: &LinearizedSetting,
    gs: &GateSet,
    shots: u64,
    n_samples: usize,
    rng: &mut R,
) -> Result<NoiseStats> {
    if n_samples < 2 {
        return Err(Error::validation("n_samples must be at least 2"));
    }
    if shots == 0 {
        return Err(Error::validation("shot count must be at least 1"));
    }
    check_dim(belief.len(), setting.lambda_bar.len())?;
    let packing = belief.packing();
    let m = setting.m_bar.len();
    let p_len = belief.len();
    let z = standard_normal_matrix(belief.factor.ncols(), n_samples, rng);
    let x = &belief.factor * &z;
    let ax = &setting.a_bar * &x;

    let mut eta = DMatrix::zeros(m, n_samples);
    let mut eps_acc = DMatrix::zeros(m, m);
    let mut lambda = DVector::zeros(p_len);
    for s in 0..n_samples {
        lambda.copy_from(&setting.lambda_bar);
        lambda += x.column(s);
        let p = probabilities_packed(gs, packing, lambda.as_slice(), &setting.sequence);
        let pc = clip_probabilities(&p);
        eps_acc += DMatrix::from_diagonal(&pc) - &pc * pc.transpose();
        eta.set_column(s, &(p - &setting.m_bar - ax.column(s)));
    }
    let sf = n_samples as f64;
    let eta_bar = eta.column_mean();
    let mut centred = eta.clone();
    for mut col in centred.column_iter_mut() {
        col -= &eta_bar;
    }
    let gamma_eta = symmetrize(&(&centred * centred.transpose() / (sf - 1.0)));
    let whitened = &centred * z.transpose() / (sf - 1.0);
    let gamma_eta_x = &centred * x.transpose() / (sf - 1.0);
    let mut gamma_eps = eps_acc / (sf * shots as f64);
    floor_diagonal(&mut gamma_eps, shots);
    Ok(NoiseStats { eta_bar, gamma_eta, gamma_eta_x, gamma_eps, sample_count: n_samples, whitened_cross: Some(whitened) })
}

/// Conditional distribution of the total error `e = η + ε` given `x`:
/// `e | x ~ N(η̄ + K x, Γ_{e|x})`.
#[derive(Debug, Clone)]
pub struct ConditionalNoise {
    /// `K = Γ_ηx Γ_x⁻¹`.
    pub gain: DMatrix<f64>,
    pub mean: DVector<f64>,
    pub covariance: DMatrix<f64>,
}

/// Dense Gaussian conditioning of the error on the parameters.
pub fn conditional_noise(stats: &NoiseStats, belief: &GaussianBelief) -> Result<ConditionalNoise> {
    check_dim(belief.len(), stats.gamma_eta_x.ncols())?;
    let m = stats.eta_bar.len();
    let base = &stats.gamma_eta + &stats.gamma_eps;
    if stats.gamma_eta_x.amax() == 0.0 {
        return Ok(ConditionalNoise {
            gain: DMatrix::zeros(m, belief.len()),
            mean: stats.eta_bar.clone(),
            covariance: symmetrize(&base),
        });
    }
    let gx_inv = spd_inverse(&belief.covariance())?;
    let gain = &stats.gamma_eta_x * gx_inv;
    let covariance = symmetrize(&(base - &gain * stats.gamma_eta_x.transpose()));
    if min_sym_eigenvalue(&covariance) < -1e-8 {
        return Err(Error::numerical("conditional noise covariance is not positive semidefinite"));
    }
    Ok(ConditionalNoise { gain, mean: stats.eta_bar.clone(), covariance })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UpdateOptions {
    /// Added to the diagonal of the innovation covariance.
    pub ridge: f64,
    /// Include the sampled `η`–`x` cross covariance in the update.
    pub cross_covariance: bool,
}

impl Default for UpdateOptions {
    fn default() -> Self {
        Self { ridge: 1e-12, cross_covariance: false }
    }
}

/// One entry of the diagnostics stream.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UpdateDiagnostics {
    pub step: usize,
    pub trace_post: f64,
    /// Trace over the gate-channel blocks only, excluding SPAM.
    #[serde(default)]
    pub trace_gates: f64,
    pub trace_eps: f64,
    /// `Tr Γ_η + ‖η̄‖²`; `None` when sampling was skipped.
    pub approx_err: Option<f64>,
    /// `Tr Γ_η` alone.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trace_eta: Option<f64>,
    pub dominance: bool,
    pub wall_time: f64,
}

/// Core square-root update for `y = A x + e`, `x ~ N(0, F Fᵀ)`, `e ~ N(0, R)`.
///
/// `w` is `(A F)ᵀ`. Returns the mean shift and the new factor
/// `F (I - W Y Wᵀ)` with `Y = L⁻ᵀ (L + V)⁻¹`, `S = L Lᵀ`, `R = V Vᵀ`, which
/// reproduces `F (I - W S⁻¹ Wᵀ) Fᵀ` exactly.
pub fn square_root_update(
    factor: &DMatrix<f64>,
    w: &DMatrix<f64>,
    r: &DMatrix<f64>,
    y: &DVector<f64>,
) -> Result<(DVector<f64>, DMatrix<f64>)> {
    let mut new_factor = factor.clone();
    let shift = square_root_update_in_place(&mut new_factor, w, r, y)?;
    Ok((shift, new_factor))
}

/// As [`square_root_update`], overwriting `factor`. On error it is untouched.
pub fn square_root_update_in_place(
    factor: &mut DMatrix<f64>,
    w: &DMatrix<f64>,
    r: &DMatrix<f64>,
    y: &DVector<f64>,
) -> Result<DVector<f64>> {
    let (y_mat, s_inv_y) = update_gains(w, r, y)?;
    let fw = &*factor * w;
    let shift = &fw * s_inv_y;
    factor.gemm(-1.0, &fw, &(y_mat * w.transpose()), 1.0);
    Ok(shift)
}

/// `(Y, S⁻¹ y)` for the square-root update.
fn update_gains(w: &DMatrix<f64>, r: &DMatrix<f64>, y: &DVector<f64>) -> Result<(DMatrix<f64>, DVector<f64>)> {
    let s = symmetrize(&(w.transpose() * w + r));
    let l = cholesky_with_jitter(&s)?;
    let v = cholesky_with_jitter(&symmetrize(r))?;
    let sum = &l + &v;
    let sum_inv = sum
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::numerical("singular innovation factor"))?;
    let y_mat = l
        .transpose()
        .solve_upper_triangular(&sum_inv)
        .ok_or_else(|| Error::numerical("singular innovation factor"))?;
    let s_inv_y = l
        .solve_lower_triangular(y)
        .and_then(|t| l.transpose().solve_upper_triangular(&t))
        .ok_or_else(|| Error::numerical("singular innovation covariance"))?;
    Ok((y_mat, s_inv_y))
}

fn innovation(setting: &LinearizedSetting, m: &DVector<f64>, stats: &NoiseStats) -> Result<DVector<f64>> {
    check_dim(setting.m_bar.len(), m.len())?;
    check_dim(setting.m_bar.len(), stats.eta_bar.len())?;
    Ok(m - &setting.m_bar - &stats.eta_bar)
}

/// Closed-form posterior for one setting given observed frequencies `m`.
pub fn posterior_update(
    belief: &GaussianBelief,
    setting: &LinearizedSetting,
    m: &DVector<f64>,
    stats: &NoiseStats,
    opts: &UpdateOptions,
) -> Result<(GaussianBelief, UpdateDiagnostics)> {
    let mut post = belief.clone();
    let diag = posterior_update_in_place(&mut post, setting, m, stats, opts)?;
    Ok((post, diag))
}

/// As [`posterior_update`], overwriting `belief`. On error it is untouched.
pub fn posterior_update_in_place(
    belief: &mut GaussianBelief,
    setting: &LinearizedSetting,
    m: &DVector<f64>,
    stats: &NoiseStats,
    opts: &UpdateOptions,
) -> Result<UpdateDiagnostics> {
    let start = Instant::now();
    check_dim(belief.len(), setting.a_bar.ncols())?;
    let y = innovation(setting, m, stats)?;
    let mut r = &stats.gamma_eta + &stats.gamma_eps;
    for i in 0..r.nrows() {
        r[(i, i)] += opts.ridge;
    }
    let mut w = belief.factor.tr_mul(&setting.a_bar.transpose());
    if opts.cross_covariance {
        let d = stats
            .whitened_cross
            .as_ref()
            .ok_or_else(|| Error::validation("cross-covariance update needs sampled statistics"))?;
        check_dim(belief.factor.ncols(), d.ncols())?;
        w += d.transpose();
        r -= d * d.transpose();
        r = symmetrize(&r);
        if min_sym_eigenvalue(&r) < -1e-8 {
            return Err(Error::numerical("conditional noise covariance is not positive semidefinite"));
        }
    }
    let shift = square_root_update_in_place(&mut belief.factor, &w, &r, &y)?;
    belief.mean += shift;
    let diag = UpdateDiagnostics {
        step: 0,
        trace_post: belief.trace(),
        trace_gates: belief.gate_trace(),
        trace_eps: stats.trace_eps(),
        approx_err: (stats.sample_count > 0).then(|| stats.approx_error_magnitude()),
        trace_eta: (stats.sample_count > 0).then(|| stats.gamma_eta.trace()),
        dominance: false,
        wall_time: start.elapsed().as_secs_f64(),
    };
    Ok(diag)
}

/// Reference update solving the stacked least-squares problem
/// `min ‖L_{e|x}(y - Ã x)‖² + ‖L_x x‖²` with dense matrices.
pub fn posterior_update_dense(
    belief: &GaussianBelief,
    setting: &LinearizedSetting,
    m: &DVector<f64>,
    stats: &NoiseStats,
    opts: &UpdateOptions,
) -> Result<(DVector<f64>, DMatrix<f64>)> {
    let y = innovation(setting, m, stats)?;
    let cond = if opts.cross_covariance {
        conditional_noise(stats, belief)?
    } else {
        ConditionalNoise {
            gain: DMatrix::zeros(m.len(), belief.len()),
            mean: stats.eta_bar.clone(),
            covariance: &stats.gamma_eta + &stats.gamma_eps,
        }
    };
    let mut r = cond.covariance;
    for i in 0..r.nrows() {
        r[(i, i)] += opts.ridge;
    }
    let a = &setting.a_bar + &cond.gain;
    let r_inv = spd_inverse(&r)?;
    let gx_inv = spd_inverse(&belief.covariance())?;
    let info = symmetrize(&(&gx_inv + a.transpose() * &r_inv * &a));
    let cov = spd_inverse(&info)?;
    let x = &cov * (a.transpose() * &r_inv * y);
    Ok((&belief.mean + x, symmetrize(&cov)))
}

/// Instantaneous check `Tr Γ_ε ≥ ratio · (Tr Γ_η + ‖η̄‖²)`.
pub fn dominance_check(stats: &NoiseStats, threshold_ratio: f64) -> bool {
    stats.trace_eps() >= threshold_ratio * stats.approx_error_magnitude()
}

/// Moving-average form of [`dominance_check`] over the most recent settings.
#[derive(Debug, Clone)]
pub struct DominanceTracker {
    window: usize,
    ratio: f64,
    history: VecDeque<(f64, f64)>,
}

impl DominanceTracker {
    pub fn new(window: usize, ratio: f64) -> Self {
        Self { window: window.max(1), ratio, history: VecDeque::new() }
    }

    pub fn push(&mut self, approx_err: f64, trace_eps: f64) {
        if self.history.len() == self.window {
            self.history.pop_front();
        }
        self.history.push_back((approx_err, trace_eps));
    }

    /// Moving averages `(approx_err, trace_eps)`.
    pub fn averages(&self) -> Option<(f64, f64)> {
        if self.history.is_empty() {
            return None;
        }
        let n = self.history.len() as f64;
        let (a, e) = self.history.iter().fold((0.0, 0.0), |(a, e), &(x, y)| (a + x, e + y));
        Some((a / n, e / n))
    }

    /// True once a full window satisfies the dominance inequality on average.
    pub fn dominant(&self) -> bool {
        self.history.len() == self.window
            && self.averages().is_some_and(|(a, e)| e >= self.ratio * a)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OnlineOptions {
    /// Samples per setting while the approximation error is being estimated.
    pub n_samples: usize,
    pub dominance_ratio: f64,
    pub dominance_window: usize,
    /// Model the approximation error at all.
    pub sampling: bool,
    /// Stop sampling once shot noise dominates.
    pub fast_path: bool,
    pub update: UpdateOptions,
}

impl Default for OnlineOptions {
    fn default() -> Self {
        Self {
            n_samples: 100,
            dominance_ratio: 100.0,
            dominance_window: 100,
            sampling: true,
            fast_path: true,
            update: UpdateOptions::default(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct OnlineResult {
    pub belief: GaussianBelief,
    pub diagnostics: Vec<UpdateDiagnostics>,
    /// Step at which the fast path switched on.
    pub dominance_step: Option<usize>,
}

/// Streaming estimator state: fold records one at a time.
#[derive(Debug, Clone)]
pub struct OnlineEstimator {
    template: GateSet,
    belief: GaussianBelief,
    opts: OnlineOptions,
    tracker: DominanceTracker,
    fast: bool,
    step: usize,
    dominance_step: Option<usize>,
}

impl OnlineEstimator {
    pub fn new(belief: GaussianBelief, template: GateSet, opts: OnlineOptions) -> Result<Self> {
        if template.packing() != *belief.packing() {
            return Err(Error::validation("belief packing does not match the gate set"));
        }
        if opts.sampling && opts.n_samples < 2 {
            return Err(Error::Config("n_samples must be at least 2".into()));
        }
        Ok(Self {
            template,
            belief,
            tracker: DominanceTracker::new(opts.dominance_window, opts.dominance_ratio),
            fast: !opts.sampling,
            opts,
            step: 0,
            dominance_step: None,
        })
    }

    pub fn belief(&self) -> &GaussianBelief {
        &self.belief
    }

    pub fn fast_path_active(&self) -> bool {
        self.fast && self.opts.sampling
    }

    /// Linearise at the current mean, estimate noise, update.
    pub fn update<R: Rng + ?Sized>(&mut self, record: &ExperimentRecord, rng: &mut R) -> Result<UpdateDiagnostics> {
        let start = Instant::now();
        record.validate(self.template.povm.len())?;
        self.template.check_sequence(&record.seq)?;
        let gs_mean = self.belief.mean_gateset(&self.template)?;
        let packing = self.belief.packing().clone();
        let model = CompiledModel::new(&gs_mean);
        let (m_bar, a_bar) = linearize_compiled(&model, &gs_mean, &packing, &record.seq);
        let setting = LinearizedSetting { sequence: record.seq.clone(), m_bar, a_bar, lambda_bar: self.belief.mean.clone() };
        let m = record.frequencies();

        let stats = if self.fast {
            let gamma_eps = regularized_shot_noise_covariance(&clip_probabilities(&setting.m_bar), record.shots)?;
            NoiseStats::shot_noise_only(gamma_eps, packing.len())
        } else {
            sample_noise_stats(&self.belief, &setting, &self.template, record.shots, self.opts.n_samples, rng)?
        };
        let update_opts = UpdateOptions {
            cross_covariance: self.opts.update.cross_covariance && !self.fast,
            ..self.opts.update
        };
        let mut diag = posterior_update_in_place(&mut self.belief, &setting, &m, &stats, &update_opts)?;
        if !self.fast {
            self.tracker.push(stats.approx_error_magnitude(), stats.trace_eps());
            if self.opts.fast_path && self.tracker.dominant() {
                self.fast = true;
                self.dominance_step = Some(self.step);
            }
        }
        diag.step = self.step;
        diag.dominance = self.tracker.dominant();
        diag.wall_time = start.elapsed().as_secs_f64();
        self.step += 1;
        Ok(diag)
    }

    pub fn finish(self, diagnostics: Vec<UpdateDiagnostics>) -> OnlineResult {
        OnlineResult { belief: self.belief, diagnostics, dominance_step: self.dominance_step }
    }
}

/// Fold a stream of records into the belief. `on_step` sees every diagnostics
/// entry as it is produced; a failing record aborts with its index.
pub fn run_online<'a, R, I, F>(
    belief0: GaussianBelief,
    records: I,
    gs: &GateSet,
    opts: &OnlineOptions,
    rng: &mut R,
    mut on_step: F,
) -> Result<OnlineResult>
where
    R: Rng + ?Sized,
    I: IntoIterator<Item = &'a ExperimentRecord>,
    F: FnMut(&UpdateDiagnostics),
{
    let mut est = OnlineEstimator::new(belief0, gs.clone(), *opts)?;
    let mut diagnostics = Vec::new();
    for (index, record) in records.into_iter().enumerate() {
        let diag = est.update(record, rng).map_err(|e| Error::Record { index, source: Box::new(e) })?;
        on_step(&diag);
        diagnostics.push(diag);
    }
    Ok(est.finish(diagnostics))
}

/// Least-squares slope of `log(Tr Γ_post)` against `log(step + 1)` over the
/// last decade of steps.
pub fn final_decade_slope(diagnostics: &[UpdateDiagnostics]) -> Option<f64> {
    final_decade_slope_of(diagnostics, |d| d.trace_post)
}

/// As [`final_decade_slope`] for any per-step trace.
pub fn final_decade_slope_of(diagnostics: &[UpdateDiagnostics], trace: impl Fn(&UpdateDiagnostics) -> f64) -> Option<f64> {
    let n = diagnostics.len();
    if n < 20 {
        return None;
    }
    let pts: Vec<(f64, f64)> = diagnostics
        .iter()
        .filter(|d| (d.step + 1) * 10 >= n && trace(d) > 0.0)
        .map(|d| (((d.step + 1) as f64).ln(), trace(d).ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    Some(sxy / sxx)
}
