//! Collapsed Gibbs sampler for the multi-sample isoform model.
//!
//! Every sample `d` either belongs to the informative group (`E_d = 1`) and
//! draws its reads from the shared proportions `alpha`, or has its own
//! proportions `beta_d`. Both `alpha` and every `beta_d` have a
//! `Dirichlet(lambda)` prior, `E_d ~ Bernoulli(gamma)` and
//! `gamma ~ Beta(a, b)`. The proportions are integrated out, so the chain
//! moves over read origins `Z`, indicators `E` and `gamma` only:
//!
//! ```text
//! P(R, Z, E, gamma) ∝ B(lambda + N_E) / B(lambda)
//!                   · prod_{d: E_d = 0} B(lambda + n_d) / B(lambda)
//!                   · prod_{d, i} h[d][i][Z_di]
//!                   · gamma^(|E| + a - 1) (1 - gamma)^(D - |E| + b - 1)
//! ```
//!
//! where `n_d` are the per-isoform read counts of sample `d` and `N_E` their
//! sum over informative samples.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Beta, Distribution};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::read_model::GeneratingMatrix;
use crate::special::{ln_beta, ln_multi_beta, log_sum_exp, logistic};

/// Which normalizing constants the collapsed joint keeps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PriorNormalization {
    /// Exact marginal of the generative model: each integrated Dirichlet
    /// contributes `B(lambda + n) / B(lambda)` and the Beta prior on gamma is
    /// a proper density.
    #[default]
    Normalized,
    /// Drops `1 / B(lambda)` and `1 / B(a, b)`. For `J > 2` or `lambda != 1`
    /// this shifts the odds of `E_d` by `B(lambda)` per sample.
    Omitted,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hyperparameters {
    pub lambda: Vec<f64>,
    pub a: f64,
    pub b: f64,
    #[serde(default)]
    pub normalization: PriorNormalization,
}

impl Hyperparameters {
    /// `lambda_j = 1`, `a = b = 1`.
    pub fn uniform(n_isoforms: usize) -> Self {
        Self::symmetric(n_isoforms, 1.0, 1.0, 1.0)
    }

    pub fn symmetric(n_isoforms: usize, lambda: f64, a: f64, b: f64) -> Self {
        Self {
            lambda: vec![lambda; n_isoforms],
            a,
            b,
            normalization: PriorNormalization::default(),
        }
    }

    pub fn with_normalization(mut self, normalization: PriorNormalization) -> Self {
        self.normalization = normalization;
        self
    }

    pub fn validate(&self, n_isoforms: usize) -> Result<()> {
        if self.lambda.len() != n_isoforms {
            return Err(Error::InvalidInput(format!(
                "lambda has {} entries, expected {n_isoforms}",
                self.lambda.len()
            )));
        }
        let positive = |v: f64| v > 0.0 && v.is_finite();
        if !self.lambda.iter().all(|&l| positive(l)) || !positive(self.a) || !positive(self.b) {
            return Err(Error::InvalidInput(
                "hyperparameters must be positive and finite".into(),
            ));
        }
        Ok(())
    }

    fn lambda_sum(&self) -> f64 {
        self.lambda.iter().sum()
    }

    /// `ln B(lambda)` when normalizing, else zero.
    fn ln_dirichlet_norm(&self) -> f64 {
        match self.normalization {
            PriorNormalization::Normalized => ln_multi_beta(self.lambda.iter().copied()),
            PriorNormalization::Omitted => 0.0,
        }
    }

    fn ln_beta_norm(&self) -> f64 {
        match self.normalization {
            PriorNormalization::Normalized => ln_beta(self.a, self.b),
            PriorNormalization::Omitted => 0.0,
        }
    }

    /// `ln [B(lambda + counts) / B(lambda)]` (or the unnormalized variant).
    fn ln_dirichlet_marginal(&self, counts: &[f64]) -> f64 {
        ln_multi_beta(self.lambda.iter().zip(counts).map(|(l, c)| l + c)) - self.ln_dirichlet_norm()
    }
}

/// Hidden state of the collapsed chain.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainState {
    /// `z[d][i]`: 0-based isoform origin of read `i` of sample `d`.
    pub z: Vec<Vec<usize>>,
    /// Informative-group indicators.
    pub e: Vec<bool>,
    pub gamma: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PosteriorSummary {
    pub alpha_hat: Vec<f64>,
    pub theta_hat: Vec<f64>,
    pub iterations: usize,
    pub burn_in: usize,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub per_iteration_alpha: Option<Vec<Vec<f64>>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChainConfig {
    /// Retained sweeps.
    pub iterations: usize,
    pub burn_in: usize,
    pub seed: u64,
    pub keep_trace: bool,
    /// End every sweep with a Metropolis-Hastings proposal that swaps the
    /// informative group with its complement.
    #[serde(default = "default_true")]
    pub complement_moves: bool,
}

fn default_true() -> bool {
    true
}

impl Default for ChainConfig {
    fn default() -> Self {
        Self {
            iterations: 2000,
            burn_in: 500,
            seed: 0,
            keep_trace: false,
            complement_moves: true,
        }
    }
}

/// Seed of the independent stream for item `index` under `master`.
pub fn stream_seed(master: u64, index: u64) -> u64 {
    master ^ index
}

fn check_dims(h: &[GeneratingMatrix], hyper: &Hyperparameters) -> Result<usize> {
    let j = hyper.lambda.len();
    hyper.validate(j)?;
    if let Some(m) = h.iter().find(|m| m.n_isoforms() != j) {
        return Err(Error::InvalidInput(format!(
            "generating matrix has {} isoforms, lambda has {j}",
            m.n_isoforms()
        )));
    }
    Ok(j)
}

fn check_state(state: &ChainState, h: &[GeneratingMatrix], n_isoforms: usize) -> Result<()> {
    if state.z.len() != h.len() || state.e.len() != h.len() {
        return Err(Error::InvalidInput(format!(
            "state covers {} / {} samples, data has {}",
            state.z.len(),
            state.e.len(),
            h.len()
        )));
    }
    if !(state.gamma > 0.0 && state.gamma < 1.0) {
        return Err(Error::InvalidInput(format!(
            "gamma {} outside (0, 1)",
            state.gamma
        )));
    }
    for (d, (zs, m)) in state.z.iter().zip(h).enumerate() {
        if zs.len() != m.n_reads() {
            return Err(Error::InvalidInput(format!(
                "sample {d}: {} assignments for {} reads",
                zs.len(),
                m.n_reads()
            )));
        }
        for (i, &zi) in zs.iter().enumerate() {
            if zi >= n_isoforms || m.get(i, zi) <= 0.0 {
                return Err(Error::InvalidAssignment {
                    sample: d,
                    read: i,
                    isoform: zi,
                });
            }
        }
    }
    Ok(())
}

/// Per-sample isoform counts and their sum over informative samples.
#[derive(Debug, Clone)]
struct Counts {
    per_sample: Vec<Vec<f64>>,
    pooled: Vec<f64>,
}

impl Counts {
    fn from_state(state: &ChainState, n_isoforms: usize) -> Self {
        let per_sample: Vec<Vec<f64>> = state
            .z
            .iter()
            .map(|zs| {
                let mut c = vec![0.0; n_isoforms];
                for &zi in zs {
                    c[zi] += 1.0;
                }
                c
            })
            .collect();
        let mut pooled = vec![0.0; n_isoforms];
        for (c, &e) in per_sample.iter().zip(&state.e) {
            if e {
                pooled.iter_mut().zip(c).for_each(|(p, v)| *p += v);
            }
        }
        Self { per_sample, pooled }
    }
}

fn e_log_odds(hyper: &Hyperparameters, counts: &Counts, d: usize, e_d: bool, gamma: f64) -> f64 {
    let own = &counts.per_sample[d];
    let mut without = counts.pooled.clone();
    if e_d {
        without.iter_mut().zip(own).for_each(|(p, v)| *p -= v);
    }
    let with: Vec<f64> = without.iter().zip(own).map(|(p, v)| p + v).collect();
    // The prior normalizer of the shared proportions cancels in the first
    // difference; the sample's own Dirichlet term only exists when E_d = 0.
    let d_b1 = hyper.ln_dirichlet_marginal(&with) - hyper.ln_dirichlet_marginal(&without);
    let ln_b0_outside = hyper.ln_dirichlet_marginal(own);
    d_b1 - ln_b0_outside + gamma.ln() - (-gamma).ln_1p()
}

/// `P(E_d = 1 | Z, E_-d, gamma)`.
pub fn e_success_probability(
    state: &ChainState,
    d: usize,
    h: &[GeneratingMatrix],
    hyper: &Hyperparameters,
) -> Result<f64> {
    let j = check_dims(h, hyper)?;
    check_state(state, h, j)?;
    if d >= h.len() {
        return Err(Error::IndexOutOfRange {
            index: d,
            len: h.len(),
        });
    }
    let counts = Counts::from_state(state, j);
    Ok(logistic(e_log_odds(hyper, &counts, d, state.e[d], state.gamma)))
}

fn z_weights(
    row: &[f64],
    hyper: &Hyperparameters,
    counts: &[f64],
    current: usize,
    out: &mut Vec<f64>,
) {
    out.clear();
    out.extend(row.iter().enumerate().map(|(j, &hij)| {
        if hij > 0.0 {
            let own = if j == current { 1.0 } else { 0.0 };
            hij * (hyper.lambda[j] + counts[j] - own)
        } else {
            0.0
        }
    }));
}

/// Normalized conditional distribution of `Z[d][i]` given everything else.
pub fn z_conditional(
    state: &ChainState,
    d: usize,
    i: usize,
    h: &[GeneratingMatrix],
    hyper: &Hyperparameters,
) -> Result<Vec<f64>> {
    let j = check_dims(h, hyper)?;
    check_state(state, h, j)?;
    let m = h.get(d).ok_or(Error::IndexOutOfRange {
        index: d,
        len: h.len(),
    })?;
    if i >= m.n_reads() {
        return Err(Error::IndexOutOfRange {
            index: i,
            len: m.n_reads(),
        });
    }
    let counts = Counts::from_state(state, j);
    let relevant = if state.e[d] {
        &counts.pooled
    } else {
        &counts.per_sample[d]
    };
    let mut q = Vec::with_capacity(j);
    z_weights(m.row(i), hyper, relevant, state.z[d][i], &mut q);
    let total: f64 = q.iter().sum();
    if total <= 0.0 {
        return Err(Error::ZeroRow { row: i });
    }
    q.iter_mut().for_each(|v| *v /= total);
    Ok(q)
}

fn draw_index<R: Rng + ?Sized>(weights: &[f64], rng: &mut R) -> usize {
    let total: f64 = weights.iter().sum();
    let mut u = rng.random::<f64>() * total;
    let mut last = 0;
    for (k, &w) in weights.iter().enumerate() {
        if w > 0.0 {
            if u < w {
                return k;
            }
            u -= w;
            last = k;
        }
    }
    last
}

fn clamp_unit(g: f64) -> f64 {
    g.clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON / 2.0)
}

fn draw_gamma<R: Rng + ?Sized>(n_in: usize, n_samples: usize, hyper: &Hyperparameters, rng: &mut R) -> f64 {
    let dist = Beta::new(n_in as f64 + hyper.a, (n_samples - n_in) as f64 + hyper.b)
        .expect("positive beta parameters");
    clamp_unit(dist.sample(rng))
}

/// Redraws `E_d` from its full conditional.
pub fn sample_e<R: Rng + ?Sized>(
    state: &mut ChainState,
    d: usize,
    h: &[GeneratingMatrix],
    hyper: &Hyperparameters,
    rng: &mut R,
) -> Result<bool> {
    let p = e_success_probability(state, d, h, hyper)?;
    state.e[d] = rng.random::<f64>() < p;
    Ok(state.e[d])
}

/// Redraws `Z[d][i]` from its full conditional.
pub fn sample_z<R: Rng + ?Sized>(
    state: &mut ChainState,
    d: usize,
    i: usize,
    h: &[GeneratingMatrix],
    hyper: &Hyperparameters,
    rng: &mut R,
) -> Result<usize> {
    let q = z_conditional(state, d, i, h, hyper)?;
    state.z[d][i] = draw_index(&q, rng);
    Ok(state.z[d][i])
}

/// Redraws gamma from `Beta(|E| + a, D - |E| + b)`.
pub fn sample_gamma<R: Rng + ?Sized>(
    state: &mut ChainState,
    hyper: &Hyperparameters,
    rng: &mut R,
) -> Result<f64> {
    hyper.validate(hyper.lambda.len())?;
    let n_in = state.e.iter().filter(|&&e| e).count();
    state.gamma = draw_gamma(n_in, state.e.len(), hyper, rng);
    Ok(state.gamma)
}

/// Log of the collapsed joint `P(R, Z, E, gamma | lambda, a, b)`.
pub fn log_collapsed_joint(
    state: &ChainState,
    h: &[GeneratingMatrix],
    hyper: &Hyperparameters,
) -> Result<f64> {
    let j = check_dims(h, hyper)?;
    check_state(state, h, j)?;
    let counts = Counts::from_state(state, j);
    let ln_h: f64 = state
        .z
        .iter()
        .zip(h)
        .map(|(zs, m)| zs.iter().enumerate().map(|(i, &zi)| m.get(i, zi).ln()).sum::<f64>())
        .sum();
    let ln_b1 = hyper.ln_dirichlet_marginal(&counts.pooled);
    let ln_b0: f64 = counts
        .per_sample
        .iter()
        .zip(&state.e)
        .filter(|(_, &e)| !e)
        .map(|(c, _)| hyper.ln_dirichlet_marginal(c))
        .sum();
    let n_in = state.e.iter().filter(|&&e| e).count() as f64;
    let n_out = state.e.len() as f64 - n_in;
    let g = state.gamma;
    let ln_gamma_part =
        (n_in + hyper.a - 1.0) * g.ln() + (n_out + hyper.b - 1.0) * (-g).ln_1p() - hyper.ln_beta_norm();
    Ok(ln_h + ln_b1 + ln_b0 + ln_gamma_part)
}

/// Sparse row storage of one sample: compatible isoforms and their h.
#[derive(Debug, Clone)]
struct SparseSample {
    offsets: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl SparseSample {
    fn new(m: &GeneratingMatrix) -> Self {
        let mut offsets = Vec::with_capacity(m.n_reads() + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        offsets.push(0);
        for row in m.rows() {
            for (j, &v) in row.iter().enumerate() {
                if v > 0.0 {
                    cols.push(j);
                    vals.push(v);
                }
            }
            offsets.push(cols.len());
        }
        Self {
            offsets,
            cols,
            vals,
        }
    }

    fn n_reads(&self) -> usize {
        self.offsets.len() - 1
    }

    fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let r = self.offsets[i]..self.offsets[i + 1];
        (&self.cols[r.clone()], &self.vals[r])
    }
}

/// A running chain that owns its state, counts and random stream.
pub struct GibbsChain {
    data: Vec<SparseSample>,
    hyper: Hyperparameters,
    state: ChainState,
    counts: Counts,
    rng: ChaCha8Rng,
    scratch: Vec<f64>,
    complement_moves: bool,
    complement_accepted: usize,
}

impl GibbsChain {
    /// Starts from `E = 1`, `gamma = a / (a + b)` and each `Z` drawn
    /// proportional to its row of `h`.
    pub fn new(h: &[GeneratingMatrix], hyper: Hyperparameters, seed: u64) -> Result<Self> {
        let j = check_dims(h, &hyper)?;
        if let Some(d) = h.iter().position(|m| m.n_reads() == 0) {
            return Err(Error::EmptySample(d));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let data: Vec<SparseSample> = h.iter().map(SparseSample::new).collect();
        let z = data
            .iter()
            .map(|s| {
                (0..s.n_reads())
                    .map(|i| {
                        let (cols, vals) = s.row(i);
                        cols[draw_index(vals, &mut rng)]
                    })
                    .collect()
            })
            .collect();
        let state = ChainState {
            z,
            e: vec![true; h.len()],
            gamma: clamp_unit(hyper.a / (hyper.a + hyper.b)),
        };
        let counts = Counts::from_state(&state, j);
        Ok(Self {
            data,
            hyper,
            state,
            counts,
            rng,
            scratch: Vec::with_capacity(j),
            complement_moves: true,
            complement_accepted: 0,
        })
    }

    /// Turns the group/complement swap on or off (on by default). Without it a
    /// sweep is the plain scan of E, Z and gamma.
    pub fn with_complement_moves(mut self, on: bool) -> Self {
        self.complement_moves = on;
        self
    }

    /// Accepted group/complement swaps so far.
    pub fn complement_accepted(&self) -> usize {
        self.complement_accepted
    }

    pub fn state(&self) -> &ChainState {
        &self.state
    }

    pub fn hyperparameters(&self) -> &Hyperparameters {
        &self.hyper
    }

    fn update_e(&mut self, d: usize) {
        let p = logistic(e_log_odds(
            &self.hyper,
            &self.counts,
            d,
            self.state.e[d],
            self.state.gamma,
        ));
        let new = self.rng.random::<f64>() < p;
        if new != self.state.e[d] {
            let own = &self.counts.per_sample[d];
            let sign = if new { 1.0 } else { -1.0 };
            self.counts
                .pooled
                .iter_mut()
                .zip(own)
                .for_each(|(p, v)| *p += sign * v);
            self.state.e[d] = new;
        }
    }

    fn update_z(&mut self, d: usize, i: usize) {
        let (cols, vals) = self.data[d].row(i);
        let current = self.state.z[d][i];
        if cols.len() == 1 {
            return;
        }
        let informative = self.state.e[d];
        let counts = if informative {
            &self.counts.pooled
        } else {
            &self.counts.per_sample[d]
        };
        self.scratch.clear();
        for (&j, &hij) in cols.iter().zip(vals) {
            let own = if j == current { 1.0 } else { 0.0 };
            self.scratch.push(hij * (self.hyper.lambda[j] + counts[j] - own));
        }
        let next = cols[draw_index(&self.scratch, &mut self.rng)];
        if next != current {
            self.state.z[d][i] = next;
            let per = &mut self.counts.per_sample[d];
            per[current] -= 1.0;
            per[next] += 1.0;
            if informative {
                self.counts.pooled[current] -= 1.0;
                self.counts.pooled[next] += 1.0;
            }
        }
    }

    /// One full scan: every `E_d` in sample order, every `Z` in read order,
    /// then gamma.
    pub fn sweep(&mut self) {
        for d in 0..self.data.len() {
            self.update_e(d);
        }
        for d in 0..self.data.len() {
            for i in 0..self.data[d].n_reads() {
                self.update_z(d, i);
            }
        }
        let n_in = self.state.e.iter().filter(|&&e| e).count();
        self.state.gamma = draw_gamma(n_in, self.state.e.len(), &self.hyper, &mut self.rng);
        if self.complement_moves {
            self.propose_complement();
        }
        debug_assert!(self.assignments_supported());
    }

    /// Log joint up to terms that do not depend on `(E, gamma)`.
    fn ln_group_target(&self, e: &[bool], pooled: &[f64], gamma: f64) -> f64 {
        let n_in = e.iter().filter(|&&x| x).count() as f64;
        let n_out = e.len() as f64 - n_in;
        let outside: f64 = self
            .counts
            .per_sample
            .iter()
            .zip(e)
            .filter(|(_, &x)| !x)
            .map(|(c, _)| self.hyper.ln_dirichlet_marginal(c))
            .sum();
        self.hyper.ln_dirichlet_marginal(pooled)
            + outside
            + (n_in + self.hyper.a - 1.0) * gamma.ln()
            + (n_out + self.hyper.b - 1.0) * (-gamma).ln_1p()
    }

    /// `(E, gamma) -> (1 - E, 1 - gamma)` with `Z` fixed. The map is an
    /// involution, so the acceptance ratio is the ratio of joints. Lets the
    /// chain leave states where a tight cluster of outliers holds the group.
    fn propose_complement(&mut self) {
        let flipped: Vec<bool> = self.state.e.iter().map(|&x| !x).collect();
        let mut pooled_flipped = vec![0.0; self.counts.pooled.len()];
        for (c, _) in self.counts.per_sample.iter().zip(&flipped).filter(|(_, &x)| x) {
            pooled_flipped.iter_mut().zip(c).for_each(|(p, v)| *p += v);
        }
        let gamma_flipped = clamp_unit(1.0 - self.state.gamma);
        let ln_ratio = self.ln_group_target(&flipped, &pooled_flipped, gamma_flipped)
            - self.ln_group_target(&self.state.e, &self.counts.pooled, self.state.gamma);
        let u: f64 = self.rng.random();
        if u.ln() < ln_ratio {
            self.state.e = flipped;
            self.state.gamma = gamma_flipped;
            self.counts.pooled = pooled_flipped;
            self.complement_accepted += 1;
        }
    }

    fn assignments_supported(&self) -> bool {
        self.state.z.iter().zip(&self.data).all(|(zs, s)| {
            zs.iter()
                .enumerate()
                .all(|(i, zi)| s.row(i).0.contains(zi))
        })
    }

    /// Posterior mean of `alpha` given the current `Z` and `E`.
    pub fn current_alpha(&self) -> Vec<f64> {
        let denom = self.hyper.lambda_sum() + self.counts.pooled.iter().sum::<f64>();
        self.hyper
            .lambda
            .iter()
            .zip(&self.counts.pooled)
            .map(|(l, n)| (l + n) / denom)
            .collect()
    }
}

/// Runs `burn_in + iterations` sweeps and averages the per-iteration
/// conditional means of `alpha` and the indicators `E` over the retained part.
pub fn run_chain(
    h: &[GeneratingMatrix],
    hyper: &Hyperparameters,
    config: &ChainConfig,
) -> Result<PosteriorSummary> {
    if config.iterations == 0 {
        return Err(Error::InvalidInput("at least one retained iteration needed".into()));
    }
    let mut chain =
        GibbsChain::new(h, hyper.clone(), config.seed)?.with_complement_moves(config.complement_moves);
    let n_iso = hyper.lambda.len();
    for _ in 0..config.burn_in {
        chain.sweep();
    }
    let mut alpha_sum = vec![0.0; n_iso];
    let mut e_sum = vec![0usize; h.len()];
    let mut trace = config.keep_trace.then(|| Vec::with_capacity(config.iterations));
    for _ in 0..config.iterations {
        chain.sweep();
        let alpha = chain.current_alpha();
        alpha_sum.iter_mut().zip(&alpha).for_each(|(s, a)| *s += a);
        for (s, &e) in e_sum.iter_mut().zip(&chain.state.e) {
            *s += e as usize;
        }
        if let Some(t) = trace.as_mut() {
            t.push(alpha);
        }
    }
    let t = config.iterations as f64;
    let mut alpha_hat: Vec<f64> = alpha_sum.iter().map(|s| s / t).collect();
    let total: f64 = alpha_hat.iter().sum();
    alpha_hat.iter_mut().for_each(|a| *a /= total);
    Ok(PosteriorSummary {
        alpha_hat,
        theta_hat: e_sum.iter().map(|&s| s as f64 / t).collect(),
        iterations: config.iterations,
        burn_in: config.burn_in,
        seed: config.seed,
        per_iteration_alpha: trace,
    })
}

/// Posterior means computed by exhaustive enumeration.
#[derive(Debug, Clone, PartialEq)]
pub struct ExactPosterior {
    pub alpha: Vec<f64>,
    pub theta: Vec<f64>,
}

/// Default cap on `prod_d J^n_d · 2^D` for [`exact_posterior`].
pub const EXACT_GUARD: u64 = 1_000_000;

/// Count vector of one sample and the log-sum of `prod h` over all origin
/// assignments producing it.
fn sample_count_classes(m: &GeneratingMatrix) -> Vec<(Vec<f64>, f64)> {
    let j = m.n_isoforms();
    let mut classes: Vec<(Vec<f64>, Vec<f64>)> = Vec::new();
    let mut z = vec![0usize; m.n_reads()];
    loop {
        let mut ln_h = 0.0;
        let mut ok = true;
        let mut counts = vec![0.0; j];
        for (i, &zi) in z.iter().enumerate() {
            let v = m.get(i, zi);
            if v <= 0.0 {
                ok = false;
                break;
            }
            ln_h += v.ln();
            counts[zi] += 1.0;
        }
        if ok {
            match classes.iter_mut().find(|(c, _)| *c == counts) {
                Some((_, terms)) => terms.push(ln_h),
                None => classes.push((counts, vec![ln_h])),
            }
        }
        // odometer increment
        let mut k = 0;
        while k < z.len() {
            z[k] += 1;
            if z[k] < j {
                break;
            }
            z[k] = 0;
            k += 1;
        }
        if k == z.len() {
            break;
        }
    }
    classes
        .into_iter()
        .map(|(c, terms)| (c, log_sum_exp(&terms)))
        .collect()
}

/// `E(alpha | R)` and `P(E_d = 1 | R)` by summing the collapsed joint over
/// every `(Z, E)` with gamma integrated out analytically.
pub fn exact_posterior(h: &[GeneratingMatrix], hyper: &Hyperparameters) -> Result<ExactPosterior> {
    exact_posterior_with_guard(h, hyper, EXACT_GUARD)
}

pub fn exact_posterior_with_guard(
    h: &[GeneratingMatrix],
    hyper: &Hyperparameters,
    guard: u64,
) -> Result<ExactPosterior> {
    let n_iso = check_dims(h, hyper)?;
    let n_samples = h.len();
    let needed = h
        .iter()
        .map(|m| (n_iso as f64).powi(m.n_reads() as i32))
        .product::<f64>()
        * 2f64.powi(n_samples as i32);
    if needed > guard as f64 {
        return Err(Error::EnumerationTooLarge { needed, guard });
    }
    let classes: Vec<Vec<(Vec<f64>, f64)>> = h.iter().map(sample_count_classes).collect();
    if classes.iter().any(|c| c.is_empty()) {
        return Err(Error::NoUsableReads);
    }

    let lambda_sum = hyper.lambda_sum();
    let mut ln_weights = Vec::new();
    let mut alpha_terms: Vec<Vec<f64>> = Vec::new();
    let mut e_terms: Vec<Vec<bool>> = Vec::new();
    let mut pick = vec![0usize; n_samples];
    loop {
        for mask in 0u64..(1u64 << n_samples) {
            let e: Vec<bool> = (0..n_samples).map(|d| mask >> d & 1 == 1).collect();
            let mut pooled = vec![0.0; n_iso];
            let mut ln_w = 0.0;
            for d in 0..n_samples {
                let (counts, ln_h) = &classes[d][pick[d]];
                ln_w += ln_h;
                if e[d] {
                    pooled.iter_mut().zip(counts).for_each(|(p, c)| *p += c);
                } else {
                    ln_w += hyper.ln_dirichlet_marginal(counts);
                }
            }
            ln_w += hyper.ln_dirichlet_marginal(&pooled);
            let n_in = e.iter().filter(|&&x| x).count() as f64;
            ln_w += ln_beta(n_in + hyper.a, n_samples as f64 - n_in + hyper.b) - hyper.ln_beta_norm();
            let denom = lambda_sum + pooled.iter().sum::<f64>();
            alpha_terms.push(
                hyper
                    .lambda
                    .iter()
                    .zip(&pooled)
                    .map(|(l, n)| (l + n) / denom)
                    .collect(),
            );
            ln_weights.push(ln_w);
            e_terms.push(e);
        }
        let mut k = 0;
        while k < n_samples {
            pick[k] += 1;
            if pick[k] < classes[k].len() {
                break;
            }
            pick[k] = 0;
            k += 1;
        }
        if k == n_samples {
            break;
        }
    }

    let norm = log_sum_exp(&ln_weights);
    let mut alpha = vec![0.0; n_iso];
    let mut theta = vec![0.0; n_samples];
    for ((ln_w, a), e) in ln_weights.iter().zip(&alpha_terms).zip(&e_terms) {
        let w = (ln_w - norm).exp();
        alpha.iter_mut().zip(a).for_each(|(s, v)| *s += w * v);
        theta
            .iter_mut()
            .zip(e)
            .for_each(|(s, &x)| *s += if x { w } else { 0.0 });
    }
    Ok(ExactPosterior { alpha, theta })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn mat(rows: &[&[f64]]) -> GeneratingMatrix {
        let rows: Vec<Vec<f64>> = rows.iter().map(|r| r.to_vec()).collect();
        GeneratingMatrix::from_rows(rows[0].len(), &rows).unwrap()
    }

    #[test]
    fn single_isoform_joint_reduces_to_h_and_gamma_terms() {
        let h = vec![mat(&[&[0.5], &[0.25]]), mat(&[&[0.125]])];
        let hyper = Hyperparameters::symmetric(1, 1.7, 2.0, 3.0);
        let state = ChainState {
            z: vec![vec![0, 0], vec![0]],
            e: vec![true, false],
            gamma: 0.3,
        };
        let want = (0.5f64 * 0.25 * 0.125).ln()
            + (1.0 + 2.0 - 1.0) * 0.3f64.ln()
            + (1.0 + 3.0 - 1.0) * 0.7f64.ln();
        let omitted = hyper.clone().with_normalization(PriorNormalization::Omitted);
        assert_relative_eq!(
            log_collapsed_joint(&state, &h, &omitted).unwrap(),
            want,
            max_relative = 1e-13
        );
        assert_relative_eq!(
            log_collapsed_joint(&state, &h, &hyper).unwrap(),
            want - ln_beta(2.0, 3.0),
            max_relative = 1e-13
        );
    }

    #[test]
    fn joint_is_invariant_to_read_order() {
        let h1 = vec![mat(&[&[0.5, 0.1], &[0.2, 0.3], &[0.0, 0.7]])];
        let h2 = vec![mat(&[&[0.0, 0.7], &[0.5, 0.1], &[0.2, 0.3]])];
        let hyper = Hyperparameters::symmetric(2, 0.8, 1.0, 1.0);
        let s1 = ChainState {
            z: vec![vec![0, 1, 1]],
            e: vec![false],
            gamma: 0.4,
        };
        let s2 = ChainState {
            z: vec![vec![1, 0, 1]],
            e: vec![false],
            gamma: 0.4,
        };
        assert_relative_eq!(
            log_collapsed_joint(&s1, &h1, &hyper).unwrap(),
            log_collapsed_joint(&s2, &h2, &hyper).unwrap(),
            max_relative = 1e-14
        );
    }

    #[test]
    fn joint_rejects_zero_probability_assignment() {
        let h = vec![mat(&[&[0.5, 0.0]])];
        let state = ChainState {
            z: vec![vec![1]],
            e: vec![true],
            gamma: 0.5,
        };
        assert!(matches!(
            log_collapsed_joint(&state, &h, &Hyperparameters::uniform(2)),
            Err(Error::InvalidAssignment { .. })
        ));
    }

    #[test]
    fn empty_sample_success_probability_is_gamma() {
        let h = vec![mat(&[&[0.5, 0.2]]), GeneratingMatrix::empty(2)];
        let state = ChainState {
            z: vec![vec![0], vec![]],
            e: vec![true, false],
            gamma: 0.37,
        };
        let hyper = Hyperparameters::symmetric(2, 0.6, 1.0, 1.0);
        let p = e_success_probability(&state, 1, &h, &hyper).unwrap();
        assert_relative_eq!(p, 0.37, max_relative = 1e-12);

        // Without the prior normalizer an empty sample still pays 1 / B(lambda).
        let hyper = hyper.with_normalization(PriorNormalization::Omitted);
        let p = e_success_probability(&state, 1, &h, &hyper).unwrap();
        let odds = 0.37 / 0.63 / crate::special::ln_beta(0.6, 0.6).exp();
        assert_relative_eq!(p, odds / (1.0 + odds), max_relative = 1e-12);
    }

    #[test]
    fn identical_samples_get_identical_probabilities() {
        let rows: &[&[f64]] = &[&[0.5, 0.2], &[0.1, 0.9]];
        let h = vec![mat(rows), mat(rows), mat(&[&[1.0, 0.0]])];
        let state = ChainState {
            z: vec![vec![0, 1], vec![0, 1], vec![0]],
            e: vec![true, true, false],
            gamma: 0.6,
        };
        let hyper = Hyperparameters::uniform(2);
        let p0 = e_success_probability(&state, 0, &h, &hyper).unwrap();
        let p1 = e_success_probability(&state, 1, &h, &hyper).unwrap();
        assert_eq!(p0, p1);
    }

    #[test]
    fn z_conditional_support_and_symmetry() {
        let h = vec![mat(&[&[0.0, 0.4, 0.0], &[0.3, 0.3, 0.0]])];
        let state = ChainState {
            z: vec![vec![1, 0]],
            e: vec![true],
            gamma: 0.5,
        };
        let hyper = Hyperparameters::uniform(3);
        assert_eq!(z_conditional(&state, 0, 0, &h, &hyper).unwrap(), vec![0.0, 1.0, 0.0]);
        // Without read 1 itself only isoform 1 holds a read: weights 0.3 * 1, 0.3 * 2.
        let q = z_conditional(&state, 0, 1, &h, &hyper).unwrap();
        assert_relative_eq!(q[0], 1.0 / 3.0, max_relative = 1e-15);
        assert_relative_eq!(q[1], 2.0 / 3.0, max_relative = 1e-15);
        assert_eq!(q[2], 0.0);
    }

    #[test]
    fn gamma_update_uses_beta_posterior() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let hyper = Hyperparameters::uniform(2);
        let mut state = ChainState {
            z: vec![vec![], vec![], vec![]],
            e: vec![true, true, false],
            gamma: 0.5,
        };
        let n = 100_000;
        let mean = (0..n)
            .map(|_| sample_gamma(&mut state, &hyper, &mut rng).unwrap())
            .sum::<f64>()
            / n as f64;
        assert!((mean - 0.6).abs() < 0.01, "mean {mean}");

        // D = 0 leaves the prior Beta(a, b) = Beta(2, 6): mean 0.25
        let hyper = Hyperparameters::symmetric(2, 1.0, 2.0, 6.0);
        let mut empty = ChainState {
            z: vec![],
            e: vec![],
            gamma: 0.5,
        };
        let mean = (0..n)
            .map(|_| sample_gamma(&mut empty, &hyper, &mut rng).unwrap())
            .sum::<f64>()
            / n as f64;
        assert!((mean - 0.25).abs() < 0.01, "mean {mean}");
    }

    #[test]
    fn single_isoform_chain_is_exact() {
        let h = vec![mat(&[&[0.5], &[0.25]]), mat(&[&[0.1]])];
        let summary = run_chain(
            &h,
            &Hyperparameters::uniform(1),
            &ChainConfig {
                iterations: 10,
                burn_in: 2,
                seed: 1,
                keep_trace: true,
                ..ChainConfig::default()
            },
        )
        .unwrap();
        assert_eq!(summary.alpha_hat, vec![1.0]);
        assert_eq!(summary.per_iteration_alpha.unwrap().len(), 10);
    }

    #[test]
    fn chain_rejects_bad_inputs() {
        let h = vec![mat(&[&[0.5, 0.5]]), GeneratingMatrix::empty(2)];
        let cfg = ChainConfig::default();
        assert!(matches!(
            run_chain(&h, &Hyperparameters::uniform(2), &cfg),
            Err(Error::EmptySample(1))
        ));
        let h = vec![mat(&[&[0.5, 0.5]])];
        assert!(run_chain(&h, &Hyperparameters::uniform(3), &cfg).is_err());
        let zero = ChainConfig {
            iterations: 0,
            ..cfg
        };
        assert!(run_chain(&h, &Hyperparameters::uniform(2), &zero).is_err());
    }

    #[test]
    fn chain_is_deterministic() {
        let h = vec![
            mat(&[&[0.5, 0.5], &[0.1, 0.9], &[0.8, 0.0]]),
            mat(&[&[0.3, 0.6], &[0.9, 0.1]]),
        ];
        let cfg = ChainConfig {
            iterations: 300,
            burn_in: 50,
            seed: 42,
            keep_trace: true,
            ..ChainConfig::default()
        };
        let hyper = Hyperparameters::uniform(2);
        let a = run_chain(&h, &hyper, &cfg).unwrap();
        let b = run_chain(&h, &hyper, &cfg).unwrap();
        assert_eq!(a, b);
        for alpha in a.per_iteration_alpha.as_ref().unwrap() {
            assert!((alpha.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            assert!(alpha.iter().all(|&x| x > 0.0));
        }
        assert!(a.theta_hat.iter().all(|t| (0.0..=1.0).contains(t)));
    }

    #[test]
    fn complement_moves_keep_the_posterior() {
        let h = vec![
            mat(&[&[0.9, 0.1], &[0.8, 0.2]]),
            mat(&[&[0.1, 0.9]]),
            mat(&[&[0.2, 0.7], &[0.6, 0.3]]),
        ];
        let hyper = Hyperparameters::symmetric(2, 1.0, 1.0, 1.0);
        let ex = exact_posterior(&h, &hyper).unwrap();
        let cfg = ChainConfig {
            iterations: 200_000,
            burn_in: 1000,
            seed: 9,
            ..ChainConfig::default()
        };
        let got = run_chain(&h, &hyper, &cfg).unwrap();
        for (g, e) in got.theta_hat.iter().zip(&ex.theta) {
            assert!((g - e).abs() < 0.01, "theta {g} vs {e}");
        }
        for (g, e) in got.alpha_hat.iter().zip(&ex.alpha) {
            assert!((g - e).abs() < 0.01, "alpha {g} vs {e}");
        }

        let mut on = GibbsChain::new(&h, hyper.clone(), 3).unwrap();
        let mut off = GibbsChain::new(&h, hyper, 3).unwrap().with_complement_moves(false);
        for _ in 0..500 {
            on.sweep();
            off.sweep();
        }
        assert!(on.complement_accepted() > 0);
        assert_eq!(off.complement_accepted(), 0);
    }

    #[test]
    fn exact_posterior_reductions() {
        // J = 1: alpha is 1 and theta_d is the prior a / (a + b).
        let h = vec![mat(&[&[0.5], &[0.2]]), mat(&[&[0.3]])];
        let hyper = Hyperparameters::symmetric(1, 1.0, 2.0, 3.0);
        let ex = exact_posterior(&h, &hyper).unwrap();
        assert_relative_eq!(ex.alpha[0], 1.0, max_relative = 1e-14);
        for t in ex.theta {
            assert_relative_eq!(t, 0.4, max_relative = 1e-12);
        }

        // identical h columns and symmetric lambda
        let h = vec![mat(&[&[0.3, 0.3], &[0.7, 0.7]]), mat(&[&[0.2, 0.2]])];
        let ex = exact_posterior(&h, &Hyperparameters::uniform(2)).unwrap();
        assert_relative_eq!(ex.alpha[0], 0.5, max_relative = 1e-12);
        assert_relative_eq!(ex.alpha[1], 0.5, max_relative = 1e-12);
    }

    #[test]
    fn exact_posterior_guard() {
        let row: &[f64] = &[0.1, 0.2, 0.3];
        let h = vec![mat(&[row; 13])];
        assert!(matches!(
            exact_posterior(&h, &Hyperparameters::uniform(3)),
            Err(Error::EnumerationTooLarge { .. })
        ));
    }
}
