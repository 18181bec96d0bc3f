//! Synthetic bandit environment and offline data generation.
//!
//! Contexts are drawn uniformly from the positive orthant of the unit
//! sphere (uniform cube draw, then normalized). Each arm has a fixed weight
//! vector with entries in `[0, 1/d]`, rewards are linear with additive
//! Gaussian noise, and offline data is logged by a softmax behavior policy
//! whose logit vectors are fixed at environment construction.
//!
//! Randomness is explicit: every operation takes a caller-owned generator,
//! and [`stream_rng`] derives named ChaCha streams from a seed so that each
//! purpose (weights, policy, offline data, contexts, noise, policy queries)
//! reads an independent, reproducible sequence. Changing how many draws one
//! purpose consumes never shifts another purpose's stream.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, RngExt, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;
use thiserror::Error;

/// Stream identifiers for [`stream_rng`]. The low byte is the purpose; the
/// byte above it carries a qualifier (currently only the behavior-policy
/// retry attempt).
pub mod streams {
    /// Arm weight matrix entries.
    pub const WEIGHTS: u64 = 0;
    /// Behavior policy logits; attempt `k` uses `POLICY | ((k as u64) << 8)`.
    pub const POLICY: u64 = 1;
    /// Offline dataset rows (contexts, logged actions, rewards).
    pub const OFFLINE: u64 = 2;
    /// Monte Carlo draws for conditional moment estimation.
    pub const MOMENTS: u64 = 3;
    /// Online round contexts.
    pub const CONTEXT: u64 = 4;
    /// Online reward noise.
    pub const NOISE: u64 = 5;
    /// Online queries to the behavior policy.
    pub const POLICY_QUERY: u64 = 6;
}

/// ChaCha generator pinned to `(seed, stream)`. Streams with the same seed
/// are mutually independent.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha12Rng {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// The per-repetition generators consumed by an online bandit run.
#[derive(Debug, Clone)]
pub struct SimStreams {
    pub seed: u64,
    pub context: ChaCha12Rng,
    pub noise: ChaCha12Rng,
    pub policy_query: ChaCha12Rng,
}

impl SimStreams {
    pub fn for_seed(seed: u64) -> Self {
        Self {
            seed,
            context: stream_rng(seed, streams::CONTEXT),
            noise: stream_rng(seed, streams::NOISE),
            policy_query: stream_rng(seed, streams::POLICY_QUERY),
        }
    }
}

#[derive(Debug, Error)]
pub enum EnvError {
    #[error("environment needs dim >= 1 and arms >= 1, got dim={dim}, arms={arms}")]
    EmptyEnvironment { dim: usize, arms: usize },
    #[error("noise standard deviation must be finite and nonnegative, got {got}")]
    BadNoise { got: f64 },
    #[error("visible dimension must satisfy 1 <= L <= d, got L={l}, d={d}")]
    BadVisibleDim { l: usize, d: usize },
    #[error("dataset needs at least one row, got {got}")]
    EmptyDataset { got: usize },
    #[error("arm {arm} was never sampled by the behavior policy")]
    ArmNeverSampled { arm: usize },
    #[error("arm {arm} received only {count} Monte Carlo samples, need at least {need}")]
    UndersampledArm {
        arm: usize,
        count: usize,
        need: usize,
    },
    #[error("moment estimation needs at least {need} samples, got {got}")]
    TooFewMomentSamples { need: u64, got: u64 },
    #[error("matrix shape mismatch: {what}")]
    ShapeMismatch { what: String },
    #[error("row {row}: {what}")]
    BadRow { row: usize, what: String },
    #[error("dataset file is invalid: {what}")]
    BadFile { what: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Fixed linear bandit environment: arm weights, noise level and a softmax
/// behavior policy for logging offline data.
#[derive(Debug, Clone)]
pub struct BanditEnvironment {
    dim: usize,
    n_arms: usize,
    /// Row `a` is the weight vector of arm `a`.
    weights: DMatrix<f64>,
    noise_sd: f64,
    /// Row `a` is the softmax logit vector of arm `a`.
    policy_logits: DMatrix<f64>,
    seed: u64,
    policy_attempt: u32,
}

impl BanditEnvironment {
    /// Draws a fresh environment: weight rows uniform in `[0, 1]^d` from the
    /// `WEIGHTS` stream and then normalized to the unit sphere, policy
    /// logits uniform in `[-1, 1]` from the `POLICY` stream. Entries are
    /// filled arm by arm, coordinate by coordinate; that order is part of
    /// the reproducibility contract.
    pub fn generate(dim: usize, n_arms: usize, noise_sd: f64, seed: u64) -> Result<Self, EnvError> {
        Self::generate_with_policy_attempt(dim, n_arms, noise_sd, seed, 0)
    }

    /// Like [`generate`](Self::generate) but with an explicit retry counter
    /// for the policy stream. Weights are identical across attempts; only
    /// the logits move. Callers bump `attempt` when the drawn policy leaves
    /// some arm without offline coverage.
    pub fn generate_with_policy_attempt(
        dim: usize,
        n_arms: usize,
        noise_sd: f64,
        seed: u64,
        attempt: u32,
    ) -> Result<Self, EnvError> {
        if dim == 0 || n_arms == 0 {
            return Err(EnvError::EmptyEnvironment { dim, arms: n_arms });
        }
        if !noise_sd.is_finite() || noise_sd < 0.0 {
            return Err(EnvError::BadNoise { got: noise_sd });
        }
        let mut wrng = stream_rng(seed, streams::WEIGHTS);
        let mut weights = DMatrix::<f64>::zeros(n_arms, dim);
        for a in 0..n_arms {
            for i in 0..dim {
                weights[(a, i)] = wrng.random_range(0.0..1.0);
            }
            // Nonnegative entries in [0,1]^d cannot all vanish, so the norm
            // is positive and rows land exactly on the unit sphere.
            let norm = weights.row(a).norm();
            for i in 0..dim {
                weights[(a, i)] /= norm;
            }
        }
        let mut prng = stream_rng(seed, streams::POLICY | ((attempt as u64) << 8));
        let mut policy_logits = DMatrix::<f64>::zeros(n_arms, dim);
        for a in 0..n_arms {
            for i in 0..dim {
                policy_logits[(a, i)] = prng.random_range(-1.0..1.0);
            }
        }
        Ok(Self {
            dim,
            n_arms,
            weights,
            noise_sd,
            policy_logits,
            seed,
            policy_attempt: attempt,
        })
    }

    /// Builds an environment from explicit weights and logits (rows = arms).
    /// Used by tests and callers that need a handcrafted instance.
    pub fn from_parts(
        weights: DMatrix<f64>,
        policy_logits: DMatrix<f64>,
        noise_sd: f64,
        seed: u64,
    ) -> Result<Self, EnvError> {
        let (n_arms, dim) = weights.shape();
        if dim == 0 || n_arms == 0 {
            return Err(EnvError::EmptyEnvironment { dim, arms: n_arms });
        }
        if policy_logits.shape() != (n_arms, dim) {
            return Err(EnvError::ShapeMismatch {
                what: format!(
                    "policy logits must be {n_arms}x{dim}, got {}x{}",
                    policy_logits.nrows(),
                    policy_logits.ncols()
                ),
            });
        }
        if !noise_sd.is_finite() || noise_sd < 0.0 {
            return Err(EnvError::BadNoise { got: noise_sd });
        }
        Ok(Self {
            dim,
            n_arms,
            weights,
            noise_sd,
            policy_logits,
            seed,
            policy_attempt: 0,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_arms(&self) -> usize {
        self.n_arms
    }

    pub fn noise_sd(&self) -> f64 {
        self.noise_sd
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn policy_attempt(&self) -> u32 {
        self.policy_attempt
    }

    pub fn weights(&self) -> &DMatrix<f64> {
        &self.weights
    }

    pub fn policy_logits(&self) -> &DMatrix<f64> {
        &self.policy_logits
    }

    /// Arm weight vector as a column.
    pub fn arm_weight(&self, arm: usize) -> DVector<f64> {
        self.weights.row(arm).transpose()
    }

    /// One context: uniform on `[0,1]^d`, normalized to the unit sphere.
    /// Consumes exactly `d` uniform draws per accepted sample.
    pub fn sample_context(&self, rng: &mut impl Rng) -> DVector<f64> {
        loop {
            let x = DVector::from_fn(self.dim, |_, _| rng.random_range(0.0..1.0));
            let norm = x.norm();
            if norm > 0.0 {
                return x / norm;
            }
        }
    }

    /// Noiseless mean reward of `arm` in context `x`.
    pub fn mean_reward(&self, x: &DVector<f64>, arm: usize) -> f64 {
        (self.weights.row(arm) * x)[0]
    }

    /// Observed reward: mean plus `noise_sd` times a standard normal draw.
    /// One normal is consumed even when `noise_sd` is zero, so reward
    /// streams advance identically across noise levels.
    pub fn reward(&self, x: &DVector<f64>, arm: usize, rng: &mut impl Rng) -> f64 {
        let z: f64 = rng.sample(StandardNormal);
        self.mean_reward(x, arm) + self.noise_sd * z
    }

    /// Softmax probabilities of the behavior policy in context `x`, computed
    /// with the max-shifted exponential for stability.
    pub fn behavior_probs(&self, x: &DVector<f64>) -> DVector<f64> {
        let logits = &self.policy_logits * x;
        let max = logits.max();
        let mut probs = logits.map(|v| (v - max).exp());
        let total = probs.sum();
        probs /= total;
        probs
    }

    /// Samples an action from the behavior policy. Consumes one uniform.
    pub fn behavior_action(&self, x: &DVector<f64>, rng: &mut impl Rng) -> usize {
        let probs = self.behavior_probs(x);
        let u: f64 = rng.random_range(0.0..1.0);
        let mut acc = 0.0;
        for (a, p) in probs.iter().enumerate() {
            acc += p;
            if u < acc {
                return a;
            }
        }
        self.n_arms - 1
    }

    /// Best arm for context `x` and its mean reward; ties go to the lowest
    /// index.
    pub fn best_action_value(&self, x: &DVector<f64>) -> (usize, f64) {
        let mut best = 0;
        let mut best_value = self.mean_reward(x, 0);
        for a in 1..self.n_arms {
            let v = self.mean_reward(x, a);
            if v > best_value {
                best = a;
                best_value = v;
            }
        }
        (best, best_value)
    }

    /// Logs `n` rounds of the behavior policy, keeping only the first
    /// `visible_dim` context coordinates. Fails if some arm is never
    /// sampled; callers then retry with a bumped policy attempt.
    ///
    /// Rows are generated sequentially from `rng`, so for a fixed stream a
    /// smaller dataset is a prefix of a larger one.
    pub fn generate_offline_dataset(
        &self,
        visible_dim: usize,
        n: usize,
        rng: &mut impl Rng,
    ) -> Result<OfflineDataset, EnvError> {
        if visible_dim == 0 || visible_dim > self.dim {
            return Err(EnvError::BadVisibleDim {
                l: visible_dim,
                d: self.dim,
            });
        }
        if n == 0 {
            return Err(EnvError::EmptyDataset { got: 0 });
        }
        let mut visible = Vec::with_capacity(n * visible_dim);
        let mut actions = Vec::with_capacity(n);
        let mut rewards = Vec::with_capacity(n);
        let mut counts = vec![0usize; self.n_arms];
        for _ in 0..n {
            let x = self.sample_context(rng);
            let a = self.behavior_action(&x, rng);
            let r = self.reward(&x, a, rng);
            visible.extend_from_slice(&x.as_slice()[..visible_dim]);
            actions.push(a as u32);
            rewards.push(r);
            counts[a] += 1;
        }
        if let Some(arm) = counts.iter().position(|&c| c == 0) {
            return Err(EnvError::ArmNeverSampled { arm });
        }
        let arm_freq = counts.iter().map(|&c| c as f64 / n as f64).collect();
        Ok(OfflineDataset {
            visible_dim,
            dim: self.dim,
            n_arms: self.n_arms,
            visible,
            actions,
            rewards,
            arm_freq,
        })
    }

    /// Monte Carlo estimate of the full conditional second moments
    /// `E[x xᵀ | a]` under the behavior policy, plus arm marginals. Needs at
    /// least [`MIN_MOMENT_SAMPLES`] draws and at least
    /// [`MIN_ARM_MOMENT_COUNT`] hits per arm.
    pub fn full_conditional_moments(
        &self,
        n_mc: u64,
        rng: &mut impl Rng,
    ) -> Result<ConditionalMoments, EnvError> {
        if n_mc < MIN_MOMENT_SAMPLES {
            return Err(EnvError::TooFewMomentSamples {
                need: MIN_MOMENT_SAMPLES,
                got: n_mc,
            });
        }
        let mut sums = vec![DMatrix::<f64>::zeros(self.dim, self.dim); self.n_arms];
        let mut counts = vec![0usize; self.n_arms];
        for _ in 0..n_mc {
            let x = self.sample_context(rng);
            let a = self.behavior_action(&x, rng);
            sums[a].ger(1.0, &x, &x, 1.0);
            counts[a] += 1;
        }
        for (arm, &count) in counts.iter().enumerate() {
            if count < MIN_ARM_MOMENT_COUNT {
                return Err(EnvError::UndersampledArm {
                    arm,
                    count,
                    need: MIN_ARM_MOMENT_COUNT,
                });
            }
        }
        let second_moment = sums
            .into_iter()
            .zip(&counts)
            .map(|(s, &c)| s / c as f64)
            .collect();
        Ok(ConditionalMoments {
            n_samples: n_mc,
            counts,
            second_moment,
        })
    }

    /// Visible/cross moment blocks for a given split, straight from a fresh
    /// Monte Carlo run. Equivalent to slicing
    /// [`full_conditional_moments`](Self::full_conditional_moments).
    pub fn oracle_moments(
        &self,
        visible_dim: usize,
        n_mc: u64,
        rng: &mut impl Rng,
    ) -> Result<Vec<ArmMoments>, EnvError> {
        if visible_dim == 0 || visible_dim >= self.dim {
            return Err(EnvError::BadVisibleDim {
                l: visible_dim,
                d: self.dim,
            });
        }
        Ok(self.full_conditional_moments(n_mc, rng)?.slice(visible_dim))
    }
}

/// Minimum Monte Carlo sample count for moment estimation.
pub const MIN_MOMENT_SAMPLES: u64 = 10_000;
/// Minimum per-arm hit count before a conditional moment is trusted.
pub const MIN_ARM_MOMENT_COUNT: usize = 30;

/// Monte Carlo conditional second moments, one `d x d` matrix per arm.
#[derive(Debug, Clone)]
pub struct ConditionalMoments {
    n_samples: u64,
    counts: Vec<usize>,
    second_moment: Vec<DMatrix<f64>>,
}

impl ConditionalMoments {
    pub fn n_samples(&self) -> u64 {
        self.n_samples
    }

    pub fn n_arms(&self) -> usize {
        self.counts.len()
    }

    /// Estimated behavior marginal of each arm.
    pub fn arm_probs(&self) -> Vec<f64> {
        self.counts
            .iter()
            .map(|&c| c as f64 / self.n_samples as f64)
            .collect()
    }

    pub fn second_moment(&self, arm: usize) -> &DMatrix<f64> {
        &self.second_moment[arm]
    }

    /// Splits each full moment into the visible block, the visible-hidden
    /// cross block and the trace of the hidden block.
    pub fn slice(&self, visible_dim: usize) -> Vec<ArmMoments> {
        self.second_moment
            .iter()
            .map(|m| {
                let d = m.nrows();
                let hidden = d - visible_dim;
                let visible = m.view((0, 0), (visible_dim, visible_dim)).into_owned();
                let cross = m.view((0, visible_dim), (visible_dim, hidden)).into_owned();
                let hidden_trace = (0..hidden)
                    .map(|i| m[(visible_dim + i, visible_dim + i)])
                    .sum();
                ArmMoments {
                    visible,
                    cross,
                    hidden_trace,
                }
            })
            .collect()
    }
}

/// Conditional moment blocks of one arm for a visible/hidden split.
#[derive(Debug, Clone)]
pub struct ArmMoments {
    /// `E[x_vis x_visᵀ | a]`, `L x L`.
    pub visible: DMatrix<f64>,
    /// `E[x_vis x_hidᵀ | a]`, `L x (d - L)`.
    pub cross: DMatrix<f64>,
    /// `tr E[x_hid x_hidᵀ | a]`.
    pub hidden_trace: f64,
}

/// Offline log of the behavior policy: visible context block, action and
/// reward per row, plus empirical arm frequencies.
#[derive(Debug, Clone, PartialEq)]
pub struct OfflineDataset {
    visible_dim: usize,
    dim: usize,
    n_arms: usize,
    /// Row-major `n x visible_dim`.
    visible: Vec<f64>,
    actions: Vec<u32>,
    rewards: Vec<f64>,
    arm_freq: Vec<f64>,
}

const DATASET_MAGIC: [u8; 4] = *b"SBOD";
const DATASET_VERSION: u32 = 1;

impl OfflineDataset {
    /// Assembles a dataset from explicit rows `(visible context, action,
    /// reward)`. Every arm must appear at least once.
    pub fn from_rows(
        visible_dim: usize,
        dim: usize,
        n_arms: usize,
        rows: &[(Vec<f64>, usize, f64)],
    ) -> Result<Self, EnvError> {
        if visible_dim == 0 || visible_dim > dim {
            return Err(EnvError::BadVisibleDim {
                l: visible_dim,
                d: dim,
            });
        }
        if rows.is_empty() {
            return Err(EnvError::EmptyDataset { got: 0 });
        }
        let mut visible = Vec::with_capacity(rows.len() * visible_dim);
        let mut actions = Vec::with_capacity(rows.len());
        let mut rewards = Vec::with_capacity(rows.len());
        let mut counts = vec![0usize; n_arms];
        for (i, (x, a, r)) in rows.iter().enumerate() {
            if x.len() != visible_dim {
                return Err(EnvError::BadRow {
                    row: i,
                    what: format!(
                        "visible block has length {}, expected {visible_dim}",
                        x.len()
                    ),
                });
            }
            if *a >= n_arms {
                return Err(EnvError::BadRow {
                    row: i,
                    what: format!("action {a} out of range for {n_arms} arms"),
                });
            }
            visible.extend_from_slice(x);
            actions.push(*a as u32);
            rewards.push(*r);
            counts[*a] += 1;
        }
        if let Some(arm) = counts.iter().position(|&c| c == 0) {
            return Err(EnvError::ArmNeverSampled { arm });
        }
        let n = rows.len();
        let arm_freq = counts.iter().map(|&c| c as f64 / n as f64).collect();
        Ok(Self {
            visible_dim,
            dim,
            n_arms,
            visible,
            actions,
            rewards,
            arm_freq,
        })
    }

    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }

    pub fn visible_dim(&self) -> usize {
        self.visible_dim
    }

    /// Full context dimension of the generating environment.
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_arms(&self) -> usize {
        self.n_arms
    }

    pub fn arm_freq(&self) -> &[f64] {
        &self.arm_freq
    }

    pub fn visible_row(&self, i: usize) -> &[f64] {
        &self.visible[i * self.visible_dim..(i + 1) * self.visible_dim]
    }

    pub fn action(&self, i: usize) -> usize {
        self.actions[i] as usize
    }

    pub fn reward(&self, i: usize) -> f64 {
        self.rewards[i]
    }

    /// The first `n` rows as their own dataset, with arm frequencies
    /// recomputed. Fails if the prefix loses an arm.
    pub fn truncated(&self, n: usize) -> Result<Self, EnvError> {
        if n == 0 || n > self.len() {
            return Err(EnvError::EmptyDataset { got: n });
        }
        let mut counts = vec![0usize; self.n_arms];
        for &a in &self.actions[..n] {
            counts[a as usize] += 1;
        }
        if let Some(arm) = counts.iter().position(|&c| c == 0) {
            return Err(EnvError::ArmNeverSampled { arm });
        }
        let arm_freq = counts.iter().map(|&c| c as f64 / n as f64).collect();
        Ok(Self {
            visible_dim: self.visible_dim,
            dim: self.dim,
            n_arms: self.n_arms,
            visible: self.visible[..n * self.visible_dim].to_vec(),
            actions: self.actions[..n].to_vec(),
            rewards: self.rewards[..n].to_vec(),
            arm_freq,
        })
    }

    /// Writes the dataset in the documented little-endian binary layout:
    /// magic, version, dims, arm frequencies, then per row the visible
    /// block, the action index and the reward.
    pub fn write_to(&self, path: &Path) -> Result<(), EnvError> {
        let mut w = BufWriter::new(File::create(path)?);
        w.write_all(&DATASET_MAGIC)?;
        w.write_all(&DATASET_VERSION.to_le_bytes())?;
        w.write_all(&(self.dim as u32).to_le_bytes())?;
        w.write_all(&(self.visible_dim as u32).to_le_bytes())?;
        w.write_all(&(self.n_arms as u32).to_le_bytes())?;
        w.write_all(&(self.len() as u64).to_le_bytes())?;
        for &f in &self.arm_freq {
            w.write_all(&f.to_le_bytes())?;
        }
        for i in 0..self.len() {
            for &v in self.visible_row(i) {
                w.write_all(&v.to_le_bytes())?;
            }
            w.write_all(&self.actions[i].to_le_bytes())?;
            w.write_all(&self.rewards[i].to_le_bytes())?;
        }
        w.flush()?;
        Ok(())
    }

    /// Reads a dataset written by [`write_to`](Self::write_to), validating
    /// the header and the stored arm frequencies.
    pub fn read_from(path: &Path) -> Result<Self, EnvError> {
        let mut r = BufReader::new(File::open(path)?);
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if magic != DATASET_MAGIC {
            return Err(EnvError::BadFile {
                what: "bad magic".into(),
            });
        }
        let version = read_u32(&mut r)?;
        if version != DATASET_VERSION {
            return Err(EnvError::BadFile {
                what: format!("unsupported version {version}"),
            });
        }
        let dim = read_u32(&mut r)? as usize;
        let visible_dim = read_u32(&mut r)? as usize;
        let n_arms = read_u32(&mut r)? as usize;
        let n = read_u64(&mut r)? as usize;
        if visible_dim == 0 || visible_dim > dim || n_arms == 0 || n == 0 {
            return Err(EnvError::BadFile {
                what: format!("bad header: d={dim}, L={visible_dim}, K={n_arms}, N={n}"),
            });
        }
        let mut arm_freq = vec![0.0f64; n_arms];
        for f in arm_freq.iter_mut() {
            *f = read_f64(&mut r)?;
        }
        let mut visible = vec![0.0f64; n * visible_dim];
        let mut actions = vec![0u32; n];
        let mut rewards = vec![0.0f64; n];
        let mut counts = vec![0usize; n_arms];
        for i in 0..n {
            for v in visible[i * visible_dim..(i + 1) * visible_dim].iter_mut() {
                *v = read_f64(&mut r)?;
            }
            let a = read_u32(&mut r)?;
            if a as usize >= n_arms {
                return Err(EnvError::BadFile {
                    what: format!("row {i}: action {a} out of range"),
                });
            }
            counts[a as usize] += 1;
            actions[i] = a;
            rewards[i] = read_f64(&mut r)?;
        }
        for (arm, (&c, &f)) in counts.iter().zip(&arm_freq).enumerate() {
            let expect = c as f64 / n as f64;
            if (f - expect).abs() > 1e-12 {
                return Err(EnvError::BadFile {
                    what: format!("arm {arm}: stored frequency {f} does not match rows ({expect})"),
                });
            }
        }
        Ok(Self {
            visible_dim,
            dim,
            n_arms,
            visible,
            actions,
            rewards,
            arm_freq,
        })
    }
}

fn read_u32(r: &mut impl Read) -> Result<u32, EnvError> {
    let mut buf = [0u8; 4];
    r.read_exact(&mut buf)?;
    Ok(u32::from_le_bytes(buf))
}

fn read_u64(r: &mut impl Read) -> Result<u64, EnvError> {
    let mut buf = [0u8; 8];
    r.read_exact(&mut buf)?;
    Ok(u64::from_le_bytes(buf))
}

fn read_f64(r: &mut impl Read) -> Result<f64, EnvError> {
    let mut buf = [0u8; 8];
    r.read_exact(&mut buf)?;
    Ok(f64::from_le_bytes(buf))
}
