//! Estimators that turn logged data into deconfounder side information.
//!
//! Offline: per-arm least squares over the visible context block yields the
//! coefficient vectors `b_a` and the visible second moments `R₁₁(a)`.
//! Online: an inverse-propensity-weighted cross moment `R̂₁₂(a, t)` is
//! accumulated from behavior policy queries, one rank-one update per round.
//! Combining the two gives the estimated deconfounder
//! `M̂ = [I | R₁₁(a)⁻¹ R̂₁₂(a, t)]`, whose spectral error shrinks as
//! `C₁/√t + C₂/t`; [`CrossErrorBudget`] carries those constants.
//!
//! Projected ridge regression ([`prr_estimate`]) solves the anchored ridge
//! problem in kernel coordinates: `ŵ = U (Uᵀ V U)⁻¹ Uᵀ (Y - (V - λI) M† b)`,
//! which equals the pseudoinverse form `(P V P)† (Y - (V - λI) M† b)` while
//! only ever factorizing `(d - L) x (d - L)` matrices.

use crate::bandit::ConfidenceParams;
use crate::env::OfflineDataset;
use crate::linalg::{build_deconfounder, DeconfounderMatrix, LinalgError};
use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use thiserror::Error;

/// Bound used for `‖x_vis‖` in the concentration constants. Contexts are
/// unit vectors, so both block norms are at most 1.
pub const VISIBLE_NORM_BOUND: f64 = 1.0;
/// Bound used for `‖x_hid‖` in the concentration constants.
pub const HIDDEN_NORM_BOUND: f64 = 1.0;

/// Condition number ceiling for the per-arm visible moment matrices.
pub const MAX_MOMENT_CONDITION: f64 = 1e12;

#[derive(Debug, Error)]
pub enum EstimationError {
    #[error("arm {arm} has {count} offline rows, need at least {need}")]
    TooFewSamples {
        arm: usize,
        count: usize,
        need: usize,
    },
    #[error("visible moment of arm {arm} is ill conditioned (condition {cond:.3e})")]
    IllConditioned { arm: usize, cond: f64 },
    #[error("cross moments queried before any update")]
    NoUpdatesYet,
    #[error("arm {arm} has no behavior policy samples yet")]
    NoArmSamples { arm: usize },
    #[error("arm index {arm} out of range for {n_arms} arms")]
    BadArm { arm: usize, n_arms: usize },
    #[error("arm {arm} has nonpositive propensity {value}")]
    BadPropensity { arm: usize, value: f64 },
    #[error("dimension mismatch: expected length {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("ridge parameter must be positive and finite, got {got}")]
    BadRidge { got: f64 },
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// Per-arm quantities extracted from an offline dataset: least-squares
/// coefficients over the visible block, visible second moments with their
/// factorizations, and the empirical arm frequencies.
#[derive(Debug, Clone)]
pub struct OfflineSideInfo {
    visible_dim: usize,
    /// Row `a` holds `b_a`.
    coeffs: DMatrix<f64>,
    visible_moment: Vec<DMatrix<f64>>,
    visible_chol: Vec<Cholesky<f64, Dyn>>,
    visible_min_eig: Vec<f64>,
    visible_trace: Vec<f64>,
    arm_freq: Vec<f64>,
}

impl OfflineSideInfo {
    pub fn visible_dim(&self) -> usize {
        self.visible_dim
    }

    pub fn n_arms(&self) -> usize {
        self.arm_freq.len()
    }

    /// Least-squares coefficient vector of one arm.
    pub fn coeffs(&self, arm: usize) -> DVector<f64> {
        self.coeffs.row(arm).transpose()
    }

    /// Visible second moment `R₁₁(a)`.
    pub fn visible_moment(&self, arm: usize) -> &DMatrix<f64> {
        &self.visible_moment[arm]
    }

    pub fn visible_min_eig(&self, arm: usize) -> f64 {
        self.visible_min_eig[arm]
    }

    pub fn visible_trace(&self, arm: usize) -> f64 {
        self.visible_trace[arm]
    }

    pub fn arm_freq(&self) -> &[f64] {
        &self.arm_freq
    }

    /// Solves `R₁₁(a) X = rhs` against the cached factorization.
    pub fn solve_visible(&self, arm: usize, rhs: &DMatrix<f64>) -> DMatrix<f64> {
        self.visible_chol[arm].solve(rhs)
    }
}

/// Extracts side information from the full visible block of `data`.
pub fn offline_least_squares(data: &OfflineDataset) -> Result<OfflineSideInfo, EstimationError> {
    offline_least_squares_narrowed(data, data.visible_dim())
}

/// Same as [`offline_least_squares`] but using only the first `visible_dim`
/// coordinates of each stored row, so one wide dataset serves several
/// visibility levels without copying.
pub fn offline_least_squares_narrowed(
    data: &OfflineDataset,
    visible_dim: usize,
) -> Result<OfflineSideInfo, EstimationError> {
    if visible_dim == 0 || visible_dim > data.visible_dim() {
        return Err(EstimationError::LengthMismatch {
            expected: data.visible_dim(),
            got: visible_dim,
        });
    }
    let k = data.n_arms();
    let l = visible_dim;
    let mut moment_sums = vec![DMatrix::<f64>::zeros(l, l); k];
    let mut xr_sums = vec![DVector::<f64>::zeros(l); k];
    let mut counts = vec![0usize; k];
    let mut x = DVector::<f64>::zeros(l);
    for i in 0..data.len() {
        let a = data.action(i);
        x.copy_from_slice(&data.visible_row(i)[..l]);
        moment_sums[a].ger(1.0, &x, &x, 1.0);
        xr_sums[a].axpy(data.reward(i), &x, 1.0);
        counts[a] += 1;
    }

    let mut coeffs = DMatrix::<f64>::zeros(k, l);
    let mut visible_moment = Vec::with_capacity(k);
    let mut visible_chol = Vec::with_capacity(k);
    let mut visible_min_eig = Vec::with_capacity(k);
    let mut visible_trace = Vec::with_capacity(k);
    for a in 0..k {
        // The moment must be estimated from strictly more rows than its
        // dimension before the solve is meaningful.
        if counts[a] < l + 1 {
            return Err(EstimationError::TooFewSamples {
                arm: a,
                count: counts[a],
                need: l + 1,
            });
        }
        let moment = &moment_sums[a] / counts[a] as f64;
        let eigs = moment.symmetric_eigenvalues();
        let min_eig = eigs.min();
        let max_eig = eigs.max();
        let cond = if min_eig > 0.0 {
            max_eig / min_eig
        } else {
            f64::INFINITY
        };
        if !cond.is_finite() || cond > MAX_MOMENT_CONDITION {
            return Err(EstimationError::IllConditioned { arm: a, cond });
        }
        let chol = match Cholesky::new(moment.clone()) {
            Some(c) => c,
            None => return Err(EstimationError::IllConditioned { arm: a, cond }),
        };
        let b = chol.solve(&(&xr_sums[a] / counts[a] as f64));
        coeffs.row_mut(a).copy_from(&b.transpose());
        visible_trace.push(moment.trace());
        visible_moment.push(moment);
        visible_chol.push(chol);
        visible_min_eig.push(min_eig);
    }
    let n = data.len() as f64;
    let arm_freq = counts.iter().map(|&c| c as f64 / n).collect();
    Ok(OfflineSideInfo {
        visible_dim: l,
        coeffs,
        visible_moment,
        visible_chol,
        visible_min_eig,
        visible_trace,
        arm_freq,
    })
}

/// Running inverse-propensity-weighted cross moments between the visible
/// and hidden context blocks, one sum per arm.
#[derive(Debug, Clone)]
pub struct OnlineCrossCorr {
    visible_dim: usize,
    dim: usize,
    rounds: usize,
    masked_sums: Vec<DMatrix<f64>>,
    counts: Vec<usize>,
    arm_freq: Vec<f64>,
}

impl OnlineCrossCorr {
    /// `arm_freq` are the behavior marginals used as propensities (usually
    /// the offline frequencies).
    pub fn new(visible_dim: usize, dim: usize, arm_freq: &[f64]) -> Result<Self, EstimationError> {
        if visible_dim == 0 || visible_dim >= dim {
            return Err(EstimationError::LengthMismatch {
                expected: dim,
                got: visible_dim,
            });
        }
        for (arm, &p) in arm_freq.iter().enumerate() {
            if !p.is_finite() || p <= 0.0 {
                return Err(EstimationError::BadPropensity { arm, value: p });
            }
        }
        Ok(Self {
            visible_dim,
            dim,
            rounds: 0,
            masked_sums: vec![
                DMatrix::<f64>::zeros(visible_dim, dim - visible_dim);
                arm_freq.len()
            ],
            counts: vec![0; arm_freq.len()],
            arm_freq: arm_freq.to_vec(),
        })
    }

    pub fn rounds(&self) -> usize {
        self.rounds
    }

    pub fn count(&self, arm: usize) -> usize {
        self.counts[arm]
    }

    /// Absorbs one behavior policy draw: the sampled arm contributes the
    /// outer product of the visible and hidden blocks of `x`.
    pub fn update(&mut self, x: &DVector<f64>, action: usize) -> Result<(), EstimationError> {
        if x.len() != self.dim {
            return Err(EstimationError::LengthMismatch {
                expected: self.dim,
                got: x.len(),
            });
        }
        if action >= self.counts.len() {
            return Err(EstimationError::BadArm {
                arm: action,
                n_arms: self.counts.len(),
            });
        }
        let visible = x.rows(0, self.visible_dim).into_owned();
        let hidden = x
            .rows(self.visible_dim, self.dim - self.visible_dim)
            .into_owned();
        self.masked_sums[action].ger(1.0, &visible, &hidden, 1.0);
        self.counts[action] += 1;
        self.rounds += 1;
        Ok(())
    }

    /// Current estimate `R̂₁₂(a, t)`: the masked sum scaled by
    /// `1 / (t · P(a))`. Needs at least one update overall and one sample
    /// for the arm.
    pub fn cross_estimate(&self, arm: usize) -> Result<DMatrix<f64>, EstimationError> {
        if arm >= self.counts.len() {
            return Err(EstimationError::BadArm {
                arm,
                n_arms: self.counts.len(),
            });
        }
        if self.rounds == 0 {
            return Err(EstimationError::NoUpdatesYet);
        }
        if self.counts[arm] == 0 {
            return Err(EstimationError::NoArmSamples { arm });
        }
        Ok(&self.masked_sums[arm] / (self.rounds as f64 * self.arm_freq[arm]))
    }
}

/// Estimated deconfounder for one arm: `M̂ = [I | R₁₁(a)⁻¹ R̂₁₂(a, t)]`.
pub fn build_estimated_deconfounder(
    side: &OfflineSideInfo,
    cross: &OnlineCrossCorr,
    arm: usize,
) -> Result<DeconfounderMatrix, EstimationError> {
    let r12 = cross.cross_estimate(arm)?;
    let coupling = side.solve_visible(arm, &r12);
    Ok(build_deconfounder(cross.visible_dim, cross.dim, coupling)?)
}

/// Concentration constants for the spectral error of the estimated
/// deconfounder: `‖M - M̂_t‖₂ <= sqrt_coeff / √t + inv_coeff / t` with
/// probability `1 - δ`.
#[derive(Debug, Clone, Copy)]
pub struct CrossErrorBudget {
    pub sqrt_coeff: f64,
    pub inv_coeff: f64,
}

impl CrossErrorBudget {
    /// Builds the constants from per-arm quantities: smallest eigenvalue of
    /// the visible moment, behavior marginal, and the traces of the visible
    /// and hidden moment blocks. Both the inverse-eigenvalue/propensity
    /// factor and the trace product are maximized over arms, which keeps
    /// the budget a uniform bound.
    pub fn from_moments(
        delta: f64,
        dim: usize,
        visible_min_eigs: &[f64],
        arm_freq: &[f64],
        visible_traces: &[f64],
        hidden_traces: &[f64],
    ) -> Self {
        let factor = visible_min_eigs
            .iter()
            .zip(arm_freq)
            .map(|(&eig, &p)| 1.0 / (eig * p))
            .fold(0.0f64, f64::max);
        let trace_product = visible_traces
            .iter()
            .zip(hidden_traces)
            .map(|(&v, &h)| v * h)
            .fold(0.0f64, f64::max);
        let log_term = (dim as f64 / delta).ln();
        let s12 = VISIBLE_NORM_BOUND * HIDDEN_NORM_BOUND;
        CrossErrorBudget {
            sqrt_coeff: factor * (2.0 * s12 * trace_product.sqrt() * log_term).sqrt(),
            inv_coeff: 0.75 * factor * s12 * log_term,
        }
    }

    /// Budget after `t` behavior policy samples.
    pub fn eval(&self, t: usize) -> f64 {
        let tf = t as f64;
        self.sqrt_coeff / tf.sqrt() + self.inv_coeff / tf
    }
}

/// High-probability bound for `‖M - M̂_t‖₂` after `t` policy queries, built
/// from offline side information plus the hidden-block traces that only a
/// moment oracle can supply. Uses `params.delta`.
pub fn deconfounder_error_budget(
    params: &ConfidenceParams,
    side: &OfflineSideInfo,
    dim: usize,
    hidden_traces: &[f64],
    t: usize,
) -> Result<f64, EstimationError> {
    if t == 0 {
        return Err(EstimationError::NoUpdatesYet);
    }
    if hidden_traces.len() != side.n_arms() {
        return Err(EstimationError::LengthMismatch {
            expected: side.n_arms(),
            got: hidden_traces.len(),
        });
    }
    let budget = CrossErrorBudget::from_moments(
        params.delta,
        dim,
        &(0..side.n_arms())
            .map(|a| side.visible_min_eig(a))
            .collect::<Vec<_>>(),
        side.arm_freq(),
        &(0..side.n_arms())
            .map(|a| side.visible_trace(a))
            .collect::<Vec<_>>(),
        hidden_traces,
    );
    Ok(budget.eval(t))
}

/// Accumulated ridge regression state for one arm: Gram matrix, response
/// vector and the ridge weight that seeded the Gram.
#[derive(Debug, Clone)]
pub struct PrrState {
    gram: DMatrix<f64>,
    response: DVector<f64>,
    ridge: f64,
}

impl PrrState {
    pub fn new(dim: usize, ridge: f64) -> Result<Self, EstimationError> {
        if !ridge.is_finite() || ridge <= 0.0 {
            return Err(EstimationError::BadRidge { got: ridge });
        }
        Ok(Self {
            gram: DMatrix::identity(dim, dim) * ridge,
            response: DVector::zeros(dim),
            ridge,
        })
    }

    pub fn dim(&self) -> usize {
        self.response.len()
    }

    pub fn gram(&self) -> &DMatrix<f64> {
        &self.gram
    }

    pub fn response(&self) -> &DVector<f64> {
        &self.response
    }

    pub fn ridge(&self) -> f64 {
        self.ridge
    }

    /// Rank-one update with one observed context/reward pair.
    pub fn observe(&mut self, x: &DVector<f64>, reward: f64) -> Result<(), EstimationError> {
        if x.len() != self.dim() {
            return Err(EstimationError::LengthMismatch {
                expected: self.dim(),
                got: x.len(),
            });
        }
        self.gram.ger(1.0, x, x, 1.0);
        self.response.axpy(reward, x, 1.0);
        Ok(())
    }

    /// Resets to the ridge prior, dropping all observations.
    pub fn reset(&mut self) {
        let dim = self.dim();
        self.gram = DMatrix::identity(dim, dim) * self.ridge;
        self.response.fill(0.0);
    }
}

/// Kernel-space component of the anchored ridge estimate.
///
/// With anchor `u = M† b` the corrected response is
/// `z = Y - (V - λI) u` and the returned vector is
/// `ŵ = U (Uᵀ V U)⁻¹ Uᵀ z`, which lies in `ker M`. Predictions use
/// `⟨x, u + ŵ⟩`.
pub fn prr_estimate(
    state: &PrrState,
    m: &DeconfounderMatrix,
    coeffs: &DVector<f64>,
) -> Result<DVector<f64>, EstimationError> {
    if m.dim() != state.dim() {
        return Err(EstimationError::LengthMismatch {
            expected: state.dim(),
            got: m.dim(),
        });
    }
    let anchor = m.pinv_apply(coeffs)?;
    let basis = m.kernel_basis();
    let reduced = basis.transpose() * state.gram() * basis;
    let chol = Cholesky::new(reduced).ok_or(LinalgError::NotPositiveDefinite)?;
    Ok(kernel_ridge_solve(state, basis, &anchor, &chol))
}

/// Shared solve used by [`prr_estimate`] and the cached per-arm learner
/// path: both must produce bit-identical results.
pub(crate) fn kernel_ridge_solve(
    state: &PrrState,
    basis: &DMatrix<f64>,
    anchor: &DVector<f64>,
    reduced_chol: &Cholesky<f64, Dyn>,
) -> DVector<f64> {
    // z = Y - V u + λ u, evaluated without forming V - λI.
    let mut z = state.response() - state.gram() * anchor;
    z.axpy(state.ridge(), anchor, 1.0);
    let rhs = basis.transpose() * z;
    basis * reduced_chol.solve(&rhs)
}
