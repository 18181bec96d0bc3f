//! Linear contextual bandits that exploit partially observed offline data
//! as side information.
//!
//! An offline logging phase records only the first `L` coordinates of each
//! context. Regressing rewards on those visible coordinates yields, per arm,
//! a linear functional `(M_a, b_a)` that the unknown reward weights must
//! satisfy: `M_a w_a = b_a`, where `M_a = [I | R₁₁(a)⁻¹ R₁₂(a)]` couples
//! visible and hidden coordinates through the behavior policy's conditional
//! second moments. Online, an optimistic learner confines estimation to the
//! kernel of `M_a`, shrinking the effective dimension from `d` to `d - L`.
//!
//! Modules:
//! - [`linalg`]: deconfounder matrices, closed-form pseudoinverses, kernel
//!   bases, projected norms and perturbation diagnostics.
//! - [`env`]: synthetic environments, offline logging, dataset files and
//!   Monte Carlo moment oracles.
//! - [`estimation`]: offline least squares, online cross-moment estimation,
//!   anchored ridge regression and deconfounder error budgets.
//! - [`bandit`]: confidence radii, optimistic learners with fixed or
//!   re-estimated side information, regret traces.
//! - [`cli`]: experiment configs, presets and the sweep runner behind the
//!   command line interface.

pub mod bandit;
pub mod cli;
pub mod env;
pub mod estimation;
pub mod linalg;
