//! Deconfounder geometry: pseudoinverse, kernel projector, projected norms.
//!
//! Every matrix handled here has the block shape `M = [I_L | B]` where the
//! identity block covers the `L` visible coordinates and `B` (size
//! `L x (d - L)`) couples the hidden coordinates to the visible ones. That
//! structure gives closed forms which the bandit loop relies on:
//!
//! * `M Mᵀ = I + B Bᵀ` is positive definite with smallest eigenvalue >= 1,
//!   so the Moore-Penrose pseudoinverse is `M† = Mᵀ (M Mᵀ)⁻¹` and never
//!   needs an SVD (an SVD route exists only as a test oracle);
//! * the columns of `[-B; I_{d-L}]` span `ker M`, so a thin QR factorization
//!   yields an orthonormal kernel basis `U` with `U Uᵀ = P = I - M† M`.
//!
//! Working with `U` instead of `P` keeps all ridge solves in the
//! `(d - L)`-dimensional kernel space.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum LinalgError {
    #[error("visible dimension must satisfy 1 <= L < d, got L={l}, d={d}")]
    BadDimensions { l: usize, d: usize },
    #[error("coupling block must be {rows}x{cols}, got {got_rows}x{got_cols}")]
    CouplingShape {
        rows: usize,
        cols: usize,
        got_rows: usize,
        got_cols: usize,
    },
    #[error("matrix is not positive definite")]
    NotPositiveDefinite,
    #[error("dimension mismatch: expected length {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("gram matrix must be {dim}x{dim}, got {got_rows}x{got_cols}")]
    GramShape {
        dim: usize,
        got_rows: usize,
        got_cols: usize,
    },
}

/// A full-row-rank block matrix `M = [I_L | B]` together with the derived
/// geometry the learners need: pseudoinverse, kernel projector and an
/// orthonormal basis of the kernel.
///
/// The projector and the dense pseudoinverse are derived on demand; the
/// cached pieces (Cholesky factor of `M Mᵀ`, kernel basis) are the ones hit
/// on every bandit round.
#[derive(Debug, Clone)]
pub struct DeconfounderMatrix {
    visible_dim: usize,
    dim: usize,
    coupling: DMatrix<f64>,
    /// Cholesky factor of `M Mᵀ = I + B Bᵀ`.
    gram_chol: Cholesky<f64, Dyn>,
    /// Orthonormal columns spanning `ker M`; `d x (d - L)`.
    kernel_basis: DMatrix<f64>,
}

/// Builds the deconfounder geometry for `M = [I_L | B]`.
///
/// `coupling` is the `L x (d - L)` block `B`. Fails when the dimensions are
/// inconsistent or degenerate (`L = 0` has no deconfounder; plain bandits
/// handle that case upstream).
pub fn build_deconfounder(
    visible_dim: usize,
    dim: usize,
    coupling: DMatrix<f64>,
) -> Result<DeconfounderMatrix, LinalgError> {
    DeconfounderMatrix::new(visible_dim, dim, coupling)
}

impl DeconfounderMatrix {
    pub fn new(
        visible_dim: usize,
        dim: usize,
        coupling: DMatrix<f64>,
    ) -> Result<Self, LinalgError> {
        if visible_dim == 0 || visible_dim >= dim {
            return Err(LinalgError::BadDimensions {
                l: visible_dim,
                d: dim,
            });
        }
        let hidden = dim - visible_dim;
        if coupling.nrows() != visible_dim || coupling.ncols() != hidden {
            return Err(LinalgError::CouplingShape {
                rows: visible_dim,
                cols: hidden,
                got_rows: coupling.nrows(),
                got_cols: coupling.ncols(),
            });
        }

        // M Mᵀ = I + B Bᵀ; eigenvalues >= 1, so Cholesky cannot fail for
        // finite input.
        let mut gram = &coupling * coupling.transpose();
        for i in 0..visible_dim {
            gram[(i, i)] += 1.0;
        }
        let gram_chol = Cholesky::new(gram).ok_or(LinalgError::NotPositiveDefinite)?;

        // The columns of [-B; I] span ker M; thin QR orthonormalizes them.
        let mut span = DMatrix::<f64>::zeros(dim, hidden);
        span.view_mut((0, 0), (visible_dim, hidden))
            .copy_from(&-&coupling);
        span.view_mut((visible_dim, 0), (hidden, hidden))
            .fill_with_identity();
        let kernel_basis = span.qr().q();

        Ok(Self {
            visible_dim,
            dim,
            coupling,
            gram_chol,
            kernel_basis,
        })
    }

    pub fn visible_dim(&self) -> usize {
        self.visible_dim
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn hidden_dim(&self) -> usize {
        self.dim - self.visible_dim
    }

    /// The coupling block `B`.
    pub fn coupling(&self) -> &DMatrix<f64> {
        &self.coupling
    }

    /// Orthonormal basis `U` of `ker M`, shape `d x (d - L)`.
    pub fn kernel_basis(&self) -> &DMatrix<f64> {
        &self.kernel_basis
    }

    /// Assembles the dense `L x d` matrix `[I_L | B]`.
    pub fn matrix(&self) -> DMatrix<f64> {
        let mut m = DMatrix::<f64>::zeros(self.visible_dim, self.dim);
        m.view_mut((0, 0), (self.visible_dim, self.visible_dim))
            .fill_with_identity();
        m.view_mut((0, self.visible_dim), (self.visible_dim, self.hidden_dim()))
            .copy_from(&self.coupling);
        m
    }

    /// Dense Moore-Penrose pseudoinverse `M† = Mᵀ (M Mᵀ)⁻¹`, shape `d x L`.
    pub fn pinv(&self) -> DMatrix<f64> {
        self.matrix().transpose() * self.gram_chol.inverse()
    }

    /// Applies the pseudoinverse to a visible-space vector: `M† v`.
    ///
    /// Uses the cached Cholesky factor instead of forming `M†`, so this is
    /// the route the per-round learner code takes.
    pub fn pinv_apply(&self, v: &DVector<f64>) -> Result<DVector<f64>, LinalgError> {
        if v.len() != self.visible_dim {
            return Err(LinalgError::LengthMismatch {
                expected: self.visible_dim,
                got: v.len(),
            });
        }
        let z = self.gram_chol.solve(v);
        let mut out = DVector::<f64>::zeros(self.dim);
        out.rows_mut(0, self.visible_dim).copy_from(&z);
        out.rows_mut(self.visible_dim, self.hidden_dim())
            .copy_from(&(self.coupling.transpose() * &z));
        Ok(out)
    }

    /// Applies `M` to a full-space vector.
    pub fn apply(&self, w: &DVector<f64>) -> Result<DVector<f64>, LinalgError> {
        if w.len() != self.dim {
            return Err(LinalgError::LengthMismatch {
                expected: self.dim,
                got: w.len(),
            });
        }
        let visible = w.rows(0, self.visible_dim);
        let hidden = w.rows(self.visible_dim, self.hidden_dim());
        Ok(DVector::from(visible + &self.coupling * hidden))
    }

    /// Dense kernel projector `P = I - M† M`, shape `d x d`.
    pub fn projector(&self) -> DMatrix<f64> {
        DMatrix::<f64>::identity(self.dim, self.dim) - self.pinv() * self.matrix()
    }
}

/// A ridge Gram matrix `V` paired with its reduction `Ṽ = Uᵀ V U` onto the
/// kernel of a specific deconfounder, plus the Cholesky factor of `Ṽ` used
/// by norm and estimate computations.
#[derive(Debug, Clone)]
pub struct ProjectedGram {
    gram: DMatrix<f64>,
    reduced: DMatrix<f64>,
    reduced_chol: Cholesky<f64, Dyn>,
}

impl ProjectedGram {
    /// Reduces `gram` through the kernel basis of `m`. Fails if `gram` has
    /// the wrong shape or `Uᵀ V U` is not positive definite (any `V >= λI`
    /// with `λ > 0` is fine).
    pub fn new(gram: DMatrix<f64>, m: &DeconfounderMatrix) -> Result<Self, LinalgError> {
        if gram.nrows() != m.dim() || gram.ncols() != m.dim() {
            return Err(LinalgError::GramShape {
                dim: m.dim(),
                got_rows: gram.nrows(),
                got_cols: gram.ncols(),
            });
        }
        let u = m.kernel_basis();
        let reduced = u.transpose() * &gram * u;
        let reduced_chol =
            Cholesky::new(reduced.clone()).ok_or(LinalgError::NotPositiveDefinite)?;
        Ok(Self {
            gram,
            reduced,
            reduced_chol,
        })
    }

    pub fn gram(&self) -> &DMatrix<f64> {
        &self.gram
    }

    /// `Ṽ = Uᵀ V U`, shape `(d - L) x (d - L)`.
    pub fn reduced(&self) -> &DMatrix<f64> {
        &self.reduced
    }

    pub fn reduced_chol(&self) -> &Cholesky<f64, Dyn> {
        &self.reduced_chol
    }
}

/// Weighted seminorm `‖x‖ = ‖Uᵀx‖_{Ṽ⁻¹}`, i.e. the norm of `x` under the
/// pseudoinverse of `P V P` restricted to the kernel. Vectors in the row
/// space of `M` have norm zero.
pub fn projected_norm(
    x: &DVector<f64>,
    gram: &ProjectedGram,
    m: &DeconfounderMatrix,
) -> Result<f64, LinalgError> {
    if x.len() != m.dim() {
        return Err(LinalgError::LengthMismatch {
            expected: m.dim(),
            got: x.len(),
        });
    }
    let utx = m.kernel_basis().transpose() * x;
    Ok(kernel_norm(&utx, gram.reduced_chol()))
}

/// `‖z‖_{Ṽ⁻¹}` for a kernel-coordinate vector `z`, via one triangular solve
/// against the cached factor. Shared by `projected_norm` and the learner's
/// cached per-arm path so both produce identical floating point results.
pub(crate) fn kernel_norm(z: &DVector<f64>, chol: &Cholesky<f64, Dyn>) -> f64 {
    // chol.l() clones; the factor is small ((d - L)²) so this stays cheap.
    kernel_norm_from_factor(&chol.l(), z)
}

/// Same norm, given the lower Cholesky factor directly. Lets callers that
/// cache the factor skip re-extracting it.
pub(crate) fn kernel_norm_from_factor(l: &DMatrix<f64>, z: &DVector<f64>) -> f64 {
    l.solve_lower_triangular(z)
        .map(|s| s.norm())
        .unwrap_or(f64::INFINITY)
}

/// Spectral deltas between a deconfounder and a perturbed estimate of it.
///
/// `deconfounder_delta` is `‖M - M̂‖₂`; the other two measure the induced
/// movement of the projector and the pseudoinverse, each of which is bounded
/// by `2 ‖M - M̂‖₂`.
#[derive(Debug, Clone, Copy)]
pub struct PerturbationCheck {
    pub deconfounder_delta: f64,
    pub projector_delta: f64,
    pub pinv_delta: f64,
}

impl PerturbationCheck {
    /// Ratio of the projector movement to its bound `2‖ΔM‖`; 0 when both
    /// deltas vanish.
    pub fn projector_ratio(&self) -> f64 {
        ratio(self.projector_delta, 2.0 * self.deconfounder_delta)
    }

    /// Ratio of the pseudoinverse movement to its bound `2‖ΔM‖`.
    pub fn pinv_ratio(&self) -> f64 {
        ratio(self.pinv_delta, 2.0 * self.deconfounder_delta)
    }

    /// Whether both movements respect their spectral bounds, with a small
    /// slack for floating point noise.
    pub fn bounds_hold(&self) -> bool {
        let cap = 2.0 * self.deconfounder_delta + 1e-12;
        self.projector_delta <= cap && self.pinv_delta <= cap
    }
}

fn ratio(num: f64, den: f64) -> f64 {
    if num == 0.0 {
        0.0
    } else {
        num / den
    }
}

/// Measures how far apart two deconfounders of identical shape are, in the
/// spectral deltas of `M`, `P` and `M†`.
pub fn perturbation_check(
    m: &DeconfounderMatrix,
    mhat: &DeconfounderMatrix,
) -> Result<PerturbationCheck, LinalgError> {
    if m.visible_dim() != mhat.visible_dim() || m.dim() != mhat.dim() {
        return Err(LinalgError::BadDimensions {
            l: mhat.visible_dim(),
            d: mhat.dim(),
        });
    }
    Ok(PerturbationCheck {
        deconfounder_delta: spectral_norm(&(m.matrix() - mhat.matrix())),
        projector_delta: spectral_norm(&(m.projector() - mhat.projector())),
        pinv_delta: spectral_norm(&(m.pinv() - mhat.pinv())),
    })
}

/// Largest singular value; 0 for an empty matrix.
///
/// Computed as the square root of the top eigenvalue of the smaller Gram
/// matrix. The symmetric eigensolver stays reliable on rank-deficient
/// inputs (differences of projectors, near-identical deconfounders), where
/// bidiagonal SVD can fail to converge cleanly.
pub fn spectral_norm(a: &DMatrix<f64>) -> f64 {
    if a.is_empty() {
        return 0.0;
    }
    let gram = if a.nrows() <= a.ncols() {
        a * a.transpose()
    } else {
        a.transpose() * a
    };
    gram.symmetric_eigenvalues().max().max(0.0).sqrt()
}
