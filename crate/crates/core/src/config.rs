/// Numerical thresholds shared by every module.
///
/// The defaults are the ones the verification reports are pinned against.
/// Individual checks read the field they need; the CLI `--tol` flag
/// overrides [`Tolerances::check`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Entrywise absolute tolerance for accepting a matrix as Hermitian.
    pub hermitian: f64,
    /// Jacobi stops once the off-diagonal Frobenius mass is below this times `‖M‖_F`.
    pub jacobi_relative: f64,
    /// Maximum number of cyclic Jacobi sweeps.
    pub jacobi_max_sweeps: usize,
    /// Elements with a smaller minimum eigenvalue get regularized.
    pub min_eig_floor: f64,
    /// `‖Σ B_i − I‖_F` above this triggers completion.
    pub completion: f64,
    /// Residual allowed for a family that claims to resolve the identity.
    pub identity_sum: f64,
    /// Largest accepted condition number of a Gram metric.
    pub max_condition: f64,
    /// Relative residual for `resolve_general` (scaled by `1 + ‖X‖_F`).
    pub span_residual: f64,
    /// Default verdict tolerance for verification reports.
    pub check: f64,
    /// Probabilities in `(-clip, 0)` are rounded to zero.
    pub probability_clip: f64,
    /// PSD and unit-trace tolerance for density matrices.
    pub state: f64,
    /// PSD and identity-sum tolerance for POVM validation.
    pub povm: f64,
    /// Default regularization margin.
    pub margin: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            hermitian: 1e-9,
            jacobi_relative: 1e-14,
            jacobi_max_sweeps: 64,
            min_eig_floor: 1e-8,
            completion: 1e-12,
            identity_sum: 1e-12,
            max_condition: 1e12,
            span_residual: 1e-10,
            check: 1e-10,
            probability_clip: 1e-12,
            state: 1e-10,
            povm: 1e-9,
            margin: 0.5,
        }
    }
}
