//! Dilation of a finite operator family to commuting projectors.
//!
//! Coordinates on the dilated space `H ⊗ H_E` put the environment index
//! slow and the base index fast: coordinate `i·m + x` is base component `x`
//! of block `i`. In this ordering the Gram matrix is block diagonal,
//! `W = blockdiag(B̃_1, …, B̃_k)`, and the projector `E_i` selects block `i`
//! (`E_i = P_i ⊗ I_m`; with the opposite ordering it reads `I_m ⊗ P_i`).

use ndarray::{s, Array1};
use num_complex::Complex64;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::config::Tolerances;
use crate::error::{Error, Result};
use crate::lstsq;
use crate::operator::{
    c, dagger, eigen_hermitian, frobenius_distance, frobenius_norm, identity, outer, trace,
    w_adjoint, w_inner, zeros, CMatrix, CVector, GramMetric, Observable, ONE, ZERO,
};
use crate::report::Report;

fn same_dims(bs: &[Observable]) -> Result<usize> {
    let m = bs.first().ok_or(Error::EmptyFamily)?.dim();
    for b in bs {
        if b.dim() != m {
            return Err(Error::DimensionMismatch {
                expected: m,
                found: b.dim(),
            });
        }
    }
    Ok(m)
}

fn sum_of(bs: &[Observable]) -> CMatrix {
    let m = bs[0].dim();
    bs.iter().fold(zeros(m), |acc, b| acc + b.matrix())
}

/// `‖Σ B_i − I‖_F`.
pub fn identity_residual(bs: &[Observable]) -> Result<f64> {
    let m = same_dims(bs)?;
    Ok(frobenius_distance(&sum_of(bs), &identity(m)))
}

/// Appends `I − Σ B_i` when the family does not already resolve the identity.
pub fn complete_to_identity(bs: &[Observable], tol: f64) -> Result<Vec<Observable>> {
    let m = same_dims(bs)?;
    let rest = identity(m) - sum_of(bs);
    let mut out = bs.to_vec();
    if frobenius_norm(&rest) > tol {
        out.push(Observable::trusted(rest));
    }
    Ok(out)
}

/// A positive-definite resolution of the identity
/// `B̃_i = (B_i + a·I) / (1 + k·a)` together with the family it came from.
#[derive(Debug, Clone)]
pub struct RegularizedPovm {
    m: usize,
    elements: Vec<Observable>,
    originals: Vec<Observable>,
    shift: f64,
    completed: bool,
}

impl RegularizedPovm {
    pub fn m(&self) -> usize {
        self.m
    }

    pub fn k(&self) -> usize {
        self.elements.len()
    }

    pub fn elements(&self) -> &[Observable] {
        &self.elements
    }

    /// Pre-regularization family (after completion).
    pub fn originals(&self) -> &[Observable] {
        &self.originals
    }

    pub fn shift(&self) -> f64 {
        self.shift
    }

    pub fn completed(&self) -> bool {
        self.completed
    }

    /// `1 + k·a`.
    pub fn scale(&self) -> f64 {
        1.0 + self.k() as f64 * self.shift
    }

    /// Completes `bs` to a resolution of the identity, then regularizes it.
    pub fn prepare(bs: &[Observable], margin: f64) -> Result<Self> {
        let tol = Tolerances::default();
        let completed = complete_to_identity(bs, tol.completion)?;
        let was_completed = completed.len() != bs.len();
        let mut p = regularize(&completed, margin)?;
        p.completed = was_completed;
        Ok(p)
    }
}

fn check_resolves_identity(bs: &[Observable]) -> Result<usize> {
    let tol = Tolerances::default().identity_sum;
    let residual = identity_residual(bs)?;
    if residual > tol {
        return Err(Error::NotResolvingIdentity { residual, tol });
    }
    Ok(bs[0].dim())
}

/// Leaves the family alone when every element is already positive definite
/// (min eigenvalue at least the floor); otherwise shifts by
/// `a = (1 + margin) · max_i max|λ(B_i)|`.
pub fn regularize(bs: &[Observable], margin: f64) -> Result<RegularizedPovm> {
    if margin.is_nan() || margin <= 0.0 {
        return Err(Error::InvalidState(format!(
            "regularization margin must be positive, got {margin}"
        )));
    }
    check_resolves_identity(bs)?;
    let floor = Tolerances::default().min_eig_floor;
    let mut min_eig = f64::INFINITY;
    let mut max_abs = 0.0_f64;
    for b in bs {
        let spectrum = eigen_hermitian(b)?;
        min_eig = min_eig.min(spectrum.min());
        max_abs = max_abs.max(spectrum.max_abs());
    }
    let shift = if min_eig >= floor {
        0.0
    } else {
        (1.0 + margin) * max_abs
    };
    regularize_with_shift(bs, shift)
}

/// Applies a caller-chosen shift `a`. Every resulting element must be
/// positive definite.
pub fn regularize_with_shift(bs: &[Observable], shift: f64) -> Result<RegularizedPovm> {
    let m = check_resolves_identity(bs)?;
    if shift.is_nan() || shift < 0.0 {
        return Err(Error::InvalidState(format!(
            "regularization shift must be non-negative, got {shift}"
        )));
    }
    let k = bs.len();
    let elements: Vec<Observable> = if shift == 0.0 {
        bs.to_vec()
    } else {
        let denom = 1.0 + k as f64 * shift;
        bs.iter()
            .map(|b| {
                let mut e = b.matrix().clone();
                for d in e.diag_mut() {
                    *d += shift;
                }
                Observable::trusted(e.mapv(|z| z / denom))
            })
            .collect()
    };
    for (index, e) in elements.iter().enumerate() {
        let min_eigenvalue = eigen_hermitian(e)?.min();
        if min_eigenvalue <= 0.0 {
            return Err(Error::NotPositiveDefinite {
                index,
                min_eigenvalue,
            });
        }
    }
    Ok(RegularizedPovm {
        m,
        elements,
        originals: bs.to_vec(),
        shift,
        completed: false,
    })
}

/// An operator on the dilated space. Elements of the Naimark space
/// `N = span{E_i}` carry their coordinates `U = Σ α_i E_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct DilatedOperator {
    entries: CMatrix,
    coefficients: Option<Vec<Complex64>>,
}

impl DilatedOperator {
    pub fn general(entries: CMatrix) -> Self {
        Self {
            entries,
            coefficients: None,
        }
    }

    /// `Σ α_i E_i` for block size `m`.
    pub fn naimark(m: usize, coefficients: Vec<Complex64>) -> Self {
        let n = m * coefficients.len();
        let mut entries = zeros(n);
        for (i, alpha) in coefficients.iter().enumerate() {
            for x in 0..m {
                entries[[i * m + x, i * m + x]] = *alpha;
            }
        }
        Self {
            entries,
            coefficients: Some(coefficients),
        }
    }

    pub fn naimark_real(m: usize, coefficients: &[f64]) -> Self {
        Self::naimark(m, coefficients.iter().map(|x| c(*x, 0.0)).collect())
    }

    /// Classifies `entries` against the block structure of size `m`: it is
    /// in `N` when it equals `Σ α_i E_i` within `tol` (Frobenius).
    pub fn classify(entries: CMatrix, m: usize, tol: f64) -> Self {
        let n = entries.nrows();
        if m == 0 || !n.is_multiple_of(m) {
            return Self::general(entries);
        }
        let k = n / m;
        let coefficients: Vec<Complex64> = (0..k)
            .map(|i| {
                let block = entries.slice(s![i * m..(i + 1) * m, i * m..(i + 1) * m]);
                block.diag().iter().copied().sum::<Complex64>() / m as f64
            })
            .collect();
        let candidate = Self::naimark(m, coefficients);
        if frobenius_distance(&candidate.entries, &entries) <= tol {
            Self {
                entries,
                coefficients: candidate.coefficients,
            }
        } else {
            Self::general(entries)
        }
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.entries
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn in_naimark_space(&self) -> bool {
        self.coefficients.is_some()
    }

    pub fn coefficients(&self) -> Option<&[Complex64]> {
        self.coefficients.as_deref()
    }

    pub fn product(&self, other: &Self) -> Self {
        let entries = self.entries.dot(&other.entries);
        let coefficients = match (&self.coefficients, &other.coefficients) {
            (Some(a), Some(b)) if a.len() == b.len() => {
                Some(a.iter().zip(b).map(|(x, y)| x * y).collect())
            }
            _ => None,
        };
        Self {
            entries,
            coefficients,
        }
    }

    pub fn linear_combination(&self, alpha: Complex64, other: &Self, beta: Complex64) -> Self {
        let entries = self.entries.mapv(|z| z * alpha) + other.entries.mapv(|z| z * beta);
        let coefficients = match (&self.coefficients, &other.coefficients) {
            (Some(a), Some(b)) if a.len() == b.len() => {
                Some(a.iter().zip(b).map(|(x, y)| alpha * x + beta * y).collect())
            }
            _ => None,
        };
        Self {
            entries,
            coefficients,
        }
    }
}

/// The dilated space `H ⊗ H_E` with its Gram metric and projector family.
#[derive(Debug, Clone)]
pub struct DilationSpace {
    m: usize,
    k: usize,
    metric: GramMetric,
    projectors: Vec<CMatrix>,
    omega_bar: CVector,
    p_bar: CMatrix,
    source: RegularizedPovm,
}

pub fn block_selector(m: usize, k: usize, i: usize) -> CMatrix {
    let mut e = zeros(m * k);
    for x in 0..m {
        e[[i * m + x, i * m + x]] = ONE;
    }
    e
}

/// Builds `W = blockdiag(B̃_1, …, B̃_k)` and the block selectors `E_i`.
pub fn build_dilation(p: &RegularizedPovm) -> Result<DilationSpace> {
    let floor = Tolerances::default().min_eig_floor;
    for (index, b) in p.elements.iter().enumerate() {
        let min_eigenvalue = eigen_hermitian(b)?.min();
        if min_eigenvalue < floor {
            return Err(Error::NotPositiveDefinite {
                index,
                min_eigenvalue,
            });
        }
    }
    let blocks: Vec<CMatrix> = p.elements.iter().map(|b| b.matrix().clone()).collect();
    let metric = GramMetric::block_diagonal(&blocks)?;
    let (m, k) = (p.m(), p.k());
    let projectors = (0..k).map(|i| block_selector(m, k, i)).collect();
    let omega_bar = Array1::from_elem(k, ONE);
    let p_bar = outer(&omega_bar, &omega_bar).mapv(|z| z / k as f64);
    Ok(DilationSpace {
        m,
        k,
        metric,
        projectors,
        omega_bar,
        p_bar,
        source: p.clone(),
    })
}

impl DilationSpace {
    pub fn m(&self) -> usize {
        self.m
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// Dilated dimension `n = m·k`.
    pub fn n(&self) -> usize {
        self.m * self.k
    }

    pub fn metric(&self) -> &GramMetric {
        &self.metric
    }

    pub fn projectors(&self) -> &[CMatrix] {
        &self.projectors
    }

    pub fn projector(&self, i: usize) -> Result<&CMatrix> {
        self.projectors.get(i).ok_or(Error::IndexOutOfRange {
            index: i,
            len: self.k,
        })
    }

    pub fn omega_bar(&self) -> &CVector {
        &self.omega_bar
    }

    /// `ω̄ω̄†/k` on `H_E`, normalized in the Euclidean product there.
    pub fn p_bar(&self) -> &CMatrix {
        &self.p_bar
    }

    pub fn source(&self) -> &RegularizedPovm {
        &self.source
    }

    pub fn naimark_element(&self, coefficients: Vec<Complex64>) -> Result<DilatedOperator> {
        if coefficients.len() != self.k {
            return Err(Error::DimensionMismatch {
                expected: self.k,
                found: coefficients.len(),
            });
        }
        Ok(DilatedOperator::naimark(self.m, coefficients))
    }

    /// Operator `X ⊗ I_E` in this space's coordinates (block diagonal copies of `X`).
    pub fn base_operator(&self, x: &CMatrix) -> Result<CMatrix> {
        if x.nrows() != self.m || x.ncols() != self.m {
            return Err(Error::DimensionMismatch {
                expected: self.m,
                found: x.nrows(),
            });
        }
        Ok(crate::operator::tensor(&identity(self.k), x))
    }

    /// Operator `X ⊗ Y` for `X` on the base and `Y` on the environment.
    pub fn product_operator(&self, x: &CMatrix, env: &CMatrix) -> CMatrix {
        crate::operator::tensor(env, x)
    }
}

/// `φ̃ = φ ⊗ ω̄`: one copy of `φ` per block.
pub fn embed_vector(phi: &CVector, d: &DilationSpace) -> Result<CVector> {
    if phi.len() != d.m {
        return Err(Error::DimensionMismatch {
            expected: d.m,
            found: phi.len(),
        });
    }
    Ok(Array1::from_shape_fn(d.n(), |idx| phi[idx % d.m]))
}

fn check_base(x: &Observable, d: &DilationSpace) -> Result<()> {
    if x.dim() != d.m {
        return Err(Error::DimensionMismatch {
            expected: d.m,
            found: x.dim(),
        });
    }
    Ok(())
}

/// Extends a Hermitian operator through its spectral decomposition:
/// `ρ̃ = Σ λ_l ṽ_l ṽ_l† W`, each term the rank-one operator `ṽ (ṽ, ·)_W`.
pub fn extend_state(rho: &Observable, d: &DilationSpace) -> Result<DilatedOperator> {
    check_base(rho, d)?;
    let spectrum = eigen_hermitian(rho)?;
    let n = d.n();
    let mut acc = zeros(n);
    for (l, lambda) in spectrum.values.iter().enumerate() {
        if *lambda == 0.0 {
            continue;
        }
        let v = embed_vector(&spectrum.vector(l), d)?;
        acc += &outer(&v, &v).mapv(|z| z * *lambda);
    }
    Ok(DilatedOperator::general(acc.dot(d.metric.matrix())))
}

/// `Ê_i = (1 + k·a)·E_i − a·I`, the extension of the pre-regularization
/// element `B_i`. Indices are zero-based.
pub fn extend_observable_affine(i: usize, d: &DilationSpace) -> Result<DilatedOperator> {
    if i >= d.k {
        return Err(Error::IndexOutOfRange { index: i, len: d.k });
    }
    let a = d.source.shift;
    let scale = d.source.scale();
    let coefficients = (0..d.k)
        .map(|j| c(if j == i { scale - a } else { -a }, 0.0))
        .collect();
    d.naimark_element(coefficients)
}

/// Real coefficients `c` of the minimum-norm least-squares fit
/// `X ≈ Σ c_i B̃_i`, with the fit residual.
pub fn resolve_coefficients(x: &Observable, p: &RegularizedPovm) -> Result<(Vec<f64>, f64)> {
    if x.dim() != p.m() {
        return Err(Error::DimensionMismatch {
            expected: p.m(),
            found: x.dim(),
        });
    }
    let design = lstsq::design_matrix(p.elements.iter().map(Observable::matrix));
    let solution = lstsq::min_norm(&design, &lstsq::realify(x.matrix()));
    let fitted = p
        .elements
        .iter()
        .zip(&solution.x)
        .fold(zeros(p.m()), |acc, (b, ci)| {
            acc + b.matrix().mapv(|z| z * *ci)
        });
    let residual = frobenius_distance(&fitted, x.matrix());
    Ok((solution.x, residual))
}

/// Realizes `X` in the Naimark space as `Σ c_i E_i` where `X = Σ c_i B̃_i`.
pub fn resolve_general(x: &Observable, p: &RegularizedPovm) -> Result<DilatedOperator> {
    let (coefficients, residual) = resolve_coefficients(x, p)?;
    let tol = Tolerances::default().span_residual * (1.0 + frobenius_norm(x.matrix()));
    if residual > tol {
        return Err(Error::SpanDeficient { residual, tol });
    }
    Ok(DilatedOperator::naimark_real(p.m(), &coefficients))
}

/// `tr[A B]` without forming the product.
pub fn trace_product(a: &CMatrix, b: &CMatrix) -> Complex64 {
    let mut acc = ZERO;
    for ((i, j), x) in a.indexed_iter() {
        acc += x * b[[j, i]];
    }
    acc
}

/// Two-sided check of `tr[A_j B_i] = tr[Ã_j E_i]` (regularized family) and
/// `tr[A_j B_i] = tr[Ã_j Ê_i]` (original family).
pub fn verify_trace_preservation(
    observables: &[Observable],
    p: &RegularizedPovm,
    d: &DilationSpace,
    tol: f64,
) -> Result<Report> {
    let mut regularized = 0.0_f64;
    let mut original = 0.0_f64;
    let affine: Vec<DilatedOperator> = (0..d.k)
        .map(|i| extend_observable_affine(i, d))
        .collect::<Result<_>>()?;
    for a in observables {
        let extended = extend_state(a, d)?;
        let rows = p
            .elements
            .iter()
            .zip(&p.originals)
            .zip(&d.projectors)
            .zip(&affine);
        for (((b, original_b), e), e_hat) in rows {
            let base = trace_product(a.matrix(), b.matrix());
            let lifted = trace_product(extended.matrix(), e);
            regularized = regularized.max((base - lifted).norm());

            let base = trace_product(a.matrix(), original_b.matrix());
            let lifted = trace_product(extended.matrix(), e_hat.matrix());
            original = original.max((base - lifted).norm());
        }
    }
    let mut report = Report::new("trace_preservation");
    report
        .bounded("regularized_max_deviation", regularized, tol)
        .bounded("original_max_deviation", original, tol);
    Ok(report)
}

/// Basis `φ_j = u_j / √λ_j` of `H` orthonormal in the product `(x, B̃_i y)`.
pub fn element_orthogonal_basis(b: &Observable) -> Result<CMatrix> {
    let spectrum = eigen_hermitian(b)?;
    let mut basis = spectrum.vectors.clone();
    for (l, lambda) in spectrum.values.iter().enumerate() {
        let inv_sqrt = 1.0 / lambda.sqrt();
        basis.column_mut(l).mapv_inplace(|z| z * inv_sqrt);
    }
    Ok(basis)
}

/// Random complex vector with entries uniform on the unit square around 0.
pub fn random_vector(rng: &mut impl Rng, n: usize) -> CVector {
    Array1::from_shape_fn(n, |_| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
}

/// Structural invariants of a built dilation, probed with `samples` seeded
/// random vectors.
pub fn verify_invariants(d: &DilationSpace, samples: usize, seed: u64, tol: f64) -> Result<Report> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = d.n();
    let mut report = Report::new("dilation_invariants");

    let mut algebra_exact = true;
    let mut sum = zeros(n);
    for (i, ei) in d.projectors.iter().enumerate() {
        sum += ei;
        for (j, ej) in d.projectors.iter().enumerate() {
            let prod = ei.dot(ej);
            let expected = if i == j { ei.clone() } else { zeros(n) };
            algebra_exact &= prod == expected;
        }
    }
    algebra_exact &= sum == identity(n);
    report.bounded(
        "projector_algebra_inexact",
        if algebra_exact { 0.0 } else { 1.0 },
        0.0,
    );

    let mut adjoint_exact = true;
    for ei in &d.projectors {
        adjoint_exact &= w_adjoint(ei, &d.metric)? == *ei;
    }
    report.bounded(
        "w_adjoint_inexact",
        if adjoint_exact { 0.0 } else { 1.0 },
        0.0,
    );

    let mut isometry = 0.0_f64;
    let mut extension = 0.0_f64;
    for _ in 0..samples {
        let phi = random_vector(&mut rng, d.m);
        let tilde = embed_vector(&phi, d)?;
        let norm2: f64 = phi.iter().map(|z| z.norm_sqr()).sum();
        isometry = isometry.max((w_inner(&tilde, &tilde, &d.metric)? - norm2).norm());
        for (i, ei) in d.projectors.iter().enumerate() {
            let lhs = w_inner(&tilde, &ei.dot(&tilde), &d.metric)?;
            let bphi = d.source.elements[i].matrix().dot(&phi);
            let rhs: Complex64 = phi.iter().zip(bphi.iter()).map(|(a, b)| a.conj() * b).sum();
            extension = extension.max((lhs - rhs).norm());
        }
    }
    report
        .bounded("isometry_max_deviation", isometry, tol)
        .bounded("extension_max_deviation", extension, tol);

    let mut alternative = 0.0_f64;
    for b in &d.source.elements {
        let basis = element_orthogonal_basis(b)?;
        let sigma = basis.dot(&dagger(&basis));
        let inverse = eigen_hermitian(b)?.map(|x| 1.0 / x);
        alternative = alternative.max(frobenius_distance(&sigma, &inverse));
    }
    report.bounded("alternative_form_max_deviation", alternative, tol);

    let p_bar_trace = (trace(&d.p_bar) - ONE).norm();
    report.bounded("p_bar_trace_deviation", p_bar_trace, 1e-14);
    report.info("metric_condition", d.metric.condition());
    Ok(report)
}
