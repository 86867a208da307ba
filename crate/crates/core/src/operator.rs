//! Dense complex-matrix substrate.
//!
//! Hermitian operators, a cyclic Jacobi eigensolver, Kronecker products with
//! the left factor as the slow index, and the weighted (Gram) inner product
//! that the dilated space carries.

use ndarray::{linalg::kron, Array1, Array2, ArrayView2, Axis};
use num_complex::Complex64;

use crate::config::Tolerances;
use crate::error::{Error, Result};

pub type CMatrix = Array2<Complex64>;
pub type CVector = Array1<Complex64>;

pub const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };
pub const ONE: Complex64 = Complex64 { re: 1.0, im: 0.0 };

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn identity(n: usize) -> CMatrix {
    Array2::eye(n)
}

pub fn zeros(n: usize) -> CMatrix {
    Array2::zeros((n, n))
}

pub fn real_diag(values: &[f64]) -> CMatrix {
    let mut m = zeros(values.len());
    for (i, v) in values.iter().enumerate() {
        m[[i, i]] = c(*v, 0.0);
    }
    m
}

/// Builds a complex matrix from real rows.
pub fn real_matrix(rows: &[&[f64]]) -> CMatrix {
    let n = rows.len();
    let cols = rows.first().map_or(0, |r| r.len());
    Array2::from_shape_fn((n, cols), |(i, j)| c(rows[i][j], 0.0))
}

pub fn dagger(m: &CMatrix) -> CMatrix {
    m.t().mapv(|z| z.conj())
}

pub fn trace(m: &CMatrix) -> Complex64 {
    m.diag().iter().copied().sum()
}

pub fn frobenius_norm(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn frobenius_distance(a: &CMatrix, b: &CMatrix) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm_sqr())
        .sum::<f64>()
        .sqrt()
}

pub fn commutator(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.dot(b) - b.dot(a)
}

pub fn outer(x: &CVector, y: &CVector) -> CMatrix {
    Array2::from_shape_fn((x.len(), y.len()), |(i, j)| x[i] * y[j].conj())
}

fn square_dim(m: &ArrayView2<Complex64>) -> Result<usize> {
    let (rows, cols) = m.dim();
    if rows != cols {
        return Err(Error::NotSquare { rows, cols });
    }
    Ok(rows)
}

/// Largest entrywise `|M[i][j] − conj(M[j][i])|`.
pub fn max_asymmetry(m: &CMatrix) -> Result<f64> {
    let n = square_dim(&m.view())?;
    let mut worst = 0.0_f64;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((m[[i, j]] - m[[j, i]].conj()).norm());
        }
    }
    Ok(worst)
}

pub fn hermitian_check(m: &CMatrix, tol: f64) -> Result<bool> {
    Ok(max_asymmetry(m)? <= tol)
}

/// A Hermitian operator on a finite-dimensional space.
#[derive(Debug, Clone, PartialEq)]
pub struct Observable {
    entries: CMatrix,
}

impl Observable {
    /// Accepts `entries` if it is square, non-empty and Hermitian within `tol`.
    /// Inputs are not symmetrized.
    pub fn with_tolerance(entries: CMatrix, tol: f64) -> Result<Self> {
        let asymmetry = max_asymmetry(&entries)?;
        if entries.nrows() == 0 {
            return Err(Error::NotSquare { rows: 0, cols: 0 });
        }
        if asymmetry > tol {
            return Err(Error::NotHermitian { asymmetry, tol });
        }
        Ok(Self { entries })
    }

    pub fn new(entries: CMatrix) -> Result<Self> {
        Self::with_tolerance(entries, Tolerances::default().hermitian)
    }

    /// For matrices that are Hermitian by construction (sums, scalings and
    /// congruences of Hermitian inputs).
    pub(crate) fn trusted(entries: CMatrix) -> Self {
        debug_assert!(entries.is_square());
        Self { entries }
    }

    pub fn from_real_diag(values: &[f64]) -> Self {
        Self::trusted(real_diag(values))
    }

    pub fn identity(n: usize) -> Self {
        Self::trusted(identity(n))
    }

    pub fn zeros(n: usize) -> Self {
        Self::trusted(zeros(n))
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.entries
    }

    pub fn into_matrix(self) -> CMatrix {
        self.entries
    }

    pub fn trace(&self) -> f64 {
        trace(&self.entries).re
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self::trusted(self.entries.mapv(|z| z * factor))
    }

    pub fn spectrum(&self) -> Result<Spectrum> {
        eigen_hermitian(self)
    }
}

/// Eigendecomposition of a Hermitian operator. `values` ascend; `vectors`
/// holds the matching orthonormal eigenvectors as columns.
#[derive(Debug, Clone)]
pub struct Spectrum {
    pub values: Vec<f64>,
    pub vectors: CMatrix,
}

impl Spectrum {
    pub fn min(&self) -> f64 {
        self.values.first().copied().unwrap_or(0.0)
    }

    pub fn max(&self) -> f64 {
        self.values.last().copied().unwrap_or(0.0)
    }

    pub fn max_abs(&self) -> f64 {
        self.min().abs().max(self.max().abs())
    }

    pub fn vector(&self, l: usize) -> CVector {
        self.vectors.column(l).to_owned()
    }

    /// `V · diag(f(λ)) · V†`.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> CMatrix {
        let scaled = Array2::from_shape_fn(self.vectors.dim(), |(i, l)| {
            self.vectors[[i, l]] * f(self.values[l])
        });
        scaled.dot(&dagger(&self.vectors))
    }

    pub fn reconstruct(&self) -> CMatrix {
        self.map(|x| x)
    }
}

pub fn eigen_hermitian(m: &Observable) -> Result<Spectrum> {
    let tol = Tolerances::default();
    jacobi_eigen(m.matrix(), tol.jacobi_relative, tol.jacobi_max_sweeps)
}

/// Cyclic Jacobi sweeps with complex Givens rotations.
///
/// Each rotation first removes the phase of `a_pq`, then applies the real
/// symmetric rotation that zeroes it.
pub fn jacobi_eigen(m: &CMatrix, relative_tol: f64, max_sweeps: usize) -> Result<Spectrum> {
    let n = square_dim(&m.view())?;
    let mut a = m.clone();
    let mut v = identity(n);
    let scale = frobenius_norm(&a);
    let target = relative_tol * scale;

    let mut converged = false;
    for _ in 0..=max_sweeps {
        let off = off_diagonal_norm(&a);
        if off <= target {
            converged = true;
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                rotate(&mut a, &mut v, p, q);
            }
        }
    }
    if !converged {
        return Err(Error::NoConvergence { sweeps: max_sweeps });
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[[i, i]].re.total_cmp(&a[[j, j]].re));
    let values = order.iter().map(|&i| a[[i, i]].re).collect();
    let vectors = v.select(Axis(1), &order);
    Ok(Spectrum { values, vectors })
}

fn off_diagonal_norm(a: &CMatrix) -> f64 {
    let mut acc = 0.0;
    for ((i, j), z) in a.indexed_iter() {
        if i != j {
            acc += z.norm_sqr();
        }
    }
    acc.sqrt()
}

fn rotate(a: &mut CMatrix, v: &mut CMatrix, p: usize, q: usize) {
    let z = a[[p, q]];
    let r = z.norm();
    if r == 0.0 {
        return;
    }
    let phase = (z / r).conj();
    let theta = (a[[q, q]].re - a[[p, p]].re) / (2.0 * r);
    let t = if theta.abs() > 1e150 {
        0.5 / theta
    } else {
        theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
    };
    let cos = 1.0 / (t * t + 1.0).sqrt();
    let sin = t * cos;

    // U = diag(1, phase) · [[cos, sin], [-sin, cos]]
    let u_pp = c(cos, 0.0);
    let u_pq = c(sin, 0.0);
    let u_qp = phase * (-sin);
    let u_qq = phase * cos;

    let n = a.nrows();
    for k in 0..n {
        let (akp, akq) = (a[[k, p]], a[[k, q]]);
        a[[k, p]] = akp * u_pp + akq * u_qp;
        a[[k, q]] = akp * u_pq + akq * u_qq;
    }
    for k in 0..n {
        let (apk, aqk) = (a[[p, k]], a[[q, k]]);
        a[[p, k]] = u_pp.conj() * apk + u_qp.conj() * aqk;
        a[[q, k]] = u_pq.conj() * apk + u_qq.conj() * aqk;
    }
    a[[p, q]] = ZERO;
    a[[q, p]] = ZERO;
    a[[p, p]].im = 0.0;
    a[[q, q]].im = 0.0;

    for k in 0..n {
        let (vkp, vkq) = (v[[k, p]], v[[k, q]]);
        v[[k, p]] = vkp * u_pp + vkq * u_qp;
        v[[k, q]] = vkp * u_pq + vkq * u_qq;
    }
}

/// Kronecker product; the left factor carries the slow index.
pub fn tensor(a: &CMatrix, b: &CMatrix) -> CMatrix {
    kron(a, b)
}

/// Matrix of a positive-definite inner product, `(x, y) = x† W y`.
///
/// A metric built with [`GramMetric::block_diagonal`] remembers its block
/// structure so that adjoints of block-structured operators stay exact.
#[derive(Debug, Clone)]
pub struct GramMetric {
    w: CMatrix,
    w_inv: CMatrix,
    condition: f64,
    blocks: Option<Vec<Block>>,
}

#[derive(Debug, Clone)]
struct Block {
    w: CMatrix,
    w_inv: CMatrix,
}

struct Inverted {
    inverse: CMatrix,
    min: f64,
    max: f64,
}

fn invert_positive(w: &CMatrix) -> Result<Inverted> {
    let tol = Tolerances::default();
    let asymmetry = max_asymmetry(w)?;
    if asymmetry > tol.hermitian {
        return Err(Error::NotHermitian {
            asymmetry,
            tol: tol.hermitian,
        });
    }
    let spectrum = jacobi_eigen(w, tol.jacobi_relative, tol.jacobi_max_sweeps)?;
    Ok(Inverted {
        inverse: spectrum.map(|x| 1.0 / x),
        min: spectrum.min(),
        max: spectrum.max(),
    })
}

fn condition_of(min: f64, max: f64, limit: f64) -> Result<f64> {
    let condition = if min > 0.0 { max / min } else { f64::INFINITY };
    if condition > limit {
        return Err(Error::MetricDegenerate { condition, limit });
    }
    Ok(condition)
}

impl GramMetric {
    pub fn new(w: CMatrix) -> Result<Self> {
        let inv = invert_positive(&w)?;
        let condition = condition_of(inv.min, inv.max, Tolerances::default().max_condition)?;
        Ok(Self {
            w,
            w_inv: inv.inverse,
            condition,
            blocks: None,
        })
    }

    /// `W = blockdiag(blocks)`; every block must be positive definite and
    /// of the same order.
    pub fn block_diagonal(blocks: &[CMatrix]) -> Result<Self> {
        let limit = Tolerances::default().max_condition;
        let first = blocks.first().ok_or(Error::EmptyFamily)?;
        let b = square_dim(&first.view())?;
        let n = b * blocks.len();
        let mut w = zeros(n);
        let mut w_inv = zeros(n);
        let mut parts = Vec::with_capacity(blocks.len());
        let (mut lo, mut hi) = (f64::INFINITY, 0.0_f64);
        for (i, block) in blocks.iter().enumerate() {
            let found = square_dim(&block.view())?;
            if found != b {
                return Err(Error::DimensionMismatch { expected: b, found });
            }
            let inv = invert_positive(block)?;
            lo = lo.min(inv.min);
            hi = hi.max(inv.max);
            let range = i * b..(i + 1) * b;
            w.slice_mut(ndarray::s![range.clone(), range.clone()])
                .assign(block);
            w_inv
                .slice_mut(ndarray::s![range.clone(), range])
                .assign(&inv.inverse);
            parts.push(Block {
                w: block.clone(),
                w_inv: inv.inverse,
            });
        }
        let condition = condition_of(lo, hi, limit)?;
        Ok(Self {
            w,
            w_inv,
            condition,
            blocks: Some(parts),
        })
    }

    pub fn dim(&self) -> usize {
        self.w.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.w
    }

    pub fn inverse(&self) -> &CMatrix {
        &self.w_inv
    }

    pub fn condition(&self) -> f64 {
        self.condition
    }

    pub fn is_block_diagonal(&self) -> bool {
        self.blocks.is_some()
    }
}

fn check_len(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::DimensionMismatch { expected, found });
    }
    Ok(())
}

/// `x† W y`.
pub fn w_inner(x: &CVector, y: &CVector, g: &GramMetric) -> Result<Complex64> {
    check_len(g.dim(), x.len())?;
    check_len(g.dim(), y.len())?;
    let wy = g.w.dot(y);
    Ok(x.iter().zip(wy.iter()).map(|(a, b)| a.conj() * b).sum())
}

/// Adjoint with respect to `g`: `W⁻¹ M† W`.
pub fn w_adjoint(m: &CMatrix, g: &GramMetric) -> Result<CMatrix> {
    let n = square_dim(&m.view())?;
    check_len(g.dim(), n)?;
    match &g.blocks {
        Some(blocks) => Ok(block_adjoint(m, blocks)),
        None => Ok(g.w_inv.dot(&dagger(m)).dot(&g.w)),
    }
}

fn scalar_identity(block: &ArrayView2<Complex64>) -> Option<Complex64> {
    let d = block.nrows();
    let s = block[[0, 0]];
    for ((i, j), z) in block.indexed_iter() {
        let expected = if i == j { s } else { ZERO };
        if *z != expected || d != block.ncols() {
            return None;
        }
    }
    Some(s)
}

// Block (r, s) of W⁻¹ M† W is W_r⁻¹ (M_sr)† W_s. Zero blocks and scalar
// multiples of the identity on the diagonal pass through without rounding.
fn block_adjoint(m: &CMatrix, blocks: &[Block]) -> CMatrix {
    let b = blocks[0].w.nrows();
    let n = b * blocks.len();
    let mut out = zeros(n);
    for r in 0..blocks.len() {
        for s in 0..blocks.len() {
            let src = m.slice(ndarray::s![s * b..(s + 1) * b, r * b..(r + 1) * b]);
            let mut dst = out.slice_mut(ndarray::s![r * b..(r + 1) * b, s * b..(s + 1) * b]);
            if src.iter().all(|z| *z == ZERO) {
                continue;
            }
            if r == s {
                if let Some(scalar) = scalar_identity(&src) {
                    dst.diag_mut().fill(scalar.conj());
                    continue;
                }
            }
            let adj = src.t().mapv(|z| z.conj());
            dst.assign(&blocks[r].w_inv.dot(&adj).dot(&blocks[s].w));
        }
    }
    out
}
