//! Naimark components, the expanded base space, and the probability checks
//! that run on top of them.

use ndarray::Array2;
use num_complex::Complex64;

use crate::bridge::QuantumState;
use crate::config::Tolerances;
use crate::dilation::{
    build_dilation, embed_vector, extend_state, regularize_with_shift, resolve_general,
    trace_product, DilatedOperator, DilationSpace, RegularizedPovm,
};
use crate::error::{Error, Result};
use crate::operator::{
    dagger, frobenius_distance, identity, real_diag, tensor, zeros, CMatrix, CVector, Observable,
    ZERO,
};
use crate::report::Report;

/// Change of basis on the dilated space whose first `m` columns are the
/// embedded base basis `ẽ_a` and whose columns are W-orthonormal.
#[derive(Debug, Clone)]
pub struct ModelBasis {
    m: usize,
    t: CMatrix,
    t_inv: CMatrix,
}

fn w_dot(w: &CMatrix, x: &CVector, y: &CVector) -> Complex64 {
    let wy = w.dot(y);
    x.iter().zip(wy.iter()).map(|(a, b)| a.conj() * b).sum()
}

fn project_out(w: &CMatrix, r: &mut CVector, q: &CVector) {
    let coef = w_dot(w, q, r);
    r.scaled_add(-coef, q);
}

impl ModelBasis {
    /// Completes `ẽ_1, …, ẽ_m` with standard basis vectors by W-weighted
    /// modified Gram–Schmidt, always taking the candidate with the largest
    /// remaining W-norm and re-orthogonalizing it once before normalizing.
    pub fn new(d: &DilationSpace) -> Result<Self> {
        let (m, n) = (d.m(), d.n());
        let w = d.metric().matrix();
        let mut basis: Vec<CVector> = Vec::with_capacity(n);
        for a in 0..m {
            let mut e = CVector::from_elem(m, ZERO);
            e[a] = crate::operator::ONE;
            basis.push(embed_vector(&e, d)?);
        }

        let mut candidates: Vec<CVector> = (0..n)
            .map(|j| {
                let mut e = CVector::from_elem(n, ZERO);
                e[j] = crate::operator::ONE;
                e
            })
            .collect();
        for r in candidates.iter_mut() {
            for q in &basis {
                project_out(w, r, q);
            }
        }

        while basis.len() < n {
            let (best, norm) = candidates
                .iter()
                .enumerate()
                .map(|(j, r)| (j, w_dot(w, r, r).re.max(0.0).sqrt()))
                .max_by(|a, b| a.1.total_cmp(&b.1))
                .ok_or(Error::MetricDegenerate {
                    condition: f64::INFINITY,
                    limit: Tolerances::default().max_condition,
                })?;
            if norm < 1e-8 {
                return Err(Error::MetricDegenerate {
                    condition: 1.0 / norm,
                    limit: Tolerances::default().max_condition,
                });
            }
            let mut q = candidates.swap_remove(best);
            for prev in &basis {
                project_out(w, &mut q, prev);
            }
            let norm = w_dot(w, &q, &q).re.sqrt();
            q.mapv_inplace(|z| z / norm);
            for r in candidates.iter_mut() {
                project_out(w, r, &q);
            }
            basis.push(q);
        }

        let t = Array2::from_shape_fn((n, n), |(i, j)| basis[j][i]);
        let t_inv = dagger(&t).dot(w);
        Ok(Self { m, t, t_inv })
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.t
    }

    /// `T⁻¹ = T† W`.
    pub fn inverse(&self) -> &CMatrix {
        &self.t_inv
    }

    /// `‖T† W T − I‖_F`.
    pub fn orthonormality_residual(&self) -> f64 {
        let n = self.t.nrows();
        frobenius_distance(&self.t_inv.dot(&self.t), &identity(n))
    }
}

/// Top-left `m × m` block of `T⁻¹ U T`.
pub fn component(u: &CMatrix, mb: &ModelBasis) -> Result<CMatrix> {
    let n = mb.t.nrows();
    if u.nrows() != n || u.ncols() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: u.nrows(),
        });
    }
    let full = mb.t_inv.dot(u).dot(&mb.t);
    Ok(full.slice(ndarray::s![..mb.m, ..mb.m]).to_owned())
}

/// Base space padded from `m` to `t = m·k`, its dilation (order `m·k²`) and
/// the projector `G` onto the copy of the original base inside it.
///
/// The padded family is `B̃_i ⊕ I_{t−m}/k`. With the environment index slow,
/// `G` is block diagonal with `Z = I_m ⊕ 0` in every block, i.e. `I_k ⊗ Z`
/// in these coordinates (`Z ⊗ I_k` with the base index slow).
#[derive(Debug, Clone)]
pub struct ExpandedSpace {
    m: usize,
    k: usize,
    z: CMatrix,
    g: CMatrix,
    tensor_family: Vec<CMatrix>,
    dilation: DilationSpace,
}

pub fn build_expanded(p: &RegularizedPovm) -> Result<ExpandedSpace> {
    let (m, k) = (p.m(), p.k());
    let t = m * k;
    let pad = 1.0 / k as f64;
    let padded: Vec<Observable> = p
        .elements()
        .iter()
        .map(|b| {
            let mut e = zeros(t);
            e.slice_mut(ndarray::s![..m, ..m]).assign(b.matrix());
            for x in m..t {
                e[[x, x]] = Complex64::new(pad, 0.0);
            }
            Observable::new(e)
        })
        .collect::<Result<_>>()?;
    let padded_povm = regularize_with_shift(&padded, 0.0)?;
    let dilation = build_dilation(&padded_povm)?;

    let z = real_diag(
        &(0..t)
            .map(|x| if x < m { 1.0 } else { 0.0 })
            .collect::<Vec<_>>(),
    );
    let g = tensor(&identity(k), &z);
    let tensor_family = p
        .elements()
        .iter()
        .map(|b| tensor(b.matrix(), &identity(k)))
        .collect();
    Ok(ExpandedSpace {
        m,
        k,
        z,
        g,
        tensor_family,
        dilation,
    })
}

impl ExpandedSpace {
    pub fn m(&self) -> usize {
        self.m
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// Expanded base dimension `t = m·k`.
    pub fn t(&self) -> usize {
        self.m * self.k
    }

    /// Dilated dimension `m·k²`.
    pub fn n(&self) -> usize {
        self.dilation.n()
    }

    pub fn z(&self) -> &CMatrix {
        &self.z
    }

    pub fn g(&self) -> &CMatrix {
        &self.g
    }

    /// `{B̃_i ⊗ I_k}` on the expanded base.
    pub fn tensor_family(&self) -> &[CMatrix] {
        &self.tensor_family
    }

    pub fn dilation(&self) -> &DilationSpace {
        &self.dilation
    }

    /// Indices of the range of `G`, in increasing order.
    pub fn range_indices(&self) -> Vec<usize> {
        let t = self.t();
        (0..self.n()).filter(|idx| idx % t < self.m).collect()
    }

    /// `Σ α_i E_i` on the expanded dilation.
    pub fn naimark_element(&self, coefficients: Vec<Complex64>) -> Result<DilatedOperator> {
        self.dilation.naimark_element(coefficients)
    }
}

/// `G U G` restricted to the `m·k`-dimensional range of `G`.
pub fn compress_g(u: &CMatrix, e: &ExpandedSpace) -> Result<CMatrix> {
    if u.nrows() != e.n() || u.ncols() != e.n() {
        return Err(Error::DimensionMismatch {
            expected: e.n(),
            found: u.nrows(),
        });
    }
    let gug = e.g.dot(u).dot(&e.g);
    let idx = e.range_indices();
    Ok(Array2::from_shape_fn((idx.len(), idx.len()), |(r, c)| {
        gug[[idx[r], idx[c]]]
    }))
}

/// Compares the four Born-type quantities for `X` against the realization
/// of `U_0` in the Naimark space. Only `tr[X (Ũ_0)_H] = tr[X U_0]` carries
/// a verdict; the tensor-product traces are reported as data.
pub fn verify_born_preservation(
    x: &Observable,
    u0: &Observable,
    d: &DilationSpace,
    mb: &ModelBasis,
    tol: f64,
) -> Result<Report> {
    let resolved = resolve_general(u0, d.source())?;
    let u = resolved.matrix();
    let with_identity = trace_product(&d.base_operator(x.matrix())?, u).re;
    let with_p_bar = trace_product(&d.product_operator(x.matrix(), d.p_bar()), u).re;
    let comp = component(u, mb)?;
    let via_component = trace_product(x.matrix(), &comp).re;
    let base = trace_product(x.matrix(), u0.matrix()).re;
    let w_pairing = trace_product(extend_state(x, d)?.matrix(), u).re;

    let n = d.n();
    let identity_resolved = resolve_general(&Observable::identity(d.m()), d.source())?;
    let chain_up = frobenius_distance(identity_resolved.matrix(), &identity(n));
    let chain_down = frobenius_distance(&component(&identity(n), mb)?, &identity(d.m()));

    let mut report = Report::new("born_preservation");
    report
        .bounded("component_vs_base", (via_component - base).abs(), tol)
        .info("tr_x_u0", base)
        .info("tr_x_component", via_component)
        .info("tr_x_tensor_identity_u", with_identity)
        .info("tr_x_tensor_pbar_u", with_p_bar)
        .info("tr_w_pairing", w_pairing)
        .info("tensor_identity_vs_base", (with_identity - base).abs())
        .info("tensor_pbar_vs_base", (with_p_bar - base).abs())
        .info(
            "tensor_identity_vs_tensor_pbar",
            (with_identity - with_p_bar).abs(),
        )
        .info("w_pairing_vs_base", (w_pairing - base).abs())
        .info("identity_resolves_to_identity", chain_up)
        .info("component_of_identity", chain_down);
    Ok(report)
}

/// Measures how far the `m × m` component of `Σ α_i E_i` sits from the
/// physical corner of its `G`-compression on the expanded dilation.
pub fn compare_component_notions(
    coefficients: &[Complex64],
    d: &DilationSpace,
    mb: &ModelBasis,
    e: &ExpandedSpace,
) -> Result<Report> {
    let base = d.naimark_element(coefficients.to_vec())?;
    let comp = component(base.matrix(), mb)?;
    let expanded = e.naimark_element(coefficients.to_vec())?;
    let compressed = compress_g(expanded.matrix(), e)?;
    let m = d.m();
    let corner = compressed.slice(ndarray::s![..m, ..m]).to_owned();
    let mut report = Report::new("component_notions");
    report
        .info("corner_deviation", frobenius_distance(&comp, &corner))
        .info(
            "trace_deviation",
            (crate::operator::trace(&comp) - crate::operator::trace(&compressed) / e.k() as f64)
                .norm(),
        );
    Ok(report)
}

/// The Lüders-rule conditional observables and probabilities for a pair.
#[derive(Debug, Clone)]
pub struct Conditionals {
    /// `C_{A|B} = BAB / tr[DB]`.
    pub c_ab: CMatrix,
    /// `C_{B|A} = ABA / tr[DA]`.
    pub c_ba: CMatrix,
    /// `Pr[A|B] = tr[BDBA] / tr[DB]`.
    pub pr_ab: f64,
    /// `Pr[B|A] = tr[ADAB] / tr[DA]`.
    pub pr_ba: f64,
}

impl Conditionals {
    /// Whether both probabilities lie in `[−slack, 1 + slack]`. Only
    /// guaranteed for projector inputs.
    pub fn in_unit_interval(&self, slack: f64) -> bool {
        [self.pr_ab, self.pr_ba]
            .iter()
            .all(|p| *p >= -slack && *p <= 1.0 + slack)
    }
}

pub fn conditional_observables(
    a: &Observable,
    b: &Observable,
    state: &QuantumState,
) -> Result<Conditionals> {
    let d = state.rho().matrix();
    let dim = d.nrows();
    for x in [a, b] {
        if x.dim() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: x.dim(),
            });
        }
    }
    let (am, bm) = (a.matrix(), b.matrix());
    let tr_db = trace_product(d, bm).re;
    let tr_da = trace_product(d, am).re;
    let floor = 1e-12;
    for denominator in [tr_db, tr_da] {
        if denominator.abs() <= floor {
            return Err(Error::NullConditioning { denominator });
        }
    }
    let c_ab = bm.dot(am).dot(bm).mapv(|z| z / tr_db);
    let c_ba = am.dot(bm).dot(am).mapv(|z| z / tr_da);
    let pr_ab = trace_product(&bm.dot(d).dot(bm), am).re / tr_db;
    let pr_ba = trace_product(&am.dot(d).dot(am), bm).re / tr_da;
    Ok(Conditionals {
        c_ab,
        c_ba,
        pr_ab,
        pr_ba,
    })
}
