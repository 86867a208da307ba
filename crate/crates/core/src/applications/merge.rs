//! Two ways of putting a pair of POVMs into one commuting family.

use crate::bridge::{joint_distribution, unregularize_probabilities, QuantumState};
use crate::dilation::{
    build_dilation, extend_observable_affine, extend_state, identity_residual, trace_product,
    RegularizedPovm,
};
use crate::error::{Error, Result};
use crate::operator::{
    commutator, eigen_hermitian, frobenius_distance, frobenius_norm, identity, CMatrix, Observable,
};
use crate::report::Report;

/// Human-readable descriptions of every POVM condition `ops` violates.
pub fn povm_violations(ops: &[Observable], tol: f64) -> Result<Vec<String>> {
    let mut out = Vec::new();
    let Some(first) = ops.first() else {
        return Err(Error::EmptyFamily);
    };
    let m = first.dim();
    for (i, op) in ops.iter().enumerate() {
        if op.dim() != m {
            out.push(format!(
                "element {i}: dimension {} differs from {m}",
                op.dim()
            ));
            continue;
        }
        let min = eigen_hermitian(op)?.min();
        if min < -tol {
            out.push(format!(
                "element {i}: min eigenvalue {min:e} below -{tol:e}"
            ));
        }
    }
    if out.is_empty() {
        let residual = identity_residual(ops)?;
        if residual > tol {
            out.push(format!(
                "sum differs from identity by {residual:e} (tol {tol:e})"
            ));
        }
    }
    Ok(out)
}

pub fn validate_povm(ops: &[Observable], tol: f64) -> Result<()> {
    let violations = povm_violations(ops, tol)?;
    if violations.is_empty() {
        Ok(())
    } else {
        Err(Error::InvalidPovm(violations))
    }
}

/// PSD margins of every element and the identity-sum residual.
pub fn povm_report(ops: &[Observable], tol: f64) -> Result<Report> {
    let mut report = Report::new("povm_validation");
    for (i, op) in ops.iter().enumerate() {
        let min = eigen_hermitian(op)?.min();
        report.bounded(format!("element_{i}_negativity"), (-min).max(0.0), tol);
        report.info(format!("element_{i}_min_eigenvalue"), min);
    }
    report.bounded("identity_sum_residual", identity_residual(ops)?, tol);
    Ok(report)
}

/// `{½P_i} ∪ {½Q_j}`: a single POVM containing both (rescaled) families.
pub fn merge_halfsum(p: &[Observable], q: &[Observable], tol: f64) -> Result<Vec<Observable>> {
    let mut violations = Vec::new();
    for (label, family) in [("P", p), ("Q", q)] {
        violations.extend(
            povm_violations(family, tol)?
                .into_iter()
                .map(|v| format!("{label} {v}")),
        );
    }
    if !violations.is_empty() {
        return Err(Error::InvalidPovm(violations));
    }
    if p[0].dim() != q[0].dim() {
        return Err(Error::DimensionMismatch {
            expected: p[0].dim(),
            found: q[0].dim(),
        });
    }
    Ok(p.iter().chain(q).map(|b| b.scaled(0.5)).collect())
}

/// Families produced by dilating `P`, then dilating the extension of `Q`.
#[derive(Debug, Clone)]
pub struct DoubleDilation {
    /// Final dimension `m · k_P · k_Q`.
    pub dim: usize,
    /// Extensions of the `P` elements (affine form, then `⊗ I`).
    pub p_family: Vec<CMatrix>,
    /// Extensions of the `Q` elements on the second dilation (affine form).
    pub q_family: Vec<CMatrix>,
    pub report: Report,
}

/// Stage 1 dilates `P` (dimension `m → m·k_P`) and extends each `Q_j` to
/// `Q_j ⊗ I`. Stage 2 dilates that extended `Q` family
/// (`m·k_P → m·k_P·k_Q`) and extends the stage-1 `P` operators by `⊗ I`.
///
/// Born statistics are checked stage by stage: `P` through the stage-1
/// distribution of `ρ`, `Q` through the stage-2 distribution of the product
/// state `ρ ⊗ P̄`. The `P` statistics in the final space are reported as data.
pub fn merge_double_dilation(
    p: &[Observable],
    q: &[Observable],
    margin: f64,
    probes: &[QuantumState],
    tol: f64,
) -> Result<DoubleDilation> {
    let validation_tol = crate::Tolerances::default().povm;
    let mut violations = Vec::new();
    for (label, family) in [("P", p), ("Q", q)] {
        violations.extend(
            povm_violations(family, validation_tol)?
                .into_iter()
                .map(|v| format!("{label} {v}")),
        );
    }
    if !violations.is_empty() {
        return Err(Error::InvalidPovm(violations));
    }
    let m = p[0].dim();
    if q[0].dim() != m {
        return Err(Error::DimensionMismatch {
            expected: m,
            found: q[0].dim(),
        });
    }

    let rp = RegularizedPovm::prepare(p, margin)?;
    let d1 = build_dilation(&rp)?;
    let p_stage1: Vec<CMatrix> = (0..rp.k())
        .map(|i| extend_observable_affine(i, &d1).map(|u| u.matrix().clone()))
        .collect::<Result<_>>()?;
    let q_extended: Vec<Observable> = q
        .iter()
        .map(|qj| d1.base_operator(qj.matrix()).and_then(Observable::new))
        .collect::<Result<_>>()?;

    let rq = RegularizedPovm::prepare(&q_extended, margin)?;
    let d2 = build_dilation(&rq)?;
    let q_family: Vec<CMatrix> = (0..rq.k())
        .map(|j| extend_observable_affine(j, &d2).map(|u| u.matrix().clone()))
        .collect::<Result<_>>()?;
    let p_family: Vec<CMatrix> = p_stage1
        .iter()
        .map(|u| d2.base_operator(u))
        .collect::<Result<_>>()?;

    let dim = d2.n();
    let all: Vec<&CMatrix> = p_family.iter().chain(&q_family).collect();
    let mut max_commutator = 0.0_f64;
    for (a, x) in all.iter().enumerate() {
        for y in &all[a + 1..] {
            max_commutator = max_commutator.max(frobenius_norm(&commutator(x, y)));
        }
    }
    let total = all
        .iter()
        .fold(crate::operator::zeros(dim), |acc, x| acc + *x);
    let two = identity(dim).mapv(|z| z * 2.0);
    let sum_deviation = frobenius_distance(&total, &two);

    let born_tol = 1e-8;
    let mut stage1 = 0.0_f64;
    let mut stage2 = 0.0_f64;
    let mut cross = 0.0_f64;
    let mut copies = 0.0_f64;
    for state in probes {
        let rho = state.rho();
        let jd1 = joint_distribution(state, &d1)?;
        let q1 = unregularize_probabilities(&jd1, &rp)?;
        for (i, pi) in p.iter().enumerate() {
            stage1 = stage1.max((q1[i] - trace_product(rho.matrix(), pi.matrix()).re).abs());
        }

        let lifted_state = Observable::new(d1.product_operator(rho.matrix(), d1.p_bar()))?;
        let lifted = QuantumState::new(lifted_state)?;
        let jd2 = joint_distribution(&lifted, &d2)?;
        let q2 = unregularize_probabilities(&jd2, &rq)?;
        for (j, qj) in q.iter().enumerate() {
            stage2 = stage2.max((q2[j] - trace_product(rho.matrix(), qj.matrix()).re).abs());
        }
        if p.len() == q.len() {
            for (a, b) in q1.iter().zip(&q2).take(p.len()) {
                copies = copies.max((a - b).abs());
            }
        }

        let final_state = extend_state(lifted.rho(), &d2)?;
        for (i, pi) in p.iter().enumerate() {
            let lifted_p = trace_product(final_state.matrix(), &p_family[i]).re;
            cross = cross.max((lifted_p - trace_product(rho.matrix(), pi.matrix()).re).abs());
        }
    }

    let mut report = Report::new("double_dilation");
    report
        .info("dimension", dim as f64)
        .info("stage1_shift", rp.shift())
        .info("stage2_shift", rq.shift())
        .bounded("max_commutator", max_commutator, tol)
        .bounded("joint_sum_minus_two_identity", sum_deviation, tol)
        .bounded("stage1_born_deviation", stage1, born_tol)
        .bounded("stage2_born_deviation", stage2, born_tol)
        .info("final_space_p_born_deviation", cross);
    if p.len() == q.len() {
        report.info("copy_statistics_deviation", copies);
    }
    Ok(DoubleDilation {
        dim,
        p_family,
        q_family,
        report,
    })
}
