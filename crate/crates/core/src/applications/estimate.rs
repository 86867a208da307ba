//! State estimation from outcome counts of a regularized POVM.

use ndarray::Array2;
use num_complex::Complex64;

use crate::bridge::QuantumState;
use crate::dilation::{trace_product, RegularizedPovm};
use crate::error::{Error, Result};
use crate::fixtures::hermitize;
use crate::lstsq::min_norm;
use crate::operator::{
    c, eigen_hermitian, frobenius_distance, identity, zeros, CMatrix, Observable,
};

const PROBABILITY_FLOOR: f64 = 1e-12;
const MONOTONE_SLACK: f64 = 1e-12;
const MAX_DILUTIONS: usize = 60;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    LinearInversion,
    Em,
}

#[derive(Debug, Clone)]
pub struct EstimationProblem {
    pub povm: RegularizedPovm,
    pub counts: Vec<u64>,
    pub method: Method,
    pub max_iters: usize,
    pub tol: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Diagnostics {
    /// Log-likelihood `Σ f_i ln p_i` after each accepted EM step, starting
    /// with the initial state.
    pub log_likelihood: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// Some outcome with nonzero frequency had probability below the floor.
    pub probability_floored: bool,
    /// EM steps where the plain update lowered the likelihood and a diluted
    /// step was taken instead.
    pub diluted_steps: usize,
    /// Whether the family spans the Hermitian matrices (linear inversion).
    pub informationally_complete: bool,
    /// Rank of the linear-inversion design matrix on the traceless part.
    pub rank: usize,
    /// Total eigenvalue mass removed by clipping to the PSD cone.
    pub clipped_mass: f64,
}

#[derive(Debug, Clone)]
pub struct Estimate {
    pub state: QuantumState,
    pub diagnostics: Diagnostics,
}

pub fn estimate_state(ep: &EstimationProblem) -> Result<Estimate> {
    if ep.counts.len() != ep.povm.k() {
        return Err(Error::InvalidCounts(format!(
            "{} counts for {} outcomes",
            ep.counts.len(),
            ep.povm.k()
        )));
    }
    let n: u64 = ep.counts.iter().sum();
    if n == 0 {
        return Err(Error::InvalidCounts("counts sum to zero".into()));
    }
    let freqs: Vec<f64> = ep.counts.iter().map(|&x| x as f64 / n as f64).collect();
    estimate_from_frequencies(&ep.povm, &freqs, ep.method, ep.max_iters, ep.tol)
}

/// As [`estimate_state`], with relative frequencies in place of counts.
pub fn estimate_from_frequencies(
    povm: &RegularizedPovm,
    freqs: &[f64],
    method: Method,
    max_iters: usize,
    tol: f64,
) -> Result<Estimate> {
    if freqs.len() != povm.k() {
        return Err(Error::InvalidCounts(format!(
            "{} frequencies for {} outcomes",
            freqs.len(),
            povm.k()
        )));
    }
    if let Some(bad) = freqs.iter().position(|f| !f.is_finite() || *f < 0.0) {
        return Err(Error::InvalidCounts(format!(
            "frequency {bad} is {}",
            freqs[bad]
        )));
    }
    match method {
        Method::LinearInversion => linear_inversion(povm, freqs),
        Method::Em => em(povm, freqs, max_iters, tol),
    }
}

/// Orthonormal (Hilbert–Schmidt) basis of the traceless Hermitian matrices:
/// symmetric and antisymmetric off-diagonal units, then the diagonal
/// generalized Gell-Mann matrices.
pub fn traceless_hermitian_basis(m: usize) -> Vec<CMatrix> {
    let r = std::f64::consts::FRAC_1_SQRT_2;
    let mut out = Vec::with_capacity(m * m - 1);
    for a in 0..m {
        for b in a + 1..m {
            let mut s = zeros(m);
            s[[a, b]] = c(r, 0.0);
            s[[b, a]] = c(r, 0.0);
            out.push(s);
            let mut t = zeros(m);
            t[[a, b]] = c(0.0, -r);
            t[[b, a]] = c(0.0, r);
            out.push(t);
        }
    }
    for l in 1..m {
        let norm = 1.0 / ((l * (l + 1)) as f64).sqrt();
        let mut d = zeros(m);
        for j in 0..l {
            d[[j, j]] = c(norm, 0.0);
        }
        d[[l, l]] = c(-(l as f64) * norm, 0.0);
        out.push(d);
    }
    out
}

fn linear_inversion(povm: &RegularizedPovm, freqs: &[f64]) -> Result<Estimate> {
    let m = povm.m();
    let basis = traceless_hermitian_basis(m);
    let a = Array2::from_shape_fn((povm.k(), basis.len()), |(i, j)| {
        trace_product(&basis[j], povm.elements()[i].matrix()).re
    });
    let rhs: Vec<f64> = povm
        .elements()
        .iter()
        .zip(freqs)
        .map(|(b, f)| f - b.trace() / m as f64)
        .collect();
    let solution = min_norm(&a, &rhs);
    let mut rho = identity(m).mapv(|z| z / m as f64);
    for (x, g) in solution.x.iter().zip(&basis) {
        rho = rho + g.mapv(|z| z * *x);
    }
    let (state, clipped_mass) = project_to_states(rho)?;
    Ok(Estimate {
        state,
        diagnostics: Diagnostics {
            informationally_complete: solution.rank == basis.len(),
            rank: solution.rank,
            clipped_mass,
            converged: true,
            ..Diagnostics::default()
        },
    })
}

/// Clips negative eigenvalues to zero and renormalizes the trace.
fn project_to_states(rho: CMatrix) -> Result<(QuantumState, f64)> {
    let spectrum = eigen_hermitian(&Observable::new(hermitize(rho))?)?;
    let clipped_mass: f64 = spectrum
        .values
        .iter()
        .filter(|v| **v < 0.0)
        .map(|v| -v)
        .sum();
    let total: f64 = spectrum.values.iter().map(|v| v.max(0.0)).sum();
    if total <= 0.0 {
        return Err(Error::InvalidState(
            "estimate has no positive spectrum".into(),
        ));
    }
    let projected = hermitize(spectrum.map(|v| v.max(0.0) / total));
    Ok((
        QuantumState::new(Observable::new(projected)?)?,
        clipped_mass,
    ))
}

struct Likelihood<'a> {
    povm: &'a RegularizedPovm,
    freqs: &'a [f64],
}

impl Likelihood<'_> {
    /// Floored outcome probabilities and whether the floor was hit on an
    /// outcome that was observed.
    fn probabilities(&self, rho: &CMatrix) -> (Vec<f64>, bool) {
        let mut floored = false;
        let probs = self
            .povm
            .elements()
            .iter()
            .zip(self.freqs)
            .map(|(b, f)| {
                let p = trace_product(rho, b.matrix()).re;
                if p < PROBABILITY_FLOOR {
                    floored |= *f > 0.0;
                    PROBABILITY_FLOOR
                } else {
                    p
                }
            })
            .collect();
        (probs, floored)
    }

    fn log_likelihood(&self, probs: &[f64]) -> f64 {
        self.freqs
            .iter()
            .zip(probs)
            .filter(|(f, _)| **f > 0.0)
            .map(|(f, p)| f * p.ln())
            .sum()
    }

    fn r_operator(&self, probs: &[f64]) -> CMatrix {
        let m = self.povm.m();
        self.povm
            .elements()
            .iter()
            .zip(self.freqs.iter().zip(probs))
            .fold(zeros(m), |acc, (b, (f, p))| {
                acc + b.matrix().mapv(|z| z * (f / p))
            })
    }
}

fn sandwich(r: &CMatrix, rho: &CMatrix) -> CMatrix {
    let out = hermitize(r.dot(rho).dot(r));
    let tr: Complex64 = out.diag().sum();
    out.mapv(|z| z / tr.re)
}

/// `ρ ← N[R ρ R]` from `I/m`. A step that lowers the log-likelihood by more
/// than `1e-12` is replaced by the diluted update `N[(I + εR) ρ (I + εR)]`
/// with `ε` halved until the likelihood does not drop.
fn em(povm: &RegularizedPovm, freqs: &[f64], max_iters: usize, tol: f64) -> Result<Estimate> {
    let m = povm.m();
    let total: f64 = freqs.iter().sum();
    if total <= 0.0 {
        return Err(Error::InvalidCounts("frequencies sum to zero".into()));
    }
    let freqs: Vec<f64> = freqs.iter().map(|f| f / total).collect();
    let lik = Likelihood {
        povm,
        freqs: &freqs,
    };
    let mut diag = Diagnostics {
        informationally_complete: true,
        ..Diagnostics::default()
    };
    let mut rho = identity(m).mapv(|z| z / m as f64);
    let (mut probs, floored) = lik.probabilities(&rho);
    diag.probability_floored |= floored;
    let mut current = lik.log_likelihood(&probs);
    diag.log_likelihood.push(current);

    for _ in 0..max_iters {
        let r = lik.r_operator(&probs);
        let mut next = sandwich(&r, &rho);
        let (mut next_probs, mut next_floored) = lik.probabilities(&next);
        let mut next_ll = lik.log_likelihood(&next_probs);
        if next_ll < current - MONOTONE_SLACK {
            diag.diluted_steps += 1;
            let mut eps = 1.0;
            let mut accepted = false;
            for _ in 0..MAX_DILUTIONS {
                let step = identity(m) + r.mapv(|z| z * eps);
                next = sandwich(&step, &rho);
                (next_probs, next_floored) = lik.probabilities(&next);
                next_ll = lik.log_likelihood(&next_probs);
                if next_ll >= current - MONOTONE_SLACK {
                    accepted = true;
                    break;
                }
                eps *= 0.5;
            }
            if !accepted {
                break;
            }
        }
        diag.iterations += 1;
        diag.probability_floored |= next_floored;
        let change = frobenius_distance(&next, &rho);
        rho = next;
        probs = next_probs;
        current = next_ll;
        diag.log_likelihood.push(current);
        if change <= tol {
            diag.converged = true;
            break;
        }
    }
    let (state, clipped_mass) = project_to_states(rho)?;
    diag.clipped_mass = clipped_mass;
    Ok(Estimate {
        state,
        diagnostics: diag,
    })
}

/// `½‖ρ − σ‖₁`.
pub fn trace_distance(rho: &QuantumState, sigma: &QuantumState) -> Result<f64> {
    let diff = Observable::new(rho.rho().matrix() - sigma.rho().matrix())?;
    Ok(0.5
        * eigen_hermitian(&diff)?
            .values
            .iter()
            .map(|v| v.abs())
            .sum::<f64>())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bridge::{joint_distribution, sample_outcomes};
    use crate::dilation::{build_dilation, regularize_with_shift};
    use crate::fixtures::{ket0, projector, tetrahedral_povm};
    use crate::operator::frobenius_norm;

    fn tetrahedral() -> RegularizedPovm {
        RegularizedPovm::prepare(&tetrahedral_povm(), 0.5).unwrap()
    }

    #[test]
    fn basis_is_orthonormal_and_traceless() {
        for m in 1..5 {
            let basis = traceless_hermitian_basis(m);
            assert_eq!(basis.len(), m * m - 1);
            for (a, x) in basis.iter().enumerate() {
                assert!(crate::operator::trace(x).norm() < 1e-15);
                for (b, y) in basis.iter().enumerate() {
                    let ip = trace_product(x, y);
                    let expected = if a == b { 1.0 } else { 0.0 };
                    assert!((ip - c(expected, 0.0)).norm() < 1e-15);
                }
            }
        }
    }

    #[test]
    fn linear_inversion_with_exact_frequencies() {
        let p = tetrahedral();
        let rho0 = projector(&[c(0.6, 0.0), c(0.0, 0.8)]);
        let freqs: Vec<f64> = p
            .elements()
            .iter()
            .map(|b| trace_product(rho0.matrix(), b.matrix()).re)
            .collect();
        let est = estimate_from_frequencies(&p, &freqs, Method::LinearInversion, 0, 0.0).unwrap();
        assert!(est.diagnostics.informationally_complete);
        assert!(frobenius_distance(est.state.rho().matrix(), rho0.matrix()) <= 1e-10);
    }

    #[test]
    fn uninformative_povm_gives_maximally_mixed() {
        let half = Observable::identity(2).scaled(0.5);
        let p = regularize_with_shift(&[half.clone(), half], 0.0).unwrap();
        for method in [Method::LinearInversion, Method::Em] {
            let ep = EstimationProblem {
                povm: p.clone(),
                counts: vec![10, 0],
                method,
                max_iters: 100,
                tol: 1e-12,
            };
            let est = estimate_state(&ep).unwrap();
            let mixed = QuantumState::maximally_mixed(2);
            assert!(
                frobenius_distance(est.state.rho().matrix(), mixed.rho().matrix()) < 1e-12,
                "{method:?}"
            );
        }
    }

    #[test]
    fn em_from_samples_is_monotone_and_close() {
        let p = tetrahedral();
        let d = build_dilation(&p).unwrap();
        let rho0 = QuantumState::new(ket0()).unwrap();
        let counts = sample_outcomes(&joint_distribution(&rho0, &d).unwrap(), 100_000, 42);
        let ep = EstimationProblem {
            povm: p,
            counts,
            method: Method::Em,
            max_iters: 5000,
            tol: 1e-10,
        };
        let est = estimate_state(&ep).unwrap();
        for w in est.diagnostics.log_likelihood.windows(2) {
            assert!(w[1] >= w[0] - 1e-12);
        }
        assert!(trace_distance(&est.state, &rho0).unwrap() <= 0.05);
        let trace: f64 = est.state.rho().trace();
        assert!((trace - 1.0).abs() < 1e-10);
        assert!(frobenius_norm(est.state.rho().matrix()) <= 1.0 + 1e-10);
    }

    #[test]
    fn count_length_is_checked() {
        let ep = EstimationProblem {
            povm: tetrahedral(),
            counts: vec![1, 2],
            method: Method::Em,
            max_iters: 1,
            tol: 0.0,
        };
        assert!(matches!(estimate_state(&ep), Err(Error::InvalidCounts(_))));
    }
}
