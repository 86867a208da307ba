//! The classical probability model carried by the commuting projectors.
//!
//! The sample space is the outcome index set `{0, …, k−1}` of the family
//! `{E_i}`. An element `Σ α_i E_i` of the Naimark space is the random
//! variable `i ↦ α_i`.

use std::collections::BTreeMap;

use num_complex::Complex64;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::config::Tolerances;
use crate::dilation::{
    build_dilation, resolve_general, trace_product, DilatedOperator, DilationSpace, RegularizedPovm,
};
use crate::error::{Error, Result};
use crate::model::conditional_observables;
use crate::operator::{eigen_hermitian, CMatrix, Observable};
use crate::report::Report;

/// A density matrix: PSD and unit trace within [`Tolerances::state`].
#[derive(Debug, Clone, PartialEq)]
pub struct QuantumState {
    rho: Observable,
}

impl QuantumState {
    pub fn new(rho: Observable) -> Result<Self> {
        let tol = Tolerances::default().state;
        let min = eigen_hermitian(&rho)?.min();
        if min < -tol {
            return Err(Error::InvalidState(format!(
                "not positive semidefinite (min eigenvalue {min:e})"
            )));
        }
        let tr = rho.trace();
        if (tr - 1.0).abs() > tol {
            return Err(Error::InvalidState(format!("trace {tr} is not 1")));
        }
        Ok(Self { rho })
    }

    pub fn maximally_mixed(m: usize) -> Self {
        Self {
            rho: Observable::identity(m).scaled(1.0 / m as f64),
        }
    }

    pub fn dim(&self) -> usize {
        self.rho.dim()
    }

    pub fn rho(&self) -> &Observable {
        &self.rho
    }
}

/// Outcome law `p_i = tr[ρ B̃_i]` of the projective family, plus named
/// random variables on it.
#[derive(Debug, Clone)]
pub struct JointDistribution {
    probs: Vec<f64>,
    variables: BTreeMap<String, Vec<Complex64>>,
    source: Vec<CMatrix>,
    shift: f64,
}

pub fn joint_distribution(s: &QuantumState, d: &DilationSpace) -> Result<JointDistribution> {
    if s.dim() != d.m() {
        return Err(Error::DimensionMismatch {
            expected: d.m(),
            found: s.dim(),
        });
    }
    let raw: Vec<f64> = d
        .source()
        .elements()
        .iter()
        .map(|b| trace_product(s.rho().matrix(), b.matrix()).re)
        .collect();
    let source = d
        .source()
        .elements()
        .iter()
        .map(|b| b.matrix().clone())
        .collect();
    JointDistribution::from_probabilities(raw, source, d.source().shift())
}

impl JointDistribution {
    /// Rounds probabilities in `(−clip, 0)` to zero and renormalizes; more
    /// negative entries are an error.
    fn from_probabilities(raw: Vec<f64>, source: Vec<CMatrix>, shift: f64) -> Result<Self> {
        let clip = Tolerances::default().probability_clip;
        let mut probs = Vec::with_capacity(raw.len());
        for (index, value) in raw.into_iter().enumerate() {
            if value < -clip || value.is_nan() {
                return Err(Error::NegativeProbability { index, value });
            }
            probs.push(value.max(0.0));
        }
        let total: f64 = probs.iter().sum();
        if total <= 0.0 {
            return Err(Error::InvalidState(
                "outcome probabilities sum to zero".into(),
            ));
        }
        probs.iter_mut().for_each(|p| *p /= total);
        Ok(Self {
            probs,
            variables: BTreeMap::new(),
            source,
            shift,
        })
    }

    pub fn k(&self) -> usize {
        self.probs.len()
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// Registers `u` (which must lie in the Naimark space) under `name`.
    pub fn add_variable(&mut self, name: impl Into<String>, u: &DilatedOperator) -> Result<()> {
        let values = random_variable_of(u)?;
        if values.len() != self.k() {
            return Err(Error::DimensionMismatch {
                expected: self.k(),
                found: values.len(),
            });
        }
        self.variables.insert(name.into(), values);
        Ok(())
    }

    pub fn variable(&self, name: &str) -> Option<&[Complex64]> {
        self.variables.get(name).map(Vec::as_slice)
    }

    pub fn variables(&self) -> impl Iterator<Item = (&str, &[Complex64])> {
        self.variables
            .iter()
            .map(|(k, v)| (k.as_str(), v.as_slice()))
    }

    /// `Σ_i p_i v_i`.
    pub fn expectation_of(&self, values: &[Complex64]) -> Complex64 {
        self.probs.iter().zip(values).map(|(p, v)| v * *p).sum()
    }

    pub fn expectation(&self, name: &str) -> Result<Complex64> {
        let values = self
            .variable(name)
            .ok_or_else(|| Error::UnknownObservable(name.to_string()))?;
        Ok(self.expectation_of(values))
    }
}

/// `q_i = (1 + k·a)·p_i − a`: the probabilities (possibly negative) of the
/// pre-regularization family.
pub fn unregularize_probabilities(jd: &JointDistribution, p: &RegularizedPovm) -> Result<Vec<f64>> {
    let same_source = jd.source.len() == p.k()
        && jd.shift == p.shift()
        && jd
            .source
            .iter()
            .zip(p.elements())
            .all(|(a, b)| a == b.matrix());
    if !same_source {
        return Err(Error::ProvenanceMismatch);
    }
    let (scale, a) = (p.scale(), p.shift());
    Ok(jd.probs.iter().map(|pi| scale * pi - a).collect())
}

/// Multinomial draw of `n` outcomes from `jd`.
///
/// The stream is ChaCha8 seeded through `seed_from_u64`; each draw is one
/// uniform `f64` mapped through the cumulative distribution (accumulated
/// with compensated summation).
pub fn sample_outcomes(jd: &JointDistribution, n: u64, seed: u64) -> Vec<u64> {
    let cdf = compensated_cdf(&jd.probs);
    let total = *cdf.last().unwrap_or(&1.0);
    let last_nonzero = jd.probs.iter().rposition(|p| *p > 0.0).unwrap_or(0);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut counts = vec![0u64; jd.k()];
    for _ in 0..n {
        let u: f64 = rng.gen::<f64>() * total;
        let i = cdf.partition_point(|c| *c <= u).min(last_nonzero);
        counts[i] += 1;
    }
    counts
}

fn compensated_cdf(probs: &[f64]) -> Vec<f64> {
    let mut sum = 0.0_f64;
    let mut carry = 0.0_f64;
    probs
        .iter()
        .map(|p| {
            let y = p - carry;
            let t = sum + y;
            carry = (t - sum) - y;
            sum = t;
            sum
        })
        .collect()
}

/// The value vector `v(i) = α_i` of `U = Σ α_i E_i`.
pub fn random_variable_of(u: &DilatedOperator) -> Result<Vec<Complex64>> {
    u.coefficients()
        .map(<[Complex64]>::to_vec)
        .ok_or(Error::NotInNaimarkSpace)
}

/// Resolves `A` and `B` in the Naimark space and compares the classical law
/// of `(v_A, v_B)` with the base-space statistics. Marginals carry verdicts;
/// correlation candidates are reported as data.
pub fn verify_correlation_structure(
    a: &Observable,
    b: &Observable,
    s: &QuantumState,
    p: &RegularizedPovm,
    tol: f64,
) -> Result<Report> {
    let d = build_dilation(p)?;
    let ua = resolve_general(a, p)?;
    let ub = resolve_general(b, p)?;
    let mut jd = joint_distribution(s, &d)?;
    jd.add_variable("A", &ua)?;
    jd.add_variable("B", &ub)?;
    let va = jd.variable("A").unwrap_or_default().to_vec();
    let vb = jd.variable("B").unwrap_or_default().to_vec();

    let rho = s.rho().matrix();
    let e_a = jd.expectation_of(&va).re;
    let e_b = jd.expectation_of(&vb).re;
    let born_a = trace_product(rho, a.matrix()).re;
    let born_b = trace_product(rho, b.matrix()).re;

    let product: Vec<Complex64> = va.iter().zip(&vb).map(|(x, y)| x * y).collect();
    let e_ab = jd.expectation_of(&product).re;
    let ab = a.matrix().dot(b.matrix());
    let tr_ab = trace_product(rho, &ab);
    let symmetrized = tr_ab.re;

    let mut report = Report::new("correlation_structure");
    report
        .bounded("marginal_a_deviation", (e_a - born_a).abs(), tol)
        .bounded("marginal_b_deviation", (e_b - born_b).abs(), tol)
        .info("classical_e_ab", e_ab)
        .info("quantum_symmetrized_ab", symmetrized)
        .info("quantum_ab_imaginary", tr_ab.im)
        .info("product_vs_symmetrized", (e_ab - symmetrized).abs());
    if let Ok(cond) = conditional_observables(a, b, s) {
        report.info("luders_pr_a_given_b", cond.pr_ab);
        report.info("luders_pr_b_given_a", cond.pr_ba);
        if e_b.abs() > 1e-12 {
            report.info("classical_ratio_a_given_b", e_ab / e_b);
        }
        if e_a.abs() > 1e-12 {
            report.info("classical_ratio_b_given_a", e_ab / e_a);
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dilation::{regularize, regularize_with_shift, RegularizedPovm};
    use crate::fixtures::{ket0, ket1, pauli_x, pauli_z, tetrahedral_povm};
    use crate::operator::c;

    fn tetra() -> (RegularizedPovm, DilationSpace) {
        let p = RegularizedPovm::prepare(&tetrahedral_povm(), 0.5).unwrap();
        let d = build_dilation(&p).unwrap();
        (p, d)
    }

    #[test]
    fn state_validation() {
        assert!(QuantumState::new(ket0()).is_ok());
        assert!(QuantumState::new(Observable::identity(2)).is_err());
        assert!(QuantumState::new(pauli_z()).is_err());
    }

    #[test]
    fn tetrahedral_distributions() {
        // Rank-one elements have null vectors, so the family is shifted:
        // a = 1.5 · ½, 1 + k·a = 4.
        let (p, d) = tetra();
        assert!((p.shift() - 0.75).abs() < 1e-15);
        assert!((p.scale() - 4.0).abs() < 1e-14);
        let jd = joint_distribution(&QuantumState::maximally_mixed(2), &d).unwrap();
        for pi in jd.probs() {
            assert!((pi - 0.25).abs() < 1e-15);
        }
        let jd = joint_distribution(&QuantumState::new(ket0()).unwrap(), &d).unwrap();
        let s = 1.0 / 3f64.sqrt();
        let expected = [
            (1.0 + s) / 4.0,
            (1.0 - s) / 4.0,
            (1.0 - s) / 4.0,
            (1.0 + s) / 4.0,
        ];
        for (pi, e) in jd.probs().iter().zip(expected) {
            assert!((pi - (e + 0.75) / 4.0).abs() < 1e-12);
        }
        let q = unregularize_probabilities(&jd, &p).unwrap();
        for (qi, e) in q.iter().zip(expected) {
            assert!((qi - e).abs() < 1e-12);
        }
    }

    #[test]
    fn halves_distribution() {
        let half = Observable::from_real_diag(&[0.5, 0.5]);
        let p = regularize(&[half.clone(), half], 0.5).unwrap();
        let d = build_dilation(&p).unwrap();
        let jd = joint_distribution(&QuantumState::new(ket0()).unwrap(), &d).unwrap();
        assert_eq!(jd.probs(), &[0.5, 0.5]);
        assert_eq!(unregularize_probabilities(&jd, &p).unwrap(), vec![0.5, 0.5]);
    }

    #[test]
    fn unregularize_recovers_negative_probability() {
        let p = regularize(
            &[
                Observable::from_real_diag(&[1.0, -1.0]),
                Observable::from_real_diag(&[0.0, 2.0]),
            ],
            0.5,
        )
        .unwrap();
        let d = build_dilation(&p).unwrap();
        let jd = joint_distribution(&QuantumState::new(ket1()).unwrap(), &d).unwrap();
        assert!((jd.probs()[0] - 2.0 / 7.0).abs() < 1e-15);
        let q = unregularize_probabilities(&jd, &p).unwrap();
        assert!((q[0] + 1.0).abs() < 1e-14);
        assert!((q.iter().sum::<f64>() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn unregularize_checks_provenance() {
        let (_, d) = tetra();
        let jd = joint_distribution(&QuantumState::new(ket0()).unwrap(), &d).unwrap();
        let other = regularize_with_shift(
            &[
                Observable::from_real_diag(&[1.0, 0.0]),
                Observable::from_real_diag(&[0.0, 1.0]),
            ],
            2.0,
        )
        .unwrap();
        assert_eq!(
            unregularize_probabilities(&jd, &other),
            Err(Error::ProvenanceMismatch)
        );
    }

    #[test]
    fn sampling_is_deterministic_and_exact_on_point_mass() {
        let (_, d) = tetra();
        let jd = joint_distribution(&QuantumState::maximally_mixed(2), &d).unwrap();
        assert_eq!(sample_outcomes(&jd, 1000, 9), sample_outcomes(&jd, 1000, 9));
        assert_ne!(
            sample_outcomes(&jd, 1000, 9),
            sample_outcomes(&jd, 1000, 10)
        );

        let point = JointDistribution::from_probabilities(vec![1.0, 0.0], vec![], 0.0).unwrap();
        assert_eq!(sample_outcomes(&point, 1000, 1), vec![1000, 0]);
        let point = JointDistribution::from_probabilities(vec![0.0, 1.0], vec![], 0.0).unwrap();
        assert_eq!(sample_outcomes(&point, 1000, 1), vec![0, 1000]);
    }

    #[test]
    fn tiny_negative_probability_is_clipped() {
        let jd = JointDistribution::from_probabilities(vec![-1e-13, 1.0], vec![], 0.0).unwrap();
        assert_eq!(jd.probs(), &[0.0, 1.0]);
        assert!(matches!(
            JointDistribution::from_probabilities(vec![-1e-9, 1.0], vec![], 0.0),
            Err(Error::NegativeProbability { index: 0, .. })
        ));
    }

    #[test]
    fn random_variable_examples() {
        let (_, d) = tetra();
        let e1 = DilatedOperator::classify(d.projectors()[0].clone(), 2, 0.0);
        assert_eq!(
            random_variable_of(&e1).unwrap(),
            vec![c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]
        );
        let general = DilatedOperator::general(d.projectors()[0].clone());
        assert_eq!(random_variable_of(&general), Err(Error::NotInNaimarkSpace));

        let p = regularize_with_shift(
            &[
                Observable::from_real_diag(&[1.0, 0.0]),
                Observable::from_real_diag(&[0.0, 1.0]),
            ],
            2.0,
        )
        .unwrap();
        let d = build_dilation(&p).unwrap();
        let e = crate::dilation::extend_observable_affine(0, &d).unwrap();
        assert_eq!(
            random_variable_of(&e).unwrap(),
            vec![c(3.0, 0.0), c(-2.0, 0.0)]
        );
    }

    #[test]
    fn correlation_examples() {
        let (p, _) = tetra();
        let id = Observable::identity(2);
        let mixed = QuantumState::maximally_mixed(2);
        let r = verify_correlation_structure(&id, &id, &mixed, &p, 1e-10).unwrap();
        assert!(r.passed(), "{r}");
        assert!((r.value("classical_e_ab").unwrap() - 1.0).abs() < 1e-10);

        let zero = QuantumState::new(ket0()).unwrap();
        let r = verify_correlation_structure(&pauli_z(), &id, &zero, &p, 1e-10).unwrap();
        assert!(r.passed(), "{r}");

        let r = verify_correlation_structure(&pauli_z(), &pauli_x(), &mixed, &p, 1e-10).unwrap();
        assert!(r.passed(), "{r}");
    }
}
