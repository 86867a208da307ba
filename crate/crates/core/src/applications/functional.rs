//! Polynomial functional equations over observables, evaluated on the base
//! space and on their commuting realizations.

use std::collections::BTreeMap;
use std::ops;

use num_complex::Complex64;

use crate::dilation::{resolve_coefficients, RegularizedPovm};
use crate::error::{Error, Result};
use crate::model::{compress_g, ExpandedSpace};
use crate::operator::{
    c, frobenius_distance, frobenius_norm, identity, tensor, CMatrix, Observable,
};
use crate::report::Report;
use crate::Tolerances;

#[derive(Debug, Clone, PartialEq)]
pub enum Scalar {
    Const(Complex64),
    Param(String),
}

/// Data observables are the `X` of `f(X, β) = 0`; a response leaf plays
/// the role of `Y` in `f(Y, X, β) = 0`. Both evaluate the same way.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LeafRole {
    Data,
    Response,
}

/// Expression tree of an observable polynomial.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Leaf {
        name: String,
        role: LeafRole,
    },
    /// A scalar standing for that multiple of the identity.
    Scalar(Scalar),
    Add(Box<Expr>, Box<Expr>),
    Scale(Scalar, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
}

impl Expr {
    pub fn obs(name: &str) -> Self {
        Expr::Leaf {
            name: name.into(),
            role: LeafRole::Data,
        }
    }

    pub fn response(name: &str) -> Self {
        Expr::Leaf {
            name: name.into(),
            role: LeafRole::Response,
        }
    }

    pub fn constant(x: f64) -> Self {
        Expr::Scalar(Scalar::Const(c(x, 0.0)))
    }

    pub fn param(name: &str) -> Self {
        Expr::Scalar(Scalar::Param(name.into()))
    }

    pub fn scale(self, s: Scalar) -> Self {
        Expr::Scale(s, Box::new(self))
    }

    pub fn pow(self, exponent: u32) -> Self {
        match exponent {
            0 => Expr::constant(1.0),
            1 => self,
            _ => self.clone() * self.pow(exponent - 1),
        }
    }

    /// Leaf names in first-appearance order.
    pub fn leaves(&self) -> Vec<(String, LeafRole)> {
        let mut out = Vec::new();
        self.collect_leaves(&mut out);
        out
    }

    fn collect_leaves(&self, out: &mut Vec<(String, LeafRole)>) {
        match self {
            Expr::Leaf { name, role } => {
                if !out.iter().any(|(n, _)| n == name) {
                    out.push((name.clone(), *role));
                }
            }
            Expr::Scalar(_) => {}
            Expr::Add(a, b) | Expr::Mul(a, b) => {
                a.collect_leaves(out);
                b.collect_leaves(out);
            }
            Expr::Scale(_, e) => e.collect_leaves(out),
        }
    }

    /// Evaluates with leaves mapped by `leaf`; every value must be `dim × dim`.
    pub fn evaluate(
        &self,
        dim: usize,
        leaf: &dyn Fn(&str) -> Result<CMatrix>,
        params: &BTreeMap<String, Complex64>,
    ) -> Result<CMatrix> {
        let scalar = |s: &Scalar| -> Result<Complex64> {
            match s {
                Scalar::Const(v) => Ok(*v),
                Scalar::Param(name) => params
                    .get(name)
                    .copied()
                    .ok_or_else(|| Error::UnboundParameter(name.clone())),
            }
        };
        match self {
            Expr::Leaf { name, .. } => {
                let m = leaf(name)?;
                if m.nrows() != dim || m.ncols() != dim {
                    return Err(Error::DimensionMismatch {
                        expected: dim,
                        found: m.nrows(),
                    });
                }
                Ok(m)
            }
            Expr::Scalar(s) => {
                let v = scalar(s)?;
                Ok(identity(dim).mapv(|z| z * v))
            }
            Expr::Add(a, b) => Ok(a.evaluate(dim, leaf, params)? + b.evaluate(dim, leaf, params)?),
            Expr::Scale(s, e) => {
                let v = scalar(s)?;
                Ok(e.evaluate(dim, leaf, params)?.mapv(|z| z * v))
            }
            Expr::Mul(a, b) => {
                let lhs = a.evaluate(dim, leaf, params)?;
                let rhs = b.evaluate(dim, leaf, params)?;
                Ok(lhs.dot(&rhs))
            }
        }
    }
}

impl ops::Add for Expr {
    type Output = Expr;
    fn add(self, rhs: Expr) -> Expr {
        Expr::Add(Box::new(self), Box::new(rhs))
    }
}

impl ops::Sub for Expr {
    type Output = Expr;
    fn sub(self, rhs: Expr) -> Expr {
        self + rhs.scale(Scalar::Const(c(-1.0, 0.0)))
    }
}

impl ops::Mul for Expr {
    type Output = Expr;
    fn mul(self, rhs: Expr) -> Expr {
        Expr::Mul(Box::new(self), Box::new(rhs))
    }
}

/// Evaluates `f` three ways and compares them:
///
/// * base: on the observables themselves;
/// * lifted: on their realizations `Σ c_i E_i` in the expanded dilation,
///   compressed by `G` afterwards;
/// * compressed: on the individually compressed realizations.
///
/// The verdict is lifted vs compressed. Base-space agreement is reported on
/// the `m × m` physical corner without a verdict, as is the tensor-lift
/// identity `f(X ⊗ I) = f(X) ⊗ I`.
pub fn lift_functional(
    f: &Expr,
    bindings: &BTreeMap<String, Observable>,
    params: &BTreeMap<String, Complex64>,
    p: &RegularizedPovm,
    e: &ExpandedSpace,
    tol: f64,
) -> Result<Report> {
    let m = p.m();
    let span_tol = Tolerances::default().span_residual;
    let mut lifted_leaves: BTreeMap<String, CMatrix> = BTreeMap::new();
    let mut compressed_leaves: BTreeMap<String, CMatrix> = BTreeMap::new();
    for (name, _) in f.leaves() {
        let x = bindings
            .get(&name)
            .ok_or_else(|| Error::UnknownObservable(name.clone()))?;
        let (coefficients, residual) = resolve_coefficients(x, p)?;
        let limit = span_tol * (1.0 + frobenius_norm(x.matrix()));
        if residual > limit {
            return Err(Error::SpanDeficient {
                residual,
                tol: limit,
            });
        }
        let u = e.naimark_element(coefficients.iter().map(|v| c(*v, 0.0)).collect())?;
        compressed_leaves.insert(name.clone(), compress_g(u.matrix(), e)?);
        lifted_leaves.insert(name, u.matrix().clone());
    }

    let lookup = |map: &BTreeMap<String, CMatrix>, name: &str| {
        map.get(name)
            .cloned()
            .ok_or_else(|| Error::UnknownObservable(name.to_string()))
    };
    let base_leaf = |name: &str| {
        bindings
            .get(name)
            .map(|o| o.matrix().clone())
            .ok_or_else(|| Error::UnknownObservable(name.to_string()))
    };

    let base = f.evaluate(m, &base_leaf, params)?;
    let lifted_full = f.evaluate(e.n(), &|name| lookup(&lifted_leaves, name), params)?;
    let lifted = compress_g(&lifted_full, e)?;
    let compressed = f.evaluate(
        e.m() * e.k(),
        &|name| lookup(&compressed_leaves, name),
        params,
    )?;

    let corner = |x: &CMatrix| x.slice(ndarray::s![..m, ..m]).to_owned();
    let k = e.k();
    let tensor_leaf = |name: &str| base_leaf(name).map(|x| tensor(&x, &identity(k)));
    let tensor_lift = f.evaluate(m * k, &tensor_leaf, params)?;
    let tensor_deviation = frobenius_distance(&tensor_lift, &tensor(&base, &identity(k)));

    let mut report = Report::new("lift_functional");
    report
        .bounded(
            "lifted_vs_compressed",
            frobenius_distance(&lifted, &compressed),
            tol,
        )
        .info(
            "lifted_vs_compressed_corner",
            frobenius_distance(&corner(&lifted), &corner(&compressed)),
        )
        .info(
            "base_vs_lifted_corner",
            frobenius_distance(&base, &corner(&lifted)),
        )
        .info(
            "base_vs_compressed_corner",
            frobenius_distance(&base, &corner(&compressed)),
        )
        .info("tensor_lift_deviation", tensor_deviation)
        .info("base_norm", frobenius_norm(&base));
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn leaves_are_deduplicated() {
        let f = Expr::obs("X") * Expr::obs("X") + Expr::response("Y");
        assert_eq!(
            f.leaves(),
            vec![
                ("X".to_string(), LeafRole::Data),
                ("Y".to_string(), LeafRole::Response)
            ]
        );
    }

    #[test]
    fn unbound_parameter_is_an_error() {
        let f = Expr::obs("X") - Expr::param("beta");
        let leaf = |_: &str| Ok(identity(2));
        let err = f.evaluate(2, &leaf, &BTreeMap::new()).unwrap_err();
        assert_eq!(err, Error::UnboundParameter("beta".into()));
    }

    #[test]
    fn evaluation_of_affine_and_square() {
        let x = crate::operator::real_matrix(&[&[1.0, 2.0], &[2.0, -1.0]]);
        let leaf = |_: &str| Ok(x.clone());
        let mut params = BTreeMap::new();
        params.insert("beta".to_string(), c(3.0, 0.0));
        let f = Expr::obs("X") - Expr::param("beta");
        let v = f.evaluate(2, &leaf, &params).unwrap();
        assert_eq!(v, &x - &identity(2).mapv(|z| z * 3.0));
        let sq = Expr::obs("X").pow(2).evaluate(2, &leaf, &params).unwrap();
        assert_eq!(sq, x.dot(&x));
    }

    fn setup() -> (RegularizedPovm, ExpandedSpace, BTreeMap<String, Observable>) {
        let p = RegularizedPovm::prepare(&crate::fixtures::tetrahedral_povm(), 0.5).unwrap();
        let e = crate::model::build_expanded(&p).unwrap();
        let mut bindings = BTreeMap::new();
        bindings.insert("X".to_string(), crate::fixtures::pauli_z());
        bindings.insert("Y".to_string(), crate::fixtures::pauli_x());
        (p, e, bindings)
    }

    #[test]
    fn affine_functional_lifts_exactly() {
        let (p, e, bindings) = setup();
        let mut params = BTreeMap::new();
        params.insert("beta".to_string(), c(1.0, 0.0));
        let f = Expr::obs("X") - Expr::param("beta");
        let r = lift_functional(&f, &bindings, &params, &p, &e, 1e-10).unwrap();
        assert!(r.value("lifted_vs_compressed").unwrap() <= 1e-12, "{r}");
    }

    #[test]
    fn square_commutes_with_compression() {
        let (p, e, bindings) = setup();
        let f = Expr::obs("X").pow(2);
        let r = lift_functional(&f, &bindings, &BTreeMap::new(), &p, &e, 1e-12).unwrap();
        assert!(r.passed(), "{r}");
        assert_eq!(r.value("tensor_lift_deviation"), Some(0.0));
    }

    #[test]
    fn mixed_polynomial_passes() {
        let (p, e, bindings) = setup();
        let mut params = BTreeMap::new();
        params.insert("beta".to_string(), c(0.3, 0.0));
        let f = Expr::obs("X") * Expr::response("Y")
            + Expr::obs("Y").pow(3).scale(Scalar::Param("beta".into()))
            - Expr::constant(2.0);
        let r = lift_functional(&f, &bindings, &params, &p, &e, 1e-10).unwrap();
        assert!(r.passed(), "{r}");
        assert!(r.value("tensor_lift_deviation").unwrap() <= 1e-15);
    }

    #[test]
    fn unbound_leaf_is_reported() {
        let (p, e, bindings) = setup();
        let f = Expr::obs("Q");
        let err = lift_functional(&f, &bindings, &BTreeMap::new(), &p, &e, 1e-10).unwrap_err();
        assert_eq!(err, Error::UnknownObservable("Q".into()));
    }
}
