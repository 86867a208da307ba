//! Standard operator families and seeded random instances.

use ndarray::Array2;
use rand::Rng;

use crate::dilation::{complete_to_identity, regularize, RegularizedPovm};
use crate::operator::{c, dagger, eigen_hermitian, identity, outer, CMatrix, CVector, Observable};

pub fn pauli_x() -> Observable {
    Observable::new(crate::operator::real_matrix(&[&[0.0, 1.0], &[1.0, 0.0]])).unwrap()
}

pub fn pauli_y() -> Observable {
    let mut m = crate::operator::zeros(2);
    m[[0, 1]] = c(0.0, -1.0);
    m[[1, 0]] = c(0.0, 1.0);
    Observable::new(m).unwrap()
}

pub fn pauli_z() -> Observable {
    Observable::from_real_diag(&[1.0, -1.0])
}

/// `|ψ⟩⟨ψ|` for a normalized copy of `psi`.
pub fn projector(psi: &[num_complex::Complex64]) -> Observable {
    let v = CVector::from(psi.to_vec());
    let norm: f64 = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let v = v.mapv(|z| z / norm);
    Observable::new(outer(&v, &v)).unwrap()
}

pub fn ket0() -> Observable {
    Observable::from_real_diag(&[1.0, 0.0])
}

pub fn ket1() -> Observable {
    Observable::from_real_diag(&[0.0, 1.0])
}

pub fn ket_plus() -> Observable {
    projector(&[c(1.0, 0.0), c(1.0, 0.0)])
}

pub fn ket_minus() -> Observable {
    projector(&[c(1.0, 0.0), c(-1.0, 0.0)])
}

/// Unit tetrahedron directions `(1,1,1), (1,−1,−1), (−1,1,−1), (−1,−1,1)` over `√3`.
pub fn tetrahedral_directions() -> [[f64; 3]; 4] {
    let s = 1.0 / 3f64.sqrt();
    [[s, s, s], [s, -s, -s], [-s, s, -s], [-s, -s, s]]
}

/// The qubit POVM `¼(I + v_i·σ)` over [`tetrahedral_directions`].
pub fn tetrahedral_povm() -> Vec<Observable> {
    let (x, y, z) = (pauli_x(), pauli_y(), pauli_z());
    tetrahedral_directions()
        .iter()
        .map(|v| {
            let m = identity(2)
                + x.matrix().mapv(|e| e * v[0])
                + y.matrix().mapv(|e| e * v[1])
                + z.matrix().mapv(|e| e * v[2]);
            Observable::new(m.mapv(|e| e * 0.25)).unwrap()
        })
        .collect()
}

pub fn random_matrix(rng: &mut impl Rng, m: usize) -> CMatrix {
    Array2::from_shape_fn((m, m), |_| {
        c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
    })
}

pub fn random_hermitian(rng: &mut impl Rng, m: usize) -> Observable {
    let g = random_matrix(rng, m);
    Observable::new((&g + &dagger(&g)).mapv(|z| z * 0.5)).unwrap()
}

/// Full-rank density matrix `G G† / tr`.
pub fn random_state(rng: &mut impl Rng, m: usize) -> Observable {
    let g = random_matrix(rng, m);
    let gg = g.dot(&dagger(&g));
    let tr = crate::operator::trace(&gg).re;
    Observable::new(hermitize(gg.mapv(|z| z / tr))).unwrap()
}

/// `k − 1` random Hermitian operators completed by `I − Σ`.
pub fn random_completed_family(rng: &mut impl Rng, m: usize, k: usize) -> Vec<Observable> {
    let partial: Vec<Observable> = (0..k - 1).map(|_| random_hermitian(rng, m)).collect();
    if partial.is_empty() {
        return vec![Observable::identity(m)];
    }
    complete_to_identity(&partial, 0.0).unwrap()
}

/// Random full-rank POVM: `S^{-1/2} G_i S^{-1/2}` with `S = Σ G_i`.
pub fn random_povm(rng: &mut impl Rng, m: usize, k: usize) -> Vec<Observable> {
    let gs: Vec<CMatrix> = (0..k)
        .map(|_| {
            let g = random_matrix(rng, m);
            g.dot(&dagger(&g))
        })
        .collect();
    let total = gs.iter().fold(crate::operator::zeros(m), |acc, g| acc + g);
    let inv_sqrt = eigen_hermitian(&Observable::new(hermitize(total)).unwrap())
        .unwrap()
        .map(|x| 1.0 / x.sqrt());
    let mut elements: Vec<Observable> = gs
        .iter()
        .map(|g| Observable::new(hermitize(inv_sqrt.dot(g).dot(&inv_sqrt))).unwrap())
        .collect();
    // Put the rounding residual into the last element so the family sums to I.
    let head = elements[..k - 1]
        .iter()
        .fold(crate::operator::zeros(m), |acc, e| acc + e.matrix());
    elements[k - 1] = Observable::new(hermitize(identity(m) - head)).unwrap();
    elements
}

/// Random rank-`rank` orthogonal projector.
pub fn random_projector(rng: &mut impl Rng, m: usize, rank: usize) -> Observable {
    let spectrum = eigen_hermitian(&random_hermitian(rng, m)).unwrap();
    let mut p = crate::operator::zeros(m);
    for l in 0..rank {
        let v = spectrum.vector(l);
        p += &outer(&v, &v);
    }
    Observable::new(hermitize(p)).unwrap()
}

/// Completed random family, regularized with the default margin.
pub fn random_regularized(rng: &mut impl Rng, m: usize, k: usize) -> RegularizedPovm {
    let family = random_completed_family(rng, m, k);
    regularize(&family, 0.5).unwrap()
}

pub(crate) fn hermitize(m: CMatrix) -> CMatrix {
    (&m + &dagger(&m)).mapv(|z| z * 0.5)
}
