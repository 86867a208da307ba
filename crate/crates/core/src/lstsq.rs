//! Minimum-norm real least squares, backed by nalgebra's SVD.

use nalgebra::{DMatrix, DVector};
use ndarray::Array2;

use crate::operator::CMatrix;

pub struct Solution {
    pub x: Vec<f64>,
    pub rank: usize,
}

/// Pseudoinverse solution of `a · x ≈ b`. Singular values below
/// `max(rows, cols) · ε · σ_max` are treated as zero.
pub fn min_norm(a: &Array2<f64>, b: &[f64]) -> Solution {
    let (rows, cols) = a.dim();
    let am = DMatrix::from_fn(rows, cols, |i, j| a[[i, j]]);
    let bv = DVector::from_column_slice(b);
    let svd = am.svd(true, true);
    let sigma_max = svd.singular_values.iter().copied().fold(0.0, f64::max);
    let cutoff = rows.max(cols) as f64 * f64::EPSILON * sigma_max;
    let rank = svd.singular_values.iter().filter(|s| **s > cutoff).count();
    let x = if sigma_max == 0.0 {
        vec![0.0; cols]
    } else {
        svd.solve(&bv, cutoff)
            .expect("both singular vector sets were requested")
            .iter()
            .copied()
            .collect()
    };
    Solution { x, rank }
}

/// Real coordinates of a complex matrix: real parts then imaginary parts,
/// row-major.
pub fn realify(m: &CMatrix) -> Vec<f64> {
    m.iter()
        .map(|z| z.re)
        .chain(m.iter().map(|z| z.im))
        .collect()
}

/// Column `j` of the result holds `realify(columns[j])`.
pub fn design_matrix<'a>(columns: impl ExactSizeIterator<Item = &'a CMatrix>) -> Array2<f64> {
    let cols: Vec<Vec<f64>> = columns.map(realify).collect();
    let rows = cols.first().map_or(0, Vec::len);
    Array2::from_shape_fn((rows, cols.len()), |(i, j)| cols[j][i])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rank_deficient_system_gets_minimum_norm() {
        // x0 + x1 = 2 has min-norm solution (1, 1).
        let a = Array2::from_shape_vec((1, 2), vec![1.0, 1.0]).unwrap();
        let s = min_norm(&a, &[2.0]);
        assert_eq!(s.rank, 1);
        assert!((s.x[0] - 1.0).abs() < 1e-14 && (s.x[1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn zero_matrix() {
        let a = Array2::zeros((3, 2));
        let s = min_norm(&a, &[1.0, 2.0, 3.0]);
        assert_eq!(s.rank, 0);
        assert_eq!(s.x, vec![0.0, 0.0]);
    }
}
