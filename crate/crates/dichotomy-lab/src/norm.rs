//! Vector and induced operator norms.
//!
//! The coupled two-dimensional preset systems have exact norm identities in
//! the max norm, so the norm in use is configuration, not a constant. Every
//! report records which norm produced its numbers.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

/// Which norm to use for vectors and (induced) for operators.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum NormKind {
    /// Max norm on vectors; induced operator norm is the max absolute row sum.
    #[default]
    Max,
    /// Euclidean norm on vectors; induced operator norm is the largest
    /// singular value.
    Spectral,
}

impl NormKind {
    pub fn vector(&self, v: &DVector<f64>) -> f64 {
        match self {
            NormKind::Max => v.iter().fold(0.0, |acc, x| acc.max(x.abs())),
            NormKind::Spectral => v.norm(),
        }
    }

    pub fn operator(&self, m: &DMatrix<f64>) -> f64 {
        match self {
            NormKind::Max => (0..m.nrows())
                .map(|i| m.row(i).iter().map(|x| x.abs()).sum::<f64>())
                .fold(0.0, f64::max),
            NormKind::Spectral => {
                let sv = m.clone().singular_values();
                sv.iter().fold(0.0, |acc: f64, s| acc.max(*s))
            }
        }
    }
}

/// Frobenius distance between two matrices relative to `max(1, ||b||_F)`.
pub fn relative_frobenius(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).norm() / 1f64.max(b.norm())
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dmatrix;

    #[test]
    fn max_norm_is_row_sum() {
        let m = dmatrix![1.0, -2.0; 0.5, 0.25];
        assert_eq!(NormKind::Max.operator(&m), 3.0);
    }

    #[test]
    fn spectral_norm_of_diagonal_is_max_entry() {
        let m = dmatrix![3.0, 0.0; 0.0, -5.0];
        assert!((NormKind::Spectral.operator(&m) - 5.0).abs() < 1e-12);
    }

    #[test]
    fn vector_norms() {
        let v = DVector::from_vec(vec![3.0, -4.0]);
        assert_eq!(NormKind::Max.vector(&v), 4.0);
        assert!((NormKind::Spectral.vector(&v) - 5.0).abs() < 1e-12);
    }
}
