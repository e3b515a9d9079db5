//! Direct solver for tridiagonal linear systems (Thomas algorithm as an LU
//! factorization that can be reused across many right-hand sides).
//!
//! No pivoting: every caller in this crate builds diagonally dominant or
//! symmetric-positive-definite systems, for which elimination in natural
//! order is backward stable. A vanishing pivot is reported as an error
//! rather than silently producing infinities.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{CoreError, Result};

/// Tridiagonal matrix in banded storage: `sub[i]` couples row `i` to
/// `i - 1` (entry 0 unused), `sup[i]` couples row `i` to `i + 1` (last entry
/// unused).
#[derive(Debug, Clone)]
pub struct Tridiagonal {
    pub sub: Vec<f64>,
    pub diag: Vec<f64>,
    pub sup: Vec<f64>,
}

impl Tridiagonal {
    pub fn zeros(n: usize) -> Self {
        Tridiagonal {
            sub: vec![0.0; n],
            diag: vec![0.0; n],
            sup: vec![0.0; n],
        }
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    /// Matrix-vector product `A x` (used for residual checks).
    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let n = self.len();
        let mut y = vec![0.0; n];
        for i in 0..n {
            let mut acc = self.diag[i] * x[i];
            if i > 0 {
                acc += self.sub[i] * x[i - 1];
            }
            if i + 1 < n {
                acc += self.sup[i] * x[i + 1];
            }
            y[i] = acc;
        }
        y
    }

    /// Eliminate once; the factor solves any number of right-hand sides.
    pub fn factor(&self) -> Result<TridiagonalFactor> {
        let n = self.len();
        if n == 0 {
            return Err(CoreError::numerical("empty tridiagonal system"));
        }
        let mut mult = vec![0.0; n];
        let mut pivot = vec![0.0; n];
        pivot[0] = self.diag[0];
        if pivot[0] == 0.0 {
            return Err(CoreError::numerical("zero pivot in tridiagonal solve"));
        }
        for i in 1..n {
            mult[i] = self.sub[i] / pivot[i - 1];
            pivot[i] = self.diag[i] - mult[i] * self.sup[i - 1];
            if pivot[i] == 0.0 || !pivot[i].is_finite() {
                return Err(CoreError::numerical("zero pivot in tridiagonal solve"));
            }
        }
        Ok(TridiagonalFactor {
            mult,
            pivot,
            sup: self.sup.clone(),
        })
    }
}

/// LU factorization of a [`Tridiagonal`]; reusable across right-hand sides.
#[derive(Debug, Clone)]
pub struct TridiagonalFactor {
    mult: Vec<f64>,
    pivot: Vec<f64>,
    sup: Vec<f64>,
}

impl TridiagonalFactor {
    pub fn solve_in_place(&self, rhs: &mut [f64]) {
        let n = self.pivot.len();
        debug_assert_eq!(rhs.len(), n);
        for i in 1..n {
            rhs[i] -= self.mult[i] * rhs[i - 1];
        }
        rhs[n - 1] /= self.pivot[n - 1];
        for i in (0..n - 1).rev() {
            rhs[i] = (rhs[i] - self.sup[i] * rhs[i + 1]) / self.pivot[i];
        }
    }

    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let mut x = rhs.to_vec();
        self.solve_in_place(&mut x);
        x
    }
}
