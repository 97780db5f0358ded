//! Extreme-parameter matrices of the almost Mathieu operator and their
//! eigenvalues.
//!
//! At `theta = p/q` the operator `u + u* + (lambda/2)(v + v*)` is represented
//! by the `q x q` matrices `z1 U + conj(z1) U* + (lambda/2)(z2 V + conj(z2) V*)`
//! with `|z1| = |z2| = 1`. The band edges come from the two parameter choices
//! that push the constant term of the characteristic polynomial to its
//! extremes. For those choices the off-diagonal phases can be gauged onto a
//! single wrap-around entry, leaving a real symmetric periodic tridiagonal
//! matrix with unit off-diagonal and a `+1` or `-1` corner.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::rational::Rational;

/// Off-diagonal coupling of the gauge-reduced matrices.
pub const OFF_DIAGONAL: f64 = 1.0;

/// Largest denominator accepted by [`chambers_invariance_check`].
pub const ORACLE_MAX_Q: i64 = 64;

/// Which extreme of the representation parameters to build.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Extreme {
    /// `z1 = z2 = 1`: constant term at its maximum.
    Max,
    /// `z1 = z2 = exp(i pi / q)`: constant term at its minimum.
    Min,
}

/// Real symmetric matrix with diagonal `diag`, unit off-diagonal and a
/// wrap-around coupling `corner` between the first and last sites.
///
/// For `q = 1` the two wraps land on the diagonal (`d + 2c`); for `q = 2` the
/// off-diagonal and the corner share a slot (`1 + c`).
#[derive(Debug, Clone, PartialEq)]
pub struct PeriodicTridiagonal {
    diag: Vec<f64>,
    corner: f64,
}

impl PeriodicTridiagonal {
    pub fn new(diag: Vec<f64>, corner: f64) -> Result<Self> {
        if diag.is_empty() {
            return Err(Error::InvalidArgument("matrix must have at least one row".into()));
        }
        if corner != 1.0 && corner != -1.0 {
            return Err(Error::InvalidArgument(format!("corner must be +1 or -1, got {corner}")));
        }
        if diag.iter().any(|d| !d.is_finite()) {
            return Err(Error::InvalidArgument("diagonal entries must be finite".into()));
        }
        Ok(PeriodicTridiagonal { diag, corner })
    }

    pub fn size(&self) -> usize {
        self.diag.len()
    }

    pub fn diag(&self) -> &[f64] {
        &self.diag
    }

    pub fn corner(&self) -> f64 {
        self.corner
    }

    /// Dense representation with the small-`q` wrap conventions applied.
    pub fn to_dense(&self) -> DMatrix<f64> {
        let n = self.size();
        let mut m = DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(&self.diag));
        match n {
            1 => m[(0, 0)] += 2.0 * self.corner,
            _ => {
                for k in 0..n - 1 {
                    m[(k, k + 1)] += OFF_DIAGONAL;
                    m[(k + 1, k)] += OFF_DIAGONAL;
                }
                m[(0, n - 1)] += self.corner;
                m[(n - 1, 0)] += self.corner;
            }
        }
        m
    }
}

pub(crate) fn check_coupling(lambda: f64) -> Result<()> {
    if lambda.is_finite() && lambda > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidCoupling(lambda))
    }
}

/// Builds the gauge-reduced matrix for one extreme at `theta = p/q`.
///
/// `Max` has `diag_k = lambda cos(2 pi p k / q)` and corner `+1`; `Min` has
/// `diag_k = lambda cos(2 pi p k / q + pi / q)` and corner `-1`.
pub fn build_extreme_matrix(theta: Rational, lambda: f64, extreme: Extreme) -> Result<PeriodicTridiagonal> {
    check_coupling(lambda)?;
    let (p, q) = (theta.numer(), theta.denom());
    // Reduce p*k mod q in integers so that equal angles give bitwise equal cosines.
    let diag = (0..q)
        .map(|k| {
            let m = (p * k).rem_euclid(q) as f64;
            let angle = match extreme {
                Extreme::Max => 2.0 * PI * m / q as f64,
                Extreme::Min => PI * (2.0 * m + 1.0) / q as f64,
            };
            lambda * angle.cos()
        })
        .collect();
    let corner = match extreme {
        Extreme::Max => 1.0,
        Extreme::Min => -1.0,
    };
    PeriodicTridiagonal::new(diag, corner)
}

/// Sorted eigenvalues together with an a-posteriori error bound.
///
/// `residual_bound` is the largest `||M v - x v||` over the computed
/// eigenpairs; for a symmetric matrix each `x` is within that distance of a
/// true eigenvalue.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenList {
    pub values: Vec<f64>,
    pub residual_bound: f64,
}

/// Dense symmetric eigensolver with an accuracy gate.
#[derive(Debug, Clone, Copy)]
pub struct EigenSolver {
    /// Accepted residual, relative to the spectral radius.
    pub rel_tol: f64,
    /// Largest accepted matrix size.
    pub max_size: usize,
    pub max_iterations: usize,
}

impl Default for EigenSolver {
    fn default() -> Self {
        EigenSolver { rel_tol: 1e-10, max_size: 512, max_iterations: 10_000 }
    }
}

impl EigenSolver {
    pub fn solve(&self, m: &PeriodicTridiagonal) -> Result<EigenList> {
        let n = m.size();
        if n > self.max_size {
            return Err(Error::TooLarge { size: n, max: self.max_size });
        }
        if n == 1 {
            return Ok(EigenList { values: vec![m.diag[0] + 2.0 * m.corner], residual_bound: 0.0 });
        }
        let dense = m.to_dense();
        let eig = nalgebra::linalg::SymmetricEigen::try_new(dense.clone(), f64::EPSILON, self.max_iterations)
            .ok_or(Error::NotConverged { size: n, residual: f64::INFINITY })?;

        let mut residual = 0.0f64;
        for (i, &x) in eig.eigenvalues.iter().enumerate() {
            let v = eig.eigenvectors.column(i);
            let r = (&dense * v - v * x).norm() / v.norm();
            residual = residual.max(r);
        }
        let radius = eig.eigenvalues.iter().fold(0.0f64, |acc, x| acc.max(x.abs())).max(1.0);
        if !residual.is_finite() || residual > self.rel_tol * radius {
            return Err(Error::NotConverged { size: n, residual });
        }

        let mut values: Vec<f64> = eig.eigenvalues.iter().copied().collect();
        values.sort_by(f64::total_cmp);
        Ok(EigenList { values, residual_bound: residual })
    }
}

/// Eigenvalues with the default solver settings.
pub fn eigenvalues(m: &PeriodicTridiagonal) -> Result<EigenList> {
    EigenSolver::default().solve(m)
}

/// Full complex Hermitian representation at arbitrary unit-modulus `z1`, `z2`.
pub fn hermitian_representation(theta: Rational, lambda: f64, z1: Complex64, z2: Complex64) -> DMatrix<Complex64> {
    let q = theta.denom() as usize;
    let p = theta.numer();
    let half = lambda / 2.0;
    let mut m = DMatrix::<Complex64>::zeros(q, q);
    for k in 0..q {
        // U e_k = e_{k+1}: the cyclic shift and its adjoint.
        let next = (k + 1) % q;
        m[(next, k)] += z1;
        m[(k, next)] += z1.conj();
        let phase = 2.0 * PI * ((p * k as i64).rem_euclid(q as i64)) as f64 / q as f64;
        let w = Complex64::from_polar(1.0, phase);
        m[(k, k)] += (z2 * w + (z2 * w).conj()) * half;
    }
    m
}

/// Constant term `z1^q + z1^-q + (lambda/2)^q (z2^q + z2^-q)` of the
/// characteristic polynomial.
pub fn chambers_constant(q: i64, lambda: f64, z1: Complex64, z2: Complex64) -> f64 {
    let n = q as i32;
    let a = z1.powi(n) + z1.powi(-n);
    let b = z2.powi(n) + z2.powi(-n);
    (a + b * (lambda / 2.0).powi(n)).re
}

/// Checks that `det(x I - H(z1, z2)) + C(z1, z2)` does not depend on the
/// representation parameters.
///
/// Evaluates the quantity at fixed sample energies for `trials` random
/// unit-modulus pairs and returns the largest deviation from the `z1 = z2 = 1`
/// reference, divided by the scale `2 + 2 (lambda/2)^q` of the constant term.
pub fn chambers_invariance_check(theta: Rational, lambda: f64, trials: usize, seed: u64) -> Result<f64> {
    check_coupling(lambda)?;
    let q = theta.denom();
    if q > ORACLE_MAX_Q {
        return Err(Error::TooLarge { size: q as usize, max: ORACLE_MAX_Q as usize });
    }
    if trials == 0 {
        return Err(Error::InvalidArgument("trials must be at least 1".into()));
    }
    let width = 2.0 + lambda;
    let samples: Vec<f64> = [-0.93, -0.61, -0.27, 0.0, 0.18, 0.52, 0.87].iter().map(|c| c * width).collect();

    let invariant = |z1: Complex64, z2: Complex64, x: f64| -> f64 {
        let h = hermitian_representation(theta, lambda, z1, z2);
        let shifted = DMatrix::<Complex64>::identity(h.nrows(), h.ncols()) * Complex64::from(x) - h;
        shifted.determinant().re + chambers_constant(q, lambda, z1, z2)
    };

    let one = Complex64::new(1.0, 0.0);
    let reference: Vec<f64> = samples.iter().map(|&x| invariant(one, one, x)).collect();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for _ in 0..trials {
        let z1 = Complex64::from_polar(1.0, rng.random_range(0.0..2.0 * PI));
        let z2 = Complex64::from_polar(1.0, rng.random_range(0.0..2.0 * PI));
        for (&x, &r) in samples.iter().zip(&reference) {
            worst = worst.max((invariant(z1, z2, x) - r).abs());
        }
    }
    let scale = 2.0 + 2.0 * (lambda / 2.0).powi(q as i32);
    Ok(worst / scale)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(p: i64, q: i64) -> Rational {
        Rational::new(p, q).unwrap()
    }

    #[test]
    fn scalar_extremes() {
        let max = build_extreme_matrix(r(0, 1), 2.0, Extreme::Max).unwrap();
        assert_eq!(max.to_dense()[(0, 0)], 4.0);
        assert_eq!(eigenvalues(&max).unwrap().values, vec![4.0]);
        let min = build_extreme_matrix(r(0, 1), 2.0, Extreme::Min).unwrap();
        assert_eq!(min.to_dense()[(0, 0)], -4.0);
        assert_eq!(eigenvalues(&min).unwrap().values, vec![-4.0]);
    }

    #[test]
    fn half_frequency_max_matrix() {
        let m = build_extreme_matrix(r(1, 2), 2.0, Extreme::Max).unwrap();
        let d = m.to_dense();
        assert_eq!(d, DMatrix::from_row_slice(2, 2, &[2.0, 2.0, 2.0, -2.0]));
        let vals = eigenvalues(&m).unwrap().values;
        let s = 8f64.sqrt();
        assert!((vals[0] + s).abs() < 1e-12 && (vals[1] - s).abs() < 1e-12);
    }

    #[test]
    fn half_frequency_min_matrix_vanishes() {
        let m = build_extreme_matrix(r(1, 2), 2.0, Extreme::Min).unwrap();
        assert!(m.to_dense().iter().all(|x| x.abs() < 1e-15));
    }

    #[test]
    fn third_frequency_matches_hand_expansion() {
        let m = build_extreme_matrix(r(1, 3), 2.0, Extreme::Max).unwrap();
        let expect = DMatrix::from_row_slice(3, 3, &[2.0, 1.0, 1.0, 1.0, -1.0, 1.0, 1.0, 1.0, -1.0]);
        assert!((m.to_dense() - expect).norm() < 1e-12);
    }

    #[test]
    fn rejects_bad_coupling() {
        assert!(matches!(build_extreme_matrix(r(1, 3), 0.0, Extreme::Max), Err(Error::InvalidCoupling(_))));
        assert!(build_extreme_matrix(r(1, 3), f64::NAN, Extreme::Max).is_err());
    }

    #[test]
    fn rejects_bad_corner() {
        assert!(PeriodicTridiagonal::new(vec![0.0; 3], 0.5).is_err());
        assert!(PeriodicTridiagonal::new(vec![], 1.0).is_err());
    }

    #[test]
    fn solver_ceiling() {
        let solver = EigenSolver { max_size: 4, ..EigenSolver::default() };
        let m = build_extreme_matrix(r(1, 5), 2.0, Extreme::Max).unwrap();
        assert!(matches!(solver.solve(&m), Err(Error::TooLarge { size: 5, max: 4 })));
    }

    #[test]
    fn hermitian_representation_at_extremes_matches_gauge_form() {
        // Same spectrum for the complex matrix and its real gauge image.
        for (p, q) in [(1, 3), (2, 5), (3, 8)] {
            let th = r(p, q);
            let w = Complex64::from_polar(1.0, PI / q as f64);
            for (extreme, z) in [(Extreme::Max, Complex64::new(1.0, 0.0)), (Extreme::Min, w)] {
                let real = eigenvalues(&build_extreme_matrix(th, 2.0, extreme).unwrap()).unwrap().values;
                let h = hermitian_representation(th, 2.0, z, z);
                let mut cx: Vec<f64> = h.symmetric_eigenvalues().iter().copied().collect();
                cx.sort_by(f64::total_cmp);
                for (a, b) in real.iter().zip(&cx) {
                    assert!((a - b).abs() < 1e-10, "{p}/{q} {extreme:?}: {a} vs {b}");
                }
            }
        }
    }

    #[test]
    fn invariance_small_cases() {
        assert!(chambers_invariance_check(r(1, 2), 2.0, 10, 7).unwrap() < 1e-10);
        assert!(chambers_invariance_check(r(1, 3), 2.0, 10, 7).unwrap() < 1e-9);
        assert!(chambers_invariance_check(r(0, 1), 2.0, 5, 7).unwrap() < 1e-14);
        assert!(chambers_invariance_check(r(1, 65), 2.0, 1, 7).is_err());
    }
}
