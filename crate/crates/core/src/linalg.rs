//! Small dense complex matrices for characteristic matrices and their null
//! vectors.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

pub type CMat = DMatrix<Complex64>;
pub type CVec = DVector<Complex64>;

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn real_matrix<const N: usize>(m: &[[f64; N]; N]) -> CMat {
    CMat::from_fn(N, N, |i, j| c(m[i][j], 0.0))
}

/// `lambda I - A - sum_k exp(-lambda tau_k) B_k`.
pub fn characteristic_matrix(lambda: Complex64, a: &CMat, delayed: &[(f64, CMat)]) -> CMat {
    let n = a.nrows();
    let mut m = CMat::identity(n, n) * lambda - a;
    for (tau, b) in delayed {
        m -= b * (-lambda * *tau).exp();
    }
    m
}

/// `d/dlambda` of the characteristic matrix: `I + sum_k tau_k exp(-lambda tau_k) B_k`.
pub fn characteristic_matrix_derivative(lambda: Complex64, n: usize, delayed: &[(f64, CMat)]) -> CMat {
    let mut m = CMat::identity(n, n);
    for (tau, b) in delayed {
        m += b * ((-lambda * *tau).exp() * *tau);
    }
    m
}

/// Right singular vector for the smallest singular value, with that value.
pub fn null_vector(m: &CMat) -> (CVec, f64) {
    let svd = m.clone().svd(false, true);
    let v_t = svd.v_t.expect("requested V^T");
    let (idx, smin) = svd
        .singular_values
        .iter()
        .enumerate()
        .fold((0, f64::INFINITY), |acc, (i, &s)| if s < acc.1 { (i, s) } else { acc });
    let row = v_t.row(idx);
    let v = CVec::from_iterator(m.ncols(), row.iter().map(|z| z.conj()));
    (v, smin)
}

pub fn solve(m: &CMat, rhs: &CVec) -> Option<CVec> {
    m.clone().lu().solve(rhs)
}

pub fn inf_norm(v: &CVec) -> f64 {
    v.iter().fold(0.0_f64, |acc, z| acc.max(z.norm()))
}

/// Reciprocal condition estimate in the 2-norm (smallest / largest singular value).
pub fn rcond(m: &CMat) -> f64 {
    let s = m.clone().singular_values();
    let max = s.iter().cloned().fold(0.0_f64, f64::max);
    let min = s.iter().cloned().fold(f64::INFINITY, f64::min);
    if max == 0.0 {
        0.0
    } else {
        min / max
    }
}
