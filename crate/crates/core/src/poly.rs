//! Real polynomials in descending-power coefficient form.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::Result;
use crate::linalg;

/// Horner evaluation of `c[0] s^n + c[1] s^{n-1} + ... + c[n]`.
pub fn horner(coeffs: &[f64], s: Complex64) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for &c in coeffs {
        acc = acc * s + c;
    }
    acc
}

/// Drop leading zero coefficients; an all-zero input yields `[0.0]`.
pub fn trim(coeffs: &[f64]) -> Vec<f64> {
    match coeffs.iter().position(|c| *c != 0.0) {
        Some(i) => coeffs[i..].to_vec(),
        None => vec![0.0],
    }
}

pub fn degree(coeffs: &[f64]) -> usize {
    trim(coeffs).len() - 1
}

pub fn mul(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

pub fn add(a: &[f64], b: &[f64]) -> Vec<f64> {
    let n = a.len().max(b.len());
    let mut out = vec![0.0; n];
    for (i, x) in a.iter().enumerate() {
        out[n - a.len() + i] += x;
    }
    for (i, y) in b.iter().enumerate() {
        out[n - b.len() + i] += y;
    }
    out
}

pub fn scale(a: &[f64], k: f64) -> Vec<f64> {
    a.iter().map(|x| x * k).collect()
}

/// Monic real polynomial with the given roots. Complex roots must come in
/// conjugate pairs; the imaginary residue of the expansion is discarded.
pub fn from_roots(roots: &[Complex64]) -> Vec<f64> {
    let mut c = vec![Complex64::new(1.0, 0.0)];
    for r in roots {
        let mut next = vec![Complex64::new(0.0, 0.0); c.len() + 1];
        for (i, x) in c.iter().enumerate() {
            next[i] += x;
            next[i + 1] -= x * r;
        }
        c = next;
    }
    c.iter().map(|z| z.re).collect()
}

/// Roots from the eigenvalues of the companion matrix.
pub fn roots(coeffs: &[f64]) -> Result<Vec<Complex64>> {
    let c = trim(coeffs);
    let n = c.len() - 1;
    if n == 0 {
        return Ok(Vec::new());
    }
    let lead = c[0];
    let mut comp = DMatrix::<f64>::zeros(n, n);
    for j in 0..n {
        comp[(0, j)] = -c[j + 1] / lead;
    }
    for i in 1..n {
        comp[(i, i - 1)] = 1.0;
    }
    let mut r = linalg::real_eigenvalues(&comp)?;
    linalg::sort_complex(&mut r);
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn horner_matches_power_sum() {
        let c = [2.0, -3.0, 0.5, 7.0];
        let s = Complex64::new(0.3, -1.2);
        let direct = s.powi(3) * 2.0 - s.powi(2) * 3.0 + s * 0.5 + 7.0;
        assert!((horner(&c, s) - direct).norm() < 1e-12);
    }

    #[test]
    fn roots_round_trip() {
        let r = [Complex64::new(-1.0, 2.0), Complex64::new(-1.0, -2.0), Complex64::new(-0.5, 0.0)];
        let c = from_roots(&r);
        let back = roots(&c).unwrap();
        for z in r {
            assert!(back.iter().any(|b| (b - z).norm() < 1e-10));
        }
    }

    #[test]
    fn add_aligns_low_order_terms() {
        assert_eq!(add(&[1.0, 2.0, 3.0], &[5.0]), vec![1.0, 2.0, 8.0]);
        assert_eq!(mul(&[1.0, 1.0], &[1.0, -1.0]), vec![1.0, 0.0, -1.0]);
        assert_eq!(trim(&[0.0, 0.0, 2.0]), vec![2.0]);
    }
}
