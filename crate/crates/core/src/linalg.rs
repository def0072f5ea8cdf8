//! Dense linear-algebra helpers built on nalgebra.

use nalgebra::{DMatrix, DVector, Schur};
use num_complex::Complex64;

use crate::error::{Error, Result};

const SCHUR_MAX_ITER: usize = 10_000;

/// Singular value decomposition with descending singular values and
/// canonical signs: the largest-magnitude entry of every left singular
/// vector is made nonnegative, with the matching right vector flipped too.
pub struct RealSvd {
    pub u: DMatrix<f64>,
    pub singular_values: DVector<f64>,
    pub v_t: DMatrix<f64>,
}

pub fn svd(m: &DMatrix<f64>) -> RealSvd {
    let svd = m.clone().svd(true, true);
    let mut u = svd.u.expect("requested U");
    let mut v_t = svd.v_t.expect("requested V^T");
    let s = svd.singular_values;
    for k in 0..s.len() {
        let col = u.column(k);
        let (mut best, mut best_abs) = (0.0, -1.0);
        for x in col.iter() {
            if x.abs() > best_abs {
                best_abs = x.abs();
                best = *x;
            }
        }
        if best < 0.0 {
            u.column_mut(k).neg_mut();
            v_t.row_mut(k).neg_mut();
        }
    }
    RealSvd {
        u,
        singular_values: s,
        v_t,
    }
}

pub fn singular_values(m: &DMatrix<f64>) -> Vec<f64> {
    if m.is_empty() {
        return Vec::new();
    }
    m.clone().singular_values().iter().copied().collect()
}

pub fn complex_singular_values(m: &DMatrix<Complex64>) -> Vec<f64> {
    if m.is_empty() {
        return Vec::new();
    }
    m.clone().singular_values().iter().copied().collect()
}

/// Count singular values above `tol` times the given scale.
pub fn numerical_rank(svals: &[f64], scale: f64, tol: f64) -> usize {
    if !(scale > 0.0) {
        return 0;
    }
    svals.iter().filter(|s| **s > tol * scale).count()
}

/// Solution of a complex least-squares problem together with the 2-norm
/// condition estimate of the system matrix.
pub struct LeastSquares {
    pub x: DVector<Complex64>,
    pub cond: f64,
}

/// Least squares `min ||A x - b||` through a Householder QR factorization.
pub fn complex_lstsq(a: DMatrix<Complex64>, b: &DVector<Complex64>) -> Result<LeastSquares> {
    let (m, n) = a.shape();
    if m < n {
        return Err(Error::InvalidArgument(format!(
            "least squares needs at least as many rows ({m}) as unknowns ({n})"
        )));
    }
    let qr = a.qr();
    let qtb = qr.q().adjoint() * b;
    let r = qr.r();
    let sv = complex_singular_values(&r);
    let smax = sv.iter().cloned().fold(0.0, f64::max);
    let smin = sv.iter().cloned().fold(f64::INFINITY, f64::min);
    let cond = if smin > 0.0 { smax / smin } else { f64::INFINITY };
    if !cond.is_finite() {
        return Ok(LeastSquares {
            x: DVector::zeros(n),
            cond,
        });
    }
    let x = r
        .solve_upper_triangular(&qtb)
        .ok_or(Error::IllConditionedFit { cond })?;
    Ok(LeastSquares { x, cond })
}

/// Eigenvalues of a real square matrix.
pub fn real_eigenvalues(m: &DMatrix<f64>) -> Result<Vec<Complex64>> {
    if m.nrows() == 0 {
        return Ok(Vec::new());
    }
    if m.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidArgument("non-finite matrix entry".into()));
    }
    let schur = Schur::try_new(m.clone(), f64::EPSILON, SCHUR_MAX_ITER)
        .ok_or_else(|| Error::InvalidArgument("Schur iteration did not converge".into()))?;
    Ok(schur.complex_eigenvalues().iter().copied().collect())
}

/// Eigenvalues of a complex square matrix (diagonal of its complex Schur form).
pub fn complex_eigenvalues(m: &DMatrix<Complex64>) -> Result<Vec<Complex64>> {
    if m.nrows() == 0 {
        return Ok(Vec::new());
    }
    if m.iter().any(|x| !(x.re.is_finite() && x.im.is_finite())) {
        return Err(Error::InvalidArgument("non-finite matrix entry".into()));
    }
    if m.nrows() == 1 {
        return Ok(vec![m[(0, 0)]]);
    }
    let schur = Schur::try_new(m.clone(), f64::EPSILON, SCHUR_MAX_ITER)
        .ok_or_else(|| Error::InvalidArgument("Schur iteration did not converge".into()))?;
    let (_, t) = schur.unpack();
    Ok((0..t.nrows()).map(|i| t[(i, i)]).collect())
}

/// Finite generalized eigenvalues of the pencil `(A, E)`, i.e. the roots of
/// `det(sE - A)`, computed by shift-and-invert: with `T = (A - σE)^{-1} E`,
/// every nonzero eigenvalue `ν` of `T` gives a finite eigenvalue `σ + 1/ν`.
pub fn generalized_eigenvalues(a: &DMatrix<f64>, e: &DMatrix<f64>) -> Result<Vec<Complex64>> {
    let n = a.nrows();
    if n == 0 {
        return Ok(Vec::new());
    }
    let scale = a.norm().max(e.norm());
    if !(scale > 0.0) {
        return Err(Error::SingularPencil("zero pencil".into()));
    }
    let e_scale = e.norm();
    if e_scale == 0.0 {
        return Ok(Vec::new());
    }
    let ratio = a.norm() / e_scale;
    let shifts = [0.0, -0.731 * ratio, 0.517 * ratio, -1.913 * ratio, 2.371 * ratio];
    for &sigma in shifts.iter() {
        let shifted = a - e * sigma;
        let lu = shifted.clone().lu();
        let u = lu.u();
        let diag_max = (0..n).map(|i| u[(i, i)].abs()).fold(0.0, f64::max);
        let diag_min = (0..n).map(|i| u[(i, i)].abs()).fold(f64::INFINITY, f64::min);
        if !(diag_max > 0.0) || diag_min < 1e-13 * diag_max {
            continue;
        }
        let t = match lu.solve(e) {
            Some(t) => t,
            None => continue,
        };
        let nu = real_eigenvalues(&t)?;
        let nu_max = nu.iter().map(|z| z.norm()).fold(0.0, f64::max);
        if nu_max == 0.0 {
            return Ok(Vec::new());
        }
        let mut out: Vec<Complex64> = nu
            .iter()
            .filter(|z| z.norm() > 1e-10 * nu_max)
            .map(|z| Complex64::new(sigma, 0.0) + z.inv())
            .collect();
        sort_complex(&mut out);
        return Ok(out);
    }
    Err(Error::SingularPencil(
        "sE - A is singular at every probe shift".into(),
    ))
}

/// Sort by real part, then imaginary part.
pub fn sort_complex(v: &mut [Complex64]) {
    v.sort_by(|a, b| {
        a.re
            .partial_cmp(&b.re)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.im.partial_cmp(&b.im).unwrap_or(std::cmp::Ordering::Equal))
    });
}

/// Make a list of roots of a real polynomial exactly conjugate-symmetric:
/// nearly real entries become real and complex entries are paired with the
/// nearest conjugate and averaged.
pub fn pair_conjugates(roots: &[Complex64], rel_tol: f64) -> Vec<Complex64> {
    let mut out = Vec::with_capacity(roots.len());
    let mut used = vec![false; roots.len()];
    for i in 0..roots.len() {
        if used[i] {
            continue;
        }
        used[i] = true;
        let p = roots[i];
        let scale = p.norm().max(f64::MIN_POSITIVE);
        if p.im.abs() <= rel_tol * scale {
            out.push(Complex64::new(p.re, 0.0));
            continue;
        }
        let partner = (0..roots.len())
            .filter(|&j| !used[j])
            .min_by(|&a, &b| {
                let da = (roots[a] - p.conj()).norm();
                let db = (roots[b] - p.conj()).norm();
                da.partial_cmp(&db).unwrap_or(std::cmp::Ordering::Equal)
            });
        match partner {
            Some(j) => {
                used[j] = true;
                let avg = (p + roots[j].conj()) * 0.5;
                let upper = Complex64::new(avg.re, avg.im.abs());
                out.push(upper);
                out.push(upper.conj());
            }
            None => out.push(Complex64::new(p.re, 0.0)),
        }
    }
    out
}
