//! Loewner-framework interpolation of frequency-response samples.
//!
//! The samples are conjugate-closed and split into two point sets, from
//! which the Loewner matrix `L` and shifted Loewner matrix `Ls` are formed.
//! Because every conjugate pair sits inside one set, the block transform
//! `J = [[1, j], [1, −j]]/√2` on each pair makes both matrices real.
//!
//! A nonzero feedthrough `D` adds the rank-one term `D·1·1ᵀ` to `Ls`, which
//! raises the rank of `[L, Ls]` above the McMillan degree. `D` is therefore
//! estimated from the left null space of `L` and deflated before the rank
//! test and the realization:
//! `H(s) = C(sE − A)^{-1}B + D`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg;
use crate::plants::{AngularFrequencyGrid, FreqResponseData, RationalLti};

pub const DEFAULT_TOL: f64 = 1e-10;

/// Interpolation points split into the `μ` (row) and `λ` (column) sets.
#[derive(Debug, Clone, PartialEq)]
pub struct PointPartition {
    pub mu: Vec<Complex64>,
    pub v: Vec<Complex64>,
    pub lambda: Vec<Complex64>,
    pub w: Vec<Complex64>,
}

impl PointPartition {
    fn conjugate_closed(&self) -> bool {
        let closed = |pts: &[Complex64], vals: &[Complex64]| {
            pts.len() % 2 == 0
                && pts
                    .chunks(2)
                    .zip(vals.chunks(2))
                    .all(|(p, v)| p[1] == p[0].conj() && v[1] == v[0].conj() && p[0].im != 0.0)
        };
        closed(&self.mu, &self.v) && closed(&self.lambda, &self.w)
    }
}

/// Conjugate-close the samples and deal the pairs alternately to `μ` and `λ`.
pub fn partition_points(kstar: &FreqResponseData) -> Result<PointPartition> {
    if kstar.len() < 4 {
        return Err(Error::InvalidArgument(format!(
            "need at least 4 samples to partition, got {}",
            kstar.len()
        )));
    }
    let mut p = PointPartition {
        mu: Vec::new(),
        v: Vec::new(),
        lambda: Vec::new(),
        w: Vec::new(),
    };
    for (i, (&om, &h)) in kstar.omegas().iter().zip(kstar.samples()).enumerate() {
        let s = Complex64::new(0.0, om);
        let (pts, vals) = if i % 2 == 0 {
            (&mut p.mu, &mut p.v)
        } else {
            (&mut p.lambda, &mut p.w)
        };
        pts.extend([s, s.conj()]);
        vals.extend([h, h.conj()]);
    }
    Ok(p)
}

/// Real transformed and deflated pencil with the SVD factors of the
/// realization.
#[derive(Debug, Clone)]
struct RealPencil {
    l: DMatrix<f64>,
    ls_deflated: DMatrix<f64>,
    v_deflated: DVector<f64>,
    w_deflated: DVector<f64>,
    y: DMatrix<f64>,
    x: DMatrix<f64>,
}

/// Loewner pencil with its singular-value spectra.
#[derive(Debug, Clone)]
pub struct LoewnerPencil {
    pub l: DMatrix<Complex64>,
    pub ls: DMatrix<Complex64>,
    pub v: Vec<Complex64>,
    pub w: Vec<Complex64>,
    pub mu: Vec<Complex64>,
    pub lambda: Vec<Complex64>,
    /// Singular values of `[L, Ls − D·1·1ᵀ]`, descending.
    pub svals_stacked: Vec<f64>,
    /// Singular values of `[L; Ls − D·1·1ᵀ]`, descending.
    pub svals_concat: Vec<f64>,
    /// Estimated feedthrough `D`.
    pub feedthrough: f64,
    /// Largest imaginary residue after real-ification, relative to the entries.
    pub realness_defect: f64,
    raw_scale: f64,
    real: Option<RealPencil>,
}

fn realify_rows(m: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    let r = std::f64::consts::FRAC_1_SQRT_2;
    let j = Complex64::new(0.0, 1.0);
    let mut out = m.clone();
    for k in (0..m.nrows()).step_by(2) {
        for c in 0..m.ncols() {
            let (a, b) = (m[(k, c)], m[(k + 1, c)]);
            out[(k, c)] = (a + b) * r;
            out[(k + 1, c)] = j * (b - a) * r;
        }
    }
    out
}

fn realify_cols(m: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    let r = std::f64::consts::FRAC_1_SQRT_2;
    let j = Complex64::new(0.0, 1.0);
    let mut out = m.clone();
    for k in (0..m.ncols()).step_by(2) {
        for row in 0..m.nrows() {
            let (a, b) = (m[(row, k)], m[(row, k + 1)]);
            out[(row, k)] = (a + b) * r;
            out[(row, k + 1)] = j * (a - b) * r;
        }
    }
    out
}

/// Transformed all-ones vector `[√2, 0, √2, 0, …]`.
fn ones_realified(n: usize) -> DVector<f64> {
    DVector::from_fn(n, |i, _| if i % 2 == 0 { std::f64::consts::SQRT_2 } else { 0.0 })
}

fn real_part(m: &DMatrix<Complex64>) -> (DMatrix<f64>, f64) {
    let re = m.map(|z| z.re);
    let im_max = m.iter().map(|z| z.im.abs()).fold(0.0, f64::max);
    let scale = m.iter().map(|z| z.norm()).fold(0.0, f64::max);
    (re, if scale > 0.0 { im_max / scale } else { 0.0 })
}

/// Least-squares feedthrough from the part of `Ls` orthogonal to the
/// columns of `u`, the leading left singular vectors of `L`.
fn estimate_feedthrough(u: &DMatrix<f64>, ls: &DMatrix<f64>) -> f64 {
    let (m, n) = ls.shape();
    let em = DMatrix::from_column_slice(m, 1, ones_realified(m).as_slice());
    let el = ones_realified(n);
    let project = |x: &DMatrix<f64>| -> DMatrix<f64> {
        if u.ncols() == 0 {
            x.clone()
        } else {
            x - u * (u.transpose() * x)
        }
    };
    let a = project(&em);
    let denom = a.norm_squared() * el.norm_squared();
    if !(denom > 1e-12 * (m * n) as f64) {
        return 0.0;
    }
    let num = (a.transpose() * project(ls) * el)[(0, 0)];
    num / denom
}

/// Build `L` and `Ls` and the spectra used for order selection.
pub fn build_pencil(p: &PointPartition) -> Result<LoewnerPencil> {
    let (m, n) = (p.mu.len(), p.lambda.len());
    if m == 0 || n == 0 || p.v.len() != m || p.w.len() != n {
        return Err(Error::InvalidArgument("malformed point partition".into()));
    }
    let scale = p
        .mu
        .iter()
        .chain(&p.lambda)
        .map(|z| z.norm())
        .fold(0.0, f64::max)
        .max(f64::MIN_POSITIVE);
    let mut l = DMatrix::<Complex64>::zeros(m, n);
    let mut ls = DMatrix::<Complex64>::zeros(m, n);
    for i in 0..m {
        for j in 0..n {
            let d = p.mu[i] - p.lambda[j];
            if d.norm() <= 1e-14 * scale {
                return Err(Error::CoincidentPoints(i, j));
            }
            l[(i, j)] = (p.v[i] - p.w[j]) / d;
            ls[(i, j)] = (p.mu[i] * p.v[i] - p.lambda[j] * p.w[j]) / d;
        }
    }
    let raw_scale = l.norm().max(ls.norm());

    let mut pencil = LoewnerPencil {
        l: l.clone(),
        ls: ls.clone(),
        v: p.v.clone(),
        w: p.w.clone(),
        mu: p.mu.clone(),
        lambda: p.lambda.clone(),
        svals_stacked: Vec::new(),
        svals_concat: Vec::new(),
        feedthrough: 0.0,
        realness_defect: 0.0,
        raw_scale,
        real: None,
    };

    if !p.conjugate_closed() {
        pencil.svals_stacked = linalg::complex_singular_values(&hstack_c(&l, &ls));
        pencil.svals_concat = linalg::complex_singular_values(&vstack_c(&l, &ls));
        return Ok(pencil);
    }

    let (lr, d1) = real_part(&realify_cols(&realify_rows(&l)));
    let (lsr, d2) = real_part(&realify_cols(&realify_rows(&ls)));
    let vc = DMatrix::from_column_slice(m, 1, &p.v);
    let wc = DMatrix::from_row_slice(1, n, &p.w);
    let (vr, d3) = real_part(&realify_rows(&vc));
    let (wr, d4) = real_part(&realify_cols(&wc));
    pencil.realness_defect = d1.max(d2).max(d3).max(d4);

    let l_svd = linalg::svd(&lr);
    let l_svals: Vec<f64> = l_svd.singular_values.iter().copied().collect();
    let l_max = l_svals.first().copied().unwrap_or(0.0);
    let l_rank = if l_max <= 1e-13 * raw_scale {
        0
    } else {
        linalg::numerical_rank(&l_svals, l_max, DEFAULT_TOL)
    };
    let d = estimate_feedthrough(&l_svd.u.columns(0, l_rank).into_owned(), &lsr);

    let em = ones_realified(m);
    let el = ones_realified(n);
    let ls_deflated = &lsr - &em * el.transpose() * d;
    let v_deflated = DVector::from_column_slice(vr.as_slice()) - &em * d;
    let w_deflated = DVector::from_column_slice(wr.as_slice()) - &el * d;

    let stacked = linalg::svd(&hstack(&lr, &ls_deflated));
    let concat = linalg::svd(&vstack(&lr, &ls_deflated));
    pencil.svals_stacked = stacked.singular_values.iter().copied().collect();
    pencil.svals_concat = concat.singular_values.iter().copied().collect();
    pencil.feedthrough = d;
    pencil.real = Some(RealPencil {
        l: lr,
        ls_deflated,
        v_deflated,
        w_deflated,
        y: stacked.u,
        x: concat.v_t.transpose(),
    });
    Ok(pencil)
}

fn hstack(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(a.nrows(), a.ncols() + b.ncols());
    out.columns_mut(0, a.ncols()).copy_from(a);
    out.columns_mut(a.ncols(), b.ncols()).copy_from(b);
    out
}

fn vstack(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(a.nrows() + b.nrows(), a.ncols());
    out.rows_mut(0, a.nrows()).copy_from(a);
    out.rows_mut(a.nrows(), b.nrows()).copy_from(b);
    out
}

fn hstack_c(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    let mut out = DMatrix::zeros(a.nrows(), a.ncols() + b.ncols());
    out.columns_mut(0, a.ncols()).copy_from(a);
    out.columns_mut(a.ncols(), b.ncols()).copy_from(b);
    out
}

fn vstack_c(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    let mut out = DMatrix::zeros(a.nrows() + b.nrows(), a.ncols());
    out.rows_mut(0, a.nrows()).copy_from(a);
    out.rows_mut(a.nrows(), b.nrows()).copy_from(b);
    out
}

/// Number of singular values of `[L, Ls − D·1·1ᵀ]` above `tol` relative to
/// the largest one; 0 when the deflated pencil vanishes.
pub fn minimal_order(pencil: &LoewnerPencil, tol: f64) -> usize {
    let s1 = pencil.svals_stacked.first().copied().unwrap_or(0.0);
    if s1 <= 1e-13 * pencil.raw_scale {
        return 0;
    }
    linalg::numerical_rank(&pencil.svals_stacked, s1, tol)
}

/// Descriptor realization of order `n` from the leading singular vectors.
pub fn realize(pencil: &LoewnerPencil, n: usize) -> Result<DescriptorSystem> {
    let real = pencil.real.as_ref().ok_or_else(|| {
        Error::InvalidArgument("realization needs a conjugate-closed partition".into())
    })?;
    let rank = minimal_order(pencil, DEFAULT_TOL);
    if n > rank {
        return Err(Error::TruncationTooAggressive { requested: n, rank });
    }
    if n == 0 {
        return Ok(DescriptorSystem::static_gain(pencil.feedthrough));
    }
    let y = real.y.columns(0, n);
    let x = real.x.columns(0, n);
    let yt = y.transpose();
    let e = -(&yt * &real.l * x);
    let a = -(&yt * &real.ls_deflated * x);
    let b = &yt * &real.v_deflated;
    let c = x.transpose() * &real.w_deflated;
    let sys = DescriptorSystem::new(e, a, b, c, pencil.feedthrough)?;

    let mags: Vec<f64> = pencil.mu.iter().map(|z| z.norm()).collect();
    let mut sorted = mags.clone();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    let probe = Complex64::new(0.37, 0.93) * sorted[sorted.len() / 2];
    if !sys.is_regular_at(probe) {
        return Err(Error::SingularPencil(format!(
            "det(sE - A) vanishes at the probe point {probe}"
        )));
    }
    Ok(sys)
}

/// `H(s) = C(sE − A)^{-1}B + D` with real matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct DescriptorSystem {
    e: DMatrix<f64>,
    a: DMatrix<f64>,
    b: DVector<f64>,
    c: DVector<f64>,
    d: f64,
}

impl DescriptorSystem {
    pub fn new(
        e: DMatrix<f64>,
        a: DMatrix<f64>,
        b: DVector<f64>,
        c: DVector<f64>,
        d: f64,
    ) -> Result<Self> {
        let n = e.nrows();
        if e.shape() != (n, n) || a.shape() != (n, n) || b.len() != n || c.len() != n {
            return Err(Error::InvalidModel("inconsistent descriptor dimensions".into()));
        }
        let finite = e.iter().chain(a.iter()).chain(b.iter()).chain(c.iter()).all(|x| x.is_finite())
            && d.is_finite();
        if !finite {
            return Err(Error::InvalidModel("non-finite descriptor entry".into()));
        }
        Ok(Self { e, a, b, c, d })
    }

    pub fn static_gain(d: f64) -> Self {
        Self {
            e: DMatrix::zeros(0, 0),
            a: DMatrix::zeros(0, 0),
            b: DVector::zeros(0),
            c: DVector::zeros(0),
            d,
        }
    }

    /// Controllable canonical form of a proper rational function, `E = I`.
    pub fn from_rational(r: &RationalLti) -> Result<Self> {
        if !r.is_proper() {
            return Err(Error::InvalidModel("improper rational function".into()));
        }
        let den = r.den();
        let n = den.len() - 1;
        let lead = den[0];
        let a_coef: Vec<f64> = den.iter().map(|x| x / lead).collect();
        let mut b_coef = vec![0.0; n + 1 - r.num().len()];
        b_coef.extend(r.num().iter().map(|x| x / lead));
        let d = b_coef[0];
        if n == 0 {
            return Ok(Self::static_gain(d));
        }
        let mut a = DMatrix::zeros(n, n);
        for j in 0..n {
            a[(0, j)] = -a_coef[j + 1];
        }
        for i in 1..n {
            a[(i, i - 1)] = 1.0;
        }
        let mut b = DVector::zeros(n);
        b[0] = 1.0;
        let c = DVector::from_fn(n, |i, _| b_coef[i + 1] - a_coef[i + 1] * d);
        Self::new(DMatrix::identity(n, n), a, b, c, d)
    }

    pub fn order(&self) -> usize {
        self.e.nrows()
    }

    pub fn e(&self) -> &DMatrix<f64> {
        &self.e
    }

    pub fn a(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn b(&self) -> &DVector<f64> {
        &self.b
    }

    pub fn c(&self) -> &DVector<f64> {
        &self.c
    }

    pub fn d(&self) -> f64 {
        self.d
    }

    fn resolvent_lu(&self, s: Complex64) -> nalgebra::LU<Complex64, nalgebra::Dyn, nalgebra::Dyn> {
        let m = self.e.map(|x| Complex64::new(x, 0.0)) * s - self.a.map(|x| Complex64::new(x, 0.0));
        m.lu()
    }

    fn pivots_ok(lu: &nalgebra::LU<Complex64, nalgebra::Dyn, nalgebra::Dyn>, rel: f64) -> bool {
        let u = lu.u();
        let n = u.nrows();
        let piv: Vec<f64> = (0..n).map(|i| u[(i, i)].norm()).collect();
        let max = piv.iter().cloned().fold(0.0, f64::max);
        max > 0.0 && piv.iter().all(|p| *p > rel * max)
    }

    fn is_regular_at(&self, s: Complex64) -> bool {
        self.order() == 0 || Self::pivots_ok(&self.resolvent_lu(s), 1e-13)
    }

    pub fn eval(&self, s: Complex64) -> Result<Complex64> {
        if self.order() == 0 {
            return Ok(Complex64::new(self.d, 0.0));
        }
        let lu = self.resolvent_lu(s);
        if !Self::pivots_ok(&lu, 1e-15) {
            return Err(Error::ResolventSingular(s));
        }
        let b = self.b.map(|x| Complex64::new(x, 0.0));
        let x = lu.solve(&b).ok_or(Error::ResolventSingular(s))?;
        let v: Complex64 = self.c.iter().zip(x.iter()).map(|(c, x)| x * *c).sum();
        let v = v + self.d;
        if !(v.re.is_finite() && v.im.is_finite()) {
            return Err(Error::ResolventSingular(s));
        }
        Ok(v)
    }

    pub fn response_on(&self, grid: &AngularFrequencyGrid) -> Result<FreqResponseData> {
        let samples = grid.points().map(|s| self.eval(s)).collect::<Result<Vec<_>>>()?;
        FreqResponseData::new(grid.clone(), samples)
    }

    /// Regular state space `(E^{-1}A, E^{-1}B, C, D)`.
    pub fn to_state_space(&self) -> Result<(DMatrix<f64>, DVector<f64>, DVector<f64>, f64)> {
        if self.order() == 0 {
            return Ok((DMatrix::zeros(0, 0), DVector::zeros(0), DVector::zeros(0), self.d));
        }
        let lu = self.e.clone().lu();
        let u = lu.u();
        let piv: Vec<f64> = (0..self.order()).map(|i| u[(i, i)].abs()).collect();
        let max = piv.iter().cloned().fold(0.0, f64::max);
        if !(max > 0.0) || piv.iter().any(|p| *p <= 1e-13 * max) {
            return Err(Error::SingularPencil("E is singular; the system is improper".into()));
        }
        let a = lu.solve(&self.a).ok_or_else(|| Error::SingularPencil("E is singular".into()))?;
        let b = lu.solve(&self.b).ok_or_else(|| Error::SingularPencil("E is singular".into()))?;
        Ok((a, b, self.c.clone(), self.d))
    }

    /// Row-major copies of the matrices for export.
    pub fn rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
        (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()
    }
}

/// Finite generalized eigenvalues of `(A, E)`.
pub fn controller_poles(sys: &DescriptorSystem) -> Result<Vec<Complex64>> {
    let p = linalg::generalized_eigenvalues(sys.a(), sys.e())?;
    Ok(linalg::pair_conjugates(&p, 1e-9))
}

/// Finite transmission zeros, from the system pencil
/// `[[A, B], [C, D]] − s·[[E, 0], [0, 0]]`.
pub fn controller_zeros(sys: &DescriptorSystem) -> Result<Vec<Complex64>> {
    let n = sys.order();
    if n == 0 {
        return Ok(Vec::new());
    }
    let mut big_a = DMatrix::zeros(n + 1, n + 1);
    let mut big_e = DMatrix::zeros(n + 1, n + 1);
    big_a.view_mut((0, 0), (n, n)).copy_from(sys.a());
    big_a.view_mut((0, n), (n, 1)).copy_from(sys.b());
    big_a.view_mut((n, 0), (1, n)).copy_from(&sys.c().transpose());
    big_a[(n, n)] = sys.d();
    big_e.view_mut((0, 0), (n, n)).copy_from(sys.e());
    let z = linalg::generalized_eigenvalues(&big_a, &big_e)?;
    Ok(linalg::pair_conjugates(&z, 1e-9))
}

/// True when every finite pole has real part below `1e-9`.
pub fn is_stable(poles: &[Complex64]) -> bool {
    poles.iter().all(|p| p.re < 1e-9)
}

/// Zero-pole-gain summary of a realization.
#[derive(Debug, Clone, PartialEq)]
pub struct Zpk {
    pub zeros: Vec<Complex64>,
    pub poles: Vec<Complex64>,
    pub gain: f64,
}

pub fn zpk(sys: &DescriptorSystem) -> Result<Zpk> {
    let mut poles = controller_poles(sys)?;
    let mut zeros = controller_zeros(sys)?;
    linalg::sort_complex(&mut poles);
    linalg::sort_complex(&mut zeros);
    let reach = poles
        .iter()
        .chain(&zeros)
        .map(|z| z.norm())
        .fold(1e-12, f64::max);
    let s0 = Complex64::new(1.7 * reach, 0.9 * reach);
    let h = sys.eval(s0)?;
    let num: Complex64 = zeros.iter().map(|z| s0 - z).product();
    let den: Complex64 = poles.iter().map(|p| s0 - p).product();
    Ok(Zpk {
        gain: (h * den / num).re,
        zeros,
        poles,
    })
}

impl std::fmt::Display for Zpk {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let factor = |z: &Complex64| -> String {
            if z.im == 0.0 {
                format!("(s {} {:.6e})", if z.re > 0.0 { "-" } else { "+" }, z.re.abs())
            } else {
                format!(
                    "(s - ({:.6e} {} {:.6e}j))",
                    z.re,
                    if z.im >= 0.0 { "+" } else { "-" },
                    z.im.abs()
                )
            }
        };
        let join = |v: &[Complex64]| -> String {
            if v.is_empty() {
                "1".to_string()
            } else {
                v.iter().map(factor).collect::<Vec<_>>().join(" ")
            }
        };
        writeln!(f, "gain: {:.6e}", self.gain)?;
        writeln!(f, "numerator: {}", join(&self.zeros))?;
        write!(f, "denominator: {}", join(&self.poles))
    }
}
