//! Stable/antistable splitting of frequency-response data.
//!
//! The data (minus an estimated feedthrough) is fitted by weighted least
//! squares against the Laguerre functions
//! `φ_k(s) = √(2α)(s−α)^{k−1}/(s+α)^k` and their mirrors `ψ_k(s) = φ_k(−s)`.
//! The rows are weighted by a trapezoidal quadrature of the measure `dω`
//! taken in the angle variable `θ = 2·atan(α/ω)`, so the discrete problem
//! approximates the continuous orthogonal projection and the fitted
//! coefficients approximate the true Laguerre coefficients.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;
use crate::plants::{AngularFrequencyGrid, FreqResponseData};

pub const DEFAULT_K_BASIS: usize = 40;
pub const MAX_CONDITION: f64 = 1e12;

/// Number of even-power terms in the feedthrough tail fit.
const TAIL_TERMS: usize = 4;

/// Laguerre pole selection.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(untagged)]
pub enum Alpha {
    #[default]
    #[serde(with = "auto_literal")]
    Auto,
    Fixed(f64),
}

mod auto_literal {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str("auto")
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<(), D::Error> {
        let s = String::deserialize(d)?;
        if s == "auto" {
            Ok(())
        } else {
            Err(serde::de::Error::custom(format!("expected \"auto\" or a number, got {s:?}")))
        }
    }
}

impl Alpha {
    pub fn resolve(self, grid: &AngularFrequencyGrid) -> Result<f64> {
        match self {
            Alpha::Auto => Ok((grid.w_min() * grid.w_max()).sqrt()),
            Alpha::Fixed(a) if a > 0.0 && a.is_finite() => Ok(a),
            Alpha::Fixed(a) => Err(Error::InvalidArgument(format!(
                "basis pole must be positive, got {a}"
            ))),
        }
    }
}

/// Stable and antistable parts of a response on its grid.
#[derive(Debug, Clone)]
pub struct HardySplit {
    pub grid: AngularFrequencyGrid,
    pub stable_samples: Vec<Complex64>,
    pub antistable_samples: Vec<Complex64>,
    pub feedthrough: Complex64,
    pub stable_coeffs: Vec<Complex64>,
    pub antistable_coeffs: Vec<Complex64>,
    pub basis_pole: f64,
    pub residual_energy: f64,
    /// Euclidean norm of the projected data.
    pub data_norm: f64,
    /// Condition estimate of the weighted least-squares matrix.
    pub condition: f64,
}

impl HardySplit {
    /// `‖antistable_samples‖₂ / ‖data‖₂`.
    pub fn antistable_fraction(&self) -> f64 {
        norm(&self.antistable_samples) / self.data_norm.max(f64::MIN_POSITIVE)
    }

    /// `‖stable_samples‖₂ / ‖data‖₂`.
    pub fn stable_fraction(&self) -> f64 {
        norm(&self.stable_samples) / self.data_norm.max(f64::MIN_POSITIVE)
    }

    /// Euclidean norm of all fitted basis coefficients.
    pub fn coeff_norm(&self) -> f64 {
        (norm(&self.stable_coeffs).powi(2) + norm(&self.antistable_coeffs).powi(2)).sqrt()
    }

    pub fn eval_stable(&self, s: Complex64) -> Complex64 {
        laguerre_sum(&self.stable_coeffs, self.basis_pole, s)
    }

    pub fn eval_antistable(&self, s: Complex64) -> Complex64 {
        laguerre_sum(&self.antistable_coeffs, self.basis_pole, -s)
    }
}

fn norm(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Values `φ_1(s), …, φ_K(s)`, computed as `√(2α)/(s+α) · w^{k−1}` with
/// `w = (s−α)/(s+α)` to avoid overflow of the separate powers.
pub fn laguerre_values(k_basis: usize, alpha: f64, s: Complex64) -> Vec<Complex64> {
    let g = Complex64::new((2.0 * alpha).sqrt(), 0.0) / (s + alpha);
    let w = (s - alpha) / (s + alpha);
    let mut out = Vec::with_capacity(k_basis);
    let mut acc = g;
    for _ in 0..k_basis {
        out.push(acc);
        acc *= w;
    }
    out
}

fn laguerre_sum(coeffs: &[Complex64], alpha: f64, s: Complex64) -> Complex64 {
    laguerre_values(coeffs.len(), alpha, s)
        .iter()
        .zip(coeffs)
        .map(|(b, c)| b * c)
        .sum()
}

/// Trapezoidal weights of `dω` in the angle `θ = 2·atan(α/ω)`; the end
/// intervals are closed against the mirrored points of the conjugate grid.
pub fn quadrature_weights(omegas: &[f64], alpha: f64) -> Vec<f64> {
    let n = omegas.len();
    let theta: Vec<f64> = omegas.iter().map(|w| 2.0 * (alpha / w).atan()).collect();
    let at = |i: isize| -> f64 {
        if i < 0 {
            2.0 * std::f64::consts::PI - theta[0]
        } else if i as usize >= n {
            -theta[n - 1]
        } else {
            theta[i as usize]
        }
    };
    (0..n)
        .map(|i| {
            let i = i as isize;
            let dtheta = 0.5 * (at(i - 1) - at(i + 1));
            let half = (theta[i as usize] / 2.0).sin();
            dtheta * alpha / (2.0 * half * half)
        })
        .collect()
}

/// Feedthrough estimate from the highest decade of the grid (`ω ≥ w_max/10`,
/// at least the top three samples). For a real-coefficient response
/// `Re H(jω) = D − a_2/ω² + a_4/ω⁴ − …` holds only even powers, so `D` is
/// the intercept of a least-squares fit of the real parts against
/// `1, x, x², x³` with `x = (ω_c/ω)²` and `ω_c` the lowest frequency used.
/// This removes the tail of strictly proper parts instead of averaging it
/// into `D`.
pub fn estimate_feedthrough(data: &FreqResponseData) -> Complex64 {
    let w = data.omegas();
    let n = w.len();
    let cutoff = data.grid().w_max() / 10.0;
    let mut idx: Vec<usize> = (0..n).filter(|&i| w[i] >= cutoff).collect();
    if idx.len() < 3 {
        idx = (n.saturating_sub(3)..n).collect();
    }
    let mean = idx.iter().map(|&i| data.samples()[i].re).sum::<f64>() / idx.len() as f64;
    let terms = TAIL_TERMS.min(idx.len());
    let wc = w[idx[0]];
    let a = DMatrix::<f64>::from_fn(idx.len(), terms, |r, k| (wc / w[idx[r]]).powi(2 * k as i32));
    let b = DVector::<f64>::from_fn(idx.len(), |r, _| data.samples()[idx[r]].re);
    let svd = a.svd(true, true);
    let sv = &svd.singular_values;
    let cond = sv.max() / sv.min();
    let d = match svd.solve(&b, 0.0) {
        Ok(x) if cond < 1e10 => x[0],
        _ => mean,
    };
    Complex64::new(d, 0.0)
}

/// Split `data` into stable, antistable and feedthrough parts.
pub fn project(data: &FreqResponseData, k_basis: usize, alpha: Alpha) -> Result<HardySplit> {
    let n = data.len();
    if k_basis < 1 {
        return Err(Error::InvalidArgument("k_basis must be at least 1".into()));
    }
    if 2 * k_basis + 1 > n {
        return Err(Error::InvalidArgument(format!(
            "2·k_basis + 1 = {} exceeds the grid length {n}",
            2 * k_basis + 1
        )));
    }
    let alpha = alpha.resolve(data.grid())?;
    let feedthrough = estimate_feedthrough(data);
    let q = quadrature_weights(data.omegas(), alpha);

    let mut a = DMatrix::<Complex64>::zeros(2 * n, 2 * k_basis);
    let mut rhs = DVector::<Complex64>::zeros(2 * n);
    for (i, (&w, &z)) in data.omegas().iter().zip(data.samples()).enumerate() {
        let weight = q[i].sqrt();
        let r = z - feedthrough;
        for (row, s, value) in [
            (2 * i, Complex64::new(0.0, w), r),
            (2 * i + 1, Complex64::new(0.0, -w), r.conj()),
        ] {
            let st = laguerre_values(k_basis, alpha, s);
            let an = laguerre_values(k_basis, alpha, -s);
            for k in 0..k_basis {
                a[(row, k)] = st[k] * weight;
                a[(row, k_basis + k)] = an[k] * weight;
            }
            rhs[row] = value * weight;
        }
    }
    let ls = linalg::complex_lstsq(a, &rhs)?;
    if !(ls.cond <= MAX_CONDITION) {
        return Err(Error::IllConditionedFit { cond: ls.cond });
    }
    let stable_coeffs: Vec<Complex64> = ls.x.iter().take(k_basis).copied().collect();
    let antistable_coeffs: Vec<Complex64> = ls.x.iter().skip(k_basis).copied().collect();

    let mut stable_samples = Vec::with_capacity(n);
    let mut antistable_samples = Vec::with_capacity(n);
    let mut misfit = 0.0;
    for (&w, &z) in data.omegas().iter().zip(data.samples()) {
        let s = Complex64::new(0.0, w);
        let st = laguerre_sum(&stable_coeffs, alpha, s);
        let an = laguerre_sum(&antistable_coeffs, alpha, -s);
        misfit += (st + an + feedthrough - z).norm_sqr();
        stable_samples.push(st);
        antistable_samples.push(an);
    }
    let data_norm = data.l2_norm();
    let residual_energy = if data_norm > 0.0 { misfit.sqrt() / data_norm } else { 0.0 };
    Ok(HardySplit {
        grid: data.grid().clone(),
        stable_samples,
        antistable_samples,
        feedthrough,
        stable_coeffs,
        antistable_coeffs,
        basis_pole: alpha,
        residual_energy,
        data_norm,
        condition: ls.cond,
    })
}

/// Geometric band center `sqrt(w_lo·w_hi)`.
pub fn band_center(w_lo: f64, w_hi: f64) -> f64 {
    (w_lo * w_hi).sqrt()
}

/// `F(s) = [b(s)/b(jω_c)]^order` with `b(s) = (s/w_lo)/((1+s/w_lo)(1+s/w_hi))`;
/// `b(jω_c)` is real and equals the peak of `|b|`, so `F(jω_c) = 1`.
pub fn bandpass_gain(w_lo: f64, w_hi: f64, order: u32, s: Complex64) -> Complex64 {
    let base = |s: Complex64| (s / w_lo) / ((1.0 + s / w_lo) * (1.0 + s / w_hi));
    let peak = base(Complex64::new(0.0, band_center(w_lo, w_hi))).norm();
    (base(s) / peak).powu(order)
}

/// Multiply the samples by a unit-peak bandpass centered between the edges.
pub fn bandpass_prefilter(
    data: &FreqResponseData,
    w_lo: f64,
    w_hi: f64,
    order: u32,
) -> Result<FreqResponseData> {
    let g = data.grid();
    if !(w_lo > 0.0 && w_lo < w_hi && w_hi.is_finite()) {
        return Err(Error::InvalidBand(format!(
            "need 0 < w_lo < w_hi, got ({w_lo}, {w_hi})"
        )));
    }
    if w_lo < g.w_min() || w_hi > g.w_max() {
        return Err(Error::InvalidBand(format!(
            "band ({w_lo}, {w_hi}) leaves the grid range ({}, {})",
            g.w_min(),
            g.w_max()
        )));
    }
    if order == 0 {
        return Err(Error::InvalidBand("filter order must be at least 1".into()));
    }
    data.map(|w, z| z * bandpass_gain(w_lo, w_hi, order, Complex64::new(0.0, w)))
}

/// The inner half of the grid in log scale: each edge sits a quarter of the
/// logarithmic span inside the grid ends, far enough that the filter's own
/// poles do not leak into the antistable fit.
pub fn auto_band(grid: &AngularFrequencyGrid) -> (f64, f64) {
    let quarter = (grid.w_max() / grid.w_min()).log10() / 4.0;
    (grid.w_min() * 10f64.powf(quarter), grid.w_max() / 10f64.powf(quarter))
}

/// Log-log slope of `|data|` fitted over one end decade of the grid.
pub fn log_slope(data: &FreqResponseData, low_end: bool) -> f64 {
    let w = data.omegas();
    let n = w.len();
    let idx: Vec<usize> = if low_end {
        let cut = data.grid().w_min() * 10.0;
        let v: Vec<usize> = (0..n).filter(|&i| w[i] <= cut).collect();
        if v.len() >= 3 { v } else { (0..3.min(n)).collect() }
    } else {
        let cut = data.grid().w_max() / 10.0;
        let v: Vec<usize> = (0..n).filter(|&i| w[i] >= cut).collect();
        if v.len() >= 3 { v } else { (n.saturating_sub(3)..n).collect() }
    };
    let pts: Vec<(f64, f64)> = idx
        .iter()
        .map(|&i| (w[i].log10(), data.samples()[i].norm().max(f64::MIN_POSITIVE).log10()))
        .collect();
    let m = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx > 0.0 { sxy / sxx } else { 0.0 }
}

/// True when `|data|` grows by at least 18 dB/decade toward `w_min`, the
/// signature of an imaginary-axis pole at the origin.
pub fn detect_integrator(data: &FreqResponseData) -> bool {
    log_slope(data, true) <= -0.9
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::plants::{make_log_grid, sample_response, RationalLti, TransferModel};

    fn data_of(num: Vec<f64>, den: Vec<f64>, grid: &AngularFrequencyGrid) -> FreqResponseData {
        let m: TransferModel = RationalLti::new(num, den).unwrap().into();
        sample_response(&m, grid).unwrap()
    }

    fn rel(a: &[Complex64], b: &[Complex64]) -> f64 {
        let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum::<f64>().sqrt();
        num / norm(b)
    }

    #[test]
    fn feedthrough_examples() {
        let g = make_log_grid(1e-2, 1e3, 200).unwrap();
        let c = FreqResponseData::new(g.clone(), vec![Complex64::new(3.0, 0.0); 200]).unwrap();
        assert!((estimate_feedthrough(&c) - 3.0).norm() < 1e-12);
        let d = data_of(vec![1.0], vec![1.0, 1.0], &g);
        assert!(estimate_feedthrough(&d).norm() < 1e-2);
        let d = data_of(vec![2.0, 3.0], vec![1.0, 1.0], &g);
        assert!((estimate_feedthrough(&d) - 2.0).norm() < 1e-2);
    }

    #[test]
    fn stable_data_has_no_antistable_part() {
        let g = make_log_grid(1e-2, 1e2, 500).unwrap();
        let split = project(&data_of(vec![1.0], vec![1.0, 1.0], &g), 40, Alpha::Auto).unwrap();
        assert!(split.antistable_fraction() < 1e-3, "{}", split.antistable_fraction());
        assert!(split.residual_energy < 1e-2);
    }

    #[test]
    fn antistable_data_has_no_stable_part() {
        let g = make_log_grid(1e-3, 1e1, 500).unwrap();
        let d = data_of(vec![1.0], vec![1.0, -0.1], &g);
        let split = project(&d, 40, Alpha::Auto).unwrap();
        assert!(split.stable_fraction() < 1e-3, "{}", split.stable_fraction());
        assert!(rel(&split.antistable_samples, d.samples()) < 1e-3);
    }

    #[test]
    fn additive_decomposition() {
        let g = make_log_grid(1e-3, 1e2, 500).unwrap();
        let st = data_of(vec![1.0], vec![1.0, 1.0], &g);
        let an = data_of(vec![1.0], vec![1.0, -0.1], &g);
        let sum = st.zip_with(&an, |a, b| a + b).unwrap();
        let split = project(&sum, 40, Alpha::Auto).unwrap();
        assert!(rel(&split.stable_samples, st.samples()) < 1e-2);
        assert!(rel(&split.antistable_samples, an.samples()) < 1e-2);
    }

    #[test]
    fn too_many_basis_functions_rejected() {
        let g = make_log_grid(1e-2, 1e2, 20).unwrap();
        let d = data_of(vec![1.0], vec![1.0, 1.0], &g);
        assert!(project(&d, 10, Alpha::Auto).is_err());
        assert!(project(&d, 9, Alpha::Auto).is_ok());
    }

    #[test]
    fn bandpass_unit_peak_and_integrator() {
        let g = make_log_grid(1e-4, 1.0, 101).unwrap();
        let (lo, hi) = (1e-3, 1e-1);
        let wc = band_center(lo, hi);
        let peak = bandpass_gain(lo, hi, 2, Complex64::new(0.0, wc));
        assert!((peak - 1.0).norm() < 1e-14);
        let ones = FreqResponseData::new(g.clone(), vec![Complex64::new(1.0, 0.0); 101]).unwrap();
        let f = bandpass_prefilter(&ones, lo, hi, 1).unwrap();
        assert!(f.max_abs() <= 1.0 + 1e-14);
        let integ = data_of(vec![1.0], vec![1.0, 0.0], &g);
        assert!(detect_integrator(&integ));
        let f = bandpass_prefilter(&integ, lo, hi, 1).unwrap();
        assert!(f.samples().iter().all(|z| z.re.is_finite() && z.im.is_finite()));
        assert!(f.max_abs() < 1e3 / lo);
        assert!(matches!(bandpass_prefilter(&ones, hi, lo, 1), Err(Error::InvalidBand(_))));
        assert!(matches!(bandpass_prefilter(&ones, 1e-6, lo, 1), Err(Error::InvalidBand(_))));
    }

    #[test]
    fn bandpass_preserves_band_center() {
        let g = make_log_grid(1e-4, 1.0, 101).unwrap();
        let d = data_of(vec![1.0, 0.0], vec![1.0, 0.3, 1e-4], &g);
        let (lo, hi) = (1e-4, 1.0);
        let f = bandpass_prefilter(&d, lo, hi, 1).unwrap();
        let i = 50;
        assert!((g.omegas()[i] - band_center(lo, hi)).abs() < 1e-12);
        let change = (f.samples()[i] - d.samples()[i]).norm() / d.samples()[i].norm();
        assert!(change < 1e-2);
    }

    #[test]
    fn quadrature_weights_follow_the_grid_spacing() {
        let w: Vec<f64> = (1..=2000).map(|i| i as f64 * 0.01).collect();
        let q = quadrature_weights(&w, 1.0);
        for i in [10, 500, 1000, 1900] {
            assert!((q[i] - 0.01).abs() < 1e-4, "q[{i}] = {}", q[i]);
        }
    }

    #[test]
    fn alpha_parses_from_toml() {
        #[derive(Deserialize)]
        struct T {
            a: Alpha,
        }
        let t: T = toml::from_str("a = \"auto\"").unwrap();
        assert_eq!(t.a, Alpha::Auto);
        let t: T = toml::from_str("a = 0.5").unwrap();
        assert_eq!(t.a, Alpha::Fixed(0.5));
        assert!(toml::from_str::<T>("a = \"fast\"").is_err());
    }
}
