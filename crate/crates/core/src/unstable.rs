//! Right-half-plane pole and zero estimation from antistable projections.
//!
//! The antistable Laguerre coefficients of `r/(s − p)` form a geometric
//! sequence with ratio `ẑ = (p − α)/(p + α)`, so their Hankel matrix has rank
//! equal to the number of RHP poles and the shift structure of its dominant
//! left singular vectors yields the `ẑ` values.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hardy::{self, Alpha, HardySplit};
use crate::linalg;
use crate::plants::{invert_response, FreqResponseData};

pub const DEFAULT_DROP_RATIO: f64 = 1e-4;

/// Result of the Hankel rank test.
#[derive(Debug, Clone, PartialEq)]
pub struct UnstableCount {
    pub count: usize,
    pub hankel_svals: Vec<f64>,
    /// `σ_count / σ_{count+1}`, when both exist.
    pub gap: Option<f64>,
}

/// RHP poles and zeros of a plant.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct InstabilityEstimate {
    pub n_p: usize,
    pub rhp_poles: Vec<Complex64>,
    pub n_z: usize,
    pub rhp_zeros: Vec<Complex64>,
    pub hankel_svals: Vec<f64>,
}

impl InstabilityEstimate {
    pub fn new(rhp_poles: Vec<Complex64>, rhp_zeros: Vec<Complex64>) -> Self {
        Self {
            n_p: rhp_poles.len(),
            rhp_poles,
            n_z: rhp_zeros.len(),
            rhp_zeros,
            hankel_svals: Vec::new(),
        }
    }
}

/// `H[i][j] = c[i + j]`, of size `⌊K/2⌋ × ⌈K/2⌉`.
pub fn hankel_matrix(coeffs: &[Complex64]) -> DMatrix<Complex64> {
    let k = coeffs.len();
    let (m, n) = (k / 2, k - k / 2);
    DMatrix::from_fn(m, n, |i, j| coeffs[i + j])
}

/// Numerical rank of the antistable Hankel matrix. Singular values are
/// compared against `drop_ratio` times the larger of `σ_1` and the norm of
/// all fitted coefficients, so that leakage from a purely stable response
/// is not mistaken for an instability.
pub fn count_unstable(split: &HardySplit, drop_ratio: f64) -> Result<UnstableCount> {
    let k = split.antistable_coeffs.len();
    if k < 4 {
        return Err(Error::InvalidArgument(format!(
            "need at least 4 antistable coefficients, got {k}"
        )));
    }
    if !(drop_ratio > 0.0 && drop_ratio < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "drop_ratio must lie in (0, 1), got {drop_ratio}"
        )));
    }
    let svals = linalg::complex_singular_values(&hankel_matrix(&split.antistable_coeffs));
    let sigma1 = svals.first().copied().unwrap_or(0.0);
    let scale = sigma1.max(split.coeff_norm());
    let count = if sigma1 < 1e-10 * scale || scale == 0.0 {
        0
    } else {
        svals.iter().take_while(|s| **s >= drop_ratio * scale).count()
    };
    let gap = if count >= 1 && count < svals.len() && svals[count] > 0.0 {
        Some(svals[count - 1] / svals[count])
    } else {
        None
    };
    Ok(UnstableCount {
        count,
        hankel_svals: svals,
        gap,
    })
}

/// Kung's shift-invariance estimate of `n_p` RHP poles, mapped back from
/// the discrete ratios by `p = α(1 + ẑ)/(1 − ẑ)`, conjugate-paired and
/// sorted by imaginary part.
pub fn estimate_rhp_poles(split: &HardySplit, n_p: usize) -> Result<Vec<Complex64>> {
    let h = hankel_matrix(&split.antistable_coeffs);
    let m = h.nrows();
    if n_p == 0 {
        return Ok(Vec::new());
    }
    if n_p + 1 > m {
        return Err(Error::InvalidArgument(format!(
            "cannot estimate {n_p} poles from a Hankel matrix with {m} rows"
        )));
    }
    let svd = h.svd(true, false);
    let u = svd.u.expect("requested U");
    let un = u.columns(0, n_p);
    let up = un.rows(0, m - 1).into_owned();
    let down = un.rows(1, m - 1).into_owned();

    let mut f = DMatrix::<Complex64>::zeros(n_p, n_p);
    for j in 0..n_p {
        let rhs: DVector<Complex64> = down.column(j).into_owned();
        let ls = linalg::complex_lstsq(up.clone(), &rhs)?;
        if !(ls.cond < 1e12) {
            return Err(Error::RankDeficiency);
        }
        f.set_column(j, &ls.x);
    }
    let zhat = linalg::complex_eigenvalues(&f)?;
    let alpha = split.basis_pole;
    let poles: Vec<Complex64> = zhat
        .iter()
        .map(|z| (1.0 + z) / (1.0 - z) * alpha)
        .filter(|p| p.re.is_finite() && p.im.is_finite())
        .collect();
    let mut paired = linalg::pair_conjugates(&poles, 1e-6);
    sort_by_imag(&mut paired);
    Ok(paired)
}

fn sort_by_imag(v: &mut [Complex64]) {
    v.sort_by(|a, b| {
        a.im
            .partial_cmp(&b.im)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.re.partial_cmp(&b.re).unwrap_or(std::cmp::Ordering::Equal))
    });
}

/// Band selection for integrator handling.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum BandpassMode {
    /// Filter on the inner half of the grid when an integrator is detected.
    #[default]
    Auto,
    Off,
    /// Always filter on the given band.
    Band { w_lo: f64, w_hi: f64 },
}

/// Options shared by the pole and zero analyses.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnalysisOptions {
    pub k_basis: usize,
    pub alpha: Alpha,
    pub drop_ratio: f64,
    pub bandpass: BandpassMode,
    pub bandpass_order: u32,
}

impl Default for AnalysisOptions {
    fn default() -> Self {
        Self {
            k_basis: hardy::DEFAULT_K_BASIS,
            alpha: Alpha::Auto,
            drop_ratio: DEFAULT_DROP_RATIO,
            bandpass: BandpassMode::Auto,
            bandpass_order: 1,
        }
    }
}

/// Preprocessing applied to data before projection.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Conditioning {
    pub integrator_detected: bool,
    pub bandpass: Option<(f64, f64, u32)>,
    /// Power `m` of the roll-off `(α/(s + α))^m` applied to non-decaying data.
    pub rolloff_order: u32,
}

/// Bandpass-filter data that blow up toward `w_min` and roll off data that
/// do not decay toward `w_max`. The roll-off pole coincides with the
/// Laguerre pole, so it is represented exactly by the stable basis.
pub fn condition_data(
    data: &FreqResponseData,
    opts: &AnalysisOptions,
) -> Result<(FreqResponseData, Conditioning)> {
    let mut c = Conditioning {
        integrator_detected: hardy::detect_integrator(data),
        ..Conditioning::default()
    };
    let band = match opts.bandpass {
        BandpassMode::Off => None,
        BandpassMode::Auto if c.integrator_detected => Some(hardy::auto_band(data.grid())),
        BandpassMode::Auto => None,
        BandpassMode::Band { w_lo, w_hi } => Some((w_lo, w_hi)),
    };
    let mut out = data.clone();
    if let Some((lo, hi)) = band {
        out = hardy::bandpass_prefilter(&out, lo, hi, opts.bandpass_order)?;
        c.bandpass = Some((lo, hi, opts.bandpass_order));
    }
    let slope = hardy::log_slope(&out, false);
    if slope > -0.5 {
        let m = (slope.max(0.0).round() as u32 + 2).min(8);
        let alpha = opts.alpha.resolve(out.grid())?;
        out = out.map(|w, z| z * (alpha / Complex64::new(alpha, w)).powu(m))?;
        c.rolloff_order = m;
    }
    Ok((out, c))
}

/// Full analysis of one response: projection, rank test, pole estimate.
#[derive(Debug, Clone)]
pub struct RhpAnalysis {
    pub split: HardySplit,
    pub count: UnstableCount,
    /// Estimated RHP roots (positive real part only).
    pub roots: Vec<Complex64>,
    /// Estimates discarded for lying in the closed left half-plane.
    pub discarded: Vec<Complex64>,
    pub conditioning: Conditioning,
}

pub fn analyze_rhp_poles(data: &FreqResponseData, opts: &AnalysisOptions) -> Result<RhpAnalysis> {
    let (prepared, conditioning) = condition_data(data, opts)?;
    let split = hardy::project(&prepared, opts.k_basis, opts.alpha)?;
    let count = count_unstable(&split, opts.drop_ratio)?;
    let all = if count.count > 0 {
        estimate_rhp_poles(&split, count.count)?
    } else {
        Vec::new()
    };
    let (roots, discarded): (Vec<_>, Vec<_>) = all.into_iter().partition(|p| p.re > 0.0);
    Ok(RhpAnalysis {
        split,
        count,
        roots,
        discarded,
        conditioning,
    })
}

/// RHP zeros of the plant as the RHP poles of its inverse.
pub fn detect_rhp_zeros(data: &FreqResponseData, k_basis: usize) -> Result<(usize, Vec<Complex64>)> {
    let opts = AnalysisOptions {
        k_basis,
        ..AnalysisOptions::default()
    };
    let a = analyze_rhp_zeros(data, &opts)?;
    Ok((a.roots.len(), a.roots))
}

pub fn analyze_rhp_zeros(data: &FreqResponseData, opts: &AnalysisOptions) -> Result<RhpAnalysis> {
    analyze_rhp_poles(&invert_response(data)?, opts)
}

/// Poles and zeros together, with the diagnostics of both analyses.
#[derive(Debug, Clone)]
pub struct PlantAnalysis {
    pub estimate: InstabilityEstimate,
    pub poles: RhpAnalysis,
    pub zeros: RhpAnalysis,
}

pub fn analyze_plant(data: &FreqResponseData, opts: &AnalysisOptions) -> Result<PlantAnalysis> {
    let poles = analyze_rhp_poles(data, opts)?;
    let zeros = analyze_rhp_zeros(data, opts)?;
    let mut estimate = InstabilityEstimate::new(poles.roots.clone(), zeros.roots.clone());
    estimate.hankel_svals = poles.count.hankel_svals.clone();
    Ok(PlantAnalysis {
        estimate,
        poles,
        zeros,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::plants::{make_log_grid, sample_response, RationalLti, TransferModel};

    fn data_of(num: Vec<f64>, den: Vec<f64>, w0: f64, w1: f64) -> FreqResponseData {
        let m: TransferModel = RationalLti::new(num, den).unwrap().into();
        sample_response(&m, &make_log_grid(w0, w1, 500).unwrap()).unwrap()
    }

    #[test]
    fn hankel_layout() {
        let c: Vec<Complex64> = (0..5).map(|k| Complex64::new(k as f64, 0.0)).collect();
        let h = hankel_matrix(&c);
        assert_eq!(h.shape(), (2, 3));
        assert_eq!(h[(1, 2)], Complex64::new(3.0, 0.0));
    }

    #[test]
    fn stable_data_counts_zero() {
        let d = data_of(vec![1.0], vec![1.0, 1.0], 1e-2, 1e2);
        let split = hardy::project(&d, 40, Alpha::Auto).unwrap();
        assert_eq!(count_unstable(&split, DEFAULT_DROP_RATIO).unwrap().count, 0);
    }

    #[test]
    fn single_rhp_pole() {
        let d = data_of(vec![1.0], vec![1.0, -0.1], 1e-3, 1e1);
        let split = hardy::project(&d, 40, Alpha::Auto).unwrap();
        let c = count_unstable(&split, DEFAULT_DROP_RATIO).unwrap();
        assert_eq!(c.count, 1);
        let p = estimate_rhp_poles(&split, 1).unwrap();
        assert!((p[0].re - 0.1).abs() < 1e-3 && p[0].im == 0.0, "{p:?}");
    }

    #[test]
    fn two_real_rhp_poles() {
        let d = data_of(vec![1.0], vec![1.0, -0.3, 0.02], 1e-3, 1e1);
        let split = hardy::project(&d, 40, Alpha::Auto).unwrap();
        assert_eq!(count_unstable(&split, DEFAULT_DROP_RATIO).unwrap().count, 2);
        let mut p = estimate_rhp_poles(&split, 2).unwrap();
        p.sort_by(|a, b| a.re.partial_cmp(&b.re).unwrap());
        assert!((p[0].re - 0.1).abs() < 1e-3, "{p:?}");
        assert!((p[1].re - 0.2).abs() < 2e-3, "{p:?}");
    }

    #[test]
    fn zero_detection() {
        let d = data_of(vec![1.0], vec![1.0, 1.0], 1e-2, 1e2);
        assert_eq!(detect_rhp_zeros(&d, 40).unwrap().0, 0);
        let d = data_of(vec![1.0, -0.5], vec![1.0, 2.0, 1.0], 1e-2, 1e2);
        let (n, z) = detect_rhp_zeros(&d, 40).unwrap();
        assert_eq!(n, 1);
        assert!((z[0].re - 0.5).abs() < 1e-2, "{z:?}");
    }
}
