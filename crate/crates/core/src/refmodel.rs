//! Achievable reference models and the ideal controller.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::plants::{FreqResponseData, RationalLti};
use crate::unstable::InstabilityEstimate;

/// `Π_j (s − p_j)/(s + p_j)`.
pub fn eval_blaschke(roots: &[Complex64], s: Complex64) -> Result<Complex64> {
    let mut acc = Complex64::new(1.0, 0.0);
    for p in roots {
        let den = s + p;
        if den.norm() <= 1e-14 * p.norm().max(1.0) {
            return Err(Error::PoleHit(s));
        }
        acc *= (s - p) / den;
    }
    Ok(acc)
}

fn check_roots(roots: &[Complex64], what: &str) -> Result<()> {
    for p in roots {
        if !(p.re > 0.0 && p.re.is_finite() && p.im.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "{what} {p} does not lie in the open right half-plane"
            )));
        }
        if p.im != 0.0 {
            let tol = 1e-9 * p.norm();
            let partners = roots.iter().filter(|q| (*q - p.conj()).norm() <= tol).count();
            let selves = roots.iter().filter(|q| (*q - p).norm() <= tol).count();
            if partners != selves {
                return Err(Error::InvalidArgument(format!(
                    "{what} {p} is missing its conjugate"
                )));
            }
        }
    }
    Ok(())
}

/// `M(s) = B_z(s)·[1 − (1 − M_init(s))·B_p(s)]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceModel {
    m_init: RationalLti,
    pole_blaschke: Vec<Complex64>,
    zero_blaschke: Vec<Complex64>,
}

impl ReferenceModel {
    pub fn new(
        m_init: RationalLti,
        pole_blaschke: Vec<Complex64>,
        zero_blaschke: Vec<Complex64>,
    ) -> Result<Self> {
        if !m_init.is_stable()? {
            return Err(Error::InvalidModel("M_init must be stable".into()));
        }
        let dc = m_init.eval(Complex64::new(0.0, 0.0))?;
        if dc.norm() > 1.0 + 1e-12 {
            return Err(Error::InvalidModel(format!(
                "|M_init(0)| = {} exceeds 1",
                dc.norm()
            )));
        }
        check_roots(&pole_blaschke, "Blaschke pole")?;
        check_roots(&zero_blaschke, "Blaschke zero")?;
        Ok(Self {
            m_init,
            pole_blaschke,
            zero_blaschke,
        })
    }

    pub fn m_init(&self) -> &RationalLti {
        &self.m_init
    }

    pub fn pole_blaschke(&self) -> &[Complex64] {
        &self.pole_blaschke
    }

    pub fn zero_blaschke(&self) -> &[Complex64] {
        &self.zero_blaschke
    }

    /// Notes about interpolation conditions this construction cannot meet.
    pub fn warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        if !self.pole_blaschke.is_empty() && !self.zero_blaschke.is_empty() {
            for p in &self.pole_blaschke {
                if let Ok(v) = eval_blaschke(&self.zero_blaschke, *p) {
                    out.push(format!(
                        "plant has RHP poles and zeros: M({:.6e}{:+.6e}j) = B_z(p) has modulus {:.6e}, not 1",
                        p.re,
                        p.im,
                        v.norm()
                    ));
                }
            }
        }
        out
    }

    pub fn eval(&self, s: Complex64) -> Result<Complex64> {
        let bp = eval_blaschke(&self.pole_blaschke, s)?;
        let bz = eval_blaschke(&self.zero_blaschke, s)?;
        let mi = self.m_init.eval(s)?;
        Ok(bz * (1.0 - (1.0 - mi) * bp))
    }

    /// Samples of `M(jω)` on the grid of `like`.
    pub fn sample(&self, like: &FreqResponseData) -> Result<FreqResponseData> {
        let samples = like
            .grid()
            .points()
            .map(|s| self.eval(s))
            .collect::<Result<Vec<_>>>()?;
        FreqResponseData::new(like.grid().clone(), samples)
    }
}

pub fn make_achievable(m_init: RationalLti, est: &InstabilityEstimate) -> Result<ReferenceModel> {
    ReferenceModel::new(m_init, est.rhp_poles.clone(), est.rhp_zeros.clone())
}

pub fn eval_reference(m: &ReferenceModel, s: Complex64) -> Result<Complex64> {
    m.eval(s)
}

/// `K* = P^{-1} M / (1 − M)` at one frequency.
pub fn ideal_controller_value(p: Complex64, m: Complex64) -> Option<Complex64> {
    if m == Complex64::new(0.0, 0.0) {
        return Some(m);
    }
    let sens = 1.0 - m;
    if sens.norm() <= 1e-12 || p.norm() == 0.0 {
        return None;
    }
    Some(m / (p * sens))
}

pub fn ideal_controller(plant: &FreqResponseData, m: &ReferenceModel) -> Result<FreqResponseData> {
    ideal_controller_from_samples(plant, &m.sample(plant)?)
}

/// Ideal controller for reference samples given directly on the plant grid.
pub fn ideal_controller_from_samples(
    plant: &FreqResponseData,
    m: &FreqResponseData,
) -> Result<FreqResponseData> {
    if plant.grid() != m.grid() {
        return Err(Error::InvalidGrid("plant and reference grids differ".into()));
    }
    let floor = 1e-12 * plant.max_abs();
    let mut out = Vec::with_capacity(plant.len());
    for (i, (p, mv)) in plant.samples().iter().zip(m.samples()).enumerate() {
        if (1.0 - mv).norm() <= 1e-12 {
            return Err(Error::SensitivitySingular(i));
        }
        if !(p.norm() > floor) {
            return Err(Error::NearZeroSample(i));
        }
        out.push(mv / (p * (1.0 - mv)));
    }
    FreqResponseData::new(plant.grid().clone(), out)
}
