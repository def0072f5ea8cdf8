#![allow(dead_code)]

use lddc::plants::{AngularFrequencyGrid, FreqResponseData};
use lddc::Complex64;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Rational function in pole-residue form `d + Σ r_k/(s − p_k)`.
#[derive(Debug, Clone)]
pub struct PoleResidue {
    pub poles: Vec<Complex64>,
    pub residues: Vec<Complex64>,
    pub d: f64,
}

impl PoleResidue {
    pub fn eval(&self, s: Complex64) -> Complex64 {
        self.poles
            .iter()
            .zip(&self.residues)
            .map(|(p, r)| r / (s - p))
            .sum::<Complex64>()
            + self.d
    }

    pub fn sample(&self, grid: &AngularFrequencyGrid) -> FreqResponseData {
        FreqResponseData::new(grid.clone(), grid.points().map(|s| self.eval(s)).collect()).unwrap()
    }

    pub fn degree(&self) -> usize {
        self.poles.len()
    }
}

/// Stable poles with magnitudes spread over `[10^lo, 10^hi]`, one per
/// logarithmic bin so neighbours stay well separated. Some slots become
/// conjugate pairs with real part still in the band.
pub fn random_poles(rng: &mut ChaCha8Rng, degree: usize, lo: f64, hi: f64) -> Vec<Complex64> {
    let mut slots = degree;
    let mut mags = Vec::new();
    while slots > 0 {
        let pair = slots >= 2 && rng.random::<f64>() < 0.35;
        mags.push(pair);
        slots -= if pair { 2 } else { 1 };
    }
    let width = (hi - lo) / mags.len() as f64;
    let mut poles = Vec::with_capacity(degree);
    for (k, pair) in mags.into_iter().enumerate() {
        let pos = lo + width * (k as f64 + 0.2 + 0.6 * rng.random::<f64>());
        let w = 10f64.powf(pos);
        if pair {
            let zeta: f64 = rng.random_range(0.3..0.8);
            let re = -(zeta * w).max(10f64.powf(lo));
            let im = w * (1.0 - zeta * zeta).sqrt();
            poles.push(Complex64::new(re, im));
            poles.push(Complex64::new(re, -im));
        } else {
            poles.push(Complex64::new(-w, 0.0));
        }
    }
    poles
}

/// Residues of magnitude in `[0.5, 2]·|p|` so every mode contributes
/// comparably; conjugate poles get conjugate residues.
pub fn random_residues(rng: &mut ChaCha8Rng, poles: &[Complex64]) -> Vec<Complex64> {
    let mut out: Vec<Complex64> = Vec::with_capacity(poles.len());
    for (i, p) in poles.iter().enumerate() {
        if p.im < 0.0 && i > 0 && (poles[i - 1] - p.conj()).norm() == 0.0 {
            let prev = out[i - 1];
            out.push(prev.conj());
            continue;
        }
        let mag = rng.random_range(0.5..2.0) * p.norm();
        let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
        if p.im != 0.0 {
            let phase: f64 = rng.random_range(-1.2..1.2);
            out.push(Complex64::from_polar(mag, phase));
        } else {
            out.push(Complex64::new(sign * mag, 0.0));
        }
    }
    out
}

pub fn random_system(rng: &mut ChaCha8Rng, degree: usize) -> PoleResidue {
    let poles = random_poles(rng, degree, -3.0, 0.0);
    let residues = random_residues(rng, &poles);
    let d = if rng.random::<bool>() { rng.random_range(-1.0..1.0) } else { 0.0 };
    PoleResidue { poles, residues, d }
}

pub fn max_rel_error(a: &FreqResponseData, b: &FreqResponseData) -> f64 {
    a.samples()
        .iter()
        .zip(b.samples())
        .map(|(x, y)| (x - y).norm() / y.norm())
        .fold(0.0, f64::max)
}
