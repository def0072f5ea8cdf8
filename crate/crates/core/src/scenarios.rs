//! Ready-made plants and the controllers published with the method.

use num_complex::Complex64;

use crate::plants::{DelayTerm, DelayedRational, OpenChannel, RationalLti};
use crate::poly;

/// RHP pole pair of the surrogate crystallizer, rad/s.
pub const SURROGATE_RHP_POLE: Complex64 = Complex64::new(1.07e-4, 0.852e-2);

/// Delay of the surrogate's feedback term, s.
pub const SURROGATE_DELAY: f64 = 10.0;

/// Static gain factor of the surrogate.
pub const SURROGATE_GAIN: f64 = 0.1;

/// Surrogate of a continuous crystallizer:
/// `P(s) = k·n(s) / (d(s)·[q(s) + r·e^{−sτ}])` with `d(s)` the quadratic
/// whose roots are the unstable pole pair, `q(s) = (s + 0.004)(s + 0.03)(s + 0.3)`,
/// `r = 0.3·q(0)` and `n(s) = (s + 0.002)(s + 0.015)(s + 0.12)(s + 0.6)`.
/// Since `|r e^{−jωτ}| ≤ 0.3·|q(jω)|` on the axis, the delayed factor has
/// no RHP zeros and the plant is minimum phase with exactly two RHP poles.
pub fn crystallizer_surrogate() -> DelayedRational {
    let p = SURROGATE_RHP_POLE;
    let pp = poly::from_roots(&[p, p.conj()]);
    let q = poly::from_roots(&real_roots(&[-0.004, -0.03, -0.3]));
    let r = 0.3 * 0.004 * 0.03 * 0.3;
    let num = poly::scale(&poly::from_roots(&real_roots(&[-0.002, -0.015, -0.12, -0.6])), SURROGATE_GAIN);
    DelayedRational::new(
        num,
        vec![
            DelayTerm { coeffs: poly::mul(&pp, &q), delay: 0.0 },
            DelayTerm { coeffs: poly::scale(&pp, r), delay: SURROGATE_DELAY },
        ],
    )
    .expect("surrogate coefficients are valid")
}

fn real_roots(r: &[f64]) -> Vec<Complex64> {
    r.iter().map(|x| Complex64::new(*x, 0.0)).collect()
}

/// Structured controller obtained by nonsmooth H∞ synthesis for the
/// crystallizer: `(54.47 s² + 2.317 s + 0.02446)/(s² + 0.002033 s + 4.374e−6)`.
pub fn structured_controller() -> RationalLti {
    RationalLti::new(vec![54.47, 2.317, 0.02446], vec![1.0, 0.002033, 4.374e-6])
        .expect("valid coefficients")
}

/// Published second-order data-driven controller
/// `39.082 (s² + 0.04164 s + 0.003132)/(s (s + 0.002751))`.
pub fn controller_k2() -> RationalLti {
    RationalLti::new(
        poly::scale(&[1.0, 0.04164, 0.003132], 39.082),
        vec![1.0, 0.002751, 0.0],
    )
    .expect("valid coefficients")
}

/// Published second-order controller for the closed-loop reference
/// `27.578 (s² + 0.06562 s + 0.004418)/((s + 1.026e−6)(s + 0.002737))`.
pub fn controller_k2_prime() -> RationalLti {
    RationalLti::new(
        poly::scale(&[1.0, 0.06562, 0.004418], 27.578),
        poly::mul(&[1.0, 1.026e-6], &[1.0, 0.002737]),
    )
    .expect("valid coefficients")
}

/// Open-channel reach with the level measured at the downstream end
/// (`x = L`). The coefficients put the characteristic frequencies of the
/// reach around `1e−4`–`1e−3` rad/s.
pub fn open_channel() -> OpenChannel {
    OpenChannel {
        b0: 50.0,
        length: 4500.0,
        x: 4500.0,
        a: 1.0 / 15.0,
        b: 1e-4,
        c: 16.0 / 225.0,
        d: 1e-3,
        e: 1e-8,
    }
}

/// Natural frequency of the open-channel reference model, rad/s.
pub const OPEN_CHANNEL_OMEGA0: f64 = 1e-5;

/// Damping of the open-channel reference model.
pub const OPEN_CHANNEL_XI: f64 = 1.0;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn surrogate_has_the_published_pole_pair() {
        let p = crystallizer_surrogate();
        let s = SURROGATE_RHP_POLE;
        let den0 = poly::horner(&p.terms()[0].coeffs, s);
        assert!(den0.norm() < 1e-15);
        assert!(p.eval(s + 1e-9).unwrap().norm() > 1e3);
    }

    #[test]
    fn published_controllers_evaluate() {
        let s = Complex64::new(0.0, 0.05);
        let k = controller_k2().eval(s).unwrap();
        let direct = 39.082 * (s * s + 0.04164 * s + 0.003132) / (s * (s + 0.002751));
        assert!((k - direct).norm() < 1e-12 * direct.norm());
        assert!(structured_controller().is_stable().unwrap());
        assert!(controller_k2_prime().is_stable().unwrap());
    }
}
