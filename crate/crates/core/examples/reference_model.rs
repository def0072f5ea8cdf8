//! Make `M_init = 1/(1 + s)` achievable for a plant with an unstable pole pair.

use lddc::plants::RationalLti;
use lddc::refmodel::{eval_blaschke, make_achievable};
use lddc::scenarios::SURROGATE_RHP_POLE;
use lddc::unstable::InstabilityEstimate;
use lddc::Complex64;

fn main() -> lddc::Result<()> {
    let p = SURROGATE_RHP_POLE;
    let est = InstabilityEstimate::new(vec![p, p.conj()], vec![]);
    let m = make_achievable(RationalLti::first_order(1.0)?, &est)?;

    for q in [p, p.conj()] {
        println!("|M(p) - 1| = {:.3e}", (m.eval(q)? - 1.0).norm());
    }
    let mut worst: f64 = 0.0;
    for k in 0..=400 {
        let s = Complex64::new(0.0, 10f64.powf(-5.0 + k as f64 * 0.02));
        worst = worst.max((eval_blaschke(m.pole_blaschke(), s)?.norm() - 1.0).abs());
    }
    println!("max ||B_p(jw)| - 1| = {worst:.3e}");
    for w in [1e-3, 1e-2, 1e-1, 1.0] {
        let s = Complex64::new(0.0, w);
        println!("omega = {w:>6}: |M| = {:.4}  |M_init| = {:.4}", m.eval(s)?.norm(), m.m_init().eval(s)?.norm());
    }
    Ok(())
}
