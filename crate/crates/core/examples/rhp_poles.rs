//! Count and locate the unstable poles of the surrogate crystallizer.

use lddc::plants::{make_log_grid, sample_response, TransferModel};
use lddc::scenarios::{self, SURROGATE_RHP_POLE};
use lddc::unstable::{analyze_plant, AnalysisOptions};

fn main() -> lddc::Result<()> {
    let plant: TransferModel = scenarios::crystallizer_surrogate().into();
    let data = sample_response(&plant, &make_log_grid(1e-4, 10.0, 2000)?)?;
    let a = analyze_plant(&data, &AnalysisOptions::default())?;

    let sv = &a.poles.count.hankel_svals;
    println!("leading Hankel singular values:");
    for (k, s) in sv.iter().take(5).enumerate() {
        println!("  sigma_{} = {:.4e}", k + 1, s);
    }
    println!("n_p = {}, gap = {:.3e}", a.estimate.n_p, a.poles.count.gap.unwrap_or(f64::NAN));
    for p in &a.estimate.rhp_poles {
        println!("  pole {:.5e} {:+.5e}j", p.re, p.im);
    }
    println!("true pair {:.5e} +/- {:.5e}j", SURROGATE_RHP_POLE.re, SURROGATE_RHP_POLE.im);
    println!("n_z = {}", a.estimate.n_z);
    Ok(())
}
