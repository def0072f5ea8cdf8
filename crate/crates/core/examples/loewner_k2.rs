//! Recover the published second-order controller from 50 samples.

use lddc::loewner::{build_pencil, controller_poles, minimal_order, partition_points, realize, zpk, DEFAULT_TOL};
use lddc::plants::{make_log_grid, sample_response, TransferModel};
use lddc::scenarios;

fn main() -> lddc::Result<()> {
    let k2: TransferModel = scenarios::controller_k2().into();
    let data = sample_response(&k2, &make_log_grid(1e-4, 1.0, 50)?)?;

    let pencil = build_pencil(&partition_points(&data)?)?;
    let r = minimal_order(&pencil, DEFAULT_TOL);
    println!("singular values of [L; Ls]:");
    for s in pencil.svals_stacked.iter().take(5) {
        println!("  {s:.4e}");
    }
    println!("minimal order {r}, feedthrough {:.6}", pencil.feedthrough);

    let sys = realize(&pencil, r)?;
    let mut worst: f64 = 0.0;
    for (s, k) in data.grid().points().zip(data.samples()) {
        worst = worst.max((sys.eval(s)? - k).norm() / k.norm());
    }
    println!("max relative error {worst:.3e}");
    println!("poles {:?}", controller_poles(&sys)?);
    println!("{}", zpk(&sys)?);
    Ok(())
}
