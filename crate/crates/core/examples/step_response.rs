//! Unit-step response of `1/(s + 1)` under a realized PI-like controller.

use lddc::certify::step_response;
use lddc::loewner::{build_pencil, partition_points, realize};
use lddc::plants::{make_log_grid, sample_response, RationalLti};
use lddc::refmodel::{ideal_controller, make_achievable};
use lddc::unstable::InstabilityEstimate;

fn main() -> lddc::Result<()> {
    let plant = RationalLti::new(vec![1.0], vec![1.0, 1.0])?;
    let data = sample_response(&plant.clone().into(), &make_log_grid(1e-2, 1e2, 200)?)?;
    let m = make_achievable(RationalLti::first_order(0.5)?, &InstabilityEstimate::default())?;
    let kstar = ideal_controller(&data, &m)?;
    let k = realize(&build_pencil(&partition_points(&kstar)?)?, 1)?;

    let step = step_response(&plant, &k, 3.0, 1e-3)?;
    if let Some(w) = &step.stiffness_warning {
        println!("warning: {w}");
    }
    for i in (0..step.t.len()).step_by(500) {
        let exact = 1.0 - (-step.t[i] / 0.5).exp();
        println!("t = {:.2}  y = {:.6}  reference {:.6}", step.t[i], step.y[i], exact);
    }
    Ok(())
}
