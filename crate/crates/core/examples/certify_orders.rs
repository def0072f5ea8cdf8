//! Small-gain certificate for reduced controllers of a stable rational plant.

use lddc::certify::{certify_orders, projection_stability_test, reconstruct_closed_loop_with, ProjectionTestOptions};
use lddc::loewner::{build_pencil, minimal_order, partition_points, DEFAULT_TOL};
use lddc::plants::{make_log_grid, sample_response, RationalLti, TransferModel};
use lddc::refmodel::{ideal_controller, make_achievable};
use lddc::unstable::InstabilityEstimate;

fn main() -> lddc::Result<()> {
    // Lightly damped third-order plant with relative degree one.
    let plant = RationalLti::from_zpk(
        &[lddc::Complex64::new(-3.0, 0.0), lddc::Complex64::new(-1.0, 0.0)],
        &[
            lddc::Complex64::new(-0.2, 1.5),
            lddc::Complex64::new(-0.2, -1.5),
            lddc::Complex64::new(-4.0, 0.0),
        ],
        4.0,
    )?;
    let model: TransferModel = plant.into();
    let data = sample_response(&model, &make_log_grid(1e-2, 1e2, 400)?)?;
    let est = InstabilityEstimate::default();
    let m = make_achievable(RationalLti::first_order(0.5)?, &est)?;
    let kstar = ideal_controller(&data, &m)?;
    let pencil = build_pencil(&partition_points(&kstar)?)?;
    let n = minimal_order(&pencil, DEFAULT_TOL);
    println!("ideal controller order {n}");

    let orders: Vec<usize> = (1..=n).collect();
    let cert = certify_orders(&pencil, &kstar, &data, &m, &orders)?;
    let c = &cert.certificate;
    println!("gamma = {:.4}, bound = {:.4}", c.gamma_tilde, c.bound);
    for e in &c.orders {
        let k = &cert.controllers[&e.order];
        let h = reconstruct_closed_loop_with(&data, k)?;
        let t = projection_stability_test(&h, &est, Some(k), &ProjectionTestOptions::default())?;
        println!(
            "order {}: delta {:.3e} stable K {} certified {} projection {:?}",
            e.order,
            e.delta_norm.unwrap_or(f64::NAN),
            e.controller_stable,
            e.certified,
            t.verdict
        );
    }
    println!("max certified order {:?}", c.max_certified_order);
    Ok(())
}
