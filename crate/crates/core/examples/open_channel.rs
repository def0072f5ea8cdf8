//! Open-channel reach: integrator handling and a second-order controller.

use lddc::certify::{certify_orders, reconstruct_closed_loop_with};
use lddc::loewner::{build_pencil, controller_poles, minimal_order, partition_points, DEFAULT_TOL};
use lddc::plants::{make_log_grid, sample_response, RationalLti, TransferModel};
use lddc::refmodel::{ideal_controller, make_achievable};
use lddc::scenarios::{self, OPEN_CHANNEL_OMEGA0, OPEN_CHANNEL_XI};
use lddc::unstable::{analyze_plant, AnalysisOptions};

fn main() -> lddc::Result<()> {
    let plant: TransferModel = scenarios::open_channel().into();
    let design = sample_response(&plant, &make_log_grid(1e-7, 1e-2, 500)?)?;
    let wide = sample_response(&plant, &make_log_grid(1e-8, 1e-1, 2000)?)?;

    let a = analyze_plant(&wide, &AnalysisOptions::default())?;
    let c = &a.poles.conditioning;
    println!("integrator detected: {}", c.integrator_detected);
    println!("bandpass: {:?}", c.bandpass);
    println!("RHP poles beyond the integrator: {}", a.estimate.n_p);

    let m = make_achievable(RationalLti::second_order(OPEN_CHANNEL_OMEGA0, OPEN_CHANNEL_XI)?, &a.estimate)?;
    let kstar = ideal_controller(&design, &m)?;
    let pencil = build_pencil(&partition_points(&kstar)?)?;
    println!("ideal controller order {}", minimal_order(&pencil, DEFAULT_TOL));

    let cert = certify_orders(&pencil, &kstar, &design, &m, &[2])?;
    let k2 = &cert.controllers[&2];
    println!("K2 poles {:?}", controller_poles(k2)?);
    println!("certified: {}", cert.certificate.orders[0].certified);
    let h = reconstruct_closed_loop_with(&design, k2)?;
    println!("|H(j w_min) - 1| = {:.4}", (h.samples()[0] - 1.0).norm());
    Ok(())
}
