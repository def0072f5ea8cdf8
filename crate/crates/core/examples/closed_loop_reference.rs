//! Use the closed loop of the structured controller as reference model and
//! compare the resulting second-order controller with the published one.

use lddc::certify::reconstruct_closed_loop;
use lddc::loewner::{build_pencil, partition_points, realize, zpk};
use lddc::plants::{make_log_grid, sample_response, TransferModel};
use lddc::refmodel::ideal_controller_from_samples;
use lddc::scenarios;

fn main() -> lddc::Result<()> {
    let grid = make_log_grid(1e-3, 1.0, 500)?;
    let plant: TransferModel = scenarios::crystallizer_surrogate().into();
    let p = sample_response(&plant, &grid)?;
    let c = sample_response(&scenarios::structured_controller().into(), &grid)?;
    let m_prime = reconstruct_closed_loop(&p, &c)?;

    let kstar = ideal_controller_from_samples(&p, &m_prime)?;
    let k = realize(&build_pencil(&partition_points(&kstar)?)?, 2)?;
    println!("order-2 controller for M':\n{}", zpk(&k)?);
    println!("structured controller C:\n{}", zpk(&lddc::loewner::DescriptorSystem::from_rational(&scenarios::structured_controller())?)?);
    println!("published K2':\n{}", zpk(&lddc::loewner::DescriptorSystem::from_rational(&scenarios::controller_k2_prime())?)?);
    Ok(())
}
