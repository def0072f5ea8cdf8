//! Split `1/(s − 0.5) + 2/(s + 1)` into its antistable and stable parts.

use lddc::hardy::{project, Alpha};
use lddc::plants::{make_log_grid, sample_response, RationalLti, TransferModel};
use lddc::Complex64;

fn main() -> lddc::Result<()> {
    // (s + 1 + 2(s − 0.5)) / ((s − 0.5)(s + 1))
    let p: TransferModel = RationalLti::new(vec![3.0, 0.0], vec![1.0, 0.5, -0.5])?.into();
    let data = sample_response(&p, &make_log_grid(1e-3, 1e3, 800)?)?;
    let split = project(&data, 40, Alpha::Auto)?;

    println!("basis pole alpha = {:.4}", split.basis_pole);
    println!("antistable energy fraction = {:.4}", split.antistable_fraction());
    println!("residual energy = {:.2e}", split.residual_energy);
    for w in [0.1, 1.0, 10.0] {
        let s = Complex64::new(0.0, w);
        let anti = split.eval_antistable(s);
        let exact = 1.0 / (s - 0.5);
        println!("omega = {w:>5}: antistable {anti:.6}  exact {exact:.6}");
    }
    Ok(())
}
