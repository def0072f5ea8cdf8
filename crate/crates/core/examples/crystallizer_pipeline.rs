//! Full design run on the surrogate crystallizer, writing artifacts to a
//! directory (first argument, default `out/crystallizer`).

use std::path::{Path, PathBuf};

use lddc::pipeline::{run_pipeline, PipelineConfig};

fn main() -> lddc::Result<()> {
    let out = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(|| "out/crystallizer".into());
    let cfg_path = Path::new(env!("CARGO_MANIFEST_DIR")).join("configs/crystallizer.toml");
    let cfg = PipelineConfig::load(&cfg_path)?;
    let outcome = run_pipeline(&cfg, &out, true)?;

    let a = &outcome.analysis;
    println!("n_p = {}  poles {:?}", a.n_p, a.rhp_poles);
    println!("ideal controller order {:?}", a.loewner_minimal_order);
    if let Some(c) = &outcome.certificate {
        println!("gamma = {:.4}  bound = {:.4e}", c.certificate.gamma_tilde, c.certificate.bound);
        for e in &c.certificate.orders {
            println!(
                "order {}: delta {:.4e} stable {} certified {} projection {:?}",
                e.order,
                e.delta_norm.unwrap_or(f64::NAN),
                e.controller_stable,
                e.certified,
                c.projection_tests.get(&e.order).map(|t| t.verdict)
            );
        }
    }
    println!("exit status {}", outcome.status.code());
    Ok(())
}
