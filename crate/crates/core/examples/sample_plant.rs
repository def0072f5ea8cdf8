//! Sample the surrogate crystallizer on the design grid and round-trip the CSV.

use lddc::plants::{make_log_grid, sample_response, FreqResponseData, TransferModel};
use lddc::scenarios;

fn main() -> lddc::Result<()> {
    let plant: TransferModel = scenarios::crystallizer_surrogate().into();
    let grid = make_log_grid(1e-3, 1.0, 500)?;
    let data = sample_response(&plant, &grid)?;

    let mut buf = Vec::new();
    data.write_csv(&mut buf)?;
    let back = FreqResponseData::read_csv(buf.as_slice())?;
    assert_eq!(back, data);

    for i in [0, 100, 250, 499] {
        let z = data.samples()[i];
        println!(
            "omega = {:.4e} rad/s  |P| = {:.4e}  arg P = {:+.3} rad",
            data.omegas()[i],
            z.norm(),
            z.arg()
        );
    }
    println!("{} rows, {} bytes of CSV", back.len(), buf.len());
    Ok(())
}
