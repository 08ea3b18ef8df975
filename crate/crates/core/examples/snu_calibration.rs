//! Shot-noise calibration of the 8-bit heterodyne front end from vacuum and
//! dark traces.
//!
//! cargo run --release --example snu_calibration

use hqkd::math::RandomSource;
use hqkd::receivers::{calibrate_snu, record_dark, record_vacuum, HetParams};

pub fn main() -> hqkd::Result<()> {
    let det = HetParams::default();
    let mut rng = RandomSource::new(17);
    println!(
        "ADC step {:.2} mV, clearance {:.2} dB",
        det.adc_step() * 1e3,
        det.clearance_db()
    );
    for n in [10_000, 100_000, 1_000_000] {
        for quantize in [false, true] {
            let vac = record_vacuum(&det, n, quantize, &mut rng);
            let dark = record_dark(&det, n, quantize, &mut rng);
            let cal = calibrate_snu(&vac, &dark)?;
            println!(
                "n {n:>8} adc {quantize:<5} -> {:.3} mV/SNU^0.5, V_el {:.4} (true {:.4})",
                cal.volts_per_snu * 1e3,
                cal.v_el,
                det.v_el
            );
        }
    }
    Ok(())
}
