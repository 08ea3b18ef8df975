//! Three-state one-decoy DV run over a 6.6 dB link with 0.6 % intrinsic
//! QBER, one 2·10⁸-pulse block at 50 MHz.
//!
//! cargo run --release --example dv_baseline [seed]

use std::time::Instant;

use hqkd::harness::{run_dv_experiment, DvExperimentConfig};

pub fn main() -> hqkd::Result<()> {
    let seed = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(5);
    let cfg = DvExperimentConfig::baseline(seed);
    let start = Instant::now();
    let report = run_dv_experiment(&cfg)?;
    let elapsed = start.elapsed();

    for b in &report.blocks {
        let z = b.qber.qber_z.expect("no Z events");
        let x = b.qber.qber_x.expect("no X events");
        println!(
            "block {}: QBER_Z {:.3}% [{:.3}, {:.3}]  QBER_X {:.3}%  n_Z {}  SKR {:.2} kbit/s",
            b.block,
            100.0 * z.qber,
            100.0 * z.ci_low,
            100.0 * z.ci_high,
            100.0 * x.qber,
            z.events,
            b.rate.skr_bps / 1e3
        );
        println!(
            "  s_Z1 {:.0}  s_X1 {:.0}  phi_Z {:.4}  lambda_EC {:.0}  diagnostic {:?}",
            b.rate.s_z1, b.rate.s_x1, b.rate.phi_z, b.rate.lambda_ec, b.rate.diagnostic
        );
    }
    println!("mean SKR {:.2} kbit/s ({:.1?})", report.mean_skr_bps / 1e3, elapsed);
    Ok(())
}
