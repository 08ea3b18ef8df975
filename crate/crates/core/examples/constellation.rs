//! Constellation at V_A = 12.4 SNU: cluster centroids, spread
//! and a CSV dump for plotting.
//!
//! cargo run --release --example constellation [out.csv]

use hqkd::cli::{constellation_csv, constellation_config};
use hqkd::encoder::QPSK_PHASES;
use hqkd::estimation::wrap_angle;
use hqkd::harness::run_cv_experiment;

pub fn main() -> hqkd::Result<()> {
    let cfg = constellation_config(4);
    let out = run_cv_experiment(&cfg)?;

    let mut sums = [(0.0, 0.0, 0.0, 0.0, 0usize); 4];
    for row in &out.constellation {
        let phase = row.p_a.atan2(row.x_a);
        let k = QPSK_PHASES
            .iter()
            .position(|&q| wrap_angle(q - phase).abs() < 0.1)
            .expect("QPSK phase");
        let s = &mut sums[k];
        s.0 += row.x_b;
        s.1 += row.p_b;
        s.2 += row.x_b * row.x_b;
        s.3 += row.p_b * row.p_b;
        s.4 += 1;
    }
    for (k, (sx, sp, sxx, spp, n)) in sums.iter().enumerate() {
        let n = *n as f64;
        let (mx, mp) = (sx / n, sp / n);
        let std = (0.5 * (sxx / n - mx * mx + spp / n - mp * mp)).sqrt();
        println!(
            "cluster {k}: centroid ({mx:+.3}, {mp:+.3})  phase {:+.3}  radius {:.3}  std {std:.3}  n {n}",
            mp.atan2(mx),
            mx.hypot(mp)
        );
    }

    if let Some(path) = std::env::args().nth(1) {
        std::fs::write(&path, constellation_csv(&out.constellation)).expect("write csv");
        println!("wrote {path}");
    }
    Ok(())
}
