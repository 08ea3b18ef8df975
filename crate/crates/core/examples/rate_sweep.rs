//! CV and DV key rates against channel loss, baseline receiver for CV and a
//! long-block DV profile.
//!
//! cargo run --example rate_sweep

use hqkd::planner::planner_dv_profile;
use hqkd::rates::{skr_cv_asymptotic, CvRateInput};

pub fn main() -> hqkd::Result<()> {
    let dv = planner_dv_profile();
    println!("loss_db,cv_bps_xi0.012,cv_bps_xi0.03,dv_bps");
    for step in 0..=32 {
        let db = 2.5 * step as f64;
        let t = 10f64.powf(-db / 10.0);
        let cv = |xi_a| skr_cv_asymptotic(&CvRateInput { t, xi_a, ..CvRateInput::baseline() }).map(|r| r.skr_bps);
        println!("{db},{:.1},{:.1},{:.1}", cv(0.012)?, cv(0.03)?, dv.rate(t)?.skr_bps);
    }
    Ok(())
}
