//! Baseline operating point: analytic moments, the simulated 30 × 50 000
//! symbol chain, channel estimates and the linear-channel key rate.
//!
//! cargo run --release --example cv_baseline [seed]

use hqkd::harness::{run_cv_experiment, CvExperimentConfig};
use hqkd::rates::{holevo_lc_explicit, skr_cv_asymptotic, CvRateInput, DetectorTrust};

pub fn main() -> hqkd::Result<()> {
    let seed = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(1);
    let cfg = CvExperimentConfig::baseline(seed);
    let (eta, t, v_a, v_el, xi) = (cfg.eta, cfg.t.unwrap(), cfg.v_a, cfg.v_el, cfg.xi_a);

    let g: f64 = eta * t / 2.0;
    println!("expected <X_A X_B> = {:.4}  V_B = {:.4}", g.sqrt() * v_a, 1.0 + v_el + g * (v_a + xi));

    let out = run_cv_experiment(&cfg)?;
    let r = &out.report;
    let e = &r.estimation;
    println!("measured <X_A X_B> = {:.4}  V_B = {:.4}", e.xaxb, e.vb);
    println!(
        "T = {:.4} +/- {:.4}   xi_A = {:.4} +/- {:.4}   flags {:?}",
        e.t_hat,
        e.t_std.unwrap_or(f64::NAN),
        e.xi_hat,
        e.xi_std.unwrap_or(f64::NAN),
        e.flags
    );

    let nominal = CvRateInput::baseline();
    for trust in [DetectorTrust::NoiseOnly, DetectorTrust::Full] {
        let inp = CvRateInput { trust, ..nominal };
        let rate = skr_cv_asymptotic(&inp)?;
        println!(
            "{trust:?}: I_AB {:.4}  chi_E {:.4} (explicit {:.4})  SKR {:.4} bit/symbol = {:.2} Mbit/s",
            rate.i_ab,
            rate.chi_e,
            holevo_lc_explicit(&inp)?,
            rate.skr_per_symbol,
            rate.skr_bps / 1e6
        );
    }
    println!(
        "rate from the estimated channel: {:.4} bit/symbol = {:.2} Mbit/s",
        r.rate.skr_per_symbol,
        r.rate.skr_bps / 1e6
    );
    Ok(())
}
