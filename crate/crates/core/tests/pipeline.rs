//! Cross-module checks: the simulated chains against the analytic models.

use hqkd::channel::db_to_transmittance;
use hqkd::harness::{run_cv_experiment, run_dv_experiment, CvExperimentConfig, DvExperimentConfig};
use hqkd::rates::{skr_cv_asymptotic, skr_dv_finite, DvLinkModel};
use hqkd::receivers::Basis;

#[test]
fn cv_rate_from_estimates_tracks_nominal() {
    let out = run_cv_experiment(&CvExperimentConfig::baseline(3)).unwrap().report;
    let e = &out.estimation;
    // three standard errors of ξ̂ translate to about ±0.02 bit/symbol here
    assert!((out.rate.skr_per_symbol - out.rate_nominal.skr_per_symbol).abs() < 0.02);
    assert!((e.t_hat - 0.72).abs() < 3.0 * e.t_std.unwrap());
    assert!((e.xi_hat - 0.012).abs() < 3.0 * e.xi_std.unwrap());
}

#[test]
fn adc_chain_agrees_with_analog_chain() {
    let analog = CvExperimentConfig {
        v_a: 5.0,
        n_symbols: 600_000,
        ..CvExperimentConfig::baseline(12)
    };
    let digital = CvExperimentConfig {
        adc: true,
        lo_phase: -1.0,
        ..analog.clone()
    };
    let a = run_cv_experiment(&analog).unwrap().report.estimation;
    let d = run_cv_experiment(&digital).unwrap().report.estimation;
    assert!((a.t_hat - d.t_hat).abs() < 0.01, "{a:?} {d:?}");
    assert!((a.xi_hat - d.xi_hat).abs() < 0.05, "{a:?} {d:?}");
}

#[test]
fn dv_simulation_matches_expected_rate() {
    let cfg = DvExperimentConfig {
        block_size: 20_000_000,
        duration: 0.4,
        eta_det: 0.2,
        ..DvExperimentConfig::baseline(8)
    };
    let sim = run_dv_experiment(&cfg).unwrap();
    let model = DvLinkModel {
        p_signal: cfg.intensity_probs[0],
        p_key_states: cfg.state_probs[1] + cfg.state_probs[2],
        spad: cfg.spad(),
        block_size: cfg.block_size as f64,
        ..DvLinkModel::default()
    };
    let expect = skr_dv_finite(&model.expected_input(db_to_transmittance(6.6).unwrap()).unwrap()).unwrap();
    let got = &sim.blocks[0].rate;
    assert!(expect.skr_bps > 0.0);
    assert!((got.skr_bps / expect.skr_bps - 1.0).abs() < 0.1, "{} vs {}", got.skr_bps, expect.skr_bps);
    assert!(sim.qber.counts.basis_total(Basis::X).events > 0);
}

#[test]
fn nominal_rate_matches_calculator() {
    let cfg = CvExperimentConfig {
        n_symbols: 50_000,
        ..CvExperimentConfig::baseline(1)
    };
    let r = run_cv_experiment(&cfg).unwrap().report;
    let direct = skr_cv_asymptotic(&cfg.rate_input(0.72, 0.012, 0.081)).unwrap();
    assert_eq!(r.rate_nominal, direct);
}
