use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{cv_propagate, ChannelParams};
use crate::encoder::{qpsk_symbol, CoherentSymbol};
use crate::error::{Error, Result};
use crate::estimation::{
    apply_phase_correction, estimate_channel, estimate_covariance_batched, recover_global_phase, EstimationReport,
    PhaseEstimate,
};
use crate::math::RandomSource;
use crate::rates::{skr_cv_asymptotic, CvRateInput, CvRateReport, DetectorTrust};
use crate::receivers::{adc_quantize, calibrate_snu, heterodyne_measure, record_dark, record_vacuum, HetParams, QuadratureSample, SnuCalibration};

/// Stream index reserved for the calibration traces.
const CALIBRATION_STREAM: u64 = 1 << 40;

fn default_batches() -> usize {
    30
}

fn default_calibration_samples() -> usize {
    1_000_000
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CvExperimentConfig {
    pub v_a: f64,
    /// Channel transmittance; give this or `loss_db`.
    #[serde(default)]
    pub t: Option<f64>,
    #[serde(default)]
    pub loss_db: Option<f64>,
    pub xi_a: f64,
    pub eta: f64,
    pub v_el: f64,
    pub beta: f64,
    pub symbol_rate: f64,
    pub n_symbols: usize,
    #[serde(default = "default_batches")]
    pub batches: usize,
    pub seed: u64,
    /// Digitize through the 8-bit ADC and calibrate SNU from vacuum/dark traces.
    #[serde(default)]
    pub adc: bool,
    #[serde(default = "default_calibration_samples")]
    pub calibration_samples: usize,
    /// Unknown phase between the local oscillator and Alice's reference, rad.
    #[serde(default)]
    pub lo_phase: f64,
    #[serde(default)]
    pub trust: DetectorTrust,
}

impl CvExperimentConfig {
    /// Baseline operating point with the 30 × 50 000-symbol protocol.
    pub fn baseline(seed: u64) -> Self {
        Self {
            v_a: 0.45,
            t: Some(0.72),
            loss_db: None,
            xi_a: 0.012,
            eta: 0.30,
            v_el: 0.081,
            beta: 0.95,
            symbol_rate: 50e6,
            n_symbols: 1_500_000,
            batches: 30,
            seed,
            adc: false,
            calibration_samples: default_calibration_samples(),
            lo_phase: 0.0,
            trust: DetectorTrust::NoiseOnly,
        }
    }

    pub fn channel(&self) -> Result<ChannelParams> {
        match (self.t, self.loss_db) {
            (Some(t), None) => ChannelParams::from_transmittance(t, self.xi_a),
            (None, Some(db)) => ChannelParams::from_loss_db(db, self.xi_a),
            _ => Err(Error::Config("give exactly one of `t` and `loss_db`".into())),
        }
    }

    pub fn detector(&self) -> HetParams {
        HetParams {
            eta: self.eta,
            v_el: self.v_el,
            ..HetParams::default()
        }
    }

    pub fn rate_input(&self, t: f64, xi_a: f64, v_el: f64) -> CvRateInput {
        CvRateInput {
            v_a: self.v_a,
            t,
            xi_a,
            eta: self.eta,
            v_el,
            beta: self.beta,
            symbol_rate: self.symbol_rate,
            trust: self.trust,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ch = self.channel()?;
        self.detector().validate()?;
        self.rate_input(ch.t, ch.xi_a, self.v_el).validate()?;
        if self.batches == 0 || self.n_symbols < self.batches {
            return Err(Error::Config(format!(
                "n_symbols ({}) must be at least batches ({})",
                self.n_symbols, self.batches
            )));
        }
        if !self.lo_phase.is_finite() {
            return Err(Error::domain("lo_phase", self.lo_phase, "must be finite"));
        }
        Ok(())
    }
}

/// One line of the constellation dump.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConstellationRow {
    pub symbol_index: u64,
    pub x_a: f64,
    pub p_a: f64,
    pub x_b: f64,
    pub p_b: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvExperimentReport {
    pub seed: u64,
    pub n_symbols: usize,
    pub batches: usize,
    pub phase: PhaseEstimate,
    pub calibration: Option<SnuCalibration>,
    pub estimation: EstimationReport,
    /// Rate from the estimated channel (estimates clamped to the physical range).
    pub rate: CvRateReport,
    /// Rate from the configured channel, for comparison.
    pub rate_nominal: CvRateReport,
}

#[derive(Debug, Clone)]
pub struct CvExperimentOutput {
    pub report: CvExperimentReport,
    pub constellation: Vec<ConstellationRow>,
}

fn rotate(s: &QuadratureSample, theta: f64) -> QuadratureSample {
    let (sin, cos) = theta.sin_cos();
    QuadratureSample {
        x: cos * s.x - sin * s.p,
        p: sin * s.x + cos * s.p,
        symbol_index: s.symbol_index,
    }
}

/// Simulates the QPSK chain batch by batch (batches run in parallel on
/// independent streams and are concatenated in order), then calibrates,
/// recovers the global phase, estimates `T` and `ξ_A` and evaluates rates.
pub fn run_cv_experiment(cfg: &CvExperimentConfig) -> Result<CvExperimentOutput> {
    cfg.validate()?;
    let ch = cfg.channel()?;
    let det = cfg.detector();
    let root = RandomSource::new(cfg.seed);

    let calibration = if cfg.adc {
        let mut rng = root.derive(CALIBRATION_STREAM);
        let vac = record_vacuum(&det, cfg.calibration_samples, true, &mut rng);
        let dark = record_dark(&det, cfg.calibration_samples, true, &mut rng);
        Some(calibrate_snu(&vac, &dark)?)
    } else {
        None
    };

    let per_batch = cfg.n_symbols / cfg.batches;
    let extra = cfg.n_symbols % cfg.batches;
    let batches: Vec<(Vec<CoherentSymbol>, Vec<QuadratureSample>)> = (0..cfg.batches)
        .into_par_iter()
        .map(|b| -> Result<_> {
            let mut rng = root.derive(b as u64);
            let len = per_batch + usize::from(b < extra);
            let start = b * per_batch + b.min(extra);
            let mut alice = Vec::with_capacity(len);
            let mut bob = Vec::with_capacity(len);
            for i in 0..len {
                let k = (rng.uniform() * 4.0) as usize;
                let sym = qpsk_symbol(k.min(3), cfg.v_a)?;
                let out = cv_propagate(&sym, &ch, &mut rng);
                let mut s = rotate(&heterodyne_measure(&out, &det, &mut rng, (start + i) as u64), cfg.lo_phase);
                if let Some(cal) = &calibration {
                    let adc = |q: f64| cal.to_snu(adc_quantize(q * det.volts_per_snu, &det));
                    s.x = adc(s.x);
                    s.p = adc(s.p);
                }
                alice.push(sym);
                bob.push(s);
            }
            Ok((alice, bob))
        })
        .collect::<Result<_>>()?;
    let (alice, bob): (Vec<_>, Vec<_>) = batches.into_iter().fold((Vec::new(), Vec::new()), |(mut a, mut b), (x, y)| {
        a.extend(x);
        b.extend(y);
        (a, b)
    });

    let phase = recover_global_phase(&alice, &bob)?;
    let bob = apply_phase_correction(&bob, phase.total());
    let stats = estimate_covariance_batched(&alice, &bob, cfg.batches)?;
    let v_el = calibration.map_or(cfg.v_el, |c| c.v_el);
    let estimation = estimate_channel(&stats, cfg.v_a, cfg.eta, v_el)?;

    let rate = skr_cv_asymptotic(&cfg.rate_input(
        estimation.t_hat.clamp(0.0, 1.0),
        estimation.xi_hat.max(0.0),
        v_el,
    ))?;
    let rate_nominal = skr_cv_asymptotic(&cfg.rate_input(ch.t, ch.xi_a, cfg.v_el))?;

    let constellation = alice
        .iter()
        .zip(&bob)
        .map(|(a, b)| ConstellationRow {
            symbol_index: b.symbol_index,
            x_a: a.x(),
            p_a: a.p(),
            x_b: b.x,
            p_b: b.p,
        })
        .collect();

    Ok(CvExperimentOutput {
        report: CvExperimentReport {
            seed: cfg.seed,
            n_symbols: cfg.n_symbols,
            batches: cfg.batches,
            phase,
            calibration,
            estimation,
            rate,
            rate_nominal,
        },
        constellation,
    })
}
