use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{db_to_transmittance, dv_propagate, ChannelParams};
use crate::encoder::{dv_symbol, DecoyIntensities, DvState, IntensityClass};
use crate::error::{Error, Result};
use crate::estimation::{QberReport, QberTally, SiftedEvent};
use crate::math::RandomSource;
use crate::rates::{skr_dv_finite, DvRateInput, DvRateReport};
use crate::receivers::{spad_measure, Basis, SpadParams};

/// Pulses per parallel work unit; each chunk draws from its own stream.
const CHUNK: u64 = 1 << 20;
const MIN_BLOCK: u64 = 100_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DvExperimentConfig {
    pub pulse_rate: f64,
    pub mu1: f64,
    pub mu2: f64,
    /// `[signal, decoy]` sending probabilities.
    pub intensity_probs: [f64; 2],
    /// `[D, R, L]` sending probabilities.
    pub state_probs: [f64; 3],
    pub loss_db: f64,
    /// Residual retardance, rad; `sin²` of it is the intrinsic QBER.
    pub misalignment: f64,
    pub eta_det: f64,
    pub dark_prob: f64,
    #[serde(default = "half")]
    pub basis_split: f64,
    /// Pulses per finite-key block.
    pub block_size: u64,
    /// Simulated acquisition time, s. Only completed blocks are kept.
    pub duration: f64,
    pub seed: u64,
    #[serde(default = "default_f_ec")]
    pub f_ec: f64,
    #[serde(default = "default_eps_sec")]
    pub eps_sec: f64,
    #[serde(default = "default_eps_corr")]
    pub eps_corr: f64,
}

fn half() -> f64 {
    0.5
}
fn default_f_ec() -> f64 {
    1.06
}
fn default_eps_sec() -> f64 {
    1e-9
}
fn default_eps_corr() -> f64 {
    1e-9
}

impl DvExperimentConfig {
    /// 6.6 dB link with the intrinsic error tuned to 0.6 %, one block of
    /// 2·10⁸ pulses (4 s at 50 MHz).
    pub fn baseline(seed: u64) -> Self {
        Self {
            pulse_rate: 50e6,
            mu1: 0.5,
            mu2: 0.1,
            intensity_probs: [0.7, 0.3],
            state_probs: [0.2, 0.4, 0.4],
            loss_db: 6.6,
            misalignment: SpadParams::misalignment_for_qber(0.006),
            eta_det: 0.03,
            dark_prob: 1e-6,
            basis_split: 0.5,
            block_size: 200_000_000,
            duration: 4.0,
            seed,
            f_ec: default_f_ec(),
            eps_sec: default_eps_sec(),
            eps_corr: default_eps_corr(),
        }
    }

    pub fn spad(&self) -> SpadParams {
        SpadParams {
            eta_det: self.eta_det,
            dark_prob: self.dark_prob,
            misalignment: self.misalignment,
            basis_split: self.basis_split,
        }
    }

    pub fn n_blocks(&self) -> u64 {
        (self.duration * self.pulse_rate / self.block_size as f64).floor() as u64
    }

    pub fn validate(&self) -> Result<()> {
        DecoyIntensities {
            signal: self.mu1,
            decoy: self.mu2,
        }
        .validate()?;
        self.spad().validate()?;
        db_to_transmittance(self.loss_db)?;
        for (name, probs) in [("intensity_probs", &self.intensity_probs[..]), ("state_probs", &self.state_probs[..])] {
            if probs.iter().any(|p| !(0.0..=1.0).contains(p)) || (probs.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
                return Err(Error::Config(format!("{name} must be probabilities summing to 1")));
            }
        }
        if self.block_size < MIN_BLOCK {
            return Err(Error::Config(format!("block_size must be at least {MIN_BLOCK}")));
        }
        if !(self.pulse_rate > 0.0) || !(self.duration >= 0.0) {
            return Err(Error::Config("pulse_rate must be > 0 and duration >= 0".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DvBlockResult {
    pub block: u64,
    pub qber: QberReport,
    pub rate: DvRateReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DvExperimentReport {
    pub seed: u64,
    pub blocks: Vec<DvBlockResult>,
    /// Tallies over all completed blocks.
    pub qber: QberReport,
    /// Mean of the per-block rates, bits/s.
    pub mean_skr_bps: f64,
}

/// Keeps Z events from R/L pulses and X events from D pulses.
fn sift(label: DvState, basis: Basis, class: IntensityClass, outcome: bool) -> Option<SiftedEvent> {
    let sent = match (label, basis) {
        (DvState::R, Basis::Z) => false,
        (DvState::L, Basis::Z) => true,
        (DvState::D, Basis::X) => false,
        _ => return None,
    };
    Some(SiftedEvent {
        basis,
        class,
        sent,
        measured: outcome,
    })
}

fn simulate_chunk(cfg: &DvExperimentConfig, ch: &ChannelParams, rng: &mut RandomSource, start: u64, len: u64) -> Result<QberTally> {
    let spad = cfg.spad();
    let states = [
        cfg.state_probs[0],
        cfg.state_probs[0] + cfg.state_probs[1],
        1.0,
    ];
    let pulses = [
        DvState::ALL.map(|s| dv_symbol(s, cfg.mu1, IntensityClass::Signal)),
        DvState::ALL.map(|s| dv_symbol(s, cfg.mu2, IntensityClass::Decoy)),
    ];
    let mut tally = QberTally::default();
    for slot in start..start + len {
        let k = usize::from(!rng.bernoulli(cfg.intensity_probs[0]));
        let pulse = pulses[k][rng.pick(&states)].clone()?.at_slot(slot);
        let n = dv_propagate(&pulse, ch, rng)?;
        let ev = spad_measure(&pulse.state, n, &spad, rng);
        if ev.click {
            if let Some(s) = sift(pulse.label, ev.basis, pulse.class, ev.outcome) {
                tally.record(&s);
            }
        }
    }
    Ok(tally)
}

fn rate_input(cfg: &DvExperimentConfig, t: &QberTally) -> DvRateInput {
    let pair = |b: Basis, errors: bool| {
        [IntensityClass::Signal, IntensityClass::Decoy].map(|c| {
            let mut tt = *t;
            let s = tt.slot(b, c);
            (if errors { s.errors } else { s.events }) as f64
        })
    };
    DvRateInput {
        mu1: cfg.mu1,
        mu2: cfg.mu2,
        p_mu1: cfg.intensity_probs[0],
        n_z: pair(Basis::Z, false),
        n_x: pair(Basis::X, false),
        m_z: pair(Basis::Z, true),
        m_x: pair(Basis::X, true),
        eps_sec: cfg.eps_sec,
        eps_corr: cfg.eps_corr,
        f_ec: cfg.f_ec,
        pulse_rate: cfg.pulse_rate,
        block_size: cfg.block_size as f64,
    }
}

/// Simulates every completed block of the pulse train and applies the
/// finite-key bound to each.
pub fn run_dv_experiment(cfg: &DvExperimentConfig) -> Result<DvExperimentReport> {
    cfg.validate()?;
    let ch = ChannelParams::from_loss_db(cfg.loss_db, 0.0)?;
    let root = RandomSource::new(cfg.seed);
    let n_blocks = cfg.n_blocks();
    let chunks_per_block = cfg.block_size.div_ceil(CHUNK);

    let mut blocks = Vec::new();
    let mut total = QberTally::default();
    for b in 0..n_blocks {
        let tallies: Vec<QberTally> = (0..chunks_per_block)
            .into_par_iter()
            .map(|c| {
                let start = c * CHUNK;
                let len = CHUNK.min(cfg.block_size - start);
                let mut rng = root.derive(b * chunks_per_block + c);
                simulate_chunk(cfg, &ch, &mut rng, b * cfg.block_size + start, len)
            })
            .collect::<Result<_>>()?;
        let mut tally = QberTally::default();
        tallies.iter().for_each(|t| tally.merge(t));
        total.merge(&tally);
        blocks.push(DvBlockResult {
            block: b,
            qber: tally.report(),
            rate: skr_dv_finite(&rate_input(cfg, &tally))?,
        });
    }
    let mean_skr_bps = if blocks.is_empty() {
        0.0
    } else {
        blocks.iter().map(|b| b.rate.skr_bps).sum::<f64>() / blocks.len() as f64
    };
    Ok(DvExperimentReport {
        seed: cfg.seed,
        blocks,
        qber: total.report(),
        mean_skr_bps,
    })
}
