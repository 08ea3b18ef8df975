//! Heterodyne (CV) and time-multiplexed single-photon (DV) receivers.

use serde::{Deserialize, Serialize};

use crate::encoder::{CoherentSymbol, JonesState};
use crate::error::{Error, Result};
use crate::math::RandomSource;

/// Trusted heterodyne receiver with an oscilloscope front end.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HetParams {
    /// Overall efficiency: photodiode efficiency times receiver transmittance.
    pub eta: f64,
    /// Electronic noise, SNU.
    pub v_el: f64,
    pub adc_bits: u32,
    /// ADC range is `±adc_fullscale` volts.
    pub adc_fullscale: f64,
    /// Volts per unit quadrature (square root of the shot-noise variance).
    pub volts_per_snu: f64,
}

impl Default for HetParams {
    fn default() -> Self {
        Self {
            eta: 0.30,
            v_el: 0.081,
            adc_bits: 8,
            adc_fullscale: 0.25,
            volts_per_snu: 0.02,
        }
    }
}

impl HetParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.eta > 0.0 && self.eta <= 1.0) {
            return Err(Error::domain("eta", self.eta, "efficiency must be in (0, 1]"));
        }
        if !(self.v_el >= 0.0) || !self.v_el.is_finite() {
            return Err(Error::domain("v_el", self.v_el, "electronic noise must be >= 0"));
        }
        if self.adc_bits == 0 || self.adc_bits > 32 {
            return Err(Error::domain("adc_bits", self.adc_bits as f64, "ADC resolution must be 1..=32 bits"));
        }
        if !(self.adc_fullscale > 0.0) {
            return Err(Error::domain("adc_fullscale", self.adc_fullscale, "ADC range must be > 0"));
        }
        if !(self.volts_per_snu > 0.0) {
            return Err(Error::domain("volts_per_snu", self.volts_per_snu, "conversion factor must be > 0"));
        }
        Ok(())
    }

    /// Shot-plus-electronic to electronic noise power ratio, dB. Derived
    /// from `v_el`, not an independent noise source.
    pub fn clearance_db(&self) -> f64 {
        10.0 * ((1.0 + self.v_el) / self.v_el).log10()
    }

    pub fn adc_step(&self) -> f64 {
        2.0 * self.adc_fullscale / 2f64.powi(self.adc_bits as i32)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureSample {
    pub x: f64,
    pub p: f64,
    pub symbol_index: u64,
}

/// Heterodyne detection of a symbol that has crossed the channel. Each
/// quadrature gets gain `√(η/2)` and Gaussian noise of variance `1 + V_el`
/// (vacuum from the split and the efficiency loss, plus electronics).
pub fn heterodyne_measure(
    sym: &CoherentSymbol,
    det: &HetParams,
    rng: &mut RandomSource,
    symbol_index: u64,
) -> QuadratureSample {
    let g = (det.eta / 2.0).sqrt();
    let s = (1.0 + det.v_el).sqrt();
    QuadratureSample {
        x: g * sym.x() + s * rng.standard_normal(),
        p: g * sym.p() + s * rng.standard_normal(),
        symbol_index,
    }
}

/// Mid-tread uniform quantizer with step `2·fullscale/2^bits`, saturating at
/// `±fullscale`.
pub fn adc_quantize(v: f64, det: &HetParams) -> f64 {
    let step = det.adc_step();
    let q = (v / step).round() * step;
    q.clamp(-det.adc_fullscale, det.adc_fullscale)
}

/// Single-quadrature trace with the signal port blocked, in volts.
pub fn record_vacuum(det: &HetParams, n: usize, quantize: bool, rng: &mut RandomSource) -> Vec<f64> {
    let s = (1.0 + det.v_el).sqrt() * det.volts_per_snu;
    (0..n)
        .map(|_| {
            let v = s * rng.standard_normal();
            if quantize {
                adc_quantize(v, det)
            } else {
                v
            }
        })
        .collect()
}

/// Trace with the local oscillator off as well: electronics only.
pub fn record_dark(det: &HetParams, n: usize, quantize: bool, rng: &mut RandomSource) -> Vec<f64> {
    let s = det.v_el.sqrt() * det.volts_per_snu;
    (0..n)
        .map(|_| {
            let v = s * rng.standard_normal();
            if quantize {
                adc_quantize(v, det)
            } else {
                v
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SnuCalibration {
    pub volts_per_snu: f64,
    pub v_el: f64,
}

impl SnuCalibration {
    pub fn to_snu(&self, volts: f64) -> f64 {
        volts / self.volts_per_snu
    }
}

fn variance(xs: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n
}

/// Shot-noise calibration from a vacuum trace and a dark (electronics-only)
/// trace.
pub fn calibrate_snu(vacuum: &[f64], dark: &[f64]) -> Result<SnuCalibration> {
    if vacuum.is_empty() || dark.is_empty() {
        return Err(Error::Calibration("empty calibration record".into()));
    }
    let (vv, vd) = (variance(vacuum), variance(dark));
    let shot = vv - vd;
    if !(shot > 0.0) {
        return Err(Error::Calibration(format!(
            "vacuum variance {vv:e} V² does not exceed dark variance {vd:e} V²"
        )));
    }
    Ok(SnuCalibration {
        volts_per_snu: shot.sqrt(),
        v_el: vd / shot,
    })
}

/// Measurement basis of the DV receiver.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Basis {
    /// Key basis {|R⟩, |L⟩}; R is bit 0.
    Z,
    /// Check basis {|D⟩, |A⟩}; D is bit 0.
    X,
}

impl Basis {
    /// State that reads as bit 0.
    pub fn zero_state(self) -> JonesState {
        match self {
            Basis::Z => JonesState::right(),
            Basis::X => JonesState::diagonal(),
        }
    }
}

/// Single-SPAD receiver with passive basis choice.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpadParams {
    /// Receiver efficiency including the SPAD.
    pub eta_det: f64,
    /// Dark-count probability per gate, for each of the two outcome bins.
    pub dark_prob: f64,
    /// Residual retardance between transmitter and receiver frames, rad.
    pub misalignment: f64,
    /// Probability of measuring in the key basis.
    pub basis_split: f64,
}

impl Default for SpadParams {
    fn default() -> Self {
        Self {
            eta_det: 0.2,
            dark_prob: 1e-6,
            misalignment: 0.0,
            basis_split: 0.5,
        }
    }
}

impl SpadParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("eta_det", self.eta_det),
            ("dark_prob", self.dark_prob),
            ("basis_split", self.basis_split),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::domain(name, v, "probability must be in [0, 1]"));
            }
        }
        if !self.misalignment.is_finite() {
            return Err(Error::domain("misalignment", self.misalignment, "angle must be finite"));
        }
        Ok(())
    }

    /// Retardance giving an intrinsic error rate `qber` in both bases.
    pub fn misalignment_for_qber(qber: f64) -> f64 {
        qber.clamp(0.0, 1.0).sqrt().asin()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DetectionEvent {
    pub basis: Basis,
    pub outcome: bool,
    pub click: bool,
}

/// One detection window. Each photon survives with `eta_det` and lands in
/// a Born-rule outcome bin of the chosen basis; each bin can also fire a
/// dark count. Double clicks are resolved by a fair coin.
pub fn spad_measure(state: &JonesState, n_photons: u64, det: &SpadParams, rng: &mut RandomSource) -> DetectionEvent {
    let basis = if rng.bernoulli(det.basis_split) { Basis::Z } else { Basis::X };

    let pd = det.dark_prob;
    let (mut bin0, mut bin1) = (false, false);
    let u = rng.uniform();
    if u < pd {
        bin0 = true;
        bin1 = rng.bernoulli(pd);
    } else if u < pd + (1.0 - pd) * pd {
        bin1 = true;
    }

    if n_photons > 0 {
        let p0 = basis.zero_state().overlap(&state.retard(det.misalignment));
        for _ in 0..n_photons {
            if rng.bernoulli(det.eta_det) {
                if rng.bernoulli(p0) {
                    bin0 = true;
                } else {
                    bin1 = true;
                }
            }
        }
    }

    let (click, outcome) = match (bin0, bin1) {
        (false, false) => (false, false),
        (true, false) => (true, false),
        (false, true) => (true, true),
        (true, true) => (true, rng.bernoulli(0.5)),
    };
    DetectionEvent { basis, outcome, click }
}
