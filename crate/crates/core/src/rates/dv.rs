use serde::{Deserialize, Serialize};

use crate::encoder::DecoyIntensities;
use crate::error::{Error, Result};
use crate::math::binary_entropy;
use crate::receivers::SpadParams;

/// Number of failure events the security parameter is split over.
pub const HOEFFDING_CONST: f64 = 19.0;

/// Block statistics for the one-decoy bound. Index 0 of each pair is the
/// signal intensity, index 1 the decoy. Counts are `f64` so expected
/// (fractional) counts can be fed in as well as simulated ones.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DvRateInput {
    pub mu1: f64,
    pub mu2: f64,
    /// Probability of sending the signal intensity.
    pub p_mu1: f64,
    pub n_z: [f64; 2],
    pub n_x: [f64; 2],
    pub m_z: [f64; 2],
    pub m_x: [f64; 2],
    pub eps_sec: f64,
    pub eps_corr: f64,
    pub f_ec: f64,
    /// Pulses per second.
    pub pulse_rate: f64,
    /// Pulses per block.
    pub block_size: f64,
}

impl DvRateInput {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("mu1", self.mu1), ("mu2", self.mu2)] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::domain(name, v, "intensity must be > 0"));
            }
        }
        if !(self.p_mu1 > 0.0 && self.p_mu1 < 1.0) {
            return Err(Error::domain("p_mu1", self.p_mu1, "must be in (0, 1)"));
        }
        for (name, v) in [("eps_sec", self.eps_sec), ("eps_corr", self.eps_corr)] {
            if !(v > 0.0 && v < 1.0) {
                return Err(Error::domain(name, v, "security parameter must be in (0, 1)"));
            }
        }
        if !(self.f_ec > 0.0) || !self.f_ec.is_finite() {
            return Err(Error::domain("f_ec", self.f_ec, "must be > 0"));
        }
        if !(self.pulse_rate >= 0.0) {
            return Err(Error::domain("pulse_rate", self.pulse_rate, "must be >= 0"));
        }
        if !(self.block_size > 0.0) {
            return Err(Error::domain("block_size", self.block_size, "must be > 0"));
        }
        for (n, m) in [(self.n_z, self.m_z), (self.n_x, self.m_x)] {
            for k in 0..2 {
                if !(n[k] >= 0.0) || !n[k].is_finite() {
                    return Err(Error::domain("n", n[k], "counts must be finite and >= 0"));
                }
                if !(m[k] >= 0.0 && m[k] <= n[k]) {
                    return Err(Error::domain("m", m[k], "error counts must lie in [0, n]"));
                }
            }
        }
        Ok(())
    }

    fn probs(&self) -> [f64; 2] {
        [self.p_mu1, 1.0 - self.p_mu1]
    }

    fn mus(&self) -> [f64; 2] {
        [self.mu1, self.mu2]
    }

    /// Probability that a pulse carries exactly `n` photons.
    fn tau(&self, n: i32) -> f64 {
        let fact = (1..=n).product::<i32>() as f64;
        self.mus()
            .iter()
            .zip(self.probs())
            .map(|(&mu, p)| (-mu).exp() * mu.powi(n) / fact * p)
            .sum()
    }

    /// Hoeffding-corrected counts rescaled to the intensity, `(lower, upper)`.
    fn hoeffding(&self, counts: [f64; 2]) -> ([f64; 2], [f64; 2]) {
        let total: f64 = counts.iter().sum();
        let d = (total / 2.0 * (HOEFFDING_CONST / self.eps_sec).ln()).sqrt();
        let (mus, ps) = (self.mus(), self.probs());
        let f = |k: usize, s: f64| mus[k].exp() / ps[k] * (counts[k] + s * d);
        ([f(0, -1.0), f(1, -1.0)], [f(0, 1.0), f(1, 1.0)])
    }

    /// Lower bounds on vacuum and single-photon events in one basis.
    fn vacuum_single(&self, n: [f64; 2], m: [f64; 2]) -> (f64, f64) {
        let (mu1, mu2) = (self.mu1, self.mu2);
        let (lo, hi) = self.hoeffding(n);
        let total: f64 = n.iter().sum();
        let lnf = (HOEFFDING_CONST / self.eps_sec).ln();
        let t0 = self.tau(0);
        let s0_upper = 2.0 * (t0 * mu2.exp() * m[1] / (1.0 - self.p_mu1) + (total / 2.0 * lnf).sqrt());
        let s0 = t0 / (mu1 - mu2) * (mu1 * lo[1] - mu2 * hi[0]);
        let s1 = self.tau(1) * mu1 / (mu2 * (mu1 - mu2))
            * (lo[1] - mu2 * mu2 / (mu1 * mu1) * hi[0] - (mu1 * mu1 - mu2 * mu2) / (mu1 * mu1) * s0_upper / t0);
        (s0.max(0.0), s1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DvDiagnostic {
    /// Signal and decoy intensities coincide or are inverted.
    DecoyCollapsed,
    /// A basis has no sifted events.
    NoSiftedEvents,
    /// Single-photon lower bound is not positive in one of the bases.
    SinglePhotonBoundNonPositive,
    /// Phase-error bound reached 1/2.
    PhaseErrorSaturated,
    /// Error correction and privacy amplification consume the whole block.
    NegativeLength,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DvRateReport {
    /// Extractable key length, clamped at zero.
    pub secret_bits: f64,
    pub length_raw: f64,
    pub skr_bps: f64,
    pub n_z: f64,
    pub qber_z: f64,
    pub s_z0: f64,
    pub s_z1: f64,
    pub s_x1: f64,
    pub v_x1: f64,
    pub phi_z: f64,
    pub lambda_ec: f64,
    pub diagnostic: Option<DvDiagnostic>,
}

impl DvRateReport {
    fn zero(diagnostic: DvDiagnostic) -> Self {
        Self {
            secret_bits: 0.0,
            length_raw: 0.0,
            skr_bps: 0.0,
            n_z: 0.0,
            qber_z: 0.0,
            s_z0: 0.0,
            s_z1: 0.0,
            s_x1: 0.0,
            v_x1: 0.0,
            phi_z: 0.5,
            lambda_ec: 0.0,
            diagnostic: Some(diagnostic),
        }
    }
}

fn phase_error_bound(v: f64, s_x1: f64, s_z1: f64, eps: f64) -> f64 {
    let b = (v / s_x1).clamp(0.0, 0.5);
    if b == 0.0 || b == 0.5 {
        return b;
    }
    let (c, d) = (s_z1, s_x1);
    let arg = (c + d) / (c * d * (1.0 - b) * b) * (HOEFFDING_CONST / eps).powi(2);
    let gamma = ((c + d) * (1.0 - b) * b / (c * d * std::f64::consts::LN_2) * arg.log2()).sqrt();
    let phi = b + gamma;
    if phi.is_finite() {
        phi.min(0.5)
    } else {
        0.5
    }
}

/// Finite-key length of one block of the three-state one-decoy protocol:
///
/// `ℓ = s_Z0 + s_Z1(1 − h(φ_Z)) − λ_EC − 6·log2(19/ε_sec) − log2(2/ε_corr)`.
///
/// Degenerate statistics give a zero rate with a diagnostic rather than an
/// error; malformed input is an error.
pub fn skr_dv_finite(input: &DvRateInput) -> Result<DvRateReport> {
    input.validate()?;
    if input.mu1 <= input.mu2 {
        return Ok(DvRateReport::zero(DvDiagnostic::DecoyCollapsed));
    }
    let n_z: f64 = input.n_z.iter().sum();
    let n_x: f64 = input.n_x.iter().sum();
    if n_z == 0.0 || n_x == 0.0 {
        return Ok(DvRateReport::zero(DvDiagnostic::NoSiftedEvents));
    }

    let (s_z0, s_z1) = input.vacuum_single(input.n_z, input.m_z);
    let (_, s_x1) = input.vacuum_single(input.n_x, input.m_x);
    let (m_lo, m_hi) = input.hoeffding(input.m_x);
    let v_x1 = (input.tau(1) / (input.mu1 - input.mu2) * (m_hi[0] - m_lo[1])).max(0.0);

    let qber_z = input.m_z.iter().sum::<f64>() / n_z;
    let lambda_ec = input.f_ec * n_z * binary_entropy(qber_z)?;

    let mut report = DvRateReport {
        n_z,
        qber_z,
        s_z0,
        s_z1,
        s_x1,
        v_x1,
        lambda_ec,
        ..DvRateReport::zero(DvDiagnostic::NegativeLength)
    };
    if s_z1 <= 0.0 || s_x1 <= 0.0 {
        report.diagnostic = Some(DvDiagnostic::SinglePhotonBoundNonPositive);
        return Ok(report);
    }

    let phi = phase_error_bound(v_x1, s_x1, s_z1, input.eps_sec);
    report.phi_z = phi;
    if phi >= 0.5 {
        report.diagnostic = Some(DvDiagnostic::PhaseErrorSaturated);
    }
    let length = s_z0 + s_z1 * (1.0 - binary_entropy(phi)?) - lambda_ec
        - 6.0 * (HOEFFDING_CONST / input.eps_sec).log2()
        - (2.0 / input.eps_corr).log2();
    report.length_raw = length;
    if length > 0.0 {
        report.secret_bits = length;
        report.skr_bps = length * input.pulse_rate / input.block_size;
        if phi < 0.5 {
            report.diagnostic = None;
        }
    } else if report.diagnostic.is_none() {
        report.diagnostic = Some(DvDiagnostic::NegativeLength);
    }
    Ok(report)
}

/// Link-level description of the DV mode, used to predict block statistics
/// without simulating pulses.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DvLinkModel {
    pub intensities: DecoyIntensities,
    pub p_signal: f64,
    /// Probability that Alice sends R or L (key states); D otherwise.
    pub p_key_states: f64,
    pub spad: SpadParams,
    pub block_size: f64,
    pub pulse_rate: f64,
    pub f_ec: f64,
    pub eps_sec: f64,
    pub eps_corr: f64,
}

impl Default for DvLinkModel {
    fn default() -> Self {
        Self {
            intensities: DecoyIntensities::default(),
            p_signal: 0.7,
            p_key_states: 0.8,
            spad: SpadParams::default(),
            block_size: 1e7,
            pulse_rate: 50e6,
            f_ec: 1.06,
            eps_sec: 1e-9,
            eps_corr: 1e-9,
        }
    }
}

impl DvLinkModel {
    /// Click and error probabilities per pulse of intensity `mu` after a
    /// channel of transmittance `t`, given the measurement basis matches.
    pub fn click_error_prob(&self, mu: f64, t: f64) -> (f64, f64) {
        let pd = self.spad.dark_prob;
        let e_d = self.spad.misalignment.sin().powi(2);
        let m = mu * t * self.spad.eta_det;
        let p_err_bin = 1.0 - (1.0 - pd) * (-m * e_d).exp();
        let p_ok_bin = 1.0 - (1.0 - pd) * (-m * (1.0 - e_d)).exp();
        let click = 1.0 - (1.0 - p_err_bin) * (1.0 - p_ok_bin);
        let err = p_err_bin * (1.0 - p_ok_bin) + 0.5 * p_err_bin * p_ok_bin;
        (click, err)
    }

    /// Mean block statistics over a channel of transmittance `t`.
    pub fn expected_input(&self, t: f64) -> Result<DvRateInput> {
        self.intensities.validate()?;
        self.spad.validate()?;
        if !(0.0..=1.0).contains(&t) {
            return Err(Error::domain("t", t, "transmittance must be in [0, 1]"));
        }
        let mus = [self.intensities.signal, self.intensities.decoy];
        let ps = [self.p_signal, 1.0 - self.p_signal];
        let mut input = DvRateInput {
            mu1: mus[0],
            mu2: mus[1],
            p_mu1: self.p_signal,
            n_z: [0.0; 2],
            n_x: [0.0; 2],
            m_z: [0.0; 2],
            m_x: [0.0; 2],
            eps_sec: self.eps_sec,
            eps_corr: self.eps_corr,
            f_ec: self.f_ec,
            pulse_rate: self.pulse_rate,
            block_size: self.block_size,
        };
        let split = self.spad.basis_split;
        for k in 0..2 {
            let (click, err) = self.click_error_prob(mus[k], t);
            let z = self.block_size * ps[k] * self.p_key_states * split;
            let x = self.block_size * ps[k] * (1.0 - self.p_key_states) * (1.0 - split);
            input.n_z[k] = z * click;
            input.m_z[k] = z * err;
            input.n_x[k] = x * click;
            input.m_x[k] = x * err;
        }
        Ok(input)
    }

    pub fn rate(&self, t: f64) -> Result<DvRateReport> {
        skr_dv_finite(&self.expected_input(t)?)
    }
}
