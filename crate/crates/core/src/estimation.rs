//! Parameter estimation from paired transmitter/receiver records.
//!
//! CV: the correlation `⟨X_A X_B⟩ = √(ηT/2)·V_A` and Bob's variance
//! `V_B = 1 + V_el + (ηT/2)(V_A + ξ_A)` are inverted for `T` and `ξ_A`,
//! with `V_A` known from the transmitter. DV: per-basis error rates over
//! sifted events.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::encoder::{CoherentSymbol, IntensityClass};
use crate::error::{Error, Result};
use crate::receivers::{Basis, QuadratureSample};

pub const MIN_PHASE_SYMBOLS: usize = 100;
pub const MIN_COV_SYMBOLS: usize = 1_000;
/// Slack on `T̂ ≤ 1` before the estimate is flagged.
pub const T_HAT_TOL: f64 = 0.02;
/// Default batching: 30 batches of 50 000 symbols.
pub const DEFAULT_BATCHES: usize = 30;
/// Two-sided 95% normal quantile used for Wilson intervals.
pub const WILSON_Z: f64 = 1.959_963_984_540_054;

/// Estimated frame rotation between Alice's labels and Bob's samples.
///
/// `residual` is the representative of the rotation in `(−π/4, π/4]`, the
/// part a blind estimator could see given the π/2 symmetry of QPSK.
/// `quarter_turns` resolves the symmetry using the paired labels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseEstimate {
    pub residual: f64,
    pub quarter_turns: u8,
}

impl PhaseEstimate {
    pub fn total(&self) -> f64 {
        self.residual + self.quarter_turns as f64 * FRAC_PI_2
    }
}

fn bob_amplitude(s: &QuadratureSample) -> Complex64 {
    Complex64::new(s.x, s.p)
}

/// The rotation θ maximizing `Σ Re(e^{−iθ}·β_B·conj(α_A))`, i.e. the argument
/// of the summed cross product.
pub fn recover_global_phase(alice: &[CoherentSymbol], bob: &[QuadratureSample]) -> Result<PhaseEstimate> {
    if alice.len() != bob.len() {
        return Err(Error::LengthMismatch(alice.len(), bob.len()));
    }
    if alice.len() < MIN_PHASE_SYMBOLS {
        return Err(Error::TooFewSamples {
            need: MIN_PHASE_SYMBOLS,
            got: alice.len(),
        });
    }
    let acc: Complex64 = alice
        .iter()
        .zip(bob)
        .map(|(a, b)| bob_amplitude(b) * a.alpha().conj())
        .sum();
    if !(acc.norm() > 0.0) {
        return Err(Error::Degenerate("no correlation between Alice and Bob"));
    }
    let theta = acc.arg();
    // shift into (−π/4, π/4] and count the quarter turns removed
    let k = ((theta + FRAC_PI_4) / FRAC_PI_2).ceil() - 1.0;
    let mut residual = theta - k * FRAC_PI_2;
    let mut k = k as i64;
    if residual <= -FRAC_PI_4 {
        residual += FRAC_PI_2;
        k -= 1;
    }
    Ok(PhaseEstimate {
        residual,
        quarter_turns: k.rem_euclid(4) as u8,
    })
}

/// Rotates Bob's samples by `−theta`.
pub fn apply_phase_correction(bob: &[QuadratureSample], theta: f64) -> Vec<QuadratureSample> {
    let r = Complex64::from_polar(1.0, -theta);
    bob.iter()
        .map(|s| {
            let b = bob_amplitude(s) * r;
            QuadratureSample {
                x: b.re,
                p: b.im,
                symbol_index: s.symbol_index,
            }
        })
        .collect()
}

/// Sampling covariance of the `(xaxb, vb)` estimates, from batch spread.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentCov {
    pub var_xaxb: f64,
    pub var_vb: f64,
    pub cov: f64,
    pub batches: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CovStats {
    /// `⟨X_A X_B⟩` pooled over both quadratures, SNU.
    pub xaxb: f64,
    /// Bob's variance pooled over both quadratures, SNU.
    pub vb: f64,
    pub n_symbols: usize,
    pub xaxb_x: f64,
    pub xaxb_p: f64,
    pub vb_x: f64,
    pub vb_p: f64,
    pub moment_cov: Option<MomentCov>,
}

fn moments(alice: &[CoherentSymbol], bob: &[QuadratureSample]) -> CovStats {
    let n = alice.len() as f64;
    let (mut cx, mut cp, mut mx, mut mp, mut sx, mut sp) = (0.0, 0.0, 0.0, 0.0, 0.0, 0.0);
    for (a, b) in alice.iter().zip(bob) {
        cx += a.x() * b.x;
        cp += a.p() * b.p;
        mx += b.x;
        mp += b.p;
        sx += b.x * b.x;
        sp += b.p * b.p;
    }
    let (cx, cp, mx, mp) = (cx / n, cp / n, mx / n, mp / n);
    let vb_x = sx / n - mx * mx;
    let vb_p = sp / n - mp * mp;
    CovStats {
        xaxb: 0.5 * (cx + cp),
        vb: 0.5 * (vb_x + vb_p),
        n_symbols: alice.len(),
        xaxb_x: cx,
        xaxb_p: cp,
        vb_x,
        vb_p,
        moment_cov: None,
    }
}

fn check_pair(alice: &[CoherentSymbol], bob: &[QuadratureSample]) -> Result<()> {
    if alice.len() != bob.len() {
        return Err(Error::LengthMismatch(alice.len(), bob.len()));
    }
    if alice.len() < MIN_COV_SYMBOLS {
        return Err(Error::TooFewSamples {
            need: MIN_COV_SYMBOLS,
            got: alice.len(),
        });
    }
    Ok(())
}

/// Empirical `⟨X_A X_B⟩` and `V_B` over phase-corrected samples.
pub fn estimate_covariance(alice: &[CoherentSymbol], bob: &[QuadratureSample]) -> Result<CovStats> {
    check_pair(alice, bob)?;
    Ok(moments(alice, bob))
}

/// As [`estimate_covariance`], also splitting the record into `batches`
/// equal blocks (remainder dropped from the spread estimate, kept in the
/// pooled moments) to measure the sampling covariance of the estimates.
pub fn estimate_covariance_batched(
    alice: &[CoherentSymbol],
    bob: &[QuadratureSample],
    batches: usize,
) -> Result<CovStats> {
    check_pair(alice, bob)?;
    let mut stats = moments(alice, bob);
    if batches < 2 {
        return Ok(stats);
    }
    let size = alice.len() / batches;
    if size == 0 {
        return Err(Error::TooFewSamples {
            need: batches,
            got: alice.len(),
        });
    }
    let per: Vec<CovStats> = (0..batches)
        .map(|i| moments(&alice[i * size..(i + 1) * size], &bob[i * size..(i + 1) * size]))
        .collect();
    let k = batches as f64;
    let mx = per.iter().map(|s| s.xaxb).sum::<f64>() / k;
    let mv = per.iter().map(|s| s.vb).sum::<f64>() / k;
    let (mut vxx, mut vvv, mut vxv) = (0.0, 0.0, 0.0);
    for s in &per {
        vxx += (s.xaxb - mx).powi(2);
        vvv += (s.vb - mv).powi(2);
        vxv += (s.xaxb - mx) * (s.vb - mv);
    }
    // sample covariance of one batch, divided by k for the mean
    let norm = (k - 1.0) * k;
    stats.moment_cov = Some(MomentCov {
        var_xaxb: vxx / norm,
        var_vb: vvv / norm,
        cov: vxv / norm,
        batches,
    });
    Ok(stats)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EstimationFlag {
    /// `T̂` outside `[0, 1 + T_HAT_TOL]`.
    TransmittanceOutOfRange,
    /// `V_B < 1 + V_el`: the data sit below the trusted noise floor.
    NegativeExcessNoise,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimationReport {
    pub t_hat: f64,
    pub xi_hat: f64,
    pub vb: f64,
    pub xaxb: f64,
    pub t_std: Option<f64>,
    pub xi_std: Option<f64>,
    pub flags: Vec<EstimationFlag>,
}

impl EstimationReport {
    pub fn is_clean(&self) -> bool {
        self.flags.is_empty()
    }
}

/// Inverts the two moment relations:
/// `T̂ = 2·xaxb²/(η·V_A²)`, `ξ̂ = (V_B − 1 − V_el)·2/(η·T̂) − V_A`.
/// Standard errors follow from the batch covariance by the delta method.
pub fn estimate_channel(stats: &CovStats, v_a: f64, eta: f64, v_el: f64) -> Result<EstimationReport> {
    if !(v_a > 0.0) {
        return Err(Error::domain("v_a", v_a, "modulation variance must be > 0"));
    }
    if !(eta > 0.0 && eta <= 1.0) {
        return Err(Error::domain("eta", eta, "efficiency must be in (0, 1]"));
    }
    let x = stats.xaxb;
    let noise = stats.vb - 1.0 - v_el;
    let t_hat = 2.0 * x * x / (eta * v_a * v_a);
    if !(t_hat > 0.0) {
        return Err(Error::Degenerate("zero correlation: transmittance estimate is 0"));
    }
    let xi_hat = noise * 2.0 / (eta * t_hat) - v_a;

    let mut flags = Vec::new();
    if !(0.0..=1.0 + T_HAT_TOL).contains(&t_hat) {
        flags.push(EstimationFlag::TransmittanceOutOfRange);
    }
    if noise < 0.0 {
        flags.push(EstimationFlag::NegativeExcessNoise);
    }

    let (t_std, xi_std) = match stats.moment_cov {
        Some(c) => {
            // ξ̂ = noise·V_A²/x² − V_A
            let dt_dx = 4.0 * x / (eta * v_a * v_a);
            let dxi_dx = -2.0 * noise * v_a * v_a / x.powi(3);
            let dxi_dv = v_a * v_a / (x * x);
            let var_t = dt_dx * dt_dx * c.var_xaxb;
            let var_xi = dxi_dx * dxi_dx * c.var_xaxb + dxi_dv * dxi_dv * c.var_vb + 2.0 * dxi_dx * dxi_dv * c.cov;
            (Some(var_t.max(0.0).sqrt()), Some(var_xi.max(0.0).sqrt()))
        }
        None => (None, None),
    };

    Ok(EstimationReport {
        t_hat,
        xi_hat,
        vb: stats.vb,
        xaxb: x,
        t_std,
        xi_std,
        flags,
    })
}

/// One sifted DV event.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SiftedEvent {
    pub basis: Basis,
    pub class: IntensityClass,
    pub sent: bool,
    pub measured: bool,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Tally {
    pub events: u64,
    pub errors: u64,
}

impl Tally {
    pub fn add(&mut self, other: Tally) {
        self.events += other.events;
        self.errors += other.errors;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BasisQber {
    pub qber: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub events: u64,
    pub errors: u64,
}

/// Wilson score interval at `WILSON_Z`.
pub fn wilson_interval(errors: u64, events: u64) -> (f64, f64) {
    if events == 0 {
        return (0.0, 1.0);
    }
    let n = events as f64;
    let p = errors as f64 / n;
    let z2 = WILSON_Z * WILSON_Z;
    let denom = 1.0 + z2 / n;
    let centre = (p + z2 / (2.0 * n)) / denom;
    let half = WILSON_Z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    ((centre - half).max(0.0), (centre + half).min(1.0))
}

/// Running error counts per basis and intensity class.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct QberTally {
    pub z_signal: Tally,
    pub z_decoy: Tally,
    pub x_signal: Tally,
    pub x_decoy: Tally,
}

impl QberTally {
    pub fn slot(&mut self, basis: Basis, class: IntensityClass) -> &mut Tally {
        match (basis, class) {
            (Basis::Z, IntensityClass::Signal) => &mut self.z_signal,
            (Basis::Z, IntensityClass::Decoy) => &mut self.z_decoy,
            (Basis::X, IntensityClass::Signal) => &mut self.x_signal,
            (Basis::X, IntensityClass::Decoy) => &mut self.x_decoy,
        }
    }

    pub fn record(&mut self, ev: &SiftedEvent) {
        let t = self.slot(ev.basis, ev.class);
        t.events += 1;
        t.errors += (ev.sent != ev.measured) as u64;
    }

    pub fn merge(&mut self, other: &QberTally) {
        self.z_signal.add(other.z_signal);
        self.z_decoy.add(other.z_decoy);
        self.x_signal.add(other.x_signal);
        self.x_decoy.add(other.x_decoy);
    }

    pub fn basis_total(&self, basis: Basis) -> Tally {
        let mut t = match basis {
            Basis::Z => self.z_signal,
            Basis::X => self.x_signal,
        };
        t.add(match basis {
            Basis::Z => self.z_decoy,
            Basis::X => self.x_decoy,
        });
        t
    }

    pub fn report(&self) -> QberReport {
        let basis = |b| {
            let t = self.basis_total(b);
            (t.events > 0).then(|| {
                let (lo, hi) = wilson_interval(t.errors, t.events);
                BasisQber {
                    qber: t.errors as f64 / t.events as f64,
                    ci_low: lo,
                    ci_high: hi,
                    events: t.events,
                    errors: t.errors,
                }
            })
        };
        QberReport {
            qber_z: basis(Basis::Z),
            qber_x: basis(Basis::X),
            counts: *self,
        }
    }
}

/// Per-basis QBER; `None` marks a basis with no sifted events.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QberReport {
    pub qber_z: Option<BasisQber>,
    pub qber_x: Option<BasisQber>,
    pub counts: QberTally,
}

pub fn estimate_qber(sifted: &[SiftedEvent]) -> Result<QberReport> {
    if sifted.is_empty() {
        return Err(Error::Degenerate("no sifted events"));
    }
    let mut tally = QberTally::default();
    sifted.iter().for_each(|e| tally.record(e));
    Ok(tally.report())
}

/// Wraps an angle into `(−π, π]`.
pub fn wrap_angle(a: f64) -> f64 {
    let mut r = a.rem_euclid(2.0 * PI);
    if r > PI {
        r -= 2.0 * PI;
    }
    r
}
