//! The switchable Sagnac encoder.
//!
//! With both switches routing through the delay line the loop is
//! asymmetric and acts as a polarization modulator: early and late drive
//! pulses give the H and V components different phases. Bypassing the delay
//! makes the loop symmetric, so the same phase lands on both components and
//! the device becomes a polarization-insensitive phase modulator (σx up to a
//! fixed phase) suited to M-PSK coherent states.

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, PI};
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Global-phase-insensitive equality threshold on `|⟨a|b⟩|²`.
pub const STATE_EQ_TOL: f64 = 1e-10;

const NORM_TOL: f64 = 1e-12;

/// Polarization qubit as amplitudes on `|H⟩` and `|V⟩`.
#[derive(Debug, Clone, Copy)]
pub struct JonesState {
    pub h: Complex64,
    pub v: Complex64,
}

impl JonesState {
    /// Normalizes the input; fails on the zero vector.
    pub fn new(h: Complex64, v: Complex64) -> Result<Self> {
        let n = (h.norm_sqr() + v.norm_sqr()).sqrt();
        if !(n > 0.0) || !n.is_finite() {
            return Err(Error::Degenerate("Jones vector has zero norm"));
        }
        Ok(Self { h: h / n, v: v / n })
    }

    fn raw(h: Complex64, v: Complex64) -> Self {
        Self { h, v }
    }

    pub fn horizontal() -> Self {
        Self::raw(Complex64::ONE, Complex64::ZERO)
    }

    pub fn vertical() -> Self {
        Self::raw(Complex64::ZERO, Complex64::ONE)
    }

    /// `(|H⟩ + |V⟩)/√2`
    pub fn diagonal() -> Self {
        Self::raw(FRAC_1_SQRT_2.into(), FRAC_1_SQRT_2.into())
    }

    /// `(|H⟩ − |V⟩)/√2`
    pub fn antidiagonal() -> Self {
        Self::raw(FRAC_1_SQRT_2.into(), (-FRAC_1_SQRT_2).into())
    }

    /// `(|H⟩ − i|V⟩)/√2`
    pub fn right() -> Self {
        Self::raw(FRAC_1_SQRT_2.into(), Complex64::new(0.0, -FRAC_1_SQRT_2))
    }

    /// `(|H⟩ + i|V⟩)/√2`
    pub fn left() -> Self {
        Self::raw(FRAC_1_SQRT_2.into(), Complex64::new(0.0, FRAC_1_SQRT_2))
    }

    pub fn norm_sqr(&self) -> f64 {
        self.h.norm_sqr() + self.v.norm_sqr()
    }

    pub fn is_normalized(&self) -> bool {
        (self.norm_sqr() - 1.0).abs() <= NORM_TOL
    }

    /// `⟨self|other⟩`
    pub fn inner(&self, other: &JonesState) -> Complex64 {
        self.h.conj() * other.h + self.v.conj() * other.v
    }

    /// `|⟨self|other⟩|²`
    pub fn overlap(&self, other: &JonesState) -> f64 {
        self.inner(other).norm_sqr()
    }

    /// Equality up to global phase.
    pub fn same_ray(&self, other: &JonesState) -> bool {
        self.overlap(other) >= 1.0 - STATE_EQ_TOL
    }

    pub fn scale(&self, z: Complex64) -> Self {
        Self::raw(self.h * z, self.v * z)
    }

    /// Pauli X: swaps the H and V amplitudes.
    pub fn sigma_x(&self) -> Self {
        Self::raw(self.v, self.h)
    }

    /// Differential retardance `diag(e^{-iθ}, e^{iθ})`. A retardance of θ
    /// leaks `sin²θ` of the population into the orthogonal state of both the
    /// diagonal and the circular basis.
    pub fn retard(&self, theta: f64) -> Self {
        Self::raw(
            self.h * Complex64::from_polar(1.0, -theta),
            self.v * Complex64::from_polar(1.0, theta),
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PathMode {
    /// Asymmetric loop through ΔL: polarization (DV) encoding.
    PolPath,
    /// Symmetric loop, ΔL bypassed: phase (CV) encoding.
    PhPath,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SwitchState {
    Delay,
    Bypass,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EncoderMode {
    pub path: PathMode,
    pub sw1: SwitchState,
    pub sw2: SwitchState,
}

/// Maps the two switch positions to an operating mode. Mixed positions
/// would leave the loop open.
pub fn set_mode(sw1: SwitchState, sw2: SwitchState) -> Result<EncoderMode> {
    let path = match (sw1, sw2) {
        (SwitchState::Delay, SwitchState::Delay) => PathMode::PolPath,
        (SwitchState::Bypass, SwitchState::Bypass) => PathMode::PhPath,
        _ => {
            return Err(Error::InvalidSwitches(format!(
                "SW1 = {sw1:?}, SW2 = {sw2:?}; both switches must agree"
            )))
        }
    };
    Ok(EncoderMode { path, sw1, sw2 })
}

/// Fiber delay geometry and the resulting early/late drive-pulse spacing.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EncoderTiming {
    /// Delay-line length in meters.
    pub delta_l: f64,
    /// Slow-axis refractive index of the PM fiber.
    pub n_f: f64,
}

impl EncoderTiming {
    pub fn new(delta_l: f64, n_f: f64) -> Result<Self> {
        if !(delta_l >= 0.0) {
            return Err(Error::domain("delta_l", delta_l, "delay length must be >= 0"));
        }
        if !(n_f >= 1.0) {
            return Err(Error::domain("n_f", n_f, "refractive index must be >= 1"));
        }
        Ok(Self { delta_l, n_f })
    }

    /// `n_f·ΔL/c`, seconds.
    pub fn pulse_separation(&self) -> f64 {
        self.n_f * self.delta_l / SPEED_OF_LIGHT
    }
}

/// Output of the asymmetric loop for drive phases `phi_e` (early, on the
/// component leaving as H) and `phi_l` (late, leaving as V), up to global
/// phase: `(|H⟩ + e^{i(φl−φe)}|V⟩)/√2`.
pub fn polarization_output(phi_e: f64, phi_l: f64) -> JonesState {
    JonesState::raw(
        FRAC_1_SQRT_2.into(),
        Complex64::from_polar(FRAC_1_SQRT_2, phi_l - phi_e),
    )
}

/// Output of the symmetric loop: `σx·ψ·e^{iφ}`.
pub fn phase_output(psi_in: &JonesState, phi: f64) -> JonesState {
    psi_in.sigma_x().scale(Complex64::from_polar(1.0, phi))
}

/// The encoder with its switches set.
#[derive(Debug, Clone, Copy)]
pub struct HybridEncoder {
    mode: EncoderMode,
    timing: EncoderTiming,
}

impl HybridEncoder {
    pub fn new(sw1: SwitchState, sw2: SwitchState, timing: EncoderTiming) -> Result<Self> {
        Ok(Self {
            mode: set_mode(sw1, sw2)?,
            timing,
        })
    }

    pub fn polarization(timing: EncoderTiming) -> Self {
        Self {
            mode: set_mode(SwitchState::Delay, SwitchState::Delay).unwrap(),
            timing,
        }
    }

    pub fn phase(timing: EncoderTiming) -> Self {
        Self {
            mode: set_mode(SwitchState::Bypass, SwitchState::Bypass).unwrap(),
            timing,
        }
    }

    pub fn mode(&self) -> EncoderMode {
        self.mode
    }

    pub fn switch(&mut self, sw1: SwitchState, sw2: SwitchState) -> Result<EncoderMode> {
        self.mode = set_mode(sw1, sw2)?;
        Ok(self.mode)
    }

    /// Spacing of the early and late drive pulses. Zero when the delay is
    /// bypassed.
    pub fn pulse_separation(&self) -> f64 {
        match self.mode.path {
            PathMode::PolPath => self.timing.pulse_separation(),
            PathMode::PhPath => 0.0,
        }
    }

    fn require(&self, expected: PathMode) -> Result<()> {
        if self.mode.path != expected {
            return Err(Error::WrongMode {
                expected,
                actual: self.mode.path,
            });
        }
        Ok(())
    }

    pub fn pol_state(&self, phi_e: f64, phi_l: f64) -> Result<JonesState> {
        self.require(PathMode::PolPath)?;
        Ok(polarization_output(phi_e, phi_l))
    }

    pub fn phase_state(&self, psi_in: &JonesState, phi: f64) -> Result<JonesState> {
        self.require(PathMode::PhPath)?;
        Ok(phase_output(psi_in, phi))
    }
}

/// Constellation phases of the four QPSK symbols, in symbol order.
///
/// The modulator settings are π/2, 3π/2, −3π/2 and −π/2. Taken literally the
/// last two repeat the first two mod 2π, so symbols 2 and 3 are placed on the
/// remaining corners of the square to give four points at π/2 spacing.
pub const QPSK_PHASES: [f64; 4] = [FRAC_PI_2, 3.0 * FRAC_PI_2, PI, 0.0];

/// Modulator drive settings as labelled on the transmitter.
pub const QPSK_DRIVE_LABELS: [f64; 4] = [FRAC_PI_2, 3.0 * FRAC_PI_2, -3.0 * FRAC_PI_2, -FRAC_PI_2];

/// Coherent state `|α⟩`. Quadratures use the shot-noise convention
/// `x = 2 Re α`, `p = 2 Im α` (vacuum variance 1).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoherentSymbol {
    pub re: f64,
    pub im: f64,
}

impl CoherentSymbol {
    pub fn new(alpha: Complex64) -> Self {
        Self {
            re: alpha.re,
            im: alpha.im,
        }
    }

    pub fn from_quadratures(x: f64, p: f64) -> Self {
        Self { re: x / 2.0, im: p / 2.0 }
    }

    pub fn alpha(&self) -> Complex64 {
        Complex64::new(self.re, self.im)
    }

    pub fn x(&self) -> f64 {
        2.0 * self.re
    }

    pub fn p(&self) -> f64 {
        2.0 * self.im
    }

    /// `μ = |α|²`
    pub fn mean_photons(&self) -> f64 {
        self.re * self.re + self.im * self.im
    }
}

/// QPSK symbol `k` at modulation variance `v_a` (SNU): `|α|² = v_a/2`, so the
/// uniform four-point mixture has per-quadrature variance `v_a`.
pub fn qpsk_symbol(k: usize, v_a: f64) -> Result<CoherentSymbol> {
    if !(v_a > 0.0) || !v_a.is_finite() {
        return Err(Error::domain("v_a", v_a, "modulation variance must be > 0"));
    }
    let phase = *QPSK_PHASES
        .get(k)
        .ok_or(Error::domain("k", k as f64, "QPSK symbol index must be 0..=3"))?;
    Ok(CoherentSymbol::new(Complex64::from_polar((v_a / 2.0).sqrt(), phase)))
}

/// The three DV states prepared from a diagonal input.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DvState {
    D,
    R,
    L,
}

impl DvState {
    pub const ALL: [DvState; 3] = [DvState::D, DvState::R, DvState::L];

    /// Drive phase difference `φl − φe`.
    pub fn phase_difference(self) -> f64 {
        match self {
            DvState::D => 0.0,
            DvState::R => -FRAC_PI_2,
            DvState::L => FRAC_PI_2,
        }
    }

    pub fn jones(self) -> JonesState {
        polarization_output(0.0, self.phase_difference())
    }
}

impl FromStr for DvState {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "D" | "d" => Ok(DvState::D),
            "R" | "r" => Ok(DvState::R),
            "L" | "l" => Ok(DvState::L),
            other => Err(Error::Config(format!("unknown DV state `{other}` (expected D, R or L)"))),
        }
    }
}

impl fmt::Display for DvState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum IntensityClass {
    Signal,
    Decoy,
}

/// Signal and decoy mean photon numbers, set by the decoy Sagnac modulator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecoyIntensities {
    pub signal: f64,
    pub decoy: f64,
}

impl Default for DecoyIntensities {
    fn default() -> Self {
        Self {
            signal: 0.5,
            decoy: 0.1,
        }
    }
}

impl DecoyIntensities {
    pub fn validate(&self) -> Result<()> {
        if !(self.decoy > 0.0) {
            return Err(Error::domain("mu2", self.decoy, "decoy intensity must be > 0"));
        }
        if !(self.signal > self.decoy) {
            return Err(Error::domain("mu1", self.signal, "signal intensity must exceed the decoy"));
        }
        Ok(())
    }

    pub fn of(&self, class: IntensityClass) -> f64 {
        match class {
            IntensityClass::Signal => self.signal,
            IntensityClass::Decoy => self.decoy,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct DvPulse {
    pub label: DvState,
    pub state: JonesState,
    pub intensity: f64,
    pub class: IntensityClass,
    pub slot: u64,
}

impl DvPulse {
    pub fn at_slot(mut self, slot: u64) -> Self {
        self.slot = slot;
        self
    }
}

pub fn dv_symbol(label: DvState, mu: f64, class: IntensityClass) -> Result<DvPulse> {
    if !(mu > 0.0) || !mu.is_finite() {
        return Err(Error::domain("mu", mu, "pulse intensity must be > 0"));
    }
    Ok(DvPulse {
        label,
        state: label.jones(),
        intensity: mu,
        class,
        slot: 0,
    })
}
