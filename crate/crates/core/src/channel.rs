//! Quantum channel models for both operating modes.

use serde::{Deserialize, Serialize};

use crate::encoder::{CoherentSymbol, DvPulse};
use crate::error::{Error, Result};
use crate::math::RandomSource;

/// Lossy channel with excess noise referred to the channel input.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelParams {
    pub t: f64,
    /// Excess noise, SNU at Alice's output.
    pub xi_a: f64,
    pub loss_db: f64,
}

pub fn db_to_transmittance(loss_db: f64) -> Result<f64> {
    if !(loss_db >= 0.0) {
        return Err(Error::domain("loss_db", loss_db, "loss must be >= 0 dB"));
    }
    Ok(10f64.powf(-loss_db / 10.0))
}

impl ChannelParams {
    pub fn from_loss_db(loss_db: f64, xi_a: f64) -> Result<Self> {
        let t = db_to_transmittance(loss_db)?;
        Self::checked(t, xi_a, loss_db)
    }

    pub fn from_transmittance(t: f64, xi_a: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&t) {
            return Err(Error::domain("t", t, "transmittance must be in [0, 1]"));
        }
        Self::checked(t, xi_a, -10.0 * t.log10())
    }

    fn checked(t: f64, xi_a: f64, loss_db: f64) -> Result<Self> {
        if !(xi_a >= 0.0) || !xi_a.is_finite() {
            return Err(Error::domain("xi_a", xi_a, "excess noise must be >= 0"));
        }
        Ok(Self { t, xi_a, loss_db })
    }

    /// Per-quadrature variance the channel adds to the mode, `T·ξ_A`.
    pub fn added_variance(&self) -> f64 {
        self.t * self.xi_a
    }
}

/// Symbol-level CV channel: `x' = √T·x + n` with `n ~ N(0, T·ξ_A)` on each
/// quadrature of the mode. Together with the heterodyne model this gives
/// `V_B = 1 + V_el + (ηT/2)(V_A + ξ_A)`.
pub fn cv_propagate(sym: &CoherentSymbol, ch: &ChannelParams, rng: &mut RandomSource) -> CoherentSymbol {
    let g = ch.t.sqrt();
    let s = ch.added_variance().sqrt();
    let x = g * sym.x() + s * rng.standard_normal();
    let p = g * sym.p() + s * rng.standard_normal();
    CoherentSymbol::from_quadratures(x, p)
}

/// Photon number reaching the receiver: `Poisson(μT)` for a
/// phase-randomized pulse. Polarization is untouched.
pub fn dv_propagate(pulse: &DvPulse, ch: &ChannelParams, rng: &mut RandomSource) -> Result<u64> {
    rng.poisson(pulse.intensity * ch.t)
}
