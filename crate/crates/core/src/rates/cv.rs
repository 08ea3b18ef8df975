use nalgebra::{Matrix2, Matrix4};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math::{g_entropy, CovMatrix4, DEGENERATE_TOL};


/// Which receiver imperfections are withheld from the eavesdropper.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DetectorTrust {
    /// Receiver loss `η` is lumped into the channel seen by Eve; the
    /// heterodyne vacuum and `V_el` are trusted.
    #[default]
    NoiseOnly,
    /// Both `η` and `V_el` are trusted (beam-splitter + EPR detector model).
    Full,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CvRateInput {
    pub v_a: f64,
    pub t: f64,
    pub xi_a: f64,
    pub eta: f64,
    pub v_el: f64,
    pub beta: f64,
    /// Symbols per second.
    pub symbol_rate: f64,
    #[serde(default)]
    pub trust: DetectorTrust,
}

impl CvRateInput {
    pub fn baseline() -> Self {
        Self {
            v_a: 0.45,
            t: 0.72,
            xi_a: 0.012,
            eta: 0.30,
            v_el: 0.081,
            beta: 0.95,
            symbol_rate: 50e6,
            trust: DetectorTrust::NoiseOnly,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.v_a >= 0.0) || !self.v_a.is_finite() {
            return Err(Error::domain("v_a", self.v_a, "modulation variance must be >= 0"));
        }
        if !(0.0..=1.0).contains(&self.t) {
            return Err(Error::domain("t", self.t, "transmittance must be in [0, 1]"));
        }
        if !(self.xi_a >= 0.0) || !self.xi_a.is_finite() {
            return Err(Error::domain("xi_a", self.xi_a, "excess noise must be >= 0"));
        }
        if !(self.eta > 0.0 && self.eta <= 1.0) {
            return Err(Error::domain("eta", self.eta, "efficiency must be in (0, 1]"));
        }
        if !(self.v_el >= 0.0) || !self.v_el.is_finite() {
            return Err(Error::domain("v_el", self.v_el, "electronic noise must be >= 0"));
        }
        if !(0.0..=1.0).contains(&self.beta) {
            return Err(Error::domain("beta", self.beta, "reconciliation efficiency must be in [0, 1]"));
        }
        if !(self.symbol_rate >= 0.0) {
            return Err(Error::domain("symbol_rate", self.symbol_rate, "symbol rate must be >= 0"));
        }
        Ok(())
    }

    /// `(T seen by Eve, efficiency of the trusted detector)`.
    fn split_loss(&self) -> (f64, f64) {
        match self.trust {
            DetectorTrust::NoiseOnly => (self.eta * self.t, 1.0),
            DetectorTrust::Full => (self.t, self.eta),
        }
    }

    /// Heterodyne noise referred to the detector input.
    fn chi_het(&self, eta_det: f64) -> f64 {
        (2.0 - eta_det + 2.0 * self.v_el) / eta_det
    }

    /// Covariance of Alice's EPR mode and Bob's mode before detection.
    pub fn alice_bob_matrix(&self) -> Result<CovMatrix4> {
        let (t, _) = self.split_loss();
        let v = self.v_a + 1.0;
        let b = 1.0 + t * (v - 1.0 + self.xi_a);
        let c = (t * (v * v - 1.0)).sqrt();
        CovMatrix4::from_blocks(
            Matrix2::identity() * v,
            Matrix2::identity() * b,
            Matrix2::new(c, 0.0, 0.0, -c),
        )
    }
}

/// Gaussian heterodyne mutual information, `log2(1 + SNR)` with
/// `SNR = (ηT/2)V_A / (1 + V_el + (ηT/2)ξ_A)`.
pub fn mutual_information_lc(input: &CvRateInput) -> Result<f64> {
    input.validate()?;
    let g = input.eta * input.t / 2.0;
    let snr = g * input.v_a / (1.0 + input.v_el + g * input.xi_a);
    Ok((1.0 + snr).log2())
}

fn entropy_pair(hi: f64, lo: f64) -> Result<f64> {
    if lo < 1.0 - DEGENERATE_TOL {
        return Err(Error::Unphysical(lo));
    }
    Ok(g_entropy((hi.max(1.0) - 1.0) / 2.0)? + g_entropy((lo.max(1.0) - 1.0) / 2.0)?)
}

fn roots(sum: f64, prod: f64) -> (f64, f64) {
    let disc = (sum * sum - 4.0 * prod).max(0.0).sqrt();
    (
        (0.5 * (sum + disc)).max(0.0).sqrt(),
        (0.5 * (sum - disc)).max(0.0).sqrt(),
    )
}

/// Holevo bound `χ_BE` (bits/symbol) in reverse reconciliation.
///
/// Eve holds the purification of Alice and Bob's state before detection;
/// the trusted detector noise stays with Bob. The conditional spectrum
/// uses the closed-form invariants of the heterodyne-conditioned state.
pub fn holevo_lc(input: &CvRateInput) -> Result<f64> {
    input.validate()?;
    let (t, eta_d) = input.split_loss();
    if t == 0.0 {
        return Ok(0.0);
    }
    let ab = input.alice_bob_matrix()?;
    let (l1, l2) = ab.symplectic_eigenvalues();

    let v = input.v_a + 1.0;
    let chi_h = input.chi_het(eta_d);
    // b = T(V + χ_line), sqrt_b2 = T(V·χ_line + 1), written without 1/T
    let b = 1.0 + t * (v - 1.0 + input.xi_a);
    let sqrt_b2 = v * (1.0 - t + t * input.xi_a) + t;
    let a2 = v * v * (1.0 - 2.0 * t) + 2.0 * t + b * b;
    let denom = b + chi_h;
    let c = (a2 * chi_h * chi_h + sqrt_b2 * sqrt_b2 + 1.0 + 2.0 * chi_h * (v * sqrt_b2 + b) + 2.0 * t * (v * v - 1.0))
        / (denom * denom);
    let d = ((v + sqrt_b2 * chi_h) / denom).powi(2);
    let (l3, l4) = roots(c, d);

    let chi = entropy_pair(l1, l2)? - entropy_pair(l3, l4)?;
    Ok(chi.max(0.0))
}

/// Independent route to [`holevo_lc`]: builds Eve's two-mode state under an
/// entangling-cloner attack and conditions it on Bob's noisy heterodyne
/// outcome, `χ = S(E) − S(E|b)`. Spectra come from direct
/// eigendecomposition. Needs `T_eff < 1` when `ξ_A > 0`.
pub fn holevo_lc_explicit(input: &CvRateInput) -> Result<f64> {
    input.validate()?;
    let (t, eta_d) = input.split_loss();
    let v = input.v_a + 1.0;
    let w = if input.xi_a == 0.0 {
        1.0
    } else if t < 1.0 {
        1.0 + t * input.xi_a / (1.0 - t)
    } else {
        return Err(Error::Degenerate("entangling cloner needs T < 1 for nonzero excess noise"));
    };
    let z = Matrix2::new(1.0, 0.0, 0.0, -1.0);
    let i2 = Matrix2::<f64>::identity();
    let cw = (w * w - 1.0).sqrt();
    let r = (t * (1.0 - t)).sqrt();

    // Eve keeps the reflected mode E1 and her idler E2.
    let e1 = (1.0 - t) * v + t * w;
    let mut gamma_e = Matrix4::zeros();
    gamma_e.fixed_view_mut::<2, 2>(0, 0).copy_from(&(i2 * e1));
    gamma_e.fixed_view_mut::<2, 2>(2, 2).copy_from(&(i2 * w));
    gamma_e.fixed_view_mut::<2, 2>(0, 2).copy_from(&(z * (t.sqrt() * cw)));
    gamma_e.fixed_view_mut::<2, 2>(2, 0).copy_from(&(z * (t.sqrt() * cw)));

    // Cross-covariance between (E1, E2) and Bob's mode.
    let mut sigma = nalgebra::Matrix4x2::zeros();
    sigma.fixed_view_mut::<2, 2>(0, 0).copy_from(&(i2 * (r * (w - v))));
    sigma.fixed_view_mut::<2, 2>(2, 0).copy_from(&(z * ((1.0 - t).sqrt() * cw)));
    let gamma_b = t * v + (1.0 - t) * w;

    // Trusted detector: efficiency eta_d, vacuum port, heterodyne split and
    // electronic noise all act as noise Eve cannot see.
    let sigma_d = sigma * eta_d.sqrt();
    let out_var = eta_d * gamma_b + (1.0 - eta_d) + 1.0 + 2.0 * input.v_el;
    let cond = gamma_e - sigma_d * sigma_d.transpose() / out_var;

    let se = CovMatrix4::new(gamma_e)?;
    let sc = CovMatrix4::new(cond)?;
    let (a, b) = se.symplectic_eigenvalues_eig();
    let (c, d) = sc.symplectic_eigenvalues_eig();
    Ok((entropy_pair(a, b)? - entropy_pair(c, d)?).max(0.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CvRateReport {
    pub i_ab: f64,
    pub chi_e: f64,
    /// `max(0, β·I_AB − χ_E)`, bits/symbol.
    pub skr_per_symbol: f64,
    /// Unclamped `β·I_AB − χ_E`.
    pub skr_raw: f64,
    pub skr_bps: f64,
    /// Set when the raw rate was negative.
    pub clamped: bool,
    pub trust: DetectorTrust,
}

/// Devetak–Winter rate `β·I_AB − χ_E`, clamped at zero.
pub fn skr_cv_asymptotic(input: &CvRateInput) -> Result<CvRateReport> {
    let i_ab = mutual_information_lc(input)?;
    let chi_e = holevo_lc(input)?;
    let raw = input.beta * i_ab - chi_e;
    let skr = raw.max(0.0);
    Ok(CvRateReport {
        i_ab,
        chi_e,
        skr_per_symbol: skr,
        skr_raw: raw,
        skr_bps: skr * input.symbol_rate,
        clamped: raw < 0.0,
        trust: input.trust,
    })
}
