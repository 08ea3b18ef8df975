use nalgebra::{Matrix2, Matrix4};

use super::entropy::g_entropy;
use crate::error::{Error, Result};

const SYMMETRY_TOL: f64 = 1e-9;

/// Accuracy of the spectrum when the two symplectic eigenvalues coincide.
pub const DEGENERATE_TOL: f64 = 1e-7;

/// Two-mode covariance matrix in shot-noise units, quadrature order
/// `(x1, p1, x2, p2)`. Vacuum is the identity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CovMatrix4(Matrix4<f64>);

impl CovMatrix4 {
    pub fn new(m: Matrix4<f64>) -> Result<Self> {
        let asym = (m - m.transpose()).abs().max();
        let scale = m.abs().max().max(1.0);
        if !(asym <= SYMMETRY_TOL * scale) {
            return Err(Error::NotSymmetric(asym));
        }
        Ok(Self((m + m.transpose()) * 0.5))
    }

    /// Assembles `[[A, C], [Cᵀ, B]]`.
    pub fn from_blocks(a: Matrix2<f64>, b: Matrix2<f64>, c: Matrix2<f64>) -> Result<Self> {
        let mut m = Matrix4::zeros();
        m.fixed_view_mut::<2, 2>(0, 0).copy_from(&a);
        m.fixed_view_mut::<2, 2>(2, 2).copy_from(&b);
        m.fixed_view_mut::<2, 2>(0, 2).copy_from(&c);
        m.fixed_view_mut::<2, 2>(2, 0).copy_from(&c.transpose());
        Self::new(m)
    }

    /// Product of two single-mode blocks with no correlation.
    pub fn product(a: Matrix2<f64>, b: Matrix2<f64>) -> Result<Self> {
        Self::from_blocks(a, b, Matrix2::zeros())
    }

    pub fn identity() -> Self {
        Self(Matrix4::identity())
    }

    pub fn matrix(&self) -> &Matrix4<f64> {
        &self.0
    }

    pub fn block_a(&self) -> Matrix2<f64> {
        self.0.fixed_view::<2, 2>(0, 0).into_owned()
    }

    pub fn block_b(&self) -> Matrix2<f64> {
        self.0.fixed_view::<2, 2>(2, 2).into_owned()
    }

    pub fn block_c(&self) -> Matrix2<f64> {
        self.0.fixed_view::<2, 2>(0, 2).into_owned()
    }

    /// Symplectic eigenvalues `(ν1, ν2)`, descending, from the two-mode
    /// invariants `Δ = det A + det B + 2 det C` and `det Γ`.
    pub fn symplectic_eigenvalues(&self) -> (f64, f64) {
        let delta =
            self.block_a().determinant() + self.block_b().determinant() + 2.0 * self.block_c().determinant();
        // ν+ν- = √det and ν+² + ν-² = Δ. For a degenerate pair the rounding
        // in Δ - 2√det surfaces as its square root (~1e-8).
        let root_det = self.0.determinant().max(0.0).sqrt();
        let sum = (delta + 2.0 * root_det).max(0.0).sqrt();
        let diff = (delta - 2.0 * root_det).max(0.0).sqrt();
        (0.5 * (sum + diff), 0.5 * (sum - diff))
    }

    /// Same spectrum from a direct eigendecomposition of `ΩΓ`, whose
    /// eigenvalues are `±iν_k`.
    pub fn symplectic_eigenvalues_eig(&self) -> (f64, f64) {
        let omega = symplectic_form();
        let mut mags: Vec<f64> = (omega * self.0)
            .complex_eigenvalues()
            .iter()
            .map(|z| z.norm())
            .collect();
        mags.sort_by(|a, b| b.total_cmp(a));
        // Each ν appears twice (±iν); average the pair.
        (0.5 * (mags[0] + mags[1]), 0.5 * (mags[2] + mags[3]))
    }

    /// Fails when a symplectic eigenvalue is below 1 by more than `tol`.
    pub fn check_physical(&self, tol: f64) -> Result<()> {
        let (_, lo) = self.symplectic_eigenvalues();
        if lo < 1.0 - tol {
            return Err(Error::Unphysical(lo));
        }
        Ok(())
    }

    /// Von Neumann entropy in bits, `Σ G((ν_k - 1)/2)`.
    pub fn entropy(&self) -> Result<f64> {
        let (hi, lo) = self.symplectic_eigenvalues();
        if lo < 1.0 - DEGENERATE_TOL {
            return Err(Error::Unphysical(lo));
        }
        Ok(g_entropy((hi.max(1.0) - 1.0) / 2.0)? + g_entropy((lo.max(1.0) - 1.0) / 2.0)?)
    }

    /// Congruence `S Γ Sᵀ`.
    pub fn transform(&self, s: &Matrix4<f64>) -> Result<Self> {
        Self::new(s * self.0 * s.transpose())
    }
}

pub(crate) fn symplectic_form() -> Matrix4<f64> {
    let mut omega = Matrix4::zeros();
    omega[(0, 1)] = 1.0;
    omega[(1, 0)] = -1.0;
    omega[(2, 3)] = 1.0;
    omega[(3, 2)] = -1.0;
    omega
}
