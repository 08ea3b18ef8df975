//! Secret-key-rate calculators.
//!
//! * [`cv`]: asymptotic Devetak–Winter rate for Gaussian-equivalent QPSK
//!   under the linear channel model, reverse reconciliation, heterodyne
//!   detection with trusted receiver noise.
//! * [`dv`]: finite-key rate of the three-state one-decoy protocol.

pub mod cv;
pub mod dv;

pub use cv::{holevo_lc, holevo_lc_explicit, mutual_information_lc, skr_cv_asymptotic, CvRateInput, CvRateReport, DetectorTrust};
pub use dv::{skr_dv_finite, DvDiagnostic, DvLinkModel, DvRateInput, DvRateReport, HOEFFDING_CONST};
