use crate::error::{Error, Result};

/// Negative arguments down to `-ENTROPY_CLAMP_TOL` are treated as zero.
pub const ENTROPY_CLAMP_TOL: f64 = 1e-12;

/// Shannon entropy of a Bernoulli(p) variable, in bits.
pub fn binary_entropy(p: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::domain("p", p, "binary entropy needs 0 <= p <= 1"));
    }
    if p == 0.0 || p == 1.0 {
        return Ok(0.0);
    }
    let q = 1.0 - p;
    Ok(-p * p.log2() - q * q.log2())
}

/// Von Neumann entropy (bits) of a thermal state with mean photon number `x`:
/// `G(x) = (x+1) log2(x+1) - x log2(x)`.
pub fn g_entropy(x: f64) -> Result<f64> {
    if x.is_nan() || x < -ENTROPY_CLAMP_TOL {
        return Err(Error::domain("x", x, "mean photon number must be >= 0"));
    }
    if x <= 0.0 {
        return Ok(0.0);
    }
    Ok((x + 1.0) * (x + 1.0).log2() - x * x.log2())
}
