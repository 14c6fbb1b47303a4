use statrs::function::erf::erf_inv;

use crate::error::{Error, Result};

/// Smallest `r` such that an isotropic Gaussian of standard deviation `sigma`
/// in `dim` dimensions puts mass `1 - eps` inside the ball of radius `r`.
///
/// Accepts `0 < eps <= 0.5`.
pub fn select_radius(sigma: f64, dim: usize, eps: f64) -> Result<f64> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::arg(
            "sigma",
            format!("must be positive, got {sigma}"),
        ));
    }
    if !(eps > 0.0 && eps <= 0.5) {
        return Err(Error::arg(
            "eps",
            format!("must lie in (0, 0.5], got {eps}"),
        ));
    }
    match dim {
        // P(|Z| <= z) = erf(z / sqrt 2)
        1 => Ok(sigma * std::f64::consts::SQRT_2 * erf_inv(1.0 - eps)),
        // |Z|^2 / 2 is Exp(1) in the plane
        2 => Ok(sigma * (2.0 * (1.0 / eps).ln()).sqrt()),
        d => Err(Error::arg("dim", format!("must be 1 or 2, got {d}"))),
    }
}
