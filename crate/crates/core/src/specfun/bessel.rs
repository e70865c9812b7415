//! Bessel functions of the first kind for real order, via the ascending series
//! summed in double-double so the alternating terms do not cancel away the
//! result for moderate arguments.

use super::gamma::rgamma;
use crate::dd::Dd;
use crate::error::{Error, Result};

const MAX_TERMS: usize = 500;

/// `(J_ν(z), J_ν'(z))` for `ν >= 0`, `z >= 0`.
pub fn bessel_j_with_derivative(nu: f64, z: f64) -> Result<(f64, f64)> {
    if nu < 0.0 || z < 0.0 || !nu.is_finite() || !z.is_finite() {
        return Err(Error::Domain(format!("bessel_j: nu={nu}, z={z}")));
    }
    if z == 0.0 {
        let j = if nu == 0.0 { 1.0 } else { 0.0 };
        let dj = if nu == 1.0 {
            0.5
        } else if nu > 0.0 && nu < 1.0 {
            f64::INFINITY
        } else {
            0.0
        };
        return Ok((j, dj));
    }
    let w = -0.25 * z * z;
    let mut term = Dd::new(1.0);
    let mut sum = Dd::ZERO;
    let mut dsum = Dd::ZERO;
    let mut quiet = 0;
    let mut converged = false;
    for n in 0..MAX_TERMS {
        sum += term;
        dsum += term * (2.0 * n as f64 + nu);
        let small = term.abs().to_f64() * (2.0 * n as f64 + nu + 1.0)
            < 1e-34 * sum.abs().to_f64().max(1e-300);
        if small && (n as f64) * (n as f64) > z * z * 0.25 {
            quiet += 1;
            if quiet > 3 {
                converged = true;
                break;
            }
        } else {
            quiet = 0;
        }
        term = term * w / ((n as f64 + 1.0) * (n as f64 + 1.0 + nu));
    }
    if !converged {
        return Err(Error::Evaluation {
            what: "Bessel series",
            partial: sum.to_f64(),
            tail: term.to_f64(),
        });
    }
    let lead = (0.5 * z).powf(nu) * rgamma(nu + 1.0);
    let j = sum.to_f64() * lead;
    // d/dz Σ a_n (z/2)^{2n+ν} = Σ a_n (2n+ν)/z (z/2)^{2n+ν}
    let dj = dsum.to_f64() * lead / z;
    Ok((j, dj))
}

pub fn bessel_j(nu: f64, z: f64) -> Result<f64> {
    bessel_j_with_derivative(nu, z).map(|(j, _)| j)
}
