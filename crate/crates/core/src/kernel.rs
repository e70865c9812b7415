//! The generalized Bessel kernel `K_M(x, y)`.
//!
//! Two representations are available: the integrable (bilinear) form
//! `Σ φ_j(x) ψ_j(y) / (x - y)` and the integral form `∫_0^1 f(xt) g(yt) dt`.
//! The bilinear form is the fast path; the integral is a reference.

use crate::error::{Error, Result};
use crate::quad;
use crate::specfun::bessel::bessel_j_with_derivative;
use crate::specfun::{MeijerPair, ModelParams};
use serde::{Deserialize, Serialize};

/// Below this separation (times `1 + y`) the quotient is replaced by a
/// Taylor expansion in `x` about `y`.
pub const DIAGONAL_SWITCH: f64 = 1e-4;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelMethod {
    Bilinear,
    Integral,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelPoint {
    pub x: f64,
    pub y: f64,
    pub value: f64,
    pub method: KernelMethod,
}

/// Kernel evaluator with the special-function tables precomputed.
#[derive(Clone, Debug)]
pub struct Kernel {
    pair: MeijerPair,
}

impl Kernel {
    pub fn new(params: &ModelParams) -> Self {
        Kernel {
            pair: MeijerPair::new(params),
        }
    }

    pub fn pair(&self) -> &MeijerPair {
        &self.pair
    }

    pub fn params(&self) -> &ModelParams {
        self.pair.params()
    }

    /// `ψ_j(y)`, including `y = 0` when the limit is finite.
    pub fn psis(&self, y: f64) -> Result<Vec<f64>> {
        if y == 0.0 {
            self.pair
                .psi_at_zero()
                .ok_or_else(|| Error::Domain("g diverges at the origin for these exponents".into()))
        } else {
            self.pair.psis(y)
        }
    }

    pub fn point(&self, x: f64, y: f64, method: KernelMethod) -> Result<KernelPoint> {
        let value = match method {
            KernelMethod::Bilinear => self.bilinear(x, y)?,
            KernelMethod::Integral => self.integral(x, y)?,
        };
        Ok(KernelPoint { x, y, value, method })
    }

    pub fn bilinear(&self, x: f64, y: f64) -> Result<f64> {
        check_args(x, y)?;
        let psi = self.psis(y)?;
        if (x - y).abs() < DIAGONAL_SWITCH * (1.0 + y) {
            return self.near_diagonal(x, y, &psi);
        }
        let phi = self.pair.phis(x)?;
        Ok(dot(&phi, &psi) / (x - y))
    }

    /// `K(x, x) = Σ_j φ_j'(x) ψ_j(x)`.
    pub fn diagonal(&self, x: f64) -> Result<f64> {
        check_args(x, x)?;
        let psi = self.psis(x)?;
        Ok(dot(&self.pair.phi_derivatives(x, 1)?, &psi))
    }

    /// Taylor expansion in `x` of the numerator, which vanishes at `x = y`.
    pub(crate) fn near_diagonal(&self, x: f64, y: f64, psi: &[f64]) -> Result<f64> {
        let d = x - y;
        let mut value = 0.0;
        let mut factor = 1.0;
        for k in 1..=3 {
            factor /= k as f64;
            value += factor * d.powi(k as i32 - 1) * dot(&self.pair.phi_derivatives(y, k)?, psi);
            if d == 0.0 {
                break;
            }
        }
        Ok(value)
    }

    /// Numerator `Σ φ_j(x) ψ_j(x)` at coinciding arguments, and the sum of
    /// magnitudes of its terms.
    pub fn continuity_defect(&self, x: f64) -> Result<(f64, f64)> {
        let phi = self.pair.phis(x)?;
        let psi = self.psis(x)?;
        let scale = phi.iter().zip(&psi).map(|(a, b)| (a * b).abs()).sum();
        Ok((dot(&phi, &psi), scale))
    }

    /// `∫_0^1 f(xt) g(yt) dt` by adaptive Gauss–Kronrod on a mesh graded
    /// toward `t = 0`, where `g` may have a logarithmic singularity.
    pub fn integral(&self, x: f64, y: f64) -> Result<f64> {
        check_args(x, y)?;
        let g0 = self.pair.psi_at_zero().map(|p| p[self.pair.m()]);
        if y == 0.0 {
            let g0 = g0.ok_or_else(|| Error::Domain("g diverges at the origin for these exponents".into()))?;
            return Ok(g0 * self.integral_f(x)?);
        }
        let mut failure = None;
        let integrand = |t: f64| -> f64 {
            let f = self.pair.f_thetas(x * t, 0);
            let g = self.pair.g_thetas(y * t, 0);
            match (f, g) {
                (Ok(f), Ok((g, _))) => f[0] * g[0],
                (Err(e), _) | (_, Err(e)) => {
                    failure.get_or_insert(e);
                    0.0
                }
            }
        };
        let levels = if g0.is_some() { 8 } else { 40 };
        let v = quad::adaptive(integrand, &quad::graded_unit_breaks(levels), INTEGRAL_TOL);
        if let Some(e) = failure {
            return Err(e);
        }
        v
    }

    fn integral_f(&self, x: f64) -> Result<f64> {
        if x == 0.0 {
            return self.pair.f_thetas(0.0, 0).map(|v| v[0]);
        }
        let mut failure = None;
        let v = quad::adaptive(
            |t| {
                self.pair.f_thetas(x * t, 0).map(|v| v[0]).unwrap_or_else(|e| {
                    failure.get_or_insert(e);
                    0.0
                })
            },
            &[0.0, 0.5, 1.0],
            INTEGRAL_TOL,
        );
        match failure {
            Some(e) => Err(e),
            None => v,
        }
    }
}

const INTEGRAL_TOL: f64 = 1e-13;

fn check_args(x: f64, y: f64) -> Result<()> {
    if x < 0.0 || y < 0.0 || !x.is_finite() || !y.is_finite() {
        return Err(Error::Domain(format!("kernel needs x, y >= 0, got ({x}, {y})")));
    }
    Ok(())
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(a, b)| a * b).sum()
}

pub fn kernel_bilinear(params: &ModelParams, x: f64, y: f64) -> Result<f64> {
    Kernel::new(params).bilinear(x, y)
}

pub fn kernel_integral(params: &ModelParams, x: f64, y: f64) -> Result<f64> {
    Kernel::new(params).integral(x, y)
}

pub fn kernel_diagonal(params: &ModelParams, x: f64) -> Result<f64> {
    Kernel::new(params).diagonal(x)
}

/// `A = J_ν(√x)`, `B = √x J_ν'(√x)` and their first two `x`-derivatives.
fn bessel_pair(nu: f64, x: f64) -> Result<[[f64; 3]; 2]> {
    let z = x.sqrt();
    let (j, dj) = bessel_j_with_derivative(nu, z)?;
    let a = j;
    let b = z * dj;
    // A' = B / (2x), B' = -(1 - ν²/x) A / 2
    let c = 1.0 - nu * nu / x;
    let da = b / (2.0 * x);
    let db = -0.5 * c * a;
    let dda = db / (2.0 * x) - b / (2.0 * x * x);
    let ddb = -0.5 * (nu * nu / (x * x)) * a - 0.5 * c * da;
    Ok([[a, da, dda], [b, db, ddb]])
}

/// Classical Bessel kernel
/// `[J_ν(√x) √y J_ν'(√y) - √x J_ν'(√x) J_ν(√y)] / (2(x - y))`.
pub fn bessel_kernel(nu: f64, x: f64, y: f64) -> Result<f64> {
    if x <= 0.0 || y <= 0.0 || !x.is_finite() || !y.is_finite() || nu < 0.0 {
        return Err(Error::Domain(format!(
            "Bessel kernel needs x, y > 0, got ({x}, {y})"
        )));
    }
    let [[ay, _, _], [by, _, _]] = bessel_pair(nu, y)?;
    let d = x - y;
    if d.abs() < DIAGONAL_SWITCH * (1.0 + y) {
        let [[_, da, dda], [_, db, ddb]] = bessel_pair(nu, y)?;
        let n1 = da * by - db * ay;
        let n2 = dda * by - ddb * ay;
        return Ok((n1 + 0.5 * d * n2) / 2.0);
    }
    let [[ax, _, _], [bx, _, _]] = bessel_pair(nu, x)?;
    Ok((ax * by - bx * ay) / (2.0 * d))
}
