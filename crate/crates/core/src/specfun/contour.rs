//! Trapezoidal quadrature of the Mellin–Barnes integral for `g` along a
//! vertical line to the left of every pole.

use super::gamma::ln_gamma_complex;
use num_complex::Complex64;
use std::f64::consts::PI;

/// Step along the line. The nearest pole sits half a unit to the right of the
/// contour, so the discretisation error is of order `exp(-π / STEP)`.
const STEP: f64 = 1.0 / 16.0;
const MAX_POINTS: usize = 40_000;
const TAIL_TOL: f64 = 1e-19;

pub(crate) struct ContourResult {
    pub points: usize,
    pub tail: f64,
    pub converged: bool,
}

/// Fills `out[q] = (y d/dy)^q g(y)` for `y > 0`.
pub(crate) fn g_thetas(nu: &[f64], y: f64, out: &mut [f64]) -> ContourResult {
    let nu_min = nu.iter().cloned().fold(f64::INFINITY, f64::min);
    let c = nu_min - 0.5;
    let ln_y = y.ln();
    let integrand = |t: f64| -> Complex64 {
        let s = Complex64::new(c, t);
        let mut log = -ln_gamma_complex(s + 1.0) + s * ln_y;
        for &v in nu {
            log += ln_gamma_complex(Complex64::new(v, 0.0) - s);
        }
        log.exp()
    };
    for slot in out.iter_mut() {
        *slot = 0.0;
    }
    let q_max = out.len();

    // t = 0 carries half weight relative to the symmetric pair sum
    let center = integrand(0.0);
    let mut sc = Complex64::new(1.0, 0.0);
    let s0 = Complex64::new(c, 0.0);
    for slot in out.iter_mut() {
        *slot += 0.5 * (center * sc).re;
        sc *= s0;
    }
    let scale = center.norm().max(1e-300);
    let mut quiet = 0;
    let mut k = 1;
    let mut tail = f64::INFINITY;
    let mut converged = false;
    while k < MAX_POINTS {
        let t = k as f64 * STEP;
        let s = Complex64::new(c, t);
        let val = integrand(t);
        let mut sp = val;
        let mut mag: f64 = 0.0;
        for slot in out.iter_mut() {
            *slot += sp.re;
            mag = mag.max(sp.norm());
            sp *= s;
        }
        tail = mag;
        if mag < TAIL_TOL * scale * (1.0 + t).powi(q_max as i32) {
            quiet += 1;
            if quiet >= 8 {
                converged = true;
                break;
            }
        } else {
            quiet = 0;
        }
        k += 1;
    }
    // g = (1/2π) ∫ I dt over the whole line = (1/π) Re ∫_0^∞ I dt
    for slot in out.iter_mut() {
        *slot *= STEP / PI;
    }
    ContourResult {
        points: k,
        tail: tail * STEP / PI,
        converged,
    }
}
