//! Residue expansion of the Mellin–Barnes integral for `g` with poles of any order.
//!
//! The integrand `Π_j Γ(ν_j - s) / Γ(1 + s) · y^s` has poles at `s = ν_j + n`.
//! Exponents that differ by an integer merge into higher-order poles, and each
//! merged pole contributes `y^p` times a polynomial in `ln y`. The Laurent
//! coefficients depend only on the exponents, so they are tabulated once.

use super::gamma::{ln_gamma, polygamma};
use std::f64::consts::PI;

/// Exponents closer than this to an integer difference are treated as merged.
pub(crate) const MERGE_TOL: f64 = 1e-12;
/// Between `MERGE_TOL` and this, residue sums cancel catastrophically.
pub(crate) const NEAR_MERGE_TOL: f64 = 1e-3;

#[derive(Clone, Debug)]
pub(crate) struct PoleTerm {
    pub position: f64,
    #[cfg_attr(not(test), allow(dead_code))]
    pub order: usize,
    /// `coeffs[q][k]`: coefficient of `y^p (ln y)^k` in `-Res(s^q · integrand)`.
    pub coeffs: Vec<Vec<f64>>,
}

#[derive(Clone, Debug)]
pub(crate) struct ResidueTable {
    pub poles: Vec<PoleTerm>,
}

/// Pairwise integer-difference structure of the exponents.
pub(crate) fn near_merge(nu: &[f64]) -> bool {
    for (i, a) in nu.iter().enumerate() {
        for b in &nu[i + 1..] {
            let d = a - b;
            let dist = (d - d.round()).abs();
            if dist >= MERGE_TOL && dist < NEAR_MERGE_TOL {
                return true;
            }
        }
    }
    false
}

impl ResidueTable {
    pub fn new(nu: &[f64], poles_per_class: usize, max_power: usize) -> Self {
        let mut positions: Vec<f64> = Vec::new();
        for &base in nu {
            for n in 0..poles_per_class {
                let p = base + n as f64;
                if !positions.iter().any(|&q| (q - p).abs() < MERGE_TOL * (1.0 + p)) {
                    positions.push(p);
                }
            }
        }
        positions.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let poles = positions
            .into_iter()
            .map(|p| pole_term(nu, p, max_power))
            .collect();
        ResidueTable { poles }
    }

    /// Adds `-Σ Res(s^q integrand)` for `q = 0..out.len()` into `out`.
    /// Returns the number of poles summed and the magnitude of the last
    /// non-negligible contribution.
    pub fn accumulate(&self, y: f64, out: &mut [f64]) -> (usize, f64) {
        let ln_y = y.ln();
        let mut used = 0;
        let mut tail = 0.0;
        for pole in &self.poles {
            let yp = if pole.position == 0.0 { 1.0 } else { y.powf(pole.position) };
            if yp == 0.0 {
                break;
            }
            let mut biggest: f64 = 0.0;
            for (q, slot) in out.iter_mut().enumerate() {
                let c = &pole.coeffs[q];
                let mut acc = 0.0;
                let mut lp = 1.0;
                for &ck in c {
                    acc += ck * lp;
                    lp *= ln_y;
                }
                let contrib = yp * acc;
                *slot += contrib;
                biggest = biggest.max(contrib.abs());
            }
            used += 1;
            tail = biggest;
        }
        (used, tail)
    }
}

fn pole_term(nu: &[f64], p: f64, max_power: usize) -> PoleTerm {
    let singular: Vec<usize> = nu
        .iter()
        .map(|&v| p - v)
        .filter(|&d| d > -MERGE_TOL && (d - d.round()).abs() < MERGE_TOL)
        .map(|d| d.round() as usize)
        .collect();
    let order = singular.len();
    let len = order.max(1);

    let mut analytic = vec![0.0; len];
    analytic[0] = 1.0;
    for &m in &singular {
        let sign = if m % 2 == 0 { -1.0 } else { 1.0 };
        let mut factor = mul(&inv_sinc(len), &rgamma_shift(1.0 + m as f64, len));
        for c in &mut factor {
            *c *= sign;
        }
        analytic = mul(&analytic, &factor);
    }
    for &v in nu {
        let z0 = v - p;
        let d = -z0;
        if d > -MERGE_TOL && (d - d.round()).abs() < MERGE_TOL {
            continue;
        }
        analytic = mul(&analytic, &gamma_reflected_shift(z0, len));
    }
    analytic = mul(&analytic, &rgamma_shift(1.0 + p, len));

    // -Res(s^q I) = -y^p Σ_k B_q[r-1-k] (ln y)^k / k!
    let mut coeffs = Vec::with_capacity(max_power + 1);
    let mut power = vec![0.0; len];
    power[0] = 1.0;
    for _q in 0..=max_power {
        let bq = mul(&analytic, &power);
        let mut row = Vec::with_capacity(order);
        if order == 0 {
            row.push(0.0);
        } else {
            let mut kfact = 1.0;
            for k in 0..order {
                if k > 0 {
                    kfact *= k as f64;
                }
                row.push(-bq[order - 1 - k] / kfact);
            }
        }
        coeffs.push(row);
        power = mul(&power, &[p, 1.0]);
    }
    PoleTerm {
        position: p,
        order,
        coeffs,
    }
}

/// Truncated product of two power series, result length `a.len()`.
fn mul(a: &[f64], b: &[f64]) -> Vec<f64> {
    let n = a.len();
    let mut out = vec![0.0; n];
    for (i, &ai) in a.iter().enumerate() {
        if ai == 0.0 {
            continue;
        }
        for (j, &bj) in b.iter().enumerate().take(n - i) {
            out[i + j] += ai * bj;
        }
    }
    out
}

fn recip(a: &[f64]) -> Vec<f64> {
    let n = a.len();
    let mut b = vec![0.0; n];
    b[0] = 1.0 / a[0];
    for k in 1..n {
        let mut s = 0.0;
        for j in 1..=k {
            s += a[j] * b[k - j];
        }
        b[k] = -s * b[0];
    }
    b
}

/// `exp` of a power series whose constant term is `a[0]`.
fn exp_series(a: &[f64]) -> Vec<f64> {
    let n = a.len();
    let mut b = vec![0.0; n];
    b[0] = a[0].exp();
    for k in 1..n {
        let mut s = 0.0;
        for j in 1..=k {
            s += j as f64 * a[j] * b[k - j];
        }
        b[k] = s / k as f64;
    }
    b
}

/// Series of `πε / sin(πε)`.
fn inv_sinc(len: usize) -> Vec<f64> {
    let mut s = vec![0.0; len];
    let mut fact = 1.0;
    for k in 0..len {
        if k > 0 {
            fact *= k as f64;
        }
        if k % 2 == 0 {
            // sin(πε)/(πε) = Σ (-1)^m (πε)^{2m} / (2m+1)!
            let m = k / 2;
            let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
            s[k] = sign * PI.powi(k as i32) / (fact * (k as f64 + 1.0));
        }
    }
    recip(&s)
}

/// Series of `1 / Γ(x + ε)` for `x > 0`.
fn rgamma_shift(x: f64, len: usize) -> Vec<f64> {
    let mut a = vec![0.0; len];
    a[0] = -ln_gamma(x);
    let mut fact = 1.0;
    for k in 1..len {
        fact *= k as f64;
        a[k] = -polygamma(k - 1, x) / fact;
    }
    exp_series(&a)
}

/// Series of `Γ(z0 - ε)` for `z0` not a non-positive integer.
fn gamma_reflected_shift(z0: f64, len: usize) -> Vec<f64> {
    if z0 > 0.0 {
        let mut a = vec![0.0; len];
        a[0] = ln_gamma(z0);
        let mut fact = 1.0;
        for k in 1..len {
            fact *= k as f64;
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            a[k] = sign * polygamma(k - 1, z0) / fact;
        }
        return exp_series(&a);
    }
    // Γ(z0 - ε) = π / (sin(π(z0 - ε)) Γ(1 - z0 + ε))
    let mut sin_series = vec![0.0; len];
    let mut fact = 1.0;
    for k in 0..len {
        if k > 0 {
            fact *= k as f64;
        }
        let phase = PI * z0 + k as f64 * PI / 2.0;
        sin_series[k] = (-PI).powi(k as i32) * phase.sin() / fact;
    }
    let mut out = mul(&rgamma_shift(1.0 - z0, len), &recip(&sin_series));
    for c in &mut out {
        *c *= PI;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simple_pole_reproduces_bessel_series() {
        // M = 1: -Res at s = ν + n is (-1)^n / (n! Γ(1+ν+n))
        let nu = 0.7;
        let table = ResidueTable::new(&[nu], 6, 0);
        for (n, pole) in table.poles.iter().enumerate() {
            assert_eq!(pole.order, 1);
            let nf: f64 = (1..=n).map(|k| k as f64).product();
            let expected = (-1f64).powi(n as i32) / (nf * ln_gamma(1.0 + nu + n as f64).exp());
            assert!((pole.coeffs[0][0] - expected).abs() < 1e-14 * expected.abs());
        }
    }

    #[test]
    fn merged_exponents_raise_pole_order() {
        let table = ResidueTable::new(&[1.0, 2.0, 3.0], 4, 0);
        let orders: Vec<usize> = table.poles.iter().map(|p| p.order).collect();
        assert_eq!(orders, vec![1, 2, 3, 3, 3, 3]);
    }

    #[test]
    fn near_merge_detection() {
        assert!(!near_merge(&[1.0, 2.0]));
        assert!(!near_merge(&[0.3, 1.0]));
        assert!(near_merge(&[1.0, 2.0 + 1e-6]));
    }

    #[test]
    fn reflected_gamma_series_matches_finite_difference() {
        let z0 = -1.3;
        let s = gamma_reflected_shift(z0, 3);
        let g = |e: f64| crate::specfun::gamma::gamma(z0 - e);
        let h = 1e-4;
        assert!((s[0] - g(0.0)).abs() < 1e-13 * g(0.0).abs());
        let d1 = (g(h) - g(-h)) / (2.0 * h);
        assert!((s[1] - d1).abs() < 1e-6 * d1.abs());
        let d2 = (g(h) - 2.0 * g(0.0) + g(-h)) / (h * h) / 2.0;
        assert!((s[2] - d2).abs() < 1e-5 * d2.abs());
    }
}
