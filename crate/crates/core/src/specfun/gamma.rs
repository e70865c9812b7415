//! Gamma, log-gamma and polygamma functions in double precision.

use num_complex::Complex64;
use std::f64::consts::PI;

const LANCZOS_G: f64 = 7.0;
const LANCZOS_COEFFS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

const HALF_LN_TWO_PI: f64 = 0.918_938_533_204_672_8;

/// `ln Γ(x)` for `x > 0`.
pub fn ln_gamma(x: f64) -> f64 {
    debug_assert!(x > 0.0);
    if x < 0.5 {
        // ln Γ(x) = ln π - ln sin(πx) - ln Γ(1 - x)
        return (PI / (PI * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    if x >= 10.0 {
        return ln_gamma_stirling(x);
    }
    let z = x - 1.0;
    let mut acc = LANCZOS_COEFFS[0];
    for (i, c) in LANCZOS_COEFFS.iter().enumerate().skip(1) {
        acc += c / (z + i as f64);
    }
    let t = z + LANCZOS_G + 0.5;
    HALF_LN_TWO_PI + (z + 0.5) * t.ln() - t + acc.ln()
}

fn ln_gamma_stirling(x: f64) -> f64 {
    // Bernoulli-number asymptotic series, accurate to ~1e-16 for x >= 10
    const B: [f64; 7] = [
        1.0 / 12.0,
        -1.0 / 360.0,
        1.0 / 1260.0,
        -1.0 / 1680.0,
        1.0 / 1188.0,
        -691.0 / 360_360.0,
        1.0 / 156.0,
    ];
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    let mut corr = 0.0;
    let mut p = inv;
    for b in B {
        corr += b * p;
        p *= inv2;
    }
    (x - 0.5) * x.ln() - x + HALF_LN_TWO_PI + corr
}

/// `Γ(x)` for real `x` that is not a non-positive integer.
pub fn gamma(x: f64) -> f64 {
    if x > 0.0 {
        if x <= 20.0 && x == x.round() {
            // exact factorial for small integers
            let mut acc = 1.0;
            let mut k = 2.0;
            while k < x {
                acc *= k;
                k += 1.0;
            }
            return acc;
        }
        if x < 0.5 {
            return PI / ((PI * x).sin() * gamma(1.0 - x));
        }
        let lg = ln_gamma(x);
        return lg.exp();
    }
    if x == x.floor() {
        return f64::NAN;
    }
    PI / ((PI * x).sin() * gamma(1.0 - x))
}

/// `1 / Γ(x)`, entire, zero at the non-positive integers.
pub fn rgamma(x: f64) -> f64 {
    if x <= 0.0 && x == x.floor() {
        0.0
    } else {
        1.0 / gamma(x)
    }
}

/// Complex `ln Γ(z)`; the branch is irrelevant for callers that exponentiate.
pub fn ln_gamma_complex(z: Complex64) -> Complex64 {
    if z.re < 0.5 {
        let pi = Complex64::new(PI, 0.0);
        return (pi / (pi * z).sin()).ln() - ln_gamma_complex(Complex64::new(1.0, 0.0) - z);
    }
    let z = z - 1.0;
    let mut acc = Complex64::new(LANCZOS_COEFFS[0], 0.0);
    for (i, c) in LANCZOS_COEFFS.iter().enumerate().skip(1) {
        acc += *c / (z + i as f64);
    }
    let t = z + (LANCZOS_G + 0.5);
    (z + 0.5) * t.ln() - t + acc.ln() + HALF_LN_TWO_PI
}

/// Polygamma `ψ^{(n)}(x)` for `x > 0` (`n = 0` is the digamma function).
pub fn polygamma(n: usize, x: f64) -> f64 {
    debug_assert!(x > 0.0);
    const SHIFT_TO: f64 = 20.0;
    // Bernoulli numbers B_2, B_4, ..., B_20
    const B2K: [f64; 10] = [
        1.0 / 6.0,
        -1.0 / 30.0,
        1.0 / 42.0,
        -1.0 / 30.0,
        5.0 / 66.0,
        -691.0 / 2730.0,
        7.0 / 6.0,
        -3617.0 / 510.0,
        43867.0 / 798.0,
        -174611.0 / 330.0,
    ];
    let nf = factorial(n);
    let sign_n = if n % 2 == 0 { 1.0 } else { -1.0 };
    let mut x = x;
    let mut acc = 0.0;
    // ψ^{(n)}(x) = ψ^{(n)}(x+1) - (-1)^n n! / x^{n+1}
    while x < SHIFT_TO {
        acc -= sign_n * nf / x.powi(n as i32 + 1);
        x += 1.0;
    }
    let asym = if n == 0 {
        let inv2 = 1.0 / (x * x);
        let mut s = x.ln() - 0.5 / x;
        let mut p = inv2;
        for (k, b) in B2K.iter().enumerate() {
            s -= b / (2.0 * (k as f64 + 1.0)) * p;
            p *= inv2;
        }
        s
    } else {
        // (-1)^{n+1} [ (n-1)!/x^n + n!/(2 x^{n+1}) + Σ B_2k (2k+n-1)!/((2k)! x^{2k+n}) ]
        let mut s = factorial(n - 1) / x.powi(n as i32) + nf / (2.0 * x.powi(n as i32 + 1));
        for (k, b) in B2K.iter().enumerate() {
            let two_k = 2 * (k + 1);
            let coef = b * ratio_of_factorials(two_k + n - 1, two_k);
            s += coef / x.powi((two_k + n) as i32);
        }
        -sign_n * s
    };
    acc + asym
}

fn factorial(n: usize) -> f64 {
    (1..=n).fold(1.0, |acc, k| acc * k as f64)
}

/// `a! / b!` for `a >= b - 1`.
fn ratio_of_factorials(a: usize, b: usize) -> f64 {
    if a >= b {
        ((b + 1)..=a).fold(1.0, |acc, k| acc * k as f64)
    } else {
        // a = b - 1
        1.0 / b as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn factorials_are_exact() {
        assert_eq!(gamma(1.0), 1.0);
        assert_eq!(gamma(5.0), 24.0);
        assert_eq!(gamma(11.0), 3_628_800.0);
    }

    #[test]
    fn half_integer_values() {
        let sqrt_pi = PI.sqrt();
        assert_relative_eq!(gamma(0.5), sqrt_pi, max_relative = 1e-14);
        assert_relative_eq!(gamma(2.5), 0.75 * sqrt_pi, max_relative = 1e-14);
        assert_relative_eq!(gamma(-0.5), -2.0 * sqrt_pi, max_relative = 1e-14);
        assert_relative_eq!(gamma(13.5), 1_710_542_068.319_573_2, max_relative = 1e-13);
    }

    #[test]
    fn ln_gamma_matches_recurrence_across_branch() {
        for &x in &[0.1, 0.7, 3.3, 9.99, 10.0, 10.01, 55.5] {
            let lhs = ln_gamma(x + 1.0);
            let rhs = ln_gamma(x) + f64::ln(x);
            assert!((lhs - rhs).abs() < 1e-13 * (1.0 + lhs.abs()), "x={x}");
        }
    }

    #[test]
    fn complex_agrees_with_real_axis() {
        for &x in &[0.3, 1.0, 2.5, 7.25] {
            let z = ln_gamma_complex(Complex64::new(x, 0.0));
            assert_relative_eq!(z.re, ln_gamma(x), epsilon = 1e-13);
        }
    }

    #[test]
    fn complex_modulus_on_critical_line() {
        // |Γ(1/2 + it)|² = π / cosh(πt)
        for &t in &[0.5, 3.0, 12.0, 30.0] {
            let z = ln_gamma_complex(Complex64::new(0.5, t));
            let expected = 0.5 * (PI / (PI * t).cosh()).ln();
            assert!((z.re - expected).abs() < 1e-12, "t={t}");
        }
    }

    #[test]
    fn digamma_special_values() {
        let euler = 0.577_215_664_901_532_9;
        assert_relative_eq!(polygamma(0, 1.0), -euler, max_relative = 1e-14);
        assert_relative_eq!(polygamma(1, 1.0), PI * PI / 6.0, max_relative = 1e-14);
        // ψ''(1) = -2 ζ(3)
        assert_relative_eq!(polygamma(2, 1.0), -2.0 * 1.202_056_903_159_594_3, max_relative = 1e-14);
        assert_relative_eq!(polygamma(0, 0.5), -euler - 2.0 * 2f64.ln(), max_relative = 1e-14);
    }

    #[test]
    fn polygamma_recurrence() {
        for n in 0..5 {
            for &x in &[0.25, 1.5, 4.0, 30.0] {
                let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
                let lhs = polygamma(n, x + 1.0);
                let rhs = polygamma(n, x) + sign * factorial(n) / x.powi(n as i32 + 1);
                assert!((lhs - rhs).abs() < 1e-12 * (1.0 + lhs.abs()), "n={n} x={x}");
            }
        }
    }
}
