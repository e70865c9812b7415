//! Meijer-G building blocks of the generalized Bessel kernel.
//!
//! `f(x) = G^{1,0}_{0,M+1}(x | -ν_0, ..., -ν_M)` is entire and is summed from its
//! power series in double-double. `g(y) = G^{M,0}_{0,M+1}(y | ν_1, ..., ν_M, ν_0)`
//! is evaluated from its residue expansion near the origin (poles of any
//! order, so integer-spaced exponents produce the expected logarithms) and by
//! a vertical-line quadrature for larger `y`. For `M = 1` the residue
//! expansion has only simple poles and is used everywhere.

pub mod bessel;
mod contour;
pub mod gamma;
mod residue;

use crate::dd::Dd;
use crate::error::{Error, Result};
use residue::ResidueTable;
use serde::{Deserialize, Serialize};

/// Number of ν-exponents and their values; `ν_0 = 0` is implicit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    nu: Vec<f64>,
}

impl ModelParams {
    pub fn new(nu: Vec<f64>) -> Result<Self> {
        if nu.is_empty() {
            return Err(Error::InvalidParams("at least one exponent (M >= 1) is required".into()));
        }
        if let Some(bad) = nu.iter().find(|v| !v.is_finite() || **v < 0.0) {
            return Err(Error::InvalidParams(format!("exponent {bad} must be finite and >= 0")));
        }
        Ok(ModelParams { nu })
    }

    pub fn m(&self) -> usize {
        self.nu.len()
    }

    /// `(ν_1, ..., ν_M)`.
    pub fn nu(&self) -> &[f64] {
        &self.nu
    }

    /// `(ν_0, ν_1, ..., ν_M)` with `ν_0 = 0`.
    pub fn nu_with_zero(&self) -> Vec<f64> {
        std::iter::once(0.0).chain(self.nu.iter().copied()).collect()
    }

    pub fn has_integer_nu(&self) -> bool {
        self.nu.iter().all(|v| v.fract() == 0.0)
    }
}

/// A series value together with how it was obtained.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeriesEval {
    pub value: f64,
    pub terms_used: usize,
    /// Estimated magnitude of what was discarded.
    pub truncation_bound: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Which {
    F,
    G,
}

/// Elementary symmetric polynomial `e_k(values)`, with `e_0 = 1`.
pub fn elementary_symmetric(values: &[f64], k: usize) -> Result<f64> {
    if k > values.len() {
        return Err(Error::Domain(format!(
            "e_{k} of {} values is undefined",
            values.len()
        )));
    }
    // e[j] after processing a prefix, updated in place from the top
    let mut e = vec![0.0; k + 1];
    e[0] = 1.0;
    for &v in values {
        for j in (1..=k).rev() {
            e[j] += v * e[j - 1];
        }
    }
    Ok(e[k])
}

/// Coefficients `α_i` of `Π_{i=1}^M (x - ν_i) = Σ_i α_i x^i`.
pub fn alpha_coeffs(params: &ModelParams) -> Vec<f64> {
    let m = params.m();
    (0..=m)
        .map(|i| {
            let sign = if (m - i) % 2 == 0 { 1.0 } else { -1.0 };
            sign * elementary_symmetric(params.nu(), m - i).expect("k <= M")
        })
        .collect()
}

/// `(-1)^{M+1-j} e_{M+1-j}(ν_0, ..., ν_M)`: the constant part of `ξ_j`.
pub fn xi_offset(params: &ModelParams, j: usize) -> f64 {
    let m = params.m();
    let k = m + 1 - j;
    let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
    sign * elementary_symmetric(&params.nu_with_zero(), k).expect("k <= M+1")
}

const SERIES_CAP: usize = 500;
const SERIES_LOOKAHEAD: usize = 10;
/// Residue expansion is used for `y` up to this value when `M >= 2`.
const RESIDUE_SWITCH: f64 = 4.0;
const POLES_PER_CLASS: usize = 48;

#[derive(Clone, Debug)]
enum GRoute {
    /// `M = 1`: `g(y) = y^{ν/2} J_ν(2√y)` summed as a power series.
    Single { nu: f64 },
    Hybrid { table: ResidueTable },
    /// Exponents nearly but not exactly integer-spaced.
    ContourOnly,
}

/// Precomputed evaluator for `f`, `g`, `φ_j` and `ψ_j` of one parameter set.
#[derive(Clone, Debug)]
pub struct MeijerPair {
    params: ModelParams,
    alpha: Vec<f64>,
    f_scale: f64,
    g_route: GRoute,
}

impl MeijerPair {
    /// Highest `(t d/dt)` power that the tables support.
    pub fn max_theta(&self) -> usize {
        self.params.m() + 3
    }

    pub fn new(params: &ModelParams) -> Self {
        let m = params.m();
        let f_scale = params
            .nu()
            .iter()
            .map(|&v| gamma::rgamma(1.0 + v))
            .product();
        let g_route = if m == 1 {
            GRoute::Single { nu: params.nu()[0] }
        } else if residue::near_merge(params.nu()) {
            GRoute::ContourOnly
        } else {
            GRoute::Hybrid {
                table: ResidueTable::new(params.nu(), POLES_PER_CLASS, m + 3),
            }
        };
        MeijerPair {
            params: params.clone(),
            alpha: alpha_coeffs(params),
            f_scale,
            g_route,
        }
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn m(&self) -> usize {
        self.params.m()
    }

    pub fn alpha(&self) -> &[f64] {
        &self.alpha
    }

    /// `d^k/dx^k (x d/dx)^q f(x)` for `q = 0..=q_max`.
    pub fn f_derivatives(&self, x: f64, k: usize, q_max: usize) -> Result<(Vec<f64>, SeriesEval)> {
        if x < 0.0 || !x.is_finite() {
            return Err(Error::Domain(format!("f requires x >= 0, got {x}")));
        }
        let nu = self.params.nu();
        let step = |n: usize| -> f64 {
            let mut d = (n + 1) as f64;
            for &v in nu {
                d *= 1.0 + v + n as f64;
            }
            d
        };
        // u_n = (c_n / c_0) x^{n-k} for n >= k
        let mut u = Dd::new(1.0);
        for n in 0..k {
            u = -u / step(n);
        }
        let mut sums = vec![Dd::ZERO; q_max + 1];
        let mut quiet = 0;
        let mut n = k;
        let mut last = 0.0;
        let mut converged = false;
        while n < k + SERIES_CAP {
            let falling: f64 = (0..k).map(|i| (n - i) as f64).product();
            let base = u * falling;
            let mut w = base;
            for s in sums.iter_mut() {
                *s += w;
                w = w * n as f64;
            }
            // weight of the highest power dominates the tail
            let top = base.abs().to_f64() * (n as f64).powi(q_max as i32);
            let scale = sums
                .iter()
                .map(|s| s.abs().to_f64())
                .fold(0.0, f64::max)
                .max(1e-300);
            last = top;
            if top <= 1e-17 * scale || u.hi == 0.0 {
                quiet += 1;
                if quiet >= SERIES_LOOKAHEAD {
                    converged = true;
                    break;
                }
            } else {
                quiet = 0;
            }
            u = u * (-x) / step(n);
            n += 1;
        }
        let values: Vec<f64> = sums.iter().map(|s| s.to_f64() * self.f_scale).collect();
        if !converged {
            return Err(Error::Evaluation {
                what: "f series",
                partial: values[0],
                tail: last * self.f_scale,
            });
        }
        Ok((
            values,
            SeriesEval {
                value: 0.0,
                terms_used: n - k + 1,
                truncation_bound: 2.0 * last * self.f_scale.abs(),
            },
        ))
    }

    /// `(x d/dx)^q f(x)` for `q = 0..=q_max`.
    pub fn f_thetas(&self, x: f64, q_max: usize) -> Result<Vec<f64>> {
        self.f_derivatives(x, 0, q_max).map(|(v, _)| v)
    }

    /// `(y d/dy)^q g(y)` for `q = 0..=q_max`, `y > 0`.
    pub fn g_thetas(&self, y: f64, q_max: usize) -> Result<(Vec<f64>, SeriesEval)> {
        if y <= 0.0 || !y.is_finite() {
            return Err(Error::Domain(format!("g requires y > 0, got {y}")));
        }
        match &self.g_route {
            GRoute::Single { nu } => self.g_single(*nu, y, q_max),
            GRoute::Hybrid { table } if y <= RESIDUE_SWITCH => {
                if q_max > self.max_theta() {
                    return Err(Error::Domain(format!("theta power {q_max} exceeds table")));
                }
                let mut out = vec![0.0; q_max + 1];
                let (used, tail) = table.accumulate(y, &mut out);
                Ok((
                    out.clone(),
                    SeriesEval {
                        value: out[0],
                        terms_used: used,
                        truncation_bound: tail,
                    },
                ))
            }
            _ => self.g_contour(y, q_max),
        }
    }

    fn g_single(&self, nu: f64, y: f64, q_max: usize) -> Result<(Vec<f64>, SeriesEval)> {
        let mut u = Dd::new(1.0);
        let mut sums = vec![Dd::ZERO; q_max + 1];
        let mut quiet = 0;
        let mut last = 0.0;
        let mut n = 0;
        let mut converged = false;
        while n < SERIES_CAP {
            let p = nu + n as f64;
            let mut w = u;
            for s in sums.iter_mut() {
                *s += w;
                w = w * p;
            }
            let top = u.abs().to_f64() * p.max(1.0).powi(q_max as i32);
            let scale = sums
                .iter()
                .map(|s| s.abs().to_f64())
                .fold(0.0, f64::max)
                .max(1e-300);
            last = top;
            if top <= 1e-17 * scale || u.hi == 0.0 {
                quiet += 1;
                if quiet >= SERIES_LOOKAHEAD {
                    converged = true;
                    break;
                }
            } else {
                quiet = 0;
            }
            u = u * (-y) / ((n as f64 + 1.0) * (1.0 + nu + n as f64));
            n += 1;
        }
        let lead = if nu == 0.0 { 1.0 } else { y.powf(nu) } * gamma::rgamma(1.0 + nu);
        let values: Vec<f64> = sums.iter().map(|s| s.to_f64() * lead).collect();
        if !converged {
            return Err(Error::Evaluation {
                what: "g series",
                partial: values[0],
                tail: last * lead,
            });
        }
        Ok((
            values.clone(),
            SeriesEval {
                value: values[0],
                terms_used: n + 1,
                truncation_bound: 2.0 * last * lead.abs(),
            },
        ))
    }

    /// Vertical-line quadrature for `g`, exposed for cross-checking the
    /// residue expansion.
    pub fn g_contour(&self, y: f64, q_max: usize) -> Result<(Vec<f64>, SeriesEval)> {
        if y <= 0.0 || !y.is_finite() {
            return Err(Error::Domain(format!("g requires y > 0, got {y}")));
        }
        let mut out = vec![0.0; q_max + 1];
        let res = contour::g_thetas(self.params.nu(), y, &mut out);
        if !res.converged {
            return Err(Error::Evaluation {
                what: "g contour quadrature",
                partial: out[0],
                tail: res.tail,
            });
        }
        Ok((
            out.clone(),
            SeriesEval {
                value: out[0],
                terms_used: res.points,
                truncation_bound: res.tail,
            },
        ))
    }

    /// Residue expansion for `g` regardless of `y` (for `M >= 2` only
    /// trustworthy for moderate `y`).
    pub fn g_residue(&self, y: f64, q_max: usize) -> Result<Vec<f64>> {
        match &self.g_route {
            GRoute::Single { nu } => self.g_single(*nu, y, q_max).map(|(v, _)| v),
            GRoute::Hybrid { table } => {
                let mut out = vec![0.0; q_max + 1];
                table.accumulate(y, &mut out);
                Ok(out)
            }
            GRoute::ContourOnly => Err(Error::Domain(
                "exponents are too close to integer spacing for residue sums".into(),
            )),
        }
    }

    pub fn eval_f(&self, x: f64) -> Result<SeriesEval> {
        let (v, mut info) = self.f_derivatives(x, 0, 0)?;
        info.value = v[0];
        Ok(info)
    }

    pub fn eval_g(&self, y: f64) -> Result<SeriesEval> {
        self.g_thetas(y, 0).map(|(_, info)| info)
    }

    /// `(t d/dt)^j` applied to `f` or `g` at `t`.
    pub fn theta_power(&self, which: Which, j: usize, t: f64) -> Result<f64> {
        if j > self.max_theta() {
            return Err(Error::Domain(format!(
                "theta power {j} exceeds supported order {}",
                self.max_theta()
            )));
        }
        match which {
            Which::F => self.f_thetas(t, j).map(|v| v[j]),
            Which::G => self.g_thetas(t, j).map(|(v, _)| v[j]),
        }
    }

    fn phi_sign(&self, j: usize) -> f64 {
        if (self.m() + 1 - j) % 2 == 0 {
            1.0
        } else {
            -1.0
        }
    }

    /// `φ_j(x) = (-1)^{M-j+1} (x d/dx)^j f(x)` for all `j = 0..=M`.
    pub fn phis(&self, x: f64) -> Result<Vec<f64>> {
        self.phi_derivatives(x, 0)
    }

    /// `d^k/dx^k φ_j(x)` for all `j`.
    pub fn phi_derivatives(&self, x: f64, k: usize) -> Result<Vec<f64>> {
        let m = self.m();
        let (th, _) = self.f_derivatives(x, k, m)?;
        Ok((0..=m).map(|j| self.phi_sign(j) * th[j]).collect())
    }

    pub fn phi(&self, j: usize, x: f64) -> Result<f64> {
        self.check_index(j)?;
        self.phis(x).map(|v| v[j])
    }

    /// `ψ_j(y) = Σ_{i=0}^{M-j} α_{i+j} (y d/dy)^i g(y)` for all `j`.
    pub fn psis(&self, y: f64) -> Result<Vec<f64>> {
        let (th, _) = self.g_thetas(y, self.m())?;
        Ok(self.psis_from_thetas(&th))
    }

    pub(crate) fn psis_from_thetas(&self, th: &[f64]) -> Vec<f64> {
        let m = self.m();
        (0..=m)
            .map(|j| (0..=m - j).map(|i| self.alpha[i + j] * th[i]).sum())
            .collect()
    }

    pub fn psi(&self, j: usize, y: f64) -> Result<f64> {
        self.check_index(j)?;
        self.psis(y).map(|v| v[j])
    }

    /// `ψ_j(0)` when it is finite.
    ///
    /// `g` behaves like `y^{ν_min}` at the origin, except that a repeated
    /// zero exponent produces `ln y`. With exactly one zero exponent `g(0)`
    /// is the residue at `s = 0` and every `(y d/dy)^i g` with `i >= 1` vanishes.
    pub fn psi_at_zero(&self) -> Option<Vec<f64>> {
        let m = self.m();
        let zeros = self.params.nu().iter().filter(|&&v| v == 0.0).count();
        match zeros {
            0 => Some(vec![0.0; m + 1]),
            1 => {
                let g0: f64 = self
                    .params
                    .nu()
                    .iter()
                    .filter(|&&v| v != 0.0)
                    .map(|&v| gamma::gamma(v))
                    .product();
                Some((0..=m).map(|j| self.alpha[j] * g0).collect())
            }
            _ => None,
        }
    }

    /// `φ_j(0)`: only `φ_0` is nonzero.
    pub fn phi_at_zero(&self) -> Vec<f64> {
        let mut v = vec![0.0; self.m() + 1];
        v[0] = self.phi_sign(0) * self.f_scale;
        v
    }

    fn check_index(&self, j: usize) -> Result<()> {
        if j > self.m() {
            Err(Error::Domain(format!("index {j} exceeds M = {}", self.m())))
        } else {
            Ok(())
        }
    }

    /// `Π_{j=0}^M (x d/dx + ν_j) f(x) + x f(x)` together with the sum of
    /// magnitudes of the terms that cancel.
    pub fn ode_residual_f(&self, x: f64) -> Result<(f64, f64)> {
        let poly = operator_polynomial(&self.params.nu_with_zero(), 1.0);
        let th = self.f_thetas(x, self.m() + 1)?;
        let mut res = x * th[0];
        let mut scale = res.abs();
        for (c, t) in poly.iter().zip(&th) {
            res += c * t;
            scale += (c * t).abs();
        }
        Ok((res, scale))
    }

    /// `Π_{j=0}^M (y d/dy - ν_j) g(y) - (-1)^M y g(y)` and its term scale.
    pub fn ode_residual_g(&self, y: f64) -> Result<(f64, f64)> {
        let poly = operator_polynomial(&self.params.nu_with_zero(), -1.0);
        let (th, _) = self.g_thetas(y, self.m() + 1)?;
        let sign = if self.m() % 2 == 0 { 1.0 } else { -1.0 };
        let mut res = -sign * y * th[0];
        let mut scale = res.abs();
        for (c, t) in poly.iter().zip(&th) {
            res += c * t;
            scale += (c * t).abs();
        }
        Ok((res, scale))
    }
}

/// Coefficients of `Π_j (θ + sign·ν_j)` as a polynomial in `θ`, lowest first.
fn operator_polynomial(nu: &[f64], sign: f64) -> Vec<f64> {
    let mut poly = vec![1.0];
    for &v in nu {
        let mut next = vec![0.0; poly.len() + 1];
        for (i, &c) in poly.iter().enumerate() {
            next[i + 1] += c;
            next[i] += sign * v * c;
        }
        poly = next;
    }
    poly
}

pub fn eval_f(params: &ModelParams, x: f64) -> Result<SeriesEval> {
    MeijerPair::new(params).eval_f(x)
}

pub fn eval_g(params: &ModelParams, y: f64) -> Result<SeriesEval> {
    MeijerPair::new(params).eval_g(y)
}

pub fn theta_power(params: &ModelParams, which: Which, j: usize, t: f64) -> Result<f64> {
    MeijerPair::new(params).theta_power(which, j, t)
}

pub fn phi(params: &ModelParams, j: usize, x: f64) -> Result<f64> {
    MeijerPair::new(params).phi(j, x)
}

pub fn psi(params: &ModelParams, j: usize, y: f64) -> Result<f64> {
    MeijerPair::new(params).psi(j, y)
}

pub fn ode_residual_f(params: &ModelParams, x: f64) -> Result<f64> {
    MeijerPair::new(params).ode_residual_f(x).map(|(r, _)| r)
}

pub fn ode_residual_g(params: &ModelParams, y: f64) -> Result<f64> {
    MeijerPair::new(params).ode_residual_g(y).map(|(r, _)| r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn params(nu: &[f64]) -> ModelParams {
        ModelParams::new(nu.to_vec()).unwrap()
    }

    #[test]
    fn elementary_symmetric_examples() {
        assert_eq!(elementary_symmetric(&[1.0, 2.0], 1).unwrap(), 3.0);
        assert_eq!(elementary_symmetric(&[4.0, 5.0, 6.0], 0).unwrap(), 1.0);
        assert_eq!(elementary_symmetric(&[0.0, 1.5, 2.5], 3).unwrap(), 0.0);
        assert!(elementary_symmetric(&[1.0], 2).is_err());
    }

    #[test]
    fn alpha_examples() {
        assert_eq!(alpha_coeffs(&params(&[1.0, 2.0])), vec![2.0, -3.0, 1.0]);
        assert_eq!(alpha_coeffs(&params(&[0.7])), vec![-0.7, 1.0]);
        assert_eq!(
            alpha_coeffs(&params(&[0.0, 1.0, 2.0])),
            vec![0.0, 2.0, -3.0, 1.0]
        );
    }

    #[test]
    fn invalid_params_rejected() {
        assert!(ModelParams::new(vec![]).is_err());
        assert!(ModelParams::new(vec![-0.5]).is_err());
        assert!(ModelParams::new(vec![f64::NAN]).is_err());
    }

    #[test]
    fn f_at_origin() {
        let p = MeijerPair::new(&params(&[0.0]));
        assert_eq!(p.eval_f(0.0).unwrap().value, 1.0);
        assert_eq!(p.theta_power(Which::F, 1, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn g_domain_error() {
        let p = MeijerPair::new(&params(&[1.0, 2.0]));
        assert!(p.eval_g(0.0).is_err());
        assert!(p.eval_g(-1.0).is_err());
    }

    #[test]
    fn theta_index_out_of_range() {
        let p = MeijerPair::new(&params(&[1.0]));
        assert!(p.phi(2, 1.0).is_err());
        assert!(p.theta_power(Which::G, 9, 1.0).is_err());
    }

    #[test]
    fn psi_top_is_g() {
        let p = MeijerPair::new(&params(&[1.0, 2.0]));
        for &y in &[0.2, 1.0, 6.0] {
            assert_relative_eq!(
                p.psi(2, y).unwrap(),
                p.eval_g(y).unwrap().value,
                max_relative = 1e-15
            );
        }
    }

    #[test]
    fn psi_at_zero_cases() {
        assert_eq!(MeijerPair::new(&params(&[1.0, 2.0])).psi_at_zero(), Some(vec![0.0; 3]));
        // single zero exponent: g(0) = Γ(1) = 1, ψ_j(0) = α_j
        let p = MeijerPair::new(&params(&[0.0, 1.0]));
        assert_eq!(p.psi_at_zero(), Some(vec![0.0, -1.0, 1.0]));
        assert_eq!(MeijerPair::new(&params(&[0.0, 0.0])).psi_at_zero(), None);
    }

    #[test]
    fn psi_at_zero_matches_small_argument_limit() {
        let p = MeijerPair::new(&params(&[0.0, 1.0]));
        let at_zero = p.psi_at_zero().unwrap();
        let near = p.psis(1e-9).unwrap();
        for (a, b) in at_zero.iter().zip(&near) {
            assert!((a - b).abs() < 1e-6);
        }
    }

    #[test]
    fn operator_polynomial_expands() {
        // (θ + 0)(θ + 1)(θ + 2) = θ³ + 3θ² + 2θ
        assert_eq!(operator_polynomial(&[0.0, 1.0, 2.0], 1.0), vec![0.0, 2.0, 3.0, 1.0]);
    }
}
