use super::{state_from_fredholm, DynamicalState};
use crate::error::Result;
use crate::fredholm::IntervalUnion;
use crate::specfun::ModelParams;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// Largest absolute residual per equation class.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct ResidualReport {
    pub max_residual: BTreeMap<String, f64>,
}

impl ResidualReport {
    pub fn new(classes: &[&str]) -> Self {
        ResidualReport {
            max_residual: classes.iter().map(|c| (c.to_string(), 0.0)).collect(),
        }
    }

    pub fn record(&mut self, class: &str, value: f64) {
        let slot = self.max_residual.entry(class.to_string()).or_insert(0.0);
        // NaN must not be swallowed by max
        *slot = if value.is_nan() { f64::NAN } else { slot.max(value) };
    }

    pub fn get(&self, class: &str) -> f64 {
        self.max_residual[class]
    }

    pub fn worst(&self) -> f64 {
        self.max_residual.values().copied().fold(0.0, f64::max)
    }
}

/// Empirical order `log2(r(h) / r(h/2))` per class.
pub fn convergence_order(coarse: &ResidualReport, fine: &ResidualReport) -> BTreeMap<String, f64> {
    coarse
        .max_residual
        .iter()
        .map(|(k, &r)| (k.clone(), (r / fine.get(k)).log2()))
        .collect()
}

pub(crate) fn central_states(
    params: &ModelParams,
    interval: &IntervalUnion,
    order: usize,
    k: usize,
    h: f64,
) -> Result<(DynamicalState, DynamicalState)> {
    let a = interval.endpoints()[k];
    let plus = state_from_fredholm(params, &interval.with_endpoint(k, a + h)?, order)?;
    let minus = state_from_fredholm(params, &interval.with_endpoint(k, a - h)?, order)?;
    Ok((plus, minus))
}

/// Residuals of the multi-time equations, left-hand derivatives by central
/// differences with step `h`. Classes: `a`/`b` off-diagonal `x`/`y`, `c`/`d`
/// diagonal `x`/`y`, `e`/`f` for `ξ`/`η`.
pub fn pde_residuals(params: &ModelParams, interval: &IntervalUnion, order: usize, h: f64) -> Result<ResidualReport> {
    let st = state_from_fredholm(params, interval, order)?;
    let w = st.width();
    let m = w - 1;
    let a = interval.endpoints();
    let n = a.len();
    let sgn = |p: usize| if p % 2 == 0 { 1.0 } else { -1.0 };
    let x = |l: usize, j: usize| st.x[(l, j)];
    let y = |l: usize, j: usize| st.y[(l, j)];
    // S_{kl} = Σ_i x_i^(k) y_i^(l)
    let s = |k: usize, l: usize| -> Complex64 { (0..w).map(|i| x(k, i) * y(l, i)).sum() };
    let mut report = ResidualReport::new(&["a", "b", "c", "d", "e", "f"]);
    for k in 0..n {
        let (plus, minus) = central_states(params, interval, order, k, h)?;
        let dx = |l: usize, j: usize| (plus.x[(l, j)] - minus.x[(l, j)]) / (2.0 * h);
        let dy = |l: usize, j: usize| (plus.y[(l, j)] - minus.y[(l, j)]) / (2.0 * h);
        for l in 0..n {
            if l != k {
                for j in 0..w {
                    let ra = dx(l, j) + x(k, j) / (a[l] - a[k]) * s(l, k);
                    let rb = dy(l, j) + y(k, j) / (a[k] - a[l]) * s(k, l);
                    report.record("a", ra.norm());
                    report.record("b", rb.norm());
                }
                continue;
            }
            for j in 0..w {
                let mut rhs_x = -st.eta[j] * x(l, 0);
                if j < m {
                    rhs_x -= x(l, j + 1);
                } else {
                    rhs_x += sgn(m + 1) * a[l] * x(l, 0);
                    rhs_x += (0..w).map(|i| st.xi[i] * x(l, i)).sum::<Complex64>();
                }
                let mut rhs_y = -st.xi[j] * y(l, m);
                if j >= 1 {
                    rhs_y += y(l, j - 1);
                } else {
                    rhs_y += sgn(m) * a[l] * y(l, m);
                    rhs_y += (0..w).map(|i| st.eta[i] * y(l, i)).sum::<Complex64>();
                }
                for kk in 0..n {
                    if kk != l {
                        rhs_x += x(kk, j) * (a[kk] / (a[l] - a[kk])) * s(l, kk);
                        rhs_y += y(kk, j) * (a[kk] / (a[kk] - a[l])) * s(kk, l);
                    }
                }
                report.record("c", (dx(l, j) * a[l] - rhs_x).norm());
                report.record("d", (dy(l, j) * a[l] - rhs_y).norm());
            }
        }
        for j in 0..w {
            let dxi = (plus.xi[j] - minus.xi[j]) / (2.0 * h);
            let deta = (plus.eta[j] - minus.eta[j]) / (2.0 * h);
            report.record("e", (dxi - sgn(m + 1) * x(k, 0) * y(k, j)).norm());
            report.record("f", (deta - sgn(m + 1) * x(k, j) * y(k, m)).norm());
        }
    }
    Ok(report)
}
