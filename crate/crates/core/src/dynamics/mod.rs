//! Canonical coordinates of the Hamiltonian system attached to
//! `det(1 - K_M χ_J)`, the single-interval ODE, and residual checkers for
//! the multi-time equations.

mod hamiltonian;
mod lax;
mod ode;
mod residuals;

pub use hamiltonian::{
    hamiltonian_explicit, hamiltonian_gradient, hamiltonian_trace, poisson_bracket, Gradient,
};
pub use lax::{isomonodromy_residual, lax_matrices, schlesinger_residuals, LaxMatrices};
pub use ode::{
    integrate_single, ode_rhs, OdeOptions, DEFAULT_EPSILON, OdeSample, SingleState, StartMode, Trajectory,
};
pub use residuals::{convergence_order, pde_residuals, ResidualReport};

use crate::error::{Error, Result};
use crate::fredholm::{build_nystrom, solve_qp, IntervalUnion};
use crate::specfun::{xi_offset, ModelParams};
use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Which square root of `-1` multiplies the coordinates at even endpoints.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ImaginaryRoot {
    PlusI,
    MinusI,
}

impl ImaginaryRoot {
    pub fn value(self) -> Complex64 {
        match self {
            ImaginaryRoot::PlusI => Complex64::i(),
            ImaginaryRoot::MinusI => -Complex64::i(),
        }
    }
}

/// `x_j^(l)`, `y_j^(l)` (row `l - 1`, column `j`), `ξ_j`, `η_j`.
#[derive(Clone, Debug)]
pub struct DynamicalState {
    pub x: DMatrix<Complex64>,
    pub y: DMatrix<Complex64>,
    pub xi: Vec<f64>,
    pub eta: Vec<f64>,
    pub endpoints: Vec<f64>,
    /// `false` for endpoints where `y` could not be formed (`ψ_j` divergent
    /// at the origin); those rows hold NaN.
    pub y_available: Vec<bool>,
}

impl DynamicalState {
    pub fn m_intervals(&self) -> usize {
        self.endpoints.len() / 2
    }

    /// `M + 1`.
    pub fn width(&self) -> usize {
        self.xi.len()
    }

    pub fn is_complete(&self) -> bool {
        self.y_available.iter().all(|&a| a)
    }

    /// Largest deviation from the parity pattern: real at odd endpoints,
    /// purely imaginary at even ones.
    pub fn parity_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for l in 0..self.endpoints.len() {
            let even = (l + 1) % 2 == 0;
            for j in 0..self.width() {
                for v in [self.x[(l, j)], self.y[(l, j)]] {
                    if v.is_nan() {
                        continue;
                    }
                    let off = if even { v.re.abs() } else { v.im.abs() };
                    worst = worst.max(off / (1.0 + v.norm()));
                }
            }
        }
        worst
    }
}

pub fn state_from_fredholm(params: &ModelParams, interval: &IntervalUnion, order: usize) -> Result<DynamicalState> {
    state_from_fredholm_with(params, interval, order, ImaginaryRoot::PlusI)
}

pub fn state_from_fredholm_with(
    params: &ModelParams,
    interval: &IntervalUnion,
    order: usize,
    root: ImaginaryRoot,
) -> Result<DynamicalState> {
    let system = build_nystrom(params, interval, order)?;
    let data = solve_qp(&system)?;
    let m = params.m();
    let width = m + 1;
    let n_end = interval.endpoints().len();
    let sign_m = if m % 2 == 0 { 1.0 } else { -1.0 };
    let mut x = DMatrix::from_element(n_end, width, Complex64::new(f64::NAN, f64::NAN));
    let mut y = x.clone();
    let mut y_available = Vec::with_capacity(n_end);
    for l in 0..n_end {
        let factor = if (l + 1) % 2 == 0 { root.value() } else { Complex64::new(1.0, 0.0) };
        for j in 0..width {
            x[(l, j)] = factor * data.q_end[l][j];
        }
        match &data.p_end[l] {
            Some(p) => {
                for j in 0..width {
                    y[(l, j)] = factor * p[j];
                }
                y_available.push(true);
            }
            None => y_available.push(false),
        }
    }
    let xi = (0..width)
        .map(|j| sign_m * data.v[(0, j)] + xi_offset(params, j))
        .collect();
    let eta = (0..width).map(|j| sign_m * data.v[(j, m)]).collect();
    Ok(DynamicalState {
        x,
        y,
        xi,
        eta,
        endpoints: interval.endpoints().to_vec(),
        y_available,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    Fredholm,
    Ode,
    MonteCarlo,
}

/// Samples `(s, F_M(s))` of the gap probability on `(0, s)`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GapCurve {
    pub samples: Vec<(f64, f64)>,
    pub provenance: Provenance,
    pub params: ModelParams,
}

impl GapCurve {
    /// Checks `F(0) = 1` (if sampled), `F ∈ (0, 1]` and strict decrease.
    pub fn check_shape(&self) -> Result<()> {
        for &(s, f) in &self.samples {
            if !(f > 0.0 && f <= 1.0) {
                return Err(Error::Discretization(f));
            }
            if s == 0.0 && f != 1.0 {
                return Err(Error::Discretization(f));
            }
        }
        if self.samples.windows(2).any(|w| w[1].1 >= w[0].1) {
            return Err(Error::Domain("gap curve is not strictly decreasing".into()));
        }
        Ok(())
    }
}

/// Gap curve on `(0, s)` from Nyström determinants.
pub fn fredholm_curve(params: &ModelParams, s_values: &[f64], order: usize) -> Result<GapCurve> {
    let samples = s_values
        .iter()
        .map(|&s| {
            let f = crate::fredholm::gap_probability(params, &IntervalUnion::single(s)?, order)?;
            Ok((s, f))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(GapCurve {
        samples,
        provenance: Provenance::Fredholm,
        params: params.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vanishing_interval_gives_initial_values() {
        let p = ModelParams::new(vec![1.0, 2.0]).unwrap();
        let st = state_from_fredholm(&p, &IntervalUnion::new(vec![0.5, 0.5 + 1e-10]).unwrap(), 10).unwrap();
        for j in 0..3 {
            assert!(st.eta[j].abs() < 1e-9);
            assert!((st.xi[j] - xi_offset(&p, j)).abs() < 1e-9);
        }
        // ξ_0 offset contains ν_0 = 0 as a factor
        assert_eq!(xi_offset(&p, 0), 0.0);
    }

    #[test]
    fn parity_holds_for_two_intervals() {
        let p = ModelParams::new(vec![0.0, 1.0]).unwrap();
        let st = state_from_fredholm(&p, &IntervalUnion::new(vec![0.3, 1.0, 1.5, 2.5]).unwrap(), 30).unwrap();
        assert!(st.is_complete());
        assert!(st.parity_defect() < 1e-15);
        for l in 0..4 {
            for i in 0..3 {
                for j in 0..3 {
                    assert!((st.x[(l, i)] * st.y[(l, j)]).im.abs() < 1e-15);
                }
            }
        }
    }
}
