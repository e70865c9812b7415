//! Single-interval flow on `(0, s)`, integrated in `u = ln s`.
//!
//! The state carries two extra slots beside `x, y, ξ, η`: `W = (-1)^{M+1} s R(s,s)`
//! and `L = ln F`, so that the gap probability comes out of the same
//! integration instead of a separate quadrature over the trajectory.

use super::{state_from_fredholm_with, GapCurve, ImaginaryRoot, Provenance};
use crate::error::{Error, Result};
use crate::fredholm::{build_nystrom, solve_qp, IntervalUnion, DEFAULT_ORDER};
use crate::specfun::{xi_offset, MeijerPair, ModelParams};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// How the state at the first integration point `ε` is obtained.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StartMode {
    /// Requires finite `ψ_j(0)`; the start state is compared against the
    /// values at `s = 0` and the defect is reported.
    Series,
    /// Any parameters; the start state comes from the resolvent on `(0, ε)`.
    Bootstrap,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    pub start: StartMode,
    /// Start point; [`DEFAULT_EPSILON`] (capped by the first sample) when absent.
    pub epsilon: Option<f64>,
    pub root: ImaginaryRoot,
    /// Nyström order for the start state.
    pub order: usize,
    pub max_steps: usize,
}

impl Default for OdeOptions {
    fn default() -> Self {
        OdeOptions {
            rtol: 1e-10,
            // the y modes span many decades near the origin; an absolute
            // floor at 1e-10 would stop the small ones from being resolved
            atol: 1e-20,
            start: StartMode::Bootstrap,
            epsilon: None,
            root: ImaginaryRoot::PlusI,
            order: DEFAULT_ORDER,
            max_steps: 200_000,
        }
    }
}

/// `x_j(s)`, `y_j(s)` at the right endpoint, plus `ξ`, `η`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SingleState {
    pub x: Vec<Complex64>,
    pub y: Vec<Complex64>,
    pub xi: Vec<Complex64>,
    pub eta: Vec<Complex64>,
}

impl SingleState {
    fn width(&self) -> usize {
        self.x.len()
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct OdeSample {
    pub s: f64,
    pub gap: f64,
    pub state: SingleState,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Trajectory {
    pub samples: Vec<OdeSample>,
    pub epsilon: f64,
    /// Largest deviation of the start state from its `s = 0` limit
    /// ([`StartMode::Series`] only).
    pub start_defect: Option<f64>,
    pub accepted_steps: usize,
    pub rejected_steps: usize,
    pub params: ModelParams,
}

impl Trajectory {
    pub fn curve(&self) -> GapCurve {
        GapCurve {
            samples: self.samples.iter().map(|p| (p.s, p.gap)).collect(),
            provenance: Provenance::Ode,
            params: self.params.clone(),
        }
    }
}

fn sign(p: usize) -> f64 {
    if p % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// `d/du` of the packed state `[x, y, ξ, η, W, L]` at `s = e^u`.
fn rhs_u(w: usize, s: f64, z: &[Complex64], out: &mut [Complex64]) {
    let m = w - 1;
    let (x, rest) = z.split_at(w);
    let (y, rest) = rest.split_at(w);
    let (xi, rest) = rest.split_at(w);
    let (eta, extra) = rest.split_at(w);
    let c = sign(m + 1) * s;
    for j in 0..w {
        let mut dx = -eta[j] * x[0];
        if j < m {
            dx -= x[j + 1];
        } else {
            dx += c * x[0];
            dx += (0..w).map(|i| xi[i] * x[i]).sum::<Complex64>();
        }
        let mut dy = -xi[j] * y[m];
        if j >= 1 {
            dy += y[j - 1];
        } else {
            dy -= c * y[m];
            dy += (0..w).map(|i| eta[i] * y[i]).sum::<Complex64>();
        }
        out[j] = dx;
        out[w + j] = dy;
        out[2 * w + j] = c * x[0] * y[j];
        out[3 * w + j] = c * x[j] * y[m];
    }
    // x_0 y_M = (√-1)^2 Q_0 P_M
    out[4 * w] = -s * x[0] * y[m];
    out[4 * w + 1] = sign(m) * extra[0];
}

/// `d/ds` of the canonical coordinates on `(0, s)`.
pub fn ode_rhs(params: &ModelParams, s: f64, state: &SingleState) -> Result<SingleState> {
    if !(s > 0.0) {
        return Err(Error::Domain(format!("the flow is singular at s = {s}")));
    }
    let w = params.m() + 1;
    if state.width() != w {
        return Err(Error::Domain(format!("state width {} for M = {}", state.width(), w - 1)));
    }
    let mut z = Vec::with_capacity(4 * w + 2);
    for v in [&state.x, &state.y, &state.xi, &state.eta] {
        z.extend_from_slice(v);
    }
    z.extend([Complex64::new(0.0, 0.0); 2]);
    let mut d = vec![Complex64::new(0.0, 0.0); z.len()];
    rhs_u(w, s, &z, &mut d);
    let d: Vec<Complex64> = d.iter().map(|v| v / s).collect();
    Ok(unpack(w, &d))
}

fn unpack(w: usize, z: &[Complex64]) -> SingleState {
    SingleState {
        x: z[..w].to_vec(),
        y: z[w..2 * w].to_vec(),
        xi: z[2 * w..3 * w].to_vec(),
        eta: z[3 * w..4 * w].to_vec(),
    }
}

/// The start state is exact (resolvent on `(0, ε)`), so nothing is gained by
/// starting close to the singular point; starting late keeps the `s^{ν_k}`
/// spread of the `y` modes small.
pub const DEFAULT_EPSILON: f64 = 0.1;

/// Packed state at `s` from the resolvent of `K_M` on `(0, s)`.
fn resolvent_start(params: &ModelParams, s: f64, order: usize, root: ImaginaryRoot) -> Result<Vec<Complex64>> {
    let interval = IntervalUnion::single(s)?;
    let system = build_nystrom(params, &interval, order)?;
    let data = solve_qp(&system)?;
    let det = system.determinant();
    if !(det > 0.0 && det <= 1.0 + 1e-12) {
        return Err(Error::Discretization(det));
    }
    let r = data.r_diag[1].ok_or(Error::EndpointUnavailable(s))?;
    let st = state_from_fredholm_with(params, &interval, order, root)?;
    let w = st.width();
    let mut z = Vec::with_capacity(4 * w + 2);
    z.extend(st.x.row(1).iter());
    z.extend(st.y.row(1).iter());
    z.extend(st.xi.iter().map(|&v| Complex64::new(v, 0.0)));
    z.extend(st.eta.iter().map(|&v| Complex64::new(v, 0.0)));
    z.push(Complex64::new(sign(w) * s * r, 0.0));
    z.push(Complex64::new(det.min(1.0).ln(), 0.0));
    Ok(z)
}

/// `x(0) = √-1 φ(0)`, `y(0) = √-1 ψ(0)`, `ξ_j(0)` the constant offsets, `η(0) = 0`.
fn state_at_zero(params: &ModelParams, root: ImaginaryRoot) -> Option<SingleState> {
    let pair = MeijerPair::new(params);
    let psi = pair.psi_at_zero()?;
    let r = root.value();
    let w = params.m() + 1;
    Some(SingleState {
        x: pair.phi_at_zero().iter().map(|&v| r * v).collect(),
        y: psi.iter().map(|&v| r * v).collect(),
        xi: (0..w).map(|j| Complex64::new(xi_offset(params, j), 0.0)).collect(),
        eta: vec![Complex64::new(0.0, 0.0); w],
    })
}

fn max_diff(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter().zip(b).map(|(p, q)| (p - q).norm()).fold(0.0, f64::max)
}

// Dormand–Prince 5(4) tableau.
const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

struct Stepper {
    w: usize,
    rtol: f64,
    atol: f64,
    h: f64,
    accepted: usize,
    rejected: usize,
    max_steps: usize,
    k: Vec<Vec<Complex64>>,
    tmp: Vec<Complex64>,
}

impl Stepper {
    fn new(w: usize, opts: &OdeOptions, len: usize) -> Self {
        Stepper {
            w,
            rtol: opts.rtol,
            atol: opts.atol,
            h: 0.0,
            accepted: 0,
            rejected: 0,
            max_steps: opts.max_steps,
            k: vec![vec![Complex64::new(0.0, 0.0); len]; 7],
            tmp: vec![Complex64::new(0.0, 0.0); len],
        }
    }

    /// Advances `z` from `u` to exactly `u_end`.
    fn advance(&mut self, u: &mut f64, z: &mut [Complex64], u_end: f64) -> Result<()> {
        if self.h == 0.0 {
            self.h = ((u_end - *u) * 1e-3).max(1e-6);
        }
        let n = z.len();
        let mut fresh_k0 = false;
        while *u < u_end {
            if self.accepted + self.rejected > self.max_steps {
                return Err(Error::Integrator(format!("step budget exhausted at s = {:e}", u.exp())));
            }
            let last = *u + self.h >= u_end;
            let h = if last { u_end - *u } else { self.h };
            if !fresh_k0 {
                rhs_u(self.w, u.exp(), z, &mut self.k[0]);
                fresh_k0 = true;
            }
            for stage in 1..7 {
                for i in 0..n {
                    let mut acc = z[i];
                    for (j, a) in A[stage][..stage].iter().enumerate() {
                        if *a != 0.0 {
                            acc += self.k[j][i] * (h * a);
                        }
                    }
                    self.tmp[i] = acc;
                }
                let s = (*u + C[stage] * h).exp();
                let (head, tail) = self.k.split_at_mut(stage);
                let _ = head;
                rhs_u(self.w, s, &self.tmp, &mut tail[0]);
            }
            // tmp holds the 5th-order solution (FSAL row equals B5)
            let mut err: f64 = 0.0;
            for i in 0..n {
                let mut e = Complex64::new(0.0, 0.0);
                for j in 0..7 {
                    e += self.k[j][i] * (B5[j] - B4[j]);
                }
                let scale = self.atol + self.rtol * z[i].norm().max(self.tmp[i].norm());
                err = err.max((e * h).norm() / scale);
            }
            if !err.is_finite() {
                return Err(Error::Integrator(format!("non-finite state near s = {:e}", u.exp())));
            }
            let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
            if err <= 1.0 {
                *u = if last { u_end } else { *u + h };
                z.copy_from_slice(&self.tmp);
                let (first, rest) = self.k.split_at_mut(1);
                first[0].copy_from_slice(&rest[5]);
                self.accepted += 1;
                if !last {
                    self.h = h * factor;
                }
            } else {
                self.rejected += 1;
                self.h = h * factor;
                if self.h < 1e-14 {
                    return Err(Error::Integrator(format!("step size underflow at s = {:e}", u.exp())));
                }
            }
        }
        Ok(())
    }
}

/// Integrates the flow on `(0, s)` and samples the state and the gap
/// probability at each `s` in `samples` (ascending, non-negative).
pub fn integrate_single(params: &ModelParams, samples: &[f64], opts: &OdeOptions) -> Result<Trajectory> {
    if samples.iter().any(|s| !(s.is_finite() && *s >= 0.0)) {
        return Err(Error::Domain("sample points must be finite and non-negative".into()));
    }
    if samples.windows(2).any(|p| p[1] < p[0]) {
        return Err(Error::Domain("sample points must be ascending".into()));
    }
    if !(opts.rtol > 0.0 && opts.atol > 0.0) {
        return Err(Error::Domain("tolerances must be positive".into()));
    }
    let w = params.m() + 1;
    let zero = state_at_zero(params, opts.root);
    if opts.start == StartMode::Series && zero.is_none() {
        return Err(Error::Domain(
            "ψ_j(0) diverges for these exponents; use the bootstrap start".into(),
        ));
    }
    let first_positive = samples.iter().copied().find(|&s| s > 0.0);
    let mut eps = opts.epsilon.unwrap_or(DEFAULT_EPSILON);
    if let Some(s1) = first_positive {
        eps = eps.min(s1);
    }
    if !(eps > 0.0) {
        return Err(Error::Domain(format!("start point ε = {eps} must be positive")));
    }
    let mut z = resolvent_start(params, eps, opts.order, opts.root)?;
    let start_defect = match (opts.start, &zero) {
        (StartMode::Series, Some(z0)) => {
            let st = unpack(w, &z);
            Some(
                [(&st.x, &z0.x), (&st.y, &z0.y), (&st.xi, &z0.xi), (&st.eta, &z0.eta)]
                    .iter()
                    .map(|(a, b)| max_diff(a, b))
                    .fold(0.0, f64::max),
            )
        }
        _ => None,
    };
    let mut stepper = Stepper::new(w, opts, z.len());
    let mut u = eps.ln();
    let mut out = Vec::with_capacity(samples.len());
    for &s in samples {
        if s == 0.0 {
            let state = zero.clone().unwrap_or_else(|| {
                let nan = Complex64::new(f64::NAN, f64::NAN);
                SingleState {
                    x: vec![nan; w],
                    y: vec![nan; w],
                    xi: vec![nan; w],
                    eta: vec![nan; w],
                }
            });
            out.push(OdeSample { s, gap: 1.0, state });
            continue;
        }
        stepper.advance(&mut u, &mut z, s.ln())?;
        out.push(OdeSample {
            s,
            gap: z[4 * w + 1].re.exp(),
            state: unpack(w, &z),
        });
    }
    Ok(Trajectory {
        samples: out,
        epsilon: eps,
        start_defect,
        accepted_steps: stepper.accepted,
        rejected_steps: stepper.rejected,
        params: params.clone(),
    })
}
