//! Fredholm determinants of `K_M` restricted to a union of intervals, by
//! Gauss–Legendre Nyström discretisation, and the resolvent quantities
//! built on top of them.

use crate::error::{Error, Result};
use crate::kernel::{dot, Kernel, DIAGONAL_SWITCH};
use crate::quad::gauss_legendre;
use crate::specfun::ModelParams;
use nalgebra::{DMatrix, DVector, LU};
use serde::{Deserialize, Serialize};

pub const DEFAULT_ORDER: usize = 40;
/// Intervals starting at the origin use nodes `a u^p` so that the
/// `y^k ln y` behaviour of `g` there is integrated to spectral accuracy.
pub const DEFAULT_GRADING: u32 = 4;

/// `J = (a_1, a_2) ∪ ... ∪ (a_{2m-1}, a_{2m})`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntervalUnion {
    endpoints: Vec<f64>,
}

impl IntervalUnion {
    pub fn new(endpoints: Vec<f64>) -> Result<Self> {
        if endpoints.len() % 2 != 0 {
            return Err(Error::Domain("an interval union needs an even number of endpoints".into()));
        }
        if endpoints.iter().any(|a| !a.is_finite()) || endpoints.first().is_some_and(|&a| a < 0.0) {
            return Err(Error::Domain(format!("endpoints must be finite and >= 0: {endpoints:?}")));
        }
        if endpoints.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Domain(format!("endpoints must be strictly increasing: {endpoints:?}")));
        }
        Ok(IntervalUnion { endpoints })
    }

    pub fn empty() -> Self {
        IntervalUnion { endpoints: vec![] }
    }

    /// `(0, s)`; empty when `s = 0`.
    pub fn single(s: f64) -> Result<Self> {
        if s == 0.0 {
            Ok(Self::empty())
        } else {
            Self::new(vec![0.0, s])
        }
    }

    pub fn endpoints(&self) -> &[f64] {
        &self.endpoints
    }

    /// Number of intervals.
    pub fn m(&self) -> usize {
        self.endpoints.len() / 2
    }

    pub fn intervals(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.endpoints.chunks(2).map(|c| (c[0], c[1]))
    }

    pub fn measure(&self) -> f64 {
        self.intervals().map(|(a, b)| b - a).sum()
    }

    /// Closed-set membership.
    pub fn contains(&self, x: f64) -> bool {
        self.intervals().any(|(a, b)| a <= x && x <= b)
    }

    /// Copy with endpoint `l` (0-based) moved to `value`.
    pub fn with_endpoint(&self, l: usize, value: f64) -> Result<Self> {
        let mut e = self.endpoints.clone();
        e[l] = value;
        Self::new(e)
    }
}

/// Nyström discretisation of `1 - K_M χ_J`.
#[derive(Clone, Debug)]
pub struct NystromSystem {
    kernel: Kernel,
    interval: IntervalUnion,
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    /// Entries `K(x_i, x_j) w_j`.
    pub kernel_matrix: DMatrix<f64>,
    pub order_per_interval: usize,
    lu: LU<f64, nalgebra::Dyn, nalgebra::Dyn>,
    /// `φ_j(x_i)` and `ψ_j(x_i)`, one row per node.
    phi: DMatrix<f64>,
    psi: DMatrix<f64>,
}

/// Nodes and weights for `J`; intervals starting at 0 are graded.
pub fn nodes_and_weights(interval: &IntervalUnion, order: usize, grading: u32) -> (Vec<f64>, Vec<f64>) {
    let (u, w) = gauss_legendre(order);
    let mut nodes = Vec::with_capacity(order * interval.m());
    let mut weights = Vec::with_capacity(order * interval.m());
    for (a, b) in interval.intervals() {
        for (&u, &w) in u.iter().zip(&w) {
            let t = 0.5 * (u + 1.0);
            if a == 0.0 && grading > 1 {
                let p = grading as i32;
                nodes.push(b * t.powi(p));
                weights.push(0.5 * w * b * p as f64 * t.powi(p - 1));
            } else {
                nodes.push(a + (b - a) * t);
                weights.push(0.5 * w * (b - a));
            }
        }
    }
    (nodes, weights)
}

pub fn build_nystrom(params: &ModelParams, interval: &IntervalUnion, order: usize) -> Result<NystromSystem> {
    NystromSystem::new(Kernel::new(params), interval, order, DEFAULT_GRADING)
}

impl NystromSystem {
    pub fn new(kernel: Kernel, interval: &IntervalUnion, order: usize, grading: u32) -> Result<Self> {
        if order < 4 {
            return Err(Error::Domain(format!("quadrature order {order} is below 4")));
        }
        let (nodes, weights) = nodes_and_weights(interval, order, grading);
        let n = nodes.len();
        let width = kernel.pair().m() + 1;
        let mut phi = DMatrix::zeros(n, width);
        let mut psi = DMatrix::zeros(n, width);
        for (i, &x) in nodes.iter().enumerate() {
            phi.row_mut(i).copy_from_slice(&kernel.pair().phis(x)?);
            psi.row_mut(i).copy_from_slice(&kernel.psis(x)?);
        }
        let mut kernel_matrix = DMatrix::zeros(n, n);
        for j in 0..n {
            let psi_j: Vec<f64> = psi.row(j).iter().copied().collect();
            for i in 0..n {
                let (x, y) = (nodes[i], nodes[j]);
                let k = if i == j {
                    kernel.diagonal(x)?
                } else if (x - y).abs() < DIAGONAL_SWITCH * (1.0 + y) {
                    kernel.near_diagonal(x, y, &psi_j)?
                } else {
                    phi.row(i).dot(&psi.row(j)) / (x - y)
                };
                kernel_matrix[(i, j)] = k * weights[j];
            }
        }
        let lu = (DMatrix::identity(n, n) - &kernel_matrix).lu();
        let sys = NystromSystem {
            kernel,
            interval: interval.clone(),
            nodes,
            weights,
            kernel_matrix,
            order_per_interval: order,
            lu,
            phi,
            psi,
        };
        let det = sys.determinant();
        if n > 0 && det.abs() < 1e-14 {
            return Err(Error::SingularSystem(det));
        }
        Ok(sys)
    }

    pub fn kernel(&self) -> &Kernel {
        &self.kernel
    }

    pub fn interval(&self) -> &IntervalUnion {
        &self.interval
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn determinant(&self) -> f64 {
        if self.nodes.is_empty() {
            1.0
        } else {
            self.lu.determinant()
        }
    }

    pub fn gap_probability(&self) -> Result<f64> {
        let det = self.determinant();
        if !(det > 0.0 && det <= 1.0 + 1e-12) {
            return Err(Error::Discretization(det));
        }
        Ok(det.min(1.0))
    }

    fn solve(&self, rhs: &DVector<f64>) -> DVector<f64> {
        self.lu.solve(rhs).expect("factorisation checked at construction")
    }

    /// `K(x, x_i)` for every node.
    pub fn kernel_row(&self, x: f64) -> Result<Vec<f64>> {
        let phi_x = self.kernel.pair().phis(x)?;
        let mut out = Vec::with_capacity(self.len());
        for (i, &xi) in self.nodes.iter().enumerate() {
            let psi_i: Vec<f64> = self.psi.row(i).iter().copied().collect();
            out.push(if (x - xi).abs() < DIAGONAL_SWITCH * (1.0 + xi) {
                self.kernel.near_diagonal(x, xi, &psi_i)?
            } else {
                dot(&phi_x, &psi_i) / (x - xi)
            });
        }
        Ok(out)
    }

    /// `K(x_i, y)` for every node.
    pub fn kernel_column(&self, y: f64) -> Result<Vec<f64>> {
        let psi_y = self.kernel.psis(y)?;
        let mut out = Vec::with_capacity(self.len());
        for (i, &xi) in self.nodes.iter().enumerate() {
            out.push(if (xi - y).abs() < DIAGONAL_SWITCH * (1.0 + y) {
                self.kernel.near_diagonal(xi, y, &psi_y)?
            } else {
                let phi_i: Vec<f64> = self.phi.row(i).iter().copied().collect();
                dot(&phi_i, &psi_y) / (xi - y)
            });
        }
        Ok(out)
    }

    /// `R(x, y) = K(x, y) + ∫_J K(x, z) R(z, y) dz`, valid for any `x, y`
    /// including the diagonal; zero when `y ∉ J`.
    pub fn resolvent_nystrom(&self, x: f64, y: f64) -> Result<f64> {
        if !self.interval.contains(y) {
            return Ok(0.0);
        }
        let col = DVector::from_vec(self.kernel_column(y)?);
        let r = self.solve(&col);
        let row = self.kernel_row(x)?;
        let mut value = self.kernel.bilinear(x, y)?;
        for i in 0..self.len() {
            value += row[i] * self.weights[i] * r[i];
        }
        Ok(value)
    }

    /// Dense `(I - K W)^{-1} K` on the nodes (unweighted kernel on the right).
    pub fn resolvent_matrix(&self) -> DMatrix<f64> {
        let mut k = self.kernel_matrix.clone();
        for (j, w) in self.weights.iter().enumerate() {
            k.column_mut(j).unscale_mut(*w);
        }
        self.lu.solve(&k).expect("factorisation checked at construction")
    }
}

pub fn gap_probability(params: &ModelParams, interval: &IntervalUnion, order: usize) -> Result<f64> {
    build_nystrom(params, interval, order)?.gap_probability()
}

/// `Q_j = (1-K)^{-1} φ_j`, `P_j = (1-K')^{-1} ψ_j`, `V_{ij} = ∫_J φ_i P_j`,
/// with values at the endpoints of `J`.
#[derive(Clone, Debug)]
pub struct ResolventData {
    /// `Q_j(x_i)`, one row per node.
    pub q: DMatrix<f64>,
    pub p: DMatrix<f64>,
    pub v: DMatrix<f64>,
    /// `Q_j(a_l)` for every endpoint.
    pub q_end: Vec<Vec<f64>>,
    /// `P_j(a_l)`, absent where `ψ_j` diverges (`a_l = 0`).
    pub p_end: Vec<Option<Vec<f64>>>,
    /// `R(a_l, a_l)`, absent where `P_j(a_l)` is.
    pub r_diag: Vec<Option<f64>>,
}

pub fn solve_qp(system: &NystromSystem) -> Result<ResolventData> {
    let n = system.len();
    let width = system.phi.ncols();
    let q = system.lu.solve(&system.phi).expect("factorisation checked at construction");
    // (I - K^T W) p = ψ  ⇔  (I - KW)^T (W p) = W ψ
    let w = DMatrix::from_diagonal(&DVector::from_column_slice(&system.weights));
    let wp = if n == 0 {
        DMatrix::zeros(0, width)
    } else {
        let transposed = (DMatrix::identity(n, n) - &system.kernel_matrix).transpose().lu();
        transposed
            .solve(&(&w * &system.psi))
            .ok_or(Error::SingularSystem(system.determinant()))?
    };
    let mut p = wp.clone();
    for (i, wi) in system.weights.iter().enumerate() {
        p.row_mut(i).unscale_mut(*wi);
    }
    let v = system.phi.transpose() * &wp;

    let mut q_end = Vec::new();
    let mut p_end = Vec::new();
    let mut r_diag = Vec::new();
    for &a in system.interval.endpoints() {
        q_end.push(extend_q(system, &q, a)?);
        match extend_p(system, &wp, a) {
            Ok(pa) => {
                p_end.push(Some(pa));
                r_diag.push(Some(system.resolvent_nystrom(a, a)?));
            }
            Err(Error::Domain(_)) => {
                p_end.push(None);
                r_diag.push(None);
            }
            Err(e) => return Err(e),
        }
    }
    Ok(ResolventData { q, p, v, q_end, p_end, r_diag })
}

/// Nyström extension `Q(x) = φ(x) + Σ_i K(x, x_i) w_i q_i`.
fn extend_q(system: &NystromSystem, q: &DMatrix<f64>, x: f64) -> Result<Vec<f64>> {
    let mut out = system.kernel.pair().phis(x)?;
    let row = system.kernel_row(x)?;
    for i in 0..system.len() {
        let c = row[i] * system.weights[i];
        for (j, o) in out.iter_mut().enumerate() {
            *o += c * q[(i, j)];
        }
    }
    Ok(out)
}

/// `P(y) = ψ(y) + Σ_k K(x_k, y) w_k p_k`.
fn extend_p(system: &NystromSystem, wp: &DMatrix<f64>, y: f64) -> Result<Vec<f64>> {
    let mut out = system.kernel.psis(y)?;
    let col = system.kernel_column(y)?;
    for k in 0..system.len() {
        for (j, o) in out.iter_mut().enumerate() {
            *o += col[k] * wp[(k, j)];
        }
    }
    Ok(out)
}

impl ResolventData {
    pub fn q_at(&self, system: &NystromSystem, x: f64) -> Result<Vec<f64>> {
        extend_q(system, &self.q, x)
    }

    pub fn p_at(&self, system: &NystromSystem, y: f64) -> Result<Vec<f64>> {
        let mut wp = self.p.clone();
        for (i, wi) in system.weights.iter().enumerate() {
            wp.row_mut(i).scale_mut(*wi);
        }
        extend_p(system, &wp, y)
    }
}

/// `R(x, y) = Σ_j Q_j(x) P_j(y) / (x - y) · χ_J(y)`; the diagonal and its
/// neighbourhood fall back to the Nyström form of the resolvent equation.
pub fn resolvent_kernel(system: &NystromSystem, data: &ResolventData, x: f64, y: f64) -> Result<f64> {
    if !system.interval.contains(y) {
        return Ok(0.0);
    }
    if (x - y).abs() < DIAGONAL_SWITCH * (1.0 + y) {
        return system.resolvent_nystrom(x, y);
    }
    let q = data.q_at(system, x)?;
    let p = data.p_at(system, y)?;
    Ok(dot(&q, &p) / (x - y))
}

/// `H_l = (-1)^l a_l R(a_l, a_l)` (endpoints numbered from 1).
pub fn hamiltonians(system: &NystromSystem, data: &ResolventData) -> Result<Vec<f64>> {
    system
        .interval
        .endpoints()
        .iter()
        .zip(&data.r_diag)
        .enumerate()
        .map(|(idx, (&a, r))| {
            let sign = if (idx + 1) % 2 == 0 { 1.0 } else { -1.0 };
            match r {
                Some(r) => Ok(sign * a * r),
                None if a == 0.0 => Ok(0.0),
                None => Err(Error::EndpointUnavailable(a)),
            }
        })
        .collect()
}

/// `h_l = ∂ log det(1 - K) / ∂a_l = (-1)^{l-1} R(a_l, a_l)`.
pub fn one_form(params: &ModelParams, interval: &IntervalUnion, order: usize) -> Result<Vec<f64>> {
    let system = build_nystrom(params, interval, order)?;
    let data = solve_qp(&system)?;
    one_form_from(&system, &data)
}

pub fn one_form_from(system: &NystromSystem, data: &ResolventData) -> Result<Vec<f64>> {
    system
        .interval
        .endpoints()
        .iter()
        .zip(&data.r_diag)
        .enumerate()
        .map(|(idx, (&a, r))| {
            let sign = if idx % 2 == 0 { 1.0 } else { -1.0 };
            r.map(|r| sign * r).ok_or(Error::EndpointUnavailable(a))
        })
        .collect()
}

/// Finite-difference step used for endpoint derivatives.
pub fn fd_step(a: f64) -> f64 {
    1e-4 * (1.0 + a)
}

/// Central difference in endpoint `l` (0-based) with one Richardson step.
pub fn endpoint_derivative<F>(interval: &IntervalUnion, l: usize, h: f64, f: F) -> Result<f64>
where
    F: Fn(&IntervalUnion) -> Result<f64>,
{
    let central = |h: f64| -> Result<f64> {
        let a = interval.endpoints()[l];
        let plus = f(&interval.with_endpoint(l, a + h)?)?;
        let minus = f(&interval.with_endpoint(l, a - h)?)?;
        Ok((plus - minus) / (2.0 * h))
    };
    let d1 = central(h)?;
    let d2 = central(0.5 * h)?;
    Ok((4.0 * d2 - d1) / 3.0)
}

/// Plain central difference (no extrapolation) of a vector-valued function
/// of endpoint `l`.
pub fn endpoint_central<F>(interval: &IntervalUnion, l: usize, h: f64, f: F) -> Result<Vec<f64>>
where
    F: Fn(&IntervalUnion) -> Result<Vec<f64>>,
{
    let a = interval.endpoints()[l];
    let plus = f(&interval.with_endpoint(l, a + h)?)?;
    let minus = f(&interval.with_endpoint(l, a - h)?)?;
    Ok(plus.iter().zip(&minus).map(|(p, m)| (p - m) / (2.0 * h)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(nu: &[f64]) -> ModelParams {
        ModelParams::new(nu.to_vec()).unwrap()
    }

    #[test]
    fn interval_validation() {
        assert!(IntervalUnion::new(vec![0.0]).is_err());
        assert!(IntervalUnion::new(vec![1.0, 0.5]).is_err());
        assert!(IntervalUnion::new(vec![-1.0, 0.5]).is_err());
        let j = IntervalUnion::new(vec![0.0, 1.0, 2.0, 4.0]).unwrap();
        assert_eq!(j.m(), 2);
        assert_eq!(j.measure(), 3.0);
        assert!(j.contains(1.0) && !j.contains(1.5));
    }

    #[test]
    fn weights_sum_to_measure() {
        for grading in [1, 3] {
            let j = IntervalUnion::new(vec![0.0, 2.0, 3.0, 3.5]).unwrap();
            let (x, w) = nodes_and_weights(&j, 20, grading);
            assert_eq!(x.len(), 40);
            assert!((w.iter().sum::<f64>() - 2.5).abs() < 1e-14);
            assert!(x.iter().all(|&x| j.contains(x) && x > 0.0));
        }
    }

    #[test]
    fn empty_interval_has_unit_determinant() {
        let g = gap_probability(&params(&[0.0]), &IntervalUnion::empty(), 40).unwrap();
        assert_eq!(g, 1.0);
    }

    #[test]
    fn single_interval_bessel_zero_is_exponential() {
        // M = 1, ν = 0: the hard-edge gap on (0, s) is e^{-s}
        for &s in &[0.5, 2.0, 5.0] {
            let g = gap_probability(&params(&[0.0]), &IntervalUnion::single(s).unwrap(), 40).unwrap();
            assert!((g - (-s).exp()).abs() < 1e-13, "s={s}: {g}");
        }
    }

    #[test]
    fn resolvent_diagonal_gives_log_derivative() {
        // M = 1, ν = 0: ∂_s log F = -1, so R(s, s) = 1
        let sys = build_nystrom(&params(&[0.0]), &IntervalUnion::single(1.5).unwrap(), 40).unwrap();
        let data = solve_qp(&sys).unwrap();
        assert!((data.r_diag[1].unwrap() - 1.0).abs() < 1e-12);
        let h = one_form_from(&sys, &data).unwrap();
        assert!((h[1] + 1.0).abs() < 1e-12);
    }

    #[test]
    fn divergent_origin_makes_endpoint_unavailable() {
        let sys = build_nystrom(&params(&[0.0, 0.0]), &IntervalUnion::single(1.0).unwrap(), 20).unwrap();
        let data = solve_qp(&sys).unwrap();
        assert!(data.p_end[0].is_none());
        assert!(data.p_end[1].is_some());
        let h = hamiltonians(&sys, &data).unwrap();
        assert_eq!(h[0], 0.0);
    }
}
