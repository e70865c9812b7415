use super::residuals::{central_states, ResidualReport};
use super::DynamicalState;
use crate::error::{Error, Result};
use crate::fredholm::IntervalUnion;
use crate::specfun::ModelParams;
use nalgebra::DMatrix;
use num_complex::Complex64;

type CMatrix = DMatrix<Complex64>;

/// `E`, `C` and the rank-one residues `A^(l) = x^(l) ⊗ y^(l)`.
#[derive(Clone, Debug)]
pub struct LaxMatrices {
    pub e: CMatrix,
    pub c: CMatrix,
    pub a: Vec<CMatrix>,
    pub endpoints: Vec<f64>,
}

pub fn lax_matrices(st: &DynamicalState) -> LaxMatrices {
    let w = st.width();
    let m = w - 1;
    let one = Complex64::new(1.0, 0.0);
    let mut e = CMatrix::zeros(w, w);
    e[(m, 0)] = if m % 2 == 0 { -one } else { one };
    let mut c = CMatrix::zeros(w, w);
    for r in 0..m {
        c[(r, 0)] = -st.eta[r] * one;
        c[(r, r + 1)] = -one;
    }
    for col in 0..w {
        c[(m, col)] = st.xi[col] * one;
    }
    c[(m, 0)] -= st.eta[m] * one;
    let a = (0..st.endpoints.len())
        .map(|l| {
            let x = st.x.row(l).transpose();
            let y = st.y.row(l);
            &x * &y
        })
        .collect();
    LaxMatrices {
        e,
        c,
        a,
        endpoints: st.endpoints.clone(),
    }
}

fn commutator(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a * b - b * a
}

fn max_norm(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

impl LaxMatrices {
    /// `X(z) = E + (C - Σ A^(k)) / z + Σ A^(k) / (z - a_k)`.
    pub fn x_of_z(&self, z: f64) -> Result<CMatrix> {
        if z == 0.0 || self.endpoints.contains(&z) {
            return Err(Error::Domain(format!("z = {z} is a pole of X")));
        }
        let mut sum_a = CMatrix::zeros(self.e.nrows(), self.e.ncols());
        let mut poles = sum_a.clone();
        for (a, &ak) in self.a.iter().zip(&self.endpoints) {
            sum_a += a;
            poles += a.unscale(z - ak);
        }
        Ok(&self.e + (&self.c - sum_a).unscale(z) + poles)
    }

    /// `Θ_j(z) = -A^(j) / (z - a_j)`.
    pub fn theta(&self, j: usize, z: f64) -> Result<CMatrix> {
        let aj = self.endpoints[j];
        if z == aj {
            return Err(Error::Domain(format!("z = {z} is a pole of Θ_{}", j + 1)));
        }
        Ok(-self.a[j].unscale(z - aj))
    }
}

/// Residuals of the Schlesinger-type system, derivatives by central
/// differences of Fredholm-derived states.
///
/// Classes: `off` (∂A^(l)/∂a_k, k ≠ l), `diag` (a_l ∂A^(l)/∂a_l), `c`
/// (∂C/∂a_l).
pub fn schlesinger_residuals(
    params: &ModelParams,
    interval: &IntervalUnion,
    order: usize,
    h: f64,
) -> Result<ResidualReport> {
    let base = super::state_from_fredholm(params, interval, order)?;
    let lax = lax_matrices(&base);
    let n = interval.endpoints().len();
    let a = interval.endpoints();
    let mut report = ResidualReport::new(&["off", "diag", "c"]);
    for k in 0..n {
        let (plus, minus) = central_states(params, interval, order, k, h)?;
        let lp = lax_matrices(&plus);
        let lm = lax_matrices(&minus);
        let d = |p: &CMatrix, q: &CMatrix| (p - q).unscale(2.0 * h);
        for l in 0..n {
            let da = d(&lp.a[l], &lm.a[l]);
            if l != k {
                let rhs = commutator(&lax.a[l], &lax.a[k]).unscale(a[l] - a[k]);
                report.record("off", max_norm(&(da - rhs)));
            } else {
                let mut rhs = commutator(&(&lax.c + lax.e.scale(a[l])), &lax.a[l]);
                for j in 0..n {
                    if j != l {
                        rhs += commutator(&lax.a[j], &lax.a[l]).scale(a[j] / (a[l] - a[j]));
                    }
                }
                report.record("diag", max_norm(&(da.scale(a[l]) - rhs)));
            }
        }
        let dc = d(&lp.c, &lm.c);
        report.record("c", max_norm(&(dc - commutator(&lax.e, &lax.a[k]))));
    }
    Ok(report)
}

/// `∂X/∂a_j - ∂Θ_j/∂z - [Θ_j, X]` at each `z` sample, for every `j`.
pub fn isomonodromy_residual(
    params: &ModelParams,
    interval: &IntervalUnion,
    order: usize,
    z_samples: &[f64],
    h: f64,
) -> Result<ResidualReport> {
    let base = super::state_from_fredholm(params, interval, order)?;
    let lax = lax_matrices(&base);
    let mut report = ResidualReport::new(&["isomonodromy"]);
    for j in 0..interval.endpoints().len() {
        let (plus, minus) = central_states(params, interval, order, j, h)?;
        let (lp, lm) = (lax_matrices(&plus), lax_matrices(&minus));
        for &z in z_samples {
            let dx = (lp.x_of_z(z)? - lm.x_of_z(z)?).unscale(2.0 * h);
            let aj = interval.endpoints()[j];
            let dtheta = lax.a[j].unscale((z - aj) * (z - aj));
            let theta = lax.theta(j, z)?;
            let x = lax.x_of_z(z)?;
            let res = dx - dtheta - commutator(&theta, &x);
            report.record("isomonodromy", max_norm(&res));
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn synthetic(m: usize, endpoints: Vec<f64>) -> DynamicalState {
        let w = m + 1;
        let n = endpoints.len();
        DynamicalState {
            x: CMatrix::from_fn(n, w, |l, j| Complex64::new((l + 2 * j) as f64 * 0.1 + 0.3, 0.0)),
            y: CMatrix::from_fn(n, w, |l, j| Complex64::new(0.5 - (l * j) as f64 * 0.2, 0.0)),
            xi: (0..w).map(|j| j as f64).collect(),
            eta: (0..w).map(|j| -(j as f64) * 0.5).collect(),
            endpoints,
            y_available: vec![true; n],
        }
    }

    #[test]
    fn residues_are_rank_one() {
        let lax = lax_matrices(&synthetic(2, vec![0.5, 2.0]));
        for a in &lax.a {
            let svd = a.clone().svd(false, false);
            let mut s: Vec<f64> = svd.singular_values.iter().copied().collect();
            s.sort_by(|a, b| b.total_cmp(a));
            assert!(s[1] < 1e-14 * s[0]);
        }
    }

    #[test]
    fn x_tends_to_e_and_has_residues() {
        let lax = lax_matrices(&synthetic(1, vec![0.5, 2.0]));
        let far = lax.x_of_z(1e9).unwrap();
        assert!(max_norm(&(far - &lax.e)) < 1e-8);
        let eps = 1e-7;
        let near = lax.x_of_z(2.0 + eps).unwrap().scale(eps);
        assert!(max_norm(&(near - &lax.a[1])) < 1e-5);
        assert!(lax.x_of_z(0.5).is_err());
    }

    #[test]
    fn orthogonal_residues_commute() {
        let mut st = synthetic(2, vec![0.5, 2.0]);
        // x^(1) ⟂ y^(2) and x^(2) ⟂ y^(1): A^(1) A^(2) = A^(2) A^(1) = 0
        let c = Complex64::new(1.0, 0.0);
        let z = Complex64::new(0.0, 0.0);
        st.x.set_row(0, &nalgebra::RowDVector::from_vec(vec![c, z, z]));
        st.y.set_row(0, &nalgebra::RowDVector::from_vec(vec![c, z, z]));
        st.x.set_row(1, &nalgebra::RowDVector::from_vec(vec![z, c, z]));
        st.y.set_row(1, &nalgebra::RowDVector::from_vec(vec![z, z, c]));
        let lax = lax_matrices(&st);
        assert_eq!(max_norm(&commutator(&lax.a[0], &lax.a[1])), 0.0);
    }

    #[test]
    fn e_has_single_entry() {
        for m in 1..4 {
            let lax = lax_matrices(&synthetic(m, vec![1.0, 2.0]));
            let nonzero = lax.e.iter().filter(|z| z.norm() > 0.0).count();
            assert_eq!(nonzero, 1);
            let expected = if m % 2 == 0 { -1.0 } else { 1.0 };
            assert_eq!(lax.e[(m, 0)].re, expected);
        }
    }
}
