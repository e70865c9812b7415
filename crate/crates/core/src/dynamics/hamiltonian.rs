use super::lax::lax_matrices;
use super::DynamicalState;
use crate::error::{Error, Result};
use nalgebra::DMatrix;
use num_complex::Complex64;

/// Partial derivatives of a function of the canonical coordinates, laid out
/// like [`DynamicalState`].
#[derive(Clone, Debug)]
pub struct Gradient {
    pub x: DMatrix<Complex64>,
    pub y: DMatrix<Complex64>,
    pub xi: Vec<Complex64>,
    pub eta: Vec<Complex64>,
}

impl Gradient {
    pub fn zeros(endpoints: usize, width: usize) -> Self {
        Gradient {
            x: DMatrix::zeros(endpoints, width),
            y: DMatrix::zeros(endpoints, width),
            xi: vec![Complex64::new(0.0, 0.0); width],
            eta: vec![Complex64::new(0.0, 0.0); width],
        }
    }
}

fn sign(power: usize) -> f64 {
    if power % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// `S_{kl} = Σ_i x_i^(k) y_i^(l)`.
fn s_pair(st: &DynamicalState, k: usize, l: usize) -> Complex64 {
    (0..st.width()).map(|i| st.x[(k, i)] * st.y[(l, i)]).sum()
}

/// The Hamiltonian `H_l` (0-based `l`) in canonical coordinates.
pub fn hamiltonian_explicit(st: &DynamicalState, l: usize) -> Complex64 {
    let w = st.width();
    let m = w - 1;
    let a = &st.endpoints;
    let x = |j: usize| st.x[(l, j)];
    let y = |j: usize| st.y[(l, j)];
    let mut h = Complex64::new(0.0, 0.0);
    let eta_y: Complex64 = (0..w).map(|j| st.eta[j] * y(j)).sum();
    h -= eta_y * x(0);
    h += sign(m + 1) * a[l] * x(0) * y(m);
    for j in 0..m {
        h -= x(j + 1) * y(j);
    }
    let xi_x: Complex64 = (0..w).map(|k| st.xi[k] * x(k)).sum();
    h += y(m) * xi_x;
    for k in 0..a.len() {
        if k != l {
            h += a[k] / (a[l] - a[k]) * s_pair(st, k, l) * s_pair(st, l, k);
        }
    }
    h
}

/// `H_l = Tr(C A^(l)) + a_l Tr(E A^(l)) + Σ_{k≠l} a_k/(a_l - a_k) Tr(A^(k) A^(l))`.
pub fn hamiltonian_trace(st: &DynamicalState, l: usize) -> Complex64 {
    let lax = lax_matrices(st);
    let a = &st.endpoints;
    let mut h = (&lax.c * &lax.a[l]).trace() + a[l] * (&lax.e * &lax.a[l]).trace();
    for k in 0..a.len() {
        if k != l {
            h += a[k] / (a[l] - a[k]) * (&lax.a[k] * &lax.a[l]).trace();
        }
    }
    h
}

/// Gradient of `H_l` with respect to every canonical coordinate.
pub fn hamiltonian_gradient(st: &DynamicalState, l: usize) -> Gradient {
    let w = st.width();
    let m = w - 1;
    let a = &st.endpoints;
    let mut g = Gradient::zeros(a.len(), w);
    let x = |k: usize, j: usize| st.x[(k, j)];
    let y = |k: usize, j: usize| st.y[(k, j)];
    let eta_y: Complex64 = (0..w).map(|j| st.eta[j] * y(l, j)).sum();
    let xi_x: Complex64 = (0..w).map(|k| st.xi[k] * x(l, k)).sum();
    for i in 0..w {
        let mut dx = st.xi[i] * y(l, m);
        if i == 0 {
            dx += -eta_y + sign(m + 1) * a[l] * y(l, m);
        }
        if i >= 1 {
            dx -= y(l, i - 1);
        }
        let mut dy = -st.eta[i] * x(l, 0);
        if i == m {
            dy += sign(m + 1) * a[l] * x(l, 0) + xi_x;
        }
        if i < m {
            dy -= x(l, i + 1);
        }
        g.x[(l, i)] = dx;
        g.y[(l, i)] = dy;
        g.xi[i] = y(l, m) * x(l, i);
        g.eta[i] = -y(l, i) * x(l, 0);
    }
    for k in 0..a.len() {
        if k == l {
            continue;
        }
        let c = a[k] / (a[l] - a[k]);
        let s_kl = s_pair(st, k, l);
        let s_lk = s_pair(st, l, k);
        for i in 0..w {
            g.x[(l, i)] += c * s_kl * y(k, i);
            g.y[(l, i)] += c * s_lk * x(k, i);
            g.x[(k, i)] += c * s_lk * y(l, i);
            g.y[(k, i)] += c * s_kl * x(l, i);
        }
    }
    g
}

/// `{F, G} = Σ_k (1/a_k) Σ_j (F_x G_y - F_y G_x) + (-1)^M Σ_j (F_ξ G_η - F_η G_ξ)`.
pub fn poisson_bracket(f: &Gradient, g: &Gradient, endpoints: &[f64]) -> Result<Complex64> {
    let width = f.xi.len();
    let m = width - 1;
    let mut total = Complex64::new(0.0, 0.0);
    for (k, &a) in endpoints.iter().enumerate() {
        let mut part = Complex64::new(0.0, 0.0);
        let mut touched = false;
        for j in 0..width {
            let (fx, fy, gx, gy) = (f.x[(k, j)], f.y[(k, j)], g.x[(k, j)], g.y[(k, j)]);
            touched |= fx.norm() + fy.norm() + gx.norm() + gy.norm() > 0.0;
            part += fx * gy - fy * gx;
        }
        if a == 0.0 {
            if touched {
                return Err(Error::SingularBracket(k + 1));
            }
            continue;
        }
        total += part / a;
    }
    for j in 0..width {
        total += sign(m) * (f.xi[j] * g.eta[j] - f.eta[j] * g.xi[j]);
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// A state with random entries obeying the parity pattern.
    fn random_state(m: usize, endpoints: Vec<f64>, seed: u64) -> DynamicalState {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let w = m + 1;
        let n = endpoints.len();
        let mut x = DMatrix::zeros(n, w);
        let mut y = DMatrix::zeros(n, w);
        for l in 0..n {
            let f = if (l + 1) % 2 == 0 { Complex64::i() } else { Complex64::new(1.0, 0.0) };
            for j in 0..w {
                x[(l, j)] = f * rng.random_range(-1.0..1.0);
                y[(l, j)] = f * rng.random_range(-1.0..1.0);
            }
        }
        DynamicalState {
            x,
            y,
            xi: (0..w).map(|_| rng.random_range(-2.0..2.0)).collect(),
            eta: (0..w).map(|_| rng.random_range(-2.0..2.0)).collect(),
            endpoints,
            y_available: vec![true; n],
        }
    }

    #[test]
    fn trace_form_equals_coordinate_form() {
        for (seed, m) in [(1, 1), (2, 2), (3, 3)] {
            let st = random_state(m, vec![0.4, 1.1, 1.9, 3.2], seed);
            for l in 0..4 {
                let a = hamiltonian_explicit(&st, l);
                let b = hamiltonian_trace(&st, l);
                assert!((a - b).norm() < 1e-12 * (1.0 + a.norm()), "l={l}: {a} vs {b}");
                assert!(a.im.abs() < 1e-12);
            }
        }
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let st = random_state(2, vec![0.5, 1.5, 2.0, 3.0], 7);
        let h = 1e-6;
        for l in 0..4 {
            let g = hamiltonian_gradient(&st, l);
            for k in 0..4 {
                for j in 0..3 {
                    for which in 0..2 {
                        let mut p = st.clone();
                        let mut q = st.clone();
                        if which == 0 {
                            p.x[(k, j)] += h;
                            q.x[(k, j)] -= h;
                        } else {
                            p.y[(k, j)] += h;
                            q.y[(k, j)] -= h;
                        }
                        let fd = (hamiltonian_explicit(&p, l) - hamiltonian_explicit(&q, l)) / (2.0 * h);
                        let an = if which == 0 { g.x[(k, j)] } else { g.y[(k, j)] };
                        assert!((fd - an).norm() < 1e-8, "l={l} k={k} j={j} which={which}");
                    }
                }
            }
            for j in 0..3 {
                let mut p = st.clone();
                let mut q = st.clone();
                p.xi[j] += h;
                q.xi[j] -= h;
                let fd = (hamiltonian_explicit(&p, l) - hamiltonian_explicit(&q, l)) / (2.0 * h);
                assert!((fd - g.xi[j]).norm() < 1e-8);
                let mut p = st.clone();
                let mut q = st.clone();
                p.eta[j] += h;
                q.eta[j] -= h;
                let fd = (hamiltonian_explicit(&p, l) - hamiltonian_explicit(&q, l)) / (2.0 * h);
                assert!((fd - g.eta[j]).norm() < 1e-8);
            }
        }
    }

    #[test]
    fn bracket_of_coordinates() {
        let endpoints = [0.5, 2.0];
        let w = 2;
        let mut fx = Gradient::zeros(2, w);
        fx.x[(1, 0)] = Complex64::new(1.0, 0.0);
        let mut gy = Gradient::zeros(2, w);
        gy.y[(1, 0)] = Complex64::new(1.0, 0.0);
        assert_eq!(poisson_bracket(&fx, &gy, &endpoints).unwrap(), Complex64::new(0.5, 0.0));
        let mut gy_other = Gradient::zeros(2, w);
        gy_other.y[(0, 0)] = Complex64::new(1.0, 0.0);
        assert_eq!(poisson_bracket(&fx, &gy_other, &endpoints).unwrap(), Complex64::new(0.0, 0.0));
        let mut fxi = Gradient::zeros(2, w);
        fxi.xi[1] = Complex64::new(1.0, 0.0);
        let mut geta = Gradient::zeros(2, w);
        geta.eta[1] = Complex64::new(1.0, 0.0);
        // M = 1: {ξ_j, η_j} = -1
        assert_eq!(poisson_bracket(&fxi, &geta, &endpoints).unwrap(), Complex64::new(-1.0, 0.0));
    }

    #[test]
    fn self_bracket_vanishes() {
        let st = random_state(2, vec![0.5, 2.0], 3);
        let g = hamiltonian_gradient(&st, 1);
        assert_eq!(poisson_bracket(&g, &g, &st.endpoints).unwrap(), Complex64::new(0.0, 0.0));
    }

    #[test]
    fn zero_endpoint_bracket_is_singular() {
        let st = random_state(1, vec![0.0, 2.0], 5);
        let g1 = hamiltonian_gradient(&st, 0);
        let g2 = hamiltonian_gradient(&st, 1);
        assert!(matches!(poisson_bracket(&g1, &g2, &st.endpoints), Err(Error::SingularBracket(1))));
    }
}
