//! Cross-method and invariant checks, shared by the `verify` command and the
//! acceptance tests.

use crate::dynamics::{
    convergence_order, hamiltonian_explicit, hamiltonian_gradient, hamiltonian_trace, integrate_single,
    isomonodromy_residual, pde_residuals, poisson_bracket, schlesinger_residuals, state_from_fredholm,
    state_from_fredholm_with, ImaginaryRoot, OdeOptions, ResidualReport,
};
use crate::error::Result;
use crate::fredholm::{build_nystrom, endpoint_derivative, fd_step, gap_probability, IntervalUnion, NystromSystem};
use crate::kernel::{bessel_kernel, Kernel};
use crate::montecarlo::{empirical_gaps, EnsembleSpec};
use crate::specfun::{MeijerPair, ModelParams};
use serde::{Deserialize, Serialize};
use std::time::Instant;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    /// Worst observed value of the checked quantity.
    pub metric: f64,
    pub threshold: f64,
    /// `threshold` is a lower bound (convergence orders) rather than an
    /// upper one.
    pub at_least: bool,
    pub details: Vec<String>,
    pub seconds: f64,
}

impl Check {
    pub fn line(&self) -> String {
        format!(
            "{} {:<28} {:.3e} ({} {:.1e}, {:.2} s)",
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.metric,
            if self.at_least { ">=" } else { "<=" },
            self.threshold,
            self.seconds
        )
    }
}

/// Runs `body`, which returns `(metric, details)`; `pass` decides on the
/// metric. Numerical errors fail the check instead of aborting the suite.
fn timed<F, P>(name: &str, threshold: f64, pass: P, body: F) -> Check
where
    F: FnOnce() -> Result<(f64, Vec<String>)>,
    P: FnOnce(f64, f64) -> bool,
{
    let start = Instant::now();
    let outcome = body();
    let seconds = start.elapsed().as_secs_f64();
    match outcome {
        Ok((metric, details)) => Check {
            name: name.to_string(),
            passed: metric.is_finite() && pass(metric, seconds),
            metric,
            threshold,
            at_least: false,
            details,
            seconds,
        },
        Err(e) => Check {
            name: name.to_string(),
            passed: false,
            metric: f64::NAN,
            threshold,
            at_least: false,
            details: vec![format!("error: {e}")],
            seconds,
        },
    }
}

fn label(p: &ModelParams) -> String {
    format!("nu={:?}", p.nu())
}

/// Log-spaced grid on `[lo, hi]`.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let (a, b) = (lo.ln(), hi.ln());
    (0..n).map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp()).collect()
}

/// The parameter sets of the special-function and kernel checks.
pub fn standard_sets() -> Vec<ModelParams> {
    [vec![0.0], vec![2.0], vec![1.0, 2.0], vec![0.0, 1.0], vec![1.0, 2.0, 3.0]]
        .into_iter()
        .map(|nu| ModelParams::new(nu).expect("valid"))
        .collect()
}

/// Two intervals with every endpoint positive.
pub fn two_interval_union() -> IntervalUnion {
    IntervalUnion::new(vec![0.5, 1.5, 2.0, 3.0]).expect("valid")
}

/// Relative residuals of the differential equations for `f` and `g`.
pub fn special_function_residuals(sets: &[ModelParams], grid: &[f64], bound: f64, max_seconds: f64) -> Check {
    timed("special-function ODEs", bound, |m, t| m <= bound && t < max_seconds, || {
        let mut worst: f64 = 0.0;
        let mut details = Vec::new();
        for p in sets {
            let pair = MeijerPair::new(p);
            let mut local: f64 = 0.0;
            for &x in grid {
                let (r, s) = pair.ode_residual_f(x)?;
                local = local.max(r.abs() / s);
                let (r, s) = pair.ode_residual_g(x)?;
                local = local.max(r.abs() / s);
            }
            details.push(format!("{}: {local:.2e}", label(p)));
            worst = worst.max(local);
        }
        Ok((worst, details))
    })
}

/// `Σ φ_j(x) ψ_j(x) = 0`, relative to `Σ |φ_j ψ_j|`.
pub fn continuity(sets: &[ModelParams], grid: &[f64], bound: f64) -> Check {
    timed("continuity identity", bound, |m, _| m <= bound, || {
        let mut worst: f64 = 0.0;
        let mut details = Vec::new();
        for p in sets {
            let k = Kernel::new(p);
            let mut local: f64 = 0.0;
            for &x in grid {
                let (v, s) = k.continuity_defect(x)?;
                local = local.max(v.abs() / s);
            }
            details.push(format!("{}: {local:.2e}", label(p)));
            worst = worst.max(local);
        }
        Ok((worst, details))
    })
}

/// Bilinear against integral representation on `{1..10}²`, relative to
/// `max(1, |K|)`.
pub fn kernel_agreement(sets: &[ModelParams], bound: f64, max_seconds: f64) -> Check {
    timed("kernel representations", bound, |m, t| m <= bound && t < max_seconds, || {
        let mut worst: f64 = 0.0;
        let mut details = Vec::new();
        for p in sets {
            let k = Kernel::new(p);
            let mut local: f64 = 0.0;
            for i in 1..=10 {
                for j in 1..=10 {
                    let (x, y) = (i as f64, j as f64);
                    let a = k.bilinear(x, y)?;
                    let b = k.integral(x, y)?;
                    local = local.max((a - b).abs() / a.abs().max(1.0));
                }
            }
            details.push(format!("{}: {local:.2e}", label(p)));
            worst = worst.max(local);
        }
        Ok((worst, details))
    })
}

/// `K_1(x, y) = 4 K_Bessel(4x, 4y)` for `ν = 0`.
pub fn bessel_reduction(bound: f64) -> Check {
    timed("Bessel reduction", bound, |m, _| m <= bound, || {
        let k = Kernel::new(&ModelParams::new(vec![0.0])?);
        let pts = log_grid(1e-3, 20.0, 12);
        let mut worst: f64 = 0.0;
        for &x in &pts {
            for &y in &pts {
                let d = (k.bilinear(x, y)? - 4.0 * bessel_kernel(0.0, 4.0 * x, 4.0 * y)?).abs();
                worst = worst.max(d);
            }
        }
        Ok((worst, vec![format!("{} points", pts.len() * pts.len())]))
    })
}

/// Gap probability from the single-interval flow against Nyström; also the
/// pointwise state and the invariance under `√-1 → -√-1`.
///
/// The gap difference is the metric; the state must also agree to
/// [`STATE_BOUND`] (relative to `1 + |value|`).
pub fn tau_agreement(sets: &[ModelParams], s_values: &[f64], order: usize, bound: f64, max_seconds: f64) -> Check {
    let mut state_worst = f64::NAN;
    let mut check = timed("tau (ODE vs Nystrom)", bound, |m, t| m <= bound && t < max_seconds, || {
        let mut state_all: f64 = 0.0;
        let mut worst: f64 = 0.0;
        let mut details = Vec::new();
        for p in sets {
            let opts = OdeOptions { order, ..OdeOptions::default() };
            let plus = integrate_single(p, s_values, &opts)?;
            let minus = integrate_single(p, s_values, &OdeOptions { root: ImaginaryRoot::MinusI, ..opts })?;
            let (mut gap, mut state, mut flip): (f64, f64, f64) = (0.0, 0.0, 0.0);
            for (a, b) in plus.samples.iter().zip(&minus.samples) {
                let iv = IntervalUnion::single(a.s)?;
                gap = gap.max((a.gap - gap_probability(p, &iv, order)?).abs());
                flip = flip.max((a.gap - b.gap).abs());
                if a.s == 0.0 {
                    continue;
                }
                let st = state_from_fredholm(p, &iv, order)?;
                for j in 0..st.width() {
                    let rel = |u: num_complex::Complex64, v: num_complex::Complex64| (u - v).norm() / (1.0 + v.norm());
                    state = state
                        .max(rel(a.state.x[j], st.x[(1, j)]))
                        .max(rel(a.state.y[j], st.y[(1, j)]))
                        .max(rel(a.state.xi[j], st.xi[j].into()))
                        .max(rel(a.state.eta[j], st.eta[j].into()));
                }
            }
            details.push(format!(
                "{}: gap {gap:.2e}, state {state:.2e}, root flip {flip:.2e}",
                label(p)
            ));
            worst = worst.max(gap).max(flip);
            state_all = state_all.max(state);
        }
        state_worst = state_all;
        Ok((worst, details))
    });
    check.passed &= state_worst <= STATE_BOUND;
    check
}

pub const STATE_BOUND: f64 = 1e-5;

/// `|det_n - det_2n|` at `(0, s)`.
pub fn nystrom_convergence(sets: &[ModelParams], s: f64, order: usize, bound: f64) -> Check {
    timed("Nystrom self-convergence", bound, |m, _| m <= bound, || {
        let iv = IntervalUnion::single(s)?;
        let mut worst: f64 = 0.0;
        let mut details = Vec::new();
        for p in sets {
            let d = (gap_probability(p, &iv, order)? - gap_probability(p, &iv, 2 * order)?).abs();
            details.push(format!("{}: {d:.2e}", label(p)));
            worst = worst.max(d);
        }
        Ok((worst, details))
    })
}

/// Smallest empirical order over all classes and parameter sets; the check
/// passes when it is at least `min_order`.
fn order_check<F>(name: &str, sets: &[ModelParams], h: f64, min_order: f64, report: F) -> Check
where
    F: Fn(&ModelParams, f64) -> Result<ResidualReport>,
{
    let mut check = timed(name, min_order, |m, _| m >= min_order, || {
        let mut worst = f64::INFINITY;
        let mut details = Vec::new();
        for p in sets {
            let coarse = report(p, h)?;
            let fine = report(p, 0.5 * h)?;
            for (class, q) in convergence_order(&coarse, &fine) {
                details.push(format!(
                    "{} {class}: r(h) {:.2e}, r(h/2) {:.2e}, order {q:.3}",
                    label(p),
                    coarse.get(&class),
                    fine.get(&class)
                ));
                worst = worst.min(q);
            }
        }
        Ok((worst, details))
    });
    check.at_least = true;
    check
}

pub fn pde_orders(sets: &[ModelParams], interval: &IntervalUnion, order: usize, h: f64, min_order: f64) -> Check {
    order_check("multi-time PDE residuals", sets, h, min_order, |p, h| {
        pde_residuals(p, interval, order, h)
    })
}

pub fn schlesinger_orders(
    sets: &[ModelParams],
    interval: &IntervalUnion,
    order: usize,
    z_samples: &[f64],
    h: f64,
    min_order: f64,
) -> Check {
    order_check("Schlesinger/isomonodromy", sets, h, min_order, |p, h| {
        let mut r = schlesinger_residuals(p, interval, order, h)?;
        let iso = isomonodromy_residual(p, interval, order, z_samples, h)?;
        r.max_residual.extend(iso.max_residual);
        Ok(r)
    })
}

/// Coordinate form, trace form, and `a_l ∂ log det / ∂a_l`.
///
/// The coordinate form generates the multi-time flow under
/// [`crate::dynamics::poisson_bracket`] and equals `+a_l ∂_{a_l} log det`; the logarithmic-derivative
/// side is compared with that sign and the sign is reported.
pub fn hamiltonian_triple(sets: &[ModelParams], interval: &IntervalUnion, order: usize, bound: f64) -> Check {
    timed("Hamiltonian triple equality", bound, |m, _| m <= bound, || {
        let mut worst: f64 = 0.0;
        let mut details = Vec::new();
        let log_det = |p: &ModelParams, iv: &IntervalUnion| -> Result<f64> {
            Ok(build_nystrom(p, iv, order)?.determinant().ln())
        };
        for p in sets {
            let st = state_from_fredholm(p, interval, order)?;
            for l in 0..interval.endpoints().len() {
                let a = interval.endpoints()[l];
                let coord = hamiltonian_explicit(&st, l);
                let trace = hamiltonian_trace(&st, l);
                let fd = a * endpoint_derivative(interval, l, fd_step(a), |iv| log_det(p, iv))?;
                let d = (coord - trace)
                    .norm()
                    .max((coord.re - fd).abs())
                    .max((trace.re - fd).abs())
                    .max(coord.im.abs());
                details.push(format!(
                    "{} H{}: coordinate {:.12}, trace {:.12}, a dlogdet/da {:.12}, -a dlogdet/da {:.12}",
                    label(p),
                    l + 1,
                    coord.re,
                    trace.re,
                    fd,
                    -fd
                ));
                worst = worst.max(d);
            }
        }
        Ok((worst, details))
    })
}

/// `|{H_1, H_2}| / (1 + |H_1||H_2|)` at a one-interval state.
pub fn involution(sets: &[ModelParams], interval: &IntervalUnion, order: usize, bound: f64) -> Check {
    timed("involution", bound, |m, _| m <= bound, || {
        let mut worst: f64 = 0.0;
        let mut details = Vec::new();
        for p in sets {
            let st = state_from_fredholm(p, interval, order)?;
            let n = interval.endpoints().len();
            for l in 0..n {
                for r in l + 1..n {
                    let b = poisson_bracket(&hamiltonian_gradient(&st, l), &hamiltonian_gradient(&st, r), &st.endpoints)?;
                    let hl = hamiltonian_explicit(&st, l).norm();
                    let hr = hamiltonian_explicit(&st, r).norm();
                    let rel = b.norm() / (1.0 + hl * hr);
                    details.push(format!("{} {{H{},H{}}} = {:.2e}", label(p), l + 1, r + 1, b.norm()));
                    worst = worst.max(rel);
                }
            }
        }
        Ok((worst, details))
    })
}

/// Parity pattern of Fredholm-derived states for both roots.
pub fn parity(sets: &[ModelParams], interval: &IntervalUnion, order: usize, bound: f64) -> Check {
    timed("parity", bound, |m, _| m <= bound, || {
        let mut worst: f64 = 0.0;
        for p in sets {
            for root in [ImaginaryRoot::PlusI, ImaginaryRoot::MinusI] {
                worst = worst.max(state_from_fredholm_with(p, interval, order, root)?.parity_defect());
            }
        }
        Ok((worst, vec![]))
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MonteCarloPlan {
    pub seed: u64,
    pub exact_trials: usize,
    pub limit_n0: usize,
    pub limit_trials: usize,
    pub limit_s: Vec<f64>,
    pub limit_tolerance: f64,
}

impl Default for MonteCarloPlan {
    fn default() -> Self {
        MonteCarloPlan {
            seed: 20_240_515,
            exact_trials: 100_000,
            limit_n0: 100,
            limit_trials: 20_000,
            limit_s: vec![0.5, 1.0, 2.0],
            limit_tolerance: 0.02,
        }
    }
}

/// `N_0 = 1`, `ν = 0` against `e^{-s}` (in standard errors), and the
/// `ν = (0, 0)` ensemble at `N_0 = limit_n0` against the limiting `F_2`.
///
/// The metric is the largest deviation of the second part; the first part
/// must stay within three standard errors.
pub fn monte_carlo(plan: &MonteCarloPlan, order: usize, max_seconds: f64) -> Check {
    let tol = plan.limit_tolerance;
    let mut exact_ok = false;
    let mut c = timed("Monte Carlo", tol, |m, t| m <= tol && t < max_seconds, || {
        let mut details = Vec::new();
        let one = EnsembleSpec::new(1, ModelParams::new(vec![0.0])?, plan.exact_trials, plan.seed)?;
        let s1 = [0.1, 0.5, 1.0, 2.0];
        let mut z_max: f64 = 0.0;
        for (s, (e, se)) in s1.iter().zip(empirical_gaps(&one, &s1)?) {
            let z = (e - (-s).exp()).abs() / se;
            details.push(format!("N0=1 s={s}: {e:.5} vs {:.5} ({z:.2} se)", (-s).exp()));
            z_max = z_max.max(z);
        }
        exact_ok = z_max <= 3.0;
        let p = ModelParams::new(vec![0.0, 0.0])?;
        let big = EnsembleSpec::new(plan.limit_n0, p.clone(), plan.limit_trials, plan.seed)?;
        let mut worst: f64 = 0.0;
        for (s, (e, se)) in plan.limit_s.iter().zip(empirical_gaps(&big, &plan.limit_s)?) {
            let f = gap_probability(&p, &IntervalUnion::single(*s)?, order)?;
            details.push(format!("N0={} s={s}: {e:.5} ± {se:.5} vs {f:.5}", plan.limit_n0));
            worst = worst.max((e - f).abs());
        }
        Ok((worst, details))
    });
    c.passed &= exact_ok;
    c
}

/// `F(0) = 1`, `F ∈ (0, 1]`, strict decrease, and
/// `|F(s) - 1 + ∫_0^s K(x, x) dx| ≤ s²` at `s = small_s`.
pub fn structural(sets: &[ModelParams], s_values: &[f64], small_s: f64, order: usize) -> Check {
    let bound = small_s * small_s;
    timed("structural", bound, |m, _| m <= bound, || {
        let mut worst: f64 = 0.0;
        let mut details = Vec::new();
        let mut shape_ok = true;
        for p in sets {
            let curve = crate::dynamics::fredholm_curve(p, s_values, order)?;
            if let Err(e) = curve.check_shape() {
                shape_ok = false;
                details.push(format!("{}: {e}", label(p)));
            }
            let sys = build_nystrom(p, &IntervalUnion::single(small_s)?, order)?;
            let trace: f64 = trace_of(&sys);
            let d = (sys.determinant() - 1.0 + trace).abs();
            details.push(format!("{}: F({small_s}) - 1 + ∫K = {d:.2e}", label(p)));
            worst = worst.max(d);
        }
        if !shape_ok {
            worst = f64::INFINITY;
        }
        Ok((worst, details))
    })
}

/// `∫_J K(x, x) dx` by the Nyström rule.
fn trace_of(sys: &NystromSystem) -> f64 {
    (0..sys.len()).map(|i| sys.kernel_matrix[(i, i)]).sum()
}

/// Every acceptance check with its fixed configuration.
pub fn acceptance_suite(mc: &MonteCarloPlan) -> Vec<Check> {
    use crate::fredholm::DEFAULT_ORDER as N;
    let sets = standard_sets();
    let grid = log_grid(1e-3, 50.0, 40);
    let finite_psi: Vec<ModelParams> = [vec![0.0], vec![2.0], vec![1.0, 2.0], vec![0.0, 1.0]]
        .into_iter()
        .map(|nu| ModelParams::new(nu).expect("valid"))
        .collect();
    let j2 = two_interval_union();
    let j1 = IntervalUnion::new(vec![0.5, 2.0]).expect("valid");
    let taus = [0.1, 0.5, 1.0, 2.0, 5.0, 10.0];
    let shape_grid: Vec<f64> = (0..=20).map(|k| 0.5 * k as f64).collect();
    vec![
        special_function_residuals(&sets, &grid, 1e-8, 10.0),
        continuity(&sets, &grid, 1e-10),
        kernel_agreement(&sets, 1e-8, 30.0),
        bessel_reduction(1e-10),
        tau_agreement(&finite_psi, &taus, N, 1e-6, 120.0),
        nystrom_convergence(&sets, 10.0, N, 1e-10),
        pde_orders(&sets, &j2, N, 1e-3, 1.9),
        hamiltonian_triple(&sets, &j2, N, 1e-6),
        involution(&sets, &j1, N, 1e-6),
        schlesinger_orders(&sets, &j2, N, &[0.25, 1.75, 4.0], 1e-3, 1.9),
        monte_carlo(mc, N, 300.0),
        structural(&sets, &shape_grid, 1e-2, N),
    ]
}

/// Invariant suites for one parameter set (the `verify` command).
pub fn invariant_suite(p: &ModelParams, order: usize, mc: Option<&MonteCarloPlan>) -> Vec<Check> {
    let one = std::slice::from_ref(p);
    let grid = log_grid(1e-3, 50.0, 40);
    let j2 = two_interval_union();
    let j1 = IntervalUnion::new(vec![0.5, 2.0]).expect("valid");
    let shape_grid: Vec<f64> = (0..=20).map(|k| 0.5 * k as f64).collect();
    let mut out = vec![
        special_function_residuals(one, &grid, 1e-8, f64::INFINITY),
        continuity(one, &grid, 1e-10),
        kernel_agreement(one, 1e-8, f64::INFINITY),
        tau_agreement(one, &[0.1, 0.5, 1.0, 2.0, 5.0, 10.0], order, 1e-6, f64::INFINITY),
        nystrom_convergence(one, 10.0, order, 1e-10),
        pde_orders(one, &j2, order, 1e-3, 1.9),
        hamiltonian_triple(one, &j2, order, 1e-6),
        involution(one, &j1, order, 1e-6),
        schlesinger_orders(one, &j2, order, &[0.25, 1.75, 4.0], 1e-3, 1.9),
        parity(one, &j2, order, 1e-14),
        structural(one, &shape_grid, 1e-2, order),
    ];
    if p.m() == 1 && p.nu()[0] == 0.0 {
        out.insert(3, bessel_reduction(1e-10));
    }
    if let Some(plan) = mc {
        out.push(monte_carlo(plan, order, f64::INFINITY));
    }
    out
}
