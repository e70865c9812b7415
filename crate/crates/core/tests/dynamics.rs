use hardedge::dynamics::{
    integrate_single, ode_rhs, state_from_fredholm, ImaginaryRoot, OdeOptions, SingleState, StartMode,
};
use hardedge::fredholm::{build_nystrom, solve_qp};
use hardedge::specfun::xi_offset;
use hardedge::{IntervalUnion, ModelParams};
use num_complex::Complex64;

fn params(nu: &[f64]) -> ModelParams {
    ModelParams::new(nu.to_vec()).unwrap()
}

#[test]
fn xi_along_flow_matches_quadrature() {
    // ξ_j(s) - offset = (-1)^M ∫_0^s φ_0 P_j, computed independently from
    // the Nyström nodes
    let p = params(&[1.0, 2.0]);
    let s = [0.5, 2.0, 6.0];
    let tr = integrate_single(&p, &s, &OdeOptions::default()).unwrap();
    for smp in &tr.samples {
        let sys = build_nystrom(&p, &IntervalUnion::single(smp.s).unwrap(), 40).unwrap();
        let data = solve_qp(&sys).unwrap();
        let phi0: Vec<f64> = sys.nodes.iter().map(|&x| hardedge::specfun::phi(&p, 0, x).unwrap()).collect();
        for j in 0..3 {
            let integral: f64 = (0..sys.len()).map(|i| sys.weights[i] * phi0[i] * data.p[(i, j)]).sum();
            let expected = integral + xi_offset(&p, j);
            assert!((smp.state.xi[j].re - expected).abs() < 1e-7, "s={} j={j}", smp.s);
        }
    }
}

#[test]
fn parity_along_flow() {
    let p = params(&[0.0, 1.0]);
    let s: Vec<f64> = (1..=20).map(|k| 0.5 * k as f64).collect();
    let tr = integrate_single(&p, &s, &OdeOptions::default()).unwrap();
    for smp in &tr.samples {
        // (0, s): the right endpoint is the second one, so x, y are imaginary
        for z in smp.state.x.iter().chain(&smp.state.y) {
            assert!(z.re.abs() <= 1e-12 * (1.0 + z.norm()));
        }
        for z in smp.state.xi.iter().chain(&smp.state.eta) {
            assert!(z.im.abs() <= 1e-12 * (1.0 + z.norm()));
        }
    }
}

#[test]
fn root_flip_leaves_gap_unchanged() {
    let p = params(&[0.5, 1.5]);
    let s = [0.3, 1.0, 4.0];
    let a = integrate_single(&p, &s, &OdeOptions::default()).unwrap();
    let b = integrate_single(&p, &s, &OdeOptions { root: ImaginaryRoot::MinusI, ..OdeOptions::default() }).unwrap();
    for (u, v) in a.samples.iter().zip(&b.samples) {
        assert!((u.gap - v.gap).abs() < 1e-14);
        assert!((u.state.x[0] + v.state.x[0]).norm() < 1e-12);
    }
}

#[test]
fn series_start_is_close_to_origin_values() {
    let p = params(&[1.0, 2.0]);
    let opts = OdeOptions { start: StartMode::Series, epsilon: Some(1e-6), ..OdeOptions::default() };
    let tr = integrate_single(&p, &[1.0], &opts).unwrap();
    assert!(tr.start_defect.unwrap() < 1e-4);
}

#[test]
fn divergent_psi_needs_bootstrap() {
    let p = params(&[0.0, 0.0]);
    let series = OdeOptions { start: StartMode::Series, ..OdeOptions::default() };
    assert!(integrate_single(&p, &[1.0], &series).is_err());
    let tr = integrate_single(&p, &[1.0, 5.0], &OdeOptions::default()).unwrap();
    let f = hardedge::fredholm::gap_probability(&p, &IntervalUnion::single(5.0).unwrap(), 40).unwrap();
    assert!((tr.samples[1].gap - f).abs() < 1e-8);
}

#[test]
fn rhs_matches_difference_of_fredholm_states() {
    let p = params(&[2.0]);
    let (s, h) = (1.5, 1e-4);
    let at = |s: f64| {
        let st = state_from_fredholm(&p, &IntervalUnion::single(s).unwrap(), 40).unwrap();
        SingleState {
            x: st.x.row(1).iter().copied().collect(),
            y: st.y.row(1).iter().copied().collect(),
            xi: st.xi.iter().map(|&v| Complex64::new(v, 0.0)).collect(),
            eta: st.eta.iter().map(|&v| Complex64::new(v, 0.0)).collect(),
        }
    };
    let d = ode_rhs(&p, s, &at(s)).unwrap();
    let (plus, minus) = (at(s + h), at(s - h));
    for j in 0..2 {
        let fd = (plus.x[j] - minus.x[j]) / (2.0 * h);
        assert!((fd - d.x[j]).norm() < 1e-6, "x{j}: {fd} vs {}", d.x[j]);
        let fd = (plus.y[j] - minus.y[j]) / (2.0 * h);
        assert!((fd - d.y[j]).norm() < 1e-6, "y{j}");
        let fd = (plus.eta[j] - minus.eta[j]) / (2.0 * h);
        assert!((fd - d.eta[j]).norm() < 1e-6, "eta{j}");
    }
}
