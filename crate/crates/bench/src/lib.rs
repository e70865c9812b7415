//! Fixed workloads shared by the benchmarks.

use hardedge::{IntervalUnion, ModelParams};

/// One parameter set per number of factors.
pub fn parameter_sets() -> Vec<(&'static str, ModelParams)> {
    vec![
        ("M1_nu0", ModelParams::new(vec![0.0]).unwrap()),
        ("M2_nu12", ModelParams::new(vec![1.0, 2.0]).unwrap()),
        ("M3_nu123", ModelParams::new(vec![1.0, 2.0, 3.0]).unwrap()),
    ]
}

pub fn two_intervals() -> IntervalUnion {
    IntervalUnion::new(vec![0.5, 1.5, 2.0, 3.0]).unwrap()
}

pub fn s_grid() -> Vec<f64> {
    (1..=20).map(|k| 0.5 * k as f64).collect()
}
