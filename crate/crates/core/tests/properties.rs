use hardedge::fredholm::gap_probability;
use hardedge::montecarlo::{empirical_gaps, sample_squared_singular_values, EnsembleSpec};
use hardedge::{IntervalUnion, Kernel, ModelParams};
use proptest::prelude::*;

fn nu_strategy() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec((0u32..12).prop_map(|k| k as f64 * 0.25), 1..=3)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn gap_is_a_decreasing_probability(nu in nu_strategy(), s in 0.05f64..6.0, ds in 0.05f64..2.0) {
        let p = ModelParams::new(nu).unwrap();
        let a = gap_probability(&p, &IntervalUnion::single(s).unwrap(), 30).unwrap();
        let b = gap_probability(&p, &IntervalUnion::single(s + ds).unwrap(), 30).unwrap();
        prop_assert!(a > 0.0 && a <= 1.0);
        prop_assert!(b < a);
    }

    #[test]
    fn kernel_forms_agree(nu in nu_strategy(), x in 0.05f64..12.0, y in 0.05f64..12.0) {
        let k = Kernel::new(&ModelParams::new(nu).unwrap());
        let a = k.bilinear(x, y).unwrap();
        let b = k.integral(x, y).unwrap();
        prop_assert!((a - b).abs() <= 1e-8 * a.abs().max(1.0), "{} vs {}", a, b);
    }

    #[test]
    fn two_intervals_beat_one(nu in nu_strategy(), a in 0.1f64..2.0, gap in 0.1f64..1.0, len in 0.1f64..2.0) {
        // removing a subinterval can only raise the gap probability
        let p = ModelParams::new(nu).unwrap();
        let b = a + len;
        let whole = gap_probability(&p, &IntervalUnion::new(vec![0.0, b + gap + len]).unwrap(), 30).unwrap();
        let split = gap_probability(&p, &IntervalUnion::new(vec![0.0, b, b + gap, b + gap + len]).unwrap(), 30).unwrap();
        prop_assert!(split > whole);
    }

    #[test]
    fn sampling_is_reproducible(seed in any::<u64>(), trial in 0u64..1000, n0 in 1usize..6) {
        let spec = EnsembleSpec::new(n0, ModelParams::new(vec![1.0, 0.0]).unwrap(), 1, seed).unwrap();
        let a = sample_squared_singular_values(&spec, trial).unwrap();
        let b = sample_squared_singular_values(&spec, trial).unwrap();
        prop_assert_eq!(&a, &b);
        prop_assert_eq!(a.len(), n0);
        prop_assert!(a.windows(2).all(|w| w[0] <= w[1]) && a[0] >= 0.0);
    }
}

#[test]
fn one_by_one_mean_is_one() {
    let spec = EnsembleSpec::new(1, ModelParams::new(vec![0.0]).unwrap(), 100_000, 3).unwrap();
    let mean: f64 = (0..spec.trials as u64)
        .map(|t| sample_squared_singular_values(&spec, t).unwrap()[0])
        .sum::<f64>()
        / spec.trials as f64;
    assert!((mean - 1.0).abs() < 0.01, "{mean}");
}

#[test]
fn finite_size_bias_shrinks() {
    // bias is roughly 0.09 / N0; resolvable against the sampling error only
    // for small N0
    let p = ModelParams::new(vec![0.0, 0.0]).unwrap();
    let s = [0.5, 1.0, 2.0];
    let limit: Vec<f64> = s
        .iter()
        .map(|&s| gap_probability(&p, &IntervalUnion::single(s).unwrap(), 40).unwrap())
        .collect();
    let bias = |n0: usize| {
        let spec = EnsembleSpec::new(n0, p.clone(), 40_000, 11).unwrap();
        let est = empirical_gaps(&spec, &s).unwrap();
        est.iter().zip(&limit).map(|((e, _), f)| (e - f).abs()).sum::<f64>() / s.len() as f64
    };
    let (b5, b10, b20) = (bias(5), bias(10), bias(20));
    assert!(b5 > b10 && b10 > b20, "{b5} {b10} {b20}");
}
