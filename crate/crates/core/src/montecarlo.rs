//! Products of complex Ginibre matrices and empirical hard-edge gap
//! probabilities.

use crate::error::{Error, Result};
use crate::specfun::ModelParams;
use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::FRAC_1_SQRT_2;

/// `X(j)` is `N_j × N_{j-1}` with `N_j = N_0 + ν_j`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EnsembleSpec {
    pub n0: usize,
    pub params: ModelParams,
    pub trials: usize,
    pub seed: u64,
}

impl EnsembleSpec {
    pub fn new(n0: usize, params: ModelParams, trials: usize, seed: u64) -> Result<Self> {
        let spec = EnsembleSpec { n0, params, trials, seed };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n0 == 0 {
            return Err(Error::InvalidParams("N0 must be at least 1".into()));
        }
        if self.trials == 0 {
            return Err(Error::InvalidParams("at least one trial is required".into()));
        }
        if let Some(v) = self.params.nu().iter().find(|v| v.fract() != 0.0 || **v < 0.0) {
            return Err(Error::InvalidParams(format!(
                "sampling needs non-negative integer exponents, got {v}"
            )));
        }
        Ok(())
    }

    /// `N_0, N_1, ..., N_M`.
    pub fn dims(&self) -> Vec<usize> {
        std::iter::once(self.n0)
            .chain(self.params.nu().iter().map(|&v| self.n0 + v as usize))
            .collect()
    }

    fn rng(&self, trial: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(trial);
        rng
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TrialSample {
    /// Squared singular values of `Y_M`, ascending.
    pub values: Vec<f64>,
    /// Redraws caused by SVD non-convergence.
    pub resamples: u32,
}

const MAX_RESAMPLES: u32 = 8;

fn ginibre(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> DMatrix<Complex64> {
    DMatrix::from_fn(rows, cols, |_, _| {
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        Complex64::new(re, im) * FRAC_1_SQRT_2
    })
}

/// One draw of `Y_M = X(M)···X(1)`; deterministic in `(seed, trial)`.
pub fn sample_trial(spec: &EnsembleSpec, trial: u64) -> Result<TrialSample> {
    spec.validate()?;
    let dims = spec.dims();
    let mut rng = spec.rng(trial);
    for resamples in 0..=MAX_RESAMPLES {
        let mut y = ginibre(dims[1], dims[0], &mut rng);
        for w in dims.windows(2).skip(1) {
            y = ginibre(w[1], w[0], &mut rng) * y;
        }
        // singular values of Y directly: forming Y*Y squares the condition
        // number right where the smallest values live
        let max_iter = 50 * y.nrows().max(y.ncols());
        if let Some(svd) = y.try_svd(false, false, f64::EPSILON, max_iter) {
            let mut values: Vec<f64> = svd.singular_values.iter().map(|s| s * s).collect();
            values.sort_by(f64::total_cmp);
            return Ok(TrialSample { values, resamples });
        }
    }
    Err(Error::Sampling(format!("SVD failed {MAX_RESAMPLES} times in trial {trial}")))
}

pub fn sample_squared_singular_values(spec: &EnsembleSpec, trial: u64) -> Result<Vec<f64>> {
    Ok(sample_trial(spec, trial)?.values)
}

/// Smallest squared singular value of every trial, in trial order.
pub fn smallest_values(spec: &EnsembleSpec) -> Result<Vec<f64>> {
    spec.validate()?;
    (0..spec.trials as u64)
        .into_par_iter()
        .map(|t| sample_trial(spec, t).map(|s| s.values[0]))
        .collect()
}

/// Fraction of trials with no value below `s / N_0`, and its binomial
/// standard error.
pub fn gap_from_minima(minima: &[f64], n0: usize, s: f64) -> (f64, f64) {
    let cut = s / n0 as f64;
    let n = minima.len() as f64;
    let p = minima.iter().filter(|&&v| v > cut).count() as f64 / n;
    (p, (p * (1.0 - p) / n).sqrt())
}

pub fn empirical_gap(spec: &EnsembleSpec, s: f64) -> Result<(f64, f64)> {
    Ok(empirical_gaps(spec, &[s])?[0])
}

/// Same trials for every `s`, so the estimates are monotone in `s`.
pub fn empirical_gaps(spec: &EnsembleSpec, s_values: &[f64]) -> Result<Vec<(f64, f64)>> {
    if s_values.iter().any(|s| !(*s >= 0.0)) {
        return Err(Error::Domain("gap sizes must be non-negative".into()));
    }
    let minima = smallest_values(spec)?;
    Ok(s_values.iter().map(|&s| gap_from_minima(&minima, spec.n0, s)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(n0: usize, nu: Vec<f64>, trials: usize) -> EnsembleSpec {
        EnsembleSpec::new(n0, ModelParams::new(nu).unwrap(), trials, 42).unwrap()
    }

    #[test]
    fn rejects_fractional_exponents() {
        assert!(EnsembleSpec::new(3, ModelParams::new(vec![0.5]).unwrap(), 10, 1).is_err());
        assert!(EnsembleSpec::new(0, ModelParams::new(vec![0.0]).unwrap(), 10, 1).is_err());
    }

    #[test]
    fn output_is_sorted_and_sized() {
        let sp = spec(6, vec![1.0, 0.0, 2.0], 1);
        let v = sample_squared_singular_values(&sp, 3).unwrap();
        assert_eq!(v.len(), 6);
        assert!(v[0] >= 0.0);
        assert!(v.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn reproducible_per_trial() {
        let sp = spec(4, vec![0.0, 1.0], 5);
        let a = sample_squared_singular_values(&sp, 2).unwrap();
        let b = sample_squared_singular_values(&sp, 2).unwrap();
        let c = sample_squared_singular_values(&sp, 3).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn one_by_one_is_exponential() {
        let sp = spec(1, vec![0.0], 20_000);
        let mins = smallest_values(&sp).unwrap();
        let mean = mins.iter().sum::<f64>() / mins.len() as f64;
        // Exp(1): standard error of the mean is 1/sqrt(n) ≈ 0.007
        assert!((mean - 1.0).abs() < 0.03, "{mean}");
    }

    #[test]
    fn trace_moment() {
        // E Tr(Y*Y) = Π_{j=0}^M N_j
        let sp = spec(3, vec![1.0, 2.0], 4000);
        let mut total = 0.0;
        for t in 0..sp.trials as u64 {
            total += sample_squared_singular_values(&sp, t).unwrap().iter().sum::<f64>();
        }
        let mean = total / sp.trials as f64;
        let expected = (3 * 4 * 5) as f64;
        assert!((mean / expected - 1.0).abs() < 0.05, "{mean} vs {expected}");
    }

    #[test]
    fn gaps_are_monotone() {
        let sp = spec(2, vec![0.0], 500);
        let g = empirical_gaps(&sp, &[0.0, 0.1, 0.5, 1.0, 2.0]).unwrap();
        assert_eq!(g[0].0, 1.0);
        assert!(g.windows(2).all(|w| w[1].0 <= w[0].0));
    }
}
