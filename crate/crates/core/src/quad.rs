//! Quadrature rules: fixed Gauss–Legendre and adaptive Gauss–Kronrod.

use crate::error::{Error, Result};
use gauss_quad::legendre::GaussLegendre;
use std::collections::BinaryHeap;
use std::num::NonZeroUsize;

/// Gauss–Legendre nodes and weights on `[-1, 1]`, nodes ascending.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let rule = GaussLegendre::new(NonZeroUsize::new(n.max(1)).expect("n >= 1"));
    let mut pairs: Vec<(f64, f64)> = rule.iter().map(|(x, w)| (*x, *w)).collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    pairs.into_iter().unzip()
}

// QUADPACK 7-point Gauss / 15-point Kronrod abscissae and weights
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

fn gk15<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = h * XGK[j];
        let pair = f(c - dx) + f(c + dx);
        kronrod += WGK[j] * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    (kronrod * h, ((kronrod - gauss) * h).abs())
}

struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.error.total_cmp(&other.error)
    }
}

const MAX_PANELS: usize = 4000;

/// Adaptive G7K15 over the given breakpoints, bisecting the panel with the
/// largest error estimate until the total estimate is below `abs_tol`.
pub fn adaptive<F: FnMut(f64) -> f64>(mut f: F, breaks: &[f64], abs_tol: f64) -> Result<f64> {
    let mut heap = BinaryHeap::new();
    let mut err = 0.0;
    for w in breaks.windows(2) {
        let (value, error) = gk15(&mut f, w[0], w[1]);
        err += error;
        heap.push(Panel { a: w[0], b: w[1], value, error });
    }
    while err > abs_tol {
        if heap.len() >= MAX_PANELS {
            return Err(Error::Quadrature { tolerance: abs_tol, estimate: err });
        }
        let worst = heap.pop().expect("non-empty");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            return Err(Error::Quadrature { tolerance: abs_tol, estimate: err });
        }
        err -= worst.error;
        for (a, b) in [(worst.a, mid), (mid, worst.b)] {
            let (value, error) = gk15(&mut f, a, b);
            err += error;
            heap.push(Panel { a, b, value, error });
        }
        if !err.is_finite() {
            return Err(Error::Quadrature { tolerance: abs_tol, estimate: err });
        }
    }
    Ok(heap.iter().map(|p| p.value).sum())
}

/// Breakpoints on `[0, 1]` refined geometrically toward 0, for integrands
/// with an integrable (logarithmic) singularity at the left end.
pub fn graded_unit_breaks(levels: usize) -> Vec<f64> {
    let mut v: Vec<f64> = (0..=levels).rev().map(|k| 0.5f64.powi(k as i32)).collect();
    v.insert(0, 0.0);
    v
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn legendre_integrates_polynomials_exactly() {
        let (x, w) = gauss_legendre(10);
        let s: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(18)).sum();
        assert!((s - 2.0 / 19.0).abs() < 1e-15);
        assert!(x.windows(2).all(|p| p[0] < p[1]));
    }

    #[test]
    fn adaptive_handles_log_singularity() {
        let v = adaptive(|t: f64| if t > 0.0 { t.ln() } else { 0.0 }, &graded_unit_breaks(30), 1e-13).unwrap();
        assert!((v + 1.0).abs() < 1e-12);
    }

    #[test]
    fn adaptive_reports_failure() {
        let r = adaptive(|t: f64| 1.0 / t, &[0.0, 1.0], 1e-12);
        assert!(r.is_err());
    }
}
