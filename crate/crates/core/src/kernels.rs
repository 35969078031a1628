//! Truncation kernels used to filter out increments that contain jumps.
//!
//! [`KernelKind::Phi0`] is a C^∞ plateau function: 1 on `[-1, 1]`, 0 outside
//! `[-2, 2]`. The oscillating kernels combine dilations of it so that every
//! moment up to order `l` vanishes while the plateau on `[-1, 1]` is kept:
//!
//! ```text
//! φ¹_d(x) = (d φ⁰(x) - φ⁰(x/d)) / (d - 1)
//! φˡ_d(x) = c⁻¹ Σ_{k=1..l} C(l,k) (-1)^{k+1} (1/k) φ¹_d(x/k),   c = Σ_{k=1..l} C(l,k) (-1)^{k+1} / k
//! ```
//!
//! Since `φ⁰(x/d)` reaches out to `|x| = 2d`, the outermost term is supported
//! on `[-2ld, 2ld]`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::{integrate_breakpoints, QuadOptions, QuadResult};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum KernelKind {
    /// No truncation: the kernel is identically 1.
    #[serde(rename = "none")]
    Unit,
    /// Sharp indicator of `[-1, 1]`.
    Indicator,
    Phi0,
    #[serde(rename = "osc")]
    Oscillating {
        l: u32,
        d: f64,
    },
}

/// Evaluable truncation function with a known support bound.
#[derive(Debug, Clone, PartialEq)]
pub struct TruncationKernel {
    kind: KernelKind,
    /// Coefficients `C(l,k)(-1)^{k+1}/(k c)` of the dilated `φ¹_d(x/k)` terms.
    weights: Vec<f64>,
}

impl TruncationKernel {
    pub fn new(kind: KernelKind) -> Result<Self> {
        let weights = match kind {
            KernelKind::Oscillating { l, d } => {
                if l == 0 {
                    return Err(Error::InvalidParameter(
                        "oscillating kernel needs l >= 1".into(),
                    ));
                }
                if !(d > 1.0 && d.is_finite()) {
                    return Err(Error::InvalidParameter(format!(
                        "oscillating kernel needs finite d > 1, got {d}"
                    )));
                }
                let norm = oscillating_normalizer(l);
                (1..=l)
                    .map(|k| binomial(l, k) * sign(k) / (k as f64 * norm))
                    .collect()
            }
            _ => Vec::new(),
        };
        Ok(Self { kind, weights })
    }

    pub fn phi0() -> Self {
        Self {
            kind: KernelKind::Phi0,
            weights: Vec::new(),
        }
    }

    pub fn unit() -> Self {
        Self {
            kind: KernelKind::Unit,
            weights: Vec::new(),
        }
    }

    pub fn oscillating(l: u32, d: f64) -> Result<Self> {
        Self::new(KernelKind::Oscillating { l, d })
    }

    pub fn kind(&self) -> KernelKind {
        self.kind
    }

    /// The kernel vanishes for `|x| >= support_bound()`.
    pub fn support_bound(&self) -> f64 {
        match self.kind {
            KernelKind::Unit => f64::INFINITY,
            KernelKind::Indicator => 1.0,
            KernelKind::Phi0 => 2.0,
            KernelKind::Oscillating { l, d } => 2.0 * l as f64 * d,
        }
    }

    pub fn is_symmetric(&self) -> bool {
        true
    }

    pub fn eval(&self, x: f64) -> f64 {
        match self.kind {
            KernelKind::Unit => 1.0,
            KernelKind::Indicator => {
                if x.abs() <= 1.0 {
                    1.0
                } else {
                    0.0
                }
            }
            KernelKind::Phi0 => eval_phi0(x),
            KernelKind::Oscillating { d, .. } => {
                if x.abs() <= 1.0 {
                    return 1.0;
                }
                self.weights
                    .iter()
                    .enumerate()
                    .map(|(i, w)| w * eval_phi1(x / (i + 1) as f64, d))
                    .sum()
            }
        }
    }

    /// `φ(y / threshold)`, the kernel rescaled to a threshold such as `cΔ^β`.
    pub fn eval_scaled(&self, y: f64, threshold: f64) -> f64 {
        debug_assert!(threshold > 0.0);
        self.eval(y / threshold)
    }

    /// Abscissae where the kernel changes regime, for quadrature splitting.
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut pts = match self.kind {
            KernelKind::Unit => Vec::new(),
            KernelKind::Indicator => vec![1.0],
            KernelKind::Phi0 => vec![1.0, 2.0],
            KernelKind::Oscillating { l, d } => (1..=l)
                .flat_map(|k| {
                    let k = k as f64;
                    [k, 2.0 * k, k * d, 2.0 * k * d]
                })
                .collect(),
        };
        let neg: Vec<f64> = pts.iter().map(|p| -p).collect();
        pts.extend(neg);
        pts.push(0.0);
        pts.sort_by(f64::total_cmp);
        pts.dedup();
        pts
    }

    /// Sum of the absolute combination coefficients (1 for non-oscillating kernels).
    pub fn coefficient_abs_sum(&self) -> f64 {
        if self.weights.is_empty() {
            1.0
        } else {
            self.weights.iter().map(|w| w.abs()).sum()
        }
    }
}

fn sign(k: u32) -> f64 {
    if k % 2 == 1 {
        1.0
    } else {
        -1.0
    }
}

fn binomial(n: u32, k: u32) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// `Σ_{k=1..l} C(l,k) (-1)^{k+1} / k`; does not depend on `d`.
pub fn oscillating_normalizer(l: u32) -> f64 {
    (1..=l).map(|k| binomial(l, k) * sign(k) / k as f64).sum()
}

#[inline]
fn bump(u: f64) -> f64 {
    if u > 0.0 {
        (-1.0 / u).exp()
    } else {
        0.0
    }
}

/// Smooth plateau function with support `[-2, 2]`.
pub fn eval_phi0(x: f64) -> f64 {
    let ax = x.abs();
    if ax <= 1.0 {
        1.0
    } else if ax >= 2.0 {
        0.0
    } else {
        let up = bump(2.0 - ax);
        up / (up + bump(ax - 1.0))
    }
}

/// `(d φ⁰(x) - φ⁰(x/d)) / (d - 1)`.
pub fn eval_phi1(x: f64, d: f64) -> f64 {
    (d * eval_phi0(x) - eval_phi0(x / d)) / (d - 1.0)
}

pub fn eval_oscillating(x: f64, l: u32, d: f64) -> Result<f64> {
    Ok(TruncationKernel::oscillating(l, d)?.eval(x))
}

/// `∫ x^k φ(x) dx` over the kernel's support, split at its breakpoints.
pub fn kernel_moment(kernel: &TruncationKernel, k: u32) -> Result<QuadResult> {
    let bound = kernel.support_bound();
    if !bound.is_finite() {
        return Err(Error::InvalidParameter(
            "moments of the unit kernel are infinite".into(),
        ));
    }
    let mut pts = kernel.breakpoints();
    pts.retain(|p| p.abs() <= bound);
    pts.extend([-bound, bound]);
    let opts = QuadOptions {
        abs_tol: 1e-11,
        rel_tol: 0.0,
        max_segments: 20_000,
    };
    integrate_breakpoints(|x: f64| x.powi(k as i32) * kernel.eval(x), &pts, opts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn phi0_plateau_support_and_midpoint() {
        assert_eq!(eval_phi0(0.0), 1.0);
        assert_eq!(eval_phi0(1.0), 1.0);
        assert_eq!(eval_phi0(2.5), 0.0);
        assert_eq!(eval_phi0(-2.5), 0.0);
        assert_eq!(eval_phi0(2.0), 0.0);
        assert_abs_diff_eq!(eval_phi0(1.5), 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(eval_phi0(-1.5), 0.5, epsilon = 1e-15);
    }

    #[test]
    fn phi0_is_monotone_on_transition() {
        let mut prev = 1.0;
        for i in 0..=1000 {
            let v = eval_phi0(1.0 + i as f64 / 1000.0);
            assert!(v <= prev);
            prev = v;
        }
    }

    #[test]
    fn oscillating_normalizer_is_harmonic_number() {
        assert_abs_diff_eq!(oscillating_normalizer(1), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(oscillating_normalizer(2), 1.5, epsilon = 1e-15);
        assert_abs_diff_eq!(
            oscillating_normalizer(3),
            3.0 - 1.5 + 1.0 / 3.0,
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(oscillating_normalizer(3), 11.0 / 6.0, epsilon = 1e-15);
    }

    #[test]
    fn oscillating_value_at_origin_is_one() {
        assert_eq!(eval_oscillating(0.0, 2, 3.0).unwrap(), 1.0);
        assert_eq!(eval_oscillating(0.0, 3, 3.0).unwrap(), 1.0);
    }

    #[test]
    fn oscillating_support() {
        let k = TruncationKernel::oscillating(3, 3.0).unwrap();
        assert_eq!(k.support_bound(), 18.0);
        for x in [18.0, 18.5, 25.0, -18.0, -30.0] {
            assert_eq!(k.eval(x), 0.0);
        }
        // The outer lobe between l·d and 2l·d is genuinely non-zero.
        assert!(k.eval(12.0).abs() > 1e-3);
    }

    #[test]
    fn l1_reconstructs_phi1() {
        let k = TruncationKernel::oscillating(1, 3.0).unwrap();
        for i in 0..=800 {
            let x = -8.0 + i as f64 * 0.02;
            let direct = (3.0 * eval_phi0(x) - eval_phi0(x / 3.0)) / 2.0;
            assert_abs_diff_eq!(k.eval(x), direct, epsilon = 4.0 * f64::EPSILON);
        }
    }

    #[test]
    fn phi0_moments() {
        let k = TruncationKernel::phi0();
        let m1 = kernel_moment(&k, 1).unwrap();
        assert_abs_diff_eq!(m1.value, 0.0, epsilon = 1e-10);
        let m0 = kernel_moment(&k, 0).unwrap().value;
        assert!(m0 > 2.0 && m0 < 4.0, "{m0}");
        // Symmetric transition => ∫φ⁰ = 3 exactly.
        assert_abs_diff_eq!(m0, 3.0, epsilon = 1e-10);
    }

    #[test]
    fn oscillating_moments_vanish_below_order_l() {
        for l in 1..=4 {
            let k = TruncationKernel::oscillating(l, 3.0).unwrap();
            for j in 0..l {
                let m = kernel_moment(&k, j).unwrap();
                assert!(m.value.abs() <= 1e-8, "l={l} k={j}: {}", m.value);
            }
        }
    }

    #[test]
    fn moment_of_order_l_vanishes_only_by_symmetry() {
        // ∫x^l φˡ_d = M_l Σ_k C(l,k)(-1)^{k+1} k^l / c with M_l the l-th moment of φ¹_d;
        // the alternating sum equals (-1)^{l+1} l!, so only odd l (odd integrand) vanish.
        for l in [1, 3] {
            let k = TruncationKernel::oscillating(l, 3.0).unwrap();
            assert!(kernel_moment(&k, l).unwrap().value.abs() <= 1e-8);
        }
        let phi0 = TruncationKernel::phi0();
        let m2_phi0 = kernel_moment(&phi0, 2).unwrap().value;
        let d: f64 = 3.0;
        let m2_phi1 = m2_phi0 * d * (1.0 - d * d) / (d - 1.0);
        let predicted = m2_phi1 * (2.0 * 1.0 - 4.0) / oscillating_normalizer(2);
        let k2 = TruncationKernel::oscillating(2, 3.0).unwrap();
        let m = kernel_moment(&k2, 2).unwrap().value;
        assert_abs_diff_eq!(m, predicted, epsilon = 1e-8);
        assert!(m.abs() > 1.0);
    }

    #[test]
    fn scaled_evaluation() {
        let k = TruncationKernel::phi0();
        assert_eq!(k.eval_scaled(0.0, 0.3), 1.0);
        assert_eq!(k.eval_scaled(0.61, 0.3), 0.0);
        assert_abs_diff_eq!(k.eval_scaled(0.45, 0.3), 0.5, epsilon = 1e-12);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(TruncationKernel::oscillating(0, 3.0).is_err());
        assert!(TruncationKernel::oscillating(2, 1.0).is_err());
        assert!(kernel_moment(&TruncationKernel::unit(), 0).is_err());
    }

    proptest! {
        #[test]
        fn plateau_holds_for_all_kernels(x in -1.0f64..=1.0, l in 1u32..5, d in 1.1f64..6.0) {
            prop_assert_eq!(eval_phi0(x), 1.0);
            prop_assert_eq!(TruncationKernel::oscillating(l, d).unwrap().eval(x), 1.0);
        }

        #[test]
        fn oscillating_is_bounded_by_coefficient_sum(x in -40.0f64..40.0, l in 1u32..5, d in 1.1f64..6.0) {
            let k = TruncationKernel::oscillating(l, d).unwrap();
            let bound = k.coefficient_abs_sum() * d / (d - 1.0);
            prop_assert!(k.eval(x).abs() <= bound + 1e-12);
        }

        #[test]
        fn kernels_are_symmetric(x in -40.0f64..40.0, l in 1u32..5) {
            let k = TruncationKernel::oscillating(l, 3.0).unwrap();
            prop_assert_eq!(k.eval(x), k.eval(-x));
            prop_assert_eq!(eval_phi0(x), eval_phi0(-x));
        }
    }
}
