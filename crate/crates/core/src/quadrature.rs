//! Adaptive Gauss–Kronrod (7/15) integration.
//!
//! Global adaptive bisection: the panel with the largest error estimate is
//! split until the summed estimate meets the tolerance. Integrands with
//! kinks or plateaus should be split at their breakpoints by the caller
//! through [`integrate_breakpoints`].

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_5,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_48,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_224,
    0.063_092_092_629_978_56,
    0.104_790_010_322_250_19,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_42,
    0.204_432_940_075_298_89,
    0.209_482_141_084_727_82,
];

// Gauss weights for XGK[1], XGK[3], XGK[5] and the centre.
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_64,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Value of a quadrature together with its estimated absolute error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadResult {
    pub value: f64,
    pub abs_error_estimate: f64,
}

impl QuadResult {
    pub fn zero() -> Self {
        Self {
            value: 0.0,
            abs_error_estimate: 0.0,
        }
    }
}

impl std::ops::Add for QuadResult {
    type Output = QuadResult;
    fn add(self, rhs: QuadResult) -> QuadResult {
        QuadResult {
            value: self.value + rhs.value,
            abs_error_estimate: self.abs_error_estimate + rhs.abs_error_estimate,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct QuadOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_segments: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        Self {
            abs_tol: 1e-12,
            rel_tol: 1e-12,
            max_segments: 4000,
        }
    }
}

impl QuadOptions {
    pub fn abs(abs_tol: f64) -> Self {
        Self {
            abs_tol,
            rel_tol: 0.0,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
    abs_mass: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.error.total_cmp(&other.error) == Ordering::Equal
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

/// One application of the 15-point Kronrod rule with QUADPACK's error scaling.
fn kronrod15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Panel {
    let centre = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(centre);
    let mut res_k = WGK[7] * fc;
    let mut res_g = WG[3] * fc;
    let mut res_abs = res_k.abs();
    let mut fv1 = [0.0; 7];
    let mut fv2 = [0.0; 7];
    for j in 0..7 {
        let dx = half * XGK[j];
        let f1 = f(centre - dx);
        let f2 = f(centre + dx);
        fv1[j] = f1;
        fv2[j] = f2;
        res_k += WGK[j] * (f1 + f2);
        res_abs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            res_g += WG[j / 2] * (f1 + f2);
        }
    }
    let mean = 0.5 * res_k;
    let mut res_asc = WGK[7] * (fc - mean).abs();
    for j in 0..7 {
        res_asc += WGK[j] * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }
    let value = res_k * half;
    res_abs *= half.abs();
    res_asc *= half.abs();
    let mut error = ((res_k - res_g) * half).abs();
    if res_asc != 0.0 && error != 0.0 {
        error = res_asc * (200.0 * error / res_asc).powf(1.5).min(1.0);
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        error = error.max(50.0 * f64::EPSILON * res_abs);
    }
    Panel {
        a,
        b,
        value,
        error,
        abs_mass: res_abs,
    }
}

/// Adaptive integral of `f` over the finite interval `[a, b]`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, opts: QuadOptions) -> Result<QuadResult> {
    if a == b {
        return Ok(QuadResult::zero());
    }
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "integration bounds must be finite, got [{a}, {b}]"
        )));
    }
    let first = kronrod15(&f, a, b);
    let mut heap = BinaryHeap::new();
    let mut total = first.value;
    let mut total_err = first.error;
    let mut total_mass = first.abs_mass;
    heap.push(first);
    loop {
        // Below ~100 ulps of ∫|f| the estimate is roundoff and cannot be reduced.
        let tol = opts
            .abs_tol
            .max(opts.rel_tol * total.abs())
            .max(100.0 * f64::EPSILON * total_mass);
        if total_err <= tol {
            break;
        }
        if heap.len() >= opts.max_segments {
            return Err(Error::QuadratureNonConvergence {
                a,
                b,
                value: total,
                abs_error: total_err,
                segments: heap.len(),
            });
        }
        let worst = heap.pop().expect("heap is never empty");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a.min(worst.b) || mid >= worst.a.max(worst.b) {
            // Panel can no longer be split in floating point.
            return Err(Error::QuadratureNonConvergence {
                a,
                b,
                value: total,
                abs_error: total_err,
                segments: heap.len() + 1,
            });
        }
        let left = kronrod15(&f, worst.a, mid);
        let right = kronrod15(&f, mid, worst.b);
        total += left.value + right.value - worst.value;
        total_err += left.error + right.error - worst.error;
        total_mass += left.abs_mass + right.abs_mass - worst.abs_mass;
        heap.push(left);
        heap.push(right);
    }
    // Re-sum to shed the drift of the running updates.
    let value = heap.iter().map(|p| p.value).sum();
    let abs_error_estimate = heap.iter().map(|p| p.error).sum();
    Ok(QuadResult {
        value,
        abs_error_estimate,
    })
}

/// Integral over `[points[0], points[last]]`, split at every interior point.
///
/// Points need not be sorted; duplicates are dropped. The tolerance budget is
/// shared evenly across the pieces.
pub fn integrate_breakpoints<F: Fn(f64) -> f64>(
    f: F,
    points: &[f64],
    opts: QuadOptions,
) -> Result<QuadResult> {
    let mut pts: Vec<f64> = points.to_vec();
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    if pts.len() < 2 {
        return Ok(QuadResult::zero());
    }
    let pieces = (pts.len() - 1) as f64;
    let piece_opts = QuadOptions {
        abs_tol: opts.abs_tol / pieces,
        ..opts
    };
    let mut acc = QuadResult::zero();
    for w in pts.windows(2) {
        acc = acc + integrate(&f, w[0], w[1], piece_opts)?;
    }
    Ok(acc)
}

/// `∫_0^c z^q g(z) dz` for `q > -1` and smooth `g`.
///
/// The substitution `z = u^{1/(q+1)}` turns the power weight into the
/// constant `1/(q+1)`, so a singular endpoint at zero becomes a smooth
/// integrand on `[0, c^{q+1}]`.
pub fn integrate_power_weighted<G: Fn(f64) -> f64>(
    g: G,
    q: f64,
    c: f64,
    opts: QuadOptions,
) -> Result<QuadResult> {
    if q <= -1.0 {
        return Err(Error::InvalidParameter(format!(
            "power weight z^{q} is not integrable at 0"
        )));
    }
    if c <= 0.0 {
        return Ok(QuadResult::zero());
    }
    let p = 1.0 / (q + 1.0);
    let upper = c.powf(q + 1.0);
    let scaled_opts = QuadOptions {
        abs_tol: opts.abs_tol * (q + 1.0),
        ..opts
    };
    let r = integrate(|u: f64| g(u.powf(p)), 0.0, upper, scaled_opts)?;
    Ok(QuadResult {
        value: r.value * p,
        abs_error_estimate: r.abs_error_estimate * p,
    })
}
