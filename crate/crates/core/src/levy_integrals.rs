//! Deterministic quadratures of the Lévy-measure integrals the estimators need.
//!
//! All tempered stable integrals are truncated at [`TAIL_CUTOFF`]; the
//! neglected mass is below `e^{-50}` times a small polynomial factor.

use crate::error::{Error, Result};
use crate::kernels::TruncationKernel;
use crate::model::LevyMeasure;
use crate::quadrature::{integrate_breakpoints, integrate_power_weighted, QuadOptions, QuadResult};

/// Upper integration limit for densities carrying an `e^{-z}` factor.
pub const TAIL_CUTOFF: f64 = 50.0;

fn tight() -> QuadOptions {
    QuadOptions {
        abs_tol: 1e-13,
        rel_tol: 1e-13,
        max_segments: 4000,
    }
}

/// `∫_0^∞ z^{s-1} e^{-z} dz = Γ(s)` for `s > 0`, by quadrature.
pub fn gamma_integral(s: f64) -> Result<QuadResult> {
    if !(s > 0.0 && s.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "gamma integral needs s > 0, got {s}"
        )));
    }
    let head = integrate_power_weighted(|z: f64| (-z).exp(), s - 1.0, 1.0, tight())?;
    let tail = integrate_breakpoints(
        |z: f64| (-z).exp() * z.powf(s - 1.0),
        &[1.0, 5.0, 15.0, TAIL_CUTOFF],
        tight(),
    )?;
    Ok(head + tail)
}

/// `∫_0^∞ e^{-z} z^{-α} dz = Γ(1-α)`: the mean jump per unit time of the
/// tempered stable measure.
pub fn gamma_tail(alpha: f64) -> Result<QuadResult> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "gamma_tail needs α in (0, 1), got {alpha}"
        )));
    }
    gamma_integral(1.0 - alpha)
}

/// `∫ z^k F(z) dz = Γ(k-α)` for the tempered stable measure (`k >= 1`).
pub fn tempered_stable_moment(alpha: f64, k: u32) -> Result<QuadResult> {
    if !(alpha > 0.0 && alpha < 1.0) || k == 0 {
        return Err(Error::InvalidParameter(format!(
            "tempered stable moment needs α in (0, 1) and k >= 1, got α={alpha}, k={k}"
        )));
    }
    gamma_integral(k as f64 - alpha)
}

/// `∫_0^∞ φ(v) v^{-α} dv`.
///
/// On `(0, 1]` the substitution `v = u^{1/(1-α)}` removes the endpoint
/// singularity; the rest of the support is split at the kernel breakpoints.
pub fn kernel_fractional_moment(kernel: &TruncationKernel, alpha: f64) -> Result<QuadResult> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "fractional moment needs α in (0, 1), got {alpha}"
        )));
    }
    let bound = kernel.support_bound();
    if !bound.is_finite() {
        return Err(Error::InvalidParameter(
            "fractional moment of the unit kernel diverges".into(),
        ));
    }
    let opts = QuadOptions {
        abs_tol: 1e-11,
        rel_tol: 0.0,
        max_segments: 20_000,
    };
    let head_end = bound.min(1.0);
    let head = integrate_power_weighted(|v: f64| kernel.eval(v), -alpha, head_end, opts)?;
    if bound <= 1.0 {
        return Ok(head);
    }
    let mut pts: Vec<f64> = kernel
        .breakpoints()
        .into_iter()
        .filter(|p| *p > 1.0 && *p < bound)
        .collect();
    pts.extend([1.0, bound]);
    let tail = integrate_breakpoints(|v: f64| kernel.eval(v) * v.powf(-alpha), &pts, opts)?;
    Ok(head + tail)
}

/// Jump mass removed by truncation, per unit time:
/// `∫ z γx (1 - φ(γx z / (c Δ^β))) F(z) dz`.
pub fn trunc_compensator(
    gamma_x: f64,
    dt: f64,
    beta: f64,
    c: f64,
    kernel: &TruncationKernel,
    levy: &LevyMeasure,
) -> Result<f64> {
    if !(dt > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "step must be positive, got {dt}"
        )));
    }
    let threshold = c * dt.powf(beta);
    trunc_compensator_at_threshold(gamma_x, threshold, kernel, levy)
}

/// [`trunc_compensator`] parametrized directly by the threshold `c Δ^β`.
pub fn trunc_compensator_at_threshold(
    gamma_x: f64,
    threshold: f64,
    kernel: &TruncationKernel,
    levy: &LevyMeasure,
) -> Result<f64> {
    levy.validate()?;
    if !(threshold > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "threshold must be positive, got {threshold}"
        )));
    }
    if gamma_x == 0.0 || matches!(kernel.kind(), crate::kernels::KernelKind::Unit) {
        return Ok(0.0);
    }
    let scale = threshold / gamma_x.abs();
    let integrand =
        |z: f64| z * gamma_x * (1.0 - kernel.eval_scaled(gamma_x * z, threshold)) * levy.density(z);
    let opts = QuadOptions {
        abs_tol: 1e-12,
        rel_tol: 1e-12,
        max_segments: 20_000,
    };
    let kernel_pts: Vec<f64> = kernel
        .breakpoints()
        .into_iter()
        .map(|p| p * scale)
        .collect();
    match *levy {
        LevyMeasure::None => Err(Error::UnsupportedModel(
            "truncation compensator needs a jump measure".into(),
        )),
        LevyMeasure::GaussianCp {
            lambda,
            mu_j,
            sigma_j,
        } => {
            if lambda == 0.0 {
                return Ok(0.0);
            }
            let (lo, hi) = (mu_j - 12.0 * sigma_j, mu_j + 12.0 * sigma_j);
            let mut pts: Vec<f64> = kernel_pts
                .into_iter()
                .filter(|p| *p > lo && *p < hi)
                .collect();
            pts.extend([lo, mu_j - 3.0 * sigma_j, mu_j, mu_j + 3.0 * sigma_j, hi]);
            Ok(integrate_breakpoints(integrand, &pts, opts)?.value)
        }
        LevyMeasure::TemperedStable { .. } => {
            let mut pts: Vec<f64> = kernel_pts
                .into_iter()
                .filter(|p| *p > 0.0 && *p < TAIL_CUTOFF)
                .collect();
            pts.extend([0.0, 1.0, 5.0, 15.0, TAIL_CUTOFF]);
            Ok(integrate_breakpoints(integrand, &pts, opts)?.value)
        }
    }
}

/// Rate `∫_ε^∞ e^{-z} z^{-1-α} dz` of tempered stable jumps larger than `ε`.
pub fn ts_jump_rate_above(alpha: f64, epsilon: f64) -> Result<f64> {
    if epsilon >= TAIL_CUTOFF {
        return Ok(0.0);
    }
    let pts = geometric_points(epsilon, TAIL_CUTOFF);
    Ok(integrate_breakpoints(|z: f64| (-z).exp() * z.powf(-1.0 - alpha), &pts, tight())?.value)
}

/// `∫_ε^∞ e^{-z} z^{-α} dz`, the compensator of the jumps larger than `ε`.
pub fn ts_mean_above(alpha: f64, epsilon: f64) -> Result<f64> {
    let full = gamma_tail(alpha)?.value;
    let below = integrate_power_weighted(|z: f64| (-z).exp(), -alpha, epsilon, tight())?.value;
    Ok(full - below)
}

/// `∫_0^ε z^{1-α} e^{-z} dz`, the variance rate of the jumps smaller than `ε`.
pub fn ts_variance_below(alpha: f64, epsilon: f64) -> Result<f64> {
    Ok(integrate_power_weighted(|z: f64| (-z).exp(), 1.0 - alpha, epsilon, tight())?.value)
}

fn geometric_points(from: f64, to: f64) -> Vec<f64> {
    let mut pts = vec![from];
    let mut p = from * 10.0;
    while p < to {
        pts.push(p);
        p *= 10.0;
    }
    pts.push(to);
    pts
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::{kernel_moment, KernelKind};
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_distr::{Distribution, Gamma};
    use statrs::function::gamma::gamma as gamma_fn;

    #[test]
    fn gamma_tail_values() {
        assert_abs_diff_eq!(
            gamma_tail(0.5).unwrap().value,
            1.772_453_850_905_516,
            epsilon = 1e-10
        );
        assert_abs_diff_eq!(
            gamma_tail(0.3).unwrap().value,
            gamma_fn(0.7),
            epsilon = 1e-10
        );
        assert_abs_diff_eq!(
            gamma_tail(0.3).unwrap().value,
            1.298_055_332_647_558,
            epsilon = 1e-10
        );
        assert_abs_diff_eq!(gamma_tail(1e-9).unwrap().value, 1.0, epsilon = 1e-8);
        let r = gamma_tail(0.9).unwrap();
        assert_abs_diff_eq!(r.value, gamma_fn(0.1), epsilon = 1e-10);
        assert!(r.abs_error_estimate >= 0.0);
        assert!(gamma_tail(0.0).is_err());
        assert!(gamma_tail(1.0).is_err());
    }

    #[test]
    fn gamma_reflection_identity() {
        for alpha in [0.1, 0.25, 0.5, 0.7, 0.95] {
            let g1 = gamma_tail(alpha).unwrap().value;
            let g2 = gamma_integral(alpha).unwrap().value;
            let lhs = g1 * g2 * (std::f64::consts::PI * alpha).sin() / std::f64::consts::PI;
            assert_abs_diff_eq!(lhs, 1.0, epsilon = 1e-8);
        }
    }

    #[test]
    fn fractional_moment_of_indicator() {
        let ind = TruncationKernel::new(KernelKind::Indicator).unwrap();
        assert_abs_diff_eq!(
            kernel_fractional_moment(&ind, 0.5).unwrap().value,
            2.0,
            epsilon = 1e-10
        );
    }

    #[test]
    fn fractional_moment_of_phi0_is_bracketed() {
        let phi0 = TruncationKernel::phi0();
        let v = kernel_fractional_moment(&phi0, 0.5).unwrap().value;
        let j2 = 2.0 * (2.0f64.sqrt() - 1.0);
        assert!(v > 2.0 && v < 2.0 + j2, "{v}");
    }

    #[test]
    fn fractional_moment_small_alpha_limit() {
        for kernel in [
            TruncationKernel::phi0(),
            TruncationKernel::oscillating(2, 3.0).unwrap(),
        ] {
            let half_mass = 0.5 * kernel_moment(&kernel, 0).unwrap().value;
            let v = kernel_fractional_moment(&kernel, 1e-9).unwrap().value;
            assert_abs_diff_eq!(v, half_mass, epsilon = 1e-7);
        }
    }

    #[test]
    fn compensator_vanishes_for_symmetric_setups() {
        let cp = LevyMeasure::GaussianCp {
            lambda: 1.0,
            mu_j: 0.0,
            sigma_j: 2f64.sqrt(),
        };
        let v = trunc_compensator(1.0, 0.2, 0.49, 1.0, &TruncationKernel::phi0(), &cp).unwrap();
        assert_abs_diff_eq!(v, 0.0, epsilon = 1e-12);
        let ts = LevyMeasure::TemperedStable { alpha: 0.5 };
        let v = trunc_compensator(1.0, 0.01, 0.49, 1.0, &TruncationKernel::unit(), &ts).unwrap();
        assert_eq!(v, 0.0);
        assert!(trunc_compensator(
            1.0,
            0.01,
            0.49,
            1.0,
            &TruncationKernel::phi0(),
            &LevyMeasure::None
        )
        .is_err());
    }

    #[test]
    fn compensator_matches_monte_carlo_oracle() {
        // ∫ (1 - φ(z/0.1)) e^{-z} z^{-1/2} dz = Γ(1/2) E[1 - φ(Z/0.1)], Z ~ Gamma(1/2, 1).
        let ts = LevyMeasure::TemperedStable { alpha: 0.5 };
        let phi0 = TruncationKernel::phi0();
        let value = trunc_compensator_at_threshold(1.0, 0.1, &phi0, &ts).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let law = Gamma::new(0.5, 1.0).unwrap();
        let n = 400_000;
        let draws: Vec<f64> = (0..n)
            .map(|_| 1.0 - phi0.eval(law.sample(&mut rng) / 0.1))
            .collect();
        let mean = draws.iter().sum::<f64>() / n as f64;
        let var = draws.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        let g = gamma_fn(0.5);
        let se = g * (var / n as f64).sqrt();
        assert!(value > 0.0);
        assert!(
            (value - g * mean).abs() < 3.0 * se,
            "quad {value} vs mc {} ± {se}",
            g * mean
        );
    }

    #[test]
    fn compensator_limits_and_monotonicity() {
        let ts = LevyMeasure::TemperedStable { alpha: 0.5 };
        let phi0 = TruncationKernel::phi0();
        let full = gamma_tail(0.5).unwrap().value;
        let tiny = trunc_compensator_at_threshold(1.0, 1e-10, &phi0, &ts).unwrap();
        assert_abs_diff_eq!(tiny, full, epsilon = 1e-4);
        let mut prev = f64::INFINITY;
        for i in 0..40 {
            let thr = 1e-4 * 1.4f64.powi(i);
            let v = trunc_compensator_at_threshold(1.0, thr, &phi0, &ts).unwrap();
            assert!(v <= prev + 1e-12, "threshold {thr}: {v} > {prev}");
            prev = v;
        }
    }

    #[test]
    fn tempered_stable_tail_pieces_are_consistent() {
        let alpha = 0.5;
        let eps = 1e-3;
        let above = ts_mean_above(alpha, eps).unwrap();
        // ∫_0^ε z^{-1/2} e^{-z} dz ≈ 2√ε - (2/3) ε^{3/2}
        let below = 2.0 * eps.sqrt() - 2.0 / 3.0 * eps.powf(1.5) + eps.powf(2.5) / 5.0;
        assert_abs_diff_eq!(
            above + below,
            gamma_tail(alpha).unwrap().value,
            epsilon = 1e-9
        );
        let var = ts_variance_below(alpha, eps).unwrap();
        let series = eps.powf(1.5) / 1.5 - eps.powf(2.5) / 2.5 + eps.powf(3.5) / 7.0;
        assert_abs_diff_eq!(var, series, epsilon = 1e-9 * series);
        // Γ(-α, ε) = (Γ(1-α, ε) - ε^{-α} e^{-ε}) / (-α)
        let rate = ts_jump_rate_above(alpha, eps).unwrap();
        let expected = (eps.powf(-alpha) * (-eps).exp() - above) / alpha;
        assert_abs_diff_eq!(rate, expected, epsilon = 1e-8);
    }
}
