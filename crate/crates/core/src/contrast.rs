//! The jump-filtered contrast
//!
//! ```text
//! U_n(θ) = Σ_i w_i (X_{t_{i+1}} - m̃_{θ,Δ_i}(X_{t_i}))² φ_{cΔ_i^β}(X_{t_{i+1}} - X_{t_i}) 1{|X_{t_i}| ≤ Δ_i^{-k}}
//! ```
//!
//! and its minimisation.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::{KernelKind, TruncationKernel};
use crate::model::{LevyMeasure, ModelSpec, Theta};
use crate::moment::{stable_correction, MomentApprox};
use crate::optim::{nelder_mead, NelderMeadOptions};
use crate::sim::SamplePath;

/// Keeps `|X| ≤ Δ^{-2}`: 25 at `Δ = 0.2`, `10⁴` at `Δ = 0.01`.
pub const DEFAULT_K_IND: f64 = 2.0;

#[derive(Debug, Clone, PartialEq)]
pub struct ContrastConfig {
    pub beta: f64,
    pub c: f64,
    pub kernel: TruncationKernel,
    pub k_ind: f64,
    /// Weight each term by `1/(a²(X_{t_i}) Δ_i)`.
    pub weight_by_variance: bool,
}

impl ContrastConfig {
    /// Unweighted contrast with the default indicator exponent.
    pub fn new(beta: f64, c: f64, kernel: TruncationKernel) -> Result<Self> {
        let cfg = Self {
            beta,
            c,
            kernel,
            k_ind: DEFAULT_K_IND,
            weight_by_variance: false,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.beta > 0.0 && self.beta < 0.5) {
            return Err(Error::InvalidParameter(format!(
                "beta must lie in (0, 1/2), got {}",
                self.beta
            )));
        }
        if !(self.c > 0.0 && self.c.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "c must be > 0, got {}",
                self.c
            )));
        }
        if !(self.k_ind > 0.0 && self.k_ind.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "k_ind must be > 0, got {}",
                self.k_ind
            )));
        }
        Ok(())
    }

    pub fn threshold(&self, dt: f64) -> f64 {
        self.c * dt.powf(self.beta)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThetaBox {
    pub theta1: [f64; 2],
    pub theta2: [f64; 2],
}

impl Default for ThetaBox {
    fn default() -> Self {
        Self {
            theta1: [-5.0, -0.01],
            theta2: [-10.0, 10.0],
        }
    }
}

impl ThetaBox {
    pub fn validate(&self) -> Result<()> {
        for (name, [lo, hi]) in [("theta1", self.theta1), ("theta2", self.theta2)] {
            if !(lo <= hi && lo.is_finite() && hi.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "empty {name} range [{lo}, {hi}]"
                )));
            }
        }
        Ok(())
    }

    pub fn clamp(&self, theta: Theta) -> Theta {
        Theta::new(
            theta.theta1.clamp(self.theta1[0], self.theta1[1]),
            theta.theta2.clamp(self.theta2[0], self.theta2[1]),
        )
    }

    fn centre(&self) -> Theta {
        Theta::new(
            0.5 * (self.theta1[0] + self.theta1[1]),
            0.5 * (self.theta2[0] + self.theta2[1]),
        )
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct FitOptions {
    pub theta_box: ThetaBox,
    /// Holds `θ₁` at this value and minimises over `θ₂` only.
    pub frozen_theta1: Option<f64>,
    pub optimizer: NelderMeadOptions,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimateResult {
    pub theta: Theta,
    pub contrast_at_opt: f64,
    pub kept_fraction: f64,
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, Copy)]
struct Term {
    dt: f64,
    x0: f64,
    x1: f64,
    weight: f64,
}

/// Increments with their combined weights `w_i φ_i 1_i`; terms with zero
/// weight are dropped once here.
#[derive(Debug, Clone)]
pub struct PreparedContrast {
    terms: Vec<Term>,
    uniform_dt: Option<f64>,
    total: usize,
    kept: usize,
}

impl PreparedContrast {
    pub fn new(path: &SamplePath, model: &ModelSpec, cfg: &ContrastConfig) -> Result<Self> {
        cfg.validate()?;
        if path.len() < 2 {
            return Err(Error::InvalidGrid(
                "contrast needs at least two observations".into(),
            ));
        }
        let uniform_dt = path.uniform_step();
        let mut terms = Vec::with_capacity(path.len() - 1);
        let mut kept = 0;
        for (dt, x0, x1) in path.increments() {
            if x0.abs() > dt.powf(-cfg.k_ind) {
                continue;
            }
            let phi = cfg.kernel.eval_scaled(x1 - x0, cfg.threshold(dt));
            if phi == 0.0 {
                continue;
            }
            kept += 1;
            let w = if cfg.weight_by_variance {
                let a = model.diffusion(x0);
                if !(a != 0.0 && a.is_finite()) {
                    return Err(Error::InvalidParameter(format!(
                        "variance weight undefined: a({x0}) = {a}"
                    )));
                }
                1.0 / (a * a * dt)
            } else {
                1.0
            };
            terms.push(Term {
                dt: uniform_dt.unwrap_or(dt),
                x0,
                x1,
                weight: w * phi,
            });
        }
        Ok(Self {
            terms,
            uniform_dt,
            total: path.len() - 1,
            kept,
        })
    }

    pub fn kept_fraction(&self) -> f64 {
        self.kept as f64 / self.total as f64
    }

    pub fn weight_sum(&self) -> f64 {
        self.terms.iter().map(|t| t.weight).sum()
    }

    pub fn value(&self, model: &ModelSpec, approx: &MomentApprox, theta: Theta) -> Result<f64> {
        if let Some(dt) = self.uniform_dt {
            if let Some((growth, intercept)) = approx.affine_in_state(model, theta, dt)? {
                return Ok(self
                    .terms
                    .iter()
                    .map(|t| {
                        let r = (t.x1 - t.x0) - (growth * t.x0 + intercept);
                        t.weight * r * r
                    })
                    .sum());
            }
        }
        let mut sum = 0.0;
        for t in &self.terms {
            let r = t.x1 - approx.eval(model, theta, t.x0, t.dt)?;
            sum += t.weight * r * r;
        }
        Ok(sum)
    }

    /// Weighted least-squares minimiser of the contrast built from `approx`
    /// when it is affine in θ, otherwise from the Euler approximation.
    /// `None` when the normal equations are not positive definite.
    fn least_squares_start(
        &self,
        model: &ModelSpec,
        approx: &MomentApprox,
        at: Theta,
        frozen_theta1: Option<f64>,
    ) -> Result<Option<Theta>> {
        let euler = MomentApprox::Euler;
        let basis = if approx.is_theta_affine(model) {
            approx
        } else {
            &euler
        };
        let (mut a11, mut a12, mut a22, mut b1, mut b2) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for t in &self.terms {
            let m0 = basis.eval(model, Theta::new(0.0, 0.0), t.x0, t.dt)?;
            let g = basis.theta_grad(model, at, t.x0, t.dt)?;
            let mut r = t.x1 - m0;
            if let Some(t1) = frozen_theta1 {
                r -= g[0] * t1;
            }
            a11 += t.weight * g[0] * g[0];
            a12 += t.weight * g[0] * g[1];
            a22 += t.weight * g[1] * g[1];
            b1 += t.weight * g[0] * r;
            b2 += t.weight * g[1] * r;
        }
        Ok(match frozen_theta1 {
            Some(t1) => (a22 > 0.0).then(|| Theta::new(t1, b2 / a22)),
            None => {
                let det = a11 * a22 - a12 * a12;
                (a11 > 0.0 && det > 1e-12 * a11 * a22)
                    .then(|| Theta::new((a22 * b1 - a12 * b2) / det, (a11 * b2 - a12 * b1) / det))
            }
        })
    }
}

/// `U_n(θ)` for one path.
pub fn contrast_value(
    path: &SamplePath,
    theta: Theta,
    model: &ModelSpec,
    approx: &MomentApprox,
    cfg: &ContrastConfig,
) -> Result<f64> {
    PreparedContrast::new(path, model, cfg)?.value(model, approx, theta)
}

/// Minimises the contrast over the box with Nelder–Mead from a weighted
/// least-squares start. Points where the approximation is undefined count
/// as `+∞`.
pub fn minimize_contrast(
    path: &SamplePath,
    model: &ModelSpec,
    approx: &MomentApprox,
    cfg: &ContrastConfig,
    opts: &FitOptions,
) -> Result<EstimateResult> {
    opts.theta_box.validate()?;
    let prepared = PreparedContrast::new(path, model, cfg)?;
    minimize_prepared(&prepared, model, approx, opts)
}

pub fn minimize_prepared(
    prepared: &PreparedContrast,
    model: &ModelSpec,
    approx: &MomentApprox,
    opts: &FitOptions,
) -> Result<EstimateResult> {
    if prepared.terms.is_empty() {
        return Err(Error::NonPositiveWeightSum(0.0));
    }
    let bx = opts.theta_box;
    let centre = bx.centre();
    let start = prepared
        .least_squares_start(model, approx, centre, opts.frozen_theta1)?
        .filter(|t| t.theta1.is_finite() && t.theta2.is_finite())
        .map(|t| bx.clamp(t))
        .unwrap_or(centre);
    let objective = |theta: Theta| {
        prepared
            .value(model, approx, theta)
            .unwrap_or(f64::INFINITY)
    };
    let width = |r: [f64; 2]| 0.05 * (r[1] - r[0]);
    let min = match opts.frozen_theta1 {
        Some(t1) => nelder_mead(
            |p| objective(Theta::new(t1, p[0])),
            &[start.theta2],
            &[width(bx.theta2)],
            &[bx.theta2[0]],
            &[bx.theta2[1]],
            opts.optimizer,
        ),
        None => nelder_mead(
            |p| objective(Theta::new(p[0], p[1])),
            &[start.theta1, start.theta2],
            &[width(bx.theta1), width(bx.theta2)],
            &[bx.theta1[0], bx.theta2[0]],
            &[bx.theta1[1], bx.theta2[1]],
            opts.optimizer,
        ),
    };
    let theta = match opts.frozen_theta1 {
        Some(t1) => Theta::new(t1, min.x[0]),
        None => Theta::new(min.x[0], min.x[1]),
    };
    Ok(EstimateResult {
        theta,
        contrast_at_opt: min.value,
        kept_fraction: prepared.kept_fraction(),
        iterations: min.evals,
        converged: min.converged && min.value.is_finite(),
    })
}

/// Closed-form `θ₂` estimators for the tempered stable model with `θ₁` known.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StableTheta2 {
    pub theta2: f64,
    pub theta2_euler: f64,
    /// `Δ^{β(1-α)} c^{1-α} γ^α ∫_0^∞ φ(v) v^{-α} dv`, so that `theta2 = theta2_euler - correction`.
    pub correction: f64,
}

/// Explicit minimiser in `θ₂` of the Euler and of the stable-corrected contrasts.
pub fn estimate_theta2_stable(
    path: &SamplePath,
    theta1: f64,
    model: &ModelSpec,
    cfg: &ContrastConfig,
) -> Result<StableTheta2> {
    let LevyMeasure::TemperedStable { alpha } = *model.levy() else {
        return Err(Error::UnsupportedModel(
            "explicit θ₂ estimator needs tempered stable jumps".into(),
        ));
    };
    let Some((_, gamma)) = model.affine_constants() else {
        return Err(Error::UnsupportedModel(
            "explicit θ₂ estimator needs affine drift and constant coefficients".into(),
        ));
    };
    let dt = path
        .uniform_step()
        .ok_or_else(|| Error::InvalidGrid("explicit θ₂ estimator needs a uniform grid".into()))?;
    let prepared = PreparedContrast::new(path, model, cfg)?;
    let (mut num, mut den) = (0.0, 0.0);
    for t in &prepared.terms {
        num += t.weight * (t.x1 - t.x0 - dt * theta1 * t.x0);
        den += t.weight;
    }
    if !(den > 0.0) {
        return Err(Error::NonPositiveWeightSum(den));
    }
    let theta2_euler = num / (dt * den) + gamma * model.jump_mean();
    let correction = match cfg.kernel.kind() {
        KernelKind::Unit => 0.0,
        _ => match MomentApprox::stable_corrected(model, &cfg.kernel, cfg.c, cfg.beta)? {
            MomentApprox::StableCorrected {
                fractional_moment, ..
            } => stable_correction(gamma, alpha, fractional_moment, cfg.c, cfg.beta, dt) / dt,
            _ => unreachable!(),
        },
    };
    Ok(StableTheta2 {
        theta2: theta2_euler - correction,
        theta2_euler,
        correction,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepCondition {
    pub value: f64,
    pub warn: bool,
}

/// `√n Δ^{K - 1/2}`; warns when above 1.
pub fn check_step_condition(n: usize, dt: f64, order: usize) -> Result<StepCondition> {
    if n == 0 || !(dt > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "need n >= 1 and Δ > 0, got n={n}, Δ={dt}"
        )));
    }
    let value = (n as f64).sqrt() * dt.powf(order as f64 - 0.5);
    Ok(StepCondition {
        value,
        warn: value > 1.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::{simulate_path, uniform_grid, SimScheme};
    use approx::assert_abs_diff_eq;

    const TH: Theta = Theta {
        theta1: -0.5,
        theta2: 2.0,
    };

    fn euler_flow(theta: Theta, x0: f64, dt: f64, n: usize) -> SamplePath {
        let mut xs = vec![x0];
        for _ in 0..n {
            let x = *xs.last().unwrap();
            xs.push(x + dt * (theta.theta1 * x + theta.theta2));
        }
        SamplePath::new((0..=n).map(|i| i as f64 * dt).collect(), xs).unwrap()
    }

    fn ou_path(levy: LevyMeasure, seed: u64, t: f64, n: usize) -> (ModelSpec, SamplePath) {
        let model = ModelSpec::affine(0.3, 1.0, levy).unwrap();
        let grid = uniform_grid(t, n).unwrap();
        let path = simulate_path(
            &model,
            TH,
            4.0,
            &grid,
            SimScheme {
                substeps: 1,
                exact_ou: true,
            },
            seed,
        )
        .unwrap();
        (model, path)
    }

    #[test]
    fn config_validation() {
        assert!(ContrastConfig::new(0.5, 1.0, TruncationKernel::phi0()).is_err());
        assert!(ContrastConfig::new(0.0, 1.0, TruncationKernel::phi0()).is_err());
        assert!(ContrastConfig::new(0.3, 0.0, TruncationKernel::phi0()).is_err());
        let mut cfg = ContrastConfig::new(0.3, 1.0, TruncationKernel::phi0()).unwrap();
        cfg.k_ind = 0.0;
        assert!(cfg.validate().is_err());
        assert!(ThetaBox {
            theta1: [1.0, 0.0],
            theta2: [0.0, 1.0]
        }
        .validate()
        .is_err());
    }

    #[test]
    fn vanishes_on_euler_flow() {
        let model = ModelSpec::affine(0.0, 0.0, LevyMeasure::None).unwrap();
        let path = euler_flow(TH, 4.7, 0.2, 50);
        let cfg = ContrastConfig::new(0.49, 1.0, TruncationKernel::phi0()).unwrap();
        assert!(contrast_value(&path, TH, &model, &MomentApprox::Euler, &cfg).unwrap() < 1e-26);
    }

    #[test]
    fn single_increment() {
        let model = ModelSpec::affine(1.0, 0.0, LevyMeasure::None).unwrap();
        let path = SamplePath::new(vec![0.0, 1.0], vec![0.3, 0.8]).unwrap();
        let mut cfg = ContrastConfig::new(0.3, 1.0, TruncationKernel::phi0()).unwrap();
        cfg.weight_by_variance = true;
        let v = contrast_value(
            &path,
            Theta::new(0.0, 0.0),
            &model,
            &MomentApprox::Euler,
            &cfg,
        )
        .unwrap();
        assert_abs_diff_eq!(v, 0.25, epsilon = 1e-15);
        assert!(contrast_value(
            &SamplePath::new(vec![0.0], vec![1.0]).unwrap(),
            TH,
            &model,
            &MomentApprox::Euler,
            &cfg
        )
        .is_err());
    }

    #[test]
    fn euler_contrast_is_the_normal_equation_quadratic() {
        let (model, path) = ou_path(
            LevyMeasure::GaussianCp {
                lambda: 1.0,
                mu_j: 0.0,
                sigma_j: 2f64.sqrt(),
            },
            5,
            100.0,
            500,
        );
        let cfg = ContrastConfig::new(0.49, 1.0, TruncationKernel::phi0()).unwrap();
        let thr = cfg.threshold(0.2);
        // U(θ) = S_rr - 2 bᵀθ + θᵀAθ with regressors Δ(x, 1) and response ΔX.
        let (mut a, mut b, mut srr) = ([[0.0; 2]; 2], [0.0; 2], 0.0);
        for w in path.values().windows(2) {
            let phi = cfg.kernel.eval_scaled(w[1] - w[0], thr);
            let g = [0.2 * w[0], 0.2];
            let r = w[1] - w[0];
            srr += phi * r * r;
            for i in 0..2 {
                b[i] += phi * g[i] * r;
                for j in 0..2 {
                    a[i][j] += phi * g[i] * g[j];
                }
            }
        }
        for th in [
            Theta::new(-0.5, 2.0),
            Theta::new(-1.2, 0.3),
            Theta::new(-0.05, 7.0),
        ] {
            let t = th.as_array();
            let quad = srr - 2.0 * (b[0] * t[0] + b[1] * t[1])
                + (0..2)
                    .flat_map(|i| (0..2).map(move |j| (i, j)))
                    .map(|(i, j)| a[i][j] * t[i] * t[j])
                    .sum::<f64>();
            let u = contrast_value(&path, th, &model, &MomentApprox::Euler, &cfg).unwrap();
            assert!((u - quad).abs() <= 1e-9 * quad.abs(), "{u} vs {quad}");
        }
    }

    #[test]
    fn large_jump_contributes_nothing() {
        let model = ModelSpec::affine(0.3, 1.0, LevyMeasure::None).unwrap();
        let (_, base) = ou_path(LevyMeasure::None, 8, 20.0, 100);
        let cfg = ContrastConfig::new(0.49, 1.0, TruncationKernel::phi0()).unwrap();
        let bound = cfg.kernel.support_bound() * cfg.threshold(0.2);
        let mut xs = base.values().to_vec();
        // The increment into index 50 becomes exactly the support bound; everything after is shifted.
        let shift = bound - (xs[50] - xs[49]);
        for x in xs.iter_mut().skip(50) {
            *x += shift;
        }
        let jumped = SamplePath::new(base.times().to_vec(), xs.clone()).unwrap();
        let mut without = SamplePath::new(base.times()[..50].to_vec(), xs[..50].to_vec()).unwrap();
        for th in [TH, Theta::new(-1.0, 0.5)] {
            let tail_times: Vec<f64> = base.times()[50..]
                .iter()
                .map(|t| t - base.times()[50])
                .collect();
            let tail = SamplePath::new(tail_times, xs[50..].to_vec()).unwrap();
            let full = contrast_value(&jumped, th, &model, &MomentApprox::Euler, &cfg).unwrap();
            let parts = contrast_value(&without, th, &model, &MomentApprox::Euler, &cfg).unwrap()
                + contrast_value(&tail, th, &model, &MomentApprox::Euler, &cfg).unwrap();
            assert_abs_diff_eq!(full, parts, epsilon = 1e-12 * full);
        }
        let prepared = PreparedContrast::new(&jumped, &model, &cfg).unwrap();
        assert!(prepared.kept_fraction() < 1.0);
        without = jumped;
        assert_eq!(without.len(), 101);
    }

    #[test]
    fn recovers_theta_from_noiseless_data() {
        let model = ModelSpec::affine(0.0, 0.0, LevyMeasure::None).unwrap();
        let path = euler_flow(TH, 6.0, 0.2, 200);
        let cfg = ContrastConfig::new(0.49, 1.0, TruncationKernel::phi0()).unwrap();
        let r = minimize_contrast(
            &path,
            &model,
            &MomentApprox::Euler,
            &cfg,
            &FitOptions::default(),
        )
        .unwrap();
        assert!(
            (r.theta.theta1 + 0.5).abs() < 1e-8 && (r.theta.theta2 - 2.0).abs() < 1e-8,
            "{r:?}"
        );
        assert_eq!(r.kept_fraction, 1.0);
    }

    #[test]
    fn variance_weights_do_not_move_the_minimiser() {
        let (model, path) = ou_path(LevyMeasure::None, 11, 200.0, 1000);
        let mut cfg = ContrastConfig::new(0.49, 1.0, TruncationKernel::phi0()).unwrap();
        for approx in [MomentApprox::Euler, MomentApprox::KesslerOuExact] {
            let plain =
                minimize_contrast(&path, &model, &approx, &cfg, &FitOptions::default()).unwrap();
            cfg.weight_by_variance = true;
            let weighted =
                minimize_contrast(&path, &model, &approx, &cfg, &FitOptions::default()).unwrap();
            cfg.weight_by_variance = false;
            assert!(
                (plain.theta.theta1 - weighted.theta.theta1).abs() < 1e-6,
                "{plain:?} {weighted:?}"
            );
            assert!((plain.theta.theta2 - weighted.theta.theta2).abs() < 1e-6);
            assert_abs_diff_eq!(
                weighted.contrast_at_opt,
                plain.contrast_at_opt / (0.09 * 0.2),
                epsilon = 1e-6 * weighted.contrast_at_opt
            );
        }
    }

    #[test]
    fn frozen_stable_minimiser_matches_explicit_estimator() {
        let model =
            ModelSpec::affine(0.3, 1.0, LevyMeasure::TemperedStable { alpha: 0.5 }).unwrap();
        let grid = uniform_grid(10.0, 1000).unwrap();
        let path = simulate_path(&model, TH, 4.0, &grid, SimScheme::default(), 3).unwrap();
        let cfg = ContrastConfig::new(0.49, 1.0, TruncationKernel::phi0()).unwrap();
        let approx = MomentApprox::stable_corrected(&model, &cfg.kernel, cfg.c, cfg.beta).unwrap();
        let opts = FitOptions {
            frozen_theta1: Some(-0.5),
            ..Default::default()
        };
        let fit = minimize_contrast(&path, &model, &approx, &cfg, &opts).unwrap();
        let explicit = estimate_theta2_stable(&path, -0.5, &model, &cfg).unwrap();
        assert!(
            (fit.theta.theta2 - explicit.theta2).abs() < 1e-8,
            "{fit:?} {explicit:?}"
        );
        assert_eq!(fit.theta.theta1, -0.5);

        let euler_fit =
            minimize_contrast(&path, &model, &MomentApprox::Euler, &cfg, &opts).unwrap();
        assert!((euler_fit.theta.theta2 - explicit.theta2_euler).abs() < 1e-8);
        assert_abs_diff_eq!(
            explicit.theta2_euler - explicit.theta2,
            explicit.correction,
            epsilon = 1e-12
        );
    }

    #[test]
    fn explicit_estimator_without_truncation() {
        let model =
            ModelSpec::affine(0.3, 1.0, LevyMeasure::TemperedStable { alpha: 0.3 }).unwrap();
        let path = SamplePath::new(vec![0.0, 0.5, 1.0], vec![1.0, 1.4, 1.1]).unwrap();
        let cfg = ContrastConfig::new(0.3, 1.0, TruncationKernel::unit()).unwrap();
        let r = estimate_theta2_stable(&path, -0.5, &model, &cfg).unwrap();
        let mean = ((0.4 + 0.25 * 1.0) + (-0.3 + 0.25 * 1.4)) / 2.0 / 0.5;
        assert_abs_diff_eq!(r.theta2_euler, mean + model.jump_mean(), epsilon = 1e-14);
        assert_eq!(r.correction, 0.0);

        let irregular = SamplePath::new(vec![0.0, 0.5, 1.2], vec![1.0, 1.4, 1.1]).unwrap();
        assert!(estimate_theta2_stable(&irregular, -0.5, &model, &cfg).is_err());
        let cp = ModelSpec::affine(0.3, 1.0, LevyMeasure::None).unwrap();
        assert!(estimate_theta2_stable(&path, -0.5, &cp, &cfg).is_err());
    }

    #[test]
    fn explicit_estimator_rejects_empty_weight() {
        let model =
            ModelSpec::affine(0.3, 1.0, LevyMeasure::TemperedStable { alpha: 0.3 }).unwrap();
        let path = SamplePath::new(vec![0.0, 0.01, 0.02], vec![1.0, 6.0, 11.0]).unwrap();
        let cfg = ContrastConfig::new(0.3, 1.0, TruncationKernel::phi0()).unwrap();
        assert!(matches!(
            estimate_theta2_stable(&path, -0.5, &model, &cfg),
            Err(Error::NonPositiveWeightSum(_))
        ));
    }

    #[test]
    fn step_condition_examples() {
        let k2 = check_step_condition(10_000, 0.2, 2).unwrap();
        assert_abs_diff_eq!(k2.value, 100.0 * 0.2f64.powf(1.5), epsilon = 1e-12);
        assert_abs_diff_eq!(k2.value, 8.944, epsilon = 1e-3);
        assert!(k2.warn);
        let k6 = check_step_condition(10_000, 0.2, 6).unwrap();
        assert_abs_diff_eq!(k6.value, 1.431e-2, epsilon = 1e-5);
        assert!(!k6.warn);
        let tiny = check_step_condition(10_000, 1e-12, 2).unwrap();
        assert!(tiny.value < 1e-10 && !tiny.warn);
        assert!(check_step_condition(0, 0.2, 2).is_err());
    }

    #[test]
    fn indicator_drops_far_states() {
        let model = ModelSpec::affine(0.3, 0.0, LevyMeasure::None).unwrap();
        // Δ = 0.25 and k = 0.5 keep |X| ≤ 2.
        let path = SamplePath::new(vec![0.0, 0.25, 0.5], vec![1.0, 3.0, 3.1]).unwrap();
        let mut cfg = ContrastConfig::new(0.3, 100.0, TruncationKernel::phi0()).unwrap();
        assert_eq!(
            PreparedContrast::new(&path, &model, &cfg)
                .unwrap()
                .kept_fraction(),
            1.0
        );
        cfg.k_ind = 0.5;
        let prepared = PreparedContrast::new(&path, &model, &cfg).unwrap();
        assert_eq!(prepared.kept_fraction(), 0.5);
        let r = minimize_contrast(
            &SamplePath::new(vec![0.0, 0.25], vec![3.0, 3.1]).unwrap(),
            &model,
            &MomentApprox::Euler,
            &cfg,
            &FitOptions::default(),
        );
        assert!(matches!(r, Err(Error::NonPositiveWeightSum(_))));
    }
}
