//! Approximations `m̃_{θ,Δ}(x)` of the truncated conditional mean
//!
//! ```text
//! m_{θ,Δ}(x) = E[X_Δ φ(X_Δ - x)] / E[φ(X_Δ - x)],   X_0 = x,
//! ```
//!
//! which centres the increments in the contrast.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::jet::{apply_generator, Dual, Jet, Scalar};
use crate::kernels::TruncationKernel;
use crate::levy_integrals::kernel_fractional_moment;
use crate::model::{LevyMeasure, ModelSpec, Theta};
use crate::rng::{channel, SeedStream};
use crate::sim::{SimScheme, Stepper};

/// `θ₁` values with `|θ₁|` below this are rejected by the exact OU formula.
pub const THETA1_EXCLUSION: f64 = 1e-6;

/// Inner step of the Monte Carlo oracle.
pub const ORACLE_SUBSTEP: f64 = 1e-3;

const ORACLE_CHUNK: usize = 1 << 14;

#[derive(Debug, Clone, PartialEq)]
pub struct OracleConfig {
    pub paths: usize,
    pub seed: u64,
    pub kernel: TruncationKernel,
    pub c: f64,
    pub beta: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum MomentApprox {
    /// `x + Δ b̄(θ, x)`.
    Euler,
    /// Closed-form conditional mean of the affine model without jumps and with drift `b̄`.
    KesslerOuExact,
    /// `x + Σ_{k≤K} Āᵏ(y - x)(x) Δᵏ / k!`.
    KesslerGeneric {
        order: usize,
    },
    /// Euler plus the leading tempered stable truncation correction.
    StableCorrected {
        alpha: f64,
        /// `∫_0^∞ φ(v) v^{-α} dv`.
        fractional_moment: f64,
        c: f64,
        beta: f64,
    },
    McOracle(OracleConfig),
}

impl MomentApprox {
    /// Precomputes the kernel fractional moment for the tempered stable correction.
    pub fn stable_corrected(
        model: &ModelSpec,
        kernel: &TruncationKernel,
        c: f64,
        beta: f64,
    ) -> Result<Self> {
        let LevyMeasure::TemperedStable { alpha } = *model.levy() else {
            return Err(Error::UnsupportedModel(
                "stable correction needs a tempered stable jump measure".into(),
            ));
        };
        Ok(Self::StableCorrected {
            alpha,
            fractional_moment: kernel_fractional_moment(kernel, alpha)?.value,
            c,
            beta,
        })
    }

    pub fn kessler_generic(order: usize) -> Result<Self> {
        if order == 0 {
            return Err(Error::InvalidParameter("Kessler order must be >= 1".into()));
        }
        Ok(Self::KesslerGeneric { order })
    }

    pub fn eval(&self, model: &ModelSpec, theta: Theta, x: f64, dt: f64) -> Result<f64> {
        match self {
            MomentApprox::Euler => Ok(m_euler(model, theta, x, dt)),
            MomentApprox::KesslerOuExact => {
                let gamma = ou_jump_coeff(model)?;
                m_kessler_ou_exact(theta, x, dt, gamma * model.jump_mean())
            }
            MomentApprox::KesslerGeneric { order } => {
                m_kessler_generic(model, theta, x, dt, *order)
            }
            MomentApprox::StableCorrected {
                alpha,
                fractional_moment,
                c,
                beta,
            } => Ok(m_euler(model, theta, x, dt)
                + stable_correction(
                    model.jump_coeff(x),
                    *alpha,
                    *fractional_moment,
                    *c,
                    *beta,
                    dt,
                )),
            MomentApprox::McOracle(cfg) => Ok(m_mc_oracle(
                model,
                theta,
                x,
                dt,
                cfg.beta,
                cfg.c,
                &cfg.kernel,
                cfg.paths,
                cfg.seed,
            )?
            .estimate),
        }
    }

    /// Exact gradient of the approximation with respect to `(θ₁, θ₂)`.
    pub fn theta_grad(&self, model: &ModelSpec, theta: Theta, x: f64, dt: f64) -> Result<[f64; 2]> {
        match self {
            MomentApprox::Euler | MomentApprox::StableCorrected { .. } => {
                let g = model.drift_theta_grad(theta, x);
                Ok([dt * g[0], dt * g[1]])
            }
            MomentApprox::KesslerOuExact => {
                let gamma = ou_jump_coeff(model)?;
                m_kessler_ou_exact_grad(theta, x, dt, gamma * model.jump_mean())
            }
            MomentApprox::KesslerGeneric { order } => {
                Ok(kessler_generic_dual(model, theta, x, dt, *order)?.grad)
            }
            MomentApprox::McOracle(_) => Err(Error::UnsupportedModel(
                "the Monte Carlo oracle has no derivative contract".into(),
            )),
        }
    }

    /// True when `m̃` is affine in θ, so the contrast is an exact quadratic.
    pub fn is_theta_affine(&self, model: &ModelSpec) -> bool {
        matches!(
            self,
            MomentApprox::Euler | MomentApprox::StableCorrected { .. }
        ) && matches!(model.drift_kind(), crate::model::Drift::Affine)
    }

    /// `(growth, intercept)` with `m̃(x) = x + growth·x + intercept` when the
    /// approximation is affine in the state for this model.
    pub fn affine_in_state(
        &self,
        model: &ModelSpec,
        theta: Theta,
        dt: f64,
    ) -> Result<Option<(f64, f64)>> {
        let Some((_, gamma)) = model.affine_constants() else {
            return Ok(None);
        };
        let jump_drift = gamma * model.jump_mean();
        Ok(match self {
            MomentApprox::Euler => Some((dt * theta.theta1, dt * (theta.theta2 - jump_drift))),
            MomentApprox::StableCorrected {
                alpha,
                fractional_moment,
                c,
                beta,
            } => Some((
                dt * theta.theta1,
                dt * (theta.theta2 - jump_drift)
                    + stable_correction(gamma, *alpha, *fractional_moment, *c, *beta, dt),
            )),
            MomentApprox::KesslerOuExact => {
                check_theta1(theta.theta1)?;
                let growth = (theta.theta1 * dt).exp_m1();
                Some((growth, growth * (theta.theta2 - jump_drift) / theta.theta1))
            }
            _ => None,
        })
    }
}

fn ou_jump_coeff(model: &ModelSpec) -> Result<f64> {
    model
        .affine_constants()
        .map(|(_, gamma)| gamma)
        .ok_or_else(|| {
            Error::UnsupportedModel(
                "exact OU mean needs affine drift and constant coefficients".into(),
            )
        })
}

fn check_theta1(theta1: f64) -> Result<()> {
    if theta1.abs() < THETA1_EXCLUSION || !theta1.is_finite() {
        return Err(Error::DegenerateTheta1(theta1));
    }
    Ok(())
}

/// `x + Δ b̄(θ, x)`.
pub fn m_euler(model: &ModelSpec, theta: Theta, x: f64, dt: f64) -> f64 {
    x + dt * model.compensated_drift(theta, x)
}

/// `(x + θ₂/θ₁ - J/θ₁) e^{θ₁Δ} + (J - θ₂)/θ₁` with `J = γ ∫ z F(z) dz`.
pub fn m_kessler_ou_exact(theta: Theta, x: f64, dt: f64, jump_drift: f64) -> Result<f64> {
    check_theta1(theta.theta1)?;
    let shift = (theta.theta2 - jump_drift) / theta.theta1;
    // (x + shift) e^{θ₁Δ} - shift, written with expm1 to keep small Δ exact.
    Ok(x + (x + shift) * (theta.theta1 * dt).exp_m1())
}

pub fn m_kessler_ou_exact_grad(theta: Theta, x: f64, dt: f64, jump_drift: f64) -> Result<[f64; 2]> {
    check_theta1(theta.theta1)?;
    let t1 = theta.theta1;
    let shift = (theta.theta2 - jump_drift) / t1;
    let growth = (t1 * dt).exp_m1();
    let d_theta1 = -shift / t1 * growth + (x + shift) * dt * (t1 * dt).exp();
    let d_theta2 = growth / t1;
    Ok([d_theta1, d_theta2])
}

fn kessler_generic_dual(
    model: &ModelSpec,
    theta: Theta,
    x: f64,
    dt: f64,
    order: usize,
) -> Result<Dual> {
    if order == 0 {
        return Err(Error::InvalidParameter("Kessler order must be >= 1".into()));
    }
    let jet_order = 2 * order;
    let drift = model.compensated_drift_jet(theta, x, jet_order);
    let diffusion_sq = model.diffusion_sq_jet(x, jet_order).to_dual();
    let needed = jet_order - 2;
    if drift.order() < needed || diffusion_sq.order() < needed {
        return Err(Error::InsufficientJetOrder {
            available: drift.order().min(diffusion_sq.order()),
            required: needed,
        });
    }
    let mut f: Jet<Dual> = Jet::displacement(jet_order);
    let mut m = Dual::constant(x);
    let mut dt_pow = 1.0;
    for k in 1..=order {
        f = apply_generator(&f, &drift, &diffusion_sq)?;
        dt_pow *= dt / k as f64;
        m = m + f.value().scale(dt_pow);
    }
    Ok(m)
}

/// Kessler expansion of order `K`, computed by iterating the generator on jets.
pub fn m_kessler_generic(
    model: &ModelSpec,
    theta: Theta,
    x: f64,
    dt: f64,
    order: usize,
) -> Result<f64> {
    Ok(kessler_generic_dual(model, theta, x, dt, order)?.re)
}

/// `sign(γ)|γ|^α Δ^{1+β(1-α)} c^{1-α} J`.
pub fn stable_correction(
    gamma: f64,
    alpha: f64,
    fractional_moment: f64,
    c: f64,
    beta: f64,
    dt: f64,
) -> f64 {
    if gamma == 0.0 || dt == 0.0 {
        return 0.0;
    }
    gamma.signum()
        * gamma.abs().powf(alpha)
        * dt.powf(1.0 + beta * (1.0 - alpha))
        * c.powf(1.0 - alpha)
        * fractional_moment
}

/// `x + Δ b̄(θ, x) + Δ^{1+β(1-α)} c^{1-α} γ^α ∫_0^∞ φ(v) v^{-α} dv`.
#[allow(clippy::too_many_arguments)]
pub fn m_stable_corrected(
    model: &ModelSpec,
    theta: Theta,
    x: f64,
    dt: f64,
    beta: f64,
    c: f64,
    kernel: &TruncationKernel,
) -> Result<f64> {
    let approx = MomentApprox::stable_corrected(model, kernel, c, beta)?;
    approx.eval(model, theta, x, dt)
}

/// Monte Carlo estimate of the truncated conditional mean and of the
/// kernel denominator `E[φ]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleEstimate {
    pub estimate: f64,
    pub std_error: f64,
    pub weight_mean: f64,
    pub weight_std_error: f64,
    pub paths: usize,
}

#[derive(Debug, Clone, Copy, Default)]
struct ChunkSums {
    w: f64,
    wd: f64,
    ww: f64,
    wwd: f64,
    wwdd: f64,
}

impl ChunkSums {
    fn merge(self, o: ChunkSums) -> ChunkSums {
        ChunkSums {
            w: self.w + o.w,
            wd: self.wd + o.wd,
            ww: self.ww + o.ww,
            wwd: self.wwd + o.wwd,
            wwdd: self.wwdd + o.wwdd,
        }
    }
}

/// Ratio estimator `Σ X⁽ʲ⁾ φ_j / Σ φ_j` over `paths` simulated transitions
/// from `x` over `Δ`, with a delta-method standard error.
///
/// Paths are split into fixed-size chunks with their own seed streams and
/// the chunk sums are folded in index order, so the result does not depend
/// on the thread count.
#[allow(clippy::too_many_arguments)]
pub fn m_mc_oracle(
    model: &ModelSpec,
    theta: Theta,
    x: f64,
    dt: f64,
    beta: f64,
    c: f64,
    kernel: &TruncationKernel,
    paths: usize,
    seed: u64,
) -> Result<OracleEstimate> {
    if paths < 1000 {
        return Err(Error::InvalidParameter(format!(
            "oracle needs at least 1000 paths, got {paths}"
        )));
    }
    if dt == 0.0 {
        return Ok(OracleEstimate {
            estimate: x,
            std_error: 0.0,
            weight_mean: 1.0,
            weight_std_error: 0.0,
            paths,
        });
    }
    if !(dt > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "step must be non-negative, got {dt}"
        )));
    }
    let substeps = (dt / ORACLE_SUBSTEP).ceil().max(1.0) as usize;
    let stepper = Stepper::new(
        model,
        theta,
        SimScheme {
            substeps,
            exact_ou: false,
        },
        dt,
    )?;
    let threshold = c * dt.powf(beta);
    let root = SeedStream::new(seed).child(channel::ORACLE_CHUNK);
    let n_chunks = paths.div_ceil(ORACLE_CHUNK);
    let chunks: Vec<ChunkSums> = (0..n_chunks)
        .into_par_iter()
        .map(|ci| {
            let stream = root.child(ci as u64);
            let mut rng_w = stream.child(channel::DIFFUSION).rng();
            let mut rng_j = stream.child(channel::JUMPS).rng();
            let count = ORACLE_CHUNK.min(paths - ci * ORACLE_CHUNK);
            let mut s = ChunkSums::default();
            for _ in 0..count {
                let d = stepper.advance(x, 0.0, dt, &mut rng_w, &mut rng_j) - x;
                let w = kernel.eval_scaled(d, threshold);
                s.w += w;
                s.wd += w * d;
                s.ww += w * w;
                s.wwd += w * w * d;
                s.wwdd += w * w * d * d;
            }
            s
        })
        .collect();
    let s = chunks
        .into_iter()
        .fold(ChunkSums::default(), ChunkSums::merge);
    if !(s.w > 0.0) {
        return Err(Error::NonPositiveWeightSum(s.w));
    }
    let n = paths as f64;
    let r = s.wd / s.w;
    let resid_sq = (s.wwdd - 2.0 * r * s.wwd + r * r * s.ww).max(0.0);
    let weight_mean = s.w / n;
    let weight_var = ((s.ww - n * weight_mean * weight_mean) / (n - 1.0)).max(0.0);
    Ok(OracleEstimate {
        estimate: x + r,
        std_error: resid_sq.sqrt() / s.w,
        weight_mean,
        weight_std_error: (weight_var / n).sqrt(),
        paths,
    })
}

/// θ-gradient of the chosen approximation.
pub fn m_theta_grad(
    approx: &MomentApprox,
    model: &ModelSpec,
    theta: Theta,
    x: f64,
    dt: f64,
) -> Result<[f64; 2]> {
    approx.theta_grad(model, theta, x, dt)
}
