//! Coefficients of the jump-diffusion
//!
//! ```text
//! dX_t = b(θ, X_t) dt + a(X_t) dW_t + γ(X_{t-}) ∫ z μ̃(dt, dz)
//! ```
//!
//! with `μ̃` a compensated Poisson random measure whose Lévy measure is one of
//! the [`LevyMeasure`] variants.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::jet::{Dual, Jet};
use crate::levy_integrals::gamma_tail;

/// Drift parameter pair `(θ₁, θ₂)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Theta {
    pub theta1: f64,
    pub theta2: f64,
}

impl Theta {
    pub fn new(theta1: f64, theta2: f64) -> Self {
        Self { theta1, theta2 }
    }

    pub fn as_array(self) -> [f64; 2] {
        [self.theta1, self.theta2]
    }

    /// Both components lifted to dual numbers seeded as independent variables.
    pub fn to_dual(self) -> [Dual; 2] {
        [
            Dual::variable(self.theta1, 0),
            Dual::variable(self.theta2, 1),
        ]
    }
}

impl From<[f64; 2]> for Theta {
    fn from(v: [f64; 2]) -> Self {
        Self::new(v[0], v[1])
    }
}

/// Jump part of the dynamics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum LevyMeasure {
    None,
    /// Compound Poisson with rate `lambda` and `N(mu_j, sigma_j²)` sizes.
    GaussianCp {
        lambda: f64,
        mu_j: f64,
        sigma_j: f64,
    },
    /// One-sided tempered stable density `e^{-z} z^{-1-α}` on `(0, ∞)`.
    TemperedStable {
        alpha: f64,
    },
}

impl LevyMeasure {
    pub fn validate(&self) -> Result<()> {
        match *self {
            LevyMeasure::None => Ok(()),
            LevyMeasure::GaussianCp {
                lambda,
                mu_j,
                sigma_j,
            } => {
                if !(lambda >= 0.0 && lambda.is_finite()) {
                    return Err(Error::InvalidParameter(format!(
                        "jump rate must be >= 0, got {lambda}"
                    )));
                }
                if !(sigma_j > 0.0 && sigma_j.is_finite()) || !mu_j.is_finite() {
                    return Err(Error::InvalidParameter(format!(
                        "jump law N({mu_j}, {sigma_j}²) needs finite mean and positive std"
                    )));
                }
                Ok(())
            }
            LevyMeasure::TemperedStable { alpha } => {
                if !(alpha > 0.0 && alpha < 1.0) {
                    return Err(Error::InvalidParameter(format!(
                        "tempered stable index must lie in (0, 1), got {alpha}"
                    )));
                }
                Ok(())
            }
        }
    }

    /// `∫ z F(z) dz`, the mean jump size per unit time.
    pub fn first_moment(&self) -> Result<f64> {
        self.validate()?;
        Ok(match *self {
            LevyMeasure::None => 0.0,
            LevyMeasure::GaussianCp { lambda, mu_j, .. } => lambda * mu_j,
            LevyMeasure::TemperedStable { alpha } => gamma_tail(alpha)?.value,
        })
    }

    /// Lévy density `F(z)`.
    pub fn density(&self, z: f64) -> f64 {
        match *self {
            LevyMeasure::None => 0.0,
            LevyMeasure::GaussianCp {
                lambda,
                mu_j,
                sigma_j,
            } => {
                let u = (z - mu_j) / sigma_j;
                lambda * (-0.5 * u * u).exp() / (sigma_j * (2.0 * std::f64::consts::PI).sqrt())
            }
            LevyMeasure::TemperedStable { alpha } => {
                if z > 0.0 {
                    (-z).exp() * z.powf(-1.0 - alpha)
                } else {
                    0.0
                }
            }
        }
    }

    pub fn is_none(&self) -> bool {
        matches!(self, LevyMeasure::None)
            || matches!(self, LevyMeasure::GaussianCp { lambda, .. } if *lambda == 0.0)
    }
}

/// User-supplied drift `b(θ, x)`, evaluated on jets so that both its
/// x-expansion and its θ-gradient are available.
pub trait DriftFunction: Send + Sync + fmt::Debug {
    fn eval_jet(&self, theta: [Dual; 2], x: &Jet<Dual>) -> Jet<Dual>;
}

/// User-supplied state function (diffusion or jump coefficient).
pub trait StateFunction: Send + Sync + fmt::Debug {
    fn eval_jet(&self, x: &Jet<f64>) -> Jet<f64>;
}

#[derive(Debug, Clone)]
pub enum Drift {
    /// `θ₁ x + θ₂`.
    Affine,
    Custom(Arc<dyn DriftFunction>),
}

#[derive(Debug, Clone)]
pub enum StateCoeff {
    Constant(f64),
    Custom(Arc<dyn StateFunction>),
}

impl StateCoeff {
    pub fn eval(&self, x: f64) -> f64 {
        match self {
            StateCoeff::Constant(c) => *c,
            StateCoeff::Custom(f) => f.eval_jet(&Jet::constant(x, 0)).value(),
        }
    }

    pub fn jet(&self, x: f64, order: usize) -> Jet<f64> {
        match self {
            StateCoeff::Constant(c) => Jet::constant(*c, order),
            StateCoeff::Custom(f) => f.eval_jet(&Jet::variable(x, order)),
        }
    }

    pub fn as_constant(&self) -> Option<f64> {
        match self {
            StateCoeff::Constant(c) => Some(*c),
            StateCoeff::Custom(_) => None,
        }
    }
}

/// Full coefficient set of the SDE together with its Lévy measure.
#[derive(Debug, Clone)]
pub struct ModelSpec {
    drift: Drift,
    diffusion: StateCoeff,
    jump_coeff: StateCoeff,
    levy: LevyMeasure,
    jump_mean: f64,
}

impl ModelSpec {
    pub fn new(
        drift: Drift,
        diffusion: StateCoeff,
        jump_coeff: StateCoeff,
        levy: LevyMeasure,
    ) -> Result<Self> {
        if let StateCoeff::Constant(s) = diffusion {
            if !(s >= 0.0 && s.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "diffusion must be >= 0, got {s}"
                )));
            }
        }
        if let StateCoeff::Constant(g) = jump_coeff {
            if !g.is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "jump coefficient must be finite, got {g}"
                )));
            }
        }
        let jump_mean = levy.first_moment()?;
        Ok(Self {
            drift,
            diffusion,
            jump_coeff,
            levy,
            jump_mean,
        })
    }

    /// Affine drift with constant diffusion `sigma` and constant jump coefficient `gamma`.
    pub fn affine(sigma: f64, gamma: f64, levy: LevyMeasure) -> Result<Self> {
        Self::new(
            Drift::Affine,
            StateCoeff::Constant(sigma),
            StateCoeff::Constant(gamma),
            levy,
        )
    }

    pub fn levy(&self) -> &LevyMeasure {
        &self.levy
    }

    pub fn drift_kind(&self) -> &Drift {
        &self.drift
    }

    pub fn diffusion_coeff(&self) -> &StateCoeff {
        &self.diffusion
    }

    pub fn jump_coeff_fn(&self) -> &StateCoeff {
        &self.jump_coeff
    }

    /// `∫ z F(z) dz`, cached at construction.
    pub fn jump_mean(&self) -> f64 {
        self.jump_mean
    }

    pub fn drift(&self, theta: Theta, x: f64) -> f64 {
        match &self.drift {
            Drift::Affine => theta.theta1 * x + theta.theta2,
            Drift::Custom(f) => {
                let t = [Dual::constant(theta.theta1), Dual::constant(theta.theta2)];
                f.eval_jet(t, &Jet::constant(Dual::constant(x), 0))
                    .value()
                    .re
            }
        }
    }

    pub fn drift_theta_grad(&self, theta: Theta, x: f64) -> [f64; 2] {
        match &self.drift {
            Drift::Affine => [x, 1.0],
            Drift::Custom(f) => {
                f.eval_jet(theta.to_dual(), &Jet::constant(Dual::constant(x), 0))
                    .value()
                    .grad
            }
        }
    }

    pub fn diffusion(&self, x: f64) -> f64 {
        self.diffusion.eval(x)
    }

    pub fn jump_coeff(&self, x: f64) -> f64 {
        self.jump_coeff.eval(x)
    }

    /// `b̄(θ, x) = b(θ, x) - γ(x) ∫ z F(z) dz`, the drift net of the jump compensator.
    pub fn compensated_drift(&self, theta: Theta, x: f64) -> f64 {
        self.drift(theta, x) - self.jump_coeff(x) * self.jump_mean
    }

    /// Jet of `b̄` around `x` in `y - x`, with θ-derivatives carried in the coefficients.
    pub fn compensated_drift_jet(&self, theta: Theta, x: f64, order: usize) -> Jet<Dual> {
        let t = theta.to_dual();
        let b = match &self.drift {
            Drift::Affine => {
                let xj: Jet<Dual> = Jet::variable(Dual::constant(x), order);
                &xj.scale(t[0]) + &Jet::constant(t[1], order)
            }
            Drift::Custom(f) => f.eval_jet(t, &Jet::variable(Dual::constant(x), order)),
        };
        if self.jump_mean == 0.0 {
            return b;
        }
        let comp = self
            .jump_coeff
            .jet(x, order)
            .to_dual()
            .scale(Dual::constant(self.jump_mean));
        &b - &comp
    }

    /// Jet of `a²` around `x`.
    pub fn diffusion_sq_jet(&self, x: f64, order: usize) -> Jet<f64> {
        let a = self.diffusion.jet(x, order);
        &a * &a
    }

    /// `(σ, γ)` when the drift is affine and both other coefficients are constant.
    pub fn affine_constants(&self) -> Option<(f64, f64)> {
        match (
            &self.drift,
            self.diffusion.as_constant(),
            self.jump_coeff.as_constant(),
        ) {
            (Drift::Affine, Some(s), Some(g)) => Some((s, g)),
            _ => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jet::Scalar;
    use approx::assert_relative_eq;

    #[derive(Debug)]
    struct Logistic;

    impl DriftFunction for Logistic {
        // b(θ, x) = θ₁ x (1 - x) + θ₂ e^{-x}
        fn eval_jet(&self, theta: [Dual; 2], x: &Jet<Dual>) -> Jet<Dual> {
            let one = Jet::constant(Dual::one(), x.order());
            let logistic = &x.scale(theta[0]) * &(&one - x);
            let decay = x.scale(Dual::constant(-1.0)).exp().scale(theta[1]);
            &logistic + &decay
        }
    }

    #[test]
    fn affine_drift_and_gradient() {
        let m = ModelSpec::affine(0.3, 1.0, LevyMeasure::None).unwrap();
        let th = Theta::new(-0.5, 2.0);
        assert_eq!(m.drift(th, 4.0), 0.0);
        assert_eq!(m.drift_theta_grad(th, 3.0), [3.0, 1.0]);
        assert_eq!(m.compensated_drift(th, 5.0), -0.5);
    }

    #[test]
    fn compensation_uses_levy_first_moment() {
        let cp = LevyMeasure::GaussianCp {
            lambda: 0.5,
            mu_j: 2.0,
            sigma_j: 1.0,
        };
        let m = ModelSpec::affine(0.3, 1.5, cp).unwrap();
        assert_eq!(m.jump_mean(), 1.0);
        assert_eq!(m.compensated_drift(Theta::new(-0.5, 2.0), 4.0), -1.5);
        let ts = ModelSpec::affine(0.3, 1.0, LevyMeasure::TemperedStable { alpha: 0.5 }).unwrap();
        assert_relative_eq!(
            ts.jump_mean(),
            std::f64::consts::PI.sqrt(),
            max_relative = 1e-11
        );
    }

    #[test]
    fn custom_drift_gradient_matches_finite_differences() {
        let m = ModelSpec::new(
            Drift::Custom(Arc::new(Logistic)),
            StateCoeff::Constant(0.2),
            StateCoeff::Constant(0.0),
            LevyMeasure::None,
        )
        .unwrap();
        let th = Theta::new(0.7, -0.3);
        let x = 0.4;
        let g = m.drift_theta_grad(th, x);
        let h = 1e-6;
        let fd1 = (m.drift(Theta::new(0.7 + h, -0.3), x) - m.drift(Theta::new(0.7 - h, -0.3), x))
            / (2.0 * h);
        let fd2 = (m.drift(Theta::new(0.7, -0.3 + h), x) - m.drift(Theta::new(0.7, -0.3 - h), x))
            / (2.0 * h);
        assert_relative_eq!(g[0], fd1, max_relative = 1e-8);
        assert_relative_eq!(g[1], fd2, max_relative = 1e-8);
        let jet = m.compensated_drift_jet(th, x, 3);
        let fdx = (m.drift(th, x + h) - m.drift(th, x - h)) / (2.0 * h);
        assert_relative_eq!(jet.coeffs()[1].re, fdx, max_relative = 1e-8);
    }

    #[test]
    fn rejects_invalid_levy_parameters() {
        assert!(ModelSpec::affine(0.3, 1.0, LevyMeasure::TemperedStable { alpha: 1.2 }).is_err());
        assert!(ModelSpec::affine(
            0.3,
            1.0,
            LevyMeasure::GaussianCp {
                lambda: -1.0,
                mu_j: 0.0,
                sigma_j: 1.0
            }
        )
        .is_err());
        assert!(ModelSpec::affine(
            0.3,
            1.0,
            LevyMeasure::GaussianCp {
                lambda: 1.0,
                mu_j: 0.0,
                sigma_j: 0.0
            }
        )
        .is_err());
        assert!(ModelSpec::affine(-0.3, 1.0, LevyMeasure::None).is_err());
    }
}
