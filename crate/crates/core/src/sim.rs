//! Discretely observed paths of the jump-diffusion.
//!
//! Each observation interval is refined into `substeps` Euler–Maruyama steps.
//! Jumps are applied at their simulated times with the jump coefficient
//! evaluated at the state just before the step (`X_{s-}`). For the affine
//! model with constant coefficients, `exact_ou` replaces the Euler steps by
//! the exact Gaussian transition between jump times.
//!
//! Compensation: compound Poisson jumps are added raw while the drift is
//! reduced by `γ λ μ_J`; tempered stable increments are returned already
//! compensated, so the uncompensated drift is used with them.

use rand::Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::levy_integrals::{ts_jump_rate_above, ts_mean_above, ts_variance_below};
use crate::model::{LevyMeasure, ModelSpec, Theta};
use crate::rng::{channel, SeedStream};

/// Observation times with the observed states.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplePath {
    times: Vec<f64>,
    values: Vec<f64>,
}

impl SamplePath {
    pub fn new(times: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if times.len() != values.len() {
            return Err(Error::InvalidGrid(format!(
                "{} times but {} values",
                times.len(),
                values.len()
            )));
        }
        validate_grid(&times)?;
        Ok(Self { times, values })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// `(Δ_i, X_{t_i}, X_{t_{i+1}})` for every observation interval.
    pub fn increments(&self) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        self.times
            .windows(2)
            .zip(self.values.windows(2))
            .map(|(t, x)| (t[1] - t[0], x[0], x[1]))
    }

    /// Common step when the grid is uniform up to a relative `1e-9`.
    pub fn uniform_step(&self) -> Option<f64> {
        if self.len() < 2 {
            return None;
        }
        let mean = (self.times[self.len() - 1] - self.times[0]) / (self.len() - 1) as f64;
        self.times
            .windows(2)
            .all(|w| ((w[1] - w[0]) - mean).abs() <= 1e-9 * mean)
            .then_some(mean)
    }

    pub fn horizon(&self) -> f64 {
        self.times.last().copied().unwrap_or(0.0)
    }
}

/// `n + 1` equally spaced times on `[0, t_final]`.
pub fn uniform_grid(t_final: f64, n: usize) -> Result<Vec<f64>> {
    if n == 0 || !(t_final > 0.0 && t_final.is_finite()) {
        return Err(Error::InvalidGrid(format!(
            "need n >= 1 and T > 0, got n={n}, T={t_final}"
        )));
    }
    let dt = t_final / n as f64;
    Ok((0..=n).map(|i| i as f64 * dt).collect())
}

fn validate_grid(times: &[f64]) -> Result<()> {
    match times.first() {
        None => return Err(Error::InvalidGrid("empty grid".into())),
        Some(&t0) if t0 != 0.0 => {
            return Err(Error::InvalidGrid(format!(
                "grid must start at 0, starts at {t0}"
            )));
        }
        _ => {}
    }
    if let Some(i) = times
        .windows(2)
        .position(|w| !(w[1] > w[0]) || !w[1].is_finite())
    {
        return Err(Error::InvalidGrid(format!(
            "grid not strictly increasing at index {}: {} -> {}",
            i + 1,
            times[i],
            times[i + 1]
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimScheme {
    pub substeps: usize,
    pub exact_ou: bool,
}

impl Default for SimScheme {
    fn default() -> Self {
        Self {
            substeps: 10,
            exact_ou: false,
        }
    }
}

/// Jump times and sizes of a compound Poisson process on `[t_a, t_b)`.
///
/// Times are sorted; sizes are `N(mu_j, sigma_j²)`.
pub fn sample_cp_jumps<R: Rng + ?Sized>(
    lambda: f64,
    mu_j: f64,
    sigma_j: f64,
    t_a: f64,
    t_b: f64,
    rng: &mut R,
) -> Result<Vec<(f64, f64)>> {
    if !(lambda >= 0.0) || !(t_b > t_a) {
        return Err(Error::InvalidParameter(format!(
            "compound Poisson sampling needs λ >= 0 and t_b > t_a, got λ={lambda}, [{t_a}, {t_b}]"
        )));
    }
    let count = poisson(lambda * (t_b - t_a), rng);
    let mut jumps: Vec<(f64, f64)> = (0..count)
        .map(|_| {
            let t = t_a + (t_b - t_a) * rng.random::<f64>();
            let z: f64 = rng.sample(StandardNormal);
            (t, mu_j + sigma_j * z)
        })
        .collect();
    jumps.sort_by(|a, b| a.0.total_cmp(&b.0));
    Ok(jumps)
}

pub(crate) fn poisson<R: Rng + ?Sized>(mean: f64, rng: &mut R) -> u64 {
    if mean <= 0.0 {
        return 0;
    }
    if mean < 30.0 {
        // Inversion by sequential search.
        let u: f64 = rng.random();
        let mut p = (-mean).exp();
        let mut cdf = p;
        let mut k = 0u64;
        while u > cdf && k < 1000 {
            k += 1;
            p *= mean / k as f64;
            cdf += p;
        }
        k
    } else {
        Poisson::new(mean)
            .expect("positive finite mean")
            .sample(rng) as u64
    }
}

/// Increments of the compensated one-sided tempered stable process.
///
/// Jumps above `ε` form a compound Poisson process with rate
/// `∫_ε^∞ e^{-z} z^{-1-α} dz`; sizes are drawn by rejection from a Pareto
/// envelope. The compensator of those jumps is subtracted and the jumps
/// below `ε` are replaced by a centred Gaussian of matching variance, so
/// every increment has mean 0 and variance `Δ Γ(2-α)`.
#[derive(Debug, Clone)]
pub struct TemperedStableSampler {
    alpha: f64,
    epsilon: f64,
    rate_above: f64,
    mean_above: f64,
    variance_below: f64,
}

/// Cutoff so that the small-jump remainder variance per step stays below `1e-8`.
pub fn default_ts_epsilon(alpha: f64, dt: f64) -> f64 {
    let eps = (1e-8 * (2.0 - alpha) / dt).powf(1.0 / (2.0 - alpha));
    eps.min(1.0)
}

impl TemperedStableSampler {
    pub fn new(alpha: f64, epsilon: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "tempered stable index must lie in (0, 1), got {alpha}"
            )));
        }
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "small-jump cutoff must be positive, got {epsilon}"
            )));
        }
        Ok(Self {
            alpha,
            epsilon,
            rate_above: ts_jump_rate_above(alpha, epsilon)?,
            mean_above: ts_mean_above(alpha, epsilon)?,
            variance_below: ts_variance_below(alpha, epsilon)?,
        })
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn rate_above(&self) -> f64 {
        self.rate_above
    }

    /// Set when the cutoff leaves essentially no jumps to simulate.
    pub fn warning(&self) -> Option<String> {
        (self.rate_above * self.epsilon < 1e-12).then(|| {
            format!(
                "cutoff ε={} retains no jumps; increments reduce to the Gaussian remainder and compensator",
                self.epsilon
            )
        })
    }

    fn jump_size<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let inv_alpha = 1.0 / self.alpha;
        loop {
            let u = 1.0 - rng.random::<f64>();
            let z = self.epsilon * u.powf(-inv_alpha);
            if rng.random::<f64>() < (self.epsilon - z).exp() {
                return z;
            }
        }
    }

    pub fn increment<R: Rng + ?Sized>(&self, dt: f64, rng: &mut R) -> f64 {
        if dt <= 0.0 {
            return 0.0;
        }
        let count = poisson(self.rate_above * dt, rng);
        let mut big = 0.0;
        for _ in 0..count {
            big += self.jump_size(rng);
        }
        let z: f64 = rng.sample(StandardNormal);
        big - dt * self.mean_above + (self.variance_below * dt).sqrt() * z
    }
}

/// One compensated tempered stable increment over `dt`. Builds the sampler on
/// every call; reuse a [`TemperedStableSampler`] for repeated draws.
pub fn sample_ts_increment<R: Rng + ?Sized>(
    alpha: f64,
    dt: f64,
    epsilon: f64,
    rng: &mut R,
) -> Result<f64> {
    if dt == 0.0 {
        return Ok(0.0);
    }
    if !(dt > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "step must be non-negative, got {dt}"
        )));
    }
    Ok(TemperedStableSampler::new(alpha, epsilon)?.increment(dt, rng))
}

#[derive(Debug, Clone)]
enum JumpSource {
    None,
    CompoundPoisson {
        lambda: f64,
        mu_j: f64,
        sigma_j: f64,
    },
    TemperedStable(TemperedStableSampler),
}

/// Prepared transition kernel for one model and parameter value.
#[derive(Debug, Clone)]
pub(crate) struct Stepper<'a> {
    model: &'a ModelSpec,
    theta: Theta,
    scheme: SimScheme,
    jumps: JumpSource,
    exact: Option<(f64, f64)>,
}

impl<'a> Stepper<'a> {
    /// `max_dt` is the longest observation interval the stepper will see.
    pub(crate) fn new(
        model: &'a ModelSpec,
        theta: Theta,
        scheme: SimScheme,
        max_dt: f64,
    ) -> Result<Self> {
        if scheme.substeps == 0 {
            return Err(Error::InvalidParameter("substeps must be >= 1".into()));
        }
        let exact = if scheme.exact_ou {
            Some(model.affine_constants().ok_or_else(|| {
                Error::UnsupportedModel(
                    "exact OU transitions need affine drift and constant coefficients".into(),
                )
            })?)
        } else {
            None
        };
        let jumps = match *model.levy() {
            LevyMeasure::None => JumpSource::None,
            LevyMeasure::GaussianCp { lambda: 0.0, .. } => JumpSource::None,
            LevyMeasure::GaussianCp {
                lambda,
                mu_j,
                sigma_j,
            } => JumpSource::CompoundPoisson {
                lambda,
                mu_j,
                sigma_j,
            },
            LevyMeasure::TemperedStable { alpha } => {
                let sub_dt = max_dt / scheme.substeps as f64;
                JumpSource::TemperedStable(TemperedStableSampler::new(
                    alpha,
                    default_ts_epsilon(alpha, sub_dt),
                )?)
            }
        };
        Ok(Self {
            model,
            theta,
            scheme,
            jumps,
            exact,
        })
    }

    pub(crate) fn warning(&self) -> Option<String> {
        match &self.jumps {
            JumpSource::TemperedStable(s) => s.warning(),
            _ => None,
        }
    }

    /// Drift used between jumps, matching how the jump source is compensated.
    #[inline]
    fn step_drift(&self, x: f64) -> f64 {
        match self.jumps {
            JumpSource::CompoundPoisson { .. } => self.model.compensated_drift(self.theta, x),
            _ => self.model.drift(self.theta, x),
        }
    }

    /// Advances the state from `t0` to `t1`.
    pub(crate) fn advance<R: Rng + ?Sized>(
        &self,
        x: f64,
        t0: f64,
        t1: f64,
        rng_w: &mut R,
        rng_j: &mut R,
    ) -> f64 {
        match self.exact {
            Some((sigma, gamma)) => self.advance_exact(x, t0, t1, sigma, gamma, rng_w, rng_j),
            None => self.advance_euler(x, t0, t1, rng_w, rng_j),
        }
    }

    fn advance_euler<R: Rng + ?Sized>(
        &self,
        mut x: f64,
        t0: f64,
        t1: f64,
        rng_w: &mut R,
        rng_j: &mut R,
    ) -> f64 {
        let m = self.scheme.substeps;
        let dt = (t1 - t0) / m as f64;
        let sqrt_dt = dt.sqrt();
        let cp = match self.jumps {
            JumpSource::CompoundPoisson {
                lambda,
                mu_j,
                sigma_j,
            } => sample_cp_jumps(lambda, mu_j, sigma_j, t0, t1, rng_j)
                .expect("validated rate and interval"),
            _ => Vec::new(),
        };
        let mut next_jump = 0;
        for k in 0..m {
            let s_end = if k + 1 == m {
                t1
            } else {
                t0 + (k + 1) as f64 * dt
            };
            let z: f64 = rng_w.sample(StandardNormal);
            let mut dx = self.step_drift(x) * dt + self.model.diffusion(x) * sqrt_dt * z;
            match &self.jumps {
                JumpSource::None => {}
                JumpSource::CompoundPoisson { .. } => {
                    let mut sizes = 0.0;
                    while next_jump < cp.len() && (cp[next_jump].0 < s_end || k + 1 == m) {
                        sizes += cp[next_jump].1;
                        next_jump += 1;
                    }
                    if sizes != 0.0 {
                        dx += self.model.jump_coeff(x) * sizes;
                    }
                }
                JumpSource::TemperedStable(sampler) => {
                    dx += self.model.jump_coeff(x) * sampler.increment(dt, rng_j);
                }
            }
            x += dx;
        }
        x
    }

    #[allow(clippy::too_many_arguments)]
    fn advance_exact<R: Rng + ?Sized>(
        &self,
        mut x: f64,
        t0: f64,
        t1: f64,
        sigma: f64,
        gamma: f64,
        rng_w: &mut R,
        rng_j: &mut R,
    ) -> f64 {
        let theta1 = self.theta.theta1;
        match &self.jumps {
            JumpSource::None => {
                let z: f64 = rng_w.sample(StandardNormal);
                ou_transition(x, theta1, self.theta.theta2, sigma, t1 - t0, z)
            }
            JumpSource::CompoundPoisson {
                lambda,
                mu_j,
                sigma_j,
            } => {
                let offset = self.theta.theta2 - gamma * self.model.jump_mean();
                let jumps = sample_cp_jumps(*lambda, *mu_j, *sigma_j, t0, t1, rng_j)
                    .expect("validated rate and interval");
                let mut t = t0;
                for (tj, size) in jumps {
                    let z: f64 = rng_w.sample(StandardNormal);
                    x = ou_transition(x, theta1, offset, sigma, tj - t, z) + gamma * size;
                    t = tj;
                }
                let z: f64 = rng_w.sample(StandardNormal);
                ou_transition(x, theta1, offset, sigma, t1 - t, z)
            }
            JumpSource::TemperedStable(sampler) => {
                let m = self.scheme.substeps;
                let dt = (t1 - t0) / m as f64;
                for _ in 0..m {
                    let z: f64 = rng_w.sample(StandardNormal);
                    x = ou_transition(x, theta1, self.theta.theta2, sigma, dt, z)
                        + gamma * sampler.increment(dt, rng_j);
                }
                x
            }
        }
    }
}

/// Exact transition of `dX = (θ₁ X + offset) dt + σ dW` over `h`, driven by the normal draw `z`.
#[inline]
pub fn ou_transition(x: f64, theta1: f64, offset: f64, sigma: f64, h: f64, z: f64) -> f64 {
    if h <= 0.0 {
        return x;
    }
    if theta1 == 0.0 {
        return x + offset * h + sigma * h.sqrt() * z;
    }
    let growth = (theta1 * h).exp_m1();
    let mean = x + (theta1 * x + offset) * growth / theta1;
    let var = sigma * sigma * (2.0 * theta1 * h).exp_m1() / (2.0 * theta1);
    mean + var.sqrt() * z
}

/// Simulates the process on `grid`, starting from `x0` at time 0.
pub fn simulate_path(
    model: &ModelSpec,
    theta0: Theta,
    x0: f64,
    grid: &[f64],
    scheme: SimScheme,
    seed: u64,
) -> Result<SamplePath> {
    validate_grid(grid)?;
    let max_dt = grid.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max);
    let stepper = Stepper::new(model, theta0, scheme, max_dt.max(f64::MIN_POSITIVE))?;
    let stream = SeedStream::new(seed);
    let mut rng_w = stream.child(channel::DIFFUSION).rng();
    let mut rng_j = stream.child(channel::JUMPS).rng();
    let mut values = Vec::with_capacity(grid.len());
    let mut x = x0;
    values.push(x);
    for w in grid.windows(2) {
        x = stepper.advance(x, w[0], w[1], &mut rng_w, &mut rng_j);
        values.push(x);
    }
    Ok(SamplePath {
        times: grid.to_vec(),
        values,
    })
}

/// Warning raised by the jump sampler for this configuration, if any.
pub fn configuration_warning(
    model: &ModelSpec,
    theta0: Theta,
    grid: &[f64],
    scheme: SimScheme,
) -> Result<Option<String>> {
    validate_grid(grid)?;
    let max_dt = grid.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max);
    Ok(Stepper::new(model, theta0, scheme, max_dt.max(f64::MIN_POSITIVE))?.warning())
}
