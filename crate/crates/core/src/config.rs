//! JSON experiment configuration and built-in experiment presets.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::contrast::{ContrastConfig, FitOptions, ThetaBox, DEFAULT_K_IND};
use crate::error::{Error, Result};
use crate::kernels::{KernelKind, TruncationKernel};
use crate::model::{LevyMeasure, ModelSpec, Theta};
use crate::moment::{MomentApprox, OracleConfig};
use crate::sim::{uniform_grid, SimScheme};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum DriftName {
    #[default]
    Affine,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    #[serde(default)]
    pub drift: DriftName,
    pub theta1: f64,
    pub theta2: f64,
    pub sigma: f64,
    pub gamma: f64,
    pub jumps: LevyMeasure,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplingConfig {
    pub t_final: f64,
    pub n: usize,
    pub x0: f64,
    #[serde(default = "default_substeps")]
    pub substeps: usize,
    #[serde(default)]
    pub exact_ou: bool,
}

fn default_substeps() -> usize {
    SimScheme::default().substeps
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ApproxName {
    Euler,
    KesslerOu,
    KesslerGeneric,
    StableCorrected,
    McOracle,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct Frozen {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta1: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimatorConfig {
    pub m_approx: ApproxName,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub order: Option<usize>,
    pub beta: f64,
    pub c: f64,
    pub kernel: KernelKind,
    #[serde(default = "default_k_ind")]
    pub k_ind: f64,
    #[serde(default)]
    pub weighted: bool,
    #[serde(default)]
    pub theta_box: ThetaBox,
    #[serde(default)]
    pub frozen: Frozen,
    /// Paths per transition when `m_approx` is the Monte Carlo oracle.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub oracle_paths: Option<usize>,
}

fn default_k_ind() -> f64 {
    DEFAULT_K_IND
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McConfig {
    pub replications: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub label: String,
    pub model: ModelConfig,
    pub sampling: SamplingConfig,
    pub estimator: EstimatorConfig,
    pub mc: McConfig,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn validate(&self) -> Result<()> {
        if self.mc.replications == 0 {
            return Err(Error::InvalidParameter("replications must be >= 1".into()));
        }
        if self.sampling.substeps == 0 {
            return Err(Error::InvalidParameter("substeps must be >= 1".into()));
        }
        if !self.sampling.x0.is_finite() {
            return Err(Error::InvalidParameter("x0 must be finite".into()));
        }
        uniform_grid(self.sampling.t_final, self.sampling.n)?;
        self.model()?;
        self.contrast()?;
        self.fit_options().theta_box.validate()?;
        if self.estimator.m_approx == ApproxName::KesslerGeneric
            && self.estimator.order.unwrap_or(0) == 0
        {
            return Err(Error::InvalidParameter(
                "kessler_generic needs order >= 1".into(),
            ));
        }
        Ok(())
    }

    pub fn model(&self) -> Result<ModelSpec> {
        ModelSpec::affine(self.model.sigma, self.model.gamma, self.model.jumps)
    }

    pub fn theta0(&self) -> Theta {
        Theta::new(self.model.theta1, self.model.theta2)
    }

    pub fn grid(&self) -> Result<Vec<f64>> {
        uniform_grid(self.sampling.t_final, self.sampling.n)
    }

    pub fn step(&self) -> f64 {
        self.sampling.t_final / self.sampling.n as f64
    }

    pub fn scheme(&self) -> SimScheme {
        SimScheme {
            substeps: self.sampling.substeps,
            exact_ou: self.sampling.exact_ou,
        }
    }

    pub fn kernel(&self) -> Result<TruncationKernel> {
        TruncationKernel::new(self.estimator.kernel)
    }

    pub fn contrast(&self) -> Result<ContrastConfig> {
        let e = &self.estimator;
        let cfg = ContrastConfig {
            beta: e.beta,
            c: e.c,
            kernel: self.kernel()?,
            k_ind: e.k_ind,
            weight_by_variance: e.weighted,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn approx(&self, model: &ModelSpec) -> Result<MomentApprox> {
        let e = &self.estimator;
        Ok(match e.m_approx {
            ApproxName::Euler => MomentApprox::Euler,
            ApproxName::KesslerOu => MomentApprox::KesslerOuExact,
            ApproxName::KesslerGeneric => MomentApprox::kessler_generic(e.order.unwrap_or(0))?,
            ApproxName::StableCorrected => {
                MomentApprox::stable_corrected(model, &self.kernel()?, e.c, e.beta)?
            }
            ApproxName::McOracle => MomentApprox::McOracle(OracleConfig {
                paths: e.oracle_paths.unwrap_or(10_000),
                seed: self.mc.seed,
                kernel: self.kernel()?,
                c: e.c,
                beta: e.beta,
            }),
        })
    }

    pub fn fit_options(&self) -> FitOptions {
        FitOptions {
            theta_box: self.estimator.theta_box,
            frozen_theta1: self.estimator.frozen.theta1,
            ..FitOptions::default()
        }
    }

    /// The θ₂-only stable estimator has a closed form.
    pub fn uses_explicit_stable_estimator(&self) -> bool {
        self.estimator.m_approx == ApproxName::StableCorrected
            && self.estimator.frozen.theta1.is_some()
            && matches!(self.model.jumps, LevyMeasure::TemperedStable { .. })
    }
}

/// Names accepted by [`preset`].
pub const PRESETS: &[&str] = &[
    "table1_euler",
    "table1_kessler",
    "table2_phi0",
    "table2_phi2",
    "table2_phi3",
    "table3_phi0",
    "table3_phi2",
    "table3_phi3",
    "table4_a01_c1",
    "table4_a03_c1",
    "table4_a05_c1",
    "table4_a01_c15",
    "table4_a03_c15",
    "table4_a05_c15",
];

fn ou_experiment(
    label: &str,
    jumps: LevyMeasure,
    m_approx: ApproxName,
    kernel: KernelKind,
    replications: usize,
) -> ExperimentConfig {
    ExperimentConfig {
        label: label.into(),
        model: ModelConfig {
            drift: DriftName::Affine,
            theta1: -0.5,
            theta2: 2.0,
            sigma: 0.3,
            gamma: 1.0,
            jumps,
        },
        sampling: SamplingConfig {
            t_final: 2000.0,
            n: 10_000,
            x0: 4.0,
            substeps: 1,
            exact_ou: true,
        },
        estimator: EstimatorConfig {
            m_approx,
            order: None,
            beta: 0.49,
            c: 1.0,
            kernel,
            k_ind: DEFAULT_K_IND,
            weighted: false,
            theta_box: ThetaBox::default(),
            frozen: Frozen::default(),
            oracle_paths: None,
        },
        mc: McConfig {
            replications,
            seed: 20_240_501,
        },
    }
}

fn stable_experiment(label: &str, alpha: f64, c: f64, replications: usize) -> ExperimentConfig {
    let mut cfg = ou_experiment(
        label,
        LevyMeasure::TemperedStable { alpha },
        ApproxName::StableCorrected,
        KernelKind::Phi0,
        replications,
    );
    cfg.sampling = SamplingConfig {
        t_final: 100.0,
        n: 10_000,
        x0: 4.0,
        substeps: 10,
        exact_ou: true,
    };
    cfg.estimator.c = c;
    cfg.estimator.frozen = Frozen { theta1: Some(-0.5) };
    cfg
}

/// Built-in experiment configuration by name.
pub fn preset(name: &str, replications: usize) -> Result<ExperimentConfig> {
    let gaussian = |lambda: f64| LevyMeasure::GaussianCp {
        lambda,
        mu_j: 0.0,
        sigma_j: 2f64.sqrt(),
    };
    let osc = |l: u32| KernelKind::Oscillating { l, d: 3.0 };
    let cfg = match name {
        "table1_euler" => ou_experiment(
            name,
            LevyMeasure::None,
            ApproxName::Euler,
            KernelKind::Unit,
            replications,
        ),
        "table1_kessler" => ou_experiment(
            name,
            LevyMeasure::None,
            ApproxName::KesslerOu,
            KernelKind::Unit,
            replications,
        ),
        "table2_phi0" => ou_experiment(
            name,
            gaussian(0.1),
            ApproxName::KesslerOu,
            KernelKind::Phi0,
            replications,
        ),
        "table2_phi2" => ou_experiment(
            name,
            gaussian(0.1),
            ApproxName::KesslerOu,
            osc(2),
            replications,
        ),
        "table2_phi3" => ou_experiment(
            name,
            gaussian(0.1),
            ApproxName::KesslerOu,
            osc(3),
            replications,
        ),
        "table3_phi0" => ou_experiment(
            name,
            gaussian(1.0),
            ApproxName::KesslerOu,
            KernelKind::Phi0,
            replications,
        ),
        "table3_phi2" => ou_experiment(
            name,
            gaussian(1.0),
            ApproxName::KesslerOu,
            osc(2),
            replications,
        ),
        "table3_phi3" => ou_experiment(
            name,
            gaussian(1.0),
            ApproxName::KesslerOu,
            osc(3),
            replications,
        ),
        "table4_a01_c1" => stable_experiment(name, 0.1, 1.0, replications),
        "table4_a03_c1" => stable_experiment(name, 0.3, 1.0, replications),
        "table4_a05_c1" => stable_experiment(name, 0.5, 1.0, replications),
        "table4_a01_c15" => stable_experiment(name, 0.1, 1.5, replications),
        "table4_a03_c15" => stable_experiment(name, 0.3, 1.5, replications),
        "table4_a05_c15" => stable_experiment(name, 0.5, 1.5, replications),
        _ => {
            return Err(Error::InvalidParameter(format!(
                "unknown preset {name:?}; known: {}",
                PRESETS.join(", ")
            )))
        }
    };
    cfg.validate()?;
    Ok(cfg)
}
