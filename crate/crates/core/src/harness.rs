//! Seeded Monte Carlo replication of simulate → estimate pipelines.

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;
use crate::contrast::{estimate_theta2_stable, minimize_prepared, PreparedContrast};
use crate::error::{Error, Result};
use crate::model::{ModelSpec, Theta};
use crate::rng::{channel, SeedStream};
use crate::sim::{simulate_path, uniform_grid, SamplePath, SimScheme};

/// One replication. Failed replications carry the error and NaN estimates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicationRow {
    pub rep: usize,
    pub seed: u64,
    pub theta1_hat: f64,
    pub theta2_hat: f64,
    pub contrast: f64,
    pub kept_fraction: f64,
    pub converged: bool,
    /// Uncorrected companion estimate of the explicit stable estimator.
    pub theta2_euler: Option<f64>,
    pub error: Option<String>,
}

impl ReplicationRow {
    pub fn failed(&self) -> bool {
        self.error.is_some()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub label: String,
    pub mean: [f64; 2],
    pub std: [f64; 2],
    pub reps: usize,
    pub failed: usize,
    pub runtime_s: f64,
    /// Set when a single successful replication leaves the std undefined.
    pub std_undefined: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentOutput {
    pub rows: Vec<ReplicationRow>,
    /// The estimator's summary, followed by the uncorrected companion row when there is one.
    pub summaries: Vec<SummaryRow>,
}

/// Sample mean and sample std (divisor `R - 1`) per parameter.
pub fn summarize(
    label: &str,
    estimates: &[[f64; 2]],
    failed: usize,
    runtime_s: f64,
) -> Result<SummaryRow> {
    if estimates.is_empty() {
        return Err(Error::EmptySummary);
    }
    let r = estimates.len() as f64;
    let mut mean = [0.0; 2];
    let mut std = [0.0; 2];
    for k in 0..2 {
        mean[k] = estimates.iter().map(|e| e[k]).sum::<f64>() / r;
        if estimates.len() > 1 {
            std[k] = (estimates
                .iter()
                .map(|e| (e[k] - mean[k]).powi(2))
                .sum::<f64>()
                / (r - 1.0))
                .sqrt();
        }
    }
    Ok(SummaryRow {
        label: label.to_string(),
        mean,
        std,
        reps: estimates.len(),
        failed,
        runtime_s,
        std_undefined: estimates.len() == 1,
    })
}

/// Seed of replication `rep` under `master`.
pub fn replication_seed(master: u64, rep: usize) -> u64 {
    SeedStream::new(master)
        .child(channel::REPLICATION)
        .replication_seed(rep as u64)
}

/// Simulates and estimates one replication.
pub fn run_replication(
    cfg: &ExperimentConfig,
    model: &ModelSpec,
    grid: &[f64],
    rep: usize,
) -> ReplicationRow {
    let seed = replication_seed(cfg.mc.seed, rep);
    let mut row = ReplicationRow {
        rep,
        seed,
        theta1_hat: f64::NAN,
        theta2_hat: f64::NAN,
        contrast: f64::NAN,
        kept_fraction: f64::NAN,
        converged: false,
        theta2_euler: None,
        error: None,
    };
    let result = simulate_path(
        model,
        cfg.theta0(),
        cfg.sampling.x0,
        grid,
        cfg.scheme(),
        seed,
    )
    .and_then(|path| estimate_path(cfg, model, &path));
    match result {
        Ok(est) => {
            row.theta1_hat = est.theta.theta1;
            row.theta2_hat = est.theta.theta2;
            row.contrast = est.contrast;
            row.kept_fraction = est.kept_fraction;
            row.converged = est.converged;
            row.theta2_euler = est.theta2_euler;
        }
        Err(e) => row.error = Some(e.to_string()),
    }
    row
}

/// Estimate produced by the configured estimator on one path.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathEstimate {
    pub theta: Theta,
    pub contrast: f64,
    pub kept_fraction: f64,
    pub converged: bool,
    pub theta2_euler: Option<f64>,
}

/// Runs the configured estimator on an observed path.
pub fn estimate_path(
    cfg: &ExperimentConfig,
    model: &ModelSpec,
    path: &SamplePath,
) -> Result<PathEstimate> {
    let contrast = cfg.contrast()?;
    let prepared = PreparedContrast::new(path, model, &contrast)?;
    let approx = cfg.approx(model)?;
    if cfg.uses_explicit_stable_estimator() {
        let theta1 = cfg
            .estimator
            .frozen
            .theta1
            .expect("checked by uses_explicit_stable_estimator");
        let est = estimate_theta2_stable(path, theta1, model, &contrast)?;
        let theta = Theta::new(theta1, est.theta2);
        return Ok(PathEstimate {
            theta,
            contrast: prepared.value(model, &approx, theta)?,
            kept_fraction: prepared.kept_fraction(),
            converged: true,
            theta2_euler: Some(est.theta2_euler),
        });
    }
    let fit = minimize_prepared(&prepared, model, &approx, &cfg.fit_options())?;
    Ok(PathEstimate {
        theta: fit.theta,
        contrast: fit.contrast_at_opt,
        kept_fraction: fit.kept_fraction,
        converged: fit.converged,
        theta2_euler: None,
    })
}

/// Runs all replications on a pool of `workers` threads.
///
/// Each replication depends only on its own seed and rows are collected in
/// index order, so the rows are identical for any worker count.
pub fn run_experiment(cfg: &ExperimentConfig, workers: usize) -> Result<ExperimentOutput> {
    cfg.validate()?;
    let model = cfg.model()?;
    let grid = cfg.grid()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::InvalidParameter(format!("thread pool: {e}")))?;
    let start = Instant::now();
    let rows: Vec<ReplicationRow> = pool.install(|| {
        (0..cfg.mc.replications)
            .into_par_iter()
            .map(|rep| run_replication(cfg, &model, &grid, rep))
            .collect()
    });
    let runtime = start.elapsed().as_secs_f64();
    let summaries = summarize_rows(&cfg.label, &rows, runtime)?;
    Ok(ExperimentOutput { rows, summaries })
}

/// Summaries of the successful rows, plus the `<label>_euler` companion when present.
pub fn summarize_rows(
    label: &str,
    rows: &[ReplicationRow],
    runtime_s: f64,
) -> Result<Vec<SummaryRow>> {
    let ok: Vec<&ReplicationRow> = rows.iter().filter(|r| !r.failed()).collect();
    let failed = rows.len() - ok.len();
    let estimates: Vec<[f64; 2]> = ok.iter().map(|r| [r.theta1_hat, r.theta2_hat]).collect();
    let mut out = vec![summarize(label, &estimates, failed, runtime_s)?];
    let euler: Vec<[f64; 2]> = ok
        .iter()
        .filter_map(|r| r.theta2_euler.map(|e| [r.theta1_hat, e]))
        .collect();
    if !euler.is_empty() {
        out.push(summarize(
            &format!("{label}_euler"),
            &euler,
            failed,
            runtime_s,
        )?);
    }
    Ok(out)
}

/// Where the ergodic average in [`fisher_reference`] comes from.
#[derive(Debug, Clone)]
pub enum FisherSource<'a> {
    Path(&'a SamplePath),
    /// Simulates a path from `x0` over `[0, t_ref]` with step `dt_ref`.
    LongSim {
        t_ref: f64,
        dt_ref: f64,
        x0: f64,
        seed: u64,
    },
}

impl FisherSource<'_> {
    pub fn long_sim(x0: f64, seed: u64) -> Self {
        FisherSource::LongSim {
            t_ref: 1e5,
            dt_ref: 0.01,
            x0,
            seed,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FisherReference {
    /// `E_π[ḃ ḃᵀ / a²]`.
    pub information: [[f64; 2]; 2],
    /// Asymptotic std of each estimated parameter at horizon `T`; frozen parameters report 0.
    pub std: [f64; 2],
}

/// Asymptotic std at horizon `t_final` from the inverse Fisher information.
pub fn fisher_reference(
    model: &ModelSpec,
    theta0: Theta,
    source: FisherSource<'_>,
    t_final: f64,
    frozen_theta1: bool,
) -> Result<FisherReference> {
    let owned;
    let path = match source {
        FisherSource::Path(p) => p,
        FisherSource::LongSim {
            t_ref,
            dt_ref,
            x0,
            seed,
        } => {
            let n = (t_ref / dt_ref).round() as usize;
            let scheme = match model.affine_constants() {
                Some(_) => SimScheme {
                    substeps: 1,
                    exact_ou: true,
                },
                None => SimScheme {
                    substeps: 1,
                    exact_ou: false,
                },
            };
            let seed = SeedStream::new(seed).child(channel::FISHER).key();
            owned = simulate_path(model, theta0, x0, &uniform_grid(t_ref, n)?, scheme, seed)?;
            &owned
        }
    };
    let mut info = [[0.0; 2]; 2];
    let values = path.values();
    for &x in values {
        let g = model.drift_theta_grad(theta0, x);
        let a2 = model.diffusion(x).powi(2);
        if !(a2 > 0.0) {
            return Err(Error::SingularInformation(a2));
        }
        for i in 0..2 {
            for j in 0..2 {
                info[i][j] += g[i] * g[j] / a2;
            }
        }
    }
    for row in info.iter_mut() {
        for v in row.iter_mut() {
            *v /= values.len() as f64;
        }
    }
    std_from_information(info, t_final, frozen_theta1)
}

fn std_from_information(
    info: [[f64; 2]; 2],
    t_final: f64,
    frozen_theta1: bool,
) -> Result<FisherReference> {
    if frozen_theta1 {
        if !(info[1][1] > 0.0) {
            return Err(Error::SingularInformation(info[1][1]));
        }
        return Ok(FisherReference {
            information: info,
            std: [0.0, (1.0 / (info[1][1] * t_final)).sqrt()],
        });
    }
    let det = info[0][0] * info[1][1] - info[0][1] * info[1][0];
    if !(det > 1e-12 * info[0][0].abs() * info[1][1].abs()) {
        return Err(Error::SingularInformation(det));
    }
    let std = [
        (info[1][1] / det / t_final).sqrt(),
        (info[0][0] / det / t_final).sqrt(),
    ];
    Ok(FisherReference {
        information: info,
        std,
    })
}

/// Fisher information of the affine model without jumps from its stationary
/// law `N(-θ₂/θ₁, σ²/(-2θ₁))`.
pub fn analytic_affine_fisher(
    theta0: Theta,
    sigma: f64,
    t_final: f64,
    frozen_theta1: bool,
) -> Result<FisherReference> {
    if !(theta0.theta1 < 0.0) || !(sigma > 0.0) {
        return Err(Error::InvalidParameter("needs θ₁ < 0 and σ > 0".into()));
    }
    let mean = -theta0.theta2 / theta0.theta1;
    let var = sigma * sigma / (-2.0 * theta0.theta1);
    let s2 = sigma * sigma;
    let info = [[(var + mean * mean) / s2, mean / s2], [mean / s2, 1.0 / s2]];
    std_from_information(info, t_final, frozen_theta1)
}

/// Long-path reference std for the experiment's free parameters.
pub fn experiment_fisher_reference(cfg: &ExperimentConfig) -> Result<FisherReference> {
    let model = cfg.model()?;
    fisher_reference(
        &model,
        cfg.theta0(),
        FisherSource::long_sim(cfg.sampling.x0, cfg.mc.seed),
        cfg.sampling.t_final,
        cfg.estimator.frozen.theta1.is_some(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::preset;
    use crate::model::LevyMeasure;

    #[test]
    fn summary_examples() {
        let s = summarize("x", &[[1.0, 0.0], [2.0, 0.0], [3.0, 0.0]], 0, 0.0).unwrap();
        assert_eq!(s.mean[0], 2.0);
        assert_eq!(s.std[0], 1.0);
        assert!(!s.std_undefined);
        let one = summarize("x", &[[1.5, 2.5]], 0, 0.0).unwrap();
        assert_eq!(one.mean, [1.5, 2.5]);
        assert_eq!(one.std, [0.0, 0.0]);
        assert!(one.std_undefined);
        assert!(matches!(
            summarize("x", &[], 2, 0.0),
            Err(Error::EmptySummary)
        ));
    }

    fn small(name: &str, reps: usize) -> ExperimentConfig {
        let mut cfg = preset(name, reps).unwrap();
        cfg.sampling.t_final /= 10.0;
        cfg.sampling.n /= 10;
        cfg
    }

    #[test]
    fn single_replication_summary() {
        let out = run_experiment(&small("table1_kessler", 1), 1).unwrap();
        assert_eq!(out.rows.len(), 1);
        let s = &out.summaries[0];
        assert_eq!(s.mean, [out.rows[0].theta1_hat, out.rows[0].theta2_hat]);
        assert!(s.std_undefined && s.std == [0.0, 0.0]);
    }

    #[test]
    fn rows_do_not_depend_on_worker_count() {
        let cfg = small("table3_phi0", 6);
        let a = run_experiment(&cfg, 1).unwrap();
        let b = run_experiment(&cfg, 3).unwrap();
        assert_eq!(a.rows, b.rows);
        let seeds: std::collections::HashSet<u64> = a.rows.iter().map(|r| r.seed).collect();
        assert_eq!(seeds.len(), 6);
    }

    #[test]
    fn failures_are_recorded_and_excluded() {
        let rows = vec![
            ReplicationRow {
                rep: 0,
                seed: 1,
                theta1_hat: -0.5,
                theta2_hat: 2.0,
                contrast: 1.0,
                kept_fraction: 1.0,
                converged: true,
                theta2_euler: None,
                error: None,
            },
            ReplicationRow {
                rep: 1,
                seed: 2,
                theta1_hat: f64::NAN,
                theta2_hat: f64::NAN,
                contrast: f64::NAN,
                kept_fraction: f64::NAN,
                converged: false,
                theta2_euler: None,
                error: Some("boom".into()),
            },
        ];
        let s = summarize_rows("t", &rows, 0.0).unwrap();
        assert_eq!(s[0].reps, 1);
        assert_eq!(s[0].failed, 1);
        assert_eq!(s[0].mean, [-0.5, 2.0]);
        assert!(summarize_rows("t", &rows[1..], 0.0).is_err());
    }

    #[test]
    fn stable_rows_carry_the_constant_correction() {
        let out = run_experiment(&small("table4_a05_c1", 4), 2).unwrap();
        assert_eq!(out.summaries.len(), 2);
        assert_eq!(out.summaries[1].label, "table4_a05_c1_euler");
        let diffs: Vec<f64> = out
            .rows
            .iter()
            .map(|r| r.theta2_euler.unwrap() - r.theta2_hat)
            .collect();
        for d in &diffs {
            assert!((d - diffs[0]).abs() < 1e-12);
        }
        assert!(out.rows.iter().all(|r| r.theta1_hat == -0.5));
    }

    #[test]
    fn fisher_reference_examples() {
        let th = Theta::new(-0.5, 2.0);
        let only2 = analytic_affine_fisher(th, 0.3, 100.0, true).unwrap();
        assert!((only2.std[1] - 0.03).abs() < 1e-15);
        let doubled = analytic_affine_fisher(th, 0.6, 100.0, true).unwrap();
        assert!((doubled.std[1] - 2.0 * only2.std[1]).abs() < 1e-15);
        let joint = analytic_affine_fisher(th, 0.3, 2000.0, false).unwrap();
        assert!((joint.std[0] - (0.09f64 / (2000.0 * 0.09)).sqrt()).abs() < 1e-12);
        assert!((joint.std[0] - 0.0224).abs() < 1e-4);

        let model = ModelSpec::affine(0.3, 0.0, LevyMeasure::None).unwrap();
        let sim = fisher_reference(
            &model,
            th,
            FisherSource::LongSim {
                t_ref: 2e4,
                dt_ref: 0.01,
                x0: 4.0,
                seed: 5,
            },
            2000.0,
            false,
        )
        .unwrap();
        assert!((sim.std[0] / joint.std[0] - 1.0).abs() < 0.05, "{sim:?}");
        let sim2 = fisher_reference(
            &model,
            th,
            FisherSource::LongSim {
                t_ref: 1e3,
                dt_ref: 0.01,
                x0: 4.0,
                seed: 5,
            },
            100.0,
            true,
        )
        .unwrap();
        assert!((sim2.std[1] - 0.03).abs() < 1e-12);
    }

    #[test]
    fn constant_path_has_singular_information() {
        let model = ModelSpec::affine(0.3, 0.0, LevyMeasure::None).unwrap();
        let path = SamplePath::new(vec![0.0, 1.0, 2.0], vec![4.0, 4.0, 4.0]).unwrap();
        let r = fisher_reference(
            &model,
            Theta::new(-0.5, 2.0),
            FisherSource::Path(&path),
            100.0,
            false,
        );
        assert!(matches!(r, Err(Error::SingularInformation(_))));
    }
}
