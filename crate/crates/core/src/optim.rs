//! Box-constrained Nelder–Mead.

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NelderMeadOptions {
    /// Converged once every vertex lies within this distance of the best one, per coordinate.
    pub x_tol: f64,
    /// Also converged once the vertex values agree to this relative spread
    /// and the simplex is smaller than `flat_x_tol`.
    pub f_rel_tol: f64,
    pub flat_x_tol: f64,
    pub max_evals: usize,
    /// Restarts from the reported minimum, each with a fresh simplex.
    pub restarts: usize,
}

impl Default for NelderMeadOptions {
    fn default() -> Self {
        Self {
            x_tol: 1e-8,
            f_rel_tol: 1e-14,
            flat_x_tol: 1e-6,
            max_evals: 2000,
            restarts: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub evals: usize,
    pub converged: bool,
}

/// Minimises `f` over the box `[lower, upper]`. Trial points are projected
/// onto the box; non-finite values count as `+∞`.
pub fn nelder_mead<F>(
    mut f: F,
    start: &[f64],
    step: &[f64],
    lower: &[f64],
    upper: &[f64],
    opts: NelderMeadOptions,
) -> Minimum
where
    F: FnMut(&[f64]) -> f64,
{
    let n = start.len();
    assert!(n > 0 && step.len() == n && lower.len() == n && upper.len() == n);
    let clamp = |p: &mut Vec<f64>| {
        for i in 0..n {
            p[i] = p[i].clamp(lower[i], upper[i]);
        }
    };
    let mut evals = 0usize;
    let mut eval = |p: &[f64], evals: &mut usize| {
        *evals += 1;
        let v = f(p);
        if v.is_finite() {
            v
        } else {
            f64::INFINITY
        }
    };

    let mut best = start.to_vec();
    clamp(&mut best);
    let mut best_val = eval(&best, &mut evals);
    let mut converged = false;

    for _ in 0..=opts.restarts {
        if evals >= opts.max_evals {
            break;
        }
        let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
        simplex.push((best.clone(), best_val));
        for i in 0..n {
            let mut p = best.clone();
            p[i] += step[i];
            if p[i] > upper[i] {
                p[i] = best[i] - step[i];
            }
            clamp(&mut p);
            let v = eval(&p, &mut evals);
            simplex.push((p, v));
        }
        converged = false;
        while evals < opts.max_evals {
            simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
            let diameter = simplex[1..]
                .iter()
                .flat_map(|(p, _)| p.iter().zip(&simplex[0].0).map(|(a, b)| (a - b).abs()))
                .fold(0.0f64, f64::max);
            let (lo, hi) = (simplex[0].1, simplex[n].1);
            let flat = diameter < opts.flat_x_tol
                && lo.is_finite()
                && hi - lo <= opts.f_rel_tol * lo.abs().max(1.0);
            if diameter < opts.x_tol || flat {
                converged = true;
                break;
            }
            let mut centroid = vec![0.0; n];
            for (p, _) in &simplex[..n] {
                for i in 0..n {
                    centroid[i] += p[i] / n as f64;
                }
            }
            let worst = simplex[n].clone();
            let along = |t: f64| {
                let mut p: Vec<f64> = (0..n)
                    .map(|i| centroid[i] + t * (worst.0[i] - centroid[i]))
                    .collect();
                clamp(&mut p);
                p
            };
            let xr = along(-1.0);
            let fr = eval(&xr, &mut evals);
            if fr < simplex[0].1 {
                let xe = along(-2.0);
                let fe = eval(&xe, &mut evals);
                simplex[n] = if fe < fr { (xe, fe) } else { (xr, fr) };
                continue;
            }
            if fr < simplex[n - 1].1 {
                simplex[n] = (xr, fr);
                continue;
            }
            let (xc, fc) = if fr < worst.1 {
                let xc = along(-0.5);
                let fc = eval(&xc, &mut evals);
                (xc, fc)
            } else {
                let xc = along(0.5);
                let fc = eval(&xc, &mut evals);
                (xc, fc)
            };
            if fc < worst.1.min(fr) {
                simplex[n] = (xc, fc);
                continue;
            }
            let anchor = simplex[0].0.clone();
            for (p, v) in simplex.iter_mut().skip(1) {
                for i in 0..n {
                    p[i] = anchor[i] + 0.5 * (p[i] - anchor[i]);
                }
                *v = eval(p, &mut evals);
            }
        }
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        if simplex[0].1 <= best_val {
            best = simplex[0].0.clone();
            best_val = simplex[0].1;
        }
    }
    Minimum {
        x: best,
        value: best_val,
        evals,
        converged: converged && evals <= opts.max_evals,
    }
}
