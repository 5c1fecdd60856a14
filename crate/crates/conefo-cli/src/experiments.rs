//! Desk-scale experiments behind `reproduce`.
//!
//! Each experiment is a plain function returning its data so that tests can
//! assert on it; [`reproduce`] formats the same data as CSV.

use conefo::continuation::{run, ContinuationOptions, Schedule};
use conefo::models::{build, ModelKind, ModelSpec, OperatorSpec};
use conefo::prox::{singular_values, NonsmoothFn, Zero};
use conefo::smoothing::relative_error;
use conefo::solvers::{fmt_f64, minimize, solve, Composite, SolverOptions, StepPolicy, Trace, Variant};
use conefo::testgen::{
    gaussian_matrix, gen_dantzig_exact, gen_lasso_exact, gen_sparse_signal, with_retries, Budget, ExactInstance,
};
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::CliError;

pub const FIGURES: &[&str] = &["fig2", "fig3", "fig4", "fig5", "fig6", "fig7", "mc_small"];

/// Dantzig bound used by the desk instances.
pub const DANTZIG_DELTA: f64 = 0.01;
/// Smoothing of the desk Dantzig instance used for variant comparisons.
pub const DESK_MU: f64 = 0.05;
/// Smoothing of the continuation comparison. Large enough that 50 outer
/// steps stay in the sublinear phase; with smaller values the accelerated
/// outer iteration identifies the support early and its momentum ripples.
pub const CONTINUATION_MU: f64 = 1000.0;

const ATTEMPTS: usize = 10;

fn dantzig_instance(m: usize, n: usize, s: usize, db: f64, mu: f64, seed: u64) -> Result<ExactInstance, CliError> {
    Ok(with_retries(seed, ATTEMPTS, |k| {
        let a = gaussian_matrix(m, n, k);
        let x = gen_sparse_signal(n, s, db, k ^ 0x5eed)?;
        gen_dantzig_exact(m, n, &a, &x, DANTZIG_DELTA, mu, &Budget::default())
    })?)
}

/// Dantzig selector, 32 x 128, 10 nonzeros over 40 dB, certified for the
/// unsmoothed problem.
pub fn exact_penalty_instance(seed: u64) -> Result<ExactInstance, CliError> {
    dantzig_instance(32, 128, 10, 40.0, 0.0, seed)
}

/// Dantzig selector, 32 x 128, certified for the problem smoothed with
/// [`DESK_MU`] around 0.
pub fn smoothed_dantzig_instance(seed: u64) -> Result<ExactInstance, CliError> {
    dantzig_instance(32, 128, 8, 20.0, DESK_MU, seed)
}

/// LASSO, 80 x 200 Gaussian, certified for the unsmoothed problem.
pub fn lasso_instance(seed: u64) -> Result<ExactInstance, CliError> {
    Ok(with_retries(seed, ATTEMPTS, |k| {
        let a = gaussian_matrix(80, 200, k);
        let x = gen_sparse_signal(200, 12, 20.0, k ^ 0x5eed)?;
        gen_lasso_exact(80, 200, &a, &x, 0.05, &Budget::default())
    })?)
}

/// Largest singular value of the instance operator.
pub fn operator_norm(inst: &ExactInstance) -> f64 {
    let sv = singular_values(inst.rows, inst.cols, &col_major(inst));
    sv[0]
}

fn col_major(inst: &ExactInstance) -> Vec<f64> {
    let mut out = vec![0.0; inst.a.len()];
    for i in 0..inst.rows {
        for j in 0..inst.cols {
            out[i + j * inst.rows] = inst.a[i * inst.cols + j];
        }
    }
    out
}

/// Exact Lipschitz constant `||A^T A||^2 / mu` of the smoothed Dantzig dual.
pub fn dantzig_lipschitz(inst: &ExactInstance, mu: f64) -> f64 {
    operator_norm(inst).powi(4) / mu
}

fn tight(max_iters: usize) -> SolverOptions {
    SolverOptions {
        max_iters,
        tol: 1e-14,
        ..Default::default()
    }
}

/// Iteration cap per sweep point. No restarts: a short period stalls the
/// active-set changes on these instances.
pub const SWEEP_ITERS: usize = 100_000;

/// Error of the smoothed solution (center 0) against the certified
/// unsmoothed solution, for each `mu`.
pub fn mu_sweep(inst: &ExactInstance, mus: &[f64]) -> Result<Vec<(f64, f64)>, CliError> {
    mus.iter()
        .map(|&mu| {
            let cd = build(&inst.model_spec(mu))?;
            let sol = solve(&cd, &tight(SWEEP_ITERS), None)?;
            Ok((mu, relative_error(&sol.x.data, &inst.x_star)))
        })
        .collect()
}

/// `n` points spaced evenly in `log10` from `lo` to `hi`.
pub fn logspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let (a, b) = (lo.log10(), hi.log10());
    (0..n)
        .map(|k| 10f64.powf(a + (b - a) * k as f64 / (n.max(2) - 1) as f64))
        .collect()
}

/// Largest `mu0` in an ascending sweep such that every point at or below it
/// has error at most `tol`.
pub fn plateau_edge(sweep: &[(f64, f64)], tol: f64) -> Option<f64> {
    let k = sweep.iter().take_while(|(_, e)| *e <= tol).count();
    (k > 0).then(|| sweep[k - 1].0)
}

#[derive(Clone, Debug)]
pub struct VariantRun {
    pub variant: Variant,
    pub backtracking: bool,
    pub restart: Option<usize>,
    pub trace: Trace,
}

/// Every variant with a fixed step `1/L` and with backtracking on the
/// smoothed desk Dantzig instance; errors are against the certificate.
pub fn variant_comparison(inst: &ExactInstance, max_iters: usize) -> Result<Vec<VariantRun>, CliError> {
    let cd = build(&inst.model_spec(DESK_MU))?;
    let l = dantzig_lipschitz(inst, DESK_MU);
    let mut runs = Vec::new();
    for backtracking in [false, true] {
        for v in Variant::ALL {
            let opts = SolverOptions {
                variant: v,
                step: if backtracking {
                    StepPolicy::backtracking_from(l)
                } else {
                    StepPolicy::Fixed { lipschitz: l }
                },
                max_iters,
                tol: 0.0,
                reference: Some(inst.x_star.clone()),
                ..Default::default()
            };
            let sol = solve(&cd, &opts, None)?;
            runs.push(VariantRun {
                variant: v,
                backtracking,
                restart: None,
                trace: sol.trace,
            });
        }
    }
    Ok(runs)
}

/// AT with backtracking and several restart intervals on the same instance.
pub fn restart_comparison(
    inst: &ExactInstance,
    restarts: &[Option<usize>],
    max_iters: usize,
) -> Result<Vec<VariantRun>, CliError> {
    let cd = build(&inst.model_spec(DESK_MU))?;
    let l = dantzig_lipschitz(inst, DESK_MU);
    restarts
        .iter()
        .map(|&restart| {
            let opts = SolverOptions {
                step: StepPolicy::backtracking_from(l),
                max_iters,
                tol: 0.0,
                restart,
                reference: Some(inst.x_star.clone()),
                ..Default::default()
            };
            Ok(VariantRun {
                variant: Variant::At,
                backtracking: true,
                restart,
                trace: solve(&cd, &opts, None)?.trace,
            })
        })
        .collect()
}

/// Tolerance of the near-exact inner solves in continuation experiments.
pub const INNER_TOL: f64 = 1e-12;

fn exact_style(schedule: Schedule, max_outer: usize, reference: &[f64]) -> ContinuationOptions {
    ContinuationOptions {
        schedule,
        tol0: INNER_TOL,
        tol_decay: 1.0,
        final_tol: INNER_TOL,
        max_outer,
        outer_tol: 0.0,
        reference: Some(reference.to_vec()),
        ..Default::default()
    }
}

/// Outer-step errors of standard and accelerated continuation at fixed `mu`,
/// as rows `(j, standard, accelerated)`.
pub fn continuation_comparison(
    inst: &ExactInstance,
    mu: f64,
    max_outer: usize,
) -> Result<Vec<(usize, f64, f64)>, CliError> {
    let model = conefo::models::Model::new(&inst.model_spec(mu))?;
    let solver = SolverOptions {
        max_iters: 100_000,
        ..Default::default()
    };
    let errs = |schedule| -> Result<Vec<f64>, CliError> {
        let out = run(&model, &solver, &exact_style(schedule, max_outer, &inst.x_star))?;
        Ok(out.outer.iter().map(|r| r.err.unwrap_or(f64::NAN)).collect())
    };
    let std = errs(Schedule::Standard)?;
    let acc = errs(Schedule::Accelerated)?;
    Ok(std
        .iter()
        .zip(&acc)
        .enumerate()
        .map(|(j, (s, a))| (j + 1, *s, *a))
        .collect())
}

/// Error along the cumulative inner iteration count, for each strategy.
#[derive(Clone, Debug)]
pub struct Curve {
    pub name: String,
    /// `(cost, err)` pairs; the cost is iterations or SVT calls.
    pub points: Vec<(u64, f64)>,
}

impl Curve {
    /// First cost at which the error drops to `tol`.
    pub fn cost_to_reach(&self, tol: f64) -> Option<u64> {
        self.points.iter().find(|(_, e)| *e <= tol).map(|(c, _)| *c)
    }
}

fn concat(traces: &[Trace], cost: impl Fn(&conefo::solvers::TraceRow) -> u64) -> Vec<(u64, f64)> {
    let mut base = 0;
    let mut out = Vec::new();
    for t in traces {
        for r in &t.rows {
            out.push((base + cost(r), r.err.unwrap_or(f64::NAN)));
        }
        base += t.last().map(&cost).unwrap_or(0);
    }
    out
}

/// Fixed small smoothing against standard and accelerated continuation at a
/// larger `mu`, on an unsmoothed Dantzig instance.
pub fn smoothing_strategies(inst: &ExactInstance, mu: f64, budget: usize) -> Result<Vec<Curve>, CliError> {
    let mut curves = Vec::new();
    let cd = build(&inst.model_spec(mu / 100.0))?;
    let opts = SolverOptions {
        max_iters: budget,
        tol: 0.0,
        reference: Some(inst.x_star.clone()),
        ..Default::default()
    };
    let sol = solve(&cd, &opts, None)?;
    curves.push(Curve {
        name: "fixed".into(),
        points: concat(&[sol.trace], |r| r.iter as u64),
    });
    let model = conefo::models::Model::new(&inst.model_spec(mu))?;
    for (name, schedule) in [("standard", Schedule::Standard), ("accelerated", Schedule::Accelerated)] {
        let co = ContinuationOptions {
            schedule,
            reference: Some(inst.x_star.clone()),
            ..Default::default()
        };
        let out = run(&model, &SolverOptions::default(), &co)?;
        curves.push(Curve {
            name: name.into(),
            points: concat(&out.inner, |r| r.iter as u64),
        });
    }
    Ok(curves)
}

/// `1/2 sum_i q_i (z_i - c_i)^2`, a strongly convex quadratic.
#[derive(Clone, Debug)]
pub struct DiagQuadratic {
    pub q: Vec<f64>,
    pub c: Vec<f64>,
}

impl DiagQuadratic {
    /// Curvatures spaced evenly over `[m, l]` and a Gaussian minimizer.
    pub fn new(n: usize, m: f64, l: f64, seed: u64) -> Self {
        let q = (0..n).map(|k| m + (l - m) * k as f64 / (n - 1) as f64).collect();
        DiagQuadratic {
            q,
            c: gaussian_matrix(1, n, seed),
        }
    }
}

impl Composite for DiagQuadratic {
    fn dim(&self) -> usize {
        self.q.len()
    }

    fn value(&self, z: &[f64]) -> f64 {
        z.iter()
            .zip(&self.c)
            .zip(&self.q)
            .map(|((z, c), q)| 0.5 * q * (z - c) * (z - c))
            .sum()
    }

    fn value_grad(&self, z: &[f64]) -> (f64, Vec<f64>) {
        let g = z.iter().zip(&self.c).zip(&self.q).map(|((z, c), q)| q * (z - c)).collect();
        (self.value(z), g)
    }

    fn nonsmooth(&self) -> &dyn NonsmoothFn {
        &Zero
    }
}

/// GRA, plain AT and AT restarted every 100 iterations, all with
/// backtracking; errors are relative to the minimizer.
pub fn strong_convexity_runs(p: &DiagQuadratic, iters: usize) -> Result<Vec<Curve>, CliError> {
    let runs = [
        ("gra", Variant::Gra, None),
        ("at", Variant::At, None),
        ("at_restart100", Variant::At, Some(100)),
    ];
    runs.iter()
        .map(|&(name, variant, restart)| {
            let opts = SolverOptions {
                variant,
                max_iters: iters,
                tol: 0.0,
                restart,
                reference: Some(p.c.clone()),
                ..Default::default()
            };
            let z0 = vec![0.0; p.dim()];
            let m = minimize(p, &opts, &z0)?;
            Ok(Curve {
                name: name.into(),
                points: concat(&[m.trace], |r| r.iter as u64),
            })
        })
        .collect()
}

/// Noisy completion of a `50 x 45` rank-20 matrix from 67% of its entries at
/// 30 dB SNR, as a nuclear-norm LASSO.
pub fn completion_spec(seed: u64, mu: f64) -> ModelSpec {
    let (rows, cols, rank) = (50, 45, 20);
    // Unit-variance factors, as with the usual randn product construction.
    let u: Vec<f64> = gaussian_matrix(rows, rank, seed).iter().map(|v| v * (rows as f64).sqrt()).collect();
    let v: Vec<f64> = gaussian_matrix(cols, rank, seed + 1).iter().map(|v| v * (cols as f64).sqrt()).collect();
    let mut m = vec![0.0; rows * cols];
    for i in 0..rows {
        for j in 0..cols {
            m[i + j * rows] = (0..rank).map(|k| u[i * rank + k] * v[j * rank + k]).sum();
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed + 2);
    let count = (0.67 * (rows * cols) as f64).round() as usize;
    let mut idx = sample(&mut rng, rows * cols, count).into_vec();
    idx.sort_unstable();
    let entries: Vec<(usize, usize)> = idx.iter().map(|&k| (k % rows, k / rows)).collect();
    let clean: Vec<f64> = idx.iter().map(|&k| m[k]).collect();
    let noise = gaussian_matrix(1, count, seed + 3);
    let scale = conefo::linops::space::norm(&clean) * 10f64.powf(-30.0 / 20.0) / conefo::linops::space::norm(&noise);
    let y: Vec<f64> = clean.iter().zip(&noise).map(|(c, e)| c + scale * e).collect();
    let op = OperatorSpec::SubsampleMatrix { rows, cols, entries };
    let mut spec = ModelSpec::new(ModelKind::NuclearLasso, op, y, mu);
    spec.epsilon = Some(scale * conefo::linops::space::norm(&noise));
    spec
}

/// High-accuracy solution of the completion model by recentered
/// continuation with tight inner solves.
pub fn completion_reference(spec: &ModelSpec) -> Result<Vec<f64>, CliError> {
    let model = conefo::models::Model::new(spec)?;
    let solver = SolverOptions {
        step: StepPolicy::Fixed { lipschitz: 1.0 / spec.mu },
        max_iters: 200_000,
        ..Default::default()
    };
    let co = ContinuationOptions {
        schedule: Schedule::Accelerated,
        final_tol: 1e-13,
        max_outer: 2000,
        outer_tol: 1e-12,
        ..Default::default()
    };
    Ok(run(&model, &solver, &co)?.x.data)
}

/// Error against SVT calls for GRA and AT at `mu = 5e-4` and AT with
/// accelerated continuation at `mu = 1e-2`. The sampling operator has unit
/// norm, so the fixed step `mu` is exact.
pub fn completion_runs(seed: u64, reference: &[f64], iters: usize) -> Result<Vec<Curve>, CliError> {
    let mut curves = Vec::new();
    for (name, variant) in [("gra", Variant::Gra), ("at", Variant::At)] {
        let spec = completion_spec(seed, 5e-4);
        let cd = build(&spec)?;
        let opts = SolverOptions {
            variant,
            step: StepPolicy::Fixed { lipschitz: 1.0 / spec.mu },
            max_iters: iters,
            tol: 0.0,
            reference: Some(reference.to_vec()),
            ..Default::default()
        };
        let sol = solve(&cd, &opts, None)?;
        curves.push(Curve {
            name: name.into(),
            points: concat(&[sol.trace], |r| r.primal_prox),
        });
    }
    let spec = completion_spec(seed, 1e-2);
    let model = conefo::models::Model::new(&spec)?;
    let solver = SolverOptions {
        step: StepPolicy::Fixed { lipschitz: 1.0 / spec.mu },
        ..Default::default()
    };
    let co = ContinuationOptions {
        schedule: Schedule::Accelerated,
        max_outer: 50,
        reference: Some(reference.to_vec()),
        ..Default::default()
    };
    let out = run(&model, &solver, &co)?;
    let mut points = concat(&out.inner, |r| r.primal_prox);
    points.truncate(iters + out.inner.len());
    curves.push(Curve {
        name: "at_accel_cont".into(),
        points,
    });
    Ok(curves)
}

fn curves_csv(curves: &[Curve], cost: &str) -> String {
    let mut s = format!("strategy,{cost},err\n");
    for c in curves {
        for (k, e) in &c.points {
            s.push_str(&format!("{},{},{}\n", c.name, k, fmt_f64(*e)));
        }
    }
    s
}

fn runs_csv(runs: &[VariantRun]) -> String {
    let mut s = String::from("variant,step,restart,iter,ops,phi,err\n");
    for r in runs {
        let step = if r.backtracking { "backtracking" } else { "fixed" };
        let restart = r.restart.map(|k| k.to_string()).unwrap_or_else(|| "none".into());
        for row in &r.trace.rows {
            s.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                r.variant.name(),
                step,
                restart,
                row.iter,
                row.fwd + row.adj,
                fmt_f64(row.phi),
                row.err.map(fmt_f64).unwrap_or_default()
            ));
        }
    }
    s
}

/// CSV files behind the experiment `id`.
pub fn reproduce(id: &str, seed: u64) -> Result<Vec<(String, String)>, CliError> {
    let file = |body: String| Ok(vec![(format!("{id}.csv"), body)]);
    match id {
        "fig2" => {
            let inst = exact_penalty_instance(seed)?;
            let mut s = String::from("mu,err\n");
            for (mu, e) in mu_sweep(&inst, &logspace(1e-4, 10.0, 21))? {
                s.push_str(&format!("{},{}\n", fmt_f64(mu), fmt_f64(e)));
            }
            file(s)
        }
        "fig3" => file(runs_csv(&variant_comparison(&smoothed_dantzig_instance(seed)?, 2000)?)),
        "fig4" => {
            let inst = lasso_instance(seed)?;
            let mut s = String::from("j,err_standard,err_accelerated\n");
            for (j, a, b) in continuation_comparison(&inst, CONTINUATION_MU, 50)? {
                s.push_str(&format!("{j},{},{}\n", fmt_f64(a), fmt_f64(b)));
            }
            file(s)
        }
        "fig5" => file(curves_csv(
            &smoothing_strategies(&exact_penalty_instance(seed)?, 1.0, 20_000)?,
            "iter",
        )),
        "fig6" => file(curves_csv(
            &strong_convexity_runs(&DiagQuadratic::new(100, 0.07, 59.1, seed), 3000)?,
            "iter",
        )),
        "fig7" => {
            let restarts = [None, Some(10), Some(50), Some(100), Some(500)];
            file(runs_csv(&restart_comparison(&smoothed_dantzig_instance(seed)?, &restarts, 2000)?))
        }
        "mc_small" => {
            let reference = completion_reference(&completion_spec(seed, 1e-2))?;
            file(curves_csv(&completion_runs(seed, &reference, 500)?, "svds"))
        }
        other => Err(CliError::UnknownFigure(other.to_string())),
    }
}
