//! Test problems with exactly known solutions.
//!
//! A high-accuracy solve of the original problem gives an approximate
//! primal-dual pair `(x, lambda)`. Rescaling the columns of `A` by a diagonal
//! `D` close to the identity, and adjusting the data, turns the pair into an
//! exact optimum of the perturbed problem. The certificate is then checked by
//! recomputing every optimality residual from the stored data.

use nalgebra::{DMatrix, DVector};
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::continuation::{run, ContinuationError, ContinuationOptions};
use crate::linops::space::{dot, norm, norm_inf};
use crate::models::{Model, ModelError, ModelKind, ModelSpec, OperatorSpec, SCHEMA};
use crate::prox::st;
use crate::solvers::SolverOptions;

/// Entries of `A^T lambda` at least this close to 1 off the support are
/// pulled inside the bound.
pub const OFF_SUPPORT_MARGIN: f64 = 1e-8;
/// Target value for `|d_i (A^T lambda)_i|` after shrinking.
pub const SHRINK: f64 = 0.99;

#[derive(Debug, thiserror::Error)]
pub enum TestgenError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Solve(#[from] ContinuationError),
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("degenerate instance: {0}")]
    Degenerate(String),
    #[error("certificate check failed: {0}")]
    Certificate(String),
}

/// `n`-vector with `s` nonzeros whose magnitudes are log-uniform over
/// `dynamic_range_db` decibels and whose signs are random.
///
/// The largest magnitude is 1 and, for `s >= 2`, the smallest is exactly
/// `10^(-dB/20)`.
pub fn gen_sparse_signal(n: usize, s: usize, dynamic_range_db: f64, seed: u64) -> Result<Vec<f64>, TestgenError> {
    if s > n {
        return Err(TestgenError::Invalid(format!("sparsity {s} exceeds length {n}")));
    }
    if !(dynamic_range_db >= 0.0) {
        return Err(TestgenError::Invalid("dynamic range must be nonnegative".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x = vec![0.0; n];
    for (k, i) in sample(&mut rng, n, s).into_iter().enumerate() {
        let u = match k {
            0 => 0.0,
            1 => 1.0,
            _ => rng.random::<f64>(),
        };
        let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
        x[i] = sign * 10f64.powf(-dynamic_range_db / 20.0 * u);
    }
    Ok(x)
}

/// Row-major `m x n` matrix with i.i.d. `N(0, 1/m)` entries.
pub fn gaussian_matrix(m: usize, n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let s = 1.0 / (m.max(1) as f64).sqrt();
    (0..m * n).map(|_| s * rng.sample::<f64, _>(StandardNormal)).collect()
}

/// Calls `f` with `seed, seed + 1, ...` until it succeeds, giving up after
/// `attempts` degenerate draws.
pub fn with_retries<T>(
    seed: u64,
    attempts: usize,
    mut f: impl FnMut(u64) -> Result<T, TestgenError>,
) -> Result<T, TestgenError> {
    let mut last = TestgenError::Invalid("no attempts".into());
    for k in 0..attempts as u64 {
        match f(seed.wrapping_add(k)) {
            Err(e @ TestgenError::Degenerate(_)) => last = e,
            r => return r,
        }
    }
    Err(last)
}

/// Effort spent on the high-accuracy solve.
#[derive(Clone, Debug, PartialEq)]
pub struct Budget {
    /// Smoothing used by the recentered solve; `None` picks one from the data.
    pub mu: Option<f64>,
    pub max_outer: usize,
    pub inner_iters: usize,
    pub final_tol: f64,
}

impl Default for Budget {
    fn default() -> Self {
        Budget {
            mu: None,
            max_outer: 200,
            inner_iters: 20_000,
            final_tol: 1e-12,
        }
    }
}

/// Problem family and parameters of an instance.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Problem {
    BasisPursuit,
    Lasso { epsilon: f64 },
    /// `mu = 0` certifies the unsmoothed problem, `mu > 0` the smoothed one
    /// with center 0.
    Dantzig { delta: f64, mu: f64 },
}

/// Optimality residuals of a candidate pair. Every entry is zero at an exact
/// optimum.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KktReport {
    /// Violation of the primal constraint.
    pub primal: f64,
    /// Violation of dual feasibility (the dual cone or the subgradient bound).
    pub dual: f64,
    /// Mismatch between the primal point and the subgradient of the objective.
    pub stationarity: f64,
    /// Mismatch where the dual variable is active.
    pub complementarity: f64,
    /// `|primal - dual| / max(1, |primal|)`.
    pub gap: f64,
    /// Largest `|(A^T lambda)_i|` (or its Dantzig analog) off the support.
    pub off_support: f64,
}

impl KktReport {
    pub fn max_residual(&self) -> f64 {
        [self.primal, self.dual, self.stationarity, self.complementarity, self.gap]
            .into_iter()
            .fold(0.0, f64::max)
    }
}

/// Problem data bundled with a certified optimal pair.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExactInstance {
    pub schema: String,
    pub problem: Problem,
    pub rows: usize,
    pub cols: usize,
    /// Perturbed operator `A D`, row-major.
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    /// Column scaling applied to the original operator.
    pub d: Vec<f64>,
    pub x_star: Vec<f64>,
    pub lambda_star: Vec<f64>,
    pub report: KktReport,
}

impl ExactInstance {
    /// Recomputes the report from the stored data.
    pub fn certify(&self) -> KktReport {
        let a = DMatrix::from_row_slice(self.rows, self.cols, &self.a);
        kkt(&self.problem, &a, &self.b, &self.x_star, &self.lambda_star)
    }

    /// True when a fresh certification reproduces the stored report exactly.
    pub fn recertifies(&self) -> bool {
        let r = self.certify();
        [
            (r.primal, self.report.primal),
            (r.dual, self.report.dual),
            (r.stationarity, self.report.stationarity),
            (r.complementarity, self.report.complementarity),
            (r.gap, self.report.gap),
            (r.off_support, self.report.off_support),
        ]
        .iter()
        .all(|(u, v)| u.to_bits() == v.to_bits())
    }

    /// Model description of the perturbed problem at smoothing `mu`.
    pub fn model_spec(&self, mu: f64) -> ModelSpec {
        let op = OperatorSpec::Dense {
            rows: self.rows,
            cols: self.cols,
            data: self.a.clone(),
        };
        let kind = match self.problem {
            Problem::BasisPursuit => ModelKind::BasisPursuit,
            Problem::Lasso { .. } => ModelKind::Lasso,
            Problem::Dantzig { .. } => ModelKind::Dantzig,
        };
        let mut spec = ModelSpec::new(kind, op, self.b.clone(), mu);
        match self.problem {
            Problem::Lasso { epsilon } => spec.epsilon = Some(epsilon),
            Problem::Dantzig { delta, .. } => spec.delta = Some(delta),
            Problem::BasisPursuit => {}
        }
        spec
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("instance serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, TestgenError> {
        let inst: ExactInstance =
            serde_json::from_str(text).map_err(|e| TestgenError::Invalid(e.to_string()))?;
        if inst.schema != SCHEMA {
            return Err(TestgenError::Invalid(format!("unsupported schema {:?}", inst.schema)));
        }
        if inst.a.len() != inst.rows * inst.cols || inst.b.len() != inst.rows || inst.x_star.len() != inst.cols {
            return Err(TestgenError::Invalid("inconsistent dimensions".into()));
        }
        Ok(inst)
    }
}

fn sign(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

fn rel(v: f64, scale: f64) -> f64 {
    v / scale.max(1.0)
}

/// Residuals of the subgradient condition `c in d||x||_1` (or, when
/// `mu > 0`, `x = ST(c, 1)/mu`), returned as (stationarity, dual, off).
fn subgradient_residuals(x: &[f64], c: &[f64], mu: f64) -> (f64, f64, f64) {
    let (mut stat, mut dual, mut off) = (0.0f64, 0.0f64, 0.0f64);
    for (&xi, &ci) in x.iter().zip(c) {
        if mu > 0.0 {
            stat = stat.max((xi - st(ci, 1.0) / mu).abs());
        } else if xi != 0.0 {
            stat = stat.max((ci - sign(xi)).abs());
        } else {
            dual = dual.max(ci.abs() - 1.0);
        }
        if xi == 0.0 {
            off = off.max(ci.abs());
        }
    }
    (stat, dual.max(0.0), off)
}

fn kkt(problem: &Problem, a: &DMatrix<f64>, b: &[f64], x: &[f64], lambda: &[f64]) -> KktReport {
    let xv = DVector::from_column_slice(x);
    let lv = DVector::from_column_slice(lambda);
    let bv = DVector::from_column_slice(b);
    let l1 = x.iter().map(|v| v.abs()).sum::<f64>();
    let r = &bv - a * &xv;
    match *problem {
        Problem::BasisPursuit | Problem::Lasso { .. } => {
            let c = a.tr_mul(&lv);
            let (stationarity, dual, off_support) = subgradient_residuals(x, c.as_slice(), 0.0);
            let nb = norm(b);
            let (primal, complementarity, dual_value) = match *problem {
                Problem::Lasso { epsilon } => {
                    let nl = lv.norm();
                    let nr = r.norm();
                    // r must point along lambda with length epsilon.
                    let align = if nl > 0.0 { (&r - &lv * (epsilon / nl)).norm() } else { nr };
                    (rel((nr - epsilon).max(0.0), nb), rel(align, nb), bv.dot(&lv) - epsilon * nl)
                }
                _ => (rel(r.norm(), nb), 0.0, bv.dot(&lv)),
            };
            KktReport {
                primal,
                dual,
                stationarity,
                complementarity,
                gap: rel((l1 - dual_value).abs(), l1),
                off_support,
            }
        }
        Problem::Dantzig { delta, mu } => {
            let ata_l = a.tr_mul(&(a * &lv));
            let (stationarity, dual, off_support) = subgradient_residuals(x, ata_l.as_slice(), mu);
            let atr = a.tr_mul(&r);
            let scale = delta.max(1.0);
            let primal = atr.iter().fold(0.0f64, |m, v| m.max(v.abs() - delta)).max(0.0) / scale;
            let complementarity = lambda
                .iter()
                .zip(atr.iter())
                .filter(|(l, _)| **l != 0.0)
                .fold(0.0f64, |m, (l, v)| m.max((v - delta * sign(*l)).abs()))
                / scale;
            // Conjugate of |.|_1 + mu/2 ||.||^2 at A^T A lambda, zero when mu = 0.
            let conj = if mu > 0.0 {
                ata_l.iter().map(|c| (c.abs() - 1.0).max(0.0).powi(2)).sum::<f64>() / (2.0 * mu)
            } else {
                0.0
            };
            let primal_value = l1 + 0.5 * mu * dot(x, x);
            let aty = a.tr_mul(&bv);
            let dual_value = aty.dot(&lv) - delta * lambda.iter().map(|v| v.abs()).sum::<f64>() - conj;
            KktReport {
                primal,
                dual,
                stationarity,
                complementarity,
                gap: rel((primal_value - dual_value).abs(), primal_value),
                off_support,
            }
        }
    }
}

/// Approximate primal-dual pair from a recentered (or fixed-center) solve.
fn high_accuracy_solve(
    spec: &ModelSpec,
    fixed_center: bool,
    budget: &Budget,
) -> Result<(Vec<f64>, Vec<f64>), TestgenError> {
    let model = Model::new(spec)?;
    let solver = SolverOptions {
        max_iters: budget.inner_iters,
        ..Default::default()
    };
    let opts = ContinuationOptions {
        fixed_center,
        max_outer: budget.max_outer,
        final_tol: budget.final_tol,
        outer_tol: 1e-14,
        ..Default::default()
    };
    let out = run(&model, &solver, &opts)?;
    let lambda = out.z.data.iter().map(|v| -v).collect();
    Ok((out.x.data, lambda))
}

/// Smoothing for the recentered solve: the scale at which one outer step
/// moves the iterate by roughly the size of the signal.
fn solve_mu(budget: &Budget, a: &DMatrix<f64>, b: &[f64]) -> f64 {
    budget.mu.unwrap_or_else(|| {
        let atb = a.tr_mul(&DVector::from_column_slice(b));
        let s = norm_inf(atb.as_slice());
        if s > 0.0 {
            1.0 / s
        } else {
            1.0
        }
    })
}

fn dense_spec(kind: ModelKind, a: &DMatrix<f64>, b: &[f64], mu: f64) -> ModelSpec {
    let data = a.transpose().as_slice().to_vec();
    let op = OperatorSpec::Dense {
        rows: a.nrows(),
        cols: a.ncols(),
        data,
    };
    ModelSpec::new(kind, op, b.to_vec(), mu)
}

fn check_input(rows: usize, cols: usize, a: &[f64], x: &[f64]) -> Result<DMatrix<f64>, TestgenError> {
    if a.len() != rows * cols || x.len() != cols {
        return Err(TestgenError::Invalid("matrix and signal sizes disagree".into()));
    }
    Ok(DMatrix::from_row_slice(rows, cols, a))
}

/// Diagonal that makes `d_i c_i = sign(x_i)` on the support of `x` and keeps
/// `|d_i c_i| < 1 - margin` elsewhere.
fn support_scaling(x: &[f64], c: &[f64], rows: usize) -> Result<Vec<f64>, TestgenError> {
    let support = x.iter().filter(|v| **v != 0.0).count();
    if support > rows {
        return Err(TestgenError::Degenerate(format!("support {support} exceeds {rows} rows")));
    }
    x.iter()
        .zip(c)
        .map(|(&xi, &ci)| {
            if xi != 0.0 {
                if ci == 0.0 || sign(ci) != sign(xi) {
                    return Err(TestgenError::Degenerate("dual does not match the primal sign".into()));
                }
                Ok(1.0 / ci.abs())
            } else if ci.abs() >= 1.0 - OFF_SUPPORT_MARGIN {
                Ok(SHRINK / ci.abs())
            } else {
                Ok(1.0)
            }
        })
        .collect()
}

fn scale_columns(a: &DMatrix<f64>, d: &[f64]) -> DMatrix<f64> {
    let mut out = a.clone();
    for (j, dj) in d.iter().enumerate() {
        out.column_mut(j).scale_mut(*dj);
    }
    out
}

fn finish(
    problem: Problem,
    a: DMatrix<f64>,
    b: Vec<f64>,
    d: Vec<f64>,
    x_star: Vec<f64>,
    lambda_star: Vec<f64>,
) -> ExactInstance {
    let report = kkt(&problem, &a, &b, &x_star, &lambda_star);
    ExactInstance {
        schema: SCHEMA.to_string(),
        problem,
        rows: a.nrows(),
        cols: a.ncols(),
        a: a.transpose().as_slice().to_vec(),
        b,
        d,
        x_star,
        lambda_star,
        report,
    }
}

/// Basis pursuit instance with data `A x_true`; `a` is row-major.
pub fn gen_basis_pursuit_exact(
    rows: usize,
    cols: usize,
    a: &[f64],
    x_true: &[f64],
    budget: &Budget,
) -> Result<ExactInstance, TestgenError> {
    let a = check_input(rows, cols, a, x_true)?;
    let b: Vec<f64> = (&a * DVector::from_column_slice(x_true)).as_slice().to_vec();
    let mu = solve_mu(budget, &a, &b);
    let (x_hat, lambda) = high_accuracy_solve(&dense_spec(ModelKind::BasisPursuit, &a, &b, mu), false, budget)?;
    let c = a.tr_mul(&DVector::from_column_slice(&lambda));
    let d = support_scaling(&x_hat, c.as_slice(), rows)?;
    let at = scale_columns(&a, &d);

    // Clean the primal: least squares on the support columns.
    let support: Vec<usize> = (0..cols).filter(|&i| x_hat[i] != 0.0).collect();
    let mut x_star = vec![0.0; cols];
    if !support.is_empty() {
        let sub = at.select_columns(&support);
        let svd = sub.clone().svd(true, true);
        let smax = svd.singular_values.max();
        let smin = svd.singular_values.min();
        if !(smin > 1e-10 * smax) {
            return Err(TestgenError::Degenerate("support columns are rank deficient".into()));
        }
        let xt = svd
            .solve(&DVector::from_column_slice(&b), 0.0)
            .map_err(|e| TestgenError::Degenerate(e.to_string()))?;
        for (k, &i) in support.iter().enumerate() {
            if sign(xt[k]) != sign(x_hat[i]) {
                return Err(TestgenError::Degenerate("cleaning changed a sign".into()));
            }
            x_star[i] = xt[k];
        }
    }
    // Data consistent with the cleaned primal to rounding.
    let b_star = (&at * DVector::from_column_slice(&x_star)).as_slice().to_vec();
    Ok(finish(Problem::BasisPursuit, at, b_star, d, x_star, lambda))
}

/// LASSO instance with residual bound `epsilon` built around `A x_true`.
pub fn gen_lasso_exact(
    rows: usize,
    cols: usize,
    a: &[f64],
    x_true: &[f64],
    epsilon: f64,
    budget: &Budget,
) -> Result<ExactInstance, TestgenError> {
    if !(epsilon > 0.0) {
        return Err(TestgenError::Invalid("epsilon must be positive".into()));
    }
    let a = check_input(rows, cols, a, x_true)?;
    let b: Vec<f64> = (&a * DVector::from_column_slice(x_true)).as_slice().to_vec();
    let mu = solve_mu(budget, &a, &b);
    let mut spec = dense_spec(ModelKind::Lasso, &a, &b, mu);
    spec.epsilon = Some(epsilon);
    let (x_hat, lambda) = high_accuracy_solve(&spec, false, budget)?;
    let nl = norm(&lambda);
    if nl == 0.0 {
        return Err(TestgenError::Degenerate("dual solution is zero".into()));
    }
    let c = a.tr_mul(&DVector::from_column_slice(&lambda));
    let d = support_scaling(&x_hat, c.as_slice(), rows)?;
    let at = scale_columns(&a, &d);
    let x_star: Vec<f64> = x_hat.iter().zip(&d).map(|(x, d)| x / d).collect();
    let ax = &at * DVector::from_column_slice(&x_star);
    let b_star: Vec<f64> = ax.iter().zip(&lambda).map(|(v, l)| v + epsilon * l / nl).collect();
    Ok(finish(Problem::Lasso { epsilon }, at, b_star, d, x_star, lambda))
}

/// Dantzig selector instance with bound `delta`.
///
/// With `mu = 0` the certificate is for the unsmoothed problem, found by a
/// recentered solve at fixed smoothing. With `mu > 0` it is for the smoothed
/// problem with center 0.
pub fn gen_dantzig_exact(
    rows: usize,
    cols: usize,
    a: &[f64],
    x_true: &[f64],
    delta: f64,
    mu: f64,
    budget: &Budget,
) -> Result<ExactInstance, TestgenError> {
    if !(delta >= 0.0) || !(mu >= 0.0) {
        return Err(TestgenError::Invalid("delta and mu must be nonnegative".into()));
    }
    let a = check_input(rows, cols, a, x_true)?;
    let bv = &a * DVector::from_column_slice(x_true);
    let b = bv.as_slice().to_vec();
    let (solve_at, fixed) = if mu > 0.0 { (mu, true) } else { (solve_mu(budget, &a, &b), false) };
    let mut spec = dense_spec(ModelKind::Dantzig, &a, &b, solve_at);
    spec.delta = Some(delta);
    let (x_hat, lambda_hat) = high_accuracy_solve(&spec, fixed, budget)?;

    let g = a.tr_mul(&(&a * DVector::from_column_slice(&lambda_hat)));
    let support = x_hat.iter().filter(|v| **v != 0.0).count();
    if support > rows {
        return Err(TestgenError::Degenerate(format!("support {support} exceeds {rows} rows")));
    }
    // On the support d solves |g| d^2 - d - mu |x| = 0, so that
    // x / d = ST(d g d, 1) / mu with lambda* = lambda / d.
    let mut d = Vec::with_capacity(cols);
    for (&xi, &gi) in x_hat.iter().zip(g.iter()) {
        d.push(if xi != 0.0 {
            if gi == 0.0 || sign(gi) != sign(xi) {
                return Err(TestgenError::Degenerate("dual does not match the primal sign".into()));
            }
            (1.0 + (1.0 + 4.0 * gi.abs() * mu * xi.abs()).sqrt()) / (2.0 * gi.abs())
        } else if gi.abs() >= 1.0 - OFF_SUPPORT_MARGIN {
            SHRINK / gi.abs()
        } else {
            1.0
        });
    }

    // Residual e with (A^T e)_i = delta sign(lambda_i) / d_i where lambda is
    // active: a minimum-norm correction of the current residual.
    let active: Vec<usize> = (0..cols).filter(|&i| lambda_hat[i] != 0.0).collect();
    let ax = &a * DVector::from_column_slice(&x_hat);
    let mut e = &bv - &ax;
    if !active.is_empty() {
        if active.len() > rows {
            return Err(TestgenError::Degenerate("too many active constraints".into()));
        }
        let a_s = a.select_columns(&active);
        let c_s = DVector::from_iterator(
            active.len(),
            active.iter().map(|&i| delta * sign(lambda_hat[i]) / d[i]),
        );
        let chol = a_s
            .tr_mul(&a_s)
            .cholesky()
            .ok_or_else(|| TestgenError::Degenerate("active columns are rank deficient".into()))?;
        let w = chol.solve(&(c_s - a_s.tr_mul(&e)));
        e += &a_s * w;
    }
    let ate = a.tr_mul(&e);
    for i in 0..cols {
        if lambda_hat[i] != 0.0 {
            continue;
        }
        let v = d[i] * ate[i].abs();
        if v > delta {
            if x_hat[i] != 0.0 {
                return Err(TestgenError::Degenerate("residual bound fails on the support".into()));
            }
            d[i] *= SHRINK * delta / v;
        }
    }

    let at = scale_columns(&a, &d);
    let x_star: Vec<f64> = x_hat.iter().zip(&d).map(|(x, d)| x / d).collect();
    let lambda_star: Vec<f64> = lambda_hat.iter().zip(&d).map(|(l, d)| l / d).collect();
    let b_star = (ax + e).as_slice().to_vec();
    Ok(finish(Problem::Dantzig { delta, mu }, at, b_star, d, x_star, lambda_star))
}
