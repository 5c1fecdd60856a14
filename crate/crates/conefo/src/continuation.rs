//! Outer loops that re-solve the smoothed problem with an updated center.
//!
//! Each outer step computes `X_{j+1} = argmin f(x) + mu_j/2 ||x - Y_j||^2`
//! over the feasible set, which is a proximal-point step on `f`. The standard
//! schedule sets `Y_{j+1} = X_{j+1}` (or keeps `Y` fixed); the accelerated
//! schedule extrapolates
//!
//! ```text
//! Y_{j+1} = X_{j+1} + j/(j+3) (X_{j+1} - X_j),   X_0 = Y_0.
//! ```

use serde::{Deserialize, Serialize};

use crate::linops::space::{dist, norm};
use crate::linops::{Element, OpCounts};
use crate::models::{Model, ModelError};
use crate::smoothing::relative_error;
use crate::solvers::{
    fmt_f64, minimize, minimize_at_cached, SolveError, SolverOptions, StepPolicy, Trace, Variant,
};

#[derive(Debug, thiserror::Error)]
pub enum ContinuationError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error("invalid continuation options: {0}")]
    Invalid(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Schedule {
    Standard,
    Accelerated,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ContinuationOptions {
    pub schedule: Schedule,
    /// Standard schedule only: keep `Y_j = Y_0` instead of re-centering.
    pub fixed_center: bool,
    /// `mu_{j+1} = mu_factor mu_j`; `1` keeps `mu` fixed.
    pub mu_factor: f64,
    /// Inner tolerance `max(tol0 tol_decay^{-j}, final_tol)`.
    pub tol0: f64,
    pub tol_decay: f64,
    pub final_tol: f64,
    pub max_outer: usize,
    /// Stop when `||X_{j+1} - X_j|| <= outer_tol max(1, ||X_j||)`.
    pub outer_tol: f64,
    pub warm_start: bool,
    /// Use the cached `AT` implementation when the variant is `AT`.
    pub cached: bool,
    pub reference: Option<Vec<f64>>,
}

impl Default for ContinuationOptions {
    fn default() -> Self {
        ContinuationOptions {
            schedule: Schedule::Standard,
            fixed_center: false,
            mu_factor: 1.0,
            tol0: 1e-3,
            tol_decay: 1.5,
            final_tol: 1e-10,
            max_outer: 50,
            outer_tol: 1e-8,
            warm_start: true,
            cached: true,
            reference: None,
        }
    }
}

impl ContinuationOptions {
    pub fn accelerated() -> Self {
        ContinuationOptions {
            schedule: Schedule::Accelerated,
            ..Default::default()
        }
    }

    pub fn inner_tol(&self, j: usize) -> f64 {
        (self.tol0 * self.tol_decay.powi(-(j as i32))).max(self.final_tol)
    }

    fn validate(&self) -> Result<(), ContinuationError> {
        if !(self.mu_factor > 0.0 && self.mu_factor <= 1.0) {
            return Err(ContinuationError::Invalid("mu factor must lie in (0, 1]".into()));
        }
        if self.max_outer == 0 {
            return Err(ContinuationError::Invalid("need at least one outer step".into()));
        }
        if !(self.tol_decay >= 1.0) {
            return Err(ContinuationError::Invalid("tolerance decay must be at least 1".into()));
        }
        Ok(())
    }
}

/// Inputs to one inner solve.
#[derive(Clone, Copy, Debug)]
pub struct OuterStep<'a> {
    pub j: usize,
    pub mu: f64,
    pub center: &'a [f64],
    pub tol: f64,
}

/// What an inner solve reports back.
#[derive(Clone, Debug)]
pub struct InnerResult {
    pub x: Vec<f64>,
    /// Optimal value of the inner problem (the Moreau envelope at the center).
    pub envelope: f64,
    pub iterations: usize,
    pub counts: OpCounts,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OuterRow {
    pub j: usize,
    pub mu: f64,
    pub inner_iters: usize,
    /// Cumulative forward applications over all inner solves.
    pub fwd: u64,
    pub adj: u64,
    pub h_value: f64,
    pub err: Option<f64>,
}

pub const OUTER_HEADER: &str = "j,mu,inner_iters,fwd,adj,h_value,err";

pub fn outer_csv(rows: &[OuterRow]) -> String {
    let mut out = String::from(OUTER_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            r.j,
            fmt_f64(r.mu),
            r.inner_iters,
            r.fwd,
            r.adj,
            fmt_f64(r.h_value),
            r.err.map(fmt_f64).unwrap_or_default()
        ));
    }
    out
}

#[derive(Clone, Debug)]
pub struct OuterResult {
    pub x: Vec<f64>,
    pub rows: Vec<OuterRow>,
    pub converged: bool,
}

/// Runs the outer schedule around an arbitrary inner solver.
pub fn outer_loop<E>(
    y0: &[f64],
    mu0: f64,
    opts: &ContinuationOptions,
    mut inner: impl FnMut(OuterStep<'_>) -> Result<InnerResult, E>,
) -> Result<OuterResult, E>
where
    E: From<ContinuationError>,
{
    opts.validate()?;
    if !(mu0 > 0.0) {
        return Err(ContinuationError::Invalid("mu must be positive".into()).into());
    }
    let mut x_prev = y0.to_vec();
    let mut center = y0.to_vec();
    let mut mu = mu0;
    let mut total = OpCounts::default();
    let mut rows = Vec::new();
    let mut converged = false;
    for j in 0..opts.max_outer {
        let r = inner(OuterStep {
            j,
            mu,
            center: &center,
            tol: opts.inner_tol(j),
        })?;
        total = total + r.counts;
        rows.push(OuterRow {
            j: j + 1,
            mu,
            inner_iters: r.iterations,
            fwd: total.forward,
            adj: total.adjoint,
            h_value: r.envelope,
            err: opts.reference.as_deref().map(|re| relative_error(&r.x, re)),
        });
        let step = dist(&r.x, &x_prev);
        let scale = norm(&x_prev).max(1.0);
        center = match opts.schedule {
            Schedule::Standard if opts.fixed_center => center,
            Schedule::Standard => r.x.clone(),
            Schedule::Accelerated => {
                let c = j as f64 / (j as f64 + 3.0);
                r.x.iter().zip(&x_prev).map(|(a, b)| a + c * (a - b)).collect()
            }
        };
        x_prev = r.x;
        mu *= opts.mu_factor;
        if step <= opts.outer_tol * scale {
            converged = true;
            break;
        }
    }
    Ok(OuterResult {
        x: x_prev,
        rows,
        converged,
    })
}

#[derive(Clone, Debug)]
pub struct ContinuationResult {
    pub x: Element,
    pub z: Element,
    pub outer: Vec<OuterRow>,
    pub inner: Vec<Trace>,
    pub converged: bool,
}

/// Continuation on a model, warm-starting each inner solve from the last dual.
pub fn run(
    model: &Model,
    solver: &SolverOptions,
    opts: &ContinuationOptions,
) -> Result<ContinuationResult, ContinuationError> {
    let y0 = model.center()?;
    let dual_len: usize = model.conic.blocks.iter().map(|b| b.offset.len()).sum();
    let mut z = vec![0.0; dual_len];
    let mut traces = Vec::new();
    let mut step = solver.step;
    let shape = model.primal_shape().clone();
    let mut dual_shape = None;
    let out = outer_loop(&y0.data, model.spec.mu, opts, |s: OuterStep<'_>| {
        let center = Element::new(shape.clone(), s.center.to_vec()).expect("center has primal shape");
        let cd = model.smooth(s.mu, &center)?;
        dual_shape.get_or_insert_with(|| cd.dual_shape().clone());
        let mut o = solver.clone();
        o.tol = s.tol;
        o.step = step;
        o.reference = opts.reference.clone();
        let z0 = if opts.warm_start { z.clone() } else { vec![0.0; dual_len] };
        let m = if opts.cached && o.variant == Variant::At {
            minimize_at_cached(&cd, &o, &z0)?
        } else {
            minimize(&cd, &o, &z0)?
        };
        if let StepPolicy::Backtracking { l0, .. } = &mut step {
            *l0 = Some(m.lipschitz / opts.mu_factor);
        }
        let envelope = -m.trace.last().map(|r| r.phi).unwrap_or(f64::NAN);
        let x = cd.primal_minimizer_quiet(&m.z);
        z = m.z;
        let iterations = m.iterations;
        traces.push(m.trace);
        Ok::<_, ContinuationError>(InnerResult {
            x,
            envelope,
            iterations,
            counts: cd.operator().counts(),
        })
    })?;
    let dual_shape = dual_shape.expect("at least one outer step");
    Ok(ContinuationResult {
        x: Element::new(shape, out.x).expect("primal shape"),
        z: Element::new(dual_shape, z).expect("dual shape"),
        outer: out.rows,
        inner: traces,
        converged: out.converged,
    })
}

/// Standard continuation of `spec`'s model.
pub fn continue_standard(
    model: &Model,
    solver: &SolverOptions,
    opts: &ContinuationOptions,
) -> Result<ContinuationResult, ContinuationError> {
    let opts = ContinuationOptions {
        schedule: Schedule::Standard,
        ..opts.clone()
    };
    run(model, solver, &opts)
}

/// Accelerated continuation of `spec`'s model.
pub fn continue_accelerated(
    model: &Model,
    solver: &SolverOptions,
    opts: &ContinuationOptions,
) -> Result<ContinuationResult, ContinuationError> {
    let opts = ContinuationOptions {
        schedule: Schedule::Accelerated,
        ..opts.clone()
    };
    run(model, solver, &opts)
}
