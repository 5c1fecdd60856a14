//! Optimal first-order methods for composite problems `phi = g + h`.
//!
//! All six variants share one loop. With `y_k = (1 - theta_k) z_k + theta_k zbar_k`
//! they differ only in how `z_{k+1}` and `zbar_{k+1}` are formed:
//!
//! | variant | `zbar_{k+1}`                                   | `z_{k+1}`                          |
//! |---------|------------------------------------------------|------------------------------------|
//! | `N07`   | prox around `z_0` of the weighted gradient sum | prox step from `y_k`               |
//! | `TS`    | as `N07`                                       | `(1-theta) z_k + theta zbar_{k+1}` |
//! | `LLM`   | prox step from `zbar_k` with weight `theta L`  | prox step from `y_k`               |
//! | `AT`    | as `LLM`                                       | `(1-theta) z_k + theta zbar_{k+1}` |
//! | `N83`   | `z_k + (z_{k+1} - z_k) / theta`                | prox step from `y_k`               |
//! | `GRA`   | `z_{k+1}`                                      | prox step from `y_k`, `theta = 1`  |
//!
//! Step sizes are either fixed at `1/L` or found by backtracking, in which
//! case every iteration first tries `L_k = alpha L_{k-1}` and `theta` is
//! recomputed from the ratio `L_k / L_{k-1}`.

mod cached;
mod trace;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::linops::space::{dot, lincomb};
use crate::linops::{Element, OpCounts};
use crate::prox::NonsmoothFn;
use crate::smoothing::{relative_error, CompositeDual};

pub use cached::{minimize_at_cached, solve_at_cached};
pub use trace::{fmt_f64, Trace, TraceRow, TRACE_HEADER};

/// A composite objective `g + h` with `g` smooth.
pub trait Composite {
    fn dim(&self) -> usize;
    fn value(&self, z: &[f64]) -> f64;
    fn value_grad(&self, z: &[f64]) -> (f64, Vec<f64>);
    fn nonsmooth(&self) -> &dyn NonsmoothFn;

    /// Diagonal weights `m` of the norm `||v||^2 = sum_i m_i v_i^2`; `None`
    /// means Euclidean. Must agree with the step multipliers of `h`.
    fn metric(&self) -> Option<&[f64]> {
        None
    }

    fn counts(&self) -> OpCounts {
        OpCounts::default()
    }

    fn primal_prox_calls(&self) -> u64 {
        0
    }

    /// `phi(z)` and the relative error against `reference`, for traces.
    /// Implementations should not touch operation counters.
    fn monitor(&self, z: &[f64], reference: Option<&[f64]>) -> (f64, Option<f64>) {
        (
            self.value(z) + self.nonsmooth().value(z),
            reference.map(|r| relative_error(z, r)),
        )
    }
}

/// A composite objective whose smooth part is `g(z) = gbar(A* z) + <b, z>`.
pub trait SplitComposite: Composite {
    /// Counted `A* z`.
    fn adjoint(&self, z: &[f64]) -> Vec<f64>;
    /// Counted `A x`.
    fn forward(&self, x: &[f64]) -> Vec<f64>;
    /// `gbar(w)` and `grad gbar(w)`.
    fn inner_value_grad(&self, w: &[f64]) -> (f64, Vec<f64>);
    fn offset(&self) -> &[f64];
    fn adjoint_dim(&self) -> usize;
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    At,
    N07,
    Ts,
    Llm,
    N83,
    Gra,
}

impl Variant {
    pub const ALL: [Variant; 6] = [
        Variant::At,
        Variant::N07,
        Variant::Ts,
        Variant::Llm,
        Variant::N83,
        Variant::Gra,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Variant::At => "at",
            Variant::N07 => "n07",
            Variant::Ts => "ts",
            Variant::Llm => "llm",
            Variant::N83 => "n83",
            Variant::Gra => "gra",
        }
    }

    /// Generalized projections per loop pass.
    pub fn projections(self) -> u64 {
        match self {
            Variant::N07 | Variant::Llm => 2,
            _ => 1,
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Variant {
    type Err = SolveError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Variant::ALL
            .into_iter()
            .find(|v| v.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| SolveError::InvalidOptions(format!("unknown variant {s:?}")))
    }
}

/// Acceptance test used by backtracking.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TestMode {
    /// `g(z) <= g(y) + <grad g(y), z - y> + L/2 ||z - y||^2`
    Standard,
    /// `|<y - z, grad g(z) - grad g(y)>| <= L/2 ||z - y||^2`
    Stable,
    /// Standard while the decrease is large relative to `|g(z)|`, else stable.
    Hybrid,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum StepPolicy {
    Fixed {
        lipschitz: f64,
    },
    Backtracking {
        /// Initial estimate; estimated from two points when absent.
        l0: Option<f64>,
        alpha: f64,
        beta: f64,
        gamma: f64,
        test: TestMode,
    },
}

impl StepPolicy {
    pub fn backtracking() -> Self {
        StepPolicy::Backtracking {
            l0: None,
            alpha: 0.9,
            beta: 0.5,
            gamma: 1e-6,
            test: TestMode::Hybrid,
        }
    }

    pub fn backtracking_from(l0: f64) -> Self {
        match Self::backtracking() {
            StepPolicy::Backtracking {
                alpha,
                beta,
                gamma,
                test,
                ..
            } => StepPolicy::Backtracking {
                l0: Some(l0),
                alpha,
                beta,
                gamma,
                test,
            },
            p => p,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolverOptions {
    pub variant: Variant,
    pub step: StepPolicy,
    pub max_iters: usize,
    /// Stop when `||z_{k+1} - z_k|| <= tol max(1, ||z_{k+1}||)`.
    pub tol: f64,
    /// Optional stop on `|phi_{k+1} - phi_k| <= obj_tol max(1, |phi_{k+1}|)`.
    pub obj_tol: Option<f64>,
    /// Reset `theta` and `zbar` every this many iterations.
    pub restart: Option<usize>,
    /// Reference point for the trace error column.
    pub reference: Option<Vec<f64>>,
    /// Divergence threshold as a multiple of `max(1, |phi_0|)`.
    pub divergence: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            variant: Variant::At,
            step: StepPolicy::backtracking(),
            max_iters: 10_000,
            tol: 1e-8,
            obj_tol: None,
            restart: None,
            reference: None,
            divergence: 1e6,
        }
    }
}

impl SolverOptions {
    pub fn with_variant(mut self, v: Variant) -> Self {
        self.variant = v;
        self
    }

    /// The same options with periodic restarts every `k` iterations.
    pub fn restarted(mut self, k: usize) -> Self {
        self.restart = Some(k);
        self
    }

    fn validate(&self) -> Result<(), SolveError> {
        let bad = |m: &str| Err(SolveError::InvalidOptions(m.to_string()));
        match self.step {
            StepPolicy::Fixed { lipschitz } if !(lipschitz > 0.0 && lipschitz.is_finite()) => {
                return bad("fixed Lipschitz constant must be positive")
            }
            StepPolicy::Backtracking {
                l0, alpha, beta, gamma, ..
            } => {
                if l0.is_some_and(|l| !(l > 0.0 && l.is_finite())) {
                    return bad("initial Lipschitz estimate must be positive");
                }
                if !(alpha > 0.0 && alpha <= 1.0) || !(beta > 0.0 && beta < 1.0) || !(gamma >= 0.0) {
                    return bad("backtracking needs 0 < alpha <= 1, 0 < beta < 1, gamma >= 0");
                }
            }
            _ => {}
        }
        if self.restart == Some(0) {
            return bad("restart interval must be positive");
        }
        if !(self.tol >= 0.0) {
            return bad("tolerance must be nonnegative");
        }
        Ok(())
    }
}

#[derive(Debug, thiserror::Error)]
pub enum SolveError {
    #[error("invalid solver options: {0}")]
    InvalidOptions(String),
    #[error("starting point has length {got}, problem has dimension {expected}")]
    Dimension { expected: usize, got: usize },
    #[error("diverged at iteration {iteration}: objective {phi}")]
    Diverged {
        iteration: usize,
        phi: f64,
        trace: Box<Trace>,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    StepTolerance,
    ObjectiveTolerance,
    MaxIterations,
}

/// Raw solver output in flat storage.
#[derive(Clone, Debug)]
pub struct Minimized {
    pub z: Vec<f64>,
    pub trace: Trace,
    pub iterations: usize,
    pub stop: StopReason,
    pub lipschitz: f64,
}

/// Output of a solve on a smoothed dual.
#[derive(Clone, Debug)]
pub struct Solution {
    pub z: Element,
    pub x: Element,
    pub trace: Trace,
    pub iterations: usize,
    pub stop: StopReason,
    pub lipschitz: f64,
}

impl Solution {
    fn from_min(cd: &CompositeDual, m: Minimized) -> Self {
        let x = cd.primal_minimizer_quiet(&m.z);
        Solution {
            z: Element {
                shape: cd.dual_shape().clone(),
                data: m.z,
            },
            x: Element {
                shape: cd.primal_shape().clone(),
                data: x,
            },
            trace: m.trace,
            iterations: m.iterations,
            stop: m.stop,
            lipschitz: m.lipschitz,
        }
    }
}

/// `theta_{k+1} = 2 / (1 + sqrt(1 + 4 L_{k+1} / (theta_k^2 L_k)))`;
/// an infinite `theta_k` (first iteration or restart) gives 1.
pub fn theta_update(theta: f64, l_prev: f64, l_next: f64) -> f64 {
    if theta.is_infinite() {
        return 1.0;
    }
    2.0 / (1.0 + (1.0 + 4.0 * l_next / (theta * theta * l_prev)).sqrt())
}

/// Running sum `sum_i grad g(y_i) / (L_i theta_i)` used by `N07` and `TS`.
#[derive(Clone, Debug)]
pub struct WeightedGradientSum {
    sum: Vec<f64>,
}

impl WeightedGradientSum {
    pub fn new(n: usize) -> Self {
        WeightedGradientSum { sum: vec![0.0; n] }
    }

    pub fn push(&mut self, grad: &[f64], l: f64, theta: f64) {
        let w = 1.0 / (l * theta);
        crate::linops::space::axpy(w, grad, &mut self.sum);
    }

    pub fn reset(&mut self) {
        self.sum.iter_mut().for_each(|v| *v = 0.0);
    }

    /// `theta^2 L (sum + grad / (L theta))`, the linear term for the
    /// tentative iteration with parameters `(l, theta)`.
    pub fn scaled_with(&self, grad: &[f64], l: f64, theta: f64) -> Vec<f64> {
        let a = theta * theta * l;
        self.sum
            .iter()
            .zip(grad)
            .map(|(s, g)| a * s + theta * g)
            .collect()
    }
}

/// Everything a backtracking test needs about one tentative step.
pub struct StepSample<'a> {
    pub y: &'a [f64],
    pub z: &'a [f64],
    pub g_y: f64,
    pub grad_y: &'a [f64],
    pub g_z: f64,
    /// Needed by the stable test; may be omitted for the standard test.
    pub grad_z: Option<&'a [f64]>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Verdict {
    Accept,
    /// Retry with this Lipschitz estimate.
    Increase(f64),
}

/// Which test a hybrid check will apply; the stable test needs `grad g(z)`.
pub fn hybrid_uses_standard(g_y: f64, g_z: f64, gamma: f64) -> bool {
    g_y - g_z >= gamma * g_z.abs()
}

/// Checks the step against `L`. On failure returns `max(L / beta, Lhat)`,
/// where `Lhat` is the smallest estimate that would pass.
pub fn backtrack_check(
    test: TestMode,
    gamma: f64,
    l: f64,
    beta: f64,
    s: &StepSample<'_>,
    metric: Option<&[f64]>,
) -> Verdict {
    let d: Vec<f64> = s.z.iter().zip(s.y).map(|(a, b)| a - b).collect();
    let nd = norm_sq(&d, metric);
    if nd == 0.0 {
        return Verdict::Accept;
    }
    let standard = match test {
        TestMode::Standard => true,
        TestMode::Stable => false,
        TestMode::Hybrid => hybrid_uses_standard(s.g_y, s.g_z, gamma) || s.grad_z.is_none(),
    };
    let lhat = if standard {
        2.0 * (s.g_z - s.g_y - dot(s.grad_y, &d)) / nd
    } else {
        let gz = s.grad_z.expect("stable test needs grad g(z)");
        let q: f64 = d.iter().zip(gz).zip(s.grad_y).map(|((d, a), b)| d * (a - b)).sum();
        2.0 * q.abs() / nd
    };
    if lhat <= l {
        Verdict::Accept
    } else {
        Verdict::Increase((l / beta).max(lhat))
    }
}

pub(crate) fn norm_sq(v: &[f64], metric: Option<&[f64]>) -> f64 {
    match metric {
        None => dot(v, v),
        Some(m) => v.iter().zip(m).map(|(a, m)| m * a * a).sum(),
    }
}

pub(crate) fn dual_norm_sq(v: &[f64], metric: Option<&[f64]>) -> f64 {
    match metric {
        None => dot(v, v),
        Some(m) => v.iter().zip(m).map(|(a, m)| a * a / m).sum(),
    }
}

/// `L0 = ||grad g(z0) - grad g(z1)||_* / ||z0 - z1||`.
pub fn estimate_l0<P: Composite + ?Sized>(p: &P, z0: &[f64], z1: &[f64]) -> f64 {
    let (_, g0) = p.value_grad(z0);
    let (_, g1) = p.value_grad(z1);
    l0_from(&g0, &g1, z0, z1, p.metric())
}

fn l0_from(g0: &[f64], g1: &[f64], z0: &[f64], z1: &[f64], metric: Option<&[f64]>) -> f64 {
    let dg: Vec<f64> = g0.iter().zip(g1).map(|(a, b)| a - b).collect();
    let dz: Vec<f64> = z0.iter().zip(z1).map(|(a, b)| a - b).collect();
    let nz = norm_sq(&dz, metric).sqrt();
    if nz == 0.0 {
        return 1.0;
    }
    let l = dual_norm_sq(&dg, metric).sqrt() / nz;
    if l > 0.0 && l.is_finite() {
        l
    } else {
        1.0
    }
}

/// Second probe point for the default `L0` estimate.
pub(crate) fn probe_point(z0: &[f64], g0: &[f64], metric: Option<&[f64]>) -> Vec<f64> {
    let ng = dual_norm_sq(g0, metric).sqrt();
    let scale = 1e-3 * norm_sq(z0, metric).sqrt().max(1.0);
    if ng > 0.0 {
        z0.iter().zip(g0).map(|(z, g)| z - scale * g / ng).collect()
    } else {
        let mut z1 = z0.to_vec();
        if let Some(v) = z1.first_mut() {
            *v += scale;
        }
        z1
    }
}

/// Shared loop bookkeeping for both solver implementations.
pub(crate) struct Progress<'a> {
    pub reference: Option<&'a [f64]>,
    pub counts0: OpCounts,
    pub primal0: u64,
    pub prox: u64,
    pub trace: Trace,
    pub phi0: f64,
    pub phi: f64,
    pub divergence: f64,
}

impl<'a> Progress<'a> {
    pub fn start<P: Composite + ?Sized>(p: &P, opts: &'a SolverOptions, z0: &[f64], l0: f64, counts0: OpCounts, primal0: u64) -> Self {
        let reference = opts.reference.as_deref();
        let (phi, err) = p.monitor(z0, reference);
        let mut trace = Trace::default();
        let c = p.counts() - counts0;
        trace.rows.push(TraceRow {
            iter: 0,
            phi,
            lipschitz: l0,
            theta: 1.0,
            backtracks: 0,
            fwd: c.forward,
            adj: c.adjoint,
            prox: 0,
            err,
            primal_prox: p.primal_prox_calls() - primal0,
        });
        Progress {
            reference,
            counts0,
            primal0,
            prox: 0,
            trace,
            phi0: phi,
            phi,
            divergence: opts.divergence,
        }
    }

    /// Records an iteration; returns the previous objective.
    pub fn record<P: Composite + ?Sized>(
        &mut self,
        p: &P,
        iter: usize,
        z: &[f64],
        l: f64,
        theta: f64,
        backtracks: u32,
    ) -> Result<f64, SolveError> {
        let (phi, err) = p.monitor(z, self.reference);
        let c = p.counts() - self.counts0;
        self.trace.rows.push(TraceRow {
            iter,
            phi,
            lipschitz: l,
            theta,
            backtracks,
            fwd: c.forward,
            adj: c.adjoint,
            prox: self.prox,
            err,
            primal_prox: p.primal_prox_calls() - self.primal0,
        });
        let scale = self.phi0.abs().max(1.0);
        if phi.is_nan() || phi - self.phi0 > self.divergence * scale {
            return Err(SolveError::Diverged {
                iteration: iter,
                phi,
                trace: Box::new(std::mem::take(&mut self.trace)),
            });
        }
        Ok(std::mem::replace(&mut self.phi, phi))
    }
}

pub(crate) fn check_stop(
    opts: &SolverOptions,
    z_prev: &[f64],
    z: &[f64],
    metric: Option<&[f64]>,
    phi_prev: f64,
    phi: f64,
) -> Option<StopReason> {
    let d: Vec<f64> = z.iter().zip(z_prev).map(|(a, b)| a - b).collect();
    if norm_sq(&d, metric).sqrt() <= opts.tol * norm_sq(z, metric).sqrt().max(1.0) {
        return Some(StopReason::StepTolerance);
    }
    if let Some(t) = opts.obj_tol {
        if (phi - phi_prev).abs() <= t * phi.abs().max(1.0) {
            return Some(StopReason::ObjectiveTolerance);
        }
    }
    None
}

/// Minimizes `g + h` from `z0` with the configured variant.
pub fn minimize<P: Composite + ?Sized>(
    p: &P,
    opts: &SolverOptions,
    z0: &[f64],
) -> Result<Minimized, SolveError> {
    opts.validate()?;
    let n = p.dim();
    if z0.len() != n {
        return Err(SolveError::Dimension {
            expected: n,
            got: z0.len(),
        });
    }
    let h = p.nonsmooth();
    let metric = p.metric();
    let counts0 = p.counts();
    let primal0 = p.primal_prox_calls();
    let variant = opts.variant;

    let (mut l_prev, backtracking) = match opts.step {
        StepPolicy::Fixed { lipschitz } => (lipschitz, None),
        StepPolicy::Backtracking {
            l0,
            alpha,
            beta,
            gamma,
            test,
        } => {
            let l = l0.unwrap_or_else(|| {
                let (_, g0) = p.value_grad(z0);
                let z1 = probe_point(z0, &g0, metric);
                let (_, g1) = p.value_grad(&z1);
                l0_from(&g0, &g1, z0, &z1, metric)
            });
            (l, Some((alpha, beta, gamma, test)))
        }
    };

    let mut progress = Progress::start(p, opts, z0, l_prev, counts0, primal0);
    let mut z = z0.to_vec();
    let mut zbar = z0.to_vec();
    let mut anchor = z0.to_vec();
    let mut wsum = WeightedGradientSum::new(n);
    let mut theta_prev = f64::INFINITY;
    let mut stop = StopReason::MaxIterations;
    let mut iterations = 0;
    let mut z_new = vec![0.0; n];
    let mut zbar_new = vec![0.0; n];

    for k in 0..opts.max_iters {
        if let Some(r) = opts.restart {
            if k > 0 && k % r == 0 {
                theta_prev = f64::INFINITY;
                zbar.copy_from_slice(&z);
                anchor.copy_from_slice(&z);
                wsum.reset();
                progress.trace.restarts.push(k);
            }
        }
        let mut l = match backtracking {
            Some((alpha, ..)) => alpha * l_prev,
            None => l_prev,
        };
        let mut backtracks = 0u32;
        let (theta, grad_y) = loop {
            let theta = if variant == Variant::Gra {
                1.0
            } else {
                theta_update(theta_prev, l_prev, l)
            };
            let y = if theta == 1.0 {
                zbar.clone()
            } else {
                lincomb(1.0 - theta, &z, theta, &zbar)
            };
            let y = if variant == Variant::Gra { z.clone() } else { y };
            let (g_y, grad_y) = p.value_grad(&y);
            match variant {
                Variant::Gra => {
                    h.project(&y, &grad_y, 1.0 / l, &mut z_new);
                    zbar_new.copy_from_slice(&z_new);
                }
                Variant::N83 => {
                    h.project(&y, &grad_y, 1.0 / l, &mut z_new);
                    for ((zb, zn), zo) in zbar_new.iter_mut().zip(&z_new).zip(&z) {
                        *zb = zo + (zn - zo) / theta;
                    }
                }
                Variant::At | Variant::Llm => {
                    h.project(&zbar, &grad_y, 1.0 / (theta * l), &mut zbar_new);
                    if variant == Variant::At {
                        combine(&mut z_new, theta, &z, &zbar_new);
                    } else {
                        h.project(&y, &grad_y, 1.0 / l, &mut z_new);
                    }
                }
                Variant::N07 | Variant::Ts => {
                    let s = wsum.scaled_with(&grad_y, l, theta);
                    h.project(&anchor, &s, 1.0 / (theta * theta * l), &mut zbar_new);
                    if variant == Variant::Ts {
                        combine(&mut z_new, theta, &z, &zbar_new);
                    } else {
                        h.project(&y, &grad_y, 1.0 / l, &mut z_new);
                    }
                }
            }
            progress.prox += variant.projections();
            let Some((_, beta, gamma, test)) = backtracking else {
                break (theta, grad_y);
            };
            let need_grad = match test {
                TestMode::Standard => false,
                TestMode::Stable => true,
                TestMode::Hybrid => {
                    let g_z = p.value(&z_new);
                    if hybrid_uses_standard(g_y, g_z, gamma) {
                        let s = StepSample {
                            y: &y,
                            z: &z_new,
                            g_y,
                            grad_y: &grad_y,
                            g_z,
                            grad_z: None,
                        };
                        match backtrack_check(TestMode::Standard, gamma, l, beta, &s, metric) {
                            Verdict::Accept => break (theta, grad_y),
                            Verdict::Increase(nl) => {
                                l = nl;
                                backtracks += 1;
                                continue;
                            }
                        }
                    }
                    true
                }
            };
            let (g_z, grad_z) = if need_grad {
                let (v, g) = p.value_grad(&z_new);
                (v, Some(g))
            } else {
                (p.value(&z_new), None)
            };
            let mode = if need_grad { TestMode::Stable } else { TestMode::Standard };
            let s = StepSample {
                y: &y,
                z: &z_new,
                g_y,
                grad_y: &grad_y,
                g_z,
                grad_z: grad_z.as_deref(),
            };
            match backtrack_check(mode, gamma, l, beta, &s, metric) {
                Verdict::Accept => break (theta, grad_y),
                Verdict::Increase(nl) => {
                    l = nl;
                    backtracks += 1;
                }
            }
        };
        if matches!(variant, Variant::N07 | Variant::Ts) {
            wsum.push(&grad_y, l, theta);
        }
        std::mem::swap(&mut z, &mut z_new);
        std::mem::swap(&mut zbar, &mut zbar_new);
        theta_prev = theta;
        l_prev = l;
        iterations = k + 1;
        let phi_prev = progress.record(p, iterations, &z, l, theta, backtracks)?;
        if let Some(s) = check_stop(opts, &z_new, &z, metric, phi_prev, progress.phi) {
            stop = s;
            break;
        }
    }
    Ok(Minimized {
        z,
        trace: progress.trace,
        iterations,
        stop,
        lipschitz: l_prev,
    })
}

/// `out = (1 - theta) z + theta zbar`
pub(crate) fn combine(out: &mut [f64], theta: f64, z: &[f64], zbar: &[f64]) {
    for ((o, a), b) in out.iter_mut().zip(z).zip(zbar) {
        *o = (1.0 - theta) * a + theta * b;
    }
}

/// Solves a smoothed dual. `z0 = None` starts from zero.
pub fn solve(
    cd: &CompositeDual,
    opts: &SolverOptions,
    z0: Option<&Element>,
) -> Result<Solution, SolveError> {
    let z0 = start_point(cd, z0)?;
    let m = minimize(cd, opts, &z0)?;
    Ok(Solution::from_min(cd, m))
}

pub(crate) fn start_point(cd: &CompositeDual, z0: Option<&Element>) -> Result<Vec<f64>, SolveError> {
    match z0 {
        None => Ok(vec![0.0; cd.dual_shape().len()]),
        Some(z) if &z.shape == cd.dual_shape() => Ok(z.data.clone()),
        Some(z) => Err(SolveError::Dimension {
            expected: cd.dual_shape().len(),
            got: z.len(),
        }),
    }
}
