//! Conic models and their smoothed composite duals.
//!
//! A [`ConicModel`] describes
//!
//! ```text
//! minimize  f(x) + sum_i w_i ||A_i x + b_i||      (scalarized blocks)
//! subject to  A_i x + b_i in K_i                  (cone blocks)
//! ```
//!
//! Adding `mu/2 ||x - x0||^2` makes the Lagrangian strongly convex in `x`, so
//! the negated dual splits into a smooth part
//!
//! ```text
//! g(z) = sup_x <A* z, x> - f(x) - mu/2 ||x - x0||^2 + <b, z>,
//! grad g(z) = A x(z) + b,   x(z) = prox_{f/mu}(x0 + A* z / mu),
//! ```
//!
//! and a nonsmooth part `h(z)` determined by the dual cones. The solvers
//! minimize `phi = g + h`.

use std::sync::atomic::{AtomicU64, Ordering};

use crate::linops::space::{axpy, dot, norm_inf};
use crate::linops::{check_shape, Element, LinOp, LinOpError, OpCounts, Shape};
use crate::prox::{
    singular_values, st, BlockSum, ComplexBall, LinfBall, NonnegIndicator, NonsmoothFn,
    ScaledL1, ScaledL2, ScaledNuclear, Zero,
};
use crate::solvers::{Composite, SplitComposite};

#[derive(Debug, thiserror::Error)]
pub enum SmoothingError {
    #[error("smoothing parameter must be positive, got {0}")]
    NonPositiveMu(f64),
    #[error(transparent)]
    Shape(#[from] LinOpError),
    #[error("block {block}: offset has length {got}, operator output has {expected}")]
    OffsetLength {
        block: usize,
        expected: usize,
        got: usize,
    },
    #[error("cone {0} has no implemented composite split")]
    UnsupportedSplit(&'static str),
    #[error("invalid model: {0}")]
    Invalid(String),
}

/// The primal objective `f`.
#[derive(Clone, Debug, PartialEq)]
pub enum Objective {
    /// `f = 0`; the prox is the identity.
    Zero,
    L1,
    /// `f(x) = sum_i r_i |x_i|`
    WeightedL1(Vec<f64>),
    /// Nuclear norm of a column-major matrix.
    Nuclear { rows: usize, cols: usize },
}

impl Objective {
    pub fn value(&self, x: &[f64]) -> f64 {
        match self {
            Objective::Zero => 0.0,
            Objective::L1 => x.iter().map(|v| v.abs()).sum(),
            Objective::WeightedL1(r) => x.iter().zip(r).map(|(v, r)| r * v.abs()).sum(),
            Objective::Nuclear { rows, cols } => singular_values(*rows, *cols, x).iter().sum(),
        }
    }

    /// `out = argmin_x t f(x) + ||x - v||^2 / 2`
    pub fn prox(&self, v: &[f64], t: f64, out: &mut [f64]) {
        match self {
            Objective::Zero => out.copy_from_slice(v),
            Objective::L1 => {
                for (o, &x) in out.iter_mut().zip(v) {
                    *o = st(x, t);
                }
            }
            Objective::WeightedL1(r) => {
                for ((o, &x), r) in out.iter_mut().zip(v).zip(r) {
                    *o = st(x, t * r);
                }
            }
            Objective::Nuclear { rows, cols } => {
                ScaledNuclear::new(1.0, *rows, *cols).prox(v, t, out);
            }
        }
    }

    /// How far `w` lies outside the domain of the conjugate `f*`.
    pub fn conjugate_violation(&self, w: &[f64]) -> f64 {
        match self {
            Objective::Zero => norm_inf(w),
            Objective::L1 => (norm_inf(w) - 1.0).max(0.0),
            Objective::WeightedL1(r) => w
                .iter()
                .zip(r)
                .fold(0.0, |m, (w, r)| m.max(w.abs() - r)),
            Objective::Nuclear { rows, cols } => {
                let s = singular_values(*rows, *cols, w);
                (s.first().copied().unwrap_or(0.0) - 1.0).max(0.0)
            }
        }
    }
}

/// Cone attached to one block `u = A_i x + b_i`.
#[derive(Clone, Debug, PartialEq)]
pub enum Cone {
    /// `u = 0`; free dual, `h = 0`.
    Zero,
    /// `u >= 0`; dual `h` is the orthant indicator.
    Nonneg,
    /// `||u||_2 <= tau`; dual `h = tau ||z||_2`.
    Soc { tau: f64 },
    /// `||u||_inf <= tau`; dual `h = tau ||z||_1`.
    LinfEpigraph { tau: f64 },
    /// `||U||_op <= tau` for a column-major matrix block; dual `h = tau ||Z||_*`.
    OperatorNormEpigraph { tau: f64, rows: usize, cols: usize },
    /// `||u||_1 <= tau`. The dual term `tau ||z||_inf` has no prox here.
    L1Epigraph { tau: f64 },
    /// Adds `weight ||u||_1` to the objective; dual `h` bounds `||z||_inf <= weight`.
    L1Penalty { weight: f64 },
    /// Adds `weight sum_k |u_k|` over complex entries; dual `h` bounds `|z_k| <= weight`.
    ComplexL1Penalty { weight: f64 },
}

impl Cone {
    fn name(&self) -> &'static str {
        match self {
            Cone::Zero => "zero",
            Cone::Nonneg => "nonneg",
            Cone::Soc { .. } => "soc",
            Cone::LinfEpigraph { .. } => "linf_epigraph",
            Cone::OperatorNormEpigraph { .. } => "operator_norm_epigraph",
            Cone::L1Epigraph { .. } => "l1_epigraph",
            Cone::L1Penalty { .. } => "l1_penalty",
            Cone::ComplexL1Penalty { .. } => "complex_l1_penalty",
        }
    }

    fn dual_term(&self) -> Result<Box<dyn NonsmoothFn>, SmoothingError> {
        Ok(match *self {
            Cone::Zero => Box::new(Zero),
            Cone::Nonneg => Box::new(NonnegIndicator),
            Cone::Soc { tau } => Box::new(ScaledL2(tau)),
            Cone::LinfEpigraph { tau } => Box::new(ScaledL1(tau)),
            Cone::OperatorNormEpigraph { tau, rows, cols } => {
                Box::new(ScaledNuclear::new(tau, rows, cols))
            }
            Cone::L1Epigraph { .. } => return Err(SmoothingError::UnsupportedSplit(self.name())),
            Cone::L1Penalty { weight } => Box::new(LinfBall(weight)),
            Cone::ComplexL1Penalty { weight } => Box::new(ComplexBall(weight)),
        })
    }

    /// Objective contribution of a penalty block.
    fn penalty(&self, u: &[f64]) -> f64 {
        match *self {
            Cone::L1Penalty { weight } => weight * u.iter().map(|v| v.abs()).sum::<f64>(),
            Cone::ComplexL1Penalty { weight } => {
                weight * u.chunks_exact(2).map(|c| c[0].hypot(c[1])).sum::<f64>()
            }
            _ => 0.0,
        }
    }

    /// Violation of `u in K`.
    fn primal_violation(&self, u: &[f64]) -> f64 {
        match *self {
            Cone::Zero => norm_inf(u),
            Cone::Nonneg => u.iter().fold(0.0, |m, v| m.max(-v)),
            Cone::Soc { tau } => (dot(u, u).sqrt() - tau).max(0.0),
            Cone::LinfEpigraph { tau } => (norm_inf(u) - tau).max(0.0),
            Cone::OperatorNormEpigraph { tau, rows, cols } => {
                let s = singular_values(rows, cols, u);
                (s.first().copied().unwrap_or(0.0) - tau).max(0.0)
            }
            Cone::L1Epigraph { tau } => (u.iter().map(|v| v.abs()).sum::<f64>() - tau).max(0.0),
            Cone::L1Penalty { .. } | Cone::ComplexL1Penalty { .. } => 0.0,
        }
    }

    /// Finite part of `h` and the violation of the dual domain.
    fn dual_value_violation(&self, z: &[f64]) -> (f64, f64) {
        match *self {
            Cone::Zero => (0.0, 0.0),
            Cone::Nonneg => (0.0, z.iter().fold(0.0, |m, v| m.max(-v))),
            Cone::Soc { tau } => (tau * dot(z, z).sqrt(), 0.0),
            Cone::LinfEpigraph { tau } => (tau * z.iter().map(|v| v.abs()).sum::<f64>(), 0.0),
            Cone::OperatorNormEpigraph { tau, rows, cols } => {
                (tau * singular_values(rows, cols, z).iter().sum::<f64>(), 0.0)
            }
            Cone::L1Epigraph { tau } => (tau * norm_inf(z), 0.0),
            Cone::L1Penalty { weight } => (0.0, (norm_inf(z) - weight).max(0.0)),
            Cone::ComplexL1Penalty { weight } => {
                let m = z.chunks_exact(2).fold(0.0f64, |m, c| m.max(c[0].hypot(c[1])));
                (0.0, (m - weight).max(0.0))
            }
        }
    }
}

/// One constraint or penalty block `A_i x + b_i`.
#[derive(Clone, Debug)]
pub struct ConeBlock {
    pub op: LinOp,
    pub offset: Vec<f64>,
    pub cone: Cone,
    /// Relative dual step size used on this block.
    pub step_scale: f64,
}

impl ConeBlock {
    pub fn new(op: LinOp, offset: Vec<f64>, cone: Cone) -> Self {
        ConeBlock {
            op,
            offset,
            cone,
            step_scale: 1.0,
        }
    }
}

#[derive(Clone, Debug)]
pub struct ConicModel {
    pub objective: Objective,
    pub primal: Shape,
    pub blocks: Vec<ConeBlock>,
}

impl ConicModel {
    pub fn validate(&self) -> Result<(), SmoothingError> {
        if self.blocks.is_empty() {
            return Err(SmoothingError::Invalid("no constraint blocks".into()));
        }
        match (&self.objective, &self.primal) {
            (Objective::Nuclear { rows, cols }, Shape::Matrix { rows: r, cols: c })
                if rows == r && cols == c => {}
            (Objective::Nuclear { .. }, _) => {
                return Err(SmoothingError::Invalid(
                    "nuclear objective needs a matching matrix space".into(),
                ))
            }
            (Objective::WeightedL1(w), s) if w.len() != s.len() => {
                return Err(SmoothingError::Invalid("weight length mismatch".into()))
            }
            _ => {}
        }
        for (i, b) in self.blocks.iter().enumerate() {
            check_shape(&self.primal, b.op.input())?;
            let out = b.op.output().len();
            if b.offset.len() != out {
                return Err(SmoothingError::OffsetLength {
                    block: i,
                    expected: out,
                    got: b.offset.len(),
                });
            }
            if let Cone::OperatorNormEpigraph { rows, cols, .. } = b.cone {
                if rows * cols != out {
                    return Err(SmoothingError::Invalid(format!(
                        "block {i}: {rows}x{cols} matrix cone on output of length {out}"
                    )));
                }
            }
            if !(b.step_scale > 0.0) {
                return Err(SmoothingError::Invalid(format!(
                    "block {i}: step scale must be positive"
                )));
            }
        }
        Ok(())
    }

    /// `f(x)` plus the penalty blocks.
    pub fn objective_value(&self, x: &[f64]) -> f64 {
        let mut v = self.objective.value(x);
        for b in &self.blocks {
            if matches!(b.cone, Cone::L1Penalty { .. } | Cone::ComplexL1Penalty { .. }) {
                let mut u = b.op.forward_quiet(x);
                axpy(1.0, &b.offset, &mut u);
                v += b.cone.penalty(&u);
            }
        }
        v
    }
}

/// Primal-dual gap of an (unsmoothed) model at a candidate pair.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GapReport {
    pub primal_value: f64,
    pub dual_value: f64,
    pub gap: f64,
    pub primal_infeasibility: f64,
    pub dual_infeasibility: f64,
    /// Set when either infeasibility exceeds `1e-9`.
    pub infeasible: bool,
}

/// Gap `f(x) - d(z)` where `d(z) = -<b, z> - h(z)` on the dual domain.
pub fn duality_gap(model: &ConicModel, x: &Element, z: &Element) -> Result<GapReport, SmoothingError> {
    check_shape(&model.primal, &x.shape)?;
    let dual_len: usize = model.blocks.iter().map(|b| b.offset.len()).sum();
    if z.len() != dual_len {
        return Err(SmoothingError::Invalid(format!(
            "dual has length {}, model needs {dual_len}",
            z.len()
        )));
    }
    let mut primal_inf = 0.0f64;
    let mut dual_inf = 0.0f64;
    let mut dual_value = 0.0;
    let mut w = vec![0.0; x.len()];
    let mut start = 0;
    for b in &model.blocks {
        let zb = &z.data[start..start + b.offset.len()];
        start += b.offset.len();
        let mut u = b.op.forward_quiet(&x.data);
        axpy(1.0, &b.offset, &mut u);
        primal_inf = primal_inf.max(b.cone.primal_violation(&u));
        let (hv, viol) = b.cone.dual_value_violation(zb);
        dual_inf = dual_inf.max(viol);
        dual_value -= dot(&b.offset, zb) + hv;
        axpy(1.0, &b.op.adjoint_quiet(zb), &mut w);
    }
    dual_inf = dual_inf.max(model.objective.conjugate_violation(&w));
    let primal_value = model.objective_value(&x.data);
    Ok(GapReport {
        primal_value,
        dual_value,
        gap: primal_value - dual_value,
        primal_infeasibility: primal_inf,
        dual_infeasibility: dual_inf,
        infeasible: primal_inf > 1e-9 || dual_inf > 1e-9,
    })
}

/// The smoothed dual `phi = g + h` of a conic model.
pub struct CompositeDual {
    objective: Objective,
    op: LinOp,
    offset: Vec<f64>,
    h: Box<dyn NonsmoothFn>,
    mu: f64,
    x0: Vec<f64>,
    primal: Shape,
    dual: Shape,
    metric: Vec<f64>,
    primal_prox: AtomicU64,
}

/// Builds the composite dual of `model` smoothed with `mu/2 ||x - x0||^2`.
pub fn smooth(model: &ConicModel, mu: f64, x0: &Element) -> Result<CompositeDual, SmoothingError> {
    if !(mu > 0.0) || !mu.is_finite() {
        return Err(SmoothingError::NonPositiveMu(mu));
    }
    model.validate()?;
    check_shape(&model.primal, &x0.shape)?;
    let mut terms = Vec::with_capacity(model.blocks.len());
    for b in &model.blocks {
        terms.push((b.offset.len(), b.step_scale, b.cone.dual_term()?));
    }
    let (op, h): (LinOp, Box<dyn NonsmoothFn>) = if model.blocks.len() == 1 {
        let (_, _, t) = terms.pop().unwrap();
        (model.blocks[0].op.fresh_handle(), t)
    } else {
        let ops: Vec<LinOp> = model.blocks.iter().map(|b| b.op.clone()).collect();
        (LinOp::stack(&ops)?, Box::new(BlockSum::new(terms)))
    };
    let offset: Vec<f64> = model.blocks.iter().flat_map(|b| b.offset.iter().copied()).collect();
    let mut metric = vec![1.0; offset.len()];
    for (r, s) in h.block_scales() {
        metric[r].iter_mut().for_each(|m| *m = 1.0 / s);
    }
    Ok(CompositeDual {
        objective: model.objective.clone(),
        dual: op.output().clone(),
        op,
        offset,
        h,
        mu,
        x0: x0.data.clone(),
        primal: model.primal.clone(),
        metric,
        primal_prox: AtomicU64::new(0),
    })
}

impl CompositeDual {
    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn center(&self) -> &[f64] {
        &self.x0
    }

    pub fn primal_shape(&self) -> &Shape {
        &self.primal
    }

    pub fn dual_shape(&self) -> &Shape {
        &self.dual
    }

    /// The reduced operator mapping primal to dual space.
    pub fn operator(&self) -> &LinOp {
        &self.op
    }

    pub fn offset(&self) -> &[f64] {
        &self.offset
    }

    pub fn objective(&self) -> &Objective {
        &self.objective
    }

    pub fn h(&self) -> &dyn NonsmoothFn {
        self.h.as_ref()
    }

    /// Number of primal minimizations performed through counted paths.
    pub fn primal_prox_calls(&self) -> u64 {
        self.primal_prox.load(Ordering::Relaxed)
    }

    fn primal_from_adjoint_raw(&self, w: &[f64]) -> Vec<f64> {
        let inv = 1.0 / self.mu;
        let v: Vec<f64> = self.x0.iter().zip(w).map(|(a, b)| a + inv * b).collect();
        let mut x = vec![0.0; v.len()];
        self.objective.prox(&v, inv, &mut x);
        x
    }

    /// `x = prox_{f/mu}(x0 + w/mu)` for `w = A* z`.
    pub fn primal_from_adjoint(&self, w: &[f64]) -> Vec<f64> {
        self.primal_prox.fetch_add(1, Ordering::Relaxed);
        self.primal_from_adjoint_raw(w)
    }

    fn conjugate_value(&self, w: &[f64], x: &[f64]) -> f64 {
        let d: f64 = x
            .iter()
            .zip(&self.x0)
            .map(|(a, b)| (a - b) * (a - b))
            .sum();
        dot(w, x) - self.objective.value(x) - 0.5 * self.mu * d
    }

    /// Minimizer `x(z)` of the smoothed Lagrangian.
    pub fn primal_minimizer(&self, z: &Element) -> Result<Element, SmoothingError> {
        check_shape(&self.dual, &z.shape)?;
        let w = self.op.adjoint_vec(&z.data);
        Ok(Element {
            shape: self.primal.clone(),
            data: self.primal_from_adjoint(&w),
        })
    }

    /// Uncounted `x(z)`.
    pub fn primal_minimizer_quiet(&self, z: &[f64]) -> Vec<f64> {
        self.primal_from_adjoint_raw(&self.op.adjoint_quiet(z))
    }

    /// `(g(z), grad g(z))`.
    pub fn dual_value_grad(&self, z: &Element) -> Result<(f64, Element), SmoothingError> {
        check_shape(&self.dual, &z.shape)?;
        let (v, g) = Composite::value_grad(self, &z.data);
        Ok((
            v,
            Element {
                shape: self.dual.clone(),
                data: g,
            },
        ))
    }

    /// `phi(z) = g(z) + h(z)`, uncounted.
    pub fn phi_quiet(&self, z: &[f64]) -> f64 {
        let w = self.op.adjoint_quiet(z);
        let x = self.primal_from_adjoint_raw(&w);
        self.conjugate_value(&w, &x) + dot(&self.offset, z) + self.h.value(z)
    }
}

impl Composite for CompositeDual {
    fn dim(&self) -> usize {
        self.offset.len()
    }

    fn value(&self, z: &[f64]) -> f64 {
        let w = self.op.adjoint_vec(z);
        self.inner_value_grad(&w).0 + dot(&self.offset, z)
    }

    fn value_grad(&self, z: &[f64]) -> (f64, Vec<f64>) {
        let w = self.op.adjoint_vec(z);
        let (gv, x) = self.inner_value_grad(&w);
        let mut g = self.op.forward_vec(&x);
        axpy(1.0, &self.offset, &mut g);
        (gv + dot(&self.offset, z), g)
    }

    fn nonsmooth(&self) -> &dyn NonsmoothFn {
        self.h.as_ref()
    }

    fn metric(&self) -> Option<&[f64]> {
        self.h.block_scales().first().map(|_| self.metric.as_slice())
    }

    fn counts(&self) -> OpCounts {
        self.op.counts()
    }

    fn primal_prox_calls(&self) -> u64 {
        CompositeDual::primal_prox_calls(self)
    }

    fn monitor(&self, z: &[f64], reference: Option<&[f64]>) -> (f64, Option<f64>) {
        let w = self.op.adjoint_quiet(z);
        let x = self.primal_from_adjoint_raw(&w);
        let phi = self.conjugate_value(&w, &x) + dot(&self.offset, z) + self.h.value(z);
        (phi, reference.map(|r| relative_error(&x, r)))
    }
}

impl SplitComposite for CompositeDual {
    fn adjoint(&self, z: &[f64]) -> Vec<f64> {
        self.op.adjoint_vec(z)
    }

    fn forward(&self, x: &[f64]) -> Vec<f64> {
        self.op.forward_vec(x)
    }

    fn inner_value_grad(&self, w: &[f64]) -> (f64, Vec<f64>) {
        let x = self.primal_from_adjoint(w);
        (self.conjugate_value(w, &x), x)
    }

    fn offset(&self) -> &[f64] {
        &self.offset
    }

    fn adjoint_dim(&self) -> usize {
        self.primal.len()
    }
}

/// `||x - r|| / ||r||`, or the absolute error when `r = 0`.
pub fn relative_error(x: &[f64], r: &[f64]) -> f64 {
    let d = crate::linops::space::dist(x, r);
    let n = crate::linops::space::norm(r);
    if n > 0.0 {
        d / n
    } else {
        d
    }
}

/// Result of an inner proximal minimization `min_x f(x) + mu/2 ||x - Y||^2`.
#[derive(Clone, Debug)]
pub struct InnerSolution {
    pub x: Vec<f64>,
    /// Optimal value of the inner problem.
    pub envelope: f64,
}

impl InnerSolution {
    /// Builds the envelope value from `f(x)`.
    pub fn from_objective(x: Vec<f64>, f_x: f64, y: &[f64], mu: f64) -> Self {
        let d: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
        InnerSolution {
            envelope: f_x + 0.5 * mu * d,
            x,
        }
    }
}

/// Value and gradient `mu (Y - X_Y)` of the Moreau envelope, given a routine
/// that solves the inner proximal problem at `Y`.
pub fn moreau_value_grad<E>(
    inner: impl FnOnce(&[f64]) -> Result<InnerSolution, E>,
    y: &[f64],
    mu: f64,
) -> Result<(f64, Vec<f64>), E> {
    let sol = inner(y)?;
    let grad = y.iter().zip(&sol.x).map(|(a, b)| mu * (a - b)).collect();
    Ok((sol.envelope, grad))
}
