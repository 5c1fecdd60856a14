//! Linear operators with forward and adjoint application.
//!
//! A [`LinOp`] is a shared handle around a [`LinearMap`] plus a pair of call
//! counters. Counting is per handle: applying a composition increments the
//! composition's counters only, never those of its parts.

mod io;
mod norm;
mod ops;
pub mod space;

use std::fmt;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

pub use io::{read_matrix, read_matrix_binary, read_matrix_csv, write_matrix_binary, write_matrix_csv, DenseMatrix};
pub use norm::estimate_norm;
pub use ops::{Dense, Diag, Diff2d, Identity, PartialDct, Subsample};
pub use space::{Element, Shape};

#[derive(Debug, thiserror::Error)]
pub enum LinOpError {
    #[error("shape mismatch: expected {expected:?}, got {got:?}")]
    ShapeMismatch { expected: Shape, got: Shape },
    #[error("invalid operator: {0}")]
    Invalid(String),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed matrix file {path}: {reason}")]
    Format { path: String, reason: String },
}

/// A linear map between two spaces acting on flat storage.
pub trait LinearMap: Send + Sync {
    fn input(&self) -> &Shape;
    fn output(&self) -> &Shape;
    /// `y = A x`; `x.len() == input.len()`, `y.len() == output.len()`.
    fn forward(&self, x: &[f64], y: &mut [f64]);
    /// `x = A* y`
    fn adjoint(&self, y: &[f64], x: &mut [f64]);
}

#[derive(Debug, Default)]
struct Counters {
    forward: AtomicU64,
    adjoint: AtomicU64,
}

/// Snapshot of operator call counts.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct OpCounts {
    pub forward: u64,
    pub adjoint: u64,
}

impl std::ops::Sub for OpCounts {
    type Output = OpCounts;
    fn sub(self, rhs: OpCounts) -> OpCounts {
        OpCounts {
            forward: self.forward - rhs.forward,
            adjoint: self.adjoint - rhs.adjoint,
        }
    }
}

impl std::ops::Add for OpCounts {
    type Output = OpCounts;
    fn add(self, rhs: OpCounts) -> OpCounts {
        OpCounts {
            forward: self.forward + rhs.forward,
            adjoint: self.adjoint + rhs.adjoint,
        }
    }
}

#[derive(Clone)]
pub struct LinOp {
    map: Arc<dyn LinearMap>,
    counters: Arc<Counters>,
}

impl fmt::Debug for LinOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("LinOp")
            .field("input", self.input())
            .field("output", self.output())
            .field("counts", &self.counts())
            .finish()
    }
}

impl LinOp {
    pub fn new(map: impl LinearMap + 'static) -> Self {
        LinOp {
            map: Arc::new(map),
            counters: Arc::default(),
        }
    }

    /// A handle to the same map with its own zeroed counters.
    pub fn fresh_handle(&self) -> Self {
        LinOp {
            map: Arc::clone(&self.map),
            counters: Arc::default(),
        }
    }

    pub fn input(&self) -> &Shape {
        self.map.input()
    }

    pub fn output(&self) -> &Shape {
        self.map.output()
    }

    pub fn counts(&self) -> OpCounts {
        OpCounts {
            forward: self.counters.forward.load(Ordering::Relaxed),
            adjoint: self.counters.adjoint.load(Ordering::Relaxed),
        }
    }

    pub fn reset_counts(&self) {
        self.counters.forward.store(0, Ordering::Relaxed);
        self.counters.adjoint.store(0, Ordering::Relaxed);
    }

    /// Counted forward application on raw storage.
    pub fn forward_into(&self, x: &[f64], y: &mut [f64]) {
        self.counters.forward.fetch_add(1, Ordering::Relaxed);
        self.map.forward(x, y);
    }

    /// Counted adjoint application on raw storage.
    pub fn adjoint_into(&self, y: &[f64], x: &mut [f64]) {
        self.counters.adjoint.fetch_add(1, Ordering::Relaxed);
        self.map.adjoint(y, x);
    }

    /// Counted forward application returning fresh storage.
    pub fn forward_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.output().len()];
        self.forward_into(x, &mut y);
        y
    }

    /// Counted adjoint application returning fresh storage.
    pub fn adjoint_vec(&self, y: &[f64]) -> Vec<f64> {
        let mut x = vec![0.0; self.input().len()];
        self.adjoint_into(y, &mut x);
        x
    }

    /// Uncounted forward application, for monitoring code.
    pub fn forward_quiet(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.output().len()];
        self.map.forward(x, &mut y);
        y
    }

    /// Uncounted adjoint application, for monitoring code.
    pub fn adjoint_quiet(&self, y: &[f64]) -> Vec<f64> {
        let mut x = vec![0.0; self.input().len()];
        self.map.adjoint(y, &mut x);
        x
    }

    /// `A x` with shape checking.
    pub fn apply(&self, x: &Element) -> Result<Element, LinOpError> {
        check_shape(self.input(), &x.shape)?;
        Ok(Element {
            shape: self.output().clone(),
            data: self.forward_vec(&x.data),
        })
    }

    /// `A* y` with shape checking.
    pub fn apply_adjoint(&self, y: &Element) -> Result<Element, LinOpError> {
        check_shape(self.output(), &y.shape)?;
        Ok(Element {
            shape: self.input().clone(),
            data: self.adjoint_vec(&y.data),
        })
    }

    /// The adjoint as an operator in its own right.
    pub fn adjoint_op(&self) -> LinOp {
        LinOp::new(AdjointMap(self.clone()))
    }

    /// `self ∘ inner`, i.e. `x ↦ self(inner(x))`.
    pub fn compose(&self, inner: &LinOp) -> Result<LinOp, LinOpError> {
        check_shape(self.input(), inner.output())?;
        Ok(LinOp::new(ComposeMap {
            outer: self.clone(),
            inner: inner.clone(),
        }))
    }

    pub fn scale(&self, a: f64) -> LinOp {
        LinOp::new(ScaleMap {
            a,
            op: self.clone(),
        })
    }

    /// Vertical stack `x ↦ (A_1 x, ..., A_k x)` into a product space.
    pub fn stack(ops: &[LinOp]) -> Result<LinOp, LinOpError> {
        let first = ops
            .first()
            .ok_or_else(|| LinOpError::Invalid("empty stack".into()))?;
        for op in &ops[1..] {
            check_shape(first.input(), op.input())?;
        }
        let output = Shape::product(ops.iter().map(|o| o.output().clone()).collect());
        Ok(LinOp::new(StackMap {
            input: first.input().clone(),
            output,
            ops: ops.to_vec(),
        }))
    }
}

pub(crate) fn check_shape(expected: &Shape, got: &Shape) -> Result<(), LinOpError> {
    if expected == got {
        Ok(())
    } else {
        Err(LinOpError::ShapeMismatch {
            expected: expected.clone(),
            got: got.clone(),
        })
    }
}

struct AdjointMap(LinOp);

impl LinearMap for AdjointMap {
    fn input(&self) -> &Shape {
        self.0.output()
    }
    fn output(&self) -> &Shape {
        self.0.input()
    }
    fn forward(&self, x: &[f64], y: &mut [f64]) {
        self.0.map.adjoint(x, y)
    }
    fn adjoint(&self, y: &[f64], x: &mut [f64]) {
        self.0.map.forward(y, x)
    }
}

struct ComposeMap {
    outer: LinOp,
    inner: LinOp,
}

impl LinearMap for ComposeMap {
    fn input(&self) -> &Shape {
        self.inner.input()
    }
    fn output(&self) -> &Shape {
        self.outer.output()
    }
    fn forward(&self, x: &[f64], y: &mut [f64]) {
        let mid = self.inner.forward_quiet(x);
        self.outer.map.forward(&mid, y);
    }
    fn adjoint(&self, y: &[f64], x: &mut [f64]) {
        let mid = self.outer.adjoint_quiet(y);
        self.inner.map.adjoint(&mid, x);
    }
}

struct ScaleMap {
    a: f64,
    op: LinOp,
}

impl LinearMap for ScaleMap {
    fn input(&self) -> &Shape {
        self.op.input()
    }
    fn output(&self) -> &Shape {
        self.op.output()
    }
    fn forward(&self, x: &[f64], y: &mut [f64]) {
        self.op.map.forward(x, y);
        y.iter_mut().for_each(|v| *v *= self.a);
    }
    fn adjoint(&self, y: &[f64], x: &mut [f64]) {
        self.op.map.adjoint(y, x);
        x.iter_mut().for_each(|v| *v *= self.a);
    }
}

struct StackMap {
    input: Shape,
    output: Shape,
    ops: Vec<LinOp>,
}

impl LinearMap for StackMap {
    fn input(&self) -> &Shape {
        &self.input
    }
    fn output(&self) -> &Shape {
        &self.output
    }
    fn forward(&self, x: &[f64], y: &mut [f64]) {
        for (op, r) in self.ops.iter().zip(self.output.block_ranges()) {
            op.map.forward(x, &mut y[r]);
        }
    }
    fn adjoint(&self, y: &[f64], x: &mut [f64]) {
        x.iter_mut().for_each(|v| *v = 0.0);
        let mut part = vec![0.0; x.len()];
        for (op, r) in self.ops.iter().zip(self.output.block_ranges()) {
            op.map.adjoint(&y[r], &mut part);
            space::axpy(1.0, &part, x);
        }
    }
}
