//! Proximity operators and the nonsmooth dual terms built from them.
//!
//! The free functions are the closed-form building blocks. [`NonsmoothFn`]
//! wraps them into the generalized projection used by every solver:
//!
//! ```text
//! argmin_z  h(z) + <g, z> + ||z - z0||^2 / (2t)  =  prox_{t h}(z0 - t g)
//! ```

use std::ops::Range;
use std::sync::atomic::{AtomicU64, Ordering};

use faer::MatRef;

#[derive(Debug, thiserror::Error)]
pub enum ProxError {
    #[error("threshold must be nonnegative, got {0}")]
    NegativeThreshold(f64),
    #[error("length mismatch: expected {expected}, got {got}")]
    Length { expected: usize, got: usize },
    #[error("complex storage must have even length, got {0}")]
    OddComplex(usize),
}

fn check_tau(tau: f64) -> Result<(), ProxError> {
    if tau >= 0.0 {
        Ok(())
    } else {
        Err(ProxError::NegativeThreshold(tau))
    }
}

/// Componentwise soft thresholding `sign(v) max(|v| - tau, 0)`.
pub fn soft_threshold(v: &[f64], tau: f64) -> Result<Vec<f64>, ProxError> {
    check_tau(tau)?;
    Ok(v.iter().map(|&x| st(x, tau)).collect())
}

#[inline]
pub(crate) fn st(x: f64, tau: f64) -> f64 {
    if x > tau {
        x - tau
    } else if x < -tau {
        x + tau
    } else {
        0.0
    }
}

/// Soft thresholding with a separate threshold per coordinate.
pub fn weighted_soft_threshold(v: &[f64], tau: &[f64]) -> Result<Vec<f64>, ProxError> {
    if v.len() != tau.len() {
        return Err(ProxError::Length {
            expected: v.len(),
            got: tau.len(),
        });
    }
    if let Some(&t) = tau.iter().find(|t| !(**t >= 0.0)) {
        return Err(ProxError::NegativeThreshold(t));
    }
    Ok(v.iter().zip(tau).map(|(&x, &t)| st(x, t)).collect())
}

/// Block shrinkage `max(1 - tau/||v||, 0) v`, the prox of `tau ||.||_2`.
pub fn shrink(v: &[f64], tau: f64) -> Result<Vec<f64>, ProxError> {
    check_tau(tau)?;
    let mut out = v.to_vec();
    shrink_inplace(&mut out, tau);
    Ok(out)
}

fn shrink_inplace(v: &mut [f64], tau: f64) {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let s = if n > tau { 1.0 - tau / n } else { 0.0 };
    v.iter_mut().for_each(|x| *x *= s);
}

/// Componentwise clipping to `[-tau, tau]`.
pub fn trunc(v: &[f64], tau: f64) -> Result<Vec<f64>, ProxError> {
    check_tau(tau)?;
    Ok(v.iter().map(|x| x.clamp(-tau, tau)).collect())
}

/// Clips each complex entry (interleaved storage) to modulus at most `tau`.
pub fn ctrunc(v: &[f64], tau: f64) -> Result<Vec<f64>, ProxError> {
    check_tau(tau)?;
    if v.len() % 2 != 0 {
        return Err(ProxError::OddComplex(v.len()));
    }
    let mut out = v.to_vec();
    ctrunc_inplace(&mut out, tau);
    Ok(out)
}

fn ctrunc_inplace(v: &mut [f64], tau: f64) {
    for c in v.chunks_exact_mut(2) {
        let m = c[0].hypot(c[1]);
        if m > tau {
            let s = tau / m;
            c[0] *= s;
            c[1] *= s;
        }
    }
}

/// Projection onto the nonnegative orthant.
pub fn pos(v: &[f64]) -> Vec<f64> {
    v.iter().map(|x| x.max(0.0)).collect()
}

/// Projection onto the second-order cone `{(v, tau) : ||v||_2 <= tau}`.
pub fn project_soc(v: &[f64], tau: f64) -> (Vec<f64>, f64) {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if n <= tau {
        (v.to_vec(), tau)
    } else if n <= -tau {
        (vec![0.0; v.len()], 0.0)
    } else {
        let t = 0.5 * (n + tau);
        (v.iter().map(|x| x * t / n).collect(), t)
    }
}

/// Singular values of a column-major `rows x cols` matrix, descending.
/// NaN-filled when the decomposition fails (non-finite input).
pub fn singular_values(rows: usize, cols: usize, data: &[f64]) -> Vec<f64> {
    if rows == 0 || cols == 0 {
        return Vec::new();
    }
    let m = MatRef::from_column_major_slice(data, rows, cols);
    let mut s = m.singular_values().unwrap_or_else(|_| vec![f64::NAN; rows.min(cols)]);
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

/// Singular value thresholding of a column-major matrix, returning the
/// thresholded matrix and its rank.
pub fn svt(rows: usize, cols: usize, data: &[f64], tau: f64) -> Result<(Vec<f64>, usize), ProxError> {
    check_tau(tau)?;
    if data.len() != rows * cols {
        return Err(ProxError::Length {
            expected: rows * cols,
            got: data.len(),
        });
    }
    Ok(svt_unchecked(rows, cols, data, tau))
}

fn svt_unchecked(rows: usize, cols: usize, data: &[f64], tau: f64) -> (Vec<f64>, usize) {
    if rows == 0 || cols == 0 {
        return (data.to_vec(), 0);
    }
    let m = MatRef::from_column_major_slice(data, rows, cols);
    let Ok(svd) = m.thin_svd() else {
        return (vec![f64::NAN; data.len()], 0);
    };
    let (u, sv, v) = (svd.U(), svd.S(), svd.V());
    let mut out = vec![0.0; rows * cols];
    let mut rank = 0;
    for k in 0..rows.min(cols) {
        let s = sv[k] - tau;
        if s <= 0.0 {
            continue;
        }
        rank += 1;
        for j in 0..cols {
            let vs = v[(j, k)] * s;
            for (o, i) in out[j * rows..(j + 1) * rows].iter_mut().zip(0..rows) {
                *o += u[(i, k)] * vs;
            }
        }
    }
    (out, rank)
}

/// A proper convex function `h` with a cheap proximity operator.
pub trait NonsmoothFn: Send + Sync {
    /// `h(z)`; `f64::INFINITY` outside the domain.
    fn value(&self, z: &[f64]) -> f64;

    /// `out = argmin_z t h(z) + ||z - v||^2 / 2`.
    fn prox(&self, v: &[f64], t: f64, out: &mut [f64]);

    /// Per-block step multipliers `(range, s)`; the generalized projection
    /// uses step `s t` on each block.
    fn block_scales(&self) -> Vec<(Range<usize>, f64)> {
        Vec::new()
    }

    /// Generalized projection `argmin h(z) + <g, z> + ||z - z0||_S^2 / (2t)`,
    /// where `S` is the block metric from [`block_scales`](Self::block_scales).
    fn project(&self, z0: &[f64], g: &[f64], t: f64, out: &mut [f64]) {
        let v: Vec<f64> = z0.iter().zip(g).map(|(z, g)| z - t * g).collect();
        self.prox(&v, t, out);
    }
}

/// Tolerance used when testing membership for indicator functions.
const FEAS_TOL: f64 = 1e-9;

/// `h = 0`.
pub struct Zero;

impl NonsmoothFn for Zero {
    fn value(&self, _z: &[f64]) -> f64 {
        0.0
    }
    fn prox(&self, v: &[f64], _t: f64, out: &mut [f64]) {
        out.copy_from_slice(v);
    }
}

/// `h(z) = scale ||z||_1`
pub struct ScaledL1(pub f64);

impl NonsmoothFn for ScaledL1 {
    fn value(&self, z: &[f64]) -> f64 {
        self.0 * z.iter().map(|x| x.abs()).sum::<f64>()
    }
    fn prox(&self, v: &[f64], t: f64, out: &mut [f64]) {
        for (o, &x) in out.iter_mut().zip(v) {
            *o = st(x, t * self.0);
        }
    }
}

/// `h(z) = scale ||z||_2`
pub struct ScaledL2(pub f64);

impl NonsmoothFn for ScaledL2 {
    fn value(&self, z: &[f64]) -> f64 {
        self.0 * z.iter().map(|x| x * x).sum::<f64>().sqrt()
    }
    fn prox(&self, v: &[f64], t: f64, out: &mut [f64]) {
        out.copy_from_slice(v);
        shrink_inplace(out, t * self.0);
    }
}

/// `h(Z) = scale ||Z||_*` on column-major `rows x cols` matrices.
pub struct ScaledNuclear {
    pub scale: f64,
    pub rows: usize,
    pub cols: usize,
    calls: AtomicU64,
}

impl ScaledNuclear {
    pub fn new(scale: f64, rows: usize, cols: usize) -> Self {
        ScaledNuclear {
            scale,
            rows,
            cols,
            calls: AtomicU64::new(0),
        }
    }

    /// Number of SVT evaluations performed by [`prox`](NonsmoothFn::prox).
    pub fn svt_calls(&self) -> u64 {
        self.calls.load(Ordering::Relaxed)
    }
}

impl NonsmoothFn for ScaledNuclear {
    fn value(&self, z: &[f64]) -> f64 {
        self.scale * singular_values(self.rows, self.cols, z).iter().sum::<f64>()
    }
    fn prox(&self, v: &[f64], t: f64, out: &mut [f64]) {
        self.calls.fetch_add(1, Ordering::Relaxed);
        let (m, _) = svt_unchecked(self.rows, self.cols, v, t * self.scale);
        out.copy_from_slice(&m);
    }
}

/// Indicator of the nonnegative orthant.
pub struct NonnegIndicator;

impl NonsmoothFn for NonnegIndicator {
    fn value(&self, z: &[f64]) -> f64 {
        if z.iter().all(|&x| x >= -FEAS_TOL) {
            0.0
        } else {
            f64::INFINITY
        }
    }
    fn prox(&self, v: &[f64], _t: f64, out: &mut [f64]) {
        for (o, &x) in out.iter_mut().zip(v) {
            *o = x.max(0.0);
        }
    }
}

/// Indicator of `{z : ||z||_inf <= bound}`.
pub struct LinfBall(pub f64);

impl NonsmoothFn for LinfBall {
    fn value(&self, z: &[f64]) -> f64 {
        let lim = self.0 + FEAS_TOL * self.0.max(1.0);
        if z.iter().all(|x| x.abs() <= lim) {
            0.0
        } else {
            f64::INFINITY
        }
    }
    fn prox(&self, v: &[f64], _t: f64, out: &mut [f64]) {
        for (o, &x) in out.iter_mut().zip(v) {
            *o = x.clamp(-self.0, self.0);
        }
    }
}

/// Indicator of `{z : |z_k| <= bound}` for interleaved complex storage.
pub struct ComplexBall(pub f64);

impl NonsmoothFn for ComplexBall {
    fn value(&self, z: &[f64]) -> f64 {
        let lim = self.0 + FEAS_TOL * self.0.max(1.0);
        if z.chunks_exact(2).all(|c| c[0].hypot(c[1]) <= lim) {
            0.0
        } else {
            f64::INFINITY
        }
    }
    fn prox(&self, v: &[f64], _t: f64, out: &mut [f64]) {
        out.copy_from_slice(v);
        ctrunc_inplace(out, self.0);
    }
}

/// Separable sum over the blocks of a product space, each block carrying its
/// own step multiplier.
pub struct BlockSum {
    blocks: Vec<(Range<usize>, f64, Box<dyn NonsmoothFn>)>,
}

impl BlockSum {
    /// `blocks` lists `(length, step multiplier, term)` in storage order.
    pub fn new(blocks: Vec<(usize, f64, Box<dyn NonsmoothFn>)>) -> Self {
        let mut start = 0;
        let blocks = blocks
            .into_iter()
            .map(|(len, s, h)| {
                let r = start..start + len;
                start += len;
                (r, s, h)
            })
            .collect();
        BlockSum { blocks }
    }

    pub fn terms(&self) -> impl Iterator<Item = &dyn NonsmoothFn> {
        self.blocks.iter().map(|(_, _, h)| h.as_ref())
    }
}

impl NonsmoothFn for BlockSum {
    fn value(&self, z: &[f64]) -> f64 {
        self.blocks
            .iter()
            .map(|(r, _, h)| h.value(&z[r.clone()]))
            .sum()
    }
    fn prox(&self, v: &[f64], t: f64, out: &mut [f64]) {
        for (r, s, h) in &self.blocks {
            h.prox(&v[r.clone()], s * t, &mut out[r.clone()]);
        }
    }
    fn block_scales(&self) -> Vec<(Range<usize>, f64)> {
        self.blocks.iter().map(|(r, s, _)| (r.clone(), *s)).collect()
    }
    fn project(&self, z0: &[f64], g: &[f64], t: f64, out: &mut [f64]) {
        for (r, s, h) in &self.blocks {
            let r = r.clone();
            let ts = s * t;
            let v: Vec<f64> = z0[r.clone()]
                .iter()
                .zip(&g[r.clone()])
                .map(|(z, g)| z - ts * g)
                .collect();
            h.prox(&v, ts, &mut out[r]);
        }
    }
}
