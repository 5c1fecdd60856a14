//! Builders for the supported model families.
//!
//! A [`ModelSpec`] is the serializable description (kind, operators, data,
//! parameters). [`Model::new`] resolves it into a [`ConicModel`], and
//! [`Model::smooth`] produces the composite dual for any `(mu, x0)`.
//!
//! Sign conventions follow from writing each constraint as `A_i x + b_i in K_i`:
//!
//! | kind              | blocks `(A_i, b_i, K_i)`                                  |
//! |-------------------|-----------------------------------------------------------|
//! | `dantzig`         | `(-A'A, A'y, ||.||_inf <= delta)`                           |
//! | `dantzig_lp`      | `([-A'A; A'A], [delta + A'y; delta - A'y], >= 0)`          |
//! | `lasso`           | `(-A, y, ||.||_2 <= eps)`                                   |
//! | `basis_pursuit`   | `(-A, y, = 0)`                                              |
//! | `nuclear_lasso`   | as `lasso` with a matrix variable                          |
//! | `nuclear_dantzig` | `(-A'A, A'y, ||.||_op <= delta)`                            |
//! | `l1_analysis`     | `(W, 0, penalty alpha ||.||_1)`, `(-A, y, ||.||_2 <= eps)`  |
//! | `tv`              | `(D, 0, penalty beta |.|)`, `(-A, y, ||.||_2 <= eps)`       |
//! | `analysis_plus_tv`| the three blocks above                                     |

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::linops::space::{axpy, dot, norm};
use crate::linops::{
    estimate_norm, read_matrix, Dense, Diag, Diff2d, Element, Identity, LinOp, LinOpError,
    PartialDct, Shape, Subsample,
};
use crate::smoothing::{smooth, Cone, ConeBlock, ConicModel, CompositeDual, Objective, SmoothingError};

pub const SCHEMA: &str = "cfm/1";

#[derive(Debug, thiserror::Error)]
pub enum ModelError {
    #[error("missing parameter {0}")]
    Missing(&'static str),
    #[error("invalid model: {0}")]
    Invalid(String),
    #[error("expected a {expected:?} model, got {got:?}")]
    KindMismatch { expected: ModelKind, got: ModelKind },
    #[error(transparent)]
    LinOp(#[from] LinOpError),
    #[error(transparent)]
    Smoothing(#[from] SmoothingError),
    #[error("problem file {path}: {reason}")]
    File { path: String, reason: String },
    #[error("data are degenerate: {0}")]
    Degenerate(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Dantzig,
    DantzigLp,
    Lasso,
    BasisPursuit,
    NuclearLasso,
    NuclearDantzig,
    L1Analysis,
    Tv,
    AnalysisPlusTv,
}

/// Serializable operator description.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum OperatorSpec {
    /// Row-major dense matrix.
    Dense { rows: usize, cols: usize, data: Vec<f64> },
    /// Dense matrix stored in a CSV or binary matrix file.
    MatrixFile { path: PathBuf },
    Identity { n: usize },
    Diag { d: Vec<f64> },
    PartialDct { n: usize, rows: Vec<usize> },
    SubsampleVector { n: usize, index: Vec<usize> },
    /// Samples 0-based entries `(i, j)` of a `rows x cols` matrix.
    SubsampleMatrix { rows: usize, cols: usize, entries: Vec<(usize, usize)> },
    /// Forward differences of an `n x n` image.
    Diff2d { n: usize },
    /// `ops[0] ∘ ops[1] ∘ ...`
    Compose { ops: Vec<OperatorSpec> },
    Scale { factor: f64, op: Box<OperatorSpec> },
    Adjoint { op: Box<OperatorSpec> },
}

impl OperatorSpec {
    pub fn build(&self) -> Result<LinOp, ModelError> {
        Ok(match self {
            OperatorSpec::Dense { rows, cols, data } => {
                LinOp::new(Dense::new(*rows, *cols, data.clone())?)
            }
            OperatorSpec::MatrixFile { path } => LinOp::new(read_matrix(path)?.into_operator()?),
            OperatorSpec::Identity { n } => LinOp::new(Identity::new(Shape::real(*n))),
            OperatorSpec::Diag { d } => LinOp::new(Diag::new(d.clone())),
            OperatorSpec::PartialDct { n, rows } => LinOp::new(PartialDct::new(*n, rows)?),
            OperatorSpec::SubsampleVector { n, index } => {
                LinOp::new(Subsample::vector(*n, index.clone())?)
            }
            OperatorSpec::SubsampleMatrix {
                rows,
                cols,
                entries,
            } => LinOp::new(Subsample::matrix(*rows, *cols, entries)?),
            OperatorSpec::Diff2d { n } => LinOp::new(Diff2d::new(*n)?),
            OperatorSpec::Compose { ops } => {
                let mut it = ops.iter().rev();
                let first = it
                    .next()
                    .ok_or_else(|| ModelError::Invalid("empty composition".into()))?
                    .build()?;
                it.try_fold(first, |acc, o| o.build()?.compose(&acc).map_err(ModelError::from))?
            }
            OperatorSpec::Scale { factor, op } => op.build()?.scale(*factor),
            OperatorSpec::Adjoint { op } => op.build()?.adjoint_op(),
        })
    }

    fn rebase(&mut self, base: &Path) {
        match self {
            OperatorSpec::MatrixFile { path } if path.is_relative() => *path = base.join(&*path),
            OperatorSpec::Compose { ops } => ops.iter_mut().for_each(|o| o.rebase(base)),
            OperatorSpec::Scale { op, .. } | OperatorSpec::Adjoint { op } => op.rebase(base),
            _ => {}
        }
    }

    fn missing_files(&self, out: &mut Vec<PathBuf>) {
        match self {
            OperatorSpec::MatrixFile { path } if !path.exists() => out.push(path.clone()),
            OperatorSpec::Compose { ops } => ops.iter().for_each(|o| o.missing_files(out)),
            OperatorSpec::Scale { op, .. } | OperatorSpec::Adjoint { op } => op.missing_files(out),
            _ => {}
        }
    }
}

fn schema() -> String {
    SCHEMA.to_string()
}

/// Serializable model description.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    #[serde(default = "schema")]
    pub schema: String,
    pub kind: ModelKind,
    /// Measurement operator.
    pub a: OperatorSpec,
    /// Analysis operator for `l1_analysis` and `analysis_plus_tv`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub w: Option<OperatorSpec>,
    pub y: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha_w: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta_tv: Option<f64>,
    pub mu: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x0: Option<Vec<f64>>,
    /// Per-coordinate weights on the `l1` term (or on the rows of `W`).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<Vec<f64>>,
    /// Step multiplier of the residual block relative to the analysis
    /// blocks; defaults to `||W||^2 / ||A||^2`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub step_ratio: Option<f64>,
}

impl ModelSpec {
    pub fn new(kind: ModelKind, a: OperatorSpec, y: Vec<f64>, mu: f64) -> Self {
        ModelSpec {
            schema: schema(),
            kind,
            a,
            w: None,
            y,
            delta: None,
            epsilon: None,
            alpha_w: None,
            beta_tv: None,
            mu,
            x0: None,
            weights: None,
            step_ratio: None,
        }
    }

    pub fn from_json(text: &str) -> Result<Self, ModelError> {
        let spec: ModelSpec = serde_json::from_str(text).map_err(|e| ModelError::File {
            path: "<string>".into(),
            reason: e.to_string(),
        })?;
        spec.check_schema()?;
        Ok(spec)
    }

    /// Reads a problem file; relative matrix paths resolve against its directory.
    pub fn from_file(path: &Path) -> Result<Self, ModelError> {
        let text = std::fs::read_to_string(path).map_err(|e| ModelError::File {
            path: path.display().to_string(),
            reason: e.to_string(),
        })?;
        let mut spec: ModelSpec = serde_json::from_str(&text).map_err(|e| ModelError::File {
            path: path.display().to_string(),
            reason: e.to_string(),
        })?;
        spec.check_schema()?;
        let base = path.parent().unwrap_or(Path::new("."));
        spec.a.rebase(base);
        if let Some(w) = spec.w.as_mut() {
            w.rebase(base);
        }
        Ok(spec)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model specs always serialize")
    }

    /// Matrix files referenced by this model that do not exist.
    pub fn missing_files(&self) -> Vec<PathBuf> {
        let mut out = Vec::new();
        self.a.missing_files(&mut out);
        if let Some(w) = &self.w {
            w.missing_files(&mut out);
        }
        out
    }

    fn check_schema(&self) -> Result<(), ModelError> {
        if self.schema == SCHEMA {
            Ok(())
        } else {
            Err(ModelError::Invalid(format!("unsupported schema {:?}", self.schema)))
        }
    }
}

/// A resolved model: operators built and the conic form assembled.
#[derive(Clone, Debug)]
pub struct Model {
    pub spec: ModelSpec,
    pub conic: ConicModel,
    pub a: LinOp,
}

fn need(v: Option<f64>, name: &'static str) -> Result<f64, ModelError> {
    let v = v.ok_or(ModelError::Missing(name))?;
    if v >= 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(ModelError::Invalid(format!("{name} must be nonnegative, got {v}")))
    }
}

fn l1_objective(spec: &ModelSpec) -> Objective {
    match &spec.weights {
        Some(w) => Objective::WeightedL1(w.clone()),
        None => Objective::L1,
    }
}

fn gram(a: &LinOp) -> Result<LinOp, ModelError> {
    Ok(a.adjoint_op().compose(a)?)
}

fn side_of(len: usize) -> Result<usize, ModelError> {
    let n = (len as f64).sqrt().round() as usize;
    if n * n == len {
        Ok(n)
    } else {
        Err(ModelError::Invalid(format!("TV needs a square image, got {len} pixels")))
    }
}

const NORM_TOL: f64 = 1e-8;
const NORM_ITERS: usize = 1000;

impl Model {
    pub fn new(spec: &ModelSpec) -> Result<Self, ModelError> {
        if !(spec.mu > 0.0) {
            return Err(SmoothingError::NonPositiveMu(spec.mu).into());
        }
        let a = spec.a.build()?;
        if a.output().len() != spec.y.len() {
            return Err(ModelError::Invalid(format!(
                "y has length {}, operator output has {}",
                spec.y.len(),
                a.output().len()
            )));
        }
        let primal = a.input().clone();
        if let Some(w) = &spec.weights {
            if w.iter().any(|v| !(*v >= 0.0)) {
                return Err(ModelError::Invalid("weights must be nonnegative".into()));
            }
        }
        let y = spec.y.clone();
        let residual = |cone: Cone| ConeBlock::new(a.scale(-1.0), y.clone(), cone);
        let blocks = match spec.kind {
            ModelKind::Dantzig | ModelKind::NuclearDantzig => {
                let delta = need(spec.delta, "delta")?;
                let g = gram(&a)?.scale(-1.0);
                let aty = a.adjoint_quiet(&y);
                let cone = match (&spec.kind, &primal) {
                    (ModelKind::NuclearDantzig, Shape::Matrix { rows, cols }) => {
                        Cone::OperatorNormEpigraph {
                            tau: delta,
                            rows: *rows,
                            cols: *cols,
                        }
                    }
                    (ModelKind::NuclearDantzig, _) => {
                        return Err(ModelError::Invalid("nuclear models need a matrix operator".into()))
                    }
                    _ => Cone::LinfEpigraph { tau: delta },
                };
                vec![ConeBlock::new(g, aty, cone)]
            }
            ModelKind::DantzigLp => {
                let delta = need(spec.delta, "delta")?;
                let g = gram(&a)?;
                let op = LinOp::stack(&[g.scale(-1.0), g])?;
                let aty = a.adjoint_quiet(&y);
                let mut b: Vec<f64> = aty.iter().map(|v| delta + v).collect();
                b.extend(aty.iter().map(|v| delta - v));
                vec![ConeBlock::new(op, b, Cone::Nonneg)]
            }
            ModelKind::Lasso | ModelKind::NuclearLasso => {
                let eps = need(spec.epsilon, "epsilon")?;
                vec![residual(Cone::Soc { tau: eps })]
            }
            ModelKind::BasisPursuit => vec![residual(Cone::Zero)],
            ModelKind::L1Analysis | ModelKind::Tv | ModelKind::AnalysisPlusTv => {
                let eps = need(spec.epsilon, "epsilon")?;
                let mut blocks = Vec::new();
                let mut analysis_norm = 0.0f64;
                if matches!(spec.kind, ModelKind::L1Analysis | ModelKind::AnalysisPlusTv) {
                    let weight = if spec.kind == ModelKind::L1Analysis {
                        spec.alpha_w.unwrap_or(1.0)
                    } else {
                        need(spec.alpha_w, "alpha_w")?
                    };
                    let mut w = spec
                        .w
                        .as_ref()
                        .ok_or(ModelError::Missing("w"))?
                        .build()?;
                    if let Some(r) = &spec.weights {
                        w = LinOp::new(Diag::new(r.clone())).compose(&w)?;
                    }
                    analysis_norm = analysis_norm.max(estimate_norm(&w, NORM_TOL, NORM_ITERS, 0));
                    let zero = vec![0.0; w.output().len()];
                    blocks.push(ConeBlock::new(w, zero, Cone::L1Penalty { weight }));
                }
                if matches!(spec.kind, ModelKind::Tv | ModelKind::AnalysisPlusTv) {
                    let weight = if spec.kind == ModelKind::Tv {
                        spec.beta_tv.unwrap_or(1.0)
                    } else {
                        need(spec.beta_tv, "beta_tv")?
                    };
                    let d = LinOp::new(Diff2d::new(side_of(primal.len())?)?);
                    analysis_norm = analysis_norm.max(estimate_norm(&d, NORM_TOL, NORM_ITERS, 0));
                    let zero = vec![0.0; d.output().len()];
                    blocks.push(ConeBlock::new(d, zero, Cone::ComplexL1Penalty { weight }));
                }
                let mut res = residual(Cone::Soc { tau: eps });
                res.step_scale = match spec.step_ratio {
                    Some(r) if r > 0.0 => r,
                    Some(r) => return Err(ModelError::Invalid(format!("step ratio {r} must be positive"))),
                    None => {
                        let na = estimate_norm(&a, NORM_TOL, NORM_ITERS, 0);
                        if na > 0.0 && analysis_norm > 0.0 {
                            (analysis_norm / na).powi(2)
                        } else {
                            1.0
                        }
                    }
                };
                blocks.push(res);
                blocks
            }
        };
        let objective = match spec.kind {
            ModelKind::NuclearLasso | ModelKind::NuclearDantzig => match primal {
                Shape::Matrix { rows, cols } => Objective::Nuclear { rows, cols },
                _ => return Err(ModelError::Invalid("nuclear models need a matrix operator".into())),
            },
            ModelKind::L1Analysis | ModelKind::Tv | ModelKind::AnalysisPlusTv => Objective::Zero,
            _ => l1_objective(spec),
        };
        let conic = ConicModel {
            objective,
            primal,
            blocks,
        };
        conic.validate()?;
        Ok(Model {
            spec: spec.clone(),
            conic,
            a,
        })
    }

    pub fn primal_shape(&self) -> &Shape {
        &self.conic.primal
    }

    /// The model center, or zero.
    pub fn center(&self) -> Result<Element, ModelError> {
        match &self.spec.x0 {
            None => Ok(Element::zeros(self.conic.primal.clone())),
            Some(x0) => Element::new(self.conic.primal.clone(), x0.clone())
                .ok_or_else(|| ModelError::Invalid("x0 has the wrong length".into())),
        }
    }

    pub fn smooth(&self, mu: f64, x0: &Element) -> Result<CompositeDual, ModelError> {
        Ok(smooth(&self.conic, mu, x0)?)
    }

    /// The composite dual at the model's own `mu` and `x0`.
    pub fn build(&self) -> Result<CompositeDual, ModelError> {
        self.smooth(self.spec.mu, &self.center()?)
    }
}

/// Builds the composite dual for any kind.
pub fn build(spec: &ModelSpec) -> Result<CompositeDual, ModelError> {
    Model::new(spec)?.build()
}

fn build_kind(spec: &ModelSpec, kind: ModelKind) -> Result<CompositeDual, ModelError> {
    if spec.kind != kind {
        return Err(ModelError::KindMismatch {
            expected: kind,
            got: spec.kind,
        });
    }
    build(spec)
}

pub fn build_dantzig(spec: &ModelSpec) -> Result<CompositeDual, ModelError> {
    build_kind(spec, ModelKind::Dantzig)
}

pub fn build_dantzig_lp(spec: &ModelSpec) -> Result<CompositeDual, ModelError> {
    build_kind(spec, ModelKind::DantzigLp)
}

pub fn build_lasso(spec: &ModelSpec) -> Result<CompositeDual, ModelError> {
    build_kind(spec, ModelKind::Lasso)
}

pub fn build_basis_pursuit(spec: &ModelSpec) -> Result<CompositeDual, ModelError> {
    build_kind(spec, ModelKind::BasisPursuit)
}

pub fn build_nuclear_lasso(spec: &ModelSpec) -> Result<CompositeDual, ModelError> {
    build_kind(spec, ModelKind::NuclearLasso)
}

pub fn build_nuclear_dantzig(spec: &ModelSpec) -> Result<CompositeDual, ModelError> {
    build_kind(spec, ModelKind::NuclearDantzig)
}

pub fn build_l1_analysis(spec: &ModelSpec) -> Result<CompositeDual, ModelError> {
    build_kind(spec, ModelKind::L1Analysis)
}

pub fn build_tv(spec: &ModelSpec) -> Result<CompositeDual, ModelError> {
    build_kind(spec, ModelKind::Tv)
}

pub fn build_analysis_plus_tv(spec: &ModelSpec) -> Result<CompositeDual, ModelError> {
    build_kind(spec, ModelKind::AnalysisPlusTv)
}

/// One reweighting step: weights `1 / (|W x|_i + eps_w)`, with `W = I` for
/// the plain `l1` kinds. The analysis operator itself is left unchanged so
/// repeated steps do not compound.
pub fn reweight(spec: &ModelSpec, x_prev: &[f64], eps_w: f64) -> Result<ModelSpec, ModelError> {
    if !(eps_w > 0.0) {
        return Err(ModelError::Invalid("reweighting epsilon must be positive".into()));
    }
    let wx = match spec.kind {
        ModelKind::Dantzig | ModelKind::DantzigLp | ModelKind::Lasso | ModelKind::BasisPursuit => {
            x_prev.to_vec()
        }
        ModelKind::L1Analysis | ModelKind::AnalysisPlusTv => {
            let w = spec.w.as_ref().ok_or(ModelError::Missing("w"))?.build()?;
            if w.input().len() != x_prev.len() {
                return Err(ModelError::Invalid("x has the wrong length".into()));
            }
            w.forward_quiet(x_prev)
        }
        k => return Err(ModelError::Invalid(format!("{k:?} models cannot be reweighted"))),
    };
    let mut out = spec.clone();
    out.weights = Some(wx.iter().map(|v| 1.0 / (v.abs() + eps_w)).collect());
    Ok(out)
}

/// Conjugate gradients for `M v = rhs` with a symmetric positive
/// semidefinite `M` given as a closure.
fn cg(apply: impl Fn(&[f64]) -> Vec<f64>, rhs: &[f64], tol: f64, max_iters: usize) -> Vec<f64> {
    let mut x = vec![0.0; rhs.len()];
    let mut r = rhs.to_vec();
    let mut p = r.clone();
    let mut rr = dot(&r, &r);
    let stop = tol * tol * rr;
    for _ in 0..max_iters {
        if rr <= stop || rr == 0.0 {
            break;
        }
        let ap = apply(&p);
        let pap = dot(&p, &ap);
        if pap <= 0.0 {
            break;
        }
        let a = rr / pap;
        axpy(a, &p, &mut x);
        axpy(-a, &ap, &mut r);
        let rr_new = dot(&r, &r);
        let b = rr_new / rr;
        rr = rr_new;
        for (pi, ri) in p.iter_mut().zip(&r) {
            *pi = ri + b * *pi;
        }
    }
    x
}

/// Least-squares (minimum-norm when underdetermined) solution of `A x = y`.
pub fn least_squares(a: &LinOp, y: &[f64], tol: f64) -> Vec<f64> {
    let (m, n) = (a.output().len(), a.input().len());
    let iters = 10 * m.max(n) + 100;
    if m < n {
        let v = cg(|v| a.forward_quiet(&a.adjoint_quiet(v)), y, tol, iters);
        a.adjoint_quiet(&v)
    } else {
        let rhs = a.adjoint_quiet(y);
        cg(|x| a.adjoint_quiet(&a.forward_quiet(x)), &rhs, tol, iters)
    }
}

/// Smoothing heuristic `mu = 0.1 ||W x_LS|| / (||x_LS||^2 / 2)`.
pub fn default_mu(spec: &ModelSpec) -> Result<f64, ModelError> {
    let a = spec.a.build()?;
    if a.output().len() != spec.y.len() {
        return Err(ModelError::Invalid("y has the wrong length".into()));
    }
    let x = least_squares(&a, &spec.y, 1e-8);
    let nx = norm(&x);
    if nx == 0.0 {
        return Err(ModelError::Degenerate("least-squares solution is zero".into()));
    }
    let wx = match &spec.w {
        Some(w) => norm(&w.build()?.forward_quiet(&x)),
        None => nx,
    };
    Ok(0.1 * wx / (0.5 * nx * nx))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solvers::Composite;

    fn identity_spec(kind: ModelKind, y: Vec<f64>) -> ModelSpec {
        let n = y.len();
        ModelSpec::new(kind, OperatorSpec::Identity { n }, y, 1.0)
    }

    #[test]
    fn dantzig_requires_delta() {
        let spec = identity_spec(ModelKind::Dantzig, vec![1.0]);
        assert!(matches!(build_dantzig(&spec), Err(ModelError::Missing("delta"))));
        let mut bad = spec.clone();
        bad.delta = Some(-1.0);
        assert!(matches!(build_dantzig(&bad), Err(ModelError::Invalid(_))));
    }

    #[test]
    fn kind_mismatch_is_reported() {
        let mut spec = identity_spec(ModelKind::Lasso, vec![1.0]);
        spec.epsilon = Some(0.1);
        assert!(matches!(build_dantzig(&spec), Err(ModelError::KindMismatch { .. })));
    }

    #[test]
    fn combined_model_has_no_default_weights() {
        let mut spec = identity_spec(ModelKind::AnalysisPlusTv, vec![0.0; 4]);
        spec.epsilon = Some(0.1);
        spec.w = Some(OperatorSpec::Identity { n: 4 });
        spec.alpha_w = Some(1.0);
        assert!(matches!(build(&spec), Err(ModelError::Missing("beta_tv"))));
    }

    #[test]
    fn dantzig_lp_gradient_at_zero() {
        // x(0) = x0 = 0, so grad = b = [delta + A'y; delta - A'y]
        let mut spec = identity_spec(ModelKind::DantzigLp, vec![0.3]);
        spec.delta = Some(0.5);
        let cd = build(&spec).unwrap();
        let (_, g) = cd.value_grad(&[0.0, 0.0]);
        assert_eq!(g, vec![0.8, 0.2]);
    }

    #[test]
    fn default_mu_for_orthonormal_rows() {
        let spec = ModelSpec::new(
            ModelKind::Lasso,
            OperatorSpec::Dense {
                rows: 2,
                cols: 3,
                data: vec![1.0, 0.0, 0.0, 0.0, 1.0, 0.0],
            },
            vec![3.0, 4.0],
            1.0,
        );
        let mu = default_mu(&spec).unwrap();
        assert!((mu - 0.2 / 5.0).abs() < 1e-12);
        let zero = ModelSpec {
            y: vec![0.0, 0.0],
            ..spec
        };
        assert!(matches!(default_mu(&zero), Err(ModelError::Degenerate(_))));
    }

    #[test]
    fn reweight_uses_current_point() {
        let spec = identity_spec(ModelKind::Lasso, vec![1.0, 2.0]);
        let r = reweight(&spec, &[1.0, 0.0], 0.5).unwrap();
        let w = r.weights.unwrap();
        assert!((w[0] - 1.0 / 1.5).abs() < 1e-15 && (w[1] - 2.0).abs() < 1e-15);
    }

    #[test]
    fn spec_json_roundtrip() {
        let mut spec = identity_spec(ModelKind::Dantzig, vec![1.0, -1.0]);
        spec.delta = Some(0.25);
        let back = ModelSpec::from_json(&spec.to_json()).unwrap();
        assert_eq!(back, spec);
    }
}
