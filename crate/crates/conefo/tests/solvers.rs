use conefo::continuation::{continue_standard, ContinuationOptions};
use conefo::linops::space::{dist, norm};
use conefo::models::{build, Model, ModelKind, ModelSpec, OperatorSpec};
use conefo::prox::{NonsmoothFn, Zero};
use conefo::solvers::{
    backtrack_check, minimize, solve, solve_at_cached, Composite, StepPolicy, StepSample, SolveError, SolverOptions,
    TestMode, Variant, Verdict,
};

fn identity_dantzig(y: Vec<f64>, delta: f64, mu: f64) -> ModelSpec {
    let mut spec = ModelSpec::new(ModelKind::Dantzig, OperatorSpec::Identity { n: y.len() }, y, mu);
    spec.delta = Some(delta);
    spec
}

#[test]
fn every_variant_solves_identity_dantzig() {
    let spec = identity_dantzig(vec![3.0, -1.0, 0.2], 0.5, 1e-3);
    let cd = build(&spec).unwrap();
    for v in Variant::ALL {
        let opts = SolverOptions::default().with_variant(v);
        let sol = solve(&cd, &opts, None).unwrap();
        let err = dist(&sol.x.data, &[2.5, -0.5, 0.0]);
        assert!(err < 1e-4, "{v}: error {err}");
        assert_eq!(sol.trace.rows.len(), sol.iterations + 1);
    }
}

#[test]
fn zero_iterations_returns_start() {
    let cd = build(&identity_dantzig(vec![1.0], 0.1, 1.0)).unwrap();
    let opts = SolverOptions {
        max_iters: 0,
        ..Default::default()
    };
    let sol = solve(&cd, &opts, None).unwrap();
    assert_eq!(sol.z.data, vec![0.0]);
    assert_eq!(sol.trace.rows.len(), 1);
}

#[test]
fn lasso_identity_through_continuation() {
    let mut spec = ModelSpec::new(
        ModelKind::Lasso,
        OperatorSpec::Identity { n: 4 },
        vec![10.0, 0.0, 0.0, 0.0],
        1.0,
    );
    spec.epsilon = Some(1.0);
    let model = Model::new(&spec).unwrap();
    let out = continue_standard(&model, &SolverOptions::default(), &ContinuationOptions::default()).unwrap();
    assert!(dist(&out.x.data, &[9.0, 0.0, 0.0, 0.0]) < 1e-6, "{:?}", out.x.data);
}

/// `g(z) = (z - c)^2 / 2 * scale` on the real line, a diverging test problem
/// when the fixed step is far too long.
struct Quadratic {
    q: Vec<f64>,
    c: Vec<f64>,
}

impl Composite for Quadratic {
    fn dim(&self) -> usize {
        self.q.len()
    }
    fn value(&self, z: &[f64]) -> f64 {
        z.iter()
            .zip(&self.q)
            .zip(&self.c)
            .map(|((z, q), c)| 0.5 * q * (z - c) * (z - c))
            .sum()
    }
    fn value_grad(&self, z: &[f64]) -> (f64, Vec<f64>) {
        let g = z
            .iter()
            .zip(&self.q)
            .zip(&self.c)
            .map(|((z, q), c)| q * (z - c))
            .collect();
        (self.value(z), g)
    }
    fn nonsmooth(&self) -> &dyn NonsmoothFn {
        &Zero
    }
}

#[test]
fn divergence_is_reported_with_trace() {
    let p = Quadratic {
        q: vec![100.0],
        c: vec![1.0],
    };
    let opts = SolverOptions {
        variant: Variant::Gra,
        step: StepPolicy::Fixed { lipschitz: 1.0 },
        ..Default::default()
    };
    match minimize(&p, &opts, &[0.0]) {
        Err(SolveError::Diverged { trace, .. }) => assert!(trace.rows.len() > 1),
        other => panic!("expected divergence, got {other:?}"),
    }
}

#[test]
fn backtracking_examples_on_quadratic() {
    let p = Quadratic {
        q: vec![2.0, 0.5],
        c: vec![0.0, 0.0],
    };
    // The stable test asks for twice the curvature, so L = 2 max(q) passes both.
    let y = [1.0, 1.0];
    let (g_y, grad_y) = p.value_grad(&y);
    for (lk, pass) in [(4.0, true), (0.5, false)] {
        let z: Vec<f64> = y.iter().zip(&grad_y).map(|(y, g)| y - g / lk).collect();
        let (g_z, grad_z) = p.value_grad(&z);
        let s = StepSample {
            y: &y,
            z: &z,
            g_y,
            grad_y: &grad_y,
            g_z,
            grad_z: Some(&grad_z),
        };
        for mode in [TestMode::Standard, TestMode::Stable] {
            let v = backtrack_check(mode, 1e-6, lk, 0.5, &s, None);
            assert_eq!(v == Verdict::Accept, pass, "{mode:?} at L = {lk}");
            if let Verdict::Increase(nl) = v {
                assert!(nl >= lk / 0.5);
            }
        }
    }
}

#[test]
fn cached_at_matches_plain_at_with_one_pass_per_application() {
    let (m, n) = (15, 40);
    let a = OperatorSpec::Dense {
        rows: m,
        cols: n,
        data: conefo::testgen::gaussian_matrix(m, n, 31),
    };
    let mut spec = ModelSpec::new(ModelKind::Dantzig, a, conefo::testgen::gaussian_matrix(1, m, 32), 0.2);
    spec.delta = Some(0.1);
    let opts = SolverOptions {
        step: StepPolicy::backtracking_from(1e-3),
        max_iters: 100,
        tol: 0.0,
        ..Default::default()
    };
    let cached_cd = build(&spec).unwrap();
    let cached = solve_at_cached(&cached_cd, &opts, None).unwrap();
    let plain = solve(&build(&spec).unwrap(), &opts, None).unwrap();
    let backtracks: u64 = cached.trace.rows.iter().map(|r| r.backtracks as u64).sum();
    assert!(backtracks > 0);
    let passes = cached.iterations as u64 + backtracks;
    let c = cached_cd.operator().counts();
    assert_eq!((c.forward, c.adjoint), (passes, passes));
    assert!(dist(&cached.z.data, &plain.z.data) <= 1e-10 * norm(&plain.z.data).max(1.0));
    for (a, b) in cached.trace.rows.iter().zip(&plain.trace.rows) {
        assert_eq!(a.backtracks, b.backtracks, "iteration {}", a.iter);
    }
}
