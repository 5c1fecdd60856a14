//! End-to-end acceptance suite. Each criterion prints one PASS/FAIL line with
//! its measured figures; the binary exits nonzero if any criterion fails.

use std::error::Error;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use conefo::linops::space::{dist, dot, norm};
use conefo::linops::{estimate_norm, Dense, Diag, Diff2d, Identity, PartialDct, Subsample};
use conefo::models::{self, Model, ModelKind, ModelSpec, OperatorSpec};
use conefo::prox::{
    ctrunc, pos, project_soc, shrink, soft_threshold, svt, trunc, weighted_soft_threshold, ComplexBall,
    LinfBall, NonnegIndicator, NonsmoothFn, ScaledL1, ScaledL2, ScaledNuclear,
};
use conefo::smoothing::{moreau_value_grad, relative_error, InnerSolution};
use conefo::solvers::{solve, solve_at_cached, Composite, SolverOptions, StepPolicy, Variant};
use conefo::testgen::{
    gaussian_matrix, gen_basis_pursuit_exact, gen_dantzig_exact, gen_lasso_exact, gen_sparse_signal,
    with_retries, Budget, ExactInstance,
};
use conefo::{CompositeDual, Element, LinOp, Shape};
use conefo_cli::experiments::*;
use nalgebra::{DMatrix, DVector};

type Outcome = Result<(bool, String), Box<dyn Error>>;

fn randn(n: usize, seed: u64) -> Vec<f64> {
    gaussian_matrix(1, n, seed)
}

fn max_of(it: impl IntoIterator<Item = f64>) -> f64 {
    it.into_iter().fold(0.0, f64::max)
}

// ---------------------------------------------------------------- 1

fn adjoint_suite() -> Outcome {
    let dense = |m, n, seed| LinOp::new(Dense::new(m, n, gaussian_matrix(m, n, seed)).unwrap());
    let a = dense(7, 5, 1);
    let d5 = LinOp::new(Diag::new(randn(5, 2)));
    let dct = LinOp::new(PartialDct::new(16, &[0, 3, 5, 10, 15])?);
    let diff = LinOp::new(Diff2d::new(5)?);
    let ops: Vec<(&str, LinOp)> = vec![
        ("dense", a.clone()),
        ("identity", LinOp::new(Identity::new(Shape::real(6)))),
        ("diag", d5.clone()),
        ("subsample", LinOp::new(Subsample::vector(10, vec![3, 0, 7, 9])?)),
        ("subsample_matrix", LinOp::new(Subsample::matrix(4, 3, &[(0, 0), (3, 1), (2, 2), (1, 0)])?)),
        ("partial_dct", dct.clone()),
        ("diff2d", diff.clone()),
        ("compose", a.compose(&d5)?),
        ("gram", dct.adjoint_op().compose(&dct)?),
        ("scale", a.scale(-2.5)),
        ("adjoint", a.adjoint_op()),
        ("adjoint_diff2d", diff.adjoint_op()),
        ("stack", LinOp::stack(&[a.clone(), d5.clone(), LinOp::new(Identity::new(Shape::real(5)))])?),
        ("compose_stack", LinOp::stack(&[a.compose(&d5)?, d5.scale(3.0)])?.adjoint_op()),
    ];
    let mut worst = 0.0f64;
    let mut bad = Vec::new();
    for (name, op) in &ops {
        let (n, m) = (op.input().len(), op.output().len());
        let mut w = 0.0f64;
        for k in 0..100 {
            let x = randn(n, 1000 + 2 * k);
            let y = randn(m, 1001 + 2 * k);
            let ax = op.forward_vec(&x);
            let aty = op.adjoint_vec(&y);
            let scale = (norm(&ax) * norm(&y)).max(norm(&x) * norm(&aty)).max(1.0);
            w = w.max((dot(&ax, &y) - dot(&x, &aty)).abs() / scale);
        }
        if w > 1e-10 {
            bad.push(format!("{name}={w:.1e}"));
        }
        worst = worst.max(w);
    }
    Ok((bad.is_empty(), format!("{} operators, worst {worst:.1e} {}", ops.len(), bad.join(" "))))
}

// ---------------------------------------------------------------- 2

/// Golden-section minimizer of a convex function on `[lo, hi]`.
fn argmin_1d(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    for _ in 0..200 {
        let a = hi - r * (hi - lo);
        let b = lo + r * (hi - lo);
        if f(a) <= f(b) {
            hi = b;
        } else {
            lo = a;
        }
    }
    0.5 * (lo + hi)
}

fn prox_oracles() -> Outcome {
    let v = randn(200, 77).iter().map(|x| 2.0 * x).collect::<Vec<_>>();
    let taus = randn(200, 78).iter().map(|x| x.abs()).collect::<Vec<_>>();
    let q = |x: f64, c: f64| 0.5 * (x - c) * (x - c);
    let mut errs: Vec<(&str, f64)> = Vec::new();
    let mut push = |name: &'static str, e: f64| match errs.iter_mut().find(|(n, _)| *n == name) {
        Some((_, w)) => *w = w.max(e),
        None => errs.push((name, e)),
    };

    let (tau, t) = (0.7, 1.3);
    let st = soft_threshold(&v, tau)?;
    let wst = weighted_soft_threshold(&v, &taus)?;
    let tr = trunc(&v, tau)?;
    let ps = pos(&v);
    let mut l1 = vec![0.0; v.len()];
    ScaledL1(0.4).prox(&v, t, &mut l1);
    let mut nn = vec![0.0; v.len()];
    NonnegIndicator.prox(&v, t, &mut nn);
    let mut lb = vec![0.0; v.len()];
    LinfBall(0.5).prox(&v, t, &mut lb);
    for (i, &c) in v.iter().enumerate() {
        let (lo, hi) = (-20.0, 20.0);
        push("soft_threshold", (st[i] - argmin_1d(|x| tau * x.abs() + q(x, c), lo, hi)).abs());
        push("weighted_soft_threshold", (wst[i] - argmin_1d(|x| taus[i] * x.abs() + q(x, c), lo, hi)).abs());
        push("trunc", (tr[i] - argmin_1d(|x| q(x, c), -tau, tau)).abs());
        push("pos", (ps[i] - argmin_1d(|x| q(x, c), 0.0, hi)).abs());
        push("scaled_l1", (l1[i] - argmin_1d(|x| t * 0.4 * x.abs() + q(x, c), lo, hi)).abs());
        push("nonneg", (nn[i] - argmin_1d(|x| q(x, c), 0.0, hi)).abs());
        push("linf_ball", (lb[i] - argmin_1d(|x| q(x, c), -0.5, 0.5)).abs());
    }

    // Radial functions: the prox keeps the direction, so only the radius is
    // searched.
    for k in 0..50 {
        let w = randn(6, 300 + k);
        let nw = norm(&w);
        let dir: Vec<f64> = w.iter().map(|x| x / nw).collect();
        let tau = 0.5 * (k as f64 / 10.0);
        let r = argmin_1d(|r| tau * r + q(r, nw), 0.0, nw + 1.0);
        let want: Vec<f64> = dir.iter().map(|d| d * r).collect();
        push("shrink", dist(&shrink(&w, tau)?, &want));
        let mut out = vec![0.0; 6];
        ScaledL2(0.5).prox(&w, tau, &mut out);
        let r2 = argmin_1d(|r| 0.5 * tau * r + q(r, nw), 0.0, nw + 1.0);
        push("scaled_l2", dist(&out, &dir.iter().map(|d| d * r2).collect::<Vec<_>>()));

        let z = randn(8, 400 + k);
        let ct = ctrunc(&z, tau)?;
        let mut cb = vec![0.0; 8];
        ComplexBall(tau).prox(&z, 1.0, &mut cb);
        for (p, (a, b)) in z.chunks(2).zip(ct.chunks(2).zip(cb.chunks(2))) {
            let m = p[0].hypot(p[1]);
            let r = argmin_1d(|r| q(r, m), 0.0, tau);
            let want = [p[0] / m * r, p[1] / m * r];
            push("ctrunc", dist(a, &want));
            push("complex_ball", dist(b, &want));
        }

        // Second-order cone: the projection lies in the plane spanned by
        // (w, 0) and (0, 1); compare against the best of the trivial cases
        // and the boundary ray searched in 1-D.
        let s = 3.0 * randn(1, 500 + k)[0];
        let (pv, ps) = project_soc(&w, s);
        let cost = |r: f64, t: f64| q(r, nw) + q(t, s);
        let mut cands = vec![(0.0, 0.0)];
        if nw <= s {
            cands.push((nw, s));
        }
        let rb = argmin_1d(|r| cost(r, r), 0.0, nw.max(s.abs()) + 1.0);
        cands.push((rb, rb));
        let (rr, tt) = cands
            .into_iter()
            .min_by(|a, b| cost(a.0, a.1).total_cmp(&cost(b.0, b.1)))
            .unwrap();
        let want: Vec<f64> = dir.iter().map(|d| d * rr).collect();
        push("project_soc", dist(&pv, &want).max((ps - tt).abs()));
    }

    // Singular value thresholding on rectangular diagonal matrices.
    for k in 0..20 {
        let (rows, cols) = (5, 4);
        let d = randn(cols, 600 + k);
        let tau = 0.3;
        let mut m = vec![0.0; rows * cols];
        let mut want = vec![0.0; rows * cols];
        for i in 0..cols {
            m[i + i * rows] = d[i];
            want[i + i * rows] = argmin_1d(|x| tau * x.abs() + q(x, d[i]), -10.0, 10.0);
        }
        let (got, rank) = svt(rows, cols, &m, tau)?;
        let rank_ok = rank == d.iter().filter(|x| x.abs() > tau).count();
        push("svt", dist(&got, &want) + if rank_ok { 0.0 } else { 1.0 });
        let mut out = vec![0.0; rows * cols];
        ScaledNuclear::new(0.5, rows, cols).prox(&m, 2.0 * tau, &mut out);
        push("scaled_nuclear", dist(&out, &want));
    }

    let worst = max_of(errs.iter().map(|e| e.1));
    let bad: Vec<String> = errs.iter().filter(|e| e.1 > 1e-6).map(|(n, e)| format!("{n}={e:.1e}")).collect();
    Ok((bad.is_empty(), format!("{} proxes, worst {worst:.1e} {}", errs.len(), bad.join(" "))))
}

// ---------------------------------------------------------------- 3, 12

fn dense_op(m: usize, n: usize, seed: u64) -> OperatorSpec {
    OperatorSpec::Dense {
        rows: m,
        cols: n,
        data: gaussian_matrix(m, n, seed),
    }
}

/// `y = A x + noise` for a sparse `x`.
fn data(a: &OperatorSpec, s: usize, seed: u64) -> Vec<f64> {
    let op = a.build().unwrap();
    let n = op.input().len();
    let x = gen_sparse_signal(n, s, 20.0, seed).unwrap();
    let y = op.forward_quiet(&x);
    y.iter().zip(randn(y.len(), seed + 1)).map(|(y, e)| y + 0.01 * e).collect()
}

fn spec_with(kind: ModelKind, a: OperatorSpec, y: Vec<f64>, mu: f64, f: impl FnOnce(&mut ModelSpec)) -> ModelSpec {
    let mut s = ModelSpec::new(kind, a, y, mu);
    f(&mut s);
    s
}

fn desk_models() -> Vec<(&'static str, fn(&ModelSpec) -> Result<CompositeDual, models::ModelError>, ModelSpec)> {
    let (m, n, mu) = (20, 40, 0.7);
    let a = dense_op(m, n, 11);
    let y = data(&a, 4, 12);
    let ny = norm(&y);
    let aty_inf = a.build().unwrap().adjoint_quiet(&y).iter().fold(0.0f64, |s, v| s.max(v.abs()));
    let entries: Vec<(usize, usize)> = (0..6 * 5).filter(|k| k % 3 != 1).map(|k| (k % 6, k / 6)).collect();
    let sub = OperatorSpec::SubsampleMatrix {
        rows: 6,
        cols: 5,
        entries: entries.clone(),
    };
    let ysub = randn(entries.len(), 13);
    let img = dense_op(30, 64, 14);
    let yimg = data(&img, 6, 15);
    let nyimg = norm(&yimg);
    vec![
        ("dantzig", models::build_dantzig, spec_with(ModelKind::Dantzig, a.clone(), y.clone(), mu, |s| {
            s.delta = Some(0.1 * aty_inf)
        })),
        ("dantzig_lp", models::build_dantzig_lp, spec_with(ModelKind::DantzigLp, a.clone(), y.clone(), mu, |s| {
            s.delta = Some(0.1 * aty_inf)
        })),
        ("lasso", models::build_lasso, spec_with(ModelKind::Lasso, a.clone(), y.clone(), mu, |s| {
            s.epsilon = Some(0.1 * ny)
        })),
        ("basis_pursuit", models::build_basis_pursuit, ModelSpec::new(ModelKind::BasisPursuit, a.clone(), y.clone(), mu)),
        ("nuclear_lasso", models::build_nuclear_lasso, spec_with(ModelKind::NuclearLasso, sub.clone(), ysub.clone(), mu, |s| {
            s.epsilon = Some(0.1 * norm(&ysub))
        })),
        ("nuclear_dantzig", models::build_nuclear_dantzig, spec_with(ModelKind::NuclearDantzig, sub, ysub.clone(), mu, |s| {
            s.delta = Some(0.2)
        })),
        ("l1_analysis", models::build_l1_analysis, spec_with(ModelKind::L1Analysis, a.clone(), y.clone(), mu, |s| {
            s.w = Some(dense_op(50, n, 16));
            s.epsilon = Some(0.1 * ny);
        })),
        ("tv", models::build_tv, spec_with(ModelKind::Tv, img.clone(), yimg.clone(), mu, |s| {
            s.epsilon = Some(0.1 * nyimg)
        })),
        ("analysis_plus_tv", models::build_analysis_plus_tv, spec_with(ModelKind::AnalysisPlusTv, img, yimg, mu, |s| {
            s.w = Some(OperatorSpec::Identity { n: 64 });
            s.alpha_w = Some(1.0);
            s.beta_tv = Some(0.5);
            s.epsilon = Some(0.1 * nyimg);
        })),
    ]
}

fn gradient_fidelity() -> Outcome {
    let mut pass = true;
    let mut notes = Vec::new();
    let (mut worst_fd, mut worst_lip) = (0.0f64, 0.0f64);
    for (k, (name, builder, spec)) in desk_models().into_iter().enumerate() {
        let cd = builder(&spec)?;
        let n = cd.dim();
        let z = randn(n, 900 + k as u64);
        let (_, g) = cd.value_grad(&z);
        let fd: Vec<f64> = (0..n)
            .map(|i| {
                let h = 1e-6 * z[i].abs().max(1.0);
                let mut zp = z.clone();
                let mut zm = z.clone();
                zp[i] += h;
                zm[i] -= h;
                (cd.value(&zp) - cd.value(&zm)) / (2.0 * h)
            })
            .collect();
        let rel = dist(&fd, &g) / norm(&g).max(1e-300);
        let l = estimate_norm(cd.operator(), 1e-13, 100_000, 3).powi(2) / cd.mu();
        let ratio = max_of((0..20).map(|p| {
            let z1 = randn(n, 2000 + 2 * p);
            let z2: Vec<f64> = randn(n, 2001 + 2 * p).iter().map(|v| 1e-2f64.powi((p % 3) as i32) * v).collect();
            let z2: Vec<f64> = z1.iter().zip(&z2).map(|(a, b)| a + b).collect();
            dist(&cd.value_grad(&z1).1, &cd.value_grad(&z2).1) / (l * dist(&z1, &z2))
        }));
        let ok = rel <= 1e-5 && ratio <= 1.0 + 1e-8;
        if !ok {
            notes.push(format!("{name}: fd {rel:.1e} lip {ratio:.3}"));
        }
        pass &= ok;
        worst_fd = worst_fd.max(rel);
        worst_lip = worst_lip.max(ratio);
    }
    Ok((pass, format!("9 builders, worst fd {worst_fd:.1e}, worst |dgrad|/(L|dz|) {worst_lip:.3} {}", notes.join("; "))))
}

fn accurate(cd: &CompositeDual) -> Result<Vec<f64>, Box<dyn Error>> {
    let opts = SolverOptions {
        max_iters: 200_000,
        tol: 1e-13,
        ..Default::default()
    };
    Ok(solve(cd, &opts, None)?.x.data)
}

fn model_equivalences() -> Outcome {
    let mut parts = Vec::new();
    let mut pass = true;
    for seed in 0..2u64 {
        let (m, n, mu) = (20, 40, 0.1);
        let a = dense_op(m, n, 50 + seed);
        let y = data(&a, 4, 60 + seed);
        let aty_inf = a.build()?.adjoint_quiet(&y).iter().fold(0.0f64, |s, v| s.max(v.abs()));
        let delta = 0.1 * aty_inf;
        let d = spec_with(ModelKind::Dantzig, a.clone(), y.clone(), mu, |s| s.delta = Some(delta));
        let lp = spec_with(ModelKind::DantzigLp, a.clone(), y.clone(), mu, |s| s.delta = Some(delta));
        let e1 = relative_error(&accurate(&models::build_dantzig_lp(&lp)?)?, &accurate(&models::build_dantzig(&d)?)?);

        let eps = 0.1 * norm(&y);
        let lasso = spec_with(ModelKind::Lasso, a.clone(), y.clone(), mu, |s| s.epsilon = Some(eps));
        let an = spec_with(ModelKind::L1Analysis, a.clone(), y.clone(), mu, |s| {
            s.w = Some(OperatorSpec::Identity { n });
            s.epsilon = Some(eps);
        });
        let e2 = relative_error(&accurate(&models::build_l1_analysis(&an)?)?, &accurate(&models::build_lasso(&lasso)?)?);

        let img = dense_op(30, 64, 70 + seed);
        let yi = data(&img, 6, 80 + seed);
        let w = dense_op(80, 64, 90 + seed);
        let epsi = 0.1 * norm(&yi);
        let an = spec_with(ModelKind::L1Analysis, img.clone(), yi.clone(), mu, |s| {
            s.w = Some(w.clone());
            s.epsilon = Some(epsi);
        });
        let tv0 = spec_with(ModelKind::AnalysisPlusTv, img, yi, mu, |s| {
            s.w = Some(w);
            s.alpha_w = Some(1.0);
            s.beta_tv = Some(0.0);
            s.epsilon = Some(epsi);
        });
        let e3 = relative_error(
            &accurate(&models::build_analysis_plus_tv(&tv0)?)?,
            &accurate(&models::build_l1_analysis(&an)?)?,
        );
        pass &= e1 <= 1e-5 && e2 <= 1e-5 && e3 <= 1e-5;
        parts.push(format!("seed {seed}: lp {e1:.1e} analysis {e2:.1e} tv0 {e3:.1e}"));
    }
    Ok((pass, parts.join(", ")))
}

// ---------------------------------------------------------------- 4

fn rate_bound() -> Outcome {
    let inst = smoothed_dantzig_instance(0)?;
    let cd = conefo::models::build(&inst.model_spec(DESK_MU))?;
    let l = dantzig_lipschitz(&inst, DESK_MU);
    let reference = solve(
        &cd,
        &SolverOptions {
            max_iters: 100_000,
            tol: 0.0,
            ..Default::default()
        },
        None,
    )?;
    let z_star = reference.z.data.clone();
    let r2 = norm(&z_star).powi(2);
    let mut traces = Vec::new();
    for v in Variant::ALL {
        let opts = SolverOptions {
            variant: v,
            step: StepPolicy::Fixed { lipschitz: l },
            max_iters: 2000,
            tol: 0.0,
            ..Default::default()
        };
        traces.push((v, solve(&cd, &opts, None)?.trace));
    }
    let ref_phi = reference.trace.last().map(|r| r.phi).unwrap_or(f64::INFINITY);
    let phi_star = traces
        .iter()
        .flat_map(|(_, t)| t.rows.iter().map(|r| r.phi))
        .fold(ref_phi, f64::min);
    let mut pass = true;
    let mut parts = Vec::new();
    for (v, t) in &traces {
        let bound = |k: f64| {
            if *v == Variant::Gra {
                l * r2 / (2.0 * k)
            } else {
                2.0 * l * r2 / (k * k)
            }
        };
        let worst = max_of(t.rows.iter().filter(|r| r.iter >= 1).map(|r| (r.phi - phi_star) / bound(r.iter as f64)));
        let complete = t.rows.len() == 2001;
        pass &= worst <= 1.0 && complete;
        parts.push(format!("{}={worst:.2}", v.name()));
    }
    Ok((pass, format!("max (phi-phi*)/bound over k<=2000: {}", parts.join(" "))))
}

// ---------------------------------------------------------------- 5

/// Largest `mu` for which the certified `x*` still solves the smoothed
/// problem, from the smoothed optimality conditions. With as many active
/// constraints as nonzeros the multiplier is unique, so the threshold is
/// where it first loses a sign or leaves the dual box. `None` when the active
/// set and support have different sizes.
fn exact_penalty_threshold(inst: &ExactInstance, delta: f64) -> Option<f64> {
    let a = DMatrix::from_row_slice(inst.rows, inst.cols, &inst.a);
    let b = DVector::from_column_slice(&inst.b);
    let g = a.tr_mul(&a);
    let xs = DVector::from_column_slice(&inst.x_star);
    let r = a.tr_mul(&(&b - &a * &xs));
    let t: Vec<usize> = (0..inst.cols).filter(|&i| inst.x_star[i] != 0.0).collect();
    let s: Vec<usize> = (0..inst.cols).filter(|&i| r[i].abs() >= delta - 1e-9).collect();
    if t.len() != s.len() {
        return None;
    }
    let lu = DMatrix::from_fn(t.len(), s.len(), |i, j| g[(t[i], s[j])]).lu();
    let holds = |mu: f64| {
        let rhs = DVector::from_fn(t.len(), |i, _| inst.x_star[t[i]].signum() + mu * inst.x_star[t[i]]);
        let Some(ls) = lu.solve(&rhs) else { return false };
        let mut lam = DVector::zeros(inst.cols);
        for (j, &k) in s.iter().enumerate() {
            lam[k] = ls[j];
        }
        let c = &g * &lam;
        s.iter().enumerate().all(|(j, &k)| ls[j] * r[k] >= 0.0)
            && (0..inst.cols).filter(|i| !t.contains(i)).all(|i| c[i].abs() <= 1.0)
    };
    if !holds(0.0) {
        return None;
    }
    let (mut lo, mut hi) = (0.0, 1e3);
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if holds(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Some(lo)
}

fn exact_penalty() -> Outcome {
    let inst = exact_penalty_instance(0)?;
    let sweep = mu_sweep(&inst, &logspace(1e-4, 1e-1, 13))?;
    let edge = plateau_edge(&sweep, 1e-6);
    let on_plateau = edge.map(|e| sweep.iter().filter(|(m, _)| *m <= e).count()).unwrap_or(0);
    let mu0 = exact_penalty_threshold(&inst, DANTZIG_DELTA);
    let consistent = mu0.is_some_and(|mu0| sweep.iter().filter(|(m, _)| *m < mu0).all(|(_, e)| *e <= 1e-6));
    let worst = max_of(sweep.iter().filter(|(m, _)| edge.is_some_and(|e| *m <= e)).map(|p| p.1));
    let pass = on_plateau >= 3 && consistent;
    let fmt = |v: Option<f64>| v.map(|v| format!("{v:.3e}")).unwrap_or_else(|| "none".into());
    Ok((
        pass,
        format!(
            "plateau up to mu={} ({on_plateau} points, worst err {worst:.1e}); analytic threshold {}",
            fmt(edge),
            fmt(mu0)
        ),
    ))
}

// ---------------------------------------------------------------- 6

fn testgen_kkt() -> Outcome {
    let (m, n) = (32, 128);
    let setup = |s: u64| (gaussian_matrix(m, n, s), gen_sparse_signal(n, 6, 20.0, s + 1000));
    let budget = Budget::default();
    let mut insts = Vec::new();
    insts.push(("bp", with_retries(11, 5, |s| {
        let (a, x) = setup(s);
        gen_basis_pursuit_exact(m, n, &a, &x?, &budget)
    })?));
    insts.push(("lasso", with_retries(21, 5, |s| {
        let (a, x) = setup(s);
        gen_lasso_exact(m, n, &a, &x?, 0.05, &budget)
    })?));
    for (name, mu) in [("dantzig", 0.0), ("dantzig_smoothed", 0.05)] {
        insts.push((name, with_retries(31, 5, |s| {
            let (a, x) = setup(s);
            gen_dantzig_exact(m, n, &a, &x?, 0.02, mu, &budget)
        })?));
    }
    let mut pass = true;
    let mut parts = Vec::new();
    for (name, inst) in &insts {
        let kkt = inst.report.max_residual();
        let again = inst.recertifies() && ExactInstance::from_json(&inst.to_json())?.recertifies();
        pass &= kkt <= 1e-10 && again;
        parts.push(format!("{name} {kkt:.1e}{}", if again { "" } else { " (recertify failed)" }));
    }
    Ok((pass, format!("max KKT residual: {}", parts.join(", "))))
}

// ---------------------------------------------------------------- 7

fn moreau_gradient() -> Outcome {
    let (m, n, mu) = (10, 20, 1.0);
    let a = dense_op(m, n, 40);
    let y = data(&a, 3, 41);
    let spec = spec_with(ModelKind::Lasso, a, y.clone(), mu, |s| s.epsilon = Some(0.1 * norm(&y)));
    let model = Model::new(&spec)?;
    let inner = |c: &[f64]| -> Result<InnerSolution, Box<dyn Error>> {
        let cd = model.smooth(mu, &Element::real(c.to_vec()))?;
        let opts = SolverOptions {
            max_iters: 200_000,
            tol: 1e-11,
            ..Default::default()
        };
        let x = solve(&cd, &opts, None)?.x.data;
        let f = x.iter().map(|v| v.abs()).sum();
        Ok(InnerSolution::from_objective(x, f, c, mu))
    };
    let envelope = |c: &[f64]| moreau_value_grad(inner, c, mu);
    let yc: Vec<f64> = randn(n, 42).iter().map(|v| 0.5 * v).collect();
    let (_, grad) = envelope(&yc)?;
    let h = 1e-3;
    let mut fd = vec![0.0; n];
    for (i, out) in fd.iter_mut().enumerate() {
        let mut p = yc.clone();
        let mut q = yc.clone();
        p[i] += h;
        q[i] -= h;
        *out = (envelope(&p)?.0 - envelope(&q)?.0) / (2.0 * h);
    }
    let rel = dist(&fd, &grad) / norm(&grad);
    Ok((rel <= 1e-4, format!("relative gradient mismatch {rel:.1e}")))
}

// ---------------------------------------------------------------- 8

fn strong_convexity() -> Outcome {
    let p = DiagQuadratic::new(100, 0.07, 59.1, 0);
    let curves = strong_convexity_runs(&p, 3000)?;
    let at = |name: &str, k: u64| {
        curves
            .iter()
            .find(|c| c.name == name)
            .and_then(|c| c.points.iter().find(|(i, _)| *i == k))
            .map(|p| p.1)
            .unwrap_or(f64::NAN)
    };
    let (gra, at3000) = (at("gra", 3000), at("at", 3000));
    let (rst, at1000) = (at("at_restart100", 1000), at("at", 1000));
    let a = gra < at3000;
    let b = rst <= 1e-8 && rst * 1e2 <= at1000;
    Ok((
        a && b,
        format!(
            "(a) {}: gra {gra:.2e} vs at {at3000:.2e} at 3000; (b) {}: restart {rst:.2e} vs at {at1000:.2e} at 1000",
            if a { "ok" } else { "FAIL" },
            if b { "ok" } else { "FAIL" }
        ),
    ))
}

// ---------------------------------------------------------------- 9

fn continuation_order() -> Outcome {
    let inst = lasso_instance(0)?;
    let rows = continuation_comparison(&inst, CONTINUATION_MU, 50)?;
    let complete = rows.len() == 50;
    let ordered = rows.iter().filter(|r| r.0 >= 5).all(|r| r.2 <= r.1);
    let mono = |f: fn(&(usize, f64, f64)) -> f64| rows.windows(2).filter(|w| w[0].0 >= 2).all(|w| f(&w[1]) <= f(&w[0]));
    let (ms, ma) = (mono(|r| r.1), mono(|r| r.2));
    let last = rows.last().copied().unwrap_or((0, f64::NAN, f64::NAN));
    Ok((
        complete && ordered && ms && ma,
        format!(
            "accelerated <= standard for j in [5,50]: {ordered}; monotone standard {ms}, accelerated {ma}; j={}: {:.2e} vs {:.2e}",
            last.0, last.1, last.2
        ),
    ))
}

// ---------------------------------------------------------------- 10

fn operator_accounting() -> Outcome {
    let inst = smoothed_dantzig_instance(0)?;
    let spec = inst.model_spec(DESK_MU);
    let l = dantzig_lipschitz(&inst, DESK_MU);
    let backtracking = |iters| SolverOptions {
        step: StepPolicy::backtracking_from(l / 50.0),
        max_iters: iters,
        tol: 0.0,
        ..Default::default()
    };

    let cd = conefo::models::build(&spec)?;
    let run = solve_at_cached(&cd, &backtracking(500), None)?;
    let counts = cd.operator().counts();
    let backtracks: u64 = run.trace.rows.iter().map(|r| r.backtracks as u64).sum();
    let passes = run.iterations as u64 + backtracks;
    let counted = backtracks > 0 && counts.forward == passes && counts.adjoint == passes;

    // Acceptance decisions compare nearly equal quantities, so past a few
    // hundred backtracking iterations the two implementations' rounding
    // differences can flip one and the paths separate. Iterates are compared
    // over a horizon where that has not happened, and over a long fixed-step run.
    let compare = |opts: &SolverOptions| -> Result<(bool, f64, u64), Box<dyn Error>> {
        let cached = solve_at_cached(&conefo::models::build(&spec)?, opts, None)?;
        let plain = solve(&conefo::models::build(&spec)?, opts, None)?;
        let zdiff = relative_error(&cached.z.data, &plain.z.data);
        let phidiff = max_of(
            cached
                .trace
                .rows
                .iter()
                .zip(&plain.trace.rows)
                .map(|(a, b)| (a.phi - b.phi).abs() / b.phi.abs().max(1.0)),
        );
        let bt = cached.trace.rows.iter().map(|r| r.backtracks as u64).sum();
        let ok = cached.iterations == plain.iterations && zdiff <= 1e-10 && phidiff <= 1e-10;
        Ok((ok, zdiff.max(phidiff), bt))
    };
    let (bt_ok, bt_diff, bt_count) = compare(&backtracking(100))?;
    let fixed = SolverOptions {
        step: StepPolicy::Fixed { lipschitz: l },
        max_iters: 2000,
        tol: 0.0,
        ..Default::default()
    };
    let (fx_ok, fx_diff, _) = compare(&fixed)?;
    Ok((
        counted && bt_ok && bt_count > 0 && fx_ok,
        format!(
            "{passes} passes ({backtracks} backtracks): fwd {} adj {}; vs plain AT: {bt_diff:.1e} over 100 backtracking its ({bt_count} backtracks), {fx_diff:.1e} over 2000 fixed-step its",
            counts.forward, counts.adjoint
        ),
    ))
}

// ---------------------------------------------------------------- 11

fn completion() -> Outcome {
    let reference = completion_reference(&completion_spec(0, 1e-2))?;
    let curves = completion_runs(0, &reference, 500)?;
    let reach = |name: &str| curves.iter().find(|c| c.name == name).and_then(|c| c.cost_to_reach(1e-2));
    let acc = reach("at_accel_cont");
    let fmt = |v: Option<u64>| v.map(|v| v.to_string()).unwrap_or_else(|| ">500".into());
    Ok((
        acc.is_some_and(|k| k <= 150),
        format!(
            "SVTs to reach 1e-2: accelerated continuation {}, at {}, gra {}",
            fmt(acc),
            fmt(reach("at")),
            fmt(reach("gra"))
        ),
    ))
}

// ----------------------------------------------------------------

fn main() {
    let criteria: [(&str, fn() -> Outcome, u64); 12] = [
        ("adjoint identity", adjoint_suite, 5),
        ("prox oracles", prox_oracles, 10),
        ("gradient fidelity", gradient_fidelity, 30),
        ("rate bound", rate_bound, 120),
        ("exact penalty plateau", exact_penalty, 120),
        ("testgen KKT", testgen_kkt, 60),
        ("Moreau gradient", moreau_gradient, 60),
        ("strong convexity and restart", strong_convexity, 30),
        ("continuation ordering", continuation_order, 120),
        ("cached AT accounting", operator_accounting, 60),
        ("matrix completion", completion, 120),
        ("model equivalences", model_equivalences, 120),
    ];
    let mut failed = 0;
    for (i, (name, f, limit)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let res = catch_unwind(AssertUnwindSafe(f));
        let took = t.elapsed();
        let (ok, detail) = match res {
            Ok(Ok((ok, d))) => (ok, d),
            Ok(Err(e)) => (false, format!("error: {e}")),
            Err(_) => (false, "panicked".into()),
        };
        let in_time = took <= Duration::from_secs(*limit);
        let ok = ok && in_time;
        if !ok {
            failed += 1;
        }
        println!(
            "criterion {:>2} {:<30} {}  [{:.1}s / {}s{}] {}",
            i + 1,
            name,
            if ok { "PASS" } else { "FAIL" },
            took.as_secs_f64(),
            limit,
            if in_time { "" } else { " over budget" },
            detail
        );
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
