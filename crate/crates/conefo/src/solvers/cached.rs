//! `AT` with cached adjoint sequences.
//!
//! Because `y_k` and `z_{k+1}` are linear combinations of `z_k` and the
//! `zbar` sequence, their images under `A*` can be carried along instead of
//! recomputed. Each loop pass then costs exactly one forward application (for
//! `grad g(y_k)`) and one adjoint application (for `A* zbar_{k+1}`), with or
//! without backtracking.

use crate::linops::space::dot;
use crate::linops::Element;
use crate::smoothing::CompositeDual;

use super::{
    backtrack_check, check_stop, combine, hybrid_uses_standard, l0_from, probe_point, start_point,
    theta_update, Minimized, Progress, SolveError, Solution, SolverOptions, SplitComposite,
    StepPolicy, StepSample, StopReason, TestMode, Variant, Verdict,
};

fn gradient<P: SplitComposite + ?Sized>(p: &P, x: &[f64]) -> Vec<f64> {
    let mut g = p.forward(x);
    crate::linops::space::axpy(1.0, p.offset(), &mut g);
    g
}

/// `AT` on a split composite. Starting from `z0 = 0` skips the initial
/// adjoint, so counts are exactly one forward and one adjoint per pass.
pub fn minimize_at_cached<P: SplitComposite + ?Sized>(
    p: &P,
    opts: &SolverOptions,
    z0: &[f64],
) -> Result<Minimized, SolveError> {
    opts.validate()?;
    if opts.variant != Variant::At {
        return Err(SolveError::InvalidOptions(
            "the cached solver implements AT only".into(),
        ));
    }
    let n = p.dim();
    if z0.len() != n {
        return Err(SolveError::Dimension {
            expected: n,
            got: z0.len(),
        });
    }
    let h = p.nonsmooth();
    let metric = p.metric();
    let b = p.offset();
    let counts0 = p.counts();
    let primal0 = p.primal_prox_calls();

    let mut za = if z0.iter().all(|v| *v == 0.0) {
        vec![0.0; p.adjoint_dim()]
    } else {
        p.adjoint(z0)
    };
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
                let g0 = gradient(p, &p.inner_value_grad(&za).1);
                let z1 = probe_point(z0, &g0, metric);
                let g1 = gradient(p, &p.inner_value_grad(&p.adjoint(&z1)).1);
                l0_from(&g0, &g1, z0, &z1, metric)
            });
            (l, Some((alpha, beta, gamma, test)))
        }
    };

    let mut progress = Progress::start(p, opts, z0, l_prev, counts0, primal0);
    let mut z = z0.to_vec();
    let mut zbar = z0.to_vec();
    let mut zbar_a = za.clone();
    let mut theta_prev = f64::INFINITY;
    let mut stop = StopReason::MaxIterations;
    let mut iterations = 0;
    let mut y = vec![0.0; n];
    let mut ya = vec![0.0; za.len()];
    let mut z_new = vec![0.0; n];
    let mut za_new = vec![0.0; za.len()];
    let mut zbar_new = vec![0.0; n];

    for k in 0..opts.max_iters {
        if let Some(r) = opts.restart {
            if k > 0 && k % r == 0 {
                theta_prev = f64::INFINITY;
                zbar.copy_from_slice(&z);
                zbar_a.copy_from_slice(&za);
                progress.trace.restarts.push(k);
            }
        }
        let mut l = match backtracking {
            Some((alpha, ..)) => alpha * l_prev,
            None => l_prev,
        };
        let mut backtracks = 0u32;
        let mut zbar_a_new;
        let theta = loop {
            let theta = theta_update(theta_prev, l_prev, l);
            combine(&mut y, theta, &z, &zbar);
            combine(&mut ya, theta, &za, &zbar_a);
            let (gbar_y, x_y) = p.inner_value_grad(&ya);
            let grad_y = gradient(p, &x_y);
            h.project(&zbar, &grad_y, 1.0 / (theta * l), &mut zbar_new);
            zbar_a_new = p.adjoint(&zbar_new);
            combine(&mut z_new, theta, &z, &zbar_new);
            combine(&mut za_new, theta, &za, &zbar_a_new);
            progress.prox += 1;
            let Some((_, beta, gamma, test)) = backtracking else {
                break theta;
            };
            let g_y = gbar_y + dot(b, &y);
            let (gbar_z, x_z) = p.inner_value_grad(&za_new);
            let g_z = gbar_z + dot(b, &z_new);
            let standard = match test {
                TestMode::Standard => true,
                TestMode::Stable => false,
                TestMode::Hybrid => hybrid_uses_standard(g_y, g_z, gamma),
            };
            let verdict = if standard {
                let s = StepSample {
                    y: &y,
                    z: &z_new,
                    g_y,
                    grad_y: &grad_y,
                    g_z,
                    grad_z: None,
                };
                backtrack_check(TestMode::Standard, gamma, l, beta, &s, metric)
            } else {
                // <y - z, grad g(z) - grad g(y)> = <A*(y - z), x(z) - x(y)>
                let q: f64 = ya
                    .iter()
                    .zip(&za_new)
                    .zip(x_z.iter().zip(&x_y))
                    .map(|((a, c), (u, v))| (a - c) * (u - v))
                    .sum();
                let d: Vec<f64> = z_new.iter().zip(&y).map(|(a, c)| a - c).collect();
                let nd = super::norm_sq(&d, metric);
                let lhat = 2.0 * q.abs() / nd;
                if nd == 0.0 || lhat <= l {
                    Verdict::Accept
                } else {
                    Verdict::Increase((l / beta).max(lhat))
                }
            };
            match verdict {
                Verdict::Accept => break theta,
                Verdict::Increase(nl) => {
                    l = nl;
                    backtracks += 1;
                }
            }
        };
        std::mem::swap(&mut z, &mut z_new);
        std::mem::swap(&mut za, &mut za_new);
        std::mem::swap(&mut zbar, &mut zbar_new);
        zbar_a = zbar_a_new;
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

/// Cached `AT` on a smoothed dual.
pub fn solve_at_cached(
    cd: &CompositeDual,
    opts: &SolverOptions,
    z0: Option<&Element>,
) -> Result<Solution, SolveError> {
    let z0 = start_point(cd, z0)?;
    let m = minimize_at_cached(cd, opts, &z0)?;
    Ok(Solution::from_min(cd, m))
}
