use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::space::{dot, norm};
use super::LinOp;

/// Estimates `||A||` by power iteration on `A* A` from a seeded random start.
///
/// Stops when the relative change of the estimate drops below `tol` or after
/// `max_iters` iterations. Applications are not counted.
pub fn estimate_norm(op: &LinOp, tol: f64, max_iters: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = op.input().len();
    if n == 0 || op.output().is_empty() {
        return 0.0;
    }
    let mut x: Vec<f64> = (0..n).map(|_| rng.random::<f64>() - 0.5).collect();
    let nx = norm(&x);
    x.iter_mut().for_each(|v| *v /= nx);
    let mut est = 0.0;
    for _ in 0..max_iters.max(1) {
        let y = op.forward_quiet(&x);
        let z = op.adjoint_quiet(&y);
        let ny2 = dot(&y, &y);
        let nz = norm(&z);
        let next = ny2.sqrt();
        if nz == 0.0 {
            return next;
        }
        let done = (next - est).abs() <= tol * next;
        est = next;
        if done {
            break;
        }
        x = z.iter().map(|v| v / nz).collect();
    }
    est
}
