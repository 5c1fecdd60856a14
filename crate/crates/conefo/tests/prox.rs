use conefo::linops::space::{dist, norm};
use conefo::prox::*;
use proptest::prelude::*;

fn vec_of(n: usize) -> impl Strategy<Value = Vec<f64>> {
    proptest::collection::vec(-5.0..5.0f64, n)
}

fn terms() -> Vec<(&'static str, Box<dyn NonsmoothFn>)> {
    vec![
        ("l1", Box::new(ScaledL1(0.7))),
        ("l2", Box::new(ScaledL2(1.3))),
        ("nonneg", Box::new(NonnegIndicator)),
        ("linf", Box::new(LinfBall(0.8))),
        ("cball", Box::new(ComplexBall(1.1))),
        ("nuclear", Box::new(ScaledNuclear::new(0.9, 3, 2))),
    ]
}

fn prox_of(h: &dyn NonsmoothFn, v: &[f64], t: f64) -> Vec<f64> {
    let mut out = vec![0.0; v.len()];
    h.prox(v, t, &mut out);
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn proxes_are_nonexpansive(a in vec_of(6), b in vec_of(6), t in 0.01..3.0f64) {
        for (name, h) in terms() {
            let d = dist(&prox_of(h.as_ref(), &a, t), &prox_of(h.as_ref(), &b, t));
            prop_assert!(d <= dist(&a, &b) * (1.0 + 1e-10) + 1e-12, "{}: {} > {}", name, d, dist(&a, &b));
        }
    }

    #[test]
    fn prox_lands_in_domain_and_beats_neighbors(v in vec_of(6), t in 0.01..3.0f64, dir in vec_of(6)) {
        for (name, h) in terms() {
            let p = prox_of(h.as_ref(), &v, t);
            let obj = |z: &[f64]| t * h.value(z) + 0.5 * dist(z, &v).powi(2);
            let best = obj(&p);
            prop_assert!(best.is_finite(), "{}", name);
            for s in [1e-3, 1e-2, 1e-1] {
                let q: Vec<f64> = p.iter().zip(&dir).map(|(a, d)| a + s * d).collect();
                prop_assert!(obj(&q) >= best - 1e-9 * (1.0 + best.abs()), "{} at step {}", name, s);
            }
        }
    }

    #[test]
    fn generalized_projection_optimality(z0 in vec_of(5), g in vec_of(5), t in 0.05..2.0f64) {
        // For h = c||.||_1: (z0 - z)/t - g lies in c * subdifferential at z.
        let c = 0.6;
        let mut z = vec![0.0; 5];
        ScaledL1(c).project(&z0, &g, t, &mut z);
        for i in 0..5 {
            let w = (z0[i] - z[i]) / t - g[i];
            if z[i] != 0.0 {
                prop_assert!((w - c * z[i].signum()).abs() <= 1e-8);
            } else {
                prop_assert!(w.abs() <= c + 1e-8);
            }
        }
    }

    #[test]
    fn soc_projection_is_nearest(v in vec_of(3), tau in -5.0..5.0f64, angles in vec_of(40)) {
        let (pv, pt) = project_soc(&v, tau);
        prop_assert!(norm(&pv) <= pt * (1.0 + 1e-12) + 1e-12);
        let d = (dist(&pv, &v).powi(2) + (pt - tau).powi(2)).sqrt();
        // Sample the boundary ||u|| = s around the target.
        for k in 0..20 {
            let (a, b) = (angles[2 * k], angles[2 * k + 1]);
            let u = [a.cos() * b.cos(), a.sin() * b.cos(), b.sin()];
            for s in [0.0, 0.5, 1.0, 2.0, 4.0, 8.0] {
                let q: Vec<f64> = u.iter().map(|x| s * x).collect();
                let dq = (dist(&q, &v).powi(2) + (s - tau).powi(2)).sqrt();
                prop_assert!(d <= dq + 1e-10);
            }
        }
    }

    #[test]
    fn svt_matches_scalar_threshold_on_diagonals(d in proptest::collection::vec(-4.0..4.0f64, 3), tau in 0.0..3.0f64) {
        let (rows, cols) = (4, 3);
        let mut m = vec![0.0; rows * cols];
        for (k, &x) in d.iter().enumerate() {
            m[k + k * rows] = x;
        }
        let (out, rank) = svt(rows, cols, &m, tau).unwrap();
        let st = soft_threshold(&d, tau).unwrap();
        for (k, &x) in st.iter().enumerate() {
            prop_assert!((out[k + k * rows] - x).abs() <= 1e-10);
        }
        prop_assert_eq!(rank, st.iter().filter(|x| **x != 0.0).count());
        let off: f64 = (0..rows * cols).filter(|i| i % (rows + 1) != 0).map(|i| out[i].abs()).sum();
        prop_assert!(off <= 1e-10);
    }

    #[test]
    fn singular_values_are_orthogonally_invariant(m in vec_of(12), angle in -3.0..3.0f64) {
        // Rotate the rows of a 4x3 matrix in the (0, 1) plane.
        let (c, s) = (angle.cos(), angle.sin());
        let mut r = m.clone();
        for j in 0..3 {
            let (a, b) = (m[j * 4], m[1 + j * 4]);
            r[j * 4] = c * a - s * b;
            r[1 + j * 4] = s * a + c * b;
        }
        let (s1, s2) = (singular_values(4, 3, &m), singular_values(4, 3, &r));
        prop_assert!(dist(&s1, &s2) <= 1e-10 * (1.0 + norm(&s1)));
        let fro = norm(&m);
        prop_assert!((norm(&s1) - fro).abs() <= 1e-10 * (1.0 + fro));
    }
}

#[test]
fn closed_form_conventions() {
    assert_eq!(soft_threshold(&[1.0, -1.0, 0.5], 1.0).unwrap(), vec![0.0, 0.0, 0.0]);
    assert_eq!(ctrunc(&[0.0, 0.0], 0.5).unwrap(), vec![0.0, 0.0]);
    assert!(dist(&ctrunc(&[3.0, 4.0], 1.0).unwrap(), &[0.6, 0.8]) < 1e-15);
    assert_eq!(shrink(&[3.0, 4.0], 10.0).unwrap(), vec![0.0, 0.0]);
    assert_eq!(trunc(&[-3.0, 0.2], 1.0).unwrap(), vec![-1.0, 0.2]);
    assert_eq!(pos(&[-1.0, 2.0]), vec![0.0, 2.0]);
    assert_eq!(project_soc(&[3.0, 4.0], -5.0), (vec![0.0, 0.0], 0.0));
    assert_eq!(project_soc(&[3.0, 4.0], 5.0), (vec![3.0, 4.0], 5.0));
}

#[test]
fn bad_arguments_are_rejected() {
    assert!(matches!(soft_threshold(&[1.0], -0.1), Err(ProxError::NegativeThreshold(_))));
    assert!(matches!(weighted_soft_threshold(&[1.0], &[1.0, 2.0]), Err(ProxError::Length { .. })));
    assert!(matches!(ctrunc(&[1.0, 2.0, 3.0], 1.0), Err(ProxError::OddComplex(3))));
    assert!(svt(2, 2, &[1.0; 3], 0.1).is_err());
}

#[test]
fn nuclear_counts_svt_calls() {
    let h = ScaledNuclear::new(1.0, 2, 2);
    let mut out = vec![0.0; 4];
    h.prox(&[1.0, 0.0, 0.0, 2.0], 0.5, &mut out);
    h.prox(&[1.0, 0.0, 0.0, 2.0], 0.5, &mut out);
    assert_eq!(h.svt_calls(), 2);
    assert!(dist(&out, &[0.5, 0.0, 0.0, 1.5]) < 1e-12);
}
