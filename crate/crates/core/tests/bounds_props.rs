mod common;

use common::{problem, scalar};
use lqrpg::bounds::{lower_bound_scalar, upper_bound, ScalarParams, UpperBoundContext};
use lqrpg::ctrlmath::solve_dare;
use lqrpg::{GaussianPolicy, LqrProblem, Mat};

fn sc(x: f64) -> Mat {
    Mat::scalar(x).unwrap()
}

fn scalar_instances() -> Vec<(LqrProblem, GaussianPolicy, f64)> {
    let mut out = Vec::new();
    for &a in &[0.0, 0.3, 0.9, 1.5] {
        for &b in &[0.5, 1.0, -2.0] {
            for &h in &[1usize, 5, 20, 80] {
                for &(ss, sa) in &[(0.1, 1.0), (1.0, 0.01), (4.0, 9.0)] {
                    let p = scalar(a, b, 1.0, 0.5, ss, h);
                    let k = solve_dare(&p.a, &p.b, &p.q, &p.r).unwrap().k_star;
                    out.push((p, GaussianPolicy { k, sigma_a: sc(sa) }, 0.7));
                }
            }
        }
    }
    out
}

#[test]
fn scalar_upper_dominates_lower() {
    for (p, pol, s1) in scalar_instances() {
        let up = upper_bound(&p, &pol, &[s1]).unwrap();
        let lo = lower_bound_scalar(&ScalarParams::from_problem(&p, &pol, s1).unwrap()).unwrap();
        assert!(lo.h_prime_sq <= up.h_prime + 1e-12);
        assert!(up.bound >= lo.bound, "{} < {}", up.bound, lo.bound);
    }
}

#[test]
fn hypotheses_are_enforced() {
    let p = scalar(1.2, 1.0, 1.0, 1.0, 1.0, 10);
    let unstable = GaussianPolicy { k: sc(0.0), sigma_a: sc(1.0) };
    assert!(matches!(upper_bound(&p, &unstable, &[1.0]), Err(lqrpg::Error::Domain(_))));
    let negative = ScalarParams::from_problem(&p, &GaussianPolicy { k: sc(-1.5), sigma_a: sc(1.0) }, 1.0).unwrap();
    assert!(lower_bound_scalar(&negative).is_err());
    let marginal = ScalarParams::from_problem(&p, &GaussianPolicy { k: sc(-0.2), sigma_a: sc(1.0) }, 1.0).unwrap();
    assert!(lower_bound_scalar(&marginal).is_err());
}

#[test]
fn bound_is_monotone_in_state_horizon_and_noise() {
    for i in 0..10u64 {
        let (p, pol) = problem(700 + i, 4, 2, 10);
        let ctx = UpperBoundContext::new(&p, &pol).unwrap();
        let mut prev = 0.0;
        for s in [0.0, 0.1, 1.0, 3.0, 10.0] {
            let b = ctx.evaluate_norm(s).unwrap().bound;
            assert!(b >= prev);
            prev = b;
        }
        let s1 = [0.5, 0.5, -0.5, 0.1];
        let mut prev = 0.0;
        for h in [1, 2, 5, 10, 30, 100] {
            let b = upper_bound(&LqrProblem { horizon: h, ..p.clone() }, &pol, &s1).unwrap().bound;
            assert!(b >= prev);
            prev = b;
        }
        let mut prev = 0.0;
        for scale in [0.0, 0.1, 1.0, 10.0] {
            let ps = LqrProblem { sigma_s: p.sigma_s.scale(scale).unwrap(), ..p.clone() };
            let b = upper_bound(&ps, &pol, &s1).unwrap().bound;
            assert!(b >= prev);
            prev = b;
        }
    }
}

#[test]
fn bound_is_u_shaped_in_sigma_a() {
    let p = scalar(0.8, 1.0, 1.0, 1.0, 1.0, 10);
    let k = solve_dare(&p.a, &p.b, &p.q, &p.r).unwrap().k_star;
    let values: Vec<f64> = (0..25)
        .map(|i| {
            let sigma_a = 10f64.powf(-2.0 + 4.0 * i as f64 / 24.0);
            let pol = GaussianPolicy { k: k.clone(), sigma_a: sc(sigma_a * sigma_a) };
            upper_bound(&p, &pol, &[1.0]).unwrap().bound
        })
        .collect();
    let signs: Vec<bool> = values.windows(2).map(|w| w[1] > w[0]).collect();
    let changes = signs.windows(2).filter(|w| w[0] != w[1]).count();
    assert_eq!(changes, 1, "{values:?}");
    assert!(!signs[0] && signs[signs.len() - 1]);
}
