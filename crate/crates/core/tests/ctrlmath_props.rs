mod common;

use common::{gaussian, problem, uniform, with_radius};
use lqrpg::ctrlmath::{
    eigenvalues, operator_norm, place_poles, psd_sqrt, riccati_residual, solve_dare, spectral_radius,
    spectrum_mismatch, transient_bound_mu, Mat,
};
use lqrpg::probgen::{eig_prototype, scale_prototype, wishart_psd};
use lqrpg::rollout::{RngKey, StreamContext};

#[test]
fn transient_bound_certifies_all_powers() {
    let k_max = 25;
    for i in 0..200u64 {
        let n = 1 + (i % 6) as usize;
        let rho = uniform(i, 0.05, 0.99);
        let mut m = with_radius(i, n, rho);
        if i % 3 == 0 && n > 1 {
            // Push towards non-normality with a strong upper-triangular part.
            let mut d = m.as_dmatrix().clone();
            d.fill_lower_triangle(0.0, 1);
            d[(0, n - 1)] += 5.0;
            m = Mat::from_dmatrix(d).unwrap();
        }
        let tb = transient_bound_mu(&m, k_max).unwrap();
        assert!(tb.mu >= 1.0);
        let mut power = Mat::identity(n);
        for k in 0..=k_max {
            let lhs = operator_norm(&power).unwrap();
            let rhs = tb.mu * tb.rho.powi(k as i32);
            assert!(lhs <= rhs * (1.0 + 1e-9), "matrix {i}, k={k}: {lhs} > {rhs}");
            power = &power * &m;
        }
    }
}

#[test]
fn dare_solutions_are_accurate_and_stabilizing() {
    for i in 0..50u64 {
        let n = 1 + (i % 6) as usize;
        let m = 1 + (i % 3) as usize;
        let (p, _) = problem(1000 + i, n, m, 10);
        let sol = solve_dare(&p.a, &p.b, &p.q, &p.r).unwrap();
        let res = riccati_residual(&p.a, &p.b, &p.q, &p.r, &sol.p).unwrap();
        let pn = operator_norm(&sol.p).unwrap();
        assert!(res <= 1e-8 * (1.0 + pn), "problem {i}: residual {res}");
        assert!(spectral_radius(&p.closed_loop(&sol.k_star).unwrap()).unwrap() < 1.0);
    }
}

#[test]
fn pole_placement_recovers_requested_spectrum() {
    for i in 0..100u64 {
        let n = 2 + (i % 5) as usize;
        let m = 1 + (i % 3) as usize;
        let (p, _) = problem(2000 + i, n, m, 10);
        let proto = eig_prototype(n, RngKey::new(i, StreamContext::Prototype));
        let want = scale_prototype(&proto, uniform(i, 0.1, 0.99)).unwrap();
        let k = place_poles(&p.a, &p.b, &want).unwrap();
        let got = eigenvalues(&p.closed_loop(&k).unwrap()).unwrap();
        let err = spectrum_mismatch(&got, &want);
        assert!(err <= 1e-6, "system {i}: spectrum error {err}");
    }
}

#[test]
fn psd_sqrt_squares_back() {
    for i in 0..100u64 {
        let k = 1 + (i % 7) as usize;
        let s = wishart_psd(k, RngKey::new(i, StreamContext::Problem)).unwrap();
        let x = psd_sqrt(&s).unwrap();
        let err = (&(&x * &x) - &s).frobenius_norm();
        assert!(err <= 1e-8 * (1.0 + operator_norm(&s).unwrap()));
        assert_eq!(x.asymmetry(), 0.0);
    }
}

#[test]
fn spectral_radius_never_exceeds_operator_norm() {
    for i in 0..300u64 {
        let n = 1 + (i % 8) as usize;
        let m = gaussian(i, n, n);
        let rho = spectral_radius(&m).unwrap();
        let norm = operator_norm(&m).unwrap();
        assert!(rho <= norm * (1.0 + 1e-12), "{rho} > {norm}");
    }
}
