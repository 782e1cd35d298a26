//! The derived algorithms against their literal counterparts, the algebraic
//! identities behind them, and the parameter schedules.

use std::sync::Arc;

use nspd_core::pd_general::{
    grad_phi_r, grad_phi_x, phi_rho, schedule_at, Alg1, CompositeProblem, GeneralSchedule, RawScheme1,
};
use nspd_core::pd_strong::{case1_next_tau, Alg2, RawScheme3, StrongCase, StrongSchedule};
use nspd_core::prox::{elastic_prox, l1_prox, l1_shifted_prox};
use nspd_core::vector::{dist, dot, norm2_sq};
use nspd_core::{LinearMap, ProxFunction};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn gaussianish(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    // sum of uniforms is close enough to Gaussian for test instances
    (0..n)
        .map(|_| (0..4).map(|_| rng.random_range(-1.0..1.0)).sum::<f64>())
        .collect()
}

/// `n = 50`, `p = 20` LAD instance; `mu > 0` makes `f` an elastic net.
fn lad(seed: u64, mu: f64) -> CompositeProblem {
    let (n, p) = (50, 20);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let k = LinearMap::dense(n, p, gaussianish(&mut rng, n * p)).unwrap();
    let b = gaussianish(&mut rng, n);
    let f: Arc<dyn ProxFunction> = if mu > 0.0 {
        Arc::new(elastic_prox(0.05, mu).unwrap())
    } else {
        Arc::new(l1_prox(0.05).unwrap())
    };
    CompositeProblem::new(f, Arc::new(l1_shifted_prox(b)), Arc::new(k)).unwrap()
}

fn start(pr: &CompositeProblem, seed: u64) -> (Vec<f64>, Vec<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xfeed);
    (
        gaussianish(&mut rng, pr.p()),
        (0..pr.n()).map(|_| rng.random_range(-1.0..1.0)).collect(),
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn alg1_matches_raw_scheme(seed in any::<u64>(), c_two in any::<bool>(), gamma in 0.1..0.95f64, rho_scale in 0.1..10.0f64) {
        let pr = lad(seed, 0.0);
        let nk = pr.norm_k();
        let c = if c_two { 2.0 } else { 1.0 };
        let s = GeneralSchedule::new(c, gamma, rho_scale / nk, nk).unwrap();
        let (x0, y0) = start(&pr, seed);
        let mut a = Alg1::new(&pr, s, &x0, &y0).unwrap();
        let mut r = RawScheme1::new(&pr, s, &x0, &y0).unwrap();
        for k in 0..100 {
            a.step().unwrap();
            r.step().unwrap();
            prop_assert!(dist(a.x(), &r.x) <= 1e-9, "x differs at k={k}: {}", dist(a.x(), &r.x));
            prop_assert!(dist(a.y_bar(), &r.y_bar) <= 1e-9, "y_bar differs at k={k}");
        }
    }

    #[test]
    fn alg2_matches_raw_scheme(seed in any::<u64>(), case_two in any::<bool>(), gamma in 0.55..0.99f64) {
        let pr = lad(seed, 0.5);
        let nk = pr.norm_k();
        let case = if case_two { StrongCase::Case2 { c: 3.0 } } else { StrongCase::Case1 };
        let rho0 = StrongSchedule::rho0_bound(case, gamma, 0.5, nk);
        let s = StrongSchedule::new(case, gamma, rho0, 0.5, nk).unwrap();
        let (x0, y0) = start(&pr, seed);
        let mut a = Alg2::new(&pr, s, &x0, &y0).unwrap();
        let mut r = RawScheme3::new(&pr, s, &x0, &y0).unwrap();
        for k in 0..100 {
            a.step().unwrap();
            r.step().unwrap();
            prop_assert!(dist(a.x(), &r.x) <= 1e-9, "x differs at k={k}: {}", dist(a.x(), &r.x));
            prop_assert!(dist(a.y_bar(), &r.y_bar) <= 1e-9, "y_bar differs at k={k}");
        }
    }

    #[test]
    fn phi_quadratic_expansion(seed in any::<u64>(), rho in 0.01..100.0f64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (n, p) = (7, 4);
        let k = LinearMap::dense(n, p, gaussianish(&mut rng, n * p)).unwrap();
        let x = gaussianish(&mut rng, p);
        let x2 = gaussianish(&mut rng, p);
        let r = gaussianish(&mut rng, n);
        let r2 = gaussianish(&mut rng, n);
        let y = gaussianish(&mut rng, n);
        let lhs = phi_rho(&k, &x2, &r2, &y, rho).unwrap();
        let dx: Vec<f64> = x2.iter().zip(&x).map(|(a, b)| a - b).collect();
        let dr: Vec<f64> = r2.iter().zip(&r).map(|(a, b)| a - b).collect();
        let kdx = k.apply(&dx).unwrap();
        let diff: Vec<f64> = kdx.iter().zip(&dr).map(|(a, b)| a - b).collect();
        let rhs = phi_rho(&k, &x, &r, &y, rho).unwrap()
            + dot(&grad_phi_x(&k, &x, &r, &y, rho).unwrap(), &dx)
            + dot(&grad_phi_r(&k, &x, &r, &y, rho).unwrap(), &dr)
            + 0.5 * rho * norm2_sq(&diff);
        prop_assert!((lhs - rhs).abs() <= 1e-9 * (1.0 + lhs.abs()));
    }

    #[test]
    fn weighted_sum_of_squares_identity(
        u in prop::collection::vec(-10.0..10.0f64, 6),
        v in prop::collection::vec(-10.0..10.0f64, 6),
        w in prop::collection::vec(-10.0..10.0f64, 6),
        a1 in -5.0..5.0f64,
        a2 in -5.0..5.0f64,
    ) {
        prop_assume!((a1 + a2).abs() > 1e-3);
        let s = a1 + a2;
        let lhs = a1 * dist(&u, &w).powi(2) + a2 * dist(&v, &w).powi(2);
        let comb: Vec<f64> = u.iter().zip(&v).map(|(x, y)| (a1 * x + a2 * y) / s).collect();
        let rhs = s * dist(&w, &comb).powi(2) + a1 * a2 / s * dist(&u, &v).powi(2);
        let scale = a1.abs() * dist(&u, &w).powi(2) + a2.abs() * dist(&v, &w).powi(2) + 1.0;
        prop_assert!((lhs - rhs).abs() <= 1e-10 * scale.max(lhs.abs()));
    }
}

#[test]
fn dual_average_is_the_weighted_sum_of_dual_iterates() {
    let pr = lad(11, 0.0);
    let nk = pr.norm_k();
    let s = GeneralSchedule::new(2.0, 0.5, 1.0 / nk, nk).unwrap();
    let (x0, y0) = start(&pr, 11);
    let mut a = Alg1::new(&pr, s, &x0, &y0).unwrap();
    let mut ys = Vec::new();
    for k in 0..20 {
        a.step().unwrap();
        ys.push(a.y().to_vec());
        // ȳᵏ⁺¹ = Σᵢ τᵢ Πⱼ₌ᵢ₊₁..ₖ (1 - τⱼ) yⁱ⁺¹ + Πⱼ (1 - τⱼ) y⁰
        let mut recon: Vec<f64> = y0
            .iter()
            .map(|v| v * (0..=k).map(|j| 1.0 - s.tau(j)).product::<f64>())
            .collect();
        for (i, yi) in ys.iter().enumerate() {
            let w = s.tau(i) * (i + 1..=k).map(|j| 1.0 - s.tau(j)).product::<f64>();
            for (r, v) in recon.iter_mut().zip(yi) {
                *r += w * v;
            }
        }
        assert!(
            dist(&recon, a.y_bar()) <= 1e-10 * (1.0 + recon.iter().map(|v| v.abs()).sum::<f64>()),
            "k={k}"
        );
    }
}

#[test]
fn general_schedule_invariants() {
    for (c, gamma) in [(1.0, 0.5), (2.0, 0.999), (3.5, 0.1)] {
        let s = GeneralSchedule::new(c, gamma, 0.37, 2.3).unwrap();
        for k in 0..100_000 {
            let p = schedule_at(&s, k);
            let prod = p.rho * p.beta * 2.3 * 2.3;
            assert!((prod - gamma).abs() <= 4.0 * f64::EPSILON * gamma, "k={k}: {prod}");
            assert!(p.rho > p.eta);
            assert!(p.tau > 0.0 && p.tau <= 1.0);
        }
    }
}

#[test]
fn strong_schedule_invariants() {
    let mut s = StrongSchedule::new(StrongCase::Case1, 0.8, 0.01, 1.0, 2.0).unwrap();
    let big_gamma = 2.0 - 1.0 / 0.8;
    for k in 0..100_000 {
        let p = s.current();
        let tau = s.tau();
        let next = s.next_tau();
        assert!(((1.0 - next) - next * next / (tau * tau)).abs() <= 1e-12, "k={k}");
        assert!(tau <= 2.0 / (k as f64 + 2.0) + 1e-15, "k={k}: {tau}");
        assert!((p.rho * p.beta * 4.0 - big_gamma).abs() <= 4.0 * f64::EPSILON * big_gamma);
        assert!(p.rho > p.eta);
        s.advance();
    }
    let s2 = StrongSchedule::new(StrongCase::Case2 { c: 4.0 }, 0.75, 0.005, 1.0, 2.0).unwrap();
    for k in [0, 1, 10, 1000, 99_999] {
        let p = s2.at(k);
        assert!((p.tau - 4.0 / (k as f64 + 4.0)).abs() < 1e-15);
        assert!((p.rho * p.beta * 4.0 - (2.0 - 1.0 / 0.75)).abs() <= 1e-15);
    }
}

#[test]
fn case1_recursion_stays_positive_and_decreasing() {
    let mut tau = 1.0;
    for _ in 0..100_000 {
        let next = case1_next_tau(tau);
        assert!(next > 0.0 && next < tau);
        tau = next;
    }
}

#[test]
fn inflated_norm_estimate_keeps_alg1_convergent() {
    // running with 1.01·‖K‖ only shrinks the steps
    let pr = lad(5, 0.0);
    let nk = 1.01 * pr.norm_k();
    let s = GeneralSchedule::new(1.0, 0.5, 1.0 / nk, nk).unwrap();
    let (x0, y0) = (vec![0.0; pr.p()], vec![0.0; pr.n()]);
    let mut a = Alg1::new(&pr, s, &x0, &y0).unwrap();
    let f0 = pr.primal_value(&x0).unwrap();
    for _ in 0..2000 {
        a.step().unwrap();
    }
    assert!(pr.primal_value(a.x()).unwrap() < f0);
    assert!(a.x().iter().all(|v| v.is_finite()));
}
