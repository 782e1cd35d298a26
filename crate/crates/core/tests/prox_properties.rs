//! Moreau decomposition against independently derived conjugate proxes,
//! plus nonexpansiveness, optimality and strong convexity of every built-in.

use nspd_core::prox::{
    elastic_prox, l1_prox, l1_shifted_prox, point_indicator, simplex_prox, SimplexSupport, SquaredDistance, Zero,
};
use nspd_core::vector::{dist, norm2_sq};
use nspd_core::ProxFunction;
use proptest::prelude::*;

const DIM: usize = 5;

/// Euclidean projection onto the unit simplex by bisection on the threshold.
fn simplex_projection_bisect(v: &[f64]) -> Vec<f64> {
    let excess = |t: f64| v.iter().map(|x| (x - t).max(0.0)).sum::<f64>() - 1.0;
    let mut lo = v.iter().cloned().fold(f64::INFINITY, f64::min) - 1.0;
    let mut hi = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if excess(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let t = 0.5 * (lo + hi);
    v.iter().map(|x| (x - t).max(0.0)).collect()
}

/// `prox_{σ·max}(v) = min(v, t)` where `Σ(vᵢ - t)₊ = σ`.
fn max_prox_bisect(v: &[f64], sigma: f64) -> Vec<f64> {
    let mass = |t: f64| v.iter().map(|x| (x - t).max(0.0)).sum::<f64>() - sigma;
    let mut lo = v.iter().cloned().fold(f64::INFINITY, f64::min) - sigma;
    let mut hi = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mass(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let t = 0.5 * (lo + hi);
    v.iter().map(|x| x.min(t)).collect()
}

type ConjProx = Box<dyn Fn(&[f64], f64) -> Vec<f64>>;

/// A built-in function together with a hand-derived `prox_{σh*}`.
struct Case {
    h: Box<dyn ProxFunction>,
    conj_prox: ConjProx,
}

fn cases() -> Vec<Case> {
    let b = vec![0.3, -1.2, 0.0, 2.5, -0.7];
    let (lambda, mu) = (0.4, 1.7);
    let (b1, b2, b3) = (b.clone(), b.clone(), b.clone());
    vec![
        Case {
            h: Box::new(Zero),
            conj_prox: Box::new(|v, _| vec![0.0; v.len()]),
        },
        Case {
            h: Box::new(l1_prox(lambda).unwrap()),
            conj_prox: Box::new(move |v, _| v.iter().map(|x| x.clamp(-lambda, lambda)).collect()),
        },
        Case {
            h: Box::new(l1_shifted_prox(b.clone())),
            conj_prox: Box::new(move |v, s| v.iter().zip(&b1).map(|(x, bi)| (x - s * bi).clamp(-1.0, 1.0)).collect()),
        },
        Case {
            h: Box::new(elastic_prox(lambda, mu).unwrap()),
            conj_prox: Box::new(move |v, s| {
                v.iter()
                    .map(|&x| {
                        if x.abs() <= lambda {
                            x
                        } else {
                            x.signum() * (s * lambda + mu * x.abs()) / (mu + s)
                        }
                    })
                    .collect()
            }),
        },
        Case {
            h: Box::new(point_indicator(b.clone())),
            conj_prox: Box::new(move |v, s| v.iter().zip(&b2).map(|(x, bi)| x - s * bi).collect()),
        },
        Case {
            h: Box::new(simplex_prox(DIM).unwrap()),
            conj_prox: Box::new(max_prox_bisect),
        },
        Case {
            h: Box::new(SimplexSupport { dim: DIM }),
            conj_prox: Box::new(|v, _| simplex_projection_bisect(v)),
        },
        Case {
            h: Box::new(SquaredDistance::new(2.0, b.clone()).unwrap()),
            conj_prox: Box::new(move |v, s| v.iter().zip(&b3).map(|(x, c)| (x - s * c) / (1.0 + s / 2.0)).collect()),
        },
    ]
}

fn vec_strategy() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-5.0..5.0f64, DIM)
}

fn rho_strategy() -> impl Strategy<Value = f64> {
    (-2.0..2.0f64).prop_map(|e| 10f64.powf(e))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn moreau_decomposition_round_trips(v in vec_strategy(), rho in rho_strategy()) {
        for case in cases() {
            let p = case.h.prox(&v, rho);
            let scaled: Vec<f64> = v.iter().map(|x| x / rho).collect();
            let q = (case.conj_prox)(&scaled, 1.0 / rho);
            for i in 0..DIM {
                let back = p[i] + rho * q[i];
                prop_assert!((back - v[i]).abs() <= 1e-10 * (1.0 + v[i].abs()), "{:?}: {back} vs {}", case.h, v[i]);
            }
        }
    }

    #[test]
    fn prox_is_nonexpansive(u in vec_strategy(), v in vec_strategy(), rho in rho_strategy()) {
        for case in cases() {
            let pu = case.h.prox(&u, rho);
            let pv = case.h.prox(&v, rho);
            prop_assert!(dist(&pu, &pv) <= dist(&u, &v) * (1.0 + 1e-12) + 1e-12, "{:?}", case.h);
        }
    }

    #[test]
    fn prox_minimizes_its_model(v in vec_strategy(), rho in rho_strategy(), d in vec_strategy(), t in 1e-3..1.0f64) {
        for case in cases() {
            let model = |x: &[f64]| case.h.value(x) + norm2_sq(&x.iter().zip(&v).map(|(a, b)| a - b).collect::<Vec<_>>()) / (2.0 * rho);
            let p = case.h.prox(&v, rho);
            let m = model(&p);
            prop_assert!(m.is_finite(), "{:?}", case.h);
            // probes along a random direction stay at or above the minimum
            // wherever the function is finite
            let probe: Vec<f64> = p.iter().zip(&d).map(|(a, b)| a + t * b).collect();
            let mp = model(&probe);
            if mp.is_finite() {
                prop_assert!(mp >= m - 1e-9 * (1.0 + m.abs()), "{:?}: {mp} < {m}", case.h);
            }
        }
    }

    #[test]
    fn strong_convexity_midpoint_inequality(a in vec_strategy(), b in vec_strategy()) {
        for case in cases() {
            let mu = case.h.strong_convexity();
            let (fa, fb) = (case.h.value(&a), case.h.value(&b));
            if !(fa.is_finite() && fb.is_finite()) {
                continue;
            }
            let mid: Vec<f64> = a.iter().zip(&b).map(|(x, y)| 0.5 * (x + y)).collect();
            let rhs = 0.5 * (fa + fb) - mu / 8.0 * dist(&a, &b).powi(2);
            prop_assert!(case.h.value(&mid) <= rhs + 1e-9 * (1.0 + rhs.abs()), "{:?}", case.h);
        }
    }
}

#[test]
fn strong_convexity_moduli_are_reported() {
    let moduli: Vec<f64> = cases().iter().map(|c| c.h.strong_convexity()).collect();
    assert_eq!(moduli, vec![0.0, 0.0, 0.0, 1.7, 0.0, 0.0, 0.0, 2.0]);
}

#[test]
fn elastic_is_scaled_l1_prox_on_many_inputs() {
    let (lambda, mu, step) = (0.3, 0.8, 0.6);
    let e = elastic_prox(lambda, mu).unwrap();
    let l = l1_prox(lambda).unwrap();
    for i in 0..100 {
        let v: Vec<f64> = (0..DIM).map(|j| ((i * 7 + j * 13) % 29) as f64 / 5.0 - 2.9).collect();
        let via_l1: Vec<f64> = l.prox(&v, step).iter().map(|x| x / (1.0 + mu * step)).collect();
        assert!(dist(&e.prox(&v, step), &via_l1) < 1e-12);
    }
}
