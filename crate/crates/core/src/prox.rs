//! Proximal mappings for the functions used by the solvers and experiments.
//!
//! `prox(v, step)` always means `argmin_u { h(u) + ‖u - v‖² / (2 step) }`.
//! Proximal maps of conjugates are never written by hand; they go through
//! [`conjugate_prox`], i.e. `prox_{ρh*}(v) = v - ρ prox_{h/ρ}(v/ρ)`.

use std::fmt;

use crate::error::{check_dim, Error, Result};
use crate::vector::{self, soft_threshold};

/// Feasibility tolerance for indicator functions.
pub const INDICATOR_TOL: f64 = 1e-9;

/// A closed convex function with a computable proximal map.
pub trait ProxFunction: Send + Sync + fmt::Debug {
    /// Fixed dimension, if the function carries data of a given length.
    fn dim(&self) -> Option<usize> {
        None
    }

    /// Function value; `f64::INFINITY` outside the domain.
    fn value(&self, x: &[f64]) -> f64;

    /// Writes `prox_{step·h}(v)` into `out`.
    fn prox_into(&self, v: &[f64], step: f64, out: &mut [f64]);

    fn prox(&self, v: &[f64], step: f64) -> Vec<f64> {
        let mut out = vec![0.0; v.len()];
        self.prox_into(v, step, &mut out);
        out
    }

    /// Strong convexity modulus (0 when merely convex).
    fn strong_convexity(&self) -> f64 {
        0.0
    }

    /// Lipschitz constant of the function itself on its domain, Euclidean norm.
    fn lipschitz(&self) -> Option<f64> {
        None
    }

    /// Lipschitz constant of the gradient, for smooth functions only.
    fn smooth_lipschitz(&self) -> Option<f64> {
        None
    }

    fn gradient_into(&self, _x: &[f64], _out: &mut [f64]) -> Result<()> {
        Err(Error::InvalidConfig(format!("{self:?} has no gradient")))
    }

    fn has_gradient(&self) -> bool {
        self.smooth_lipschitz().is_some()
    }

    /// Closed-form Fenchel conjugate value, when one is known.
    fn conjugate_value(&self, _y: &[f64]) -> Option<f64> {
        None
    }
}

/// `prox_{ρh*}(v)` through Moreau's identity.
pub fn conjugate_prox(h: &dyn ProxFunction, v: &[f64], rho: f64) -> Vec<f64> {
    let mut out = vec![0.0; v.len()];
    let mut scratch = vec![0.0; v.len()];
    conjugate_prox_into(h, v, rho, &mut scratch, &mut out);
    out
}

/// Allocation-free [`conjugate_prox`]; `scratch` must have the length of `v`.
pub fn conjugate_prox_into(h: &dyn ProxFunction, v: &[f64], rho: f64, scratch: &mut [f64], out: &mut [f64]) {
    let inv = 1.0 / rho;
    for (s, vi) in scratch.iter_mut().zip(v) {
        *s = vi * inv;
    }
    h.prox_into(scratch, inv, out);
    for (o, vi) in out.iter_mut().zip(v) {
        *o = vi - rho * *o;
    }
}

/// `prox_{step·h}(v - step·linear)`, the prox of `h + <linear, ·>`.
pub fn prox_quadratic_shift(h: &dyn ProxFunction, v: &[f64], step: f64, linear: &[f64]) -> Vec<f64> {
    let shifted: Vec<f64> = v.iter().zip(linear).map(|(vi, li)| vi - step * li).collect();
    h.prox(&shifted, step)
}

/// Euclidean projection onto the standard simplex, by sort and threshold.
pub fn project_simplex(v: &[f64], out: &mut [f64]) {
    let mut sorted = v.to_vec();
    sorted.sort_by(|a, b| b.partial_cmp(a).expect("simplex projection of NaN"));
    let mut cumsum = 0.0;
    let mut theta = 0.0;
    for (j, &u) in sorted.iter().enumerate() {
        cumsum += u;
        let candidate = (cumsum - 1.0) / (j + 1) as f64;
        if u - candidate > 0.0 {
            theta = candidate;
        }
    }
    for (o, &vi) in out.iter_mut().zip(v) {
        *o = (vi - theta).max(0.0);
    }
}

pub fn in_simplex(x: &[f64], tol: f64) -> bool {
    x.iter().all(|&v| v >= -tol) && (x.iter().sum::<f64>() - 1.0).abs() <= tol
}

/// `h ≡ 0`.
#[derive(Debug, Clone, Default)]
pub struct Zero;

impl ProxFunction for Zero {
    fn value(&self, _x: &[f64]) -> f64 {
        0.0
    }
    fn prox_into(&self, v: &[f64], _step: f64, out: &mut [f64]) {
        out.copy_from_slice(v);
    }
    fn lipschitz(&self) -> Option<f64> {
        Some(0.0)
    }
    fn smooth_lipschitz(&self) -> Option<f64> {
        Some(0.0)
    }
    fn gradient_into(&self, _x: &[f64], out: &mut [f64]) -> Result<()> {
        out.fill(0.0);
        Ok(())
    }
    fn conjugate_value(&self, y: &[f64]) -> Option<f64> {
        Some(if vector::norm_inf(y) <= INDICATOR_TOL {
            0.0
        } else {
            f64::INFINITY
        })
    }
}

/// `λ‖x‖₁`.
#[derive(Debug, Clone)]
pub struct L1Norm {
    pub lambda: f64,
}

pub fn l1_prox(lambda: f64) -> Result<L1Norm> {
    if !(lambda > 0.0) {
        return Err(Error::InvalidConfig(format!(
            "l1 weight must be positive, got {lambda}"
        )));
    }
    Ok(L1Norm { lambda })
}

impl ProxFunction for L1Norm {
    fn value(&self, x: &[f64]) -> f64 {
        self.lambda * vector::norm1(x)
    }
    fn prox_into(&self, v: &[f64], step: f64, out: &mut [f64]) {
        let t = step * self.lambda;
        for (o, &vi) in out.iter_mut().zip(v) {
            *o = soft_threshold(vi, t);
        }
    }
    fn conjugate_value(&self, y: &[f64]) -> Option<f64> {
        Some(if vector::norm_inf(y) <= self.lambda * (1.0 + INDICATOR_TOL) {
            0.0
        } else {
            f64::INFINITY
        })
    }
}

/// `‖r - b‖₁`, Lipschitz with constant `√n` in the Euclidean norm.
#[derive(Debug, Clone)]
pub struct ShiftedL1 {
    pub b: Vec<f64>,
}

pub fn l1_shifted_prox(b: Vec<f64>) -> ShiftedL1 {
    ShiftedL1 { b }
}

impl ProxFunction for ShiftedL1 {
    fn dim(&self) -> Option<usize> {
        Some(self.b.len())
    }
    fn value(&self, r: &[f64]) -> f64 {
        r.iter().zip(&self.b).map(|(ri, bi)| (ri - bi).abs()).sum()
    }
    fn prox_into(&self, v: &[f64], step: f64, out: &mut [f64]) {
        for ((o, &vi), &bi) in out.iter_mut().zip(v).zip(&self.b) {
            *o = bi + soft_threshold(vi - bi, step);
        }
    }
    fn lipschitz(&self) -> Option<f64> {
        Some((self.b.len() as f64).sqrt())
    }
    fn conjugate_value(&self, y: &[f64]) -> Option<f64> {
        Some(if vector::norm_inf(y) <= 1.0 + INDICATOR_TOL {
            vector::dot(&self.b, y)
        } else {
            f64::INFINITY
        })
    }
}

/// `λ‖x‖₁ + (μ/2)‖x‖²`.
#[derive(Debug, Clone)]
pub struct ElasticNet {
    pub lambda: f64,
    pub mu: f64,
}

pub fn elastic_prox(lambda: f64, mu: f64) -> Result<ElasticNet> {
    if !(lambda > 0.0) || !(mu > 0.0) {
        return Err(Error::InvalidConfig(format!(
            "elastic net needs lambda > 0 and mu > 0, got ({lambda}, {mu})"
        )));
    }
    Ok(ElasticNet { lambda, mu })
}

impl ProxFunction for ElasticNet {
    fn value(&self, x: &[f64]) -> f64 {
        self.lambda * vector::norm1(x) + 0.5 * self.mu * vector::norm2_sq(x)
    }
    fn prox_into(&self, v: &[f64], step: f64, out: &mut [f64]) {
        let t = step * self.lambda;
        let shrink = 1.0 / (1.0 + step * self.mu);
        for (o, &vi) in out.iter_mut().zip(v) {
            *o = soft_threshold(vi, t) * shrink;
        }
    }
    fn strong_convexity(&self) -> f64 {
        self.mu
    }
    fn conjugate_value(&self, y: &[f64]) -> Option<f64> {
        let s: f64 = y.iter().map(|&yi| soft_threshold(yi, self.lambda).powi(2)).sum();
        Some(s / (2.0 * self.mu))
    }
}

/// Indicator of the single point `{b}`; its conjugate is `<b, y>`.
#[derive(Debug, Clone)]
pub struct PointIndicator {
    pub b: Vec<f64>,
}

pub fn point_indicator(b: Vec<f64>) -> PointIndicator {
    PointIndicator { b }
}

impl ProxFunction for PointIndicator {
    fn dim(&self) -> Option<usize> {
        Some(self.b.len())
    }
    fn value(&self, x: &[f64]) -> f64 {
        if vector::max_abs_diff(x, &self.b) <= INDICATOR_TOL {
            0.0
        } else {
            f64::INFINITY
        }
    }
    fn prox_into(&self, _v: &[f64], _step: f64, out: &mut [f64]) {
        out.copy_from_slice(&self.b);
    }
    fn conjugate_value(&self, y: &[f64]) -> Option<f64> {
        Some(vector::dot(&self.b, y))
    }
}

/// Indicator of the standard simplex `Δ = {x ≥ 0, Σx = 1}`.
#[derive(Debug, Clone)]
pub struct SimplexIndicator {
    pub dim: usize,
}

pub fn simplex_prox(dim: usize) -> Result<SimplexIndicator> {
    if dim == 0 {
        return Err(Error::InvalidConfig("simplex dimension must be positive".into()));
    }
    Ok(SimplexIndicator { dim })
}

impl ProxFunction for SimplexIndicator {
    fn dim(&self) -> Option<usize> {
        Some(self.dim)
    }
    fn value(&self, x: &[f64]) -> f64 {
        if in_simplex(x, INDICATOR_TOL) {
            0.0
        } else {
            f64::INFINITY
        }
    }
    fn prox_into(&self, v: &[f64], _step: f64, out: &mut [f64]) {
        project_simplex(v, out);
    }
    fn lipschitz(&self) -> Option<f64> {
        Some(0.0)
    }
    fn conjugate_value(&self, y: &[f64]) -> Option<f64> {
        Some(y.iter().cloned().fold(f64::NEG_INFINITY, f64::max))
    }
}

/// `r ↦ max_i r_i`, the support function of the simplex.
///
/// Its conjugate is the simplex indicator, so `conjugate_prox` of this
/// function is the simplex projection. Used as `g` in matrix games.
#[derive(Debug, Clone)]
pub struct SimplexSupport {
    pub dim: usize,
}

impl ProxFunction for SimplexSupport {
    fn dim(&self) -> Option<usize> {
        Some(self.dim)
    }
    fn value(&self, r: &[f64]) -> f64 {
        r.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }
    fn prox_into(&self, v: &[f64], step: f64, out: &mut [f64]) {
        // prox_{t·σ_Δ}(v) = v - t·P_Δ(v/t)
        let scaled: Vec<f64> = v.iter().map(|vi| vi / step).collect();
        project_simplex(&scaled, out);
        for (o, &vi) in out.iter_mut().zip(v) {
            *o = vi - step * *o;
        }
    }
    fn lipschitz(&self) -> Option<f64> {
        Some(1.0)
    }
    fn conjugate_value(&self, y: &[f64]) -> Option<f64> {
        Some(if in_simplex(y, INDICATOR_TOL) {
            0.0
        } else {
            f64::INFINITY
        })
    }
}

/// `(w/2)‖x - c‖²`.
#[derive(Debug, Clone)]
pub struct SquaredDistance {
    pub weight: f64,
    pub center: Vec<f64>,
}

impl SquaredDistance {
    pub fn new(weight: f64, center: Vec<f64>) -> Result<Self> {
        if !(weight > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "quadratic weight must be positive, got {weight}"
            )));
        }
        Ok(Self { weight, center })
    }

    /// `(1/2)‖x‖²` in dimension `dim`.
    pub fn half_norm_sq(dim: usize) -> Self {
        Self {
            weight: 1.0,
            center: vec![0.0; dim],
        }
    }
}

impl ProxFunction for SquaredDistance {
    fn dim(&self) -> Option<usize> {
        Some(self.center.len())
    }
    fn value(&self, x: &[f64]) -> f64 {
        0.5 * self.weight * vector::dist(x, &self.center).powi(2)
    }
    fn prox_into(&self, v: &[f64], step: f64, out: &mut [f64]) {
        let tw = step * self.weight;
        for ((o, &vi), &ci) in out.iter_mut().zip(v).zip(&self.center) {
            *o = (vi + tw * ci) / (1.0 + tw);
        }
    }
    fn strong_convexity(&self) -> f64 {
        self.weight
    }
    fn smooth_lipschitz(&self) -> Option<f64> {
        Some(self.weight)
    }
    fn gradient_into(&self, x: &[f64], out: &mut [f64]) -> Result<()> {
        check_dim("quadratic gradient", self.center.len(), x.len())?;
        for ((o, &xi), &ci) in out.iter_mut().zip(x).zip(&self.center) {
            *o = self.weight * (xi - ci);
        }
        Ok(())
    }
    fn conjugate_value(&self, y: &[f64]) -> Option<f64> {
        Some(vector::dot(&self.center, y) + vector::norm2_sq(y) / (2.0 * self.weight))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        vector::max_abs_diff(a, b) <= tol
    }

    #[test]
    fn conjugate_prox_of_half_square_halves() {
        let h = SquaredDistance::half_norm_sq(3);
        let v = [2.0, -4.0, 1.0];
        assert!(close(&conjugate_prox(&h, &v, 1.0), &[1.0, -2.0, 0.5], 1e-15));
    }

    #[test]
    fn conjugate_prox_of_l1_clamps() {
        let h = l1_prox(1.0).unwrap();
        let got = conjugate_prox(&h, &[2.0, -0.5], 1.0);
        assert!(close(&got, &[1.0, -0.5], 1e-15));
        let direct: Vec<f64> = [2.0f64, -0.5].iter().map(|v| v.clamp(-1.0, 1.0)).collect();
        assert!(close(&got, &direct, 1e-15));
    }

    #[test]
    fn l1_soft_threshold_examples() {
        let h = l1_prox(0.05).unwrap();
        assert!(close(&h.prox(&[1.2, -0.3], 10.0), &[0.7, 0.0], 1e-12));
        assert_eq!(h.prox(&[0.0, 0.0], 3.0), vec![0.0, 0.0]);
        assert!(l1_prox(0.0).is_err());
    }

    #[test]
    fn shifted_l1_examples() {
        let g = l1_shifted_prox(vec![1.0, 1.0]);
        assert!(close(&g.prox(&[3.0, 1.0], 1.0), &[2.0, 1.0], 1e-15));
        assert!(close(&g.prox(&[1.0, 1.0], 7.0), &[1.0, 1.0], 1e-15));
        assert_eq!(g.lipschitz(), Some(2f64.sqrt()));
        let g0 = l1_shifted_prox(vec![0.0, 0.0]);
        let l1 = l1_prox(1.0).unwrap();
        let v = [0.3, -2.0];
        assert!(close(&g0.prox(&v, 0.5), &l1.prox(&v, 0.5), 1e-15));
    }

    #[test]
    fn elastic_examples() {
        let h = elastic_prox(0.05, 0.1).unwrap();
        assert!(close(&h.prox(&[1.05, 0.0], 1.0), &[1.0 / 1.1, 0.0], 1e-12));
        assert_eq!(h.prox(&[0.0], 2.0), vec![0.0]);
        let tiny = elastic_prox(0.05, 1e-9).unwrap();
        let l1 = l1_prox(0.05).unwrap();
        let v = [0.4, -1.3, 0.01];
        assert!(close(&tiny.prox(&v, 2.0), &l1.prox(&v, 2.0), 1e-8));
        assert!(elastic_prox(0.05, 0.0).is_err());
    }

    #[test]
    fn point_indicator_examples() {
        let g = point_indicator(vec![1.0, 2.0]);
        assert_eq!(g.prox(&[9.0, -3.0], 0.1), vec![1.0, 2.0]);
        assert!(close(&conjugate_prox(&g, &[5.0, 5.0], 2.0), &[3.0, 1.0], 1e-14));
        let g0 = point_indicator(vec![0.0, 0.0]);
        assert!(close(&conjugate_prox(&g0, &[0.3, -4.0], 3.0), &[0.3, -4.0], 1e-14));
        assert_eq!(g.value(&[1.0, 2.1]), f64::INFINITY);
    }

    #[test]
    fn simplex_examples() {
        let s = simplex_prox(2).unwrap();
        assert!(close(&s.prox(&[0.5, 0.5], 1.0), &[0.5, 0.5], 1e-15));
        assert!(close(&s.prox(&[2.0, 0.0], 1.0), &[1.0, 0.0], 1e-15));
        let s3 = simplex_prox(3).unwrap();
        let c = [1.0 / 3.0; 3];
        assert!(close(&s3.prox(&c, 1.0), &c, 1e-15));
    }

    #[test]
    fn simplex_projection_matches_grid_search() {
        // exhaustive oracle on a fine grid of Δ₂
        let v = [0.9, -0.4];
        let proj = simplex_prox(2).unwrap().prox(&v, 1.0);
        let mut best = (f64::INFINITY, 0.0);
        for i in 0..=100_000 {
            let t = i as f64 / 100_000.0;
            let d = (t - v[0]).powi(2) + (1.0 - t - v[1]).powi(2);
            if d < best.0 {
                best = (d, t);
            }
        }
        assert!((proj[0] - best.1).abs() < 1e-5);
    }

    #[test]
    fn simplex_support_conjugate_prox_is_projection() {
        let g = SimplexSupport { dim: 4 };
        let v = [0.3, 1.7, -0.2, 0.9];
        let mut expected = [0.0; 4];
        project_simplex(&v, &mut expected);
        for rho in [0.1, 1.0, 10.0] {
            assert!(close(&conjugate_prox(&g, &v, rho), &expected, 1e-12));
        }
    }

    #[test]
    fn quadratic_shift_examples() {
        let l1 = l1_prox(1.0).unwrap();
        assert_eq!(prox_quadratic_shift(&l1, &[1.0, 1.0], 1.0, &[1.0, 0.0]), vec![0.0, 0.0]);
        let z = Zero;
        assert_eq!(prox_quadratic_shift(&z, &[1.0, 2.0], 0.5, &[2.0, -2.0]), vec![0.0, 3.0]);
        let v = [0.4, -2.0];
        assert_eq!(prox_quadratic_shift(&l1, &v, 0.3, &[0.0, 0.0]), l1.prox(&v, 0.3));
    }

    #[test]
    fn elastic_equals_l1_then_scale() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let (lambda, mu) = (0.3, 0.7);
        let el = elastic_prox(lambda, mu).unwrap();
        let l1 = l1_prox(lambda).unwrap();
        for _ in 0..100 {
            let v: Vec<f64> = (0..6).map(|_| rng.random_range(-3.0..3.0)).collect();
            let step = rng.random_range(0.01..10.0);
            let a = el.prox(&v, step);
            let b: Vec<f64> = l1.prox(&v, step).iter().map(|x| x / (1.0 + step * mu)).collect();
            assert!(close(&a, &b, 1e-12));
        }
    }

    #[test]
    fn simplex_projection_kkt_against_feasible_probes() {
        // u = P(v) iff <v - u, w - u> <= 0 for every w in Δ
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let v: Vec<f64> = (0..7).map(|_| rng.random_range(-2.0..2.0)).collect();
        let mut u = vec![0.0; 7];
        project_simplex(&v, &mut u);
        assert!(u.iter().all(|&x| x >= 0.0));
        assert!((u.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        for _ in 0..1000 {
            let raw: Vec<f64> = (0..7).map(|_| rng.random_range(0.0..1.0)).collect();
            let s: f64 = raw.iter().sum();
            let w: Vec<f64> = raw.iter().map(|x| x / s).collect();
            let lhs = vector::dot(&vector::sub(&v, &u), &vector::sub(&w, &u));
            assert!(lhs <= 1e-12);
        }
    }

    #[test]
    fn quadratic_gradient_and_conjugate() {
        let q = SquaredDistance::new(2.0, vec![1.0, -1.0]).unwrap();
        let mut g = [0.0; 2];
        q.gradient_into(&[2.0, 0.0], &mut g).unwrap();
        assert_eq!(g, [2.0, 2.0]);
        // q*(y) = <c,y> + ‖y‖²/(2w); at y = ∇q(x) Fenchel-Young is tight
        let x = [2.0, 0.0];
        let fy = q.conjugate_value(&g).unwrap();
        assert!((q.value(&x) + fy - vector::dot(&x, &g)).abs() < 1e-14);
        assert!(L1Norm { lambda: 1.0 }.gradient_into(&x, &mut g).is_err());
    }
}
