//! Algorithm 1: the non-stationary primal-dual method for merely convex `f`, `g`.
//!
//! [`Alg1`] is the eliminated form that works with `prox_{ρg*}` and caches
//! K-products. [`RawScheme1`] keeps the splitting variable `r` and executes
//! the alternating-minimization scheme literally; the two must agree to
//! rounding. [`ConstrainedAlg1`] handles `min f(x) + ψ(x) s.t. Kx = b` with a
//! smooth `ψ`.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::linop::LinearMap;
use crate::prox::{conjugate_prox_into, ProxFunction};
use crate::vector::{self, axpy};
use crate::IterativeMethod;

/// `min_x f(x) + g(Kx)`.
#[derive(Debug, Clone)]
pub struct CompositeProblem {
    pub f: Arc<dyn ProxFunction>,
    pub g: Arc<dyn ProxFunction>,
    pub k: Arc<LinearMap>,
}

impl CompositeProblem {
    pub fn new(f: Arc<dyn ProxFunction>, g: Arc<dyn ProxFunction>, k: Arc<LinearMap>) -> Result<Self> {
        if let Some(d) = f.dim() {
            check_dim("f dimension vs K columns", k.cols(), d)?;
        }
        if let Some(d) = g.dim() {
            check_dim("g dimension vs K rows", k.rows(), d)?;
        }
        Ok(Self { f, g, k })
    }

    /// Verifies that the objective is finite at a user-supplied point.
    pub fn check_proper(&self, x: &[f64]) -> Result<()> {
        let v = self.primal_value(x)?;
        if v.is_finite() {
            Ok(())
        } else {
            Err(Error::InvalidConfig(format!(
                "objective is {v} at the supplied feasible point"
            )))
        }
    }

    pub fn n(&self) -> usize {
        self.k.rows()
    }

    pub fn p(&self) -> usize {
        self.k.cols()
    }

    pub fn norm_k(&self) -> f64 {
        self.k.norm()
    }

    /// `F(x) = f(x) + g(Kx)`.
    pub fn primal_value(&self, x: &[f64]) -> Result<f64> {
        let kx = self.k.apply(x)?;
        Ok(self.f.value(x) + self.g.value(&kx))
    }

    /// `G(y) = f*(-Kᵀy) + g*(y)`, when both conjugates have closed forms.
    pub fn dual_value(&self, y: &[f64]) -> Result<f64> {
        let kty = self.k.adjoint_apply(y)?;
        let neg: Vec<f64> = kty.iter().map(|v| -v).collect();
        let fs = self
            .f
            .conjugate_value(&neg)
            .ok_or_else(|| Error::UnsupportedMetric(format!("no conjugate for {:?}", self.f)))?;
        let gs = self
            .g
            .conjugate_value(y)
            .ok_or_else(|| Error::UnsupportedMetric(format!("no conjugate for {:?}", self.g)))?;
        Ok(fs + gs)
    }
}

/// The four per-iteration parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepParams {
    pub tau: f64,
    pub rho: f64,
    pub beta: f64,
    pub eta: f64,
}

/// `τk = c/(k+c)`, `ρk = ρ0/τk`, `βk = γ/(‖K‖²ρk)`, `ηk = (1-γ)ρk`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeneralSchedule {
    pub c: f64,
    pub gamma: f64,
    pub rho0: f64,
    pub norm_k: f64,
}

impl GeneralSchedule {
    pub fn new(c: f64, gamma: f64, rho0: f64, norm_k: f64) -> Result<Self> {
        if !(c >= 1.0) {
            return Err(Error::InvalidConfig(format!("c must be at least 1, got {c}")));
        }
        if !(gamma > 0.0 && gamma < 1.0) {
            return Err(Error::InvalidConfig(format!("gamma must lie in (0, 1), got {gamma}")));
        }
        if !(rho0 > 0.0) || !rho0.is_finite() {
            return Err(Error::InvalidConfig(format!("rho0 must be positive, got {rho0}")));
        }
        if !(norm_k > 0.0) || !norm_k.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "operator norm must be positive, got {norm_k}"
            )));
        }
        Ok(Self { c, gamma, rho0, norm_k })
    }

    pub fn tau(&self, k: usize) -> f64 {
        self.c / (k as f64 + self.c)
    }

    pub fn at(&self, k: usize) -> StepParams {
        schedule_at(self, k)
    }
}

pub fn schedule_at(s: &GeneralSchedule, k: usize) -> StepParams {
    let tau = s.tau(k);
    let rho = s.rho0 / tau;
    StepParams {
        tau,
        rho,
        beta: s.gamma / (s.norm_k * s.norm_k * rho),
        eta: (1.0 - s.gamma) * rho,
    }
}

/// How `ρ0` is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Rho0 {
    /// `5·√(γ/(1-γ))·‖y⁰-y*‖/(‖K‖‖x⁰-x*‖)` given a reference, else `1/‖K‖`.
    #[default]
    Auto,
    Value(f64),
}

/// Options shared by all solvers in the crate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    pub c: f64,
    pub gamma: f64,
    pub rho0: Rho0,
    pub max_iters: usize,
    pub trace_every: usize,
    /// Early stop once the computable gap falls below this value.
    pub tol: Option<f64>,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            c: 1.0,
            gamma: 0.5,
            rho0: Rho0::Auto,
            max_iters: 10_000,
            trace_every: 1,
            tol: None,
        }
    }
}

/// Resolves [`Rho0`] into a number.
pub fn resolve_rho0(
    rule: Rho0,
    gamma: f64,
    norm_k: f64,
    x0: &[f64],
    y0: &[f64],
    reference: Option<(&[f64], &[f64])>,
) -> f64 {
    match rule {
        Rho0::Value(v) => v,
        Rho0::Auto => {
            if let Some((xs, ys)) = reference {
                let dx = vector::dist(x0, xs);
                let dy = vector::dist(y0, ys);
                if dx > 0.0 && dy > 0.0 {
                    return 5.0 * (gamma / (1.0 - gamma)).sqrt() * dy / (norm_k * dx);
                }
            }
            1.0 / norm_k
        }
    }
}

/// `φρ(x, r, y) = <y, Kx - r> + (ρ/2)‖Kx - r‖²`.
pub fn phi_rho(k: &LinearMap, x: &[f64], r: &[f64], y: &[f64], rho: f64) -> Result<f64> {
    let res = vector::sub(&k.apply(x)?, r);
    Ok(vector::dot(y, &res) + 0.5 * rho * vector::norm2_sq(&res))
}

/// `∇ₓφρ(x, r, y) = Kᵀ(y + ρ(Kx - r))`.
pub fn grad_phi_x(k: &LinearMap, x: &[f64], r: &[f64], y: &[f64], rho: f64) -> Result<Vec<f64>> {
    let mut m = k.apply(x)?;
    check_dim("phi r", m.len(), r.len())?;
    for ((mi, ri), yi) in m.iter_mut().zip(r).zip(y) {
        *mi = yi + rho * (*mi - ri);
    }
    k.adjoint_apply(&m)
}

/// `∇ᵣφρ(x, r, y) = -(y + ρ(Kx - r))`.
pub fn grad_phi_r(k: &LinearMap, x: &[f64], r: &[f64], y: &[f64], rho: f64) -> Result<Vec<f64>> {
    let kx = k.apply(x)?;
    Ok(kx
        .iter()
        .zip(r)
        .zip(y)
        .map(|((a, ri), yi)| -(yi + rho * (a - ri)))
        .collect())
}

pub(crate) fn divergence(k: usize, what: &'static str) -> Error {
    Error::Divergence { iteration: k, what }
}

pub(crate) fn ensure_finite(k: usize, what: &'static str, v: &[f64]) -> Result<()> {
    if vector::all_finite(v) {
        Ok(())
    } else {
        Err(divergence(k, what))
    }
}

/// Dual bookkeeping shared by the eliminated solvers: `y`, `ỹ`, `ỹ` of the
/// previous iteration and the average `ȳ`.
#[derive(Debug, Clone)]
pub(crate) struct DualState {
    pub y: Vec<f64>,
    pub y_tilde: Vec<f64>,
    pub y_tilde_prev: Vec<f64>,
    pub y_bar: Vec<f64>,
    pub rho_prev: f64,
}

impl DualState {
    pub fn new(y0: &[f64], rho0: f64) -> Self {
        Self {
            y: y0.to_vec(),
            y_tilde: y0.to_vec(),
            y_tilde_prev: y0.to_vec(),
            y_bar: y0.to_vec(),
            rho_prev: rho0,
        }
    }

    /// Three-point update of `ỹ` with the residual increment `d` (already
    /// scaled by `η`), followed by the averaging step.
    ///
    /// `ỹ⁺ = ỹ + d + (1-γ)(y⁺ - ỹ) - (1-γ)(ρk/ρk₋₁)(1-τk)(yᵏ - ỹᵏ⁻¹)`.
    pub fn advance(&mut self, y_new: Vec<f64>, d: &[f64], gamma: f64, rho: f64, tau: f64) {
        let a = 1.0 - gamma;
        let coef = a * (rho / self.rho_prev) * (1.0 - tau);
        let mut next = self.y_tilde.clone();
        for i in 0..next.len() {
            next[i] += d[i] + a * (y_new[i] - self.y_tilde[i]) - coef * (self.y[i] - self.y_tilde_prev[i]);
        }
        for (b, yn) in self.y_bar.iter_mut().zip(&y_new) {
            *b = (1.0 - tau) * *b + tau * yn;
        }
        self.y_tilde_prev = std::mem::replace(&mut self.y_tilde, next);
        self.y = y_new;
        self.rho_prev = rho;
    }
}

/// Algorithm 1 in eliminated form.
///
/// Per iteration: one `prox_{ρg*}`, one `prox_{βf}`, one `Kx`, one `Kᵀy`.
#[derive(Debug, Clone)]
pub struct Alg1<'a> {
    problem: &'a CompositeProblem,
    schedule: GeneralSchedule,
    k: usize,
    x: Vec<f64>,
    x_prev: Vec<f64>,
    x_hat: Vec<f64>,
    dual: DualState,
    kx: Vec<f64>,
    kx_hat: Vec<f64>,
    kx_hat_prev: Vec<f64>,
    scratch_n: Vec<f64>,
}

impl<'a> Alg1<'a> {
    pub fn new(problem: &'a CompositeProblem, schedule: GeneralSchedule, x0: &[f64], y0: &[f64]) -> Result<Self> {
        check_dim("x0", problem.p(), x0.len())?;
        check_dim("y0", problem.n(), y0.len())?;
        let kx = problem.k.apply(x0)?;
        Ok(Self {
            problem,
            schedule,
            k: 0,
            x: x0.to_vec(),
            x_prev: x0.to_vec(),
            x_hat: x0.to_vec(),
            dual: DualState::new(y0, schedule.rho0),
            kx_hat: kx.clone(),
            kx_hat_prev: kx.clone(),
            kx,
            scratch_n: vec![0.0; y0.len()],
        })
    }

    pub fn schedule(&self) -> &GeneralSchedule {
        &self.schedule
    }
    pub fn x(&self) -> &[f64] {
        &self.x
    }
    pub fn x_prev(&self) -> &[f64] {
        &self.x_prev
    }
    pub fn x_hat(&self) -> &[f64] {
        &self.x_hat
    }
    /// Last dual iterate `yᵏ`.
    pub fn y(&self) -> &[f64] {
        &self.dual.y
    }
    pub fn y_tilde(&self) -> &[f64] {
        &self.dual.y_tilde
    }
    pub fn y_bar(&self) -> &[f64] {
        &self.dual.y_bar
    }
    /// Cached `Kxᵏ`.
    pub fn kx(&self) -> &[f64] {
        &self.kx
    }

    pub fn step(&mut self) -> Result<()> {
        let k = self.k;
        let StepParams { tau, rho, beta, eta } = self.schedule.at(k);
        let tau_next = self.schedule.tau(k + 1);
        let op = &self.problem.k;
        let n = self.kx.len();

        // y⁺ = prox_{ρg*}(ỹ + ρKx̂)
        let v: Vec<f64> = (0..n).map(|i| self.dual.y_tilde[i] + rho * self.kx_hat[i]).collect();
        let mut y_new = vec![0.0; n];
        conjugate_prox_into(self.problem.g.as_ref(), &v, rho, &mut self.scratch_n, &mut y_new);

        // x⁺ = prox_{βf}(x̂ - βKᵀy⁺)
        let mut u = vec![0.0; self.x.len()];
        op.adjoint(&y_new, &mut u);
        for (ui, xh) in u.iter_mut().zip(&self.x_hat) {
            *ui = xh - beta * *ui;
        }
        let mut x_new = vec![0.0; u.len()];
        self.problem.f.prox_into(&u, beta, &mut x_new);
        ensure_finite(k, "primal iterate", &x_new)?;
        ensure_finite(k, "dual iterate", &y_new)?;

        let mut kx_new = vec![0.0; n];
        op.forward(&x_new, &mut kx_new);

        // x̂⁺ = x⁺ + τk₊₁(1-τk)/τk (x⁺ - x)
        let m = tau_next * (1.0 - tau) / tau;
        let x_hat_new: Vec<f64> = x_new.iter().zip(&self.x).map(|(a, b)| a + m * (a - b)).collect();
        let kx_hat_new: Vec<f64> = kx_new.iter().zip(&self.kx).map(|(a, b)| a + m * (a - b)).collect();

        // η K[x⁺ - x̂ - (1-τ)(x - x̂⁻)]
        let d: Vec<f64> = (0..n)
            .map(|i| eta * (kx_new[i] - self.kx_hat[i] - (1.0 - tau) * (self.kx[i] - self.kx_hat_prev[i])))
            .collect();
        self.dual.advance(y_new, &d, self.schedule.gamma, rho, tau);
        ensure_finite(k, "intermediate dual iterate", &self.dual.y_tilde)?;

        self.x_prev = std::mem::replace(&mut self.x, x_new);
        self.x_hat = x_hat_new;
        self.kx = kx_new;
        self.kx_hat_prev = std::mem::replace(&mut self.kx_hat, kx_hat_new);
        self.k += 1;
        Ok(())
    }
}

impl IterativeMethod for Alg1<'_> {
    fn step(&mut self) -> Result<()> {
        Alg1::step(self)
    }
    fn iteration(&self) -> usize {
        self.k
    }
    fn primal(&self) -> &[f64] {
        &self.x
    }
    fn dual(&self) -> &[f64] {
        &self.dual.y_bar
    }
    fn name(&self) -> String {
        format!("alg1-c{}", self.schedule.c)
    }
}

/// The alternating scheme with the splitting variable `r` kept explicitly.
#[derive(Debug, Clone)]
pub struct RawScheme1<'a> {
    problem: &'a CompositeProblem,
    schedule: GeneralSchedule,
    pub k: usize,
    pub x: Vec<f64>,
    pub x_hat: Vec<f64>,
    pub x_tilde: Vec<f64>,
    pub r: Vec<f64>,
    pub y_tilde: Vec<f64>,
    pub y_bar: Vec<f64>,
}

impl<'a> RawScheme1<'a> {
    /// Starts from `r⁰ = Kx⁰`, `x̃⁰ = x̂⁰ = x⁰`, `ỹ⁰ = ȳ⁰ = y⁰`.
    pub fn new(problem: &'a CompositeProblem, schedule: GeneralSchedule, x0: &[f64], y0: &[f64]) -> Result<Self> {
        check_dim("x0", problem.p(), x0.len())?;
        check_dim("y0", problem.n(), y0.len())?;
        Ok(Self {
            problem,
            schedule,
            k: 0,
            x: x0.to_vec(),
            x_hat: x0.to_vec(),
            x_tilde: x0.to_vec(),
            r: problem.k.apply(x0)?,
            y_tilde: y0.to_vec(),
            y_bar: y0.to_vec(),
        })
    }

    pub fn step(&mut self) -> Result<()> {
        let StepParams { tau, rho, beta, eta } = self.schedule.at(self.k);
        let op = &self.problem.k;
        let x_hat = vector::lerp(&self.x, &self.x_tilde, tau);
        let kx_hat = op.apply(&x_hat)?;

        // r⁺ = prox_{g/ρ}(ỹ/ρ + Kx̂)
        let v: Vec<f64> = self.y_tilde.iter().zip(&kx_hat).map(|(y, a)| y / rho + a).collect();
        let r_new = self.problem.g.prox(&v, 1.0 / rho);

        let grad = grad_phi_x(op, &x_hat, &r_new, &self.y_tilde, rho)?;
        let mut u = x_hat.clone();
        axpy(-beta, &grad, &mut u);
        let x_new = self.problem.f.prox(&u, beta);
        ensure_finite(self.k, "primal iterate", &x_new)?;

        let x_tilde_new: Vec<f64> = self
            .x_tilde
            .iter()
            .zip(x_new.iter().zip(&x_hat))
            .map(|(xt, (xn, xh))| xt + (xn - xh) / tau)
            .collect();

        let kx = op.apply(&self.x)?;
        let kx_new = op.apply(&x_new)?;
        let y_tilde_new: Vec<f64> = (0..self.r.len())
            .map(|i| self.y_tilde[i] + eta * (kx_new[i] - r_new[i] - (1.0 - tau) * (kx[i] - self.r[i])))
            .collect();
        for i in 0..self.y_bar.len() {
            let y_hat = self.y_tilde[i] + rho * (kx_hat[i] - r_new[i]);
            self.y_bar[i] = (1.0 - tau) * self.y_bar[i] + tau * y_hat;
        }
        ensure_finite(self.k, "intermediate dual iterate", &y_tilde_new)?;

        self.x = x_new;
        self.x_hat = x_hat;
        self.x_tilde = x_tilde_new;
        self.r = r_new;
        self.y_tilde = y_tilde_new;
        self.k += 1;
        Ok(())
    }
}

/// `min f(x) + ψ(x) s.t. Kx = b` with `ψ` smooth.
#[derive(Debug, Clone)]
pub struct EqConstrainedProblem {
    pub f: Arc<dyn ProxFunction>,
    pub psi: Arc<dyn ProxFunction>,
    pub k: Arc<LinearMap>,
    pub b: Vec<f64>,
    pub l_psi: f64,
}

impl EqConstrainedProblem {
    /// Validates dimensions and checks `∇ψ` against central differences at
    /// ten random points.
    pub fn new(f: Arc<dyn ProxFunction>, psi: Arc<dyn ProxFunction>, k: Arc<LinearMap>, b: Vec<f64>) -> Result<Self> {
        check_dim("b", k.rows(), b.len())?;
        let l_psi = psi.smooth_lipschitz().ok_or_else(|| {
            Error::InvalidConfig("psi must be smooth with a known gradient Lipschitz constant".into())
        })?;
        let p = k.cols();
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
        let mut grad = vec![0.0; p];
        for _ in 0..10 {
            let x: Vec<f64> = (0..p).map(|_| rng.random_range(-1.0..1.0)).collect();
            psi.gradient_into(&x, &mut grad)?;
            let h = 1e-6;
            let mut fd = vec![0.0; p];
            let mut xp = x.clone();
            for j in 0..p {
                xp[j] = x[j] + h;
                let up = psi.value(&xp);
                xp[j] = x[j] - h;
                let dn = psi.value(&xp);
                xp[j] = x[j];
                fd[j] = (up - dn) / (2.0 * h);
            }
            let err = vector::dist(&fd, &grad);
            if err > 1e-5 * (1.0 + vector::norm2(&grad)) {
                return Err(Error::InvalidConfig(format!(
                    "psi gradient fails the finite-difference check (error {err:.3e})"
                )));
            }
        }
        Ok(Self { f, psi, k, b, l_psi })
    }

    pub fn objective(&self, x: &[f64]) -> f64 {
        self.f.value(x) + self.psi.value(x)
    }

    pub fn feasibility(&self, x: &[f64]) -> Result<f64> {
        Ok(vector::dist(&self.k.apply(x)?, &self.b))
    }
}

/// Algorithm 1 specialized to linear equality constraints, with `ψ` handled
/// by a gradient step and `βk = γ/(‖K‖²ρk + γLψ)`.
#[derive(Debug, Clone)]
pub struct ConstrainedAlg1<'a> {
    problem: &'a EqConstrainedProblem,
    schedule: GeneralSchedule,
    k: usize,
    x: Vec<f64>,
    x_hat: Vec<f64>,
    y: Vec<f64>,
    y_tilde: Vec<f64>,
    y_bar: Vec<f64>,
    kx: Vec<f64>,
}

impl<'a> ConstrainedAlg1<'a> {
    pub fn new(problem: &'a EqConstrainedProblem, schedule: GeneralSchedule, x0: &[f64], y0: &[f64]) -> Result<Self> {
        check_dim("x0", problem.k.cols(), x0.len())?;
        check_dim("y0", problem.k.rows(), y0.len())?;
        Ok(Self {
            problem,
            schedule,
            k: 0,
            x: x0.to_vec(),
            x_hat: x0.to_vec(),
            y: y0.to_vec(),
            y_tilde: y0.to_vec(),
            y_bar: y0.to_vec(),
            kx: problem.k.apply(x0)?,
        })
    }

    pub fn beta(&self, k: usize) -> f64 {
        let rho = self.schedule.at(k).rho;
        let nk = self.schedule.norm_k;
        self.schedule.gamma / (nk * nk * rho + self.schedule.gamma * self.problem.l_psi)
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }
    pub fn y(&self) -> &[f64] {
        &self.y
    }
    pub fn y_bar(&self) -> &[f64] {
        &self.y_bar
    }

    pub fn step(&mut self) -> Result<()> {
        let k = self.k;
        let StepParams { tau, rho, eta, .. } = self.schedule.at(k);
        let beta = self.beta(k);
        let tau_next = self.schedule.tau(k + 1);
        let op = &self.problem.k;
        let b = &self.problem.b;

        let kx_hat = op.apply(&self.x_hat)?;
        let y_new: Vec<f64> = (0..b.len())
            .map(|i| self.y_tilde[i] + rho * (kx_hat[i] - b[i]))
            .collect();

        let mut grad = vec![0.0; self.x.len()];
        self.problem.psi.gradient_into(&self.x_hat, &mut grad)?;
        let kty = op.adjoint_apply(&y_new)?;
        let u: Vec<f64> = (0..grad.len())
            .map(|j| self.x_hat[j] - beta * (kty[j] + grad[j]))
            .collect();
        let x_new = self.problem.f.prox(&u, beta);
        ensure_finite(k, "primal iterate", &x_new)?;
        ensure_finite(k, "dual iterate", &y_new)?;

        let kx_new = op.apply(&x_new)?;
        let m = tau_next * (1.0 - tau) / tau;
        self.x_hat = x_new.iter().zip(&self.x).map(|(a, c)| a + m * (a - c)).collect();

        // ỹ⁺ = ỹ + η[K(x⁺ - (1-τ)x) - τb]
        for i in 0..b.len() {
            self.y_tilde[i] += eta * (kx_new[i] - (1.0 - tau) * self.kx[i] - tau * b[i]);
            self.y_bar[i] = (1.0 - tau) * self.y_bar[i] + tau * y_new[i];
        }
        self.x = x_new;
        self.kx = kx_new;
        self.y = y_new;
        self.k += 1;
        Ok(())
    }
}

impl IterativeMethod for ConstrainedAlg1<'_> {
    fn step(&mut self) -> Result<()> {
        ConstrainedAlg1::step(self)
    }
    fn iteration(&self) -> usize {
        self.k
    }
    fn primal(&self) -> &[f64] {
        &self.x
    }
    fn dual(&self) -> &[f64] {
        &self.y_bar
    }
    fn name(&self) -> String {
        format!("alg1-constrained-c{}", self.schedule.c)
    }
}
