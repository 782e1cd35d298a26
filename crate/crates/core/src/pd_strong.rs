//! Algorithm 2: the strongly convex case with `O(1/k²)` schedules, its raw
//! counterpart, and the semi-strongly convex constrained scheme.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::inner::{InnerSettings, QuadSubproblem};
use crate::linop::LinearMap;
use crate::pd_general::{ensure_finite, grad_phi_x, CompositeProblem, DualState, StepParams};
use crate::prox::{conjugate_prox_into, ProxFunction};
use crate::vector;
use crate::IterativeMethod;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum StrongCase {
    /// `τ0 = 1`, `τk₊₁ = (τk/2)(√(τk² + 4) - τk)`.
    Case1,
    /// `τk = c/(k + c)` with `c > 2`.
    Case2 { c: f64 },
}

/// One step of the Case 1 recursion.
pub fn case1_next_tau(tau: f64) -> f64 {
    0.5 * tau * ((tau * tau + 4.0).sqrt() - tau)
}

/// `ρk = ρ0/τk²`, `βk = Γ/(ρk‖K‖²)`, `ηk = (1-γ)ρk`, `Γ = 2 - 1/γ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StrongSchedule {
    pub case: StrongCase,
    pub gamma: f64,
    pub big_gamma: f64,
    pub rho0: f64,
    pub mu_f: f64,
    pub norm_k: f64,
    k_current: usize,
    tau_current: f64,
}

impl StrongSchedule {
    /// Validates every parameter including the case-specific bound on `ρ0`.
    pub fn new(case: StrongCase, gamma: f64, rho0: f64, mu_f: f64, norm_k: f64) -> Result<Self> {
        let s = Self::new_unchecked(case, gamma, rho0, mu_f, norm_k)?;
        let bound = Self::rho0_bound(case, gamma, mu_f, norm_k);
        // one ulp of headroom so the bound itself is accepted
        if rho0 > bound * (1.0 + 4.0 * f64::EPSILON) {
            let rule = match case {
                StrongCase::Case1 => "rho0 <= Gamma*mu_f/(2*|K|^2)",
                StrongCase::Case2 { .. } => "rho0 <= c(c-1)*Gamma*mu_f/((2c-1)*|K|^2)",
            };
            return Err(Error::InvalidConfig(format!(
                "{rule} violated: rho0 = {rho0}, bound = {bound}"
            )));
        }
        Ok(s)
    }

    /// Same as [`StrongSchedule::new`] but accepts `ρ0` above the case bound.
    /// Used for the deliberately aggressive `5Γμ/(2‖K‖²)` variant.
    pub fn new_unchecked(case: StrongCase, gamma: f64, rho0: f64, mu_f: f64, norm_k: f64) -> Result<Self> {
        if !(gamma > 0.5 && gamma < 1.0) {
            return Err(Error::InvalidConfig(format!("gamma must lie in (1/2, 1), got {gamma}")));
        }
        if let StrongCase::Case2 { c } = case {
            if !(c > 2.0) {
                return Err(Error::InvalidConfig(format!("Case 2 needs c > 2, got {c}")));
            }
        }
        if !(mu_f > 0.0) {
            return Err(Error::InvalidConfig(format!("mu_f must be positive, got {mu_f}")));
        }
        if !(rho0 > 0.0) || !rho0.is_finite() {
            return Err(Error::InvalidConfig(format!("rho0 must be positive, got {rho0}")));
        }
        if !(norm_k > 0.0) || !norm_k.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "operator norm must be positive, got {norm_k}"
            )));
        }
        Ok(Self {
            case,
            gamma,
            big_gamma: 2.0 - 1.0 / gamma,
            rho0,
            mu_f,
            norm_k,
            k_current: 0,
            tau_current: 1.0,
        })
    }

    pub fn rho0_bound(case: StrongCase, gamma: f64, mu_f: f64, norm_k: f64) -> f64 {
        let big_gamma = 2.0 - 1.0 / gamma;
        let nk2 = norm_k * norm_k;
        match case {
            StrongCase::Case1 => big_gamma * mu_f / (2.0 * nk2),
            StrongCase::Case2 { c } => c * (c - 1.0) * big_gamma * mu_f / ((2.0 * c - 1.0) * nk2),
        }
    }

    pub fn iteration(&self) -> usize {
        self.k_current
    }

    fn tau_after(&self, tau: f64, k: usize) -> f64 {
        match self.case {
            StrongCase::Case1 => case1_next_tau(tau),
            StrongCase::Case2 { c } => c / ((k + 1) as f64 + c),
        }
    }

    /// `τ` at the current iteration.
    pub fn tau(&self) -> f64 {
        self.tau_current
    }

    /// `τk₊₁` relative to the current iteration.
    pub fn next_tau(&self) -> f64 {
        self.tau_after(self.tau_current, self.k_current)
    }

    pub fn params_for_tau(&self, tau: f64) -> StepParams {
        let rho = self.rho0 / (tau * tau);
        StepParams {
            tau,
            rho,
            beta: self.big_gamma / (rho * self.norm_k * self.norm_k),
            eta: (1.0 - self.gamma) * rho,
        }
    }

    pub fn current(&self) -> StepParams {
        self.params_for_tau(self.tau_current)
    }

    /// Moves the schedule to the next iteration.
    pub fn advance(&mut self) {
        self.tau_current = self.next_tau();
        self.k_current += 1;
        if self.case == StrongCase::Case1 {
            debug_assert!(self.tau_current <= 2.0 / (self.k_current as f64 + 2.0) + 1e-15);
        }
    }

    /// Parameters at iteration `k`, computed from scratch (Case 1 replays the
    /// recursion, so this is `O(k)`).
    pub fn at(&self, k: usize) -> StepParams {
        let mut s = *self;
        s.k_current = 0;
        s.tau_current = 1.0;
        if let StrongCase::Case2 { c } = self.case {
            s.tau_current = c / (k as f64 + c);
            s.k_current = k;
        } else {
            for _ in 0..k {
                s.advance();
            }
        }
        s.current()
    }
}

pub fn strong_schedule_at(s: &StrongSchedule, k: usize) -> StepParams {
    s.at(k)
}

/// Algorithm 2 in eliminated form.
#[derive(Debug, Clone)]
pub struct Alg2<'a> {
    problem: &'a CompositeProblem,
    schedule: StrongSchedule,
    k: usize,
    x: Vec<f64>,
    x_hat: Vec<f64>,
    x_tilde: Vec<f64>,
    dual: DualState,
    kx: Vec<f64>,
    kx_hat: Vec<f64>,
    kx_hat_prev: Vec<f64>,
    averaging: bool,
    scratch_n: Vec<f64>,
}

impl<'a> Alg2<'a> {
    pub fn new(problem: &'a CompositeProblem, schedule: StrongSchedule, x0: &[f64], y0: &[f64]) -> Result<Self> {
        check_dim("x0", problem.p(), x0.len())?;
        check_dim("y0", problem.n(), y0.len())?;
        let mu = problem.f.strong_convexity();
        if mu < schedule.mu_f {
            return Err(Error::InvalidConfig(format!(
                "f has strong convexity {mu}, below the schedule's mu_f = {}",
                schedule.mu_f
            )));
        }
        let kx = problem.k.apply(x0)?;
        let mut schedule = schedule;
        schedule.k_current = 0;
        schedule.tau_current = 1.0;
        Ok(Self {
            problem,
            schedule,
            k: 0,
            x: x0.to_vec(),
            x_hat: x0.to_vec(),
            x_tilde: x0.to_vec(),
            dual: DualState::new(y0, schedule.rho0),
            kx_hat: kx.clone(),
            kx_hat_prev: kx.clone(),
            kx,
            averaging: false,
            scratch_n: vec![0.0; y0.len()],
        })
    }

    /// Replaces the second prox by `x⁺ = (1-τ)x + τx̃⁺`. The last iterate then
    /// loses its non-ergodic guarantee.
    pub fn with_averaging(mut self, on: bool) -> Self {
        self.averaging = on;
        self
    }

    pub fn schedule(&self) -> &StrongSchedule {
        &self.schedule
    }
    pub fn x(&self) -> &[f64] {
        &self.x
    }
    pub fn x_hat(&self) -> &[f64] {
        &self.x_hat
    }
    pub fn x_tilde(&self) -> &[f64] {
        &self.x_tilde
    }
    pub fn y(&self) -> &[f64] {
        &self.dual.y
    }
    pub fn y_bar(&self) -> &[f64] {
        &self.dual.y_bar
    }
    pub fn kx(&self) -> &[f64] {
        &self.kx
    }

    pub fn step(&mut self) -> Result<()> {
        let k = self.k;
        let StepParams { tau, rho, beta, eta } = self.schedule.current();
        let tau_next = self.schedule.next_tau();
        let op = &self.problem.k;
        let f = self.problem.f.as_ref();
        let n = self.kx.len();
        let p = self.x.len();
        let nk2 = self.schedule.norm_k * self.schedule.norm_k;

        let v: Vec<f64> = (0..n).map(|i| self.dual.y_tilde[i] + rho * self.kx_hat[i]).collect();
        let mut y_new = vec![0.0; n];
        conjugate_prox_into(self.problem.g.as_ref(), &v, rho, &mut self.scratch_n, &mut y_new);

        let mut kty = vec![0.0; p];
        op.adjoint(&y_new, &mut kty);

        let s = beta / tau;
        let u: Vec<f64> = (0..p).map(|j| self.x_tilde[j] - s * kty[j]).collect();
        let x_tilde_new = f.prox(&u, s);

        let x_new = if self.averaging {
            vector::lerp(&self.x, &x_tilde_new, tau)
        } else {
            let t = 1.0 / (rho * nk2);
            let u: Vec<f64> = (0..p).map(|j| self.x_hat[j] - t * kty[j]).collect();
            f.prox(&u, t)
        };
        ensure_finite(k, "primal iterate", &x_new)?;
        ensure_finite(k, "auxiliary primal iterate", &x_tilde_new)?;
        ensure_finite(k, "dual iterate", &y_new)?;

        let x_hat_new = vector::lerp(&x_new, &x_tilde_new, tau_next);
        let mut kx_new = vec![0.0; n];
        op.forward(&x_new, &mut kx_new);
        let mut kx_hat_new = vec![0.0; n];
        op.forward(&x_hat_new, &mut kx_hat_new);

        let d: Vec<f64> = (0..n)
            .map(|i| eta * (kx_new[i] - self.kx_hat[i] - (1.0 - tau) * (self.kx[i] - self.kx_hat_prev[i])))
            .collect();
        self.dual.advance(y_new, &d, self.schedule.gamma, rho, tau);
        ensure_finite(k, "intermediate dual iterate", &self.dual.y_tilde)?;

        self.x = x_new;
        self.x_tilde = x_tilde_new;
        self.x_hat = x_hat_new;
        self.kx = kx_new;
        self.kx_hat_prev = std::mem::replace(&mut self.kx_hat, kx_hat_new);
        self.schedule.advance();
        self.k += 1;
        Ok(())
    }
}

impl IterativeMethod for Alg2<'_> {
    fn step(&mut self) -> Result<()> {
        Alg2::step(self)
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
        match self.schedule.case {
            StrongCase::Case1 => "alg2-case1".into(),
            StrongCase::Case2 { c } => format!("alg2-case2-c{c}"),
        }
    }
}

/// Tseng-type scheme with the splitting variable `r` kept explicitly.
#[derive(Debug, Clone)]
pub struct RawScheme3<'a> {
    problem: &'a CompositeProblem,
    schedule: StrongSchedule,
    pub k: usize,
    pub x: Vec<f64>,
    pub x_hat: Vec<f64>,
    pub x_tilde: Vec<f64>,
    pub r: Vec<f64>,
    pub y_tilde: Vec<f64>,
    pub y_bar: Vec<f64>,
}

impl<'a> RawScheme3<'a> {
    pub fn new(problem: &'a CompositeProblem, schedule: StrongSchedule, x0: &[f64], y0: &[f64]) -> Result<Self> {
        check_dim("x0", problem.p(), x0.len())?;
        check_dim("y0", problem.n(), y0.len())?;
        let mut schedule = schedule;
        schedule.k_current = 0;
        schedule.tau_current = 1.0;
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
        let StepParams { tau, rho, beta, eta } = self.schedule.current();
        let op = &self.problem.k;
        let f = self.problem.f.as_ref();
        let nk2 = self.schedule.norm_k * self.schedule.norm_k;

        let x_hat = vector::lerp(&self.x, &self.x_tilde, tau);
        let kx_hat = op.apply(&x_hat)?;
        let v: Vec<f64> = self.y_tilde.iter().zip(&kx_hat).map(|(y, a)| y / rho + a).collect();
        let r_new = self.problem.g.prox(&v, 1.0 / rho);
        let grad = grad_phi_x(op, &x_hat, &r_new, &self.y_tilde, rho)?;

        let s = beta / tau;
        let mut u = self.x_tilde.clone();
        vector::axpy(-s, &grad, &mut u);
        let x_tilde_new = f.prox(&u, s);

        let t = 1.0 / (rho * nk2);
        let mut u = x_hat.clone();
        vector::axpy(-t, &grad, &mut u);
        let x_new = f.prox(&u, t);
        ensure_finite(self.k, "primal iterate", &x_new)?;

        let kx = op.apply(&self.x)?;
        let kx_new = op.apply(&x_new)?;
        for i in 0..self.r.len() {
            let y_hat = self.y_tilde[i] + rho * (kx_hat[i] - r_new[i]);
            self.y_bar[i] = (1.0 - tau) * self.y_bar[i] + tau * y_hat;
            self.y_tilde[i] += eta * (kx_new[i] - r_new[i] - (1.0 - tau) * (kx[i] - self.r[i]));
        }
        ensure_finite(self.k, "intermediate dual iterate", &self.y_tilde)?;

        self.x = x_new;
        self.x_tilde = x_tilde_new;
        self.x_hat = x_hat;
        self.r = r_new;
        self.schedule.advance();
        self.k += 1;
        Ok(())
    }
}

/// How the `w`-subproblem of the semi-strong scheme is solved.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum WSolver {
    /// `B = -I`: one prox of `ψ`.
    ClosedFormNegIdentity,
    /// Accelerated proximal gradient with restart.
    InnerApg { tol: f64, max_inner: usize },
}

impl Default for WSolver {
    fn default() -> Self {
        WSolver::InnerApg {
            tol: 1e-10,
            max_inner: 500,
        }
    }
}

/// `min f(x) + ψ(w) s.t. Kx + Bw = b` with `f` strongly convex.
#[derive(Debug, Clone)]
pub struct SemiStrongProblem {
    pub f: Arc<dyn ProxFunction>,
    pub psi: Arc<dyn ProxFunction>,
    pub k: Arc<LinearMap>,
    pub b_op: Arc<LinearMap>,
    pub b: Vec<f64>,
    pub nu0: f64,
    pub w_solver: WSolver,
}

impl SemiStrongProblem {
    pub fn new(
        f: Arc<dyn ProxFunction>,
        psi: Arc<dyn ProxFunction>,
        k: Arc<LinearMap>,
        b_op: Arc<LinearMap>,
        b: Vec<f64>,
        nu0: f64,
        w_solver: WSolver,
    ) -> Result<Self> {
        check_dim("b", k.rows(), b.len())?;
        check_dim("B rows", k.rows(), b_op.rows())?;
        if !(f.strong_convexity() > 0.0) {
            return Err(Error::InvalidConfig("f must be strongly convex".into()));
        }
        if !(nu0 >= 0.0) {
            return Err(Error::InvalidConfig(format!("nu0 must be nonnegative, got {nu0}")));
        }
        if w_solver == WSolver::ClosedFormNegIdentity && !b_op.is_negative_identity() {
            return Err(Error::InvalidConfig("closed-form w-update requires B = -I".into()));
        }
        Ok(Self {
            f,
            psi,
            k,
            b_op,
            b,
            nu0,
            w_solver,
        })
    }

    /// `0` when `‖Bw‖²` already makes the `w`-subproblem strongly convex
    /// (B injective), `1` otherwise.
    pub fn default_nu0(b_op: &LinearMap) -> f64 {
        if b_op.is_negative_identity() {
            return 0.0;
        }
        if b_op.cols() > b_op.rows() {
            return 1.0;
        }
        // λmin(BᵀB) = ‖B‖² - λmax(‖B‖²I - BᵀB)
        let nb2 = b_op.norm().powi(2);
        let q = b_op.cols();
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
        let mut v: Vec<f64> = (0..q).map(|_| rng.random_range(-1.0..1.0)).collect();
        let nv = vector::norm2(&v);
        v.iter_mut().for_each(|x| *x /= nv);
        let mut bv = vec![0.0; b_op.rows()];
        let mut btbv = vec![0.0; q];
        let mut lam = 0.0;
        for _ in 0..5000 {
            b_op.forward(&v, &mut bv);
            b_op.adjoint(&bv, &mut btbv);
            let w: Vec<f64> = (0..q).map(|j| nb2 * v[j] - btbv[j]).collect();
            let nw = vector::norm2(&w);
            if nw == 0.0 {
                break;
            }
            let next = vector::dot(&v, &w);
            v = w.iter().map(|x| x / nw).collect();
            if (next - lam).abs() <= 1e-12 * nb2 {
                lam = next;
                break;
            }
            lam = next;
        }
        if nb2 - lam > 1e-8 * nb2 {
            0.0
        } else {
            1.0
        }
    }

    /// `F(x, w) = f(x) + ψ(w)`.
    pub fn objective(&self, x: &[f64], w: &[f64]) -> f64 {
        self.f.value(x) + self.psi.value(w)
    }

    /// `‖Kx + Bw - b‖`.
    pub fn feasibility(&self, x: &[f64], w: &[f64]) -> Result<f64> {
        let r = vector::add(&self.k.apply(x)?, &self.b_op.apply(w)?);
        Ok(vector::dist(&r, &self.b))
    }
}

/// The semi-strong scheme: an exact `w`-step followed by the Algorithm 2
/// primal updates.
#[derive(Debug, Clone)]
pub struct SemiStrongSolver<'a> {
    problem: &'a SemiStrongProblem,
    schedule: StrongSchedule,
    k: usize,
    x: Vec<f64>,
    x_hat: Vec<f64>,
    x_tilde: Vec<f64>,
    w: Vec<f64>,
    w_hat: Vec<f64>,
    y: Vec<f64>,
    y_tilde: Vec<f64>,
    y_bar: Vec<f64>,
    /// `Kxᵏ + Bwᵏ - b`.
    residual: Vec<f64>,
}

impl<'a> SemiStrongSolver<'a> {
    pub fn new(
        problem: &'a SemiStrongProblem,
        schedule: StrongSchedule,
        x0: &[f64],
        w0: &[f64],
        y0: &[f64],
    ) -> Result<Self> {
        check_dim("x0", problem.k.cols(), x0.len())?;
        check_dim("w0", problem.b_op.cols(), w0.len())?;
        check_dim("y0", problem.k.rows(), y0.len())?;
        let mut schedule = schedule;
        schedule.k_current = 0;
        schedule.tau_current = 1.0;
        let residual = vector::sub(
            &vector::add(&problem.k.apply(x0)?, &problem.b_op.apply(w0)?),
            &problem.b,
        );
        Ok(Self {
            problem,
            schedule,
            k: 0,
            x: x0.to_vec(),
            x_hat: x0.to_vec(),
            x_tilde: x0.to_vec(),
            w: w0.to_vec(),
            w_hat: w0.to_vec(),
            y: y0.to_vec(),
            y_tilde: y0.to_vec(),
            y_bar: y0.to_vec(),
            residual,
        })
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }
    pub fn w(&self) -> &[f64] {
        &self.w
    }
    pub fn y(&self) -> &[f64] {
        &self.y
    }
    pub fn y_bar(&self) -> &[f64] {
        &self.y_bar
    }
    pub fn residual(&self) -> &[f64] {
        &self.residual
    }

    /// Minimizes `ψ(w) + <Bᵀỹ, w> + (ρ/2)‖Kx̂ + Bw - b‖² + (ν0/2)‖w - ŵ‖²`.
    fn solve_w(&self, kx_hat: &[f64], rho: f64) -> Result<Vec<f64>> {
        let prob = self.problem;
        let nu = prob.nu0;
        match prob.w_solver {
            WSolver::ClosedFormNegIdentity => {
                let denom = rho + nu;
                let v: Vec<f64> = (0..kx_hat.len())
                    .map(|i| (self.y_tilde[i] + rho * (kx_hat[i] - prob.b[i]) + nu * self.w_hat[i]) / denom)
                    .collect();
                Ok(prob.psi.prox(&v, 1.0 / denom))
            }
            WSolver::InnerApg { tol, max_inner } => {
                let d: Vec<f64> = (0..kx_hat.len()).map(|i| prob.b[i] - kx_hat[i]).collect();
                let lin = prob.b_op.adjoint_apply(&self.y_tilde)?;
                let sub = QuadSubproblem {
                    h: prob.psi.as_ref(),
                    linear: Some(&lin),
                    rho,
                    op: &prob.b_op,
                    d: &d,
                    nu,
                    center: Some(&self.w_hat),
                };
                let mut w = self.w.clone();
                sub.solve(
                    &mut w,
                    InnerSettings {
                        tol,
                        max_iters: max_inner,
                    },
                )?;
                Ok(w)
            }
        }
    }

    pub fn step(&mut self) -> Result<()> {
        let k = self.k;
        let StepParams { tau, rho, beta, eta } = self.schedule.current();
        let tau_next = self.schedule.next_tau();
        let prob = self.problem;
        let f = prob.f.as_ref();
        let nk2 = self.schedule.norm_k * self.schedule.norm_k;
        let n = prob.b.len();

        let kx_hat = prob.k.apply(&self.x_hat)?;
        let w_new = self.solve_w(&kx_hat, rho)?;
        let bw_new = prob.b_op.apply(&w_new)?;
        let y_new: Vec<f64> = (0..n)
            .map(|i| self.y_tilde[i] + rho * (kx_hat[i] + bw_new[i] - prob.b[i]))
            .collect();
        let kty = prob.k.adjoint_apply(&y_new)?;

        let s = beta / tau;
        let u: Vec<f64> = self.x_tilde.iter().zip(&kty).map(|(a, g)| a - s * g).collect();
        let x_tilde_new = f.prox(&u, s);
        let t = 1.0 / (rho * nk2);
        let u: Vec<f64> = self.x_hat.iter().zip(&kty).map(|(a, g)| a - t * g).collect();
        let x_new = f.prox(&u, t);
        ensure_finite(k, "primal iterate", &x_new)?;
        ensure_finite(k, "split iterate", &w_new)?;

        let m = tau_next * (1.0 - tau) / tau;
        self.w_hat = w_new.iter().zip(&self.w).map(|(a, b)| a + m * (a - b)).collect();
        self.x_hat = vector::lerp(&x_new, &x_tilde_new, tau_next);

        let kx_new = prob.k.apply(&x_new)?;
        let res_new: Vec<f64> = (0..n).map(|i| kx_new[i] + bw_new[i] - prob.b[i]).collect();
        for i in 0..n {
            self.y_tilde[i] += eta * (res_new[i] - (1.0 - tau) * self.residual[i]);
            self.y_bar[i] = (1.0 - tau) * self.y_bar[i] + tau * y_new[i];
        }
        ensure_finite(k, "intermediate dual iterate", &self.y_tilde)?;

        self.x = x_new;
        self.x_tilde = x_tilde_new;
        self.w = w_new;
        self.y = y_new;
        self.residual = res_new;
        self.schedule.advance();
        self.k += 1;
        Ok(())
    }
}

impl IterativeMethod for SemiStrongSolver<'_> {
    fn step(&mut self) -> Result<()> {
        SemiStrongSolver::step(self)
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
        "alg2-semistrong".into()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prox::{elastic_prox, l1_prox, SquaredDistance, Zero};

    fn arc<T: ProxFunction + 'static>(t: T) -> Arc<dyn ProxFunction> {
        Arc::new(t)
    }

    #[test]
    fn case1_first_tau_is_golden() {
        let s = StrongSchedule::new(StrongCase::Case1, 0.75, 0.01, 0.1, 1.0).unwrap();
        assert!((s.at(1).tau - 0.618_033_988_749_895).abs() < 1e-12);
        assert!((s.big_gamma - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn case2_bound_example() {
        let bound = StrongSchedule::rho0_bound(StrongCase::Case2 { c: 4.0 }, 0.75, 0.1, 1.0);
        assert!((bound - 8.0 / 70.0).abs() < 1e-15);
        assert!(StrongSchedule::new(StrongCase::Case2 { c: 4.0 }, 0.75, bound, 0.1, 1.0).is_ok());
        let err = StrongSchedule::new(StrongCase::Case2 { c: 4.0 }, 0.75, 1.01 * bound, 0.1, 1.0);
        assert!(matches!(err, Err(Error::InvalidConfig(m)) if m.contains("c(c-1)")));
        assert!(StrongSchedule::new_unchecked(StrongCase::Case2 { c: 4.0 }, 0.75, 1.01 * bound, 0.1, 1.0).is_ok());
        assert!(StrongSchedule::new(StrongCase::Case2 { c: 2.0 }, 0.75, 0.01, 0.1, 1.0).is_err());
        assert!(StrongSchedule::new(StrongCase::Case1, 0.5, 0.01, 0.1, 1.0).is_err());
    }

    #[test]
    fn advance_matches_at() {
        let mut s = StrongSchedule::new(StrongCase::Case1, 0.75, 0.01, 0.1, 1.3).unwrap();
        for k in 0..50 {
            assert_eq!(s.current(), s.at(k));
            s.advance();
        }
    }

    #[test]
    fn decoupled_quadratic_contracts() {
        let k = Arc::new(LinearMap::zeros(2, 3).with_norm(1.0, crate::linop::NormSource::Exact));
        let prob = CompositeProblem::new(arc(SquaredDistance::new(0.5, vec![0.0; 3]).unwrap()), arc(Zero), k).unwrap();
        let s = StrongSchedule::new(StrongCase::Case1, 0.75, 0.1, 0.5, 1.0).unwrap();
        let mut a = Alg2::new(&prob, s, &[1.0, -2.0, 3.0], &[0.0; 2]).unwrap();
        let mut last = vector::norm2(a.x_tilde());
        for _ in 0..30 {
            a.step().unwrap();
            let now = vector::norm2(a.x_tilde());
            assert!(now < last);
            last = now;
        }
        assert!(vector::norm2(a.x()) < 1e-2);
    }

    #[test]
    fn rejects_weaker_f() {
        let k = Arc::new(LinearMap::identity(2));
        let prob = CompositeProblem::new(arc(l1_prox(1.0).unwrap()), arc(Zero), k).unwrap();
        let s = StrongSchedule::new(StrongCase::Case1, 0.75, 0.01, 0.1, 1.0).unwrap();
        assert!(Alg2::new(&prob, s, &[0.0; 2], &[0.0; 2]).is_err());
    }

    #[test]
    fn semistrong_w_update_without_psi() {
        let k = Arc::new(LinearMap::from_rows(&[vec![1.0, 2.0], vec![0.0, 1.0]]).unwrap());
        let b_op = Arc::new(LinearMap::identity(2).scaled(-1.0));
        let b = vec![0.5, -1.0];
        let prob = SemiStrongProblem::new(
            arc(elastic_prox(0.1, 1.0).unwrap()),
            arc(Zero),
            k.clone(),
            b_op,
            b.clone(),
            0.0,
            WSolver::ClosedFormNegIdentity,
        )
        .unwrap();
        let s = StrongSchedule::new(StrongCase::Case1, 0.75, 0.05, 1.0, k.norm()).unwrap();
        let x0 = [0.3, -0.7];
        let y0 = [0.2, 0.4];
        let solver = SemiStrongSolver::new(&prob, s, &x0, &[0.0; 2], &y0).unwrap();
        let rho = s.current().rho;
        let kx = k.apply(&x0).unwrap();
        let w = solver.solve_w(&kx, rho).unwrap();
        let expected: Vec<f64> = (0..2).map(|i| kx[i] - b[i] + y0[i] / rho).collect();
        assert!(vector::max_abs_diff(&w, &expected) < 1e-14);
    }

    #[test]
    fn inner_solver_agrees_with_closed_form() {
        let k = Arc::new(LinearMap::from_rows(&[vec![1.0, 2.0, 0.0], vec![0.0, 1.0, -1.0]]).unwrap());
        let b_op = Arc::new(LinearMap::identity(2).scaled(-1.0));
        let b = vec![0.5, -1.0];
        let mk = |w: WSolver| {
            SemiStrongProblem::new(
                arc(elastic_prox(0.1, 1.0).unwrap()),
                arc(l1_prox(0.3).unwrap()),
                k.clone(),
                b_op.clone(),
                b.clone(),
                0.5,
                w,
            )
            .unwrap()
        };
        let closed = mk(WSolver::ClosedFormNegIdentity);
        let inner = mk(WSolver::default());
        let s = StrongSchedule::new(StrongCase::Case1, 0.75, 0.05, 1.0, k.norm()).unwrap();
        let mut a = SemiStrongSolver::new(&closed, s, &[0.0; 3], &[0.0; 2], &[0.0; 2]).unwrap();
        let mut c = SemiStrongSolver::new(&inner, s, &[0.0; 3], &[0.0; 2], &[0.0; 2]).unwrap();
        for _ in 0..30 {
            a.step().unwrap();
            c.step().unwrap();
        }
        assert!(vector::max_abs_diff(a.x(), c.x()) < 1e-8);
        assert!(vector::max_abs_diff(a.w(), c.w()) < 1e-8);
    }

    #[test]
    fn closed_form_requires_negative_identity() {
        let k = Arc::new(LinearMap::identity(2));
        let err = SemiStrongProblem::new(
            arc(elastic_prox(0.1, 1.0).unwrap()),
            arc(Zero),
            k.clone(),
            k,
            vec![0.0; 2],
            0.0,
            WSolver::ClosedFormNegIdentity,
        );
        assert!(matches!(err, Err(Error::InvalidConfig(_))));
    }

    #[test]
    fn default_nu0_detects_injectivity() {
        assert_eq!(
            SemiStrongProblem::default_nu0(&LinearMap::identity(3).scaled(-1.0)),
            0.0
        );
        let tall = LinearMap::from_rows(&[vec![1.0, 0.0], vec![0.0, 2.0], vec![1.0, 1.0]]).unwrap();
        assert_eq!(SemiStrongProblem::default_nu0(&tall), 0.0);
        let rank_def = LinearMap::from_rows(&[vec![1.0, 1.0], vec![2.0, 2.0]]).unwrap();
        assert_eq!(SemiStrongProblem::default_nu0(&rank_def), 1.0);
        let wide = LinearMap::from_rows(&[vec![1.0, 0.0, 1.0]]).unwrap();
        assert_eq!(SemiStrongProblem::default_nu0(&wide), 1.0);
    }
}
