//! Comparison solvers: Chambolle-Pock (plain and accelerated for strongly
//! convex `f`), scaled ADMM on the split `Kx - r = 0`, and Nesterov's
//! smoothing for bilinear matrix games.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::inner::{InnerSettings, QuadSubproblem};
use crate::linop::LinearMap;
use crate::pd_general::{ensure_finite, CompositeProblem};
use crate::prox::{conjugate_prox_into, project_simplex, SimplexIndicator, SimplexSupport};
use crate::vector;
use crate::IterativeMethod;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum OutputMode {
    #[default]
    Ergodic,
    LastIterate,
}

/// Running (optionally weighted) average.
#[derive(Debug, Clone)]
struct Average {
    value: Vec<f64>,
    weight: f64,
}

impl Average {
    fn new(v: &[f64]) -> Self {
        Self {
            value: v.to_vec(),
            weight: 0.0,
        }
    }

    fn push(&mut self, v: &[f64], w: f64) {
        self.weight += w;
        let t = w / self.weight;
        for (a, b) in self.value.iter_mut().zip(v) {
            *a += t * (b - *a);
        }
    }
}

/// Step sizes for the Chambolle-Pock iterations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CpConfig {
    /// Dual step.
    pub rho: f64,
    /// Primal step.
    pub beta: f64,
    pub output_mode: OutputMode,
}

impl CpConfig {
    /// Checks `ρβ‖K‖² ≤ 1`.
    pub fn validate(&self, norm_k: f64) -> Result<()> {
        if !(self.rho > 0.0 && self.beta > 0.0) {
            return Err(Error::InvalidConfig("CP steps must be positive".into()));
        }
        let prod = self.rho * self.beta * norm_k * norm_k;
        if prod > 1.0 + 1e-12 {
            return Err(Error::InvalidConfig(format!(
                "CP needs rho*beta*|K|^2 <= 1, got {prod}"
            )));
        }
        Ok(())
    }
}

/// Primal-dual hybrid gradient with `θ = 1`, or the accelerated variant
/// `θk = 1/√(1 + 2μβk)`, `βk₊₁ = θkβk`, `ρk₊₁ = ρk/θk` when `mu > 0`.
#[derive(Debug, Clone)]
pub struct ChambollePock<'a> {
    problem: &'a CompositeProblem,
    rho: f64,
    beta: f64,
    mu: f64,
    mode: OutputMode,
    k: usize,
    x: Vec<f64>,
    x_bar: Vec<f64>,
    y: Vec<f64>,
    x_avg: Average,
    y_avg: Average,
    scratch_n: Vec<f64>,
}

impl<'a> ChambollePock<'a> {
    pub fn new(problem: &'a CompositeProblem, cfg: CpConfig, x0: &[f64], y0: &[f64]) -> Result<Self> {
        cfg.validate(problem.norm_k())?;
        check_dim("x0", problem.p(), x0.len())?;
        check_dim("y0", problem.n(), y0.len())?;
        Ok(Self {
            problem,
            rho: cfg.rho,
            beta: cfg.beta,
            mu: 0.0,
            mode: cfg.output_mode,
            k: 0,
            x: x0.to_vec(),
            x_bar: x0.to_vec(),
            y: y0.to_vec(),
            x_avg: Average::new(x0),
            y_avg: Average::new(y0),
            scratch_n: vec![0.0; y0.len()],
        })
    }

    /// Accelerated variant for `μ`-strongly convex `f`. Ergodic output uses
    /// weights proportional to the dual step `ρk`.
    pub fn strongly_convex(
        problem: &'a CompositeProblem,
        cfg: CpConfig,
        mu: f64,
        x0: &[f64],
        y0: &[f64],
    ) -> Result<Self> {
        if !(mu > 0.0) || problem.f.strong_convexity() < mu {
            return Err(Error::InvalidConfig(format!(
                "accelerated CP needs f to be {mu}-strongly convex"
            )));
        }
        let mut s = Self::new(problem, cfg, x0, y0)?;
        s.mu = mu;
        Ok(s)
    }

    pub fn steps(&self) -> (f64, f64) {
        (self.rho, self.beta)
    }
    pub fn x_last(&self) -> &[f64] {
        &self.x
    }
    pub fn y_last(&self) -> &[f64] {
        &self.y
    }
    pub fn x_ergodic(&self) -> &[f64] {
        &self.x_avg.value
    }
    pub fn y_ergodic(&self) -> &[f64] {
        &self.y_avg.value
    }

    pub fn step(&mut self) -> Result<()> {
        let op = &self.problem.k;
        let n = self.y.len();
        let mut kxb = vec![0.0; n];
        op.forward(&self.x_bar, &mut kxb);
        let v: Vec<f64> = (0..n).map(|i| self.y[i] + self.rho * kxb[i]).collect();
        let mut y_new = vec![0.0; n];
        conjugate_prox_into(self.problem.g.as_ref(), &v, self.rho, &mut self.scratch_n, &mut y_new);

        let mut u = vec![0.0; self.x.len()];
        op.adjoint(&y_new, &mut u);
        for (ui, xi) in u.iter_mut().zip(&self.x) {
            *ui = xi - self.beta * *ui;
        }
        let x_new = self.problem.f.prox(&u, self.beta);
        ensure_finite(self.k, "primal iterate", &x_new)?;
        ensure_finite(self.k, "dual iterate", &y_new)?;

        let weight = if self.mu > 0.0 { self.rho } else { 1.0 };
        let theta = if self.mu > 0.0 {
            let t = 1.0 / (1.0 + 2.0 * self.mu * self.beta).sqrt();
            self.beta *= t;
            self.rho /= t;
            t
        } else {
            1.0
        };
        self.x_bar = x_new.iter().zip(&self.x).map(|(a, b)| a + theta * (a - b)).collect();
        self.x_avg.push(&x_new, weight);
        self.y_avg.push(&y_new, weight);
        self.x = x_new;
        self.y = y_new;
        self.k += 1;
        Ok(())
    }
}

impl IterativeMethod for ChambollePock<'_> {
    fn step(&mut self) -> Result<()> {
        ChambollePock::step(self)
    }
    fn iteration(&self) -> usize {
        self.k
    }
    fn primal(&self) -> &[f64] {
        match self.mode {
            OutputMode::Ergodic => &self.x_avg.value,
            OutputMode::LastIterate => &self.x,
        }
    }
    fn dual(&self) -> &[f64] {
        match self.mode {
            OutputMode::Ergodic => &self.y_avg.value,
            OutputMode::LastIterate => &self.y,
        }
    }
    fn name(&self) -> String {
        let base = if self.mu > 0.0 { "cp-scvx" } else { "cp" };
        let mode = match self.mode {
            OutputMode::Ergodic => "ergodic",
            OutputMode::LastIterate => "last",
        };
        format!("{base}-{mode}")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdmmConfig {
    pub rho: f64,
    pub inner_tol: f64,
    pub inner_max: usize,
    pub output_mode: OutputMode,
}

impl AdmmConfig {
    pub fn new(rho: f64) -> Self {
        Self {
            rho,
            inner_tol: 1e-10,
            inner_max: 5000,
            output_mode: OutputMode::Ergodic,
        }
    }
}

/// Scaled-form ADMM on `min f(x) + g(r) s.t. Kx - r = 0`.
///
/// The `x`-subproblem `min f(x) + (ρ/2)‖Kx - r + u‖²` is solved by an inner
/// accelerated proximal gradient loop, warm-started at the previous `x`.
#[derive(Debug, Clone)]
pub struct Admm<'a> {
    problem: &'a CompositeProblem,
    cfg: AdmmConfig,
    k: usize,
    x: Vec<f64>,
    r: Vec<f64>,
    u: Vec<f64>,
    y: Vec<f64>,
    kx: Vec<f64>,
    x_avg: Average,
    y_avg: Average,
    inner_iterations: usize,
}

impl<'a> Admm<'a> {
    /// Starts from `r⁰ = Kx⁰` and scaled dual `u⁰ = y⁰/ρ`.
    pub fn new(problem: &'a CompositeProblem, cfg: AdmmConfig, x0: &[f64], y0: &[f64]) -> Result<Self> {
        if !(cfg.rho > 0.0) {
            return Err(Error::InvalidConfig("ADMM penalty must be positive".into()));
        }
        check_dim("x0", problem.p(), x0.len())?;
        check_dim("y0", problem.n(), y0.len())?;
        let kx = problem.k.apply(x0)?;
        Ok(Self {
            problem,
            cfg,
            k: 0,
            x: x0.to_vec(),
            r: kx.clone(),
            u: y0.iter().map(|v| v / cfg.rho).collect(),
            y: y0.to_vec(),
            kx,
            x_avg: Average::new(x0),
            y_avg: Average::new(y0),
            inner_iterations: 0,
        })
    }

    pub fn x_last(&self) -> &[f64] {
        &self.x
    }
    pub fn r(&self) -> &[f64] {
        &self.r
    }
    /// `‖Kxᵏ - rᵏ‖`.
    pub fn split_residual(&self) -> f64 {
        vector::dist(&self.kx, &self.r)
    }
    pub fn inner_iterations(&self) -> usize {
        self.inner_iterations
    }

    pub fn step(&mut self) -> Result<()> {
        let rho = self.cfg.rho;
        let d: Vec<f64> = self.r.iter().zip(&self.u).map(|(r, u)| r - u).collect();
        let sub = QuadSubproblem {
            h: self.problem.f.as_ref(),
            linear: None,
            rho,
            op: &self.problem.k,
            d: &d,
            nu: 0.0,
            center: None,
        };
        let report = sub.solve(
            &mut self.x,
            InnerSettings {
                tol: self.cfg.inner_tol,
                max_iters: self.cfg.inner_max,
            },
        )?;
        self.inner_iterations += report.iterations;
        ensure_finite(self.k, "primal iterate", &self.x)?;

        self.problem.k.forward(&self.x, &mut self.kx);
        let v: Vec<f64> = self.kx.iter().zip(&self.u).map(|(a, u)| a + u).collect();
        self.r = self.problem.g.prox(&v, 1.0 / rho);
        for i in 0..self.u.len() {
            self.u[i] += self.kx[i] - self.r[i];
            self.y[i] = rho * self.u[i];
        }
        ensure_finite(self.k, "dual iterate", &self.y)?;
        self.x_avg.push(&self.x, 1.0);
        self.y_avg.push(&self.y, 1.0);
        self.k += 1;
        Ok(())
    }
}

impl IterativeMethod for Admm<'_> {
    fn step(&mut self) -> Result<()> {
        Admm::step(self)
    }
    fn iteration(&self) -> usize {
        self.k
    }
    fn primal(&self) -> &[f64] {
        match self.cfg.output_mode {
            OutputMode::Ergodic => &self.x_avg.value,
            OutputMode::LastIterate => &self.x,
        }
    }
    fn dual(&self) -> &[f64] {
        match self.cfg.output_mode {
            OutputMode::Ergodic => &self.y_avg.value,
            OutputMode::LastIterate => &self.y,
        }
    }
    fn name(&self) -> String {
        format!("admm-rho{}", self.cfg.rho)
    }
}

/// `min_{x∈Δp} max_{y∈Δn} <Kx, y>`.
#[derive(Debug, Clone)]
pub struct MatrixGame {
    pub k: Arc<LinearMap>,
}

impl MatrixGame {
    pub fn new(k: Arc<LinearMap>) -> Self {
        Self { k }
    }

    pub fn n(&self) -> usize {
        self.k.rows()
    }

    pub fn p(&self) -> usize {
        self.k.cols()
    }

    /// The game as `f(x) + g(Kx)` with `f = δ_Δp` and `g = max_i(·)_i`.
    pub fn composite(&self) -> CompositeProblem {
        CompositeProblem::new(
            Arc::new(SimplexIndicator { dim: self.p() }),
            Arc::new(SimplexSupport { dim: self.n() }),
            self.k.clone(),
        )
        .expect("game dimensions are consistent by construction")
    }
}

/// `k_max = ⌈(4‖K‖/ε)·√((1 - 1/n)(1 - 1/p))⌉`.
pub fn smoothing_k_max(norm_k: f64, epsilon: f64, n: usize, p: usize) -> usize {
    let v = 4.0 * norm_k / epsilon * ((1.0 - 1.0 / n as f64) * (1.0 - 1.0 / p as f64)).sqrt();
    v.ceil() as usize
}

/// `μ = ε/(2(1 - 1/n))`.
pub fn smoothing_mu(epsilon: f64, n: usize) -> f64 {
    epsilon / (2.0 * (1.0 - 1.0 / n as f64))
}

/// Nesterov's smoothing with the Euclidean prox-function centred at the
/// uniform distribution, followed by his optimal scheme on `Δp`.
#[derive(Debug, Clone)]
pub struct NesterovSmoothing<'a> {
    game: &'a MatrixGame,
    pub mu: f64,
    step: f64,
    k: usize,
    x0: Vec<f64>,
    x: Vec<f64>,
    /// Primal output (the gradient-step sequence).
    x_out: Vec<f64>,
    grad_sum: Vec<f64>,
    /// Weighted average of the smoothed maximizers.
    y_out: Average,
}

impl<'a> NesterovSmoothing<'a> {
    pub fn new(game: &'a MatrixGame, mu: f64) -> Result<Self> {
        if !(mu > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "smoothing parameter must be positive, got {mu}"
            )));
        }
        let p = game.p();
        let nk = game.k.norm();
        let x0 = vec![1.0 / p as f64; p];
        Ok(Self {
            game,
            mu,
            step: mu / (nk * nk),
            k: 0,
            x: x0.clone(),
            x_out: x0.clone(),
            grad_sum: vec![0.0; p],
            y_out: Average::new(&vec![1.0 / game.n() as f64; game.n()]),
            x0,
        })
    }

    /// `y_μ(x) = P_Δn(y_c + Kx/μ)`.
    pub fn smoothed_maximizer(&self, x: &[f64]) -> Vec<f64> {
        let n = self.game.n();
        let yc = 1.0 / n as f64;
        let kx = self.game.k.apply(x).expect("dimension checked at construction");
        let v: Vec<f64> = kx.iter().map(|a| yc + a / self.mu).collect();
        let mut y = vec![0.0; n];
        project_simplex(&v, &mut y);
        y
    }

    /// `Fμ(x) = max_{y∈Δn} <Kx, y> - (μ/2)‖y - y_c‖²`.
    pub fn smoothed_value(&self, x: &[f64]) -> f64 {
        let y = self.smoothed_maximizer(x);
        let kx = self.game.k.apply(x).expect("dimension checked at construction");
        let yc = 1.0 / self.game.n() as f64;
        vector::dot(&kx, &y) - 0.5 * self.mu * y.iter().map(|v| (v - yc).powi(2)).sum::<f64>()
    }

    /// `∇Fμ(x) = Kᵀ y_μ(x)`.
    pub fn smoothed_gradient(&self, x: &[f64]) -> Vec<f64> {
        let y = self.smoothed_maximizer(x);
        self.game
            .k
            .adjoint_apply(&y)
            .expect("dimension checked at construction")
    }

    pub fn step(&mut self) -> Result<()> {
        let k = self.k as f64;
        let p = self.x.len();
        let y_mu = self.smoothed_maximizer(&self.x);
        let grad = self.game.k.adjoint_apply(&y_mu)?;

        let mut v: Vec<f64> = (0..p).map(|j| self.x[j] - self.step * grad[j]).collect();
        project_simplex(&v, &mut self.x_out);

        let a = 0.5 * (k + 1.0);
        vector::axpy(a, &grad, &mut self.grad_sum);
        for ((vj, x0j), gj) in v.iter_mut().zip(&self.x0).zip(&self.grad_sum) {
            *vj = x0j - self.step * gj;
        }
        let mut z = vec![0.0; p];
        project_simplex(&v, &mut z);

        self.y_out.push(&y_mu, k + 1.0);
        let w = 2.0 / (k + 3.0);
        for ((xj, zj), oj) in self.x.iter_mut().zip(&z).zip(&self.x_out) {
            *xj = w * zj + (1.0 - w) * oj;
        }
        ensure_finite(self.k, "primal iterate", &self.x)?;
        self.k += 1;
        Ok(())
    }
}

impl IterativeMethod for NesterovSmoothing<'_> {
    fn step(&mut self) -> Result<()> {
        NesterovSmoothing::step(self)
    }
    fn iteration(&self) -> usize {
        self.k
    }
    fn primal(&self) -> &[f64] {
        &self.x_out
    }
    fn dual(&self) -> &[f64] {
        &self.y_out.value
    }
    fn name(&self) -> String {
        format!("smoothing-mu{:.3e}", self.mu)
    }
}
