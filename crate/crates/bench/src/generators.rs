//! Random LAD, matrix-game, equality-constrained and semi-strong instances.
//!
//! All draws come from ChaCha8 seeded with the config seed, so an instance is
//! the same on every platform.

use std::sync::Arc;

use nspd_core::baselines::MatrixGame;
use nspd_core::linop::{NormSource, DEFAULT_NORM_MAX_ITERS, DEFAULT_NORM_SEED};
use nspd_core::pd_general::{CompositeProblem, EqConstrainedProblem};
use nspd_core::pd_strong::{SemiStrongProblem, WSolver};
use nspd_core::prox::{elastic_prox, l1_prox, l1_shifted_prox, point_indicator, SquaredDistance};
use nspd_core::{Error, LinearMap, ProxFunction, Result};
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal, Uniform};
use serde::{Deserialize, Serialize};

/// `min f(x) + ‖Kx - b‖₁` with `b = Kx♮ + e`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LadConfig {
    pub n: usize,
    pub p: usize,
    pub sparsity: usize,
    pub lambda: f64,
    pub noise_sigma: f64,
    pub noise_density: f64,
    /// `0` gives `f = λ‖·‖₁`, otherwise the elastic net.
    pub mu_f: f64,
    pub correlated_fraction: f64,
    pub seed: u64,
}

impl LadConfig {
    /// 200 x 64, 8-sparse, general convex.
    pub fn desk(seed: u64) -> Self {
        Self {
            n: 200,
            p: 64,
            sparsity: 8,
            lambda: 0.05,
            noise_sigma: 0.1,
            noise_density: 0.1,
            mu_f: 0.0,
            correlated_fraction: 0.0,
            seed,
        }
    }

    /// 2000 x 640, general convex.
    pub fn paper(seed: u64) -> Self {
        Self {
            n: 2000,
            p: 640,
            sparsity: 80,
            ..Self::desk(seed)
        }
    }

    /// Strongly convex variant with half of the columns correlated.
    pub fn strongly_convex(self) -> Self {
        Self {
            mu_f: 0.1,
            correlated_fraction: 0.5,
            ..self
        }
    }

    pub fn validate(&self) -> Result<()> {
        let unit = |v: f64| (0.0..=1.0).contains(&v);
        if self.n == 0 || self.p == 0 || self.sparsity == 0 || self.sparsity > self.p {
            return Err(Error::InvalidConfig(format!(
                "need n, p > 0 and 0 < s <= p, got n={} p={} s={}",
                self.n, self.p, self.sparsity
            )));
        }
        if !(self.lambda > 0.0) || !(self.noise_sigma >= 0.0) || !(self.mu_f >= 0.0) {
            return Err(Error::InvalidConfig(
                "lambda must be positive, sigma and mu_f nonnegative".into(),
            ));
        }
        if !unit(self.noise_density) || !unit(self.correlated_fraction) {
            return Err(Error::InvalidConfig("densities must lie in [0, 1]".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct LadInstance {
    pub config: LadConfig,
    pub problem: CompositeProblem,
    pub b: Vec<f64>,
    pub x_natural: Vec<f64>,
}

impl LadInstance {
    /// Lipschitz constant of `g = ‖· - b‖₁`.
    pub fn m_g(&self) -> f64 {
        (self.config.n as f64).sqrt()
    }

    /// `λ` when `f = λ‖·‖₁` (which constrains the dual), `None` otherwise.
    pub fn l1_lambda(&self) -> Option<f64> {
        (self.config.mu_f == 0.0).then_some(self.config.lambda)
    }
}

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

pub fn gen_lad(cfg: &LadConfig) -> Result<LadInstance> {
    cfg.validate()?;
    let (n, p) = (cfg.n, cfg.p);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    // column-major while generating so columns can be mixed
    let mut cols: Vec<Vec<f64>> = (0..p).map(|_| (0..n).map(|_| normal(&mut rng)).collect()).collect();
    let n_corr = (cfg.correlated_fraction * p as f64).round() as usize;
    if n_corr > 0 && p > 1 {
        let mut chosen: Vec<usize> = sample(&mut rng, p - 1, n_corr.min(p - 1))
            .into_iter()
            .map(|j| j + 1)
            .collect();
        chosen.sort_unstable();
        for j in chosen {
            let norm = nspd_core::vector::norm2(&cols[j]);
            let mixed: Vec<f64> = cols[j]
                .iter()
                .zip(&cols[j - 1])
                .map(|(a, b)| 0.5 * a + 0.5 * b)
                .collect();
            let s = norm / nspd_core::vector::norm2(&mixed).max(f64::MIN_POSITIVE);
            cols[j] = mixed.into_iter().map(|v| v * s).collect();
        }
    }
    let mut data = vec![0.0; n * p];
    for (j, col) in cols.iter().enumerate() {
        for (i, v) in col.iter().enumerate() {
            data[i * p + j] = *v;
        }
    }
    let mut x_natural = vec![0.0; p];
    for j in sample(&mut rng, p, cfg.sparsity) {
        x_natural[j] = normal(&mut rng);
    }
    let k = LinearMap::dense(n, p, data)?;
    let mut b = k.apply(&x_natural)?;
    let n_noise = (cfg.noise_density * n as f64).round() as usize;
    for i in sample(&mut rng, n, n_noise) {
        b[i] += cfg.noise_sigma * normal(&mut rng);
    }
    let k = k.with_estimated_norm(1e-13, DEFAULT_NORM_MAX_ITERS, DEFAULT_NORM_SEED)?;
    let f: Arc<dyn ProxFunction> = if cfg.mu_f > 0.0 {
        Arc::new(elastic_prox(cfg.lambda, cfg.mu_f)?)
    } else {
        Arc::new(l1_prox(cfg.lambda)?)
    };
    let problem = CompositeProblem::new(f, Arc::new(l1_shifted_prox(b.clone())), Arc::new(k))?;
    Ok(LadInstance {
        config: cfg.clone(),
        problem,
        b,
        x_natural,
    })
}

/// Sparse `K` with Uniform(-1, 1) nonzeros, rescaled to unit norm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GameConfig {
    pub n: usize,
    pub p: usize,
    pub density: f64,
    pub seed: u64,
}

impl GameConfig {
    pub fn desk(seed: u64) -> Self {
        Self {
            n: 100,
            p: 200,
            density: 0.1,
            seed,
        }
    }

    pub fn paper(seed: u64) -> Self {
        Self {
            n: 1000,
            p: 2000,
            density: 0.1,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.p == 0 || !(self.density > 0.0 && self.density <= 1.0) {
            return Err(Error::InvalidConfig(format!(
                "need n, p > 0 and density in (0, 1], got n={} p={} density={}",
                self.n, self.p, self.density
            )));
        }
        Ok(())
    }
}

pub fn gen_game(cfg: &GameConfig) -> Result<MatrixGame> {
    cfg.validate()?;
    let uniform = Uniform::new(-1.0, 1.0).map_err(|e| Error::InvalidConfig(e.to_string()))?;
    let mut seed = cfg.seed;
    loop {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut triplets = Vec::new();
        for i in 0..cfg.n {
            for j in 0..cfg.p {
                if rng.random::<f64>() < cfg.density {
                    triplets.push((i, j, uniform.sample(&mut rng)));
                }
            }
        }
        let k = LinearMap::sparse(cfg.n, cfg.p, &triplets)?;
        if k.is_zero() {
            seed = seed.wrapping_add(1);
            continue;
        }
        let sigma = k.estimate_norm(1e-14, DEFAULT_NORM_MAX_ITERS, DEFAULT_NORM_SEED)?.sigma;
        let k = k.scaled(1.0 / sigma);
        // certify the rescaled norm independently of the first estimate
        let check = k
            .estimate_norm(1e-14, DEFAULT_NORM_MAX_ITERS, DEFAULT_NORM_SEED ^ 1)?
            .sigma;
        let k = k.with_norm(check, NormSource::PowerMethod);
        return Ok(MatrixGame::new(Arc::new(k)));
    }
}

/// `min λ‖x‖₁ + ½‖x‖² s.t. Kx = b` with a feasible `b = Kx♮`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstrainedConfig {
    pub n: usize,
    pub p: usize,
    pub sparsity: usize,
    pub lambda: f64,
    pub seed: u64,
}

impl ConstrainedConfig {
    pub fn desk(seed: u64) -> Self {
        Self {
            n: 40,
            p: 80,
            sparsity: 8,
            lambda: 0.1,
            seed,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ConstrainedInstance {
    pub config: ConstrainedConfig,
    pub problem: EqConstrainedProblem,
    /// The same problem as `f + ψ` composed with the indicator of `{b}`.
    pub composite: CompositeProblem,
    pub x_natural: Vec<f64>,
}

pub fn gen_constrained(cfg: &ConstrainedConfig) -> Result<ConstrainedInstance> {
    if cfg.n == 0 || cfg.n > cfg.p || cfg.sparsity == 0 || cfg.sparsity > cfg.p || !(cfg.lambda > 0.0) {
        return Err(Error::InvalidConfig(format!(
            "invalid constrained instance config {cfg:?}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let data: Vec<f64> = (0..cfg.n * cfg.p).map(|_| normal(&mut rng)).collect();
    let mut x_natural = vec![0.0; cfg.p];
    for j in sample(&mut rng, cfg.p, cfg.sparsity) {
        x_natural[j] = normal(&mut rng);
    }
    let k =
        LinearMap::dense(cfg.n, cfg.p, data)?.with_estimated_norm(1e-13, DEFAULT_NORM_MAX_ITERS, DEFAULT_NORM_SEED)?;
    let b = k.apply(&x_natural)?;
    let k = Arc::new(k);
    let problem = EqConstrainedProblem::new(
        Arc::new(l1_prox(cfg.lambda)?),
        Arc::new(SquaredDistance::half_norm_sq(cfg.p)),
        k.clone(),
        b.clone(),
    )?;
    let composite = CompositeProblem::new(
        Arc::new(elastic_prox(cfg.lambda, 1.0)?),
        Arc::new(point_indicator(b)),
        k,
    )?;
    Ok(ConstrainedInstance {
        config: cfg.clone(),
        problem,
        composite,
        x_natural,
    })
}

/// An elastic-net LAD written as `min f(x) + ‖w‖₁ s.t. Kx - w = b`.
#[derive(Debug, Clone)]
pub struct SemiStrongInstance {
    pub lad: LadInstance,
    pub problem: SemiStrongProblem,
}

impl SemiStrongInstance {
    /// The split variable matching `x`: `w = Kx - b`.
    pub fn w_of(&self, x: &[f64]) -> Result<Vec<f64>> {
        let kx = self.problem.k.apply(x)?;
        Ok(kx.iter().zip(&self.problem.b).map(|(a, b)| a - b).collect())
    }
}

/// `cfg` must have `mu_f > 0`.
pub fn gen_semi_strong(cfg: &LadConfig) -> Result<SemiStrongInstance> {
    if !(cfg.mu_f > 0.0) {
        return Err(Error::InvalidConfig("the semi-strong instance needs mu_f > 0".into()));
    }
    let lad = gen_lad(cfg)?;
    let n = cfg.n;
    let problem = SemiStrongProblem::new(
        lad.problem.f.clone(),
        Arc::new(l1_prox(1.0)?),
        lad.problem.k.clone(),
        Arc::new(LinearMap::identity(n).scaled(-1.0)),
        lad.b.clone(),
        0.0,
        WSolver::ClosedFormNegIdentity,
    )?;
    Ok(SemiStrongInstance { lad, problem })
}
