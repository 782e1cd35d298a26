//! Objective, dual and gap evaluators, theorem certificates, the log-log
//! slope estimator and the two-solver reference oracle.
//!
//! Certificates are stated as `metric(k) ≤ constant/(k + shift)^rate`. All of
//! them accept numerical reference points; the substitution is recorded in
//! [`ReferenceSource`] and absorbed by [`Certificate::slack`].

use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::baselines::{ChambollePock, CpConfig, MatrixGame, OutputMode};
use crate::error::{check_dim, Error, Result};
use crate::linop::LinearMap;
use crate::pd_general::{Alg1, CompositeProblem, GeneralSchedule};
use crate::pd_strong::{Alg2, StrongCase, StrongSchedule};
use crate::prox::{in_simplex, INDICATOR_TOL};
use crate::vector;
use crate::IterativeMethod;

/// One row of a trace. Optional columns are empty in CSV.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub k: usize,
    #[serde(rename = "F")]
    pub primal: f64,
    #[serde(rename = "G")]
    pub dual: Option<f64>,
    pub gap: Option<f64>,
    pub feas: Option<f64>,
    pub time_s: f64,
}

/// Values observed at one iterate, before timing and indexing.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Point {
    pub primal: f64,
    pub dual: Option<f64>,
    pub gap: Option<f64>,
    pub feas: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Trace {
    pub solver: String,
    pub records: Vec<TraceRecord>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Metric {
    Primal,
    Dual,
    Gap,
    Feasibility,
    /// `F(xᵏ) - F*`.
    PrimalResidual(f64),
    /// `|F(xᵏ) - F*|`.
    AbsPrimalResidual(f64),
}

impl Trace {
    pub fn new(solver: impl Into<String>) -> Self {
        Self {
            solver: solver.into(),
            records: Vec::new(),
        }
    }

    pub fn push(&mut self, rec: TraceRecord) -> Result<()> {
        if let Some(last) = self.records.last() {
            if rec.k <= last.k {
                return Err(Error::RejectedInput(format!(
                    "trace indices must increase: {} after {}",
                    rec.k, last.k
                )));
            }
        }
        self.records.push(rec);
        Ok(())
    }

    /// `(k, value)` pairs for the metric; records lacking it are skipped.
    pub fn values(&self, metric: Metric) -> Vec<(usize, f64)> {
        self.records
            .iter()
            .filter_map(|r| {
                let v = match metric {
                    Metric::Primal => Some(r.primal),
                    Metric::Dual => r.dual,
                    Metric::Gap => r.gap,
                    Metric::Feasibility => r.feas,
                    Metric::PrimalResidual(fs) => Some(r.primal - fs),
                    Metric::AbsPrimalResidual(fs) => Some((r.primal - fs).abs()),
                };
                v.map(|v| (r.k, v))
            })
            .collect()
    }

    pub fn last(&self) -> Option<&TraceRecord> {
        self.records.last()
    }

    /// CSV with header `k,F,G,gap,feas,time_s`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        for r in &self.records {
            wr.serialize(r).map_err(|e| Error::Io(e.to_string()))?;
        }
        if self.records.is_empty() {
            wr.write_record(["k", "F", "G", "gap", "feas", "time_s"])
                .map_err(|e| Error::Io(e.to_string()))?;
        }
        wr.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(solver: impl Into<String>, r: R) -> Result<Self> {
        let mut rd = csv::Reader::from_reader(r);
        let mut trace = Trace::new(solver);
        for (i, rec) in rd.deserialize().enumerate() {
            let rec: TraceRecord = rec.map_err(|e| Error::Parse {
                line: i + 2,
                message: e.to_string(),
            })?;
            trace.push(rec)?;
        }
        Ok(trace)
    }
}

/// Runs `method` for `max_iters` iterations, recording `eval` every
/// `trace_every` iterations (and at the last one). Stops early when `tol` is
/// set and the recorded gap falls below it.
pub fn run_traced<M, E>(
    method: &mut M,
    max_iters: usize,
    trace_every: usize,
    tol: Option<f64>,
    mut eval: E,
) -> Result<Trace>
where
    M: IterativeMethod,
    E: FnMut(&M) -> Result<Point>,
{
    let every = trace_every.max(1);
    let mut trace = Trace::new(method.name());
    let start = Instant::now();
    for it in 1..=max_iters {
        method.step()?;
        if it % every == 0 || it == max_iters {
            let p = eval(method)?;
            trace.push(TraceRecord {
                k: method.iteration(),
                primal: p.primal,
                dual: p.dual,
                gap: p.gap,
                feas: p.feas,
                time_s: start.elapsed().as_secs_f64(),
            })?;
            if let (Some(t), Some(g)) = (tol, p.gap) {
                if g < t {
                    break;
                }
            }
        }
    }
    Ok(trace)
}

/// `L̃(x, y) = f(x) + <Kx, y> - g*(y)`.
pub fn lagrangian(problem: &CompositeProblem, x: &[f64], y: &[f64]) -> Result<f64> {
    let kx = problem.k.apply(x)?;
    check_dim("lagrangian y", kx.len(), y.len())?;
    let gs = problem
        .g
        .conjugate_value(y)
        .ok_or_else(|| Error::UnsupportedMetric(format!("no closed-form conjugate for {:?}", problem.g)))?;
    Ok(problem.f.value(x) + vector::dot(&kx, y) - gs)
}

/// `L̃(x, y_ref) - L̃(x_ref, y)`.
pub fn lagrangian_gap(problem: &CompositeProblem, x: &[f64], y: &[f64], x_ref: &[f64], y_ref: &[f64]) -> Result<f64> {
    Ok(lagrangian(problem, x, y_ref)? - lagrangian(problem, x_ref, y)?)
}

/// `max_i (Kx)_i - min_j (Kᵀy)_j`.
pub fn game_gap(game: &MatrixGame, x: &[f64], y: &[f64]) -> Result<f64> {
    if !in_simplex(x, INDICATOR_TOL) || !in_simplex(y, INDICATOR_TOL) {
        return Err(Error::RejectedInput("game gap needs points on the simplices".into()));
    }
    let kx = game.k.apply(x)?;
    let kty = game.k.adjoint_apply(y)?;
    let hi = kx.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lo = kty.iter().cloned().fold(f64::INFINITY, f64::min);
    Ok(hi - lo)
}

/// Projects a dual candidate of an `‖Kx - b‖₁` problem onto its dual domain:
/// clip to `[-1, 1]`, then (when `f = λ‖·‖₁`) rescale so `‖Kᵀy‖∞ ≤ λ`.
pub fn repair_lad_dual(k: &LinearMap, y: &[f64], l1_lambda: Option<f64>) -> Result<Vec<f64>> {
    let mut out: Vec<f64> = y.iter().map(|v| v.clamp(-1.0, 1.0)).collect();
    if let Some(lambda) = l1_lambda {
        let s = vector::norm_inf(&k.adjoint_apply(&out)?) / lambda;
        if s > 1.0 {
            vector::scale(1.0 / s, &mut out);
        }
    }
    Ok(out)
}

/// `F(x) + G(y)` with both values from closed forms.
pub fn duality_gap(problem: &CompositeProblem, x: &[f64], y: &[f64]) -> Result<f64> {
    Ok(problem.primal_value(x)? + problem.dual_value(y)?)
}

/// Natural residual of the saddle-point system,
/// `‖x - prox_f(x - Kᵀy)‖ + ‖y - prox_{g*}(y + Kx)‖`.
pub fn kkt_residual(problem: &CompositeProblem, x: &[f64], y: &[f64]) -> Result<f64> {
    let kty = problem.k.adjoint_apply(y)?;
    let u: Vec<f64> = x.iter().zip(&kty).map(|(a, b)| a - b).collect();
    let px = problem.f.prox(&u, 1.0);
    let kx = problem.k.apply(x)?;
    let v: Vec<f64> = y.iter().zip(&kx).map(|(a, b)| a + b).collect();
    let py = crate::prox::conjugate_prox(problem.g.as_ref(), &v, 1.0);
    Ok(vector::dist(x, &px) + vector::dist(y, &py))
}

/// Standard trace point for a composite problem: `F(x)`, `G(y)` (`+∞` off
/// the dual domain) and their sum when finite.
pub fn composite_point(problem: &CompositeProblem, x: &[f64], y: &[f64]) -> Result<Point> {
    let primal = problem.primal_value(x)?;
    let dual = problem.dual_value(y).ok();
    let gap = dual.filter(|d| d.is_finite()).map(|d| primal + d);
    Ok(Point {
        primal,
        dual,
        gap,
        feas: None,
    })
}

/// Least-squares slope of `log(value)` against `log(k)` over `[k_lo, k_hi]`.
/// Non-positive values are dropped; at least ten points must remain.
pub fn rate_slope(trace: &Trace, metric: Metric, k_lo: usize, k_hi: usize) -> Result<f64> {
    let pts: Vec<(f64, f64)> = trace
        .values(metric)
        .into_iter()
        .filter(|&(k, v)| k >= k_lo && k <= k_hi && v > 0.0 && k > 0)
        .map(|(k, v)| ((k as f64).ln(), v.ln()))
        .collect();
    fit_slope(&pts)
}

/// Ordinary least-squares slope of already log-transformed points.
pub fn fit_slope(pts: &[(f64, f64)]) -> Result<f64> {
    if pts.len() < 10 {
        return Err(Error::RejectedInput(format!(
            "slope fit needs at least 10 positive points, got {}",
            pts.len()
        )));
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    Ok(sxy / sxx)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ReferenceSource {
    Exact,
    Numerical { tolerance: f64 },
}

/// An evaluated bound `constant/(k + shift)^rate_exponent`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub theorem: String,
    pub constant: f64,
    pub rate_exponent: u32,
    pub shift: f64,
    pub reference_point_source: ReferenceSource,
    pub inputs: BTreeMap<String, f64>,
}

/// Result of checking a trace against a certificate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificateCheck {
    pub checked: usize,
    pub violations: usize,
    pub first_violation: Option<usize>,
    /// `max_k metric(k)/bound(k)`.
    pub worst_ratio: f64,
}

impl CertificateCheck {
    pub fn passed(&self) -> bool {
        self.violations == 0 && self.checked > 0
    }
}

impl Certificate {
    fn build(
        theorem: &str,
        constant: f64,
        rate_exponent: u32,
        shift: f64,
        source: ReferenceSource,
        inputs: &[(&str, f64)],
    ) -> Self {
        Self {
            theorem: theorem.to_string(),
            constant,
            rate_exponent,
            shift,
            reference_point_source: source,
            inputs: inputs.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
        }
    }

    pub fn bound(&self, k: usize) -> f64 {
        self.constant / (k as f64 + self.shift).powi(self.rate_exponent as i32)
    }

    /// `1e-6·(1 + constant)`.
    pub fn slack(&self) -> f64 {
        1e-6 * (1.0 + self.constant)
    }

    pub fn check(&self, points: &[(usize, f64)]) -> CertificateCheck {
        let mut out = CertificateCheck {
            checked: 0,
            violations: 0,
            first_violation: None,
            worst_ratio: 0.0,
        };
        for &(k, v) in points {
            if k == 0 && self.shift == 0.0 {
                continue;
            }
            let b = self.bound(k);
            out.checked += 1;
            out.worst_ratio = out.worst_ratio.max(v / b);
            if !(v <= b + self.slack()) {
                out.violations += 1;
                out.first_violation.get_or_insert(k);
            }
        }
        out
    }
}

fn sq(v: f64) -> f64 {
    v * v
}

/// Right-hand side of the `c = 1` bound:
/// `(1/2k)[ρ0‖K‖²‖x⁰-x‖²/γ + ‖y⁰-y‖²/((1-γ)ρ0)]`.
#[allow(clippy::too_many_arguments)]
pub fn bound_thm33(
    x0: &[f64],
    y0: &[f64],
    x_ref: &[f64],
    y_ref: &[f64],
    rho0: f64,
    gamma: f64,
    norm_k: f64,
    k: usize,
) -> f64 {
    let bracket =
        rho0 * sq(norm_k) * sq(vector::dist(x0, x_ref)) / gamma + sq(vector::dist(y0, y_ref)) / ((1.0 - gamma) * rho0);
    bracket / (2.0 * k as f64)
}

/// Inputs shared by the certificate builders.
#[derive(Debug, Clone, Copy)]
pub struct CertInputs<'a> {
    pub x0: &'a [f64],
    pub y0: &'a [f64],
    pub x_star: &'a [f64],
    pub y_star: &'a [f64],
    /// `F(x⁰)`, needed by the `c > 1` bounds.
    pub f_x0: Option<f64>,
    pub f_star: Option<f64>,
    /// Lipschitz constant of `g` (for the primal-residual forms).
    pub m_g: Option<f64>,
    pub rho0: f64,
    pub gamma: f64,
    pub norm_k: f64,
    pub source: ReferenceSource,
}

impl CertInputs<'_> {
    fn dx(&self) -> f64 {
        vector::dist(self.x0, self.x_star)
    }
    fn dy(&self) -> f64 {
        vector::dist(self.y0, self.y_star)
    }
    /// `D_g = sup{‖y⁰ - y‖ : ‖y‖ ≤ M_g} = ‖y⁰‖ + M_g`.
    fn d_g(&self) -> Result<f64> {
        let m = self
            .m_g
            .ok_or_else(|| Error::CertificateUnavailable("g has no Lipschitz constant".into()))?;
        Ok(vector::norm2(self.y0) + m)
    }
    fn objective_gap0(&self) -> Result<f64> {
        match (self.f_x0, self.f_star) {
            (Some(a), Some(b)) => Ok(a - b),
            _ => Err(Error::CertificateUnavailable("F(x0) and F* are required".into())),
        }
    }
}

/// `c = 1`, primal residual: `F(xᵏ) - F* ≤ [ρ0‖K‖²‖x⁰-x*‖²/γ + D_g²/((1-γ)ρ0)]/(2k)`.
pub fn cert_thm33_primal(inp: &CertInputs) -> Result<Certificate> {
    let dg = inp.d_g()?;
    let bracket = inp.rho0 * sq(inp.norm_k) * sq(inp.dx()) / inp.gamma + sq(dg) / ((1.0 - inp.gamma) * inp.rho0);
    Ok(Certificate::build(
        "thm3.3b",
        0.5 * bracket,
        1,
        0.0,
        inp.source,
        &[
            ("rho0", inp.rho0),
            ("gamma", inp.gamma),
            ("norm_k", inp.norm_k),
            ("dx", inp.dx()),
            ("D_g", dg),
        ],
    ))
}

/// `R0² = (c-1)[F(x⁰) - F*] + (c/2)[ρ0‖K‖²‖x⁰-x*‖²/γ + ‖y⁰-y*‖²/((1-γ)ρ0)]`.
pub fn bound_thm34_r0(inp: &CertInputs, c: f64) -> Result<f64> {
    Ok((c - 1.0) * inp.objective_gap0()?
        + 0.5
            * c
            * (inp.rho0 * sq(inp.norm_k) * sq(inp.dx()) / inp.gamma + sq(inp.dy()) / ((1.0 - inp.gamma) * inp.rho0)))
}

/// `F(xᵏ) - F* ≤ R1²/(k + c - 1)` with `R1² = R0² + √(2c/ρ0)(‖y*‖ + M_g)R0`.
pub fn cert_thm34_primal(inp: &CertInputs, c: f64) -> Result<Certificate> {
    let r0sq = bound_thm34_r0(inp, c)?;
    let mg = inp
        .m_g
        .ok_or_else(|| Error::CertificateUnavailable("g has no Lipschitz constant".into()))?;
    let r1sq = r0sq + (2.0 * c / inp.rho0).sqrt() * (vector::norm2(inp.y_star) + mg) * r0sq.max(0.0).sqrt();
    Ok(Certificate::build(
        "thm3.4",
        r1sq,
        1,
        c - 1.0,
        inp.source,
        &[
            ("c", c),
            ("R0_sq", r0sq),
            ("R1_sq", r1sq),
            ("rho0", inp.rho0),
            ("gamma", inp.gamma),
        ],
    ))
}

/// Case 1 strongly convex, primal residual:
/// `F(xᵏ) - F* ≤ 2/(k+1)²[ρ0‖K‖²‖x⁰-x*‖²/Γ + D_g²/((1-γ)ρ0)]`.
pub fn bound_thm42(inp: &CertInputs) -> Result<f64> {
    let big_gamma = 2.0 - 1.0 / inp.gamma;
    let dg = inp.d_g()?;
    Ok(2.0 * (inp.rho0 * sq(inp.norm_k) * sq(inp.dx()) / big_gamma + sq(dg) / ((1.0 - inp.gamma) * inp.rho0)))
}

pub fn cert_thm42_primal(inp: &CertInputs) -> Result<Certificate> {
    let constant = bound_thm42(inp)?;
    Ok(Certificate::build(
        "thm4.2b",
        constant,
        2,
        1.0,
        inp.source,
        &[
            ("rho0", inp.rho0),
            ("gamma", inp.gamma),
            ("norm_k", inp.norm_k),
            ("dx", inp.dx()),
        ],
    ))
}

/// `R0² = (c-1)[F(x⁰)-F*] + ((c-1)/2)[(c-1)ρ0‖K‖²/Γ + cμ]‖x⁰-x*‖² + c²‖y⁰-y*‖²/(2(1-γ)ρ0)`.
pub fn bound_thm43_r0(inp: &CertInputs, c: f64, mu_f: f64) -> Result<f64> {
    let big_gamma = 2.0 - 1.0 / inp.gamma;
    Ok((c - 1.0) * inp.objective_gap0()?
        + 0.5 * (c - 1.0) * ((c - 1.0) * inp.rho0 * sq(inp.norm_k) / big_gamma + c * mu_f) * sq(inp.dx())
        + c * c * sq(inp.dy()) / (2.0 * (1.0 - inp.gamma) * inp.rho0))
}

/// `F(xᵏ) - F* ≤ R1²/(k + c - 1)²` with `R1² = R0² + √(2c²/ρ0)(‖y*‖ + M_g)R0`.
pub fn cert_thm43_primal(inp: &CertInputs, c: f64, mu_f: f64) -> Result<Certificate> {
    let r0sq = bound_thm43_r0(inp, c, mu_f)?;
    let mg = inp
        .m_g
        .ok_or_else(|| Error::CertificateUnavailable("g has no Lipschitz constant".into()))?;
    let r1sq = r0sq + (2.0 * c * c / inp.rho0).sqrt() * (vector::norm2(inp.y_star) + mg) * r0sq.max(0.0).sqrt();
    Ok(Certificate::build(
        "thm4.3",
        r1sq,
        2,
        c - 1.0,
        inp.source,
        &[
            ("c", c),
            ("mu_f", mu_f),
            ("R0_sq", r0sq),
            ("R1_sq", r1sq),
            ("rho0", inp.rho0),
        ],
    ))
}

/// Equality-constrained, `c = 1`:
/// `R0² = (ρ0‖K‖² + γLψ)/γ·‖x⁰-x*‖² + (2‖y*‖ + ‖y⁰‖ + 1)²/((1-γ)ρ0)`.
pub fn bound_cor35(inp: &CertInputs, l_psi: f64) -> f64 {
    (inp.rho0 * sq(inp.norm_k) + inp.gamma * l_psi) / inp.gamma * sq(inp.dx())
        + sq(2.0 * vector::norm2(inp.y_star) + vector::norm2(inp.y0) + 1.0) / ((1.0 - inp.gamma) * inp.rho0)
}

/// `|F(xᵏ) - F*|` and `‖Kxᵏ - b‖` are both at most `R0²/(2k)`.
pub fn cert_cor35(inp: &CertInputs, l_psi: f64) -> Certificate {
    let r0sq = bound_cor35(inp, l_psi);
    Certificate::build(
        "cor3.5",
        0.5 * r0sq,
        1,
        0.0,
        inp.source,
        &[
            ("R0_sq", r0sq),
            ("L_psi", l_psi),
            ("rho0", inp.rho0),
            ("gamma", inp.gamma),
        ],
    )
}

/// Semi-strong:
/// `R0² = ρ0‖K‖²‖x⁰-x*‖²/Γ + ν0‖w⁰-w*‖² + (2‖y*‖ + ‖y⁰‖ + 1)²/(ρ0(1-γ))`.
pub fn bound_cor45(inp: &CertInputs, nu0: f64, w0: &[f64], w_star: &[f64]) -> f64 {
    let big_gamma = 2.0 - 1.0 / inp.gamma;
    inp.rho0 * sq(inp.norm_k) * sq(inp.dx()) / big_gamma
        + nu0 * sq(vector::dist(w0, w_star))
        + sq(2.0 * vector::norm2(inp.y_star) + vector::norm2(inp.y0) + 1.0) / (inp.rho0 * (1.0 - inp.gamma))
}

/// `|F - F*|` and `‖Kx + Bw - b‖` are both at most `2R0²/(k+1)²`.
pub fn cert_cor45(inp: &CertInputs, nu0: f64, w0: &[f64], w_star: &[f64]) -> Certificate {
    let r0sq = bound_cor45(inp, nu0, w0, w_star);
    Certificate::build(
        "cor4.5",
        2.0 * r0sq,
        2,
        1.0,
        inp.source,
        &[("R0_sq", r0sq), ("nu0", nu0), ("rho0", inp.rho0), ("gamma", inp.gamma)],
    )
}

/// Result of [`reference_solution`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceSolution {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub f_star: f64,
    pub quality: ReferenceQuality,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceQuality {
    pub solvers: [String; 2],
    pub objective: [f64; 2],
    pub residual: [f64; 2],
    pub iterations: [usize; 2],
    pub relative_disagreement: f64,
}

/// Acceptance thresholds of the oracle.
pub const REFERENCE_AGREEMENT: f64 = 1e-8;
pub const REFERENCE_RESIDUAL: f64 = 1e-8;
/// A solver stops once its residual drops below this value.
const REFERENCE_FLOOR: f64 = 1e-10;
/// Restart period of the non-stationary methods, also the residual cadence.
const REFERENCE_PERIOD: usize = 500;
/// Primal-dual step balances tried in turn. LAD instances can sit on a long
/// plateau for one balance and converge quickly for another.
const REFERENCE_WEIGHTS: [f64; 4] = [1.0, 10.0, 100.0, 1000.0];

type Objective<'a> = &'a dyn Fn(&[f64]) -> f64;
type Residual<'a> = &'a dyn Fn(&[f64], &[f64]) -> Result<f64>;

struct Candidate {
    name: String,
    x: Vec<f64>,
    y: Vec<f64>,
    residual: f64,
    iterations: usize,
}

fn keep_best(best: &mut Option<Candidate>, name: String, x: &[f64], y: &[f64], r: f64, it: usize) {
    if best.as_ref().is_none_or(|b| r < b.residual) {
        *best = Some(Candidate {
            name,
            x: x.to_vec(),
            y: y.to_vec(),
            residual: r,
            iterations: it,
        });
    }
}

/// Splits `budget` over [`REFERENCE_WEIGHTS`]; `run(w, iters)` runs one
/// weight and returns its best candidate. Stops at the first weight that
/// reaches [`REFERENCE_FLOOR`].
fn sweep_weights(budget: usize, mut run: impl FnMut(f64, usize) -> Result<Option<Candidate>>) -> Result<Candidate> {
    let share = (budget / REFERENCE_WEIGHTS.len()).max(REFERENCE_PERIOD);
    let mut best: Option<Candidate> = None;
    for w in REFERENCE_WEIGHTS {
        if let Some(c) = run(w, share)? {
            let (x, y, r, it) = (c.x, c.y, c.residual, c.iterations);
            keep_best(&mut best, c.name, &x, &y, r, it);
        }
        if best.as_ref().is_some_and(|b| b.residual <= REFERENCE_FLOOR) {
            break;
        }
    }
    best.ok_or_else(|| Error::InvalidConfig("reference budget must be positive".into()))
}

/// The non-stationary method restarted every [`REFERENCE_PERIOD`] iterations
/// from its current `(xᵏ, ȳᵏ)`, with `ρ0 = w/‖K‖` (or `w` times the Case 2
/// bound when `f` is strongly convex).
fn restarted_pd(
    problem: &CompositeProblem,
    budget: usize,
    residual: Residual,
    x0: &[f64],
    y0: &[f64],
) -> Result<Candidate> {
    let nk = problem.norm_k();
    let mu = problem.f.strong_convexity();
    sweep_weights(budget, |w, iters| {
        let name = if mu > 0.0 {
            format!("alg2-case2-restarted-w{w}")
        } else {
            format!("alg1-c2-restarted-w{w}")
        };
        let mut x = x0.to_vec();
        let mut y = y0.to_vec();
        let mut best = None;
        let mut done = 0;
        while done < iters {
            let len = REFERENCE_PERIOD.min(iters - done);
            if mu > 0.0 {
                let case = StrongCase::Case2 { c: 4.0 };
                let rho0 = w * StrongSchedule::rho0_bound(case, 0.75, mu, nk);
                let s = StrongSchedule::new_unchecked(case, 0.75, rho0, mu, nk)?;
                let mut a = Alg2::new(problem, s, &x, &y)?;
                for _ in 0..len {
                    a.step()?;
                }
                x = a.x().to_vec();
                y = a.y_bar().to_vec();
            } else {
                let s = GeneralSchedule::new(2.0, 0.5, w / nk, nk)?;
                let mut a = Alg1::new(problem, s, &x, &y)?;
                for _ in 0..len {
                    a.step()?;
                }
                x = a.x().to_vec();
                y = a.y_bar().to_vec();
            }
            done += len;
            let r = residual(&x, &y)?;
            keep_best(&mut best, name.clone(), &x, &y, r, done);
            if r <= REFERENCE_FLOOR {
                break;
            }
        }
        Ok(best)
    })
}

/// Chambolle-Pock (accelerated when `f` is strongly convex) with dual step
/// `w/‖K‖` and primal step `1/(w‖K‖)`, restarted every
/// [`REFERENCE_PERIOD`] iterations from the better of its last and averaged
/// iterates.
fn cp_restarted(
    problem: &CompositeProblem,
    budget: usize,
    residual: Residual,
    x0: &[f64],
    y0: &[f64],
) -> Result<Candidate> {
    let nk = problem.norm_k();
    let mu = problem.f.strong_convexity();
    sweep_weights(budget, |w, iters| {
        let cfg = CpConfig {
            rho: w / nk,
            beta: 1.0 / (w * nk),
            output_mode: OutputMode::LastIterate,
        };
        let name = format!("{}-restarted-w{w}", if mu > 0.0 { "cp-scvx" } else { "cp" });
        let mut x = x0.to_vec();
        let mut y = y0.to_vec();
        let mut best = None;
        let mut done = 0;
        while done < iters {
            let len = REFERENCE_PERIOD.min(iters - done);
            let mut cp = if mu > 0.0 {
                ChambollePock::strongly_convex(problem, cfg, mu, &x, &y)?
            } else {
                ChambollePock::new(problem, cfg, &x, &y)?
            };
            for _ in 0..len {
                cp.step()?;
            }
            done += len;
            let r_last = residual(cp.x_last(), cp.y_last())?;
            let r_avg = residual(cp.x_ergodic(), cp.y_ergodic())?;
            let r = if r_avg < r_last {
                x = cp.x_ergodic().to_vec();
                y = cp.y_ergodic().to_vec();
                r_avg
            } else {
                x = cp.x_last().to_vec();
                y = cp.y_last().to_vec();
                r_last
            };
            keep_best(&mut best, name.clone(), &x, &y, r, done);
            if r <= REFERENCE_FLOOR {
                break;
            }
        }
        Ok(best)
    })
}

/// High-accuracy `(x̂*, ŷ*, F̂*)` from two independent solvers.
///
/// Runs the restarted non-stationary method (Algorithm 1 with `c = 2`, or
/// Algorithm 2 Case 2 when `f` is strongly convex) and restarted
/// Chambolle-Pock (its accelerated form when `f` is strongly convex), each
/// for at most `budget` iterations spread over several primal-dual step
/// balances. Accepts when the objectives agree to [`REFERENCE_AGREEMENT`]
/// relative and the better residual is at most [`REFERENCE_RESIDUAL`].
pub fn reference_solution(
    problem: &CompositeProblem,
    budget: usize,
    objective: Objective,
    residual: Residual,
) -> Result<ReferenceSolution> {
    let x0 = vec![0.0; problem.p()];
    let y0 = vec![0.0; problem.n()];
    let a = restarted_pd(problem, budget, residual, &x0, &y0)?;
    let b = cp_restarted(problem, budget, residual, &x0, &y0)?;
    let fa = objective(&a.x);
    let fb = objective(&b.x);
    let disagreement = (fa - fb).abs() / fa.abs().max(fb.abs()).max(1.0);
    let quality = ReferenceQuality {
        solvers: [a.name.clone(), b.name.clone()],
        objective: [fa, fb],
        residual: [a.residual, b.residual],
        iterations: [a.iterations, b.iterations],
        relative_disagreement: disagreement,
    };
    let best = if a.residual <= b.residual { a } else { b };
    if !(disagreement <= REFERENCE_AGREEMENT) || !(best.residual <= REFERENCE_RESIDUAL) {
        return Err(Error::OracleFailure {
            reason: format!(
                "reference solvers disagree or did not converge (relative gap {disagreement:.3e}, residuals {:.3e}/{:.3e})",
                quality.residual[0], quality.residual[1]
            ),
            values: vec![fa, fb, quality.residual[0], quality.residual[1]],
        });
    }
    let f_star = objective(&best.x);
    Ok(ReferenceSolution {
        x: best.x,
        y: best.y,
        f_star,
        quality,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::Arc;

    #[test]
    fn slope_of_power_laws() {
        let mut t = Trace::new("synthetic");
        for k in 1..=1000 {
            t.push(TraceRecord {
                k,
                primal: 1.0 / k as f64,
                dual: None,
                gap: Some(1.0 / (k * k) as f64),
                feas: Some(3.0 / k as f64 + 1e-9 * ((k * 7919) % 13) as f64 / 13.0),
                time_s: 0.0,
            })
            .unwrap();
        }
        assert!((rate_slope(&t, Metric::Primal, 1, 1000).unwrap() + 1.0).abs() < 1e-6);
        assert!((rate_slope(&t, Metric::Gap, 1, 1000).unwrap() + 2.0).abs() < 1e-6);
        let s = rate_slope(&t, Metric::Feasibility, 1, 1000).unwrap();
        assert!((-1.01..=-0.99).contains(&s));
        assert!(rate_slope(&t, Metric::Primal, 1, 5).is_err());
    }

    #[test]
    fn slope_drops_non_positive_values() {
        let mut t = Trace::new("synthetic");
        for k in 1..=30 {
            let v = if k % 3 == 0 { 0.0 } else { 1.0 / k as f64 };
            t.push(TraceRecord {
                k,
                primal: v,
                dual: None,
                gap: None,
                feas: None,
                time_s: 0.0,
            })
            .unwrap();
        }
        assert!((rate_slope(&t, Metric::Primal, 1, 30).unwrap() + 1.0).abs() < 1e-9);
    }

    #[test]
    fn thm33_bound_examples() {
        assert_eq!(bound_thm33(&[0.0], &[0.0], &[0.0], &[0.0], 1.0, 0.5, 1.0, 3), 0.0);
        assert_eq!(bound_thm33(&[1.0], &[1.0], &[0.0], &[0.0], 1.0, 0.5, 1.0, 1), 2.0);
        let b1 = bound_thm33(&[1.0], &[2.0], &[0.0], &[0.5], 0.7, 0.3, 1.4, 5);
        let b2 = bound_thm33(&[1.0], &[2.0], &[0.0], &[0.5], 0.7, 0.3, 1.4, 10);
        assert!((b1 - 2.0 * b2).abs() < 1e-14);
    }

    #[test]
    fn certificate_curve_has_exact_slope() {
        let c = Certificate::build("test", 3.5, 2, 0.0, ReferenceSource::Exact, &[]);
        let mut t = Trace::new("bound");
        for k in 1..=200 {
            t.push(TraceRecord {
                k,
                primal: c.bound(k),
                dual: None,
                gap: None,
                feas: None,
                time_s: 0.0,
            })
            .unwrap();
        }
        assert!((rate_slope(&t, Metric::Primal, 1, 200).unwrap() + 2.0).abs() < 1e-12);
        assert!(c.check(&t.values(Metric::Primal)).passed());
    }

    #[test]
    fn game_gap_examples() {
        let game = MatrixGame::new(Arc::new(
            LinearMap::from_rows(&[vec![0.0, 1.0], vec![-1.0, 0.0]]).unwrap(),
        ));
        let h = [0.5, 0.5];
        assert!((game_gap(&game, &h, &h).unwrap() - 1.0).abs() < 1e-15);
        let zero = MatrixGame::new(Arc::new(LinearMap::zeros(2, 3)));
        assert_eq!(game_gap(&zero, &[0.2, 0.3, 0.5], &h).unwrap(), 0.0);
        assert!(game_gap(&game, &[0.7, 0.7], &h).is_err());
    }

    #[test]
    fn trace_csv_round_trip() {
        let mut t = Trace::new("alg1");
        t.push(TraceRecord {
            k: 1,
            primal: 2.5,
            dual: Some(f64::INFINITY),
            gap: None,
            feas: Some(0.1),
            time_s: 0.01,
        })
        .unwrap();
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("k,F,G,gap,feas,time_s\n"));
        let back = Trace::read_csv("alg1", buf.as_slice()).unwrap();
        assert_eq!(back, t);
    }

    #[test]
    fn trace_rejects_non_increasing_k() {
        let mut t = Trace::new("x");
        let r = TraceRecord {
            k: 2,
            primal: 0.0,
            dual: None,
            gap: None,
            feas: None,
            time_s: 0.0,
        };
        t.push(r).unwrap();
        assert!(t.push(r).is_err());
    }
}
