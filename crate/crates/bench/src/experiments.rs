//! The LAD and matrix-game comparisons, run at desk or full scale.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use nspd_core::baselines::{
    smoothing_k_max, smoothing_mu, Admm, AdmmConfig, ChambollePock, CpConfig, MatrixGame, NesterovSmoothing, OutputMode,
};
use nspd_core::metrics::{
    self, cert_thm33_primal, cert_thm34_primal, cert_thm42_primal, cert_thm43_primal, composite_point, rate_slope,
    CertInputs, Certificate, CertificateCheck, Metric, Point, ReferenceQuality, ReferenceSolution, ReferenceSource,
    Trace,
};
use nspd_core::pd_general::{resolve_rho0, Alg1, CompositeProblem, GeneralSchedule, Rho0};
use nspd_core::pd_strong::{Alg2, StrongCase, StrongSchedule};
use nspd_core::{Error, IterativeMethod, Result};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::generators::{gen_game, gen_lad, ConstrainedInstance, GameConfig, LadConfig, LadInstance};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Scale {
    #[default]
    Desk,
    Paper,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "name")]
pub enum ExperimentKind {
    LadCase1,
    LadCase2,
    Game { epsilon: f64 },
}

impl ExperimentKind {
    pub fn label(&self) -> &'static str {
        match self {
            ExperimentKind::LadCase1 => "lad-case1",
            ExperimentKind::LadCase2 => "lad-case2",
            ExperimentKind::Game { .. } => "game",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub kind: ExperimentKind,
    pub scale: Scale,
    pub seed: u64,
    pub max_iters: usize,
    pub trace_every: usize,
    pub reference_budget: usize,
    pub out_dir: Option<PathBuf>,
}

impl ExperimentSpec {
    pub fn new(kind: ExperimentKind, scale: Scale, seed: u64) -> Self {
        Self {
            kind,
            scale,
            seed,
            max_iters: 10_000,
            trace_every: 1,
            reference_budget: 1_000_000,
            out_dir: None,
        }
    }
}

/// Which solver a variant runs, with every parameter resolved.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "kebab-case")]
pub enum SolverSpec {
    Alg1 {
        c: f64,
        gamma: f64,
        rho0: f64,
    },
    /// `checked = false` allows `ρ0` above the admissible bound.
    Alg2 {
        case: StrongCase,
        gamma: f64,
        rho0: f64,
        checked: bool,
    },
    Cp {
        rho: f64,
        beta: f64,
        output_mode: OutputMode,
    },
    CpScvx {
        rho: f64,
        beta: f64,
        mu: f64,
        output_mode: OutputMode,
    },
    Admm {
        rho: f64,
        output_mode: OutputMode,
    },
    Smoothing {
        mu: f64,
        iterations: usize,
    },
}

/// Which certificate a variant is checked against.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum CertKind {
    Thm33,
    Thm34 { c: f64 },
    Thm42,
    Thm43 { c: f64, mu: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Variant {
    pub name: String,
    pub solver: SolverSpec,
    pub certificate: Option<CertKind>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariantSummary {
    pub name: String,
    pub solver: SolverSpec,
    pub iterations: usize,
    pub final_primal: Option<f64>,
    /// Last value of the summary metric (primal residual or gap).
    pub final_metric: Option<f64>,
    pub slope: Option<f64>,
    pub certificate: Option<Certificate>,
    pub check: Option<CertificateCheck>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceSummary {
    pub f_star: f64,
    pub quality: ReferenceQuality,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub experiment: String,
    pub spec: ExperimentSpec,
    pub instance: serde_json::Value,
    pub norm_k: f64,
    pub metric: String,
    pub slope_window: (usize, usize),
    pub reference: ReferenceSummary,
    pub variants: Vec<VariantSummary>,
}

impl ExperimentReport {
    pub fn certificate_violations(&self) -> usize {
        self.variants
            .iter()
            .filter(|v| v.check.as_ref().is_some_and(|c| !c.passed()))
            .count()
    }

    pub fn variant(&self, name: &str) -> Option<&VariantSummary> {
        self.variants.iter().find(|v| v.name == name)
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentOutput {
    pub report: ExperimentReport,
    pub traces: Vec<Trace>,
}

impl ExperimentOutput {
    pub fn trace(&self, name: &str) -> Option<&Trace> {
        self.traces.iter().find(|t| t.solver == name)
    }
}

/// A generated instance plus what the variants need to know about it.
enum Instance {
    Lad(LadInstance),
    Game {
        game: MatrixGame,
        problem: CompositeProblem,
        config: GameConfig,
    },
}

impl Instance {
    fn problem(&self) -> &CompositeProblem {
        match self {
            Instance::Lad(l) => &l.problem,
            Instance::Game { problem, .. } => problem,
        }
    }

    fn m_g(&self) -> f64 {
        match self {
            Instance::Lad(l) => l.m_g(),
            // max over a simplex is 1-Lipschitz
            Instance::Game { .. } => 1.0,
        }
    }

    fn config_json(&self) -> serde_json::Value {
        match self {
            Instance::Lad(l) => serde_json::to_value(&l.config),
            Instance::Game { config, .. } => serde_json::to_value(config),
        }
        .unwrap_or(serde_json::Value::Null)
    }

    fn start(&self) -> (Vec<f64>, Vec<f64>) {
        let pr = self.problem();
        match self {
            Instance::Lad(_) => (vec![0.0; pr.p()], vec![0.0; pr.n()]),
            Instance::Game { .. } => (vec![1.0 / pr.p() as f64; pr.p()], vec![1.0 / pr.n() as f64; pr.n()]),
        }
    }

    fn point(&self, x: &[f64], y: &[f64]) -> Result<Point> {
        composite_point(self.problem(), x, y)
    }
}

/// Reference point for a LAD instance: objective `F`, residual the duality
/// gap after projecting the dual candidate onto the dual domain.
pub fn lad_reference(inst: &LadInstance, budget: usize) -> Result<ReferenceSolution> {
    let pr = &inst.problem;
    let objective = |x: &[f64]| pr.primal_value(x).unwrap_or(f64::INFINITY);
    let lambda = inst.l1_lambda();
    let residual = |x: &[f64], y: &[f64]| -> Result<f64> {
        let y = metrics::repair_lad_dual(&pr.k, y, lambda)?;
        metrics::duality_gap(pr, x, &y)
    };
    let mut reference = metrics::reference_solution(pr, budget, &objective, &residual)?;
    reference.y = metrics::repair_lad_dual(&pr.k, &reference.y, lambda)?;
    Ok(reference)
}

/// Reference point for a matrix game; the residual is the game gap.
pub fn game_reference(game: &MatrixGame, budget: usize) -> Result<ReferenceSolution> {
    let pr = game.composite();
    let objective = |x: &[f64]| pr.primal_value(x).unwrap_or(f64::INFINITY);
    let residual = |x: &[f64], y: &[f64]| metrics::game_gap(game, x, y);
    metrics::reference_solution(&pr, budget, &objective, &residual)
}

/// Reference point for the equality-constrained instance, from its
/// composite form; the residual is the saddle-point natural residual.
pub fn constrained_reference(inst: &ConstrainedInstance, budget: usize) -> Result<ReferenceSolution> {
    let pr = &inst.composite;
    let objective = |x: &[f64]| pr.f.value(x);
    let residual = |x: &[f64], y: &[f64]| metrics::kkt_residual(pr, x, y);
    metrics::reference_solution(pr, budget, &objective, &residual)
}

fn lad_case1_variants(pr: &CompositeProblem, reference: &ReferenceSolution, x0: &[f64], y0: &[f64]) -> Vec<Variant> {
    let nk = pr.norm_k();
    let gamma = 0.999;
    let rho0 = resolve_rho0(Rho0::Auto, gamma, nk, x0, y0, Some((&reference.x, &reference.y)));
    let mut v = vec![
        Variant {
            name: "alg1-c1".into(),
            solver: SolverSpec::Alg1 { c: 1.0, gamma, rho0 },
            certificate: Some(CertKind::Thm33),
        },
        Variant {
            name: "alg1-c2".into(),
            solver: SolverSpec::Alg1 { c: 2.0, gamma, rho0 },
            certificate: Some(CertKind::Thm34 { c: 2.0 }),
        },
    ];
    for (label, s) in [("0.1", 0.1), ("1", 1.0), ("10", 10.0)] {
        let rho = s * rho0;
        v.push(Variant {
            name: format!("cp-ergodic-{label}rho0"),
            solver: SolverSpec::Cp {
                rho,
                beta: gamma / (nk * nk * rho),
                output_mode: OutputMode::Ergodic,
            },
            certificate: None,
        });
    }
    for (label, s) in [("0.5", 0.5), ("10", 10.0), ("30", 30.0)] {
        v.push(Variant {
            name: format!("admm-ergodic-{label}rho0"),
            solver: SolverSpec::Admm {
                rho: s * rho0,
                output_mode: OutputMode::Ergodic,
            },
            certificate: None,
        });
    }
    v
}

fn lad_case2_variants(pr: &CompositeProblem) -> Vec<Variant> {
    let nk = pr.norm_k();
    let mu = pr.f.strong_convexity();
    let g1 = 0.999;
    let rho1 = StrongSchedule::rho0_bound(StrongCase::Case1, g1, mu, nk);
    let case2 = StrongCase::Case2 { c: 4.0 };
    let rho2 = StrongSchedule::rho0_bound(case2, 0.75, mu, nk);
    let mut v = vec![
        Variant {
            name: "alg2-case1".into(),
            solver: SolverSpec::Alg2 {
                case: StrongCase::Case1,
                gamma: g1,
                rho0: rho1,
                checked: true,
            },
            certificate: Some(CertKind::Thm42),
        },
        Variant {
            name: "alg2-case1-5x".into(),
            solver: SolverSpec::Alg2 {
                case: StrongCase::Case1,
                gamma: g1,
                rho0: 5.0 * rho1,
                checked: false,
            },
            certificate: None,
        },
        Variant {
            name: "alg2-case2-c4".into(),
            solver: SolverSpec::Alg2 {
                case: case2,
                gamma: 0.75,
                rho0: rho2,
                checked: true,
            },
            certificate: Some(CertKind::Thm43 { c: 4.0, mu }),
        },
    ];
    for (label, s) in [("0.01", 0.01), ("0.75", 0.75), ("1", 1.0), ("5", 5.0)] {
        let rho = s / nk;
        v.push(Variant {
            name: format!("cp-scvx-{label}rhocp"),
            solver: SolverSpec::CpScvx {
                rho,
                beta: 1.0 / (nk * nk * rho),
                mu,
                output_mode: OutputMode::LastIterate,
            },
            certificate: None,
        });
    }
    v
}

fn game_variants(pr: &CompositeProblem, epsilon: f64) -> Vec<Variant> {
    let nk = pr.norm_k();
    let (n, p) = (pr.n(), pr.p());
    let k_max = smoothing_k_max(nk, epsilon, n, p);
    let mu = smoothing_mu(epsilon, n);
    let mut v = vec![
        Variant {
            name: "alg1-c1".into(),
            solver: SolverSpec::Alg1 {
                c: 1.0,
                gamma: 0.5,
                rho0: 1.0 / nk,
            },
            certificate: Some(CertKind::Thm33),
        },
        Variant {
            name: "alg1-c2".into(),
            solver: SolverSpec::Alg1 {
                c: 2.0,
                gamma: 0.5,
                rho0: 1.0 / nk,
            },
            certificate: Some(CertKind::Thm34 { c: 2.0 }),
        },
    ];
    for (label, s) in [("0.2", 0.2), ("1", 1.0), ("5", 5.0)] {
        v.push(Variant {
            name: format!("smoothing-{label}mu"),
            solver: SolverSpec::Smoothing {
                mu: s * mu,
                iterations: k_max,
            },
            certificate: None,
        });
    }
    v
}

fn drive<M: IterativeMethod>(m: &mut M, inst: &Instance, iters: usize, every: usize) -> Result<Trace> {
    metrics::run_traced(m, iters, every, None, |m| inst.point(m.primal(), m.dual()))
}

/// Runs one variant from `(x0, y0)` and returns its trace.
fn run_variant(inst: &Instance, v: &Variant, x0: &[f64], y0: &[f64], iters: usize, every: usize) -> Result<Trace> {
    let pr = inst.problem();
    let nk = pr.norm_k();
    let mut trace = match v.solver {
        SolverSpec::Alg1 { c, gamma, rho0 } => {
            let mut m = Alg1::new(pr, GeneralSchedule::new(c, gamma, rho0, nk)?, x0, y0)?;
            drive(&mut m, inst, iters, every)?
        }
        SolverSpec::Alg2 {
            case,
            gamma,
            rho0,
            checked,
        } => {
            let mu = pr.f.strong_convexity();
            let s = if checked {
                StrongSchedule::new(case, gamma, rho0, mu, nk)?
            } else {
                StrongSchedule::new_unchecked(case, gamma, rho0, mu, nk)?
            };
            let mut m = Alg2::new(pr, s, x0, y0)?;
            drive(&mut m, inst, iters, every)?
        }
        SolverSpec::Cp { rho, beta, output_mode } => {
            let mut m = ChambollePock::new(pr, CpConfig { rho, beta, output_mode }, x0, y0)?;
            drive(&mut m, inst, iters, every)?
        }
        SolverSpec::CpScvx {
            rho,
            beta,
            mu,
            output_mode,
        } => {
            let mut m = ChambollePock::strongly_convex(pr, CpConfig { rho, beta, output_mode }, mu, x0, y0)?;
            drive(&mut m, inst, iters, every)?
        }
        SolverSpec::Admm { rho, output_mode } => {
            let cfg = AdmmConfig {
                output_mode,
                ..AdmmConfig::new(rho)
            };
            let mut m = Admm::new(pr, cfg, x0, y0)?;
            drive(&mut m, inst, iters, every)?
        }
        SolverSpec::Smoothing { mu, iterations } => {
            let Instance::Game { game, .. } = inst else {
                return Err(Error::InvalidConfig("smoothing applies to matrix games only".into()));
            };
            let mut m = NesterovSmoothing::new(game, mu)?;
            drive(&mut m, inst, iterations, every)?
        }
    };
    trace.solver = v.name.clone();
    Ok(trace)
}

fn certificate_for(
    kind: CertKind,
    inst: &Instance,
    v: &Variant,
    reference: &ReferenceSolution,
    x0: &[f64],
    y0: &[f64],
) -> Result<Certificate> {
    let pr = inst.problem();
    let (rho0, gamma) = match v.solver {
        SolverSpec::Alg1 { rho0, gamma, .. } | SolverSpec::Alg2 { rho0, gamma, .. } => (rho0, gamma),
        _ => return Err(Error::CertificateUnavailable(format!("{} has no certificate", v.name))),
    };
    let tolerance = reference.quality.residual[0].min(reference.quality.residual[1]);
    let inp = CertInputs {
        x0,
        y0,
        x_star: &reference.x,
        y_star: &reference.y,
        f_x0: pr.primal_value(x0).ok(),
        f_star: Some(reference.f_star),
        m_g: Some(inst.m_g()),
        rho0,
        gamma,
        norm_k: pr.norm_k(),
        source: ReferenceSource::Numerical { tolerance },
    };
    match kind {
        CertKind::Thm33 => cert_thm33_primal(&inp),
        CertKind::Thm34 { c } => cert_thm34_primal(&inp, c),
        CertKind::Thm42 => cert_thm42_primal(&inp),
        CertKind::Thm43 { c, mu } => cert_thm43_primal(&inp, c, mu),
    }
}

fn build_instance(spec: &ExperimentSpec) -> Result<Instance> {
    Ok(match spec.kind {
        ExperimentKind::LadCase1 | ExperimentKind::LadCase2 => {
            let base = match spec.scale {
                Scale::Desk => LadConfig::desk(spec.seed),
                Scale::Paper => LadConfig::paper(spec.seed),
            };
            let cfg = if spec.kind == ExperimentKind::LadCase2 {
                base.strongly_convex()
            } else {
                base
            };
            Instance::Lad(gen_lad(&cfg)?)
        }
        ExperimentKind::Game { .. } => {
            let config = match spec.scale {
                Scale::Desk => GameConfig::desk(spec.seed),
                Scale::Paper => GameConfig::paper(spec.seed),
            };
            let game = gen_game(&config)?;
            let problem = game.composite();
            Instance::Game { game, problem, config }
        }
    })
}

/// Generates the instance, computes the reference, runs every variant (in
/// parallel) and, when `out_dir` is set, writes the traces and reports.
///
/// A reference failure aborts; a failing variant is recorded and the others
/// still run.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<ExperimentOutput> {
    let inst = build_instance(spec)?;
    let reference = match &inst {
        Instance::Lad(l) => lad_reference(l, spec.reference_budget)?,
        Instance::Game { game, .. } => game_reference(game, spec.reference_budget)?,
    };
    let pr = inst.problem();
    let (x0, y0) = inst.start();
    let variants = match spec.kind {
        ExperimentKind::LadCase1 => lad_case1_variants(pr, &reference, &x0, &y0),
        ExperimentKind::LadCase2 => lad_case2_variants(pr),
        ExperimentKind::Game { epsilon } => game_variants(pr, epsilon),
    };
    let metric = match spec.kind {
        ExperimentKind::Game { .. } => Metric::Gap,
        _ => Metric::PrimalResidual(reference.f_star),
    };
    let window = ((spec.max_iters / 100).max(1), spec.max_iters);
    let results: Vec<(VariantSummary, Option<Trace>)> = variants
        .par_iter()
        .map(|v| {
            let outcome = run_variant(&inst, v, &x0, &y0, spec.max_iters, spec.trace_every);
            summarize(&inst, v, outcome, &reference, &x0, &y0, metric, window)
        })
        .collect();
    let (summaries, traces): (Vec<_>, Vec<_>) = results.into_iter().unzip();
    let report = ExperimentReport {
        experiment: spec.kind.label().to_string(),
        spec: spec.clone(),
        instance: inst.config_json(),
        norm_k: pr.norm_k(),
        metric: match metric {
            Metric::Gap => "duality_gap".into(),
            _ => "primal_residual".into(),
        },
        slope_window: window,
        reference: ReferenceSummary {
            f_star: reference.f_star,
            quality: reference.quality.clone(),
        },
        variants: summaries,
    };
    let out = ExperimentOutput {
        report,
        traces: traces.into_iter().flatten().collect(),
    };
    if let Some(dir) = &spec.out_dir {
        write_output(&out, dir)?;
    }
    Ok(out)
}

#[allow(clippy::too_many_arguments)]
fn summarize(
    inst: &Instance,
    v: &Variant,
    outcome: Result<Trace>,
    reference: &ReferenceSolution,
    x0: &[f64],
    y0: &[f64],
    metric: Metric,
    window: (usize, usize),
) -> (VariantSummary, Option<Trace>) {
    let mut s = VariantSummary {
        name: v.name.clone(),
        solver: v.solver,
        iterations: 0,
        final_primal: None,
        final_metric: None,
        slope: None,
        certificate: None,
        check: None,
        error: None,
    };
    let trace = match outcome {
        Ok(t) => t,
        Err(e) => {
            log::warn!("{} failed: {e}", v.name);
            s.error = Some(e.to_string());
            return (s, None);
        }
    };
    let values = trace.values(metric);
    s.iterations = trace.last().map_or(0, |r| r.k);
    s.final_primal = trace.last().map(|r| r.primal);
    s.final_metric = values.last().map(|p| p.1);
    s.slope = rate_slope(&trace, metric, window.0, window.1).ok();
    if let Some(kind) = v.certificate {
        match certificate_for(kind, inst, v, reference, x0, y0) {
            Ok(c) => {
                s.check = Some(c.check(&trace.values(Metric::PrimalResidual(reference.f_star))));
                s.certificate = Some(c);
            }
            Err(e) => s.error = Some(e.to_string()),
        }
    }
    (s, Some(trace))
}

/// One CSV per variant, `certificates.json` and `summary.json`.
pub fn write_output(out: &ExperimentOutput, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    for t in &out.traces {
        t.write_csv(BufWriter::new(File::create(dir.join(format!("{}.csv", t.solver)))?))?;
    }
    let certs: BTreeMap<&str, (&Option<Certificate>, &Option<CertificateCheck>)> = out
        .report
        .variants
        .iter()
        .filter(|v| v.certificate.is_some())
        .map(|v| (v.name.as_str(), (&v.certificate, &v.check)))
        .collect();
    let to_io = |e: serde_json::Error| Error::Io(e.to_string());
    serde_json::to_writer_pretty(File::create(dir.join("certificates.json"))?, &certs).map_err(to_io)?;
    serde_json::to_writer_pretty(File::create(dir.join("summary.json"))?, &out.report).map_err(to_io)?;
    Ok(())
}

/// Problem section of a `solve` config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ProblemConfig {
    Lad(LadConfig),
    Game(GameConfig),
}

/// Solver section of a `solve` config file. Omitted step parameters take
/// their textbook defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "kebab-case", deny_unknown_fields)]
pub enum SolverConfig {
    Alg1 {
        #[serde(default = "one")]
        c: f64,
        #[serde(default = "half")]
        gamma: f64,
        rho0: Option<f64>,
    },
    Alg2 {
        /// `None` selects Case 1, a value `c > 2` selects Case 2.
        c: Option<f64>,
        #[serde(default = "three_quarters")]
        gamma: f64,
        rho0: Option<f64>,
    },
    Cp {
        rho: Option<f64>,
        beta: Option<f64>,
        #[serde(default)]
        output_mode: OutputMode,
    },
    CpScvx {
        rho: Option<f64>,
        #[serde(default)]
        output_mode: OutputMode,
    },
    Admm {
        rho: Option<f64>,
        #[serde(default)]
        output_mode: OutputMode,
    },
    Smoothing {
        epsilon: f64,
        #[serde(default = "one")]
        mu_scale: f64,
    },
}

fn one() -> f64 {
    1.0
}
fn half() -> f64 {
    0.5
}
fn three_quarters() -> f64 {
    0.75
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "default_iters")]
    pub max_iters: usize,
    #[serde(default = "default_every")]
    pub trace_every: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            max_iters: default_iters(),
            trace_every: default_every(),
        }
    }
}

fn default_iters() -> usize {
    10_000
}
fn default_every() -> usize {
    1
}

/// Contents of a `solve` config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolveConfig {
    pub problem: ProblemConfig,
    pub solver: SolverConfig,
    #[serde(default)]
    pub run: RunConfig,
}

impl SolveConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Parse {
            line: e.span().map_or(0, |s| text[..s.start].lines().count().max(1)),
            message: e.message().to_string(),
        })
    }
}

fn resolve_solver(cfg: &SolverConfig, pr: &CompositeProblem) -> Result<SolverSpec> {
    let nk = pr.norm_k();
    let mu = pr.f.strong_convexity();
    Ok(match *cfg {
        SolverConfig::Alg1 { c, gamma, rho0 } => SolverSpec::Alg1 {
            c,
            gamma,
            rho0: rho0.unwrap_or(1.0 / nk),
        },
        SolverConfig::Alg2 { c, gamma, rho0 } => {
            let case = c.map_or(StrongCase::Case1, |c| StrongCase::Case2 { c });
            SolverSpec::Alg2 {
                case,
                gamma,
                rho0: rho0.unwrap_or_else(|| StrongSchedule::rho0_bound(case, gamma, mu, nk)),
                checked: true,
            }
        }
        SolverConfig::Cp { rho, beta, output_mode } => {
            let rho = rho.unwrap_or(1.0 / nk);
            SolverSpec::Cp {
                rho,
                beta: beta.unwrap_or(1.0 / (nk * nk * rho)),
                output_mode,
            }
        }
        SolverConfig::CpScvx { rho, output_mode } => {
            let rho = rho.unwrap_or(1.0 / nk);
            SolverSpec::CpScvx {
                rho,
                beta: 1.0 / (nk * nk * rho),
                mu,
                output_mode,
            }
        }
        SolverConfig::Admm { rho, output_mode } => SolverSpec::Admm {
            rho: rho.unwrap_or(1.0 / nk),
            output_mode,
        },
        SolverConfig::Smoothing { epsilon, mu_scale } => SolverSpec::Smoothing {
            mu: mu_scale * smoothing_mu(epsilon, pr.n()),
            iterations: smoothing_k_max(nk, epsilon, pr.n(), pr.p()),
        },
    })
}

/// Runs a single solver on a generated instance, without a reference.
pub fn solve(cfg: &SolveConfig) -> Result<Trace> {
    let inst = match &cfg.problem {
        ProblemConfig::Lad(c) => Instance::Lad(gen_lad(c)?),
        ProblemConfig::Game(c) => {
            let game = gen_game(c)?;
            let problem = game.composite();
            Instance::Game {
                game,
                problem,
                config: c.clone(),
            }
        }
    };
    let solver = resolve_solver(&cfg.solver, inst.problem())?;
    let v = Variant {
        name: format!("{:?}", cfg.solver)
            .split_whitespace()
            .next()
            .unwrap_or("solver")
            .to_lowercase(),
        solver,
        certificate: None,
    };
    let (x0, y0) = inst.start();
    run_variant(&inst, &v, &x0, &y0, cfg.run.max_iters, cfg.run.trace_every)
}
