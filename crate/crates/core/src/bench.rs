//! Test functions, Monte-Carlo error estimates and the experiment runner.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::PathBuf;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bases::{gauss_rule, Family, FeatureSpace, Measure1D, DEFAULT_CANDIDATES};
use crate::dimtree::{build_tree, RankTuple, TreeError, TreeKind};
use crate::hopca::{
    hopca_approximate_with, tensorize, BlackBox, BudgetPolicy, HopcaError, HopcaOptions,
    LocalRule,
};
use crate::interp::ProductInterpolator;
use crate::rng::tag;
use crate::tnet::{DenseTensor, TensorError, TreeTensor, DENSE_CAP};
use crate::RngStream;

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("unknown {what} `{name}`")]
    Unknown { what: &'static str, name: String },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("relative error undefined: the estimated norm of u is zero")]
    ZeroNorm,
    #[error(transparent)]
    Hopca(#[from] HopcaError),
    #[error(transparent)]
    Tree(#[from] TreeError),
    #[error(transparent)]
    Tensor(#[from] TensorError),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Bivariate {
    /// `Σ_{j≤3} y^j z^j`
    Poly4,
    /// `exp(-(y-z)²/8)`
    Gauss,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Univariate {
    Square,
    Sqrt,
}

fn default_sigma() -> f64 {
    0.2
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum TestFunction {
    HenonHeiles {
        #[serde(default = "default_sigma")]
        sigma: f64,
    },
    SineSum,
    SumBivariate { g: Bivariate },
    Borehole,
    Tensorized { f: Univariate },
}

/// Means and spreads of the two Gaussian borehole inputs, then the ranges of
/// the six uniform ones.
const BOREHOLE_GAUSS: [(f64, f64); 2] = [(0.1, 0.0161812), (7.71, 1.0056)];
const BOREHOLE_UNIFORM: [(f64, f64); 6] = [
    (63070.0, 115600.0),
    (990.0, 1110.0),
    (63.1, 116.0),
    (700.0, 820.0),
    (1120.0, 1680.0),
    (9855.0, 12045.0),
];

fn borehole(x: &[f64]) -> f64 {
    let mut y = [0.0; 8];
    for (k, (mean, spread)) in BOREHOLE_GAUSS.iter().enumerate() {
        y[k] = mean + spread * x[k];
    }
    for (k, (lo, hi)) in BOREHOLE_UNIFORM.iter().enumerate() {
        y[k + 2] = 0.5 * (lo + hi) + 0.5 * (hi - lo) * x[k + 2];
    }
    let l = y[1] - y[0].ln();
    2.0 * std::f64::consts::PI * y[2] * (y[3] - y[5])
        / (l * (1.0 + 2.0 * y[6] * y[2] / (l * y[0] * y[0] * y[7]) + y[2] / y[4]))
}

fn henon_heiles(x: &[f64], sigma: f64) -> f64 {
    let quad: f64 = x.iter().map(|v| v * v).sum::<f64>() / 2.0;
    let (mut cubic, mut quartic) = (0.0, 0.0);
    for w in x.windows(2) {
        cubic += w[0] * w[1] * w[1] - w[0].powi(3);
        quartic += (w[0] * w[0] + w[1] * w[1]).powi(2);
    }
    quad + sigma * cubic + sigma * sigma / 16.0 * quartic
}

fn bivariate(g: Bivariate, y: f64, z: f64) -> f64 {
    match g {
        Bivariate::Poly4 => (0..4).map(|j| (y * z).powi(j)).sum(),
        Bivariate::Gauss => (-(y - z).powi(2) / 8.0).exp(),
    }
}

impl TestFunction {
    pub fn parse(name: &str) -> Result<Self, BenchError> {
        Ok(match name {
            "henon_heiles" => TestFunction::HenonHeiles { sigma: 0.2 },
            "sine_sum" => TestFunction::SineSum,
            "sum_bivariate_poly4" => TestFunction::SumBivariate { g: Bivariate::Poly4 },
            "sum_bivariate_gauss" => TestFunction::SumBivariate { g: Bivariate::Gauss },
            "borehole" => TestFunction::Borehole,
            "tensorized_square" => TestFunction::Tensorized { f: Univariate::Square },
            "tensorized_sqrt" => TestFunction::Tensorized { f: Univariate::Sqrt },
            _ => {
                return Err(BenchError::Unknown {
                    what: "test function",
                    name: name.to_string(),
                })
            }
        })
    }

    fn check_d(&self, d: usize) -> Result<(), BenchError> {
        let bad = match self {
            TestFunction::Borehole => d != 8,
            TestFunction::SumBivariate { .. } => d < 2 || !d.is_multiple_of(2),
            TestFunction::Tensorized { .. } => d == 0 || d > 62,
            _ => d == 0,
        };
        if bad {
            return Err(BenchError::Config(format!("d = {d} is not valid for {self:?}")));
        }
        Ok(())
    }

    /// Measures of the inputs.
    pub fn measures(&self, d: usize) -> Vec<Measure1D> {
        let uniform = Measure1D::Uniform { a: -1.0, b: 1.0 };
        match self {
            TestFunction::HenonHeiles { .. } => vec![Measure1D::StdGaussian; d],
            TestFunction::Borehole => (0..d)
                .map(|k| if k < 2 { Measure1D::StdGaussian } else { uniform })
                .collect(),
            TestFunction::Tensorized { .. } => vec![Measure1D::FiniteUniform { m: 2 }; d],
            _ => vec![uniform; d],
        }
    }

    /// Polynomial spaces of degree `p` matched to the measures, or the
    /// canonical two-point spaces for tensorized functions (`p` unused).
    pub fn spaces(&self, d: usize, p: usize) -> Vec<FeatureSpace> {
        self.measures(d)
            .into_iter()
            .map(|m| match m {
                Measure1D::StdGaussian => FeatureSpace::hermite(p),
                Measure1D::FiniteUniform { m } => FeatureSpace::canonical(m).expect("m ≥ 1"),
                Measure1D::Uniform { .. } => FeatureSpace::legendre(p),
            })
            .collect()
    }
}

/// The black box of a test function in dimension `d`.
pub fn test_function(func: &TestFunction, d: usize) -> Result<BlackBox, BenchError> {
    func.check_d(d)?;
    let measures = func.measures(d);
    Ok(match *func {
        TestFunction::HenonHeiles { sigma } => BlackBox::new(measures, move |x| henon_heiles(x, sigma)),
        TestFunction::SineSum => BlackBox::new(measures, |x| x.iter().sum::<f64>().sin()),
        TestFunction::SumBivariate { g } => BlackBox::new(measures, move |x| {
            x.chunks(2).map(|p| bivariate(g, p[0], p[1])).sum()
        }),
        TestFunction::Borehole => BlackBox::new(measures, borehole),
        TestFunction::Tensorized { f: Univariate::Square } => tensorize(|t| t * t, d),
        TestFunction::Tensorized { f: Univariate::Sqrt } => tensorize(f64::sqrt, d),
    }
    .concurrent(true))
}

/// Monte-Carlo relative errors of `approx` against `u`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorEstimate {
    pub l2: f64,
    /// `max |u - u*| / max |u|` over the same samples.
    pub linf: f64,
}

/// Test points come from their own stream, and `u` is evaluated without
/// touching its counter.
pub fn mc_errors(
    u: &BlackBox,
    approx: &TreeTensor,
    samples: usize,
    seed: u64,
) -> Result<ErrorEstimate, BenchError> {
    const CHUNK: usize = 8192;
    let mut rng = RngStream::new(seed, &[tag("test")]);
    let (mut diff2, mut norm2, mut diff_max, mut norm_max) = (0.0, 0.0, 0.0f64, 0.0f64);
    let mut left = samples;
    while left > 0 {
        let n = left.min(CHUNK);
        left -= n;
        let pts = u.sample_points(n, &mut rng);
        let exact = u.eval_uncounted(&pts)?;
        let model = approx.eval(&pts)?;
        for (e, m) in exact.iter().zip(&model) {
            diff2 += (e - m) * (e - m);
            norm2 += e * e;
            diff_max = diff_max.max((e - m).abs());
            norm_max = norm_max.max(e.abs());
        }
    }
    if norm2 == 0.0 {
        return Err(BenchError::ZeroNorm);
    }
    Ok(ErrorEstimate {
        l2: (diff2 / norm2).sqrt(),
        linf: diff_max / norm_max,
    })
}

pub fn mc_relative_error(
    u: &BlackBox,
    approx: &TreeTensor,
    samples: usize,
    seed: u64,
) -> Result<f64, BenchError> {
    Ok(mc_errors(u, approx, samples, seed)?.l2)
}

/// Coefficients of the interpolant of `u` on a tensor grid of Gauss points
/// (the whole support for finite measures). Exact when `u` lies in the span.
pub fn interpolate_dense(u: &BlackBox, spaces: &[FeatureSpace]) -> Result<DenseTensor, BenchError> {
    let mut grids = Vec::with_capacity(spaces.len());
    let mut mats = Vec::with_capacity(spaces.len());
    for s in spaces {
        let pts: Vec<f64> = match (s.family(), s.measure()) {
            (Family::Canonical, _) => (0..s.dim()).map(|k| k as f64).collect(),
            (family, Measure1D::Uniform { a, b }) => gauss_rule(family, s.dim())
                .0
                .into_iter()
                .map(|t| 0.5 * (a + b) + 0.5 * (b - a) * t)
                .collect(),
            (family, _) => gauss_rule(family, s.dim()).0,
        };
        mats.push(s.eval(&pts).map_err(HopcaError::from)?);
        grids.push(pts);
    }
    let shape: Vec<usize> = spaces.iter().map(FeatureSpace::dim).collect();
    let total: usize = shape.iter().product();
    if total > DENSE_CAP {
        return Err(TensorError::CapExceeded(total, DENSE_CAP).into());
    }
    let mut points = Vec::with_capacity(total);
    let mut idx = vec![0usize; shape.len()];
    for _ in 0..total {
        points.push(idx.iter().zip(&grids).map(|(&i, g)| g[i]).collect::<Vec<f64>>());
        for k in (0..idx.len()).rev() {
            idx[k] += 1;
            if idx[k] < shape[k] {
                break;
            }
            idx[k] = 0;
        }
    }
    let values = nalgebra::DMatrix::from_vec(total, 1, u.eval_uncounted(&points)?);
    let coeffs = ProductInterpolator::new(&mats)
        .solve(&values)
        .map_err(|source| HopcaError::Interp {
            node: "D".into(),
            source,
        })?;
    Ok(DenseTensor::new(shape, coeffs.as_slice().to_vec()))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DegreeRule {
    /// `p(ε) = ⌈log₁₀(1/ε)⌉`
    Adaptive,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Degree {
    Fixed(usize),
    Rule(DegreeRule),
}

fn one() -> f64 {
    1.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum PolicyConfig {
    /// Uniform rank on every active node.
    Rank {
        rank: usize,
        #[serde(default = "one")]
        gamma: f64,
    },
    Tolerance {
        eps: f64,
        #[serde(default)]
        local_rule: LocalRule,
        #[serde(default = "one")]
        gamma: f64,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

fn default_runs() -> usize {
    10
}

fn default_mc() -> usize {
    100_000
}

fn default_candidates() -> usize {
    DEFAULT_CANDIDATES
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub function: TestFunction,
    pub tree: TreeKind,
    pub d: usize,
    /// Leaf polynomial degree; ignored for tensorized functions.
    #[serde(default)]
    pub degree: Option<Degree>,
    pub policy: PolicyConfig,
    #[serde(default = "default_runs")]
    pub runs: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_mc")]
    pub mc_samples: usize,
    #[serde(default = "default_candidates")]
    pub candidates: usize,
    #[serde(default)]
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub format: OutputFormat,
}

impl ExperimentConfig {
    pub fn new(function: TestFunction, tree: TreeKind, d: usize, degree: Option<Degree>, policy: PolicyConfig) -> Self {
        Self {
            function,
            tree,
            d,
            degree,
            policy,
            runs: default_runs(),
            seed: 0,
            mc_samples: default_mc(),
            candidates: DEFAULT_CANDIDATES,
            out: None,
            format: OutputFormat::Csv,
        }
    }

    pub fn validate(&self) -> Result<(), BenchError> {
        if self.runs == 0 {
            return Err(BenchError::Config("runs must be at least 1".into()));
        }
        if self.mc_samples < 1000 {
            return Err(BenchError::Config("mc_samples must be at least 1000".into()));
        }
        self.function.check_d(self.d)?;
        self.degree()?;
        Ok(())
    }

    /// The leaf degree after applying the degree rule.
    pub fn degree(&self) -> Result<usize, BenchError> {
        if matches!(self.function, TestFunction::Tensorized { .. }) {
            return Ok(1);
        }
        match (self.degree, &self.policy) {
            (Some(Degree::Fixed(p)), _) => Ok(p),
            (Some(Degree::Rule(DegreeRule::Adaptive)), PolicyConfig::Tolerance { eps, .. }) => {
                Ok(adaptive_degree(*eps))
            }
            (Some(Degree::Rule(_)), _) => Err(BenchError::Config(
                "the adaptive degree rule needs a tolerance policy".into(),
            )),
            (None, _) => Err(BenchError::Config("a leaf degree is required".into())),
        }
    }
}

/// `⌈log₁₀(1/ε)⌉`, at least 1.
pub fn adaptive_degree(eps: f64) -> usize {
    ((1.0 / eps).log10() - 1e-9).ceil().max(1.0) as usize
}

/// One row of an experiment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRow {
    pub run: usize,
    pub seed: u64,
    pub error_l2: Option<f64>,
    pub error_linf: Option<f64>,
    #[serde(rename = "M")]
    pub evaluations: Option<usize>,
    #[serde(rename = "S")]
    pub storage: Option<usize>,
    /// Ranks of the active nodes in canonical node order.
    pub ranks: Vec<usize>,
    pub failure: Option<String>,
}

impl RunRow {
    pub fn max_rank(&self) -> Option<usize> {
        self.ranks.iter().copied().max()
    }
}

/// Empirical 5% and 95% quantiles.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub error_l2: Option<Interval>,
    pub error_linf: Option<Interval>,
    #[serde(rename = "M")]
    pub evaluations: Option<Interval>,
    #[serde(rename = "S")]
    pub storage: Option<Interval>,
    pub max_rank: Option<Interval>,
    /// Rounded per-node mean of the ranks over successful runs.
    pub mean_ranks: Vec<usize>,
    pub failures: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub config: ExperimentConfig,
    /// Active nodes, 1-based, in the order used by the rank columns.
    pub nodes: Vec<String>,
    pub rows: Vec<RunRow>,
    pub summary: Summary,
}

/// Linear interpolation between order statistics.
pub fn quantile(values: &[f64], q: f64) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let pos = q.clamp(0.0, 1.0) * (v.len() - 1) as f64;
    let (i, frac) = (pos.floor() as usize, pos.fract());
    Some(if i + 1 < v.len() {
        v[i] + frac * (v[i + 1] - v[i])
    } else {
        v[i]
    })
}

fn interval(values: &[f64]) -> Option<Interval> {
    Some(Interval {
        lo: quantile(values, 0.05)?,
        hi: quantile(values, 0.95)?,
    })
}

fn policy_for(cfg: &ExperimentConfig, ranks: impl Fn(usize) -> RankTuple) -> BudgetPolicy {
    match cfg.policy {
        PolicyConfig::Rank { rank, gamma } => BudgetPolicy::PrescribedRank {
            ranks: ranks(rank),
            gamma,
        },
        PolicyConfig::Tolerance {
            eps,
            local_rule,
            gamma,
        } => BudgetPolicy::PrescribedTolerance {
            eps,
            local_rule,
            gamma,
        },
    }
}

/// One seeded run: approximation, then the error estimate on fresh samples.
pub fn run_once(cfg: &ExperimentConfig, run: usize) -> RunRow {
    let seed = cfg.seed.wrapping_add(run as u64);
    let mut row = RunRow {
        run,
        seed,
        error_l2: None,
        error_linf: None,
        evaluations: None,
        storage: None,
        ranks: Vec::new(),
        failure: None,
    };
    match try_run(cfg, seed, &mut row) {
        Ok(()) => row,
        Err(e) => {
            row.failure = Some(e.to_string());
            row
        }
    }
}

fn try_run(cfg: &ExperimentConfig, seed: u64, row: &mut RunRow) -> Result<(), BenchError> {
    cfg.validate()?;
    let u = test_function(&cfg.function, cfg.d)?;
    let (tree, active) = build_tree(cfg.tree, cfg.d)?;
    let spaces = cfg.function.spaces(cfg.d, cfg.degree()?);
    let policy = policy_for(cfg, |r| RankTuple::uniform(&tree, &active, r));
    let options = HopcaOptions {
        candidates: cfg.candidates,
    };
    let (tt, report) = hopca_approximate_with(&u, &tree, &active, &spaces, &policy, seed, &options)?;
    row.evaluations = Some(report.evaluations);
    row.storage = Some(report.storage);
    row.ranks = active
        .ids()
        .map(|id| report.ranks.get(tree.node(id)).expect("rank per active node"))
        .collect();
    let before = u.count();
    let err = mc_errors(&u, &tt, cfg.mc_samples, seed)?;
    debug_assert_eq!(before, u.count(), "test evaluations leaked into M");
    row.error_l2 = Some(err.l2);
    row.error_linf = Some(err.linf);
    Ok(())
}

/// All runs of an experiment with the aggregated quantiles. Runs execute in
/// parallel and are folded in run order.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunReport, BenchError> {
    cfg.validate()?;
    let (tree, active) = build_tree(cfg.tree, cfg.d)?;
    let nodes = active.ids().map(|id| tree.node(id).to_string()).collect();
    let rows: Vec<RunRow> = (0..cfg.runs).into_par_iter().map(|i| run_once(cfg, i)).collect();
    let ok: Vec<&RunRow> = rows.iter().filter(|r| r.failure.is_none()).collect();
    let collect = |f: &dyn Fn(&RunRow) -> Option<f64>| -> Vec<f64> { ok.iter().filter_map(|r| f(r)).collect() };
    let mean_ranks = if ok.is_empty() {
        Vec::new()
    } else {
        (0..ok[0].ranks.len())
            .map(|k| {
                let s: usize = ok.iter().map(|r| r.ranks[k]).sum();
                (s as f64 / ok.len() as f64).round() as usize
            })
            .collect()
    };
    let summary = Summary {
        error_l2: interval(&collect(&|r| r.error_l2)),
        error_linf: interval(&collect(&|r| r.error_linf)),
        evaluations: interval(&collect(&|r| r.evaluations.map(|v| v as f64))),
        storage: interval(&collect(&|r| r.storage.map(|v| v as f64))),
        max_rank: interval(&collect(&|r| r.max_rank().map(|v| v as f64))),
        mean_ranks,
        failures: rows.len() - ok.len(),
    };
    Ok(RunReport {
        config: cfg.clone(),
        nodes,
        rows,
        summary,
    })
}

fn opt<T: std::fmt::Display>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn opt_e(v: Option<f64>) -> String {
    v.map(|x| format!("{x:e}")).unwrap_or_default()
}

impl RunReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("run,seed,error_l2,error_linf,M,S,ranks,status\n");
        for r in &self.rows {
            let ranks: Vec<String> = r.ranks.iter().map(usize::to_string).collect();
            let status = r
                .failure
                .as_deref()
                .map(|f| format!("\"failed: {}\"", f.replace('"', "'")))
                .unwrap_or_else(|| "ok".into());
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{}",
                r.run,
                r.seed,
                opt_e(r.error_l2),
                opt_e(r.error_linf),
                opt(r.evaluations),
                opt(r.storage),
                ranks.join(";"),
                status
            );
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("serializable report")
    }

    pub fn render(&self, format: OutputFormat) -> String {
        match format {
            OutputFormat::Csv => self.to_csv(),
            OutputFormat::Json => self.to_json(),
        }
    }

    /// One human-readable line with the intervals.
    pub fn summary_line(&self) -> String {
        let s = &self.summary;
        let iv = |i: Option<Interval>, sci: bool| match i {
            Some(Interval { lo, hi }) if sci => format!("[{lo:.2e}; {hi:.2e}]"),
            Some(Interval { lo, hi }) => format!("[{lo:.0}; {hi:.0}]"),
            None => "-".into(),
        };
        format!(
            "err {} linf {} M {} S {} max rank {} failed {}",
            iv(s.error_l2, true),
            iv(s.error_linf, true),
            iv(s.evaluations, false),
            iv(s.storage, false),
            iv(s.max_rank, false),
            s.failures
        )
    }
}

fn cfg(function: TestFunction, tree: TreeKind, d: usize, degree: Option<Degree>, policy: PolicyConfig) -> ExperimentConfig {
    ExperimentConfig::new(function, tree, d, degree, policy)
}

fn tol(eps: f64, gamma: f64) -> PolicyConfig {
    PolicyConfig::Tolerance {
        eps,
        local_rule: LocalRule::Eps,
        gamma,
    }
}

fn eps_sweep() -> impl Iterator<Item = f64> {
    (1..=10).map(|k| 10f64.powi(-k))
}

/// Names accepted by [`table`].
pub const TABLES: [&str; 10] = [
    "henon-heiles",
    "sine-sum-rank",
    "sine-sum-tolerance",
    "sum-bivariate-poly",
    "sum-bivariate-gauss",
    "sum-bivariate-gauss-adaptive",
    "borehole-rank",
    "borehole-tolerance",
    "tensorized-square",
    "tensorized-sqrt",
];

/// The configurations behind a named results table, each with a row label.
pub fn table(name: &str) -> Result<Vec<(String, ExperimentConfig)>, BenchError> {
    use TestFunction::*;
    let fixed = |p| Some(Degree::Fixed(p));
    let adaptive = Some(Degree::Rule(DegreeRule::Adaptive));
    let rank = |rank, gamma| PolicyConfig::Rank { rank, gamma };
    let mut out = Vec::new();
    match name {
        "henon-heiles" => {
            for gamma in [1.0, 10.0] {
                for d in [5, 10, 20, 50, 100] {
                    let c = cfg(HenonHeiles { sigma: 0.2 }, TreeKind::Tt, d, fixed(4), rank(3, gamma));
                    out.push((format!("gamma={gamma} d={d}"), c));
                }
            }
        }
        "sine-sum-rank" => {
            for d in [10, 20, 50] {
                for p in (3..=17).step_by(2) {
                    out.push((format!("d={d} p={p}"), cfg(SineSum, TreeKind::Ttt, d, fixed(p), rank(2, 1.0))));
                }
            }
        }
        "sine-sum-tolerance" => {
            for d in [10, 20, 50] {
                out.push((format!("d={d}"), cfg(SineSum, TreeKind::Ttt, d, fixed(17), tol(1e-12, 1.0))));
            }
        }
        "sum-bivariate-poly" => {
            for gamma in [1.0, 10.0] {
                for eps in eps_sweep().take(4) {
                    let f = SumBivariate { g: Bivariate::Poly4 };
                    out.push((format!("gamma={gamma} eps={eps:e}"), cfg(f, TreeKind::Ttt, 10, fixed(5), tol(eps, gamma))));
                }
            }
        }
        "sum-bivariate-gauss" | "sum-bivariate-gauss-adaptive" => {
            let degree = if name.ends_with("adaptive") { adaptive } else { fixed(10) };
            for eps in eps_sweep() {
                let f = SumBivariate { g: Bivariate::Gauss };
                out.push((format!("eps={eps:e}"), cfg(f, TreeKind::Ttt, 10, degree, tol(eps, 1.0))));
            }
        }
        "borehole-rank" => {
            for gamma in [1.0, 100.0] {
                for r in 1..=10 {
                    out.push((format!("gamma={gamma} r={r}"), cfg(Borehole, TreeKind::Ttt, 8, fixed(10), rank(r, gamma))));
                }
            }
        }
        "borehole-tolerance" => {
            for eps in eps_sweep() {
                out.push((format!("eps={eps:e}"), cfg(Borehole, TreeKind::Ttt, 8, adaptive, tol(eps, 1.0))));
            }
        }
        "tensorized-square" | "tensorized-sqrt" => {
            let f = if name.ends_with("square") { Univariate::Square } else { Univariate::Sqrt };
            for eps in eps_sweep() {
                let policy = PolicyConfig::Tolerance {
                    eps,
                    local_rule: LocalRule::EpsOverSqrtA,
                    gamma: 1.0,
                };
                out.push((format!("eps={eps:e}"), cfg(Tensorized { f }, TreeKind::Tt, 40, None, policy)));
            }
        }
        _ => {
            return Err(BenchError::Unknown {
                what: "table",
                name: name.to_string(),
            })
        }
    }
    Ok(out)
}

/// Per-table file stem for row `index`.
pub fn output_name(table: &str, index: usize) -> String {
    format!("{table}-{index:02}")
}

/// Ranks keyed by node text, for reports.
pub fn ranks_by_node(report: &RunReport, row: &RunRow) -> BTreeMap<String, usize> {
    report.nodes.iter().cloned().zip(row.ranks.iter().copied()).collect()
}
