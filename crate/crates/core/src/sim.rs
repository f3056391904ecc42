//! Coverage simulation study: a single uniform covariate on [−10, 10], linear
//! or nonlinear mean, equal or unequal variance, scored by slope bias, mean
//! interval width, and empirical coverage.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classic::{cov_model_based, cov_sandwich_hc0, fit_ols, FitResult};
use crate::continuous::{fit_spline_chain, posterior_beta_continuous, ContinuousConfig};
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::mcmc::McmcConfig;
use crate::stochastics::RngStream;
use crate::summary::{Estimator, XMode};

pub const X_LOWER: f64 = -10.0;
pub const X_UPPER: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MeanShape {
    Linear,
    Nonlinear,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum VarianceShape {
    Equal,
    Unequal,
}

impl MeanShape {
    /// `2 + 3.5x` or `2 + 3.5x(1 + |cos(x/2 − 2)|)`.
    pub fn eval(self, x: f64) -> f64 {
        match self {
            MeanShape::Linear => 2.0 + 3.5 * x,
            MeanShape::Nonlinear => 2.0 + 3.5 * x * (1.0 + (x / 2.0 - 2.0).cos().abs()),
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            MeanShape::Linear => "Linear",
            MeanShape::Nonlinear => "Nonlinear",
        }
    }
}

impl VarianceShape {
    /// Noise scale function: `5` or `5 + x²/5`.
    ///
    /// The published interval widths (e.g. 0.170 model-based for the linear,
    /// equal-variance case at n = 400) are only reproduced when these
    /// functions are used as the noise standard deviation, so that is how
    /// they enter the generator.
    pub fn scale(self, x: f64) -> f64 {
        match self {
            VarianceShape::Equal => 5.0,
            VarianceShape::Unequal => 5.0 + x * x / 5.0,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            VarianceShape::Equal => "Equal",
            VarianceShape::Unequal => "Unequal",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub mean: MeanShape,
    pub variance: VarianceShape,
    pub n: usize,
    pub x_mode: XMode,
}

impl ScenarioSpec {
    pub fn new(mean: MeanShape, variance: VarianceShape, n: usize, x_mode: XMode) -> Result<Self> {
        if n < 50 {
            return Err(Error::InvalidParameter(format!(
                "scenario n = {n}; at least 50 required"
            )));
        }
        Ok(Self {
            mean,
            variance,
            n,
            x_mode,
        })
    }
}

/// Draws `x ~ U[−10, 10]` i.i.d. and the outcome on top of it.
pub fn gen_dataset(rng: &mut RngStream, spec: &ScenarioSpec) -> Result<Dataset> {
    let x: Vec<f64> = (0..spec.n)
        .map(|_| X_LOWER + (X_UPPER - X_LOWER) * rng.uniform())
        .collect();
    gen_dataset_on_design(rng, spec, &x)
}

/// Outcome `y = f(x) + s(x)·ε`, ε ~ N(0, 1), on a given design.
pub fn gen_dataset_on_design(
    rng: &mut RngStream,
    spec: &ScenarioSpec,
    x: &[f64],
) -> Result<Dataset> {
    let y: Vec<f64> = x
        .iter()
        .map(|&v| spec.mean.eval(v) + spec.variance.scale(v) * rng.std_normal())
        .collect();
    Dataset::with_intercept(&[("x", x)], &y)
}

fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    #[allow(clippy::too_many_arguments)]
    fn recurse<F: Fn(f64) -> f64>(
        f: &F,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let diff = left + right - whole;
        if depth == 0 || diff.abs() <= 15.0 * tol {
            left + right + diff / 15.0
        } else {
            recurse(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)
                + recurse(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
        }
    }
    let (fa, fb, fm) = (f(a), f(b), f(0.5 * (a + b)));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    recurse(f, a, b, fa, fm, fb, whole, tol, 50)
}

/// `argmin_α ∫ (f(u) − α₀ − α₁u)² du/20` over `u ∈ [−10, 10]`, as
/// (intercept, slope).
pub fn population_beta(mean: MeanShape) -> [f64; 2] {
    if mean == MeanShape::Linear {
        return [2.0, 3.5];
    }
    let width = X_UPPER - X_LOWER;
    let moment = |g: &dyn Fn(f64) -> f64| adaptive_simpson(&g, X_LOWER, X_UPPER, 1e-12) / width;
    let ex = moment(&|u| u);
    let exx = moment(&|u| u * u);
    let ef = moment(&|u| mean.eval(u));
    let exf = moment(&|u| u * mean.eval(u));
    let slope = (exf - ex * ef) / (exx - ex * ex);
    [ef - slope * ex, slope]
}

/// Least-squares line through the true means at the realized design.
pub fn fixed_beta(mean: MeanShape, x: &[f64]) -> [f64; 2] {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let f: Vec<f64> = x.iter().map(|&v| mean.eval(v)).collect();
    let mf = f.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    let sxf: f64 = x.iter().zip(&f).map(|(v, fv)| (v - mx) * (fv - mf)).sum();
    let slope = sxf / sxx;
    [mf - slope * mx, slope]
}

/// Slope target: the population functional under random X, the realized
/// design's functional under fixed X.
pub fn true_beta(spec: &ScenarioSpec, design: &[f64]) -> f64 {
    match spec.x_mode {
        XMode::Random => population_beta(spec.mean)[1],
        XMode::Fixed => fixed_beta(spec.mean, design)[1],
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SimMethod {
    ModelBased,
    Sandwich,
    BayesRobust,
}

impl SimMethod {
    pub fn label(self) -> &'static str {
        match self {
            SimMethod::ModelBased => "Model based",
            SimMethod::Sandwich => "Sandwich",
            SimMethod::BayesRobust => "Bayes robust",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyConfig {
    pub scenarios: Vec<(MeanShape, VarianceShape)>,
    pub sample_sizes: Vec<usize>,
    pub x_modes: Vec<XMode>,
    pub methods: Vec<SimMethod>,
    /// Replicates for the closed-form methods.
    pub replicates: usize,
    /// Replicates for the spline-MCMC method (the first ones of each cell).
    pub bayes_replicates: usize,
    pub spline: ContinuousConfig,
    /// Reuse one covariate design for every replicate of a cell instead of
    /// redrawing it.
    pub reuse_design: bool,
    /// Keep per-replicate records in the report.
    pub detail: bool,
}

fn all_scenarios() -> Vec<(MeanShape, VarianceShape)> {
    vec![
        (MeanShape::Linear, VarianceShape::Equal),
        (MeanShape::Linear, VarianceShape::Unequal),
        (MeanShape::Nonlinear, VarianceShape::Equal),
        (MeanShape::Nonlinear, VarianceShape::Unequal),
    ]
}

impl StudyConfig {
    fn desk(x_modes: Vec<XMode>) -> Self {
        Self {
            scenarios: all_scenarios(),
            sample_sizes: vec![400],
            x_modes,
            methods: vec![
                SimMethod::ModelBased,
                SimMethod::Sandwich,
                SimMethod::BayesRobust,
            ],
            replicates: 500,
            bayes_replicates: 200,
            spline: ContinuousConfig {
                knots: 20,
                range: Some((X_LOWER, X_UPPER)),
                mcmc: McmcConfig::default(),
            },
            reuse_design: false,
            detail: false,
        }
    }

    /// Random-X table at desk scale.
    pub fn table1_desk() -> Self {
        Self::desk(vec![XMode::Random])
    }

    /// Fixed-X table at desk scale.
    pub fn table2_desk() -> Self {
        Self::desk(vec![XMode::Fixed])
    }

    /// Both tables from shared replicates and chains.
    pub fn tables_desk() -> Self {
        Self::desk(vec![XMode::Random, XMode::Fixed])
    }

    /// 1000 replicates for every method at n = 400 and 800.
    pub fn full_scale() -> Self {
        Self {
            sample_sizes: vec![400, 800],
            replicates: 1000,
            bayes_replicates: 1000,
            ..Self::desk(vec![XMode::Random, XMode::Fixed])
        }
    }
}

/// Aggregated metrics for one (scenario, n, x-mode, method) cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub mean: MeanShape,
    pub variance: VarianceShape,
    pub n: usize,
    pub x_mode: XMode,
    pub method: SimMethod,
    /// Successful replicates entering the metrics.
    pub replicates: usize,
    pub failures: usize,
    pub bias: f64,
    pub width: f64,
    pub coverage: f64,
    /// `√(coverage(1 − coverage)/R)`.
    pub coverage_mc_se: f64,
    pub intercept_bias: f64,
    pub intercept_width: f64,
    pub intercept_coverage: f64,
}

/// One estimator fit on one replicate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicateRecord {
    pub mean: MeanShape,
    pub variance: VarianceShape,
    pub n: usize,
    pub x_mode: XMode,
    pub method: SimMethod,
    pub replicate: usize,
    /// (intercept, slope) target.
    pub target: [f64; 2],
    pub estimate: Option<[f64; 2]>,
    pub ci_low: Option<[f64; 2]>,
    pub ci_high: Option<[f64; 2]>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationReport {
    pub master_seed: u64,
    pub config: StudyConfig,
    pub rows: Vec<ReportRow>,
    pub warnings: Vec<String>,
    pub detail: Option<Vec<ReplicateRecord>>,
}

fn cell_stream(master_seed: u64, mean: MeanShape, variance: VarianceShape, n: usize) -> RngStream {
    let code = ((mean as u64) << 48) | ((variance as u64) << 40) | n as u64;
    RngStream::new(master_seed, 0).substream(code)
}

struct Job {
    mean: MeanShape,
    variance: VarianceShape,
    n: usize,
    replicate: usize,
}

fn pair(v: &[f64]) -> [f64; 2] {
    [v[0], v[1]]
}

fn run_replicate(job: &Job, config: &StudyConfig, master_seed: u64) -> Vec<ReplicateRecord> {
    let cell = cell_stream(master_seed, job.mean, job.variance, job.n);
    let rng = cell.substream(job.replicate as u64);
    let spec = ScenarioSpec {
        mean: job.mean,
        variance: job.variance,
        n: job.n,
        x_mode: XMode::Random,
    };
    let mut data_rng = rng.substream(0);
    let generated = if config.reuse_design {
        let mut design_rng = cell.substream(u64::MAX);
        let x: Vec<f64> = (0..job.n)
            .map(|_| X_LOWER + (X_UPPER - X_LOWER) * design_rng.uniform())
            .collect();
        gen_dataset_on_design(&mut data_rng, &spec, &x)
    } else {
        gen_dataset(&mut data_rng, &spec)
    };

    let mut records = Vec::new();
    let record = |x_mode: XMode,
                  method: SimMethod,
                  target: [f64; 2],
                  outcome: Result<([f64; 2], [f64; 2], [f64; 2])>| {
        let (estimate, ci_low, ci_high, error) = match outcome {
            Ok((e, l, h)) => (Some(e), Some(l), Some(h), None),
            Err(err) => (None, None, None, Some(err.to_string())),
        };
        ReplicateRecord {
            mean: job.mean,
            variance: job.variance,
            n: job.n,
            x_mode,
            method,
            replicate: job.replicate,
            target,
            estimate,
            ci_low,
            ci_high,
            error,
        }
    };

    let data = match generated {
        Ok(d) => d,
        Err(err) => {
            for &x_mode in &config.x_modes {
                for &method in &config.methods {
                    records.push(record(x_mode, method, [f64::NAN; 2], Err(err.clone())));
                }
            }
            return records;
        }
    };
    let x: Vec<f64> = data.x.column(1).iter().copied().collect();
    let targets: Vec<(XMode, [f64; 2])> = config
        .x_modes
        .iter()
        .map(|&m| {
            let t = match m {
                XMode::Random => population_beta(job.mean),
                XMode::Fixed => fixed_beta(job.mean, &x),
            };
            (m, t)
        })
        .collect();

    let classic = |method: SimMethod| -> Result<([f64; 2], [f64; 2], [f64; 2])> {
        let beta = fit_ols(&data)?;
        let (cov, tag) = match method {
            SimMethod::ModelBased => (cov_model_based(&data, &beta)?, Estimator::ModelBased),
            _ => (cov_sandwich_hc0(&data, &beta)?, Estimator::Sandwich),
        };
        let fit = FitResult::new(tag, &beta, &cov)?;
        Ok((pair(&fit.beta), pair(&fit.ci_low), pair(&fit.ci_high)))
    };

    let run_bayes =
        config.methods.contains(&SimMethod::BayesRobust) && job.replicate < config.bayes_replicates;
    let chain = if run_bayes {
        Some(fit_spline_chain(&data, &config.spline, &rng.substream(1)))
    } else {
        None
    };

    for (mode_idx, &(x_mode, target)) in targets.iter().enumerate() {
        for &method in &config.methods {
            match method {
                SimMethod::ModelBased | SimMethod::Sandwich => {
                    if job.replicate < config.replicates {
                        records.push(record(x_mode, method, target, classic(method)));
                    }
                }
                SimMethod::BayesRobust => {
                    if let Some(chain) = &chain {
                        let outcome = chain.as_ref().map_err(Clone::clone).and_then(|chain| {
                            let mut beta_rng = rng.substream(2 + mode_idx as u64);
                            let s = posterior_beta_continuous(&data, chain, x_mode, &mut beta_rng)?;
                            Ok((pair(&s.beta_hat), pair(&s.ci_low), pair(&s.ci_high)))
                        });
                        records.push(record(x_mode, method, target, outcome));
                    }
                }
            }
        }
    }
    records
}

fn aggregate(records: &[&ReplicateRecord]) -> (usize, usize, [f64; 3], [f64; 3]) {
    let ok: Vec<&&ReplicateRecord> = records.iter().filter(|r| r.error.is_none()).collect();
    let failures = records.len() - ok.len();
    let k = ok.len() as f64;
    let metric = |j: usize| -> [f64; 3] {
        if ok.is_empty() {
            return [f64::NAN; 3];
        }
        let mut bias = 0.0;
        let mut width = 0.0;
        let mut hits = 0usize;
        for r in &ok {
            let (e, lo, hi) = (r.estimate.unwrap(), r.ci_low.unwrap(), r.ci_high.unwrap());
            bias += e[j] - r.target[j];
            width += hi[j] - lo[j];
            hits += usize::from(lo[j] <= r.target[j] && r.target[j] <= hi[j]);
        }
        [bias / k, width / k, hits as f64 / k]
    };
    (ok.len(), failures, metric(1), metric(0))
}

/// Runs every (scenario × n × x-mode × method) cell. Replicates run in
/// parallel on per-replicate streams; results are assembled in index order
/// so the report does not depend on scheduling.
pub fn run_study(config: &StudyConfig, master_seed: u64) -> Result<SimulationReport> {
    for &n in &config.sample_sizes {
        if n < 50 {
            return Err(Error::InvalidParameter(format!(
                "scenario n = {n}; at least 50 required"
            )));
        }
    }
    let total = if config.methods.iter().any(|m| *m != SimMethod::BayesRobust) {
        config
            .replicates
            .max(if config.methods.contains(&SimMethod::BayesRobust) {
                config.bayes_replicates
            } else {
                0
            })
    } else {
        config.bayes_replicates
    };
    let jobs: Vec<Job> = config
        .scenarios
        .iter()
        .flat_map(|&(mean, variance)| {
            config.sample_sizes.iter().flat_map(move |&n| {
                (0..total).map(move |replicate| Job {
                    mean,
                    variance,
                    n,
                    replicate,
                })
            })
        })
        .collect();
    let records: Vec<Vec<ReplicateRecord>> = jobs
        .par_iter()
        .map(|job| run_replicate(job, config, master_seed))
        .collect();
    let records: Vec<ReplicateRecord> = records.into_iter().flatten().collect();

    let mut rows = Vec::new();
    let mut warnings = Vec::new();
    if total > 0 {
        for &(mean, variance) in &config.scenarios {
            for &n in &config.sample_sizes {
                for &x_mode in &config.x_modes {
                    for &method in &config.methods {
                        let cell: Vec<&ReplicateRecord> = records
                            .iter()
                            .filter(|r| {
                                r.mean == mean
                                    && r.variance == variance
                                    && r.n == n
                                    && r.x_mode == x_mode
                                    && r.method == method
                            })
                            .collect();
                        if cell.is_empty() {
                            continue;
                        }
                        let (ok, failures, slope, intercept) = aggregate(&cell);
                        if failures > 0 {
                            let first = cell
                                .iter()
                                .find_map(|r| r.error.clone())
                                .unwrap_or_default();
                            warnings.push(format!(
                                "{} / {} / n={n} / {} / {}: {failures} of {} replicates failed and were excluded (first error: {first})",
                                mean.label(),
                                variance.label(),
                                x_mode.label(),
                                method.label(),
                                cell.len()
                            ));
                        }
                        if failures * 100 > cell.len() {
                            return Err(Error::TooManyFailures {
                                failed: failures,
                                total: cell.len(),
                            });
                        }
                        let coverage = slope[2];
                        rows.push(ReportRow {
                            mean,
                            variance,
                            n,
                            x_mode,
                            method,
                            replicates: ok,
                            failures,
                            bias: slope[0],
                            width: slope[1],
                            coverage,
                            coverage_mc_se: (coverage * (1.0 - coverage) / ok as f64).sqrt(),
                            intercept_bias: intercept[0],
                            intercept_width: intercept[1],
                            intercept_coverage: intercept[2],
                        });
                    }
                }
            }
        }
    }
    Ok(SimulationReport {
        master_seed,
        config: config.clone(),
        rows,
        warnings,
        detail: config.detail.then_some(records),
    })
}

impl SimulationReport {
    pub fn row(
        &self,
        mean: MeanShape,
        variance: VarianceShape,
        n: usize,
        x_mode: XMode,
        method: SimMethod,
    ) -> Option<&ReportRow> {
        self.rows.iter().find(|r| {
            r.mean == mean
                && r.variance == variance
                && r.n == n
                && r.x_mode == x_mode
                && r.method == method
        })
    }

    /// Aligned text table: one block per x-mode, Bias / Width / Coverage per
    /// sample size.
    pub fn render_table(&self) -> String {
        let mut out = String::new();
        let sizes = &self.config.sample_sizes;
        for &x_mode in &self.config.x_modes {
            if !self.rows.iter().any(|r| r.x_mode == x_mode) {
                continue;
            }
            let _ = writeln!(
                out,
                "Frequentist properties of slope estimates ({})",
                x_mode.label()
            );
            let mut sizes_line = format!("{:<34}", "");
            let mut header = format!("{:<10} {:<9} {:<13}", "Mean", "Variance", "Method");
            for n in sizes {
                let _ = write!(sizes_line, " | {:^30}", format!("n = {n}"));
                let _ = write!(
                    header,
                    " | {:>7} {:>7} {:>8} {:>5}",
                    "Bias", "Width", "Coverage", "R"
                );
            }
            let _ = writeln!(out, "{}", sizes_line.trim_end());
            let _ = writeln!(out, "{header}");
            for &(mean, variance) in &self.config.scenarios {
                for &method in &self.config.methods {
                    let mut line = format!(
                        "{:<10} {:<9} {:<13}",
                        mean.label(),
                        variance.label(),
                        method.label()
                    );
                    let mut any = false;
                    for &n in sizes {
                        match self.row(mean, variance, n, x_mode, method) {
                            Some(r) => {
                                any = true;
                                let _ = write!(
                                    line,
                                    " | {:>7.3} {:>7.3} {:>8.3} {:>5}",
                                    r.bias, r.width, r.coverage, r.replicates
                                );
                            }
                            None => {
                                let _ =
                                    write!(line, " | {:>7} {:>7} {:>8} {:>5}", "-", "-", "-", 0);
                            }
                        }
                    }
                    if any {
                        let _ = writeln!(out, "{line}");
                    }
                }
            }
            out.push('\n');
        }
        for w in &self.warnings {
            let _ = writeln!(out, "warning: {w}");
        }
        out
    }

    /// Plot-ready CSV of the aggregated rows.
    pub fn render_csv(&self) -> String {
        let mut out = String::from(
            "mean,variance,n,x_mode,method,replicates,failures,bias,width,coverage,coverage_mc_se\n",
        );
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{},{}",
                r.mean.label().to_lowercase(),
                r.variance.label().to_lowercase(),
                r.n,
                match r.x_mode {
                    XMode::Random => "random",
                    XMode::Fixed => "fixed",
                },
                match r.method {
                    SimMethod::ModelBased => "model-based",
                    SimMethod::Sandwich => "sandwich",
                    SimMethod::BayesRobust => "bayes-robust",
                },
                r.replicates,
                r.failures,
                r.bias,
                r.width,
                r.coverage,
                r.coverage_mc_se
            );
        }
        out
    }
}
