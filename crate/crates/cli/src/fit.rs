//! The `fit` command.

use std::fmt::Write as _;
use std::path::PathBuf;

use clap::ValueEnum;
use robreg::discrete::MIN_GROUP_SIZE;
use robreg::mcmc::split_rhat;
use robreg::{
    fit_classic, fit_spline_chain, posterior_beta_continuous, posterior_beta_fixed_x_closed,
    posterior_beta_fixed_x_mc, posterior_beta_random_x, ContinuousConfig, Dataset, Estimator,
    FitResult, GroupedData, McmcConfig, PosteriorSummary, RngStream, XMode,
};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};
use crate::input::load_csv;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MethodChoice {
    ModelBased,
    Sandwich,
    /// Sandwich with per-group variances; discrete covariates only.
    SandwichGroups,
    /// Bayes robust in the configured x-mode.
    Bayes,
    BayesRandom,
    BayesFixed,
    /// Monte Carlo version of the discrete fixed-X posterior.
    BayesFixedMc,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CovariateKind {
    /// Saturated model over the observed covariate values.
    Discrete,
    /// Spline model for a single covariate.
    Continuous,
}

/// What to do with covariate values seen fewer than four times.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MinGroupPolicy {
    Error,
    Drop,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FitFormat {
    Table,
    Json,
}

#[derive(Debug, Clone)]
pub struct FitConfig {
    pub input: PathBuf,
    pub outcome: String,
    pub covariates: Vec<String>,
    pub methods: Vec<MethodChoice>,
    pub x_mode: XMode,
    pub kind: CovariateKind,
    pub seed: u64,
    pub draws: usize,
    pub mcmc: McmcConfig,
    pub knots: usize,
    pub min_group: MinGroupPolicy,
    pub round_x: Option<u32>,
    pub chain_out: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientRow {
    pub name: String,
    pub estimate: f64,
    pub sd: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodResult {
    pub method: String,
    pub estimator: Estimator,
    pub coefficients: Vec<CoefficientRow>,
    pub n_draws: Option<usize>,
    /// Monte Carlo standard error of each posterior SD.
    pub mc_se_sd: Option<Vec<f64>>,
    pub rejected_draws: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub input: String,
    pub outcome: String,
    pub kind: CovariateKind,
    pub seed: u64,
    pub n: usize,
    pub n_groups: Option<usize>,
    pub dropped_rows: usize,
    pub methods: Vec<MethodResult>,
    pub warnings: Vec<String>,
}

impl MethodResult {
    fn from_classic(fit: &FitResult, names: &[String]) -> Self {
        Self {
            method: fit.method.label().to_string(),
            estimator: fit.method,
            coefficients: rows(names, &fit.beta, &fit.se, &fit.ci_low, &fit.ci_high),
            n_draws: None,
            mc_se_sd: None,
            rejected_draws: 0,
        }
    }

    fn from_posterior(s: &PosteriorSummary, names: &[String]) -> Self {
        Self {
            method: s.method.label().to_string(),
            estimator: s.method,
            coefficients: rows(names, &s.beta_hat, &s.sd, &s.ci_low, &s.ci_high),
            n_draws: (s.n_draws > 0).then_some(s.n_draws),
            mc_se_sd: s.mc_se_sd.clone(),
            rejected_draws: s.rejected_draws,
        }
    }
}

fn rows(names: &[String], est: &[f64], sd: &[f64], lo: &[f64], hi: &[f64]) -> Vec<CoefficientRow> {
    (0..names.len())
        .map(|j| CoefficientRow {
            name: names[j].clone(),
            estimate: est[j],
            sd: sd[j],
            ci_low: lo[j],
            ci_high: hi[j],
        })
        .collect()
}

/// Keeps the rows whose covariate group has at least `min` members.
fn drop_sparse_rows(data: &Dataset, grouped: &GroupedData, min: u64) -> CliResult<Dataset> {
    let keep: Vec<usize> = (0..data.n())
        .filter(|&i| grouped.counts[grouped.row_index[i]] >= min)
        .collect();
    Ok(Dataset::new(
        data.x.select_rows(&keep),
        data.y.select_rows(&keep),
        data.column_names.clone(),
    )?)
}

fn resolve(method: MethodChoice, x_mode: XMode) -> MethodChoice {
    match (method, x_mode) {
        (MethodChoice::Bayes, XMode::Random) => MethodChoice::BayesRandom,
        (MethodChoice::Bayes, XMode::Fixed) => MethodChoice::BayesFixed,
        (m, _) => m,
    }
}

pub fn cmd_fit(config: &FitConfig) -> CliResult<FitReport> {
    if config.covariates.is_empty() {
        return Err(CliError::Config(
            "at least one covariate is required".into(),
        ));
    }
    if config.methods.is_empty() {
        return Err(CliError::Config("no methods requested".into()));
    }
    let loaded = load_csv(&config.input, &config.outcome, &config.covariates)?;
    let mut warnings = loaded.warnings;
    let mut data = match config.round_x {
        Some(d) => loaded.data.round_covariates(d),
        None => loaded.data,
    };
    let mut methods: Vec<MethodChoice> = Vec::new();
    for m in &config.methods {
        let m = resolve(*m, config.x_mode);
        if !methods.contains(&m) {
            methods.push(m);
        }
    }
    let rng = RngStream::new(config.seed, 0);

    let mut grouped = None;
    if config.kind == CovariateKind::Discrete {
        let g = GroupedData::from_dataset(&data)?;
        if config.min_group == MinGroupPolicy::Drop && g.counts.iter().any(|&c| c < MIN_GROUP_SIZE)
        {
            let (kept, dropped) = g.drop_small_groups(MIN_GROUP_SIZE)?;
            let rows: u64 = dropped.iter().map(|d| d.count).sum();
            let labels: Vec<String> = dropped
                .iter()
                .map(|d| format!("{} (n={})", d.label, d.count))
                .collect();
            warnings.push(format!(
                "dropped {} covariate group{} with fewer than {MIN_GROUP_SIZE} rows ({rows} rows): {}",
                dropped.len(),
                if dropped.len() == 1 { "" } else { "s" },
                labels.join(", ")
            ));
            data = drop_sparse_rows(&data, &g, MIN_GROUP_SIZE)?;
            grouped = Some(kept);
        } else {
            grouped = Some(g);
        }
    } else if methods.contains(&MethodChoice::SandwichGroups)
        || methods.contains(&MethodChoice::BayesFixedMc)
    {
        return Err(CliError::Config(
            "sandwich-groups and bayes-fixed-mc need --kind discrete".into(),
        ));
    }

    let names = data.column_names.clone();
    let mut chain = None;
    let needs_chain = config.kind == CovariateKind::Continuous
        && methods
            .iter()
            .any(|m| matches!(m, MethodChoice::BayesRandom | MethodChoice::BayesFixed));
    if needs_chain {
        let cfg = ContinuousConfig {
            knots: config.knots,
            range: None,
            mcmc: config.mcmc,
        };
        let fitted = fit_spline_chain(&data, &cfg, &rng.substream(3))?;
        let slope: Vec<f64> = fitted.mean_draws.iter().map(|d| d[1]).collect();
        let rhat = split_rhat(&slope);
        if rhat > 1.05 {
            warnings.push(format!(
                "slope chain split R-hat {rhat:.3} exceeds 1.05; consider more iterations"
            ));
        }
        if let Some(path) = &config.chain_out {
            let file = std::fs::File::create(path)
                .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
            fitted.write_csv(std::io::BufWriter::new(file))?;
        }
        chain = Some(fitted);
    } else if config.chain_out.is_some() {
        warnings.push("--chain-out ignored: no spline chain was run".into());
    }

    let mut results = Vec::new();
    for method in methods {
        let result = match method {
            MethodChoice::ModelBased => {
                MethodResult::from_classic(&fit_classic(&data, Estimator::ModelBased)?, &names)
            }
            MethodChoice::Sandwich => {
                MethodResult::from_classic(&fit_classic(&data, Estimator::Sandwich)?, &names)
            }
            MethodChoice::SandwichGroups => MethodResult::from_classic(
                &fit_classic(&data, Estimator::SandwichFixedGroups)?,
                &names,
            ),
            MethodChoice::BayesRandom | MethodChoice::BayesFixed | MethodChoice::BayesFixedMc => {
                let summary = match (&grouped, &chain, method) {
                    (Some(g), _, MethodChoice::BayesRandom) => {
                        posterior_beta_random_x(g, config.draws, &mut rng.substream(1))?
                    }
                    (Some(g), _, MethodChoice::BayesFixed) => posterior_beta_fixed_x_closed(g)?,
                    (Some(g), _, _) => {
                        posterior_beta_fixed_x_mc(g, config.draws, &mut rng.substream(2))?
                    }
                    (None, Some(c), MethodChoice::BayesRandom) => {
                        posterior_beta_continuous(&data, c, XMode::Random, &mut rng.substream(4))?
                    }
                    (None, Some(c), _) => {
                        posterior_beta_continuous(&data, c, XMode::Fixed, &mut rng.substream(5))?
                    }
                    (None, None, _) => {
                        unreachable!("continuous Bayes methods always run the chain")
                    }
                };
                if summary.rejected_draws > 0 {
                    warnings.push(format!(
                        "{}: {} degenerate weight draws were rejected and redrawn",
                        summary.method.label(),
                        summary.rejected_draws
                    ));
                }
                MethodResult::from_posterior(&summary, &names)
            }
            MethodChoice::Bayes => unreachable!("resolved above"),
        };
        results.push(result);
    }

    Ok(FitReport {
        input: config.input.display().to_string(),
        outcome: config.outcome.clone(),
        kind: config.kind,
        seed: config.seed,
        n: data.n(),
        n_groups: grouped.as_ref().map(|g| g.n_groups()),
        dropped_rows: loaded.dropped_rows,
        methods: results,
        warnings,
    })
}

impl FitReport {
    /// One row per method; estimate and SE for each coefficient.
    pub fn render_table(&self) -> String {
        let mut out = String::new();
        let _ = write!(out, "Outcome: {}   n = {}", self.outcome, self.n);
        if let Some(k) = self.n_groups {
            let _ = write!(out, "   distinct covariate values = {k}");
        }
        let _ = writeln!(out);
        let label_w = self
            .methods
            .iter()
            .map(|m| m.method.len())
            .max()
            .unwrap_or(6)
            .max(6);
        let names: Vec<&str> = self
            .methods
            .first()
            .map(|m| m.coefficients.iter().map(|c| c.name.as_str()).collect())
            .unwrap_or_default();
        let col_w = names.iter().map(|n| n.len()).max().unwrap_or(0).max(21);
        let _ = write!(out, "{:label_w$}", "");
        for name in &names {
            let _ = write!(out, "  {name:>col_w$}");
        }
        let _ = writeln!(out);
        let _ = write!(out, "{:label_w$}", "Method");
        for _ in &names {
            let _ = write!(
                out,
                "  {:>col_w$}",
                format!("{:>10} {:>10}", "Estimate", "SE")
            );
        }
        let _ = writeln!(out);
        for m in &self.methods {
            let _ = write!(out, "{:label_w$}", m.method);
            for c in &m.coefficients {
                let _ = write!(
                    out,
                    "  {:>col_w$}",
                    format!("{:>10.4} {:>10.4}", c.estimate, c.sd)
                );
            }
            let _ = writeln!(out);
        }
        for w in &self.warnings {
            let _ = writeln!(out, "warning: {w}");
        }
        out
    }

    pub fn render_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}
