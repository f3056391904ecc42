//! The `simulate` command.

use clap::ValueEnum;
use robreg::{run_study, SimulationReport, StudyConfig};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Preset {
    /// Random-X table, n = 400, 500 replicates (200 for the spline method).
    Table1Desk,
    /// Fixed-X table at the same scale.
    Table2Desk,
    /// Both tables from shared replicates.
    TablesDesk,
    /// 1000 replicates of every method at n = 400 and 800.
    Full,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SimFormat {
    Table,
    Json,
    Csv,
}

#[derive(Debug, Clone, Default)]
pub struct SimOverrides {
    pub replicates: Option<usize>,
    pub bayes_replicates: Option<usize>,
    pub sample_sizes: Option<Vec<usize>>,
    pub knots: Option<usize>,
    pub mcmc_iters: Option<usize>,
    pub burn_in: Option<usize>,
    pub thin: Option<usize>,
    pub reuse_design: bool,
    pub detail: bool,
}

pub fn study_config(preset: Preset, o: &SimOverrides) -> CliResult<StudyConfig> {
    let mut config = match preset {
        Preset::Table1Desk => StudyConfig::table1_desk(),
        Preset::Table2Desk => StudyConfig::table2_desk(),
        Preset::TablesDesk => StudyConfig::tables_desk(),
        Preset::Full => StudyConfig::full_scale(),
    };
    if let Some(r) = o.replicates {
        config.replicates = r;
        config.bayes_replicates = config.bayes_replicates.min(r);
    }
    if let Some(r) = o.bayes_replicates {
        config.bayes_replicates = r;
    }
    if let Some(sizes) = &o.sample_sizes {
        if sizes.is_empty() {
            return Err(CliError::Config("empty sample-size list".into()));
        }
        config.sample_sizes = sizes.clone();
    }
    if let Some(q) = o.knots {
        config.spline.knots = q;
    }
    if let Some(v) = o.mcmc_iters {
        config.spline.mcmc.iterations = v;
    }
    if let Some(v) = o.burn_in {
        config.spline.mcmc.burn_in = v;
    }
    if let Some(v) = o.thin {
        config.spline.mcmc.thin = v;
    }
    config.reuse_design = o.reuse_design;
    config.detail = o.detail;
    Ok(config)
}

pub fn cmd_simulate(config: &StudyConfig, seed: u64) -> CliResult<SimulationReport> {
    Ok(run_study(config, seed)?)
}

pub fn render(report: &SimulationReport, format: SimFormat) -> String {
    match format {
        SimFormat::Table => {
            let mut out = report.render_table();
            for w in &report.warnings {
                out.push_str(&format!("warning: {w}\n"));
            }
            out
        }
        SimFormat::Json => {
            let mut s = serde_json::to_string_pretty(report).expect("report serializes");
            s.push('\n');
            s
        }
        SimFormat::Csv => report.render_csv(),
    }
}
