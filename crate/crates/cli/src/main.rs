use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use robreg::{McmcConfig, XMode};
use robreg_cli::fit::FitFormat;
use robreg_cli::selftest::run_checks;
use robreg_cli::{
    cmd_fit, cmd_simulate, study_config, CliError, CliResult, CovariateKind, FitConfig,
    MethodChoice, MinGroupPolicy, Preset, SimFormat, SimOverrides,
};

/// Model-robust linear regression: OLS, sandwich and Bayesian robust
/// standard errors, plus the coverage simulation study.
#[derive(Parser)]
#[command(name = "robreg", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit a CSV dataset with the requested estimators.
    Fit(FitArgs),
    /// Run the coverage simulation study.
    Simulate(SimArgs),
    /// Run exact checks on a built-in two-group dataset.
    Selftest,
}

#[derive(Clone, Copy, ValueEnum)]
enum XModeArg {
    Random,
    Fixed,
}

#[derive(Args)]
struct McmcArgs {
    /// Total MCMC sweeps including burn-in.
    #[arg(long, default_value_t = McmcConfig::default().iterations)]
    mcmc_iters: usize,
    #[arg(long, default_value_t = McmcConfig::default().burn_in)]
    burnin: usize,
    #[arg(long, default_value_t = 1)]
    thin: usize,
    /// Spline knots, counting both boundary knots.
    #[arg(long, default_value_t = 20)]
    knots: usize,
}

#[derive(Args)]
struct FitArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    outcome: String,
    /// Comma-separated covariate columns.
    #[arg(long, value_delimiter = ',', required = true)]
    covariates: Vec<String>,
    #[arg(long, value_enum, value_delimiter = ',', default_values_t = [MethodChoice::ModelBased, MethodChoice::Sandwich, MethodChoice::Bayes])]
    methods: Vec<MethodChoice>,
    /// Covariate distribution used by `bayes`.
    #[arg(long, value_enum, default_value = "random")]
    x_mode: XModeArg,
    #[arg(long, value_enum, default_value = "discrete")]
    kind: CovariateKind,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Posterior draws for the discrete Monte Carlo methods.
    #[arg(long, default_value_t = 4000)]
    draws: usize,
    #[command(flatten)]
    mcmc: McmcArgs,
    #[arg(long, value_enum, default_value = "error")]
    min_group: MinGroupPolicy,
    /// Round covariates to this many decimals before grouping.
    #[arg(long)]
    round_x: Option<u32>,
    /// Write the retained spline draws to this CSV file.
    #[arg(long)]
    chain_out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "table")]
    format: FitFormat,
}

#[derive(Args)]
struct SimArgs {
    #[arg(long, value_enum, default_value = "table1-desk")]
    preset: Preset,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Replicates for the closed-form methods; also caps the spline method.
    #[arg(long)]
    replicates: Option<usize>,
    #[arg(long)]
    bayes_replicates: Option<usize>,
    /// Comma-separated sample sizes.
    #[arg(long, value_delimiter = ',')]
    n: Option<Vec<usize>>,
    #[arg(long)]
    mcmc_iters: Option<usize>,
    #[arg(long)]
    burnin: Option<usize>,
    #[arg(long)]
    thin: Option<usize>,
    #[arg(long)]
    knots: Option<usize>,
    /// Use one covariate design per cell instead of redrawing it.
    #[arg(long)]
    reuse_design: bool,
    /// Include per-replicate records (JSON output).
    #[arg(long)]
    detail: bool,
    #[arg(long, value_enum, default_value = "table")]
    format: SimFormat,
}

fn run_fit(args: FitArgs) -> CliResult<String> {
    let config = FitConfig {
        input: args.input,
        outcome: args.outcome,
        covariates: args.covariates,
        methods: args.methods,
        x_mode: match args.x_mode {
            XModeArg::Random => XMode::Random,
            XModeArg::Fixed => XMode::Fixed,
        },
        kind: args.kind,
        seed: args.seed,
        draws: args.draws,
        mcmc: McmcConfig {
            iterations: args.mcmc.mcmc_iters,
            burn_in: args.mcmc.burnin,
            thin: args.mcmc.thin,
            ..McmcConfig::default()
        },
        knots: args.mcmc.knots,
        min_group: args.min_group,
        round_x: args.round_x,
        chain_out: args.chain_out,
    };
    let report = cmd_fit(&config)?;
    for w in &report.warnings {
        log::warn!("{w}");
    }
    Ok(match args.format {
        FitFormat::Table => report.render_table(),
        FitFormat::Json => report.render_json(),
    })
}

fn run_simulate(args: SimArgs) -> CliResult<String> {
    let overrides = SimOverrides {
        replicates: args.replicates,
        bayes_replicates: args.bayes_replicates,
        sample_sizes: args.n,
        knots: args.knots,
        mcmc_iters: args.mcmc_iters,
        burn_in: args.burnin,
        thin: args.thin,
        reuse_design: args.reuse_design,
        detail: args.detail,
    };
    let config = study_config(args.preset, &overrides)?;
    let report = cmd_simulate(&config, args.seed)?;
    Ok(robreg_cli::simulate::render(&report, args.format))
}

fn run_selftest() -> CliResult<String> {
    let checks = run_checks()?;
    let mut out = String::new();
    for c in &checks {
        out.push_str(&format!(
            "{} {}: {} (expected {})\n",
            if c.passed() { "PASS" } else { "FAIL" },
            c.name,
            c.value,
            c.expected
        ));
    }
    let failed = checks.iter().filter(|c| !c.passed()).count();
    if failed > 0 {
        print!("{out}");
        return Err(CliError::Numerical(format!(
            "{failed} of {} self-test checks failed",
            checks.len()
        )));
    }
    out.push_str(&format!("all {} checks passed\n", checks.len()));
    Ok(out)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Fit(args) => run_fit(args),
        Command::Simulate(args) => run_simulate(args),
        Command::Selftest => run_selftest(),
    };
    match result {
        Ok(out) => {
            let mut stdout = std::io::stdout().lock();
            if stdout
                .write_all(out.as_bytes())
                .and_then(|_| stdout.flush())
                .is_err()
            {
                return ExitCode::from(3);
            }
            ExitCode::SUCCESS
        }
        Err(err) => {
            eprintln!("robreg: {err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
