//! Command implementations behind the `robreg` binary.

pub mod error;
pub mod fit;
pub mod input;
pub mod selftest;
pub mod simulate;

pub use error::{CliError, CliResult};
pub use fit::{
    cmd_fit, CovariateKind, FitConfig, FitFormat, FitReport, MethodChoice, MinGroupPolicy,
};
pub use input::{load_csv, Loaded};
pub use simulate::{cmd_simulate, study_config, Preset, SimFormat, SimOverrides};
