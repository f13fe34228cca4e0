//! JSON experiment configuration and flag/file resolution.
//!
//! Every subcommand reads the same file schema and takes what it needs;
//! command-line flags override file values field by field.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use arqshare::structured::{solve_enumerate, solve_horizontal, solve_vertical};
use arqshare::{
    solve_lp, ConstraintSpec, Error, FadingModel, LinkBudget, Metric, Policy, SolveMethod,
    SolveReport, SystemParams,
};

use crate::error::CliError;

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FileConfig {
    /// Chain parameters (alpha, rho, lambda, nu, lambda_s, t_max).
    pub params: Option<SystemParams>,
    /// Physical-layer inputs for `phy`.
    pub link_budget: Option<LinkBudget>,
    pub fading: Option<FadingModel>,
    pub mc_samples: Option<u64>,
    /// Primary-cost cap ({"metric": ..., "epsilon": ...}).
    pub constraint: Option<ConstraintSpec>,
    pub solver: Option<SolveMethod>,
    /// Run flooding solvers even when their optimality regime (equal
    /// idle/busy secondary losses) does not hold.
    pub allow_nonuniform: Option<bool>,
    /// A fixed policy for `analyze` and `simulate` (t_max + 1 entries).
    pub policy: Option<Policy>,
    /// Master seed; subcommand flags and the sim block override it.
    pub seed: Option<u64>,
    pub sweep: Option<SweepBlock>,
    pub sim: Option<SimBlock>,
}

/// Grid description for `sweep`: `steps` evenly spaced values from `from`
/// to `to` inclusive.
#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepBlock {
    pub variable: SweepVariable,
    pub from: f64,
    pub to: f64,
    pub steps: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepVariable {
    Epsilon,
    Alpha,
    Rho,
    Lambda,
    Nu,
    LambdaS,
}

impl SweepVariable {
    pub fn as_str(&self) -> &'static str {
        match self {
            SweepVariable::Epsilon => "epsilon",
            SweepVariable::Alpha => "alpha",
            SweepVariable::Rho => "rho",
            SweepVariable::Lambda => "lambda",
            SweepVariable::Nu => "nu",
            SweepVariable::LambdaS => "lambda_s",
        }
    }

    /// Rebuilds `(params, spec)` with this variable set to `value`,
    /// revalidating both.
    pub fn substitute(
        &self,
        params: &SystemParams,
        spec: &ConstraintSpec,
        value: f64,
    ) -> Result<(SystemParams, ConstraintSpec), Error> {
        let mut p = *params;
        let mut s = *spec;
        match self {
            SweepVariable::Epsilon => s.epsilon = value,
            SweepVariable::Alpha => p.alpha = value,
            SweepVariable::Rho => p.rho = value,
            SweepVariable::Lambda => p.lambda = value,
            SweepVariable::Nu => p.nu = value,
            SweepVariable::LambdaS => p.lambda_s = value,
        }
        p.validate()?;
        s.validate()?;
        Ok((p, s))
    }
}

/// Simulator block; `sweep` uses it for validation columns, `simulate`
/// as its run configuration.
#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimBlock {
    pub n_slots: u64,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default = "default_warmup")]
    pub warmup_slots: u64,
}

fn default_warmup() -> u64 {
    1_000
}

impl Default for SimBlock {
    fn default() -> Self {
        SimBlock { n_slots: 1_000_000, seed: None, warmup_slots: default_warmup() }
    }
}

pub fn load(path: Option<&Path>) -> Result<FileConfig, CliError> {
    let Some(path) = path else {
        return Ok(FileConfig::default());
    };
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::usage(format!("cannot read config {}: {e}", path.display())))?;
    let cfg: FileConfig = serde_json::from_str(&text)
        .map_err(|e| CliError::usage(format!("invalid config {}: {e}", path.display())))?;
    if let Some(params) = &cfg.params {
        params.validate()?;
    }
    if let Some(constraint) = &cfg.constraint {
        constraint.validate()?;
    }
    if let Some(budget) = &cfg.link_budget {
        budget.validate()?;
    }
    Ok(cfg)
}

pub fn require_params(cfg: &FileConfig) -> Result<SystemParams, CliError> {
    cfg.params.ok_or_else(|| {
        CliError::usage(
            "configuration is missing 'params' (alpha, rho, lambda, nu, lambda_s, t_max)",
        )
    })
}

pub fn require_policy(cfg: &FileConfig, params: &SystemParams) -> Result<Policy, CliError> {
    let policy = cfg
        .policy
        .clone()
        .ok_or_else(|| CliError::usage("configuration is missing 'policy'"))?;
    if policy.len() != params.t_max + 1 {
        return Err(CliError::usage(format!(
            "policy has {} entries but t_max = {} needs {}",
            policy.len(),
            params.t_max,
            params.t_max + 1
        )));
    }
    Ok(policy)
}

/// Builds the constraint from config and flag overrides. `epsilon` must
/// come from somewhere unless `optional_epsilon` says the caller can live
/// without it (an epsilon sweep supplies it per row).
pub fn resolve_constraint(
    cfg: &FileConfig,
    metric_flag: Option<Metric>,
    epsilon_flag: Option<f64>,
    optional_epsilon: bool,
) -> Result<ConstraintSpec, CliError> {
    let metric = metric_flag
        .or(cfg.constraint.map(|c| c.metric))
        .unwrap_or(Metric::Throughput);
    let epsilon = epsilon_flag.or(cfg.constraint.map(|c| c.epsilon));
    let epsilon = match (epsilon, optional_epsilon) {
        (Some(e), _) => e,
        (None, true) => 0.0,
        (None, false) => {
            return Err(CliError::usage(
                "no slack given: pass --epsilon or set constraint.epsilon",
            ))
        }
    };
    Ok(ConstraintSpec::new(metric, epsilon)?)
}

/// Default solver rule: the vertical solver is exact (and cheapest) when
/// idle and busy secondary losses coincide and the metric is throughput
/// or failure probability; everything else goes to the LP.
pub fn default_solver(params: &SystemParams, metric: Metric) -> SolveMethod {
    if params.uniform_secondary_failure() && metric != Metric::NumTx {
        SolveMethod::Vertical
    } else {
        SolveMethod::Lp
    }
}

pub fn run_solver(
    method: SolveMethod,
    params: &SystemParams,
    spec: &ConstraintSpec,
    allow_nonuniform: bool,
) -> Result<SolveReport, Error> {
    match method {
        SolveMethod::Lp => solve_lp(params, spec),
        SolveMethod::Vertical => solve_vertical(params, spec, allow_nonuniform),
        SolveMethod::Horizontal => solve_horizontal(params, spec, allow_nonuniform),
        SolveMethod::Enumerate => solve_enumerate(params, spec),
    }
}
