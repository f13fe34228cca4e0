//! `sweep`: re-solve the optimization across a one-variable grid.
//!
//! Rows are computed in parallel but emitted in grid order, and the
//! simulator (when validation columns are requested) runs with the same
//! seed on every row, so paired rows differ only through the swept
//! variable.

use rayon::prelude::*;
use serde::Serialize;

use arqshare::model;
use arqshare::{simulate, ConstraintSpec, SimConfig, SolveMethod, SystemParams};

use crate::config::{self, FileConfig, SweepBlock, SweepVariable};
use crate::error::CliError;
use crate::output;
use crate::{require_format, FormatArg, SweepArgs};

#[derive(Debug, Clone, Serialize)]
struct SweepRow {
    sweep_var: &'static str,
    value: f64,
    kappa: Vec<f64>,
    w_s: f64,
    w_p: f64,
    j_p: f64,
    delta: f64,
    j_fp: f64,
    j_ntx: f64,
    solver: SolveMethod,
    binding: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    w_s_hat: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    w_p_hat: Option<f64>,
}

/// `steps` evenly spaced values from `from` to `to`, endpoints exact.
fn linspace(from: f64, to: f64, steps: usize) -> Vec<f64> {
    if steps == 1 {
        return vec![from];
    }
    let h = (to - from) / (steps - 1) as f64;
    (0..steps)
        .map(|i| if i == steps - 1 { to } else { from + h * i as f64 })
        .collect()
}

struct Plan {
    params: SystemParams,
    spec: ConstraintSpec,
    variable: SweepVariable,
    grid: Vec<f64>,
    solver: Option<SolveMethod>,
    allow_nonuniform: bool,
    sim: Option<SimConfig>,
}

fn plan(args: &SweepArgs, cfg: &FileConfig) -> Result<Plan, CliError> {
    let block: SweepBlock = cfg
        .sweep
        .ok_or_else(|| CliError::usage("configuration is missing 'sweep'"))?;
    if block.steps == 0 {
        return Err(CliError::usage("sweep.steps must be at least 1"));
    }
    if !(block.from.is_finite() && block.to.is_finite()) {
        return Err(CliError::usage("sweep.from and sweep.to must be finite"));
    }
    let params = config::require_params(cfg)?;
    let optional_epsilon = block.variable == SweepVariable::Epsilon;
    let spec = config::resolve_constraint(
        cfg,
        args.metric.map(Into::into),
        args.epsilon,
        optional_epsilon,
    )?;
    let sim = match (args.slots, cfg.sim) {
        (None, None) => None,
        (slots, file_block) => {
            let base = file_block.unwrap_or_default();
            let sim_config = SimConfig {
                n_slots: slots.unwrap_or(base.n_slots),
                seed: args.seed.or(base.seed).or(cfg.seed).unwrap_or(0),
                warmup_slots: base.warmup_slots,
            };
            sim_config.validate()?;
            Some(sim_config)
        }
    };
    Ok(Plan {
        params,
        spec,
        variable: block.variable,
        grid: linspace(block.from, block.to, block.steps),
        solver: args.solver.map(Into::into).or(cfg.solver),
        allow_nonuniform: cfg.allow_nonuniform.unwrap_or(false),
        sim,
    })
}

fn make_row(plan: &Plan, value: f64) -> Result<SweepRow, CliError> {
    let (params, spec) = plan.variable.substitute(&plan.params, &plan.spec, value)?;
    let method = plan
        .solver
        .unwrap_or_else(|| config::default_solver(&params, spec.metric));
    let report = config::run_solver(method, &params, &spec, plan.allow_nonuniform)?;
    let metrics = model::metrics(&params, &report.kappa);
    let (w_s_hat, w_p_hat) = match &plan.sim {
        Some(sim_config) => {
            let stats = simulate(&params, &report.kappa, sim_config)?;
            (Some(stats.w_s_hat), Some(stats.w_p_hat))
        }
        None => (None, None),
    };
    Ok(SweepRow {
        sweep_var: plan.variable.as_str(),
        value,
        kappa: report.kappa.as_slice().to_vec(),
        w_s: report.w_s,
        w_p: metrics.w_p,
        j_p: metrics.j_p,
        delta: report.delta,
        j_fp: metrics.j_fp,
        j_ntx: metrics.j_ntx,
        solver: method,
        binding: report.binding,
        w_s_hat,
        w_p_hat,
    })
}

fn to_csv(rows: &[SweepRow], t_max: usize, sim_seed: Option<u64>) -> String {
    let mut text = format!(
        "# arqshare {} seed={}\n",
        env!("CARGO_PKG_VERSION"),
        sim_seed.map_or_else(|| "none".to_string(), |s| s.to_string())
    );
    text.push_str("sweep_var,value");
    for theta in 0..=t_max {
        text.push_str(&format!(",kappa_{theta}"));
    }
    text.push_str(",w_s,w_p,j_p,delta,j_fp,j_ntx,solver,binding");
    if sim_seed.is_some() {
        text.push_str(",w_s_hat,w_p_hat");
    }
    text.push('\n');
    for row in rows {
        text.push_str(&format!("{},{}", row.sweep_var, row.value));
        for k in &row.kappa {
            text.push_str(&format!(",{k}"));
        }
        text.push_str(&format!(
            ",{},{},{},{},{},{},{},{}",
            row.w_s,
            row.w_p,
            row.j_p,
            row.delta,
            row.j_fp,
            row.j_ntx,
            row.solver.as_str(),
            row.binding
        ));
        if let (Some(ws), Some(wp)) = (row.w_s_hat, row.w_p_hat) {
            text.push_str(&format!(",{ws},{wp}"));
        }
        text.push('\n');
    }
    text
}

pub(crate) fn run(args: &SweepArgs) -> Result<(), CliError> {
    require_format(args.format, &[FormatArg::Csv, FormatArg::Json], "sweep")?;
    let cfg = config::load(args.common.config.as_deref())?;
    let plan = plan(args, &cfg)?;

    let compute = || -> Result<Vec<SweepRow>, CliError> {
        plan.grid.par_iter().map(|&value| make_row(&plan, value)).collect()
    };
    let rows = match args.workers {
        Some(0) => return Err(CliError::usage("--workers must be at least 1")),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| CliError::failure(format!("cannot build thread pool: {e}")))?;
            pool.install(compute)?
        }
        None => compute()?,
    };

    let text = match args.format {
        FormatArg::Csv => {
            to_csv(&rows, plan.params.t_max, plan.sim.as_ref().map(|s| s.seed))
        }
        FormatArg::Json => output::json_pretty(&rows),
        FormatArg::Text => unreachable!("rejected above"),
    };
    output::write(args.common.out.as_deref(), &text)
}
