//! Single-shot subcommands: `phy`, `analyze`, `optimize`, `simulate`.

use std::fs::File;
use std::io::{BufWriter, Write as _};

use serde::Serialize;
use serde_json::json;

use arqshare::model;
use arqshare::{
    failure_probs, simulate_with_trace, FadingModel, Metric, SimConfig, SimStats, SolveMethod,
};

use crate::config;
use crate::error::CliError;
use crate::output;
use crate::{require_format, AnalyzeArgs, FormatArg, OptimizeArgs, PhyArgs, SimulateArgs};

const DEFAULT_MC_SAMPLES: u64 = 200_000;

pub(crate) fn phy(args: &PhyArgs) -> Result<(), CliError> {
    require_format(args.format, &[FormatArg::Json], "phy")?;
    let cfg = config::load(args.common.config.as_deref())?;
    let budget = cfg
        .link_budget
        .clone()
        .ok_or_else(|| CliError::usage("configuration is missing 'link_budget'"))?;
    let fading = cfg.fading.unwrap_or(FadingModel::Rayleigh);
    let mc_samples = cfg.mc_samples.unwrap_or(DEFAULT_MC_SAMPLES);
    let seed = args.seed.or(cfg.seed).unwrap_or(0);
    let probs = failure_probs(&budget, fading, mc_samples, seed)?;
    let (lambda, lambda_s) = probs.increasing_factors()?;
    let doc = json!({
        "fading": fading,
        "mc_samples": mc_samples,
        "seed": seed,
        "rho": probs.rho,
        "rho_star": probs.rho_star,
        "nu": probs.nu,
        "nu_star": probs.nu_star,
        "lambda": lambda,
        "lambda_s": lambda_s,
    });
    output::write(args.common.out.as_deref(), &output::json_pretty(&doc))
}

pub(crate) fn analyze(args: &AnalyzeArgs) -> Result<(), CliError> {
    require_format(args.format, &[FormatArg::Json], "analyze")?;
    let cfg = config::load(args.common.config.as_deref())?;
    let params = config::require_params(&cfg)?;
    let policy = config::require_policy(&cfg, &params)?;
    let dist = model::steady_state(&params, &policy);
    let metrics = model::metrics(&params, &policy);
    let doc = json!({
        "params": params,
        "policy": policy,
        "pi": dist.pi,
        "metrics": metrics,
    });
    output::write(args.common.out.as_deref(), &output::json_pretty(&doc))
}

pub(crate) fn optimize(args: &OptimizeArgs) -> Result<(), CliError> {
    require_format(args.format, &[FormatArg::Json], "optimize")?;
    let cfg = config::load(args.common.config.as_deref())?;
    let params = config::require_params(&cfg)?;
    let spec =
        config::resolve_constraint(&cfg, args.metric.map(Into::into), args.epsilon, false)?;
    let allow_nonuniform = args.allow_nonuniform || cfg.allow_nonuniform.unwrap_or(false);
    let method = args
        .solver
        .map(Into::into)
        .or(cfg.solver)
        .unwrap_or_else(|| config::default_solver(&params, spec.metric));
    let report = config::run_solver(method, &params, &spec, allow_nonuniform)?;
    if !report.method_valid {
        eprintln!(
            "warning: {} ran outside its optimality regime (idle and busy \
             secondary losses differ); the reported policy may be suboptimal",
            method.as_str()
        );
    }
    // Where two independent solvers are both exact, cross-check them and
    // surface any disagreement rather than silently trusting one.
    if report.method_valid
        && spec.metric != Metric::NumTx
        && params.uniform_secondary_failure()
    {
        let other_method = match method {
            SolveMethod::Lp => SolveMethod::Vertical,
            _ => SolveMethod::Lp,
        };
        if other_method != method {
            match config::run_solver(other_method, &params, &spec, allow_nonuniform) {
                Ok(other) if (other.w_s - report.w_s).abs() > 1e-6 => {
                    eprintln!(
                        "warning: {} and {} disagree on the optimal reward \
                         ({} vs {}); check conditioning",
                        method.as_str(),
                        other_method.as_str(),
                        report.w_s,
                        other.w_s
                    );
                }
                Ok(_) => {}
                Err(e) => {
                    eprintln!(
                        "warning: cross-check with {} failed: {e}",
                        other_method.as_str()
                    );
                }
            }
        }
    }
    output::write(args.common.out.as_deref(), &output::json_pretty(&report))
}

#[derive(Serialize)]
struct ValidationCheck {
    stat: &'static str,
    estimate: f64,
    exact: f64,
    se: f64,
    ok: bool,
}

fn validation_checks(stats: &SimStats, metrics: &model::Metrics) -> Vec<ValidationCheck> {
    let check = |stat, estimate: f64, exact: f64, se: f64| ValidationCheck {
        stat,
        estimate,
        exact,
        se,
        ok: (estimate - exact).abs() <= 5.0 * se + 1e-9,
    };
    vec![
        check("w_p", stats.w_p_hat, metrics.w_p, stats.w_p_se),
        check("w_s", stats.w_s_hat, metrics.w_s, stats.w_s_se),
        check("fp", stats.fp_hat, metrics.j_fp, stats.fp_se),
        check("ntx", stats.ntx_hat, metrics.j_ntx, stats.ntx_se),
    ]
}

pub(crate) fn simulate(args: &SimulateArgs) -> Result<(), CliError> {
    require_format(args.format, &[FormatArg::Json], "simulate")?;
    let cfg = config::load(args.common.config.as_deref())?;
    let params = config::require_params(&cfg)?;
    let policy = config::require_policy(&cfg, &params)?;
    let block = cfg.sim.unwrap_or_default();
    let sim_config = SimConfig {
        n_slots: args.slots.unwrap_or(block.n_slots),
        seed: args.seed.or(block.seed).or(cfg.seed).unwrap_or(0),
        warmup_slots: block.warmup_slots,
    };
    sim_config.validate()?;
    let stats = match &args.trace {
        Some(path) => {
            let file = File::create(path).map_err(|e| {
                CliError::failure(format!("cannot create trace {}: {e}", path.display()))
            })?;
            let mut sink = BufWriter::new(file);
            let stats = simulate_with_trace(&params, &policy, &sim_config, &mut sink)?;
            sink.flush().map_err(|e| {
                CliError::failure(format!("cannot write trace {}: {e}", path.display()))
            })?;
            stats
        }
        None => arqshare::simulate(&params, &policy, &sim_config)?,
    };
    if args.validate {
        let metrics = model::metrics(&params, &policy);
        let checks = validation_checks(&stats, &metrics);
        let ok = checks.iter().all(|c| c.ok);
        let doc = json!({
            "config": SimBlockEcho::from(&sim_config),
            "stats": stats,
            "analytic": metrics,
            "checks": checks,
            "ok": ok,
        });
        output::write(args.common.out.as_deref(), &output::json_pretty(&doc))?;
        if !ok {
            return Err(CliError::failure(
                "simulation differs from the closed forms by more than 5 standard errors",
            ));
        }
        Ok(())
    } else {
        let doc = json!({
            "config": SimBlockEcho::from(&sim_config),
            "stats": stats,
        });
        output::write(args.common.out.as_deref(), &output::json_pretty(&doc))
    }
}

/// Echo of the resolved run configuration, so output files are
/// self-describing.
#[derive(Serialize)]
struct SimBlockEcho {
    n_slots: u64,
    seed: u64,
    warmup_slots: u64,
}

impl From<&SimConfig> for SimBlockEcho {
    fn from(c: &SimConfig) -> Self {
        SimBlockEcho { n_slots: c.n_slots, seed: c.seed, warmup_slots: c.warmup_slots }
    }
}
