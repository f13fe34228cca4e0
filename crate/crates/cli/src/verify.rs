//! `verify`: randomized self-checks of the closed-form analysis layer.
//!
//! Each check samples fresh instances from fixed seeds, tests one exact
//! statement (gradient identities, exchange orderings, perturbation
//! reconstructions, sign thresholds) against an independent oracle, and
//! reports one PASS/FAIL line. Any failure exits with the numerical code.

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use serde::Serialize;
use serde_json::json;

use arqshare::analysis::{
    cost_gradient, fd_metric_gradient, fd_reward_gradient, fp_insensitivity,
    nu_star_threshold, perturbation_constants, reward_gradient, t2_reward_partials,
    verify_exchange, ExchangeDirection,
};
use arqshare::model;
use arqshare::{Metric, Policy, SystemParams};

use crate::error::CliError;
use crate::output;
use crate::{require_format, FormatArg, VerifyArgs};

const FD_STEP: f64 = 1e-6;

/// Relative closeness with an absolute floor: finite differences bottom
/// out near 1e-10 regardless of the true value.
fn close(a: f64, b: f64, rtol: f64, atol: f64) -> bool {
    (a - b).abs() <= rtol * a.abs().max(b.abs()) + atol
}

#[derive(Serialize)]
struct CheckResult {
    name: &'static str,
    passed: u64,
    failed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    first_failure: Option<String>,
}

impl CheckResult {
    fn new(name: &'static str) -> Self {
        CheckResult { name, passed: 0, failed: 0, first_failure: None }
    }

    fn record(&mut self, ok: bool, detail: impl FnOnce() -> String) {
        if ok {
            self.passed += 1;
        } else {
            self.failed += 1;
            if self.first_failure.is_none() {
                self.first_failure = Some(detail());
            }
        }
    }

    fn ok(&self) -> bool {
        self.failed == 0
    }

    fn line(&self) -> String {
        let total = self.passed + self.failed;
        if self.ok() {
            format!("PASS {} ({}/{total})", self.name, self.passed)
        } else {
            format!(
                "FAIL {} ({}/{total} failed): first failure: {}",
                self.name,
                self.failed,
                self.first_failure.as_deref().unwrap_or("")
            )
        }
    }
}

fn sample_params(rng: &mut StdRng, t_max: usize, lambda_s: f64) -> SystemParams {
    SystemParams::new(
        rng.gen_range(0.1..0.9),  // alpha
        rng.gen_range(0.05..0.9), // rho
        rng.gen_range(0.1..1.0),  // lambda
        rng.gen_range(0.0..0.5),  // nu
        lambda_s,
        t_max,
    )
    .expect("sampled inside the admissible ranges")
}

fn sample_interior_policy(rng: &mut StdRng, t_max: usize) -> Policy {
    let kappa = (0..=t_max).map(|_| rng.gen_range(0.05..0.95)).collect();
    Policy::new(kappa).expect("entries in (0, 1)")
}

/// An instance satisfying the exchange hypotheses: two busy states
/// `j < r` carrying the same probability and silence beyond `r`.
struct ExchangeInstance {
    params: SystemParams,
    policy: Policy,
    j: usize,
    r: usize,
    load: f64,
}

fn sample_exchange(rng: &mut StdRng) -> ExchangeInstance {
    let t_max = rng.gen_range(2..=6usize);
    let j = rng.gen_range(1..t_max);
    let r = rng.gen_range(j + 1..=t_max);
    let load = rng.gen_range(0.1..0.9);
    let mut kappa = vec![0.0; t_max + 1];
    kappa[0] = 1.0;
    for (t, k) in kappa.iter_mut().enumerate().take(r).skip(1) {
        *k = if t == j { load } else { rng.gen_range(0.0..1.0) };
    }
    kappa[r] = load;
    let params = sample_params(rng, t_max, 0.0);
    ExchangeInstance {
        params,
        policy: Policy::new(kappa).expect("entries in [0, 1]"),
        j,
        r,
        load,
    }
}

fn seeded(seed: u64, check_index: u64) -> StdRng {
    StdRng::seed_from_u64(seed.wrapping_add(check_index.wrapping_mul(0x9E37_79B9_7F4A_7C15)))
}

fn check_cost_gradient(seed: u64, instances: u64) -> CheckResult {
    let mut result = CheckResult::new("cost-gradient-fd");
    let mut rng = seeded(seed, 0);
    for i in 0..instances {
        let t_max = rng.gen_range(1..=6usize);
        let lambda_s = rng.gen_range(0.0..1.0);
        let params = sample_params(&mut rng, t_max, lambda_s);
        let policy = sample_interior_policy(&mut rng, t_max);
        let grad = cost_gradient(&params, &policy);
        let fd = fd_metric_gradient(&params, &policy, Metric::Throughput, FD_STEP);
        let mut ok = grad[0] == 0.0 && fd[0].abs() < 1e-9;
        for theta in 1..=t_max {
            ok &= grad[theta] > 0.0 && close(grad[theta], fd[theta], 1e-6, 1e-9);
        }
        result.record(ok, || {
            format!("instance {i}: gradient {grad:?} vs finite differences {fd:?}")
        });
    }
    result
}

fn check_reward_gradient(seed: u64, instances: u64) -> CheckResult {
    let mut result = CheckResult::new("reward-gradient-fd");
    let mut rng = seeded(seed, 1);
    for i in 0..instances {
        let t_max = rng.gen_range(1..=6usize);
        let params = sample_params(&mut rng, t_max, 0.0);
        let policy = sample_interior_policy(&mut rng, t_max);
        let grad = reward_gradient(&params, &policy)
            .expect("lambda_s = 0 is inside the closed form's mode");
        let fd = fd_reward_gradient(&params, &policy, FD_STEP);
        let mut ok = true;
        for theta in 0..=t_max {
            ok &= grad[theta] > 0.0 && close(grad[theta], fd[theta], 1e-6, 1e-9);
        }
        result.record(ok, || {
            format!("instance {i}: gradient {grad:?} vs finite differences {fd:?}")
        });
    }
    result
}

fn check_exchange(seed: u64, instances: u64, direction: ExchangeDirection) -> CheckResult {
    let (name, index) = match direction {
        ExchangeDirection::Increase => ("exchange-increase", 2),
        ExchangeDirection::Decrease => ("exchange-decrease", 3),
    };
    let mut result = CheckResult::new(name);
    let mut rng = seeded(seed, index);
    for i in 0..instances {
        let inst = sample_exchange(&mut rng);
        let room = match direction {
            ExchangeDirection::Increase => 1.0 - inst.load,
            ExchangeDirection::Decrease => inst.load,
        };
        let delta_r = rng.gen_range(0.1..1.0) * room;
        match verify_exchange(&inst.params, &inst.policy, inst.j, inst.r, delta_r, direction) {
            Ok(report) => {
                let ok = report.ordering_holds
                    && report.delta_j_lt_delta_r
                    && report.cost_gap <= 1e-9;
                result.record(ok, || {
                    format!(
                        "instance {i}: j={}, r={}, delta_r={delta_r}: {report:?}",
                        inst.j, inst.r
                    )
                });
            }
            Err(e) => result.record(false, || format!("instance {i}: {e}")),
        }
    }
    result
}

fn check_fp_insensitivity(seed: u64, instances: u64) -> CheckResult {
    let mut result = CheckResult::new("fp-insensitivity");
    let mut rng = seeded(seed, 4);
    for i in 0..instances {
        let inst = sample_exchange(&mut rng);
        let delta = rng.gen_range(-inst.load..(1.0 - inst.load));
        match fp_insensitivity(&inst.params, &inst.policy, inst.j, inst.r, delta) {
            Ok(report) => result.record(report.holds, || {
                format!("instance {i}: j={}, r={}, delta={delta}: {report:?}", inst.j, inst.r)
            }),
            Err(e) => result.record(false, || format!("instance {i}: {e}")),
        }
    }
    result
}

fn check_perturbation(seed: u64, instances: u64) -> CheckResult {
    let mut result = CheckResult::new("perturbation-reconstruction");
    let mut rng = seeded(seed, 5);
    for i in 0..instances {
        let inst = sample_exchange(&mut rng);
        let consts = match perturbation_constants(&inst.params, &inst.policy, inst.j, inst.r) {
            Ok(c) => c,
            Err(e) => {
                result.record(false, || format!("instance {i}: {e}"));
                continue;
            }
        };
        let delta = rng.gen_range(-inst.load..(1.0 - inst.load));
        let scale = 1.0 - inst.params.nu;
        // Both axes: perturbing r uses (b, a, g); perturbing j shifts the
        // coefficients by (c, c, f).
        let axes = [
            (inst.r, consts.b, consts.a, consts.g),
            (inst.j, consts.b + consts.c, consts.a + consts.c, consts.g + consts.f),
        ];
        let mut ok = true;
        let mut detail = String::new();
        for (state, b, a, g) in axes {
            let perturbed = inst
                .policy
                .with_entry(state, inst.load + delta)
                .expect("delta keeps the entry in [0, 1]");
            let cost = model::primary_cost(&inst.params, &perturbed);
            let reward = model::secondary_reward(&inst.params, &perturbed);
            let cost_hat = (consts.n_j + b * delta) / (consts.d + a * delta);
            let reward_hat = scale * (consts.n_w + g * delta) / (consts.d + a * delta);
            if !close(cost, cost_hat, 1e-10, 1e-12) || !close(reward, reward_hat, 1e-10, 1e-12)
            {
                ok = false;
                detail = format!(
                    "state {state}: cost {cost} vs {cost_hat}, reward {reward} vs {reward_hat}"
                );
            }
        }
        // b - a telescopes to the full-chain product with state r left out.
        let slope = (1.0 - inst.params.rho) * inst.params.lambda;
        let mut prod = inst.params.alpha * slope;
        for t in 1..=inst.params.t_max {
            if t != inst.r {
                prod *= inst.params.rho + slope * inst.policy.kappa(t);
            }
        }
        if !close(consts.b - consts.a, prod, 1e-12, 1e-14) {
            ok = false;
            detail = format!("b - a = {} but the product is {prod}", consts.b - consts.a);
        }
        result.record(ok, || format!("instance {i}: delta={delta}: {detail}"));
    }
    result
}

fn check_t2(seed: u64, instances: u64) -> CheckResult {
    let mut result = CheckResult::new("t2-partials-threshold");
    let mut rng = seeded(seed, 6);
    for i in 0..instances {
        let lambda_s = rng.gen_range(0.0..1.0);
        let mut params = sample_params(&mut rng, 2, lambda_s);
        params.lambda = rng.gen_range(0.3..1.0);
        params.nu = rng.gen_range(0.0..0.3);
        let policy = sample_interior_policy(&mut rng, 2);
        let (d0, d1, d2) = t2_reward_partials(&params, &policy)
            .expect("t_max = 2 by construction");
        let fd = fd_reward_gradient(&params, &policy, FD_STEP);
        let mut ok = close(d0, fd[0], 1e-8, 1e-9)
            && close(d1, fd[1], 1e-8, 1e-9)
            && close(d2, fd[2], 1e-8, 1e-9);
        let mut detail = format!(
            "instance {i}: partials ({d0}, {d1}, {d2}) vs finite differences {fd:?}"
        );

        // Sign flip of the first-attempt partial at the busy-loss
        // threshold, checked just either side of it when both sides are
        // admissible. The threshold statement takes kappa[0] = 1.
        let full = policy.with_entry(0, 1.0).expect("1 is admissible");
        let threshold = nu_star_threshold(&params, full.kappa(2));
        let margin = 1e-4;
        if threshold - margin > params.nu && threshold + margin < 1.0 {
            let d1_at = |nu_star: f64| -> f64 {
                let mut p = params;
                p.lambda_s = (nu_star - p.nu) / (1.0 - p.nu);
                t2_reward_partials(&p, &full).expect("t_max = 2").1
            };
            let below = d1_at(threshold - margin);
            let above = d1_at(threshold + margin);
            if !(below > 0.0 && above < 0.0) {
                ok = false;
                detail = format!(
                    "instance {i}: threshold {threshold}: partial {below} below, \
                     {above} above"
                );
            }
        }
        result.record(ok, || detail);
    }
    result
}

pub(crate) fn run(args: &VerifyArgs) -> Result<(), CliError> {
    require_format(args.format, &[FormatArg::Text, FormatArg::Json], "verify")?;
    if args.instances == 0 {
        return Err(CliError::usage("--instances must be at least 1"));
    }
    let (seed, instances) = (args.seed, args.instances);
    let checks = vec![
        check_cost_gradient(seed, instances),
        check_reward_gradient(seed, instances),
        check_exchange(seed, instances, ExchangeDirection::Increase),
        check_exchange(seed, instances, ExchangeDirection::Decrease),
        check_fp_insensitivity(seed, instances),
        check_perturbation(seed, instances),
        check_t2(seed, instances),
    ];
    let failed = checks.iter().filter(|c| !c.ok()).count();
    let text = match args.format {
        FormatArg::Text => {
            let mut text = format!("verify: seed {seed}, {instances} instances per check\n");
            for check in &checks {
                text.push_str(&check.line());
                text.push('\n');
            }
            text.push_str(&if failed == 0 {
                format!("ok: all {} checks passed\n", checks.len())
            } else {
                format!("{failed} of {} checks failed\n", checks.len())
            });
            text
        }
        FormatArg::Json => output::json_pretty(&json!({
            "seed": seed,
            "instances": instances,
            "checks": checks,
            "ok": failed == 0,
        })),
        FormatArg::Csv => unreachable!("rejected above"),
    };
    output::write(args.out.as_deref(), &text)?;
    if failed > 0 {
        return Err(CliError::numerical(format!(
            "{failed} of {} verification checks failed",
            checks.len()
        )));
    }
    Ok(())
}
