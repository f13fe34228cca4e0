//! Structured solvers for the constrained secondary-throughput problem.
//!
//! The problem: choose `kappa` to maximize the secondary throughput subject
//! to a cap on the extra primary cost `Delta = cost(kappa) - cost(0)` for a
//! chosen metric. When busy-slot and idle-slot secondary transmissions fail
//! equally often (`nu* = nu`), the optimum has a "vertical" shape: ones in
//! the leading busy states, at most one fractional entry, zeros after it.
//! [`solve_vertical`] exploits that directly; [`solve_horizontal`] is the
//! common-probability baseline; [`solve_enumerate`] searches all policies
//! with at most one randomized busy state and is valid for every mode.

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::model::{self, Metric, Policy, SystemParams};

/// Tolerance for declaring the cost constraint active in reports.
pub const BINDING_TOL: f64 = 1e-9;

/// Bracket width at which bisection stops refining.
const BISECT_WIDTH: f64 = 1e-14;

/// Treat two candidate rewards within this distance as tied.
const TIE_TOL: f64 = 1e-12;

/// A cap on the primary's metric degradation, expressed as a relative
/// slack `epsilon >= 0` on the metric's interference-free value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConstraintSpec {
    pub metric: Metric,
    pub epsilon: f64,
}

impl ConstraintSpec {
    pub fn new(metric: Metric, epsilon: f64) -> Result<Self, Error> {
        let spec = ConstraintSpec { metric, epsilon };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<(), Error> {
        if !self.epsilon.is_finite() || self.epsilon < 0.0 {
            return Err(Error::Config(format!(
                "epsilon = {} must be finite and nonnegative",
                self.epsilon
            )));
        }
        Ok(())
    }
}

/// Absolute form of a [`ConstraintSpec`] for fixed parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SigmaBound {
    /// The cap as conventionally quoted: an allowed cost *increase* for the
    /// throughput metric, an allowed absolute cost for the others.
    pub sigma: f64,
    /// Metric cost of the never-transmit secondary.
    pub baseline: f64,
    /// Allowed increase over `baseline`; the constraint is
    /// `Delta <= delta_bound` for every metric.
    pub delta_bound: f64,
}

/// Converts the relative slack `epsilon` into an absolute cap.
///
/// - throughput: the primary may lose at most a fraction `epsilon` of its
///   interference-free throughput, so `sigma = epsilon * (1 - J_P(0))` and
///   the cap applies to the cost increase directly;
/// - failure probability: the per-packet failure probability may grow to
///   `rho^T * (1 + epsilon)`;
/// - transmission count: the mean attempts per packet may grow to
///   `(1 + epsilon)` times its interference-free value.
pub fn sigma_from_epsilon(params: &SystemParams, spec: &ConstraintSpec) -> SigmaBound {
    let silent = Policy::all_zeros(params.t_max);
    let baseline = model::metric_cost(params, &silent, spec.metric);
    match spec.metric {
        Metric::Throughput => {
            let sigma = spec.epsilon * (1.0 - baseline);
            SigmaBound { sigma, baseline, delta_bound: sigma }
        }
        Metric::FailureProb | Metric::NumTx => SigmaBound {
            sigma: baseline * (1.0 + spec.epsilon),
            baseline,
            delta_bound: baseline * spec.epsilon,
        },
    }
}

/// Which algorithm produced a [`SolveReport`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolveMethod {
    Lp,
    Vertical,
    Horizontal,
    Enumerate,
}

impl SolveMethod {
    pub fn as_str(&self) -> &'static str {
        match self {
            SolveMethod::Lp => "lp",
            SolveMethod::Vertical => "vertical",
            SolveMethod::Horizontal => "horizontal",
            SolveMethod::Enumerate => "enumerate",
        }
    }
}

impl std::str::FromStr for SolveMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s {
            "lp" => Ok(SolveMethod::Lp),
            "vertical" => Ok(SolveMethod::Vertical),
            "horizontal" => Ok(SolveMethod::Horizontal),
            "enumerate" => Ok(SolveMethod::Enumerate),
            other => Err(Error::Config(format!(
                "unknown solver '{other}' (expected lp, vertical, horizontal or enumerate)"
            ))),
        }
    }
}

/// Outcome of a policy solve.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolveReport {
    pub method: SolveMethod,
    pub metric: Metric,
    pub epsilon: f64,
    /// Absolute cap (see [`SigmaBound::sigma`]).
    pub sigma: f64,
    pub kappa: Policy,
    pub w_s: f64,
    pub w_p: f64,
    /// Achieved metric cost increase over the never-transmit secondary.
    pub delta: f64,
    /// True when the cost constraint is active at the solution.
    pub binding: bool,
    pub iterations: usize,
    /// False when the algorithm ran outside the regime in which its
    /// optimality argument holds (e.g. flooding with `nu* > nu`).
    #[serde(skip)]
    pub method_valid: bool,
}

pub(crate) fn make_report(
    params: &SystemParams,
    spec: &ConstraintSpec,
    bound: &SigmaBound,
    method: SolveMethod,
    method_valid: bool,
    kappa: Policy,
    iterations: usize,
) -> SolveReport {
    let delta = model::metric_cost(params, &kappa, spec.metric) - bound.baseline;
    let w_s = model::secondary_reward(params, &kappa);
    let w_p = 1.0 - model::primary_cost(params, &kappa);
    SolveReport {
        method,
        metric: spec.metric,
        epsilon: spec.epsilon,
        sigma: bound.sigma,
        kappa,
        w_s,
        w_p,
        delta,
        binding: (delta - bound.delta_bound).abs() <= BINDING_TOL,
        iterations,
        method_valid,
    }
}

/// Bisection root finder on `[lo, hi]`.
///
/// Requires `f(lo)` and `f(hi)` to bracket a sign change (an endpoint value
/// within `tol` of zero counts as the root). Stops as soon as `|f| <= tol`
/// or the bracket width falls below 1e-14, within at most 200 iterations;
/// pass `tol = 0.0` to always refine down to the width limit.
pub fn bisect_root<F>(mut f: F, lo: f64, hi: f64, tol: f64) -> Result<f64, Error>
where
    F: FnMut(f64) -> f64,
{
    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
        return Err(Error::Domain(format!("invalid interval [{lo}, {hi}]")));
    }
    if !(tol.is_finite() && tol >= 0.0) {
        return Err(Error::Domain(format!("invalid tolerance {tol}")));
    }
    let f_lo = f(lo);
    if f_lo.abs() <= tol {
        return Ok(lo);
    }
    let f_hi = f(hi);
    if f_hi.abs() <= tol {
        return Ok(hi);
    }
    if f_lo.signum() == f_hi.signum() {
        return Err(Error::Bracket(format!(
            "no sign change on [{lo}, {hi}]: f(lo) = {f_lo}, f(hi) = {f_hi}"
        )));
    }
    let (mut lo, mut hi) = (lo, hi);
    let mut mid = 0.5 * (lo + hi);
    for _ in 0..200 {
        mid = 0.5 * (lo + hi);
        let f_mid = f(mid);
        if f_mid.abs() <= tol || (hi - lo) <= BISECT_WIDTH {
            return Ok(mid);
        }
        if f_mid.signum() == f_lo.signum() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(mid)
}

fn check_flooding_mode(
    params: &SystemParams,
    spec: &ConstraintSpec,
    allow_nonuniform: bool,
    name: &str,
) -> Result<bool, Error> {
    if spec.metric == Metric::NumTx {
        return Err(Error::Mode(format!(
            "{name} flooding supports throughput and failure-probability \
             constraints; use the enumeration or LP solver for the \
             transmission-count metric"
        )));
    }
    if params.uniform_secondary_failure() {
        Ok(true)
    } else if allow_nonuniform {
        // Proceed, but flag that the shape argument behind the algorithm
        // assumes busy-slot transmissions are no lossier than idle ones.
        Ok(false)
    } else {
        Err(Error::Mode(format!(
            "{name} flooding is optimal only when idle and busy secondary \
             failure probabilities coincide (lambda_s = 0, here lambda_s = {}); \
             pass allow_nonuniform = true to run it anyway, or use the \
             enumeration or LP solver",
            params.lambda_s
        )))
    }
}

/// Vertical flooding: fill busy states with transmission probability from
/// the earliest state down, spilling into later states only while the cost
/// cap allows.
///
/// Starting from all ones, the latest busy state is zeroed while the policy
/// violates the cap; once zeroing state `j` would satisfy it, `kappa[j]` is
/// bisected so the cost increase meets the cap exactly. Runs at most
/// `t_max` zeroing steps plus one bisection and always terminates, because
/// the policy that transmits only in idle slots costs the primary nothing.
///
/// Optimal for the throughput and failure-probability metrics when
/// `nu* = nu`; `allow_nonuniform` runs it outside that regime with
/// `method_valid` cleared on the report.
pub fn solve_vertical(
    params: &SystemParams,
    spec: &ConstraintSpec,
    allow_nonuniform: bool,
) -> Result<SolveReport, Error> {
    params.validate()?;
    spec.validate()?;
    let method_valid = check_flooding_mode(params, spec, allow_nonuniform, "vertical")?;
    let bound = sigma_from_epsilon(params, spec);
    let report = |kappa, iterations| {
        make_report(
            params,
            spec,
            &bound,
            SolveMethod::Vertical,
            method_valid,
            kappa,
            iterations,
        )
    };

    let mut kappa = Policy::all_ones(params.t_max);
    if model::delta_loss(params, &kappa, spec.metric) <= bound.delta_bound {
        return Ok(report(kappa, 0));
    }
    let mut iterations = 0;
    for j in (1..=params.t_max).rev() {
        iterations += 1;
        let zeroed = kappa.with_entry(j, 0.0)?;
        if model::delta_loss(params, &zeroed, spec.metric) <= bound.delta_bound {
            let f = |x: f64| {
                let cand = kappa.with_entry(j, x).expect("x stays in [0, 1]");
                model::delta_loss(params, &cand, spec.metric) - bound.delta_bound
            };
            let root = bisect_root(f, 0.0, 1.0, 0.0)?;
            return Ok(report(kappa.with_entry(j, root)?, iterations));
        }
        kappa = zeroed;
    }
    // Unreachable: with kappa = [1, 0, ..., 0] the loss is exactly zero.
    Ok(report(kappa, iterations))
}

/// Horizontal flooding baseline: one common transmission probability in
/// every busy state (`kappa[0] = 1` stays fixed), raised as far as the cost
/// cap allows.
pub fn solve_horizontal(
    params: &SystemParams,
    spec: &ConstraintSpec,
    allow_nonuniform: bool,
) -> Result<SolveReport, Error> {
    params.validate()?;
    spec.validate()?;
    let method_valid = check_flooding_mode(params, spec, allow_nonuniform, "horizontal")?;
    let bound = sigma_from_epsilon(params, spec);
    let common = |k: f64| {
        let mut kappa = vec![k; params.t_max + 1];
        kappa[0] = 1.0;
        Policy::new(kappa).expect("k stays in [0, 1]")
    };
    let f = |k: f64| model::delta_loss(params, &common(k), spec.metric) - bound.delta_bound;
    let (k, iterations) = if f(1.0) <= 0.0 {
        (1.0, 0)
    } else {
        (bisect_root(f, 0.0, 1.0, 0.0)?, 1)
    };
    Ok(make_report(
        params,
        spec,
        &bound,
        SolveMethod::Horizontal,
        method_valid,
        common(k),
        iterations,
    ))
}

/// Compares candidates: higher reward wins; rewards within [`TIE_TOL`] are
/// settled in favor of the lexicographically larger policy, i.e. the one
/// that front-loads transmission probability into earlier states.
fn better_candidate(challenger: &(Policy, f64), best: &(Policy, f64)) -> bool {
    if challenger.1 > best.1 + TIE_TOL {
        return true;
    }
    if challenger.1 < best.1 - TIE_TOL {
        return false;
    }
    for (c, b) in challenger.0.as_slice().iter().zip(best.0.as_slice()) {
        if c > b {
            return true;
        }
        if c < b {
            return false;
        }
    }
    false
}

/// Exhaustive search over all policies with at most one randomized busy
/// state, which always contain an optimum. Valid for every metric and for
/// any `nu* >= nu`, at `2^T * T` scalar root-finding cost; refuses
/// `t_max > 16`.
///
/// Every admissible fully deterministic busy-state pattern is a candidate;
/// in addition, for each pattern and each busy state, the state's entry is
/// bisected to make the cost cap exactly active. The best candidate by
/// reward is returned (ties break toward front-loaded policies).
pub fn solve_enumerate(
    params: &SystemParams,
    spec: &ConstraintSpec,
) -> Result<SolveReport, Error> {
    params.validate()?;
    spec.validate()?;
    if params.t_max > 16 {
        return Err(Error::Budget(format!(
            "enumeration over {} busy states needs {} patterns; t_max is \
             capped at 16",
            params.t_max,
            (params.t_max as u128) << params.t_max
        )));
    }
    let bound = sigma_from_epsilon(params, spec);
    let t = params.t_max;
    let mut best: Option<(Policy, f64)> = None;
    let mut iterations = 0usize;
    let offer = |candidate: Policy, best: &mut Option<(Policy, f64)>| {
        let w_s = model::secondary_reward(params, &candidate);
        let challenger = (candidate, w_s);
        match best {
            Some(current) if !better_candidate(&challenger, current) => {}
            _ => *best = Some(challenger),
        }
    };

    // Deterministic patterns over busy states (idle entry pinned to 1).
    for bits in 0u32..(1u32 << t) {
        let mut kappa = vec![1.0];
        kappa.extend((0..t).map(|s| f64::from(bits >> s & 1)));
        let pattern = Policy::new(kappa)?;
        iterations += 1;
        if model::delta_loss(params, &pattern, spec.metric) <= bound.delta_bound {
            offer(pattern, &mut best);
        }
    }

    // One randomized state per pattern, set so the cap is exactly active.
    for q in 1..=t {
        for bits in 0u32..(1u32 << (t - 1)) {
            let mut kappa = vec![1.0; t + 1];
            let mut bit = 0;
            for (theta, k) in kappa.iter_mut().enumerate().skip(1) {
                if theta != q {
                    *k = f64::from(bits >> bit & 1);
                    bit += 1;
                }
            }
            let base = Policy::new(kappa)?;
            let f = |x: f64| {
                let cand = base.with_entry(q, x).expect("x stays in [0, 1]");
                model::delta_loss(params, &cand, spec.metric) - bound.delta_bound
            };
            // The cost increase is nondecreasing in the entry, so an active
            // root exists exactly when it changes sign over [0, 1].
            if f(0.0) > 0.0 || f(1.0) < 0.0 {
                continue;
            }
            iterations += 1;
            let root = bisect_root(f, 0.0, 1.0, 0.0)?;
            offer(base.with_entry(q, root)?, &mut best);
        }
    }

    // kappa = [1, 0, ..., 0] is always admissible, so a candidate exists.
    let (kappa, _) = best.expect("the idle-only policy is always admissible");
    Ok(make_report(
        params,
        spec,
        &bound,
        SolveMethod::Enumerate,
        true,
        kappa,
        iterations,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params_t2() -> SystemParams {
        SystemParams::new(0.8, 0.3, 0.3, 0.0, 0.0, 2).unwrap()
    }

    fn throughput(eps: f64) -> ConstraintSpec {
        ConstraintSpec::new(Metric::Throughput, eps).unwrap()
    }

    #[test]
    fn bisect_finds_sqrt2() {
        let root = bisect_root(|x| x * x - 2.0, 0.0, 2.0, 0.0).unwrap();
        assert!((root - 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn bisect_honors_f_tolerance() {
        let mut evals = 0;
        let root = bisect_root(
            |x| {
                evals += 1;
                x - 0.25
            },
            0.0,
            1.0,
            1e-3,
        )
        .unwrap();
        assert!((root - 0.25).abs() <= 1e-3);
        assert!(evals < 20);
    }

    #[test]
    fn bisect_returns_exact_endpoint_roots() {
        assert_eq!(bisect_root(|x| x, 0.0, 1.0, 0.0).unwrap(), 0.0);
        assert_eq!(bisect_root(|x| x - 1.0, 0.0, 1.0, 0.0).unwrap(), 1.0);
    }

    #[test]
    fn bisect_rejects_bad_inputs() {
        assert!(matches!(
            bisect_root(|x| x + 1.0, 0.0, 1.0, 0.0),
            Err(Error::Bracket(_))
        ));
        assert!(bisect_root(|x| x, 1.0, 0.0, 0.0).is_err());
        assert!(bisect_root(|x| x, 0.0, 1.0, -1.0).is_err());
    }

    #[test]
    fn sigma_matches_hand_values() {
        // Throughput: 5% of the silent-secondary primary throughput.
        let bound = sigma_from_epsilon(&params_t2(), &throughput(0.05));
        assert!((bound.sigma - 0.0293548).abs() < 1e-7);
        assert!((bound.sigma - bound.delta_bound).abs() < 1e-15);

        // Failure probability at epsilon = 0 caps at the silent value.
        let params = SystemParams::new(0.8, 0.3, 0.3, 0.0, 0.0, 4).unwrap();
        let spec = ConstraintSpec::new(Metric::FailureProb, 0.0).unwrap();
        let bound = sigma_from_epsilon(&params, &spec);
        assert!((bound.sigma - 0.0081).abs() < 1e-15);
        assert_eq!(bound.delta_bound, 0.0);

        let spec = ConstraintSpec::new(Metric::NumTx, 0.5).unwrap();
        let bound = sigma_from_epsilon(&params, &spec);
        assert!((bound.sigma - 1.417 * 1.5).abs() < 1e-12);
    }

    #[test]
    fn rejects_negative_epsilon() {
        assert!(ConstraintSpec::new(Metric::Throughput, -0.1).is_err());
        assert!(ConstraintSpec::new(Metric::Throughput, f64::NAN).is_err());
    }

    #[test]
    fn vertical_reproduces_reference_instance() {
        // T = 2, alpha = 0.8, rho = 0.3, lambda = 0.3, epsilon = 0.05:
        // the cap lands inside state 1, at the root of
        // (0.2 + 1.04 * rho_1) / (1 + 0.8 * rho_1) = J_P(0) + sigma.
        let report = solve_vertical(&params_t2(), &throughput(0.05), false).unwrap();
        let z = 0.512 / 1.24 + 0.05 * (1.0 - 0.512 / 1.24);
        let rho_1 = (z - 0.2) / (1.04 - 0.8 * z);
        let kappa_1 = (rho_1 - 0.3) / 0.21;
        assert!((report.kappa.kappa(1) - kappa_1).abs() < 1e-9);
        assert!((report.kappa.kappa(1) - 0.2526).abs() < 5e-5);
        assert_eq!(report.kappa.kappa(0), 1.0);
        assert_eq!(report.kappa.kappa(2), 0.0);
        assert!(report.binding);
        assert!(report.method_valid);
        assert!(report.iterations <= params_t2().t_max);
    }

    #[test]
    fn vertical_returns_idle_only_at_zero_slack() {
        let params = SystemParams::new(0.8, 0.3, 0.3, 0.0, 0.0, 4).unwrap();
        let report = solve_vertical(&params, &throughput(0.0), false).unwrap();
        assert_eq!(report.kappa, Policy::idle_only(4));
        assert_eq!(report.delta, 0.0);
        assert!(report.binding);
    }

    #[test]
    fn vertical_saturates_at_large_slack() {
        let params = SystemParams::new(0.8, 0.3, 0.3, 0.0, 0.0, 4).unwrap();
        let report = solve_vertical(&params, &throughput(10.0), false).unwrap();
        assert_eq!(report.kappa, Policy::all_ones(4));
        assert!(!report.binding);
        assert_eq!(report.iterations, 0);
    }

    #[test]
    fn vertical_policies_have_vertical_shape() {
        let params = SystemParams::new(0.6, 0.25, 0.8, 0.1, 0.0, 5).unwrap();
        for eps in [0.01, 0.05, 0.1, 0.2, 0.4, 0.8] {
            for metric in [Metric::Throughput, Metric::FailureProb] {
                let spec = ConstraintSpec::new(metric, eps).unwrap();
                let report = solve_vertical(&params, &spec, false).unwrap();
                let kappa = report.kappa.as_slice();
                let frac = kappa[1..]
                    .iter()
                    .position(|&k| k < 1.0)
                    .map_or(kappa.len(), |p| p + 1);
                assert!(
                    kappa[frac.min(kappa.len() - 1) + 1..].iter().all(|&k| k == 0.0),
                    "not vertical: {kappa:?}"
                );
                assert!(report.delta <= sigma_from_epsilon(&params, &spec).delta_bound + 1e-9);
            }
        }
    }

    #[test]
    fn flooding_rejects_num_tx_metric() {
        let spec = ConstraintSpec::new(Metric::NumTx, 0.1).unwrap();
        assert!(matches!(
            solve_vertical(&params_t2(), &spec, false),
            Err(Error::Mode(_))
        ));
        assert!(matches!(
            solve_horizontal(&params_t2(), &spec, false),
            Err(Error::Mode(_))
        ));
        assert!(solve_enumerate(&params_t2(), &spec).is_ok());
    }

    #[test]
    fn flooding_requires_override_for_lossier_busy_slots() {
        let params = SystemParams::new(0.8, 0.3, 0.3, 0.0, 0.5, 2).unwrap();
        let spec = throughput(0.05);
        assert!(matches!(
            solve_vertical(&params, &spec, false),
            Err(Error::Mode(_))
        ));
        let report = solve_vertical(&params, &spec, true).unwrap();
        assert!(!report.method_valid);
        // The policy ignores the reward side, so it matches the uniform one.
        let uniform = solve_vertical(&params_t2(), &spec, false).unwrap();
        assert_eq!(report.kappa, uniform.kappa);
    }

    #[test]
    fn horizontal_spreads_one_common_probability() {
        let params = SystemParams::new(0.8, 0.3, 0.3, 0.0, 0.0, 4).unwrap();
        let report = solve_horizontal(&params, &throughput(0.1), false).unwrap();
        let kappa = report.kappa.as_slice();
        assert_eq!(kappa[0], 1.0);
        for theta in 2..=4 {
            assert_eq!(kappa[theta], kappa[1]);
        }
        assert!(kappa[1] > 0.0 && kappa[1] < 1.0);
        assert!(report.binding);

        let vertical = solve_vertical(&params, &throughput(0.1), false).unwrap();
        assert!(report.w_s <= vertical.w_s + 1e-12);
    }

    #[test]
    fn enumerate_agrees_with_vertical_when_uniform() {
        let mut mismatches = Vec::new();
        for (alpha, rho, lambda, eps, t_max) in [
            (0.8, 0.3, 0.3, 0.05, 2),
            (0.8, 0.3, 0.3, 0.15, 4),
            (0.5, 0.6, 0.9, 0.02, 3),
            (0.2, 0.1, 1.0, 0.3, 5),
            (0.9, 0.05, 0.5, 0.08, 1),
        ] {
            let params = SystemParams::new(alpha, rho, lambda, 0.1, 0.0, t_max).unwrap();
            for metric in [Metric::Throughput, Metric::FailureProb] {
                let spec = ConstraintSpec::new(metric, eps).unwrap();
                let v = solve_vertical(&params, &spec, false).unwrap();
                let e = solve_enumerate(&params, &spec).unwrap();
                if (v.w_s - e.w_s).abs() > 1e-9 {
                    mismatches.push((alpha, rho, lambda, eps, t_max, metric, v.w_s, e.w_s));
                }
            }
        }
        assert!(mismatches.is_empty(), "{mismatches:?}");
    }

    #[test]
    fn enumerate_breaks_reward_ties_toward_early_states() {
        // With lambda_s = 1 busy-slot transmissions never succeed, so any
        // admissible kappa[2] value leaves the reward unchanged; the
        // front-loading tie-break must pick kappa[2] = 1. State 1 still
        // hurts (it shrinks the idle mass), so kappa[1] = 0.
        let params = SystemParams::new(0.5, 0.2, 0.6, 0.2, 1.0, 2).unwrap();
        let report = solve_enumerate(&params, &throughput(0.2)).unwrap();
        assert_eq!(report.kappa.as_slice(), &[1.0, 0.0, 1.0]);
    }

    #[test]
    fn enumerate_refuses_oversized_chains() {
        let params = SystemParams::new(0.5, 0.2, 0.6, 0.2, 0.0, 17).unwrap();
        assert!(matches!(
            solve_enumerate(&params, &throughput(0.1)),
            Err(Error::Budget(_))
        ));
    }

    #[test]
    fn reports_serialize_with_stable_schema() {
        let report = solve_vertical(&params_t2(), &throughput(0.05), false).unwrap();
        let json = serde_json::to_value(&report).unwrap();
        let obj = json.as_object().unwrap();
        for key in [
            "method", "metric", "epsilon", "sigma", "kappa", "w_s", "w_p", "delta",
            "binding", "iterations",
        ] {
            assert!(obj.contains_key(key), "missing {key}");
        }
        assert_eq!(obj.len(), 10);
        assert_eq!(obj["method"], "vertical");
        assert_eq!(obj["metric"], "throughput");
        assert!(obj["kappa"].is_array());
    }
}
