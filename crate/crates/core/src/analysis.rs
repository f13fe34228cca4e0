//! Sensitivity analysis of the long-run metrics in the policy entries.
//!
//! Both the primary cost and the secondary reward are ratios of terms that
//! are affine in each `kappa[theta]`, so their partial derivatives have
//! closed forms built from products of the effective failure probabilities.
//! This module implements those closed forms, finite-difference oracles to
//! check them against, and two verification harnesses:
//!
//! - [`verify_exchange`] confirms that moving transmission probability
//!   between two busy states at equal primary cost always favors the
//!   earlier state (the fact behind the vertical solver's shape), and
//! - [`fp_insensitivity`] confirms that the per-packet failure probability
//!   cannot distinguish which of two equally-loaded states received a
//!   perturbation.

use serde::Serialize;

use crate::error::Error;
use crate::model::{self, Metric, Policy, SystemParams};
use crate::structured::bisect_root;

/// Chain quantities entering every closed form: effective failures, their
/// running products, and the numerator/denominator terms of the cost and
/// reward ratios.
struct ChainTerms {
    /// `rhos[i - 1]` is the effective failure in state `i`.
    rhos: Vec<f64>,
    /// `prods[t] = rhos[0] * ... * rhos[t - 1]`, `prods[0] = 1`.
    prods: Vec<f64>,
    /// Cost numerator `(1 - alpha) + alpha * sum_{t=1}^{T} prods[t]`.
    n_j: f64,
    /// Shared denominator `1 + alpha * sum_{t=1}^{T-1} prods[t]`.
    d: f64,
    /// Reward numerator `(1 - alpha) kappa_0 + alpha * sum kappa_t prods[t-1]`.
    n_w: f64,
}

impl ChainTerms {
    fn new(params: &SystemParams, policy: &Policy) -> Self {
        assert_eq!(policy.len(), params.t_max + 1, "policy/chain size mismatch");
        let t_max = params.t_max;
        let slope = (1.0 - params.rho) * params.lambda;
        let rhos: Vec<f64> = (1..=t_max)
            .map(|theta| params.rho + slope * policy.kappa(theta))
            .collect();
        let mut prods = Vec::with_capacity(t_max + 1);
        prods.push(1.0);
        for &r in &rhos {
            prods.push(prods.last().unwrap() * r);
        }
        let alpha = params.alpha;
        let n_j = (1.0 - alpha) + alpha * prods[1..=t_max].iter().sum::<f64>();
        let d = 1.0 + alpha * prods[1..t_max].iter().sum::<f64>();
        let mut n_w = (1.0 - alpha) * policy.kappa(0);
        for t in 1..=t_max {
            n_w += alpha * policy.kappa(t) * prods[t - 1];
        }
        ChainTerms { rhos, prods, n_j, d, n_w }
    }

    /// `sum_{t=from}^{to} prod_{i=1..t, i != skip} rhos_i` for a busy state
    /// `skip >= 1` with `from >= skip`, all 1-indexed. Products are built
    /// without division so zero factors stay exact.
    fn excluded_product_sum(&self, skip: usize, from: usize, to: usize) -> f64 {
        let mut p = self.prods[skip - 1];
        let mut total = 0.0;
        for t in skip..=to {
            if t > skip {
                p *= self.rhos[t - 1];
            }
            if t >= from {
                total += p;
            }
        }
        total
    }

    /// Derivative of the cost numerator in `kappa[theta]`, `theta >= 1`:
    /// `alpha * slope * sum_{t=theta}^{T} prod_{i != theta} rhos_i`.
    fn d_cost_numer(&self, params: &SystemParams, theta: usize) -> f64 {
        params.alpha
            * params_slope(params)
            * self.excluded_product_sum(theta, theta, self.rhos.len())
    }

    /// Derivative of the shared denominator in `kappa[theta]`, `theta >= 1`.
    fn d_denom(&self, params: &SystemParams, theta: usize) -> f64 {
        if self.rhos.len() < 2 || theta > self.rhos.len() - 1 {
            return 0.0;
        }
        params.alpha
            * params_slope(params)
            * self.excluded_product_sum(theta, theta, self.rhos.len() - 1)
    }

    /// Derivative of the reward numerator in `kappa[theta]`.
    fn d_reward_numer(&self, params: &SystemParams, policy: &Policy, theta: usize) -> f64 {
        if theta == 0 {
            return 1.0 - params.alpha;
        }
        let mut p = self.prods[theta - 1];
        let mut tail = 0.0;
        for t in (theta + 1)..=self.rhos.len() {
            // p holds prod_{i=1..t-1, i != theta} rhos_i here.
            tail += policy.kappa(t) * p;
            p *= self.rhos[t - 1];
        }
        params.alpha * self.prods[theta - 1] + params.alpha * params_slope(params) * tail
    }
}

fn params_slope(params: &SystemParams) -> f64 {
    (1.0 - params.rho) * params.lambda
}

/// Gradient of the primary cost in the policy entries (entry 0 is zero:
/// idle-slot secondary transmissions cannot collide with the primary).
/// Every busy-state entry is nonnegative, and strictly positive when
/// `alpha < 1`, `lambda > 0` and `rho` keeps all chain states reachable.
pub fn cost_gradient(params: &SystemParams, policy: &Policy) -> Vec<f64> {
    let terms = ChainTerms::new(params, policy);
    let mut grad = vec![0.0];
    for theta in 1..=params.t_max {
        let dn = terms.d_cost_numer(params, theta);
        let dd = terms.d_denom(params, theta);
        grad.push((dn * terms.d - dd * terms.n_j) / (terms.d * terms.d));
    }
    grad
}

/// Gradient of the secondary reward in the policy entries.
///
/// The closed form covers the uniform-failure mode (`nu* = nu`, i.e.
/// `lambda_s = 0`), where the reward is `(1 - nu) * N_W / D`; outside it
/// the reward is not monotone in the entries and the caller should use
/// [`fd_reward_gradient`]. All entries are strictly positive for
/// non-degenerate parameters.
pub fn reward_gradient(params: &SystemParams, policy: &Policy) -> Result<Vec<f64>, Error> {
    if !params.uniform_secondary_failure() {
        return Err(Error::Mode(format!(
            "the closed-form reward gradient requires equal idle/busy \
             secondary failure probabilities (lambda_s = 0, here lambda_s = {})",
            params.lambda_s
        )));
    }
    let terms = ChainTerms::new(params, policy);
    let scale = 1.0 - params.nu;
    let mut grad = Vec::with_capacity(params.t_max + 1);
    for theta in 0..=params.t_max {
        let dn = terms.d_reward_numer(params, policy, theta);
        let dd = if theta == 0 { 0.0 } else { terms.d_denom(params, theta) };
        grad.push(scale * (dn * terms.d - dd * terms.n_w) / (terms.d * terms.d));
    }
    Ok(grad)
}

/// Finite-difference gradient of `f` over the policy entries: central
/// differences of step `h` inside `[0, 1]`, second-order one-sided at the
/// boundaries. `h` must be positive and at most 0.25.
pub fn fd_gradient<F>(f: F, policy: &Policy, h: f64) -> Vec<f64>
where
    F: Fn(&Policy) -> f64,
{
    assert!(h > 0.0 && h <= 0.25, "step {h} out of range");
    let eval = |theta: usize, x: f64| f(&policy.with_entry(theta, x).expect("x in [0, 1]"));
    (0..policy.len())
        .map(|theta| {
            let x = policy.kappa(theta);
            if x - h >= 0.0 && x + h <= 1.0 {
                (eval(theta, x + h) - eval(theta, x - h)) / (2.0 * h)
            } else if x + 2.0 * h <= 1.0 {
                (-3.0 * eval(theta, x) + 4.0 * eval(theta, x + h) - eval(theta, x + 2.0 * h))
                    / (2.0 * h)
            } else {
                (3.0 * eval(theta, x) - 4.0 * eval(theta, x - h) + eval(theta, x - 2.0 * h))
                    / (2.0 * h)
            }
        })
        .collect()
}

/// Finite-difference oracle for the gradient of a metric cost.
pub fn fd_metric_gradient(
    params: &SystemParams,
    policy: &Policy,
    metric: Metric,
    h: f64,
) -> Vec<f64> {
    fd_gradient(|p| model::metric_cost(params, p, metric), policy, h)
}

/// Finite-difference oracle for the reward gradient; valid in every mode.
pub fn fd_reward_gradient(params: &SystemParams, policy: &Policy, h: f64) -> Vec<f64> {
    fd_gradient(|p| model::secondary_reward(params, p), policy, h)
}

/// Closed-form partials `(d_k0, d_k1, d_k2)` of the secondary reward for a
/// two-attempt chain, valid for any `nu* >= nu`:
///
/// ```text
/// W_S = [(1 - alpha)(1 - nu) k0 + (1 - nu*) alpha (k1 + rho_1 k2)] / (1 + alpha rho_1)
/// ```
///
/// Only the `k1` partial can change sign; see [`nu_star_threshold`].
pub fn t2_reward_partials(
    params: &SystemParams,
    policy: &Policy,
) -> Result<(f64, f64, f64), Error> {
    if params.t_max != 2 {
        return Err(Error::Domain(format!(
            "two-attempt partials require t_max = 2, got {}",
            params.t_max
        )));
    }
    assert_eq!(policy.len(), 3, "policy/chain size mismatch");
    let (alpha, nu) = (params.alpha, params.nu);
    let nu_star = params.nu_star();
    let slope = params_slope(params);
    let rho_1 = params.rho + slope * policy.kappa(1);
    let denom = 1.0 + alpha * rho_1;
    let d_k0 = (1.0 - alpha) * (1.0 - nu) / denom;
    let d_k2 = (1.0 - nu_star) * alpha * rho_1 / denom;
    let d_k1 = alpha
        * ((1.0 - nu_star) * (1.0 + alpha * params.rho + slope * policy.kappa(2))
            - slope * (1.0 - alpha) * (1.0 - nu) * policy.kappa(0))
        / (denom * denom);
    Ok((d_k0, d_k1, d_k2))
}

/// Largest busy-slot failure probability `nu*` at which transmitting during
/// the primary's first attempt still helps the secondary, for a two-attempt
/// chain with `kappa[0] = 1`: the `k1` reward partial is positive exactly
/// when `nu* <` this value. At `lambda = 0` it equals 1 (interference-free
/// transmissions always help); values above 1 mean the partial is positive
/// for every admissible `nu*`.
pub fn nu_star_threshold(params: &SystemParams, kappa_2: f64) -> f64 {
    let slope = params_slope(params);
    let base = 1.0 + params.alpha * params.rho + slope * kappa_2;
    (base - slope * (1.0 - params.alpha) * (1.0 - params.nu)) / base
}

/// Affine coefficients describing how the cost and reward ratios respond to
/// a shared perturbation of two equally-loaded busy states `j < r`.
///
/// With `kappa[j] = kappa[r]` and `kappa[t] = 0` for `t > r`, perturbing
/// entry `r` by `delta` moves the metrics along
///
/// ```text
/// J_P = (n_j + b delta) / (d + a delta),   W_S / (1 - nu) = (n_w + g delta) / (d + a delta)
/// ```
///
/// and perturbing entry `j` instead replaces `(b, a, g)` by
/// `(b + c, a + c, g + f)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PerturbationConstants {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub f: f64,
    pub g: f64,
    pub n_j: f64,
    pub n_w: f64,
    pub d: f64,
}

fn check_exchange_hypotheses(
    params: &SystemParams,
    policy: &Policy,
    j: usize,
    r: usize,
) -> Result<(), Error> {
    assert_eq!(policy.len(), params.t_max + 1, "policy/chain size mismatch");
    if !(j >= 1 && j < r && r <= params.t_max) {
        return Err(Error::Hypothesis(format!(
            "need busy states 0 < j < r <= {}, got j = {j}, r = {r}",
            params.t_max
        )));
    }
    if policy.kappa(j) != policy.kappa(r) {
        return Err(Error::Hypothesis(format!(
            "states {j} and {r} must carry equal probability, got {} and {}",
            policy.kappa(j),
            policy.kappa(r)
        )));
    }
    for t in (r + 1)..=params.t_max {
        if policy.kappa(t) != 0.0 {
            return Err(Error::Hypothesis(format!(
                "states beyond {r} must be silent, but kappa[{t}] = {}",
                policy.kappa(t)
            )));
        }
    }
    Ok(())
}

/// Computes the [`PerturbationConstants`] of a hypothesis-satisfying
/// `(policy, j, r)` triple.
pub fn perturbation_constants(
    params: &SystemParams,
    policy: &Policy,
    j: usize,
    r: usize,
) -> Result<PerturbationConstants, Error> {
    check_exchange_hypotheses(params, policy, j, r)?;
    let terms = ChainTerms::new(params, policy);
    let al = params.alpha * params_slope(params);
    let a = terms.d_denom(params, r);
    let b = terms.d_cost_numer(params, r);
    let g = terms.d_reward_numer(params, policy, r);
    let c = al * terms.excluded_product_sum(j, j, r - 1);
    let mut f = params.alpha * (terms.prods[j - 1] - terms.prods[r - 1]);
    {
        let mut p = terms.prods[j - 1];
        let mut tail = 0.0;
        for t in (j + 1)..=r {
            tail += policy.kappa(t) * p;
            p *= terms.rhos[t - 1];
        }
        f += al * tail;
    }
    Ok(PerturbationConstants {
        a,
        b,
        c,
        f,
        g,
        n_j: terms.n_j,
        n_w: terms.n_w,
        d: terms.d,
    })
}

/// Which way [`verify_exchange`] perturbs the pair of states.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ExchangeDirection {
    /// Raise probabilities; the earlier state should win reward.
    Increase,
    /// Lower probabilities; lowering the later state should keep more.
    Decrease,
}

/// Outcome of one equal-cost exchange comparison.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExchangeReport {
    pub direction: ExchangeDirection,
    /// Step applied to the later state `r`.
    pub delta_r: f64,
    /// Equal-primary-cost step for the earlier state `j`, from bisection.
    pub delta_j: f64,
    /// Residual primary-cost mismatch of the two perturbed policies.
    pub cost_gap: f64,
    /// Reward after perturbing state `j` by `delta_j`.
    pub w_j: f64,
    /// Reward after perturbing state `r` by `delta_r`.
    pub w_r: f64,
    /// `w_j - w_r`.
    pub margin: f64,
    /// Expected strict ordering: `w_j > w_r` when increasing, `w_j < w_r`
    /// when decreasing.
    pub ordering_holds: bool,
    /// The earlier state always needs the smaller step.
    pub delta_j_lt_delta_r: bool,
}

/// Perturbs the later state `r` by `delta_r`, finds the step on the earlier
/// state `j` that produces the same primary cost, and compares the two
/// rewards. For `nu* = nu` the earlier state is guaranteed to be the better
/// place to hold probability: strictly higher reward when increasing,
/// strictly lower when decreasing.
///
/// Fails with a hypothesis violation when the inputs break the equal-load /
/// silent-tail assumptions or when no equal-cost step exists in range
/// (degenerate parameters make the cost insensitive to the exchange).
pub fn verify_exchange(
    params: &SystemParams,
    policy: &Policy,
    j: usize,
    r: usize,
    delta_r: f64,
    direction: ExchangeDirection,
) -> Result<ExchangeReport, Error> {
    check_exchange_hypotheses(params, policy, j, r)?;
    let kappa_jr = policy.kappa(r);
    let room = match direction {
        ExchangeDirection::Increase => 1.0 - kappa_jr,
        ExchangeDirection::Decrease => kappa_jr,
    };
    if !(delta_r > 0.0 && delta_r <= room) {
        return Err(Error::Hypothesis(format!(
            "step {delta_r} out of range (0, {room}] for {direction:?} from \
             kappa = {kappa_jr}"
        )));
    }
    let sign = match direction {
        ExchangeDirection::Increase => 1.0,
        ExchangeDirection::Decrease => -1.0,
    };
    let perturbed_r = policy.with_entry(r, kappa_jr + sign * delta_r)?;
    let target = model::primary_cost(params, &perturbed_r);
    let at_j = |x: f64| -> Result<Policy, Error> { policy.with_entry(j, kappa_jr + sign * x) };
    let f = |x: f64| model::primary_cost(params, &at_j(x).expect("x in range")) - target;
    let delta_j = bisect_root(f, 0.0, delta_r, 0.0).map_err(|e| match e {
        Error::Bracket(msg) => Error::Hypothesis(format!(
            "no equal-cost step on state {j} within (0, {delta_r}]: {msg}"
        )),
        other => other,
    })?;
    let perturbed_j = at_j(delta_j)?;
    let w_j = model::secondary_reward(params, &perturbed_j);
    let w_r = model::secondary_reward(params, &perturbed_r);
    let margin = w_j - w_r;
    let ordering_holds = match direction {
        ExchangeDirection::Increase => w_j > w_r,
        ExchangeDirection::Decrease => w_j < w_r,
    };
    Ok(ExchangeReport {
        direction,
        delta_r,
        delta_j,
        cost_gap: f(delta_j).abs(),
        w_j,
        w_r,
        margin,
        ordering_holds,
        delta_j_lt_delta_r: delta_j < delta_r,
    })
}

/// Outcome of one failure-probability shift comparison.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FpInsensitivityReport {
    /// Per-packet failure probability after perturbing the earlier state.
    pub left: f64,
    /// ... after perturbing the later state.
    pub right: f64,
    pub diff: f64,
    /// `|diff| <= 1e-14`; the two values are the same product with two
    /// factors swapped, so only association order can separate them.
    pub holds: bool,
}

/// Applies the same probability shift `delta` to two equally-loaded busy
/// states and compares the per-packet failure probabilities. The products
/// differ only in factor order, so they agree to floating-point roundoff;
/// this is why the failure-probability metric cannot tell the vertical
/// solver where (below the cap) to place probability, only how much.
pub fn fp_insensitivity(
    params: &SystemParams,
    policy: &Policy,
    j: usize,
    r: usize,
    delta: f64,
) -> Result<FpInsensitivityReport, Error> {
    check_exchange_hypotheses(params, policy, j, r)?;
    let kappa_jr = policy.kappa(j);
    if !(delta >= -kappa_jr && delta <= 1.0 - kappa_jr) {
        return Err(Error::Domain(format!(
            "shift {delta} leaves [0, 1] from kappa = {kappa_jr}"
        )));
    }
    let left = model::failure_prob_cost(params, &policy.with_entry(j, kappa_jr + delta)?);
    let right = model::failure_prob_cost(params, &policy.with_entry(r, kappa_jr + delta)?);
    let diff = left - right;
    Ok(FpInsensitivityReport { left, right, diff, holds: diff.abs() <= 1e-14 })
}
