//! Markov chain model of the shared channel and its long-run metrics.
//!
//! The channel state is `theta in {0, 1, ..., T}`: state 0 means the primary
//! source is idle, state `theta >= 1` means the primary is performing the
//! `theta`-th transmission attempt of the current packet (at most `T`
//! attempts, then the packet is dropped). The secondary user transmits with
//! probability `kappa[theta]`, which raises the primary failure probability
//! in that slot from `rho` to `rho* = rho + (1 - rho) * lambda`.
//!
//! Chasing the chain by hand gives closed forms for the stationary
//! distribution and every metric of interest; those closed forms are what
//! this module implements. The slot-level simulator in [`crate::sim`] and
//! the eigenvector cross-checks in the tests guard them.

use serde::{Deserialize, Serialize};

use crate::error::Error;

/// Static parameters of the coupled primary/secondary system.
///
/// `nu_star` is not stored: it is derived as `nu + (1 - nu) * lambda_s`,
/// mirroring how the busy-slot primary failure `rho + (1 - rho) * lambda`
/// is derived from `rho`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    /// Probability a new primary packet arrives in a slot where none is
    /// pending. Strictly inside (0, 1).
    pub alpha: f64,
    /// Primary transmission failure probability without secondary
    /// interference, in [0, 1].
    pub rho: f64,
    /// Relative increase of the primary failure probability under secondary
    /// interference, in [0, 1]: the interfered failure probability is
    /// `rho + (1 - rho) * lambda`.
    pub lambda: f64,
    /// Secondary transmission failure probability while the primary is
    /// idle, in [0, 1).
    pub nu: f64,
    /// Relative increase of the secondary failure probability while the
    /// primary is busy, in [0, 1]: the busy-slot failure probability is
    /// `nu + (1 - nu) * lambda_s`.
    pub lambda_s: f64,
    /// Maximum number of transmission attempts per primary packet (>= 1).
    pub t_max: usize,
}

impl SystemParams {
    /// Builds a parameter set, rejecting values outside their domains.
    pub fn new(
        alpha: f64,
        rho: f64,
        lambda: f64,
        nu: f64,
        lambda_s: f64,
        t_max: usize,
    ) -> Result<Self, Error> {
        let params = SystemParams { alpha, rho, lambda, nu, lambda_s, t_max };
        params.validate()?;
        Ok(params)
    }

    /// Checks every field against its domain.
    pub fn validate(&self) -> Result<(), Error> {
        let unit = |name: &str, x: f64| -> Result<(), Error> {
            if !(0.0..=1.0).contains(&x) {
                return Err(Error::Domain(format!("{name} = {x} outside [0, 1]")));
            }
            Ok(())
        };
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::Domain(format!(
                "alpha = {} outside (0, 1)",
                self.alpha
            )));
        }
        unit("rho", self.rho)?;
        unit("lambda", self.lambda)?;
        if !(0.0..1.0).contains(&self.nu) {
            return Err(Error::Domain(format!("nu = {} outside [0, 1)", self.nu)));
        }
        unit("lambda_s", self.lambda_s)?;
        if self.t_max == 0 {
            return Err(Error::Domain("t_max must be at least 1".into()));
        }
        Ok(())
    }

    /// Secondary failure probability while the primary is busy:
    /// `nu + (1 - nu) * lambda_s`.
    pub fn nu_star(&self) -> f64 {
        self.nu + (1.0 - self.nu) * self.lambda_s
    }

    /// True when transmitting next to a busy primary fails no more often
    /// than transmitting while it is idle (`nu* = nu`, i.e. `lambda_s = 0`).
    pub fn uniform_secondary_failure(&self) -> bool {
        self.lambda_s == 0.0
    }

    /// Slope of the effective primary failure in the transmission
    /// probability: `(1 - rho) * lambda`.
    pub(crate) fn interference_slope(&self) -> f64 {
        (1.0 - self.rho) * self.lambda
    }
}

/// A randomized transmission policy: `kappa[theta]` is the probability the
/// secondary transmits while the channel is in state `theta`.
///
/// Entries live in [0, 1] by construction; the vector has `t_max + 1`
/// entries when paired with a [`SystemParams`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Policy {
    kappa: Vec<f64>,
}

impl Policy {
    /// Wraps a probability vector, rejecting entries outside [0, 1].
    pub fn new(kappa: Vec<f64>) -> Result<Self, Error> {
        if kappa.is_empty() {
            return Err(Error::Domain("policy must have at least one entry".into()));
        }
        for (theta, &k) in kappa.iter().enumerate() {
            if !k.is_finite() || !(0.0..=1.0).contains(&k) {
                return Err(Error::Domain(format!(
                    "kappa[{theta}] = {k} outside [0, 1]"
                )));
            }
        }
        Ok(Policy { kappa })
    }

    /// Always-transmit policy for a chain with `t_max` retransmissions.
    pub fn all_ones(t_max: usize) -> Self {
        Policy { kappa: vec![1.0; t_max + 1] }
    }

    /// Never-transmit policy.
    pub fn all_zeros(t_max: usize) -> Self {
        Policy { kappa: vec![0.0; t_max + 1] }
    }

    /// Transmit only while the primary is idle: `[1, 0, ..., 0]`.
    pub fn idle_only(t_max: usize) -> Self {
        let mut kappa = vec![0.0; t_max + 1];
        kappa[0] = 1.0;
        Policy { kappa }
    }

    /// Transmission probability in state `theta`.
    pub fn kappa(&self, theta: usize) -> f64 {
        self.kappa[theta]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.kappa
    }

    pub fn len(&self) -> usize {
        self.kappa.len()
    }

    pub fn is_empty(&self) -> bool {
        self.kappa.is_empty()
    }

    /// Copy of this policy with entry `theta` replaced by `value`.
    pub fn with_entry(&self, theta: usize, value: f64) -> Result<Self, Error> {
        if theta >= self.kappa.len() {
            return Err(Error::Domain(format!(
                "state {theta} out of range for policy of length {}",
                self.kappa.len()
            )));
        }
        let mut kappa = self.kappa.clone();
        kappa[theta] = value;
        Policy::new(kappa)
    }
}

impl TryFrom<Vec<f64>> for Policy {
    type Error = Error;

    fn try_from(kappa: Vec<f64>) -> Result<Self, Error> {
        Policy::new(kappa)
    }
}

impl From<Policy> for Vec<f64> {
    fn from(policy: Policy) -> Vec<f64> {
        policy.kappa
    }
}

/// Stationary distribution over channel states `0..=T`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StateDistribution {
    pub pi: Vec<f64>,
}

/// Long-run metric selected by a constraint or reported by a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    /// Primary cost 1 - W_P: fraction of slots without a primary delivery.
    Throughput,
    /// Probability a primary packet fails all `T` attempts.
    FailureProb,
    /// Mean number of transmission attempts per primary packet.
    NumTx,
}

impl Metric {
    pub fn as_str(&self) -> &'static str {
        match self {
            Metric::Throughput => "throughput",
            Metric::FailureProb => "failure_prob",
            Metric::NumTx => "num_tx",
        }
    }
}

/// All long-run metrics of one (parameters, policy) pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Metrics {
    /// Primary cost: fraction of slots without a primary delivery.
    pub j_p: f64,
    /// Primary throughput `1 - j_p`.
    pub w_p: f64,
    /// Secondary throughput.
    pub w_s: f64,
    /// Per-packet failure probability (all `T` attempts fail).
    pub j_fp: f64,
    /// Mean transmission attempts per primary packet.
    pub j_ntx: f64,
}

pub(crate) fn assert_policy_len(params: &SystemParams, policy: &Policy) {
    assert_eq!(
        policy.len(),
        params.t_max + 1,
        "policy has {} entries but the chain has {} states",
        policy.len(),
        params.t_max + 1
    );
}

/// Primary failure probability during the `theta`-th attempt under the
/// given policy: `rho + (1 - rho) * lambda * kappa[theta]`.
///
/// Only busy states have a transmission to fail, so `theta` must lie in
/// `1..=t_max`.
pub fn effective_failure(
    params: &SystemParams,
    policy: &Policy,
    theta: usize,
) -> Result<f64, Error> {
    assert_policy_len(params, policy);
    if theta == 0 || theta > params.t_max {
        return Err(Error::Domain(format!(
            "effective failure is defined for states 1..={}, got {theta}",
            params.t_max
        )));
    }
    Ok(params.rho + params.interference_slope() * policy.kappa(theta))
}

/// Effective failure probabilities for all busy states, 1-indexed into
/// position `theta - 1`.
fn busy_failures(params: &SystemParams, policy: &Policy) -> Vec<f64> {
    let slope = params.interference_slope();
    (1..=params.t_max)
        .map(|theta| params.rho + slope * policy.kappa(theta))
        .collect()
}

/// Running products `prods[t] = rho_1 * ... * rho_t`, with `prods[0] = 1`.
fn failure_products(rhos: &[f64]) -> Vec<f64> {
    let mut prods = Vec::with_capacity(rhos.len() + 1);
    prods.push(1.0);
    for &r in rhos {
        prods.push(prods.last().unwrap() * r);
    }
    prods
}

/// Normalizer of the stationary distribution:
/// `1 + alpha * sum_{t=1}^{T-1} rho_1 * ... * rho_t`.
pub(crate) fn chain_normalizer(params: &SystemParams, policy: &Policy) -> f64 {
    let prods = failure_products(&busy_failures(params, policy));
    1.0 + params.alpha * prods[1..params.t_max].iter().sum::<f64>()
}

/// One-step transition matrix of the channel state chain, row-stochastic,
/// `(T + 1) x (T + 1)`.
///
/// From state 0 (idle) a packet arrives with probability `alpha`. A busy
/// state `theta < T` moves to `theta + 1` on failure; on success (and from
/// state `T` unconditionally, since the packet leaves either way) the next
/// state is 1 with probability `alpha` and 0 otherwise.
pub fn transition_matrix(params: &SystemParams, policy: &Policy) -> Vec<Vec<f64>> {
    assert_policy_len(params, policy);
    let t_max = params.t_max;
    let alpha = params.alpha;
    let n = t_max + 1;
    let mut matrix = vec![vec![0.0; n]; n];
    matrix[0][0] = 1.0 - alpha;
    matrix[0][1] = alpha;
    for theta in 1..=t_max {
        let row = &mut matrix[theta];
        if theta == t_max {
            row[0] = 1.0 - alpha;
            row[1] = alpha;
        } else {
            let rho_theta = params.rho + params.interference_slope() * policy.kappa(theta);
            row[0] = (1.0 - alpha) * (1.0 - rho_theta);
            row[1] = alpha * (1.0 - rho_theta);
            row[theta + 1] = rho_theta;
        }
    }
    matrix
}

/// Stationary distribution of the channel state chain, in closed form:
///
/// ```text
/// pi(0) = (1 - alpha) / Dn,   pi(theta) = alpha * rho_1 ... rho_{theta-1} / Dn,
/// Dn = 1 + alpha * sum_{t=1}^{T-1} rho_1 ... rho_t.
/// ```
pub fn steady_state(params: &SystemParams, policy: &Policy) -> StateDistribution {
    assert_policy_len(params, policy);
    let prods = failure_products(&busy_failures(params, policy));
    let dn = chain_normalizer(params, policy);
    let mut pi = Vec::with_capacity(params.t_max + 1);
    pi.push((1.0 - params.alpha) / dn);
    for theta in 1..=params.t_max {
        pi.push(params.alpha * prods[theta - 1] / dn);
    }
    StateDistribution { pi }
}

/// Primary cost: the long-run fraction of slots in which no primary packet
/// is delivered (idle slots count as undelivered).
///
/// ```text
/// J_P = [(1 - alpha) + alpha * sum_{t=1}^{T} rho_1 ... rho_t] / Dn
/// ```
pub fn primary_cost(params: &SystemParams, policy: &Policy) -> f64 {
    assert_policy_len(params, policy);
    let prods = failure_products(&busy_failures(params, policy));
    let dn = 1.0 + params.alpha * prods[1..params.t_max].iter().sum::<f64>();
    let numer =
        (1.0 - params.alpha) + params.alpha * prods[1..=params.t_max].iter().sum::<f64>();
    numer / dn
}

/// Secondary throughput: successful secondary transmissions per slot.
///
/// An idle-slot transmission succeeds with probability `1 - nu`, a busy-slot
/// one with probability `1 - nu*`:
///
/// ```text
/// W_S = pi(0) kappa_0 (1 - nu) + sum_{theta=1}^{T} pi(theta) kappa_theta (1 - nu*)
/// ```
pub fn secondary_reward(params: &SystemParams, policy: &Policy) -> f64 {
    let dist = steady_state(params, policy);
    let busy_success = 1.0 - params.nu_star();
    let mut w_s = dist.pi[0] * policy.kappa(0) * (1.0 - params.nu);
    for theta in 1..=params.t_max {
        w_s += dist.pi[theta] * policy.kappa(theta) * busy_success;
    }
    w_s
}

/// Per-packet failure probability: all `T` attempts fail,
/// `J_fp = rho_1 * rho_2 * ... * rho_T`.
pub fn failure_prob_cost(params: &SystemParams, policy: &Policy) -> f64 {
    assert_policy_len(params, policy);
    busy_failures(params, policy).iter().product()
}

/// Mean number of transmission attempts per primary packet:
/// `J_ntx = 1 + sum_{t=1}^{T-1} rho_1 ... rho_t`, which lies in `[1, T]`.
pub fn num_tx_cost(params: &SystemParams, policy: &Policy) -> f64 {
    assert_policy_len(params, policy);
    let prods = failure_products(&busy_failures(params, policy));
    1.0 + prods[1..params.t_max].iter().sum::<f64>()
}

/// Metric cost of `policy` minus the cost at the never-transmit policy:
/// the degradation the secondary inflicts on the primary. Nonnegative, and
/// nondecreasing in every `kappa[theta]`.
pub fn delta_loss(params: &SystemParams, policy: &Policy, metric: Metric) -> f64 {
    let baseline = Policy::all_zeros(params.t_max);
    let cost = |p: &Policy| metric_cost(params, p, metric);
    cost(policy) - cost(&baseline)
}

/// Metric cost of a policy (the quantity the constraint bounds).
pub fn metric_cost(params: &SystemParams, policy: &Policy, metric: Metric) -> f64 {
    match metric {
        Metric::Throughput => primary_cost(params, policy),
        Metric::FailureProb => failure_prob_cost(params, policy),
        Metric::NumTx => num_tx_cost(params, policy),
    }
}

/// Evaluates every long-run metric of one (parameters, policy) pair.
pub fn metrics(params: &SystemParams, policy: &Policy) -> Metrics {
    let j_p = primary_cost(params, policy);
    Metrics {
        j_p,
        w_p: 1.0 - j_p,
        w_s: secondary_reward(params, policy),
        j_fp: failure_prob_cost(params, policy),
        j_ntx: num_tx_cost(params, policy),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn params_t2() -> SystemParams {
        SystemParams::new(0.8, 0.3, 0.3, 0.0, 0.0, 2).unwrap()
    }

    #[test]
    fn rejects_out_of_domain_params() {
        assert!(SystemParams::new(0.0, 0.3, 0.3, 0.0, 0.0, 2).is_err());
        assert!(SystemParams::new(1.0, 0.3, 0.3, 0.0, 0.0, 2).is_err());
        assert!(SystemParams::new(0.5, 1.1, 0.3, 0.0, 0.0, 2).is_err());
        assert!(SystemParams::new(0.5, 0.3, -0.1, 0.0, 0.0, 2).is_err());
        assert!(SystemParams::new(0.5, 0.3, 0.3, 1.0, 0.0, 2).is_err());
        assert!(SystemParams::new(0.5, 0.3, 0.3, 0.0, 1.5, 2).is_err());
        assert!(SystemParams::new(0.5, 0.3, 0.3, 0.0, 0.0, 0).is_err());
        assert!(SystemParams::new(0.5, 1.0, 1.0, 0.99, 1.0, 16).is_ok());
    }

    #[test]
    fn rejects_bad_policies() {
        assert!(Policy::new(vec![]).is_err());
        assert!(Policy::new(vec![0.5, 1.2]).is_err());
        assert!(Policy::new(vec![-0.1]).is_err());
        assert!(Policy::new(vec![f64::NAN, 0.0]).is_err());
        assert!(Policy::new(vec![0.0, 1.0, 0.25]).is_ok());
    }

    #[test]
    fn nu_star_composes_idle_failure_and_busy_increase() {
        let params = SystemParams::new(0.5, 0.2, 0.4, 0.25, 0.5, 3).unwrap();
        assert!((params.nu_star() - (0.25 + 0.75 * 0.5)).abs() < 1e-15);
        assert!(params_t2().uniform_secondary_failure());
        assert!(!params.uniform_secondary_failure());
    }

    #[test]
    fn effective_failure_matches_hand_value() {
        // rho = 0.3, lambda = 0.3, kappa = 0.5 -> 0.3 + 0.7 * 0.3 * 0.5.
        let params = params_t2();
        let policy = Policy::new(vec![1.0, 0.5, 0.0]).unwrap();
        let rho_1 = effective_failure(&params, &policy, 1).unwrap();
        assert!((rho_1 - 0.405).abs() < 1e-15);
        assert!(effective_failure(&params, &policy, 0).is_err());
        assert!(effective_failure(&params, &policy, 3).is_err());
    }

    #[test]
    fn transition_row_matches_hand_value() {
        // Silent secondary, T = 2, alpha = 0.8, rho = 0.3: from state 1 the
        // chain fails onward with 0.3 and otherwise resolves by arrival.
        let params = params_t2();
        let matrix = transition_matrix(&params, &Policy::all_zeros(2));
        let expect = [0.14, 0.56, 0.30];
        for (got, want) in matrix[1].iter().zip(expect) {
            assert!((got - want).abs() < 1e-12, "row {:?}", matrix[1]);
        }
        for row in [&matrix[0], &matrix[2]] {
            for (got, want) in row.iter().zip([0.2, 0.8, 0.0]) {
                assert!((got - want).abs() < 1e-15, "row {row:?}");
            }
        }
    }

    #[test]
    fn steady_state_matches_hand_value() {
        // kappa = [1, 0, 0] leaves busy failures at rho = 0.3, so
        // pi = [0.2, 0.8, 0.24] / 1.24.
        let params = params_t2();
        let dist = steady_state(&params, &Policy::idle_only(2));
        let expect = [0.2 / 1.24, 0.8 / 1.24, 0.24 / 1.24];
        for (got, want) in dist.pi.iter().zip(expect) {
            assert!((got - want).abs() < 1e-12, "pi {:?}", dist.pi);
        }
        assert!((dist.pi.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn primary_cost_matches_hand_value() {
        // Silent secondary: J_P = 0.512 / 1.24 = 0.412903...
        let params = params_t2();
        let j_p = primary_cost(&params, &Policy::all_zeros(2));
        assert!((j_p - 0.512 / 1.24).abs() < 1e-12);
        assert!((j_p - 0.412903).abs() < 1e-6);
        assert!(((1.0 - j_p) - 0.587097).abs() < 1e-6);
    }

    #[test]
    fn secondary_reward_matches_hand_value() {
        // Idle-only transmission with nu = 0 earns exactly pi(0).
        let params = params_t2();
        let w_s = secondary_reward(&params, &Policy::idle_only(2));
        assert!((w_s - 0.2 / 1.24).abs() < 1e-12);
        assert!((w_s - 0.161290).abs() < 1e-6);
    }

    #[test]
    fn failure_prob_matches_hand_values() {
        let silent = SystemParams::new(0.8, 0.3, 0.3, 0.0, 0.0, 4).unwrap();
        let j_fp = failure_prob_cost(&silent, &Policy::all_zeros(4));
        assert!((j_fp - 0.0081).abs() < 1e-15);

        // rho_1 = 0.3 + 0.21 * 0.5 = 0.405, rho_2 = 0.51.
        let params = params_t2();
        let policy = Policy::new(vec![1.0, 0.5, 1.0]).unwrap();
        let j_fp = failure_prob_cost(&params, &policy);
        assert!((j_fp - 0.405 * 0.51).abs() < 1e-15);
    }

    #[test]
    fn num_tx_matches_hand_value() {
        let params = SystemParams::new(0.8, 0.3, 0.3, 0.0, 0.0, 4).unwrap();
        let j_ntx = num_tx_cost(&params, &Policy::all_zeros(4));
        assert!((j_ntx - 1.417).abs() < 1e-12);
    }

    #[test]
    fn delta_loss_matches_hand_value() {
        // Always-on secondary against the T = 2 reference chain.
        let params = params_t2();
        let delta = delta_loss(&params, &Policy::all_ones(2), Metric::Throughput);
        assert!((delta - (0.81608 / 1.408 - 0.512 / 1.24)).abs() < 1e-12);
        assert!((delta - 0.166699).abs() < 1e-6);
    }

    #[test]
    fn delta_loss_ignores_idle_transmissions() {
        let params = SystemParams::new(0.6, 0.4, 0.7, 0.1, 0.3, 5).unwrap();
        for metric in [Metric::Throughput, Metric::FailureProb, Metric::NumTx] {
            let delta = delta_loss(&params, &Policy::idle_only(5), metric);
            assert_eq!(delta, 0.0, "{metric:?}");
        }
    }

    #[test]
    fn policy_serde_round_trips_as_bare_array() {
        let policy = Policy::new(vec![1.0, 0.25, 0.0]).unwrap();
        let json = serde_json::to_string(&policy).unwrap();
        assert_eq!(json, "[1.0,0.25,0.0]");
        let back: Policy = serde_json::from_str(&json).unwrap();
        assert_eq!(back, policy);
        assert!(serde_json::from_str::<Policy>("[0.5,2.0]").is_err());
    }

    /// Multiplies `pi` by the transition matrix until it stops moving; an
    /// oracle for the closed-form stationary distribution.
    fn power_iteration(matrix: &[Vec<f64>]) -> Vec<f64> {
        let n = matrix.len();
        let mut pi = vec![1.0 / n as f64; n];
        for _ in 0..200_000 {
            let mut next = vec![0.0; n];
            for (from, row) in matrix.iter().enumerate() {
                for (to, &p) in row.iter().enumerate() {
                    next[to] += pi[from] * p;
                }
            }
            let moved: f64 = next
                .iter()
                .zip(&pi)
                .map(|(a, b)| (a - b).abs())
                .sum();
            pi = next;
            if moved < 1e-15 {
                break;
            }
        }
        pi
    }

    fn arb_params(t_max: usize) -> impl Strategy<Value = SystemParams> {
        (
            0.05f64..0.95,
            0.0f64..0.98,
            0.0f64..=1.0,
            0.0f64..0.9,
            0.0f64..=1.0,
        )
            .prop_map(move |(alpha, rho, lambda, nu, lambda_s)| {
                SystemParams::new(alpha, rho, lambda, nu, lambda_s, t_max).unwrap()
            })
    }

    fn arb_policy(t_max: usize) -> impl Strategy<Value = Policy> {
        proptest::collection::vec(0.0f64..=1.0, t_max + 1)
            .prop_map(|kappa| Policy::new(kappa).unwrap())
    }

    proptest! {
        #[test]
        fn transition_rows_are_stochastic(
            (params, policy) in (1usize..7).prop_flat_map(|t| (arb_params(t), arb_policy(t)))
        ) {
            for row in transition_matrix(&params, &policy) {
                let sum: f64 = row.iter().sum();
                prop_assert!((sum - 1.0).abs() < 1e-12);
                prop_assert!(row.iter().all(|&p| (0.0..=1.0 + 1e-12).contains(&p)));
            }
        }

        #[test]
        fn steady_state_agrees_with_power_iteration(
            (params, policy) in (1usize..7).prop_flat_map(|t| (arb_params(t), arb_policy(t)))
        ) {
            let closed = steady_state(&params, &policy);
            let iterated = power_iteration(&transition_matrix(&params, &policy));
            prop_assert!((closed.pi.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            for (c, i) in closed.pi.iter().zip(&iterated) {
                prop_assert!((c - i).abs() < 1e-10, "{:?} vs {:?}", closed.pi, iterated);
            }
            // Busy-state mass is nonincreasing: each deeper retransmission
            // state is reached only by failing out of the previous one.
            for theta in 1..params.t_max {
                prop_assert!(closed.pi[theta + 1] <= closed.pi[theta] + 1e-15);
            }
        }

        #[test]
        fn primary_cost_is_mean_of_per_state_costs(
            (params, policy) in (1usize..7).prop_flat_map(|t| (arb_params(t), arb_policy(t)))
        ) {
            // J_P rewritten as an expectation over the stationary
            // distribution: idle slots cost 1, busy slots cost their failure
            // probability.
            let dist = steady_state(&params, &policy);
            let mut expected = dist.pi[0];
            for theta in 1..=params.t_max {
                expected +=
                    dist.pi[theta] * effective_failure(&params, &policy, theta).unwrap();
            }
            prop_assert!((primary_cost(&params, &policy) - expected).abs() < 1e-12);
        }

        #[test]
        fn failure_prob_is_tail_flow_ratio(
            (params, policy) in (1usize..7).prop_flat_map(|t| (arb_params(t), arb_policy(t)))
        ) {
            // Packets fail at rate pi(T) * rho_T and start at rate pi(1).
            let dist = steady_state(&params, &policy);
            let t = params.t_max;
            let rho_t = effective_failure(&params, &policy, t).unwrap();
            let expected = dist.pi[t] * rho_t / dist.pi[1];
            prop_assert!((failure_prob_cost(&params, &policy) - expected).abs() < 1e-12);
        }

        #[test]
        fn num_tx_is_busy_mass_per_packet(
            (params, policy) in (1usize..7).prop_flat_map(|t| (arb_params(t), arb_policy(t)))
        ) {
            let dist = steady_state(&params, &policy);
            let busy: f64 = dist.pi[1..].iter().sum();
            let expected = busy / dist.pi[1];
            let j_ntx = num_tx_cost(&params, &policy);
            prop_assert!((j_ntx - expected).abs() < 1e-12);
            prop_assert!((1.0 - 1e-12..=params.t_max as f64 + 1e-12).contains(&j_ntx));
        }

        #[test]
        fn delta_loss_is_nonnegative_and_monotone(
            (params, policy) in (1usize..7).prop_flat_map(|t| (arb_params(t), arb_policy(t))),
            theta in 1usize..7,
            bump in 0.0f64..=1.0,
        ) {
            let theta = 1 + (theta - 1) % params.t_max;
            for metric in [Metric::Throughput, Metric::FailureProb, Metric::NumTx] {
                let base = delta_loss(&params, &policy, metric);
                prop_assert!(base >= -1e-12);
                let raised = policy
                    .with_entry(theta, policy.kappa(theta).max(bump))
                    .unwrap();
                prop_assert!(delta_loss(&params, &raised, metric) >= base - 1e-12);
            }
        }
    }
}
