//! Occupancy-measure linear program for the constrained policy problem.
//!
//! Instead of searching policy space directly, the chain is described by
//! the long-run fraction of slots `z_u(theta)` spent in state `theta`
//! while the secondary takes action `u` (0 = silent, 1 = transmit). The
//! secondary reward and every supported primary cost are linear in `z`,
//! so the constrained optimum is a vertex of a small polytope and the
//! randomized policy is recovered as a conditional `kappa = z_1 / (z_0 +
//! z_1)` per state.

use crate::error::Error;
use crate::model::{self, Metric, Policy, SystemParams};
use crate::simplex::{simplex_solve, LinearProgram};
use crate::structured::{self, ConstraintSpec, SolveMethod, SolveReport};

/// Mass below which a state is treated as unvisited when extracting the
/// conditional transmission probability.
const MASS_TOL: f64 = 1e-10;

/// Most negative occupancy tolerated from the solver before clamping; a
/// value below this indicates a numerical failure rather than roundoff.
const NEG_TOL: f64 = -1e-12;

/// Per-state, per-action coefficients of the LP.
#[derive(Debug, Clone, PartialEq)]
pub struct PerStateValues {
    /// `reward[theta][u]`: secondary delivery probability in a slot spent
    /// at `theta` under action `u` (the maximization objective).
    pub reward: Vec<[f64; 2]>,
    /// `constraint[theta][u]`: the primary-cost row, to be read as
    /// `sum constraint . z <= rhs`.
    pub constraint: Vec<[f64; 2]>,
    pub rhs: f64,
}

/// Builds the LP coefficient tables for `params` under `spec`.
///
/// The reward column is metric-independent: a transmission delivers with
/// probability `1 - nu` in the idle state and `1 - nu*` in busy states,
/// and silence delivers nothing. The constraint row linearizes the chosen
/// metric cap:
///
/// - throughput: non-delivery probability per slot (1 in idle slots,
///   `rho` or `rho*` in busy slots) capped at its interference-free value
///   plus the absolute slack;
/// - failure probability: `rho z_0(T) + rho* z_1(T) <= sigma * z(1)`,
///   which is the per-packet drop rate cap multiplied through by the
///   packet-start mass;
/// - transmission count: `sum of busy mass <= sigma * z(1)`, the mean
///   attempts-per-packet cap multiplied through the same way.
pub fn per_state_values(params: &SystemParams, spec: &ConstraintSpec) -> PerStateValues {
    let t_max = params.t_max;
    let bound = structured::sigma_from_epsilon(params, spec);
    let rho = params.rho;
    let rho_star = rho + params.interference_slope();
    let idle_gain = 1.0 - params.nu;
    let busy_gain = 1.0 - params.nu_star();

    let mut reward = vec![[0.0, busy_gain]; t_max + 1];
    reward[0] = [0.0, idle_gain];

    let mut constraint = vec![[0.0, 0.0]; t_max + 1];
    let rhs = match spec.metric {
        Metric::Throughput => {
            constraint[0] = [1.0, 1.0];
            for row in constraint.iter_mut().skip(1) {
                *row = [rho, rho_star];
            }
            bound.baseline + bound.delta_bound
        }
        Metric::FailureProb => {
            constraint[t_max] = [rho, rho_star];
            constraint[1][0] += -bound.sigma;
            constraint[1][1] += -bound.sigma;
            0.0
        }
        Metric::NumTx => {
            for row in constraint.iter_mut().skip(1) {
                *row = [1.0, 1.0];
            }
            constraint[1][0] -= bound.sigma;
            constraint[1][1] -= bound.sigma;
            0.0
        }
    };
    PerStateValues { reward, constraint, rhs }
}

/// Assembles the full linear program.
///
/// Variable order is `z_0(0), z_1(0), z_0(1), z_1(1), ..., z_0(T),
/// z_1(T)`: variable `2 * theta + u` is the occupancy of state `theta`
/// under action `u`. Rows are the normalization (all occupancies sum to
/// one), flow balance for states `1..=T` (the idle-state row is redundant
/// given the others and is dropped), and the single metric cap. `z_0(0)`
/// is pinned to zero: idle-slot transmissions never cost the primary
/// anything, so the idle state always transmits.
pub fn build_lp(params: &SystemParams, spec: &ConstraintSpec) -> LinearProgram {
    let t_max = params.t_max;
    let n_vars = 2 * (t_max + 1);
    let idx = |theta: usize, u: usize| 2 * theta + u;
    let alpha = params.alpha;
    let rho = params.rho;
    let rho_star = rho + params.interference_slope();

    let values = per_state_values(params, spec);
    let mut objective = vec![0.0; n_vars];
    for theta in 0..=t_max {
        for u in 0..2 {
            objective[idx(theta, u)] = values.reward[theta][u];
        }
    }

    let mut eq = Vec::with_capacity(t_max + 1);
    eq.push((vec![1.0; n_vars], 1.0));
    for theta_next in 1..=t_max {
        let mut row = vec![0.0; n_vars];
        row[idx(theta_next, 0)] += 1.0;
        row[idx(theta_next, 1)] += 1.0;
        if theta_next == 1 {
            // Every resolution (idle slot, busy success, or a slot at T)
            // feeds state 1 with probability alpha.
            row[idx(0, 0)] -= alpha;
            row[idx(0, 1)] -= alpha;
            for theta in 1..t_max {
                row[idx(theta, 0)] -= alpha * (1.0 - rho);
                row[idx(theta, 1)] -= alpha * (1.0 - rho_star);
            }
            row[idx(t_max, 0)] -= alpha;
            row[idx(t_max, 1)] -= alpha;
        } else {
            row[idx(theta_next - 1, 0)] -= rho;
            row[idx(theta_next - 1, 1)] -= rho_star;
        }
        eq.push((row, 0.0));
    }

    let mut cap = vec![0.0; n_vars];
    for theta in 0..=t_max {
        for u in 0..2 {
            cap[idx(theta, u)] = values.constraint[theta][u];
        }
    }

    LinearProgram {
        n_vars,
        objective,
        eq,
        le: vec![(cap, values.rhs)],
        fixed_zero: vec![idx(0, 0)],
    }
}

/// State/action occupancies: `z[theta] = [silent mass, transmitting mass]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Occupancy {
    pub z: Vec<[f64; 2]>,
}

impl Occupancy {
    /// Reassembles occupancies from a flat solver vector, clamping roundoff
    /// negatives and rejecting anything meaningfully negative or a total
    /// mass away from one.
    pub fn from_flat(x: &[f64]) -> Result<Self, Error> {
        if x.len() < 4 || !x.len().is_multiple_of(2) {
            return Err(Error::Numerical(format!(
                "occupancy vector has length {}, expected an even length >= 4",
                x.len()
            )));
        }
        let mut z = Vec::with_capacity(x.len() / 2);
        for (i, pair) in x.chunks_exact(2).enumerate() {
            let mut entry = [pair[0], pair[1]];
            for v in entry.iter_mut() {
                if *v < NEG_TOL {
                    return Err(Error::Numerical(format!(
                        "occupancy of state {i} is {v}, more negative than {NEG_TOL}"
                    )));
                }
                if *v < 0.0 {
                    *v = 0.0;
                }
            }
            z.push(entry);
        }
        let occ = Occupancy { z };
        let total = occ.total();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::Numerical(format!(
                "occupancies sum to {total}, expected 1"
            )));
        }
        Ok(occ)
    }

    /// The occupancy measure induced by running `policy` on the chain.
    pub fn from_policy(params: &SystemParams, policy: &Policy) -> Self {
        let pi = model::steady_state(params, policy).pi;
        let z = pi
            .iter()
            .enumerate()
            .map(|(theta, &p)| {
                let k = policy.kappa(theta);
                [p * (1.0 - k), p * k]
            })
            .collect();
        Occupancy { z }
    }

    /// Total mass of state `theta` over both actions.
    pub fn state_mass(&self, theta: usize) -> f64 {
        self.z[theta][0] + self.z[theta][1]
    }

    pub fn total(&self) -> f64 {
        self.z.iter().map(|pair| pair[0] + pair[1]).sum()
    }
}

/// Recovers the randomized policy `kappa(theta) = z_1 / (z_0 + z_1)`.
///
/// States with negligible mass are unvisited under the optimal policy;
/// their action is immaterial and is reported as 0.
pub fn extract_policy(occ: &Occupancy) -> Policy {
    let kappa = occ
        .z
        .iter()
        .map(|pair| {
            let mass = pair[0] + pair[1];
            if mass > MASS_TOL {
                (pair[1] / mass).clamp(0.0, 1.0)
            } else {
                0.0
            }
        })
        .collect();
    Policy::new(kappa).expect("conditional probabilities are always in [0, 1]")
}

/// Solves the constrained problem through the occupancy LP.
///
/// Works for every metric and for `nu* > nu`; this is the reference
/// solver the structured methods are checked against.
pub fn solve_lp(params: &SystemParams, spec: &ConstraintSpec) -> Result<SolveReport, Error> {
    params.validate()?;
    spec.validate()?;
    let bound = structured::sigma_from_epsilon(params, spec);
    let program = build_lp(params, spec);
    let sol = simplex_solve(&program)?;
    let occ = Occupancy::from_flat(&sol.x)?;
    let kappa = extract_policy(&occ);
    Ok(structured::make_report(
        params,
        spec,
        &bound,
        SolveMethod::Lp,
        true,
        kappa,
        sol.iterations,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::structured::{solve_enumerate, solve_vertical};

    fn params(
        alpha: f64,
        rho: f64,
        lambda: f64,
        nu: f64,
        lambda_s: f64,
        t_max: usize,
    ) -> SystemParams {
        SystemParams::new(alpha, rho, lambda, nu, lambda_s, t_max).unwrap()
    }

    fn spec(metric: Metric, epsilon: f64) -> ConstraintSpec {
        ConstraintSpec::new(metric, epsilon).unwrap()
    }

    #[test]
    fn t4_throughput_program_has_documented_shape() {
        let p = params(0.8, 0.3, 0.3, 0.0, 0.0, 4);
        let program = build_lp(&p, &spec(Metric::Throughput, 0.1));
        assert_eq!(program.n_vars, 10);
        assert_eq!(program.eq.len(), 5);
        assert_eq!(program.le.len(), 1);
        assert_eq!(program.fixed_zero, vec![0]);
    }

    #[test]
    fn t1_rows_match_hand_expansion() {
        let p = params(0.8, 0.3, 0.5, 0.1, 0.0, 1);
        let s = spec(Metric::Throughput, 0.25);
        let program = build_lp(&p, &s);
        let rho_star = 0.3 + 0.7 * 0.5;
        // Variables: z_0(0), z_1(0), z_0(1), z_1(1).
        assert_eq!(program.objective, vec![0.0, 0.9, 0.0, 0.9]);
        assert_eq!(program.eq[0], (vec![1.0, 1.0, 1.0, 1.0], 1.0));
        let (flow, rhs) = &program.eq[1];
        assert_eq!(*rhs, 0.0);
        assert!((flow[0] + 0.8).abs() < 1e-15);
        assert!((flow[1] + 0.8).abs() < 1e-15);
        assert!((flow[2] - 0.2).abs() < 1e-15);
        assert!((flow[3] - 0.2).abs() < 1e-15);
        let (cap, cap_rhs) = &program.le[0];
        assert_eq!(cap[..2], [1.0, 1.0]);
        assert!((cap[2] - 0.3).abs() < 1e-15);
        assert!((cap[3] - rho_star).abs() < 1e-15);
        // Baseline non-delivery: idle mass + busy failures.
        let baseline = model::primary_cost(&p, &Policy::all_zeros(1));
        let expected = baseline + 0.25 * (1.0 - baseline);
        assert!((cap_rhs - expected).abs() < 1e-12);
    }

    #[test]
    fn recovers_the_binding_two_state_optimum() {
        // alpha = 0.8, rho = 0.3, lambda = 0.3, T = 2, epsilon = 0.05: the
        // cap binds inside state 1 and the optimum is [1, kappa_1, 0] with
        // kappa_1 solving the scalar cost equation.
        let p = params(0.8, 0.3, 0.3, 0.0, 0.0, 2);
        let s = spec(Metric::Throughput, 0.05);
        let report = solve_lp(&p, &s).unwrap();
        let reference = solve_vertical(&p, &s, false).unwrap();
        let k = report.kappa.as_slice();
        assert!((k[0] - 1.0).abs() < 1e-9, "kappa_0 = {}", k[0]);
        assert!(
            (k[1] - reference.kappa.kappa(1)).abs() < 1e-9,
            "kappa_1 = {} vs {}",
            k[1],
            reference.kappa.kappa(1)
        );
        assert!(k[2].abs() < 1e-9);
        assert!((report.w_s - reference.w_s).abs() < 1e-9);
        assert!(report.binding);
        assert!(report.method_valid);
    }

    #[test]
    fn zero_slack_forces_the_idle_only_policy() {
        let p = params(0.8, 0.3, 0.3, 0.0, 0.0, 4);
        let report = solve_lp(&p, &spec(Metric::Throughput, 0.0)).unwrap();
        assert_eq!(report.kappa, Policy::idle_only(4));
        assert!(report.delta.abs() < 1e-12);
    }

    #[test]
    fn occupancies_are_a_stationary_distribution() {
        let p = params(0.6, 0.4, 0.5, 0.1, 0.0, 3);
        let s = spec(Metric::Throughput, 0.12);
        let program = build_lp(&p, &s);
        let sol = simplex_solve(&program).unwrap();
        let occ = Occupancy::from_flat(&sol.x).unwrap();
        assert!((occ.total() - 1.0).abs() < 1e-12);
        for (row, rhs) in &program.eq {
            let lhs: f64 = row.iter().zip(&sol.x).map(|(a, b)| a * b).sum();
            assert!((lhs - rhs).abs() < 1e-10, "residual {}", lhs - rhs);
        }
        // Round trip: the extracted policy regenerates the same measure.
        let kappa = extract_policy(&occ);
        let rebuilt = Occupancy::from_policy(&p, &kappa);
        for (a, b) in occ.z.iter().zip(&rebuilt.z) {
            assert!((a[0] - b[0]).abs() < 1e-9);
            assert!((a[1] - b[1]).abs() < 1e-9);
        }
    }

    #[test]
    fn matches_enumeration_when_busy_losses_differ() {
        let p = params(0.5, 0.2, 0.6, 0.2, 0.6, 3);
        let s = spec(Metric::Throughput, 0.05);
        let lp = solve_lp(&p, &s).unwrap();
        let reference = solve_enumerate(&p, &s).unwrap();
        assert!(
            (lp.w_s - reference.w_s).abs() < 1e-7,
            "lp {} vs enumerate {}",
            lp.w_s,
            reference.w_s
        );
    }

    #[test]
    fn matches_enumeration_on_the_transmission_count_metric() {
        let p = params(0.8, 0.3, 0.3, 0.0, 0.0, 3);
        let s = spec(Metric::NumTx, 0.1);
        let lp = solve_lp(&p, &s).unwrap();
        let reference = solve_enumerate(&p, &s).unwrap();
        assert!(
            (lp.w_s - reference.w_s).abs() < 1e-7,
            "lp {} vs enumerate {}",
            lp.w_s,
            reference.w_s
        );
        let bound = structured::sigma_from_epsilon(&p, &s);
        assert!(lp.delta <= bound.delta_bound + 1e-9);
    }

    #[test]
    fn matches_vertical_on_the_failure_probability_metric() {
        let p = params(0.8, 0.3, 0.1, 0.0, 0.0, 3);
        let s = spec(Metric::FailureProb, 0.5);
        let lp = solve_lp(&p, &s).unwrap();
        let reference = solve_vertical(&p, &s, false).unwrap();
        assert!(
            (lp.w_s - reference.w_s).abs() < 1e-7,
            "lp {} vs vertical {}",
            lp.w_s,
            reference.w_s
        );
    }

    #[test]
    fn per_state_tables_expose_the_metric_rows() {
        let p = params(0.8, 0.3, 0.5, 0.1, 0.2, 2);
        let rho_star = 0.3 + 0.7 * 0.5;
        let fp = per_state_values(&p, &spec(Metric::FailureProb, 0.4));
        let sigma = 0.09 * 1.4;
        assert_eq!(fp.rhs, 0.0);
        assert!((fp.constraint[2][0] - 0.3).abs() < 1e-15);
        assert!((fp.constraint[2][1] - rho_star).abs() < 1e-15);
        assert!((fp.constraint[1][0] + sigma).abs() < 1e-12);
        assert_eq!(fp.constraint[0], [0.0, 0.0]);

        let ntx = per_state_values(&p, &spec(Metric::NumTx, 0.4));
        assert_eq!(ntx.rhs, 0.0);
        assert_eq!(ntx.constraint[0], [0.0, 0.0]);
        assert!((ntx.constraint[2][0] - 1.0).abs() < 1e-15);
        let baseline = model::num_tx_cost(&p, &Policy::all_zeros(2));
        assert!((ntx.constraint[1][0] - (1.0 - baseline * 1.4)).abs() < 1e-12);

        // Reward table is metric independent.
        let nu_star = p.nu_star();
        assert!((fp.reward[0][1] - 0.9).abs() < 1e-15);
        assert!((fp.reward[1][1] - (1.0 - nu_star)).abs() < 1e-15);
        assert_eq!(fp.reward[1][0], 0.0);
    }

    #[test]
    fn rejects_corrupt_occupancies() {
        assert!(Occupancy::from_flat(&[0.5, 0.5, 0.1]).is_err());
        assert!(Occupancy::from_flat(&[0.6, 0.5, -0.1, 0.0]).is_err());
        assert!(Occupancy::from_flat(&[0.25, 0.25, 0.25, 0.2]).is_err());
        let ok = Occupancy::from_flat(&[0.5, 0.5 - 1e-13, -1e-13, 1e-13]).unwrap();
        assert_eq!(ok.z[1][0], 0.0);
    }

    #[test]
    fn extraction_handles_unvisited_states() {
        let occ = Occupancy { z: vec![[0.0, 0.5], [0.25, 0.25], [0.0, 0.0]] };
        let kappa = extract_policy(&occ);
        assert_eq!(kappa.as_slice(), [1.0, 0.5, 0.0]);
    }
}
