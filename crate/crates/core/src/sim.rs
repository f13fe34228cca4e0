//! Slot-level Monte Carlo simulation of the coexistence chain.
//!
//! The simulator replays the exact slot semantics the closed forms
//! summarize: a packet needs up to `t_max` attempts, the secondary's
//! randomized action modulates the per-attempt failure probability, and
//! every resolution is followed by a fresh arrival draw. It exists to
//! cross-check the analysis, so it shares nothing with it but the
//! parameter struct.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::Error;
use crate::model::{assert_policy_len, Policy, SystemParams};

/// Number of equal batches the counted region is split into for
/// batch-means standard errors.
const BATCHES: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SimConfig {
    /// Total slots to run, warmup included.
    pub n_slots: u64,
    pub seed: u64,
    /// Leading slots excluded from every estimate.
    pub warmup_slots: u64,
}

impl SimConfig {
    pub fn validate(&self) -> Result<(), Error> {
        let counted = self.n_slots.saturating_sub(self.warmup_slots);
        if counted / BATCHES as u64 == 0 {
            return Err(Error::Config(format!(
                "need at least {BATCHES} counted slots after warmup, got {counted} \
                 (n_slots = {}, warmup_slots = {})",
                self.n_slots, self.warmup_slots
            )));
        }
        Ok(())
    }
}

/// Point estimates and batch-means standard errors from one run.
///
/// Rates (`w_p_hat`, `w_s_hat`, occupancies) are per counted slot;
/// `fp_hat` and `ntx_hat` are per completed packet. A run too short to
/// complete any packet reports NaN for the per-packet ratios.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimStats {
    pub w_p_hat: f64,
    pub w_p_se: f64,
    pub w_s_hat: f64,
    pub w_s_se: f64,
    pub fp_hat: f64,
    pub fp_se: f64,
    pub ntx_hat: f64,
    pub ntx_se: f64,
    pub occupancy_hat: Vec<f64>,
    pub occupancy_se: Vec<f64>,
    pub slots_counted: u64,
    pub packets_completed: u64,
    /// Generator identifier, for reproducibility records.
    pub prng: String,
}

#[derive(Clone, Default)]
struct BatchAcc {
    delivered: u64,
    sec_success: u64,
    drops: u64,
    completions: u64,
    busy: u64,
    visits: Vec<u64>,
}

fn mean_se(values: impl Iterator<Item = f64> + Clone) -> f64 {
    let n = values.clone().count();
    if n < 2 {
        return f64::NAN;
    }
    let mean = values.clone().sum::<f64>() / n as f64;
    let var = values.map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64;
    (var / n as f64).sqrt()
}

/// Runs the chain for `config.n_slots` slots and returns the estimates.
///
/// Four independent ChaCha8 streams are derived from the seed (streams
/// 0-3: arrival, primary failure, secondary action, secondary failure)
/// and each is advanced exactly once per slot whether or not the draw is
/// used, so runs with the same seed see identical randomness regardless
/// of the policy — differences between policies are then pathwise, not
/// sampling noise.
pub fn simulate(
    params: &SystemParams,
    policy: &Policy,
    config: &SimConfig,
) -> Result<SimStats, Error> {
    run(params, policy, config, None)
}

/// [`simulate`], additionally writing one CSV line per slot (warmup
/// included) with columns `slot,state,secondary_tx,primary_success,
/// secondary_success` (flags as 0/1).
pub fn simulate_with_trace(
    params: &SystemParams,
    policy: &Policy,
    config: &SimConfig,
    sink: &mut dyn Write,
) -> Result<SimStats, Error> {
    run(params, policy, config, Some(sink))
}

fn run(
    params: &SystemParams,
    policy: &Policy,
    config: &SimConfig,
    mut trace: Option<&mut dyn Write>,
) -> Result<SimStats, Error> {
    params.validate()?;
    assert_policy_len(params, policy);
    config.validate()?;

    let t_max = params.t_max;
    let alpha = params.alpha;
    let rho = params.rho;
    let rho_star = rho + params.interference_slope();
    let nu = params.nu;
    let nu_star = params.nu_star();

    let batch_len = (config.n_slots - config.warmup_slots) / BATCHES as u64;
    let counted = batch_len * BATCHES as u64;
    let total_slots = config.warmup_slots + counted;

    let mut streams = Vec::with_capacity(4);
    for k in 0..4u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        rng.set_stream(k);
        streams.push(rng);
    }
    let [mut arrival_rng, mut primary_rng, mut action_rng, mut secondary_rng]: [ChaCha8Rng; 4] =
        streams.try_into().expect("exactly four streams");

    if let Some(sink) = trace.as_deref_mut() {
        writeln!(sink, "slot,state,secondary_tx,primary_success,secondary_success")
            .map_err(|e| Error::Io(e.to_string()))?;
    }

    let mut accs =
        vec![BatchAcc { visits: vec![0; t_max + 1], ..BatchAcc::default() }; BATCHES];
    let mut state = 0usize;
    for slot in 0..total_slots {
        let u_arrival: f64 = arrival_rng.gen();
        let u_primary: f64 = primary_rng.gen();
        let u_action: f64 = action_rng.gen();
        let u_secondary: f64 = secondary_rng.gen();

        let tx = u_action < policy.kappa(state);
        let sec_fail_prob = if state == 0 { nu } else { nu_star };
        let sec_success = tx && u_secondary >= sec_fail_prob;

        let mut delivered = false;
        let mut dropped = false;
        let next_state = if state == 0 {
            usize::from(u_arrival < alpha)
        } else {
            let fail = u_primary < if tx { rho_star } else { rho };
            if fail && state < t_max {
                state + 1
            } else {
                delivered = !fail;
                dropped = fail;
                usize::from(u_arrival < alpha)
            }
        };

        if slot >= config.warmup_slots {
            let acc = &mut accs[((slot - config.warmup_slots) / batch_len) as usize];
            acc.visits[state] += 1;
            acc.busy += u64::from(state > 0);
            acc.delivered += u64::from(delivered);
            acc.sec_success += u64::from(sec_success);
            acc.drops += u64::from(dropped);
            acc.completions += u64::from(delivered || dropped);
        }
        if let Some(sink) = trace.as_deref_mut() {
            writeln!(
                sink,
                "{slot},{state},{},{},{}",
                u8::from(tx),
                u8::from(delivered),
                u8::from(sec_success)
            )
            .map_err(|e| Error::Io(e.to_string()))?;
        }
        state = next_state;
    }

    let slot_rate = |f: &dyn Fn(&BatchAcc) -> u64| {
        let total: u64 = accs.iter().map(f).sum();
        let hat = total as f64 / counted as f64;
        let se = mean_se(accs.iter().map(|a| f(a) as f64 / batch_len as f64));
        (hat, se)
    };
    let packet_ratio = |f: &dyn Fn(&BatchAcc) -> u64| {
        let num: u64 = accs.iter().map(f).sum();
        let den: u64 = accs.iter().map(|a| a.completions).sum();
        let hat = if den > 0 { num as f64 / den as f64 } else { f64::NAN };
        let valid = accs.iter().filter(|a| a.completions > 0);
        let se = mean_se(valid.map(|a| f(a) as f64 / a.completions as f64));
        (hat, se)
    };

    let (w_p_hat, w_p_se) = slot_rate(&|a| a.delivered);
    let (w_s_hat, w_s_se) = slot_rate(&|a| a.sec_success);
    let (fp_hat, fp_se) = packet_ratio(&|a| a.drops);
    let (ntx_hat, ntx_se) = packet_ratio(&|a| a.busy);
    let mut occupancy_hat = Vec::with_capacity(t_max + 1);
    let mut occupancy_se = Vec::with_capacity(t_max + 1);
    for theta in 0..=t_max {
        let (hat, se) = slot_rate(&|a| a.visits[theta]);
        occupancy_hat.push(hat);
        occupancy_se.push(se);
    }

    Ok(SimStats {
        w_p_hat,
        w_p_se,
        w_s_hat,
        w_s_se,
        fp_hat,
        fp_se,
        ntx_hat,
        ntx_se,
        occupancy_hat,
        occupancy_se,
        slots_counted: counted,
        packets_completed: accs.iter().map(|a| a.completions).sum(),
        prng: "chacha8".into(),
    })
}
