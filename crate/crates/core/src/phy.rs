//! Physical-layer map from link budgets to failure probabilities.
//!
//! Rates are in bits/slot against Shannon capacity `log2(1 + SNR)`. A
//! transmission fails when its rate exceeds the instantaneous capacity of
//! its link, so each failure probability is the tail probability of a
//! gain (or gain ratio) falling below a threshold.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::Error;

/// How the secondary receiver handles the primary's signal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SecondaryRxMode {
    /// Primary interference is folded into the noise floor.
    TreatAsNoise,
    /// The receiver first tries to jointly decode and subtract the
    /// primary's signal, falling back to treating it as noise.
    OpportunisticCancel,
}

/// Channel gain statistics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FadingModel {
    /// Gains are independent exponentials with the configured means.
    Rayleigh,
    /// Gains sit exactly at their means (no fading).
    Deterministic,
}

/// Rates, transmit powers, and mean channel gains of the two links.
///
/// `gbar_xy` is the mean gain from transmitter `x` to receiver `y`
/// (p = primary, s = secondary); noise power is normalized to one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkBudget {
    pub r_p: f64,
    pub r_s: f64,
    pub p_p: f64,
    pub p_s: f64,
    pub gbar_pp: f64,
    pub gbar_ps: f64,
    pub gbar_ss: f64,
    pub gbar_sp: f64,
    pub secondary_rx_mode: SecondaryRxMode,
}

impl LinkBudget {
    pub fn validate(&self) -> Result<(), Error> {
        for (name, v) in [("r_p", self.r_p), ("r_s", self.r_s)] {
            if !v.is_finite() || v <= 0.0 {
                return Err(Error::Domain(format!("{name} must be positive, got {v}")));
            }
        }
        for (name, v) in [("p_p", self.p_p), ("p_s", self.p_s)] {
            if !v.is_finite() || v <= 0.0 {
                return Err(Error::Domain(format!("{name} must be positive, got {v}")));
            }
        }
        for (name, v) in [
            ("gbar_pp", self.gbar_pp),
            ("gbar_ps", self.gbar_ps),
            ("gbar_ss", self.gbar_ss),
            ("gbar_sp", self.gbar_sp),
        ] {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::Domain(format!(
                    "{name} must be nonnegative, got {v}"
                )));
            }
        }
        Ok(())
    }
}

/// Shannon capacity `log2(1 + snr)` in bits per slot.
pub fn capacity(snr: f64) -> Result<f64, Error> {
    if !snr.is_finite() || snr < 0.0 {
        return Err(Error::Domain(format!("SNR must be nonnegative, got {snr}")));
    }
    Ok((1.0 + snr).log2())
}

/// The four slot-level failure probabilities the chain model consumes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FailureProbs {
    /// Primary failure, secondary silent.
    pub rho: f64,
    /// Primary failure under secondary interference.
    pub rho_star: f64,
    /// Secondary failure in an idle slot.
    pub nu: f64,
    /// Secondary failure next to an active primary.
    pub nu_star: f64,
}

impl FailureProbs {
    pub fn validate(&self) -> Result<(), Error> {
        for (name, v) in [
            ("rho", self.rho),
            ("rho_star", self.rho_star),
            ("nu", self.nu),
            ("nu_star", self.nu_star),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::Domain(format!(
                    "{name} must be a probability, got {v}"
                )));
            }
        }
        if self.rho_star < self.rho - 1e-12 {
            return Err(Error::Domain(format!(
                "rho_star = {} below rho = {}: interference cannot help the primary",
                self.rho_star, self.rho
            )));
        }
        if self.nu_star < self.nu - 1e-12 {
            return Err(Error::Domain(format!(
                "nu_star = {} below nu = {}: an active primary cannot help the secondary",
                self.nu_star, self.nu
            )));
        }
        Ok(())
    }

    /// Converts the probability pairs into the multiplicative interference
    /// factors `lambda = (rho* - rho) / (1 - rho)` and the analogous
    /// `lambda_s`; a link that already always fails gets factor 0.
    pub fn increasing_factors(&self) -> Result<(f64, f64), Error> {
        self.validate()?;
        let factor = |base: f64, starred: f64| {
            if base >= 1.0 {
                0.0
            } else {
                ((starred - base) / (1.0 - base)).clamp(0.0, 1.0)
            }
        };
        Ok((
            factor(self.rho, self.rho_star),
            factor(self.nu, self.nu_star),
        ))
    }
}

/// Instantaneous gains of the four links in one slot.
struct Gains {
    g_pp: f64,
    g_ps: f64,
    g_ss: f64,
    g_sp: f64,
}

/// Failure indicators for one slot; `*_star` assumes the other link is
/// also transmitting. By construction the starred indicator is never
/// below the plain one.
fn slot_outcomes(budget: &LinkBudget, g: &Gains) -> (bool, bool, bool, bool) {
    let tau_p = (2f64).powf(budget.r_p) - 1.0;
    let tau_s = (2f64).powf(budget.r_s) - 1.0;
    let p_fail = g.g_pp * budget.p_p < tau_p;
    let p_fail_star = g.g_pp * budget.p_p / (1.0 + g.g_sp * budget.p_s) < tau_p;
    let s_fail = g.g_ss * budget.p_s < tau_s;
    let tan_ok = g.g_ss * budget.p_s / (1.0 + g.g_ps * budget.p_p) >= tau_s;
    let s_ok_star = match budget.secondary_rx_mode {
        SecondaryRxMode::TreatAsNoise => tan_ok,
        SecondaryRxMode::OpportunisticCancel => {
            let tau_sum = (2f64).powf(budget.r_p + budget.r_s) - 1.0;
            let joint_ok = g.g_ss * budget.p_s >= tau_s
                && g.g_pp * budget.p_p + g.g_ss * budget.p_s >= tau_sum;
            joint_ok || tan_ok
        }
    };
    (p_fail, p_fail_star, s_fail, !s_ok_star)
}

/// Computes [`FailureProbs`] for a link budget.
///
/// Under `Deterministic` fading the indicators are evaluated once at the
/// mean gains. Under `Rayleigh`, the interference-free probabilities use
/// the exponential-tail closed forms and the starred ones are estimated
/// by Monte Carlo with the baseline indicator as a control variate: each
/// sample draws all four gains once (inverse CDF, so a fixed seed pins
/// the whole gain sequence) and only the nonnegative excess
/// `starred_failure - baseline_failure` is averaged. This keeps
/// `rho_star >= rho` and `nu_star >= nu` exactly, sample noise included.
pub fn failure_probs(
    budget: &LinkBudget,
    fading: FadingModel,
    mc_samples: u64,
    seed: u64,
) -> Result<FailureProbs, Error> {
    budget.validate()?;
    match fading {
        FadingModel::Deterministic => {
            let g = Gains {
                g_pp: budget.gbar_pp,
                g_ps: budget.gbar_ps,
                g_ss: budget.gbar_ss,
                g_sp: budget.gbar_sp,
            };
            let (p, ps, s, ss) = slot_outcomes(budget, &g);
            Ok(FailureProbs {
                rho: f64::from(u8::from(p)),
                rho_star: f64::from(u8::from(ps)),
                nu: f64::from(u8::from(s)),
                nu_star: f64::from(u8::from(ss)),
            })
        }
        FadingModel::Rayleigh => {
            if mc_samples == 0 {
                return Err(Error::Config(
                    "Rayleigh fading needs mc_samples > 0 to estimate the \
                     interference-coupled probabilities"
                        .into(),
                ));
            }
            let tau_p = (2f64).powf(budget.r_p) - 1.0;
            let tau_s = (2f64).powf(budget.r_s) - 1.0;
            let rho = 1.0 - (-tau_p / (budget.p_p * budget.gbar_pp)).exp();
            let nu = 1.0 - (-tau_s / (budget.p_s * budget.gbar_ss)).exp();

            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut excess_p = 0u64;
            let mut excess_s = 0u64;
            for _ in 0..mc_samples {
                let mut draw = |gbar: f64| -> f64 {
                    let u: f64 = rng.gen();
                    -gbar * (1.0 - u).ln()
                };
                let g = Gains {
                    g_pp: draw(budget.gbar_pp),
                    g_ps: draw(budget.gbar_ps),
                    g_ss: draw(budget.gbar_ss),
                    g_sp: draw(budget.gbar_sp),
                };
                let (p, ps, s, ss) = slot_outcomes(budget, &g);
                excess_p += u64::from(ps && !p);
                excess_s += u64::from(ss && !s);
            }
            let n = mc_samples as f64;
            Ok(FailureProbs {
                rho,
                rho_star: (rho + excess_p as f64 / n).min(1.0),
                nu,
                nu_star: (nu + excess_s as f64 / n).min(1.0),
            })
        }
    }
}
