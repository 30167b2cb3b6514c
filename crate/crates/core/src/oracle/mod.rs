//! Independent checks of the environment: objective recomputation from
//! step logs and exhaustive search over tiny instances.
//!
//! Nothing here calls into the environment's physics; rates, delays,
//! failures and energies are re-derived from the raw tape.

mod fixture;
mod search;

pub use fixture::{parse_fixture, write_fixture};
pub use search::{evaluate_sequence, exhaustive_search, Candidate, SearchResult, MAX_SEQUENCES};

use crate::env::{EnvConfig, EnvError, StepInfo, Tape};

#[derive(Debug, thiserror::Error)]
pub enum OracleError {
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error("incomplete episode log: {0}")]
    IncompleteLog(String),
    #[error("instance too large for enumeration: {0}")]
    TooLarge(String),
    #[error("fixture line {line}: {reason}")]
    Fixture { line: usize, reason: String },
    #[error("action sequence invalid: {0}")]
    InvalidSequence(String),
}

/// `w1 * sum I + w2 * sum e` over a complete episode log, with every
/// failure re-derived by comparing the logged delay to the slot length.
///
/// A log is complete when its slots are numbered `0..len`, every slot
/// carries one record per user with exactly one delay, and it either covers
/// all `T` slots or ends on a tolerance exhaustion.
pub fn recompute_objective(log: &[StepInfo], config: &EnvConfig) -> Result<f64, OracleError> {
    let incomplete = |why: String| Err(OracleError::IncompleteLog(why));
    let Some(last) = log.last() else {
        return incomplete("no steps".into());
    };
    if log.len() != config.frames_per_second && !last.tolerance_exhausted {
        return incomplete(format!(
            "{} of {} slots and no tolerance exhaustion",
            log.len(),
            config.frames_per_second
        ));
    }
    let mut failures = 0usize;
    let mut energy = vec![0.0; config.n_users];
    for (t, step) in log.iter().enumerate() {
        if step.t != t {
            return incomplete(format!("slot {t} is recorded as slot {}", step.t));
        }
        if step.users.len() != config.n_users {
            return incomplete(format!("slot {t} has {} user records", step.users.len()));
        }
        if t + 1 < log.len() && step.tolerance_exhausted {
            return incomplete(format!("steps continue after exhaustion at slot {t}"));
        }
        for (n, user) in step.users.iter().enumerate() {
            let delay = match (user.offload_delay, user.local_delay) {
                (Some(d), None) | (None, Some(d)) => d,
                _ => return incomplete(format!("slot {t} user {n} needs exactly one delay")),
            };
            if delay > config.slot_duration {
                failures += 1;
            }
            energy[n] += user.energy;
        }
    }
    Ok(config.failure_weight * failures as f64 + config.energy_weight * energy.iter().sum::<f64>())
}

/// A small scenario with all of its randomness frozen on a tape.
#[derive(Debug, Clone, PartialEq)]
pub struct TinyInstance {
    pub config: EnvConfig,
    pub tape: Tape,
}

impl TinyInstance {
    /// Size limits: `N <= 3`, `M <= 2`, `T <= 6`, and at most
    /// [`MAX_SEQUENCES`] action sequences.
    pub fn new(config: EnvConfig, tape: Tape) -> Result<Self, OracleError> {
        config.validate()?;
        let (n, m, t) = (config.n_users, config.n_channels, config.frames_per_second);
        if n > 3 || m > 2 || t > 6 {
            return Err(OracleError::TooLarge(format!("N={n}, M={m}, T={t} exceeds N<=3, M<=2, T<=6")));
        }
        let sequences = ((m + 1) as u64).pow((n * t) as u32);
        if sequences > MAX_SEQUENCES {
            return Err(OracleError::TooLarge(format!("{sequences} sequences exceeds {MAX_SEQUENCES}")));
        }
        crate::env::VrEnv::from_tape(config.clone(), tape.clone())?;
        Ok(Self { config, tape })
    }

    /// Records episode `episode_seed` of `config` onto a tape.
    pub fn sample(config: EnvConfig, episode_seed: u64) -> Result<Self, OracleError> {
        let tape = Tape::record(&config, episode_seed)?;
        Self::new(config, tape)
    }
}

/// A two-user, one-channel, five-slot scenario where local rendering and
/// offloading both sometimes meet the 0.2 s deadline and sometimes miss it.
pub fn tiny_config() -> EnvConfig {
    let frames = 5;
    crate::env::EnvConfig {
        n_users: 2,
        n_channels: 1,
        frames_per_second: frames,
        slot_duration: 1.0 / frames as f64,
        bandwidth_per_channel: 1e5,
        user_cpu: crate::env::Range::new(5e7, 1.5e8),
        energy_coeff: 1e-24,
        target_fps: crate::env::Range::new(3.0, 4.0),
        ..EnvConfig::default()
    }
}
