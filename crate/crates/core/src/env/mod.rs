//! Multi-user VR offloading over NOMA downlink channels.
//!
//! One episode is one second split into `T` frame slots. In every slot the
//! agent picks a joint assignment: each user either renders its frame
//! locally (costing device energy) or is served on one of `M` shared
//! downlink channels. A frame fails when its delay exceeds the slot length;
//! every failure eats into the user's tolerance, and the episode ends as soon
//! as any user's tolerance runs out.

mod action;
mod config;
pub mod physics;
mod tape;

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;

pub use action::{decode_action, encode_action, ActionAssignment};
pub use config::{EnvConfig, Range, MIN_DISTANCE};
pub use tape::{SlotDraw, Tape};

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum EnvError {
    #[error("invalid config `{key}`: {reason}")]
    InvalidConfig { key: &'static str, reason: String },
    #[error("user {user} assigned to channel {channel}, but only {n_channels} channels exist")]
    ChannelOutOfRange { user: usize, channel: usize, n_channels: usize },
    #[error("action index {index} out of range for action space of size {size}")]
    ActionOutOfRange { index: usize, size: usize },
    #[error("joint action space does not fit in usize")]
    ActionSpaceOverflow,
    #[error("offload delay requested for a user with zero downlink rate")]
    ZeroRate,
    #[error("step called on a terminated episode")]
    Terminated,
    #[error("unknown config key `{0}`")]
    UnknownKey(String),
    #[error("invalid value `{value}` for config key `{key}`")]
    InvalidValue { key: &'static str, value: String },
    #[error("tape does not match config: {0}")]
    TapeMismatch(String),
}

/// Frozen per-episode characteristics of one user.
#[derive(Debug, Clone, PartialEq)]
pub struct VuProfile {
    pub user_id: usize,
    /// Position in meters; the server is at the center of the area.
    pub position: (f64, f64),
    /// Distance to the server in meters, floored at [`MIN_DISTANCE`].
    pub distance: f64,
    /// Downlink power allocated to this user, in watts.
    pub tx_power: f64,
    /// Device compute capability in cycles/s.
    pub cpu: f64,
    /// Energy weight in `[0, 1]`; close to 0 for a full battery.
    pub battery_weight: f64,
    /// Minimum acceptable frames per second.
    pub target_fps: usize,
    /// Failures the user tolerates per episode, `T - target_fps`.
    pub initial_tolerance: usize,
}

/// Mutable per-slot episode state.
#[derive(Debug, Clone, PartialEq)]
pub struct EnvState {
    pub t: usize,
    pub frame_bits: Vec<f64>,
    pub cycles_per_bit: Vec<f64>,
    pub tolerance_left: Vec<usize>,
    /// Small-scale fading power gains, shape `(N, M)`.
    pub fading: Array2<f64>,
    /// `|h|^2 = fading * distance^-alpha`, shape `(N, M)`.
    pub channel_gain: Array2<f64>,
    pub terminated: bool,
    pub failure_total: Vec<usize>,
    pub energy_total: Vec<f64>,
}

/// Per-user diagnostics for one slot. Exactly one of the two delays is set.
#[derive(Debug, Clone, PartialEq)]
pub struct UserStepInfo {
    pub channel: usize,
    /// Downlink rate in bits/s; 0 for local users.
    pub rate: f64,
    pub offload_delay: Option<f64>,
    pub local_delay: Option<f64>,
    /// Weighted device energy in joules; 0 for offloaded users.
    pub energy: f64,
    pub failed: bool,
}

impl UserStepInfo {
    /// The delay that decides success for this frame.
    pub fn delay(&self) -> f64 {
        self.offload_delay.or(self.local_delay).unwrap_or(f64::INFINITY)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepInfo {
    /// Slot index the action was applied in.
    pub t: usize,
    pub users: Vec<UserStepInfo>,
    /// True when this step exhausted some user's tolerance.
    pub tolerance_exhausted: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub observation: Vec<f64>,
    pub rewards: Vec<f64>,
    pub terminated: bool,
    pub info: StepInfo,
}

enum DrawSource {
    Sampler(ChaCha8Rng),
    Tape(Tape),
}

/// The offloading environment.
pub struct VrEnv {
    config: EnvConfig,
    profiles: Vec<VuProfile>,
    state: EnvState,
    source: DrawSource,
    path_gain: Vec<f64>,
}

impl VrEnv {
    /// Builds an environment and resets it to episode 0.
    pub fn new(config: EnvConfig) -> Result<Self, EnvError> {
        config.validate()?;
        let mut rng = episode_rng(config.rng_seed, 0);
        let profiles = sample_profiles(&config, &mut rng);
        let slot = SlotDraw::sample(&config, &mut rng);
        let mut env = Self {
            state: initial_state(&config, &profiles, &slot),
            path_gain: Vec::new(),
            profiles,
            source: DrawSource::Sampler(rng),
            config,
        };
        env.refresh_path_gain();
        env.install_slot(&slot);
        Ok(env)
    }

    /// Builds an environment whose stochastic inputs are read from `tape`.
    pub fn from_tape(config: EnvConfig, tape: Tape) -> Result<Self, EnvError> {
        config.validate()?;
        tape.check_against(&config)?;
        let profiles = tape.profiles.clone();
        let slot = tape.slots[0].clone();
        let mut env = Self {
            state: initial_state(&config, &profiles, &slot),
            path_gain: Vec::new(),
            profiles,
            source: DrawSource::Tape(tape),
            config,
        };
        env.refresh_path_gain();
        env.install_slot(&slot);
        Ok(env)
    }

    /// Starts a new episode. With a tape-backed environment the seed is
    /// ignored and the tape is replayed from the first slot.
    pub fn reset(&mut self, episode_seed: u64) -> Vec<f64> {
        let slot = match &mut self.source {
            DrawSource::Sampler(rng) => {
                *rng = episode_rng(self.config.rng_seed, episode_seed);
                self.profiles = sample_profiles(&self.config, rng);
                SlotDraw::sample(&self.config, rng)
            }
            DrawSource::Tape(tape) => tape.slots[0].clone(),
        };
        self.state = initial_state(&self.config, &self.profiles, &slot);
        self.refresh_path_gain();
        self.install_slot(&slot);
        self.observation()
    }

    pub fn config(&self) -> &EnvConfig {
        &self.config
    }

    pub fn profiles(&self) -> &[VuProfile] {
        &self.profiles
    }

    pub fn state(&self) -> &EnvState {
        &self.state
    }

    pub fn action_space_size(&self) -> usize {
        self.config.action_space_size().expect("validated config")
    }

    pub fn observation(&self) -> Vec<f64> {
        build_observation(&self.state, &self.config)
    }

    /// Weighted objective accumulated so far: failure count plus energy.
    pub fn objective(&self) -> f64 {
        let failures: usize = self.state.failure_total.iter().sum();
        let energy: f64 = self.state.energy_total.iter().sum();
        self.config.failure_weight * failures as f64 + self.config.energy_weight * energy
    }

    pub fn step(&mut self, action_index: usize) -> Result<StepOutcome, EnvError> {
        if self.state.terminated {
            return Err(EnvError::Terminated);
        }
        let assignment = decode_action(action_index, self.config.n_users, self.config.n_channels)?;
        let outcome = self.apply(&assignment);
        Ok(outcome)
    }

    pub fn step_assignment(&mut self, assignment: &ActionAssignment) -> Result<StepOutcome, EnvError> {
        let index = assignment.encode(self.config.n_channels)?;
        if assignment.0.len() != self.config.n_users {
            return Err(EnvError::ActionOutOfRange { index, size: self.action_space_size() });
        }
        self.step(index)
    }

    fn apply(&mut self, assignment: &ActionAssignment) -> StepOutcome {
        let cfg = &self.config;
        let st = &mut self.state;
        let n_users = cfg.n_users;
        let slot = cfg.slot_duration;
        let tx_power: Vec<f64> = self.profiles.iter().map(|p| p.tx_power).collect();
        let rates = physics::channel_rates(
            assignment.channels(),
            &tx_power,
            st.channel_gain.view(),
            cfg.bandwidth_per_channel,
            cfg.bandwidth_per_channel * cfg.noise_psd,
        );

        let mut users = Vec::with_capacity(n_users);
        let mut rewards = Vec::with_capacity(n_users);
        let mut exhausted = false;
        for (n, profile) in self.profiles.iter().enumerate() {
            let bits = st.frame_bits[n];
            let cycles = st.cycles_per_bit[n];
            let channel = assignment.0[n];
            let info = if channel == 0 {
                let delay = physics::local_delay(bits, cycles, profile.cpu);
                UserStepInfo {
                    channel,
                    rate: 0.0,
                    offload_delay: None,
                    local_delay: Some(delay),
                    energy: physics::local_energy(
                        bits,
                        cycles,
                        profile.cpu,
                        profile.battery_weight,
                        cfg.energy_coeff,
                    ),
                    failed: delay > slot,
                }
            } else {
                // A rate that underflows to zero means the frame never arrives.
                let delay = physics::offload_delay(bits, cycles, rates[n], cfg.vsp_cpu)
                    .unwrap_or(f64::INFINITY);
                UserStepInfo {
                    channel,
                    rate: rates[n],
                    offload_delay: Some(delay),
                    local_delay: None,
                    energy: 0.0,
                    failed: delay > slot,
                }
            };
            let fail = usize::from(info.failed);
            st.tolerance_left[n] = st.tolerance_left[n].saturating_sub(fail);
            if info.failed && st.tolerance_left[n] == 0 {
                exhausted = true;
            }
            st.failure_total[n] += fail;
            st.energy_total[n] += info.energy;
            let frame_reward = if info.failed { -cfg.r_fail } else { cfg.r_success };
            rewards.push(cfg.failure_weight * frame_reward - cfg.energy_weight * info.energy);
            users.push(info);
        }

        let t = st.t;
        let horizon = cfg.frames_per_second;
        if exhausted {
            let penalty = cfg.r_terminal_scale * (horizon - t) as f64 / horizon as f64;
            rewards.iter_mut().for_each(|r| *r -= penalty);
        }
        st.terminated = exhausted || t + 1 == horizon;
        st.t = t + 1;

        if !st.terminated {
            let next = match &mut self.source {
                DrawSource::Sampler(rng) => SlotDraw::sample(cfg, rng),
                DrawSource::Tape(tape) => tape.slots[t + 1].clone(),
            };
            self.install_slot(&next);
        }

        StepOutcome {
            observation: self.observation(),
            rewards,
            terminated: self.state.terminated,
            info: StepInfo { t, users, tolerance_exhausted: exhausted },
        }
    }

    fn refresh_path_gain(&mut self) {
        let alpha = self.config.path_loss_exponent;
        self.path_gain = self.profiles.iter().map(|p| p.distance.powf(-alpha)).collect();
    }

    fn install_slot(&mut self, slot: &SlotDraw) {
        let st = &mut self.state;
        st.frame_bits.clone_from(&slot.frame_bits);
        st.cycles_per_bit.clone_from(&slot.cycles_per_bit);
        st.fading.assign(&slot.fading);
        for (mut row, (fade, &loss)) in st
            .channel_gain
            .rows_mut()
            .into_iter()
            .zip(slot.fading.rows().into_iter().zip(&self.path_gain))
        {
            row.assign(&fade.mapv(|g| g * loss));
        }
    }
}

fn episode_rng(rng_seed: u64, episode_seed: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    rng.set_stream(episode_seed);
    rng
}

fn initial_state(
    config: &EnvConfig,
    profiles: &[VuProfile],
    slot: &SlotDraw,
) -> EnvState {
    let (n, m) = (config.n_users, config.n_channels);
    EnvState {
        t: 0,
        frame_bits: slot.frame_bits.clone(),
        cycles_per_bit: slot.cycles_per_bit.clone(),
        tolerance_left: profiles.iter().map(|p| p.initial_tolerance).collect(),
        fading: Array2::zeros((n, m)),
        channel_gain: Array2::zeros((n, m)),
        terminated: false,
        failure_total: vec![0; n],
        energy_total: vec![0.0; n],
    }
}

pub(crate) fn sample_profiles(config: &EnvConfig, rng: &mut ChaCha8Rng) -> Vec<VuProfile> {
    let half = config.area_side / 2.0;
    let fps_lo = config.target_fps.min.ceil() as usize;
    let fps_hi = (config.target_fps.max.floor() as usize).max(fps_lo);
    (0..config.n_users)
        .map(|user_id| {
            let x = rng.random_range(0.0..=config.area_side);
            let y = rng.random_range(0.0..=config.area_side);
            let distance = ((x - half).powi(2) + (y - half).powi(2)).sqrt().max(MIN_DISTANCE);
            let tx_power = uniform(rng, config.tx_power);
            let cpu = uniform(rng, config.user_cpu);
            let battery_weight = uniform(rng, config.battery_weight);
            let target_fps = rng.random_range(fps_lo..=fps_hi).min(config.frames_per_second);
            VuProfile {
                user_id,
                position: (x, y),
                distance,
                tx_power,
                cpu,
                battery_weight,
                target_fps,
                initial_tolerance: config.frames_per_second - target_fps,
            }
        })
        .collect()
}

pub(crate) fn uniform(rng: &mut ChaCha8Rng, range: Range) -> f64 {
    rng.random_range(range.min..=range.max)
}

pub(crate) fn sample_fading(rng: &mut ChaCha8Rng) -> f64 {
    rng.sample(Exp1)
}

/// Bounds of `log10 |h|^2` used to scale gains into roughly `[-1, 1]`.
fn gain_log_bounds(config: &EnvConfig) -> (f64, f64) {
    let alpha = config.path_loss_exponent;
    // Deep-fade floor at the far corner, strong fade at the minimum distance.
    let lo = (1e-3 * config.max_distance().powf(-alpha)).log10();
    let hi = (10.0 * MIN_DISTANCE.powf(-alpha)).log10();
    (lo, hi)
}

/// Observation layout: `[D_n / D_max] ++ [tolerance_n / T] ++ [gain_{n,m}]
/// ++ [(T - t) / T]`, gains row-major by user.
pub fn build_observation(state: &EnvState, config: &EnvConfig) -> Vec<f64> {
    let horizon = config.frames_per_second as f64;
    let (lo, hi) = gain_log_bounds(config);
    let mut obs = Vec::with_capacity(config.observation_len());
    obs.extend(state.frame_bits.iter().map(|d| d / config.frame_bits.max));
    obs.extend(state.tolerance_left.iter().map(|&tol| tol as f64 / horizon));
    obs.extend(state.channel_gain.iter().map(|&g| {
        let x = (g + 1e-30).log10();
        (2.0 * (x - lo) / (hi - lo) - 1.0).clamp(-3.0, 3.0)
    }));
    obs.push((horizon - state.t.min(config.frames_per_second) as f64) / horizon);
    obs
}

#[cfg(test)]
mod tests;
