//! Pre-materialized stochastic inputs for a whole episode.

use ndarray::Array2;
use rand_chacha::ChaCha8Rng;

use super::{episode_rng, sample_fading, sample_profiles, uniform, EnvConfig, EnvError, VuProfile};

/// Stochastic inputs of one slot.
#[derive(Debug, Clone, PartialEq)]
pub struct SlotDraw {
    pub frame_bits: Vec<f64>,
    pub cycles_per_bit: Vec<f64>,
    /// Unit-mean exponential power gains, shape `(N, M)`.
    pub fading: Array2<f64>,
}

impl SlotDraw {
    pub(crate) fn sample(config: &EnvConfig, rng: &mut ChaCha8Rng) -> Self {
        let n = config.n_users;
        let frame_bits = (0..n).map(|_| uniform(rng, config.frame_bits)).collect();
        let cycles_per_bit = (0..n).map(|_| uniform(rng, config.cycles_per_bit)).collect();
        let fading = Array2::from_shape_simple_fn((n, config.n_channels), || sample_fading(rng));
        Self { frame_bits, cycles_per_bit, fading }
    }
}

/// Everything random about one episode: the user profiles plus one
/// [`SlotDraw`] per slot. An episode replayed from a tape is a deterministic
/// function of the action sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct Tape {
    pub profiles: Vec<VuProfile>,
    pub slots: Vec<SlotDraw>,
}

impl Tape {
    /// Draws a full tape in the same order a live episode with this seed
    /// would, so replaying it matches the live episode exactly.
    pub fn record(config: &EnvConfig, episode_seed: u64) -> Result<Self, EnvError> {
        config.validate()?;
        let mut rng = episode_rng(config.rng_seed, episode_seed);
        let profiles = sample_profiles(config, &mut rng);
        let slots = (0..config.frames_per_second)
            .map(|_| SlotDraw::sample(config, &mut rng))
            .collect();
        Ok(Self { profiles, slots })
    }

    pub(crate) fn check_against(&self, config: &EnvConfig) -> Result<(), EnvError> {
        let mismatch = |what: String| Err(EnvError::TapeMismatch(what));
        if self.profiles.len() != config.n_users {
            return mismatch(format!("{} profiles for {} users", self.profiles.len(), config.n_users));
        }
        if self.slots.len() != config.frames_per_second {
            return mismatch(format!(
                "{} slots for {} frames per second",
                self.slots.len(),
                config.frames_per_second
            ));
        }
        for (t, slot) in self.slots.iter().enumerate() {
            if slot.frame_bits.len() != config.n_users
                || slot.cycles_per_bit.len() != config.n_users
                || slot.fading.dim() != (config.n_users, config.n_channels)
            {
                return mismatch(format!("slot {t} has wrong dimensions"));
            }
        }
        for p in &self.profiles {
            if p.initial_tolerance > config.frames_per_second || p.distance.is_nan() || p.distance <= 0.0 {
                return mismatch(format!("profile {} is out of bounds", p.user_id));
            }
        }
        Ok(())
    }
}
