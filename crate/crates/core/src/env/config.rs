//! Scenario parameterization for the offloading environment.

use super::EnvError;

/// Closed interval `[min, max]` used for every sampled scenario quantity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Range {
    pub min: f64,
    pub max: f64,
}

impl Range {
    pub const fn new(min: f64, max: f64) -> Self {
        Self { min, max }
    }

    pub fn contains(&self, value: f64) -> bool {
        value >= self.min && value <= self.max
    }

    pub fn width(&self) -> f64 {
        self.max - self.min
    }
}

/// Full scenario parameterization.
///
/// Defaults describe a 30 m x 30 m room with five users, three downlink
/// channels of 1.8 MHz each, and 90 frame slots per second. Powers, compute
/// capabilities, cycles-per-bit, and reward weights are free parameters
/// picked so that both offloading and local rendering are viable.
#[derive(Debug, Clone, PartialEq)]
pub struct EnvConfig {
    pub n_users: usize,
    pub n_channels: usize,
    /// Slots per episode (one episode is one second).
    pub frames_per_second: usize,
    /// Slot length in seconds; must equal `1 / frames_per_second`.
    pub slot_duration: f64,
    /// Side of the square area in meters; the server sits at its center.
    pub area_side: f64,
    /// Bandwidth of every channel in Hz.
    pub bandwidth_per_channel: f64,
    /// Noise power spectral density in W/Hz.
    pub noise_psd: f64,
    pub path_loss_exponent: f64,
    pub frame_bits: Range,
    pub cycles_per_bit: Range,
    /// Server compute capability in cycles/s.
    pub vsp_cpu: f64,
    pub user_cpu: Range,
    pub tx_power: Range,
    /// Effective switched capacitance: energy per cycle is `energy_coeff * f^2`.
    pub energy_coeff: f64,
    pub battery_weight: Range,
    pub target_fps: Range,
    pub failure_weight: f64,
    pub energy_weight: f64,
    pub r_success: f64,
    pub r_fail: f64,
    pub r_terminal_scale: f64,
    pub rng_seed: u64,
}

/// Smallest user-to-server distance; avoids the path-loss singularity.
pub const MIN_DISTANCE: f64 = 1.0;

impl Default for EnvConfig {
    fn default() -> Self {
        let frames_per_second = 90;
        Self {
            n_users: 5,
            n_channels: 3,
            frames_per_second,
            slot_duration: 1.0 / frames_per_second as f64,
            area_side: 30.0,
            bandwidth_per_channel: 10.0 * 180e3,
            noise_psd: 10f64.powf(-20.4),
            path_loss_exponent: 2.0,
            // 1080p and 2k frames, 16 bits per pixel, compression factor 150.
            frame_bits: Range::new(
                1920.0 * 1080.0 * 16.0 / 150.0,
                2048.0 * 1080.0 * 16.0 / 150.0,
            ),
            cycles_per_bit: Range::new(50.0, 100.0),
            vsp_cpu: 1e11,
            user_cpu: Range::new(2e9, 4e9),
            tx_power: Range::new(0.05, 0.2),
            energy_coeff: 1e-27,
            battery_weight: Range::new(0.0, 1.0),
            target_fps: Range::new(75.0, 80.0),
            failure_weight: 1.0,
            energy_weight: 0.5,
            r_success: 0.1,
            r_fail: 0.5,
            r_terminal_scale: 10.0,
            rng_seed: 0,
        }
    }
}

impl EnvConfig {
    /// Size of the joint action space, `(M + 1)^N`, or `None` on overflow.
    pub fn action_space_size(&self) -> Option<usize> {
        (self.n_channels + 1).checked_pow(u32::try_from(self.n_users).ok()?)
    }

    /// Observation length: frame sizes, tolerances, gains, and time left.
    pub fn observation_len(&self) -> usize {
        2 * self.n_users + self.n_users * self.n_channels + 1
    }

    /// Largest possible user-to-server distance (corner of the square).
    pub fn max_distance(&self) -> f64 {
        (self.area_side / 2.0 * std::f64::consts::SQRT_2).max(MIN_DISTANCE)
    }

    /// Every key accepted by [`EnvConfig::set`], in [`EnvConfig::entries`] order.
    pub const KEYS: &'static [&'static str] = &[
        "n_users",
        "n_channels",
        "frames_per_second",
        "slot_duration",
        "area_side",
        "bandwidth_per_channel",
        "noise_psd",
        "path_loss_exponent",
        "frame_bits_min",
        "frame_bits_max",
        "cycles_per_bit_min",
        "cycles_per_bit_max",
        "vsp_cpu",
        "user_cpu_min",
        "user_cpu_max",
        "tx_power_min",
        "tx_power_max",
        "energy_coeff",
        "battery_weight_min",
        "battery_weight_max",
        "target_fps_min",
        "target_fps_max",
        "failure_weight",
        "energy_weight",
        "r_success",
        "r_fail",
        "r_terminal_scale",
        "rng_seed",
    ];

    /// Sets one field from its textual value. Ranges are split into
    /// `<name>_min` and `<name>_max`. No validation beyond parsing.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), EnvError> {
        let key = Self::KEYS
            .iter()
            .copied()
            .find(|k| *k == key)
            .ok_or_else(|| EnvError::UnknownKey(key.to_string()))?;
        let bad = || EnvError::InvalidValue { key, value: value.to_string() };
        let float = || value.trim().parse::<f64>().map_err(|_| bad());
        let int = || value.trim().parse::<usize>().map_err(|_| bad());
        match key {
            "n_users" => self.n_users = int()?,
            "n_channels" => self.n_channels = int()?,
            "frames_per_second" => self.frames_per_second = int()?,
            "slot_duration" => self.slot_duration = float()?,
            "area_side" => self.area_side = float()?,
            "bandwidth_per_channel" => self.bandwidth_per_channel = float()?,
            "noise_psd" => self.noise_psd = float()?,
            "path_loss_exponent" => self.path_loss_exponent = float()?,
            "frame_bits_min" => self.frame_bits.min = float()?,
            "frame_bits_max" => self.frame_bits.max = float()?,
            "cycles_per_bit_min" => self.cycles_per_bit.min = float()?,
            "cycles_per_bit_max" => self.cycles_per_bit.max = float()?,
            "vsp_cpu" => self.vsp_cpu = float()?,
            "user_cpu_min" => self.user_cpu.min = float()?,
            "user_cpu_max" => self.user_cpu.max = float()?,
            "tx_power_min" => self.tx_power.min = float()?,
            "tx_power_max" => self.tx_power.max = float()?,
            "energy_coeff" => self.energy_coeff = float()?,
            "battery_weight_min" => self.battery_weight.min = float()?,
            "battery_weight_max" => self.battery_weight.max = float()?,
            "target_fps_min" => self.target_fps.min = float()?,
            "target_fps_max" => self.target_fps.max = float()?,
            "failure_weight" => self.failure_weight = float()?,
            "energy_weight" => self.energy_weight = float()?,
            "r_success" => self.r_success = float()?,
            "r_fail" => self.r_fail = float()?,
            "r_terminal_scale" => self.r_terminal_scale = float()?,
            "rng_seed" => self.rng_seed = value.trim().parse().map_err(|_| bad())?,
            _ => unreachable!("key list and match arms agree"),
        }
        Ok(())
    }

    /// All fields as `(key, value)` pairs; floats print in a form that
    /// parses back to the identical value.
    pub fn entries(&self) -> Vec<(&'static str, String)> {
        let f = |v: f64| format!("{v:?}");
        let values = [
            self.n_users.to_string(),
            self.n_channels.to_string(),
            self.frames_per_second.to_string(),
            f(self.slot_duration),
            f(self.area_side),
            f(self.bandwidth_per_channel),
            f(self.noise_psd),
            f(self.path_loss_exponent),
            f(self.frame_bits.min),
            f(self.frame_bits.max),
            f(self.cycles_per_bit.min),
            f(self.cycles_per_bit.max),
            f(self.vsp_cpu),
            f(self.user_cpu.min),
            f(self.user_cpu.max),
            f(self.tx_power.min),
            f(self.tx_power.max),
            f(self.energy_coeff),
            f(self.battery_weight.min),
            f(self.battery_weight.max),
            f(self.target_fps.min),
            f(self.target_fps.max),
            f(self.failure_weight),
            f(self.energy_weight),
            f(self.r_success),
            f(self.r_fail),
            f(self.r_terminal_scale),
            self.rng_seed.to_string(),
        ];
        Self::KEYS.iter().copied().zip(values).collect()
    }

    pub fn validate(&self) -> Result<(), EnvError> {
        let bad = |key: &'static str, reason: String| Err(EnvError::InvalidConfig { key, reason });
        if self.n_users == 0 {
            return bad("n_users", "must be at least 1".into());
        }
        if self.n_channels == 0 {
            return bad("n_channels", "must be at least 1".into());
        }
        if self.frames_per_second == 0 {
            return bad("frames_per_second", "must be at least 1".into());
        }
        if (self.slot_duration * self.frames_per_second as f64 - 1.0).abs() > 1e-12 {
            return bad(
                "slot_duration",
                format!(
                    "slot_duration * frames_per_second must be 1, got {}",
                    self.slot_duration * self.frames_per_second as f64
                ),
            );
        }
        let positive = [
            ("area_side", self.area_side),
            ("bandwidth_per_channel", self.bandwidth_per_channel),
            ("noise_psd", self.noise_psd),
            ("path_loss_exponent", self.path_loss_exponent),
            ("vsp_cpu", self.vsp_cpu),
        ];
        for (key, value) in positive {
            if !(value.is_finite() && value > 0.0) {
                return bad(key, format!("must be finite and > 0, got {value}"));
            }
        }
        let ranges = [
            ("frame_bits", self.frame_bits, true),
            ("cycles_per_bit", self.cycles_per_bit, true),
            ("user_cpu", self.user_cpu, true),
            ("tx_power", self.tx_power, true),
            ("battery_weight", self.battery_weight, false),
            ("target_fps", self.target_fps, false),
        ];
        for (key, range, strictly_positive) in ranges {
            if !(range.min.is_finite() && range.max.is_finite()) || range.min > range.max {
                return bad(key, format!("need finite min <= max, got [{}, {}]", range.min, range.max));
            }
            if strictly_positive && range.min <= 0.0 {
                return bad(key, format!("bounds must be > 0, got min {}", range.min));
            }
        }
        if self.battery_weight.min < 0.0 || self.battery_weight.max > 1.0 {
            return bad("battery_weight", "bounds must lie in [0, 1]".into());
        }
        if self.target_fps.min < 0.0 || self.target_fps.max > self.frames_per_second as f64 {
            return bad(
                "target_fps",
                format!("bounds must lie in [0, {}]", self.frames_per_second),
            );
        }
        for (key, value) in [
            ("energy_coeff", self.energy_coeff),
            ("failure_weight", self.failure_weight),
            ("energy_weight", self.energy_weight),
            ("r_success", self.r_success),
            ("r_fail", self.r_fail),
            ("r_terminal_scale", self.r_terminal_scale),
        ] {
            if !(value.is_finite() && value >= 0.0) {
                return bad(key, format!("must be finite and >= 0, got {value}"));
            }
        }
        if self.action_space_size().is_none() {
            return bad("n_users", "(n_channels + 1)^n_users overflows".into());
        }
        Ok(())
    }
}
