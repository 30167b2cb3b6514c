use super::AgentError;

/// Largest joint action space a policy or Q network is built for.
pub const MAX_JOINT_ACTIONS: usize = 65_536;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AgentKind {
    /// PPO with one critic head per user, policy driven by summed advantages.
    Hrppo,
    /// PPO on the summed reward with a single critic head.
    Ppo,
    /// DQN with one Q head per user, acting on the summed Q-value.
    Hrdqn,
    Random,
}

impl AgentKind {
    pub const ALL: [AgentKind; 4] = [AgentKind::Hrppo, AgentKind::Ppo, AgentKind::Hrdqn, AgentKind::Random];

    pub fn name(self) -> &'static str {
        match self {
            AgentKind::Hrppo => "hrppo",
            AgentKind::Ppo => "ppo",
            AgentKind::Hrdqn => "hrdqn",
            AgentKind::Random => "random",
        }
    }
}

impl std::str::FromStr for AgentKind {
    type Err = AgentError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        AgentKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| AgentError::InvalidConfig {
                key: "agent",
                reason: format!("unknown agent `{s}`, expected one of hrppo, ppo, hrdqn, random"),
            })
    }
}

impl std::fmt::Display for AgentKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Learning hyperparameters shared by all agents.
#[derive(Debug, Clone, PartialEq)]
pub struct AgentConfig {
    pub gamma: f64,
    pub gae_lambda: f64,
    pub clip: f64,
    /// Passes over each rollout.
    pub epochs: usize,
    pub batch_size: usize,
    pub actor_lr: f64,
    /// Learning rate of the PPO critic and of the DQN Q network.
    pub critic_lr: f64,
    pub entropy_coef: f64,
    /// Critic (and DQN) target sync period, in gradient updates.
    pub target_sync: usize,
    /// Environment steps per PPO rollout.
    pub rollout_len: usize,
    pub hidden: Vec<usize>,
    pub max_grad_norm: f64,
    /// Use `min(r, clip(r)) * A` instead of `min(r * A, clip(r) * A)`.
    pub paper_exact_clip: bool,
    pub replay_capacity: usize,
    pub eps_start: f64,
    pub eps_end: f64,
    /// Fraction of training over which epsilon anneals linearly.
    pub eps_fraction: f64,
    /// Environment steps before the first DQN update.
    pub learning_starts: usize,
    /// Environment steps between DQN updates.
    pub train_freq: usize,
}

impl Default for AgentConfig {
    fn default() -> Self {
        Self {
            gamma: 0.99,
            gae_lambda: 0.95,
            clip: 0.2,
            epochs: 10,
            batch_size: 64,
            actor_lr: 3e-4,
            critic_lr: 1e-3,
            entropy_coef: 0.01,
            target_sync: 10,
            rollout_len: 2048,
            hidden: vec![128, 128],
            max_grad_norm: 0.5,
            paper_exact_clip: false,
            replay_capacity: 50_000,
            eps_start: 1.0,
            eps_end: 0.05,
            eps_fraction: 0.3,
            learning_starts: 1_000,
            train_freq: 4,
        }
    }
}

impl AgentConfig {
    pub fn validate(&self) -> Result<(), AgentError> {
        let bad = |key: &'static str, reason: &str| {
            Err(AgentError::InvalidConfig { key, reason: reason.to_string() })
        };
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return bad("gamma", "must lie in (0, 1]");
        }
        if !(0.0..=1.0).contains(&self.gae_lambda) {
            return bad("gae_lambda", "must lie in [0, 1]");
        }
        if !(self.clip > 0.0 && self.clip < 1.0) {
            return bad("clip", "must lie in (0, 1)");
        }
        for (key, v) in [
            ("epochs", self.epochs),
            ("batch_size", self.batch_size),
            ("target_sync", self.target_sync),
            ("rollout_len", self.rollout_len),
            ("replay_capacity", self.replay_capacity),
            ("train_freq", self.train_freq),
        ] {
            if v == 0 {
                return bad(key, "must be at least 1");
            }
        }
        for (key, v) in [
            ("actor_lr", self.actor_lr),
            ("critic_lr", self.critic_lr),
            ("entropy_coef", self.entropy_coef),
            ("max_grad_norm", self.max_grad_norm),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return bad(key, "must be finite and >= 0");
            }
        }
        if self.hidden.contains(&0) {
            return bad("hidden", "hidden layer widths must be >= 1");
        }
        if !(0.0..=1.0).contains(&self.eps_start) || !(0.0..=1.0).contains(&self.eps_end) {
            return bad("eps_start", "epsilon bounds must lie in [0, 1]");
        }
        if !(self.eps_fraction > 0.0 && self.eps_fraction <= 1.0) {
            return bad("eps_fraction", "must lie in (0, 1]");
        }
        if self.batch_size > self.replay_capacity {
            return bad("batch_size", "must not exceed replay_capacity");
        }
        Ok(())
    }

    /// Every key accepted by [`AgentConfig::set`], in [`AgentConfig::entries`] order.
    pub const KEYS: &'static [&'static str] = &[
        "gamma",
        "gae_lambda",
        "clip",
        "epochs",
        "batch_size",
        "actor_lr",
        "critic_lr",
        "entropy_coef",
        "target_sync",
        "rollout_len",
        "hidden",
        "max_grad_norm",
        "paper_exact_clip",
        "replay_capacity",
        "eps_start",
        "eps_end",
        "eps_fraction",
        "learning_starts",
        "train_freq",
    ];

    /// Sets one field from text. `hidden` is a comma-separated width list.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), AgentError> {
        let key = Self::KEYS
            .iter()
            .copied()
            .find(|k| *k == key)
            .ok_or_else(|| AgentError::UnknownKey(key.to_string()))?;
        let v = value.trim();
        let bad = || AgentError::InvalidValue { key, value: value.to_string() };
        let float = || v.parse::<f64>().map_err(|_| bad());
        let int = || v.parse::<usize>().map_err(|_| bad());
        match key {
            "gamma" => self.gamma = float()?,
            "gae_lambda" => self.gae_lambda = float()?,
            "clip" => self.clip = float()?,
            "epochs" => self.epochs = int()?,
            "batch_size" => self.batch_size = int()?,
            "actor_lr" => self.actor_lr = float()?,
            "critic_lr" => self.critic_lr = float()?,
            "entropy_coef" => self.entropy_coef = float()?,
            "target_sync" => self.target_sync = int()?,
            "rollout_len" => self.rollout_len = int()?,
            "hidden" => {
                self.hidden = v
                    .split(',')
                    .map(|w| w.trim().parse::<usize>().map_err(|_| bad()))
                    .collect::<Result<_, _>>()?
            }
            "max_grad_norm" => self.max_grad_norm = float()?,
            "paper_exact_clip" => self.paper_exact_clip = v.parse().map_err(|_| bad())?,
            "replay_capacity" => self.replay_capacity = int()?,
            "eps_start" => self.eps_start = float()?,
            "eps_end" => self.eps_end = float()?,
            "eps_fraction" => self.eps_fraction = float()?,
            "learning_starts" => self.learning_starts = int()?,
            "train_freq" => self.train_freq = int()?,
            _ => unreachable!("key list and match arms agree"),
        }
        Ok(())
    }

    pub fn entries(&self) -> Vec<(&'static str, String)> {
        let f = |v: f64| format!("{v:?}");
        let hidden = self.hidden.iter().map(usize::to_string).collect::<Vec<_>>().join(",");
        let values = [
            f(self.gamma),
            f(self.gae_lambda),
            f(self.clip),
            self.epochs.to_string(),
            self.batch_size.to_string(),
            f(self.actor_lr),
            f(self.critic_lr),
            f(self.entropy_coef),
            self.target_sync.to_string(),
            self.rollout_len.to_string(),
            hidden,
            f(self.max_grad_norm),
            self.paper_exact_clip.to_string(),
            self.replay_capacity.to_string(),
            f(self.eps_start),
            f(self.eps_end),
            f(self.eps_fraction),
            self.learning_starts.to_string(),
            self.train_freq.to_string(),
        ];
        Self::KEYS.iter().copied().zip(values).collect()
    }

    /// Layer sizes for a network from `input` to `output` with the configured
    /// hidden layers.
    pub fn layer_sizes(&self, input: usize, output: usize) -> Vec<usize> {
        let mut sizes = Vec::with_capacity(self.hidden.len() + 2);
        sizes.push(input);
        sizes.extend(&self.hidden);
        sizes.push(output);
        sizes
    }
}

/// Refuses joint action spaces beyond [`MAX_JOINT_ACTIONS`].
pub fn check_action_space(size: Option<usize>) -> Result<usize, AgentError> {
    match size {
        Some(size) if size <= MAX_JOINT_ACTIONS => Ok(size),
        Some(size) => Err(AgentError::ActionSpaceTooLarge { size, max: MAX_JOINT_ACTIONS }),
        None => Err(AgentError::ActionSpaceTooLarge { size: usize::MAX, max: MAX_JOINT_ACTIONS }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate_and_parse() {
        AgentConfig::default().validate().unwrap();
        assert_eq!("hrdqn".parse::<AgentKind>().unwrap(), AgentKind::Hrdqn);
        assert!("sac".parse::<AgentKind>().is_err());
    }

    #[test]
    fn rejects_out_of_range_values() {
        let c = AgentConfig { gamma: 0.0, ..AgentConfig::default() };
        assert!(matches!(c.validate(), Err(AgentError::InvalidConfig { key: "gamma", .. })));
        let c = AgentConfig { clip: 1.0, ..AgentConfig::default() };
        assert!(c.validate().is_err());
        let c = AgentConfig { epochs: 0, ..AgentConfig::default() };
        assert!(c.validate().is_err());
    }

    #[test]
    fn entries_round_trip_through_set() {
        let original = AgentConfig { hidden: vec![64, 32, 16], paper_exact_clip: true, actor_lr: 1e-4, ..AgentConfig::default() };
        let mut copy = AgentConfig::default();
        for (key, value) in original.entries() {
            copy.set(key, &value).unwrap();
        }
        assert_eq!(copy, original);
        assert!(matches!(copy.set("lr", "1"), Err(AgentError::UnknownKey(_))));
        assert!(matches!(copy.set("hidden", "64,x"), Err(AgentError::InvalidValue { key: "hidden", .. })));
    }

    #[test]
    fn action_space_bound() {
        assert_eq!(check_action_space(Some(65_536)).unwrap(), 65_536);
        assert!(check_action_space(Some(4usize.pow(9))).is_err());
        assert!(check_action_space(None).is_err());
    }
}
