use super::{OracleError, TinyInstance};

/// Enumeration bound, `2^20` action sequences.
pub const MAX_SEQUENCES: u64 = 1 << 20;

/// Outcome of one action sequence under the oracle's own physics.
#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    /// Actions actually executed; shorter than `T` if a tolerance ran out.
    pub actions: Vec<usize>,
    pub objective: f64,
    /// No user's tolerance was exhausted.
    pub feasible: bool,
}

impl Candidate {
    /// Ordering used by the search: feasible beats infeasible; feasible
    /// sequences compare by objective; infeasible ones by slots survived
    /// (more is better), then objective.
    pub fn better_than(&self, other: &Candidate) -> bool {
        match (self.feasible, other.feasible) {
            (true, false) => true,
            (false, true) => false,
            (true, true) => self.objective < other.objective,
            (false, false) => {
                self.actions.len() > other.actions.len()
                    || (self.actions.len() == other.actions.len() && self.objective < other.objective)
            }
        }
    }

    /// True unless `other` is strictly better.
    pub fn no_worse_than(&self, other: &Candidate) -> bool {
        !other.better_than(self)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchResult {
    pub best: Candidate,
    /// Distinct outcomes visited; early-terminated prefixes count once.
    pub leaves: u64,
}

struct SlotOutcome {
    failed: Vec<bool>,
    energy: Vec<f64>,
}

/// Channel per user, most significant digit first.
fn digits(mut action: usize, n_users: usize, base: usize) -> Vec<usize> {
    let mut out = vec![0; n_users];
    for slot in out.iter_mut().rev() {
        *slot = action % base;
        action /= base;
    }
    out
}

/// Failures and energies of every user for one slot and joint action.
/// Rates use a pairwise rule: user `i` interferes with `k` when it is
/// decoded after `k`, i.e. its received power is lower, or equal with a
/// higher index.
fn slot_outcome(inst: &TinyInstance, t: usize, action: usize) -> SlotOutcome {
    let cfg = &inst.config;
    let slot = &inst.tape.slots[t];
    let n = cfg.n_users;
    let channels = digits(action, n, cfg.n_channels + 1);
    let gain = |u: usize, m: usize| {
        slot.fading[(u, m - 1)] * inst.tape.profiles[u].distance.powf(-cfg.path_loss_exponent)
    };
    let power = |u: usize| inst.tape.profiles[u].tx_power;
    let noise = cfg.bandwidth_per_channel * cfg.noise_psd;
    let mut failed = vec![false; n];
    let mut energy = vec![0.0; n];
    for k in 0..n {
        let bits = slot.frame_bits[k];
        let cycles = slot.cycles_per_bit[k];
        let profile = &inst.tape.profiles[k];
        let m = channels[k];
        let delay = if m == 0 {
            energy[k] = profile.battery_weight * bits * cycles * cfg.energy_coeff * profile.cpu * profile.cpu;
            bits * cycles / profile.cpu
        } else {
            let own = power(k) * gain(k, m);
            let interference: f64 = (0..n)
                .filter(|&i| i != k && channels[i] == m)
                .filter(|&i| {
                    let other = power(i) * gain(i, m);
                    other < own || (other == own && i > k)
                })
                .map(|i| power(i) * gain(k, m))
                .sum();
            let rate = cfg.bandwidth_per_channel * (1.0 + own / (interference + noise)).log2();
            if rate > 0.0 {
                bits * cycles / cfg.vsp_cpu + bits / rate
            } else {
                f64::INFINITY
            }
        };
        failed[k] = delay > cfg.slot_duration;
    }
    SlotOutcome { failed, energy }
}

struct Search<'a> {
    inst: &'a TinyInstance,
    table: Vec<Vec<SlotOutcome>>,
    path: Vec<usize>,
    best: Option<Candidate>,
    leaves: u64,
}

impl Search<'_> {
    fn leaf(&mut self, failures: usize, energy: &[f64], feasible: bool) {
        self.leaves += 1;
        let cfg = &self.inst.config;
        let candidate = Candidate {
            actions: self.path.clone(),
            objective: cfg.failure_weight * failures as f64 + cfg.energy_weight * energy.iter().sum::<f64>(),
            feasible,
        };
        if self.best.as_ref().is_none_or(|b| candidate.better_than(b)) {
            self.best = Some(candidate);
        }
    }

    fn descend(&mut self, t: usize, tolerance: &[usize], failures: usize, energy: &[f64]) {
        let horizon = self.inst.config.frames_per_second;
        for action in 0..self.table[t].len() {
            let outcome = &self.table[t][action];
            let mut tol = tolerance.to_vec();
            let mut exhausted = false;
            let mut fails = failures;
            let mut e = energy.to_vec();
            for u in 0..tol.len() {
                if outcome.failed[u] {
                    fails += 1;
                    tol[u] = tol[u].saturating_sub(1);
                    exhausted |= tol[u] == 0;
                }
                e[u] += outcome.energy[u];
            }
            self.path.push(action);
            if exhausted {
                self.leaf(fails, &e, false);
            } else if t + 1 == horizon {
                self.leaf(fails, &e, true);
            } else {
                self.descend(t + 1, &tol, fails, &e);
            }
            self.path.pop();
        }
    }
}

/// Enumerates every action sequence on the instance's tape and returns the
/// best one under [`Candidate::better_than`]. Ties keep the
/// lexicographically smallest sequence.
pub fn exhaustive_search(inst: &TinyInstance) -> Result<SearchResult, OracleError> {
    let cfg = &inst.config;
    let per_slot = cfg.n_channels + 1;
    let total = (per_slot as u64).checked_pow((cfg.n_users * cfg.frames_per_second) as u32);
    if total.is_none_or(|s| s > MAX_SEQUENCES) {
        return Err(OracleError::TooLarge(format!("more than {MAX_SEQUENCES} action sequences")));
    }
    let actions = per_slot.pow(cfg.n_users as u32);
    let table = (0..cfg.frames_per_second)
        .map(|t| (0..actions).map(|a| slot_outcome(inst, t, a)).collect())
        .collect();
    let mut search = Search { inst, table, path: Vec::new(), best: None, leaves: 0 };
    let tolerance: Vec<usize> = inst.tape.profiles.iter().map(|p| p.initial_tolerance).collect();
    search.descend(0, &tolerance, 0, &vec![0.0; cfg.n_users]);
    Ok(SearchResult { best: search.best.expect("at least one sequence"), leaves: search.leaves })
}

/// Plays `actions` on the tape with the oracle's physics. Actions after a
/// tolerance exhaustion are ignored.
pub fn evaluate_sequence(inst: &TinyInstance, actions: &[usize]) -> Result<Candidate, OracleError> {
    let cfg = &inst.config;
    let size = (cfg.n_channels + 1).pow(cfg.n_users as u32);
    if actions.len() != cfg.frames_per_second {
        return Err(OracleError::InvalidSequence(format!(
            "{} actions for {} slots",
            actions.len(),
            cfg.frames_per_second
        )));
    }
    let mut tol: Vec<usize> = inst.tape.profiles.iter().map(|p| p.initial_tolerance).collect();
    let mut failures = 0;
    let mut energy = vec![0.0; cfg.n_users];
    let mut executed = Vec::new();
    let mut feasible = true;
    for (t, &a) in actions.iter().enumerate() {
        if a >= size {
            return Err(OracleError::InvalidSequence(format!("action {a} at slot {t} exceeds {size}")));
        }
        let outcome = slot_outcome(inst, t, a);
        executed.push(a);
        for u in 0..cfg.n_users {
            if outcome.failed[u] {
                failures += 1;
                tol[u] = tol[u].saturating_sub(1);
                feasible &= tol[u] != 0;
            }
            energy[u] += outcome.energy[u];
        }
        if !feasible {
            break;
        }
    }
    Ok(Candidate {
        actions: executed,
        objective: cfg.failure_weight * failures as f64 + cfg.energy_weight * energy.iter().sum::<f64>(),
        feasible,
    })
}
