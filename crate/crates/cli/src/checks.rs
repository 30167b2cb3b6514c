//! Standalone verification runs: oracle agreement and gradient checks.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use vrnoma_core::env::{StepInfo, VrEnv};
use vrnoma_core::nets::gradcheck::{check_random_net, GradCheckReport};
use vrnoma_core::oracle::{
    evaluate_sequence, exhaustive_search, parse_fixture, recompute_objective, tiny_config, Candidate, TinyInstance,
};

use crate::HarnessError;

/// Outcome of checking one tiny instance against the oracle.
#[derive(Debug, Clone)]
pub struct InstanceCheck {
    pub name: String,
    pub optimum: Candidate,
    pub leaves: u64,
    /// The optimum, replayed in the environment, reproduces the oracle's
    /// objective bit for bit, and the recomputed objective agrees.
    pub replay_exact: bool,
    pub random_checked: usize,
    /// Random sequences strictly better than the optimum; must be zero.
    pub random_better: usize,
}

impl InstanceCheck {
    pub fn passed(&self) -> bool {
        self.replay_exact && self.random_better == 0
    }
}

fn replay(inst: &TinyInstance, actions: &[usize]) -> Result<(f64, Vec<StepInfo>), HarnessError> {
    let mut env = VrEnv::from_tape(inst.config.clone(), inst.tape.clone())?;
    let mut log = Vec::new();
    for &a in actions {
        let out = env.step(a)?;
        log.push(out.info);
        if out.terminated {
            break;
        }
    }
    Ok((env.objective(), log))
}

/// Solves `inst` exhaustively, replays the optimum, and compares it with
/// `random_sequences` uniformly random action sequences.
pub fn check_instance(
    name: &str,
    inst: &TinyInstance,
    random_sequences: usize,
    seed: u64,
) -> Result<InstanceCheck, HarnessError> {
    let result = exhaustive_search(inst)?;
    let horizon = inst.config.frames_per_second;
    let mut padded = result.best.actions.clone();
    padded.resize(horizon, 0);
    let (objective, log) = replay(inst, &padded)?;
    let recomputed = recompute_objective(&log, &inst.config)?;
    let replay_exact = objective == result.best.objective
        && log.len() == result.best.actions.len()
        && (recomputed - objective).abs() <= 1e-9 * objective.abs().max(1.0);

    let size = inst.config.action_space_size().unwrap_or(usize::MAX);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut random_better = 0;
    for _ in 0..random_sequences {
        let actions: Vec<usize> = (0..horizon).map(|_| rng.random_range(0..size)).collect();
        if evaluate_sequence(inst, &actions)?.better_than(&result.best) {
            random_better += 1;
        }
    }
    Ok(InstanceCheck {
        name: name.to_string(),
        optimum: result.best,
        leaves: result.leaves,
        replay_exact,
        random_checked: random_sequences,
        random_better,
    })
}

/// Tiny instances from `fixtures` (every `*.txt`, sorted by name), or else
/// `count` freshly sampled ones.
pub fn load_instances(fixtures: Option<&Path>, count: usize) -> Result<Vec<(String, TinyInstance)>, HarnessError> {
    let Some(dir) = fixtures else {
        return (0..count as u64)
            .map(|seed| Ok((format!("sampled_{seed}"), TinyInstance::sample(tiny_config(), seed)?)))
            .collect();
    };
    let mut paths: Vec<_> = std::fs::read_dir(dir)
        .map_err(HarnessError::io(dir))?
        .map(|e| e.map(|e| e.path()).map_err(HarnessError::io(dir)))
        .collect::<Result<Vec<_>, _>>()?;
    paths.retain(|p| p.extension().is_some_and(|e| e == "txt"));
    paths.sort();
    paths
        .into_iter()
        .map(|p| {
            let text = std::fs::read_to_string(&p).map_err(HarnessError::io(&p))?;
            let name = p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
            Ok((name, parse_fixture(&text)?))
        })
        .collect()
}

/// Largest layout exercised: the N=5, M=3 observation into two hidden
/// layers and the widest Q output.
pub const GRADCHECK_MAX_LAYOUT: [usize; 4] = [26, 128, 128, 1024];
pub const GRADCHECK_STEP: f64 = 1e-5;
pub const GRADCHECK_TOLERANCE: f64 = 1e-6;
/// Parameters compared per net; larger nets are sampled uniformly.
pub const GRADCHECK_SAMPLE: usize = 2000;

/// `count` random layouts, the first being [`GRADCHECK_MAX_LAYOUT`].
pub fn gradcheck_layouts(count: usize, seed: u64) -> Vec<Vec<usize>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|i| {
            if i == 0 {
                return GRADCHECK_MAX_LAYOUT.to_vec();
            }
            let hidden = rng.random_range(1..=2);
            let mut sizes = vec![rng.random_range(1..=GRADCHECK_MAX_LAYOUT[0])];
            sizes.extend((0..hidden).map(|_| rng.random_range(1..=GRADCHECK_MAX_LAYOUT[1])));
            sizes.push(rng.random_range(1..=GRADCHECK_MAX_LAYOUT[3]));
            sizes
        })
        .collect()
}

pub fn gradcheck(count: usize, seed: u64) -> Result<Vec<GradCheckReport>, HarnessError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(1));
    gradcheck_layouts(count, seed)
        .iter()
        .map(|sizes| Ok(check_random_net(sizes, 4, GRADCHECK_SAMPLE, GRADCHECK_STEP, &mut rng)?))
        .collect()
}
