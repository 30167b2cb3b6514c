//! Training campaigns: one agent, several seeds, one output directory.
//!
//! Layout under `<out>/<agent>/`:
//!
//! ```text
//! config.txt               effective configuration
//! summary.csv              mean and std across seeds per eval step
//! seed_<k>/metrics.csv     eval curve of seed k
//! seed_<k>/checkpoint.bin  final network (learning agents only)
//! ```

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use vrnoma_core::agents::{
    evaluate, train_agent, EpisodeStats, EvalMetrics, GreedyPolicy, Policy, EVAL_EPISODES,
};
use vrnoma_core::env::EnvConfig;
use vrnoma_core::nets::Checkpoint;

use crate::metrics::{summarize, write_metrics, write_summary, MetricsRow, SummaryRow};
use crate::{ExperimentSpec, HarnessError};

#[derive(Debug, Clone)]
pub struct SeedRun {
    pub seed: u64,
    pub rows: Vec<MetricsRow>,
    /// Episodes behind the last eval point.
    pub final_episodes: Vec<EpisodeStats>,
    pub checkpoint: Option<Checkpoint>,
    pub faults: u64,
}

#[derive(Debug, Clone)]
pub struct CampaignResult {
    pub dir: PathBuf,
    pub runs: Vec<SeedRun>,
    pub summary: Vec<SummaryRow>,
}

/// Trains and evaluates one seed. The seed also replaces the environment's
/// `rng_seed`, so each seed sees its own user population.
pub fn run_seed(spec: &ExperimentSpec, seed: u64) -> Result<SeedRun, HarnessError> {
    let env = EnvConfig { rng_seed: seed, ..spec.env.clone() };
    let mut rows = Vec::new();
    let mut last = Vec::new();
    let mut hook = |step: usize, policy: &mut dyn Policy| {
        let (metrics, episodes) = evaluate(policy, &env, EVAL_EPISODES)?;
        rows.push(MetricsRow::new(step, &metrics));
        last = episodes;
        Ok(())
    };
    let trained =
        train_agent(spec.agent, &env, &spec.agent_config, seed, spec.steps, spec.eval_interval, &mut hook)?;
    Ok(SeedRun { seed, rows, final_episodes: last, checkpoint: trained.checkpoint, faults: trained.faults })
}

/// Runs every seed of `spec` in parallel and writes the campaign files.
pub fn run_campaign(spec: &ExperimentSpec) -> Result<CampaignResult, HarnessError> {
    spec.validate()?;
    let dir = spec.out_dir.join(spec.agent.name());
    std::fs::create_dir_all(&dir).map_err(HarnessError::io(&dir))?;
    let config_path = dir.join("config.txt");
    std::fs::write(&config_path, spec.to_config_text()).map_err(HarnessError::io(&config_path))?;

    let runs = spec.seeds.par_iter().map(|&seed| run_seed(spec, seed)).collect::<Result<Vec<_>, _>>()?;
    for run in &runs {
        let seed_dir = dir.join(format!("seed_{}", run.seed));
        std::fs::create_dir_all(&seed_dir).map_err(HarnessError::io(&seed_dir))?;
        write_metrics(&seed_dir.join("metrics.csv"), &run.rows)?;
        if let Some(checkpoint) = &run.checkpoint {
            checkpoint.save(&seed_dir.join("checkpoint.bin"))?;
        }
    }
    let curves: Vec<_> = runs.iter().map(|r| r.rows.clone()).collect();
    let summary = summarize(&curves)?;
    write_summary(&dir.join("summary.csv"), &summary)?;
    Ok(CampaignResult { dir, runs, summary })
}

/// Greedy evaluation of a saved network on `n_episodes` eval episodes of
/// the environment `env_config` with `rng_seed = seed`.
pub fn evaluate_policy(
    checkpoint: &Checkpoint,
    env_config: &EnvConfig,
    n_episodes: usize,
    seed: u64,
) -> Result<(EvalMetrics, Vec<EpisodeStats>), HarnessError> {
    let env = EnvConfig { rng_seed: seed, ..env_config.clone() };
    env.validate()?;
    let obs = env.observation_len();
    if checkpoint.net.input_size() != obs {
        return Err(HarnessError::DimensionMismatch {
            what: "checkpoint input width vs observation length",
            expected: obs,
            found: checkpoint.net.input_size(),
        });
    }
    let mut policy = GreedyPolicy::from_checkpoint(checkpoint)?;
    let actions = env.action_space_size().ok_or(vrnoma_core::env::EnvError::ActionSpaceOverflow)?;
    if policy.action_count() != actions {
        return Err(HarnessError::DimensionMismatch {
            what: "checkpoint action count vs action space",
            expected: actions,
            found: policy.action_count(),
        });
    }
    Ok(evaluate(&mut policy, &env, n_episodes)?)
}

pub fn load_checkpoint(path: &Path) -> Result<Checkpoint, HarnessError> {
    Checkpoint::load(path).map_err(|e| match e {
        vrnoma_core::nets::NetError::Io(source) => HarnessError::Io { path: path.to_path_buf(), source },
        other => other.into(),
    })
}
