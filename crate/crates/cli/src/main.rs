use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use vrnoma_cli::campaign::load_checkpoint;
use vrnoma_cli::checks::{check_instance, gradcheck, load_instances, GRADCHECK_TOLERANCE};
use vrnoma_cli::{evaluate_policy, load_config, parse_seeds, run_campaign, ExperimentSpec, HarnessError};
use vrnoma_core::agents::{AgentKind, EVAL_EPISODES};

#[derive(Parser)]
#[command(name = "vrnoma", version, about = "Train and evaluate offloading agents for multi-user VR over NOMA")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train one agent over a list of seeds and write its eval curves.
    Train(TrainArgs),
    /// Greedy evaluation of a saved checkpoint.
    Eval(EvalArgs),
    /// Compare the environment with exhaustive search on tiny instances.
    OracleCheck(OracleArgs),
    /// Finite-difference check of network gradients.
    Gradcheck(GradArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Preset {
    /// 2e5 steps, seeds 0..10, eval every 50 steps.
    Paper,
}

#[derive(Args)]
struct SpecArgs {
    /// Start from a named preset instead of the desk defaults.
    #[arg(long, value_enum)]
    preset: Option<Preset>,
    /// `key = value` file applied on top of the preset.
    #[arg(long)]
    config: Option<PathBuf>,
}

impl SpecArgs {
    fn load(&self) -> Result<ExperimentSpec, HarnessError> {
        let base = match self.preset {
            Some(Preset::Paper) => ExperimentSpec::paper_preset(),
            None => ExperimentSpec::default(),
        };
        match &self.config {
            Some(path) => load_config(path, base),
            None => Ok(base),
        }
    }
}

#[derive(Args)]
struct TrainArgs {
    #[command(flatten)]
    spec: SpecArgs,
    #[arg(long)]
    agent: Option<AgentKind>,
    /// Single seed.
    #[arg(long, conflicts_with = "seeds")]
    seed: Option<u64>,
    /// Inclusive range `A..B` or a comma-separated list.
    #[arg(long)]
    seeds: Option<String>,
    /// Environment steps per seed.
    #[arg(long)]
    steps: Option<usize>,
    #[arg(long)]
    eval_interval: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Use the clipped surrogate exactly as `min(rA, clip(r, 1-e, 1+e))`.
    #[arg(long)]
    paper_exact_clip: bool,
}

#[derive(Args)]
struct EvalArgs {
    #[command(flatten)]
    spec: SpecArgs,
    #[arg(long)]
    checkpoint: PathBuf,
    /// Environment seed (user population).
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = EVAL_EPISODES)]
    episodes: usize,
}

#[derive(Args)]
struct OracleArgs {
    /// Directory of tiny-instance fixtures; sampled instances otherwise.
    #[arg(long)]
    fixtures: Option<PathBuf>,
    #[arg(long, default_value_t = 5)]
    instances: usize,
    /// Random action sequences compared with each optimum.
    #[arg(long, default_value_t = 1000)]
    random: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct GradArgs {
    #[arg(long, default_value_t = 10)]
    layouts: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

fn train(args: TrainArgs) -> Result<(), HarnessError> {
    let mut spec = args.spec.load()?;
    if let Some(agent) = args.agent {
        spec.agent = agent;
    }
    if let Some(seed) = args.seed {
        spec.seeds = vec![seed];
    }
    if let Some(seeds) = &args.seeds {
        spec.seeds = parse_seeds(seeds)?;
    }
    if let Some(steps) = args.steps {
        spec.steps = steps;
    }
    if let Some(interval) = args.eval_interval {
        spec.eval_interval = interval;
    }
    if let Some(out) = args.out {
        spec.out_dir = out;
    }
    spec.agent_config.paper_exact_clip |= args.paper_exact_clip;

    let result = run_campaign(&spec)?;
    println!("agent {} steps {} seeds {}", spec.agent, spec.steps, spec.seeds.len());
    for run in &result.runs {
        if let Some(last) = run.rows.last() {
            println!(
                "seed {} step {} reward {:.4} frames {:.4} energy_j {:.6} rate_mbps {:.4} faults {}",
                run.seed, last.step, last.reward, last.successful_frames, last.energy_j, last.avg_rate_mbps, run.faults
            );
        }
    }
    if let Some(last) = result.summary.last() {
        println!(
            "mean reward {:.4} +- {:.4} frames {:.4} energy_j {:.6}",
            last.reward.0, last.reward.1, last.successful_frames.0, last.energy_j.0
        );
    }
    println!("wrote {}", result.dir.display());
    Ok(())
}

fn eval(args: EvalArgs) -> Result<(), HarnessError> {
    let spec = args.spec.load()?;
    let checkpoint = load_checkpoint(&args.checkpoint)?;
    let (m, _) = evaluate_policy(&checkpoint, &spec.env, args.episodes, args.seed)?;
    println!(
        "episodes {} reward {:.4} reward_std {:.4} frames {:.4} energy_j {:.6} rate_mbps {:.4} rate_defined {}",
        args.episodes, m.reward, m.reward_std, m.successful_frames, m.energy_j, m.avg_rate_mbps, m.rate_defined
    );
    Ok(())
}

fn oracle_check(args: OracleArgs) -> Result<(), HarnessError> {
    let instances = load_instances(args.fixtures.as_deref(), args.instances)?;
    let mut failed = 0;
    for (i, (name, inst)) in instances.iter().enumerate() {
        let check = check_instance(name, inst, args.random, args.seed.wrapping_add(i as u64))?;
        println!(
            "{} {} objective {:?} feasible {} actions {:?} leaves {} replay_exact {} random_better {}/{}",
            if check.passed() { "PASS" } else { "FAIL" },
            check.name,
            check.optimum.objective,
            check.optimum.feasible,
            check.optimum.actions,
            check.leaves,
            check.replay_exact,
            check.random_better,
            check.random_checked
        );
        failed += usize::from(!check.passed());
    }
    if failed > 0 {
        return Err(HarnessError::CheckFailed(format!("{failed} of {} instances", instances.len())));
    }
    Ok(())
}

fn grad(args: GradArgs) -> Result<(), HarnessError> {
    let reports = gradcheck(args.layouts, args.seed)?;
    let mut failed = 0;
    for r in &reports {
        let ok = r.max_relative_error <= GRADCHECK_TOLERANCE;
        println!(
            "{} layout {:?} checked {}/{} max_rel_err {:.3e}",
            if ok { "PASS" } else { "FAIL" },
            r.layer_sizes,
            r.params_checked,
            r.params_total,
            r.max_relative_error
        );
        failed += usize::from(!ok);
    }
    if failed > 0 {
        return Err(HarnessError::CheckFailed(format!("{failed} of {} layouts", reports.len())));
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let result = match cli.command {
        Command::Train(a) => train(a),
        Command::Eval(a) => eval(a),
        Command::OracleCheck(a) => oracle_check(a),
        Command::Gradcheck(a) => grad(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
