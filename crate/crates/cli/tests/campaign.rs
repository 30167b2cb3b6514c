use std::process::Command;

use vrnoma_cli::checks::load_instances;
use vrnoma_cli::metrics::{summary_to_string, SUMMARY_HEADER};
use vrnoma_cli::{evaluate_policy, parse_config, read_metrics, run_campaign, summarize, ExperimentSpec, HarnessError};
use vrnoma_core::agents::AgentKind;
use vrnoma_core::nets::Checkpoint;

fn small_spec(agent: AgentKind, out: &std::path::Path) -> ExperimentSpec {
    let text = "n_users = 3\nn_channels = 2\nrollout_len = 64\nbatch_size = 32\nepochs = 1\nhidden = 16\n\
                learning_starts = 64\nsteps = 192\neval_interval = 64\nseeds = 0..2\n";
    ExperimentSpec { agent, out_dir: out.to_path_buf(), ..parse_config(text, ExperimentSpec::default()).unwrap() }
}

#[test]
fn summary_matches_recomputation_from_seed_files() {
    let dir = tempfile::tempdir().unwrap();
    let spec = small_spec(AgentKind::Hrppo, dir.path());
    let result = run_campaign(&spec).unwrap();
    assert_eq!(result.runs.len(), 3);

    let curves: Vec<_> =
        (0..3).map(|k| read_metrics(&result.dir.join(format!("seed_{k}/metrics.csv"))).unwrap()).collect();
    for (run, curve) in result.runs.iter().zip(&curves) {
        assert_eq!(&run.rows, curve);
        assert_eq!(curve.iter().map(|r| r.step).collect::<Vec<_>>(), vec![0, 64, 128, 192]);
    }
    let on_disk = std::fs::read_to_string(result.dir.join("summary.csv")).unwrap();
    assert!(on_disk.starts_with(SUMMARY_HEADER));
    assert_eq!(on_disk, summary_to_string(&summarize(&curves).unwrap()));

    let config = std::fs::read_to_string(result.dir.join("config.txt")).unwrap();
    assert_eq!(parse_config(&config, ExperimentSpec::paper_preset()).unwrap(), spec);
}

#[test]
fn checkpoints_reload_and_reject_mismatched_envs() {
    let dir = tempfile::tempdir().unwrap();
    for agent in [AgentKind::Ppo, AgentKind::Hrdqn] {
        let spec = ExperimentSpec { seeds: vec![1], ..small_spec(agent, dir.path()) };
        let result = run_campaign(&spec).unwrap();
        let checkpoint = Checkpoint::load(&result.dir.join("seed_1/checkpoint.bin")).unwrap();
        assert_eq!(Some(&checkpoint), result.runs[0].checkpoint.as_ref());

        // Same env config and seed reproduce the last eval point.
        let (m, _) = evaluate_policy(&checkpoint, &spec.env, 10, 1).unwrap();
        assert_eq!(m.reward, result.runs[0].rows.last().unwrap().reward);

        let wider = vrnoma_core::env::EnvConfig { n_users: 4, ..spec.env.clone() };
        let err = evaluate_policy(&checkpoint, &wider, 1, 1).unwrap_err();
        assert!(matches!(err, HarnessError::DimensionMismatch { .. }), "{err}");
        assert_eq!(err.exit_code(), 1);
    }
}

#[test]
fn random_agent_writes_no_checkpoint() {
    let dir = tempfile::tempdir().unwrap();
    let result = run_campaign(&small_spec(AgentKind::Random, dir.path())).unwrap();
    assert!(!result.dir.join("seed_0/checkpoint.bin").exists());
    let curve = &result.runs[0].rows;
    assert!(curve.iter().all(|r| r.reward == curve[0].reward));
}

#[test]
fn shipped_fixtures_load() {
    let dir = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/tests/fixtures");
    let names: Vec<_> = load_instances(Some(&dir), 0).unwrap().into_iter().map(|(n, _)| n).collect();
    assert_eq!(names, ["tiny_0", "tiny_1", "tiny_2", "tiny_3", "tiny_4"]);
}

fn vrnoma(dir: &std::path::Path, args: &[&str]) -> (Option<i32>, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_vrnoma")).current_dir(dir).args(args).output().unwrap();
    (out.status.code(), String::from_utf8_lossy(&out.stderr).into_owned())
}

#[test]
fn cli_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("bad.txt"), "n_users = 3\nbogus = 1\n").unwrap();
    std::fs::write(dir.path().join("malformed.txt"), "actor_lr = fast\n").unwrap();
    let (code, err) = vrnoma(dir.path(), &["train", "--config", "bad.txt"]);
    assert_eq!(code, Some(1));
    assert!(err.contains("line 2") && err.contains("bogus"), "{err}");
    let (code, err) = vrnoma(dir.path(), &["train", "--config", "malformed.txt"]);
    assert_eq!(code, Some(1));
    assert!(err.contains("line 1") && err.contains("actor_lr"), "{err}");
    assert_eq!(vrnoma(dir.path(), &["train", "--config", "missing.txt"]).0, Some(2));
    assert_eq!(vrnoma(dir.path(), &["train", "--steps", "10", "--eval-interval", "50"]).0, Some(1));
    assert_eq!(vrnoma(dir.path(), &["eval", "--checkpoint", "none.bin"]).0, Some(2));
    assert_eq!(vrnoma(dir.path(), &["frobnicate"]).0, Some(1));
    assert_eq!(vrnoma(dir.path(), &["--help"]).0, Some(0));
}

struct AlwaysOffload(usize);

impl vrnoma_core::agents::Policy for AlwaysOffload {
    fn act(&mut self, _: &[f64]) -> Result<usize, vrnoma_core::agents::AgentError> {
        Ok(self.0)
    }
}

#[test]
fn offloading_every_user_costs_no_device_energy() {
    // One channel per user keeps every downlink interference free.
    let config = vrnoma_core::env::EnvConfig { n_channels: 5, ..vrnoma_core::env::EnvConfig::default() };
    let action = vrnoma_core::env::encode_action(&[1, 2, 3, 4, 5], 5).unwrap();
    let (m, episodes) = vrnoma_core::agents::evaluate(&mut AlwaysOffload(action), &config, 3).unwrap();
    assert_eq!(m.energy_j, 0.0);
    assert!(m.rate_defined);
    assert!(episodes.iter().all(|e| e.slots_executed == 90 && e.successful_frames == 90.0), "{episodes:?}");
}
