use criterion::{criterion_group, criterion_main, Criterion};
use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use vrnoma_core::agents::compute_gae;
use vrnoma_core::env::{EnvConfig, VrEnv};
use vrnoma_core::nets::DenseNet;

fn env_step(c: &mut Criterion) {
    let config = EnvConfig::default();
    let size = config.action_space_size().unwrap();
    let mut env = VrEnv::new(config).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut episode = 0;
    env.reset(episode);
    c.bench_function("env_step_n5_m3", |b| {
        b.iter(|| {
            let out = env.step(rng.random_range(0..size)).unwrap();
            if out.terminated {
                episode += 1;
                env.reset(episode);
            }
            out.rewards[0]
        })
    });
}

fn net_passes(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let net = DenseNet::orthogonal(&[26, 128, 128, 1024], 2f64.sqrt(), 0.01, &mut rng).unwrap();
    let batch = Array2::from_shape_simple_fn((64, 26), || rng.random_range(-1.0..1.0));
    c.bench_function("actor_forward_b64", |b| b.iter(|| net.forward(batch.view()).unwrap()));
    let cache = net.forward(batch.view()).unwrap();
    let grad = Array2::from_elem((64, 1024), 1e-3);
    c.bench_function("actor_backward_b64", |b| b.iter(|| net.backward(&cache, grad.view()).unwrap()));
    let obs = vec![0.1; 26];
    c.bench_function("actor_predict", |b| b.iter(|| net.predict(&obs).unwrap()));
}

fn gae(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let (t, heads) = (2048, 5);
    let rewards = Array2::from_shape_simple_fn((t, heads), || rng.random_range(-1.0..1.0));
    let values = Array2::from_shape_simple_fn((t + 1, heads), || rng.random_range(-1.0..1.0));
    let dones: Vec<bool> = (0..t).map(|i| i % 30 == 29).collect();
    c.bench_function("gae_2048x5", |b| {
        b.iter(|| compute_gae(rewards.view(), values.view(), &dones, 0.99, 0.95).unwrap())
    });
}

criterion_group!(benches, env_step, net_passes, gae);
criterion_main!(benches);
