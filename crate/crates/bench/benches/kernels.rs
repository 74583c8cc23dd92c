use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use pemn_core::marl::{compute_gae, AgentModel};
use pemn_core::nn::Mlp;
use pemn_core::sim::{cast_lidar, generate_scenario, ActionCommand, Env, Scene, OBS_DIM};
use pemn_core::AlgorithmVariant;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn mlp(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let net = Mlp::new(&[OBS_DIM, 64, 64, 2], &mut rng);
    let x: Vec<f64> = (0..OBS_DIM).map(|_| rng.random_range(-1.0..1.0)).collect();
    c.bench_function("mlp_forward_22_64_64_2", |b| {
        b.iter(|| net.forward(black_box(&x)).unwrap())
    });
    c.bench_function("mlp_backward_22_64_64_2", |b| {
        b.iter(|| net.backward(black_box(&x), &[1.0, -0.5]).unwrap())
    });
}

fn sim(c: &mut Criterion) {
    let cfg = generate_scenario(6, 11).unwrap();
    let scene = Scene::new(cfg.clone());
    let env = Env::new(cfg);
    let states = *env.states();
    c.bench_function("lidar_level6", |b| {
        b.iter(|| cast_lidar(&scene, black_box(&states[0]), &states[1]))
    });
    let action = ActionCommand {
        steer: 0.05,
        accel: 1.0,
    };
    c.bench_function("env_step_level6", |b| {
        b.iter_batched(|| env.clone(), |mut e| e.step([action, action]), BatchSize::SmallInput)
    });
}

fn gae(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let n = 2048;
    let rewards: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    let values: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    let dones: Vec<bool> = (0..n).map(|i| i % 300 == 299).collect();
    c.bench_function("gae_2048", |b| {
        b.iter(|| compute_gae(black_box(&rewards), &values, 0.0, &dones, 0.99, 0.95).unwrap())
    });
}

fn policy(c: &mut Criterion) {
    let model = AgentModel::new(AlgorithmVariant::Pemn, 0, 0).unwrap();
    let obs = vec![0.1; OBS_DIM];
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    c.bench_function("policy_sample_and_values", |b| {
        b.iter(|| {
            let a = model.policy.sample(black_box(&obs), &mut rng).unwrap();
            (a, model.values(&obs, &obs).unwrap())
        })
    });
}

criterion_group!(benches, mlp, sim, gae, policy);
criterion_main!(benches);
