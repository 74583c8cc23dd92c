//! End-to-end acceptance run. Prints one PASS/FAIL line per criterion and exits
//! non-zero when any criterion fails.
//!
//! Environment:
//! - `PEMN_ACCEPTANCE_DIR`: artifact directory (default: `<target tmp>/acceptance`).
//! - `PEMN_ACCEPTANCE_ONLY`: comma-separated criterion ids to run.
//! - `PEMN_ACCEPTANCE_REUSE=1`: reuse finished training runs whose config matches.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use pemn_core::harness::{
    cmd_cross_eval, cmd_sweep, cmd_train, export_trajectories, read_episodes, read_eval, read_trajectory_csv,
    replay_episode, EvalOptions, MetricsRecord, RunConfig, DEFAULT_ALPHAS,
};
use pemn_core::marl::{clipped_surrogate, compute_gae, decomposed_gae, EnvSpec, Trainer};
use pemn_core::nn::Mlp;
use pemn_core::reward::{compose_step, sparse_reward};
use pemn_core::sim::{
    bicycle_step, cast_lidar, cast_rays, generate_scenario, ActionCommand, Env, Obstacle, Occluders, Scene, Vec2,
    VehicleState, LIDAR_RANGE, MAX_WHEEL_ANGLE, WHEELBASE,
};
use pemn_core::{AlgorithmVariant, PersonalityParams, RewardConfig, Status, TrainConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SMOKE_STEPS: u64 = 300_000;
const SMOKE_SUCCESS: f64 = 0.6;
const SMOKE_WALL_LIMIT: Duration = Duration::from_secs(30 * 60);
const SEEDS: [u64; 5] = [0, 1, 2, 3, 4];

struct Verdict {
    pass: bool,
    detail: String,
}

impl Verdict {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Verdict {
            pass,
            detail: detail.into(),
        }
    }
}

struct Ctx {
    root: PathBuf,
    reuse: bool,
}

impl Ctx {
    fn dir(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    fn log(&self, file: &str, line: &str) {
        use std::io::Write;
        let mut f = fs::OpenOptions::new()
            .create(true)
            .append(true)
            .open(self.root.join(file))
            .unwrap();
        writeln!(f, "{line}").unwrap();
    }

    /// Trains `cfg`, or reuses a finished run with an identical config echo when allowed.
    fn train(&self, cfg: &RunConfig) -> Result<([MetricsRecord; 2], [PathBuf; 2], Duration), String> {
        let dir = &cfg.run.out;
        let last = cfg.train.num_updates();
        let ckpts = [0, 1].map(|a| pemn_core::harness::checkpoint_path(dir, a, last));
        if self.reuse {
            if let Ok(saved) = RunConfig::load(&dir.join("config.toml")) {
                if &saved == cfg && ckpts.iter().all(|p| p.exists()) {
                    if let Ok(m) = read_eval(dir) {
                        return Ok((m, ckpts, Duration::ZERO));
                    }
                }
            }
        }
        let start = Instant::now();
        let out = cmd_train(cfg).map_err(|e| e.to_string())?;
        let eval = out.eval.ok_or("run finished without evaluation")?;
        Ok((eval, out.checkpoints, start.elapsed()))
    }
}

fn run_config(out: PathBuf, seed: u64, left: f64, right: f64) -> RunConfig {
    let mut cfg = RunConfig::default();
    cfg.run.out = out;
    cfg.run.record_episodes = false;
    cfg.scenario = EnvSpec::default();
    cfg.train.seed = seed;
    cfg.train.total_steps = SMOKE_STEPS;
    cfg.train.variant = AlgorithmVariant::Pemn;
    cfg.train.personalities = [
        PersonalityParams::from_alpha(left).unwrap(),
        PersonalityParams::from_alpha(right).unwrap(),
    ];
    cfg
}

// 1
fn gradient_check(_: &Ctx) -> Verdict {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0xA11CE);
    let h = 1e-5;
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let hidden = rng.random_range(1..=3);
        let mut sizes = vec![rng.random_range(1..=12)];
        sizes.extend((0..hidden).map(|_| rng.random_range(1..=32)));
        sizes.push(rng.random_range(1..=4));
        let mut net = Mlp::new(&sizes, &mut rng);
        let x: Vec<f64> = (0..sizes[0]).map(|_| rng.random_range(-2.0..2.0)).collect();
        let u: Vec<f64> = (0..net.output_size()).map(|_| rng.random_range(-1.0..1.0)).collect();
        let f = |n: &Mlp| -> f64 { n.forward(&x).unwrap().iter().zip(&u).map(|(a, b)| a * b).sum() };
        let grads = net.backward(&x, &u).unwrap();
        let analytic: Vec<Vec<f64>> = grads.tensors().iter().map(|t| t.to_vec()).collect();
        for (ti, tensor) in analytic.iter().enumerate() {
            for (k, &g) in tensor.iter().enumerate() {
                net.tensors_mut()[ti][k] += h;
                let plus = f(&net);
                net.tensors_mut()[ti][k] -= 2.0 * h;
                let minus = f(&net);
                net.tensors_mut()[ti][k] += h;
                let fd = (plus - minus) / (2.0 * h);
                worst = worst.max((fd - g).abs() / (fd.abs() + g.abs()).max(1e-6));
            }
        }
    }
    let t = start.elapsed();
    Verdict::new(
        worst < 1e-4 && t < Duration::from_secs(10),
        format!("max rel err {worst:.2e}, {:.2}s", t.as_secs_f64()),
    )
}

// 2
fn gae_linearity(_: &Ctx) -> Verdict {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0x6AE);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let n = rng.random_range(1..=50);
        let mut stream = |scale: f64| -> Vec<f64> { (0..n).map(|_| rng.random_range(-scale..scale)).collect() };
        let (rs, vs, rc, vc) = (stream(30.0), stream(10.0), stream(5.0), stream(5.0));
        let (bs, bc) = (rng.random_range(-10.0..10.0), rng.random_range(-5.0..5.0));
        let terminated = rng.random_bool(0.5);
        let dones: Vec<bool> = (0..n).map(|i| i + 1 == n && terminated).collect();
        let r: Vec<f64> = rs.iter().zip(&rc).map(|(a, b)| a + b).collect();
        let v: Vec<f64> = vs.iter().zip(&vc).map(|(a, b)| a + b).collect();
        for lambda in [0.0, 0.5, 0.95, 1.0] {
            let d = decomposed_gae(&rs, &vs, bs, &rc, &vc, bc, &dones, 0.9, lambda).unwrap();
            let (joint, _) = compute_gae(&r, &v, bs + bc, &dones, 0.9, lambda).unwrap();
            for (a, b) in d.advantages.iter().zip(&joint) {
                worst = worst.max((a - b).abs());
            }
        }
    }
    let t = start.elapsed();
    Verdict::new(
        worst <= 1e-9 && t < Duration::from_secs(5),
        format!("max abs diff {worst:.2e}, {:.2}s", t.as_secs_f64()),
    )
}

// 3
fn reward_stack(_: &Ctx) -> Verdict {
    let cfg = RewardConfig::default();
    let sparse = [
        Status::ReachGoal,
        Status::Collision,
        Status::OffRoad,
        Status::Timeout,
        Status::Running,
    ]
    .map(|s| sparse_reward(&cfg, s));
    let sparse_ok = sparse == [20.0, -30.0, -30.0, 0.0, 0.0];

    let mut tcfg = TrainConfig {
        rollout_steps: 8192,
        minibatch: 256,
        seed: 33,
        ..TrainConfig::default()
    };
    tcfg.personalities = [
        PersonalityParams::from_alpha(0.2).unwrap(),
        PersonalityParams::from_alpha(0.6).unwrap(),
    ];
    let mut trainer = Trainer::new(tcfg.clone(), EnvSpec::default(), cfg).unwrap();
    let (mut episodes, mut steps, mut identity_ok) = (0usize, 0usize, true);
    while episodes < 100 {
        let out = trainer.collect().unwrap();
        episodes += out.episodes.len();
        for tr in out.buffer.agents.iter().flat_map(|b| b.transitions()) {
            steps += 1;
            identity_ok &= tr.reward.r_self == tr.reward.r_dense + tr.reward.r_sparse;
        }
    }

    let p = [PersonalityParams::from_alpha(0.3).unwrap(); 2];
    let raw = [(1.5, 0.0), (0.7, -30.0)];
    let at = compose_step(&cfg, &p, &raw, 40.0);
    let beyond = compose_step(&cfg, &p, &raw, 40.0 + 1e-9);
    let (a, b) = (p[0].alpha(), p[0].beta());
    let gate_ok = at.iter().all(|x| x.gated)
        && at[0].r_total == a * 1.5 + 0.0 + b * 0.7
        && at[1].r_total == (a * 0.7 - 30.0) + b * 1.5
        && beyond.iter().zip(&raw).all(|(b, r)| !b.gated && b.r_total == r.0 + r.1);

    tcfg.personalities = [PersonalityParams::from_alpha(1.0).unwrap(); 2];
    tcfg.rollout_steps = 16384;
    tcfg.seed = 7;
    let mut selfish = Trainer::new(tcfg, EnvSpec::default(), cfg).unwrap();
    let out = selfish.collect().unwrap();
    let transitions: Vec<_> = out.buffer.agents.iter().flat_map(|b| b.transitions()).collect();
    let gated = transitions.iter().filter(|t| t.reward.gated).count();
    let selfish_ok = transitions.iter().all(|t| t.reward.r_total == t.reward.r_self) && gated > 0;

    Verdict::new(
        sparse_ok && identity_ok && gate_ok && selfish_ok,
        format!(
            "sparse {sparse_ok}, identity {identity_ok} ({episodes} episodes, {steps} agent-steps), \
             gate {gate_ok}, alpha=1 {selfish_ok} ({} agent-steps, {gated} gated)",
            transitions.len()
        ),
    )
}

// 4
fn surrogate_examples(_: &Ctx) -> Verdict {
    let identity = [-2.0, -0.5, 0.0, 0.7, 3.0]
        .iter()
        .all(|&a| clipped_surrogate(1.0, a, 0.2) == a);
    let upper = clipped_surrogate(1.5, 1.0, 0.2);
    let lower = clipped_surrogate(0.5, -1.0, 0.2);
    Verdict::new(
        identity && upper == 1.2 && lower == -0.8,
        format!("ratio 1 identity {identity}, 1.5/+1 -> {upper}, 0.5/-1 -> {lower}"),
    )
}

// 5
fn determinism(ctx: &Ctx) -> Verdict {
    let base = ctx.dir("determinism");
    let _ = fs::remove_dir_all(&base);
    let mut cfg = run_config(base.join("a"), 77, 0.2, 0.4);
    cfg.train.total_steps = 8192;
    cfg.run.eval_episodes = 10;
    cfg.run.record_episodes = true;
    cfg.run.verbose_rewards = true;
    let a = cmd_train(&cfg).unwrap();
    cfg.run.out = base.join("b");
    let b = cmd_train(&cfg).unwrap();

    let same = |rel: &Path| fs::read(a.run_dir.join(rel)).unwrap() == fs::read(b.run_dir.join(rel)).unwrap();
    let mut files = vec![PathBuf::from("metrics.jsonl"), "metrics.csv".into(), "eval.json".into()];
    for entry in fs::read_dir(a.run_dir.join("checkpoints")).unwrap() {
        files.push(Path::new("checkpoints").join(entry.unwrap().file_name()));
    }
    let identical = files.iter().all(|f| same(f));

    let episodes = read_episodes(&a.run_dir).unwrap();
    let exported = export_trajectories(&a.run_dir, &[], true).unwrap();
    let mut worst = 0.0f64;
    let mut status_ok = exported.len() == episodes.len();
    for (record, path) in episodes.iter().zip(&exported) {
        let mut from_file = record.clone();
        from_file.rows = read_trajectory_csv(path).unwrap();
        let replayed = replay_episode(&from_file).unwrap();
        status_ok &= replayed.len() == from_file.rows.len();
        for (x, y) in replayed.iter().zip(&from_file.rows) {
            status_ok &= x.status == y.status;
            for d in [x.x - y.x, x.y - y.y, x.heading - y.heading, x.speed - y.speed] {
                worst = worst.max(d.abs());
            }
        }
    }
    Verdict::new(
        identical && status_ok && worst <= 1e-12,
        format!(
            "{} artifacts identical: {identical}; {} episodes replayed, max state diff {worst:.1e}",
            files.len(),
            episodes.len()
        ),
    )
}

// 6
fn training_smoke(ctx: &Ctx) -> Verdict {
    let mut passed = 0;
    let mut parts = Vec::new();
    for seed in SEEDS {
        let cfg = run_config(ctx.dir(&format!("smoke/seed{seed}")), seed, 0.2, 0.2);
        match ctx.train(&cfg) {
            Ok((m, _, wall)) => {
                let ok = m.iter().all(|r| r.success_rate >= SMOKE_SUCCESS) && wall < SMOKE_WALL_LIMIT;
                passed += ok as usize;
                let line = format!(
                    "seed {seed}: success {:.2}/{:.2} collision {:.2}/{:.2} wall {:.0}s",
                    m[0].success_rate,
                    m[1].success_rate,
                    m[0].collision_rate,
                    m[1].collision_rate,
                    wall.as_secs_f64()
                );
                ctx.log("smoke.txt", &line);
                parts.push(format!("{:.2}/{:.2}", m[0].success_rate, m[1].success_rate));
            }
            Err(e) => parts.push(format!("seed {seed} error: {e}")),
        }
    }
    Verdict::new(
        passed >= 3,
        format!(
            "{passed}/5 seeds with both agents >= {SMOKE_SUCCESS} [{}]",
            parts.join(", ")
        ),
    )
}

fn average_ranks(xs: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..xs.len()).collect();
    idx.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]));
    let mut ranks = vec![0.0; xs.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && xs[idx[j + 1]] == xs[idx[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            ranks[k] = r;
        }
        i = j + 1;
    }
    ranks
}

fn spearman(x: &[f64], y: &[f64]) -> f64 {
    let (rx, ry) = (average_ranks(x), average_ranks(y));
    let n = x.len() as f64;
    let (mx, my) = (rx.iter().sum::<f64>() / n, ry.iter().sum::<f64>() / n);
    let cov: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sx: f64 = rx.iter().map(|a| (a - mx).powi(2)).sum::<f64>().sqrt();
    let sy: f64 = ry.iter().map(|b| (b - my).powi(2)).sum::<f64>().sqrt();
    if sx == 0.0 || sy == 0.0 {
        0.0
    } else {
        cov / (sx * sy)
    }
}

// 7
fn collision_trend(ctx: &Ctx) -> Verdict {
    let rights = [0.0, 0.5, 1.0];
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    let mut means = Vec::new();
    ctx.log(
        "collision_trend.csv",
        "alpha_left,alpha_right,seed,left_collision,right_collision,mean_collision",
    );
    for &ar in &rights {
        let mut sum = 0.0;
        for seed in &SEEDS[..3] {
            let cfg = run_config(ctx.dir(&format!("trend/r{ar}_s{seed}")), *seed, 0.2, ar);
            let m = match ctx.train(&cfg) {
                Ok((m, _, _)) => m,
                Err(e) => return Verdict::new(false, format!("alpha_right {ar} seed {seed}: {e}")),
            };
            let c = (m[0].collision_rate + m[1].collision_rate) / 2.0;
            ctx.log(
                "collision_trend.csv",
                &format!("0.2,{ar},{seed},{},{},{c}", m[0].collision_rate, m[1].collision_rate),
            );
            xs.push(ar);
            ys.push(c);
            sum += c;
        }
        means.push(sum / 3.0);
    }
    let drops: Vec<f64> = means.windows(2).map(|w| w[0] - w[1]).filter(|d| *d > 0.0).collect();
    let monotone = drops.is_empty() || (drops.len() == 1 && drops[0] <= 0.05);
    let rho = spearman(&xs, &ys);
    Verdict::new(
        monotone && rho > 0.0,
        format!(
            "mean collision by alpha_right {{0, 0.5, 1}}: {:.3}, {:.3}, {:.3}; spearman {rho:.3}",
            means[0], means[1], means[2]
        ),
    )
}

// 8
fn sweep_contract(ctx: &Ctx) -> Verdict {
    let dir = ctx.dir("sweep");
    if !ctx.reuse {
        let _ = fs::remove_dir_all(&dir);
    }
    let mut cfg = run_config(dir.clone(), 8, 0.0, 0.0);
    cfg.train.total_steps = cfg.train.rollout_steps as u64;
    cfg.run.eval_episodes = 20;
    let grid = match cmd_sweep(&cfg, &DEFAULT_ALPHAS) {
        Ok(g) => g,
        Err(e) => return Verdict::new(false, e.to_string()),
    };
    let n = DEFAULT_ALPHAS.len();
    let failed = grid.cells.iter().filter(|c| c.result.is_err()).count();
    let worst = grid
        .cells
        .iter()
        .filter_map(|c| c.result.as_ref().ok())
        .flat_map(|m| m.iter().map(|r| (r.rate_sum() - 1.0).abs()))
        .fold(0.0f64, f64::max);
    let matrix_rows = |name: &str| -> usize {
        let mut r = csv::Reader::from_path(dir.join(name)).unwrap();
        r.records()
            .map(|rec| rec.unwrap())
            .filter(|rec| rec.iter().take(5).all(|f| f.parse::<f64>().is_ok()) && rec.get(5) == Some(""))
            .count()
    };
    let (success_rows, collision_rows) = (matrix_rows("sweep_success.csv"), matrix_rows("sweep_collision.csv"));
    let pass = grid.is_complete()
        && grid.cells.len() == n * n
        && failed == 0
        && worst <= 1e-12
        && success_rows == n * n
        && collision_rows == n * n;
    Verdict::new(
        pass,
        format!(
            "{} cells, {failed} failed, success rows {success_rows}, collision rows {collision_rows}, \
             max |rate sum - 1| {worst:.1e}",
            grid.cells.len()
        ),
    )
}

// 9
fn cross_eval_robustness(ctx: &Ctx) -> Verdict {
    let mut backgrounds = Vec::new();
    for (k, &a) in DEFAULT_ALPHAS.iter().enumerate() {
        let cfg = run_config(ctx.dir(&format!("backgrounds/a{a}")), 1000 + k as u64, a, a);
        match ctx.train(&cfg) {
            Ok((_, ckpts, _)) => backgrounds.push(ckpts[1].clone()),
            Err(e) => return Verdict::new(false, format!("background {a}: {e}")),
        }
    }
    let single_bg = backgrounds[1].clone();
    ctx.log(
        "cross_eval_rows.csv",
        "seed,ego,background_alpha,ego_success,ego_collision,background_success",
    );
    let mut wins = 0;
    let mut parts = Vec::new();
    for seed in SEEDS {
        let mut min_success = [0.0; 2];
        for (slot, (label, pool)) in [("mixed", backgrounds.clone()), ("single", vec![single_bg.clone()])]
            .into_iter()
            .enumerate()
        {
            let mut cfg = run_config(ctx.dir(&format!("ego/{label}_s{seed}")), seed, 0.2, 0.2);
            cfg.run.backgrounds = pool;
            let ego = match ctx.train(&cfg) {
                Ok((_, ckpts, _)) => ckpts[0].clone(),
                Err(e) => return Verdict::new(false, format!("{label} ego seed {seed}: {e}")),
            };
            let opts = EvalOptions {
                out: Some(ctx.dir(&format!("ego/{label}_s{seed}/cross"))),
                ..EvalOptions::default()
            };
            let rows = match cmd_cross_eval(&ego, &backgrounds, &opts) {
                Ok(r) => r,
                Err(e) => return Verdict::new(false, format!("{label} cross-eval seed {seed}: {e}")),
            };
            for r in &rows {
                ctx.log(
                    "cross_eval_rows.csv",
                    &format!(
                        "{seed},{label},{},{},{},{}",
                        r.background_alpha, r.ego.success_rate, r.ego.collision_rate, r.background_metrics.success_rate
                    ),
                );
            }
            min_success[slot] = rows.iter().map(|r| r.ego.success_rate).fold(f64::INFINITY, f64::min);
        }
        wins += (min_success[0] > min_success[1]) as usize;
        parts.push(format!("{:.2} vs {:.2}", min_success[0], min_success[1]));
    }
    Verdict::new(
        wins >= 3,
        format!(
            "mixed beats single on min row success in {wins}/5 seeds [{}]",
            parts.join(", ")
        ),
    )
}

// 10
fn physics_suite(_: &Ctx) -> Verdict {
    let (v, steer, dt) = (4.0, 0.4, 0.1);
    let delta: f64 = steer * MAX_WHEEL_ANGLE;
    let mut s = VehicleState::new(0.0, 0.0, 0.3, v);
    let mut heading_err = 0.0f64;
    for n in 1..=200 {
        s = bicycle_step(&s, &ActionCommand { steer, accel: 0.0 }, dt, 8.0);
        let expected = 0.3 + n as f64 * (v / WHEELBASE) * delta.tan() * dt;
        let wrapped = (expected + std::f64::consts::PI).rem_euclid(std::f64::consts::TAU) - std::f64::consts::PI;
        let d = (s.heading - wrapped).abs();
        heading_err = heading_err.max(d.min(std::f64::consts::TAU - d));
    }

    let circle = [Obstacle {
        center: Vec2::new(6.0, 0.0),
        radius: 1.0,
    }];
    let world = Occluders {
        circles: &circle,
        ..Occluders::default()
    };
    let beams = cast_rays(&Vec2::zeros(), 0.0, &world);
    let lidar_ok = (beams[0] - 5.0).abs() < 1e-12 && beams[8] == LIDAR_RANGE;

    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut sym_err = 0.0f64;
    for level in 1..=6u8 {
        let cfg = generate_scenario(level, 500 + level as u64).unwrap();
        let scene = Scene::new(cfg.clone());
        let (c, h) = scene.road.pose_at(30.0);
        let ego = VehicleState::new(c.x, c.y + rng.random_range(-1.0..1.0), h, 3.0);
        let (c2, h2) = scene.road.pose_at(45.0);
        let other = VehicleState::new(c2.x, c2.y, h2 + std::f64::consts::PI, 2.0);
        let base = cast_lidar(&scene, &ego, &other);
        let angle = rng.random_range(-3.0..3.0);
        let offset = Vec2::new(rng.random_range(-40.0..40.0), rng.random_range(-40.0..40.0));
        let moved = Scene::new(cfg.transformed(angle, offset));
        let tf = |s: &VehicleState| {
            let p = pemn_core::sim::geometry::rotate(&Vec2::new(s.x, s.y), angle) + offset;
            VehicleState::new(p.x, p.y, s.heading + angle, s.speed)
        };
        for (a, b) in base.iter().zip(&cast_lidar(&moved, &tf(&ego), &tf(&other))) {
            sym_err = sym_err.max((a - b).abs());
        }
    }

    let mut s = VehicleState::new(0.0, 0.0, 0.0, 0.0);
    let mut clamp_ok = true;
    for _ in 0..100_000 {
        let cmd = ActionCommand {
            steer: rng.random_range(-3.0..3.0),
            accel: rng.random_range(-3.0..3.0),
        };
        s = bicycle_step(&s, &cmd, 0.1, 8.0);
        clamp_ok &= (0.0..=8.0).contains(&s.speed);
    }
    let mut env = Env::new(generate_scenario(1, 0).unwrap());
    for k in 0..10_000u64 {
        if env.is_done() {
            env = Env::new(generate_scenario(1 + (k % 6) as u8, k).unwrap());
        }
        let act = [0, 1].map(|_| ActionCommand {
            steer: rng.random_range(-2.0..2.0),
            accel: rng.random_range(-2.0..2.0),
        });
        let r = env.step(act);
        clamp_ok &= r
            .states
            .iter()
            .all(|s| (0.0..=env.scene().config.v_max).contains(&s.speed));
    }

    Verdict::new(
        heading_err <= 1e-12 && lidar_ok && sym_err <= 1e-9 && clamp_ok,
        format!(
            "heading err {heading_err:.1e}, lidar 5.0 m {lidar_ok}, symmetry err {sym_err:.1e}, speed clamp {clamp_ok}"
        ),
    )
}

type Criterion = (u8, &'static str, fn(&Ctx) -> Verdict);

fn main() -> ExitCode {
    let root = std::env::var_os("PEMN_ACCEPTANCE_DIR")
        .map(PathBuf::from)
        .unwrap_or_else(|| Path::new(env!("CARGO_TARGET_TMPDIR")).join("acceptance"));
    fs::create_dir_all(&root).unwrap();
    let reuse = std::env::var("PEMN_ACCEPTANCE_REUSE").is_ok_and(|v| v == "1");
    let only: Option<Vec<u8>> = std::env::var("PEMN_ACCEPTANCE_ONLY")
        .ok()
        .map(|s| s.split(',').filter_map(|x| x.trim().parse().ok()).collect());
    let ctx = Ctx { root, reuse };
    for f in ["summary.txt", "smoke.txt", "collision_trend.csv", "cross_eval_rows.csv"] {
        let _ = fs::remove_file(ctx.root.join(f));
    }

    let criteria: [Criterion; 10] = [
        (1, "gradient correctness", gradient_check),
        (2, "GAE linearity", gae_linearity),
        (3, "reward stack exactness", reward_stack),
        (4, "clipped surrogate examples", surrogate_examples),
        (5, "determinism and replay", determinism),
        (6, "training smoke", training_smoke),
        (7, "collision trend", collision_trend),
        (8, "sweep artifact contract", sweep_contract),
        (9, "cross-evaluation robustness", cross_eval_robustness),
        (10, "simulator physics", physics_suite),
    ];
    println!("acceptance artifacts: {}", ctx.root.display());
    let mut failures = 0;
    for (id, name, run) in criteria {
        if only.as_ref().is_some_and(|o| !o.contains(&id)) {
            continue;
        }
        let start = Instant::now();
        let v = run(&ctx);
        failures += (!v.pass) as usize;
        let line = format!(
            "{} [{id:>2}] {name}: {} ({:.1}s)",
            if v.pass { "PASS" } else { "FAIL" },
            v.detail,
            start.elapsed().as_secs_f64()
        );
        println!("{line}");
        ctx.log("summary.txt", &line);
    }
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failures} criterion(s) failed");
        ExitCode::FAILURE
    }
}
