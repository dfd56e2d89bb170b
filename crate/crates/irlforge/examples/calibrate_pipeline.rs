use std::time::Instant;

use irlforge::env::{rollout, scripted_gait, GaitParams, Hopper, HopperParams, TerrainProfile, ZeroActor};
use irlforge::irl::{
    generate_demonstrations, imitation_reward_ri, ipmd_train, train_expert, IpmdConfig, RiConfig,
    Stage1Config,
};
use irlforge::rl::sac::{SacConfig, SacTrainConfig};
use irlforge::rl::{rollout_return, GaussianPolicy};
use irlforge::rng::stream;

fn eval_ri(env: &Hopper, actor: &dyn irlforge::env::Actor, episodes: usize, horizon: usize, seed: u64) -> f64 {
    let ri = RiConfig::default();
    let mut total = 0.0;
    for ep in 0..episodes {
        let t = rollout(env, actor, horizon, seed + ep as u64 * 1000, true).unwrap();
        total += rollout_return(&t, |tr| imitation_reward_ri(&tr.s_next, &ri)).unwrap();
    }
    total / episodes as f64
}

fn main() {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let stage1_steps: usize = args.first().and_then(|s| s.parse().ok()).unwrap_or(30_000);
    let ipmd_steps: usize = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(40_000);
    let horizon: usize = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(800);

    let params = HopperParams::default();
    let reference = scripted_gait(&params, &GaitParams::default()).unwrap();
    println!("gait period {} displacement {:.3}", reference.period(), reference.displacement);
    let env = Hopper::new(
        params.clone(),
        TerrainProfile::flat(2_000.0, 1.0),
        reference.clone(),
    );

    let zero_ret = eval_ri(&env, &ZeroActor(2), 3, horizon, 1);
    println!("zero-policy r_I return over {horizon} steps: {zero_ret:.1}");
    let mut rng = stream(0, &["calib"], 0);
    let random_policy = GaussianPolicy::new(env.obs_dim(), vec![0.2, 10.0], &[64, 64], &mut rng);
    let rand_ret = eval_ri(&env, &random_policy, 3, horizon, 2);
    println!("random-policy r_I return: {rand_ret:.1}");

    let sac = SacConfig {
        gamma: 0.99,
        polyak: 0.005,
        batch: 128,
        lr: 3e-4,
        init_temp: 0.1,
        auto_temp: true,
        hidden: vec![64, 64],
    };
    let cfg = Stage1Config {
        train: SacTrainConfig {
            total_steps: stage1_steps,
            warmup_steps: 1_000,
            update_every: 2,
            eval_interval: stage1_steps / 6,
            eval_episodes: 2,
            horizon,
            replay_capacity: 200_000,
            sac: sac.clone(),
        },
        ri: RiConfig::default(),
    };
    let t0 = Instant::now();
    let expert = train_expert(&env, &cfg, 7).unwrap();
    println!(
        "stage1 ({} steps): best return {:.1} in {:.1}s; curve: {:?}",
        stage1_steps,
        expert.best_return,
        t0.elapsed().as_secs_f64(),
        expert
            .metrics
            .iter()
            .map(|m| m.episode_return.unwrap_or(f64::NAN).round())
            .collect::<Vec<_>>()
    );

    let demos = generate_demonstrations(&expert.best_policy, &env, &RiConfig::default(), 4_000, horizon, 11).unwrap();
    println!(
        "demos: mean episodic return {:.1}, mean len {:.0}",
        demos.meta.mean_return, demos.meta.mean_episode_len
    );

    let ipmd_cfg = IpmdConfig {
        total_steps: ipmd_steps,
        steps_per_iter: 64,
        batch: 128,
        lr: 3e-4,
        eta: 1.0,
        alpha_rho: 1e-3,
        alpha_temp: 0.05,
        mirror_samples: 8,
        td_sweeps: 4,
        critic_polyak: 0.005,
        hidden: vec![64, 64],
        horizon,
        eval_interval: ipmd_steps / 5,
        eval_episodes: 1,
        replay_capacity: 200_000,
        warmup_steps: 1_000,
    };
    let t1 = Instant::now();
    let ipmd = ipmd_train(&env, &demos, &ipmd_cfg, 13).unwrap();
    for m in &ipmd.metrics {
        println!(
            "  ipmd step {:6}: ret_rtheta={:9.1} rho={:+.3} |d|={:.3} mirror_nll={:+.4} rloss={:+.3}",
            m.step,
            m.episode_return.unwrap_or(f64::NAN),
            m.rho_hat.unwrap_or(f64::NAN),
            m.critic_loss.unwrap_or(f64::NAN),
            m.policy_loss.unwrap_or(f64::NAN),
            m.reward_loss.unwrap_or(f64::NAN)
        );
    }
    // Policy diagnosis: σ and action agreement with demos.
    let mut sig_sum = vec![0.0; 2];
    let mut act_err = 0.0;
    let mut rngd = stream(99, &["diag"], 0);
    for (i, tr) in demos.transitions.iter().enumerate().take(200) {
        let obs = tr.s.obs_vec(env.observe_reference);
        let sample = ipmd.policy.sample(&obs, &mut rngd).unwrap();
        for k in 0..2 {
            sig_sum[k] += sample.log_std[k].exp();
        }
        let det = ipmd.policy.act_deterministic(&obs).unwrap();
        act_err += (det[0] - tr.a[0]).abs() + (det[1] - tr.a[1]).abs() / 10.0;
        let _ = i;
    }
    println!(
        "  ipmd policy: mean sigma {:?}, mean |act - demo_act| (scaled) {:.4}",
        sig_sum.iter().map(|s| s / 200.0).collect::<Vec<_>>(),
        act_err / 200.0
    );
    let ipmd_ret = eval_ri(&env, &ipmd.policy, 3, horizon, 3);
    println!(
        "ipmd ({} steps): r_I return {:.1} (demo mean {:.1}, need ≥ {:.1}) in {:.1}s",
        ipmd_steps,
        ipmd_ret,
        demos.meta.mean_return,
        demos.meta.mean_return - 0.05 * demos.meta.mean_return.abs(),
        t1.elapsed().as_secs_f64()
    );
}
