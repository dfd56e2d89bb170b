//! Command-line surface binding the pipeline stages together.
//!
//! Subcommands: train-expert, gen-demos, train-irl, fit-vdn, attribute,
//! adapt, eval, plot. Global flags: --config PATH, --seed N, --workers N,
//! --out DIR. Every command is idempotent given identical inputs and seeds;
//! errors print one machine-parsable line to stderr.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use crate::adapt::{AdaptConfig, RewardSpec, RhConfig, RvReference};
use crate::analysis::{feature_extract, rank_features, timeline::timeline_to_csv, FEATURE_NAMES};
use crate::env::{
    scripted_gait, terrain_generate, GaitParams, Hopper, HopperParams, ReferenceMotion,
    TerrainKind, TerrainProfile, Trajectory,
};
use crate::error::{Error, Result};
use crate::io::checkpoint::{load_policy, load_reward, load_vdn, save_policy, save_reward, save_vdn};
use crate::io::{config::Config, log_info, write_atomic, EnvSignature, RunManifest};
use crate::irl::{DemoSet, IpmdConfig, RiConfig, Stage1Config};
use crate::rl::sac::{SacConfig, SacTrainConfig};
use crate::rl::TrainMetricsRow;
use crate::rng::derive_seed;

/// Entry point for the binary: parses process arguments, runs, and converts
/// errors into a single stderr line plus a nonzero exit status.
pub fn main() {
    let args: Vec<String> = std::env::args().skip(1).collect();
    match run(&args) {
        Ok(()) => {}
        Err(e) => {
            eprintln!("error: {}: {}", e.code(), e);
            std::process::exit(1);
        }
    }
}

const USAGE: &str = "usage: irlforge <train-expert|gen-demos|train-irl|fit-vdn|attribute|adapt|eval|plot> \
[--config PATH] [--seed N] [--workers N] [--out DIR] [command options]";

struct Cli {
    command: String,
    config: Config,
    config_text: String,
    seed: u64,
    workers: usize,
    out: PathBuf,
    options: BTreeMap<String, String>,
}

fn parse_args(args: &[String]) -> Result<Cli> {
    if args.is_empty() {
        return Err(Error::invalid(USAGE));
    }
    let command = args[0].clone();
    let known = [
        "train-expert",
        "gen-demos",
        "train-irl",
        "fit-vdn",
        "attribute",
        "adapt",
        "eval",
        "plot",
    ];
    if !known.contains(&command.as_str()) {
        return Err(Error::invalid(format!(
            "unknown subcommand '{command}'; {USAGE}"
        )));
    }
    let mut config_path: Option<String> = None;
    let mut seed = 0u64;
    let mut workers = 1usize;
    let mut out = PathBuf::from("out");
    let mut options = BTreeMap::new();
    let mut i = 1;
    while i < args.len() {
        let flag = &args[i];
        let value = args
            .get(i + 1)
            .ok_or_else(|| Error::invalid(format!("flag '{flag}' needs a value")))?;
        match flag.as_str() {
            "--config" => config_path = Some(value.clone()),
            "--seed" => {
                seed = value
                    .parse()
                    .map_err(|_| Error::invalid(format!("--seed expects an integer, got '{value}'")))?
            }
            "--workers" => {
                workers = value.parse().map_err(|_| {
                    Error::invalid(format!("--workers expects an integer, got '{value}'"))
                })?
            }
            "--out" => out = PathBuf::from(value),
            other if other.starts_with("--") => {
                options.insert(other.trim_start_matches("--").to_string(), value.clone());
            }
            other => return Err(Error::invalid(format!("unexpected argument '{other}'"))),
        }
        i += 2;
    }
    let (config, config_text) = match config_path {
        Some(p) => {
            let text = std::fs::read_to_string(&p)
                .map_err(|e| Error::Config(format!("cannot read config '{p}': {e}")))?;
            (Config::parse(&text)?, text)
        }
        None => {
            let cfg = Config::default();
            let text = cfg.to_text();
            (cfg, text)
        }
    };
    Ok(Cli {
        command,
        config,
        config_text,
        seed,
        workers,
        out,
        options,
    })
}

pub fn run(args: &[String]) -> Result<()> {
    let cli = parse_args(args)?;
    std::fs::create_dir_all(&cli.out)?;
    match cli.command.as_str() {
        "train-expert" => cmd_train_expert(&cli),
        "gen-demos" => cmd_gen_demos(&cli),
        "train-irl" => cmd_train_irl(&cli),
        "fit-vdn" => cmd_fit_vdn(&cli),
        "attribute" => cmd_attribute(&cli),
        "adapt" => cmd_adapt(&cli),
        "eval" => cmd_eval(&cli),
        "plot" => cmd_plot(&cli),
        _ => unreachable!("validated above"),
    }
}

fn hopper_params(cfg: &Config) -> HopperParams {
    HopperParams {
        episode_steps: cfg.env.episode_steps,
        ..HopperParams::default()
    }
}

fn gait_params(cfg: &Config) -> GaitParams {
    GaitParams {
        v_des: cfg.env.v_des,
        apex_target: cfg.env.apex_target,
        ..GaitParams::default()
    }
}

fn build_env(cfg: &Config, terrain: TerrainProfile) -> Result<(Hopper, ReferenceMotion)> {
    let params = hopper_params(cfg);
    let reference = scripted_gait(&params, &gait_params(cfg))?;
    let mut env = Hopper::new(params, terrain, reference.clone());
    env.observe_reference = cfg.env.observe_reference;
    Ok((env, reference))
}

fn env_terrain(cfg: &Config) -> Result<TerrainProfile> {
    match cfg.env.terrain {
        TerrainKind::Flat => Ok(TerrainProfile::flat(cfg.env.length, cfg.env.grid_step)),
        kind => terrain_generate(
            kind,
            cfg.env.terrain_seed,
            cfg.env.cap,
            cfg.env.length,
            cfg.env.grid_step,
        ),
    }
}

fn metrics_csv(rows: &[TrainMetricsRow]) -> String {
    let mut out = String::from(TrainMetricsRow::HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&r.to_csv());
        out.push('\n');
    }
    out
}

fn option<'a>(cli: &'a Cli, key: &str) -> Result<&'a str> {
    cli.options
        .get(key)
        .map(String::as_str)
        .ok_or_else(|| Error::invalid(format!("'{}' requires --{key}", cli.command)))
}

fn stage1_config(cfg: &Config) -> Stage1Config {
    Stage1Config {
        train: SacTrainConfig {
            total_steps: cfg.stage1.total_steps,
            warmup_steps: cfg.stage1.warmup_steps,
            update_every: cfg.stage1.update_every,
            eval_interval: cfg.stage1.eval_interval,
            eval_episodes: cfg.stage1.eval_episodes,
            horizon: cfg.env.episode_steps,
            replay_capacity: cfg.stage1.buffer,
            sac: SacConfig {
                gamma: cfg.stage1.gamma,
                polyak: 0.005,
                batch: cfg.stage1.batch,
                lr: cfg.stage1.lr,
                init_temp: cfg.stage1.init_temp,
                auto_temp: cfg.stage1.auto_temp,
                hidden: cfg.stage1.hidden.clone(),
            },
        },
        ri: RiConfig::default(),
    }
}

fn ipmd_config(cfg: &Config) -> IpmdConfig {
    IpmdConfig {
        total_steps: cfg.irl.total_steps,
        steps_per_iter: cfg.irl.steps_per_iter,
        batch: cfg.irl.batch,
        lr: cfg.irl.lr,
        eta: cfg.irl.eta,
        alpha_rho: cfg.irl.alpha_rho,
        alpha_temp: cfg.irl.alpha_temp,
        mirror_samples: cfg.irl.mirror_samples,
        td_sweeps: 4,
        critic_polyak: 0.005,
        hidden: cfg.irl.hidden.clone(),
        horizon: cfg.env.episode_steps,
        eval_interval: cfg.irl.eval_interval,
        eval_episodes: 2,
        replay_capacity: cfg.irl.replay,
        warmup_steps: cfg.irl.warmup_steps,
    }
}

fn cmd_train_expert(cli: &Cli) -> Result<()> {
    if cli.config.env.terrain != TerrainKind::Flat {
        return Err(Error::invalid(
            "train-expert requires flat terrain in [env] (stage 1 trains against the flat-ground reference)",
        ));
    }
    let (env, reference) = build_env(&cli.config, env_terrain(&cli.config)?)?;
    log_info("training stage-1 imitation expert");
    let artifacts = crate::irl::train_expert(&env, &stage1_config(&cli.config), cli.seed)?;
    let signature = EnvSignature::of(&env);
    save_policy(
        &artifacts.best_policy,
        signature,
        serde_json::json!({"best_return": artifacts.best_return, "stage": "stage1"}),
        cli.out.join("policy.json"),
    )?;
    write_atomic(cli.out.join("metrics.csv"), &metrics_csv(&artifacts.metrics))?;
    write_atomic(
        cli.out.join("reference.json"),
        &serde_json::to_string(&reference)?,
    )?;
    let mut manifest = RunManifest::new(cli.seed, &cli.config_text);
    for rel in ["policy.json", "metrics.csv", "reference.json"] {
        manifest.add_artifact(&cli.out, rel)?;
    }
    manifest.save(&cli.out)?;
    println!("train-expert: best eval return {:.3}", artifacts.best_return);
    Ok(())
}

fn cmd_gen_demos(cli: &Cli) -> Result<()> {
    let policy_path = option(cli, "policy")?;
    let n: usize = option(cli, "n")?
        .parse()
        .map_err(|_| Error::invalid("--n expects an integer"))?;
    let (policy, ckpt) = load_policy(policy_path)?;
    let (env, _) = build_env(&cli.config, env_terrain(&cli.config)?)?;
    ckpt.env_signature.check_compatible(&env)?;
    let demos = crate::irl::generate_demonstrations(
        &policy,
        &env,
        &RiConfig::default(),
        n,
        cli.config.env.episode_steps,
        cli.seed,
    )?;
    write_atomic(cli.out.join("demos.jsonl"), &demos.to_jsonl()?)?;
    write_atomic(
        cli.out.join("demos_meta.json"),
        &serde_json::to_string_pretty(&demos.meta)?,
    )?;
    let mut manifest = RunManifest::new(cli.seed, &cli.config_text);
    manifest.add_artifact(&cli.out, "demos.jsonl")?;
    manifest.add_artifact(&cli.out, "demos_meta.json")?;
    manifest.save(&cli.out)?;
    println!(
        "gen-demos: {} pairs, mean return {:.3}{}",
        demos.len(),
        demos.meta.mean_return,
        if demos.meta.short_episode_warning {
            " (warning: short episodes)"
        } else {
            ""
        }
    );
    Ok(())
}

fn cmd_train_irl(cli: &Cli) -> Result<()> {
    let demo_path = option(cli, "demos")?;
    let text = std::fs::read_to_string(demo_path)
        .map_err(|e| Error::Artifact(format!("cannot read demos '{demo_path}': {e}")))?;
    let meta = crate::irl::DemoMeta {
        n_pairs: 0,
        seed: 0,
        mean_episode_len: 0.0,
        mean_return: 0.0,
        short_episode_warning: false,
        source: demo_path.to_string(),
    };
    let demos = DemoSet::from_jsonl(&text, meta)?;
    let (env, _) = build_env(&cli.config, env_terrain(&cli.config)?)?;
    log_info("training stage-2 IPMD");
    let artifacts = crate::irl::ipmd_train(&env, &demos, &ipmd_config(&cli.config), cli.seed)?;
    let signature = EnvSignature::of(&env);
    save_reward(
        &artifacts.reward,
        signature.clone(),
        serde_json::json!({"rho_hat": artifacts.gain.rho_hat}),
        cli.out.join("reward.json"),
    )?;
    save_policy(
        &artifacts.policy,
        signature,
        serde_json::json!({"stage": "ipmd"}),
        cli.out.join("policy.json"),
    )?;
    write_atomic(cli.out.join("metrics.csv"), &metrics_csv(&artifacts.metrics))?;
    let mut manifest = RunManifest::new(cli.seed, &cli.config_text);
    for rel in ["reward.json", "policy.json", "metrics.csv"] {
        manifest.add_artifact(&cli.out, rel)?;
    }
    manifest.save(&cli.out)?;
    println!("train-irl: done, ρ̂ = {:.4}", artifacts.gain.rho_hat);
    Ok(())
}

fn load_trajectory(path: &str) -> Result<Trajectory> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Artifact(format!("cannot read trajectory '{path}': {e}")))?;
    Trajectory::from_jsonl(&text)
}

fn cmd_fit_vdn(cli: &Cli) -> Result<()> {
    let reward_path = option(cli, "reward")?;
    let traj_path = option(cli, "trajectory")?;
    let (reward, ckpt) = load_reward(reward_path)?;
    let trajectory = load_trajectory(traj_path)?;
    let observe_reference = ckpt.env_signature.observe_reference;
    let mut dataset = Vec::with_capacity(trajectory.len());
    for t in &trajectory.transitions {
        let target = reward.reward(&t.s.obs_vec(observe_reference), &t.a)?;
        dataset.push((feature_extract(t), target));
    }
    let (model, report) = crate::analysis::vdn_fit(
        &dataset,
        &cli.config.analysis.vdn_hidden,
        cli.config.analysis.vdn_epochs,
        cli.config.analysis.vdn_lr,
        cli.seed,
    )?;
    if !report.excluded.is_empty() {
        log_info(format!(
            "excluded zero-variance features: {}",
            report.excluded.join(", ")
        ));
    }
    save_vdn(&model, ckpt.env_signature.clone(), cli.out.join("vdn.json"))?;
    let mut mse = String::from("epoch,mse\n");
    for (i, v) in report.mse_curve.iter().enumerate() {
        mse.push_str(&format!("{i},{v:?}\n"));
    }
    write_atomic(cli.out.join("vdn_mse.csv"), &mse)?;
    let mut manifest = RunManifest::new(cli.seed, &cli.config_text);
    manifest.add_artifact(&cli.out, "vdn.json")?;
    manifest.add_artifact(&cli.out, "vdn_mse.csv")?;
    manifest.save(&cli.out)?;
    println!(
        "fit-vdn: final mse {:?}",
        report.mse_curve.last().copied().unwrap_or(f64::NAN)
    );
    Ok(())
}

fn cmd_attribute(cli: &Cli) -> Result<()> {
    let vdn_path = option(cli, "vdn")?;
    let traj_path = option(cli, "trajectory")?;
    let (model, _) = load_vdn(vdn_path)?;
    let trajectory = load_trajectory(traj_path)?;
    let rows =
        crate::analysis::importance_timeline(&trajectory, &model, cli.config.analysis.ig_steps)?;
    write_atomic(cli.out.join("timeline.csv"), &timeline_to_csv(&rows))?;

    let ranked = rank_features(&rows)?;
    let top: Vec<&str> = ranked.iter().take(4).map(|(n, _)| n.as_str()).collect();
    let mut series = Vec::new();
    for name in &top {
        let idx = FEATURE_NAMES.iter().position(|f| f == name).unwrap();
        series.push(crate::io::svg::Series {
            label: name,
            points: rows
                .iter()
                .map(|r| (r.step as f64, r.attributions[idx]))
                .collect(),
        });
    }
    let vlines: Vec<crate::io::svg::VLine> = rows
        .iter()
        .filter(|r| !r.event.is_empty())
        .map(|r| crate::io::svg::VLine {
            x: r.step as f64,
            color: if r.event == "td" { "green" } else { "red" },
            label: r.event.clone(),
        })
        .collect();
    let svg = crate::io::svg::line_plot(
        "feature attributions over one rollout",
        &series,
        &vlines,
        960,
        420,
    );
    write_atomic(cli.out.join("timeline.svg"), &svg)?;
    let mut manifest = RunManifest::new(cli.seed, &cli.config_text);
    manifest.add_artifact(&cli.out, "timeline.csv")?;
    manifest.add_artifact(&cli.out, "timeline.svg")?;
    manifest.save(&cli.out)?;
    println!(
        "attribute: top features {}",
        top.iter().take(4).copied().collect::<Vec<_>>().join(", ")
    );
    Ok(())
}

fn reward_spec_from_config(
    cli: &Cli,
    params: &HopperParams,
    reference: &ReferenceMotion,
) -> Result<RewardSpec> {
    let combo = cli.config.adapt.reward.as_str();
    let mut spec = RewardSpec {
        handcrafted: Some((1.0, RhConfig::default())),
        learned: None,
        regularizer: None,
        observe_reference: cli.config.env.observe_reference,
    };
    if combo.contains("theta") {
        let reward_path = option(cli, "reward")?;
        let (reward, ckpt) = load_reward(reward_path)?;
        spec.observe_reference = ckpt.env_signature.observe_reference;
        spec.learned = Some((1.0, reward));
    }
    if combo.contains('v') {
        let names: Vec<String> = match cli.options.get("features") {
            Some(list) => list.split(',').map(|s| s.trim().to_string()).collect(),
            None => vec!["pitch".into(), "com_vx".into(), "com_vz".into()],
        };
        let indices = crate::adapt::feature_indices(&names)?;
        let reference_targets = RvReference::from_reference(params, reference)?;
        spec.regularizer = Some((1.0, indices, reference_targets));
    }
    Ok(spec)
}

fn cmd_adapt(cli: &Cli) -> Result<()> {
    let params = hopper_params(&cli.config);
    let reference = scripted_gait(&params, &gait_params(&cli.config))?;
    let spec = reward_spec_from_config(cli, &params, &reference)?;
    let cfg = AdaptConfig {
        terrain: cli.config.adapt.terrain,
        cap: cli.config.adapt.cap,
        terrain_length: cli.config.env.length,
        grid_step: cli.config.env.grid_step,
        train: SacTrainConfig {
            total_steps: cli.config.adapt.steps,
            ..stage1_config(&cli.config).train
        },
        eval_episodes: cli.config.stage1.eval_episodes,
        workers: cli.workers,
    };
    log_info(format!(
        "adaptation on {} with reward {}",
        cfg.terrain.name(),
        cli.config.adapt.reward
    ));
    let outcome = crate::adapt::adaptation_experiment(
        &params,
        &reference,
        &spec,
        &cfg,
        cli.seed,
        cli.config.adapt.seeds,
    )?;
    write_atomic(cli.out.join("metrics.csv"), &outcome.metrics_csv())?;
    write_atomic(cli.out.join("distance.csv"), &outcome.distance_csv(&reference))?;
    write_atomic(cli.out.join("grf.csv"), &outcome.grf_csv(&reference))?;
    for seed_outcome in &outcome.seeds {
        let mut signature = EnvSignature {
            obs_dim: if cli.config.env.observe_reference {
                2 * crate::env::STATE_DIM + 1
            } else {
                crate::env::STATE_DIM + 1
            },
            action_dim: crate::env::ACTION_DIM,
            observe_reference: cli.config.env.observe_reference,
            reference_period: reference.period(),
            trained_terrains: vec![cfg.terrain],
        };
        signature.trained_terrains.dedup();
        save_policy(
            &seed_outcome.policy,
            signature,
            serde_json::json!({"seed": seed_outcome.seed, "diverged": seed_outcome.diverged}),
            cli.out.join(format!("policy_seed{}.json", seed_outcome.seed)),
        )?;
    }
    let mut manifest = RunManifest::new(cli.seed, &cli.config_text);
    for rel in ["metrics.csv", "distance.csv", "grf.csv"] {
        manifest.add_artifact(&cli.out, rel)?;
    }
    manifest.save(&cli.out)?;
    println!(
        "adapt: mean travel distance {:.3} m over {} seeds",
        outcome.mean_travel_distance(),
        cli.config.adapt.seeds
    );
    Ok(())
}

fn cmd_eval(cli: &Cli) -> Result<()> {
    let policy_path = option(cli, "policy")?;
    let kind = TerrainKind::parse(option(cli, "terrain")?)?;
    let n_seeds: usize = option(cli, "seeds")?
        .parse()
        .map_err(|_| Error::invalid("--seeds expects an integer"))?;
    let (policy, ckpt) = load_policy(policy_path)?;
    let params = hopper_params(&cli.config);
    let reference = scripted_gait(&params, &gait_params(&cli.config))?;
    let mut csv = String::from(crate::adapt::AdaptMetrics::CSV_HEADER);
    csv.push('\n');
    for i in 0..n_seeds {
        let seed = derive_seed(cli.seed, &["eval-seed"], i as u64);
        let terrain = if kind == TerrainKind::Flat {
            TerrainProfile::flat(cli.config.env.length, cli.config.env.grid_step)
        } else {
            terrain_generate(
                kind,
                seed,
                cli.config.adapt.cap,
                cli.config.env.length,
                cli.config.env.grid_step,
            )?
        };
        let mut env = Hopper::new(params.clone(), terrain, reference.clone());
        env.observe_reference = ckpt.env_signature.observe_reference;
        ckpt.env_signature.check_compatible(&env)?;
        let t = crate::env::rollout(&env, &policy, cli.config.env.episode_steps, seed, true)?;
        let m = crate::adapt::AdaptMetrics::from_trajectory(&t, &reference)?;
        csv.push_str(&m.to_csv_row(seed));
        csv.push('\n');
    }
    write_atomic(cli.out.join("metrics.csv"), &csv)?;
    let mut manifest = RunManifest::new(cli.seed, &cli.config_text);
    manifest.add_artifact(&cli.out, "metrics.csv")?;
    manifest.save(&cli.out)?;
    println!("eval: wrote metrics for {n_seeds} seeds on {}", kind.name());
    Ok(())
}

fn cmd_plot(cli: &Cli) -> Result<()> {
    let csv_path = option(cli, "csv")?;
    let x_col = option(cli, "x")?;
    let y_cols: Vec<String> = option(cli, "y")?
        .split(',')
        .map(|s| s.trim().to_string())
        .collect();
    let out_name = cli
        .options
        .get("name")
        .cloned()
        .unwrap_or_else(|| "plot.svg".into());
    let text = std::fs::read_to_string(csv_path)
        .map_err(|e| Error::Artifact(format!("cannot read csv '{csv_path}': {e}")))?;
    let mut lines = text.lines();
    let header: Vec<&str> = lines
        .next()
        .ok_or_else(|| Error::Artifact("csv is empty".into()))?
        .split(',')
        .collect();
    let col = |name: &str| -> Result<usize> {
        header
            .iter()
            .position(|h| *h == name)
            .ok_or_else(|| Error::invalid(format!("csv has no column '{name}'")))
    };
    let xi = col(x_col)?;
    let yis: Vec<(String, usize)> = y_cols
        .iter()
        .map(|c| col(c).map(|i| (c.clone(), i)))
        .collect::<Result<_>>()?;
    let mut series: Vec<crate::io::svg::Series> = yis
        .iter()
        .map(|(label, _)| crate::io::svg::Series {
            label,
            points: Vec::new(),
        })
        .collect();
    for line in lines {
        if line.trim().is_empty() {
            continue;
        }
        let cells: Vec<&str> = line.split(',').collect();
        let Some(x) = cells.get(xi).and_then(|v| v.parse::<f64>().ok()) else {
            continue;
        };
        for (k, (_, yi)) in yis.iter().enumerate() {
            if let Some(y) = cells.get(*yi).and_then(|v| v.parse::<f64>().ok()) {
                series[k].points.push((x, y));
            }
        }
    }
    let svg = crate::io::svg::line_plot(&format!("{csv_path}"), &series, &[], 860, 420);
    write_atomic(cli.out.join(&out_name), &svg)?;
    println!("plot: wrote {}", cli.out.join(&out_name).display());
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_subcommand_rejected() {
        let err = run(&["frobnicate".to_string()]).unwrap_err().to_string();
        assert!(err.contains("unknown subcommand"), "{err}");
    }

    #[test]
    fn missing_required_option_is_reported() {
        let dir = std::env::temp_dir().join(format!("irlforge-cli-{}", std::process::id()));
        let err = run(&[
            "gen-demos".to_string(),
            "--out".to_string(),
            dir.to_string_lossy().to_string(),
        ])
        .unwrap_err()
        .to_string();
        assert!(err.contains("--policy"), "{err}");
        let _ = std::fs::remove_dir_all(&dir);
    }

    #[test]
    fn plot_produces_wellformed_svg_with_one_polyline() {
        let dir = std::env::temp_dir().join(format!("irlforge-plot-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let csv = dir.join("data.csv");
        std::fs::write(&csv, "step,value\n0,1.0\n1,2.0\n2,1.5\n").unwrap();
        run(&[
            "plot".into(),
            "--csv".into(),
            csv.to_string_lossy().into(),
            "--x".into(),
            "step".into(),
            "--y".into(),
            "value".into(),
            "--out".into(),
            dir.to_string_lossy().into(),
        ])
        .unwrap();
        let svg = std::fs::read_to_string(dir.join("plot.svg")).unwrap();
        crate::io::svg::check_well_formed(&svg).unwrap();
        assert_eq!(svg.matches("<polyline").count(), 1);
        std::fs::remove_dir_all(&dir).unwrap();
    }
}
