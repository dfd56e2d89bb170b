//! Sectioned key=value configuration.
//!
//! Five sections — [env], [stage1], [irl], [analysis], [adapt] — with every
//! key typed and defaulted. Unknown sections or keys are rejected with their
//! line number, and parse → serialize → parse is a fixed point.

use serde::{Deserialize, Serialize};

use crate::env::TerrainKind;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvSection {
    pub terrain: TerrainKind,
    pub terrain_seed: u64,
    pub cap: f64,
    pub length: f64,
    pub grid_step: f64,
    pub v_des: f64,
    pub apex_target: f64,
    pub episode_steps: usize,
    pub observe_reference: bool,
}

impl Default for EnvSection {
    fn default() -> Self {
        EnvSection {
            terrain: TerrainKind::Flat,
            terrain_seed: 0,
            cap: 0.2,
            length: 400.0,
            grid_step: 0.1,
            v_des: 0.6,
            apex_target: 1.1,
            episode_steps: 2000,
            observe_reference: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Stage1Section {
    pub total_steps: usize,
    pub warmup_steps: usize,
    pub update_every: usize,
    pub eval_interval: usize,
    pub eval_episodes: usize,
    pub gamma: f64,
    pub batch: usize,
    pub lr: f64,
    pub buffer: usize,
    pub hidden: Vec<usize>,
    pub init_temp: f64,
    pub auto_temp: bool,
}

impl Default for Stage1Section {
    fn default() -> Self {
        Stage1Section {
            total_steps: 500_000,
            warmup_steps: 2_000,
            update_every: 2,
            eval_interval: 10_000,
            eval_episodes: 3,
            gamma: 0.99,
            batch: 512,
            lr: 3e-4,
            buffer: 1_000_000,
            hidden: vec![256, 256],
            init_temp: 0.1,
            auto_temp: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IrlSection {
    pub total_steps: usize,
    pub steps_per_iter: usize,
    pub batch: usize,
    pub lr: f64,
    pub eta: f64,
    pub alpha_rho: f64,
    pub alpha_temp: f64,
    pub mirror_samples: usize,
    pub hidden: Vec<usize>,
    pub eval_interval: usize,
    pub replay: usize,
    pub warmup_steps: usize,
    pub demo_pairs: usize,
}

impl Default for IrlSection {
    fn default() -> Self {
        IrlSection {
            total_steps: 500_000,
            steps_per_iter: 64,
            batch: 512,
            lr: 3e-4,
            eta: 1.0,
            alpha_rho: 1e-3,
            alpha_temp: 0.05,
            mirror_samples: 16,
            hidden: vec![256, 256],
            eval_interval: 10_000,
            replay: 1_000_000,
            warmup_steps: 1_000,
            demo_pairs: 20_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisSection {
    pub vdn_hidden: Vec<usize>,
    pub vdn_epochs: usize,
    pub vdn_lr: f64,
    pub ig_steps: usize,
    pub dataset_size: usize,
}

impl Default for AnalysisSection {
    fn default() -> Self {
        AnalysisSection {
            vdn_hidden: vec![256, 256],
            vdn_epochs: 300,
            vdn_lr: 3e-4,
            ig_steps: 256,
            dataset_size: 4_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdaptSection {
    pub terrain: TerrainKind,
    pub cap: f64,
    /// One of: h, h+v, h+theta, h+theta+v.
    pub reward: String,
    pub seeds: usize,
    pub steps: usize,
    pub top_features: usize,
}

impl Default for AdaptSection {
    fn default() -> Self {
        AdaptSection {
            terrain: TerrainKind::Perturbed,
            cap: 0.2,
            reward: "h+theta".into(),
            seeds: 5,
            steps: 60_000,
            top_features: 3,
        }
    }
}

/// Fully-resolved configuration document.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Config {
    pub env: EnvSection,
    pub stage1: Stage1Section,
    pub irl: IrlSection,
    pub analysis: AnalysisSection,
    pub adapt: AdaptSection,
}

fn parse_num<T: std::str::FromStr>(line: usize, key: &str, v: &str) -> Result<T> {
    v.parse().map_err(|_| {
        Error::Config(format!("line {line}: invalid value '{v}' for key '{key}'"))
    })
}

fn parse_bool(line: usize, key: &str, v: &str) -> Result<bool> {
    match v {
        "true" => Ok(true),
        "false" => Ok(false),
        _ => Err(Error::Config(format!(
            "line {line}: key '{key}' expects true|false, got '{v}'"
        ))),
    }
}

fn parse_hidden(line: usize, key: &str, v: &str) -> Result<Vec<usize>> {
    v.split('x')
        .map(|p| parse_num::<usize>(line, key, p.trim()))
        .collect()
}

fn parse_terrain(line: usize, v: &str) -> Result<TerrainKind> {
    TerrainKind::parse(v).map_err(|e| Error::Config(format!("line {line}: {e}")))
}

fn hidden_to_string(h: &[usize]) -> String {
    h.iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join("x")
}

impl Config {
    /// Parses the sectioned key=value form, starting from defaults.
    pub fn parse(text: &str) -> Result<Config> {
        let mut cfg = Config::default();
        let mut section = String::new();
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
                section = name.trim().to_string();
                if !["env", "stage1", "irl", "analysis", "adapt"].contains(&section.as_str()) {
                    return Err(Error::Config(format!(
                        "line {line_no}: unknown section '[{section}]'"
                    )));
                }
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(Error::Config(format!(
                    "line {line_no}: expected 'key = value', got '{line}'"
                )));
            };
            let key = key.trim();
            let value = value.trim();
            cfg.apply(&section, key, value, line_no)?;
        }
        Ok(cfg)
    }

    fn apply(&mut self, section: &str, key: &str, v: &str, line: usize) -> Result<()> {
        match (section, key) {
            ("env", "terrain") => self.env.terrain = parse_terrain(line, v)?,
            ("env", "terrain_seed") => self.env.terrain_seed = parse_num(line, key, v)?,
            ("env", "cap") => self.env.cap = parse_num(line, key, v)?,
            ("env", "length") => self.env.length = parse_num(line, key, v)?,
            ("env", "grid_step") => self.env.grid_step = parse_num(line, key, v)?,
            ("env", "v_des") => self.env.v_des = parse_num(line, key, v)?,
            ("env", "apex_target") => self.env.apex_target = parse_num(line, key, v)?,
            ("env", "episode_steps") => self.env.episode_steps = parse_num(line, key, v)?,
            ("env", "observe_reference") => {
                self.env.observe_reference = parse_bool(line, key, v)?
            }
            ("stage1", "total_steps") => self.stage1.total_steps = parse_num(line, key, v)?,
            ("stage1", "warmup_steps") => self.stage1.warmup_steps = parse_num(line, key, v)?,
            ("stage1", "update_every") => self.stage1.update_every = parse_num(line, key, v)?,
            ("stage1", "eval_interval") => self.stage1.eval_interval = parse_num(line, key, v)?,
            ("stage1", "eval_episodes") => self.stage1.eval_episodes = parse_num(line, key, v)?,
            ("stage1", "gamma") => self.stage1.gamma = parse_num(line, key, v)?,
            ("stage1", "batch") => self.stage1.batch = parse_num(line, key, v)?,
            ("stage1", "lr") => self.stage1.lr = parse_num(line, key, v)?,
            ("stage1", "buffer") => self.stage1.buffer = parse_num(line, key, v)?,
            ("stage1", "hidden") => self.stage1.hidden = parse_hidden(line, key, v)?,
            ("stage1", "init_temp") => self.stage1.init_temp = parse_num(line, key, v)?,
            ("stage1", "auto_temp") => self.stage1.auto_temp = parse_bool(line, key, v)?,
            ("irl", "total_steps") => self.irl.total_steps = parse_num(line, key, v)?,
            ("irl", "steps_per_iter") => self.irl.steps_per_iter = parse_num(line, key, v)?,
            ("irl", "batch") => self.irl.batch = parse_num(line, key, v)?,
            ("irl", "lr") => self.irl.lr = parse_num(line, key, v)?,
            ("irl", "eta") => self.irl.eta = parse_num(line, key, v)?,
            ("irl", "alpha_rho") => self.irl.alpha_rho = parse_num(line, key, v)?,
            ("irl", "alpha_temp") => self.irl.alpha_temp = parse_num(line, key, v)?,
            ("irl", "mirror_samples") => self.irl.mirror_samples = parse_num(line, key, v)?,
            ("irl", "hidden") => self.irl.hidden = parse_hidden(line, key, v)?,
            ("irl", "eval_interval") => self.irl.eval_interval = parse_num(line, key, v)?,
            ("irl", "replay") => self.irl.replay = parse_num(line, key, v)?,
            ("irl", "warmup_steps") => self.irl.warmup_steps = parse_num(line, key, v)?,
            ("irl", "demo_pairs") => self.irl.demo_pairs = parse_num(line, key, v)?,
            ("analysis", "vdn_hidden") => self.analysis.vdn_hidden = parse_hidden(line, key, v)?,
            ("analysis", "vdn_epochs") => self.analysis.vdn_epochs = parse_num(line, key, v)?,
            ("analysis", "vdn_lr") => self.analysis.vdn_lr = parse_num(line, key, v)?,
            ("analysis", "ig_steps") => self.analysis.ig_steps = parse_num(line, key, v)?,
            ("analysis", "dataset_size") => self.analysis.dataset_size = parse_num(line, key, v)?,
            ("adapt", "terrain") => self.adapt.terrain = parse_terrain(line, v)?,
            ("adapt", "cap") => self.adapt.cap = parse_num(line, key, v)?,
            ("adapt", "reward") => {
                if !["h", "h+v", "h+theta", "h+theta+v"].contains(&v) {
                    return Err(Error::Config(format!(
                        "line {line}: reward must be one of h|h+v|h+theta|h+theta+v, got '{v}'"
                    )));
                }
                self.adapt.reward = v.to_string();
            }
            ("adapt", "seeds") => self.adapt.seeds = parse_num(line, key, v)?,
            ("adapt", "steps") => self.adapt.steps = parse_num(line, key, v)?,
            ("adapt", "top_features") => self.adapt.top_features = parse_num(line, key, v)?,
            ("", _) => {
                return Err(Error::Config(format!(
                    "line {line}: key '{key}' appears before any [section]"
                )))
            }
            _ => {
                return Err(Error::Config(format!(
                    "line {line}: unknown key '{key}' in [{section}]"
                )))
            }
        }
        Ok(())
    }

    /// Canonical serialization; [`Config::parse`] of the output reproduces
    /// the value exactly.
    pub fn to_text(&self) -> String {
        let e = &self.env;
        let s = &self.stage1;
        let i = &self.irl;
        let a = &self.analysis;
        let d = &self.adapt;
        format!(
            "[env]\n\
             terrain = {}\n\
             terrain_seed = {}\n\
             cap = {:?}\n\
             length = {:?}\n\
             grid_step = {:?}\n\
             v_des = {:?}\n\
             apex_target = {:?}\n\
             episode_steps = {}\n\
             observe_reference = {}\n\
             \n[stage1]\n\
             total_steps = {}\n\
             warmup_steps = {}\n\
             update_every = {}\n\
             eval_interval = {}\n\
             eval_episodes = {}\n\
             gamma = {:?}\n\
             batch = {}\n\
             lr = {:?}\n\
             buffer = {}\n\
             hidden = {}\n\
             init_temp = {:?}\n\
             auto_temp = {}\n\
             \n[irl]\n\
             total_steps = {}\n\
             steps_per_iter = {}\n\
             batch = {}\n\
             lr = {:?}\n\
             eta = {:?}\n\
             alpha_rho = {:?}\n\
             alpha_temp = {:?}\n\
             mirror_samples = {}\n\
             hidden = {}\n\
             eval_interval = {}\n\
             replay = {}\n\
             warmup_steps = {}\n\
             demo_pairs = {}\n\
             \n[analysis]\n\
             vdn_hidden = {}\n\
             vdn_epochs = {}\n\
             vdn_lr = {:?}\n\
             ig_steps = {}\n\
             dataset_size = {}\n\
             \n[adapt]\n\
             terrain = {}\n\
             cap = {:?}\n\
             reward = {}\n\
             seeds = {}\n\
             steps = {}\n\
             top_features = {}\n",
            e.terrain.name(),
            e.terrain_seed,
            e.cap,
            e.length,
            e.grid_step,
            e.v_des,
            e.apex_target,
            e.episode_steps,
            e.observe_reference,
            s.total_steps,
            s.warmup_steps,
            s.update_every,
            s.eval_interval,
            s.eval_episodes,
            s.gamma,
            s.batch,
            s.lr,
            s.buffer,
            hidden_to_string(&s.hidden),
            s.init_temp,
            s.auto_temp,
            i.total_steps,
            i.steps_per_iter,
            i.batch,
            i.lr,
            i.eta,
            i.alpha_rho,
            i.alpha_temp,
            i.mirror_samples,
            hidden_to_string(&i.hidden),
            i.eval_interval,
            i.replay,
            i.warmup_steps,
            i.demo_pairs,
            hidden_to_string(&a.vdn_hidden),
            a.vdn_epochs,
            a.vdn_lr,
            a.ig_steps,
            a.dataset_size,
            d.terrain.name(),
            d.cap,
            d.reward,
            d.seeds,
            d.steps,
            d.top_features,
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip_as_fixed_point() {
        let cfg = Config::default();
        let text = cfg.to_text();
        let parsed = Config::parse(&text).unwrap();
        assert_eq!(parsed, cfg);
        assert_eq!(parsed.to_text(), text);
    }

    #[test]
    fn defaults_mirror_reference_settings() {
        let cfg = Config::default();
        assert_eq!(cfg.stage1.gamma, 0.99);
        assert_eq!(cfg.stage1.hidden, vec![256, 256]);
        assert_eq!(cfg.stage1.buffer, 1_000_000);
        assert_eq!(cfg.stage1.batch, 512);
        assert_eq!(cfg.stage1.lr, 3e-4);
    }

    #[test]
    fn unknown_key_reports_line_number() {
        let text = "[env]\nterrain = flat\nbogus = 3\n";
        let err = Config::parse(text).unwrap_err().to_string();
        assert!(err.contains("line 3"), "{err}");
        assert!(err.contains("bogus"), "{err}");
    }

    #[test]
    fn unknown_section_rejected() {
        let err = Config::parse("[nope]\n").unwrap_err().to_string();
        assert!(err.contains("unknown section"), "{err}");
    }

    #[test]
    fn overrides_and_comments() {
        let text = "# experiment\n[adapt]\nreward = h+theta+v\nseeds = 7\n\n[stage1]\nhidden = 64x32\n";
        let cfg = Config::parse(text).unwrap();
        assert_eq!(cfg.adapt.reward, "h+theta+v");
        assert_eq!(cfg.adapt.seeds, 7);
        assert_eq!(cfg.stage1.hidden, vec![64, 32]);
        assert_eq!(cfg.env, EnvSection::default());
    }

    #[test]
    fn invalid_reward_combo_rejected() {
        let err = Config::parse("[adapt]\nreward = theta\n").unwrap_err().to_string();
        assert!(err.contains("h|h+v|h+theta|h+theta+v"), "{err}");
    }
}
