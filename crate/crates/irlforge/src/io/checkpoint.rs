//! Checkpoint files: serialized networks plus a role tag and an environment
//! signature validated against the target use.

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::env::TerrainKind;
use crate::error::{Error, Result};
use crate::nn::{Activation, Mlp, MonotoneMlp};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NetKind {
    Mlp,
    Monotone,
}

/// Network wire format:
/// `{"version":1,"kind":"mlp"|"monotone","layer_sizes":[…],"activations":[…],
///   "weights":[[row-major]],"biases":[[…]]}` — raw (pre-softplus) parameters
/// for monotone nets.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NetFile {
    pub version: u32,
    pub kind: NetKind,
    pub layer_sizes: Vec<usize>,
    pub activations: Vec<Activation>,
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<Vec<f64>>,
}

impl NetFile {
    pub fn from_mlp(net: &Mlp) -> Self {
        NetFile {
            version: 1,
            kind: NetKind::Mlp,
            layer_sizes: net.layer_sizes.clone(),
            activations: net.activations.clone(),
            weights: net.weights.clone(),
            biases: net.biases.clone(),
        }
    }

    pub fn from_monotone(net: &MonotoneMlp) -> Self {
        let raw = net.raw();
        NetFile {
            version: 1,
            kind: NetKind::Monotone,
            layer_sizes: raw.layer_sizes.clone(),
            activations: raw.activations.clone(),
            weights: raw.weights.clone(),
            biases: raw.biases.clone(),
        }
    }

    fn check_version(&self) -> Result<()> {
        if self.version != 1 {
            return Err(Error::Artifact(format!(
                "unsupported checkpoint version {}",
                self.version
            )));
        }
        Ok(())
    }

    pub fn to_mlp(&self) -> Result<Mlp> {
        self.check_version()?;
        if self.kind != NetKind::Mlp {
            return Err(Error::Artifact("expected a plain mlp network".into()));
        }
        Ok(Mlp {
            layer_sizes: self.layer_sizes.clone(),
            activations: self.activations.clone(),
            weights: self.weights.clone(),
            biases: self.biases.clone(),
        })
    }

    pub fn to_monotone(&self) -> Result<MonotoneMlp> {
        self.check_version()?;
        if self.kind != NetKind::Monotone {
            return Err(Error::Artifact("expected a monotone network".into()));
        }
        Ok(MonotoneMlp::from_raw(Mlp {
            layer_sizes: self.layer_sizes.clone(),
            activations: self.activations.clone(),
            weights: self.weights.clone(),
            biases: self.biases.clone(),
        }))
    }
}

/// Environment identity embedded in checkpoints so downstream commands can
/// validate dimensional compatibility.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvSignature {
    pub obs_dim: usize,
    pub action_dim: usize,
    pub observe_reference: bool,
    pub reference_period: usize,
    /// Terrain families this artifact was trained on.
    pub trained_terrains: Vec<TerrainKind>,
}

impl EnvSignature {
    pub fn of(env: &crate::env::Hopper) -> Self {
        EnvSignature {
            obs_dim: env.obs_dim(),
            action_dim: env.action_dim(),
            observe_reference: env.observe_reference,
            reference_period: env.reference.period(),
            trained_terrains: vec![env.terrain.kind],
        }
    }

    pub fn check_compatible(&self, env: &crate::env::Hopper) -> Result<()> {
        if self.obs_dim != env.obs_dim() || self.action_dim != env.action_dim() {
            return Err(Error::Artifact(format!(
                "checkpoint built for obs {}×act {}, environment provides {}×{}",
                self.obs_dim,
                self.action_dim,
                env.obs_dim(),
                env.action_dim()
            )));
        }
        Ok(())
    }
}

/// One checkpoint on disk: role-tagged networks plus metadata.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CheckpointFile {
    pub version: u32,
    /// policy | critic | reward | vdn.
    pub role: String,
    pub env_signature: EnvSignature,
    pub nets: std::collections::BTreeMap<String, NetFile>,
    pub meta: Value,
}

impl CheckpointFile {
    pub fn new(role: &str, signature: EnvSignature) -> Self {
        CheckpointFile {
            version: 1,
            role: role.to_string(),
            env_signature: signature,
            nets: Default::default(),
            meta: Value::Null,
        }
    }

    pub fn save(&self, path: impl AsRef<std::path::Path>) -> Result<()> {
        super::write_atomic(path, &serde_json::to_string(self)?)
    }

    pub fn load(path: impl AsRef<std::path::Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path.as_ref()).map_err(|e| {
            Error::Artifact(format!("cannot read {}: {e}", path.as_ref().display()))
        })?;
        let file: CheckpointFile = serde_json::from_str(&text)?;
        if file.version != 1 {
            return Err(Error::Artifact(format!(
                "unsupported checkpoint version {}",
                file.version
            )));
        }
        Ok(file)
    }

    pub fn expect_role(&self, role: &str) -> Result<()> {
        if self.role != role {
            return Err(Error::Artifact(format!(
                "checkpoint role is '{}', expected '{role}'",
                self.role
            )));
        }
        Ok(())
    }

    pub fn net(&self, name: &str) -> Result<&NetFile> {
        self.nets
            .get(name)
            .ok_or_else(|| Error::Artifact(format!("checkpoint is missing network '{name}'")))
    }
}

/// Builds a policy checkpoint.
pub fn save_policy(
    policy: &crate::rl::GaussianPolicy,
    signature: EnvSignature,
    meta: Value,
    path: impl AsRef<std::path::Path>,
) -> Result<()> {
    let mut file = CheckpointFile::new("policy", signature);
    file.nets
        .insert("policy".into(), NetFile::from_mlp(&policy.net));
    file.meta = serde_json::json!({
        "bounds": policy.bounds,
        "extra": meta,
    });
    file.save(path)
}

pub fn load_policy(path: impl AsRef<std::path::Path>) -> Result<(crate::rl::GaussianPolicy, CheckpointFile)> {
    let file = CheckpointFile::load(path)?;
    file.expect_role("policy")?;
    let net = file.net("policy")?.to_mlp()?;
    let bounds: Vec<f64> = serde_json::from_value(
        file.meta
            .get("bounds")
            .cloned()
            .ok_or_else(|| Error::Artifact("policy checkpoint lacks action bounds".into()))?,
    )?;
    if net.output_size() != 2 * bounds.len() {
        return Err(Error::Artifact(format!(
            "policy head emits {} values but bounds imply {}",
            net.output_size(),
            2 * bounds.len()
        )));
    }
    Ok((
        crate::rl::GaussianPolicy {
            net,
            bounds,
            deterministic_eval: false,
        },
        file,
    ))
}

pub fn save_reward(
    reward: &crate::irl::RewardNet,
    signature: EnvSignature,
    meta: Value,
    path: impl AsRef<std::path::Path>,
) -> Result<()> {
    let mut file = CheckpointFile::new("reward", signature);
    file.nets
        .insert("reward".into(), NetFile::from_mlp(&reward.net));
    file.meta = serde_json::json!({
        "obs_dim": reward.obs_dim,
        "action_dim": reward.action_dim,
        "extra": meta,
    });
    file.save(path)
}

pub fn load_reward(path: impl AsRef<std::path::Path>) -> Result<(crate::irl::RewardNet, CheckpointFile)> {
    let file = CheckpointFile::load(path)?;
    file.expect_role("reward")?;
    let net = file.net("reward")?.to_mlp()?;
    let obs_dim = file.meta["obs_dim"]
        .as_u64()
        .ok_or_else(|| Error::Artifact("reward checkpoint lacks obs_dim".into()))? as usize;
    let action_dim = file.meta["action_dim"]
        .as_u64()
        .ok_or_else(|| Error::Artifact("reward checkpoint lacks action_dim".into()))?
        as usize;
    if net.input_size() != obs_dim + action_dim {
        return Err(Error::Artifact(format!(
            "reward net input {} does not match obs {obs_dim} + action {action_dim}",
            net.input_size()
        )));
    }
    Ok((
        crate::irl::RewardNet {
            net,
            obs_dim,
            action_dim,
        },
        file,
    ))
}

pub fn save_vdn(
    model: &crate::analysis::VdnModel,
    signature: EnvSignature,
    path: impl AsRef<std::path::Path>,
) -> Result<()> {
    let mut file = CheckpointFile::new("vdn", signature);
    file.nets
        .insert("vdn".into(), NetFile::from_monotone(&model.net));
    file.meta = serde_json::json!({
        "signs": model.signs,
        "means": model.means,
        "scales": model.scales,
        "y_mean": model.y_mean,
        "y_scale": model.y_scale,
        "excluded": model.excluded,
    });
    file.save(path)
}

pub fn load_vdn(path: impl AsRef<std::path::Path>) -> Result<(crate::analysis::VdnModel, CheckpointFile)> {
    let file = CheckpointFile::load(path)?;
    file.expect_role("vdn")?;
    let net = file.net("vdn")?.to_monotone()?;
    let get = |k: &str| -> Result<Vec<f64>> {
        serde_json::from_value(
            file.meta
                .get(k)
                .cloned()
                .ok_or_else(|| Error::Artifact(format!("vdn checkpoint lacks '{k}'")))?,
        )
        .map_err(Into::into)
    };
    let model = crate::analysis::VdnModel {
        signs: get("signs")?,
        means: get("means")?,
        scales: get("scales")?,
        y_mean: file.meta["y_mean"].as_f64().unwrap_or(0.0),
        y_scale: file.meta["y_scale"].as_f64().unwrap_or(1.0),
        excluded: serde_json::from_value(file.meta["excluded"].clone()).unwrap_or_default(),
        net,
    };
    Ok((model, file))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;

    #[test]
    fn net_file_format_has_spec_fields() {
        let mut rng = stream(1, &["ckpt"], 0);
        let net = Mlp::new(&[3, 4, 1], Activation::Tanh, &mut rng);
        let json = serde_json::to_value(NetFile::from_mlp(&net)).unwrap();
        assert_eq!(json["version"], 1);
        assert_eq!(json["kind"], "mlp");
        assert!(json["layer_sizes"].is_array());
        assert!(json["activations"].is_array());
        assert!(json["weights"].is_array());
        assert!(json["biases"].is_array());
    }

    #[test]
    fn monotone_round_trip_preserves_forward() {
        let mut rng = stream(1, &["ckpt"], 1);
        let net = MonotoneMlp::new(&[3, 8, 1], &mut rng);
        let file = NetFile::from_monotone(&net);
        assert_eq!(
            serde_json::to_value(&file).unwrap()["kind"],
            "monotone"
        );
        let back = file.to_monotone().unwrap();
        let x = [0.2, -0.4, 1.0];
        assert_eq!(net.forward(&x).unwrap(), back.forward(&x).unwrap());
    }

    #[test]
    fn wrong_role_is_rejected() {
        let sig = EnvSignature {
            obs_dim: 19,
            action_dim: 2,
            observe_reference: true,
            reference_period: 100,
            trained_terrains: vec![TerrainKind::Flat],
        };
        let file = CheckpointFile::new("critic", sig);
        assert!(file.expect_role("policy").is_err());
    }

    #[test]
    fn policy_checkpoint_round_trip() {
        let mut rng = stream(1, &["ckpt"], 2);
        let policy = crate::rl::GaussianPolicy::new(5, vec![0.2, 10.0], &[8], &mut rng);
        let sig = EnvSignature {
            obs_dim: 5,
            action_dim: 2,
            observe_reference: true,
            reference_period: 50,
            trained_terrains: vec![TerrainKind::Flat],
        };
        let dir = std::env::temp_dir().join(format!("irlforge-ckpt-{}", std::process::id()));
        let path = dir.join("policy.json");
        save_policy(&policy, sig, serde_json::json!({"note": "test"}), &path).unwrap();
        let (loaded, file) = load_policy(&path).unwrap();
        assert_eq!(loaded.net, policy.net);
        assert_eq!(loaded.bounds, policy.bounds);
        assert_eq!(file.env_signature.reference_period, 50);
        std::fs::remove_dir_all(&dir).unwrap();
    }
}
