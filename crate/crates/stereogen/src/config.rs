//! Run configuration: a flat, typed key = value document (TOML syntax,
//! nested tables rejected) with versioned defaults. Unknown keys are hard
//! errors so a typo cannot silently poison an ablation. The same key schema
//! drives sweep deltas.

use crate::assets::MaterialMode;
use crate::compose::{GenConfig, LightingMode, SolverMode};
use crate::render::RenderSettings;
use crate::scene::SceneType;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("unknown config key '{0}'")]
    UnknownKey(String),
    #[error("key '{key}': expected {expected}")]
    BadValue { key: String, expected: &'static str },
    #[error("config must be a flat key = value document; '{0}' is a table")]
    Nested(String),
    #[error("toml parse error: {0}")]
    Parse(String),
    #[error("invalid value for '{key}': {reason}")]
    Invalid { key: String, reason: String },
}

/// Everything a run needs: generation knobs, render settings, scene count.
#[derive(Clone, Debug)]
pub struct RunConfig {
    pub gen: GenConfig,
    pub render: RenderSettings,
    pub scenes: u32,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            gen: GenConfig::default(),
            render: RenderSettings::default(),
            scenes: 1,
        }
    }
}

impl RunConfig {
    /// Parse a config document on top of the defaults.
    pub fn from_text(text: &str) -> Result<RunConfig, ConfigError> {
        let mut config = RunConfig::default();
        config.apply_text(text)?;
        Ok(config)
    }

    pub fn apply_text(&mut self, text: &str) -> Result<(), ConfigError> {
        let table: toml::Table = text.parse().map_err(|e: toml::de::Error| ConfigError::Parse(e.to_string()))?;
        for (key, value) in table {
            if value.is_table() {
                return Err(ConfigError::Nested(key));
            }
            self.apply(&key, &value)?;
        }
        Ok(())
    }

    /// Apply one `key = value` pair given as text (sweep deltas use this).
    pub fn apply_pair(&mut self, key: &str, value_text: &str) -> Result<(), ConfigError> {
        let doc = format!("{key} = {value_text}");
        self.apply_text(&doc)
    }

    fn apply(&mut self, key: &str, value: &toml::Value) -> Result<(), ConfigError> {
        let bad = |expected: &'static str| ConfigError::BadValue { key: key.to_string(), expected };
        let as_bool = || value.as_bool().ok_or(bad("bool"));
        let as_u32 = || -> Result<u32, ConfigError> {
            value
                .as_integer()
                .filter(|v| *v >= 0 && *v <= u32::MAX as i64)
                .map(|v| v as u32)
                .ok_or(bad("nonnegative integer"))
        };
        let as_f64 = || -> Result<f64, ConfigError> {
            match value {
                toml::Value::Float(f) => Ok(*f),
                toml::Value::Integer(i) => Ok(*i as f64),
                _ => Err(bad("number")),
            }
        };
        let as_str = || value.as_str().ok_or(bad("string"));
        let as_f64_pair = || -> Result<(f64, f64), ConfigError> {
            let arr = value.as_array().ok_or(bad("[lo, hi]"))?;
            if arr.len() != 2 {
                return Err(bad("[lo, hi]"));
            }
            let get = |v: &toml::Value| -> Option<f64> {
                match v {
                    toml::Value::Float(f) => Some(*f),
                    toml::Value::Integer(i) => Some(*i as f64),
                    _ => None,
                }
            };
            match (get(&arr[0]), get(&arr[1])) {
                (Some(a), Some(b)) if a <= b => Ok((a, b)),
                _ => Err(bad("[lo, hi] with lo <= hi")),
            }
        };
        let as_u32_pair = || -> Result<(u32, u32), ConfigError> {
            let (a, b) = as_f64_pair()?;
            if a.fract() == 0.0 && b.fract() == 0.0 && a >= 0.0 {
                Ok((a as u32, b as u32))
            } else {
                Err(bad("[lo, hi] integers"))
            }
        };
        match key {
            "scene_type" => {
                self.gen.scene_type = SceneType::parse(as_str()?).ok_or_else(|| ConfigError::Invalid {
                    key: key.into(),
                    reason: "one of indoor_floating | dense_floating | nature".into(),
                })?;
            }
            "mix_weights" => {
                let arr = value.as_array().ok_or(bad("[indoor, dense, nature]"))?;
                if arr.len() != 3 {
                    return Err(bad("[indoor, dense, nature]"));
                }
                let mut w = [0.0f64; 3];
                for (i, v) in arr.iter().enumerate() {
                    w[i] = match v {
                        toml::Value::Float(f) => *f,
                        toml::Value::Integer(n) => *n as f64,
                        _ => return Err(bad("numeric weights")),
                    };
                    if w[i] < 0.0 {
                        return Err(bad("nonnegative weights"));
                    }
                }
                self.gen.mix_weights = Some(w);
            }
            "floating_count_range" => self.gen.floating_count_range = as_u32_pair()?,
            "background_objects" => self.gen.background_objects = as_bool()?,
            "object_subset" => {
                let arr = value.as_array().ok_or(bad("array of generator names"))?;
                let mut names = Vec::new();
                for v in arr {
                    names.push(v.as_str().ok_or(bad("string names"))?.to_string());
                }
                self.gen.object_subset = if names.is_empty() { None } else { Some(names) };
            }
            "include_thin_structures" => self.gen.include_thin_structures = as_bool()?,
            "material_mode" => {
                self.gen.material_policy.mode = match as_str()? {
                    "none" => MaterialMode::None,
                    "one_diffuse" => MaterialMode::OneDiffuse,
                    "metal_glass_only" => MaterialMode::MetalGlassOnly,
                    "all" => MaterialMode::All,
                    _ => {
                        return Err(ConfigError::Invalid {
                            key: key.into(),
                            reason: "one of none | one_diffuse | metal_glass_only | all".into(),
                        })
                    }
                };
            }
            "material_replace_probability" => {
                let p = as_f64()?;
                if !(0.0..=1.0).contains(&p) {
                    return Err(ConfigError::Invalid { key: key.into(), reason: "probability in [0,1]".into() });
                }
                self.gen.material_policy.replace_probability = p;
            }
            "deny_ill_posed_materials" => self.gen.material_policy.deny.enabled = as_bool()?,
            "baseline_range_m" => self.gen.baseline_range_m = Some(as_f64_pair()?),
            "lighting_mode" => {
                self.gen.lighting_mode = match as_str()? {
                    "realistic" => LightingMode::Realistic,
                    "augmented" => LightingMode::Augmented,
                    _ => {
                        return Err(ConfigError::Invalid {
                            key: key.into(),
                            reason: "one of realistic | augmented".into(),
                        })
                    }
                };
            }
            "solver_mode" => {
                self.gen.solver_mode = match as_str()? {
                    "greedy" => SolverMode::Greedy,
                    "full" => SolverMode::Full,
                    _ => {
                        return Err(ConfigError::Invalid { key: key.into(), reason: "one of greedy | full".into() })
                    }
                };
            }
            "solver_steps" => self.gen.solver_steps = Some(as_u32()?.max(1)),
            "allow_intersect" => self.gen.allow_intersect = as_bool()?,
            "delete_window_glass" => self.gen.delete_window_glass = as_bool()?,
            "rigs_per_scene" => self.gen.rigs_per_scene = as_u32()?.max(1),
            "rig_candidates" => self.gen.rig_candidates = as_u32()?.max(1),
            "dense_object_count" => self.gen.dense_object_count = as_u32()?,
            "dense_rerandomizations" => self.gen.dense_rerandomizations = as_u32()?.max(1),
            "nature_frames" => self.gen.nature_frames = as_u32()?.max(1),
            "floating_size_range" => self.gen.floating_size_range = as_f64_pair()?,
            "seed" => {
                self.gen.seed = value
                    .as_integer()
                    .filter(|v| *v >= 0)
                    .map(|v| v as u64)
                    .ok_or(bad("nonnegative integer"))?;
            }
            "scenes" => self.scenes = as_u32()?.max(1),
            "spp" => self.render.spp = as_u32()?.max(1),
            "max_bounces" => self.render.max_bounces = as_u32()?,
            "width" => self.render.width = as_u32()?.max(1),
            "height" => self.render.height = as_u32()?.max(1),
            "denoise" => self.render.denoise = as_bool()?,
            "tile" => self.render.tile = as_u32()?.max(1),
            "firefly_clamp" => self.render.firefly_clamp = as_f64()?,
            other => return Err(ConfigError::UnknownKey(other.to_string())),
        }
        Ok(())
    }

    /// Stable hash over the full configuration, for resumability markers.
    pub fn content_hash(&self) -> u64 {
        let gen = serde_json::to_vec(&self.gen).expect("serializable");
        let render = serde_json::to_vec(&self.render).expect("serializable");
        let mut acc = crate::rng::mix_parts(&[self.scenes as u64]);
        for chunk in [gen, render] {
            for b in chunk {
                acc = crate::rng::mix64(acc ^ b as u64);
            }
        }
        acc
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_match_reference_configuration() {
        let c = RunConfig::default();
        assert_eq!(c.gen.floating_count_range, (10, 30));
        assert_eq!(c.gen.rigs_per_scene, 20);
        assert_eq!(c.gen.dense_rerandomizations, 200);
        assert_eq!(c.gen.nature_frames, 50);
        assert_eq!(c.render.spp, 1024);
        assert_eq!((c.render.width, c.render.height), (1280, 720));
        assert!(c.render.denoise);
        assert_eq!(c.gen.baseline_range(SceneType::IndoorFloating), (0.04, 0.4));
        assert_eq!(c.gen.baseline_range(SceneType::DenseFloating), (0.1, 0.4));
        assert_eq!(c.gen.baseline_range(SceneType::Nature), (0.075, 0.5));
    }

    #[test]
    fn parses_a_typical_document() {
        let text = r#"
# ablation row
scene_type = "indoor_floating"
floating_count_range = [0, 10]
background_objects = false
material_mode = "metal_glass_only"
baseline_range_m = [0.2, 0.3]
solver_steps = 550
solver_mode = "full"
spp = 64
seed = 7
"#;
        let c = RunConfig::from_text(text).unwrap();
        assert_eq!(c.gen.floating_count_range, (0, 10));
        assert!(!c.gen.background_objects);
        assert_eq!(c.gen.material_policy.mode, MaterialMode::MetalGlassOnly);
        assert_eq!(c.gen.baseline_range_m, Some((0.2, 0.3)));
        assert_eq!(c.gen.solver_budget(), 550);
        assert_eq!(c.render.spp, 64);
        assert_eq!(c.gen.seed, 7);
    }

    #[test]
    fn unknown_key_is_a_hard_error() {
        let err = RunConfig::from_text("floating_count_rnage = [0, 10]\n");
        assert!(matches!(err, Err(ConfigError::UnknownKey(k)) if k == "floating_count_rnage"));
    }

    #[test]
    fn nested_tables_are_rejected() {
        let err = RunConfig::from_text("[render]\nspp = 4\n");
        assert!(matches!(err, Err(ConfigError::Nested(_))));
    }

    #[test]
    fn bad_values_are_typed_errors() {
        assert!(RunConfig::from_text("spp = \"lots\"\n").is_err());
        assert!(RunConfig::from_text("baseline_range_m = [0.4, 0.1]\n").is_err());
        assert!(RunConfig::from_text("material_replace_probability = 1.5\n").is_err());
    }

    #[test]
    fn content_hash_tracks_changes() {
        let a = RunConfig::default();
        let mut b = RunConfig::default();
        assert_eq!(a.content_hash(), b.content_hash());
        b.apply_pair("spp", "128").unwrap();
        assert_ne!(a.content_hash(), b.content_hash());
    }
}
