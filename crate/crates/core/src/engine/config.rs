use serde::{Deserialize, Serialize};

use crate::kb::{ConfigEntry, ConfigValue, Span};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FiringMode {
    /// Fire until the conflict set is empty or the cap is reached.
    Multiple,
    /// Fire at most one instantiation per tick.
    Single,
}

/// How long the conflict set lives.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ConflictPersistence {
    /// Rebuilt at the start of every tick.
    Tick,
    /// Carried across ticks and re-validated.
    Session,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EngineConfig {
    pub theta_fire: f64,
    pub max_firings: usize,
    pub alpha_levels: usize,
    /// Relative to the declared range width, absolute when unbounded.
    pub singleton_epsilon: f64,
    pub firing_mode: FiringMode,
    pub conflict_persistence: ConflictPersistence,
    pub use_cache: bool,
    /// Match rules on the thread pool. Never changes results.
    #[serde(skip)]
    pub parallel: bool,
}

impl Default for EngineConfig {
    fn default() -> Self {
        Self {
            theta_fire: 0.5,
            max_firings: 100,
            alpha_levels: 11,
            singleton_epsilon: 1e-6,
            firing_mode: FiringMode::Multiple,
            conflict_persistence: ConflictPersistence::Tick,
            use_cache: true,
            parallel: cfg!(feature = "parallel"),
        }
    }
}

impl EngineConfig {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.theta_fire > 0.0 && self.theta_fire <= 1.0) {
            return Err(format!("theta_fire {} outside (0, 1]", self.theta_fire));
        }
        if self.max_firings == 0 {
            return Err("max_firings must be at least 1".into());
        }
        if self.alpha_levels < 2 {
            return Err(format!("alpha_levels {} below 2", self.alpha_levels));
        }
        if !(self.singleton_epsilon > 0.0 && self.singleton_epsilon.is_finite()) {
            return Err(format!("singleton_epsilon {} must be positive", self.singleton_epsilon));
        }
        Ok(())
    }

    /// Applies a KRL `config { ... }` block on top of `self`.
    pub fn apply_entries(mut self, entries: &[ConfigEntry]) -> Result<Self, (Span, String)> {
        for e in entries {
            let bad = || (e.span, format!("invalid value `{}` for config key `{}`", e.value, e.key));
            let count = |v: &ConfigValue| match v {
                ConfigValue::Number(x) if *x >= 0.0 && x.fract() == 0.0 => Some(*x as usize),
                _ => None,
            };
            match (e.key.as_str(), &e.value) {
                ("theta_fire", ConfigValue::Number(x)) => self.theta_fire = *x,
                ("singleton_epsilon", ConfigValue::Number(x)) => self.singleton_epsilon = *x,
                ("max_firings", v) => self.max_firings = count(v).ok_or_else(bad)?,
                ("alpha_levels", v) => self.alpha_levels = count(v).ok_or_else(bad)?,
                ("use_cache", ConfigValue::Bool(b)) => self.use_cache = *b,
                ("firing_mode", ConfigValue::Ident(m)) => {
                    self.firing_mode = match m.as_str() {
                        "multiple" => FiringMode::Multiple,
                        "single" => FiringMode::Single,
                        _ => return Err(bad()),
                    }
                }
                ("conflict_persistence", ConfigValue::Ident(m)) => {
                    self.conflict_persistence = match m.as_str() {
                        "tick" => ConflictPersistence::Tick,
                        "session" => ConflictPersistence::Session,
                        _ => return Err(bad()),
                    }
                }
                ("theta_fire" | "singleton_epsilon" | "use_cache" | "firing_mode" | "conflict_persistence", _) => {
                    return Err(bad())
                }
                (key, _) => return Err((e.span, format!("unknown config key `{key}`"))),
            }
        }
        self.validate().map_err(|m| (entries.last().map(|e| e.span).unwrap_or_default(), m))?;
        Ok(self)
    }

    /// Applies a JSON sidecar object (same keys as the KRL block).
    pub fn merge_json(self, json: &serde_json::Value) -> Result<Self, String> {
        let mut base = serde_json::to_value(&self).map_err(|e| e.to_string())?;
        let (Some(dst), Some(src)) = (base.as_object_mut(), json.as_object()) else {
            return Err("config must be a JSON object".into());
        };
        for (k, v) in src {
            dst.insert(k.clone(), v.clone());
        }
        let mut merged: EngineConfig = serde_json::from_value(base).map_err(|e| e.to_string())?;
        merged.parallel = self.parallel;
        merged.validate()?;
        Ok(merged)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kb::parse_kb_unchecked;

    #[test]
    fn block_overrides_defaults() {
        let kb = parse_kb_unchecked("config { theta_fire: 0.7; firing_mode: single; max_firings: 5; }").unwrap();
        let c = EngineConfig::default().apply_entries(&kb.config).unwrap();
        assert_eq!((c.theta_fire, c.firing_mode, c.max_firings), (0.7, FiringMode::Single, 5));
    }

    #[test]
    fn rejects_bad_values() {
        let kb = parse_kb_unchecked("config { theta_fire: 0; }").unwrap();
        assert!(EngineConfig::default().apply_entries(&kb.config).is_err());
        let kb = parse_kb_unchecked("config { speed: 3; }").unwrap();
        assert!(EngineConfig::default().apply_entries(&kb.config).is_err());
    }

    #[test]
    fn json_sidecar() {
        let c = EngineConfig::default().merge_json(&serde_json::json!({"alpha_levels": 21})).unwrap();
        assert_eq!(c.alpha_levels, 21);
        assert!(EngineConfig::default().merge_json(&serde_json::json!({"nope": 1})).is_err());
    }
}
