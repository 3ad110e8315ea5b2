use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::games::{GameId, RewardSchedule};

/// Which runner an experiment uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExperimentKind {
    Pennies,
    Dynamics,
    Cfr,
    Train,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Pennies => "pennies",
            ExperimentKind::Dynamics => "dynamics",
            ExperimentKind::Cfr => "cfr",
            ExperimentKind::Train => "train",
        }
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ExperimentKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pennies" => Ok(ExperimentKind::Pennies),
            "dynamics" => Ok(ExperimentKind::Dynamics),
            "cfr" => Ok(ExperimentKind::Cfr),
            "train" => Ok(ExperimentKind::Train),
            _ => Err(Error::Config(format!(
                "unknown experiment kind `{s}` (valid: pennies, dynamics, cfr, train)"
            ))),
        }
    }
}

/// Every key a config may set.
pub const CONFIG_KEYS: &[&str] = &[
    "name",
    "kind",
    "game",
    "algos",
    "etas",
    "taus",
    "beta",
    "horizon",
    "seeds",
    "schedule",
    "switch_every",
    "eval_every",
    "dt",
    "trajectories",
    "forfeit",
    "integrator",
    "hidden",
    "policy_batch",
    "critic_batch",
    "critic_updates",
    "policy_lr",
    "critic_lr",
];

pub const PRESET_NAMES: &[&str] = &[
    "pennies",
    "rps-dynamics",
    "biased-rps-average",
    "nonstationary-rps",
    "cfr-kuhn",
    "cfr-leduc",
    "train-kuhn",
    "train-leduc",
    "train-goofspiel",
];

/// Raw `key=value` settings, later layers overriding earlier ones.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Settings(BTreeMap<String, String>);

impl Settings {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        if !CONFIG_KEYS.contains(&key) {
            return Err(Error::Config(format!(
                "unknown config key `{key}` (valid: {})",
                CONFIG_KEYS.join(", ")
            )));
        }
        self.0.insert(key.to_string(), value.trim().to_string());
        Ok(())
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.0.get(key).map(String::as_str)
    }

    /// Parses `key=value` lines; blank lines and `#` comments are skipped.
    pub fn parse_text(&mut self, text: &str) -> Result<()> {
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key=value", i + 1)))?;
            self.set(k.trim(), v)?;
        }
        Ok(())
    }

    pub fn load(&mut self, path: &Path) -> Result<()> {
        let text = std::fs::read_to_string(path)?;
        self.parse_text(&text)
    }

    /// `key=value`, for command-line overrides.
    pub fn set_pair(&mut self, pair: &str) -> Result<()> {
        let (k, v) = pair
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("expected key=value, got `{pair}`")))?;
        self.set(k.trim(), v)
    }

    pub fn preset(name: &str) -> Result<Self> {
        let pairs: &[(&str, &str)] = match name {
            "pennies" => &[
                ("kind", "pennies"),
                ("algos", "hedge,neurd,spg"),
                ("etas", "auto"),
                ("horizon", "800"),
                ("forfeit", "true"),
                ("seeds", "0"),
            ],
            "rps-dynamics" => &[
                ("kind", "dynamics"),
                ("game", "rps:1"),
                ("algos", "rd,qpg"),
                ("dt", "0.01"),
                ("horizon", "2000"),
                ("trajectories", "5"),
                ("eval_every", "10"),
            ],
            "biased-rps-average" => &[
                ("kind", "dynamics"),
                ("game", "rps:3"),
                ("algos", "rd,qpg"),
                ("dt", "0.1"),
                ("horizon", "10000"),
                ("trajectories", "20"),
                ("eval_every", "100"),
            ],
            "nonstationary-rps" => &[
                ("kind", "dynamics"),
                ("game", "rps:20"),
                ("algos", "rd,qpg"),
                ("dt", "0.1"),
                ("horizon", "3000"),
                ("schedule", "nu=20,1000:nu=0,2000:nu=20"),
                ("trajectories", "20"),
                ("eval_every", "10"),
            ],
            "cfr-kuhn" => &[
                ("kind", "cfr"),
                ("game", "kuhn"),
                ("algos", "neurd,hedge,spg"),
                ("etas", "1"),
                ("horizon", "1000"),
                ("eval_every", "10"),
            ],
            "cfr-leduc" => &[
                ("kind", "cfr"),
                ("game", "leduc"),
                ("algos", "neurd,spg"),
                ("etas", "0.5,0.9,1,1.5,2,2.5,3,3.5,4"),
                ("horizon", "1000"),
                ("eval_every", "50"),
            ],
            "train-kuhn" => &[
                ("kind", "train"),
                ("game", "kuhn"),
                ("algos", "neurd,spg"),
                ("taus", "0,0.05,0.1"),
                ("horizon", "20000"),
                ("switch_every", "10000"),
                ("seeds", "0..5"),
                ("eval_every", "500"),
            ],
            "train-leduc" => &[
                ("kind", "train"),
                ("game", "leduc"),
                ("algos", "neurd,spg"),
                ("taus", "0.05"),
                ("horizon", "2000"),
                ("seeds", "0..3"),
                ("eval_every", "100"),
            ],
            "train-goofspiel" => &[
                ("kind", "train"),
                ("game", "goofspiel5"),
                ("algos", "neurd,spg"),
                ("taus", "0.05"),
                ("horizon", "500"),
                ("seeds", "0..2"),
                ("eval_every", "50"),
            ],
            _ => {
                return Err(Error::Config(format!(
                    "unknown preset `{name}` (valid: {})",
                    PRESET_NAMES.join(", ")
                )))
            }
        };
        let mut s = Settings::new();
        s.set("name", name)?;
        for (k, v) in pairs {
            s.set(k, v)?;
        }
        Ok(s)
    }
}

/// A validated experiment description.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub name: String,
    pub kind: ExperimentKind,
    pub game: GameId,
    /// Learners, dynamics or training algorithms, depending on `kind`.
    pub algos: Vec<String>,
    /// Step sizes as written; `auto` tunes over the default grid in the pennies runner,
    /// `bound:T` selects the bound-tuned CFR schedule.
    pub etas: Vec<String>,
    pub taus: Vec<f64>,
    pub beta: f64,
    /// Rounds, integration steps, CFR iterations or policy updates.
    pub horizon: usize,
    pub seeds: Vec<u64>,
    pub schedule: RewardSchedule,
    pub eval_every: usize,
    pub dt: f64,
    pub trajectories: usize,
    pub forfeit: bool,
    pub integrator: String,
    pub hidden: usize,
    pub policy_batch: usize,
    pub critic_batch: usize,
    pub critic_updates: usize,
    pub policy_lr: f64,
    pub critic_lr: f64,
    pub out_dir: PathBuf,
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T>
where
    T::Err: fmt::Display,
{
    value
        .parse()
        .map_err(|e| Error::Config(format!("bad value for `{key}`: `{value}` ({e})")))
}

fn list(value: &str) -> Vec<String> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(String::from)
        .collect()
}

/// `0,3,7` or the half-open range `0..5`.
pub fn parse_seeds(value: &str) -> Result<Vec<u64>> {
    if let Some((a, b)) = value.split_once("..") {
        let (a, b): (u64, u64) = (parse("seeds", a.trim())?, parse("seeds", b.trim())?);
        return Ok((a..b).collect());
    }
    list(value).iter().map(|s| parse("seeds", s)).collect()
}

impl ExperimentConfig {
    pub fn from_settings(s: &Settings, out_dir: &Path) -> Result<Self> {
        let get = |k: &str, default: &str| s.get(k).unwrap_or(default).to_string();
        let kind: ExperimentKind = s
            .get("kind")
            .ok_or_else(|| Error::Config("missing `kind` (or use a preset)".into()))?
            .parse()?;
        let default_game = match kind {
            ExperimentKind::Pennies => "matching_pennies",
            ExperimentKind::Dynamics => "rps:1",
            _ => "kuhn",
        };
        let game: GameId = get("game", default_game)
            .parse()
            .map_err(|e: Error| Error::Config(e.to_string()))?;
        let horizon: usize = parse("horizon", &get("horizon", "1000"))?;
        let mut schedule: RewardSchedule = parse("schedule", &get("schedule", "identity"))?;
        if let Some(every) = s.get("switch_every") {
            let every: usize = parse("switch_every", every)?;
            if every > 0 {
                schedule = RewardSchedule::alternating_negation(every, horizon)?;
            }
        }
        let cfg = Self {
            name: get("name", kind.name()),
            kind,
            game,
            algos: list(&get(
                "algos",
                match kind {
                    ExperimentKind::Dynamics => "rd,qpg",
                    ExperimentKind::Pennies => "hedge,spg",
                    _ => "neurd,spg",
                },
            )),
            etas: list(&get("etas", "1")),
            taus: list(&get("taus", "0"))
                .iter()
                .map(|t| parse("taus", t))
                .collect::<Result<_>>()?,
            beta: parse("beta", &get("beta", "2"))?,
            horizon,
            seeds: parse_seeds(&get("seeds", "0"))?,
            schedule,
            eval_every: parse("eval_every", &get("eval_every", "1"))?,
            dt: parse("dt", &get("dt", "0.1"))?,
            trajectories: parse("trajectories", &get("trajectories", "20"))?,
            forfeit: parse("forfeit", &get("forfeit", "true"))?,
            integrator: get("integrator", "logit"),
            hidden: parse("hidden", &get("hidden", "128"))?,
            policy_batch: parse("policy_batch", &get("policy_batch", "256"))?,
            critic_batch: parse("critic_batch", &get("critic_batch", "4"))?,
            critic_updates: parse("critic_updates", &get("critic_updates", "4"))?,
            policy_lr: parse("policy_lr", &get("policy_lr", "0.002"))?,
            critic_lr: parse("critic_lr", &get("critic_lr", "0.01"))?,
            out_dir: out_dir.to_path_buf(),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Config(m));
        if self.seeds.is_empty() {
            return fail("seeds must not be empty".into());
        }
        if self.eval_every == 0 {
            return fail("eval_every must be at least 1".into());
        }
        if self.horizon == 0 {
            return fail("horizon must be at least 1".into());
        }
        if self.algos.is_empty() {
            return fail("algos must not be empty".into());
        }
        let valid: &[&str] = match self.kind {
            ExperimentKind::Pennies | ExperimentKind::Cfr => &["hedge", "neurd", "spg"],
            ExperimentKind::Dynamics => &["rd", "qpg"],
            ExperimentKind::Train => &["neurd", "spg"],
        };
        for a in &self.algos {
            if !valid.contains(&a.as_str()) {
                return fail(format!(
                    "unknown algorithm `{a}` for {} (valid: {})",
                    self.kind,
                    valid.join(", ")
                ));
            }
        }
        if !["logit", "policy"].contains(&self.integrator.as_str()) {
            return fail(format!(
                "unknown integrator `{}` (valid: logit, policy)",
                self.integrator
            ));
        }
        let matrix = self.game.matrix().is_some();
        match self.kind {
            ExperimentKind::Dynamics if !matrix => {
                return fail(format!("dynamics needs a matrix game, got `{}`", self.game))
            }
            ExperimentKind::Pennies if !matches!(self.game, GameId::MatchingPennies { .. }) => {
                return fail("the pennies experiment only runs on matching_pennies".into())
            }
            _ => {}
        }
        if matches!(self.kind, ExperimentKind::Cfr | ExperimentKind::Train) && !matrix {
            // Nu phases only make sense for matrix payoffs.
            if self
                .schedule
                .transforms()
                .iter()
                .any(|t| matches!(t, crate::games::PhaseTransform::Nu(_)))
            {
                return fail(format!("nu phases need a matrix game, got `{}`", self.game));
            }
        }
        if self.dt <= 0.0 || self.trajectories == 0 {
            return fail("dt and trajectories must be positive".into());
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_resolve() {
        for p in PRESET_NAMES {
            let s = Settings::preset(p).unwrap();
            ExperimentConfig::from_settings(&s, Path::new("out")).unwrap();
        }
        let err = Settings::preset("nope").unwrap_err().to_string();
        assert!(err.contains("cfr-kuhn"));
    }

    #[test]
    fn unknown_key_lists_valid_keys() {
        let mut s = Settings::new();
        let err = s.set("colour", "red").unwrap_err().to_string();
        assert!(err.contains("horizon"));
    }

    #[test]
    fn text_overrides_preset() {
        let mut s = Settings::preset("cfr-kuhn").unwrap();
        s.parse_text("# comment\nhorizon = 50\n\netas=0.5,bound:50\n").unwrap();
        let c = ExperimentConfig::from_settings(&s, Path::new(".")).unwrap();
        assert_eq!(c.horizon, 50);
        assert_eq!(c.etas, vec!["0.5", "bound:50"]);
        assert!(s.parse_text("novalue").is_err());
    }

    #[test]
    fn seeds_forms() {
        assert_eq!(parse_seeds("0..3").unwrap(), vec![0, 1, 2]);
        assert_eq!(parse_seeds("4, 9").unwrap(), vec![4, 9]);
        assert!(parse_seeds("x").is_err());
    }

    #[test]
    fn invalid_configs_rejected() {
        let mut s = Settings::preset("train-kuhn").unwrap();
        s.set("algos", "hedge").unwrap();
        assert!(ExperimentConfig::from_settings(&s, Path::new(".")).is_err());
        let mut s = Settings::preset("rps-dynamics").unwrap();
        s.set("game", "kuhn").unwrap();
        assert!(ExperimentConfig::from_settings(&s, Path::new(".")).is_err());
        let mut s = Settings::preset("cfr-kuhn").unwrap();
        s.set("seeds", "").unwrap();
        assert!(ExperimentConfig::from_settings(&s, Path::new(".")).is_err());
        let mut s = Settings::preset("cfr-kuhn").unwrap();
        s.set("game", "chess").unwrap();
        assert!(ExperimentConfig::from_settings(&s, Path::new(".")).unwrap_err().to_string().contains("leduc"));
    }

    #[test]
    fn switch_every_builds_negation_schedule() {
        let s = Settings::preset("train-kuhn").unwrap();
        let c = ExperimentConfig::from_settings(&s, Path::new(".")).unwrap();
        assert_eq!(c.schedule.boundaries(), &[10000]);
    }
}
