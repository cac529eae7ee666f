//! Run configuration.
//!
//! The file format is flat `key = value` text (a TOML subset) with `#`
//! comments. Missing keys take their defaults; unknown keys are rejected so
//! that a config file always reproduces the run it was written for.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::environment::EnvConfig;
use crate::forager::ForagerParams;
use crate::population::LifeValue;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,

    pub initial_nodes: usize,
    pub attachment: usize,
    pub growth_per_day: f64,
    pub topics: usize,
    pub vocabulary: usize,
    pub p_inherit: f64,
    pub doc_length: f64,
    pub dirichlet_alpha: f64,

    pub bootstrap_docs: usize,
    pub background_docs: usize,
    pub clusters: usize,

    pub gamma: f64,
    pub alpha: f64,
    pub beta: f64,

    pub c_plus: f64,
    pub c_minus: f64,
    pub send_cost_life: f64,
    pub reward_life: f64,
    pub cost_scale: f64,

    pub founders: usize,
    pub path_len: usize,
    pub weblog_len: usize,
    pub start_points: usize,
    pub step_budget: usize,

    pub virtual_days: u64,
    pub output_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 42,
            initial_nodes: 3000,
            attachment: 4,
            growth_per_day: 50.0,
            topics: 50,
            vocabulary: 1000,
            p_inherit: 0.8,
            doc_length: 100.0,
            dirichlet_alpha: 0.05,
            bootstrap_docs: 2000,
            background_docs: 500,
            clusters: 50,
            gamma: 0.9,
            alpha: 0.1,
            beta: 0.3,
            c_plus: 100.0,
            c_minus: -1.0,
            send_cost_life: 0.05,
            reward_life: 1.0,
            cost_scale: 1.0,
            founders: 2,
            path_len: 100,
            weblog_len: 100,
            start_points: 10,
            step_budget: 50,
            virtual_days: 14,
            output_dir: PathBuf::from("runs"),
        }
    }
}

/// (key, comment) in file order.
const KEYS: &[(&str, &str)] = &[
    ("seed", "master seed; every random stream of the run derives from it"),
    ("initial_nodes", "nodes of the seed graph"),
    ("attachment", "m: preferential out-links and in-links per new node"),
    ("growth_per_day", "mean new URLs per virtual day (Poisson per tick)"),
    ("topics", "T: topics of the synthetic corpus"),
    ("vocabulary", "V: vocabulary size"),
    ("p_inherit", "probability a new document copies a neighbor's topic"),
    ("doc_length", "mean document length in tokens (Poisson)"),
    ("dirichlet_alpha", "symmetric Dirichlet concentration of topic term distributions"),
    ("bootstrap_docs", "documents clustered to build the classifier"),
    ("background_docs", "documents of the general-text background class"),
    ("clusters", "k: classifier classes and state-vector dimension"),
    ("gamma", "TD discount factor, in (0, 1)"),
    ("alpha", "TD learning rate, in [0, 1]; 0 freezes the weights"),
    ("beta", "weblog value smoothing, in (0, 1]"),
    ("c_plus", "reward for the first fresh send of a document"),
    ("c_minus", "profit of every send (a cost, <= 0)"),
    ("send_cost_life", "life value lost per sent document"),
    ("reward_life", "life value gained per rewarded document"),
    ("cost_scale", "multiplies c_minus and send_cost_life"),
    ("founders", "foragers alive at the start"),
    ("path_len", "maximum steps of one path"),
    ("weblog_len", "maximum weblog entries"),
    ("start_points", "leading weblog entries used as starting points"),
    ("step_budget", "B: steps per forager per foraging period"),
    ("virtual_days", "run length in virtual days"),
    ("output_dir", "root directory for run outputs"),
];

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::ConfigParse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    /// Documented text form; `parse(to_text(c)) == c`.
    pub fn to_text(&self) -> String {
        let table = toml::Value::try_from(self).expect("config serializes to a table");
        let table = table.as_table().expect("config is a table");
        let mut out = String::from("# news forager run configuration\n");
        for (key, comment) in KEYS {
            let value = &table[*key];
            let _ = writeln!(out, "# {comment}\n{key} = {}", render(value));
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        fn positive(field: &'static str, v: usize) -> Result<()> {
            if v == 0 {
                return Err(Error::invalid(field, "must be positive"));
            }
            Ok(())
        }
        fn finite(field: &'static str, v: f64) -> Result<()> {
            if !v.is_finite() {
                return Err(Error::invalid(field, "must be finite"));
            }
            Ok(())
        }

        positive("initial_nodes", self.initial_nodes)?;
        positive("attachment", self.attachment)?;
        if self.initial_nodes < self.attachment {
            return Err(Error::invalid("initial_nodes", "must be at least `attachment`"));
        }
        for (field, v) in [
            ("growth_per_day", self.growth_per_day),
            ("p_inherit", self.p_inherit),
            ("doc_length", self.doc_length),
            ("dirichlet_alpha", self.dirichlet_alpha),
            ("gamma", self.gamma),
            ("alpha", self.alpha),
            ("beta", self.beta),
            ("c_plus", self.c_plus),
            ("c_minus", self.c_minus),
            ("send_cost_life", self.send_cost_life),
            ("reward_life", self.reward_life),
            ("cost_scale", self.cost_scale),
        ] {
            finite(field, v)?;
        }
        if self.growth_per_day < 0.0 {
            return Err(Error::invalid("growth_per_day", "must be non-negative"));
        }
        positive("topics", self.topics)?;
        positive("vocabulary", self.vocabulary)?;
        if self.vocabulary < self.topics {
            return Err(Error::invalid("vocabulary", "must be at least `topics`"));
        }
        if !(0.0..=1.0).contains(&self.p_inherit) {
            return Err(Error::invalid("p_inherit", "must lie in [0, 1]"));
        }
        if self.doc_length <= 0.0 {
            return Err(Error::invalid("doc_length", "must be positive"));
        }
        if self.dirichlet_alpha <= 0.0 {
            return Err(Error::invalid("dirichlet_alpha", "must be positive"));
        }
        positive("clusters", self.clusters)?;
        if self.bootstrap_docs < self.clusters {
            return Err(Error::invalid("bootstrap_docs", "must be at least `clusters`"));
        }
        positive("background_docs", self.background_docs)?;
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return Err(Error::invalid("gamma", "must lie in (0, 1)"));
        }
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(Error::invalid("alpha", "must lie in [0, 1]"));
        }
        if !(self.beta > 0.0 && self.beta <= 1.0) {
            return Err(Error::invalid("beta", "must lie in (0, 1]"));
        }
        if self.c_plus < 0.0 {
            return Err(Error::invalid("c_plus", "must be non-negative"));
        }
        if self.c_minus > 0.0 {
            return Err(Error::invalid("c_minus", "must be non-positive"));
        }
        if self.send_cost_life < 0.0 {
            return Err(Error::invalid("send_cost_life", "must be non-negative"));
        }
        if self.reward_life < 0.0 {
            return Err(Error::invalid("reward_life", "must be non-negative"));
        }
        if self.cost_scale <= 0.0 {
            return Err(Error::invalid("cost_scale", "must be positive"));
        }
        positive("founders", self.founders)?;
        positive("path_len", self.path_len)?;
        positive("weblog_len", self.weblog_len)?;
        positive("start_points", self.start_points)?;
        positive("step_budget", self.step_budget)?;
        if self.virtual_days == 0 {
            return Err(Error::invalid("virtual_days", "must be positive"));
        }
        Ok(())
    }

    pub fn env_config(&self) -> EnvConfig {
        EnvConfig {
            initial_nodes: self.initial_nodes,
            m: self.attachment,
            growth_per_day: self.growth_per_day,
            topics: self.topics,
            vocabulary: self.vocabulary,
            p_inherit: self.p_inherit,
            doc_length: self.doc_length,
            dirichlet_alpha: self.dirichlet_alpha,
        }
    }

    pub fn forager_params(&self) -> ForagerParams {
        ForagerParams {
            gamma: self.gamma,
            alpha: self.alpha,
            beta: self.beta,
            path_len: self.path_len,
            weblog_len: self.weblog_len,
            start_points: self.start_points,
            send_cost: LifeValue::from_units(self.send_cost_life * self.cost_scale),
            reward_gain: LifeValue::from_units(self.reward_life),
        }
    }

    /// True when `other` builds the same environment and classifier.
    pub fn same_world(&self, other: &RunConfig) -> bool {
        self.seed == other.seed
            && self.env_config() == other.env_config()
            && (self.bootstrap_docs, self.background_docs, self.clusters)
                == (other.bootstrap_docs, other.background_docs, other.clusters)
    }

    /// Per-send profit after cost scaling.
    pub fn effective_c_minus(&self) -> f64 {
        self.c_minus * self.cost_scale
    }
}

fn render(value: &toml::Value) -> String {
    match value {
        // `{:?}` keeps a decimal point and round-trips exactly.
        toml::Value::Float(f) => format!("{f:?}"),
        other => other.to_string(),
    }
}
