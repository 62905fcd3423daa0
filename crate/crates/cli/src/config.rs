//! Experiment configuration: a TOML document with `[problem]`, `[engine]`,
//! `[delay]`, `[analysis]` and `[output]` sections plus optional
//! `[[variant]]` tables that override keys of the base document.

use std::collections::BTreeSet;
use std::fmt;
use std::path::Path;

use aisdd::beamforming::{db_to_linear, Baseline, BeamformingEngine, CellNetwork};
use aisdd::problems::{slater_check, ChannelModel, NumSpec, QuadraticSpec};
use aisdd::{StepSchedule, UpdateBudget};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use toml::{Table, Value};

/// Every problem, key and cross-reference error found in a document.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigErrors(pub Vec<String>);

impl fmt::Display for ConfigErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{} configuration error(s):", self.0.len())?;
        for e in &self.0 {
            writeln!(f, "  - {e}")?;
        }
        Ok(())
    }
}

impl std::error::Error for ConfigErrors {}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub name: String,
    pub problem: ProblemConfig,
    pub engine: EngineConfig,
    #[serde(default)]
    pub delay: DelayConfig,
    #[serde(default)]
    pub analysis: AnalysisConfig,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default, rename = "variant", skip_serializing_if = "Vec::is_empty")]
    pub variants: Vec<Variant>,
}

/// Named set of overrides, e.g. `engine.kind = "aisdd"`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Variant {
    pub label: String,
    #[serde(flatten)]
    pub overrides: Table,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ProblemConfig {
    Quadratic {
        a: Vec<f64>,
        b: f64,
        #[serde(default = "default_x_max")]
        x_max: f64,
        #[serde(default)]
        noise_amp: f64,
    },
    Num {
        /// Utility weights; `k` equal weights of 1 when absent.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        w: Option<Vec<f64>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        k: Option<usize>,
        #[serde(default = "default_r_min")]
        r_min: f64,
        #[serde(default = "default_r_max")]
        r_max: f64,
        #[serde(default = "default_p_max")]
        p_max: f64,
        /// Network power budget; `0.2 K` when absent.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        p_total: Option<f64>,
        #[serde(default = "one")]
        channel_mean: f64,
        #[serde(default = "default_h_max")]
        h_max: f64,
        /// Requires a Monte Carlo Slater check to pass at validation.
        #[serde(default)]
        claims_slater: bool,
    },
    Beamforming {
        bs: usize,
        antennas: usize,
        #[serde(default = "one_usize")]
        users_per_cell: usize,
        gamma_db: f64,
        /// Filled from `gamma_db` at parse time.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        gamma_linear: Option<f64>,
        #[serde(default = "one")]
        sigma2: f64,
        rho: f64,
        #[serde(default)]
        baseline: Baseline,
        #[serde(default = "one")]
        channel_variance: f64,
        #[serde(default = "default_truncation")]
        channel_truncation: f64,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EngineKind {
    Synchronous,
    SynchronousIncremental,
    AsyncFc,
    Aisdd,
}

impl EngineKind {
    pub fn is_async(self) -> bool {
        matches!(self, EngineKind::AsyncFc | EngineKind::Aisdd)
    }

    pub fn name(self) -> &'static str {
        match self {
            EngineKind::Synchronous => "synchronous",
            EngineKind::SynchronousIncremental => "synchronous_incremental",
            EngineKind::AsyncFc => "async_fc",
            EngineKind::Aisdd => "aisdd",
        }
    }

    pub fn beamforming(self) -> BeamformingEngine {
        match self {
            EngineKind::Synchronous => BeamformingEngine::Synchronous,
            EngineKind::SynchronousIncremental => BeamformingEngine::SynchronousIncremental,
            EngineKind::AsyncFc => BeamformingEngine::AsyncFc,
            EngineKind::Aisdd => BeamformingEngine::Aisdd,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepKind {
    Constant,
    PowerDecay,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EngineConfig {
    pub kind: EngineKind,
    #[serde(default = "default_step")]
    pub step: StepKind,
    pub epsilon: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    pub horizon: u64,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
}

impl EngineConfig {
    pub fn schedule(&self) -> Result<StepSchedule, String> {
        let r = match self.step {
            StepKind::Constant => StepSchedule::constant(self.epsilon),
            StepKind::PowerDecay => match self.alpha {
                Some(alpha) => StepSchedule::power_decay(self.epsilon, alpha),
                None => return Err("engine.alpha is required for the power_decay step".into()),
            },
        };
        r.map_err(|e| format!("engine: {e}"))
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DelayKind {
    #[default]
    None,
    Constant,
    SubsetFc,
    BudgetIncremental,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct DelayConfig {
    #[serde(default)]
    pub kind: DelayKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub min_updates: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_updates: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau_max: Option<u64>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReferenceMode {
    /// Analytic for the quadratic problem, dual grid for NUM with `K <= 3`,
    /// a long synchronous run otherwise, nothing for beamforming.
    #[default]
    Auto,
    Analytic,
    Grid,
    LongRun,
    None,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnalysisConfig {
    #[serde(default = "default_cadence")]
    pub cadence: u64,
    #[serde(default = "default_mc_samples")]
    pub mc_samples: usize,
    #[serde(default)]
    pub reference: ReferenceMode,
    #[serde(default = "default_reference_horizon")]
    pub reference_horizon: u64,
    /// Fails the run when `|mean D(lambda_T) - D*|` exceeds this.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub assert_dual_gap_max: Option<f64>,
    /// Fails the run when a feasibility-gap component ends below this.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub assert_feasibility_min: Option<f64>,
    /// Fails the run when more than this fraction of allocations was flagged.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub assert_flagged_max: Option<f64>,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        Self {
            cadence: default_cadence(),
            mc_samples: default_mc_samples(),
            reference: ReferenceMode::Auto,
            reference_horizon: default_reference_horizon(),
            assert_dual_gap_max: None,
            assert_feasibility_min: None,
            assert_flagged_max: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OutputConfig {
    #[serde(default = "default_dir")]
    pub dir: String,
    /// Writes one JSON record per allocation and per dual step.
    #[serde(default)]
    pub jsonl: bool,
    /// Adds the multiplier after each dual step to the JSONL records.
    #[serde(default)]
    pub lambda_snapshots: bool,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            dir: default_dir(),
            jsonl: false,
            lambda_snapshots: false,
        }
    }
}

fn default_x_max() -> f64 {
    5.0
}
fn default_r_min() -> f64 {
    0.01
}
fn default_r_max() -> f64 {
    2.0
}
fn default_p_max() -> f64 {
    5.0
}
fn default_h_max() -> f64 {
    10.0
}
fn default_truncation() -> f64 {
    5.0
}
fn one() -> f64 {
    1.0
}
fn one_usize() -> usize {
    1
}
fn default_step() -> StepKind {
    StepKind::Constant
}
fn default_seeds() -> Vec<u64> {
    vec![1]
}
fn default_cadence() -> u64 {
    50
}
fn default_mc_samples() -> usize {
    2000
}
fn default_reference_horizon() -> u64 {
    20_000
}
fn default_dir() -> String {
    "runs".into()
}

const TOP_KEYS: &[&str] = &["name", "problem", "engine", "delay", "analysis", "output", "variant"];
const QUADRATIC_KEYS: &[&str] = &["kind", "a", "b", "x_max", "noise_amp"];
const NUM_KEYS: &[&str] = &[
    "kind", "w", "k", "r_min", "r_max", "p_max", "p_total", "channel_mean", "h_max", "claims_slater",
];
const BEAMFORMING_KEYS: &[&str] = &[
    "kind",
    "bs",
    "antennas",
    "users_per_cell",
    "gamma_db",
    "gamma_linear",
    "sigma2",
    "rho",
    "baseline",
    "channel_variance",
    "channel_truncation",
];
const ENGINE_KEYS: &[&str] = &["kind", "step", "epsilon", "alpha", "horizon", "seeds"];
const DELAY_KEYS: &[&str] = &["kind", "c", "m", "min_updates", "max_updates", "tau_max"];
const ANALYSIS_KEYS: &[&str] = &[
    "cadence",
    "mc_samples",
    "reference",
    "reference_horizon",
    "assert_dual_gap_max",
    "assert_feasibility_min",
    "assert_flagged_max",
];
const OUTPUT_KEYS: &[&str] = &["dir", "jsonl", "lambda_snapshots"];

fn section_keys(section: &str, problem_kind: Option<&str>) -> Option<&'static [&'static str]> {
    Some(match section {
        "problem" => match problem_kind {
            Some("num") => NUM_KEYS,
            Some("beamforming") => BEAMFORMING_KEYS,
            _ => QUADRATIC_KEYS,
        },
        "engine" => ENGINE_KEYS,
        "delay" => DELAY_KEYS,
        "analysis" => ANALYSIS_KEYS,
        "output" => OUTPUT_KEYS,
        _ => return None,
    })
}

fn check_section_keys(prefix: &str, table: &Table, problem_kind: Option<&str>, errors: &mut Vec<String>) {
    for (section, value) in table {
        let Some(known) = section_keys(section, problem_kind) else {
            continue;
        };
        let Some(inner) = value.as_table() else {
            errors.push(format!("{prefix}{section}: expected a table"));
            continue;
        };
        for key in inner.keys() {
            if !known.contains(&key.as_str()) {
                errors.push(format!("{prefix}{section}.{key}: unknown key"));
            }
        }
    }
}

fn problem_kind(table: &Table) -> Option<&str> {
    table.get("problem")?.get("kind")?.as_str()
}

/// Unknown keys anywhere in the document, including inside variants.
fn check_keys(table: &Table, errors: &mut Vec<String>) {
    for key in table.keys() {
        if !TOP_KEYS.contains(&key.as_str()) {
            errors.push(format!("{key}: unknown key"));
        }
    }
    let base_kind = problem_kind(table);
    check_section_keys("", table, base_kind, errors);
    if let Some(variants) = table.get("variant") {
        let Some(variants) = variants.as_array() else {
            errors.push("variant: expected an array of tables".into());
            return;
        };
        for (n, v) in variants.iter().enumerate() {
            let Some(v) = v.as_table() else {
                errors.push(format!("variant[{n}]: expected a table"));
                continue;
            };
            let kind = problem_kind(v).or(base_kind);
            for key in v.keys() {
                if key != "label" && !TOP_KEYS[1..6].contains(&key.as_str()) {
                    errors.push(format!("variant[{n}].{key}: unknown key"));
                }
            }
            check_section_keys(&format!("variant[{n}]."), v, kind, errors);
        }
    }
}

fn section<T: DeserializeOwned>(table: &Table, key: &str, errors: &mut Vec<String>) -> Option<T> {
    let value = table.get(key).cloned().unwrap_or_else(|| Value::Table(Table::new()));
    match value.try_into() {
        Ok(v) => Some(v),
        Err(e) => {
            errors.push(format!("{key}: {}", e.message().trim()));
            None
        }
    }
}

/// Overlays `over` onto `base`, merging nested tables key by key.
pub fn deep_merge(base: &mut Table, over: &Table) {
    for (k, v) in over {
        match (base.get_mut(k), v) {
            (Some(Value::Table(b)), Value::Table(o)) => deep_merge(b, o),
            _ => {
                base.insert(k.clone(), v.clone());
            }
        }
    }
}

impl RunConfig {
    /// Parses and validates a document, reporting every error found.
    pub fn parse(text: &str) -> Result<Self, ConfigErrors> {
        let table: Table = text.parse().map_err(|e: toml::de::Error| ConfigErrors(vec![e.message().to_string()]))?;
        Self::from_table(&table)
    }

    pub fn from_path(path: &Path) -> Result<Self, ConfigErrors> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigErrors(vec![format!("cannot read {}: {e}", path.display())]))?;
        Self::parse(&text)
    }

    pub fn from_table(table: &Table) -> Result<Self, ConfigErrors> {
        let mut errors = Vec::new();
        check_keys(table, &mut errors);
        let name = match table.get("name") {
            None => Some("experiment".to_string()),
            Some(Value::String(s)) => Some(s.clone()),
            Some(_) => {
                errors.push("name: expected a string".into());
                None
            }
        };
        let problem = if table.contains_key("problem") {
            section::<ProblemConfig>(table, "problem", &mut errors)
        } else {
            errors.push("problem: missing section".into());
            None
        };
        let engine = if table.contains_key("engine") {
            section::<EngineConfig>(table, "engine", &mut errors)
        } else {
            errors.push("engine: missing section".into());
            None
        };
        let delay = section::<DelayConfig>(table, "delay", &mut errors);
        let analysis = section::<AnalysisConfig>(table, "analysis", &mut errors);
        let output = section::<OutputConfig>(table, "output", &mut errors);
        let variants = match table.get("variant") {
            None => Some(Vec::new()),
            Some(v) => match v.clone().try_into::<Vec<Variant>>() {
                Ok(v) => Some(v),
                Err(e) => {
                    errors.push(format!("variant: {}", e.message().trim()));
                    None
                }
            },
        };
        let (Some(name), Some(problem), Some(engine), Some(delay), Some(analysis), Some(output), Some(variants)) =
            (name, problem, engine, delay, analysis, output, variants)
        else {
            return Err(ConfigErrors(errors));
        };
        let mut config = RunConfig {
            name,
            problem,
            engine,
            delay,
            analysis,
            output,
            variants,
        };
        config.problem.resolve(&mut errors);
        let mut labels = BTreeSet::new();
        for v in &config.variants {
            if !labels.insert(v.label.clone()) {
                errors.push(format!("variant {:?}: duplicate label", v.label));
            }
        }
        if errors.is_empty() {
            match config.expand() {
                Ok(runs) => {
                    for (label, run) in &runs {
                        let prefix = if config.variants.is_empty() {
                            String::new()
                        } else {
                            format!("variant {label:?}: ")
                        };
                        errors.extend(run.validate().into_iter().map(|e| format!("{prefix}{e}")));
                    }
                }
                Err(ConfigErrors(e)) => errors.extend(e),
            }
        }
        if errors.is_empty() {
            Ok(config)
        } else {
            Err(ConfigErrors(errors))
        }
    }

    /// The resolved document; parsing it yields `self` again.
    pub fn emit(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }

    /// Hex SHA-256 of the resolved document.
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.emit().as_bytes()))
    }

    /// One concrete configuration per variant (the base alone when none).
    pub fn expand(&self) -> Result<Vec<(String, RunConfig)>, ConfigErrors> {
        if self.variants.is_empty() {
            return Ok(vec![("main".into(), self.clone())]);
        }
        let mut base = self.clone();
        base.variants.clear();
        let base_table = Table::try_from(&base).expect("configuration serializes");
        let mut out = Vec::new();
        let mut errors = Vec::new();
        for v in &self.variants {
            let mut t = base_table.clone();
            // a variant that switches kind must not inherit the old kind's keys
            if let Some(Value::Table(p)) = v.overrides.get("problem") {
                if p.contains_key("kind") {
                    t.remove("problem");
                }
            }
            deep_merge(&mut t, &v.overrides);
            match RunConfig::deserialize_unchecked(&t) {
                Ok(mut c) => {
                    c.problem.resolve(&mut errors);
                    out.push((v.label.clone(), c));
                }
                Err(e) => errors.extend(e.into_iter().map(|e| format!("variant {:?}: {e}", v.label))),
            }
        }
        if errors.is_empty() {
            Ok(out)
        } else {
            Err(ConfigErrors(errors))
        }
    }

    fn deserialize_unchecked(t: &Table) -> Result<RunConfig, Vec<String>> {
        Value::Table(t.clone())
            .try_into::<RunConfig>()
            .map_err(|e| vec![e.message().trim().to_string()])
    }

    /// Replaces the seed list.
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.engine.seeds = vec![seed];
        for v in &mut self.variants {
            if let Some(Value::Table(e)) = v.overrides.get_mut("engine") {
                e.remove("seeds");
            }
        }
        self
    }

    /// Crosses every variant with `key = value` for each value. `key` is a
    /// dotted path such as `engine.epsilon`.
    pub fn vary(mut self, key: &str, values: &[Value]) -> Result<Self, ConfigErrors> {
        let path: Vec<&str> = key.split('.').collect();
        if path.len() != 2 || section_keys(path[0], None).is_none() {
            return Err(ConfigErrors(vec![format!(
                "--vary {key}: expected section.key with section one of problem, engine, delay, analysis, output"
            )]));
        }
        if values.is_empty() {
            return Err(ConfigErrors(vec![format!("--vary {key}: no values")]));
        }
        let bases = if self.variants.is_empty() {
            vec![Variant {
                label: String::new(),
                overrides: Table::new(),
            }]
        } else {
            std::mem::take(&mut self.variants)
        };
        for base in bases {
            for value in values {
                let mut overrides = base.overrides.clone();
                let mut leaf = Table::new();
                leaf.insert(path[1].to_string(), value.clone());
                let mut over = Table::new();
                over.insert(path[0].to_string(), Value::Table(leaf));
                deep_merge(&mut overrides, &over);
                let tag = format!("{key}={}", display_value(value));
                let label = if base.label.is_empty() {
                    tag
                } else {
                    format!("{},{tag}", base.label)
                };
                self.variants.push(Variant { label, overrides });
            }
        }
        let table = Table::try_from(&self).expect("configuration serializes");
        RunConfig::from_table(&table)
    }

    /// Number of nodes `K`.
    pub fn nodes(&self) -> usize {
        self.problem.nodes()
    }

    /// Semantic and cross-reference checks of a single concrete configuration.
    pub fn validate(&self) -> Vec<String> {
        let mut errors = Vec::new();
        if self.name.trim().is_empty() || self.name.contains(['/', '\\']) {
            errors.push("name: must be non-empty and contain no path separators".into());
        }
        errors.extend(self.problem.validate());
        let k = self.nodes();
        let e = &self.engine;
        if let Err(m) = e.schedule() {
            errors.push(m);
        }
        if e.step == StepKind::Constant && e.alpha.is_some() {
            errors.push("engine.alpha: only valid with step = \"power_decay\"".into());
        }
        if e.horizon == 0 {
            errors.push("engine.horizon: must be at least 1".into());
        }
        if e.seeds.is_empty() {
            errors.push("engine.seeds: at least one seed is required".into());
        }
        let mut seen = BTreeSet::new();
        if let Some(s) = e.seeds.iter().find(|s| !seen.insert(**s)) {
            errors.push(format!("engine.seeds: seed {s} is listed twice"));
        }
        errors.extend(self.validate_delay(k));
        let a = &self.analysis;
        if a.cadence == 0 {
            errors.push("analysis.cadence: must be at least 1".into());
        }
        if a.mc_samples < 2 {
            errors.push("analysis.mc_samples: must be at least 2".into());
        }
        if a.reference_horizon == 0 {
            errors.push("analysis.reference_horizon: must be at least 1".into());
        }
        match (a.reference, &self.problem) {
            (ReferenceMode::Analytic, p) if !matches!(p, ProblemConfig::Quadratic { .. }) => {
                errors.push("analysis.reference: analytic is only available for the quadratic problem".into())
            }
            (ReferenceMode::Grid, ProblemConfig::Num { .. }) if k > 3 => {
                errors.push(format!("analysis.reference: grid needs K <= 3, got K = {k}"))
            }
            (ReferenceMode::Grid, ProblemConfig::Beamforming { .. })
            | (ReferenceMode::LongRun, ProblemConfig::Beamforming { .. })
            | (ReferenceMode::Analytic, ProblemConfig::Beamforming { .. }) => {
                errors.push("analysis.reference: beamforming has no dual reference; use \"none\"".into())
            }
            _ => {}
        }
        if a.assert_dual_gap_max.is_some() && self.reference_mode() == ReferenceMode::None {
            errors.push("analysis.assert_dual_gap_max: needs a dual reference".into());
        }
        if let Some(v) = a.assert_dual_gap_max {
            if !(v >= 0.0) {
                errors.push("analysis.assert_dual_gap_max: must be non-negative".into());
            }
        }
        if let Some(v) = a.assert_flagged_max {
            if !(0.0..=1.0).contains(&v) {
                errors.push("analysis.assert_flagged_max: must be in [0, 1]".into());
            }
            if !matches!(self.problem, ProblemConfig::Beamforming { .. }) {
                errors.push("analysis.assert_flagged_max: only meaningful for beamforming".into());
            }
        }
        if self.output.dir.trim().is_empty() {
            errors.push("output.dir: must be non-empty".into());
        }
        if self.output.lambda_snapshots && !self.output.jsonl {
            errors.push("output.lambda_snapshots: requires output.jsonl = true".into());
        }
        errors
    }

    fn validate_delay(&self, k: usize) -> Vec<String> {
        let mut errors = Vec::new();
        let d = &self.delay;
        let engine = self.engine.kind;
        let unused = |name: &str, set: bool, errors: &mut Vec<String>| {
            if set {
                errors.push(format!("delay.{name}: not used by delay.kind = {:?}", kind_name(d.kind)));
            }
        };
        match d.kind {
            DelayKind::None => {
                unused("c", d.c.is_some(), &mut errors);
                unused("m", d.m.is_some(), &mut errors);
                unused("min_updates", d.min_updates.is_some(), &mut errors);
                unused("max_updates", d.max_updates.is_some(), &mut errors);
            }
            DelayKind::Constant => {
                if !engine.is_async() {
                    errors.push(format!(
                        "delay.kind = \"constant\" needs an asynchronous engine, not {}",
                        engine.name()
                    ));
                }
                match (d.c, d.tau_max) {
                    (None, _) => errors.push("delay.c: required for constant delays".into()),
                    (Some(c), Some(t)) if t < c => {
                        errors.push(format!("delay.tau_max = {t} is below the constant delay c = {c}"))
                    }
                    _ => {}
                }
                unused("m", d.m.is_some(), &mut errors);
                unused("min_updates", d.min_updates.is_some(), &mut errors);
                unused("max_updates", d.max_updates.is_some(), &mut errors);
            }
            DelayKind::SubsetFc => {
                if engine != EngineKind::AsyncFc {
                    errors.push(format!(
                        "delay.kind = \"subset_fc\" is a fusion-center schedule and cannot drive engine {}",
                        engine.name()
                    ));
                }
                match d.m {
                    None => errors.push("delay.m: required for subset_fc".into()),
                    Some(m) if m == 0 || m > k => errors.push(format!("delay.m = {m} must be in 1..={k}")),
                    _ => {}
                }
                if d.tau_max.is_none() {
                    errors.push("delay.tau_max: required for asynchronous schedules (bounded delay)".into());
                }
                unused("c", d.c.is_some(), &mut errors);
                unused("min_updates", d.min_updates.is_some(), &mut errors);
                unused("max_updates", d.max_updates.is_some(), &mut errors);
            }
            DelayKind::BudgetIncremental => {
                if engine != EngineKind::Aisdd {
                    errors.push(format!(
                        "delay.kind = \"budget_incremental\" is a token schedule and cannot drive engine {}",
                        engine.name()
                    ));
                }
                match (d.min_updates, d.max_updates) {
                    (Some(lo), Some(hi)) => {
                        if let Err(e) = UpdateBudget::new(lo, hi) {
                            errors.push(format!("delay: {e}"));
                        }
                    }
                    _ => errors.push("delay.min_updates and delay.max_updates: required for budget_incremental".into()),
                }
                if d.tau_max.is_none() {
                    errors.push("delay.tau_max: required for asynchronous schedules (bounded delay)".into());
                }
                unused("c", d.c.is_some(), &mut errors);
                unused("m", d.m.is_some(), &mut errors);
            }
        }
        if !engine.is_async() && d.tau_max.is_some_and(|t| t > 0) {
            errors.push(format!("delay.tau_max: synchronous engine {} has no staleness", engine.name()));
        }
        errors
    }

    /// The reference mode with `auto` resolved.
    pub fn reference_mode(&self) -> ReferenceMode {
        match self.analysis.reference {
            ReferenceMode::Auto => match &self.problem {
                ProblemConfig::Quadratic { .. } => ReferenceMode::Analytic,
                ProblemConfig::Num { .. } if self.nodes() <= 3 => ReferenceMode::Grid,
                ProblemConfig::Num { .. } => ReferenceMode::LongRun,
                ProblemConfig::Beamforming { .. } => ReferenceMode::None,
            },
            m => m,
        }
    }
}

fn kind_name(k: DelayKind) -> &'static str {
    match k {
        DelayKind::None => "none",
        DelayKind::Constant => "constant",
        DelayKind::SubsetFc => "subset_fc",
        DelayKind::BudgetIncremental => "budget_incremental",
    }
}

fn display_value(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

/// Reads a `--vary` value: TOML syntax when it parses, a bare string otherwise.
pub fn parse_value(raw: &str) -> Value {
    let raw = raw.trim();
    format!("v = {raw}")
        .parse::<Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| Value::String(raw.to_string()))
}

impl ProblemConfig {
    pub fn nodes(&self) -> usize {
        match self {
            ProblemConfig::Quadratic { a, .. } => a.len(),
            ProblemConfig::Num { w, k, .. } => w.as_ref().map_or(k.unwrap_or(0), Vec::len),
            ProblemConfig::Beamforming { bs, .. } => *bs,
        }
    }

    /// Fills derived fields such as the linear SINR target.
    fn resolve(&mut self, errors: &mut Vec<String>) {
        if let ProblemConfig::Beamforming {
            gamma_db, gamma_linear, ..
        } = self
        {
            let lin = db_to_linear(*gamma_db);
            if let Some(given) = *gamma_linear {
                if (given - lin).abs() > 1e-9 * lin.max(1.0) {
                    errors.push(format!(
                        "problem.gamma_linear = {given} disagrees with gamma_db = {gamma_db} ({lin} linear)"
                    ));
                }
            }
            *gamma_linear = Some(lin);
        }
    }

    pub fn quadratic_spec(&self) -> Option<Result<QuadraticSpec, String>> {
        match self {
            ProblemConfig::Quadratic { a, b, x_max, noise_amp } => {
                Some(QuadraticSpec::new(a.clone(), *b, *x_max, *noise_amp).map_err(|e| format!("problem: {e}")))
            }
            _ => None,
        }
    }

    pub fn num_spec(&self) -> Option<Result<NumSpec, String>> {
        match self {
            ProblemConfig::Num {
                w,
                k,
                r_min,
                r_max,
                p_max,
                p_total,
                channel_mean,
                h_max,
                ..
            } => {
                let w = match (w, k) {
                    (Some(_), Some(_)) => return Some(Err("problem: give either w or k, not both".into())),
                    (Some(w), None) => w.clone(),
                    (None, Some(k)) => vec![1.0; *k],
                    (None, None) => return Some(Err("problem: NUM needs k or w".into())),
                };
                let kk = w.len() as f64;
                let spec = NumSpec {
                    w,
                    r_min: *r_min,
                    r_max: *r_max,
                    p_max: *p_max,
                    p_total: p_total.unwrap_or(0.2 * kk),
                    channel: ChannelModel::Exponential {
                        mean: *channel_mean,
                        h_max: *h_max,
                    },
                };
                Some(spec.validate().map(|_| spec).map_err(|e| format!("problem: {e}")))
            }
            _ => None,
        }
    }

    pub fn network(&self) -> Option<CellNetwork> {
        match self {
            ProblemConfig::Beamforming {
                bs,
                antennas,
                users_per_cell,
                gamma_db,
                sigma2,
                rho,
                channel_variance,
                channel_truncation,
                ..
            } => {
                let mut net = CellNetwork::uniform(*bs, *antennas, *users_per_cell, db_to_linear(*gamma_db), *sigma2, *rho);
                net.channel.variance = *channel_variance;
                net.channel.truncation = *channel_truncation;
                Some(net)
            }
            _ => None,
        }
    }

    pub fn baseline(&self) -> Baseline {
        match self {
            ProblemConfig::Beamforming { baseline, .. } => *baseline,
            _ => Baseline::None,
        }
    }

    fn validate(&self) -> Vec<String> {
        let mut errors = Vec::new();
        if let Some(Err(e)) = self.quadratic_spec() {
            errors.push(e);
        }
        if let Some(spec) = self.num_spec() {
            match spec {
                Err(e) => errors.push(e),
                Ok(spec) => {
                    if matches!(self, ProblemConfig::Num { claims_slater: true, .. }) {
                        match slater_check(&spec, 20_000, 0) {
                            Ok(r) if r.margin() > 0.0 => {}
                            Ok(r) => errors.push(format!(
                                "problem.claims_slater: no strictly feasible point found (rate margin {:.4}, power margin {:.4})",
                                r.rate_margin, r.power_margin
                            )),
                            Err(e) => errors.push(format!("problem: {e}")),
                        }
                    }
                }
            }
        }
        if let Some(net) = self.network() {
            if let Err(e) = net.validate() {
                errors.push(format!("problem: {e}"));
            }
        }
        errors
    }
}
