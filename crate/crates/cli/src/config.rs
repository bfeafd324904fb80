use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use concept_core::backend::FixtureMode;
use concept_core::clustering::{DEFAULT_ALPHA, DEFAULT_CUT_THRESHOLD};
use concept_core::concepts::{ConceptConfig, DEFAULT_K};
use concept_core::embedding::ReductionConfig;
use concept_core::evaluation::DEFAULT_BUFFER_WIDTH;
use concept_core::isa_probe::{QueryMode, DEFAULT_PROBE_K, DEFAULT_SALIENCY_THRESHOLD};

/// Name of the environment variable holding the backend bearer token.
pub const TOKEN_ENV: &str = "CONCEPT_BEARER_TOKEN";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProbeSettings {
    pub k_max: usize,
    pub query_mode: QueryMode,
    pub saliency_threshold: f64,
    pub distractors_per_kind: usize,
}

impl Default for ProbeSettings {
    fn default() -> Self {
        Self {
            k_max: DEFAULT_PROBE_K,
            query_mode: QueryMode::Masked,
            saliency_threshold: DEFAULT_SALIENCY_THRESHOLD,
            distractors_per_kind: 20,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalSettings {
    /// Largest k of the score@k curve.
    pub k_max: usize,
    /// Clusters (and baseline tokens) per sentence used for coherence.
    pub top: usize,
    pub buffer_width: f64,
    pub heatmap_bins: usize,
    pub sweep_widths: Vec<f64>,
}

impl Default for EvalSettings {
    fn default() -> Self {
        Self {
            k_max: 10,
            top: 10,
            buffer_width: DEFAULT_BUFFER_WIDTH,
            heatmap_bins: 10,
            sweep_widths: vec![0.05, 0.10, 0.15, 0.20, 0.25, 0.30],
        }
    }
}

/// Everything that determines a run's outputs. Loaded from an optional TOML
/// file, then overridden by flags; the resolved form is written next to the
/// outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub backend: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fixtures: Option<PathBuf>,
    pub mode: FixtureMode,
    pub k: usize,
    pub alpha: f64,
    pub cut_threshold: f64,
    pub seed: u64,
    pub out: PathBuf,
    pub reduction: ReductionConfig,
    pub probe: ProbeSettings,
    pub eval: EvalSettings,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            backend: None,
            fixtures: None,
            mode: FixtureMode::Replay,
            k: DEFAULT_K,
            alpha: DEFAULT_ALPHA,
            cut_threshold: DEFAULT_CUT_THRESHOLD,
            seed: 0,
            out: PathBuf::from("out"),
            reduction: ReductionConfig::default(),
            probe: ProbeSettings::default(),
            eval: EvalSettings::default(),
        }
    }
}

/// Flag values that override the config file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub backend: Option<String>,
    pub fixtures: Option<PathBuf>,
    pub mode: Option<FixtureMode>,
    pub k: Option<usize>,
    pub alpha: Option<f64>,
    pub cut_threshold: Option<f64>,
    pub perplexity: Option<f64>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
    }

    pub fn apply(&mut self, o: Overrides) {
        if o.backend.is_some() {
            self.backend = o.backend;
        }
        if o.fixtures.is_some() {
            self.fixtures = o.fixtures;
        }
        if let Some(m) = o.mode {
            self.mode = m;
        }
        if let Some(k) = o.k {
            self.k = k;
        }
        if let Some(a) = o.alpha {
            self.alpha = a;
        }
        if let Some(t) = o.cut_threshold {
            self.cut_threshold = t;
        }
        if let Some(p) = o.perplexity {
            self.reduction.perplexity = p;
        }
        if let Some(s) = o.seed {
            self.seed = s;
        }
        if let Some(out) = o.out {
            self.out = out;
        }
        // one seed drives every random choice
        self.reduction.seed = self.seed;
    }

    pub fn concept_config(&self) -> ConceptConfig {
        ConceptConfig {
            k: self.k,
            alpha: self.alpha,
            cut_threshold: self.cut_threshold,
            reduction: self.reduction.clone(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.concept_config().validate()?;
        if self.probe.k_max == 0 {
            bail!("probe.k_max must be at least 1");
        }
        if !(0.0..=1.0).contains(&self.probe.saliency_threshold) {
            bail!(
                "probe.saliency_threshold {} outside [0, 1]",
                self.probe.saliency_threshold
            );
        }
        if self.eval.k_max == 0 || self.eval.top == 0 || self.eval.heatmap_bins == 0 {
            bail!("eval.k_max, eval.top and eval.heatmap_bins must be at least 1");
        }
        if !(self.eval.buffer_width > 0.0 && self.eval.buffer_width < 1.0) {
            bail!(
                "eval.buffer_width {} outside (0, 1)",
                self.eval.buffer_width
            );
        }
        if self.eval.sweep_widths.windows(2).any(|w| w[0] >= w[1]) {
            bail!("eval.sweep_widths must be strictly increasing");
        }
        Ok(())
    }

    pub fn to_toml(&self) -> Result<String> {
        Ok(toml::to_string(self)?)
    }
}
