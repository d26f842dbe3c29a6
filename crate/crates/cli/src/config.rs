//! Run configuration: one TOML file, validated in full before any work.

use std::path::{Path, PathBuf};

use darkwann_core::dataset::{MissingValuePolicy, SplitFractions, SynthSpec};
use darkwann_core::reservoir::{Activation, EncodeMode, ReadoutMode, ReservoirGenome};
use darkwann_core::search::SearchConfig;
use darkwann_core::seed::derive_seed;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

pub const DEFAULT_OUT_DIR: &str = "darkwann-out";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SchemaKind {
    /// The built-in 61-column flow schema with 11 traffic categories.
    #[default]
    CicDarknet,
    /// Every column except the label is a feature.
    Header,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthSection {
    pub n_per_class: usize,
    pub n_features: usize,
    pub n_informative: usize,
    pub class_count: usize,
    pub separation: f64,
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataSection {
    pub csv: Option<PathBuf>,
    pub synth: Option<SynthSection>,
    pub schema: SchemaKind,
    /// Label column for `schema = "header"`.
    pub label_column: String,
    /// Category names for `schema = "header"`; inferred from the label
    /// column (sorted) when empty.
    pub categories: Vec<String>,
    pub missing: MissingValuePolicy,
    pub split: SplitFractions,
    pub split_seed: Option<u64>,
}

impl Default for DataSection {
    fn default() -> Self {
        Self {
            csv: None,
            synth: None,
            schema: SchemaKind::default(),
            label_column: "label".into(),
            categories: Vec::new(),
            missing: MissingValuePolicy::default(),
            split: SplitFractions::default(),
            split_seed: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PpsSection {
    pub threshold: f64,
    pub folds: usize,
    pub max_depth: Option<usize>,
    pub seed: Option<u64>,
    /// Extra feature targets for the score matrix (the label is always a target).
    pub extra_targets: Vec<String>,
    /// `feature,score` CSV to select from instead of computing scores.
    pub replay_scores: Option<PathBuf>,
    /// Whether later stages restrict themselves to the selected features.
    pub use_selection: bool,
}

impl Default for PpsSection {
    fn default() -> Self {
        Self {
            threshold: 0.3,
            folds: 4,
            max_depth: None,
            seed: None,
            extra_targets: Vec::new(),
            replay_scores: None,
            use_selection: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReservoirSection {
    pub genome: String,
    pub genome_file: Option<PathBuf>,
    pub leak_rate: f64,
    pub density: f64,
    pub spectral_radius: f64,
    pub input_scale: f64,
    pub activation: Activation,
    pub ridge_c: f64,
    pub readout: ReadoutMode,
    /// Sequence encoding with this many steps; single-shot when absent.
    pub sequence_steps: Option<usize>,
    pub seed: Option<u64>,
}

impl Default for ReservoirSection {
    fn default() -> Self {
        Self {
            genome: "13-11-09".into(),
            genome_file: None,
            leak_rate: darkwann_core::reservoir::DEFAULT_LEAK_RATE,
            density: darkwann_core::reservoir::DEFAULT_DENSITY,
            spectral_radius: darkwann_core::reservoir::DEFAULT_SPECTRAL_RADIUS,
            input_scale: darkwann_core::reservoir::DEFAULT_INPUT_SCALE,
            activation: Activation::Tanh,
            ridge_c: 1.0,
            readout: ReadoutMode::Ridge,
            sequence_steps: None,
            seed: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ShapleySection {
    pub background_size: usize,
    /// Permutations per explained row.
    pub permutations: Option<usize>,
    /// Coalition evaluations per background sample; converted to
    /// `ceil(draws / features)` permutations. Ignored when `permutations` is set.
    pub draws: Option<usize>,
    /// Exact enumeration when at most 15 features are active.
    pub exact: bool,
    /// Explain the first `rows` records of the test split.
    pub rows: usize,
    /// Category to explain; the predicted category when absent.
    pub target: Option<usize>,
    pub seed: Option<u64>,
}

impl Default for ShapleySection {
    fn default() -> Self {
        Self { background_size: 100, permutations: None, draws: None, exact: false, rows: 10, target: None, seed: None }
    }
}

pub const DEFAULT_PERMUTATIONS: usize = 100;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub out_dir: PathBuf,
    pub data: DataSection,
    pub pps: PpsSection,
    pub reservoir: ReservoirSection,
    pub search: SearchConfig,
    /// Whether `[search] seed` was given explicitly.
    #[serde(skip)]
    pub search_seed_set: bool,
    pub shapley: ShapleySection,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            out_dir: PathBuf::from(DEFAULT_OUT_DIR),
            data: DataSection::default(),
            pps: PpsSection::default(),
            reservoir: ReservoirSection::default(),
            search: SearchConfig::default(),
            search_seed_set: false,
            shapley: ShapleySection::default(),
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let value: toml::Table = text.parse().map_err(|e: toml::de::Error| CliError::Usage(e.to_string()))?;
        let search_seed_set =
            value.get("search").and_then(|s| s.as_table()).is_some_and(|s| s.contains_key("seed"));
        let mut cfg: RunConfig = value.try_into().map_err(|e: toml::de::Error| CliError::Usage(e.to_string()))?;
        cfg.search_seed_set = search_seed_set;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_toml(&text).map_err(|e| e.context(path.display()))
    }

    /// Seed for a random process: the global seed combined with a fixed
    /// role tag, unless the section pins one explicitly.
    pub fn role_seed(&self, tag: &str, explicit: Option<u64>) -> u64 {
        explicit.unwrap_or_else(|| derive_seed(self.seed, tag, &[]))
    }

    pub fn split_seed(&self) -> u64 {
        self.role_seed("split", self.data.split_seed)
    }

    pub fn pps_seed(&self) -> u64 {
        self.role_seed("pps", self.pps.seed)
    }

    pub fn genome_seed(&self) -> u64 {
        self.role_seed("genome", self.reservoir.seed)
    }

    pub fn shapley_seed(&self) -> u64 {
        self.role_seed("shapley", self.shapley.seed)
    }

    pub fn synth_spec(&self) -> Option<SynthSpec> {
        self.data.synth.as_ref().map(|s| SynthSpec {
            n_per_class: s.n_per_class,
            n_features: s.n_features,
            n_informative: s.n_informative,
            class_count: s.class_count,
            separation: s.separation,
            seed: self.role_seed("synth", s.seed),
        })
    }

    pub fn search_config(&self) -> SearchConfig {
        let mut c = self.search.clone();
        if !self.search_seed_set {
            c.seed = derive_seed(self.seed, "search", &[]);
        }
        c
    }

    pub fn encode_mode(&self) -> EncodeMode {
        match self.reservoir.sequence_steps {
            Some(steps) => EncodeMode::Sequence { steps },
            None => EncodeMode::SingleShot,
        }
    }

    /// Genome from the configured notation and hyperparameters.
    pub fn genome_from_notation(&self) -> Result<ReservoirGenome> {
        let r = &self.reservoir;
        let sizes = ReservoirGenome::parse_sizes(&r.genome)?;
        let n = sizes.len();
        let mut g = ReservoirGenome::from_sizes(sizes, self.genome_seed());
        g.leak_rates = vec![r.leak_rate; n];
        g.activations = vec![r.activation; n];
        g.density = r.density;
        g.spectral_radius = r.spectral_radius;
        g.input_scale = r.input_scale;
        g.validate()?;
        Ok(g)
    }

    /// Checks everything that can be checked without touching data.
    pub fn validate(&self) -> Result<()> {
        let usage = |m: String| Err(CliError::Usage(m));
        self.data.split.validate()?;
        if let Some(spec) = self.synth_spec() {
            spec.validate()?;
        }
        if self.data.schema == SchemaKind::Header && self.data.label_column.trim().is_empty() {
            return usage("data.label_column must be set for schema = \"header\"".into());
        }
        if !(0.0..1.0).contains(&self.pps.threshold) {
            return usage(format!("pps.threshold {} must lie in [0, 1)", self.pps.threshold));
        }
        if self.pps.folds < 2 {
            return usage("pps.folds must be at least 2".into());
        }
        if self.pps.max_depth == Some(0) {
            return usage("pps.max_depth must be positive".into());
        }
        if self.reservoir.genome_file.is_none() {
            self.genome_from_notation()?;
        }
        if !(self.reservoir.ridge_c > 0.0 && self.reservoir.ridge_c.is_finite()) {
            return usage(format!("reservoir.ridge_c {} must be positive", self.reservoir.ridge_c));
        }
        if self.reservoir.readout == ReadoutMode::Random {
            return usage("reservoir.readout must be ridge or pseudoinverse".into());
        }
        if self.reservoir.sequence_steps == Some(0) {
            return usage("reservoir.sequence_steps must be positive".into());
        }
        self.search_config().validate()?;
        let s = &self.shapley;
        if s.background_size == 0 || s.rows == 0 {
            return usage("shapley.background_size and shapley.rows must be positive".into());
        }
        if s.permutations == Some(0) || s.draws == Some(0) {
            return usage("shapley.permutations and shapley.draws must be positive".into());
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        let c = RunConfig::from_toml("").unwrap();
        assert_eq!(c, RunConfig::default());
        c.validate().unwrap();
        assert_eq!(c.genome_from_notation().unwrap().layer_sizes, vec![13, 11, 9]);
    }

    #[test]
    fn sections_parse() {
        let c = RunConfig::from_toml(
            r#"
            seed = 7
            out_dir = "x"
            [data]
            schema = "header"
            label_column = "y"
            missing = "impute-median"
            split = { train = 0.6, val = 0.2, test = 0.2 }
            [data.synth]
            n_per_class = 10
            n_features = 4
            n_informative = 2
            class_count = 3
            separation = 5.0
            [pps]
            threshold = 0.2
            [reservoir]
            genome = "(11-17-09)"
            activation = "sine"
            readout = "pseudoinverse"
            [search]
            population_size = 8
            generations = 3
            eval_mode = "agnostic"
            [shapley]
            draws = 500
            "#,
        )
        .unwrap();
        c.validate().unwrap();
        assert_eq!(c.search.eval_mode, darkwann_core::search::EvalMode::Agnostic);
        assert!(!c.search_seed_set);
        assert_eq!(c.search_config().seed, derive_seed(7, "search", &[]));
        assert_eq!(c.synth_spec().unwrap().seed, derive_seed(7, "synth", &[]));
        assert_eq!(c.genome_from_notation().unwrap().activations, vec![Activation::Sine; 3]);
    }

    #[test]
    fn explicit_seeds_win() {
        let c = RunConfig::from_toml("seed = 1\n[search]\nseed = 99\n[pps]\nseed = 5").unwrap();
        assert_eq!(c.search_config().seed, 99);
        assert_eq!(c.pps_seed(), 5);
        assert_ne!(c.split_seed(), c.genome_seed());
    }

    #[test]
    fn invalid_values_are_usage_errors() {
        for text in [
            "bogus = 1",
            "[pps]\nthreshold = 1.5",
            "[reservoir]\ngenome = \"1-x\"",
            "[search]\nelitism_count = 40",
            "[data]\nsplit = { train = 0.5, val = 0.1, test = 0.1 }",
        ] {
            let r = RunConfig::from_toml(text).and_then(|c| c.validate());
            assert!(matches!(r, Err(CliError::Usage(_))), "{text}");
        }
    }
}
